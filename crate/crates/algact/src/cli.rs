//! Command-line front door: flag parsing, the ten subcommand drivers,
//! and deterministic report emission.

use std::collections::BTreeMap;

use serde_json::json;

use crate::annihilator::{
    annihilator_test, claims_report, strong_witness_check, ClaimVerdict, IdealClass,
    IdealTestConfig, IdealTester,
};
use crate::error::{Error, Result};
use crate::expr::{matrix_from_json, parse_ring_expr};
use crate::groupring::{RingMatrix, VectorOverG};
use crate::groups::{parse_group_id, subgroup_generate, GroupSpec, SubgroupSet};
use crate::haarlattice::{
    coset_support_check, convolve_fm, haar_of, join_by_iteration, largest_member_subgroup,
    star_fm, support_recovery, total_variation, FiniteMeasure, PredicateClass,
};
use crate::measures::{nonextendability_witness, parse_measure};
use crate::report::{csv_number, render_csv, CsvTable, ExitStatus, Report};
use crate::rng::Stream;
use crate::spectral::{approximate_inverse, ApproxInverseConfig, WindowChoice};
use crate::theta::{fourier_check, ThetaPlan};

pub const SUBCOMMANDS: &[&str] = &[
    "approx-inverse",
    "fourier-check",
    "witness",
    "strong-witness",
    "annihilator",
    "ideal-test",
    "haar-join",
    "support-recovery",
    "maxmin",
    "nonextend",
];

pub const USAGE: &str = "usage: algact <subcommand> [--flag value]...
subcommands:
  approx-inverse    --f <expr|@file> --group <id> --k <list> [--grid N] [--window W]
  fourier-check     --xi <expr|@file> --group <id> --nu <measure> --alpha <expr>
                    [--samples N] [--seed S] [--trunc-mass E]
  witness           --f <expr> --group <id> (--alpha <expr>)+ | --alphas @file
                    --k <list> --delta <list> [--eta <measure>]
  strong-witness    --xi <expr|@file> --group <id> --n <list> (--alpha <expr>)+
  annihilator       --xi <expr|@file> --group <id> --alpha <expr> [--tol T]
  ideal-test        --f <expr> --group <id> --alpha <expr> --k <list>
                    [--grid N] [--window W]
  haar-join         --group <id> --y1 <elems> --y2 <elems> [--tol T] [--maxiter N]
  support-recovery  --group <id> --mu <measure-literal> [--tol T] [--seed S]
  maxmin            --group <id> --predicate <spec> [--probes N] [--seed S]
  nonextend         --nu <measure> --p <real> --terms <N>
common flags: --out <path|-> (default -), --format json|csv, --seed <u64>
lists accept doubling ellipses: 2,4,...,256";

pub struct ParsedArgs {
    pub subcommand: String,
    flags: BTreeMap<String, Vec<String>>,
}

impl ParsedArgs {
    pub fn parse(args: &[String]) -> Result<Self> {
        let subcommand = args
            .first()
            .ok_or_else(|| Error::Usage(format!("missing subcommand\n{USAGE}")))?
            .clone();
        if !SUBCOMMANDS.contains(&subcommand.as_str()) {
            return Err(Error::Usage(format!(
                "unknown subcommand `{subcommand}`\n{USAGE}"
            )));
        }
        let mut flags: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let mut i = 1;
        while i < args.len() {
            let name = args[i]
                .strip_prefix("--")
                .ok_or_else(|| Error::Usage(format!("expected a --flag, got `{}`", args[i])))?;
            let value = args
                .get(i + 1)
                .ok_or_else(|| Error::Usage(format!("flag --{name} needs a value")))?;
            flags.entry(name.to_string()).or_default().push(value.clone());
            i += 2;
        }
        Ok(ParsedArgs { subcommand, flags })
    }

    fn get(&self, name: &str) -> Option<&str> {
        self.flags.get(name).and_then(|v| v.last()).map(|s| s.as_str())
    }

    fn get_all(&self, name: &str) -> Vec<String> {
        self.flags.get(name).cloned().unwrap_or_default()
    }

    fn require(&self, name: &str) -> Result<&str> {
        self.get(name)
            .ok_or_else(|| Error::Usage(format!("missing required flag --{name}")))
    }

    fn get_f64(&self, name: &str, default: f64) -> Result<f64> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Usage(format!("bad number for --{name}: `{s}`"))),
        }
    }

    fn get_usize(&self, name: &str, default: usize) -> Result<usize> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Usage(format!("bad integer for --{name}: `{s}`"))),
        }
    }

    fn get_u64(&self, name: &str, default: u64) -> Result<u64> {
        match self.get(name) {
            None => Ok(default),
            Some(s) => s
                .parse()
                .map_err(|_| Error::Usage(format!("bad integer for --{name}: `{s}`"))),
        }
    }

    fn config_echo(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        map.insert("subcommand".into(), json!(self.subcommand));
        for (k, vals) in &self.flags {
            if vals.len() == 1 {
                map.insert(k.clone(), json!(vals[0]));
            } else {
                map.insert(k.clone(), json!(vals));
            }
        }
        serde_json::Value::Object(map)
    }
}

/// Parse "2,4,...,256": the ellipsis continues the ratio of the two
/// preceding entries until the following bound is reached.
pub fn parse_number_list(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let mut out: Vec<f64> = Vec::new();
    let mut i = 0;
    while i < parts.len() {
        if parts[i] == "..." {
            let target: f64 = parts
                .get(i + 1)
                .ok_or_else(|| Error::Usage("ellipsis needs a bound after it".into()))?
                .parse()
                .map_err(|_| Error::Usage(format!("bad number `{}`", parts[i + 1])))?;
            if out.len() < 2 {
                return Err(Error::Usage(
                    "ellipsis needs two entries before it to fix the ratio".into(),
                ));
            }
            let ratio = out[out.len() - 1] / out[out.len() - 2];
            if !(ratio.is_finite() && ratio > 1.0) {
                return Err(Error::Usage("ellipsis ratio must exceed 1".into()));
            }
            let mut next = out[out.len() - 1] * ratio;
            while next < target * (1.0 - 1e-12) {
                out.push(next);
                next *= ratio;
            }
            out.push(target);
            i += 2;
        } else {
            out.push(
                parts[i]
                    .parse()
                    .map_err(|_| Error::Usage(format!("bad number `{}`", parts[i])))?,
            );
            i += 1;
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("empty number list".into()));
    }
    Ok(out)
}

fn read_arg_file(path: &str) -> Result<String> {
    Ok(std::fs::read_to_string(path)?)
}

/// A ring matrix from either an inline scalar expression or a @file JSON
/// matrix of expressions.
fn parse_matrix_arg(text: &str, spec: &GroupSpec) -> Result<RingMatrix> {
    if let Some(path) = text.strip_prefix('@') {
        matrix_from_json(&read_arg_file(path)?)
    } else {
        Ok(RingMatrix::scalar(parse_ring_expr(text, spec)?))
    }
}

/// A dual vector: semicolon-separated component expressions.
fn parse_vector_arg(text: &str, spec: &GroupSpec) -> Result<VectorOverG> {
    let comps: Vec<crate::groupring::RingElement> = text
        .split(';')
        .map(|part| parse_ring_expr(part.trim(), spec))
        .collect::<Result<_>>()?;
    VectorOverG::from_components(&comps)
}

fn alpha_list(args: &ParsedArgs, spec: &GroupSpec) -> Result<Vec<(String, VectorOverG)>> {
    let mut out = Vec::new();
    for text in args.get_all("alpha") {
        out.push((text.clone(), parse_vector_arg(&text, spec)?));
    }
    if let Some(path_arg) = args.get("alphas") {
        let path = path_arg.strip_prefix('@').unwrap_or(path_arg);
        for line in read_arg_file(path)?.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            out.push((line.to_string(), parse_vector_arg(line, spec)?));
        }
    }
    if out.is_empty() {
        return Err(Error::Usage("need at least one --alpha or --alphas @file".into()));
    }
    Ok(out)
}

fn element_list(text: &str, spec: &GroupSpec) -> Result<Vec<usize>> {
    let group = spec.finite_group()?;
    if let Some(path) = text.strip_prefix('@') {
        let parsed: Vec<serde_json::Value> = serde_json::from_str(&read_arg_file(path)?)?;
        return parsed
            .iter()
            .map(|v| match v {
                serde_json::Value::Number(n) => {
                    let i = n.as_u64().ok_or_else(|| {
                        Error::Usage("element indices must be nonnegative".into())
                    })? as usize;
                    if i < group.order {
                        Ok(i)
                    } else {
                        Err(Error::Usage(format!("element index {i} out of range")))
                    }
                }
                serde_json::Value::String(s) => group
                    .element_by_name(s)
                    .ok_or_else(|| Error::Usage(format!("unknown element `{s}`"))),
                other => Err(Error::Usage(format!("bad element entry {other}"))),
            })
            .collect();
    }
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|name| {
            group
                .element_by_name(name)
                .ok_or_else(|| Error::Usage(format!("unknown element `{name}`")))
        })
        .collect()
}

fn parse_finite_measure(text: &str, spec: &GroupSpec) -> Result<FiniteMeasure> {
    if let Some(path) = text.strip_prefix('@') {
        let probs: Vec<f64> = serde_json::from_str(&read_arg_file(path)?)?;
        return FiniteMeasure::new(spec, probs);
    }
    if let Some(rest) = text.strip_prefix("uniform:") {
        return FiniteMeasure::uniform_on(spec, &element_list(rest, spec)?);
    }
    if let Some(rest) = text.strip_prefix("point:") {
        let elems = element_list(rest, spec)?;
        if elems.len() != 1 {
            return Err(Error::Usage("point: takes exactly one element".into()));
        }
        return FiniteMeasure::point_mass(spec, elems[0]);
    }
    if let Some(rest) = text.strip_prefix("probs:") {
        let probs: Vec<f64> = rest
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Usage(format!("bad probability `{s}`")))
            })
            .collect::<Result<_>>()?;
        return FiniteMeasure::new(spec, probs);
    }
    Err(Error::Usage(format!(
        "bad measure literal `{text}` (use uniform:, point:, probs:, or @file)"
    )))
}

fn parse_predicate(text: &str, spec: &GroupSpec) -> Result<PredicateClass> {
    let mut parts = Vec::new();
    for token in text.split('&') {
        let token = token.trim();
        if let Some(rest) = token.strip_prefix("supportin:") {
            let elems = element_list(rest, spec)?;
            let group = spec.finite_group()?;
            let h = SubgroupSet::new(group, elems)?;
            parts.push(PredicateClass::support_in(spec, &h)?);
        } else if let Some(rest) = token.strip_prefix("invariant:") {
            let group = spec.finite_group()?;
            let perm = if rest == "shift" {
                group.shift_automorphism()?
            } else if let Some(path) = rest.strip_prefix('@') {
                serde_json::from_str(&read_arg_file(path)?)?
            } else {
                return Err(Error::Usage(format!(
                    "bad automorphism `{rest}` (use shift or @file)"
                )));
            };
            parts.push(PredicateClass::invariant_under(spec, vec![perm])?);
        } else {
            return Err(Error::Usage(format!("unknown predicate token `{token}`")));
        }
    }
    if parts.is_empty() {
        return Err(Error::Usage("empty predicate".into()));
    }
    Ok(if parts.len() == 1 {
        parts.pop().unwrap()
    } else {
        PredicateClass::intersection(parts)
    })
}

/// What a subcommand produces before it is wrapped in the envelope.
pub struct DriverOutput {
    pub status: ExitStatus,
    pub provenance: Vec<String>,
    pub payload: serde_json::Value,
    pub tables: Vec<CsvTable>,
}

pub fn dispatch(args: &ParsedArgs) -> Result<DriverOutput> {
    match args.subcommand.as_str() {
        "approx-inverse" => run_approx_inverse(args),
        "fourier-check" => run_fourier_check(args),
        "witness" => run_witness(args),
        "strong-witness" => run_strong_witness(args),
        "annihilator" => run_annihilator(args),
        "ideal-test" => run_ideal_test(args),
        "haar-join" => run_haar_join(args),
        "support-recovery" => run_support_recovery(args),
        "maxmin" => run_maxmin(args),
        "nonextend" => run_nonextend(args),
        _ => unreachable!("subcommand vetted in parse"),
    }
}

fn group_of(args: &ParsedArgs) -> Result<GroupSpec> {
    parse_group_id(args.require("group")?)
}

fn rank_of(spec: &GroupSpec) -> usize {
    match spec {
        GroupSpec::FreeAbelian(d) => *d,
        GroupSpec::Finite(_) => 1,
    }
}

fn run_approx_inverse(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let f = parse_matrix_arg(args.require("f")?, &spec)?;
    let ks = parse_number_list(args.require("k")?)?;
    let grid = args.get_usize("grid", crate::spectral::default_grid(rank_of(&spec)))?;
    let window = args.get_usize("window", 512)?;
    let mut rows = Vec::new();
    let mut table = Vec::new();
    let mut ok = true;
    for &k in &ks {
        let inv = approximate_inverse(
            &f,
            &ApproxInverseConfig { k, grid, window: WindowChoice::Fixed(window), mass_limit: 1.0 },
        )?;
        ok &= inv.op_norm_bound <= 1.0 + 1e-6;
        rows.push(json!({
            "k": k,
            "residual_left": inv.residual_left,
            "residual_right": inv.residual_right,
            "op_norm_bound": inv.op_norm_bound,
            "xi_truncation_mass": inv.truncation_fraction,
        }));
        table.push(vec![
            csv_number(k),
            csv_number(inv.residual_left),
            csv_number(inv.residual_right),
            csv_number(inv.op_norm_bound),
            csv_number(inv.truncation_fraction),
        ]);
    }
    Ok(DriverOutput {
        status: if ok { ExitStatus::Pass } else { ExitStatus::CheckFailed },
        provenance: vec![
            "residuals and operator bound: spectral cutoff evaluated per grid point".into(),
            "truncation mass: Parseval total minus windowed coefficients".into(),
        ],
        payload: json!({"rows": rows, "grid": grid, "window": window}),
        tables: vec![CsvTable {
            name: "approx_inverse".into(),
            header: ["k", "residual_left", "residual_right", "op_norm_bound", "xi_truncation_mass"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: table,
        }],
    })
}

fn run_fourier_check(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let xi = parse_matrix_arg(args.require("xi")?, &spec)?;
    let nu = parse_measure(args.require("nu")?)?;
    let alpha = parse_vector_arg(args.require("alpha")?, &spec)?;
    let samples = args.get_usize("samples", 100_000)?;
    let seed = args.get_u64("seed", 7)?;
    let trunc_mass = args.get_f64("trunc-mass", 0.0)?;
    let window: Vec<_> = alpha.support().cloned().collect();
    let window = if window.is_empty() { vec![spec.identity()] } else { window };
    let plan = ThetaPlan::new(xi, nu, window, trunc_mass)?;
    let check = fourier_check(&plan, &alpha, samples, &Stream::from_seed(seed))?;
    Ok(DriverOutput {
        status: if check.pass { ExitStatus::Pass } else { ExitStatus::CheckFailed },
        provenance: vec![
            "analytic: product of exact base transforms over the coordinates of r(xi) alpha"
                .into(),
            format!("empirical: Monte Carlo characteristic function, N={samples}, seed={seed}"),
        ],
        payload: json!({
            "empirical": [check.empirical.re, check.empirical.im],
            "stderr": check.stderr,
            "analytic": [check.analytic.re, check.analytic.im],
            "tail_bound": check.tail_bound,
            "pass": check.pass,
        }),
        tables: Vec::new(),
    })
}

fn run_witness(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let f = parse_matrix_arg(args.require("f")?, &spec)?;
    let alphas = alpha_list(args, &spec)?;
    let ks = parse_number_list(args.require("k")?)?;
    let deltas = parse_number_list(args.require("delta")?)?;
    let eta = parse_measure(args.get("eta").unwrap_or("geom2^1"))?;
    let config = IdealTestConfig {
        grid: args.get_usize("grid", crate::spectral::default_grid(rank_of(&spec)))?,
        window: args.get_usize("window", 512)?,
        ..IdealTestConfig::new(rank_of(&spec))
    };
    let report = claims_report(&f, &eta, &alphas, &ks, &deltas, &config, 1e-10)?;
    let mut status = ExitStatus::Pass;
    let mut rows_json = Vec::new();
    let mut table = Vec::new();
    for row in &report.rows {
        let (claim, pass, margin_or_gap) = match &row.verdict {
            ClaimVerdict::Claim1 { max_gap, pass } => ("claim1", *pass, *max_gap),
            ClaimVerdict::Claim2 { margin, pass } => ("claim2", *pass, *margin),
            ClaimVerdict::Inconclusive => ("inconclusive", false, f64::NAN),
        };
        if matches!(row.verdict, ClaimVerdict::Inconclusive) {
            status = ExitStatus::Inconclusive;
        } else if !pass && status == ExitStatus::Pass {
            status = ExitStatus::CheckFailed;
        }
        for cell in &row.cells {
            table.push(vec![
                row.alpha.clone(),
                csv_number(cell.k),
                csv_number(cell.delta),
                csv_number(cell.value_re),
                csv_number(cell.value_im),
                csv_number(cell.modulus),
                csv_number(cell.tail_bound),
            ]);
        }
        rows_json.push(json!({
            "alpha": row.alpha,
            "classification": row.classification,
            "claim": claim,
            "pass": pass,
            "margin_or_gap": margin_or_gap,
            "cells": row.cells,
        }));
    }
    Ok(DriverOutput {
        status,
        provenance: vec![
            "cell values: exp(-delta |r(xi_k) alpha|^2) times the exact transform product"
                .into(),
            "classification: trajectory of |r(xi_k) alpha| over the cutoff list".into(),
        ],
        payload: json!({
            "k_list": report.k_list,
            "delta_list": report.delta_list,
            "rows": rows_json,
        }),
        tables: vec![CsvTable {
            name: "witness_cells".into(),
            header: ["alpha", "k", "delta", "value_re", "value_im", "modulus", "tail_bound"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: table,
        }],
    })
}

fn run_strong_witness(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let xi = parse_matrix_arg(args.require("xi")?, &spec)?;
    let ns: Vec<u32> = parse_number_list(args.require("n")?)?
        .iter()
        .map(|&x| x as u32)
        .collect();
    let alphas = alpha_list(args, &spec)?;
    let tol = args.get_f64("tol", 1e-6)?;
    let rows = strong_witness_check(&xi, &ns, &alphas, tol)?;
    let mut ok = true;
    let mut table = Vec::new();
    for row in &rows {
        for cell in &row.cells {
            if row.annihilator_member {
                ok &= (cell.value - 1.0).abs() <= 1e-6 + 8.0 * row.deviation;
            }
            table.push(vec![
                row.alpha.clone(),
                cell.n.to_string(),
                csv_number(cell.value),
                csv_number(cell.min_factor),
            ]);
        }
        if !row.annihilator_member {
            if let Some(last) = row.cells.iter().rfind(|c| c.n > 0) {
                ok &= last.min_factor < 0.5;
            }
        }
    }
    Ok(DriverOutput {
        status: if ok { ExitStatus::Pass } else { ExitStatus::CheckFailed },
        provenance: vec![
            "columns: products of uniform-measure transforms over r(xi*) alpha".into(),
            "membership: integrality of r(xi*) alpha".into(),
        ],
        payload: json!({"n_list": ns, "rows": rows}),
        tables: vec![CsvTable {
            name: "strong_witness".into(),
            header: ["alpha", "n", "value", "min_factor"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: table,
        }],
    })
}

fn run_annihilator(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let xi = parse_matrix_arg(args.require("xi")?, &spec)?;
    let alpha = parse_vector_arg(args.require("alpha")?, &spec)?;
    let tol = args.get_f64("tol", 1e-6)?;
    let out = annihilator_test(&xi, &alpha, tol)?;
    Ok(DriverOutput {
        status: ExitStatus::Pass,
        provenance: vec![
            "membership: max distance of r(xi*) alpha coordinates to the integers".into(),
        ],
        payload: json!({
            "is_member": out.is_member,
            "max_frac_deviation": out.max_frac_deviation,
            "tol": tol,
        }),
        tables: Vec::new(),
    })
}

fn run_ideal_test(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let f = parse_matrix_arg(args.require("f")?, &spec)?;
    let alpha = parse_vector_arg(args.require("alpha")?, &spec)?;
    let ks = parse_number_list(args.require("k")?)?;
    let config = IdealTestConfig {
        grid: args.get_usize("grid", crate::spectral::default_grid(rank_of(&spec)))?,
        window: args.get_usize("window", 512)?,
        ..IdealTestConfig::new(rank_of(&spec))
    };
    let tester = IdealTester::new(&f, &ks, config)?;
    let membership = tester.classify(&alpha)?;
    let status = match membership.classification {
        IdealClass::Inconclusive => ExitStatus::Inconclusive,
        _ => ExitStatus::Pass,
    };
    let table = membership
        .rows
        .iter()
        .map(|r| vec![csv_number(r.k), csv_number(r.norm_grid), csv_number(r.norm_truncated)])
        .collect();
    Ok(DriverOutput {
        status,
        provenance: vec![
            "norms: Parseval on the symbol grid and exact convolution with the truncation"
                .into(),
        ],
        payload: json!({
            "classification": membership.classification,
            "limit_deviation": membership.limit_deviation,
            "rows": membership.rows,
        }),
        tables: vec![CsvTable {
            name: "ideal_test".into(),
            header: ["k", "norm_grid", "norm_truncated"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: table,
        }],
    })
}

fn run_haar_join(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let tol = args.get_f64("tol", 1e-12)?;
    let maxiter = args.get_usize("maxiter", 500)?;
    let check_tol = args.get_f64("check-tol", 1e-9)?;
    let y1 = subgroup_generate(&spec, &element_list(args.require("y1")?, &spec)?)?;
    let y2 = subgroup_generate(&spec, &element_list(args.require("y2")?, &spec)?)?;
    let out = join_by_iteration(&spec, &y1, &y2, tol, maxiter)?;
    let mut gens = y1.elements().to_vec();
    gens.extend_from_slice(y2.elements());
    let join = subgroup_generate(&spec, &gens)?;
    let oracle = haar_of(&spec, &join)?;
    let tv = total_variation(&out.measure, &oracle);
    let group = spec.finite_group()?;
    let names = |s: &SubgroupSet| -> Vec<String> {
        s.elements().iter().map(|&i| group.names[i].clone()).collect()
    };
    Ok(DriverOutput {
        status: if tv < check_tol { ExitStatus::Pass } else { ExitStatus::CheckFailed },
        provenance: vec![
            "iteration: convolution powers of haar(Y1) * haar(Y2) * haar(Y1)".into(),
            "oracle: uniform measure on the brute-force closure of Y1 union Y2".into(),
        ],
        payload: json!({
            "iterations": out.iterations,
            "tv_to_oracle": tv,
            "join": names(&join),
            "measure": out.measure.probs(),
        }),
        tables: Vec::new(),
    })
}

fn run_support_recovery(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let mu = parse_finite_measure(args.require("mu")?, &spec)?;
    let tol = args.get_f64("tol", 1e-12)?;
    let maxiter = args.get_usize("maxiter", 200)?;
    let check_tol = args.get_f64("check-tol", 1e-9)?;
    let rec = support_recovery(&spec, &mu, tol, maxiter)?;
    let sym = convolve_fm(&star_fm(&mu), &mu)?;
    let oracle_subgroup = subgroup_generate(&spec, &sym.support())?;
    let oracle = haar_of(&spec, &oracle_subgroup)?;
    let tv = total_variation(&rec.measure, &oracle);
    let matches = rec.subgroup == oracle_subgroup;
    let group = spec.finite_group()?;
    let names: Vec<String> =
        rec.subgroup.elements().iter().map(|&i| group.names[i].clone()).collect();
    Ok(DriverOutput {
        status: if matches && tv < check_tol {
            ExitStatus::Pass
        } else {
            ExitStatus::CheckFailed
        },
        provenance: vec![
            "iteration: doubling convolution powers of mu* * mu".into(),
            "oracle: uniform measure on the closure of supp(mu* * mu)".into(),
        ],
        payload: json!({
            "subgroup": names,
            "doublings": rec.doublings,
            "tv_to_oracle": tv,
            "matches_oracle": matches,
            "measure": rec.measure.probs(),
        }),
        tables: Vec::new(),
    })
}

fn run_maxmin(args: &ParsedArgs) -> Result<DriverOutput> {
    let spec = group_of(args)?;
    let class = parse_predicate(args.require("predicate")?, &spec)?;
    let probes = args.get_usize("probes", 100)?;
    let seed = args.get_u64("seed", 7)?;
    let out = largest_member_subgroup(&spec, &class)?;
    let group = spec.finite_group()?;
    let names = |s: &SubgroupSet| -> Vec<String> {
        s.elements().iter().map(|&i| group.names[i].clone()).collect()
    };

    // Probe battery: subgroup Haar measures, point masses, mixtures, and
    // seeded random measures, filtered through the class oracle.
    let mut candidates: Vec<FiniteMeasure> = Vec::new();
    for y in &out.certificate {
        candidates.push(haar_of(&spec, y)?);
    }
    for i in 0..group.order {
        candidates.push(FiniteMeasure::point_mass(&spec, i)?);
    }
    let mut stream = Stream::from_seed(seed);
    for _ in 0..probes {
        let mut raw: Vec<f64> = (0..group.order)
            .map(|_| if stream.next_f64() < 0.5 { 0.0 } else { stream.next_f64() })
            .collect();
        if raw.iter().all(|&p| p == 0.0) {
            raw[0] = 1.0;
        }
        let total: f64 = raw.iter().sum();
        raw.iter_mut().for_each(|p| *p /= total);
        candidates.push(FiniteMeasure::new(&spec, raw)?);
    }
    let members: Vec<FiniteMeasure> =
        candidates.into_iter().filter(|m| class.contains(m)).collect();
    class.probe_closure(&members, 100, &mut stream)?;

    let mut probe_rows = Vec::new();
    let mut ok = true;
    for nu in &members {
        let coset = coset_support_check(&spec, nu, &out.subgroup)?;
        ok &= coset.max_leak == 0.0;
        probe_rows.push(json!({
            "support": nu.support(),
            "coset_rep": group.names[coset.coset_rep],
            "leak": coset.max_leak,
        }));
    }
    Ok(DriverOutput {
        status: if ok { ExitStatus::Pass } else { ExitStatus::CheckFailed },
        provenance: vec![
            "largest member: subgroup lattice filtered through the class oracle, then joined"
                .into(),
            "probes: class members must sit inside a single coset of the maximum".into(),
        ],
        payload: json!({
            "subgroup": names(&out.subgroup),
            "certificate": out.certificate.iter().map(names).collect::<Vec<_>>(),
            "member_probes": probe_rows,
            "closure_audit": "ok",
        }),
        tables: Vec::new(),
    })
}

fn run_nonextend(args: &ParsedArgs) -> Result<DriverOutput> {
    let nu = parse_measure(args.require("nu")?)?;
    let p = args.get_f64("p", 3.0)?;
    let terms = args.get_usize("terms", 10)? as u32;
    let report = nonextendability_witness(&nu, p, terms)?;
    let last = report.rows.last();
    let ok = last
        .is_some_and(|r| r.divergent_partial > 0.9 * terms as f64 && r.lp_partial <= 2.0);
    let table = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                csv_number(r.t_n),
                csv_number(r.block_size),
                csv_number(r.one_minus_fourier),
                csv_number(r.divergent_partial),
                csv_number(r.lp_partial),
            ]
        })
        .collect();
    Ok(DriverOutput {
        status: if ok { ExitStatus::Pass } else { ExitStatus::CheckFailed },
        provenance: vec![
            "rows: frequencies with transform deficit at least 2^n |t|^p and block sizes \
             ceil(2^-n / |t|^p)"
                .into(),
        ],
        payload: json!({
            "coordinate": report.coordinate,
            "p": report.p,
            "rows": report.rows,
        }),
        tables: vec![CsvTable {
            name: "nonextend".into(),
            header: ["n", "t_n", "block_size", "one_minus_fourier", "divergent_partial", "lp_partial"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            rows: table,
        }],
    })
}

/// Run one invocation: parse flags, dispatch, and write the report to
/// --out (default stdout). Returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let parsed = match ParsedArgs::parse(args) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return ExitStatus::Usage.code();
        }
    };
    let seed = parsed.get_u64("seed", 7).unwrap_or(7);
    match dispatch(&parsed) {
        Ok(out) => {
            let report = Report::new(
                &parsed.subcommand,
                seed,
                parsed.config_echo(),
                out.provenance,
                out.status,
                out.payload,
            );
            let format = parsed.get("format").unwrap_or("json");
            let body = match format {
                "csv" if !out.tables.is_empty() => render_csv(&out.tables),
                "csv" => {
                    eprintln!("no tabular projection for this subcommand; emitting json");
                    match report.to_json() {
                        Ok(j) => j,
                        Err(e) => {
                            eprintln!("{e}");
                            return ExitStatus::Usage.code();
                        }
                    }
                }
                _ => match report.to_json() {
                    Ok(j) => j,
                    Err(e) => {
                        eprintln!("{e}");
                        return ExitStatus::Usage.code();
                    }
                },
            };
            let dest = parsed.get("out").unwrap_or("-");
            let body = if body.ends_with('\n') { body } else { body + "\n" };
            if dest == "-" {
                print!("{body}");
            } else if let Err(e) = std::fs::write(dest, body) {
                eprintln!("cannot write {dest}: {e}");
                return ExitStatus::Usage.code();
            }
            out.status.code()
        }
        Err(e) => {
            let status = match &e {
                Error::Usage(_) | Error::Parse { .. } | Error::UnknownGenerator { .. } => {
                    ExitStatus::Usage
                }
                _ => ExitStatus::CheckFailed,
            };
            eprintln!("{e}");
            // Structured error report for scripted callers.
            let report = Report::new(
                &parsed.subcommand,
                seed,
                parsed.config_echo(),
                Vec::new(),
                status,
                json!({"error": e.to_string()}),
            );
            if let Some(dest) = parsed.get("out") {
                if dest != "-" {
                    let _ = report
                        .to_json()
                        .map(|body| std::fs::write(dest, body + "\n"));
                }
            }
            status.code()
        }
    }
}
