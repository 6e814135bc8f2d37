//! Integrality tests for dual vectors against the subgroup generated by
//! the rows of an l2 matrix, membership diagnostics for the right ideal
//! of a group-ring matrix, and the witness-measure families with their
//! convergence claims.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::groupring::{right_apply, RingMatrix, VectorOverG};
use crate::groups::GroupSpec;
use crate::measures::{dirichlet_kernel, BaseMeasure};
use crate::spectral::{
    approximate_inverse, approximate_inverse_from, ApproxInverse, ApproxInverseConfig,
    DivergenceRow, SpectralDecomposition, WindowChoice,
};

#[derive(Clone, Copy, Debug)]
pub struct AnnihilatorOutcome {
    pub is_member: bool,
    pub max_frac_deviation: f64,
}

/// Decide whether an integral dual vector annihilates the closed subgroup
/// generated by the translates of the rows of xi: membership holds when
/// r(xi*) alpha is integral. xi is k x m, alpha has m components.
pub fn annihilator_test(
    xi: &RingMatrix,
    alpha: &VectorOverG,
    tol: f64,
) -> Result<AnnihilatorOutcome> {
    if alpha.max_dist_to_int() > 1e-9 {
        return Err(Error::SupportViolation("alpha must be integer-valued".into()));
    }
    let image = right_apply(&xi.star(), alpha)?;
    let max_frac_deviation = image.max_dist_to_int();
    Ok(AnnihilatorOutcome { is_member: max_frac_deviation <= tol, max_frac_deviation })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum IdealClass {
    /// The trajectory stabilizes on an integral vector: alpha lies in the
    /// integral right ideal of f.
    InIntegerIdeal,
    /// Stabilizes on a fractional vector: alpha is in the l2 ideal only.
    InL2IdealOnly,
    /// Norms blow up: alpha is outside the l2 ideal.
    OutsideL2Ideal,
    /// Neither stabilization nor divergence was observed; reported,
    /// never guessed.
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct IdealTestConfig {
    pub grid: usize,
    pub window: usize,
    /// Absolute blow-up threshold: norm > factor * |alpha| diverges.
    pub divergence_factor: f64,
    /// Sustained-growth divergence: every doubling grows the norm by at
    /// least this ratio and the whole trajectory by `growth_total`.
    pub growth_ratio: f64,
    pub growth_total: f64,
    /// Relative change regarded as stabilized, over the last two
    /// consecutive doublings.
    pub stabilization_rel: f64,
    pub integrality_tol: f64,
}

impl IdealTestConfig {
    pub fn new(rank: usize) -> Self {
        IdealTestConfig {
            grid: crate::spectral::default_grid(rank),
            window: 512,
            divergence_factor: 1e3,
            growth_ratio: 1.2,
            growth_total: 8.0,
            stabilization_rel: 0.01,
            integrality_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug)]
pub struct IdealMembership {
    pub classification: IdealClass,
    pub rows: Vec<DivergenceRow>,
    /// Fractional deviation of the limit vector, when one exists.
    pub limit_deviation: Option<f64>,
}

/// Holds the per-cutoff approximate inverses of one matrix so that many
/// dual vectors can be classified without rebuilding them.
pub struct IdealTester {
    k_list: Vec<f64>,
    config: IdealTestConfig,
    inverses: Vec<ApproxInverse>,
    dec: Option<SpectralDecomposition>,
}

impl IdealTester {
    pub fn new(f: &RingMatrix, k_list: &[f64], config: IdealTestConfig) -> Result<Self> {
        let cfg_for = |k: f64| ApproxInverseConfig {
            k,
            grid: config.grid,
            window: WindowChoice::Fixed(config.window),
            mass_limit: 1.0,
        };
        let (inverses, dec) = match f.spec() {
            GroupSpec::FreeAbelian(_) => {
                let dec = SpectralDecomposition::new(f, config.grid)?;
                let inverses: Vec<ApproxInverse> = k_list
                    .iter()
                    .map(|&k| approximate_inverse_from(&dec, f, &cfg_for(k)))
                    .collect::<Result<_>>()?;
                (inverses, Some(dec))
            }
            GroupSpec::Finite(_) => {
                let inverses: Vec<ApproxInverse> = k_list
                    .iter()
                    .map(|&k| approximate_inverse(f, &cfg_for(k)))
                    .collect::<Result<_>>()?;
                (inverses, None)
            }
        };
        Ok(IdealTester { k_list: k_list.to_vec(), config, inverses, dec })
    }

    pub fn k_list(&self) -> &[f64] {
        &self.k_list
    }

    pub fn inverses(&self) -> &[ApproxInverse] {
        &self.inverses
    }

    pub fn last_inverse(&self) -> &ApproxInverse {
        self.inverses.last().expect("tester holds at least one cutoff")
    }

    /// Trajectory of |r(xi_k) alpha| over the cutoff list.
    pub fn rows(&self, alpha: &VectorOverG) -> Result<Vec<DivergenceRow>> {
        self.k_list
            .iter()
            .zip(&self.inverses)
            .map(|(&k, inv)| {
                let norm_truncated = right_apply(&inv.xi, alpha)?.l2_norm();
                let norm_grid = match &self.dec {
                    Some(dec) => dec.grid_image_norm(&dec.cutoff_inverse(k), alpha)?,
                    None => norm_truncated,
                };
                Ok(DivergenceRow { k, norm_grid, norm_truncated })
            })
            .collect()
    }

    pub fn classify(&self, alpha: &VectorOverG) -> Result<IdealMembership> {
        if self.k_list.len() < 3 {
            return Err(Error::Usage("ideal test needs at least three cutoffs".into()));
        }
        let config = &self.config;
        let alpha_norm = alpha.l2_norm();
        if alpha_norm == 0.0 {
            return Ok(IdealMembership {
                classification: IdealClass::InIntegerIdeal,
                rows: Vec::new(),
                limit_deviation: Some(0.0),
            });
        }
        let rows = self.rows(alpha)?;
        let norms: Vec<f64> = rows.iter().map(|r| r.norm_grid).collect();
        let last = *norms.last().unwrap();

        let diverged_absolute = last > config.divergence_factor * alpha_norm;
        let tail = norms.len().saturating_sub(5);
        let sustained_growth = norms[tail..]
            .windows(2)
            .all(|w| w[1] >= w[0] * config.growth_ratio)
            && last >= norms[0] * config.growth_total;
        if diverged_absolute || sustained_growth {
            return Ok(IdealMembership {
                classification: IdealClass::OutsideL2Ideal,
                rows,
                limit_deviation: None,
            });
        }

        let n = norms.len();
        let rel = |a: f64, b: f64| {
            if b == 0.0 {
                0.0
            } else {
                (a / b - 1.0).abs()
            }
        };
        let stabilized = rel(norms[n - 1], norms[n - 2]) < config.stabilization_rel
            && rel(norms[n - 2], norms[n - 3]) < config.stabilization_rel;
        if stabilized {
            let beta = right_apply(&self.last_inverse().xi, alpha)?;
            let deviation = beta.max_dist_to_int();
            let classification = if deviation <= config.integrality_tol {
                IdealClass::InIntegerIdeal
            } else {
                IdealClass::InL2IdealOnly
            };
            return Ok(IdealMembership {
                classification,
                rows,
                limit_deviation: Some(deviation),
            });
        }
        Ok(IdealMembership {
            classification: IdealClass::Inconclusive,
            rows,
            limit_deviation: None,
        })
    }
}

/// Classify alpha against the right ideal of f from the trajectory of
/// |r(xi_k) alpha| over the cutoff list.
pub fn ideal_membership(
    f: &RingMatrix,
    alpha: &VectorOverG,
    k_list: &[f64],
    config: &IdealTestConfig,
) -> Result<IdealMembership> {
    IdealTester::new(f, k_list, config.clone())?.classify(alpha)
}

// ---------------------------------------------------------------------------
// Witness measures.
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug)]
pub struct WitnessValue {
    pub value: Complex64,
    pub tail_bound: f64,
    pub beta_norm_sq: f64,
    pub truncation_fraction: f64,
}

/// Transform of the witness measure at alpha for one (k, delta):
/// exp(-delta |r(xi_k) alpha|^2) times the product of eta_hat over the
/// coordinates of r(xi_k) alpha.
pub fn witness_fourier(
    f: &RingMatrix,
    eta: &BaseMeasure,
    delta: f64,
    k: f64,
    alpha: &VectorOverG,
    config: &IdealTestConfig,
    tol: f64,
) -> Result<WitnessValue> {
    if delta <= 0.0 {
        return Err(Error::Usage("witness needs delta > 0".into()));
    }
    let inv = approximate_inverse(
        f,
        &ApproxInverseConfig {
            k,
            grid: config.grid,
            window: WindowChoice::Fixed(config.window),
            mass_limit: 1.0,
        },
    )?;
    cell_value(&inv, eta, delta, alpha, tol)
}

fn cell_value(
    inv: &ApproxInverse,
    eta: &BaseMeasure,
    delta: f64,
    alpha: &VectorOverG,
    tol: f64,
) -> Result<WitnessValue> {
    let beta = right_apply(&inv.xi, alpha)?;
    let beta_norm_sq = beta.l2_norm_sq();
    let product = crate::theta::product_formula(&inv.xi, alpha, eta, tol)?;
    let gauss = (-delta * beta_norm_sq).exp();
    Ok(WitnessValue {
        value: product.value * gauss,
        tail_bound: product.tail_bound * gauss,
        beta_norm_sq,
        truncation_fraction: inv.truncation_fraction,
    })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct WitnessCell {
    pub k: f64,
    pub delta: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub modulus: f64,
    pub tail_bound: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub enum ClaimVerdict {
    /// In-ideal rows: values approach exp(-delta |beta|^2) with the
    /// integral preimage beta; `max_gap` is against that closed form at
    /// the largest cutoff.
    Claim1 { max_gap: f64, pass: bool },
    /// Off-ideal rows: values stay away from modulus 1; `margin` is
    /// 1 - max modulus at the largest cutoff.
    Claim2 { margin: f64, pass: bool },
    Inconclusive,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct WitnessRow {
    pub alpha: String,
    pub classification: IdealClass,
    pub cells: Vec<WitnessCell>,
    pub verdict: ClaimVerdict,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct WitnessReport {
    pub k_list: Vec<f64>,
    pub delta_list: Vec<f64>,
    pub rows: Vec<WitnessRow>,
}

/// Full witness table over (alpha, k, delta), with per-alpha convergence
/// verdicts. The double limit (k then delta) stays a table; it is never
/// collapsed to one number.
pub fn claims_report(
    f: &RingMatrix,
    eta: &BaseMeasure,
    alphas: &[(String, VectorOverG)],
    k_list: &[f64],
    delta_list: &[f64],
    config: &IdealTestConfig,
    tol: f64,
) -> Result<WitnessReport> {
    if delta_list.iter().any(|&d| d <= 0.0) {
        return Err(Error::Usage("witness needs delta > 0".into()));
    }
    let tester = IdealTester::new(f, k_list, config.clone())?;
    let inverses = tester.inverses();
    let mut rows = Vec::with_capacity(alphas.len());
    for (label, alpha) in alphas {
        let membership = tester.classify(alpha)?;
        let mut cells = Vec::with_capacity(k_list.len() * delta_list.len());
        let mut last_k_values: Vec<WitnessValue> = Vec::new();
        for inv in inverses {
            for &delta in delta_list {
                let out = cell_value(inv, eta, delta, alpha, tol)?;
                cells.push(WitnessCell {
                    k: inv.k,
                    delta,
                    value_re: out.value.re,
                    value_im: out.value.im,
                    modulus: out.value.norm(),
                    tail_bound: out.tail_bound,
                });
                if std::ptr::eq(inv, inverses.last().unwrap()) {
                    last_k_values.push(out);
                }
            }
        }
        let verdict = match membership.classification {
            IdealClass::InIntegerIdeal => {
                // Compare against exp(-delta |beta|^2) with the rounded
                // limit vector.
                let inv = inverses.last().unwrap();
                let beta = right_apply(&inv.xi, alpha)?.round_to_integral();
                let beta_sq = beta.l2_norm_sq();
                let mut max_gap = 0.0f64;
                for (out, &delta) in last_k_values.iter().zip(delta_list) {
                    let expected = (-delta * beta_sq).exp();
                    let gap = (out.value - Complex64::new(expected, 0.0)).norm()
                        - out.tail_bound;
                    max_gap = max_gap.max(gap);
                }
                ClaimVerdict::Claim1 { max_gap, pass: max_gap <= 1e-6 }
            }
            IdealClass::InL2IdealOnly | IdealClass::OutsideL2Ideal => {
                let max_mod = last_k_values
                    .iter()
                    .map(|o| o.value.norm())
                    .fold(0.0f64, f64::max);
                ClaimVerdict::Claim2 { margin: 1.0 - max_mod, pass: max_mod < 1.0 }
            }
            IdealClass::Inconclusive => ClaimVerdict::Inconclusive,
        };
        rows.push(WitnessRow {
            alpha: label.clone(),
            classification: membership.classification,
            cells,
            verdict,
        });
    }
    Ok(WitnessReport {
        k_list: k_list.to_vec(),
        delta_list: delta_list.to_vec(),
        rows,
    })
}

// ---------------------------------------------------------------------------
// Strong witness: uniform-measure columns.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct StrongWitnessCell {
    pub n: u32,
    /// Product of uniform-measure transforms over the coordinates of
    /// r(xi*) alpha.
    pub value: f64,
    /// Smallest single-coordinate factor; an upper bound for |value|
    /// and the exact Dirichlet-kernel decay rate for half-integer
    /// coordinates.
    pub min_factor: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct StrongWitnessRow {
    pub alpha: String,
    pub annihilator_member: bool,
    pub deviation: f64,
    pub cells: Vec<StrongWitnessCell>,
}

/// Transforms of the pushforwards under uniform base laws on {-n..n}:
/// annihilator members give the constant column 1; non-members decay to 0
/// at the rate of the smallest Dirichlet factor.
pub fn strong_witness_check(
    xi: &RingMatrix,
    n_list: &[u32],
    alphas: &[(String, VectorOverG)],
    tol: f64,
) -> Result<Vec<StrongWitnessRow>> {
    let mut rows = Vec::with_capacity(alphas.len());
    for (label, alpha) in alphas {
        let outcome = annihilator_test(xi, alpha, tol)?;
        let image = right_apply(&xi.star(), alpha)?;
        let mut cells = Vec::with_capacity(n_list.len());
        for &n in n_list {
            let mut value = 1.0f64;
            let mut min_factor = 1.0f64;
            for (_, coords) in image.entries() {
                for &c in coords {
                    let factor = dirichlet_kernel(n, c);
                    value *= factor;
                    min_factor = min_factor.min(factor.abs());
                }
            }
            cells.push(StrongWitnessCell { n, value, min_factor });
        }
        rows.push(StrongWitnessRow {
            alpha: label.clone(),
            annihilator_member: outcome.is_member,
            deviation: outcome.max_frac_deviation,
            cells,
        });
    }
    Ok(rows)
}
