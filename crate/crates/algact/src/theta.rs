//! The measurable convolution extension: truncated evaluation of the map
//! x -> q(r(xi*) x), Monte Carlo sampling of its pushforward on a finite
//! window, empirical Fourier coefficients, and the certified analytic
//! product formula they must match.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groupring::{right_apply, RingMatrix, VectorOverG};
use crate::groups::{GroupElement, GroupSpec};
use crate::measures::BaseMeasure;
use crate::rng::Stream;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Everything needed to evaluate the extension on a finite window:
/// xi (rows = output components m, cols = input components k), the base
/// law on R^k, the window of output coordinates, and the derived input
/// support.
pub struct ThetaPlan {
    xi: RingMatrix,
    xi_star: RingMatrix,
    nu: BaseMeasure,
    window: Vec<GroupElement>,
    input_support: Vec<GroupElement>,
    /// Discarded l2 mass when xi is a truncation of an l2 object.
    trunc_mass: f64,
    /// Per (window point, output comp): terms (input index, input comp,
    /// coefficient), in a fixed deterministic order.
    compiled: Vec<Vec<Vec<(usize, usize, f64)>>>,
}

impl ThetaPlan {
    pub fn new(
        xi: RingMatrix,
        nu: BaseMeasure,
        window: Vec<GroupElement>,
        trunc_mass: f64,
    ) -> Result<Self> {
        if nu.dim() != xi.cols {
            return Err(Error::DimensionMismatch(format!(
                "measure dimension {} vs xi input components {}",
                nu.dim(),
                xi.cols
            )));
        }
        let spec = xi.spec().clone();
        if window.iter().any(|w| !spec.contains(w)) {
            return Err(Error::BackendMismatch("window outside group".into()));
        }
        let xi_star = xi.star();
        // Input support: all h with xi*(h^{-1} w) nonzero for some w.
        let mut support: std::collections::BTreeSet<GroupElement> = Default::default();
        for w in &window {
            for s in xi_star.support_union() {
                let s_inv = spec.invert(&s)?;
                support.insert(spec.multiply(w, &s_inv)?);
            }
        }
        let input_support: Vec<GroupElement> = support.into_iter().collect();
        let index_of = |g: &GroupElement| input_support.binary_search(g).ok();
        // (r(xi*) x)(w)(j) = sum_l sum_s x(w s^{-1})(l) xi*_{lj}(s).
        let mut compiled = Vec::with_capacity(window.len());
        for w in &window {
            let mut per_comp = Vec::with_capacity(xi.rows);
            for j in 0..xi.rows {
                let mut terms = Vec::new();
                for l in 0..xi.cols {
                    for (s, c) in xi_star.entry(l, j).terms() {
                        let s_inv = spec.invert(s)?;
                        let h = spec.multiply(w, &s_inv)?;
                        if let Some(idx) = index_of(&h) {
                            terms.push((idx, l, c));
                        }
                    }
                }
                per_comp.push(terms);
            }
            compiled.push(per_comp);
        }
        Ok(ThetaPlan { xi, xi_star, nu, window, input_support, trunc_mass, compiled })
    }

    pub fn xi(&self) -> &RingMatrix {
        &self.xi
    }

    pub fn nu(&self) -> &BaseMeasure {
        &self.nu
    }

    pub fn window(&self) -> &[GroupElement] {
        &self.window
    }

    pub fn input_support(&self) -> &[GroupElement] {
        &self.input_support
    }

    pub fn trunc_mass(&self) -> f64 {
        self.trunc_mass
    }

    pub fn output_components(&self) -> usize {
        self.xi.rows
    }

    /// The value before reduction mod 1 at the identity coordinate:
    /// psi(x) = (r(xi*) x)(1).
    pub fn psi_eval(&self, x: &VectorOverG) -> Result<Vec<f64>> {
        for g in x.support() {
            if self.input_support.binary_search(g).is_err() {
                return Err(Error::SupportViolation(format!(
                    "input touches {:?} outside the plan's input support",
                    g
                )));
            }
        }
        let spec = self.xi.spec().clone();
        let e = spec.identity();
        Ok(self.psi_at(x, &e))
    }

    /// (r(xi*) x)(g), an exact finite sum for any finitely supported x.
    /// Iterates the entries of x in their canonical order, so evaluations
    /// related by a translation run the identical float operations.
    pub fn psi_at(&self, x: &VectorOverG, g: &GroupElement) -> Vec<f64> {
        let spec = self.xi.spec();
        let m = self.xi.rows;
        let k = self.xi.cols;
        let mut out = vec![0.0; m];
        for (h, vals) in x.entries() {
            let offset = spec.inv_mul(h, g).expect("support vetted");
            for (j, slot) in out.iter_mut().enumerate().take(m) {
                let mut acc = 0.0;
                for (l, &v) in vals.iter().enumerate().take(k) {
                    acc += v * self.xi_star.entry(l, j).coeff(&offset);
                }
                *slot += acc;
            }
        }
        out
    }

    /// Window values of the extension applied to an explicit input:
    /// theta(x)(w) = psi(w^{-1} x) mod 1, returned in window order.
    pub fn theta_of(&self, x: &VectorOverG) -> Vec<Vec<f64>> {
        self.window
            .iter()
            .map(|w| self.psi_at(x, w).into_iter().map(frac_mod_1).collect())
            .collect()
    }

    /// Draw the window coordinates of the pushforward, one substream per
    /// sample index.
    pub fn sample(&self, n_samples: usize, stream: &Stream) -> SampleBatch {
        let values: Vec<Vec<Vec<f64>>> = (0..n_samples)
            .into_par_iter()
            .map(|i| {
                let mut sub = stream.substream(i as u64);
                let draws: Vec<Vec<f64>> = self
                    .input_support
                    .iter()
                    .map(|_| self.nu.sample(&mut sub))
                    .collect();
                self.compiled
                    .iter()
                    .map(|per_comp| {
                        per_comp
                            .iter()
                            .map(|terms| {
                                let mut acc = 0.0;
                                for &(idx, l, c) in terms {
                                    acc += draws[idx][l] * c;
                                }
                                frac_mod_1(acc)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        SampleBatch {
            window: self.window.clone(),
            output_components: self.xi.rows,
            values,
        }
    }

    /// Bound on how far the pairing <theta(x), alpha> can move when the
    /// truncated tail of xi is restored, in L1 over the input law.
    pub fn pairing_budget(&self, alpha: &VectorOverG) -> f64 {
        let alpha_l1: f64 = alpha
            .entries()
            .flat_map(|(_, vals)| vals.iter().map(|v| v.abs()))
            .sum();
        TWO_PI * self.nu.second_moment().sqrt() * self.trunc_mass * alpha_l1
    }
}

#[inline]
fn frac_mod_1(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Window samples of the pushforward; values live in [0, 1).
pub struct SampleBatch {
    pub window: Vec<GroupElement>,
    pub output_components: usize,
    /// sample -> window index -> output components.
    pub values: Vec<Vec<Vec<f64>>>,
}

#[derive(Clone, Copy, Debug)]
pub struct EmpiricalFourier {
    pub estimate: Complex64,
    pub stderr: f64,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Pairing of one sample against an integral dual vector.
    fn pairing(&self, sample: usize, coeffs: &[(usize, usize, f64)]) -> f64 {
        let mut acc = 0.0;
        for &(w, l, a) in coeffs {
            acc += a * self.values[sample][w][l];
        }
        acc
    }

    fn align(&self, alpha: &VectorOverG) -> Result<Vec<(usize, usize, f64)>> {
        if alpha.components() != self.output_components {
            return Err(Error::DimensionMismatch(
                "alpha components vs batch output components".into(),
            ));
        }
        if alpha.max_dist_to_int() > 1e-9 {
            return Err(Error::SupportViolation(
                "alpha must be integer-valued".into(),
            ));
        }
        let mut coeffs = Vec::new();
        for (g, vals) in alpha.entries() {
            let w = self
                .window
                .iter()
                .position(|x| x == g)
                .ok_or_else(|| {
                    Error::SupportViolation(format!(
                        "alpha touches {:?} outside the sampled window",
                        g
                    ))
                })?;
            for (l, &v) in vals.iter().enumerate() {
                if v != 0.0 {
                    coeffs.push((w, l, v.round()));
                }
            }
        }
        Ok(coeffs)
    }

    /// Monte Carlo estimate of the Fourier coefficient at alpha:
    /// mean of exp(2 pi i <theta_s, alpha>), with the sample standard
    /// error of the complex mean.
    pub fn empirical_fourier(&self, alpha: &VectorOverG) -> Result<EmpiricalFourier> {
        let coeffs = self.align(alpha)?;
        let n = self.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("empty batch".into()));
        }
        let zs: Vec<Complex64> = (0..n)
            .map(|s| Complex64::from_polar(1.0, TWO_PI * self.pairing(s, &coeffs)))
            .collect();
        let mean = zs.iter().sum::<Complex64>() / n as f64;
        let var = if n > 1 {
            zs.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        Ok(EmpiricalFourier { estimate: mean, stderr: (var / n as f64).sqrt() })
    }

    /// Max over samples and dual vectors of the distance of the pairing
    /// to the nearest integer. Near zero when every alpha annihilates the
    /// image subgroup, up to the truncation budget.
    pub fn image_support_check(&self, annihilators: &[VectorOverG]) -> Result<f64> {
        let mut max_dev = 0.0_f64;
        for alpha in annihilators {
            let coeffs = self.align(alpha)?;
            for s in 0..self.len() {
                let p = self.pairing(s, &coeffs);
                max_dev = max_dev.max((p - p.round()).abs());
            }
        }
        Ok(max_dev)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ProductFormula {
    pub value: Complex64,
    /// Bound on the neglected factors, from the quadratic transform bound
    /// and the l2 mass outside the final ball.
    pub tail_bound: f64,
    pub factors_used: usize,
}

/// The analytic transform of the pushforward at a dual vector alpha:
/// the product over the group of nu_hat((r(xi) alpha)(g)), multiplied in
/// expanding max-norm balls until the certified tail is below `tol`.
pub fn product_formula(
    xi: &RingMatrix,
    alpha: &VectorOverG,
    nu: &BaseMeasure,
    tol: f64,
) -> Result<ProductFormula> {
    if nu.dim() != xi.cols {
        return Err(Error::DimensionMismatch(
            "measure dimension vs xi input components".into(),
        ));
    }
    if alpha.max_dist_to_int() > 1e-9 {
        return Err(Error::SupportViolation("alpha must be integer-valued".into()));
    }
    let c = nu.fourier_quadratic_bound()?;
    let beta = right_apply(xi, alpha)?;
    let total_mass = beta.l2_norm_sq();
    let spec = xi.spec().clone();
    let mut value = Complex64::new(1.0, 0.0);
    let mut included_mass = 0.0;
    let mut factors_used = 0;
    let finish = |value: Complex64, remaining: f64, factors_used: usize| ProductFormula {
        value,
        tail_bound: (c * remaining).min(700.0).exp_m1(),
        factors_used,
    };
    match &spec {
        GroupSpec::Finite(_) => {
            for (_, vals) in beta.entries() {
                value *= nu.fourier(vals);
                factors_used += 1;
            }
            Ok(finish(value, 0.0, factors_used))
        }
        GroupSpec::FreeAbelian(_) => {
            let max_radius = beta
                .support()
                .map(|g| match g {
                    GroupElement::Vector(v) => {
                        v.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
                    }
                    _ => 0,
                })
                .max()
                .unwrap_or(0);
            let in_radius = |g: &GroupElement, r: usize| match g {
                GroupElement::Vector(v) => {
                    v.iter().all(|x| x.unsigned_abs() as usize <= r)
                }
                _ => false,
            };
            let mut radius = 0usize;
            loop {
                // Multiply the shell at this radius, in support order.
                for (g, vals) in beta.entries() {
                    let inside = in_radius(g, radius);
                    let was_inside = radius > 0 && in_radius(g, radius - 1);
                    if inside && !was_inside {
                        value *= nu.fourier(vals);
                        included_mass += vals.iter().map(|v| v * v).sum::<f64>();
                        factors_used += 1;
                    }
                }
                let remaining = (total_mass - included_mass).max(0.0);
                if c * remaining < tol || radius >= max_radius {
                    return Ok(finish(value, remaining, factors_used));
                }
                radius += 1;
            }
        }
    }
}

/// Side-by-side Monte Carlo and analytic transform at one dual vector.
#[derive(Clone, Copy, Debug)]
pub struct FourierCheck {
    pub empirical: Complex64,
    pub stderr: f64,
    pub analytic: Complex64,
    pub tail_bound: f64,
    pub pass: bool,
}

/// Sample the plan, estimate the transform at alpha, and compare with
/// the product formula at the three-sigma-plus-tail gate. The tail bound
/// includes the plan's truncation pairing budget.
pub fn fourier_check(
    plan: &ThetaPlan,
    alpha: &VectorOverG,
    n_samples: usize,
    stream: &Stream,
) -> Result<FourierCheck> {
    let batch = plan.sample(n_samples, stream);
    let emp = batch.empirical_fourier(alpha)?;
    let analytic = product_formula(plan.xi(), alpha, plan.nu(), 1e-9)?;
    let tail_bound = analytic.tail_bound + plan.pairing_budget(alpha);
    let gap = (emp.estimate - analytic.value).norm();
    Ok(FourierCheck {
        empirical: emp.estimate,
        stderr: emp.stderr,
        analytic: analytic.value,
        tail_bound,
        pass: gap <= 3.0 * emp.stderr + tail_bound + 1e-12,
    })
}

/// Left shift: (h x)(g) = x(h^{-1} g), i.e. relabel support by h.
pub fn shift_input_left(x: &VectorOverG, h: &GroupElement) -> Result<VectorOverG> {
    let spec = x.spec().clone();
    let mut out = VectorOverG::zero(spec.clone(), x.components());
    for (g, vals) in x.entries() {
        let moved = spec.multiply(h, g)?;
        for (l, &v) in vals.iter().enumerate() {
            if v != 0.0 {
                out.add_term(moved.clone(), l, v)?;
            }
        }
    }
    Ok(out)
}

/// Right shift: (rho(h) x)(g) = x(g h).
pub fn shift_input_right(x: &VectorOverG, h: &GroupElement) -> Result<VectorOverG> {
    let spec = x.spec().clone();
    let h_inv = spec.invert(h)?;
    let mut out = VectorOverG::zero(spec.clone(), x.components());
    for (g, vals) in x.entries() {
        let moved = spec.multiply(g, &h_inv)?;
        for (l, &v) in vals.iter().enumerate() {
            if v != 0.0 {
                out.add_term(moved.clone(), l, v)?;
            }
        }
    }
    Ok(out)
}

/// rho(h^{-1}) xi entrywise: new entry support is the old one shifted by
/// h on the right.
pub fn shift_matrix_right(xi: &RingMatrix, h: &GroupElement) -> Result<RingMatrix> {
    let spec = xi.spec().clone();
    let mut out = RingMatrix::zero(spec.clone(), xi.rows, xi.cols);
    for i in 0..xi.rows {
        for j in 0..xi.cols {
            for (g, c) in xi.entry(i, j).terms() {
                out.entry_mut(i, j).add_term(spec.multiply(g, h)?, c)?;
            }
        }
    }
    Ok(out)
}
