//! Concrete realizations of the left convolution operator: a Fourier
//! multiplier on a torus grid for Z^d, or the full regular-representation
//! matrix for finite groups. On top of those, l2 formal inverses and
//! approximate inverses by the spectral cutoff sigma -> 1/sigma on
//! [1/k, infinity).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groupring::{right_apply, RingElement, RingMatrix, VectorOverG};
use crate::groups::{GroupElement, GroupSpec};
use crate::linalg::{CMatrix, Svd, C64};

/// Default grid size per rank: quadrature granularity for the default
/// acceptance tolerances.
pub fn default_grid(rank: usize) -> usize {
    match rank {
        1 => 2048,
        2 => 256,
        _ => 64,
    }
}

/// Tolerance below which a grid singular value counts as zero.
pub const SINGULAR_TOL: f64 = 1e-9;

fn phase_table(grid: usize) -> Vec<C64> {
    (0..grid)
        .map(|j| {
            C64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / grid as f64)
        })
        .collect()
}

fn unflatten(mut flat: usize, rank: usize, grid: usize) -> Vec<usize> {
    let mut out = vec![0usize; rank];
    for a in (0..rank).rev() {
        out[a] = flat % grid;
        flat /= grid;
    }
    out
}

/// Reduced dot product g . j mod grid, exact in integer arithmetic.
fn dot_mod(g: &[i64], j: &[usize], grid: usize) -> usize {
    let l = grid as i64;
    let mut acc: i64 = 0;
    for (ga, &ja) in g.iter().zip(j) {
        acc = (acc + (ga.rem_euclid(l)) * ja as i64).rem_euclid(l);
    }
    acc as usize
}

fn support_vectors(e: &RingElement) -> Vec<(Vec<i64>, f64)> {
    e.terms()
        .map(|(g, c)| match g {
            GroupElement::Vector(v) => (v.clone(), c),
            GroupElement::Index(_) => unreachable!("free abelian backend required"),
        })
        .collect()
}

/// Grid samples of the matrix-valued symbol theta -> sum_g f(g) e^{2 pi i g.theta}.
pub struct SymbolGrid {
    pub rank: usize,
    pub grid: usize,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<CMatrix>,
}

impl SymbolGrid {
    pub fn points(&self) -> usize {
        self.grid.pow(self.rank as u32)
    }

    pub fn theta(&self, flat: usize) -> Vec<f64> {
        unflatten(flat, self.rank, self.grid)
            .into_iter()
            .map(|j| j as f64 / self.grid as f64)
            .collect()
    }
}

/// Evaluate the symbol of f on the L^d grid. Requires
/// L >= 2 * support radius + 1 so distinct frequencies stay distinct.
pub fn build_symbol(f: &RingMatrix, grid: usize) -> Result<SymbolGrid> {
    let rank = match f.spec() {
        GroupSpec::FreeAbelian(d) => *d,
        GroupSpec::Finite(_) => {
            return Err(Error::BackendMismatch(
                "symbol grids need the free abelian backend".into(),
            ));
        }
    };
    let required = 2 * f.support_radius() + 1;
    if grid < required {
        return Err(Error::GridTooSmall { required, got: grid });
    }
    let terms: Vec<Vec<(Vec<i64>, f64)>> =
        f.entries().iter().map(support_vectors).collect();
    let phases = phase_table(grid);
    let points = grid.pow(rank as u32);
    let values: Vec<CMatrix> = (0..points)
        .into_par_iter()
        .map(|flat| {
            let j = unflatten(flat, rank, grid);
            let mut m = CMatrix::zeros(f.rows, f.cols);
            for (idx, entry_terms) in terms.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (g, c) in entry_terms {
                    acc += phases[dot_mod(g, &j, grid)] * *c;
                }
                m.data[idx] = acc;
            }
            m
        })
        .collect();
    Ok(SymbolGrid { rank, grid, rows: f.rows, cols: f.cols, values })
}

/// Symbol machinery plus the per-point SVDs, computed once and reused
/// across cutoff parameters.
pub struct SpectralDecomposition {
    pub symbol: SymbolGrid,
    svds: Vec<Svd>,
    injectivity: std::sync::OnceLock<InjectivityReport>,
}

impl SpectralDecomposition {
    pub fn new(f: &RingMatrix, grid: usize) -> Result<Self> {
        let symbol = build_symbol(f, grid)?;
        let svds: Vec<Svd> = symbol.values.par_iter().map(|m| m.svd()).collect();
        Ok(SpectralDecomposition { symbol, svds, injectivity: std::sync::OnceLock::new() })
    }

    /// Injectivity verdict for the operator this grid realizes, cached
    /// across cutoff parameters. `f` must be the matrix the
    /// decomposition was built from (needed for the refinement pass).
    pub fn injectivity(&self, f: &RingMatrix) -> &InjectivityReport {
        self.injectivity.get_or_init(|| {
            let min_singular = self.min_singular();
            let zero_fraction = self.zero_fraction(SINGULAR_TOL);
            if min_singular > SINGULAR_TOL {
                return InjectivityReport {
                    min_singular,
                    zero_fraction,
                    refined_zero_fraction: None,
                    verdict: InjectivityVerdict::Injective,
                    kernel_dim: None,
                };
            }
            // Ambiguous: refine the grid by 2 and compare dip fractions.
            // Thin zero sets keep a near-constant dip count, so the
            // fraction shrinks under refinement; fat ones keep it.
            let grid = self.symbol.grid;
            let refined = SpectralDecomposition::new(f, grid * 2)
                .expect("refined grid is strictly larger");
            let refined_fraction = refined.zero_fraction(SINGULAR_TOL);
            let thin_threshold = 16.0 * self.symbol.rank as f64 / grid as f64;
            let verdict = if zero_fraction <= thin_threshold
                && refined_fraction <= 0.75 * zero_fraction
            {
                InjectivityVerdict::ThinZeroSet
            } else {
                InjectivityVerdict::NonInjective
            };
            InjectivityReport {
                min_singular,
                zero_fraction,
                refined_zero_fraction: Some(refined_fraction),
                verdict,
                kernel_dim: None,
            }
        })
    }

    /// The cutoff pseudoinverse symbol V phi_k(Sigma) U^H per grid point,
    /// phi_k(sigma) = 1/sigma on [1/k, infinity), 0 below.
    pub fn cutoff_inverse(&self, k: f64) -> Vec<CMatrix> {
        let cut = 1.0 / k;
        self.svds
            .par_iter()
            .map(|svd| svd.apply_fn_pinv(|s| if s >= cut { 1.0 / s } else { 0.0 }))
            .collect()
    }

    /// Exact inverse symbol; errors if any grid point is singular.
    pub fn full_inverse(&self) -> Result<Vec<CMatrix>> {
        for (flat, svd) in self.svds.iter().enumerate() {
            let smin = svd.singular.last().copied().unwrap_or(0.0);
            if smin <= SINGULAR_TOL {
                return Err(Error::SymbolSingular {
                    point: unflatten(flat, self.symbol.rank, self.symbol.grid),
                    sigma: smin,
                });
            }
        }
        Ok(self
            .svds
            .par_iter()
            .map(|svd| svd.apply_fn_pinv(|s| 1.0 / s))
            .collect())
    }

    pub fn min_singular(&self) -> f64 {
        self.svds
            .iter()
            .map(|s| s.singular.last().copied().unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn zero_fraction(&self, tol: f64) -> f64 {
        let zeros = self
            .svds
            .iter()
            .filter(|s| s.singular.last().copied().unwrap_or(0.0) < tol)
            .count();
        zeros as f64 / self.svds.len() as f64
    }

    /// Grid-exact diagnostics for a candidate inverse symbol B:
    /// l2 residuals of B A - I and A B - I, and max over the grid of the
    /// spectral norm of B A.
    pub fn diagnostics(&self, bs: &[CMatrix]) -> (f64, f64, f64) {
        let n = self.symbol.cols;
        let m = self.symbol.rows;
        let id_n = CMatrix::identity(n);
        let id_m = CMatrix::identity(m);
        let rows: Vec<(f64, f64, f64)> = self
            .symbol
            .values
            .par_iter()
            .zip(bs.par_iter())
            .map(|(a, b)| {
                let ba = b.mul(a);
                let ab = a.mul(b);
                (
                    ba.sub(&id_n).frobenius_sq(),
                    ab.sub(&id_m).frobenius_sq(),
                    ba.spectral_norm(),
                )
            })
            .collect();
        let points = rows.len() as f64;
        let mut left = 0.0;
        let mut right = 0.0;
        let mut op = 0.0_f64;
        for (l, r, o) in rows {
            left += l;
            right += r;
            op = op.max(o);
        }
        ((left / points).sqrt(), (right / points).sqrt(), op)
    }

    /// Total l2 mass of the object with symbol B, by Parseval.
    pub fn parseval_mass(bs: &[CMatrix]) -> f64 {
        let total: f64 = bs.iter().map(|b| b.frobenius_sq()).sum();
        total / bs.len() as f64
    }

    /// Inverse transform of B restricted to the max-norm ball of the
    /// given radius, as a ring matrix over Z^d.
    pub fn idft_window(&self, bs: &[CMatrix], radius: usize) -> Result<RingMatrix> {
        let grid = self.symbol.grid;
        if 2 * radius + 1 > grid {
            return Err(Error::GridTooSmall { required: 2 * radius + 1, got: grid });
        }
        let rank = self.symbol.rank;
        let spec = GroupSpec::FreeAbelian(rank);
        let ball = spec.enumerate_ball(radius);
        let phases = phase_table(grid);
        let points = bs.len() as f64;
        let (rows, cols) = (bs[0].rows, bs[0].cols);
        let coeffs: Vec<Vec<f64>> = ball
            .par_iter()
            .map(|g| {
                let gv = match g {
                    GroupElement::Vector(v) => v,
                    _ => unreachable!(),
                };
                let mut acc = vec![C64::new(0.0, 0.0); rows * cols];
                for (flat, b) in bs.iter().enumerate() {
                    let j = unflatten(flat, rank, grid);
                    // e^{-2 pi i g.theta}
                    let p = phases[(grid - dot_mod(gv, &j, grid)) % grid];
                    for (a, v) in acc.iter_mut().zip(b.data.iter()) {
                        *a += v * p;
                    }
                }
                acc.iter().map(|z| z.re / points).collect()
            })
            .collect();
        let mut out = RingMatrix::zero(spec.clone(), rows, cols);
        for (g, entry_vals) in ball.iter().zip(coeffs) {
            for i in 0..rows {
                for j in 0..cols {
                    let c = entry_vals[i * cols + j];
                    if c.abs() > 1e-14 {
                        out.entry_mut(i, j).add_term(g.clone(), c)?;
                    }
                }
            }
        }
        Ok(out)
    }

    /// l2 norm of the image of alpha under right convolution by the
    /// object with symbol B, evaluated on the grid by Parseval.
    pub fn grid_image_norm(&self, bs: &[CMatrix], alpha: &VectorOverG) -> Result<f64> {
        let grid = self.symbol.grid;
        let rank = self.symbol.rank;
        if alpha.components() != bs[0].rows {
            return Err(Error::DimensionMismatch(
                "grid_image_norm: alpha components must match symbol rows".into(),
            ));
        }
        let terms: Vec<(Vec<i64>, Vec<f64>)> = alpha
            .entries()
            .map(|(g, vals)| match g {
                GroupElement::Vector(v) => (v.clone(), vals.clone()),
                _ => unreachable!(),
            })
            .collect();
        let phases = phase_table(grid);
        let comps = alpha.components();
        // Ordered collect then a sequential fold: parallel tree reductions
        // would round differently across thread counts.
        let per_point: Vec<f64> = (0..bs.len())
            .into_par_iter()
            .map(|flat| {
                let j = unflatten(flat, rank, grid);
                let mut alpha_hat = vec![C64::new(0.0, 0.0); comps];
                for (g, vals) in &terms {
                    let p = phases[dot_mod(g, &j, grid)];
                    for (ah, &v) in alpha_hat.iter_mut().zip(vals) {
                        *ah += p * v;
                    }
                }
                // beta_hat = B^T alpha_hat (plain transpose).
                let b = &bs[flat];
                let mut norm_sq = 0.0;
                for col in 0..b.cols {
                    let mut acc = C64::new(0.0, 0.0);
                    for row in 0..b.rows {
                        acc += b[(row, col)] * alpha_hat[row];
                    }
                    norm_sq += acc.norm_sqr();
                }
                norm_sq
            })
            .collect();
        let total: f64 = per_point.iter().sum();
        Ok((total / bs.len() as f64).sqrt())
    }
}

// ---------------------------------------------------------------------------
// Injectivity diagnostics.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub enum InjectivityVerdict {
    /// Singular values bounded below on the grid.
    Injective,
    /// Isolated grid dips only; injective but not invertible. The zero
    /// set may still be a positive-dimensional variety the grid cannot
    /// see; the flag records that this is a proxy, not a proof.
    ThinZeroSet,
    NonInjective,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct InjectivityReport {
    pub min_singular: f64,
    pub zero_fraction: f64,
    /// Zero fraction after one 2x grid refinement, when the coarse pass
    /// was ambiguous.
    pub refined_zero_fraction: Option<f64>,
    pub verdict: InjectivityVerdict,
    /// Exact kernel dimension (finite backend only).
    pub kernel_dim: Option<usize>,
}

/// Decide injectivity of the left convolution operator through the grid
/// proxy (free abelian) or the exact kernel of the regular representation
/// (finite).
pub fn injectivity_report(f: &RingMatrix, grid: usize) -> Result<InjectivityReport> {
    match f.spec() {
        GroupSpec::FreeAbelian(_) => {
            let dec = SpectralDecomposition::new(f, grid)?;
            Ok(dec.injectivity(f).clone())
        }
        GroupSpec::Finite(_) => {
            let rep = regular_rep(f)?;
            let svd = rep.svd();
            let smax = svd.singular.first().copied().unwrap_or(0.0);
            let tol = SINGULAR_TOL * smax.max(1.0);
            let kernel_dim =
                rep.cols - svd.singular.iter().filter(|&&s| s > tol).count();
            let min_singular = svd.singular.last().copied().unwrap_or(0.0);
            Ok(InjectivityReport {
                min_singular,
                zero_fraction: kernel_dim as f64 / rep.cols as f64,
                refined_zero_fraction: None,
                verdict: if kernel_dim == 0 {
                    InjectivityVerdict::Injective
                } else {
                    InjectivityVerdict::NonInjective
                },
                kernel_dim: Some(kernel_dim),
            })
        }
    }
}

/// The matrix of the left convolution operator on l2(G)^n for a finite
/// group: block (j, l), entry (g, h) equals f_{jl}(g h^{-1}).
pub fn regular_rep(f: &RingMatrix) -> Result<CMatrix> {
    let group = f.spec().finite_group()?.clone();
    let n = group.order;
    let mut m = CMatrix::zeros(f.rows * n, f.cols * n);
    for bi in 0..f.rows {
        for bj in 0..f.cols {
            for (g, c) in f.entry(bi, bj).terms() {
                let gi = match g {
                    GroupElement::Index(i) => *i,
                    _ => unreachable!(),
                };
                // row index g, column index h with g h^{-1} = gi,
                // i.e. g = gi * h.
                for h in 0..n {
                    let row = group.mul(gi, h);
                    m[(bi * n + row, bj * n + h)] += C64::new(c, 0.0);
                }
            }
        }
    }
    Ok(m)
}

// ---------------------------------------------------------------------------
// Approximate inverses.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub enum WindowChoice {
    /// Grow the window until the discarded mass fraction is within the
    /// configured limit.
    Auto,
    /// Fixed max-norm radius; the discarded mass is reported, not policed.
    Fixed(usize),
}

#[derive(Clone, Debug)]
pub struct ApproxInverseConfig {
    pub k: f64,
    pub grid: usize,
    pub window: WindowChoice,
    /// Mass-fraction limit for Auto windows.
    pub mass_limit: f64,
}

impl ApproxInverseConfig {
    pub fn new(k: f64, rank: usize) -> Self {
        ApproxInverseConfig {
            k,
            grid: default_grid(rank),
            window: WindowChoice::Auto,
            mass_limit: 1e-6,
        }
    }
}

/// A cutoff approximate inverse with its diagnostics. Residuals and the
/// operator-norm bound are computed spectrally (grid-exact for the
/// untruncated object); the ring-matrix truncation and its discarded
/// mass fraction serve the downstream convolution work.
#[derive(Clone, Debug)]
pub struct ApproxInverse {
    pub k: f64,
    pub xi: RingMatrix,
    pub window: usize,
    pub residual_left: f64,
    pub residual_right: f64,
    pub op_norm_bound: f64,
    pub truncation_fraction: f64,
}

pub fn approximate_inverse(f: &RingMatrix, config: &ApproxInverseConfig) -> Result<ApproxInverse> {
    match f.spec() {
        GroupSpec::FreeAbelian(_) => {
            let dec = SpectralDecomposition::new(f, config.grid)?;
            approximate_inverse_from(&dec, f, config)
        }
        GroupSpec::Finite(_) => approximate_inverse_finite(f, config.k),
    }
}

/// Grid-backend construction reusing a prebuilt decomposition.
pub fn approximate_inverse_from(
    dec: &SpectralDecomposition,
    f: &RingMatrix,
    config: &ApproxInverseConfig,
) -> Result<ApproxInverse> {
    if dec.injectivity(f).verdict == InjectivityVerdict::NonInjective {
        return Err(Error::NotInjective);
    }
    let bs = dec.cutoff_inverse(config.k);
    let (residual_left, residual_right, op_norm_bound) = dec.diagnostics(&bs);
    let total_mass = SpectralDecomposition::parseval_mass(&bs);
    let max_radius = (config.grid - 1) / 2;
    let build = |radius: usize| -> Result<(RingMatrix, f64)> {
        let xi = dec.idft_window(&bs, radius)?;
        let fraction = if total_mass > 0.0 {
            ((total_mass - xi.l2_norm_sq()) / total_mass).max(0.0)
        } else {
            0.0
        };
        Ok((xi, fraction))
    };
    let (xi, window, truncation_fraction) = match config.window {
        WindowChoice::Fixed(radius) => {
            let (xi, fraction) = build(radius.min(max_radius))?;
            (xi, radius.min(max_radius), fraction)
        }
        WindowChoice::Auto => {
            let mut radius = 4usize;
            loop {
                let (xi, fraction) = build(radius.min(max_radius))?;
                if fraction <= config.mass_limit {
                    break (xi, radius.min(max_radius), fraction);
                }
                if radius >= max_radius {
                    return Err(Error::WindowTooSmall {
                        fraction,
                        limit: config.mass_limit,
                    });
                }
                radius *= 2;
            }
        }
    };
    Ok(ApproxInverse {
        k: config.k,
        xi,
        window,
        residual_left,
        residual_right,
        op_norm_bound,
        truncation_fraction,
    })
}

/// Finite backend: the same construction on the regular-representation
/// matrix, which is exact. The coefficients of xi_k are read off the
/// identity columns of phi_k(|lambda(f)|) v*.
pub fn approximate_inverse_finite(f: &RingMatrix, k: f64) -> Result<ApproxInverse> {
    let group = f.spec().finite_group()?.clone();
    let n_ord = group.order;
    let rep = regular_rep(f)?;
    let svd = rep.svd();
    let smax = svd.singular.first().copied().unwrap_or(0.0);
    let kernel = svd
        .singular
        .iter()
        .filter(|&&s| s <= SINGULAR_TOL * smax.max(1.0))
        .count();
    if kernel > 0 {
        return Err(Error::NotInjective);
    }
    let cut = 1.0 / k;
    let b = svd.apply_fn_pinv(|s| if s >= cut { 1.0 / s } else { 0.0 });
    // Extract xi (cols x rows of f) from the identity columns.
    let spec = f.spec().clone();
    let mut xi = RingMatrix::zero(spec.clone(), f.cols, f.rows);
    let e = group.identity;
    for i in 0..f.cols {
        for j in 0..f.rows {
            for g in 0..n_ord {
                let v = b[(i * n_ord + g, j * n_ord + e)];
                if v.re.abs() > 1e-14 {
                    xi.entry_mut(i, j).add_term(GroupElement::Index(g), v.re)?;
                }
            }
        }
    }
    let ba = b.mul(&rep);
    let ab = rep.mul(&b);
    let scale = 1.0 / (n_ord as f64);
    let residual_left =
        (ba.sub(&CMatrix::identity(f.cols * n_ord)).frobenius_sq() * scale).sqrt();
    let residual_right =
        (ab.sub(&CMatrix::identity(f.rows * n_ord)).frobenius_sq() * scale).sqrt();
    let op_norm_bound = ba.spectral_norm();
    Ok(ApproxInverse {
        k,
        xi,
        window: 0,
        residual_left,
        residual_right,
        op_norm_bound,
        truncation_fraction: 0.0,
    })
}

// ---------------------------------------------------------------------------
// Formal inverse and membership divergence.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct FormalInverse {
    pub xi: RingMatrix,
    /// Real-space residual of xi f - delta tensor id for the truncation.
    pub residual: f64,
    pub min_singular: f64,
}

/// Invert the symbol exactly on the grid and truncate to the window.
/// Fails if the symbol is singular at any grid point.
pub fn l2_formal_inverse(f: &RingMatrix, grid: usize, window: usize) -> Result<FormalInverse> {
    if f.rows != f.cols {
        return Err(Error::DimensionMismatch("formal inverse needs a square matrix".into()));
    }
    let dec = SpectralDecomposition::new(f, grid)?;
    let bs = dec.full_inverse()?;
    let xi = dec.idft_window(&bs, window)?;
    let id = RingMatrix::identity(f.spec().clone(), f.rows);
    let residual = xi.matmul(f)?.sub(&id)?.l2_norm();
    Ok(FormalInverse { xi, residual, min_singular: dec.min_singular() })
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct DivergenceRow {
    pub k: f64,
    /// Parseval norm of r(xi_k) alpha on the grid (untruncated object).
    pub norm_grid: f64,
    /// Norm via exact convolution with the truncated xi_k.
    pub norm_truncated: f64,
}

/// Trajectory of |r(xi_k) alpha|_2 over the cutoff list. Unbounded growth
/// certifies alpha outside r(f) l2; convergence to an integral vector
/// certifies membership in the integral ideal.
pub fn membership_divergence(
    f: &RingMatrix,
    alpha: &VectorOverG,
    k_list: &[f64],
    grid: usize,
    window: usize,
) -> Result<Vec<DivergenceRow>> {
    let dec = SpectralDecomposition::new(f, grid)?;
    let mut rows = Vec::with_capacity(k_list.len());
    for &k in k_list {
        let config = ApproxInverseConfig {
            k,
            grid,
            window: WindowChoice::Fixed(window),
            mass_limit: 1.0,
        };
        let inv = approximate_inverse_from(&dec, f, &config)?;
        let bs = dec.cutoff_inverse(k);
        let norm_grid = dec.grid_image_norm(&bs, alpha)?;
        let norm_truncated = right_apply(&inv.xi, alpha)?.l2_norm();
        rows.push(DivergenceRow { k, norm_grid, norm_truncated });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_ring_expr;
    use crate::groups::parse_group_id;
    use crate::rng::Stream;

    fn z1() -> GroupSpec {
        GroupSpec::free_abelian(1).unwrap()
    }

    fn scalar(text: &str) -> RingMatrix {
        RingMatrix::scalar(parse_ring_expr(text, &z1()).unwrap())
    }

    #[test]
    fn symbol_of_two_minus_shift() {
        let f = scalar("2 - u1");
        let sym = build_symbol(&f, 64).unwrap();
        for flat in 0..sym.points() {
            let theta = sym.theta(flat)[0];
            let want = C64::new(
                2.0 - (2.0 * std::f64::consts::PI * theta).cos(),
                -(2.0 * std::f64::consts::PI * theta).sin(),
            );
            assert!((sym.values[flat][(0, 0)] - want).norm() < 1e-12);
            let modulus = sym.values[flat][(0, 0)].norm();
            assert!((1.0 - 1e-12..=3.0 + 1e-12).contains(&modulus));
        }
    }

    #[test]
    fn symbol_of_delta_is_one() {
        let f = scalar("1");
        let sym = build_symbol(&f, 16).unwrap();
        for v in &sym.values {
            assert!((v[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn symbol_of_harmonic_model() {
        let z2 = GroupSpec::free_abelian(2).unwrap();
        let f = RingMatrix::scalar(
            parse_ring_expr("4 - u1 - u1^-1 - u2 - u2^-1", &z2).unwrap(),
        );
        let sym = build_symbol(&f, 32).unwrap();
        for flat in 0..sym.points() {
            let th = sym.theta(flat);
            let want = 4.0
                - 2.0 * (2.0 * std::f64::consts::PI * th[0]).cos()
                - 2.0 * (2.0 * std::f64::consts::PI * th[1]).cos();
            assert!((sym.values[flat][(0, 0)] - C64::new(want, 0.0)).norm() < 1e-12);
        }
        // Zero only at theta = 0.
        assert!(sym.values[0][(0, 0)].norm() < 1e-12);
    }

    #[test]
    fn grid_too_small_is_rejected() {
        let f = scalar("u1^5 + u1^-5");
        assert!(matches!(
            build_symbol(&f, 10),
            Err(Error::GridTooSmall { required: 11, .. })
        ));
    }

    #[test]
    fn convolution_theorem_on_symbols() {
        let mut s = Stream::from_seed(40);
        let z2 = GroupSpec::free_abelian(2).unwrap();
        for _ in 0..5 {
            let rand_mat = |s: &mut Stream| {
                let entries = (0..4)
                    .map(|_| {
                        let mut e = RingElement::zero(z2.clone());
                        for _ in 0..3 {
                            let g = GroupElement::Vector(vec![s.next_int(-2, 2), s.next_int(-2, 2)]);
                            e.add_term(g, s.next_int(-4, 4) as f64 / 2.0).unwrap();
                        }
                        e
                    })
                    .collect();
                RingMatrix::from_entries(2, 2, entries).unwrap()
            };
            let a = rand_mat(&mut s);
            let b = rand_mat(&mut s);
            let prod = a.matmul(&b).unwrap();
            let sa = build_symbol(&a, 16).unwrap();
            let sb = build_symbol(&b, 16).unwrap();
            let sp = build_symbol(&prod, 16).unwrap();
            for flat in 0..sp.points() {
                let pointwise = sa.values[flat].mul(&sb.values[flat]);
                let err = pointwise.sub(&sp.values[flat]).frobenius_sq().sqrt();
                assert!(err < 1e-10);
            }
        }
    }

    #[test]
    fn injectivity_examples() {
        // 2 - u1: bounded below by 1 on the circle.
        let rep = injectivity_report(&scalar("2 - u1"), 512).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::Injective);
        assert!((rep.min_singular - 1.0).abs() < 1e-4);
        assert_eq!(rep.zero_fraction, 0.0);

        // 1 - u1: single zero at theta = 0; thin dip.
        let rep = injectivity_report(&scalar("1 - u1"), 512).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::ThinZeroSet);
        assert!(rep.zero_fraction <= 2.0 / 512.0);

        // 0: kernel is everything.
        let zero = RingMatrix::zero(z1(), 1, 1);
        let rep = injectivity_report(&zero, 128).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::NonInjective);
    }

    #[test]
    fn injectivity_finite_kernel() {
        let z8 = parse_group_id("Z/8").unwrap();
        let f = RingMatrix::scalar(parse_ring_expr("2 - g1", &z8).unwrap());
        let rep = injectivity_report(&f, 0).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::Injective);
        assert_eq!(rep.kernel_dim, Some(0));
        assert!((rep.min_singular - 1.0).abs() < 1e-9);

        // 1 - g1 kills constants: kernel dimension 1.
        let g = RingMatrix::scalar(parse_ring_expr("1 - g1", &z8).unwrap());
        let rep = injectivity_report(&g, 0).unwrap();
        assert_eq!(rep.verdict, InjectivityVerdict::NonInjective);
        assert_eq!(rep.kernel_dim, Some(1));
    }

    #[test]
    fn regular_rep_matches_left_apply() {
        let s3 = parse_group_id("S3").unwrap();
        let mut s = Stream::from_seed(61);
        let mut f_elem = RingElement::zero(s3.clone());
        for _ in 0..4 {
            f_elem
                .add_term(GroupElement::Index(s.next_int(0, 5) as usize), s.next_f64() - 0.5)
                .unwrap();
        }
        let f = RingMatrix::scalar(f_elem);
        let rep = regular_rep(&f).unwrap();
        for h in 0..6 {
            let zeta = VectorOverG::from_components(&[RingElement::delta(
                s3.clone(),
                GroupElement::Index(h),
            )
            .unwrap()])
            .unwrap();
            let image = crate::groupring::left_apply(&f, &zeta).unwrap();
            for g in 0..6 {
                let got = rep[(g, h)].re;
                let want = image.value(&GroupElement::Index(g))[0];
                assert!((got - want).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn formal_inverse_geometric() {
        let f = scalar("2 - u1");
        let inv = l2_formal_inverse(&f, 1024, 60).unwrap();
        // xi(n) = 2^{-(n+1)} for n >= 0.
        for n in 0..20 {
            let got = inv.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![n]));
            assert!(
                (got - 0.5f64.powi(n as i32 + 1)).abs() < 1e-12,
                "coefficient at {n}: {got}"
            );
        }
        let neg = inv.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![-3]));
        assert!(neg.abs() < 1e-12);
        assert!(inv.residual < 1e-12);
        assert!((inv.min_singular - 1.0).abs() < 1e-4);

        // delta_0 inverts to itself.
        let one = scalar("1");
        let inv = l2_formal_inverse(&one, 64, 4).unwrap();
        assert!((inv.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![0])) - 1.0).abs() < 1e-14);
        assert!(inv.residual < 1e-13);
    }

    #[test]
    fn formal_inverse_symmetric_laplacian() {
        // 3 - u1 - u1^-1: xi(n) = r^{|n|} / sqrt(5), r = (3 - sqrt 5)/2.
        let f = scalar("3 - u1 - u1^-1");
        let inv = l2_formal_inverse(&f, 2048, 80).unwrap();
        let r = (3.0 - 5.0_f64.sqrt()) / 2.0;
        let c = 1.0 / 5.0_f64.sqrt();
        for n in -10i64..=10 {
            let got = inv.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![n]));
            let want = c * r.powi(n.unsigned_abs() as i32);
            assert!((got - want).abs() < 1e-10, "coefficient at {n}");
        }
        assert!(inv.residual < 1e-10);
    }

    #[test]
    fn formal_inverse_rejects_singular_symbol() {
        let f = scalar("1 - u1");
        assert!(matches!(
            l2_formal_inverse(&f, 256, 16),
            Err(Error::SymbolSingular { .. })
        ));
    }

    #[test]
    fn approx_inverse_spectral_floor() {
        // Spectrum of 2 - u1 is bounded below by 1: cutoff inactive for
        // k >= 2, grid residual at rounding level.
        let f = scalar("2 - u1");
        for k in [2.0, 8.0, 256.0] {
            let config = ApproxInverseConfig {
                k,
                grid: 2048,
                window: WindowChoice::Fixed(512),
                mass_limit: 1.0,
            };
            let inv = approximate_inverse(&f, &config).unwrap();
            assert!(inv.residual_left < 1e-8, "k={k}: {}", inv.residual_left);
            assert!(inv.residual_right < 1e-8);
            assert!(inv.op_norm_bound <= 1.0 + 1e-6);
            assert!(inv.truncation_fraction < 1e-6);
        }
    }

    #[test]
    fn approx_inverse_cutoff_mass() {
        // 1 - u1: residual^2 tracks the grid measure of {|A| < 1/k}.
        let f = scalar("1 - u1");
        for k in [4.0, 16.0, 64.0, 256.0] {
            let config = ApproxInverseConfig {
                k,
                grid: 2048,
                window: WindowChoice::Fixed(512),
                mass_limit: 1.0,
            };
            let inv = approximate_inverse(&f, &config).unwrap();
            let expected = 1.0 / (std::f64::consts::PI * k);
            let got = inv.residual_left * inv.residual_left;
            assert!(
                (got / expected - 1.0).abs() < 0.2,
                "k={k}: got {got}, expected {expected}"
            );
            assert!(inv.op_norm_bound <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn approx_inverse_finite_matches_linear_solve() {
        // Z/8, f = 2 - g1: exact inverse once k clears 1/min-singular.
        let z8 = parse_group_id("Z/8").unwrap();
        let f = RingMatrix::scalar(parse_ring_expr("2 - g1", &z8).unwrap());
        let inv = approximate_inverse_finite(&f, 2.0).unwrap();
        assert!(inv.residual_left < 1e-12);
        assert!(inv.residual_right < 1e-12);
        assert!(inv.op_norm_bound <= 1.0 + 1e-9);

        // Independent oracle: solve the 8x8 circulant system directly by
        // Gaussian elimination for the column of the inverse at identity.
        let group = z8.finite_group().unwrap();
        let n = group.order;
        let mut a = vec![vec![0.0f64; n]; n];
        for h in 0..n {
            // column h of lambda(f): f has 2 at 0 and -1 at 1.
            a[group.mul(0, h)][h] += 2.0;
            a[group.mul(1, h)][h] += -1.0;
        }
        let mut rhs = vec![0.0f64; n];
        rhs[group.identity] = 1.0;
        // Gaussian elimination with partial pivoting.
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
            a.swap(col, piv);
            rhs.swap(col, piv);
            let d = a[col][col];
            for r in (col + 1)..n {
                let factor = a[r][col] / d;
                let pivot_row = a[col].clone();
                for (entry, &p) in a[r][col..n].iter_mut().zip(&pivot_row[col..n]) {
                    *entry -= factor * p;
                }
                rhs[r] -= factor * rhs[col];
            }
        }
        let mut solution = vec![0.0f64; n];
        for row in (0..n).rev() {
            let mut acc = rhs[row];
            for c2 in (row + 1)..n {
                acc -= a[row][c2] * solution[c2];
            }
            solution[row] = acc / a[row][row];
        }
        for (g, &want) in solution.iter().enumerate() {
            let got = inv.xi.entry(0, 0).coeff(&GroupElement::Index(g));
            assert!((got - want).abs() < 1e-10, "coefficient at {g}");
        }
    }

    #[test]
    fn finite_matches_wrapped_grid_backend() {
        // The Z backend on an L-point grid computes the same numbers as
        // the finite backend on Z/L when the support fits.
        let f_z = scalar("2 - u1");
        let zl = parse_group_id("Z/8").unwrap();
        let f_fin = RingMatrix::scalar(parse_ring_expr("2 - g1", &zl).unwrap());
        let config = ApproxInverseConfig {
            k: 4.0,
            grid: 8,
            window: WindowChoice::Fixed(3),
            mass_limit: 1.0,
        };
        let inv_z = approximate_inverse(&f_z, &config).unwrap();
        let inv_f = approximate_inverse_finite(&f_fin, 4.0).unwrap();
        for n in -3i64..=3 {
            let got = inv_z.xi.entry(0, 0).coeff(&GroupElement::Vector(vec![n]));
            let wrapped = ((n % 8) + 8) % 8;
            let want = inv_f.xi.entry(0, 0).coeff(&GroupElement::Index(wrapped as usize));
            assert!((got - want).abs() < 1e-10, "offset {n}");
        }
        assert!((inv_z.residual_left - inv_f.residual_left).abs() < 1e-10);
    }

    #[test]
    fn residual_nonincreasing_in_k() {
        let f = scalar("1 - u1");
        let mut last = f64::INFINITY;
        for k in [2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
            let config = ApproxInverseConfig {
                k,
                grid: 1024,
                window: WindowChoice::Fixed(128),
                mass_limit: 1.0,
            };
            let inv = approximate_inverse(&f, &config).unwrap();
            assert!(inv.residual_left <= last + 1e-6);
            last = inv.residual_left;
        }
    }

    #[test]
    fn ideal_test_strong_convergence() {
        // For random finitely supported zeta:
        // |r(f) r(xi_k) zeta - zeta| -> 0 and |r(xi_k) r(f) zeta - zeta| -> 0.
        let f = scalar("2 - u1");
        let mut s = Stream::from_seed(71);
        let dec = SpectralDecomposition::new(&f, 512).unwrap();
        for _ in 0..3 {
            let mut zeta_elem = RingElement::zero(z1());
            for _ in 0..4 {
                zeta_elem
                    .add_term(GroupElement::Vector(vec![s.next_int(-5, 5)]), s.next_f64() - 0.5)
                    .unwrap();
            }
            let zeta = VectorOverG::from_components(&[zeta_elem]).unwrap();
            let mut last_left = f64::INFINITY;
            let mut last_right = f64::INFINITY;
            for k in [1.5, 2.0, 4.0, 8.0] {
                let config = ApproxInverseConfig {
                    k,
                    grid: 512,
                    window: WindowChoice::Fixed(120),
                    mass_limit: 1.0,
                };
                let inv = approximate_inverse_from(&dec, &f, &config).unwrap();
                let lhs = right_apply(&inv.xi.matmul(&f).unwrap(), &zeta).unwrap();
                let left_err = lhs.sub(&zeta).unwrap().l2_norm();
                let rhs = right_apply(&f.matmul(&inv.xi).unwrap(), &zeta).unwrap();
                let right_err = rhs.sub(&zeta).unwrap().l2_norm();
                assert!(left_err <= last_left + 1e-6);
                assert!(right_err <= last_right + 1e-6);
                last_left = left_err;
                last_right = right_err;
            }
            assert!(last_left < 1e-8);
            assert!(last_right < 1e-8);
        }
    }

    #[test]
    fn divergence_trajectories() {
        let delta0 = VectorOverG::from_components(&[parse_ring_expr("1", &z1()).unwrap()])
            .unwrap();
        // 1 - u1, alpha = delta_0: norms grow like sqrt(k / pi).
        let f = scalar("1 - u1");
        let ks = [4.0, 16.0, 64.0, 256.0];
        let rows = membership_divergence(&f, &delta0, &ks, 2048, 512).unwrap();
        for w in rows.windows(2) {
            assert!(w[1].norm_grid > w[0].norm_grid * 1.5);
        }
        // Quadrature oracle: grid sum of 1/|A|^2 over the pass region.
        for row in &rows {
            let l = 2048usize;
            let mut acc = 0.0;
            for j in 0..l {
                let a = 2.0 * (std::f64::consts::PI * j as f64 / l as f64).sin().abs();
                if a >= 1.0 / row.k {
                    acc += 1.0 / (a * a);
                }
            }
            let oracle = (acc / l as f64).sqrt();
            assert!(
                (row.norm_grid - oracle).abs() < 1e-9,
                "k={}: {} vs oracle {}",
                row.k,
                row.norm_grid,
                oracle
            );
        }

        // 2 - u1, alpha = delta_0: norms settle at 1/sqrt(3).
        let f2 = scalar("2 - u1");
        let rows = membership_divergence(&f2, &delta0, &ks, 2048, 512).unwrap();
        let target = (1.0f64 / 3.0).sqrt();
        assert!((rows.last().unwrap().norm_grid - target).abs() < 1e-3);
        assert!((rows.last().unwrap().norm_truncated - target).abs() < 1e-3);

        // 2 - u1, alpha = f: norms settle at 1 = |delta_0|.
        let alpha_f = VectorOverG::from_components(&[parse_ring_expr("2 - u1", &z1()).unwrap()])
            .unwrap();
        let rows = membership_divergence(&f2, &alpha_f, &ks, 2048, 512).unwrap();
        assert!((rows.last().unwrap().norm_grid - 1.0).abs() < 1e-9);
    }

    #[test]
    fn matrix_formal_and_approximate_inverse() {
        // Upper-triangular 2x2 with an invertible symbol: both inverse
        // routes must produce a two-sided inverse up to the window tail.
        let f = RingMatrix::from_entries(
            2,
            2,
            vec![
                parse_ring_expr("2 - u1", &z1()).unwrap(),
                parse_ring_expr("1", &z1()).unwrap(),
                parse_ring_expr("0", &z1()).unwrap(),
                parse_ring_expr("3 - u1 - u1^-1", &z1()).unwrap(),
            ],
        )
        .unwrap();
        let inv = l2_formal_inverse(&f, 1024, 120).unwrap();
        assert!(inv.residual < 1e-9, "formal residual {}", inv.residual);
        let id = RingMatrix::identity(z1(), 2);
        let right_res = f.matmul(&inv.xi).unwrap().sub(&id).unwrap().l2_norm();
        assert!(right_res < 1e-9, "right residual {right_res}");

        let config = ApproxInverseConfig {
            k: 64.0,
            grid: 1024,
            window: WindowChoice::Fixed(120),
            mass_limit: 1.0,
        };
        let approx = approximate_inverse(&f, &config).unwrap();
        assert!(approx.residual_left < 1e-8);
        assert!(approx.residual_right < 1e-8);
        assert!(approx.op_norm_bound <= 1.0 + 1e-6);
        // The cutoff inverse agrees with the exact one here: the symbol
        // is bounded below, so the cutoff never activates.
        let gap = approx.xi.sub(&inv.xi).unwrap().l2_norm();
        assert!(gap < 1e-8, "xi gap {gap}");

        // r(xi) really right-inverts r(f) on a test vector.
        let mut s = Stream::from_seed(5);
        let zeta = VectorOverG::from_components(&[
            crate::groupring::RingElement::from_terms(
                z1(),
                (0..3).map(|_| (GroupElement::Vector(vec![s.next_int(-3, 3)]), s.next_f64())),
            )
            .unwrap(),
            crate::groupring::RingElement::from_terms(
                z1(),
                (0..3).map(|_| (GroupElement::Vector(vec![s.next_int(-3, 3)]), s.next_f64())),
            )
            .unwrap(),
        ])
        .unwrap();
        let roundtrip =
            right_apply(&inv.xi.matmul(&f).unwrap(), &zeta).unwrap();
        assert!(roundtrip.sub(&zeta).unwrap().l2_norm() < 1e-8);
    }

    #[test]
    fn auto_window_meets_mass_limit() {
        let f = scalar("2 - u1");
        let config = ApproxInverseConfig::new(8.0, 1);
        let inv = approximate_inverse(&f, &config).unwrap();
        assert!(inv.truncation_fraction <= 1e-6);
        assert!(inv.window >= 4);
    }
}
