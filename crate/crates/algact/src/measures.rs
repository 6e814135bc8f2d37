//! Base probability laws on R^k / Z^k with exact Fourier evaluators and
//! samplers, the quadratic Fourier bound used to certify product tails,
//! and the l^p non-extendability witness construction.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::Stream;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// Per-coordinate factor of a product measure.
#[derive(Clone, Debug, PartialEq)]
pub enum MeasureKind {
    /// Uniform on the integers {-n, ..., n}. n = 0 is the point mass at 0.
    UniformInt { n: u32 },
    /// Symmetric two-sided geometric: weight of l is (1/3) 2^{-|l|}.
    GeometricSym,
    /// Characterized by its transform exp(-delta t^2); the real-space
    /// variance delta / (2 pi^2) is derived, never entered by hand.
    Gaussian { delta: f64 },
}

/// A probability law on R^k with exact transform, sampler, and moments.
#[derive(Clone, Debug, PartialEq)]
pub enum BaseMeasure {
    /// i.i.d. product of `dim` copies of one factor.
    Product { kind: MeasureKind, dim: usize },
    /// Law of X + Y with X, Y independent.
    Convolution(Box<BaseMeasure>, Box<BaseMeasure>),
    /// Finite atom list; probabilities must sum to 1.
    Discrete { dim: usize, atoms: Vec<(Vec<f64>, f64)> },
}

/// Dirichlet kernel: transform of the uniform measure on {-n..n}.
/// Evaluated through the fractional part so integer t gives exactly 1.
pub fn dirichlet_kernel(n: u32, t: f64) -> f64 {
    let f = t - t.round();
    if f == 0.0 {
        return 1.0;
    }
    let m = (2 * n + 1) as f64;
    (m * std::f64::consts::PI * f).sin() / (m * (std::f64::consts::PI * f).sin())
}

fn geom_fourier_1d(t: f64) -> f64 {
    // Closed form of sum (1/3) 2^{-|l|} e^{2 pi i l t}.
    1.0 / (5.0 - 4.0 * (TWO_PI * t).cos())
}

impl BaseMeasure {
    pub fn uniform_int(n: u32, dim: usize) -> Self {
        BaseMeasure::Product { kind: MeasureKind::UniformInt { n }, dim }
    }

    pub fn geometric_sym(dim: usize) -> Self {
        BaseMeasure::Product { kind: MeasureKind::GeometricSym, dim }
    }

    pub fn gaussian(delta: f64, dim: usize) -> Self {
        BaseMeasure::Product { kind: MeasureKind::Gaussian { delta }, dim }
    }

    pub fn dirac(dim: usize) -> Self {
        BaseMeasure::uniform_int(0, dim)
    }

    pub fn convolution(a: BaseMeasure, b: BaseMeasure) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(Error::DimensionMismatch("convolution factor dimensions".into()));
        }
        Ok(BaseMeasure::Convolution(Box::new(a), Box::new(b)))
    }

    pub fn discrete(dim: usize, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if atoms.is_empty() || atoms.iter().any(|(x, _)| x.len() != dim) {
            return Err(Error::MeasureUnsupported("bad atom list".into()));
        }
        if atoms.iter().any(|&(_, p)| p < 0.0) {
            return Err(Error::MeasureUnsupported("negative atom mass".into()));
        }
        let total: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::MeasureUnsupported(format!(
                "atom masses sum to {total}, not 1"
            )));
        }
        Ok(BaseMeasure::Discrete { dim, atoms })
    }

    pub fn dim(&self) -> usize {
        match self {
            BaseMeasure::Product { dim, .. } => *dim,
            BaseMeasure::Convolution(a, _) => a.dim(),
            BaseMeasure::Discrete { dim, .. } => *dim,
        }
    }

    /// True when every sample is integer-valued.
    pub fn is_integer_valued(&self) -> bool {
        match self {
            BaseMeasure::Product { kind, .. } => {
                matches!(kind, MeasureKind::UniformInt { .. } | MeasureKind::GeometricSym)
            }
            BaseMeasure::Convolution(a, b) => a.is_integer_valued() && b.is_integer_valued(),
            BaseMeasure::Discrete { atoms, .. } => atoms
                .iter()
                .all(|(x, _)| x.iter().all(|v| v.fract() == 0.0)),
        }
    }

    /// Exact transform: integral of exp(2 pi i <t, x>).
    pub fn fourier(&self, t: &[f64]) -> Complex64 {
        debug_assert_eq!(t.len(), self.dim());
        match self {
            BaseMeasure::Product { kind, .. } => {
                let mut acc = Complex64::new(1.0, 0.0);
                for &tj in t {
                    let factor = match kind {
                        MeasureKind::UniformInt { n } => dirichlet_kernel(*n, tj),
                        MeasureKind::GeometricSym => geom_fourier_1d(tj),
                        MeasureKind::Gaussian { delta } => (-delta * tj * tj).exp(),
                    };
                    acc *= factor;
                }
                acc
            }
            BaseMeasure::Convolution(a, b) => a.fourier(t) * b.fourier(t),
            BaseMeasure::Discrete { atoms, .. } => atoms
                .iter()
                .map(|(x, p)| {
                    let phase: f64 =
                        TWO_PI * t.iter().zip(x).map(|(ti, xi)| ti * xi).sum::<f64>();
                    Complex64::from_polar(*p, phase)
                })
                .sum(),
        }
    }

    /// One-dimensional transform along coordinate j, i.e. at t e_j.
    pub fn fourier_axis(&self, j: usize, t: f64) -> Complex64 {
        let mut v = vec![0.0; self.dim()];
        v[j] = t;
        self.fourier(&v)
    }

    /// One i.i.d. draw from the given stream.
    pub fn sample(&self, stream: &mut Stream) -> Vec<f64> {
        match self {
            BaseMeasure::Product { kind, dim } => (0..*dim)
                .map(|_| match kind {
                    MeasureKind::UniformInt { n } => {
                        stream.next_int(-(*n as i64), *n as i64) as f64
                    }
                    MeasureKind::GeometricSym => {
                        let u = stream.next_f64();
                        if u < 1.0 / 3.0 {
                            0.0
                        } else {
                            // Magnitude geometric(1/2) on {1, 2, ...},
                            // truncated at 64 (mass error below 2^-63).
                            let bits = stream.next_u64();
                            let mag = ((bits.trailing_zeros() + 1).min(64)) as f64;
                            let sign = if bits >> 63 == 0 { 1.0 } else { -1.0 };
                            sign * mag
                        }
                    }
                    MeasureKind::Gaussian { delta } => {
                        let sigma = (delta / (2.0 * std::f64::consts::PI.powi(2))).sqrt();
                        sigma * stream.next_gaussian()
                    }
                })
                .collect(),
            BaseMeasure::Convolution(a, b) => {
                let xa = a.sample(stream);
                let xb = b.sample(stream);
                xa.iter().zip(&xb).map(|(p, q)| p + q).collect()
            }
            BaseMeasure::Discrete { dim, atoms } => {
                let u = stream.next_f64();
                let mut cum = 0.0;
                for (x, p) in atoms {
                    cum += p;
                    if u < cum {
                        return x.clone();
                    }
                }
                atoms.last().map(|(x, _)| x.clone()).unwrap_or_else(|| vec![0.0; *dim])
            }
        }
    }

    pub fn mean(&self) -> Vec<f64> {
        match self {
            BaseMeasure::Product { dim, .. } => vec![0.0; *dim],
            BaseMeasure::Convolution(a, b) => {
                a.mean().iter().zip(b.mean()).map(|(p, q)| p + q).collect()
            }
            BaseMeasure::Discrete { dim, atoms } => {
                let mut m = vec![0.0; *dim];
                for (x, p) in atoms {
                    for (mi, xi) in m.iter_mut().zip(x) {
                        *mi += p * xi;
                    }
                }
                m
            }
        }
    }

    /// Total second moment: integral of |x|_2^2.
    pub fn second_moment(&self) -> f64 {
        match self {
            BaseMeasure::Product { kind, dim } => {
                let per_coord = match kind {
                    MeasureKind::UniformInt { n } => {
                        let n = *n as f64;
                        n * (n + 1.0) / 3.0
                    }
                    // sum (1/3) 2^{-|l|} l^2 = (2/3) sum_{l>=1} 2^{-l} l^2 = 4
                    MeasureKind::GeometricSym => 4.0,
                    MeasureKind::Gaussian { delta } => {
                        delta / (2.0 * std::f64::consts::PI.powi(2))
                    }
                };
                per_coord * *dim as f64
            }
            BaseMeasure::Convolution(a, b) => {
                let cross: f64 = a.mean().iter().zip(b.mean()).map(|(p, q)| p * q).sum();
                a.second_moment() + b.second_moment() + 2.0 * cross
            }
            BaseMeasure::Discrete { atoms, .. } => atoms
                .iter()
                .map(|(x, p)| p * x.iter().map(|v| v * v).sum::<f64>())
                .sum(),
        }
    }

    /// Constant C with |1 - transform(t)| <= C |t|_2^2 everywhere, namely
    /// C = 2 pi^2 m2 from the mean-zero second-order expansion. Rejects
    /// measures with nonzero mean (no such quadratic bound exists then).
    pub fn fourier_quadratic_bound(&self) -> Result<f64> {
        let mean = self.mean();
        if mean.iter().any(|m| m.abs() > 1e-12) {
            return Err(Error::MeasureUnsupported(
                "quadratic bound needs a mean-zero measure".into(),
            ));
        }
        let m2 = self.second_moment();
        if !m2.is_finite() {
            return Err(Error::MeasureUnsupported(
                "quadratic bound needs a finite second moment".into(),
            ));
        }
        Ok(2.0 * std::f64::consts::PI.powi(2) * m2)
    }

    pub fn describe(&self) -> String {
        match self {
            BaseMeasure::Product { kind, dim } => {
                let base = match kind {
                    MeasureKind::UniformInt { n } => format!("uniformint({n})"),
                    MeasureKind::GeometricSym => "geom2".into(),
                    MeasureKind::Gaussian { delta } => format!("gauss({delta})"),
                };
                format!("{base}^{dim}")
            }
            BaseMeasure::Convolution(a, b) => {
                format!("conv({},{})", a.describe(), b.describe())
            }
            BaseMeasure::Discrete { atoms, .. } => format!("atoms[{}]", atoms.len()),
        }
    }
}

/// Parse measure spec strings: `uniformint(2)^3`, `geom2^1`, `gauss(0.1)`,
/// `conv(geom2^1,gauss(0.05))`, `dirac`.
pub fn parse_measure(text: &str) -> Result<BaseMeasure> {
    let (m, rest) = parse_measure_inner(text.trim())?;
    if !rest.trim().is_empty() {
        return Err(Error::Usage(format!("trailing input in measure spec: `{rest}`")));
    }
    Ok(m)
}

fn parse_measure_inner(text: &str) -> Result<(BaseMeasure, &str)> {
    let text = text.trim_start();
    let take_paren = |t: &'static str, text: &str| -> Option<(String, usize)> {
        let rest = text.strip_prefix(t)?;
        let rest = rest.strip_prefix('(')?;
        let close = rest.find(')')?;
        Some((rest[..close].to_string(), t.len() + 1 + close + 1))
    };
    let (base, consumed): (BaseMeasure, usize) = if let Some((arg, used)) =
        take_paren("uniformint", text)
    {
        let n: u32 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad uniformint arg `{arg}`")))?;
        (BaseMeasure::uniform_int(n, 1), used)
    } else if let Some((arg, used)) = take_paren("gauss", text) {
        let d: f64 = arg
            .trim()
            .parse()
            .map_err(|_| Error::Usage(format!("bad gauss arg `{arg}`")))?;
        if d <= 0.0 {
            return Err(Error::Usage("gauss needs delta > 0".into()));
        }
        (BaseMeasure::gaussian(d, 1), used)
    } else if let Some(rest) = text.strip_prefix("conv(") {
        let (a, after_a) = parse_measure_inner(rest)?;
        let after_a = after_a.trim_start();
        let after_comma = after_a
            .strip_prefix(',')
            .ok_or_else(|| Error::Usage("conv needs two comma-separated parts".into()))?;
        let (b, after_b) = parse_measure_inner(after_comma)?;
        let after_b = after_b.trim_start();
        let tail = after_b
            .strip_prefix(')')
            .ok_or_else(|| Error::Usage("unclosed conv(...)".into()))?;
        let conv = BaseMeasure::convolution(a, b)?;
        let offset = text.len() - tail.len();
        (conv, offset)
    } else if let Some(_rest) = text.strip_prefix("geom2") {
        (BaseMeasure::geometric_sym(1), "geom2".len())
    } else if let Some(_rest) = text.strip_prefix("dirac") {
        (BaseMeasure::dirac(1), "dirac".len())
    } else {
        return Err(Error::Usage(format!("unknown measure spec `{text}`")));
    };
    let mut rest = &text[consumed..];
    let mut measure = base;
    if let Some(after) = rest.strip_prefix('^') {
        let digits: String = after.chars().take_while(|c| c.is_ascii_digit()).collect();
        if digits.is_empty() {
            return Err(Error::Usage("expected dimension after `^`".into()));
        }
        let k: usize = digits.parse().unwrap();
        if k == 0 {
            return Err(Error::Usage("dimension must be at least 1".into()));
        }
        measure = match measure {
            BaseMeasure::Product { kind, .. } => BaseMeasure::Product { kind, dim: k },
            other => {
                if k != other.dim() {
                    return Err(Error::Usage(
                        "cannot re-dimension a composite measure".into(),
                    ));
                }
                other
            }
        };
        rest = &after[digits.len()..];
    }
    Ok((measure, rest))
}

// ---------------------------------------------------------------------------
// l^p non-extendability witness.
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, serde::Serialize)]
pub struct NonextendRow {
    pub n: u32,
    pub t_n: f64,
    /// Chosen block size, ceil(2^-n / |t_n|^p).
    pub block_size: f64,
    pub one_minus_fourier: f64,
    /// Running sum of |1 - transform(t_n e_j)| * block_size.
    pub divergent_partial: f64,
    /// Running sum of |t_n|^p * block_size.
    pub lp_partial: f64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct NonextendReport {
    pub coordinate: usize,
    pub p: f64,
    pub rows: Vec<NonextendRow>,
}

/// Build the two-column divergence/boundedness table showing why the
/// convolution extension cannot reach l^p vectors for p > 2: frequencies
/// t_n with |1 - transform(t_n e_j)| >= 2^n |t_n|^p and |t_n| < 2^{-n/p},
/// and block sizes making the l^p mass summable while the transform
/// deficits add at least 1 per row.
pub fn nonextendability_witness(
    nu: &BaseMeasure,
    p: f64,
    terms: u32,
) -> Result<NonextendReport> {
    if p <= 2.0 {
        return Err(Error::MeasureUnsupported(format!(
            "construction needs p > 2, got {p}"
        )));
    }
    if nu.second_moment() == 0.0 {
        return Err(Error::NoWitness);
    }
    let k = nu.dim();
    'coords: for j in 0..k {
        let mut rows: Vec<NonextendRow> = Vec::with_capacity(terms as usize);
        let mut divergent = 0.0;
        let mut lp = 0.0;
        for n in 1..=terms {
            let mut t = 0.5 * (2.0_f64).powf(-(n as f64) / p);
            if let Some(prev) = rows.last() {
                t = t.min(prev.t_n / 2.0);
            }
            let mut found = None;
            for _ in 0..4000 {
                let gap = (Complex64::new(1.0, 0.0) - nu.fourier_axis(j, t)).norm();
                let needed = (2.0_f64).powi(n as i32) * t.powf(p);
                if gap >= needed && gap < 0.5 && gap > 0.0 {
                    found = Some((t, gap));
                    break;
                }
                t *= 0.5;
                if t < 1e-200 {
                    break;
                }
            }
            let Some((t, gap)) = found else {
                continue 'coords;
            };
            let block = (2.0_f64.powi(-(n as i32)) / t.powf(p)).ceil().max(1.0);
            divergent += gap * block;
            lp += t.powf(p) * block;
            rows.push(NonextendRow {
                n,
                t_n: t,
                block_size: block,
                one_minus_fourier: gap,
                divergent_partial: divergent,
                lp_partial: lp,
            });
        }
        return Ok(NonextendReport { coordinate: j, p, rows });
    }
    Err(Error::NoWitness)
}
