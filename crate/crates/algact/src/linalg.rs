//! Small dense complex matrices and a one-sided Jacobi SVD.
//!
//! Everything here targets the tiny matrices that arise as per-grid-point
//! symbol values (dimensions at most a few, or order-of-group by
//! order-of-group for the finite backend). No attempt is made at
//! large-scale performance.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn mul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = CMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMatrix {
        let mut out = CMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= b;
        }
        out
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let svd = self.svd();
        svd.singular.first().copied().unwrap_or(0.0)
    }

    /// Smallest singular value of the full min(rows, cols) set.
    pub fn min_singular(&self) -> f64 {
        let svd = self.svd();
        svd.singular.last().copied().unwrap_or(0.0)
    }

    /// One-sided Jacobi SVD: self = U diag(sigma) V^H with sigma sorted
    /// descending. U is rows x r, V is cols x r, r = min(rows, cols).
    pub fn svd(&self) -> Svd {
        if self.rows < self.cols {
            // Work on the adjoint and swap factors.
            let t = self.adjoint().svd();
            return Svd { u: t.v, singular: t.singular, v: t.u };
        }
        let m = self.rows;
        let n = self.cols;
        let mut a = self.clone(); // columns get orthogonalized in place
        let mut v = CMatrix::identity(n);

        let scale = self.data.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let tol = if scale > 0.0 { 1e-30 * scale * scale } else { 0.0 };

        for _sweep in 0..60 {
            let mut off = 0.0_f64;
            for p in 0..n {
                for q in (p + 1)..n {
                    // Hermitian 2x2 Gram block of columns p, q.
                    let mut app = 0.0_f64;
                    let mut aqq = 0.0_f64;
                    let mut apq = C64::new(0.0, 0.0);
                    for i in 0..m {
                        let cp = a[(i, p)];
                        let cq = a[(i, q)];
                        app += cp.norm_sqr();
                        aqq += cq.norm_sqr();
                        apq += cp.conj() * cq;
                    }
                    let mag = apq.norm();
                    off = off.max(mag);
                    if mag <= tol || mag * mag <= 1e-60 * app * aqq {
                        continue;
                    }
                    // Complex Jacobi rotation zeroing the Gram off-diagonal.
                    let phase = apq / mag;
                    let zeta = (aqq - app) / (2.0 * mag);
                    let t = if zeta >= 0.0 {
                        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                    } else {
                        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = c * t;
                    for i in 0..m {
                        let cp = a[(i, p)];
                        let cq = a[(i, q)];
                        a[(i, p)] = cp * c - cq * phase.conj() * s;
                        a[(i, q)] = cp * phase * s + cq * c;
                    }
                    for i in 0..n {
                        let vp = v[(i, p)];
                        let vq = v[(i, q)];
                        v[(i, p)] = vp * c - vq * phase.conj() * s;
                        v[(i, q)] = vp * phase * s + vq * c;
                    }
                }
            }
            if off <= tol {
                break;
            }
        }

        // Column norms are the singular values; normalize U columns.
        let mut order: Vec<usize> = (0..n).collect();
        let norms: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| a[(i, j)].norm_sqr()).sum::<f64>().sqrt())
            .collect();
        order.sort_by(|&x, &y| norms[y].partial_cmp(&norms[x]).unwrap());

        let mut u = CMatrix::zeros(m, n);
        let mut vv = CMatrix::zeros(n, n);
        let mut singular = Vec::with_capacity(n);
        for (jj, &j) in order.iter().enumerate() {
            let s = norms[j];
            singular.push(s);
            if s > 0.0 {
                for i in 0..m {
                    u[(i, jj)] = a[(i, j)] / s;
                }
            }
            for i in 0..n {
                vv[(i, jj)] = v[(i, j)];
            }
        }
        Svd { u, singular, v: vv }
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Result of [`CMatrix::svd`].
pub struct Svd {
    pub u: CMatrix,
    pub singular: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Rebuild U f(Sigma) V^H for a scalar function of the singular values.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let r = self.singular.len();
        let mut mid = CMatrix::zeros(r, r);
        for i in 0..r {
            mid[(i, i)] = C64::new(f(self.singular[i]), 0.0);
        }
        self.u.mul(&mid).mul(&self.v.adjoint())
    }

    /// V f(Sigma) U^H, the regularized pseudoinverse shape.
    pub fn apply_fn_pinv(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let r = self.singular.len();
        let mut mid = CMatrix::zeros(r, r);
        for i in 0..r {
            mid[(i, i)] = C64::new(f(self.singular[i]), 0.0);
        }
        self.v.mul(&mid).mul(&self.u.adjoint())
    }
}
