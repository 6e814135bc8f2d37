//! Sparse group-ring and matrix arithmetic: convolution, involution,
//! left/right convolution operators, matrix products and l2 norms.
//!
//! Coefficients are f64. Integer and dyadic data stays exact; everything
//! tolerance-gated elsewhere accounts for float rounding.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::groups::{GroupElement, GroupSpec};

/// Finitely supported coefficient map G -> R with convolution product.
#[derive(Clone, Debug, PartialEq)]
pub struct RingElement {
    spec: GroupSpec,
    coeffs: BTreeMap<GroupElement, f64>,
}

impl RingElement {
    pub fn zero(spec: GroupSpec) -> Self {
        RingElement { spec, coeffs: BTreeMap::new() }
    }

    pub fn delta(spec: GroupSpec, g: GroupElement) -> Result<Self> {
        Self::scaled_delta(spec, g, 1.0)
    }

    pub fn scaled_delta(spec: GroupSpec, g: GroupElement, c: f64) -> Result<Self> {
        if !spec.contains(&g) {
            return Err(Error::BackendMismatch("delta element outside group".into()));
        }
        let mut coeffs = BTreeMap::new();
        if c != 0.0 {
            coeffs.insert(g, c);
        }
        Ok(RingElement { spec, coeffs })
    }

    /// Identity of the convolution product.
    pub fn one(spec: GroupSpec) -> Self {
        let e = spec.identity();
        Self::delta(spec, e).expect("identity belongs to its own group")
    }

    pub fn from_terms(
        spec: GroupSpec,
        terms: impl IntoIterator<Item = (GroupElement, f64)>,
    ) -> Result<Self> {
        let mut out = RingElement::zero(spec);
        for (g, c) in terms {
            out.add_term(g, c)?;
        }
        Ok(out)
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn add_term(&mut self, g: GroupElement, c: f64) -> Result<()> {
        if !self.spec.contains(&g) {
            return Err(Error::BackendMismatch("term outside group".into()));
        }
        let entry = self.coeffs.entry(g.clone()).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coeffs.remove(&g);
        }
        Ok(())
    }

    pub fn coeff(&self, g: &GroupElement) -> f64 {
        self.coeffs.get(g).copied().unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GroupElement, f64)> {
        self.coeffs.iter().map(|(g, &c)| (g, c))
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.coeffs.keys()
    }

    pub fn support_size(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Largest max-norm of a support vector (free abelian only; 0 for
    /// finite backends).
    pub fn support_radius(&self) -> usize {
        self.coeffs
            .keys()
            .map(|g| match g {
                GroupElement::Vector(v) => {
                    v.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0)
                }
                GroupElement::Index(_) => 0,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn scale(&self, c: f64) -> Self {
        if c == 0.0 {
            return RingElement::zero(self.spec.clone());
        }
        RingElement {
            spec: self.spec.clone(),
            coeffs: self.coeffs.iter().map(|(g, &v)| (g.clone(), v * c)).collect(),
        }
    }

    pub fn add(&self, other: &RingElement) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::BackendMismatch("mixed group backends in add".into()));
        }
        let mut out = self.clone();
        for (g, c) in other.terms() {
            out.add_term(g.clone(), c)?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RingElement) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Convolution: (a*b)(g) = sum_h a(h) b(h^{-1} g).
    pub fn convolve(&self, other: &RingElement) -> Result<Self> {
        if self.spec != other.spec {
            return Err(Error::BackendMismatch("mixed group backends in convolve".into()));
        }
        let mut out = RingElement::zero(self.spec.clone());
        for (h, a) in self.terms() {
            for (k, b) in other.terms() {
                let g = self.spec.multiply(h, k)?;
                out.add_term(g, a * b)?;
            }
        }
        Ok(out)
    }

    /// Involution: a*(g) = a(g^{-1}) (real coefficients, no conjugation).
    pub fn star(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(g, &c)| (self.spec.invert(g).expect("support vetted"), c))
            .collect();
        RingElement { spec: self.spec.clone(), coeffs }
    }

    /// Left translate: (g.a)(x) = a(g^{-1} x), i.e. delta_g * a.
    pub fn translate_left(&self, g: &GroupElement) -> Result<Self> {
        let d = RingElement::delta(self.spec.clone(), g.clone())?;
        d.convolve(self)
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn l1_norm(&self) -> f64 {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    pub fn inner(&self, other: &RingElement) -> f64 {
        self.terms().map(|(g, c)| c * other.coeff(g)).sum()
    }

    /// Largest distance of any coefficient to the nearest integer.
    pub fn max_dist_to_int(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| (c - c.round()).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        self.max_dist_to_int() <= tol
    }

    /// Round every coefficient to the nearest integer, dropping zeros.
    pub fn round_to_integral(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter_map(|(g, &c)| {
                let r = c.round();
                (r != 0.0).then(|| (g.clone(), r))
            })
            .collect();
        RingElement { spec: self.spec.clone(), coeffs }
    }

    /// Drop coefficients with |c| <= threshold.
    pub fn prune(&self, threshold: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .filter(|(_, &c)| c.abs() > threshold)
            .map(|(g, &c)| (g.clone(), c))
            .collect();
        RingElement { spec: self.spec.clone(), coeffs }
    }
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        crate::expr::format_ring_expr(self, f)
    }
}

/// Matrix of ring elements, all sharing one group backend.
#[derive(Clone, Debug, PartialEq)]
pub struct RingMatrix {
    pub rows: usize,
    pub cols: usize,
    entries: Vec<RingElement>,
}

impl RingMatrix {
    pub fn zero(spec: GroupSpec, rows: usize, cols: usize) -> Self {
        let entries = (0..rows * cols)
            .map(|_| RingElement::zero(spec.clone()))
            .collect();
        RingMatrix { rows, cols, entries }
    }

    /// delta_1 tensor id: the identity for the matrix convolution product.
    pub fn identity(spec: GroupSpec, n: usize) -> Self {
        let mut m = RingMatrix::zero(spec.clone(), n, n);
        for i in 0..n {
            *m.entry_mut(i, i) = RingElement::one(spec.clone());
        }
        m
    }

    pub fn from_entries(rows: usize, cols: usize, entries: Vec<RingElement>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for {}x{} matrix",
                entries.len(),
                rows,
                cols
            )));
        }
        let spec = entries[0].spec().clone();
        if entries.iter().any(|e| *e.spec() != spec) {
            return Err(Error::BackendMismatch("matrix entries mix backends".into()));
        }
        Ok(RingMatrix { rows, cols, entries })
    }

    pub fn scalar(elem: RingElement) -> Self {
        RingMatrix { rows: 1, cols: 1, entries: vec![elem] }
    }

    pub fn spec(&self) -> &GroupSpec {
        self.entries[0].spec()
    }

    pub fn entry(&self, i: usize, j: usize) -> &RingElement {
        &self.entries[i * self.cols + j]
    }

    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut RingElement {
        &mut self.entries[i * self.cols + j]
    }

    pub fn entries(&self) -> &[RingElement] {
        &self.entries
    }

    /// Entrywise convolution-matrix product: (a b)_{ij} = sum_l a_il * b_lj.
    pub fn matmul(&self, other: &RingMatrix) -> Result<RingMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RingMatrix::zero(self.spec().clone(), self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = RingElement::zero(self.spec().clone());
                for l in 0..self.cols {
                    acc = acc.add(&self.entry(i, l).convolve(other.entry(l, j))?)?;
                }
                *out.entry_mut(i, j) = acc;
            }
        }
        Ok(out)
    }

    /// Conjugate transpose: (a*)_{ij} = (a_{ji})*.
    pub fn star(&self) -> RingMatrix {
        let mut out = RingMatrix::zero(self.spec().clone(), self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.entry_mut(j, i) = self.entry(i, j).star();
            }
        }
        out
    }

    pub fn add(&self, other: &RingMatrix) -> Result<RingMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(Error::DimensionMismatch("matrix add shapes".into()));
        }
        let entries: Result<Vec<RingElement>> = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a.add(b))
            .collect();
        Ok(RingMatrix { rows: self.rows, cols: self.cols, entries: entries? })
    }

    pub fn sub(&self, other: &RingMatrix) -> Result<RingMatrix> {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, c: f64) -> RingMatrix {
        RingMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|e| e.scale(c)).collect(),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.entries.iter().map(|e| e.l2_norm_sq()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn support_radius(&self) -> usize {
        self.entries.iter().map(|e| e.support_radius()).max().unwrap_or(0)
    }

    /// Union of entry supports, sorted.
    pub fn support_union(&self) -> Vec<GroupElement> {
        let mut set: std::collections::BTreeSet<GroupElement> = Default::default();
        for e in &self.entries {
            set.extend(e.support().cloned());
        }
        set.into_iter().collect()
    }

    /// Row i as a finitely supported map G -> R^{cols}.
    pub fn row_as_vector(&self, i: usize) -> VectorOverG {
        let mut v = VectorOverG::zero(self.spec().clone(), self.cols);
        for j in 0..self.cols {
            for (g, c) in self.entry(i, j).terms() {
                v.add_term(g.clone(), j, c).expect("entry support vetted");
            }
        }
        v
    }
}

/// Finitely supported map G -> R^k.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorOverG {
    spec: GroupSpec,
    components: usize,
    values: BTreeMap<GroupElement, Vec<f64>>,
}

impl VectorOverG {
    pub fn zero(spec: GroupSpec, components: usize) -> Self {
        VectorOverG { spec, components, values: BTreeMap::new() }
    }

    /// Pack scalar ring elements as the components of one vector.
    pub fn from_components(parts: &[RingElement]) -> Result<Self> {
        let spec = parts[0].spec().clone();
        let mut v = VectorOverG::zero(spec, parts.len());
        for (l, p) in parts.iter().enumerate() {
            if *p.spec() != v.spec {
                return Err(Error::BackendMismatch("components mix backends".into()));
            }
            for (g, c) in p.terms() {
                v.add_term(g.clone(), l, c)?;
            }
        }
        Ok(v)
    }

    pub fn component(&self, l: usize) -> RingElement {
        let mut out = RingElement::zero(self.spec.clone());
        for (g, vals) in &self.values {
            if vals[l] != 0.0 {
                out.add_term(g.clone(), vals[l]).expect("support vetted");
            }
        }
        out
    }

    pub fn spec(&self) -> &GroupSpec {
        &self.spec
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn add_term(&mut self, g: GroupElement, l: usize, c: f64) -> Result<()> {
        if !self.spec.contains(&g) {
            return Err(Error::BackendMismatch("term outside group".into()));
        }
        if l >= self.components {
            return Err(Error::DimensionMismatch("component index".into()));
        }
        let entry = self.values.entry(g.clone()).or_insert_with(|| vec![0.0; self.components]);
        entry[l] += c;
        if entry.iter().all(|&x| x == 0.0) {
            self.values.remove(&g);
        }
        Ok(())
    }

    pub fn value(&self, g: &GroupElement) -> Vec<f64> {
        self.values.get(g).cloned().unwrap_or_else(|| vec![0.0; self.components])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&GroupElement, &Vec<f64>)> {
        self.values.iter()
    }

    pub fn support(&self) -> impl Iterator<Item = &GroupElement> {
        self.values.keys()
    }

    pub fn support_size(&self) -> usize {
        self.values.len()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.values().flat_map(|v| v.iter().map(|c| c * c)).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn sub(&self, other: &VectorOverG) -> Result<VectorOverG> {
        if self.components != other.components {
            return Err(Error::DimensionMismatch("vector sub components".into()));
        }
        let mut out = self.clone();
        for (g, vals) in other.entries() {
            for (l, &c) in vals.iter().enumerate() {
                out.add_term(g.clone(), l, -c)?;
            }
        }
        Ok(out)
    }

    pub fn max_dist_to_int(&self) -> f64 {
        self.values
            .values()
            .flat_map(|v| v.iter().map(|c| (c - c.round()).abs()))
            .fold(0.0, f64::max)
    }

    pub fn is_integral(&self, tol: f64) -> bool {
        self.max_dist_to_int() <= tol
    }

    pub fn round_to_integral(&self) -> VectorOverG {
        let mut out = VectorOverG::zero(self.spec.clone(), self.components);
        for (g, vals) in &self.values {
            for (l, &c) in vals.iter().enumerate() {
                let r = c.round();
                if r != 0.0 {
                    out.add_term(g.clone(), l, r).expect("support vetted");
                }
            }
        }
        out
    }
}

/// Right convolution operator: xi is rows x cols acting on vectors with
/// `rows` components, producing `cols` components:
/// (r(xi) zeta)(g)(j) = sum_l sum_h zeta(h)(l) xi_{lj}(h^{-1} g).
pub fn right_apply(xi: &RingMatrix, zeta: &VectorOverG) -> Result<VectorOverG> {
    if zeta.components() != xi.rows {
        return Err(Error::DimensionMismatch(format!(
            "right_apply: vector has {} components, matrix has {} rows",
            zeta.components(),
            xi.rows
        )));
    }
    if xi.spec() != zeta.spec() {
        return Err(Error::BackendMismatch("right_apply backends differ".into()));
    }
    let spec = xi.spec().clone();
    let mut out = VectorOverG::zero(spec.clone(), xi.cols);
    for (h, vals) in zeta.entries() {
        for (l, &c) in vals.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for j in 0..xi.cols {
                for (s, x) in xi.entry(l, j).terms() {
                    let g = spec.multiply(h, s)?;
                    out.add_term(g, j, c * x)?;
                }
            }
        }
    }
    Ok(out)
}

/// Left convolution operator: xi is rows x cols acting on vectors with
/// `cols` components, producing `rows` components:
/// (lambda(xi) zeta)(g)(j) = sum_l sum_h xi_{jl}(h) zeta(h^{-1} g)(l).
pub fn left_apply(xi: &RingMatrix, zeta: &VectorOverG) -> Result<VectorOverG> {
    if zeta.components() != xi.cols {
        return Err(Error::DimensionMismatch(format!(
            "left_apply: vector has {} components, matrix has {} cols",
            zeta.components(),
            xi.cols
        )));
    }
    if xi.spec() != zeta.spec() {
        return Err(Error::BackendMismatch("left_apply backends differ".into()));
    }
    let spec = xi.spec().clone();
    let mut out = VectorOverG::zero(spec.clone(), xi.rows);
    for (h, vals) in zeta.entries() {
        for (l, &c) in vals.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            for j in 0..xi.rows {
                for (s, x) in xi.entry(j, l).terms() {
                    let g = spec.multiply(s, h)?;
                    out.add_term(g, j, x * c)?;
                }
            }
        }
    }
    Ok(out)
}
