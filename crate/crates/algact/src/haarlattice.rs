//! Exact finite-group measure calculus: convolution powers converging to
//! Haar measures of joins and generated subgroups, the largest-subgroup
//! search under closed predicate classes, and the coset-support check.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::groups::{enumerate_subgroups, subgroup_generate, FiniteGroup, GroupSpec, SubgroupSet};
use crate::rng::Stream;

/// Probability vector on a finite group.
#[derive(Clone, Debug)]
pub struct FiniteMeasure {
    group: Arc<FiniteGroup>,
    probs: Vec<f64>,
}

impl PartialEq for FiniteMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.same_group(other).is_ok() && self.probs == other.probs
    }
}

impl FiniteMeasure {
    pub fn new(spec: &GroupSpec, probs: Vec<f64>) -> Result<Self> {
        let group = spec.finite_group()?.clone();
        if probs.len() != group.order {
            return Err(Error::DimensionMismatch(format!(
                "measure has {} entries for order {}",
                probs.len(),
                group.order
            )));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(Error::MeasureUnsupported("negative or non-finite mass".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::MeasureUnsupported(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(FiniteMeasure { group, probs })
    }

    pub fn point_mass(spec: &GroupSpec, element: usize) -> Result<Self> {
        let group = spec.finite_group()?.clone();
        if element >= group.order {
            return Err(Error::BackendMismatch("point mass outside group".into()));
        }
        let mut probs = vec![0.0; group.order];
        probs[element] = 1.0;
        Ok(FiniteMeasure { group, probs })
    }

    /// Uniform measure on an arbitrary nonempty subset.
    pub fn uniform_on(spec: &GroupSpec, subset: &[usize]) -> Result<Self> {
        let group = spec.finite_group()?.clone();
        if subset.is_empty() {
            return Err(Error::MeasureUnsupported("empty support".into()));
        }
        let mut probs = vec![0.0; group.order];
        let w = 1.0 / subset.len() as f64;
        for &i in subset {
            if i >= group.order {
                return Err(Error::BackendMismatch("support outside group".into()));
            }
            probs[i] += w;
        }
        Ok(FiniteMeasure { group, probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn group(&self) -> &Arc<FiniteGroup> {
        &self.group
    }

    pub fn support(&self) -> Vec<usize> {
        self.probs
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| (p > 1e-14).then_some(i))
            .collect()
    }

    fn same_group(&self, other: &FiniteMeasure) -> Result<()> {
        if Arc::ptr_eq(&self.group, &other.group)
            || (self.group.order == other.group.order && self.group.table == other.group.table)
        {
            Ok(())
        } else {
            Err(Error::BackendMismatch("measures live on different groups".into()))
        }
    }

    /// Rescale to total mass one. Repeated convolution powers compound
    /// the rounding drift of the total mass geometrically, so iterations
    /// renormalize each step.
    fn renormalized(mut self) -> FiniteMeasure {
        let total: f64 = self.probs.iter().sum();
        if total > 0.0 && total != 1.0 {
            self.probs.iter_mut().for_each(|p| *p /= total);
        }
        self
    }
}

/// (mu * nu)(c) = sum over ab = c of mu(a) nu(b).
pub fn convolve_fm(mu: &FiniteMeasure, nu: &FiniteMeasure) -> Result<FiniteMeasure> {
    mu.same_group(nu)?;
    let g = &mu.group;
    let mut out = vec![0.0; g.order];
    for a in 0..g.order {
        let pa = mu.probs[a];
        if pa == 0.0 {
            continue;
        }
        for b in 0..g.order {
            let pb = nu.probs[b];
            if pb != 0.0 {
                out[g.mul(a, b)] += pa * pb;
            }
        }
    }
    Ok(FiniteMeasure { group: g.clone(), probs: out })
}

/// mu*(E) = mu({x : x^{-1} in E}).
pub fn star_fm(mu: &FiniteMeasure) -> FiniteMeasure {
    let g = &mu.group;
    let probs = (0..g.order).map(|i| mu.probs[g.inverse[i]]).collect();
    FiniteMeasure { group: g.clone(), probs }
}

/// Haar (uniform) measure of a verified subgroup.
pub fn haar_of(spec: &GroupSpec, y: &SubgroupSet) -> Result<FiniteMeasure> {
    FiniteMeasure::uniform_on(spec, y.elements())
}

/// Half the l1 distance between probability vectors.
pub fn total_variation(a: &FiniteMeasure, b: &FiniteMeasure) -> f64 {
    0.5 * a
        .probs
        .iter()
        .zip(&b.probs)
        .map(|(p, q)| (p - q).abs())
        .sum::<f64>()
}

#[derive(Clone, Debug)]
pub struct IterationOutcome {
    pub measure: FiniteMeasure,
    pub iterations: usize,
}

/// Haar measure of the join of two subgroups, recovered as the limit of
/// convolution powers of m_{Y1} * m_{Y2} * m_{Y1}.
pub fn join_by_iteration(
    spec: &GroupSpec,
    y1: &SubgroupSet,
    y2: &SubgroupSet,
    tol: f64,
    maxiter: usize,
) -> Result<IterationOutcome> {
    let m1 = haar_of(spec, y1)?;
    let m2 = haar_of(spec, y2)?;
    let step = convolve_fm(&convolve_fm(&m1, &m2)?, &m1)?;
    let mut rho = step.clone();
    let mut last_step = f64::INFINITY;
    for it in 1..=maxiter {
        let next = convolve_fm(&rho, &step)?.renormalized();
        last_step = total_variation(&next, &rho);
        rho = next;
        if last_step < tol {
            return Ok(IterationOutcome { measure: rho, iterations: it });
        }
    }
    Err(Error::MaxIterExceeded { maxiter, last_step })
}

#[derive(Clone, Debug)]
pub struct SupportRecovery {
    pub measure: FiniteMeasure,
    pub subgroup: SubgroupSet,
    /// Number of convolution-power doublings performed.
    pub doublings: usize,
}

/// Limit of the convolution powers of mu* * mu, together with the
/// subgroup recovered as its support. Powers are taken by repeated
/// squaring; the limit is the Haar measure of the group generated by
/// supp(mu* * mu).
pub fn support_recovery(
    spec: &GroupSpec,
    mu: &FiniteMeasure,
    tol: f64,
    maxiter: usize,
) -> Result<SupportRecovery> {
    let nu = convolve_fm(&star_fm(mu), mu)?;
    let mut rho = nu;
    let mut last_step = f64::INFINITY;
    for it in 1..=maxiter {
        let next = convolve_fm(&rho, &rho)?.renormalized();
        last_step = total_variation(&next, &rho);
        rho = next;
        if last_step < tol {
            let group = spec.finite_group()?;
            let subgroup = SubgroupSet::new(group, rho.support())?;
            return Ok(SupportRecovery { measure: rho, subgroup, doublings: it });
        }
    }
    Err(Error::MaxIterExceeded { maxiter, last_step })
}

/// A class of measures asserted to be closed under convolution, the
/// star operation, and limits; membership is decided by the oracle.
pub struct PredicateClass {
    pub name: String,
    oracle: Box<dyn Fn(&FiniteMeasure) -> bool + Sync>,
    pub declared_closed: bool,
}

impl PredicateClass {
    pub fn new(
        name: impl Into<String>,
        declared_closed: bool,
        oracle: impl Fn(&FiniteMeasure) -> bool + Sync + 'static,
    ) -> Self {
        PredicateClass { name: name.into(), oracle: Box::new(oracle), declared_closed }
    }

    /// Measures supported inside the subgroup H.
    pub fn support_in(spec: &GroupSpec, h: &SubgroupSet) -> Result<Self> {
        let h = h.clone();
        let name = format!("supportin({:?})", h.elements());
        let _ = spec.finite_group()?;
        Ok(PredicateClass::new(name, true, move |nu: &FiniteMeasure| {
            nu.support().iter().all(|&i| h.contains(i))
        }))
    }

    /// Measures fixed by each automorphism (given as index permutations).
    pub fn invariant_under(spec: &GroupSpec, autos: Vec<Vec<usize>>) -> Result<Self> {
        let group = spec.finite_group()?;
        for a in &autos {
            if !group.is_automorphism(a) {
                return Err(Error::InvalidGroup(
                    "permutation is not a group automorphism".into(),
                ));
            }
        }
        Ok(PredicateClass::new("invariant", true, move |nu: &FiniteMeasure| {
            autos.iter().all(|perm| {
                (0..nu.probs().len())
                    .all(|i| (nu.probs()[perm[i]] - nu.probs()[i]).abs() <= 1e-12)
            })
        }))
    }

    pub fn intersection(parts: Vec<PredicateClass>) -> Self {
        let closed = parts.iter().all(|p| p.declared_closed);
        let name = parts.iter().map(|p| p.name.clone()).collect::<Vec<_>>().join(" & ");
        PredicateClass::new(name, closed, move |nu: &FiniteMeasure| {
            parts.iter().all(|p| p.contains(nu))
        })
    }

    pub fn contains(&self, nu: &FiniteMeasure) -> bool {
        (self.oracle)(nu)
    }

    /// Randomized closure audit: convolve two members, star a member,
    /// mix two members; all must stay members. Candidate members come
    /// from the supplied pool.
    pub fn probe_closure(
        &self,
        members: &[FiniteMeasure],
        probes: usize,
        stream: &mut Stream,
    ) -> Result<()> {
        let members: Vec<&FiniteMeasure> =
            members.iter().filter(|m| self.contains(m)).collect();
        if members.is_empty() {
            return Ok(());
        }
        let pick = |s: &mut Stream| members[s.next_int(0, members.len() as i64 - 1) as usize];
        for _ in 0..probes {
            let a = pick(stream);
            let b = pick(stream);
            let conv = convolve_fm(a, b)?;
            if !self.contains(&conv) {
                return Err(Error::PredicateClosureViolation(format!(
                    "{}: convolution of two members leaves the class",
                    self.name
                )));
            }
            if !self.contains(&star_fm(a)) {
                return Err(Error::PredicateClosureViolation(format!(
                    "{}: star of a member leaves the class",
                    self.name
                )));
            }
            let t = stream.next_f64();
            let mix = FiniteMeasure {
                group: a.group.clone(),
                probs: a
                    .probs
                    .iter()
                    .zip(&b.probs)
                    .map(|(p, q)| t * p + (1.0 - t) * q)
                    .collect(),
            };
            if !self.contains(&mix) {
                return Err(Error::PredicateClosureViolation(format!(
                    "{}: mixture of two members leaves the class",
                    self.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct LargestMember {
    pub subgroup: SubgroupSet,
    /// All subgroups whose Haar measure passes the predicate.
    pub certificate: Vec<SubgroupSet>,
}

/// The largest subgroup Y with Haar measure in the class: filter the full
/// subgroup lattice through the predicate and join the members. The join
/// must itself be a member; a failure there means the caller's closure
/// contract is broken and is reported as such.
pub fn largest_member_subgroup(spec: &GroupSpec, class: &PredicateClass) -> Result<LargestMember> {
    if !class.declared_closed {
        return Err(Error::PredicateClosureViolation(format!(
            "{}: class not declared closed",
            class.name
        )));
    }
    let subs = enumerate_subgroups(spec)?;
    let members: Vec<SubgroupSet> = subs
        .into_iter()
        .filter(|y| match haar_of(spec, y) {
            Ok(m) => class.contains(&m),
            Err(_) => false,
        })
        .collect();
    if members.is_empty() {
        return Err(Error::PredicateClosureViolation(format!(
            "{}: no subgroup Haar measure lies in the class",
            class.name
        )));
    }
    let mut gens: Vec<usize> = Vec::new();
    for m in &members {
        gens.extend_from_slice(m.elements());
    }
    let join = subgroup_generate(spec, &gens)?;
    let join_haar = haar_of(spec, &join)?;
    if !class.contains(&join_haar) {
        return Err(Error::PredicateClosureViolation(format!(
            "{}: join of member subgroups is not a member",
            class.name
        )));
    }
    Ok(LargestMember { subgroup: join, certificate: members })
}

#[derive(Debug, Clone)]
pub struct CosetSupport {
    /// Canonical representative (smallest element index) of the coset.
    pub coset_rep: usize,
    pub coset: Vec<usize>,
    /// Mass outside the coset; zero when the predicate contract holds.
    pub max_leak: f64,
}

/// Verify supp(nu* * nu) is inside Y, then locate the single left coset
/// of Y carrying supp(nu) and report any escaping mass.
pub fn coset_support_check(
    spec: &GroupSpec,
    nu: &FiniteMeasure,
    y: &SubgroupSet,
) -> Result<CosetSupport> {
    let group = spec.finite_group()?;
    let sym = convolve_fm(&star_fm(nu), nu)?;
    if let Some(&escape) = sym.support().iter().find(|&&i| !y.contains(i)) {
        return Err(Error::PredicateClosureViolation(format!(
            "supp(nu* * nu) contains {} outside the max-min subgroup",
            group.names[escape]
        )));
    }
    let support = nu.support();
    let anchor = *support.first().ok_or_else(|| {
        Error::MeasureUnsupported("measure has empty support".into())
    })?;
    let mut coset: Vec<usize> = y.elements().iter().map(|&h| group.mul(anchor, h)).collect();
    coset.sort_unstable();
    let in_coset = |i: usize| coset.binary_search(&i).is_ok();
    let max_leak: f64 = nu
        .probs()
        .iter()
        .enumerate()
        .filter(|(i, _)| !in_coset(*i))
        .map(|(_, &p)| p)
        .sum();
    Ok(CosetSupport { coset_rep: coset[0], coset, max_leak })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::parse_group_id;

    fn z6() -> GroupSpec {
        parse_group_id("Z/6").unwrap()
    }

    #[test]
    fn point_masses_convolve_to_product() {
        let spec = parse_group_id("S3").unwrap();
        let g = spec.finite_group().unwrap();
        let a = g.element_by_name("(12)").unwrap();
        let b = g.element_by_name("(13)").unwrap();
        let da = FiniteMeasure::point_mass(&spec, a).unwrap();
        let db = FiniteMeasure::point_mass(&spec, b).unwrap();
        let prod = convolve_fm(&da, &db).unwrap();
        assert_eq!(prod.support(), vec![g.mul(a, b)]);
    }

    #[test]
    fn haar_of_even_subgroup() {
        let spec = z6();
        let h = subgroup_generate(&spec, &[2]).unwrap();
        let m = haar_of(&spec, &h).unwrap();
        let third = 1.0 / 3.0;
        assert_eq!(m.probs(), &[third, 0.0, third, 0.0, third, 0.0]);
    }

    #[test]
    fn star_involution_and_antihomomorphism() {
        let spec = parse_group_id("S3").unwrap();
        let mut s = Stream::from_seed(21);
        for _ in 0..30 {
            let mut raw: Vec<f64> = (0..6).map(|_| s.next_f64()).collect();
            let total: f64 = raw.iter().sum();
            raw.iter_mut().for_each(|p| *p /= total);
            let mu = FiniteMeasure::new(&spec, raw).unwrap();
            let mut raw2: Vec<f64> = (0..6).map(|_| s.next_f64()).collect();
            let total2: f64 = raw2.iter().sum();
            raw2.iter_mut().for_each(|p| *p /= total2);
            let nu = FiniteMeasure::new(&spec, raw2).unwrap();

            assert_eq!(star_fm(&star_fm(&mu)), mu);
            let lhs = star_fm(&convolve_fm(&mu, &nu).unwrap());
            let rhs = convolve_fm(&star_fm(&nu), &star_fm(&mu)).unwrap();
            assert!(total_variation(&lhs, &rhs) < 1e-14);
        }
    }

    #[test]
    fn join_s3_reflections_gives_uniform() {
        let spec = parse_group_id("S3").unwrap();
        let g = spec.finite_group().unwrap();
        let y1 = subgroup_generate(&spec, &[g.element_by_name("(12)").unwrap()]).unwrap();
        let y2 = subgroup_generate(&spec, &[g.element_by_name("(13)").unwrap()]).unwrap();
        let out = join_by_iteration(&spec, &y1, &y2, 1e-12, 500).unwrap();
        let oracle = {
            let mut gens = y1.elements().to_vec();
            gens.extend_from_slice(y2.elements());
            haar_of(&spec, &subgroup_generate(&spec, &gens).unwrap()).unwrap()
        };
        assert!(total_variation(&out.measure, &oracle) < 1e-9);
        for &p in out.measure.probs() {
            assert!((p - 1.0 / 6.0).abs() < 1e-9);
        }
    }

    #[test]
    fn join_same_subgroup_is_idempotent() {
        let spec = z6();
        let y = subgroup_generate(&spec, &[2]).unwrap();
        let out = join_by_iteration(&spec, &y, &y, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(total_variation(&out.measure, &haar_of(&spec, &y).unwrap()) < 1e-15);
    }

    #[test]
    fn join_z12_generates_evens() {
        let spec = parse_group_id("Z/12").unwrap();
        let y1 = subgroup_generate(&spec, &[4]).unwrap();
        let y2 = subgroup_generate(&spec, &[6]).unwrap();
        let out = join_by_iteration(&spec, &y1, &y2, 1e-12, 500).unwrap();
        for (i, &p) in out.measure.probs().iter().enumerate() {
            let want = if i % 2 == 0 { 1.0 / 6.0 } else { 0.0 };
            assert!((p - want).abs() < 1e-9, "index {i}");
        }
    }

    #[test]
    fn support_recovery_examples() {
        let spec = z6();
        // Uniform on {1, 3}: mu* * mu generates the even subgroup.
        let mu = FiniteMeasure::uniform_on(&spec, &[1, 3]).unwrap();
        let rec = support_recovery(&spec, &mu, 1e-12, 200).unwrap();
        assert_eq!(rec.subgroup.elements(), &[0, 2, 4]);
        let oracle = haar_of(&spec, &rec.subgroup).unwrap();
        assert!(total_variation(&rec.measure, &oracle) < 1e-9);

        // Point mass: recovers the trivial subgroup.
        let dg = FiniteMeasure::point_mass(&spec, 5).unwrap();
        let rec = support_recovery(&spec, &dg, 1e-12, 200).unwrap();
        assert_eq!(rec.subgroup.elements(), &[0]);

        // Haar on the whole group is a fixed point.
        let full = subgroup_generate(&spec, &[1]).unwrap();
        let haar = haar_of(&spec, &full).unwrap();
        let rec = support_recovery(&spec, &haar, 1e-12, 200).unwrap();
        assert!(total_variation(&rec.measure, &haar) < 1e-12);
    }

    #[test]
    fn mass_on_target_subgroup_never_decreases() {
        // The proxy <rho_n, m_Z> for the target Z along the iteration.
        let spec = parse_group_id("S3").unwrap();
        let mut s = Stream::from_seed(3);
        for _ in 0..20 {
            let mut raw: Vec<f64> = (0..6).map(|_| if s.next_f64() < 0.5 { 0.0 } else { s.next_f64() }).collect();
            if raw.iter().all(|&p| p == 0.0) {
                raw[0] = 1.0;
            }
            let total: f64 = raw.iter().sum();
            raw.iter_mut().for_each(|p| *p /= total);
            let mu = FiniteMeasure::new(&spec, raw).unwrap();
            let nu = convolve_fm(&star_fm(&mu), &mu).unwrap();
            let target = subgroup_generate(&spec, &nu.support()).unwrap();
            let m_z = haar_of(&spec, &target).unwrap();
            let mut rho = nu;
            let mut prev = -f64::INFINITY;
            for _ in 0..12 {
                let proxy: f64 = rho
                    .probs()
                    .iter()
                    .zip(m_z.probs())
                    .map(|(p, q)| p * q)
                    .sum();
                assert!(proxy >= prev - 1e-12);
                prev = proxy;
                rho = convolve_fm(&rho, &rho).unwrap();
            }
        }
    }

    #[test]
    fn largest_member_supportin() {
        let spec = parse_group_id("S3").unwrap();
        let g = spec.finite_group().unwrap();
        let h = subgroup_generate(&spec, &[g.element_by_name("(12)").unwrap()]).unwrap();
        let class = PredicateClass::support_in(&spec, &h).unwrap();
        let out = largest_member_subgroup(&spec, &class).unwrap();
        assert_eq!(out.subgroup, h);
        // Members are exactly the subgroups of H.
        assert!(out.certificate.iter().all(|y| y.is_subset_of(&h)));

        let a3 = subgroup_generate(&spec, &[g.element_by_name("(123)").unwrap()]).unwrap();
        let class = PredicateClass::support_in(&spec, &a3).unwrap();
        let out = largest_member_subgroup(&spec, &class).unwrap();
        assert_eq!(out.subgroup, a3);
    }

    #[test]
    fn largest_member_is_upper_bound() {
        let spec = parse_group_id("D4").unwrap();
        let g = spec.finite_group().unwrap();
        let h = subgroup_generate(&spec, &[g.element_by_name("r").unwrap()]).unwrap();
        let class = PredicateClass::support_in(&spec, &h).unwrap();
        let out = largest_member_subgroup(&spec, &class).unwrap();
        for y in &out.certificate {
            assert!(y.is_subset_of(&out.subgroup));
        }
    }

    #[test]
    fn coset_support_examples() {
        let spec = z6();
        let y = subgroup_generate(&spec, &[2]).unwrap();
        // Uniform on {1, 3} lies in the coset 1 + Y.
        let nu = FiniteMeasure::uniform_on(&spec, &[1, 3]).unwrap();
        let out = coset_support_check(&spec, &nu, &y).unwrap();
        assert_eq!(out.coset, vec![1, 3, 5]);
        assert_eq!(out.max_leak, 0.0);

        // Haar on Y lies in Y itself.
        let out = coset_support_check(&spec, &haar_of(&spec, &y).unwrap(), &y).unwrap();
        assert_eq!(out.coset_rep, 0);
        assert_eq!(out.max_leak, 0.0);

        // A point mass lies in gY.
        let out =
            coset_support_check(&spec, &FiniteMeasure::point_mass(&spec, 5).unwrap(), &y)
                .unwrap();
        assert_eq!(out.coset, vec![1, 3, 5]);
        assert_eq!(out.max_leak, 0.0);
    }

    #[test]
    fn closure_probes_pass_for_builtins() {
        let spec = parse_group_id("Z/6").unwrap();
        let y = subgroup_generate(&spec, &[2]).unwrap();
        let class = PredicateClass::support_in(&spec, &y).unwrap();
        let mut s = Stream::from_seed(2);
        // Candidate members supported inside Y.
        let mut members = vec![haar_of(&spec, &y).unwrap()];
        for &e in y.elements() {
            members.push(FiniteMeasure::point_mass(&spec, e).unwrap());
        }
        class.probe_closure(&members, 100, &mut s).unwrap();
    }

    #[test]
    fn invariant_class_validates_automorphisms() {
        let spec = parse_group_id("(Z/2)^3").unwrap();
        let g = spec.finite_group().unwrap();
        let shift = g.shift_automorphism().unwrap();
        let class = PredicateClass::invariant_under(&spec, vec![shift]).unwrap();
        let haar_full = FiniteMeasure::uniform_on(&spec, &(0..8).collect::<Vec<_>>()).unwrap();
        assert!(class.contains(&haar_full));
        let lopsided = FiniteMeasure::point_mass(&spec, g.element_by_name("100").unwrap()).unwrap();
        assert!(!class.contains(&lopsided));

        // A non-automorphism permutation is rejected.
        let bogus = vec![1, 0, 2, 3, 4, 5, 6, 7];
        assert!(PredicateClass::invariant_under(&spec, vec![bogus]).is_err());
    }
}
