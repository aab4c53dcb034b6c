//! Blockwise scaling operators that preserve epsilon-approximate B-J
//! orthogonality without being scalar multiples of isometries, together with
//! the tools that exhibit both facts numerically.
//!
//! The three operators:
//!
//! * `l^1(X)`: scale the first term by `1 - eps`;
//! * `L^1(mu, X)`: scale the atoms in `A` by `1 - eps`;
//! * `L^p(mu, X)`, `1 < p < inf`: scale the atoms outside `A` by `1 - eps / p`.

use rand::Rng;

use crate::blockspace::{
    apply_functional, bochner_norm, inner_norm, support_functional, BochnerElement, SpaceSpec,
};
use crate::error::{Error, Result};
use crate::ortho::{
    certificate_check, is_approx_bj_orthogonal, make_orthogonal_partner, min_certificate_value,
    ApproxParam, CheckResult, Tolerances,
};
use crate::sip::sip_orthogonality_criterion;

/// Draws with norm below this are rejected.
pub const MIN_DRAW_NORM: f64 = 1e-6;
const MAX_DRAW_ATTEMPTS: usize = 100;

/// `U(f)_i = c_i f_i` with every `c_i > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalingOperator {
    factors: Vec<f64>,
}

impl ScalingOperator {
    pub fn new(factors: Vec<f64>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::BadSpec("operator needs at least one factor".into()));
        }
        if let Some(c) = factors.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(Error::BadSpec(format!(
                "scaling factor {c} must be positive and finite"
            )));
        }
        Ok(Self { factors })
    }

    pub fn uniform(n: usize, c: f64) -> Result<Self> {
        Self::new(vec![c; n])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            factors: vec![1.0; n],
        }
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }

    /// Upper bound on the operator norm.
    pub fn max_factor(&self) -> f64 {
        self.factors.iter().fold(0.0, |m: f64, &c| m.max(c))
    }
}

/// An index set `A` of atoms with nonempty complement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomPartition {
    in_a: Vec<bool>,
}

impl AtomPartition {
    pub fn new(members: &[usize], n: usize) -> Result<Self> {
        let mut in_a = vec![false; n];
        for &i in members {
            if i >= n {
                return Err(Error::BadSpec(format!(
                    "partition index {i} out of range 0..{n}"
                )));
            }
            in_a[i] = true;
        }
        if !in_a.contains(&true) {
            return Err(Error::BadSpec("partition set A must be nonempty".into()));
        }
        if !in_a.contains(&false) {
            return Err(Error::BadSpec("complement of A must be nonempty".into()));
        }
        Ok(Self { in_a })
    }

    /// `A = {0, .., k-1}`.
    pub fn leading(k: usize, n: usize) -> Result<Self> {
        Self::new(&(0..k).collect::<Vec<_>>(), n)
    }

    pub fn contains(&self, i: usize) -> bool {
        self.in_a[i]
    }

    pub fn n(&self) -> usize {
        self.in_a.len()
    }

    pub fn members(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| self.in_a[i]).collect()
    }

    pub fn complement(&self) -> Vec<usize> {
        (0..self.n()).filter(|&i| !self.in_a[i]).collect()
    }

    fn measure(&self, spec: &SpaceSpec, inside: bool) -> f64 {
        spec.weights()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.in_a[*i] == inside)
            .map(|(_, w)| w)
            .sum()
    }

    /// `mu(A)`.
    pub fn measure_a(&self, spec: &SpaceSpec) -> f64 {
        self.measure(spec, true)
    }

    /// `mu(S \ A)`.
    pub fn measure_complement(&self, spec: &SpaceSpec) -> f64 {
        self.measure(spec, false)
    }
}

fn strict_eps(eps: ApproxParam) -> Result<f64> {
    let e = eps.value();
    if e > 0.0 {
        Ok(e)
    } else {
        Err(Error::BadSpec(
            "the construction needs epsilon in (0, 1)".into(),
        ))
    }
}

fn check_partition(part: &AtomPartition, spec: &SpaceSpec) -> Result<()> {
    if part.n() == spec.n() {
        Ok(())
    } else {
        Err(Error::BadSpec(format!(
            "partition covers {} atoms, space has {}",
            part.n(),
            spec.n()
        )))
    }
}

/// `U((x_n)) = ((1 - eps) x_1, x_2, x_3, ...)` on `l^1(X)`.
pub fn sequence_l1_operator(eps: ApproxParam, spec: &SpaceSpec) -> Result<ScalingOperator> {
    let e = strict_eps(eps)?;
    if !spec.is_counting_l1() {
        return Err(Error::BadSpec(
            "sequence operator needs p = 1 and unit weights".into(),
        ));
    }
    if spec.n() < 2 {
        return Err(Error::BadSpec(
            "sequence operator needs at least two terms".into(),
        ));
    }
    let mut factors = vec![1.0; spec.n()];
    factors[0] = 1.0 - e;
    ScalingOperator::new(factors)
}

/// `U(f) = (1 - eps) f 1_A + f 1_{S \ A}` on `L^1(mu, X)`.
pub fn function_l1_operator(
    eps: ApproxParam,
    part: &AtomPartition,
    spec: &SpaceSpec,
) -> Result<ScalingOperator> {
    let e = strict_eps(eps)?;
    if spec.p() != 1.0 {
        return Err(Error::BadSpec(format!(
            "L^1 operator needs p = 1, got {}",
            spec.p()
        )));
    }
    check_partition(part, spec)?;
    ScalingOperator::new(
        (0..spec.n())
            .map(|i| if part.contains(i) { 1.0 - e } else { 1.0 })
            .collect(),
    )
}

/// `U(f) = f 1_A + (1 - eps/p) f 1_{S \ A}` on `L^p(mu, X)`, `1 < p < inf`.
pub fn function_lp_operator(
    eps: ApproxParam,
    part: &AtomPartition,
    spec: &SpaceSpec,
) -> Result<ScalingOperator> {
    let e = strict_eps(eps)?;
    if spec.p() <= 1.0 {
        return Err(Error::BadSpec(format!(
            "L^p operator needs p > 1, got {}",
            spec.p()
        )));
    }
    check_partition(part, spec)?;
    let outside = 1.0 - e / spec.p();
    ScalingOperator::new(
        (0..spec.n())
            .map(|i| if part.contains(i) { 1.0 } else { outside })
            .collect(),
    )
}

/// `1 - (1 - eps/p)^p`, the factor by which the `L^p` operator shrinks the
/// semi-inner product; it never exceeds `eps` for `p > 1`.
pub fn lp_contraction_gap(eps: f64, p: f64) -> f64 {
    1.0 - (1.0 - eps / p).powf(p)
}

pub fn apply_operator(u: &ScalingOperator, f: &BochnerElement) -> Result<BochnerElement> {
    if u.factors.len() != f.n_blocks() {
        return Err(Error::ShapeMismatch(format!(
            "operator has {} factors, element has {} blocks",
            u.factors.len(),
            f.n_blocks()
        )));
    }
    let mut out = f.clone();
    for (i, &c) in u.factors.iter().enumerate() {
        out.block_mut(i).iter_mut().for_each(|v| *v *= c);
    }
    Ok(out)
}

/// `h_alpha = x0 1_A + alpha x0 1_B` with `B = S \ A`.
pub fn h_alpha_witness(
    alpha: f64,
    part: &AtomPartition,
    x0: &[f64],
    spec: &SpaceSpec,
) -> Result<BochnerElement> {
    check_partition(part, spec)?;
    if x0.len() != spec.d() {
        return Err(Error::ShapeMismatch(format!(
            "x0 has dimension {}, blocks have {}",
            x0.len(),
            spec.d()
        )));
    }
    if (inner_norm(x0, spec.q()) - 1.0).abs() > 1e-12 {
        return Err(Error::BadSpec("x0 must be a unit vector".into()));
    }
    let mut h = spec.zero_element();
    for i in 0..spec.n() {
        let c = if part.contains(i) { 1.0 } else { alpha };
        h.block_mut(i)
            .iter_mut()
            .zip(x0)
            .for_each(|(o, v)| *o = c * v);
    }
    Ok(h)
}

/// `{0} ∪ {±10^k : k = -3..6}`.
pub fn witness_alpha_grid() -> Vec<f64> {
    let mut grid = vec![0.0];
    for k in -3..=6 {
        let a = 10f64.powi(k);
        grid.push(a);
        grid.push(-a);
    }
    grid
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsometryVerdict {
    pub is_scalar_isometry: bool,
    /// `(max r - min r) / max r` over the probed ratios `r = ||U f|| / ||f||`.
    pub spread: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Decides whether `f -> ||U f|| / ||f||` is constant, probing the witness
/// family `h_alpha` for every singleton `A = {i}` plus `trials` random elements.
pub fn is_scalar_multiple_of_isometry<R: Rng + ?Sized>(
    u: &ScalingOperator,
    spec: &SpaceSpec,
    trials: usize,
    tol: f64,
    rng: &mut R,
) -> Result<IsometryVerdict> {
    if u.factors.len() != spec.n() {
        return Err(Error::ShapeMismatch(
            "operator and space differ in atom count".into(),
        ));
    }
    let ratio = |f: &BochnerElement| -> Result<f64> {
        Ok(bochner_norm(&apply_operator(u, f)?, spec)? / bochner_norm(f, spec)?)
    };
    let mut ratios = Vec::new();
    let mut x0 = vec![0.0; spec.d()];
    x0[0] = 1.0;
    if spec.n() >= 2 {
        for i in 0..spec.n() {
            let part = AtomPartition::new(&[i], spec.n())?;
            for alpha in witness_alpha_grid() {
                ratios.push(ratio(&h_alpha_witness(alpha, &part, &x0, spec)?)?);
            }
        }
    }
    let mut drawn = 0;
    while drawn < trials {
        let f = spec.random_element(rng);
        if bochner_norm(&f, spec)? >= MIN_DRAW_NORM {
            ratios.push(ratio(&f)?);
            drawn += 1;
        }
    }
    let min_ratio = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let spread = (max_ratio - min_ratio) / max_ratio;
    Ok(IsometryVerdict {
        is_scalar_isometry: spread <= tol,
        spread,
        min_ratio,
        max_ratio,
    })
}

/// Which check produced a verdict.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Route {
    /// Minimization of `psi`.
    Direct,
    /// Closed-form minimum over support functionals.
    Certificate,
    /// Semi-inner-product criterion.
    Sip,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Direct => "direct",
            Route::Certificate => "certificate",
            Route::Sip => "sip",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RouteOutcome {
    pub route: Route,
    pub verdict: bool,
    pub margin: f64,
    pub boundary: bool,
}

impl RouteOutcome {
    pub fn new(route: Route, r: &CheckResult) -> Self {
        Self {
            route,
            verdict: r.verdict,
            margin: r.margin,
            boundary: r.boundary,
        }
    }
}

/// One draw of an orthogonal pair `(x, y)` and the verdicts on `(U x, U y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub trial: u64,
    pub spec: SpaceSpec,
    pub epsilon: f64,
    pub x: BochnerElement,
    pub y: BochnerElement,
    /// `|T_x(y)| / ||y||`; zero up to rounding since `y` is built orthogonal to `x`.
    pub premise_residual: f64,
    pub routes: Vec<RouteOutcome>,
}

impl TrialRecord {
    pub fn all_true(&self) -> bool {
        self.routes.iter().all(|r| r.verdict)
    }

    pub fn boundary(&self) -> bool {
        self.routes.iter().any(|r| r.boundary)
    }

    pub fn routes_agree(&self) -> bool {
        self.routes.windows(2).all(|w| w[0].verdict == w[1].verdict)
    }
}

/// Draws a nonzero `x` with i.i.d. normal entries, rejecting tiny norms.
pub fn draw_nonzero<R: Rng + ?Sized>(spec: &SpaceSpec, rng: &mut R) -> Result<BochnerElement> {
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let x = spec.random_element(rng);
        if bochner_norm(&x, spec)? >= MIN_DRAW_NORM {
            return Ok(x);
        }
    }
    Err(Error::DegenerateDraw(MAX_DRAW_ATTEMPTS))
}

/// Draws `x` and a B-J orthogonal partner `y != 0`.
pub fn draw_orthogonal_pair<R: Rng + ?Sized>(
    spec: &SpaceSpec,
    rng: &mut R,
) -> Result<(BochnerElement, BochnerElement)> {
    for _ in 0..MAX_DRAW_ATTEMPTS {
        let x = draw_nonzero(spec, rng)?;
        let z = spec.random_element(rng);
        let y = make_orthogonal_partner(&x, &z, spec)?;
        if bochner_norm(&y, spec)? >= MIN_DRAW_NORM {
            return Ok((x, y));
        }
    }
    Err(Error::DegenerateDraw(MAX_DRAW_ATTEMPTS))
}

/// Checks `U x ⊥_eps U y` for a random orthogonal pair `x ⊥ y`, by direct
/// minimization and by the certificate (`p = 1`) or semi-inner-product
/// (`p > 1`) criterion. Every verdict is predicted true.
pub fn preservation_trial<R: Rng + ?Sized>(
    u: &ScalingOperator,
    eps: ApproxParam,
    spec: &SpaceSpec,
    tols: &Tolerances,
    rng: &mut R,
) -> Result<TrialRecord> {
    let (x, y) = draw_orthogonal_pair(spec, rng)?;
    let t = support_functional(&x, spec)?;
    let premise_residual = apply_functional(&t, &y, spec)?.abs() / bochner_norm(&y, spec)?;

    let (ux, uy) = (apply_operator(u, &x)?, apply_operator(u, &y)?);
    let direct = is_approx_bj_orthogonal(&ux, &uy, eps, spec, tols)?;
    let second = if spec.p() == 1.0 {
        RouteOutcome::new(
            Route::Certificate,
            &certificate_check(&ux, &uy, eps, spec, tols)?,
        )
    } else {
        RouteOutcome::new(
            Route::Sip,
            &sip_orthogonality_criterion(&ux, &uy, eps, spec, tols)?,
        )
    };
    Ok(TrialRecord {
        seed: 0,
        trial: 0,
        spec: spec.clone(),
        epsilon: eps.value(),
        x,
        y,
        premise_residual,
        routes: vec![RouteOutcome::new(Route::Direct, &direct), second],
    })
}

/// Smallest `eps` with `x ⊥_eps y`: `min_{T in J(x)} |T(y)| / ||y||`.
pub fn critical_epsilon(x: &BochnerElement, y: &BochnerElement, spec: &SpaceSpec) -> Result<f64> {
    let yn = bochner_norm(y, spec)?;
    if yn == 0.0 {
        return Ok(0.0);
    }
    Ok(min_certificate_value(x, y, spec)? / yn)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TightnessReport {
    /// Largest `critical_epsilon(U x, U y) / eps` seen.
    pub max_ratio: f64,
    pub witness: (BochnerElement, BochnerElement),
}

/// Random search for orthogonal pairs whose images need a large share of `eps`.
pub fn tightness_probe<R: Rng + ?Sized>(
    u: &ScalingOperator,
    eps: ApproxParam,
    spec: &SpaceSpec,
    draws: usize,
    rng: &mut R,
) -> Result<TightnessReport> {
    let e = strict_eps(eps)?;
    let mut best: Option<TightnessReport> = None;
    for _ in 0..draws {
        let (x, y) = draw_orthogonal_pair(spec, rng)?;
        let ratio = critical_epsilon(&apply_operator(u, &x)?, &apply_operator(u, &y)?, spec)? / e;
        if best.as_ref().is_none_or(|b| ratio > b.max_ratio) {
            best = Some(TightnessReport {
                max_ratio: ratio,
                witness: (x, y),
            });
        }
    }
    best.ok_or_else(|| Error::BadSpec("tightness probe needs at least one draw".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn eps(e: f64) -> ApproxParam {
        ApproxParam::new(e).unwrap()
    }

    #[test]
    fn sequence_operator_examples() {
        let spec = SpaceSpec::counting(1.0, 2.0, 3, 1).unwrap();
        assert_eq!(
            sequence_l1_operator(eps(0.5), &spec).unwrap().factors(),
            &[0.5, 1.0, 1.0]
        );
        let tiny = sequence_l1_operator(eps(1e-12), &spec).unwrap();
        assert!(tiny.factors().iter().all(|c| (c - 1.0).abs() <= 1e-12));

        let spec = SpaceSpec::counting(1.0, 2.0, 2, 1).unwrap();
        let e = 0.3;
        let u = sequence_l1_operator(eps(e), &spec).unwrap();
        let f = BochnerElement::from_blocks(vec![vec![2.0], vec![3.0]]).unwrap();
        let norm = bochner_norm(&apply_operator(&u, &f).unwrap(), &spec).unwrap();
        assert!((norm - (2.0 * (1.0 - e) + 3.0)).abs() < 1e-15);
    }

    #[test]
    fn sequence_operator_preconditions() {
        let weighted = SpaceSpec::new(1.0, 2.0, 1, vec![1.0, 2.0]).unwrap();
        assert!(sequence_l1_operator(eps(0.5), &weighted).is_err());
        let lp = SpaceSpec::counting(2.0, 2.0, 2, 1).unwrap();
        assert!(sequence_l1_operator(eps(0.5), &lp).is_err());
        let short = SpaceSpec::counting(1.0, 2.0, 1, 1).unwrap();
        assert!(sequence_l1_operator(eps(0.5), &short).is_err());
        let ok = SpaceSpec::counting(1.0, 2.0, 2, 1).unwrap();
        assert!(sequence_l1_operator(ApproxParam::exact(), &ok).is_err());
    }

    #[test]
    fn function_l1_operator_examples() {
        let spec = SpaceSpec::new(1.0, 2.0, 2, vec![2.0, 3.0]).unwrap();
        let part = AtomPartition::new(&[0], 2).unwrap();
        let u = function_l1_operator(eps(0.5), &part, &spec).unwrap();
        let f = BochnerElement::from_blocks(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(
            bochner_norm(&apply_operator(&u, &f).unwrap(), &spec).unwrap(),
            4.0
        );

        // Nearly annihilates A but stays injective.
        let part = AtomPartition::new(&[0], 2).unwrap();
        let u = function_l1_operator(eps(1.0 - 1e-9), &part, &spec).unwrap();
        assert!(u.factors()[0] > 0.0 && u.factors()[0] < 2e-9);
    }

    #[test]
    fn function_lp_operator_examples() {
        let spec = SpaceSpec::counting(2.0, 2.0, 2, 1).unwrap();
        let part = AtomPartition::new(&[0], 2).unwrap();
        assert_eq!(
            function_lp_operator(eps(0.5), &part, &spec)
                .unwrap()
                .factors(),
            &[1.0, 0.75]
        );

        // Near p = 1 the factors approach the L^1 shape with A and its complement swapped.
        let near_one = SpaceSpec::counting(1.0 + 1e-12, 2.0, 2, 1).unwrap();
        let u = function_lp_operator(eps(0.4), &part, &near_one).unwrap();
        let l1 = SpaceSpec::counting(1.0, 2.0, 2, 1).unwrap();
        let swapped = AtomPartition::new(&[1], 2).unwrap();
        let v = function_l1_operator(eps(0.4), &swapped, &l1).unwrap();
        for (a, b) in u.factors().iter().zip(v.factors()) {
            assert!((a - b).abs() < 1e-11);
        }
        assert!(function_lp_operator(eps(0.4), &part, &l1).is_err());
    }

    #[test]
    fn contraction_gap_bound() {
        for p in [1.01, 1.5, 2.0, 3.0, 8.0] {
            for e in [0.01, 0.3, 0.5, 0.99] {
                assert!(lp_contraction_gap(e, p) <= e);
            }
        }
    }

    #[test]
    fn partition_validation() {
        assert!(AtomPartition::new(&[], 3).is_err());
        assert!(AtomPartition::new(&[0, 1, 2], 3).is_err());
        assert!(AtomPartition::new(&[3], 3).is_err());
        let p = AtomPartition::new(&[2, 0], 4).unwrap();
        assert_eq!(p.members(), vec![0, 2]);
        assert_eq!(p.complement(), vec![1, 3]);
    }

    #[test]
    fn apply_operator_basics() {
        let spec = SpaceSpec::counting(1.0, 2.0, 3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = spec.random_element(&mut rng);
        assert_eq!(
            apply_operator(&ScalingOperator::identity(3), &f).unwrap(),
            f
        );
        let u = ScalingOperator::new(vec![0.5, 2.0, 1.5]).unwrap();
        assert!(apply_operator(&u, &spec.zero_element()).unwrap().is_zero());
        assert!(apply_operator(&ScalingOperator::identity(2), &f).is_err());
        assert!(ScalingOperator::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn witness_norms() {
        let spec = SpaceSpec::new(1.0, 2.0, 2, vec![2.0, 0.5, 3.0]).unwrap();
        let part = AtomPartition::new(&[0], 3).unwrap();
        let x0 = [0.6, 0.8];
        let h = h_alpha_witness(0.0, &part, &x0, &spec).unwrap();
        assert_eq!(bochner_norm(&h, &spec).unwrap(), 2.0);
        let h = h_alpha_witness(1.0, &part, &x0, &spec).unwrap();
        assert!((bochner_norm(&h, &spec).unwrap() - 5.5).abs() < 1e-15);

        let spec2 = SpaceSpec::counting(2.0, 2.0, 2, 2).unwrap();
        let part = AtomPartition::new(&[0], 2).unwrap();
        let h = h_alpha_witness(1.0, &part, &[1.0, 0.0], &spec2).unwrap();
        assert!((bochner_norm(&h, &spec2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(h_alpha_witness(1.0, &part, &[1.0, 1.0], &spec2).is_err());
    }

    #[test]
    fn witness_ratio_matches_closed_form() {
        let spec = SpaceSpec::new(1.0, 2.0, 2, vec![2.0, 0.5, 3.0]).unwrap();
        let part = AtomPartition::new(&[0], 3).unwrap();
        let e = 0.5;
        let u = function_l1_operator(eps(e), &part, &spec).unwrap();
        let (ma, mb) = (part.measure_a(&spec), part.measure_complement(&spec));
        for alpha in witness_alpha_grid() {
            let h = h_alpha_witness(alpha, &part, &[0.6, 0.8], &spec).unwrap();
            let r = bochner_norm(&apply_operator(&u, &h).unwrap(), &spec).unwrap()
                / bochner_norm(&h, &spec).unwrap();
            let c = ((1.0 - e) * ma + alpha.abs() * mb) / (ma + alpha.abs() * mb);
            assert!((r - c).abs() < 1e-14, "alpha {alpha}: {r} vs {c}");
        }
    }

    #[test]
    fn isometry_detector_examples() {
        let spec = SpaceSpec::new(2.0, 2.0, 2, vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let v = is_scalar_multiple_of_isometry(
            &ScalingOperator::identity(2),
            &spec,
            50,
            1e-12,
            &mut rng,
        )
        .unwrap();
        assert!(v.is_scalar_isometry && v.spread == 0.0);
        let two = ScalingOperator::uniform(2, 2.0).unwrap();
        let v = is_scalar_multiple_of_isometry(&two, &spec, 50, 1e-12, &mut rng).unwrap();
        assert!(v.is_scalar_isometry && v.spread == 0.0 && v.max_ratio == 2.0);

        let part = AtomPartition::new(&[0], 2).unwrap();
        let u = function_lp_operator(eps(0.5), &part, &spec).unwrap();
        let v = is_scalar_multiple_of_isometry(&u, &spec, 50, 1e-12, &mut rng).unwrap();
        assert!(!v.is_scalar_isometry && v.spread > 0.01);
        assert!((v.max_ratio - 1.0).abs() < 1e-12);
        assert!((v.min_ratio - 0.75).abs() < 1e-6);
    }

    #[test]
    fn trial_reproduces_preservation() {
        let spec = SpaceSpec::counting(1.0, 2.0, 5, 3).unwrap();
        let u = sequence_l1_operator(eps(0.3), &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let r =
                preservation_trial(&u, eps(0.3), &spec, &Tolerances::default(), &mut rng).unwrap();
            assert!(r.premise_residual < 1e-12);
            assert!(r.all_true(), "{r:?}");
            assert_eq!(r.routes[1].route, Route::Certificate);
        }
    }

    #[test]
    fn tightness_probe_finds_large_ratio() {
        // With one-dimensional blocks and two terms every orthogonal pair
        // forces the ratio 1 / (2 - eps).
        let spec = SpaceSpec::counting(1.0, 2.0, 2, 1).unwrap();
        let e = 0.6;
        let u = sequence_l1_operator(eps(e), &spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let r = tightness_probe(&u, eps(e), &spec, 20, &mut rng).unwrap();
        assert!((r.max_ratio - 1.0 / (2.0 - e)).abs() < 1e-12);
    }
}
