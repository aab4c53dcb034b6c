//! Exact and epsilon-approximate Birkhoff-James orthogonality.
//!
//! `x` is B-J orthogonal to `y` when `||x + a y|| >= ||x||` for every real
//! `a`, and epsilon-approximately orthogonal when
//! `||x + a y||^2 >= ||x||^2 - 2 eps ||x|| ||a y||` for every `a`.
//!
//! Two independent routes decide these relations:
//!
//! * direct minimization of the convex scalar functions
//!   `phi(a) = ||x + a y||` and `psi(a) = ||x + a y||^2 - ||x||^2 + 2 eps ||x|| ||y|| |a|`
//!   by golden-section search, using only norm evaluations;
//! * a certificate: `x` is eps-orthogonal to `y` iff some norm-one `T` with
//!   `T(x) = ||x||` has `|T(y)| <= eps ||y||`. The minimum of `|T(y)|` over
//!   the support set `J(x)` has a closed form on these spaces.
//!
//! Both routes report a [`CheckResult`] whose `boundary` flag marks cases too
//! close to the defining inequality for floating point to settle.

use crate::blockspace::{
    apply_functional, bochner_norm, inner_duality_map, inner_norm, relative_zero_set,
    support_functional_with_tol, BlockFunctional, BochnerElement, SpaceSpec, DEFAULT_ZERO_TOL,
};
use crate::error::{Error, Result};

/// Hard cap on golden-section iterations.
pub const MAX_GOLDEN_ITERATIONS: usize = 200;

/// Bracket-width factor for the orthogonality minimizations, relative to the search radius.
const SEARCH_WIDTH: f64 = 1e-13;

/// The approximation parameter `eps` in `[0, 1)`; zero means exact B-J orthogonality.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct ApproxParam(f64);

impl ApproxParam {
    pub fn new(eps: f64) -> Result<Self> {
        if (0.0..1.0).contains(&eps) {
            Ok(Self(eps))
        } else {
            Err(Error::BadSpec(format!(
                "epsilon must lie in [0, 1), got {eps}"
            )))
        }
    }

    pub const fn exact() -> Self {
        Self(0.0)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Numerical tolerances shared by every check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    /// Relative tolerance on the defining inequality.
    pub tol: f64,
    /// Block zero threshold, relative to the largest block norm.
    pub zero_tol: f64,
    /// Half-width of the boundary band for margins measured in epsilon units.
    pub band: f64,
    /// Epsilon perturbation used to flag boundary cases in the minimization
    /// routes. The minimum of `psi` is quadratic in the violation, so those
    /// routes only resolve violations down to about `sqrt(tol)` in epsilon.
    pub tilt: f64,
}

impl Tolerances {
    pub fn with_tol(tol: f64, zero_tol: f64) -> Self {
        Self {
            tol,
            zero_tol,
            band: 10.0 * tol,
            tilt: (10.0 * tol).sqrt(),
        }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::with_tol(1e-9, DEFAULT_ZERO_TOL)
    }
}

/// Outcome of one orthogonality query.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub verdict: bool,
    /// Signed, normalized distance from the boundary of the defining inequality.
    pub margin: f64,
    pub alpha_star: Option<f64>,
    pub certificate: Option<BlockFunctional>,
    /// The verdict is not robust at the tolerances in force.
    pub boundary: bool,
}

impl CheckResult {
    fn trivially_true() -> Self {
        Self {
            verdict: true,
            margin: 0.0,
            alpha_star: Some(0.0),
            certificate: None,
            boundary: false,
        }
    }
}

/// Location and value of a minimum found by golden-section search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Minimum {
    pub alpha: f64,
    pub value: f64,
    pub iterations: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the minimum of a convex `f` on `[lo, hi]`.
///
/// The endpoints are evaluated too, so a minimum sitting on the bracket edge
/// is returned exactly. Iteration stops once the bracket is narrower than
/// `tol` or after [`MAX_GOLDEN_ITERATIONS`] steps.
pub fn golden_section<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<Minimum> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::BadSpec(format!("invalid bracket [{lo}, {hi}]")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::BadSpec(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let mut eval = |a: f64| {
        let v = f(a);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteValue(a))
        }
    };

    let mut best = Minimum {
        alpha: lo,
        value: eval(lo)?,
        iterations: 0,
    };
    let f_hi = eval(hi)?;
    if f_hi < best.value {
        best = Minimum {
            alpha: hi,
            value: f_hi,
            iterations: 0,
        };
    }

    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c)?;
    let mut fd = eval(d)?;
    let mut iterations = 0;
    while b - a > tol && iterations < MAX_GOLDEN_ITERATIONS {
        iterations += 1;
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d)?;
        }
    }
    for (alpha, value) in [(c, fc), (d, fd)] {
        if value < best.value {
            best = Minimum {
                alpha,
                value,
                iterations: 0,
            };
        }
    }
    best.iterations = iterations;
    Ok(best)
}

/// Minimizes a convex `f` over `[-radius, radius]`.
pub fn minimize_convex_1d<F: FnMut(f64) -> f64>(f: F, radius: f64, tol: f64) -> Result<Minimum> {
    golden_section(f, -radius, radius, tol)
}

/// The line `a -> x + a y` with a reusable buffer for norm evaluations.
struct Pencil<'a> {
    x: &'a BochnerElement,
    y: &'a BochnerElement,
    spec: &'a SpaceSpec,
    scratch: BochnerElement,
}

impl<'a> Pencil<'a> {
    fn new(x: &'a BochnerElement, y: &'a BochnerElement, spec: &'a SpaceSpec) -> Self {
        Self {
            x,
            y,
            spec,
            scratch: x.clone(),
        }
    }

    fn norm_at(&mut self, alpha: f64) -> f64 {
        for i in 0..self.x.n_blocks() {
            let out = self.scratch.block_mut(i);
            for ((o, xv), yv) in out.iter_mut().zip(self.x.block(i)).zip(self.y.block(i)) {
                *o = xv + alpha * yv;
            }
        }
        bochner_norm(&self.scratch, self.spec).expect("shapes validated on entry")
    }
}

struct Norms {
    x: f64,
    y: f64,
}

fn validated_norms(x: &BochnerElement, y: &BochnerElement, spec: &SpaceSpec) -> Result<Norms> {
    let xn = bochner_norm(x, spec)?;
    let yn = bochner_norm(y, spec)?;
    if xn == 0.0 {
        return Err(Error::ZeroElement);
    }
    Ok(Norms { x: xn, y: yn })
}

/// Search radius `4 ||x|| / ||y||`. Any `a` with `||x + a y|| <= ||x||`
/// satisfies `|a| ||y|| <= 2 ||x||`; the factor two absorbs rounding.
fn search_radius(n: &Norms) -> f64 {
    4.0 * n.x / n.y
}

/// Minimum of `psi_eps` over `[-R, R]`, found on each half-line separately.
/// `psi` is convex on each half-line for every real `eps`, including the
/// negative tilts used for boundary detection.
fn psi_minimum(pencil: &mut Pencil<'_>, n: &Norms, eps: f64) -> Result<Minimum> {
    let radius = search_radius(n);
    let (xx, kink) = (n.x * n.x, 2.0 * eps * n.x * n.y);
    let mut psi = |a: f64| {
        let v = pencil.norm_at(a);
        v * v - xx + kink * a.abs()
    };
    let right = golden_section(&mut psi, 0.0, radius, SEARCH_WIDTH * radius)?;
    let left = golden_section(&mut psi, -radius, 0.0, SEARCH_WIDTH * radius)?;
    Ok(if left.value < right.value {
        left
    } else {
        right
    })
}

fn psi_verdict(pencil: &mut Pencil<'_>, n: &Norms, eps: f64, tol: f64) -> Result<bool> {
    Ok(psi_minimum(pencil, n, eps)?.value >= -tol * n.x * n.x)
}

/// The minimization verdict is robust when it does not flip as `eps` moves by `tilt`.
fn psi_boundary(pencil: &mut Pencil<'_>, n: &Norms, eps: f64, tols: &Tolerances) -> Result<bool> {
    let below = psi_verdict(pencil, n, eps - tols.tilt, tols.tol)?;
    let above = psi_verdict(pencil, n, eps + tols.tilt, tols.tol)?;
    Ok(below != above)
}

/// Exact B-J orthogonality `x ⊥ y` by minimizing `||x + a y||`.
///
/// `margin = (min ||x + a y|| - ||x||) / ||x||`, never positive.
pub fn is_bj_orthogonal(
    x: &BochnerElement,
    y: &BochnerElement,
    spec: &SpaceSpec,
    tols: &Tolerances,
) -> Result<CheckResult> {
    let n = validated_norms(x, y, spec)?;
    if n.y == 0.0 {
        return Ok(CheckResult::trivially_true());
    }
    let mut pencil = Pencil::new(x, y, spec);
    let radius = search_radius(&n);
    let mut min = minimize_convex_1d(|a| pencil.norm_at(a), radius, SEARCH_WIDTH * radius)?;
    let at_zero = pencil.norm_at(0.0);
    if at_zero <= min.value {
        min = Minimum {
            alpha: 0.0,
            value: at_zero,
            ..min
        };
    }
    let margin = (min.value - n.x) / n.x;
    Ok(CheckResult {
        verdict: margin >= -tols.tol,
        margin,
        alpha_star: Some(min.alpha),
        certificate: None,
        boundary: psi_boundary(&mut pencil, &n, 0.0, tols)?,
    })
}

/// Epsilon-approximate B-J orthogonality by minimizing `psi`.
///
/// `margin = min psi / ||x||^2`, never positive. Since `psi(0) = 0` the
/// verdict is true exactly when the minimum sits at `a = 0` up to `tol`.
pub fn is_approx_bj_orthogonal(
    x: &BochnerElement,
    y: &BochnerElement,
    eps: ApproxParam,
    spec: &SpaceSpec,
    tols: &Tolerances,
) -> Result<CheckResult> {
    let n = validated_norms(x, y, spec)?;
    if n.y == 0.0 {
        return Ok(CheckResult::trivially_true());
    }
    let mut pencil = Pencil::new(x, y, spec);
    let min = psi_minimum(&mut pencil, &n, eps.value())?;
    let margin = min.value / (n.x * n.x);
    Ok(CheckResult {
        verdict: margin >= -tols.tol,
        margin,
        alpha_star: Some(min.alpha),
        certificate: None,
        boundary: psi_boundary(&mut pencil, &n, eps.value(), tols)?,
    })
}

/// `min { |T(y)| : T in J(x) }` together with a functional attaining it.
///
/// For `p > 1` the set `J(x)` is a single functional. For `p = 1` the blocks
/// of `T` on the zero set of `x` are free in the dual unit ball, so they can
/// contribute any value in `[-sum_Z mu_i ||y_i||, sum_Z mu_i ||y_i||]`; the
/// minimum is `max(0, |S| - slack)` with `S` the contribution of the nonzero
/// blocks. The returned functional puts the clamped optimizer on those blocks.
pub fn min_certificate(
    x: &BochnerElement,
    y: &BochnerElement,
    spec: &SpaceSpec,
    zero_tol: f64,
) -> Result<(f64, BlockFunctional)> {
    spec.check_element(y)?;
    let mut t = support_functional_with_tol(x, spec, zero_tol)?;
    let s = apply_functional(&t, y, spec)?;
    if spec.p() > 1.0 {
        return Ok((s.abs(), t));
    }

    let q = spec.q();
    let zeros = relative_zero_set(x, q, zero_tol);
    let slack: f64 = zeros
        .iter()
        .map(|&i| spec.weights()[i] * inner_norm(y.block(i), q))
        .sum();
    if slack > 0.0 {
        let c = -(s / slack).clamp(-1.0, 1.0);
        for &i in &zeros {
            if let Ok(dual) = inner_duality_map(y.block(i), q) {
                for (tj, fj) in t.block_mut(i).iter_mut().zip(dual) {
                    *tj = c * fj;
                }
            }
        }
    }
    Ok(((s.abs() - slack).max(0.0), t))
}

/// `min { |T(y)| : T in J(x) }` with the default zero threshold.
pub fn min_certificate_value(
    x: &BochnerElement,
    y: &BochnerElement,
    spec: &SpaceSpec,
) -> Result<f64> {
    min_certificate(x, y, spec, DEFAULT_ZERO_TOL).map(|(v, _)| v)
}

/// Certificate route: true iff some `T in J(x)` has `|T(y)| <= eps ||y||`.
///
/// `margin = (eps ||y|| - min |T(y)|) / ||y||`, i.e. the slack in epsilon units.
pub fn certificate_check(
    x: &BochnerElement,
    y: &BochnerElement,
    eps: ApproxParam,
    spec: &SpaceSpec,
    tols: &Tolerances,
) -> Result<CheckResult> {
    let (value, t) = min_certificate(x, y, spec, tols.zero_tol)?;
    let yn = bochner_norm(y, spec)?;
    if yn == 0.0 {
        return Ok(CheckResult {
            certificate: Some(t),
            alpha_star: None,
            ..CheckResult::trivially_true()
        });
    }
    let margin = (eps.value() * yn - value) / yn;
    Ok(CheckResult {
        verdict: margin >= -tols.tol,
        margin,
        alpha_star: None,
        certificate: Some(t),
        boundary: margin.abs() < tols.band,
    })
}

/// Projects `z` onto the kernel of the support functional of `x`:
/// `y = z - (T(z) / ||x||) x`. Then `T(y) = 0`, so `x ⊥ y`.
pub fn make_orthogonal_partner(
    x: &BochnerElement,
    z: &BochnerElement,
    spec: &SpaceSpec,
) -> Result<BochnerElement> {
    spec.check_element(z)?;
    let t = support_functional_with_tol(x, spec, DEFAULT_ZERO_TOL)?;
    let xn = bochner_norm(x, spec)?;
    let coeff = apply_functional(&t, z, spec)? / xn;
    z.combine(1.0, x, -coeff)
}
