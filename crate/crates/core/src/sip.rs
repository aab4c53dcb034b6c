//! The semi-inner product on `L^p(mu, X)`, `1 < p < inf`, for smooth `X = l^q_d`:
//!
//! ```text
//! [f, g] = ||g||^(2-p) * sum_{i not in Z(g)} mu_i ||g_i||^(p-1) F_{g_i}(f_i)
//! ```
//!
//! with `[f, 0] = 0`. It is linear in `f`, homogeneous in `g`, bounded by
//! `||f|| ||g||` and satisfies `[f, f] = ||f||^2`.

use crate::blockspace::{
    block_norms, bochner_norm, dot, inner_duality_map, BochnerElement, SpaceSpec, DEFAULT_ZERO_TOL,
};
use crate::error::{Error, Result};
use crate::ortho::{ApproxParam, CheckResult, Tolerances};

fn require_sip_space(spec: &SpaceSpec) -> Result<()> {
    if spec.p() <= 1.0 {
        return Err(Error::UnsupportedExponent(spec.p()));
    }
    spec.require_smooth()
}

/// `[f, g]`.
pub fn semi_inner_product(f: &BochnerElement, g: &BochnerElement, spec: &SpaceSpec) -> Result<f64> {
    require_sip_space(spec)?;
    spec.check_element(f)?;
    let g_norm = bochner_norm(g, spec)?;
    if g_norm <= DEFAULT_ZERO_TOL {
        return Ok(0.0);
    }
    let p = spec.p();
    let norms = block_norms(g, spec.q());
    let top = norms.iter().fold(0.0_f64, |m, &a| m.max(a));
    let mut sum = 0.0;
    for (i, &a) in norms.iter().enumerate() {
        if a <= DEFAULT_ZERO_TOL * top {
            continue;
        }
        let dual = inner_duality_map(g.block(i), spec.q())?;
        // ||g||^(2-p) ||g_i||^(p-1) = ||g|| (||g_i|| / ||g||)^(p-1)
        sum += spec.weights()[i] * (a / g_norm).powf(p - 1.0) * dot(&dual, f.block(i));
    }
    Ok(g_norm * sum)
}

/// Residuals of the four semi-inner-product axioms at one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxiomReport {
    /// `|[af + bg, h] - a[f, h] - b[g, h]|`
    pub linearity: f64,
    /// `|[f, ag] - a[f, g]|`
    pub homogeneity: f64,
    /// `max(0, |[f, g]| - ||f|| ||g||)`
    pub cauchy_schwarz: f64,
    /// `|[f, f] - ||f||^2|`
    pub norm_consistency: f64,
    /// `(1 + ||f||)(1 + ||g||)(1 + ||h||)(1 + |a| + |b|)^2`
    pub scale: f64,
}

impl AxiomReport {
    pub fn max_residual(&self) -> f64 {
        self.linearity
            .max(self.homogeneity)
            .max(self.cauchy_schwarz)
            .max(self.norm_consistency)
    }

    /// Largest residual divided by `scale`.
    pub fn normalized(&self) -> f64 {
        self.max_residual() / self.scale
    }

    pub fn holds(&self, rel_tol: f64) -> bool {
        self.normalized() <= rel_tol
    }
}

pub fn sip_axiom_report(
    f: &BochnerElement,
    g: &BochnerElement,
    h: &BochnerElement,
    a: f64,
    b: f64,
    spec: &SpaceSpec,
) -> Result<AxiomReport> {
    let sip = |u: &BochnerElement, v: &BochnerElement| semi_inner_product(u, v, spec);
    let (fnorm, gnorm, hnorm) = (
        bochner_norm(f, spec)?,
        bochner_norm(g, spec)?,
        bochner_norm(h, spec)?,
    );

    let combo = f.combine(a, g, b)?;
    let linearity = (sip(&combo, h)? - a * sip(f, h)? - b * sip(g, h)?).abs();
    let fg = sip(f, g)?;
    let homogeneity = (sip(f, &g.scaled(a))? - a * fg).abs();
    let cauchy_schwarz = (fg.abs() - fnorm * gnorm).max(0.0);
    let norm_consistency = (sip(f, f)? - fnorm * fnorm).abs();
    let scale = (1.0 + fnorm) * (1.0 + gnorm) * (1.0 + hnorm) * (1.0 + a.abs() + b.abs()).powi(2);
    Ok(AxiomReport {
        linearity,
        homogeneity,
        cauchy_schwarz,
        norm_consistency,
        scale,
    })
}

/// Smooth-space criterion: `x` is eps-orthogonal to `y` iff
/// `|[y, x]| <= eps ||x|| ||y||`. The second slot holds `x`.
///
/// `margin = eps - |[y, x]| / (||x|| ||y||)`.
pub fn sip_orthogonality_criterion(
    x: &BochnerElement,
    y: &BochnerElement,
    eps: ApproxParam,
    spec: &SpaceSpec,
    tols: &Tolerances,
) -> Result<CheckResult> {
    require_sip_space(spec)?;
    let xn = bochner_norm(x, spec)?;
    let yn = bochner_norm(y, spec)?;
    if xn == 0.0 {
        return Err(Error::ZeroElement);
    }
    if yn == 0.0 {
        return Ok(CheckResult {
            verdict: true,
            margin: 0.0,
            alpha_star: None,
            certificate: None,
            boundary: false,
        });
    }
    let margin = eps.value() - semi_inner_product(y, x, spec)?.abs() / (xn * yn);
    Ok(CheckResult {
        verdict: margin >= -tols.tol,
        margin,
        alpha_star: None,
        certificate: None,
        boundary: margin.abs() < tols.band,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blockspace::{apply_functional, support_functional};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn el(blocks: &[&[f64]]) -> BochnerElement {
        BochnerElement::from_blocks(blocks.iter().map(|b| b.to_vec()).collect()).unwrap()
    }

    #[test]
    fn self_product_is_squared_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = SpaceSpec::new(3.0, 1.5, 3, vec![0.5, 2.0, 1.0, 0.25]).unwrap();
        for _ in 0..100 {
            let f = spec.random_element(&mut rng);
            let n = bochner_norm(&f, &spec).unwrap();
            let v = semi_inner_product(&f, &f, &spec).unwrap();
            assert!((v - n * n).abs() <= 1e-12 * n * n);
        }
    }

    #[test]
    fn hilbert_case_is_weighted_dot() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let spec = SpaceSpec::new(2.0, 2.0, 3, vec![0.3, 1.7, 2.2]).unwrap();
        for _ in 0..100 {
            let f = spec.random_element(&mut rng);
            let g = spec.random_element(&mut rng);
            let expected: f64 = f
                .blocks()
                .zip(g.blocks())
                .zip(spec.weights())
                .map(|((a, b), w)| w * dot(a, b))
                .sum();
            let v = semi_inner_product(&f, &g, &spec).unwrap();
            assert!((v - expected).abs() < 1e-12 * (1.0 + expected.abs()));
        }
    }

    #[test]
    fn orthogonal_blocks_give_zero() {
        for p in [1.5, 2.0, 4.0] {
            let spec = SpaceSpec::counting(p, 2.0, 1, 2).unwrap();
            let v = semi_inner_product(&el(&[&[1.0, 0.0]]), &el(&[&[0.0, 1.0]]), &spec).unwrap();
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn agrees_with_support_functional() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let spec = SpaceSpec::new(1.5, 3.0, 2, vec![1.0, 0.2, 4.0]).unwrap();
        for _ in 0..50 {
            let f = spec.random_element(&mut rng);
            let g = spec.random_element(&mut rng);
            let via_t = bochner_norm(&g, &spec).unwrap()
                * apply_functional(&support_functional(&g, &spec).unwrap(), &f, &spec).unwrap();
            let v = semi_inner_product(&f, &g, &spec).unwrap();
            assert!((v - via_t).abs() < 1e-12 * (1.0 + v.abs()));
        }
    }

    #[test]
    fn rejects_p_one_and_nonsmooth() {
        let f = el(&[&[1.0, 0.0]]);
        let spec = SpaceSpec::counting(1.0, 2.0, 1, 2).unwrap();
        assert_eq!(
            semi_inner_product(&f, &f, &spec),
            Err(Error::UnsupportedExponent(1.0))
        );
        let spec = SpaceSpec::counting(2.0, f64::INFINITY, 1, 2).unwrap();
        assert!(matches!(
            semi_inner_product(&f, &f, &spec),
            Err(Error::NotSmooth(_))
        ));
    }

    #[test]
    fn axioms_at_zero() {
        let spec = SpaceSpec::counting(3.0, 1.5, 2, 2).unwrap();
        let z = spec.zero_element();
        let r = sip_axiom_report(&z, &z, &z, 0.7, -1.3, &spec).unwrap();
        assert_eq!(r.max_residual(), 0.0);
    }

    #[test]
    fn axioms_hilbert_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let spec = SpaceSpec::counting(2.0, 2.0, 4, 3).unwrap();
        for _ in 0..200 {
            let (f, g, h) = (
                spec.random_element(&mut rng),
                spec.random_element(&mut rng),
                spec.random_element(&mut rng),
            );
            let r = sip_axiom_report(&f, &g, &h, 1.7, -0.4, &spec).unwrap();
            assert!(r.holds(1e-12), "{r:?}");
        }
    }

    #[test]
    fn criterion_example_matches_ortho() {
        let spec = SpaceSpec::counting(2.0, 2.0, 1, 2).unwrap();
        let eps = ApproxParam::new(0.1).unwrap();
        let r = sip_orthogonality_criterion(
            &el(&[&[1.0, 0.0]]),
            &el(&[&[0.1, 1.0]]),
            eps,
            &spec,
            &Tolerances::default(),
        )
        .unwrap();
        assert!(r.verdict && !r.boundary);
        assert!((r.margin - (0.1 - 0.1 / 1.01f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn criterion_exact_case_is_weighted_dot() {
        let spec = SpaceSpec::new(2.0, 2.0, 2, vec![1.0, 3.0]).unwrap();
        let x = el(&[&[1.0, 1.0], &[0.0, 1.0]]);
        // <x, y>_mu = 1*(3 - 6) + 3*(1) = 0
        let y = el(&[&[3.0, -6.0], &[5.0, 1.0]]);
        let tols = Tolerances::default();
        let r = sip_orthogonality_criterion(&x, &y, ApproxParam::exact(), &spec, &tols).unwrap();
        assert!(r.verdict);
        let r = sip_orthogonality_criterion(&x, &x, ApproxParam::exact(), &spec, &tols).unwrap();
        assert!(!r.verdict && (r.margin + 1.0).abs() < 1e-15);
    }
}
