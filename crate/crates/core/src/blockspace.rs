//! Discretized Lebesgue-Bochner spaces `L^p(mu, X)` with `X = l^q_d`.
//!
//! The measure space is a finite set of `n` atoms with masses `mu_i > 0`, so
//! an element `f` is a sequence of `n` blocks, block `i` being the value
//! `f(s_i)` in `R^d`. Integrals become weighted sums:
//!
//! ```text
//! ||f|| = ( sum_i mu_i ||f_i||_q^p )^(1/p)
//! T(g)  = sum_i mu_i <G_i, g_i>
//! ```
//!
//! Norms are evaluated after rescaling by the largest magnitude involved so
//! that the computation neither overflows nor underflows and is exactly
//! homogeneous under scaling by powers of two.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Zero threshold for blocks, relative to the largest block norm.
pub const DEFAULT_ZERO_TOL: f64 = 1e-12;

/// Conjugate exponent `q / (q - 1)`, with `1 <-> inf`.
pub fn dual_exponent(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

fn is_smooth_exponent(q: f64) -> bool {
    q > 1.0 && q.is_finite()
}

/// The discretized space: outer exponent `p`, inner exponent `q`, `n` atoms
/// of mass `weights[i]` and blocks of dimension `d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceSpecRecord", into = "SpaceSpecRecord")]
pub struct SpaceSpec {
    p: f64,
    q: f64,
    d: usize,
    weights: Vec<f64>,
}

impl SpaceSpec {
    pub fn new(p: f64, q: f64, d: usize, weights: Vec<f64>) -> Result<Self> {
        if !(p >= 1.0 && p.is_finite()) {
            return Err(Error::BadSpec(format!("p must lie in [1, inf), got {p}")));
        }
        if q.is_nan() || q < 1.0 {
            return Err(Error::BadSpec(format!("q must lie in [1, inf], got {q}")));
        }
        if d == 0 {
            return Err(Error::BadSpec("block dimension d must be positive".into()));
        }
        if weights.is_empty() {
            return Err(Error::BadSpec("at least one atom is required".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(Error::BadSpec(format!(
                "weights[{i}] = {w} must be positive and finite"
            )));
        }
        Ok(Self { p, q, d, weights })
    }

    /// All atom masses equal to one, i.e. the sequence space `l^p(l^q_d)` truncated to `n` terms.
    pub fn counting(p: f64, q: f64, n: usize, d: usize) -> Result<Self> {
        Self::new(p, q, d, vec![1.0; n])
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn n(&self) -> usize {
        self.weights.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Errors unless the inner norm is Frechet differentiable away from zero.
    pub fn require_smooth(&self) -> Result<()> {
        if is_smooth_exponent(self.q) {
            Ok(())
        } else {
            Err(Error::NotSmooth(self.q))
        }
    }

    /// True for `l^1(X)` in the sequence sense: `p = 1` and unit masses.
    pub fn is_counting_l1(&self) -> bool {
        self.p == 1.0 && self.weights.iter().all(|&w| w == 1.0)
    }

    /// The space whose dual pairing matches `apply_functional`: exponents
    /// `(p*, q*)` over the same atoms.
    fn dual_exponents(&self) -> (f64, f64) {
        (dual_exponent(self.p), dual_exponent(self.q))
    }

    pub fn check_element(&self, f: &BochnerElement) -> Result<()> {
        check_shape(self, f.n_blocks(), f.dim())
    }

    pub fn check_functional(&self, t: &BlockFunctional) -> Result<()> {
        check_shape(self, t.n_blocks(), t.dim())
    }

    /// Element with i.i.d. standard normal entries.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R) -> BochnerElement {
        let data = (0..self.n() * self.d)
            .map(|_| rng.sample::<f64, _>(StandardNormal))
            .collect();
        BochnerElement::from_flat(self.d, data).expect("dimensions come from a valid spec")
    }

    pub fn zero_element(&self) -> BochnerElement {
        BochnerElement::zeros(self.n(), self.d)
    }
}

fn check_shape(spec: &SpaceSpec, n: usize, d: usize) -> Result<()> {
    if n != spec.n() || d != spec.d {
        Err(Error::ShapeMismatch(format!(
            "expected {} blocks of dimension {}, got {} blocks of dimension {}",
            spec.n(),
            spec.d,
            n,
            d
        )))
    } else {
        Ok(())
    }
}

/// Wire form of [`SpaceSpec`]: `{p, q, n, d, weights}` with `q = "inf"` allowed.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpaceSpecRecord {
    p: f64,
    q: Exponent,
    n: usize,
    d: usize,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Exponent {
    Number(f64),
    Text(String),
}

impl TryFrom<SpaceSpecRecord> for SpaceSpec {
    type Error = Error;

    fn try_from(r: SpaceSpecRecord) -> Result<Self> {
        let q = match r.q {
            Exponent::Number(q) => q,
            Exponent::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
                "inf" | "infinity" => f64::INFINITY,
                other => other
                    .parse()
                    .map_err(|_| Error::BadSpec(format!("q: cannot parse {s:?}")))?,
            },
        };
        if r.n != r.weights.len() {
            return Err(Error::BadSpec(format!(
                "n = {} but {} weights were given",
                r.n,
                r.weights.len()
            )));
        }
        SpaceSpec::new(r.p, q, r.d, r.weights)
    }
}

impl From<SpaceSpec> for SpaceSpecRecord {
    fn from(s: SpaceSpec) -> Self {
        let q = if s.q.is_infinite() {
            Exponent::Text("inf".into())
        } else {
            Exponent::Number(s.q)
        };
        SpaceSpecRecord {
            p: s.p,
            q,
            n: s.weights.len(),
            d: s.d,
            weights: s.weights,
        }
    }
}

macro_rules! block_sequence {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq)]
        pub struct $name {
            dim: usize,
            data: Vec<f64>,
        }

        impl $name {
            pub fn zeros(n: usize, d: usize) -> Self {
                Self { dim: d, data: vec![0.0; n * d] }
            }

            /// Row-major blocks: `data[i * d + j]` is entry `j` of block `i`.
            pub fn from_flat(d: usize, data: Vec<f64>) -> Result<Self> {
                if d == 0 || data.is_empty() || data.len() % d != 0 {
                    return Err(Error::ShapeMismatch(format!(
                        "{} entries cannot be split into blocks of dimension {}",
                        data.len(),
                        d
                    )));
                }
                if let Some(v) = data.iter().find(|v| !v.is_finite()) {
                    return Err(Error::BadSpec(format!("non-finite entry {v}")));
                }
                Ok(Self { dim: d, data })
            }

            pub fn from_blocks(blocks: Vec<Vec<f64>>) -> Result<Self> {
                let d = blocks.first().map_or(0, Vec::len);
                if blocks.iter().any(|b| b.len() != d) {
                    return Err(Error::ShapeMismatch("blocks have unequal dimensions".into()));
                }
                Self::from_flat(d, blocks.concat())
            }

            pub fn n_blocks(&self) -> usize {
                self.data.len() / self.dim
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn block(&self, i: usize) -> &[f64] {
                &self.data[i * self.dim..(i + 1) * self.dim]
            }

            pub fn block_mut(&mut self, i: usize) -> &mut [f64] {
                &mut self.data[i * self.dim..(i + 1) * self.dim]
            }

            pub fn blocks(&self) -> std::slice::ChunksExact<'_, f64> {
                self.data.chunks_exact(self.dim)
            }

            pub fn as_slice(&self) -> &[f64] {
                &self.data
            }

            pub fn to_blocks(&self) -> Vec<Vec<f64>> {
                self.blocks().map(<[f64]>::to_vec).collect()
            }

            pub fn is_zero(&self) -> bool {
                self.data.iter().all(|&v| v == 0.0)
            }

            pub fn scaled(&self, a: f64) -> Self {
                Self { dim: self.dim, data: self.data.iter().map(|v| a * v).collect() }
            }

            /// `a * self + b * other`.
            pub fn combine(&self, a: f64, other: &Self, b: f64) -> Result<Self> {
                if self.dim != other.dim || self.data.len() != other.data.len() {
                    return Err(Error::ShapeMismatch("operands differ in shape".into()));
                }
                let data = self
                    .data
                    .iter()
                    .zip(&other.data)
                    .map(|(x, y)| a * x + b * y)
                    .collect();
                Ok(Self { dim: self.dim, data })
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_seq(self.blocks())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
                let blocks = Vec::<Vec<f64>>::deserialize(de)?;
                Self::from_blocks(blocks).map_err(serde::de::Error::custom)
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "[")?;
                for (i, b) in self.blocks().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{b:?}")?;
                }
                write!(f, "]")
            }
        }
    };
}

block_sequence!(
    /// A function `f: S -> X`, stored as `n` blocks of length `d`.
    BochnerElement
);

block_sequence!(
    /// A dual element `G: S -> X*` acting by `T(g) = sum_i mu_i <G_i, g_i>`.
    BlockFunctional
);

/// `||v||_q` for `q` in `[1, inf]`.
pub fn inner_norm(v: &[f64], q: f64) -> f64 {
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 || q.is_infinite() {
        return m;
    }
    if q == 1.0 {
        return v.iter().map(|x| x.abs()).sum();
    }
    let s: f64 = v.iter().map(|x| (x.abs() / m).powf(q)).sum();
    m * s.powf(1.0 / q)
}

/// The unique norming functional `F_v` of `v != 0` in `l^q_d`, `1 < q < inf`:
/// `F_v(v) = ||v||_q` and `||F_v||_{q*} = 1`. It is the gradient of the norm at `v`.
pub fn inner_duality_map(v: &[f64], q: f64) -> Result<Vec<f64>> {
    if !is_smooth_exponent(q) {
        return Err(Error::NotSmooth(q));
    }
    let m = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if m == 0.0 {
        return Err(Error::ZeroVector);
    }
    let s = inner_norm(v, q) / m;
    Ok(v.iter()
        .map(|&x| x.signum() * (x.abs() / m / s).powf(q - 1.0))
        .map(|c| if c == 0.0 { 0.0 } else { c })
        .collect())
}

/// `(sum_i w_i a_i^p)^(1/p)`, or `max_i a_i` when `p = inf`. All `a_i >= 0`.
fn weighted_lp(values: &[f64], weights: &[f64], p: f64) -> f64 {
    let m = values.iter().fold(0.0_f64, |m, &a| m.max(a));
    if m == 0.0 || p.is_infinite() {
        return m;
    }
    if p == 1.0 {
        return values.iter().zip(weights).map(|(a, w)| w * a).sum();
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .map(|(a, w)| w * (a / m).powf(p))
        .sum();
    m * s.powf(1.0 / p)
}

/// Block norms `||f_i||_q`.
pub fn block_norms(f: &BochnerElement, q: f64) -> Vec<f64> {
    f.blocks().map(|b| inner_norm(b, q)).collect()
}

/// `(sum_i mu_i ||f_i||_q^p)^(1/p)`.
pub fn bochner_norm(f: &BochnerElement, spec: &SpaceSpec) -> Result<f64> {
    spec.check_element(f)?;
    Ok(weighted_lp(&block_norms(f, spec.q), &spec.weights, spec.p))
}

/// Indices of blocks with `||f_i||_q <= tol` (the zero set `Z(f)`).
pub fn zero_set(f: &BochnerElement, q: f64, tol: f64) -> Vec<usize> {
    f.blocks()
        .enumerate()
        .filter(|(_, b)| inner_norm(b, q) <= tol)
        .map(|(i, _)| i)
        .collect()
}

/// Zero set with the threshold taken relative to the largest block norm.
pub fn relative_zero_set(f: &BochnerElement, q: f64, rel_tol: f64) -> Vec<usize> {
    let norms = block_norms(f, q);
    let top = norms.iter().fold(0.0_f64, |m, &a| m.max(a));
    norms
        .iter()
        .enumerate()
        .filter(|(_, &a)| a <= rel_tol * top)
        .map(|(i, _)| i)
        .collect()
}

/// `T(g) = sum_i mu_i <T_i, g_i>`.
pub fn apply_functional(t: &BlockFunctional, g: &BochnerElement, spec: &SpaceSpec) -> Result<f64> {
    spec.check_functional(t)?;
    spec.check_element(g)?;
    Ok(t.blocks()
        .zip(g.blocks())
        .zip(&spec.weights)
        .map(|((ti, gi), w)| w * dot(ti, gi))
        .sum())
}

/// Operator norm of `T` on `L^p(mu, X)`: `max_i ||T_i||_{q*}` when `p = 1`,
/// otherwise `(sum_i mu_i ||T_i||_{q*}^{p*})^(1/p*)`.
pub fn functional_norm(t: &BlockFunctional, spec: &SpaceSpec) -> Result<f64> {
    spec.check_functional(t)?;
    let (p_star, q_star) = spec.dual_exponents();
    let norms: Vec<f64> = t.blocks().map(|b| inner_norm(b, q_star)).collect();
    Ok(weighted_lp(&norms, &spec.weights, p_star))
}

/// Canonical support functional at `f != 0`, i.e. an element of `J(f)`.
///
/// For `p = 1` every nonzero block carries `F_{f_i}`; for `p > 1` it carries
/// `(||f_i|| / ||f||)^(p-1) F_{f_i}`. Zero blocks carry `0`. For `p > 1` and
/// smooth `X` this is the only element of `J(f)`; for `p = 1` the zero blocks
/// may be replaced by anything of dual norm at most one (see
/// [`crate::ortho::min_certificate`]).
pub fn support_functional(f: &BochnerElement, spec: &SpaceSpec) -> Result<BlockFunctional> {
    support_functional_with_tol(f, spec, DEFAULT_ZERO_TOL)
}

pub fn support_functional_with_tol(
    f: &BochnerElement,
    spec: &SpaceSpec,
    zero_tol: f64,
) -> Result<BlockFunctional> {
    spec.check_element(f)?;
    spec.require_smooth()?;
    let norms = block_norms(f, spec.q);
    let top = norms.iter().fold(0.0_f64, |m, &a| m.max(a));
    if top == 0.0 {
        return Err(Error::ZeroElement);
    }
    let total = weighted_lp(&norms, &spec.weights, spec.p);
    let mut g = BlockFunctional::zeros(spec.n(), spec.d);
    for (i, (fi, &a)) in f.blocks().zip(&norms).enumerate() {
        if a <= zero_tol * top {
            continue;
        }
        let coeff = if spec.p == 1.0 {
            1.0
        } else {
            (a / total).powf(spec.p - 1.0)
        };
        let dual = inner_duality_map(fi, spec.q)?;
        for (gj, fj) in g.block_mut(i).iter_mut().zip(dual) {
            *gj = coeff * fj;
        }
    }
    Ok(g)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
