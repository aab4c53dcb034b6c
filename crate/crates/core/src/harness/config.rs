use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Deserialize;

use crate::blockspace::{SpaceSpec, DEFAULT_ZERO_TOL};
use crate::preserver::AtomPartition;

use super::HarnessError;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_TRIALS: usize = 100;
pub const DEFAULT_EPSILONS: [f64; 1] = [0.5];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    CheckOrtho,
    CheckApprox,
    Sip,
    Axioms,
    PreserverSweep,
    IsometryTest,
}

impl Mode {
    pub const ALL: [Mode; 6] = [
        Mode::CheckOrtho,
        Mode::CheckApprox,
        Mode::Sip,
        Mode::Axioms,
        Mode::PreserverSweep,
        Mode::IsometryTest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mode::CheckOrtho => "check-ortho",
            Mode::CheckApprox => "check-approx",
            Mode::Sip => "sip",
            Mode::Axioms => "axioms",
            Mode::PreserverSweep => "preserver-sweep",
            Mode::IsometryTest => "isometry-test",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| HarnessError::config("mode", format!("unknown mode {s:?}")))
    }
}

/// Everything a run needs. Built by [`parse_config`].
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub spec: SpaceSpec,
    pub epsilons: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub partition: Option<AtomPartition>,
    /// Explicit operator for `isometry-test`.
    pub factors: Option<Vec<f64>>,
    pub tol: f64,
    pub zero_tol: f64,
    pub output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    mode: Option<String>,
    spec: RawSpec,
    epsilons: Option<Vec<f64>>,
    trials: Option<i64>,
    seed: Option<u64>,
    partition: Option<Vec<usize>>,
    factors: Option<Vec<f64>>,
    tol: Option<f64>,
    zero_tol: Option<f64>,
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    p: f64,
    q: toml::Value,
    n: Option<usize>,
    d: usize,
    weights: Option<Vec<f64>>,
}

fn parse_q(v: &toml::Value) -> Result<f64, HarnessError> {
    match v {
        toml::Value::Float(f) => Ok(*f),
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::String(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity") => {
            Ok(f64::INFINITY)
        }
        other => Err(HarnessError::config(
            "spec.q",
            format!("expected a number or \"inf\", got {other}"),
        )),
    }
}

/// Parses a TOML experiment description.
///
/// `mode_override` is the mode named on the command line; a `mode` key in
/// the file must agree with it. Unknown keys are rejected.
pub fn parse_config(
    text: &str,
    mode_override: Option<Mode>,
) -> Result<ExperimentConfig, HarnessError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let span = e
            .span()
            .map(|s| {
                let line = text[..s.start.min(text.len())].matches('\n').count() + 1;
                format!("line {line}: ")
            })
            .unwrap_or_default();
        HarnessError::config("config", format!("{span}{}", e.message()))
    })?;

    let file_mode = raw.mode.as_deref().map(Mode::from_str).transpose()?;
    let mode = match (mode_override, file_mode) {
        (Some(a), Some(b)) if a != b => {
            return Err(HarnessError::config(
                "mode",
                format!("config says {b} but {a} was requested"),
            ))
        }
        (Some(m), _) | (None, Some(m)) => m,
        (None, None) => return Err(HarnessError::config("mode", "no mode given")),
    };

    let q = parse_q(&raw.spec.q)?;
    let weights = match (raw.spec.weights, raw.spec.n) {
        (Some(w), Some(n)) if w.len() != n => {
            return Err(HarnessError::config(
                "spec.weights",
                format!("{} weights given but n = {n}", w.len()),
            ))
        }
        (Some(w), _) => w,
        (None, Some(n)) => vec![1.0; n],
        (None, None) => return Err(HarnessError::config("spec.n", "give n or weights")),
    };
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
    {
        return Err(HarnessError::config(
            &format!("spec.weights[{i}]"),
            format!("{w} is not a positive finite mass"),
        ));
    }
    let spec = SpaceSpec::new(raw.spec.p, q, raw.spec.d, weights)
        .map_err(|e| HarnessError::config("spec", e.to_string()))?;

    let epsilons = raw.epsilons.unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
    if epsilons.is_empty() {
        return Err(HarnessError::config(
            "epsilons",
            "at least one value is required",
        ));
    }
    if let Some((i, e)) = epsilons
        .iter()
        .enumerate()
        .find(|(_, e)| !(0.0..1.0).contains(*e))
    {
        return Err(HarnessError::config(
            &format!("epsilons[{i}]"),
            format!("{e} is outside [0, 1)"),
        ));
    }

    let trials = match raw.trials {
        None => DEFAULT_TRIALS,
        Some(t) if t >= 1 => t as usize,
        Some(t) => {
            return Err(HarnessError::config(
                "trials",
                format!("{t} is not positive"),
            ))
        }
    };

    let partition = raw
        .partition
        .map(|a| AtomPartition::new(&a, spec.n()))
        .transpose()
        .map_err(|e| HarnessError::config("partition", e.to_string()))?;

    if let Some(f) = &raw.factors {
        if f.len() != spec.n() {
            return Err(HarnessError::config(
                "factors",
                format!("{} factors for {} atoms", f.len(), spec.n()),
            ));
        }
        if let Some((i, c)) = f
            .iter()
            .enumerate()
            .find(|(_, c)| !(**c > 0.0 && c.is_finite()))
        {
            return Err(HarnessError::config(
                &format!("factors[{i}]"),
                format!("{c} is not positive"),
            ));
        }
    }

    let tol = raw.tol.unwrap_or(DEFAULT_TOL);
    if !(tol > 0.0 && tol < 1.0) {
        return Err(HarnessError::config(
            "tol",
            format!("{tol} must lie in (0, 1)"),
        ));
    }
    let zero_tol = raw.zero_tol.unwrap_or(DEFAULT_ZERO_TOL);
    if !(0.0..1.0).contains(&zero_tol) {
        return Err(HarnessError::config(
            "zero_tol",
            format!("{zero_tol} must lie in [0, 1)"),
        ));
    }

    let config = ExperimentConfig {
        mode,
        spec,
        epsilons,
        trials,
        seed: raw.seed.unwrap_or(0),
        partition,
        factors: raw.factors,
        tol,
        zero_tol,
        output: raw.output,
    };
    validate_for_mode(&config)?;
    Ok(config)
}

fn validate_for_mode(c: &ExperimentConfig) -> Result<(), HarnessError> {
    let smooth = c.spec.q() > 1.0 && c.spec.q().is_finite();
    match c.mode {
        Mode::CheckOrtho | Mode::CheckApprox if !smooth => Err(HarnessError::config(
            "spec.q",
            "this mode builds support functionals and needs 1 < q < inf",
        )),
        Mode::Sip | Mode::Axioms if c.spec.p() <= 1.0 => Err(HarnessError::config(
            "spec.p",
            "semi-inner product needs p > 1",
        )),
        Mode::Sip | Mode::Axioms if !smooth => Err(HarnessError::config(
            "spec.q",
            "semi-inner product needs 1 < q < inf",
        )),
        Mode::PreserverSweep if !smooth => Err(HarnessError::config(
            "spec.q",
            "preservation trials need 1 < q < inf",
        )),
        Mode::PreserverSweep | Mode::IsometryTest
            if c.factors.is_none() && c.epsilons.contains(&0.0) =>
        {
            Err(HarnessError::config(
                "epsilons",
                "operators U_eps need epsilon in (0, 1)",
            ))
        }
        Mode::PreserverSweep | Mode::IsometryTest if c.spec.n() < 2 => Err(HarnessError::config(
            "spec.n",
            "operators need at least two atoms",
        )),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[spec]\np = 1\nq = 2\nn = 4\nd = 3\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL, Some(Mode::PreserverSweep)).unwrap();
        assert_eq!(c.tol, 1e-9);
        assert_eq!(c.zero_tol, 1e-12);
        assert_eq!(c.trials, DEFAULT_TRIALS);
        assert_eq!(c.epsilons, vec![0.5]);
        assert_eq!(c.seed, 0);
        assert_eq!(c.spec.weights(), &[1.0; 4]);
        assert!(c.partition.is_none() && c.output.is_none());
    }

    #[test]
    fn epsilon_one_is_rejected() {
        let text = format!("epsilons = [0.2, 1.0]\n{MINIMAL}");
        let e = parse_config(&text, Some(Mode::CheckApprox)).unwrap_err();
        assert!(e.to_string().contains("epsilons[1]"), "{e}");
    }

    #[test]
    fn zero_weight_is_rejected() {
        let text = "[spec]\np = 1\nq = 2\nd = 1\nweights = [1.0, 0.0]\n";
        let e = parse_config(text, Some(Mode::CheckApprox)).unwrap_err();
        assert!(e.to_string().contains("spec.weights[1]"), "{e}");
    }

    #[test]
    fn unknown_key_is_rejected_with_line() {
        let text = format!("{MINIMAL}colour = 3\n");
        let e = parse_config(&text, Some(Mode::CheckApprox)).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("line 6") && msg.contains("colour"), "{msg}");
    }

    #[test]
    fn mode_conflicts_and_lookup() {
        let text = format!("mode = \"axioms\"\n{MINIMAL}");
        assert!(parse_config(&text, Some(Mode::Sip)).is_err());
        assert!(parse_config(MINIMAL, None).is_err());
        let text = format!("mode = \"check-ortho\"\n{MINIMAL}");
        assert_eq!(parse_config(&text, None).unwrap().mode, Mode::CheckOrtho);
        assert!("bogus".parse::<Mode>().is_err());
    }

    #[test]
    fn mode_specific_requirements() {
        assert!(parse_config(MINIMAL, Some(Mode::Axioms)).is_err());
        let text = "[spec]\np = 2\nq = \"inf\"\nn = 2\nd = 1\n";
        assert!(parse_config(text, Some(Mode::Sip)).is_err());
        assert!(parse_config(text, Some(Mode::IsometryTest)).is_ok());
        let text = format!("epsilons = [0.0]\n{MINIMAL}");
        assert!(parse_config(&text, Some(Mode::PreserverSweep)).is_err());
        let text = format!("trials = 0\n{MINIMAL}");
        assert!(parse_config(&text, Some(Mode::CheckApprox)).is_err());
        let text = format!("partition = [0, 1, 2, 3]\n{MINIMAL}");
        assert!(parse_config(&text, Some(Mode::PreserverSweep)).is_err());
        let text = format!("factors = [1.0, 2.0]\n{MINIMAL}");
        assert!(parse_config(&text, Some(Mode::IsometryTest)).is_err());
    }
}
