use std::fs::File;
use std::io::BufWriter;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::blockspace::bochner_norm;
use crate::error::Error;
use crate::ortho::{
    certificate_check, is_approx_bj_orthogonal, is_bj_orthogonal, ApproxParam, CheckResult,
    Tolerances,
};
use crate::preserver::{
    draw_nonzero, draw_orthogonal_pair, function_l1_operator, function_lp_operator,
    is_scalar_multiple_of_isometry, preservation_trial, sequence_l1_operator, AtomPartition,
    ScalingOperator,
};
use crate::sip::{sip_axiom_report, sip_orthogonality_criterion};

use super::config::{ExperimentConfig, Mode};
use super::report::{Outcome, RunReport, TrialRow};
use super::HarnessError;

/// Relative bound on the self-product residual in `axioms` mode.
const SELF_PRODUCT_TOL: f64 = 1e-10;

/// The random stream of one trial.
pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Executes `config`, writing the CSV to `config.output` when set.
///
/// `threads` caps the worker count; `None` lets rayon decide. Rows come back
/// in trial order whatever the scheduling.
pub fn run(config: &ExperimentConfig, threads: Option<usize>) -> Result<RunReport, HarnessError> {
    let start = Instant::now();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Io(std::io::Error::other(e)))?;
    let runner = Runner::new(config)?;
    let (rows, notes) = pool.install(|| runner.execute())?;

    let report = RunReport::new(
        config.mode,
        config.seed,
        rows,
        notes,
        start.elapsed().as_secs_f64(),
    );
    if let Some(path) = &config.output {
        report.write_csv(BufWriter::new(File::create(path)?))?;
    }
    Ok(report)
}

struct Runner<'a> {
    config: &'a ExperimentConfig,
    tols: Tolerances,
    /// One operator per epsilon for the operator modes.
    operators: Vec<ScalingOperator>,
}

impl<'a> Runner<'a> {
    fn new(config: &'a ExperimentConfig) -> Result<Self, HarnessError> {
        let operators = match config.mode {
            Mode::PreserverSweep | Mode::IsometryTest => match &config.factors {
                Some(f) if config.mode == Mode::IsometryTest => {
                    vec![ScalingOperator::new(f.clone())?]
                }
                Some(_) => {
                    return Err(HarnessError::config(
                        "factors",
                        "explicit factors are only used by isometry-test",
                    ))
                }
                None => config
                    .epsilons
                    .iter()
                    .map(|&e| operator_for(config, e))
                    .collect::<Result<_, _>>()?,
            },
            _ => Vec::new(),
        };
        Ok(Self {
            config,
            tols: Tolerances::with_tol(config.tol, config.zero_tol),
            operators,
        })
    }

    fn jobs(&self) -> Vec<(usize, u64)> {
        let per = self.config.trials as u64;
        let groups = match self.config.mode {
            Mode::CheckOrtho | Mode::Axioms => 1,
            Mode::IsometryTest => self.operators.len(),
            _ => self.config.epsilons.len(),
        };
        if self.config.mode == Mode::IsometryTest {
            return (0..groups).map(|g| (g, 0)).collect();
        }
        (0..groups)
            .flat_map(|g| (0..per).map(move |t| (g, t)))
            .collect()
    }

    fn execute(&self) -> Result<(Vec<TrialRow>, Vec<String>), HarnessError> {
        let rows = self
            .jobs()
            .into_par_iter()
            .map(|(group, trial)| self.trial(group, trial))
            .collect::<Result<Vec<_>, Error>>()?;
        let notes = if self.config.mode == Mode::IsometryTest {
            rows.iter()
                .map(|r| {
                    format!(
                        "epsilon {}: scalar multiple of isometry: {}",
                        r.epsilon,
                        if r.verdict_a { "yes" } else { "no" }
                    )
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok((rows, notes))
    }

    fn base_row(&self, trial: u64, epsilon: f64) -> TrialRow {
        let spec = &self.config.spec;
        TrialRow {
            trial,
            seed: self.config.seed,
            p: spec.p(),
            q: spec.q(),
            n: spec.n(),
            d: spec.d(),
            epsilon,
            route_a: "",
            verdict_a: false,
            margin_a: f64::NAN,
            route_b: "",
            verdict_b: false,
            margin_b: f64::NAN,
            boundary: false,
            outcome: Outcome::Fail,
        }
    }

    fn trial(&self, group: usize, trial: u64) -> Result<TrialRow, Error> {
        let c = self.config;
        let spec = &c.spec;
        let stream = group as u64 * c.trials as u64 + trial;
        let mut rng = trial_rng(c.seed, stream);
        let epsilon = match c.mode {
            Mode::CheckOrtho | Mode::Axioms => 0.0,
            Mode::IsometryTest if c.factors.is_some() => 0.0,
            _ => c.epsilons[group],
        };
        let mut row = self.base_row(stream, epsilon);

        match c.mode {
            Mode::CheckOrtho => {
                let (x, y) = draw_orthogonal_pair(spec, &mut rng)?;
                let a = is_bj_orthogonal(&x, &y, spec, &self.tols)?;
                let b = certificate_check(&x, &y, ApproxParam::exact(), spec, &self.tols)?;
                fill_routes(&mut row, ("direct", &a), ("certificate", &b));
                row.outcome = Outcome::classify(a.verdict && b.verdict, row.boundary);
            }
            Mode::CheckApprox | Mode::Sip => {
                let eps = ApproxParam::new(epsilon)?;
                let x = draw_nonzero(spec, &mut rng)?;
                let y = draw_nonzero(spec, &mut rng)?;
                let a = is_approx_bj_orthogonal(&x, &y, eps, spec, &self.tols)?;
                let (name, b) = if c.mode == Mode::Sip {
                    (
                        "sip",
                        sip_orthogonality_criterion(&x, &y, eps, spec, &self.tols)?,
                    )
                } else {
                    (
                        "certificate",
                        certificate_check(&x, &y, eps, spec, &self.tols)?,
                    )
                };
                fill_routes(&mut row, ("direct", &a), (name, &b));
                row.outcome = Outcome::classify(a.verdict == b.verdict, row.boundary);
            }
            Mode::Axioms => {
                let f = spec.random_element(&mut rng);
                let g = spec.random_element(&mut rng);
                let h = spec.random_element(&mut rng);
                let a = rng.random_range(-2.0..2.0);
                let b = rng.random_range(-2.0..2.0);
                let report = sip_axiom_report(&f, &g, &h, a, b, spec)?;
                let fnorm = bochner_norm(&f, spec)?;
                let self_rel = report.norm_consistency / (fnorm * fnorm);
                row.route_a = "axioms";
                row.verdict_a = report.holds(crate::harness::DEFAULT_TOL);
                row.margin_a = report.normalized();
                row.route_b = "self";
                row.verdict_b = self_rel <= SELF_PRODUCT_TOL;
                row.margin_b = self_rel;
                row.outcome = Outcome::classify(row.verdict_a && row.verdict_b, false);
            }
            Mode::PreserverSweep => {
                let eps = ApproxParam::new(epsilon)?;
                let rec =
                    preservation_trial(&self.operators[group], eps, spec, &self.tols, &mut rng)?;
                let (ra, rb) = (&rec.routes[0], &rec.routes[1]);
                row.route_a = ra.route.name();
                row.verdict_a = ra.verdict;
                row.margin_a = ra.margin;
                row.route_b = rb.route.name();
                row.verdict_b = rb.verdict;
                row.margin_b = rb.margin;
                row.boundary = rec.boundary();
                row.outcome = Outcome::classify(rec.all_true(), row.boundary);
            }
            Mode::IsometryTest => {
                let u = &self.operators[group];
                let v = is_scalar_multiple_of_isometry(u, spec, c.trials, c.tol, &mut rng)?;
                row.route_a = "isometry";
                row.verdict_a = v.is_scalar_isometry;
                row.margin_a = v.spread;
                let uniform = u.factors().iter().all(|&f| f == u.factors()[0]);
                if c.factors.is_some() {
                    row.route_b = "uniform";
                    row.verdict_b = uniform;
                    row.margin_b = 0.0;
                    row.outcome = Outcome::classify(v.is_scalar_isometry == uniform, false);
                } else {
                    let floor = epsilon / (2.0 * spec.p());
                    row.route_b = "spread-floor";
                    row.verdict_b = v.spread >= floor;
                    row.margin_b = v.spread - floor;
                    row.outcome = Outcome::classify(!v.is_scalar_isometry && row.verdict_b, false);
                }
            }
        }
        Ok(row)
    }
}

fn fill_routes(
    row: &mut TrialRow,
    a: (&'static str, &CheckResult),
    b: (&'static str, &CheckResult),
) {
    row.route_a = a.0;
    row.verdict_a = a.1.verdict;
    row.margin_a = a.1.margin;
    row.route_b = b.0;
    row.verdict_b = b.1.verdict;
    row.margin_b = b.1.margin;
    row.boundary = a.1.boundary || b.1.boundary;
}

/// The operator matching the space: the sequence operator on `l^1` without
/// an explicit partition, otherwise the `L^1` or `L^p` operator with the
/// configured partition (default: the first half of the atoms).
fn operator_for(config: &ExperimentConfig, epsilon: f64) -> Result<ScalingOperator, HarnessError> {
    let spec = &config.spec;
    let eps = ApproxParam::new(epsilon)?;
    let part = match &config.partition {
        Some(p) => p.clone(),
        None => AtomPartition::leading(spec.n() / 2, spec.n())?,
    };
    let op = if spec.p() == 1.0 {
        if config.partition.is_none() && spec.is_counting_l1() {
            sequence_l1_operator(eps, spec)?
        } else {
            function_l1_operator(eps, &part, spec)?
        }
    } else {
        function_lp_operator(eps, &part, spec)?
    };
    Ok(op)
}
