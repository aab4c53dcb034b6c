use std::fmt::Write as _;
use std::io::{self, Write};

use serde::Serialize;

use super::config::Mode;

/// First line of every CSV report.
pub const CSV_VERSION: &str = "#v1";

const CSV_COLUMNS: &str = "trial,seed,p,q,n,d,epsilon,route_a,verdict_a,margin_a,route_b,verdict_b,margin_b,boundary,outcome";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    /// Every verdict matched the prediction.
    Pass,
    /// A mismatch that a boundary flag explains.
    Boundary,
    /// An unexplained mismatch.
    Fail,
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Pass => "pass",
            Outcome::Boundary => "boundary",
            Outcome::Fail => "fail",
        }
    }

    /// Classifies a trial from whether it matched its prediction and whether
    /// any route flagged it as near the boundary.
    pub fn classify(matched: bool, flagged: bool) -> Self {
        match (matched, flagged) {
            (true, _) => Outcome::Pass,
            (false, true) => Outcome::Boundary,
            (false, false) => Outcome::Fail,
        }
    }
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRow {
    pub trial: u64,
    pub seed: u64,
    pub p: f64,
    pub q: f64,
    pub n: usize,
    pub d: usize,
    pub epsilon: f64,
    pub route_a: &'static str,
    pub verdict_a: bool,
    pub margin_a: f64,
    pub route_b: &'static str,
    pub verdict_b: bool,
    pub margin_b: f64,
    pub boundary: bool,
    pub outcome: Outcome,
}

/// 17 significant digits, enough to round-trip an `f64`.
fn decimal(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

impl TrialRow {
    fn write_csv(&self, out: &mut String) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.trial,
            self.seed,
            decimal(self.p),
            decimal(self.q),
            self.n,
            self.d,
            decimal(self.epsilon),
            self.route_a,
            self.verdict_a,
            decimal(self.margin_a),
            self.route_b,
            self.verdict_b,
            decimal(self.margin_b),
            self.boundary,
            self.outcome.name(),
        );
    }
}

/// Aggregate counts printed as a single JSON object.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mode: String,
    pub seed: u64,
    pub trials: usize,
    pub pass: usize,
    pub fail: usize,
    pub boundary: usize,
    /// Trials where any route raised its boundary flag, whatever the outcome.
    pub flagged: usize,
    pub max_abs_margin_pass: f64,
    pub wall_time_s: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    pub mode: Mode,
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
}

impl RunReport {
    pub(crate) fn new(
        mode: Mode,
        seed: u64,
        rows: Vec<TrialRow>,
        notes: Vec<String>,
        wall_time_s: f64,
    ) -> Self {
        let count = |o: Outcome| rows.iter().filter(|r| r.outcome == o).count();
        let max_abs_margin_pass = rows
            .iter()
            .filter(|r| r.outcome == Outcome::Pass)
            .flat_map(|r| [r.margin_a.abs(), r.margin_b.abs()])
            .filter(|m| m.is_finite())
            .fold(0.0, f64::max);
        let summary = Summary {
            mode: mode.name().to_string(),
            seed,
            trials: rows.len(),
            pass: count(Outcome::Pass),
            fail: count(Outcome::Fail),
            boundary: count(Outcome::Boundary),
            flagged: rows.iter().filter(|r| r.boundary).count(),
            max_abs_margin_pass,
            wall_time_s,
            notes,
        };
        Self {
            mode,
            rows,
            summary,
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{CSV_VERSION} bjlab {}", self.mode.name());
        out.push_str(CSV_COLUMNS);
        out.push('\n');
        for row in &self.rows {
            row.write_csv(&mut out);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.csv().as_bytes())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary is always serializable")
    }

    /// 0 when every trial passed or failed only inside the boundary band, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.summary.fail == 0 {
            0
        } else {
            2
        }
    }
}
