//! Executes an [`ExperimentSpec`] and writes its CSV files.
//!
//! All computation happens first; files are written afterwards, once, from
//! this thread.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use platoon::analytic::{
    compare_feedback_with_oracle, feedback_stopping_pmf, nc_exact_pmf, nc_expected_bound,
    nc_stopping_pmf_bound, rank_full_probability, AnalyticError, OracleComparison, ProblemSpec,
    RoundPmf,
};
use platoon::sim::{full_rank_frequency, run_experiment, SchemeSummary, SimConfig};
use platoon::Scheme;
use thiserror::Error;

use crate::config::{ExperimentSpec, Mode};
use crate::report::{
    fmt_g12, pmf_csv, summary_csv, summary_table, PmfRow, SummaryRow, ORACLE_HEADER,
    RANKPROB_HEADER,
};
use crate::VERSION;

pub const SUMMARY_FILE: &str = "summary.csv";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const ORACLE_FILE: &str = "oracle.csv";
pub const RANKPROB_FILE: &str = "rankprob.csv";

#[derive(Debug, Error)]
pub enum RunError {
    #[error("cannot write {}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        1
    }
}

/// Results for one `(M, m, scheme)` cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub spec: ProblemSpec,
    pub scheme: Scheme,
    pub analytic: Option<RoundPmf>,
    pub per_round_bound: Option<RoundPmf>,
    pub mean_bound: Option<f64>,
    pub empirical: Option<SchemeSummary>,
}

impl CellResult {
    /// Inclusive round range covered by the pmf table.
    pub fn round_range(&self) -> (usize, usize) {
        let mut lo = usize::MAX;
        let mut hi = 0;
        if let Some(p) = &self.analytic {
            lo = lo.min(p.t_min());
            hi = hi.max(p.t_max());
        }
        if let Some(e) = &self.empirical {
            lo = lo.min(e.min_rounds);
            hi = hi.max(e.max_rounds);
        }
        (lo, hi)
    }

    pub fn pmf_rows(&self) -> Vec<PmfRow> {
        let (lo, hi) = self.round_range();
        let empirical = self.empirical.as_ref().map(SchemeSummary::pmf);
        (lo..=hi)
            .map(|t| PmfRow {
                t,
                analytic_p: self.analytic.as_ref().map(|p| p.prob(t)),
                empirical_p: empirical.as_ref().map(|p| p.prob(t)),
                bound_p: self.per_round_bound.as_ref().map(|p| p.prob(t)),
            })
            .collect()
    }

    pub fn summary_row(&self, seed: u64) -> SummaryRow {
        let (t_min, t_max) = self.round_range();
        SummaryRow {
            total_packets: self.spec.total_packets(),
            per_round: self.spec.per_round(),
            scheme: self.scheme.name(),
            analytic_mean: self.analytic.as_ref().map(RoundPmf::mean),
            empirical_mean: self.empirical.as_ref().map(|e| e.mean),
            stderr: self.empirical.as_ref().map(|e| e.stderr),
            bound: self.mean_bound,
            t_min,
            t_max,
            seed,
            version: VERSION,
        }
    }

    pub fn pmf_file_name(&self) -> String {
        format!(
            "pmf_M{}_m{}_{}.csv",
            self.spec.total_packets(),
            self.spec.per_round(),
            self.scheme.name()
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankProbResult {
    pub rows: usize,
    pub cols: usize,
    pub field_exponent: u8,
    pub exact: f64,
    pub empirical: f64,
    pub stderr: f64,
}

#[derive(Debug, Default)]
pub struct RunReport {
    pub cells: Vec<CellResult>,
    pub rows: Vec<SummaryRow>,
    pub oracle: Vec<OracleComparison>,
    pub rankprob: Option<RankProbResult>,
    pub files: Vec<PathBuf>,
    /// Human-readable summary for stdout.
    pub text: String,
}

pub fn run(spec: &ExperimentSpec) -> Result<RunReport, RunError> {
    let mut report = RunReport::default();
    let mut outputs: Vec<(String, String)> = Vec::new();

    if spec.mode == Mode::RankProb {
        let (rows, cols) = (
            spec.rows.expect("validated by parse_config"),
            spec.cols.expect("validated by parse_config"),
        );
        let exact = rank_full_probability(rows, cols, spec.field_exponent);
        let (empirical, stderr) = in_pool(spec.workers, || {
            full_rank_frequency(rows, cols, spec.field_exponent, spec.trials, spec.seed)
        });
        outputs.push((
            RANKPROB_FILE.into(),
            format!(
                "{RANKPROB_HEADER}\n{rows},{cols},{},{},{},{}\n",
                spec.field_exponent,
                fmt_g12(exact),
                fmt_g12(empirical),
                fmt_g12(stderr)
            ),
        ));
        let _ = writeln!(
            report.text,
            "P(rank = {cols}) for a random {rows}×{cols} matrix over GF(2^{q}) (Q = {big_q}): \
             exact {exact:.6}, empirical {empirical:.6} ± {stderr:.1e} over {trials} trials",
            q = spec.field_exponent,
            big_q = 1u32 << spec.field_exponent,
            trials = spec.trials,
        );
        report.rankprob = Some(RankProbResult {
            rows,
            cols,
            field_exponent: spec.field_exponent,
            exact,
            empirical,
            stderr,
        });
    } else {
        let with_analytic = matches!(spec.mode, Mode::Analytic | Mode::Compare);
        let with_empirical = matches!(spec.mode, Mode::Simulate | Mode::Compare);
        let schemes = spec.scheme.schemes();

        for (total, m) in spec.cells() {
            let problem = ProblemSpec::new(total, m, spec.field_exponent)?;
            let empirical = with_empirical.then(|| {
                let config = SimConfig::new(spec.trials, spec.seed)
                    .schemes(&schemes)
                    .workers(spec.workers);
                run_experiment(&problem, &config)
            });
            for &scheme in &schemes {
                let (analytic, per_round_bound) = match (with_analytic, scheme) {
                    (false, _) => (None, None),
                    (true, Scheme::Feedback) => (Some(feedback_stopping_pmf(&problem)), None),
                    (true, Scheme::NetworkCoding) => (
                        Some(nc_exact_pmf(&problem)),
                        Some(nc_stopping_pmf_bound(&problem)),
                    ),
                };
                let mean_bound = (scheme == Scheme::NetworkCoding)
                    .then(|| nc_expected_bound(&problem).value);
                report.cells.push(CellResult {
                    spec: problem,
                    scheme,
                    analytic,
                    per_round_bound,
                    mean_bound,
                    empirical: empirical.as_ref().and_then(|e| e.scheme(scheme)).cloned(),
                });
            }
            if spec.oracle && spec.mode == Mode::Analytic && schemes.contains(&Scheme::Feedback) {
                report.oracle.push(compare_feedback_with_oracle(&problem)?);
            }
        }

        report.rows = report.cells.iter().map(|c| c.summary_row(spec.seed)).collect();
        outputs.push((SUMMARY_FILE.into(), summary_csv(&report.rows)));
        for cell in &report.cells {
            outputs.push((cell.pmf_file_name(), pmf_csv(&cell.pmf_rows())));
        }
        report.text.push_str(&summary_table(&report.rows));

        if !report.oracle.is_empty() {
            let mut csv = format!("{ORACLE_HEADER}\n");
            report.text.push_str("\nclosed form vs enumeration oracle (feedback):\n");
            for cmp in &report.oracle {
                let capped: Vec<String> = cmp
                    .rounds
                    .iter()
                    .filter(|r| r.2)
                    .map(|r| r.0.to_string())
                    .collect();
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    cmp.spec.total_packets(),
                    cmp.spec.per_round(),
                    fmt_g12(cmp.max_deviation()),
                    fmt_g12(cmp.max_uncapped_deviation()),
                    capped.join(" ")
                );
                let _ = writeln!(
                    report.text,
                    "  M={:<4} m={:<3} max |Δ| = {:.3e}",
                    cmp.spec.total_packets(),
                    cmp.spec.per_round(),
                    cmp.max_deviation()
                );
            }
            outputs.push((ORACLE_FILE.into(), csv));
        }
    }

    outputs.push((MANIFEST_FILE.into(), manifest(spec)));
    report.files = write_outputs(&spec.output, &outputs)?;
    let _ = writeln!(report.text, "\nwrote {} files to {}", report.files.len(), spec.output.display());
    Ok(report)
}

/// Seed, version and the full configuration, one `key = value` per line.
fn manifest(spec: &ExperimentSpec) -> String {
    let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    let _ = writeln!(out, "version = {VERSION}");
    let _ = writeln!(out, "mode = {}", spec.mode.name());
    let _ = writeln!(out, "seed = {}", spec.seed);
    let _ = writeln!(out, "trials = {}", spec.trials);
    let _ = writeln!(out, "field_exponent = {}", spec.field_exponent);
    let _ = writeln!(out, "field_size = {}", 1u32 << spec.field_exponent);
    match spec.mode {
        Mode::RankProb => {
            let _ = writeln!(out, "t = {}", spec.rows.unwrap_or(0));
            let _ = writeln!(out, "n = {}", spec.cols.unwrap_or(0));
        }
        _ => {
            let _ = writeln!(out, "M = {}", join(&spec.total_packets));
            let _ = writeln!(out, "m = {}", join(&spec.per_round));
            let names: Vec<&str> = spec.scheme.schemes().iter().map(|s| s.name()).collect();
            let _ = writeln!(out, "schemes = {}", names.join(","));
        }
    }
    out
}

fn write_outputs(dir: &Path, outputs: &[(String, String)]) -> Result<Vec<PathBuf>, RunError> {
    std::fs::create_dir_all(dir).map_err(|source| RunError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    outputs
        .iter()
        .map(|(name, body)| {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|source| RunError::Io {
                path: path.clone(),
                source,
            })?;
            Ok(path)
        })
        .collect()
}

fn in_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool")
        .install(f)
}
