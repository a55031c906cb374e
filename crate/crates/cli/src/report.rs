//! CSV layouts and number formatting. The column sets are fixed.

use std::fmt::Write as _;

pub const SUMMARY_HEADER: &str = "M,m,scheme,analytic_mean,empirical_mean,stderr,bound,t_min,t_max";
pub const PMF_HEADER: &str = "t,analytic_p,empirical_p,bound_p";
pub const RANKPROB_HEADER: &str = "t,n,q,exact_p,empirical_p,stderr";
pub const ORACLE_HEADER: &str = "M,m,max_abs_deviation,max_uncapped_deviation,capped_rounds";

/// Formats like C's `%.12g`: 12 significant digits, trailing zeros removed,
/// scientific notation outside `1e-4 ≤ |x| < 1e12` (after rounding).
pub fn fmt_g12(x: f64) -> String {
    const PRECISION: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_g12).unwrap_or_default()
}

/// One line of the summary table. Absent values render as empty fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub total_packets: usize,
    pub per_round: usize,
    pub scheme: &'static str,
    pub analytic_mean: Option<f64>,
    pub empirical_mean: Option<f64>,
    pub stderr: Option<f64>,
    pub bound: Option<f64>,
    pub t_min: usize,
    pub t_max: usize,
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmfRow {
    pub t: usize,
    pub analytic_p: Option<f64>,
    pub empirical_p: Option<f64>,
    pub bound_p: Option<f64>,
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.total_packets,
            r.per_round,
            r.scheme,
            opt(r.analytic_mean),
            opt(r.empirical_mean),
            opt(r.stderr),
            opt(r.bound),
            r.t_min,
            r.t_max
        );
    }
    out
}

pub fn pmf_csv(rows: &[PmfRow]) -> String {
    let mut out = String::from(PMF_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            r.t,
            opt(r.analytic_p),
            opt(r.empirical_p),
            opt(r.bound_p)
        );
    }
    out
}

/// Fixed-width text table for the terminal.
pub fn summary_table(rows: &[SummaryRow]) -> String {
    let cell = |x: Option<f64>| x.map(|v| format!("{v:.5}")).unwrap_or_else(|| "-".into());
    let mut out = format!(
        "{:>6} {:>4} {:>9} {:>12} {:>12} {:>10} {:>12} {:>6} {:>6}\n",
        "M", "m", "scheme", "analytic", "empirical", "stderr", "bound", "t_min", "t_max"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>4} {:>9} {:>12} {:>12} {:>10} {:>12} {:>6} {:>6}",
            r.total_packets,
            r.per_round,
            r.scheme,
            cell(r.analytic_mean),
            cell(r.empirical_mean),
            r.stderr.map(|v| format!("{v:.2e}")).unwrap_or_else(|| "-".into()),
            cell(r.bound),
            r.t_min,
            r.t_max
        );
    }
    out
}
