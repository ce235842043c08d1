//! Machine-readable report output: plot-ready CSV and a JSON mirror of the
//! report structure. Identical reports serialize to identical bytes.

use crate::error::Result;
use crate::sweep::ConvergenceReport;

/// 17 significant digits: enough to reproduce any f64 exactly.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// CSV with one row per grid point and a trailing comment block carrying the
/// limit, its uncertainty, the reference and the verdict.
pub fn emit_csv(report: &ConvergenceReport) -> String {
    let mut out = String::new();
    out.push_str("gap,value,scaled_value,excluded_pair_fraction,correction_added\n");
    for i in 0..report.gaps.len() {
        let v = &report.values[i];
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            full(report.gaps[i]),
            full(v.value),
            full(report.scaled_values[i]),
            full(v.excluded_pair_fraction),
            full(v.correction_added),
        ));
    }
    out.push_str(&format!("# limit = {}\n", full(report.limit.value)));
    out.push_str(&format!("# uncertainty = {}\n", full(report.limit.uncertainty)));
    out.push_str(&format!("# model = {}\n", report.limit.model));
    match &report.reference {
        Some(r) => {
            out.push_str(&format!("# reference = {} ({})\n", full(r.value), r.provenance))
        }
        None => out.push_str("# reference = none\n"),
    }
    match &report.verdict {
        Some(v) => out.push_str(&format!(
            "# verdict = {} (relative error {}, tolerance {})\n",
            if v.pass { "pass" } else { "fail" },
            full(v.relative_error),
            full(v.tolerance),
        )),
        None => out.push_str("# verdict = none\n"),
    }
    out
}

/// JSON mirroring the report fields one-to-one. serde_json prints shortest
/// round-trip decimals, so re-parsing reproduces every f64 bit-exactly.
pub fn emit_json(report: &ConvergenceReport) -> Result<String> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    Ok(text)
}
