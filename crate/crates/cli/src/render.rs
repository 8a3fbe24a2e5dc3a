//! Output rendering. Everything here is a pure function of its inputs so that
//! identical flags give byte-identical stdout.

use std::fmt::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::json;

use qvol_core::analysis::{best_row, ComparisonRow, ConvergenceReport, PointsToTarget};
use qvol_core::estimator::VolumeReport;
use qvol_core::sequences::SequenceKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    /// Aligned plain-text table.
    Human,
    Csv,
    /// One JSON object per line.
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum DisplayUnit {
    Mm3,
    Cm3,
}

impl DisplayUnit {
    fn scale(self, mm3: f64) -> f64 {
        match self {
            DisplayUnit::Mm3 => mm3,
            DisplayUnit::Cm3 => mm3 / 1000.0,
        }
    }

    fn label(self) -> &'static str {
        match self {
            DisplayUnit::Mm3 => "mm3",
            DisplayUnit::Cm3 => "cm3",
        }
    }
}

/// `x` with six significant digits, fixed notation.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

fn percent(e: f64) -> String {
    format!("{:.4}%", e * 100.0)
}

fn sci(e: f64) -> String {
    format!("{e:.6e}")
}

/// Quotes a CSV field when it contains a delimiter or quote.
fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

fn method_name(kind: SequenceKind) -> &'static str {
    match kind {
        SequenceKind::Halton => "halton",
        SequenceKind::Pseudorandom => "mc",
    }
}

fn layout_name(report: &VolumeReport) -> &'static str {
    match report.layout {
        qvol_core::estimator::SliceLayout::Continued => "continued",
        qvol_core::estimator::SliceLayout::RestartPerSlice => "restart-per-slice",
    }
}

pub fn phantom(true_mm3: f64, voxel_mm3: f64, reference_mm3: f64, manifest: &Path) -> String {
    format!(
        "true_volume_mm3={}\nvoxel_volume_mm3={}\nreference_volume_mm3={}\nmanifest={}\n",
        sig6(true_mm3),
        sig6(voxel_mm3),
        sig6(reference_mm3),
        manifest.display()
    )
}

pub fn volume(report: &VolumeReport, format: OutputFormat, per_slice: bool) -> String {
    let mut out = String::new();
    let method = report.method.describe();
    match format {
        OutputFormat::Human => {
            let rows = [
                ("method", method),
                ("layout", layout_name(report).to_string()),
                ("points_per_slice", report.points_per_slice.to_string()),
                ("slices", report.per_slice.len().to_string()),
                ("volume_mm3", sig6(report.volume_mm3)),
                ("volume_cm3", sig6(report.volume_mm3 / 1000.0)),
                ("truth_mm3", opt(report.truth_mm3, sig6)),
                ("relative_error", opt(report.relative_error, percent)),
            ];
            for (k, v) in rows {
                if !v.is_empty() {
                    let _ = writeln!(out, "{k:<18}{v}");
                }
            }
            if per_slice {
                let _ = writeln!(out, "\n{:>6} {:>10} {:>10} {:>14}", "slice", "hits", "total", "area_mm2");
                for a in &report.per_slice {
                    let _ = writeln!(
                        out,
                        "{:>6} {:>10} {:>10} {:>14}",
                        a.slice_index,
                        a.hits,
                        a.total,
                        sig6(a.area_mm2)
                    );
                }
            }
        }
        OutputFormat::Csv => {
            if per_slice {
                out.push_str("slice,hits,total,area_mm2\n");
                for a in &report.per_slice {
                    let _ = writeln!(out, "{},{},{},{}", a.slice_index, a.hits, a.total, sig6(a.area_mm2));
                }
            } else {
                out.push_str("method,points_per_slice,volume_mm3,truth_mm3,relative_error\n");
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    csv_field(&method),
                    report.points_per_slice,
                    sig6(report.volume_mm3),
                    opt(report.truth_mm3, sig6),
                    opt(report.relative_error, sci)
                );
            }
        }
        OutputFormat::Json => {
            let summary = json!({
                "type": "volume",
                "method": method,
                "layout": layout_name(report),
                "points_per_slice": report.points_per_slice,
                "slices": report.per_slice.len(),
                "volume_mm3": report.volume_mm3,
                "truth_mm3": report.truth_mm3,
                "relative_error": report.relative_error,
            });
            let _ = writeln!(out, "{summary}");
            if per_slice {
                for a in &report.per_slice {
                    let line = json!({
                        "type": "slice",
                        "slice": a.slice_index,
                        "hits": a.hits,
                        "total": a.total,
                        "area_mm2": a.area_mm2,
                    });
                    let _ = writeln!(out, "{line}");
                }
            }
        }
    }
    out
}

pub fn compare(rows: &[ComparisonRow], format: OutputFormat, unit: DisplayUnit) -> String {
    let mut out = String::new();
    let best = best_row(rows);
    match format {
        OutputFormat::Human => {
            let vol_header = format!("volume_{}", unit.label());
            let _ = writeln!(out, "{:<8} {:<20} {:>14} {:>12}  best", "method", "sequence", vol_header, "rel_error");
            for (i, r) in rows.iter().enumerate() {
                let mark = if best == Some(i) { "*" } else { "" };
                let _ = writeln!(
                    out,
                    "{:<8} {:<20} {:>14} {:>12}  {}",
                    method_name(r.method),
                    r.spec.describe(),
                    sig6(unit.scale(r.volume_mm3)),
                    opt(r.relative_error, percent),
                    mark
                );
            }
            // Trim the trailing spaces left by an empty marker column.
            out = out.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n";
        }
        OutputFormat::Csv => {
            out.push_str("method,volume_mm3,relative_error\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    method_name(r.method),
                    sig6(r.volume_mm3),
                    opt(r.relative_error, sci)
                );
            }
        }
        OutputFormat::Json => {
            for (i, r) in rows.iter().enumerate() {
                let line = json!({
                    "method": method_name(r.method),
                    "sequence": r.spec.describe(),
                    "volume_mm3": r.volume_mm3,
                    "relative_error": r.relative_error,
                    "best": best == Some(i),
                });
                let _ = writeln!(out, "{line}");
            }
        }
    }
    out
}

pub fn converge(report: &ConvergenceReport, truth: f64, format: OutputFormat) -> String {
    let mut out = String::new();
    let n = report.n_grid.len();
    match format {
        OutputFormat::Human => {
            let _ = writeln!(out, "truth_mm3 {}  seeds {}", sig6(truth), report.seeds);
            let _ = writeln!(
                out,
                "{:>8} {:>14} {:>14} {:>14} {:>14} {:>14}",
                "n", "qmc_error", "mc_error_mean", "mc_error_std", "theory_qmc", "theory_mc"
            );
            for i in 0..n {
                let _ = writeln!(
                    out,
                    "{:>8} {:>14} {:>14} {:>14} {:>14} {:>14}",
                    report.n_grid[i],
                    sci(report.qmc_errors[i]),
                    sci(report.mc_error_mean[i]),
                    sci(report.mc_error_std[i]),
                    sci(report.theory_qmc[i]),
                    sci(report.theory_mc[i])
                );
            }
            let slope = |s: Option<f64>| opt(s, |v| format!("{v:.3}"));
            let _ = writeln!(
                out,
                "loglog slope: qmc {}  mc {}",
                slope(report.qmc_slope()),
                slope(report.mc_slope())
            );
        }
        OutputFormat::Csv => {
            out.push_str("n,qmc_error,mc_error_mean,mc_error_std,theory_qmc,theory_mc\n");
            for i in 0..n {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    report.n_grid[i],
                    sci(report.qmc_errors[i]),
                    sci(report.mc_error_mean[i]),
                    sci(report.mc_error_std[i]),
                    sci(report.theory_qmc[i]),
                    sci(report.theory_mc[i])
                );
            }
        }
        OutputFormat::Json => {
            for i in 0..n {
                let line = json!({
                    "n": report.n_grid[i],
                    "qmc_error": report.qmc_errors[i],
                    "mc_error_mean": report.mc_error_mean[i],
                    "mc_error_std": report.mc_error_std[i],
                    "theory_qmc": report.theory_qmc[i],
                    "theory_mc": report.theory_mc[i],
                });
                let _ = writeln!(out, "{line}");
            }
        }
    }
    out
}

pub fn points_to_target(result: &PointsToTarget, truth: f64, format: OutputFormat) -> String {
    let reached = |n: Option<u64>| n.map(|v| v.to_string()).unwrap_or_else(|| "not-reached".into());
    let ratio = opt(result.ratio, |r| format!("{r:.3}"));
    match format {
        OutputFormat::Human => format!(
            "target     {}\ntruth_mm3  {}\nn_mc       {}\nn_qmc      {}\nratio      {}\n",
            percent(result.target),
            sig6(truth),
            reached(result.n_mc),
            reached(result.n_qmc),
            if ratio.is_empty() { "undefined".to_string() } else { ratio }
        ),
        OutputFormat::Csv => format!(
            "target,n_mc,n_qmc,ratio\n{},{},{},{}\n",
            result.target,
            reached(result.n_mc),
            reached(result.n_qmc),
            ratio
        ),
        OutputFormat::Json => {
            let line = json!({
                "target": result.target,
                "truth_mm3": truth,
                "n_mc": result.n_mc,
                "n_qmc": result.n_qmc,
                "ratio": result.ratio,
            });
            format!("{line}\n")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(512000.0), "512000");
        assert_eq!(sig6(424115.00823), "424115");
        assert_eq!(sig6(424.11500823), "424.115");
        assert_eq!(sig6(0.00123456789), "0.00123457");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(-2.5), "-2.50000");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("mc(seed=1)"), "mc(seed=1)");
        assert_eq!(csv_field("halton(2,11)@1"), "\"halton(2,11)@1\"");
        assert_eq!(csv_field("a\"b,"), "\"a\"\"b,\"");
    }

    #[test]
    fn percent_and_sci() {
        assert_eq!(percent(0.001543), "0.1543%");
        assert_eq!(sci(0.00125), "1.250000e-3");
    }

    #[test]
    fn points_to_target_not_reached() {
        let r = PointsToTarget {
            target: 0.01,
            n_mc: None,
            n_qmc: Some(30),
            ratio: None,
        };
        assert_eq!(
            points_to_target(&r, 100.0, OutputFormat::Csv),
            "target,n_mc,n_qmc,ratio\n0.01,not-reached,30,\n"
        );
        assert!(points_to_target(&r, 100.0, OutputFormat::Human).contains("ratio      undefined"));
        assert!(points_to_target(&r, 100.0, OutputFormat::Json).contains("\"n_mc\":null"));
    }
}
