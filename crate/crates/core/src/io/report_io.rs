//! Report serialization: pretty JSON plus flat CSV tables.
//!
//! `cells.csv` is the generic long format with columns
//! `cell,stat,value,std_error,ci_lo,ci_hi,pass`; experiments carrying a
//! `slope` cell additionally emit `slope.csv` with columns
//! `n,m,slope,ci_lo,ci_hi,pass`. Floats are emitted with 17 significant
//! digits, enough to round-trip f64 exactly.

use std::path::Path;

use super::IoError;
use crate::experiments::Report;

/// Format a float with 17 significant digits.
pub fn format_g17(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    format!("{x:.16e}")
}

fn opt_g17(x: Option<f64>) -> String {
    x.map(format_g17).unwrap_or_default()
}

/// Render the generic long-format cell table.
pub fn render_cells_csv(report: &Report) -> String {
    let mut out = String::from("cell,stat,value,std_error,ci_lo,ci_hi,pass\n");
    for cell in &report.cells {
        for stat in &cell.stats {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                cell.id,
                stat.name,
                format_g17(stat.value),
                format_g17(stat.std_error),
                opt_g17(stat.ci_lo),
                opt_g17(stat.ci_hi),
                stat.pass.map(|p| p.to_string()).unwrap_or_default(),
            ));
        }
    }
    out
}

/// Render the slope summary table, when the report has a slope cell.
pub fn render_slope_csv(report: &Report) -> Option<String> {
    let cell = report.cell("slope")?;
    let stat = cell.stat("slope")?;
    let n = report.spec.n_grid.first().copied().unwrap_or(0);
    let m = report.spec.ring_size(n);
    let mut out = String::from("n,m,slope,ci_lo,ci_hi,pass\n");
    out.push_str(&format!(
        "{},{},{},{},{},{}\n",
        n,
        m,
        format_g17(stat.value),
        opt_g17(stat.ci_lo),
        opt_g17(stat.ci_hi),
        stat.pass.map(|p| p.to_string()).unwrap_or_default(),
    ));
    Some(out)
}

/// Write `report.json` and the CSV tables into `dir`. Returns the files
/// written. Writes are atomic (temp file + rename).
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<std::path::PathBuf>, IoError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let json_path = dir.join("report.json");
    atomic_write(&json_path, serde_json::to_string_pretty(report)?.as_bytes())?;
    written.push(json_path);
    let cells_path = dir.join("cells.csv");
    atomic_write(&cells_path, render_cells_csv(report).as_bytes())?;
    written.push(cells_path);
    if let Some(slope) = render_slope_csv(report) {
        let p = dir.join("slope.csv");
        atomic_write(&p, slope.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

pub(crate) fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Cell, ExperimentSpec, Stat};

    #[test]
    fn g17_round_trips_f64() {
        for x in [1.0 / 3.0, std::f64::consts::PI, 1e-300, -2.5e17] {
            let s = format_g17(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
    }

    #[test]
    fn empty_report_gives_header_only_csv() {
        let report = Report::new(&ExperimentSpec::default(), vec![]);
        let csv = render_cells_csv(&report);
        assert_eq!(csv, "cell,stat,value,std_error,ci_lo,ci_hi,pass\n");
    }

    #[test]
    fn slope_cell_produces_summary_table() {
        let mut spec = ExperimentSpec::default();
        spec.n_grid = vec![512];
        spec.m = 576;
        let report = Report::new(
            &spec,
            vec![Cell::new(
                "slope",
                vec![Stat::new("slope", -1.0, 0.01)
                    .with_ci(-1.05, -0.95)
                    .with_pass(true)],
            )],
        );
        let csv = render_slope_csv(&report).unwrap();
        assert!(csv.starts_with("n,m,slope,ci_lo,ci_hi,pass\n"));
        assert!(csv.contains("512,576,"));
        assert!(csv.trim_end().ends_with("true"));
    }
}
