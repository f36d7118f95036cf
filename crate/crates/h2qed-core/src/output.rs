//! Delimited-text writers: `#`-prefixed headers carrying the full resolved
//! configuration, then whitespace-separated numeric columns at 9 significant
//! digits. Formatting is fixed so identical runs produce identical bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::lindblad::TimeSeries;
use crate::model::{subspace_probabilities, Stabilization};
use crate::Result;

/// One value at 9 significant digits, locale-free.
pub fn fmt9(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.8e}")
    }
}

fn open_with_header(path: &Path, header: &[String]) -> Result<fs::File> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let mut f = fs::File::create(path)?;
    for line in header {
        writeln!(f, "# {line}")?;
    }
    Ok(f)
}

/// Time-series file: header, column naming line, then one row per sample.
pub fn write_time_series(path: &Path, series: &TimeSeries, header: &[String]) -> Result<()> {
    let mut f = open_with_header(path, header)?;
    writeln!(f, "# columns = time P_atoms P_molecule P_cation P_other trace")?;
    for k in 0..series.n_samples() {
        let p = subspace_probabilities(series, k);
        writeln!(
            f,
            "{} {} {} {} {} {}",
            fmt9(series.times[k]),
            fmt9(p[0]),
            fmt9(p[1]),
            fmt9(p[2]),
            fmt9(p[3]),
            fmt9(series.trace[k]),
        )?;
    }
    f.sync_all()?;
    Ok(())
}

/// One sweep cell's reportable numbers.
#[derive(Clone, Copy, Debug)]
pub struct CellSummary {
    pub final_probs: [f64; 4],
    pub stabilization: Stabilization,
    pub trace_defect: f64,
}

impl CellSummary {
    pub fn t_stb(&self) -> f64 {
        match self.stabilization {
            Stabilization::Reached { t_stb, .. } => t_stb,
            Stabilization::NotReached => f64::NAN,
        }
    }
}

///// Grid file for one observable: leading axis-value columns, then the
/// observable. Cells appear in row-major order over the axes.
pub fn write_grid(
    path: &Path,
    header: &[String],
    axis_names: &[&str],
    axis_values: &[&[f64]],
    observable: &str,
    cell_value: impl Fn(usize) -> f64,
) -> Result<()> {
    assert_eq!(axis_names.len(), axis_values.len());
    let mut f = open_with_header(path, header)?;
    let names = axis_names.join(" ");
    writeln!(f, "# columns = {names} {observable}")?;
    let n: usize = axis_values.iter().map(|v| v.len()).product();
    for cell in 0..n {
        // Row-major decomposition of the flat cell index.
        let mut rest = cell;
        let mut coords = vec![0usize; axis_values.len()];
        for a in (0..axis_values.len()).rev() {
            coords[a] = rest % axis_values[a].len();
            rest /= axis_values[a].len();
        }
        let mut row = String::new();
        for (a, &c) in coords.iter().enumerate() {
            row.push_str(&fmt9(axis_values[a][c]));
            row.push(' ');
        }
        row.push_str(&fmt9(cell_value(cell)));
        writeln!(f, "{row}")?;
    }
    f.sync_all()?;
    Ok(())
}
