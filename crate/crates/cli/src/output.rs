//! CSV rendering and atomic file output.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use etpl_core::analysis::TimeSeries;
use etpl_core::phase_space::{PhotonDistribution, WignerGrid};

pub const TIMESERIES_HEADER: &str = "t,gq_db,s_db,theta_opt_qfi,theta_min_sq,mean_n,parity,purity,trace_drift";
pub const WIGNER_HEADER: &str = "x,p,w";
pub const PN_HEADER: &str = "n,p_n";
pub const WINDOWS_HEADER: &str = "value,threshold_db,t_start,t_end,n_oscillations,status";
pub const STEADY_HEADER: &str = "quantity,value";

/// 17 significant digits, enough to round-trip an `f64`.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug)]
pub struct IoFailure {
    pub path: PathBuf,
    pub source: io::Error,
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> Result<(), IoFailure> {
    let fail = |source| IoFailure {
        path: path.to_path_buf(),
        source,
    };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| fail(io::Error::other("no file name")))?;
    let tmp = dir.join(format!(".{}.tmp", name.to_string_lossy()));
    fs::write(&tmp, contents).map_err(fail)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        fail(e)
    })
}

pub fn create_dir(path: &Path) -> Result<(), IoFailure> {
    fs::create_dir_all(path).map_err(|source| IoFailure {
        path: path.to_path_buf(),
        source,
    })
}

pub fn timeseries_csv(series: &TimeSeries) -> String {
    let mut out = String::with_capacity(series.samples.len() * 220);
    out.push_str(TIMESERIES_HEADER);
    out.push('\n');
    for s in &series.samples {
        let row = [
            s.t,
            s.gq_db,
            s.s_db,
            s.theta_opt_qfi,
            s.theta_min_sq,
            s.mean_n,
            s.parity,
            s.purity,
            s.trace_drift,
        ]
        .map(num);
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// One row per grid point, `x` outermost.
pub fn wigner_csv(grid: &WignerGrid) -> String {
    let mut out = String::with_capacity(grid.x_axis.len() * grid.p_axis.len() * 72);
    out.push_str(WIGNER_HEADER);
    out.push('\n');
    for (i, &x) in grid.x_axis.iter().enumerate() {
        for (j, &p) in grid.p_axis.iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", num(x), num(p), num(grid.values[(i, j)]));
        }
    }
    out
}

pub fn pn_csv(dist: &PhotonDistribution) -> String {
    let mut out = String::new();
    out.push_str(PN_HEADER);
    out.push('\n');
    for (n, p) in dist.probabilities.iter().enumerate() {
        let _ = writeln!(out, "{n},{}", num(*p));
    }
    out
}

/// `quantity,value` rows.
pub fn steady_csv(rows: &[(String, f64)]) -> String {
    let mut out = String::new();
    out.push_str(STEADY_HEADER);
    out.push('\n');
    for (k, v) in rows {
        let _ = writeln!(out, "{k},{}", num(*v));
    }
    out
}

/// File-name form of a snapshot time: `1.2` becomes `1.2`, `90.0` becomes `90`.
pub fn time_label(t: f64) -> String {
    format!("{t}")
}
