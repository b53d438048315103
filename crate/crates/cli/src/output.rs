//! Result files: plot-ready CSV and a JSON summary.
//!
//! Both embed the tool version and the SHA-256 of the config file, and are
//! byte-identical across runs for the same (config, seed, version).

use ionsim::scan::ScanResult;
use serde::Serialize;

pub const TOOL: &str = "ionsim";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// CSV with a metadata comment line and a one-line header. One row per grid
/// point: the swept parameter, each series estimate and its standard error,
/// then any derived columns.
pub fn scan_csv(
    scan: &ScanResult,
    config_hash: &str,
    derived: &[(&str, &[f64], &[f64])],
) -> String {
    let mut out = format!("# {TOOL} v{VERSION} config_sha256={config_hash}\n");
    out.push_str(&scan.parameter);
    for s in &scan.series {
        out.push_str(&format!(",{},{}_err", s.name, s.name));
    }
    for (name, _, _) in derived {
        out.push_str(&format!(",{name},{name}_err"));
    }
    out.push('\n');
    for (i, &x) in scan.grid.iter().enumerate() {
        out.push_str(&format!("{x}"));
        for s in &scan.series {
            out.push_str(&format!(",{},{}", s.estimates[i], s.std_errors[i]));
        }
        for (_, vals, errs) in derived {
            out.push_str(&format!(",{},{}", vals[i], errs[i]));
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub experiment: String,
    pub config_sha256: String,
    pub seed: u64,
    pub shots_per_point: usize,
    pub converged: bool,
    pub warnings: Vec<String>,
    /// Pulse time plus 5 ms per projection/measurement period, per shot.
    pub estimated_wall_time_s: f64,
    pub results: serde_json::Value,
}

pub fn summary_json(summary: &Summary) -> String {
    let mut s = serde_json::to_string_pretty(summary).expect("summary serializes");
    s.push('\n');
    s
}
