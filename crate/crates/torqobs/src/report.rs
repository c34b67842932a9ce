use std::fmt;
use std::path::Path;

use torqobs_core::analysis::ErrorMetrics;
use torqobs_core::observe::transient_lag;

use crate::error::{Error, Result};
use crate::formats::{read_table, ObserverMetrics, Table};

/// Prefix shared by all observer torque-estimate columns.
pub const ESTIMATE_PREFIX: &str = "tau_hat_";

/// Display name for an estimate column.
pub fn observer_label(column: &str) -> String {
    match column.strip_prefix(ESTIMATE_PREFIX) {
        Some("L") => "luenberger".into(),
        Some("D") => "dob".into(),
        Some(other) => other.into(),
        None => column.into(),
    }
}

/// Per-observer error summary of one trajectory, best (lowest RMS) first.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareReport {
    pub horizon_s: f64,
    pub rows: Vec<ObserverMetrics>,
}

impl CompareReport {
    pub fn from_table(table: &Table) -> Result<Self> {
        table.require(&["t", "tau_true"])?;
        let estimates: Vec<&str> = table
            .names
            .iter()
            .map(String::as_str)
            .filter(|n| n.starts_with(ESTIMATE_PREFIX))
            .collect();
        if estimates.is_empty() {
            return Err(Error::MissingColumns(vec![format!("{ESTIMATE_PREFIX}*")]));
        }
        let t = table.column("t").expect("required");
        let tau = table.column("tau_true").expect("required");
        let dt = match t {
            [a, b, ..] => b - a,
            _ => {
                return Err(torqobs_core::Error::TooShort {
                    need: 2,
                    got: t.len(),
                }
                .into())
            }
        };
        let mut rows = Vec::with_capacity(estimates.len());
        for name in estimates {
            let est = table.column(name).expect("listed");
            let m = ErrorMetrics::compute(tau, est, dt)?;
            rows.push(ObserverMetrics {
                observer: observer_label(name),
                rms_nm: m.rms,
                std_abs_nm: m.std_abs,
                lag_s: transient_lag(t, tau, est)?,
            });
        }
        rows.sort_by(|a, b| a.rms_nm.total_cmp(&b.rms_nm));
        Ok(Self {
            horizon_s: t[t.len() - 1] - t[0],
            rows,
        })
    }
}

/// Reads a trajectory CSV and summarizes every `tau_hat_*` column.
pub fn compare_report(path: &Path) -> Result<CompareReport> {
    CompareReport::from_table(&read_table(path)?)
}

impl fmt::Display for CompareReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "horizon {:.3} s", self.horizon_s)?;
        writeln!(
            f,
            "{:<12} {:>14} {:>14} {:>10}",
            "observer", "RMS [Nm]", "STD [Nm]", "lag [ms]"
        )?;
        for r in &self.rows {
            let lag = r
                .lag_s
                .map_or_else(|| "-".to_string(), |l| format!("{:.2}", l * 1e3));
            writeln!(
                f,
                "{:<12} {:>14.6e} {:>14.6e} {:>10}",
                r.observer, r.rms_nm, r.std_abs_nm, lag
            )?;
        }
        Ok(())
    }
}
