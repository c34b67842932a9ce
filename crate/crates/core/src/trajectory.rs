use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Names of the columns every trajectory carries, in order.
pub const BASE_COLUMNS: [&str; 5] = ["t", "u", "q", "qdot", "tau_true"];

/// Uniformly sampled simulation record.
///
/// Row `k` holds the time `t_k`, the recorded drive torque `u_k` that is
/// applied over `[t_k, t_{k+1})`, the recorded (quantized) shaft angle, the
/// true shaft speed and the true load torque at `t_k`. Observer outputs are
/// appended as extra named columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub dt: f64,
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub qdot: Vec<f64>,
    pub tau_true: Vec<f64>,
    extra: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn with_capacity(dt: f64, n: usize) -> Self {
        Self {
            dt,
            t: Vec::with_capacity(n),
            u: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            qdot: Vec::with_capacity(n),
            tau_true: Vec::with_capacity(n),
            extra: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn push_row(&mut self, t: f64, u: f64, q: f64, qdot: f64, tau: f64) {
        self.t.push(t);
        self.u.push(u);
        self.q.push(q);
        self.qdot.push(qdot);
        self.tau_true.push(tau);
    }

    /// Appends or replaces a named column.
    pub fn set_column(&mut self, name: &str, data: Vec<f64>) -> Result<()> {
        if data.len() != self.len() {
            return Err(Error::LengthMismatch(self.len(), data.len()));
        }
        if BASE_COLUMNS.contains(&name) {
            return Err(Error::InvalidArgument(format!("`{name}` is a base column")));
        }
        match self.extra.iter_mut().find(|(n, _)| n == name) {
            Some((_, col)) => *col = data,
            None => self.extra.push((name.into(), data)),
        }
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        match name {
            "t" => Some(&self.t),
            "u" => Some(&self.u),
            "q" => Some(&self.q),
            "qdot" => Some(&self.qdot),
            "tau_true" => Some(&self.tau_true),
            _ => self
                .extra
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, c)| c.as_slice()),
        }
    }

    pub fn column_names(&self) -> Vec<&str> {
        BASE_COLUMNS
            .iter()
            .copied()
            .chain(self.extra.iter().map(|(n, _)| n.as_str()))
            .collect()
    }

    pub fn extra_columns(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.extra.iter().map(|(n, c)| (n.as_str(), c.as_slice()))
    }

    /// Checks equal column lengths and uniform sampling.
    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        for col in [&self.u, &self.q, &self.qdot, &self.tau_true] {
            if col.len() != n {
                return Err(Error::LengthMismatch(n, col.len()));
            }
        }
        for (_, col) in &self.extra {
            if col.len() != n {
                return Err(Error::LengthMismatch(n, col.len()));
            }
        }
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample period {} <= 0",
                self.dt
            )));
        }
        for (k, w) in self.t.windows(2).enumerate() {
            let step = w[1] - w[0];
            if (step - self.dt).abs() > 1e-9 * self.dt.max(w[1].abs()) {
                return Err(Error::InvalidArgument(format!(
                    "non-uniform sampling at row {}: step {step}",
                    k + 1
                )));
            }
        }
        Ok(())
    }
}
