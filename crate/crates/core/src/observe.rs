//! Runs the observers offline over a recorded trajectory.

use alloc::vec::Vec;

use crate::dob::{DisturbanceObserver, DobConfig};
use crate::error::{Error, Result};
use crate::luenberger::{friction_feedforward, Estimate, LuenbergerDesign, LuenbergerObserver};
use crate::trajectory::Trajectory;

pub const TAU_HAT_L: &str = "tau_hat_L";
pub const QDOT_HAT_L: &str = "qdot_hat_L";
pub const TAU_HAT_D: &str = "tau_hat_D";
pub const QDOT_HAT_D: &str = "qdot_hat_D";

/// Observers to run and the Coulomb level used for friction feedforward.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ObserverSet {
    pub luenberger: Option<LuenbergerDesign>,
    pub dob: Option<DobConfig>,
    /// Nm; zero disables the feedforward.
    pub friction_cf: f64,
}

impl ObserverSet {
    pub fn is_empty(&self) -> bool {
        self.luenberger.is_none() && self.dob.is_none()
    }
}

trait Step {
    fn advance(&mut self, u_bar: f64, q: f64, dt: f64) -> Estimate;
}

impl Step for LuenbergerObserver {
    fn advance(&mut self, u_bar: f64, q: f64, dt: f64) -> Estimate {
        self.step(u_bar, q, dt)
    }
}

impl Step for DisturbanceObserver {
    fn advance(&mut self, u_bar: f64, q: f64, dt: f64) -> Estimate {
        self.step(u_bar, q, dt)
    }
}

/// Feeds `u[k−1]` minus the friction feedforward from the previous speed
/// estimate, and `q[k]`, into the observer at each sample `k ≥ 1`.
fn run<O: Step>(mut obs: O, tr: &Trajectory, cf: f64) -> (Vec<f64>, Vec<f64>) {
    let n = tr.len();
    let (mut tau, mut qdot) = (Vec::with_capacity(n), Vec::with_capacity(n));
    let mut last = Estimate::default();
    tau.push(last.tau);
    qdot.push(last.qdot);
    for k in 1..n {
        let u_bar = tr.u[k - 1] - friction_feedforward(cf, last.qdot);
        last = obs.advance(u_bar, tr.q[k], tr.dt);
        tau.push(last.tau);
        qdot.push(last.qdot);
    }
    (tau, qdot)
}

/// Appends `tau_hat_*` and `qdot_hat_*` columns for each configured observer.
pub fn run_observers(tr: &mut Trajectory, set: &ObserverSet) -> Result<()> {
    if set.is_empty() {
        return Err(Error::InvalidArgument("no observer configured".into()));
    }
    if tr.is_empty() {
        return Err(Error::TooShort { need: 1, got: 0 });
    }
    tr.validate()?;
    let q0 = tr.q[0];
    if let Some(d) = &set.luenberger {
        let (tau, qdot) = run(LuenbergerObserver::new(d.clone(), q0), tr, set.friction_cf);
        tr.set_column(TAU_HAT_L, tau)?;
        tr.set_column(QDOT_HAT_L, qdot)?;
    }
    if let Some(c) = &set.dob {
        let (tau, qdot) = run(DisturbanceObserver::new(*c, q0), tr, set.friction_cf);
        tr.set_column(TAU_HAT_D, tau)?;
        tr.set_column(QDOT_HAT_D, qdot)?;
    }
    Ok(())
}

/// Time from the first step in `tau_true` until `tau_est` first covers 90 %
/// of it, measured from the estimate just before the step.
///
/// A step is a sample-to-sample jump larger than a tenth of the range of
/// `tau_true`. Returns `None` without a step or if 90 % is never reached.
pub fn transient_lag(t: &[f64], tau_true: &[f64], tau_est: &[f64]) -> Result<Option<f64>> {
    if t.len() != tau_true.len() || t.len() != tau_est.len() {
        return Err(Error::LengthMismatch(
            t.len(),
            tau_true.len().min(tau_est.len()),
        ));
    }
    let (lo, hi) = tau_true
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let range = hi - lo;
    if !(range > 0.0) {
        return Ok(None);
    }
    let Some(k) = (1..t.len()).find(|&k| (tau_true[k] - tau_true[k - 1]).abs() > 0.1 * range)
    else {
        return Ok(None);
    };
    let jump = tau_true[k] - tau_true[k - 1];
    let base = tau_est[k - 1];
    Ok((k..t.len())
        .find(|&m| (tau_est[m] - base) / jump >= 0.9)
        .map(|m| t[m] - t[k]))
}
