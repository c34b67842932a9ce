//! Disturbance observer with a critically damped second-order Q-filter.
//!
//! The two filtering branches are
//!
//! ```text
//! G_u(s) = Q(s) = ω0² / (s² + 2ω0 s + ω0²)
//! G_q(s) = ω0² (J s² + b s) / (K_m (s² + 2ω0 s + ω0²))
//! ```
//!
//! and the load torque (positive when assisting motion) is reconstructed in
//! Nm as `τ~ = K_m G_q q − G_u ū`. The angle is differentiated inside the
//! biproper `G_q` realization, never by a raw first difference. The same
//! angle-branch state also yields the speed estimate `q̇~ = Q(s) s q`.

use alloc::format;

use crate::error::{Error, Result};
use crate::lti::{Polynomial, RationalTF};
use crate::luenberger::Estimate;
use crate::ode::rk4;
use crate::plant::PlantParams;

/// Natural frequency of the Q-filter used by the reference design, rad/s.
pub const DEFAULT_OMEGA0: f64 = 500.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DobConfig {
    /// Q-filter natural frequency, rad/s.
    pub omega0: f64,
    pub nominal: PlantParams,
}

impl DobConfig {
    pub fn new(omega0: f64, nominal: PlantParams) -> Result<Self> {
        if !(omega0 > 0.0) || !omega0.is_finite() {
            return Err(Error::ParameterDomain(format!("ω0 = {omega0} must be > 0")));
        }
        Ok(Self { omega0, nominal })
    }

    fn filter_den(&self) -> Polynomial {
        filter_den(self.omega0)
    }
}

fn filter_den(w0: f64) -> Polynomial {
    Polynomial::new([1.0, 2.0 * w0, w0 * w0])
}

/// `ω0² / (s² + 2ω0 s + ω0²)`.
pub fn q_filter(omega0: f64) -> Result<RationalTF> {
    if !(omega0 > 0.0) || !omega0.is_finite() {
        return Err(Error::ParameterDomain(format!("ω0 = {omega0} must be > 0")));
    }
    RationalTF::new(Polynomial::constant(omega0 * omega0), filter_den(omega0))
}

/// `ω0² s / (s² + 2ω0 s + ω0²)`, the filtered differentiator for `q̇~`.
pub fn velocity_filter(omega0: f64) -> Result<RationalTF> {
    let q = q_filter(omega0)?;
    Ok(q.series(&RationalTF::new(
        Polynomial::s(),
        Polynomial::constant(1.0),
    )?))
}

/// `(G_u, G_q)`.
pub fn dob_branches(c: &DobConfig) -> (RationalTF, RationalTF) {
    let w2 = c.omega0 * c.omega0;
    let p = &c.nominal;
    let g_u = RationalTF::new(Polynomial::constant(w2), c.filter_den()).expect("monic");
    let g_q = RationalTF::new(
        Polynomial::new([w2 * p.j / p.km, w2 * p.b / p.km, 0.0]),
        c.filter_den(),
    )
    .expect("monic");
    (g_u, g_q)
}

/// Running observer.
///
/// `x_q` realizes `1/(s² + 2ω0 s + ω0²)` driven by `q` in controllable
/// canonical form (`x_q = [filtered q, its derivative]`); `x_u` does the
/// same for `ū`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceObserver {
    config: DobConfig,
    x_q: [f64; 2],
    x_u: [f64; 2],
    q_prev: f64,
    last: Estimate,
}

impl DisturbanceObserver {
    /// Starts the angle branch at rest on `q0`, so both estimates are zero.
    pub fn new(config: DobConfig, q0: f64) -> Self {
        let w2 = config.omega0 * config.omega0;
        Self {
            config,
            x_q: [q0 / w2, 0.0],
            x_u: [0.0, 0.0],
            q_prev: q0,
            last: Estimate::default(),
        }
    }

    pub fn config(&self) -> &DobConfig {
        &self.config
    }

    pub fn estimate(&self) -> Estimate {
        self.last
    }

    /// Advances one sample period; see [`crate::luenberger::LuenbergerObserver::step`]
    /// for the input conventions.
    pub fn step(&mut self, u_bar: f64, q: f64, dt: f64) -> Estimate {
        let w0 = self.config.omega0;
        let w2 = w0 * w0;
        let branch = |x: &[f64; 2], input: f64| [x[1], input - 2.0 * w0 * x[1] - w2 * x[0]];
        let q0 = self.q_prev;
        let slope = (q - q0) / dt;
        self.x_q = rk4(self.x_q, dt, |tau, x| branch(x, q0 + slope * tau));
        self.x_u = rk4(self.x_u, dt, |_, x| branch(x, u_bar));
        self.q_prev = q;

        let p = &self.config.nominal;
        let [x1, x2] = self.x_q;
        let x1_dd = q - 2.0 * w0 * x2 - w2 * x1;
        // K_m G_q q = ω0² (J ẍ1 + b ẋ1)
        let inverse_model = w2 * (p.j * x1_dd + p.b * x2);
        let filtered_input = w2 * self.x_u[0];
        self.last = Estimate {
            qdot: w2 * x2,
            tau: inverse_model - filtered_input,
        };
        self.last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{ss_to_tf, StateSpaceSISO};
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn reference() -> DobConfig {
        DobConfig::new(DEFAULT_OMEGA0, PlantParams::reference()).unwrap()
    }

    #[test]
    fn q_filter_properties() {
        let q = q_filter(500.0).unwrap();
        for p in q.poles().unwrap() {
            assert!((p - Complex64::new(-500.0, 0.0)).norm() < 1e-4);
        }
        assert_eq!(q.dc_gain().unwrap(), 1.0);
        assert_relative_eq!(
            q.freq_response(500.0).unwrap().norm(),
            0.5,
            max_relative = 1e-14
        );
        assert!(q_filter(0.0).is_err());
        assert!(q_filter(-3.0).is_err());
    }

    #[test]
    fn branch_structure() {
        let (g_u, g_q) = dob_branches(&reference());
        assert_eq!(g_u.relative_degree(), Some(2));
        assert_eq!(g_q.relative_degree(), Some(0));
        assert_eq!(g_q.dc_gain().unwrap(), 0.0);
        let hf = 250_000.0 * 2.7354e-4 / 0.6017;
        assert_relative_eq!(g_q.high_frequency_gain().unwrap(), hf, max_relative = 1e-12);
        assert!((hf - 113.65).abs() < 0.01);
    }

    #[test]
    fn g_q_canonical_realization_round_trip() {
        let (_, g_q) = dob_branches(&reference());
        let m = StateSpaceSISO::controllable_canonical(&g_q).unwrap();
        assert_relative_eq!(m.d, 250_000.0 * 2.7354e-4 / 0.6017, max_relative = 1e-12);
        let back = ss_to_tf(&m);
        for w in [1.0, 50.0, 500.0, 5000.0] {
            let a = g_q.freq_response(w).unwrap();
            let b = back.freq_response(w).unwrap();
            assert!((a - b).norm() <= 1e-9 * a.norm());
        }
    }

    #[test]
    fn zero_inputs_zero_estimate() {
        let mut obs = DisturbanceObserver::new(reference(), 0.0);
        for _ in 0..100 {
            assert_eq!(obs.step(0.0, 0.0, 1.25e-4).tau, 0.0);
        }
    }

    #[test]
    fn constant_angle_offset_is_not_a_torque() {
        let mut obs = DisturbanceObserver::new(reference(), 2.5);
        for _ in 0..100 {
            let e = obs.step(0.0, 2.5, 1.25e-4);
            assert!(e.tau.abs() < 1e-12 && e.qdot.abs() < 1e-12);
        }
    }

    #[test]
    fn velocity_filter_unity_gain_on_ramp() {
        let w0 = 500.0;
        let v = velocity_filter(w0).unwrap();
        assert_eq!(v.relative_degree(), Some(1));
        let mut obs = DisturbanceObserver::new(reference(), 0.0);
        let dt = 1.25e-4;
        let mut e = Estimate::default();
        for k in 1..4000 {
            e = obs.step(0.0, 3.0 * k as f64 * dt, dt);
        }
        assert_relative_eq!(e.qdot, 3.0, max_relative = 1e-9);
    }
}
