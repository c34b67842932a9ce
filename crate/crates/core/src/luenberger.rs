//! Reduced-order Luenberger observer for shaft speed and load torque.
//!
//! With the measured angle `q` and the unmeasured pair `y = [q̇, τ]` under a
//! constant-load assumption (`τ̇ = 0`), the observer runs
//!
//! ```text
//! ẏ̆ = A_L y̆ + B_L ū + M q
//! A_L = [[-K1 - b/J, 1/J], [-K2, 0]],  B_L = [1/J, 0]ᵀ
//! M   = [-K1² - (b K1 - K2)/J, -K1 K2]ᵀ
//! [q̇~, τ~]ᵀ = y̆ + [K1, K2]ᵀ q
//! ```
//!
//! where `ū = u - f̂` is the drive torque with the modeled Coulomb friction
//! removed.

use alloc::format;

use nalgebra::{Matrix2, RowDVector, Vector2};

use crate::error::{Error, Result};
use crate::lti::{Polynomial, StateSpaceSISO};
use crate::ode::rk4;
use crate::plant::{sign_deadband, PlantParams};

/// Observer poles placed this many times beyond the mechanical pole.
pub const DEFAULT_POLE_MULTIPLIER: f64 = 50.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LuenbergerDesign {
    pub k1: f64,
    pub k2: f64,
    pub a_l: Matrix2<f64>,
    pub b_l: Vector2<f64>,
    pub m: Vector2<f64>,
    pub params: PlantParams,
    pub poles: [f64; 2],
}

/// Gains placing the eigenvalues of `A_L` at two real, negative poles.
///
/// `det(sI - A_L) = s² + (K1 + b/J) s + K2/J`, hence
/// `K1 = -(p1 + p2) - b/J` and `K2 = J p1 p2`.
pub fn design_by_poles(p: &PlantParams, pole1: f64, pole2: f64) -> Result<LuenbergerDesign> {
    if !(pole1 < 0.0 && pole2 < 0.0) || !pole1.is_finite() || !pole2.is_finite() {
        return Err(Error::Design(format!(
            "observer poles must be real and strictly negative, got {pole1}, {pole2}"
        )));
    }
    if !(p.j > 0.0) || p.b < 0.0 {
        return Err(Error::ParameterDomain(format!(
            "invalid J = {} or b = {}",
            p.j, p.b
        )));
    }
    let (j, b) = (p.j, p.b);
    let k1 = -(pole1 + pole2) - b / j;
    let k2 = j * pole1 * pole2;
    Ok(LuenbergerDesign {
        k1,
        k2,
        a_l: Matrix2::new(-k1 - b / j, 1.0 / j, -k2, 0.0),
        b_l: Vector2::new(1.0 / j, 0.0),
        m: Vector2::new(-k1 * k1 - (b * k1 - k2) / j, -k1 * k2),
        params: *p,
        poles: [pole1, pole2],
    })
}

/// Double observer pole at `multiplier` times the mechanical pole `-b/J`.
pub fn design_by_multiplier(p: &PlantParams, multiplier: f64) -> Result<LuenbergerDesign> {
    let pole = multiplier * p.mechanical_pole();
    design_by_poles(p, pole, pole)
}

impl LuenbergerDesign {
    pub fn gains(&self) -> Vector2<f64> {
        Vector2::new(self.k1, self.k2)
    }

    /// `det(sI - A_L)`.
    pub fn characteristic_polynomial(&self) -> Polynomial {
        let a = &self.a_l;
        Polynomial::new([1.0, -(a[(0, 0)] + a[(1, 1)]), a.determinant()])
    }

    /// SISO realizations `(A_L, B_L, c)` and `(A_L, M, c)` for an output
    /// row `c` of the transformed state.
    pub fn input_columns(&self, c: [f64; 2]) -> (StateSpaceSISO, StateSpaceSISO) {
        let a = nalgebra::DMatrix::from_iterator(2, 2, self.a_l.iter().copied());
        let row = RowDVector::from_vec(alloc::vec![c[0], c[1]]);
        let col = |v: &Vector2<f64>| nalgebra::DVector::from_vec(alloc::vec![v[0], v[1]]);
        let mk = |b| StateSpaceSISO::new(a.clone(), b, row.clone(), 0.0).expect("2x2 realization");
        (mk(col(&self.b_l)), mk(col(&self.m)))
    }

    fn derivative(&self, y: &[f64; 2], u_bar: f64, q: f64) -> [f64; 2] {
        let y = Vector2::new(y[0], y[1]);
        let d = self.a_l * y + self.b_l * u_bar + self.m * q;
        [d[0], d[1]]
    }
}

/// Speed and load-torque estimate.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Estimate {
    pub qdot: f64,
    pub tau: f64,
}

/// `C_f sign(q̇~)` with the plant's dead band.
pub fn friction_feedforward(cf: f64, qdot_est: f64) -> f64 {
    cf * sign_deadband(qdot_est)
}

/// Running observer. Owns the transformed state `y̆` and the previous angle
/// sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LuenbergerObserver {
    design: LuenbergerDesign,
    y: [f64; 2],
    q_prev: f64,
    last: Estimate,
}

impl LuenbergerObserver {
    /// Starts with `y̆ = -K q0`, so both estimates are initially zero.
    pub fn new(design: LuenbergerDesign, q0: f64) -> Self {
        let y = [-design.k1 * q0, -design.k2 * q0];
        Self {
            design,
            y,
            q_prev: q0,
            last: Estimate::default(),
        }
    }

    pub fn design(&self) -> &LuenbergerDesign {
        &self.design
    }

    pub fn estimate(&self) -> Estimate {
        self.last
    }

    /// Advances one sample period. `u_bar` is the friction-compensated
    /// torque held over the elapsed period and `q` the new angle sample; the
    /// angle is interpolated linearly from the previous sample.
    pub fn step(&mut self, u_bar: f64, q: f64, dt: f64) -> Estimate {
        let q0 = self.q_prev;
        let slope = (q - q0) / dt;
        let d = &self.design;
        self.y = rk4(self.y, dt, |tau, y| {
            d.derivative(y, u_bar, q0 + slope * tau)
        });
        self.q_prev = q;
        self.last = Estimate {
            qdot: self.y[0] + d.k1 * q,
            tau: self.y[1] + d.k2 * q,
        };
        self.last
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn unit_parameter_gains() {
        let p = PlantParams {
            j: 1.0,
            b: 0.0,
            ..PlantParams::reference()
        };
        let d = design_by_poles(&p, -1.0, -2.0).unwrap();
        assert_relative_eq!(d.k1, 3.0);
        assert_relative_eq!(d.k2, 2.0);
    }

    #[test]
    fn reference_design_gains() {
        // (s + 530.5)² = s² + (K1 + b/J) s + K2/J
        let p = PlantParams::reference();
        let d = design_by_poles(&p, -530.5, -530.5).unwrap();
        let b_over_j = 2.903e-3 / 2.7354e-4;
        assert_relative_eq!(d.k1, 1061.0 - b_over_j, max_relative = 1e-12);
        assert_relative_eq!(d.k2, 530.5 * 530.5 * 2.7354e-4, max_relative = 1e-12);
        assert!((d.k1 - 1050.4).abs() < 0.05);
        assert!((d.k2 - 76.98).abs() < 0.005);
    }

    #[test]
    fn placed_eigenvalues() {
        let p = PlantParams::reference();
        let d = design_by_poles(&p, -300.0, -700.0).unwrap();
        let mut r = d.characteristic_polynomial().roots().unwrap();
        r.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_relative_eq!(r[0].re, -700.0, max_relative = 1e-9);
        assert_relative_eq!(r[1].re, -300.0, max_relative = 1e-9);
        assert!(design_by_poles(&p, 0.0, -1.0).is_err());
        assert!(design_by_poles(&p, -1.0, 5.0).is_err());
    }

    #[test]
    fn friction_sign() {
        assert_relative_eq!(friction_feedforward(5.5519e-2, 10.0), 0.055519);
        assert_eq!(friction_feedforward(5.5519e-2, 0.0), 0.0);
        assert_relative_eq!(friction_feedforward(5.5519e-2, -3.0), -0.055519);
    }

    #[test]
    fn equilibrium_stays_zero() {
        let d = design_by_multiplier(&PlantParams::reference(), 50.0).unwrap();
        let mut obs = LuenbergerObserver::new(d, 0.0);
        for _ in 0..100 {
            assert_eq!(obs.step(0.0, 0.0, 1.25e-4), Estimate::default());
        }
    }

    #[test]
    fn initial_estimates_are_zero() {
        let d = design_by_multiplier(&PlantParams::reference(), 50.0).unwrap();
        let obs = LuenbergerObserver::new(d.clone(), 1.3);
        let y = Vector2::new(obs.y[0], obs.y[1]) + d.gains() * 1.3;
        assert!(y.norm() < 1e-12);
    }
}
