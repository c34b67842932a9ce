//! Identification of the torque constant, friction and inertia, plus the
//! measurement filters applied to recorded signals.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{Error, Result};
use crate::plant::{
    quantize, sign_deadband, simulate, LoadProfile, NoiseSpec, PlantParams, PlantState, SimConfig,
    CONTROL_PERIOD, VELOCITY_DEADBAND,
};

/// `K_m = 1.5 n_p ψ`, Nm/A.
pub fn km_from_flux(pole_pairs: u32, psi: f64) -> Result<f64> {
    if pole_pairs == 0 || !(psi > 0.0) || !psi.is_finite() {
        return Err(Error::ParameterDomain(format!(
            "need n_p >= 1 and ψ > 0, got n_p = {pole_pairs}, ψ = {psi}"
        )));
    }
    Ok(1.5 * pole_pairs as f64 * psi)
}

/// Steady-state speed with the quadrature current holding it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateObs {
    /// rad/s.
    pub qdot: f64,
    /// A.
    pub i_q: f64,
}

/// One sample of a constant-torque acceleration test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelObs {
    /// rad/s.
    pub qdot: f64,
    /// rad/s².
    pub qddot: f64,
    /// A.
    pub i_q: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionFit {
    /// Nms/rad.
    pub b: f64,
    /// Nm.
    pub cf: f64,
    /// RMS of `K_m i_q − b q̇ − C_f sign(q̇)`, Nm.
    pub residual: f64,
}

/// Least-squares `(b, C_f)` from `K_m i_q = b q̇ + C_f sign(q̇)`.
pub fn fit_friction(obs: &[SteadyStateObs], km: f64) -> Result<FrictionFit> {
    if obs.len() < 2 {
        return Err(Error::TooShort {
            need: 2,
            got: obs.len(),
        });
    }
    if !(km > 0.0) {
        return Err(Error::ParameterDomain(format!("K_m = {km} must be > 0")));
    }
    if let Some(o) = obs.iter().find(|o| o.qdot.abs() <= VELOCITY_DEADBAND) {
        return Err(Error::InvalidArgument(format!(
            "speed {} inside the dead band is not a steady-state point",
            o.qdot
        )));
    }
    let (mut a11, mut a12, mut a22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for o in obs {
        let (v, s, y) = (o.qdot, o.qdot.signum(), km * o.i_q);
        a11 += v * v;
        a12 += v * s;
        a22 += s * s;
        r1 += v * y;
        r2 += s * y;
    }
    let det = a11 * a22 - a12 * a12;
    if det <= 1e-12 * a11 * a22 {
        return Err(Error::RankDeficient(
            "friction regressor needs at least two distinct speed magnitudes".into(),
        ));
    }
    let b = (a22 * r1 - a12 * r2) / det;
    let cf = (a11 * r2 - a12 * r1) / det;
    let sse: f64 = obs
        .iter()
        .map(|o| {
            let e = km * o.i_q - b * o.qdot - cf * o.qdot.signum();
            e * e
        })
        .sum();
    Ok(FrictionFit {
        b,
        cf,
        residual: (sse / obs.len() as f64).sqrt(),
    })
}

/// Least-squares `J` from `K_m i_q − b q̇ − C_f sign(q̇) = J q̈`.
pub fn estimate_inertia(obs: &[AccelObs], km: f64, b: f64, cf: f64) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::TooShort { need: 1, got: 0 });
    }
    let max_acc = obs.iter().fold(0.0_f64, |m, o| m.max(o.qddot.abs()));
    if !(max_acc > 1e-9) {
        return Err(Error::RankDeficient("all accelerations are zero".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for o in obs {
        let net = km * o.i_q - b * o.qdot - cf * sign_deadband(o.qdot);
        num += net * o.qddot;
        den += o.qddot * o.qddot;
    }
    Ok(num / den)
}

/// Backward difference `(x[k] − x[k−1]) / dt`; the first sample repeats the
/// second.
pub fn backward_difference(x: &[f64], dt: f64) -> Vec<f64> {
    if x.len() < 2 {
        return alloc::vec![0.0; x.len()];
    }
    let mut d: Vec<f64> = Vec::with_capacity(x.len());
    d.push((x[1] - x[0]) / dt);
    d.extend(x.windows(2).map(|w| (w[1] - w[0]) / dt));
    d
}

/// `1/(τ_f s + 1)` discretized exactly for a zero-order-held input:
/// `y[k+1] = a y[k] + (1 − a) x[k]`, `a = exp(−dt/τ_f)`, `y[0] = 0`.
pub fn first_order_lp(x: &[f64], tau_f: f64, dt: f64) -> Result<Vec<f64>> {
    if !(tau_f > 0.0) || !(dt > 0.0) {
        return Err(Error::ParameterDomain(format!(
            "τ_f = {tau_f} and dt = {dt} must be > 0"
        )));
    }
    let a = (-dt / tau_f).exp();
    let mut y = Vec::with_capacity(x.len());
    let mut state = 0.0;
    for &v in x {
        y.push(state);
        state = a * state + (1.0 - a) * v;
    }
    Ok(y)
}

/// Causal trailing mean; the window grows from one sample at the start.
pub fn moving_average(x: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::InvalidArgument(
            "moving-average window must be >= 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(x.len());
    let mut sum = 0.0;
    for (k, &v) in x.iter().enumerate() {
        sum += v;
        if k >= window {
            sum -= x[k - window];
        }
        out.push(sum / window.min(k + 1) as f64);
    }
    Ok(out)
}

/// Settings of the synthetic identification runs.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Steady-state set points, rad/s.
    pub speeds: Vec<f64>,
    /// Time the speed loop settles before averaging, s.
    pub settle: f64,
    /// Averaging window at each set point, s.
    pub average: f64,
    /// Quadrature current of the acceleration test, A.
    pub accel_current: f64,
    /// Length of the acceleration test, s.
    pub accel_duration: f64,
    /// Start of the acceleration-test fit window, s; must cover the filter
    /// warm-up.
    pub accel_skip: f64,
    /// Moving-average window applied to the differentiated angle, samples.
    pub ma_window: usize,
    /// Time constant of the first-order filter on the speed, s.
    pub lp_tau: f64,
    pub dt: f64,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            speeds: alloc::vec![5.0, 10.0, 20.0, 40.0],
            settle: 0.2,
            average: 1.0,
            accel_current: 0.5,
            accel_duration: 0.15,
            accel_skip: 0.04,
            ma_window: 50,
            lp_tau: 0.0025,
            dt: CONTROL_PERIOD,
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.speeds.is_empty() {
            return Err(Error::InvalidArgument("no steady-state speeds".into()));
        }
        let positive = [
            ("settle", self.settle),
            ("average", self.average),
            ("accel_duration", self.accel_duration),
            ("lp_tau", self.lp_tau),
            ("dt", self.dt),
        ];
        if let Some((name, v)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(Error::InvalidArgument(format!("{name} = {v} must be > 0")));
        }
        if self.accel_skip < 0.0 || self.accel_skip >= self.accel_duration {
            return Err(Error::InvalidArgument(format!(
                "accel_skip = {} must lie in [0, accel_duration)",
                self.accel_skip
            )));
        }
        if self.ma_window == 0 {
            return Err(Error::InvalidArgument("ma_window must be >= 1".into()));
        }
        Ok(())
    }
}

/// Speed-controlled runs at each set point. The speed is the angle slope
/// over the averaging window; the current is the mean recorded torque over
/// `K_m`.
pub fn steady_state_test(
    p: &PlantParams,
    spec: &ExperimentSpec,
    noise: &NoiseSpec,
) -> Result<Vec<SteadyStateObs>> {
    spec.validate()?;
    let mut out = Vec::with_capacity(spec.speeds.len());
    for (idx, &v) in spec.speeds.iter().enumerate() {
        let mut cfg = SimConfig::new(p, v, LoadProfile::none(), spec.settle + spec.average);
        cfg.dt = spec.dt;
        cfg.initial_speed = v;
        cfg.noise = NoiseSpec {
            seed: noise.seed.wrapping_add(idx as u64),
            ..*noise
        };
        let tr = simulate(p, &cfg)?;
        let first = (spec.settle / spec.dt).round() as usize;
        let last = tr.len() - 1;
        let span = (last - first) as f64 * spec.dt;
        let qdot = (tr.q[last] - tr.q[first]) / span;
        let mean_u = tr.u[first..last].iter().sum::<f64>() / (last - first) as f64;
        out.push(SteadyStateObs {
            qdot,
            i_q: mean_u / p.km,
        });
    }
    Ok(out)
}

/// Recorded constant-current run from rest.
#[derive(Debug, Clone, PartialEq)]
pub struct AccelRun {
    pub dt: f64,
    /// Quantized angle, rad.
    pub q: Vec<f64>,
    /// Recorded current, A.
    pub i_q: Vec<f64>,
}

/// Open-loop run with constant current from rest. The seeded generator
/// draws the initial angle within one encoder step and the current noise.
pub fn acceleration_test(
    p: &PlantParams,
    spec: &ExperimentSpec,
    noise: &NoiseSpec,
) -> Result<AccelRun> {
    spec.validate()?;
    noise.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let q0 = if noise.encoder_quantum > 0.0 {
        Uniform::new(0.0, noise.encoder_quantum)
            .map_err(|e| Error::InvalidArgument(format!("{e}")))?
            .sample(&mut rng)
    } else {
        0.0
    };
    let steps = (spec.accel_duration / spec.dt).round() as usize;
    let mut state = PlantState { q: q0, qdot: 0.0 };
    let mut run = AccelRun {
        dt: spec.dt,
        q: Vec::with_capacity(steps + 1),
        i_q: Vec::with_capacity(steps + 1),
    };
    for k in 0..=steps {
        let n: f64 = if noise.current_noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * noise.current_noise_std
        } else {
            0.0
        };
        run.q.push(quantize(state.q, noise.encoder_quantum));
        run.i_q.push(spec.accel_current + n);
        state = p.step(
            state,
            p.km * spec.accel_current,
            k as f64 * spec.dt,
            spec.dt,
            |_| 0.0,
        );
    }
    Ok(run)
}

/// Speed and acceleration from the recorded angle.
///
/// The speed is the backward difference of `q` smoothed by the moving
/// average and the first-order filter; the acceleration is the backward
/// difference of that speed, paired with the mean of the two speeds it
/// spans. The current passes through the same filters so that the linear
/// relation between the three is preserved.
pub fn acceleration_observations(run: &AccelRun, spec: &ExperimentSpec) -> Result<Vec<AccelObs>> {
    let smooth = |x: &[f64]| -> Result<Vec<f64>> {
        first_order_lp(&moving_average(x, spec.ma_window)?, spec.lp_tau, run.dt)
    };
    let qdot = smooth(&backward_difference(&run.q, run.dt))?;
    let qddot = backward_difference(&qdot, run.dt);
    let i_q = smooth(&run.i_q)?;
    let skip = (spec.accel_skip / run.dt).round() as usize;
    Ok((skip.max(1)..run.q.len())
        .map(|k| AccelObs {
            qdot: 0.5 * (qdot[k] + qdot[k - 1]),
            qddot: qddot[k],
            i_q: i_q[k],
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifiedParams {
    pub b: f64,
    pub cf: f64,
    pub j: f64,
    /// RMS residual of the friction fit, Nm.
    pub friction_residual: f64,
}

/// Friction fit on the steady-state runs, then inertia from the
/// acceleration run; `K_m` is taken as known.
pub fn identify(
    km: f64,
    steady: &[SteadyStateObs],
    accel: &[AccelObs],
) -> Result<IdentifiedParams> {
    let fit = fit_friction(steady, km)?;
    let j = estimate_inertia(accel, km, fit.b, fit.cf)?;
    Ok(IdentifiedParams {
        b: fit.b,
        cf: fit.cf,
        j,
        friction_residual: fit.residual,
    })
}

/// Runs both synthetic experiments on `p` and identifies `(b, C_f, J)`.
pub fn identify_synthetic(
    p: &PlantParams,
    spec: &ExperimentSpec,
    noise: &NoiseSpec,
) -> Result<IdentifiedParams> {
    let steady = steady_state_test(p, spec, noise)?;
    let run = acceleration_test(p, spec, noise)?;
    identify(p.km, &steady, &acceleration_observations(&run, spec)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::PlantParams;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn synth(p: &PlantParams, speeds: &[f64]) -> Vec<SteadyStateObs> {
        speeds
            .iter()
            .map(|&v| SteadyStateObs {
                qdot: v,
                i_q: (p.b * v + p.cf * v.signum()) / p.km,
            })
            .collect()
    }

    #[test]
    fn torque_constant() {
        assert_relative_eq!(
            km_from_flux(7, 0.6017 / 10.5).unwrap(),
            0.6017,
            max_relative = 1e-15
        );
        assert_eq!(km_from_flux(1, 1.0).unwrap(), 1.5);
        assert_eq!(km_from_flux(2, 0.5).unwrap(), 1.5);
        assert!(km_from_flux(0, 1.0).is_err());
        assert!(km_from_flux(3, 0.0).is_err());
    }

    #[test]
    fn friction_round_trip() {
        let p = PlantParams::reference();
        let fit = fit_friction(&synth(&p, &[5.0, 10.0, 20.0, 40.0]), p.km).unwrap();
        assert_relative_eq!(fit.b, p.b, max_relative = 1e-10);
        assert_relative_eq!(fit.cf, p.cf, max_relative = 1e-10);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn friction_bidirectional() {
        let p = PlantParams::reference();
        let fit = fit_friction(&synth(&p, &[-30.0, -8.0, 8.0, 30.0]), p.km).unwrap();
        assert_relative_eq!(fit.b, p.b, max_relative = 1e-10);
        assert_relative_eq!(fit.cf, p.cf, max_relative = 1e-10);
    }

    #[test]
    fn friction_two_points_exact() {
        let obs = [
            SteadyStateObs {
                qdot: 1.0,
                i_q: 0.3,
            },
            SteadyStateObs {
                qdot: 2.0,
                i_q: 0.5,
            },
        ];
        let fit = fit_friction(&obs, 1.0).unwrap();
        assert!(fit.residual < 1e-15);
        assert_relative_eq!(fit.b, 0.2, max_relative = 1e-12);
        assert_relative_eq!(fit.cf, 0.1, max_relative = 1e-12);
    }

    #[test]
    fn friction_rank_deficient() {
        let p = PlantParams::reference();
        assert!(matches!(
            fit_friction(&synth(&p, &[10.0, 10.0, 10.0]), p.km),
            Err(Error::RankDeficient(_))
        ));
        assert!(fit_friction(&synth(&p, &[-10.0, 10.0]), p.km).is_err());
        assert!(fit_friction(&synth(&p, &[10.0]), p.km).is_err());
    }

    #[test]
    fn inertia_single_point_exact() {
        let o = AccelObs {
            qdot: 3.0,
            qddot: 100.0,
            i_q: 0.2,
        };
        let j = estimate_inertia(&[o], 0.6, 0.01, 0.05).unwrap();
        assert_relative_eq!(j * 100.0, 0.6 * 0.2 - 0.03 - 0.05, max_relative = 1e-14);
        let still = AccelObs { qddot: 0.0, ..o };
        assert!(estimate_inertia(&[still], 0.6, 0.01, 0.05).is_err());
    }

    #[test]
    fn low_pass_examples() {
        let dt = 1e-4;
        let tau = 0.0025;
        let y = first_order_lp(&vec![2.0; 2000], tau, dt).unwrap();
        assert_relative_eq!(y[1999], 2.0, max_relative = 1e-12);
        let k = (tau / dt).round() as usize;
        let step = first_order_lp(&vec![1.0; k + 1], tau, dt).unwrap();
        assert_relative_eq!(step[k], 1.0 - (-1.0f64).exp(), max_relative = 1e-12);
        assert!(first_order_lp(&[1.0], 0.0, dt).is_err());
    }

    #[test]
    fn moving_average_examples() {
        assert_eq!(moving_average(&[4.0; 7], 3).unwrap(), vec![4.0; 7]);
        let mut x = vec![0.0; 16];
        x[6] = 5.0;
        let y = moving_average(&x, 5).unwrap();
        assert_eq!(&y[6..11], &[1.0; 5]);
        assert_eq!(y[11], 0.0);
        assert_eq!(moving_average(&[1.0, 3.0], 4).unwrap(), vec![1.0, 2.0]);
        assert!(moving_average(&x, 0).is_err());
    }

    #[test]
    fn differences() {
        assert_eq!(
            backward_difference(&[0.0, 1.0, 3.0], 0.5),
            vec![2.0, 2.0, 4.0]
        );
    }
}
