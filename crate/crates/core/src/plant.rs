//! Rotary actuator with viscous and Coulomb friction driven by a PI speed
//! loop, plus load waveforms and measurement noise.
//!
//! Dynamics: `J q̈ + b q̇ − τ = u − C_f sign(q̇)`. A positive load torque `τ`
//! assists motion.

use alloc::format;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lti::{Polynomial, RationalTF};
use crate::ode::rk4;
use crate::trajectory::Trajectory;

/// Speeds with magnitude at or below this are treated as rest, rad/s.
pub const VELOCITY_DEADBAND: f64 = 1e-6;
/// Control loop period of the reference drive (8 kHz), s.
pub const CONTROL_PERIOD: f64 = 1.0 / 8000.0;
/// Encoder resolution default, 16 bit per revolution.
pub const DEFAULT_ENCODER_QUANTUM: f64 = 2.0 * PI / 65536.0;

/// `sign(v)` with a dead band: zero for `|v| <= VELOCITY_DEADBAND`.
pub fn sign_deadband(v: f64) -> f64 {
    if v.abs() <= VELOCITY_DEADBAND {
        0.0
    } else {
        v.signum()
    }
}

/// Lumped mechanical parameters of the motor under test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantParams {
    /// Torque constant, Nm/A.
    pub km: f64,
    /// Inertia, kg m².
    pub j: f64,
    /// Viscous damping, Nm s/rad.
    pub b: f64,
    /// Coulomb friction level, Nm.
    pub cf: f64,
    pub pole_pairs: u32,
}

impl PlantParams {
    /// Identified parameters of the reference PMSM drive.
    pub const fn reference() -> Self {
        Self {
            km: 0.6017,
            j: 2.7354e-4,
            b: 2.903e-3,
            cf: 5.5519e-2,
            pole_pairs: 7,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("K_m", self.km),
            ("J", self.j),
            ("b", self.b),
            ("C_f", self.cf),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParameterDomain(format!("{name} = {v} must be > 0")));
            }
        }
        Ok(())
    }

    /// Mechanical pole `-b/J`, rad/s.
    pub fn mechanical_pole(&self) -> f64 {
        -self.b / self.j
    }

    /// Parameters with additive perturbations applied.
    pub fn perturbed(&self, d: &UncertaintyBox) -> Result<Self> {
        d.check(self)?;
        Ok(Self {
            km: self.km + d.d_km,
            j: self.j + d.d_j,
            b: self.b + d.d_b,
            ..*self
        })
    }

    pub fn without_coulomb(&self) -> Self {
        Self { cf: 0.0, ..*self }
    }

    /// Right-hand side `q̈` for a given net torque and friction.
    fn accel(&self, qdot: f64, drive: f64, load: f64, friction: f64) -> f64 {
        (drive + load - friction - self.b * qdot) / self.j
    }

    /// Advances `(q, q̇)` by one RK4 step with the drive torque held and the
    /// Coulomb term frozen at its value at step start.
    ///
    /// At rest the shaft sticks while `|u + τ| <= C_f`; otherwise friction
    /// opposes the net torque. A speed reversal inside a step with
    /// `|u + τ| <= C_f` ends at rest.
    pub fn step(
        &self,
        state: PlantState,
        drive: f64,
        t: f64,
        dt: f64,
        load: impl Fn(f64) -> f64,
    ) -> PlantState {
        let net0 = drive + load(t);
        let friction = if state.qdot.abs() <= VELOCITY_DEADBAND {
            if net0.abs() <= self.cf {
                return PlantState {
                    q: state.q,
                    qdot: 0.0,
                };
            }
            self.cf * net0.signum()
        } else {
            self.cf * state.qdot.signum()
        };
        let [q, qdot] = rk4([state.q, state.qdot], dt, |tau, x| {
            [x[1], self.accel(x[1], drive, load(t + tau), friction)]
        });
        let reversed = state.qdot != 0.0 && qdot * state.qdot < 0.0;
        if reversed && (drive + load(t + dt)).abs() <= self.cf {
            return PlantState { q, qdot: 0.0 };
        }
        PlantState { q, qdot }
    }
}

impl Default for PlantParams {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlantState {
    pub q: f64,
    pub qdot: f64,
}

/// Additive parameter perturbations of `(K_m, J, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UncertaintyBox {
    pub d_km: f64,
    pub d_j: f64,
    pub d_b: f64,
}

impl UncertaintyBox {
    pub fn new(d_km: f64, d_j: f64, d_b: f64) -> Self {
        Self { d_km, d_j, d_b }
    }

    /// Perturbations given as fractions of the nominal values.
    pub fn relative(p: &PlantParams, km_frac: f64, j_frac: f64, b_frac: f64) -> Self {
        Self {
            d_km: km_frac * p.km,
            d_j: j_frac * p.j,
            d_b: b_frac * p.b,
        }
    }

    /// `K_m - |ΔK_m| > 0`, `J - |ΔJ| > 0`, `b - |Δb| > 0`.
    pub fn check(&self, p: &PlantParams) -> Result<()> {
        for (name, base, d) in [
            ("K_m", p.km, self.d_km),
            ("J", p.j, self.d_j),
            ("b", p.b, self.d_b),
        ] {
            if !(base - d.abs() > 0.0) {
                return Err(Error::ParameterDomain(format!(
                    "|Δ{name}| = {} must be below {name} = {base}",
                    d.abs()
                )));
            }
        }
        Ok(())
    }
}

/// `(K_m+ΔK_m) / ((J+ΔJ) s² + (b+Δb) s)`, shaft angle per unit current.
pub fn plant_tf(p: &PlantParams, d: &UncertaintyBox) -> Result<RationalTF> {
    p.validate()?;
    let e = p.perturbed(d)?;
    RationalTF::new(Polynomial::constant(e.km), Polynomial::new([e.j, e.b, 0.0]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LoadKind {
    Constant,
    Square,
    Sine,
    /// Square wave of the profile's amplitude/frequency plus a sine.
    SquarePlusSine {
        sine_amplitude: f64,
        sine_frequency_hz: f64,
    },
}

/// External load torque waveform.
///
/// Before `start` the load is zero; afterwards time is measured from
/// `start`. The square wave is high (`offset + amplitude`) for the first
/// `duty` fraction of each period and `offset` otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadProfile {
    pub kind: LoadKind,
    /// Nm.
    pub amplitude: f64,
    /// Hz; ignored for constant loads.
    pub frequency_hz: f64,
    /// Nm.
    pub offset: f64,
    pub duty: f64,
    /// s.
    pub start: f64,
}

impl LoadProfile {
    pub fn none() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: LoadKind::Constant,
            amplitude: value,
            frequency_hz: 0.0,
            offset: 0.0,
            duty: 0.5,
            start: 0.0,
        }
    }

    /// Step of height `value` at time `at`.
    pub fn step(value: f64, at: f64) -> Self {
        Self {
            start: at,
            ..Self::constant(value)
        }
    }

    pub fn sine(amplitude: f64, frequency_hz: f64) -> Self {
        Self {
            kind: LoadKind::Sine,
            amplitude,
            frequency_hz,
            ..Self::constant(0.0)
        }
    }

    pub fn square(amplitude: f64, frequency_hz: f64, duty: f64, offset: f64) -> Self {
        Self {
            kind: LoadKind::Square,
            amplitude,
            frequency_hz,
            offset,
            duty,
            start: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitude < 0.0 || self.frequency_hz < 0.0 {
            return Err(Error::ParameterDomain(
                "load amplitude and frequency must be >= 0".into(),
            ));
        }
        if !(self.duty > 0.0 && self.duty < 1.0) {
            return Err(Error::ParameterDomain(format!(
                "square duty {} outside (0, 1)",
                self.duty
            )));
        }
        if let LoadKind::SquarePlusSine {
            sine_amplitude,
            sine_frequency_hz,
        } = self.kind
        {
            if sine_amplitude < 0.0 || sine_frequency_hz < 0.0 {
                return Err(Error::ParameterDomain(
                    "sine component amplitude and frequency must be >= 0".into(),
                ));
            }
        }
        if self.start < 0.0 {
            return Err(Error::ParameterDomain("load start must be >= 0".into()));
        }
        Ok(())
    }

    fn square_part(&self, t: f64) -> f64 {
        let phase = if self.frequency_hz > 0.0 {
            let x = t * self.frequency_hz;
            x - x.floor()
        } else {
            0.0
        };
        if phase < self.duty {
            self.offset + self.amplitude
        } else {
            self.offset
        }
    }
}

/// Load torque at time `t`, Nm.
pub fn load_signal(load: &LoadProfile, t: f64) -> f64 {
    if t < load.start {
        return 0.0;
    }
    let t = t - load.start;
    match load.kind {
        LoadKind::Constant => load.offset + load.amplitude,
        LoadKind::Square => load.square_part(t),
        LoadKind::Sine => load.offset + load.amplitude * (2.0 * PI * load.frequency_hz * t).sin(),
        LoadKind::SquarePlusSine {
            sine_amplitude,
            sine_frequency_hz,
        } => load.square_part(t) + sine_amplitude * (2.0 * PI * sine_frequency_hz * t).sin(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Encoder quantization step, rad; 0 disables quantization.
    pub encoder_quantum: f64,
    /// Standard deviation of additive current noise, A.
    pub current_noise_std: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            encoder_quantum: 0.0,
            current_noise_std: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.encoder_quantum < 0.0 || self.current_noise_std < 0.0 {
            return Err(Error::ParameterDomain(
                "noise magnitudes must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            encoder_quantum: DEFAULT_ENCODER_QUANTUM,
            current_noise_std: 0.0,
            seed: 0,
        }
    }
}

/// Rounds `q` to the nearest multiple of `quantum`.
pub fn quantize(q: f64, quantum: f64) -> f64 {
    if quantum > 0.0 {
        (q / quantum).round() * quantum
    } else {
        q
    }
}

/// PI speed controller `u = Kp e + Ki ∫e` with clamp and conditional
/// integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedController {
    pub kp: f64,
    pub ki: f64,
    /// Symmetric drive torque limit, Nm.
    pub torque_limit: f64,
}

impl SpeedController {
    pub const DEFAULT_BANDWIDTH: f64 = 50.0;
    pub const DEFAULT_TORQUE_LIMIT: f64 = 5.0;

    /// Places both roots of `J s² + (b + Kp) s + Ki` at `-bandwidth`.
    pub fn by_bandwidth(p: &PlantParams, bandwidth: f64, torque_limit: f64) -> Self {
        Self {
            kp: 2.0 * bandwidth * p.j - p.b,
            ki: bandwidth * bandwidth * p.j,
            torque_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    /// rad/s.
    pub speed_ref: f64,
    pub load: LoadProfile,
    pub noise: NoiseSpec,
    /// s.
    pub dt: f64,
    /// s.
    pub horizon: f64,
    pub controller: SpeedController,
    /// Initial shaft speed, rad/s. The controller integrator is preset to
    /// hold it against viscous and Coulomb friction.
    pub initial_speed: f64,
    /// Torque constant the drive uses to convert measured current to the
    /// recorded torque; `None` means the plant's own `K_m`.
    pub sensed_km: Option<f64>,
}

impl SimConfig {
    pub fn new(p: &PlantParams, speed_ref: f64, load: LoadProfile, horizon: f64) -> Self {
        Self {
            speed_ref,
            load,
            noise: NoiseSpec::default(),
            dt: CONTROL_PERIOD,
            horizon,
            controller: SpeedController::by_bandwidth(
                p,
                SpeedController::DEFAULT_BANDWIDTH,
                SpeedController::DEFAULT_TORQUE_LIMIT,
            ),
            initial_speed: 0.0,
            sensed_km: None,
        }
    }
}

/// Simulates the speed-controlled actuator over `[0, horizon]`.
///
/// The PI controller acts on the true speed; the recorded torque carries
/// `sensed_km` times the current noise and the recorded angle is quantized.
pub fn simulate(p: &PlantParams, cfg: &SimConfig) -> Result<Trajectory> {
    if !(p.km > 0.0 && p.j > 0.0 && p.b >= 0.0 && p.cf >= 0.0) {
        return Err(Error::ParameterDomain(format!(
            "invalid plant parameters {p:?}"
        )));
    }
    cfg.load.validate()?;
    cfg.noise.validate()?;
    if !(cfg.dt > 0.0) || !(cfg.horizon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "dt = {} and horizon = {} must be > 0",
            cfg.dt, cfg.horizon
        )));
    }
    let sensed_km = cfg.sensed_km.unwrap_or(p.km);
    if !(sensed_km > 0.0) {
        return Err(Error::ParameterDomain("sensed K_m must be > 0".into()));
    }
    let steps = (cfg.horizon / cfg.dt).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.noise.seed);
    let load = |t: f64| load_signal(&cfg.load, t);
    let ctl = cfg.controller;

    let mut state = PlantState {
        q: 0.0,
        qdot: cfg.initial_speed,
    };
    let mut integral = if ctl.ki != 0.0 {
        (p.b * cfg.initial_speed + p.cf * sign_deadband(cfg.initial_speed)) / ctl.ki
    } else {
        0.0
    };

    let mut tr = Trajectory::with_capacity(cfg.dt, steps + 1);
    for k in 0..=steps {
        let t = k as f64 * cfg.dt;
        let err = cfg.speed_ref - state.qdot;
        let unclamped = ctl.kp * err + ctl.ki * (integral + err * cfg.dt);
        let command = unclamped.clamp(-ctl.torque_limit, ctl.torque_limit);
        // conditional integration: freeze while saturated in the error direction
        if unclamped == command || unclamped.signum() != err.signum() {
            integral += err * cfg.dt;
        }
        let current = command / sensed_km;
        let noise = if cfg.noise.current_noise_std > 0.0 {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * cfg.noise.current_noise_std
        } else {
            0.0
        };
        let recorded_u = sensed_km * (current + noise);
        tr.push_row(
            t,
            recorded_u,
            quantize(state.q, cfg.noise.encoder_quantum),
            state.qdot,
            load(t),
        );
        if k < steps {
            state = p.step(state, p.km * current, t, cfg.dt, load);
        }
    }
    Ok(tr)
}
