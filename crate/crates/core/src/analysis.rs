//! Open-loop observer transfer functions under plant uncertainty, stability
//! margin sweeps and estimation-error metrics.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::dob::{q_filter, DobConfig};
use crate::error::{Error, Result};
use crate::lti::{critical_gain, gain_phase_margins, Margin, Polynomial, RationalTF};
use crate::luenberger::{design_by_poles, LuenbergerDesign};
use crate::plant::{plant_tf, PlantParams, UncertaintyBox};

/// Relative tolerance on the real part of a zero when classifying it.
pub const ZERO_RE_TOL: f64 = 1e-9;

/// `L_D(s)` from its factored closed form
///
/// ```text
/// [(K_m ΔJ − J ΔK_m) s + (K_m Δb − b ΔK_m)] / [(J+ΔJ) s + (b+Δb)] · Q(s) / K_m
/// ```
pub fn loop_tf_dob(
    nominal: &PlantParams,
    delta: &UncertaintyBox,
    omega0: f64,
) -> Result<RationalTF> {
    nominal.validate()?;
    delta.check(nominal)?;
    let (km, j, b) = (nominal.km, nominal.j, nominal.b);
    let first = RationalTF::new(
        Polynomial::new([
            (km * delta.d_j - j * delta.d_km) / km,
            (km * delta.d_b - b * delta.d_km) / km,
        ]),
        Polynomial::new([j + delta.d_j, b + delta.d_b]),
    )?;
    Ok(first.series(&q_filter(omega0)?))
}

/// `L_D(s) = (1 − Σ Σ̃⁻¹) Q(s)` composed from the perturbed and nominal
/// plants without cancellation. Used to cross-check [`loop_tf_dob`].
pub fn loop_tf_dob_composed(
    nominal: &PlantParams,
    delta: &UncertaintyBox,
    omega0: f64,
) -> Result<RationalTF> {
    let sigma = plant_tf(nominal, delta)?;
    let sigma_nom = plant_tf(nominal, &UncertaintyBox::default())?;
    let ratio = sigma.series(&sigma_nom.inverse()?);
    Ok(RationalTF::gain(1.0).sub(&ratio).series(&q_filter(omega0)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinPhase {
    MinimumPhase,
    NonMinimumPhase,
    /// `K_m ΔJ − J ΔK_m = 0`: the zero of the first factor has left for
    /// infinity (or the whole numerator vanished).
    Degenerate,
}

/// Sign test `(K_m Δb − b ΔK_m) / (K_m ΔJ − J ΔK_m) > 0` for `L_D`.
pub fn min_phase_condition(nominal: &PlantParams, delta: &UncertaintyBox) -> MinPhase {
    let (km, j, b) = (nominal.km, nominal.j, nominal.b);
    let num = km * delta.d_b - b * delta.d_km;
    let den = km * delta.d_j - j * delta.d_km;
    // both terms are differences of products; anything at roundoff level is zero
    let den_scale = (km * delta.d_j).abs() + (j * delta.d_km).abs();
    if den == 0.0 || den.abs() <= 8.0 * f64::EPSILON * den_scale {
        return MinPhase::Degenerate;
    }
    if num / den > 0.0 {
        MinPhase::MinimumPhase
    } else {
        MinPhase::NonMinimumPhase
    }
}

/// `L_L(s) = [0 1](sI − A_L)⁻¹ [B_L M] [1; Σ(s)]`.
pub fn loop_tf_luenberger(d: &LuenbergerDesign, sigma: &RationalTF) -> Result<RationalTF> {
    if !sigma.is_proper() {
        return Err(Error::Improper {
            num: sigma.num().degree(),
            den: sigma.den().degree(),
        });
    }
    let (from_u, from_q) = d.input_columns([0.0, 1.0]);
    Ok(from_u.to_tf().add(&from_q.to_tf().series(sigma)))
}

/// Real parts of zeros left of `-ZERO_RE_TOL·|z|` count as stable.
fn zero_is_stable(z: num_complex::Complex64) -> bool {
    z.re < -ZERO_RE_TOL * z.norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObserverKind {
    Luenberger,
    Dob,
}

impl ObserverKind {
    pub fn name(self) -> &'static str {
        match self {
            ObserverKind::Luenberger => "luenberger",
            ObserverKind::Dob => "dob",
        }
    }
}

/// Design parameters shared by every cell of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepDesign {
    pub nominal: PlantParams,
    /// DOB Q-filter frequency, rad/s.
    pub omega0: f64,
    /// Luenberger observer poles, rad/s.
    pub observer_poles: [f64; 2],
}

impl SweepDesign {
    /// Reference plant, `ω0 = 500` and a double observer pole at
    /// `50·(−b/J)`.
    pub fn reference() -> Self {
        let nominal = PlantParams::reference();
        let pole = crate::luenberger::DEFAULT_POLE_MULTIPLIER * nominal.mechanical_pole();
        Self {
            nominal,
            omega0: crate::dob::DEFAULT_OMEGA0,
            observer_poles: [pole, pole],
        }
    }

    pub fn dob(&self) -> Result<DobConfig> {
        DobConfig::new(self.omega0, self.nominal)
    }

    pub fn luenberger(&self) -> Result<LuenbergerDesign> {
        design_by_poles(
            &self.nominal,
            self.observer_poles[0],
            self.observer_poles[1],
        )
    }

    /// Loop transfer function of `which` for one uncertainty cell.
    pub fn loop_tf(&self, which: ObserverKind, delta: &UncertaintyBox) -> Result<RationalTF> {
        match which {
            ObserverKind::Dob => loop_tf_dob(&self.nominal, delta, self.omega0),
            ObserverKind::Luenberger => {
                let sigma = plant_tf(&self.nominal, delta)?;
                loop_tf_luenberger(&self.luenberger()?, &sigma)
            }
        }
    }
}

/// One row of a margin table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginReport {
    pub d_km: f64,
    pub d_j: f64,
    pub d_b: f64,
    pub min_phase: bool,
    /// `|Re z|` of the slowest right half-plane zero, rad/s.
    pub unstable_zero_freq: Option<f64>,
    pub k_c: Margin,
    pub omega_c: Option<f64>,
    /// Degrees; infinite without a unity crossover.
    pub phi: Margin,
}

/// Margins of the loop transfer function `l` for the cell `delta`.
pub fn margin_report(l: &RationalTF, delta: &UncertaintyBox) -> Result<MarginReport> {
    let zeros = l.zeros()?;
    let min_phase = zeros.iter().all(|&z| zero_is_stable(z));
    let unstable_zero_freq = zeros
        .iter()
        .filter(|&&z| z.re > ZERO_RE_TOL * z.norm())
        .map(|z| z.re.abs())
        .fold(None, |acc: Option<f64>, f| {
            Some(acc.map_or(f, |a| a.min(f)))
        });
    let k_c = critical_gain(l)?;
    let margins = gain_phase_margins(l)?;
    Ok(MarginReport {
        d_km: delta.d_km,
        d_j: delta.d_j,
        d_b: delta.d_b,
        min_phase,
        unstable_zero_freq,
        k_c,
        omega_c: margins.omega_c,
        phi: margins.phase_margin,
    })
}

/// Margin rows for every cell, in input order.
pub fn margin_sweep(
    cells: &[UncertaintyBox],
    which: ObserverKind,
    design: &SweepDesign,
) -> Result<Vec<MarginReport>> {
    cells
        .iter()
        .map(|c| margin_report(&design.loop_tf(which, c)?, c))
        .collect()
}

/// The four `(ΔK_m, Δb)` cells `(+,+), (+,−), (−,+), (−,−)` with
/// `|ΔK_m| = km_frac·K_m`, `|Δb| = b/3` and `ΔJ = 0`.
pub fn table_cells(p: &PlantParams, km_frac: f64) -> [UncertaintyBox; 4] {
    let third = 1.0 / 3.0;
    [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)]
        .map(|(sk, sb)| UncertaintyBox::relative(p, sk * km_frac, 0.0, sb * third))
}

fn check_series(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::TooShort {
            need: 2,
            got: a.len(),
        });
    }
    Ok(())
}

/// `sqrt((1/T) ∫ (τ − τ~)² dt)` with trapezoidal quadrature, `T = (n−1)·dt`.
pub fn rms_error(tau_true: &[f64], tau_est: &[f64], dt: f64) -> Result<f64> {
    check_series(tau_true, tau_est)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt = {dt} must be > 0")));
    }
    let sq: Vec<f64> = tau_true
        .iter()
        .zip(tau_est)
        .map(|(a, b)| (a - b) * (a - b))
        .collect();
    let n = sq.len();
    let inner: f64 = sq[1..n - 1].iter().sum();
    let integral = dt * (inner + 0.5 * (sq[0] + sq[n - 1]));
    let horizon = dt * (n - 1) as f64;
    Ok((integral / horizon).sqrt())
}

/// Population standard deviation of `|τ − τ~|`.
pub fn std_abs_error(tau_true: &[f64], tau_est: &[f64]) -> Result<f64> {
    check_series(tau_true, tau_est)?;
    let n = tau_true.len() as f64;
    let abs: Vec<f64> = tau_true
        .iter()
        .zip(tau_est)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let mean = abs.iter().sum::<f64>() / n;
    let var = abs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// Nm.
    pub rms: f64,
    /// Nm.
    pub std_abs: f64,
    /// s.
    pub horizon: f64,
}

impl ErrorMetrics {
    pub fn compute(tau_true: &[f64], tau_est: &[f64], dt: f64) -> Result<Self> {
        Ok(Self {
            rms: rms_error(tau_true, tau_est, dt)?,
            std_abs: std_abs_error(tau_true, tau_est)?,
            horizon: dt * (tau_true.len().saturating_sub(1)) as f64,
        })
    }
}
