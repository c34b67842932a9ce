//! Unity-feedback stability: closed-loop roots, critical gain, and
//! gain/phase margins of an open-loop transfer function.

use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use super::poly::Polynomial;
use super::tf::RationalTF;
use crate::error::{Error, Result};

/// Gains at or above this value count as "infinite".
pub const GAIN_CAP: f64 = 1e6;
/// Log-spaced frequency scan used by the margin search, rad/s.
pub const OMEGA_MIN: f64 = 1e-2;
pub const OMEGA_MAX: f64 = 1e6;
pub const OMEGA_POINTS: usize = 2000;

/// A margin that may be unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Margin {
    Finite(f64),
    Infinite,
}

impl Margin {
    pub fn is_infinite(&self) -> bool {
        matches!(self, Margin::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            Margin::Finite(v) => Some(v),
            Margin::Infinite => None,
        }
    }

    /// `f64::INFINITY` for the unbounded case.
    pub fn value(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Margin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Margin::Finite(v) => write!(f, "{v}"),
            Margin::Infinite => f.write_str("inf"),
        }
    }
}

/// Result of the frequency-domain margin search.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginPair {
    /// Absolute factor `1/|L(jω_pc)|` at the most critical -180° crossing.
    pub gain_margin: Margin,
    pub phase_crossover: Option<f64>,
    /// Number of -180° crossings found (including a negative DC gain).
    pub phase_crossings: usize,
    /// `180° + arg L(jω_c)`, normalized to (-180°, 180°].
    pub phase_margin: Margin,
    /// Lowest unity-gain crossover frequency, rad/s.
    pub omega_c: Option<f64>,
    /// Number of unity-gain crossovers in the scanned band.
    pub crossovers: usize,
}

impl MarginPair {
    pub fn multiple_crossovers(&self) -> bool {
        self.crossovers > 1
    }
}

/// Roots of `den(s) + k num(s)`.
pub fn closed_loop_poles(l: &RationalTF, k: f64) -> Result<Vec<Complex64>> {
    if k < 0.0 || k.is_nan() {
        return Err(Error::NegativeGain(k));
    }
    let ch = characteristic(l, k);
    if ch.is_zero() {
        return Err(Error::DegenerateCharacteristic(k));
    }
    if ch.degree() == 0 {
        return Ok(Vec::new());
    }
    ch.roots()
}

fn characteristic(l: &RationalTF, k: f64) -> Polynomial {
    l.den() + &l.num().scale(k)
}

fn is_stable(l: &RationalTF, k: f64) -> Result<bool> {
    Ok(closed_loop_poles(l, k)?.iter().all(|r| r.re < 0.0))
}

fn pole_scale(poles: &[Complex64]) -> f64 {
    poles.iter().fold(1.0, |m, p| m.max(p.norm()))
}

/// Largest `k` such that the unity-feedback loop `den + k' num` is strictly
/// stable for every `0 < k' < k`.
///
/// Scans `k` geometrically from 1e-6 to [`GAIN_CAP`] (60 points per decade)
/// and bisects the first stable-to-unstable transition. Open-loop poles on
/// the imaginary axis (integrators) are accepted; poles with positive real
/// part are rejected. Returns `Finite(0.0)` if the loop is already unstable
/// at the smallest scanned gain and still at `1e-12`.
pub fn critical_gain(l: &RationalTF) -> Result<Margin> {
    if !l.is_proper() {
        return Err(Error::Improper {
            num: l.num().degree(),
            den: l.den().degree(),
        });
    }
    let poles = l.poles()?;
    let scale = pole_scale(&poles);
    if let Some(p) = poles.iter().find(|p| p.re > 1e-9 * scale) {
        return Err(Error::OpenLoopUnstable(*p));
    }
    if l.num().is_zero() {
        return Ok(Margin::Infinite);
    }

    const K_MIN: f64 = 1e-6;
    const PER_DECADE: usize = 60;
    let decades = (GAIN_CAP / K_MIN).log10();
    let n = (decades * PER_DECADE as f64).round() as usize;
    let ratio = 10f64.powf(1.0 / PER_DECADE as f64);

    if !is_stable(l, K_MIN)? {
        // below K_FLOOR the closed-loop root leaving an integrator is roundoff
        const K_FLOOR: f64 = 1e-12;
        if !is_stable(l, K_FLOOR)? {
            return Ok(Margin::Finite(0.0));
        }
        return Ok(Margin::Finite(bisect(l, K_FLOOR, K_MIN)?));
    }
    let mut lo = K_MIN;
    for i in 1..=n {
        let k = if i == n {
            GAIN_CAP
        } else {
            K_MIN * ratio.powi(i as i32)
        };
        if !is_stable(l, k)? {
            return Ok(Margin::Finite(bisect(l, lo, k)?));
        }
        lo = k;
    }
    Ok(Margin::Infinite)
}

/// Bisection on `[lo, hi]` with `lo` stable (or zero) and `hi` unstable.
/// Returns the largest gain verified stable, so `0` when none is.
fn bisect(l: &RationalTF, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if is_stable(l, mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-13 * hi {
            break;
        }
    }
    Ok(lo)
}

fn log_grid(n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (OMEGA_MIN.log10(), OMEGA_MAX.log10());
    (0..n).map(move |i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
}

/// Refines a sign change of `f` on `[w0, w1]` by bisection in log-frequency.
fn refine<F: Fn(f64) -> f64>(f: F, mut w0: f64, mut w1: f64) -> f64 {
    let mut f0 = f(w0);
    for _ in 0..80 {
        let wm = (w0 * w1).sqrt();
        let fm = f(wm);
        if fm == 0.0 {
            return wm;
        }
        if (fm > 0.0) == (f0 > 0.0) {
            w0 = wm;
            f0 = fm;
        } else {
            w1 = wm;
        }
        if w1 / w0 - 1.0 < 1e-14 {
            break;
        }
    }
    (w0 * w1).sqrt()
}

/// Phase angle normalized to (-180°, 180°].
fn normalize_deg(mut d: f64) -> f64 {
    while d > 180.0 {
        d -= 360.0;
    }
    while d <= -180.0 {
        d += 360.0;
    }
    d
}

/// Gain and phase margins from a log-spaced scan over
/// [[`OMEGA_MIN`], [`OMEGA_MAX`]] with bisection refinement.
///
/// The phase margin is taken at the lowest unity crossover; with no
/// crossover in the band it is reported infinite. The gain margin is the
/// smallest `1/|L|` over all -180° crossings, where a finite negative real
/// DC gain counts as a crossing at ω = 0.
pub fn gain_phase_margins(l: &RationalTF) -> Result<MarginPair> {
    if !l.is_proper() {
        return Err(Error::Improper {
            num: l.num().degree(),
            den: l.den().degree(),
        });
    }
    let eval = |w: f64| l.freq_response(w);
    let grid: Vec<f64> = log_grid(OMEGA_POINTS).collect();
    let mut resp = Vec::with_capacity(grid.len());
    for &w in &grid {
        resp.push(eval(w)?);
    }

    // unity crossovers
    let mag_db = |w: f64| eval(w).map(|z| z.norm().ln()).unwrap_or(0.0);
    let mut crossings = Vec::new();
    for i in 1..grid.len() {
        let (a, b) = (resp[i - 1].norm() - 1.0, resp[i].norm() - 1.0);
        if a == 0.0 {
            crossings.push(grid[i - 1]);
        } else if (a > 0.0) != (b > 0.0) && b != 0.0 {
            crossings.push(refine(mag_db, grid[i - 1], grid[i]));
        }
    }
    let (phase_margin, omega_c) = match crossings.first() {
        Some(&wc) => {
            let z = eval(wc)?;
            let phi = normalize_deg(180.0 + z.im.atan2(z.re) * 180.0 / PI);
            (Margin::Finite(phi), Some(wc))
        }
        None => (Margin::Infinite, None),
    };

    // -180° crossings: Im L changes sign while Re L < 0
    let mut pc: Vec<(f64, f64)> = Vec::new();
    if l.den().coeff(0) != 0.0 {
        let dc = l.num().coeff(0) / l.den().coeff(0);
        if dc < 0.0 {
            pc.push((0.0, dc.abs()));
        }
    }
    let im = |w: f64| eval(w).map(|z| z.im).unwrap_or(0.0);
    for i in 1..grid.len() {
        let (a, b) = (resp[i - 1].im, resp[i].im);
        if a == 0.0 || (a > 0.0) == (b > 0.0) {
            continue;
        }
        let w = refine(im, grid[i - 1], grid[i]);
        let z = eval(w)?;
        if z.re < 0.0 {
            pc.push((w, z.norm()));
        }
    }
    let worst = pc
        .iter()
        .copied()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
    let (gain_margin, phase_crossover) = match worst {
        Some((w, m)) if m > 0.0 => (Margin::Finite(1.0 / m), Some(w)),
        _ => (Margin::Infinite, None),
    };

    Ok(MarginPair {
        gain_margin,
        phase_crossover,
        phase_crossings: pc.len(),
        phase_margin,
        omega_c,
        crossovers: crossings.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tf(num: &[f64], den: &[f64]) -> RationalTF {
        RationalTF::from_coeffs(num, den).unwrap()
    }

    #[test]
    fn first_order_feedback_poles() {
        let l = tf(&[1.0], &[1.0, 1.0]);
        assert_eq!(closed_loop_poles(&l, 0.0).unwrap()[0].re, -1.0);
        assert_eq!(closed_loop_poles(&l, 2.0).unwrap()[0].re, -3.0);
        assert!(closed_loop_poles(&l, -1.0).is_err());
    }

    #[test]
    fn degenerate_characteristic() {
        let l = tf(&[-1.0, 0.0], &[1.0, 0.0]);
        assert!(matches!(
            closed_loop_poles(&l, 1.0),
            Err(Error::DegenerateCharacteristic(_))
        ));
    }

    #[test]
    fn triple_pole_critical_gain_is_eight() {
        let l = tf(&[1.0], &[1.0, 3.0, 3.0, 1.0]);
        let kc = critical_gain(&l).unwrap().finite().unwrap();
        assert_relative_eq!(kc, 8.0, max_relative = 1e-9);
        let m = gain_phase_margins(&l).unwrap();
        assert_relative_eq!(m.gain_margin.finite().unwrap(), 8.0, max_relative = 1e-9);
        assert_relative_eq!(m.phase_crossover.unwrap(), 3f64.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn integrator_phase_margin() {
        let l = tf(&[1.0], &[1.0, 0.0]);
        let m = gain_phase_margins(&l).unwrap();
        assert_relative_eq!(m.omega_c.unwrap(), 1.0, max_relative = 1e-9);
        assert_relative_eq!(m.phase_margin.finite().unwrap(), 90.0, max_relative = 1e-9);
        assert!(m.gain_margin.is_infinite());
        assert!(critical_gain(&l).unwrap().is_infinite());
    }

    #[test]
    fn small_loop_has_infinite_phase_margin() {
        let l = tf(&[0.5], &[1.0, 2.0, 1.0]);
        let m = gain_phase_margins(&l).unwrap();
        assert!(m.phase_margin.is_infinite());
        assert_eq!(m.crossovers, 0);
    }

    #[test]
    fn unstable_open_loop_rejected() {
        let l = tf(&[1.0], &[1.0, -1.0]);
        assert!(matches!(critical_gain(&l), Err(Error::OpenLoopUnstable(_))));
    }

    #[test]
    fn negative_dc_gain_sets_gain_margin() {
        // L = -0.5 / (s + 1): unstable once k > 2
        let l = tf(&[-0.5], &[1.0, 1.0]);
        assert_relative_eq!(critical_gain(&l).unwrap().value(), 2.0, max_relative = 1e-9);
        let m = gain_phase_margins(&l).unwrap();
        assert_relative_eq!(m.gain_margin.value(), 2.0, max_relative = 1e-12);
        assert_eq!(m.phase_crossover, Some(0.0));
    }

    #[test]
    fn normalize() {
        assert_eq!(normalize_deg(195.0), -165.0);
        assert_eq!(normalize_deg(-180.0), 180.0);
        assert_eq!(normalize_deg(90.0), 90.0);
    }
}
