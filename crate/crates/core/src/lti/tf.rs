//! Rational transfer functions `num(s) / den(s)`.

use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use super::poly::Polynomial;
use crate::error::{Error, Result};

/// Ratio of two real polynomials in `s`.
///
/// Common factors are never cancelled; use [`RationalTF::near_cancellations`]
/// to see which pole/zero pairs nearly coincide.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalTF {
    num: Polynomial,
    den: Polynomial,
}

/// A zero and a pole that lie within the requested relative distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearCancellation {
    pub zero: Complex64,
    pub pole: Complex64,
    pub rel_distance: f64,
}

impl RationalTF {
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroDenominator);
        }
        Ok(Self { num, den })
    }

    /// Convenience constructor from coefficient slices, highest degree first.
    pub fn from_coeffs(num: &[f64], den: &[f64]) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den))
    }

    pub fn gain(k: f64) -> Self {
        Self {
            num: Polynomial::constant(k),
            den: Polynomial::constant(1.0),
        }
    }

    pub fn num(&self) -> &Polynomial {
        &self.num
    }

    pub fn den(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() <= self.den.degree()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    /// `deg den - deg num`; `None` for the zero transfer function.
    pub fn relative_degree(&self) -> Option<isize> {
        if self.num.is_zero() {
            None
        } else {
            Some(self.den.degree() as isize - self.num.degree() as isize)
        }
    }

    /// Evaluates `num(s)/den(s)` with Horner's scheme.
    pub fn eval(&self, s: Complex64) -> Result<Complex64> {
        let d = self.den.eval(s);
        // scale of the terms summed in den(s); below this the value is roundoff
        let r = s.norm();
        let mut scale = 0.0;
        let mut pw = 1.0;
        for &c in self.den.coeffs().iter().rev() {
            scale += c.abs() * pw;
            pw *= r;
        }
        if d.norm() <= 4.0 * f64::EPSILON * scale {
            return Err(Error::PoleEvaluation(s));
        }
        Ok(self.num.eval(s) / d)
    }

    /// Frequency response `L(jω)`.
    pub fn freq_response(&self, omega: f64) -> Result<Complex64> {
        self.eval(Complex64::new(0.0, omega))
    }

    pub fn series(&self, other: &Self) -> Self {
        Self {
            num: &self.num * &other.num,
            den: &self.den * &other.den,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        if self.den == other.den {
            return Self {
                num: &self.num + &other.num,
                den: self.den.clone(),
            };
        }
        Self {
            num: &(&self.num * &other.den) + &(&other.num * &self.den),
            den: &self.den * &other.den,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-1.0))
    }

    pub fn scale(&self, k: f64) -> Self {
        Self {
            num: self.num.scale(k),
            den: self.den.clone(),
        }
    }

    /// `den/num`. Fails for the zero transfer function.
    pub fn inverse(&self) -> Result<Self> {
        Self::new(self.den.clone(), self.num.clone())
    }

    pub fn poles(&self) -> Result<Vec<Complex64>> {
        if self.den.degree() == 0 {
            return Ok(Vec::new());
        }
        self.den.roots()
    }

    /// Finite zeros; empty for a constant or zero numerator.
    pub fn zeros(&self) -> Result<Vec<Complex64>> {
        if self.num.degree() == 0 {
            return Ok(Vec::new());
        }
        self.num.roots()
    }

    /// Limit of `L(s)` as `s -> ∞` for proper `L`.
    pub fn high_frequency_gain(&self) -> Result<f64> {
        if !self.is_proper() {
            return Err(Error::Improper {
                num: self.num.degree(),
                den: self.den.degree(),
            });
        }
        if self.num.is_zero() || self.num.degree() < self.den.degree() {
            Ok(0.0)
        } else {
            Ok(self.num.leading() / self.den.leading())
        }
    }

    pub fn dc_gain(&self) -> Result<f64> {
        self.eval(Complex64::new(0.0, 0.0)).map(|z| z.re)
    }

    /// Pairs each zero with its nearest pole and reports those closer than
    /// `rel_tol * max(|zero|, |pole|, 1e-12)`.
    pub fn near_cancellations(&self, rel_tol: f64) -> Result<Vec<NearCancellation>> {
        let zeros = self.zeros()?;
        let poles = self.poles()?;
        let mut out = Vec::new();
        for z in zeros {
            let nearest = poles
                .iter()
                .map(|&p| (p, (z - p).norm()))
                .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(core::cmp::Ordering::Equal));
            if let Some((p, d)) = nearest {
                let scale = z.norm().max(p.norm()).max(1e-12);
                if d <= rel_tol * scale {
                    out.push(NearCancellation {
                        zero: z,
                        pole: p,
                        rel_distance: d / scale,
                    });
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RationalTF {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}) / ({})", self.num, self.den)
    }
}

/// `g1 · g2` without cancellation.
pub fn tf_series(g1: &RationalTF, g2: &RationalTF) -> RationalTF {
    g1.series(g2)
}

pub fn tf_add(g1: &RationalTF, g2: &RationalTF) -> RationalTF {
    g1.add(g2)
}

pub fn tf_sub(g1: &RationalTF, g2: &RationalTF) -> RationalTF {
    g1.sub(g2)
}

pub fn tf_eval(g: &RationalTF, s: Complex64) -> Result<Complex64> {
    g.eval(s)
}
