//! Real-coefficient polynomials in the Laplace variable.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{Error, Result};

/// Polynomial with coefficients stored highest degree first.
///
/// Leading zeros are trimmed on construction; the zero polynomial is the
/// single coefficient `[0.0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(coeffs: impl Into<Vec<f64>>) -> Self {
        let mut coeffs = coeffs.into();
        let first = coeffs.iter().position(|&c| c != 0.0);
        match first {
            Some(i) => {
                coeffs.drain(..i);
            }
            None => coeffs = vec![0.0],
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: vec![0.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(vec![c])
    }

    /// The monomial `s`.
    pub fn s() -> Self {
        Self::new(vec![1.0, 0.0])
    }

    /// Monic polynomial with the given roots. Complex roots are expected in
    /// conjugate pairs; the imaginary residue of the expansion is dropped.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut acc = vec![Complex64::new(1.0, 0.0)];
        for &r in roots {
            let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
            for (i, &c) in acc.iter().enumerate() {
                next[i] += c;
                next[i + 1] -= c * r;
            }
            acc = next;
        }
        Self::new(acc.into_iter().map(|c| c.re).collect::<Vec<_>>())
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0] == 0.0
    }

    pub fn leading(&self) -> f64 {
        self.coeffs[0]
    }

    /// Coefficient of `s^k`.
    pub fn coeff(&self, k: usize) -> f64 {
        let n = self.coeffs.len();
        if k >= n {
            0.0
        } else {
            self.coeffs[n - 1 - k]
        }
    }

    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Horner evaluation at a complex point.
    pub fn eval(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    pub fn eval_real(&self, x: f64) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn scale(&self, k: f64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * k).collect::<Vec<_>>())
    }

    pub fn derivative(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Self::zero();
        }
        Self::new(
            self.coeffs[..n]
                .iter()
                .enumerate()
                .map(|(i, &c)| c * (n - i) as f64)
                .collect::<Vec<_>>(),
        )
    }

    /// Sets coefficients with magnitude below `tol * max|c|` to zero.
    pub fn chop(&self, tol: f64) -> Self {
        let cut = tol * self.max_abs_coeff();
        Self::new(
            self.coeffs
                .iter()
                .map(|&c| if c.abs() <= cut { 0.0 } else { c })
                .collect::<Vec<_>>(),
        )
    }

    /// All `degree` roots with multiplicity.
    ///
    /// Exact zero trailing coefficients are deflated as roots at the origin;
    /// the remaining roots are the eigenvalues of the companion matrix of the
    /// monic remainder, computed with nalgebra's real Schur decomposition
    /// (Hessenberg reduction followed by Francis double-shift QR). Each root
    /// satisfies `|p(r)| <= 1e-8 * ||p|| * max(1, |r|)^deg` for the
    /// well-separated, degree <= 6 polynomials used in this crate.
    pub fn roots(&self) -> Result<Vec<Complex64>> {
        if self.degree() == 0 {
            return Err(Error::ConstantPolynomial);
        }
        let mut c = self.coeffs.clone();
        let mut roots = Vec::with_capacity(self.degree());
        while c.len() > 1 && *c.last().unwrap() == 0.0 {
            c.pop();
            roots.push(Complex64::new(0.0, 0.0));
        }
        let n = c.len() - 1;
        match n {
            0 => {}
            1 => roots.push(Complex64::new(-c[1] / c[0], 0.0)),
            _ => {
                let lead = c[0];
                let mut companion = DMatrix::<f64>::zeros(n, n);
                for j in 0..n {
                    companion[(0, j)] = -c[j + 1] / lead;
                }
                for i in 1..n {
                    companion[(i, i - 1)] = 1.0;
                }
                let eig = companion.complex_eigenvalues();
                roots.extend(eig.iter().map(|z| polish(&c, *z)));
            }
        }
        roots.sort_by(|a, b| {
            a.re.partial_cmp(&b.re)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(
                    a.im.partial_cmp(&b.im)
                        .unwrap_or(core::cmp::Ordering::Equal),
                )
        });
        Ok(roots)
    }
}

/// One guarded Newton step; kept only when it reduces the residual.
fn polish(c: &[f64], z: Complex64) -> Complex64 {
    let eval = |s: Complex64| {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &a in c {
            dp = dp * s + p;
            p = p * s + a;
        }
        (p, dp)
    };
    let (p, dp) = eval(z);
    if dp.norm() == 0.0 || !dp.norm().is_finite() {
        return z;
    }
    let cand = z - p / dp;
    let (pc, _) = eval(cand);
    let cand = if z.im == 0.0 {
        Complex64::new(cand.re, 0.0)
    } else {
        cand
    };
    if pc.norm() < p.norm() && cand.re.is_finite() && cand.im.is_finite() {
        cand
    } else {
        z
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.degree();
        let mut first = true;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 && n > 0 {
                continue;
            }
            let p = n - i;
            if !first {
                f.write_str(if c < 0.0 { " - " } else { " + " })?;
            } else if c < 0.0 {
                f.write_str("-")?;
            }
            first = false;
            let a = c.abs();
            match p {
                0 => write!(f, "{a}")?,
                1 => write!(f, "{a}*s")?,
                _ => write!(f, "{a}*s^{p}")?,
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: Self) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut out = vec![0.0; n];
        for (i, &c) in self.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        for (i, &c) in rhs.coeffs.iter().rev().enumerate() {
            out[n - 1 - i] += c;
        }
        Polynomial::new(out)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: Self) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(-1.0)
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: Self) -> Polynomial {
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn trims_leading_zeros() {
        let p = Polynomial::new(vec![0.0, 0.0, 1.0, 2.0]);
        assert_eq!(p.coeffs(), &[1.0, 2.0]);
        assert_eq!(p.degree(), 1);
        assert!(Polynomial::new(vec![0.0, 0.0]).is_zero());
        assert_eq!(Polynomial::new(Vec::new()).degree(), 0);
    }

    #[test]
    fn perfect_square_roots() {
        let p = Polynomial::new(vec![1.0, 1000.0, 250_000.0]);
        let r = p.roots().unwrap();
        assert_eq!(r.len(), 2);
        for z in r {
            // double root: perturbation ~ sqrt(eps) * 500
            assert!((z - c(-500.0, 0.0)).norm() < 1e-4, "{z}");
        }
    }

    #[test]
    fn plant_denominator_roots() {
        let (j, b) = (2.7354e-4, 2.903e-3);
        let r = Polynomial::new(vec![j, b, 0.0]).roots().unwrap();
        assert_eq!(r[1], c(0.0, 0.0));
        assert_relative_eq!(r[0].re, -b / j, max_relative = 1e-12);
        assert_relative_eq!(r[0].re, -10.6127, epsilon = 1e-4);
    }

    #[test]
    fn imaginary_pair() {
        let r = Polynomial::new(vec![1.0, 0.0, 1.0]).roots().unwrap();
        assert!((r[0] - c(0.0, -1.0)).norm() < 1e-12);
        assert!((r[1] - c(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn constant_has_no_roots() {
        assert_eq!(
            Polynomial::constant(3.0).roots(),
            Err(Error::ConstantPolynomial)
        );
    }

    #[test]
    fn arithmetic() {
        let a = Polynomial::new(vec![1.0, 1.0]);
        let b = Polynomial::new(vec![1.0, 2.0]);
        assert_eq!((&a * &b).coeffs(), &[1.0, 3.0, 2.0]);
        assert_eq!((&a + &b).coeffs(), &[2.0, 3.0]);
        assert!((&a - &a).is_zero());
        assert_eq!((&(&a * &b) - &a).coeffs(), &[1.0, 2.0, 1.0]);
        assert_eq!(
            Polynomial::new(vec![3.0, 2.0, 1.0]).derivative().coeffs(),
            &[6.0, 2.0]
        );
        assert_eq!(a.coeff(0), 1.0);
        assert_eq!(Polynomial::new(vec![5.0, 0.0, 0.0]).coeff(2), 5.0);
    }

    #[test]
    fn display() {
        let p = Polynomial::new(vec![1.0, -2.0, 0.0, 3.5]);
        assert_eq!(alloc::format!("{p}"), "1*s^3 - 2*s^2 + 3.5");
    }
}
