//! Small single-input single-output state-space realizations.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;

use super::poly::Polynomial;
use super::tf::RationalTF;
use crate::error::{Error, Result};

/// `ẋ = A x + B u`, `y = C x + D u`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSISO {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: RowDVector<f64>,
    pub d: f64,
}

impl StateSpaceSISO {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, c: RowDVector<f64>, d: f64) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n || b.len() != n || c.len() != n {
            return Err(Error::InvalidArgument(format!(
                "inconsistent state-space dimensions: A {}x{}, B {}, C {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                c.len()
            )));
        }
        Ok(Self { a, b, c, d })
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    /// Controllable canonical form of a proper transfer function.
    pub fn controllable_canonical(g: &RationalTF) -> Result<Self> {
        if !g.is_proper() {
            return Err(Error::Improper {
                num: g.num().degree(),
                den: g.den().degree(),
            });
        }
        let n = g.den().degree();
        if n == 0 {
            return Err(Error::InvalidArgument(
                "static gain has no state-space realization of order >= 1".into(),
            ));
        }
        let lead = g.den().leading();
        // monic denominator a_i and numerator b_i, coefficient of s^i
        let a: Vec<f64> = (0..n).map(|i| g.den().coeff(i) / lead).collect();
        let bn: Vec<f64> = (0..=n).map(|i| g.num().coeff(i) / lead).collect();
        let d = bn[n];
        let mut am = DMatrix::<f64>::zeros(n, n);
        for i in 0..n - 1 {
            am[(i, i + 1)] = 1.0;
        }
        for j in 0..n {
            am[(n - 1, j)] = -a[j];
        }
        let mut bv = DVector::<f64>::zeros(n);
        bv[n - 1] = 1.0;
        let cv = RowDVector::<f64>::from_iterator(n, (0..n).map(|i| bn[i] - d * a[i]));
        Self::new(am, bv, cv, d)
    }

    /// Characteristic polynomial `det(sI - A)` by Leverrier-Faddeev.
    pub fn characteristic_polynomial(&self) -> Polynomial {
        self.faddeev().0
    }

    /// Returns `det(sI - A)` and the adjugate coefficient matrices `N_k`
    /// with `adj(sI - A) = Σ s^{n-1-k} N_k`.
    fn faddeev(&self) -> (Polynomial, Vec<DMatrix<f64>>) {
        let n = self.order();
        let id = DMatrix::<f64>::identity(n, n);
        let mut coeffs = Vec::with_capacity(n + 1);
        coeffs.push(1.0);
        let mut adj = Vec::with_capacity(n);
        let mut nk = id.clone();
        for k in 1..=n {
            adj.push(nk.clone());
            let an = &self.a * &nk;
            let ck = -an.trace() / k as f64;
            coeffs.push(ck);
            nk = an + &id * ck;
        }
        (Polynomial::new(coeffs), adj)
    }

    /// Exact conversion `C (sI - A)^{-1} B + D`.
    pub fn to_tf(&self) -> RationalTF {
        let (den, adj) = self.faddeev();
        let n = self.order();
        let mut num = Vec::with_capacity(n + 1);
        num.push(0.0);
        for nk in &adj {
            num.push((&self.c * nk * &self.b)[(0, 0)]);
        }
        let num = &Polynomial::new(num) + &den.scale(self.d);
        RationalTF::new(num, den).expect("characteristic polynomial is monic")
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.a.complex_eigenvalues().iter().copied().collect()
    }
}

pub fn ss_to_tf(m: &StateSpaceSISO) -> RationalTF {
    m.to_tf()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use approx::assert_relative_eq;
    use nalgebra::{dmatrix, dvector, RowDVector};

    #[test]
    fn first_order_lag() {
        let a = 7.0;
        let m = StateSpaceSISO::new(
            dmatrix![-a],
            dvector![a],
            RowDVector::from_vec(vec![1.0]),
            0.0,
        )
        .unwrap();
        let g = m.to_tf();
        assert_eq!(g.num().coeffs(), &[a]);
        assert_eq!(g.den().coeffs(), &[1.0, a]);
    }

    #[test]
    fn double_integrator_with_damping() {
        // K_m enters through B = [0, K_m/J]; A, C fixed. The resolvent gives
        // (K_m/J) / (s^2 + (b/J) s), i.e. K_m / (J s^2 + b s) after scaling by J.
        let (km, j, b) = (0.6017, 2.7354e-4, 2.903e-3);
        let m = StateSpaceSISO::new(
            dmatrix![0.0, 1.0; 0.0, -b / j],
            dvector![0.0, km / j],
            RowDVector::from_vec(vec![1.0, 0.0]),
            0.0,
        )
        .unwrap();
        let g = m.to_tf();
        assert_eq!(g.num().degree(), 0);
        assert_relative_eq!(g.num().coeff(0), km / j, max_relative = 1e-14);
        assert_relative_eq!(g.den().coeff(1), b / j, max_relative = 1e-14);
        assert_eq!(g.den().coeff(0), 0.0);
        assert_eq!(g.den().coeff(2), 1.0);
    }

    #[test]
    fn canonical_round_trip_biproper() {
        let g = RationalTF::from_coeffs(&[3.0, 2.0, 1.0], &[2.0, 5.0, 4.0]).unwrap();
        let m = StateSpaceSISO::controllable_canonical(&g).unwrap();
        assert_relative_eq!(m.d, 1.5);
        let h = m.to_tf();
        for w in [0.1, 1.0, 10.0, 300.0] {
            let a = g.freq_response(w).unwrap();
            let b = h.freq_response(w).unwrap();
            assert!((a - b).norm() <= 1e-12 * a.norm());
        }
    }

    #[test]
    fn bad_dimensions_rejected() {
        let r = StateSpaceSISO::new(
            dmatrix![0.0, 1.0; 0.0, 0.0],
            dvector![1.0],
            RowDVector::from_vec(vec![1.0, 0.0]),
            0.0,
        );
        assert!(r.is_err());
    }
}
