//! Hermitian covariance matrices and the factorizations used on them.

use std::cmp::Ordering;

use log::warn;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

use crate::array::{ComplexMatrix, ComplexVector};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;
const JITTER: f64 = 1e-12;

/// Square complex matrix that is Hermitian up to roundoff.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix(ComplexMatrix);

impl HermitianMatrix {
    /// Checks the Hermitian property (relative to the largest entry) and
    /// symmetrizes away the residual.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidParameter(format!(
                "covariance must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
        let asym = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if asym > HERMITIAN_TOL * scale {
            return Err(Error::NotHermitian(asym / scale));
        }
        Ok(Self::symmetrized(m))
    }

    /// `(M + M^H)/2`, for matrices Hermitian by construction.
    pub fn symmetrized(m: ComplexMatrix) -> Self {
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        Self(h)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn scaled_identity(dim: usize, s: f64) -> Self {
        Self(DMatrix::identity(dim, dim) * Complex64::new(s, 0.0))
    }

    /// `Σ p_k u_k u_k^H`.
    pub fn from_outer_products<'a>(
        dim: usize,
        terms: impl IntoIterator<Item = (&'a ComplexVector, f64)>,
    ) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        for (u, p) in terms {
            m.ger(Complex64::new(p, 0.0), u, &u.conjugate(), Complex64::new(1.0, 0.0));
        }
        Self::symmetrized(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(&self.0 * Complex64::new(s, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self(&self.0 + &other.0)
    }

    /// Adds `p · u u^H` in place.
    pub fn add_outer(&mut self, u: &ComplexVector, p: f64) {
        self.0
            .ger(Complex64::new(p, 0.0), u, &u.conjugate(), Complex64::new(1.0, 0.0));
    }

    /// Cholesky factor; on failure retries once with a `1e-12·trace/W`
    /// diagonal load.
    fn cholesky(&self) -> Result<Cholesky<Complex64, Dyn>> {
        if let Some(c) = Cholesky::new(self.0.clone()) {
            return Ok(c);
        }
        let dim = self.dim();
        let load = JITTER * self.trace().abs() / dim.max(1) as f64;
        if load > 0.0 && load.is_finite() {
            warn!("covariance not positive definite, adding diagonal load {load:.3e}");
            let loaded = &self.0 + DMatrix::identity(dim, dim) * Complex64::new(load, 0.0);
            if let Some(c) = Cholesky::new(loaded) {
                return Ok(c);
            }
        }
        Err(Error::Singular(format!("{dim}x{dim} Cholesky failed")))
    }

    /// Solves `R x = b` for positive-definite `R`.
    pub fn solve(&self, b: &ComplexVector) -> Result<ComplexVector> {
        if b.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                actual: b.len(),
            });
        }
        Ok(self.cholesky()?.solve(b))
    }

    /// `R^{-1}` for positive-definite `R`.
    pub fn inverse(&self) -> Result<Self> {
        Ok(Self::symmetrized(self.cholesky()?.inverse()))
    }

    /// `u^H R^{-1} u`.
    pub fn inverse_quadratic_form(&self, u: &ComplexVector) -> Result<f64> {
        let x = self.solve(u)?;
        Ok(u.dotc(&x).re)
    }

    /// `u^H R u`.
    pub fn quadratic_form(&self, u: &ComplexVector) -> f64 {
        u.dotc(&(&self.0 * u)).re
    }

    /// `ln det R` for positive-definite `R`.
    pub fn ln_det(&self) -> Result<f64> {
        let c = self.cholesky()?;
        Ok(c.l_dirty()
            .diagonal()
            .iter()
            .map(|z| 2.0 * z.re.ln())
            .sum())
    }

    /// Eigenpairs sorted by descending eigenvalue. Each eigenvector is rotated
    /// so its largest-magnitude entry is real and positive; equal eigenvalues
    /// are ordered by the index of that entry.
    pub fn eigen_descending(&self) -> Result<(Vec<f64>, Vec<ComplexVector>)> {
        if self.0.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Eigen("non-finite entries".into()));
        }
        let eig = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Eigen("QR iteration did not converge".into()))?;
        let mut pairs: Vec<(f64, usize, ComplexVector)> = (0..self.dim())
            .map(|i| {
                let mut v: ComplexVector = eig.eigenvectors.column(i).into_owned();
                let (imax, pivot) = v
                    .iter()
                    .enumerate()
                    .fold((0, Complex64::new(0.0, 0.0)), |best, (j, z)| {
                        if z.norm() > best.1.norm() * (1.0 + 1e-12) {
                            (j, *z)
                        } else {
                            best
                        }
                    });
                if pivot.norm() > 0.0 {
                    let rot = pivot.conj() / pivot.norm();
                    v *= rot;
                }
                (eig.eigenvalues[i], imax, v)
            })
            .collect();
        pairs.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(Ordering::Equal)
                .then(a.1.cmp(&b.1))
        });
        let values = pairs.iter().map(|p| p.0).collect();
        let vectors = pairs.into_iter().map(|p| p.2).collect();
        Ok((values, vectors))
    }

    /// True if every eigenvalue is at least `-tol·λ_max`.
    pub fn is_psd(&self, tol: f64) -> bool {
        match self.eigen_descending() {
            Ok((vals, _)) => {
                let top = vals.first().copied().unwrap_or(0.0).max(0.0);
                vals.iter().all(|&l| l >= -tol * top.max(f64::MIN_POSITIVE))
            }
            Err(_) => false,
        }
    }
}

pub fn real_vector(xs: &[f64]) -> DVector<Complex64> {
    DVector::from_iterator(xs.len(), xs.iter().map(|&x| Complex64::new(x, 0.0)))
}
