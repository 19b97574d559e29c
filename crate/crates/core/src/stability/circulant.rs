//! Circulant matrices and their discrete Fourier diagonalisation.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CirculantSpec {
    pub first_row: Vec<Complex64>,
}

impl CirculantSpec {
    pub fn real(row: &[f64]) -> Self {
        Self {
            first_row: row.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.first_row.len()
    }

    /// Row `n` is the first row cyclically shifted right `n` times.
    pub fn matrix(&self) -> DMatrix<Complex64> {
        let k = self.k();
        DMatrix::from_fn(k, k, |n, m| self.first_row[(m + k - n) % k])
    }
}

#[derive(Debug, Clone)]
pub struct CirculantEigenpair {
    pub l: usize,
    pub value: Complex64,
    /// Normalised Fourier vector `X_l`.
    pub vector: DVector<Complex64>,
    /// `‖B X_l - λ_l X_l‖`.
    pub residual: f64,
}

pub(crate) fn root_of_unity(k: usize, power: usize) -> Complex64 {
    let t = 2.0 * PI * ((power % k) as f64) / k as f64;
    Complex64::new(t.cos(), t.sin())
}

/// `X_l = k^{-1/2}(1, ε^l, …, ε^{(k-1)l})` with `ε = e^{2πi/k}`.
pub fn fourier_vector(k: usize, l: usize) -> DVector<Complex64> {
    let norm = 1.0 / (k as f64).sqrt();
    DVector::from_fn(k, |j, _| root_of_unity(k, j * l) * norm)
}

/// `P_k` with entries `ε^{mn}`.
pub fn fourier_matrix(k: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(k, k, |m, n| root_of_unity(k, m * n))
}

/// `P_k^{-1} = conj(P_k)/k`.
pub fn fourier_matrix_inverse(k: usize) -> DMatrix<Complex64> {
    fourier_matrix(k).map(|z| z.conj() / k as f64)
}

pub fn circulant_eigs(spec: &CirculantSpec) -> Result<Vec<CirculantEigenpair>> {
    let k = spec.k();
    if k == 0 {
        return Err(Error::InvalidK(0));
    }
    let b = spec.matrix();
    let out = (0..k)
        .map(|l| {
            let value: Complex64 = spec
                .first_row
                .iter()
                .enumerate()
                .map(|(j, &bj)| bj * root_of_unity(k, j * l))
                .sum();
            let vector = fourier_vector(k, l);
            let residual = (&b * &vector - &vector * value).norm();
            CirculantEigenpair {
                l,
                value,
                vector,
                residual,
            }
        })
        .collect();
    Ok(out)
}

/// `circ(-2, 1, 0, …, 0, 1)`
pub fn build_a1(k: usize) -> Result<DMatrix<f64>> {
    if k < 3 {
        return Err(Error::InvalidK(k));
    }
    let mut row = vec![0.0; k];
    row[0] = -2.0;
    row[1] = 1.0;
    row[k - 1] = 1.0;
    Ok(real_circulant(&row))
}

/// `circ(0, 1, 0, …, 0, -1)`
pub fn build_a2(k: usize) -> Result<DMatrix<f64>> {
    if k < 3 {
        return Err(Error::InvalidK(k));
    }
    let mut row = vec![0.0; k];
    row[1] = 1.0;
    row[k - 1] = -1.0;
    Ok(real_circulant(&row))
}

pub fn a1_spec(k: usize) -> Result<CirculantSpec> {
    let a = build_a1(k)?;
    Ok(CirculantSpec::real(a.row(0).iter().cloned().collect::<Vec<_>>().as_slice()))
}

pub fn a2_spec(k: usize) -> Result<CirculantSpec> {
    let a = build_a2(k)?;
    Ok(CirculantSpec::real(a.row(0).iter().cloned().collect::<Vec<_>>().as_slice()))
}

fn real_circulant(row: &[f64]) -> DMatrix<f64> {
    let k = row.len();
    DMatrix::from_fn(k, k, |n, m| row[(m + k - n) % k])
}
