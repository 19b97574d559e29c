//! `(α - βΔ)u = f` on a cell-centred grid with homogeneous Neumann boundary.
//!
//! The 5-point Laplacian with ghost-cell reflection is diagonalised by the
//! DCT-II in each direction, with symbols `-(4/h²) sin²(πk/2n)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustdct::{DctPlanner, TransformType2And3};

use crate::error::{Error, Result};

#[derive(Clone)]
pub struct NeumannSolver {
    nx: usize,
    ny: usize,
    dct_x: Arc<dyn TransformType2And3<f64>>,
    dct_y: Arc<dyn TransformType2And3<f64>>,
    symbol_x: Vec<f64>,
    symbol_y: Vec<f64>,
}

impl std::fmt::Debug for NeumannSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("NeumannSolver")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

fn symbols(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (PI * k as f64 / (2.0 * n as f64)).sin();
            -4.0 * s * s / (h * h)
        })
        .collect()
}

fn transpose(src: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = src[r * cols + c];
        }
    }
    out
}

#[cfg(feature = "parallel")]
fn for_rows(data: &mut [f64], len: usize, f: impl Fn(&mut [f64]) + Sync + Send) {
    use rayon::prelude::*;
    data.par_chunks_mut(len).for_each(f);
}

#[cfg(not(feature = "parallel"))]
fn for_rows(data: &mut [f64], len: usize, f: impl Fn(&mut [f64])) {
    data.chunks_mut(len).for_each(f);
}

impl NeumannSolver {
    pub fn new(nx: usize, ny: usize, h: f64) -> Self {
        let mut planner = DctPlanner::new();
        Self {
            nx,
            ny,
            dct_x: planner.plan_dct2(nx),
            dct_y: planner.plan_dct2(ny),
            symbol_x: symbols(nx, h),
            symbol_y: symbols(ny, h),
        }
    }

    /// Eigenvalue of the discrete Laplacian for mode `(kx, ky)`.
    pub fn symbol(&self, kx: usize, ky: usize) -> f64 {
        self.symbol_x[kx] + self.symbol_y[ky]
    }

    /// Solves `(α - βΔ)u = rhs` for row-major `rhs` (`ny` rows of `nx`).
    pub fn solve(&self, rhs: &[f64], alpha: f64, beta: f64) -> Result<Vec<f64>> {
        let (nx, ny) = (self.nx, self.ny);
        let mut buf = rhs.to_vec();
        let dx = &self.dct_x;
        let dy = &self.dct_y;
        for_rows(&mut buf, nx, |row| dx.process_dct2(row));
        let mut t = transpose(&buf, ny, nx);
        for_rows(&mut t, ny, |col| dy.process_dct2(col));
        // t is indexed [kx * ny + ky]
        for kx in 0..nx {
            for ky in 0..ny {
                let denom = alpha - beta * self.symbol(kx, ky);
                if denom == 0.0 || !denom.is_finite() {
                    return Err(Error::LinearSolveFailure(format!(
                        "singular mode ({kx}, {ky}) for alpha = {alpha}, beta = {beta}"
                    )));
                }
                t[kx * ny + ky] /= denom;
            }
        }
        for_rows(&mut t, ny, |col| dy.process_dct3(col));
        let mut out = transpose(&t, nx, ny);
        for_rows(&mut out, nx, |row| dx.process_dct3(row));
        // DCT-III after DCT-II multiplies by n/2 in each direction
        let scale = 4.0 / (nx * ny) as f64;
        out.iter_mut().for_each(|v| *v *= scale);
        Ok(out)
    }
}

/// 5-point Laplacian with ghost-cell reflection, applied directly.
pub fn laplacian(values: &[f64], nx: usize, ny: usize, h: f64) -> Vec<f64> {
    let at = |i: usize, j: usize| values[j * nx + i];
    let mut out = vec![0.0; values.len()];
    for j in 0..ny {
        for i in 0..nx {
            let c = at(i, j);
            let w = if i > 0 { at(i - 1, j) } else { c };
            let e = if i + 1 < nx { at(i + 1, j) } else { c };
            let s = if j > 0 { at(i, j - 1) } else { c };
            let n = if j + 1 < ny { at(i, j + 1) } else { c };
            out[j * nx + i] = (w + e + s + n - 4.0 * c) / (h * h);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_inverts_the_stencil() {
        let (nx, ny, h) = (12, 9, 0.3);
        let u: Vec<f64> = (0..nx * ny).map(|i| ((i * 37) % 11) as f64 - 3.0).collect();
        let lap = laplacian(&u, nx, ny, h);
        let (alpha, beta) = (1.5, 0.7);
        let rhs: Vec<f64> = u.iter().zip(&lap).map(|(u, l)| alpha * u - beta * l).collect();
        let back = NeumannSolver::new(nx, ny, h).solve(&rhs, alpha, beta).unwrap();
        for (a, b) in u.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12, "{a} {b}");
        }
    }

    #[test]
    fn pure_neumann_laplacian_is_singular() {
        let s = NeumannSolver::new(4, 4, 1.0);
        assert!(matches!(
            s.solve(&[1.0; 16], 0.0, 1.0),
            Err(Error::LinearSolveFailure(_))
        ));
    }

    #[test]
    fn constants_are_in_the_kernel() {
        let lap = laplacian(&[2.5; 30], 6, 5, 0.1);
        assert!(lap.iter().all(|v| v.abs() < 1e-12));
    }
}
