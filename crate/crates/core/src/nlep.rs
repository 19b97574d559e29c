//! Radial discretisation of the linearised operator
//! `L φ = φ'' + φ'/r - (m²/r² + 1)φ + 2wφ` and of its nonlocal perturbation
//! `L φ - γ (∫wφ / ∫w²) w²`.
//!
//! The grid is cell-centred, `r_i = (i - ½)h`, so the origin is never a node
//! and the flux form `(r φ')'/r` needs no special row there. Scaling by `√r`
//! makes the local operator a symmetric tridiagonal matrix `T`; the nonlocal
//! term is then the rank-one update `-γ a bᵀ`. Eigenvalues of `T - γabᵀ` off
//! the spectrum of `T` are the roots of `1 = γ bᵀ(T - λ)⁻¹a`, which gives a
//! cheap O(n) refinement route next to the dense eigensolve.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ground_state::RadialProfile;

/// Relative change of the leading eigenvalue between `r_max` and
/// `1.25 r_max` above which the domain is declared too short.
pub const BOUNDARY_SENSITIVITY: f64 = 1e-4;

/// Top of the essential spectrum of the operator on the whole plane.
pub const CONTINUUM_EDGE: f64 = -1.0;

// Relative Newton step at which a secular root is accepted.
const SECULAR_TOL: f64 = 1e-11;

// Dense eigenvalues below this are not refined.
const CANDIDATE_FLOOR: f64 = -3.0;

#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub mode: usize,
    pub gamma: f64,
    pub h: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

impl RadialOperator {
    /// Samples `profile` on `n` cells covering `[0, r_max]`. Radii beyond the
    /// profile grid use its fitted tail.
    pub fn new(profile: &RadialProfile, mode: usize, gamma: f64, n: usize, r_max: f64) -> Result<Self> {
        if n < 16 {
            return Err(Error::GridError(format!("{n} cells is too few")));
        }
        if !(r_max > 0.0) || !(gamma >= 0.0) {
            return Err(Error::DomainError {
                what: "RadialOperator::new",
                value: if r_max > 0.0 { gamma } else { r_max },
            });
        }
        let h = r_max / n as f64;
        let r: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * h).collect();
        let w = r.iter().map(|&x| profile.evaluate_w(x)).collect();
        Ok(Self { mode, gamma, h, r, w })
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            ..self.clone()
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn r_max(&self) -> f64 {
        self.h * self.len() as f64
    }

    /// Diagonal and off-diagonal of the symmetrised local operator.
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let h2 = self.h * self.h;
        let m2 = (self.mode * self.mode) as f64;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n - 1];
        for i in 0..n {
            let ri = self.r[i];
            let face_out = ri + 0.5 * self.h;
            let face_in = ri - 0.5 * self.h;
            diag[i] = -(face_out + face_in) / (ri * h2) - m2 / (ri * ri) - 1.0 + 2.0 * self.w[i];
            if i + 1 < n {
                off[i] = face_out / (h2 * (ri * self.r[i + 1]).sqrt());
            }
        }
        (diag, off)
    }

    /// Rank-one factors with `T - γ a bᵀ` the symmetrised nonlocal operator.
    pub fn rank_one(&self) -> (Vec<f64>, Vec<f64>) {
        let norm: f64 = self.r.iter().zip(&self.w).map(|(r, w)| r * w * w).sum();
        let a = self.r.iter().zip(&self.w).map(|(r, w)| r.sqrt() * w * w).collect();
        let b = self.r.iter().zip(&self.w).map(|(r, w)| r.sqrt() * w / norm).collect();
        (a, b)
    }

    /// Applies the (unsymmetrised) nonlocal operator to grid values `phi`.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let n = self.len();
        let h2 = self.h * self.h;
        let m2 = (self.mode * self.mode) as f64;
        let num: f64 = (0..n).map(|i| self.r[i] * self.w[i] * phi[i]).sum();
        let den: f64 = (0..n).map(|i| self.r[i] * self.w[i] * self.w[i]).sum();
        let ratio = if self.gamma == 0.0 { 0.0 } else { num / den };
        (0..n)
            .map(|i| {
                let ri = self.r[i];
                let up = if i + 1 < n { phi[i + 1] } else { 0.0 };
                let down = if i > 0 { phi[i - 1] } else { 0.0 };
                let flux = (ri + 0.5 * self.h) * (up - phi[i]) - (ri - 0.5 * self.h) * (phi[i] - down);
                flux / (ri * h2) - (m2 / (ri * ri) + 1.0) * phi[i] + 2.0 * self.w[i] * phi[i]
                    - self.gamma * ratio * self.w[i] * self.w[i]
            })
            .collect()
    }

    /// `∫ f g` over the plane for radial grid functions (midpoint rule).
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        2.0 * std::f64::consts::PI
            * self.h
            * (0..self.len()).map(|i| self.r[i] * f[i] * g[i]).sum::<f64>()
    }
}

// Number of eigenvalues of the symmetric tridiagonal (diag, off) below x.
fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for i in 1..diag.len() {
        let denom = if q == 0.0 { f64::EPSILON * off[i - 1].abs().max(1e-300) } else { q };
        q = diag[i] - x - off[i - 1] * off[i - 1] / denom;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `count` largest eigenvalues of a symmetric tridiagonal matrix,
/// descending, by Sturm bisection.
pub fn top_eigenvalues(diag: &[f64], off: &[f64], count: usize) -> Vec<f64> {
    let n = diag.len();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let rad = if i > 0 { off[i - 1].abs() } else { 0.0 } + if i + 1 < n { off[i].abs() } else { 0.0 };
        lo = lo.min(diag[i] - rad);
        hi = hi.max(diag[i] + rad);
    }
    (0..count.min(n))
        .map(|j| {
            // eigenvalue with exactly n - 1 - j others below it
            let target = n - 1 - j;
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if sturm_count(diag, off, mid) > target {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            0.5 * (a + b)
        })
        .collect()
}

/// Solves `(T - λ) x = rhs` for tridiagonal `T` by Gaussian elimination with
/// partial pivoting.
pub fn tridiagonal_solve(
    diag: &[f64],
    off: &[f64],
    lambda: Complex64,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    // rows: sub (l), main (d), super (u), second super (u2) after pivoting
    let mut d: Vec<Complex64> = diag.iter().map(|&x| Complex64::new(x, 0.0) - lambda).collect();
    let mut u: Vec<Complex64> = off.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    u.push(Complex64::new(0.0, 0.0));
    let mut u2 = vec![Complex64::new(0.0, 0.0); n];
    let mut x = rhs.to_vec();
    for i in 0..n - 1 {
        let sub = Complex64::new(off[i], 0.0);
        if sub.norm() > d[i].norm() {
            // swap rows i and i+1
            let (di1, ui1) = (d[i + 1], u[i + 1]);
            let (old_d, old_u) = (d[i], u[i]);
            d[i] = sub;
            u[i] = di1;
            u2[i] = ui1;
            x.swap(i, i + 1);
            let m = old_d / sub;
            d[i + 1] = old_u - m * di1;
            u[i + 1] = -m * ui1;
            let xi = x[i];
            x[i + 1] -= m * xi;
        } else {
            if d[i].norm() == 0.0 {
                return Err(Error::LinearSolveFailure(format!("zero pivot in row {i}")));
            }
            let m = sub / d[i];
            d[i + 1] -= m * u[i];
            let xi = x[i];
            x[i + 1] -= m * xi;
        }
    }
    if d[n - 1].norm() == 0.0 {
        return Err(Error::LinearSolveFailure("singular tridiagonal system".into()));
    }
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - u[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - u[i] * x[i + 1] - u2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

fn to_complex(v: &[f64]) -> Vec<Complex64> {
    v.iter().map(|&x| Complex64::new(x, 0.0)).collect()
}

/// Eigenvector of the symmetric tridiagonal matrix for eigenvalue `lambda`.
fn inverse_iteration(diag: &[f64], off: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let n = diag.len();
    let shift = Complex64::new(lambda + 1e-10 * lambda.abs().max(1.0), 0.0);
    let mut v: Vec<Complex64> = (0..n)
        .map(|i| Complex64::new(1.0 + 0.01 * ((i * 7919) % 13) as f64, 0.0))
        .collect();
    for _ in 0..4 {
        v = tridiagonal_solve(diag, off, shift, &v)?;
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
    }
    Ok(v.iter().map(|z| z.re).collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalSpectrum {
    pub mode: usize,
    /// Largest eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Eigenfunctions on the cell centres (unsymmetrised), unit `r`-weighted norm.
    #[serde(skip)]
    pub eigenfunctions: Vec<Vec<f64>>,
    /// Relative change of the top eigenvalue when the domain grows by 25%.
    pub boundary_sensitivity: f64,
}

fn local_top(op: &RadialOperator, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let (diag, off) = op.tridiagonal();
    let values = top_eigenvalues(&diag, &off, count);
    let mut funcs = Vec::with_capacity(values.len());
    for &lam in &values {
        let y = inverse_iteration(&diag, &off, lam)?;
        let mut phi: Vec<f64> = y.iter().zip(&op.r).map(|(y, r)| y / r.sqrt()).collect();
        let norm = op.inner(&phi, &phi).sqrt();
        phi.iter_mut().for_each(|p| *p /= norm);
        funcs.push(phi);
    }
    Ok((values, funcs))
}

fn extended(op: &RadialOperator, profile: &RadialProfile) -> Result<RadialOperator> {
    let n = (op.len() as f64 * 1.25).round() as usize;
    RadialOperator::new(profile, op.mode, op.gamma, n, n as f64 * op.h)
}

fn check_boundary(top: f64, top_ext: f64) -> Result<f64> {
    if top <= CONTINUUM_EDGE && top_ext <= CONTINUUM_EDGE {
        // both are box modes of the continuum
        return Ok(0.0);
    }
    let sens = (top - top_ext).abs() / top.abs().max(1.0);
    if sens > BOUNDARY_SENSITIVITY {
        return Err(Error::GridError(format!(
            "top eigenvalue moves by {sens:.3e} when the domain grows by 25%"
        )));
    }
    Ok(sens)
}

/// Top three eigenvalues of the local operator (`γ` is ignored).
pub fn local_spectrum(op: &RadialOperator, profile: &RadialProfile) -> Result<LocalSpectrum> {
    let (eigenvalues, eigenfunctions) = local_top(op, 3)?;
    let (ext, _) = local_top(&extended(op, profile)?, 1)?;
    let boundary_sensitivity = check_boundary(eigenvalues[0], ext[0])?;
    Ok(LocalSpectrum {
        mode: op.mode,
        eigenvalues,
        eigenfunctions,
        boundary_sensitivity,
    })
}

/// `|⟨φ, ψ⟩| / (‖φ‖‖ψ‖)` in the planar inner product.
pub fn correlation(op: &RadialOperator, phi: &[f64], psi: &[f64]) -> f64 {
    op.inner(phi, psi).abs() / (op.inner(phi, phi) * op.inner(psi, psi)).sqrt()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NlepSpectrum {
    pub mode: usize,
    pub gamma: f64,
    /// Discrete eigenvalues (stable under domain extension), descending real
    /// part, as `[re, im]`.
    pub eigenvalues: Vec<[f64; 2]>,
    /// Top of the essential spectrum, `-1`.
    pub continuum_edge: f64,
    /// Largest real part over the discrete eigenvalues and the continuum edge.
    pub max_real: f64,
    /// `‖(T - γabᵀ)x - λx‖/‖x‖` for the leading discrete eigenpair.
    pub leading_residual: f64,
    pub boundary_sensitivity: f64,
}

/// All eigenvalues of the dense matrix `T - γabᵀ`, descending real part.
pub fn dense_nlep_eigenvalues(op: &RadialOperator) -> Result<Vec<Complex64>> {
    let (diag, off) = op.tridiagonal();
    let (a, b) = op.rank_one();
    let n = op.len();
    let g = op.gamma;
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| {
        let t = if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        };
        t - g * a[i] * b[j]
    });
    let eig = m
        .eigenvalues()
        .map_err(|e| Error::NonConvergence(format!("dense eigensolve: {e:?}")))?;
    let mut out: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    sort_desc_real(&mut out);
    Ok(out)
}

fn sort_desc_real(v: &mut [Complex64]) {
    v.sort_by(|x, y| y.re.total_cmp(&x.re).then(y.im.total_cmp(&x.im)));
}

/// Newton refinement of a root of `1 - γ bᵀ(T - λ)⁻¹a`, starting at `guess`.
pub fn secular_refine(op: &RadialOperator, gamma: f64, guess: Complex64) -> Result<Complex64> {
    let (diag, off) = op.tridiagonal();
    let (a, b) = op.rank_one();
    let a = to_complex(&a);
    let mut lam = guess;
    for it in 0..60 {
        let u = tridiagonal_solve(&diag, &off, lam, &a)?;
        let v = tridiagonal_solve(&diag, &off, lam, &u)?;
        let bu: Complex64 = b.iter().zip(&u).map(|(b, u)| u * b).sum();
        let bv: Complex64 = b.iter().zip(&v).map(|(b, v)| v * b).sum();
        let g = Complex64::new(1.0, 0.0) - bu * gamma;
        let dg = -bv * gamma;
        if dg.norm() == 0.0 {
            break;
        }
        let step = g / dg;
        lam -= step;
        if step.norm() <= SECULAR_TOL * lam.norm().max(1.0) {
            return Ok(lam);
        }
        if it == 59 {
            return Err(Error::NonConvergence(format!(
                "secular Newton stalled near {lam} (step {:.3e})",
                step.norm()
            )));
        }
    }
    Ok(lam)
}

/// Eigenvector of `T - γabᵀ` for eigenvalue `lam`, via Sherman–Morrison on
/// `(T - λ)⁻¹a`; returned in the symmetrised variables together with the
/// relative residual.
pub fn nlep_eigenvector(op: &RadialOperator, lam: Complex64) -> Result<(Vec<Complex64>, f64)> {
    let (diag, off) = op.tridiagonal();
    let (a, b) = op.rank_one();
    let x = tridiagonal_solve(&diag, &off, lam, &to_complex(&a))?;
    let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let x: Vec<Complex64> = x.iter().map(|z| z / norm).collect();
    let n = op.len();
    let bx: Complex64 = b.iter().zip(&x).map(|(b, x)| x * b).sum();
    let mut res = 0.0;
    for i in 0..n {
        let mut t = x[i] * diag[i];
        if i > 0 {
            t += x[i - 1] * off[i - 1];
        }
        if i + 1 < n {
            t += x[i + 1] * off[i];
        }
        let r = t - bx * (op.gamma * a[i]) - x[i] * lam;
        res += r.norm_sqr();
    }
    Ok((x, res.sqrt()))
}

/// Spectrum of the nonlocal problem. For `m ≥ 1` (or `γ = 0`) the nonlocal
/// term drops out and the local spectrum is returned.
///
/// Dense eigenvalues above `CANDIDATE_FLOOR` are refined on the given domain
/// and on one 25% longer; those that move are box modes of the continuum and
/// are dropped. A candidate above the continuum edge that moves is a
/// [`Error::GridError`].
pub fn nlep_spectrum(op: &RadialOperator, profile: &RadialProfile) -> Result<NlepSpectrum> {
    if op.mode != 0 || op.gamma == 0.0 {
        let local = local_spectrum(op, profile)?;
        let discrete: Vec<[f64; 2]> = local
            .eigenvalues
            .iter()
            .filter(|&&x| x > CONTINUUM_EDGE)
            .map(|&x| [x, 0.0])
            .collect();
        return Ok(NlepSpectrum {
            mode: op.mode,
            gamma: op.gamma,
            max_real: local.eigenvalues[0].max(CONTINUUM_EDGE),
            eigenvalues: discrete,
            continuum_edge: CONTINUUM_EDGE,
            leading_residual: 0.0,
            boundary_sensitivity: local.boundary_sensitivity,
        });
    }
    let all = dense_nlep_eigenvalues(op)?;
    let ext = extended(op, profile)?;
    let mut discrete = Vec::new();
    let mut boundary_sensitivity: f64 = 0.0;
    for &guess in all.iter().filter(|z| z.re > CANDIDATE_FLOOR && z.im >= 0.0) {
        let Ok(lam) = secular_refine(op, op.gamma, guess) else {
            continue;
        };
        let moved = match secular_refine(&ext, op.gamma, lam) {
            Ok(l) => (l - lam).norm() / lam.norm().max(1.0),
            Err(_) => f64::INFINITY,
        };
        if moved <= BOUNDARY_SENSITIVITY {
            boundary_sensitivity = boundary_sensitivity.max(moved);
            if !discrete.iter().any(|d: &Complex64| (d - lam).norm() < 1e-8) {
                discrete.push(lam);
            }
        } else if lam.re > CONTINUUM_EDGE {
            return Err(Error::GridError(format!(
                "eigenvalue {lam} moves by {moved:.3e} when the domain grows by 25%"
            )));
        }
    }
    // conjugates of complex eigenvalues
    let conj: Vec<Complex64> = discrete.iter().filter(|z| z.im > 1e-10).map(|z| z.conj()).collect();
    discrete.extend(conj);
    sort_desc_real(&mut discrete);
    let leading_residual = match discrete.first() {
        Some(&l) => nlep_eigenvector(op, l)?.1,
        None => 0.0,
    };
    let top = discrete.first().map_or(f64::NEG_INFINITY, |z| z.re);
    Ok(NlepSpectrum {
        mode: 0,
        gamma: op.gamma,
        eigenvalues: discrete.iter().map(|z| [z.re, z.im]).collect(),
        continuum_edge: CONTINUUM_EDGE,
        max_real: top.max(CONTINUUM_EDGE),
        leading_residual,
        boundary_sensitivity,
    })
}

/// Leading NLEP eigenvalue on a grid twice as fine, refined from `guess`.
pub fn refined_leading(profile: &RadialProfile, op: &RadialOperator, guess: Complex64) -> Result<Complex64> {
    let fine = RadialOperator::new(profile, op.mode, op.gamma, 2 * op.len(), op.r_max())?;
    secular_refine(&fine, op.gamma, guess)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TauScanEntry {
    pub tau: f64,
    /// Converged eigenvalue `[re, im]` (last iterate if not converged).
    pub lambda: [f64; 2],
    pub max_real: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: Option<String>,
}

const TAU_MAX_ITER: usize = 80;
// Newton steps are capped at this fraction of max(1, |λ|).
const TAU_STEP_CAP: f64 = 0.5;

/// `G(λ) = 1 + τλ - 2 bᵀ(T - λ)⁻¹a` and `G'(λ)`. A root is an eigenvalue of
/// the nonlocal operator with multiplier `2/(1 + τλ)` evaluated at itself,
/// i.e. a fixed point of eigensolve → update λ, written without the pole at
/// `λ = -1/τ`.
fn tau_secular(op: &RadialOperator, tau: f64, lam: Complex64) -> Result<(Complex64, Complex64)> {
    let (diag, off) = op.tridiagonal();
    let (a, b) = op.rank_one();
    let u = tridiagonal_solve(&diag, &off, lam, &to_complex(&a))?;
    let v = tridiagonal_solve(&diag, &off, lam, &u)?;
    let s: Complex64 = b.iter().zip(&u).map(|(b, u)| u * b).sum();
    let ds: Complex64 = b.iter().zip(&v).map(|(b, v)| v * b).sum();
    Ok((Complex64::new(1.0, 0.0) + lam * tau - s * 2.0, Complex64::new(tau, 0.0) - ds * 2.0))
}

/// Damped Newton on [`tau_secular`]; returns the root and iteration count.
fn tau_root(op: &RadialOperator, tau: f64, guess: Complex64) -> Result<(Complex64, usize)> {
    let mut lam = guess;
    for it in 1..=TAU_MAX_ITER {
        let (g, dg) = tau_secular(op, tau, lam)?;
        if dg.norm() == 0.0 || !g.is_finite() {
            break;
        }
        let mut step = g / dg;
        let cap = TAU_STEP_CAP * lam.norm().max(1.0);
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        lam -= step;
        if step.norm() <= SECULAR_TOL * lam.norm().max(1.0) {
            return Ok((lam, it));
        }
    }
    Err(Error::NonConvergence(format!("tau = {tau}: Newton stalled near {lam}")))
}

/// Scans `τ` for the nonlocal problem with multiplier `2/(1 + τλ)`.
///
/// Two branches are followed. One is continued in `τ` from the leading
/// discrete eigenvalue at `τ = 0` (or from `lambda_guess` if no discrete
/// eigenvalue exists). The other is seeded at each `τ` just below the top
/// local eigenvalue, which it approaches as the multiplier vanishes. The
/// entry reports the branch with the larger real part; roots at or below the
/// continuum edge from the second seed are ignored.
pub fn nlep_tau_scan(
    profile: &RadialProfile,
    op: &RadialOperator,
    tau_values: &[f64],
    lambda_guess: Complex64,
) -> Result<Vec<TauScanEntry>> {
    let op = op.with_gamma(2.0);
    let base = nlep_spectrum(&op, profile)?;
    let base_lambda = base
        .eigenvalues
        .iter()
        .find(|z| z[1] >= 0.0)
        .map_or(lambda_guess, |z| Complex64::new(z[0], z[1]));
    let local = local_top(&op, 1)?.0[0];
    if let Some(&bad) = tau_values.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::DomainError {
            what: "nlep_tau_scan::tau",
            value: bad,
        });
    }
    let mut order: Vec<usize> = (0..tau_values.len()).collect();
    order.sort_by(|&i, &j| tau_values[i].total_cmp(&tau_values[j]));

    let mut out: Vec<Option<TauScanEntry>> = vec![None; tau_values.len()];
    let mut branch = Some(base_lambda);
    let mut tau_at = 0.0;
    for idx in order {
        let tau = tau_values[idx];
        if tau == 0.0 {
            out[idx] = Some(TauScanEntry {
                tau,
                lambda: [base_lambda.re, base_lambda.im],
                max_real: base_lambda.re,
                iterations: 0,
                converged: true,
                note: None,
            });
            continue;
        }
        let mut note = None;
        let mut iterations = 0;
        // continue the first branch through geometric substeps
        if let Some(mut lam) = branch {
            let mut t = tau_at;
            while t < tau {
                let next = if t == 0.0 { tau.min(0.01) } else { (t * 1.25).max(t + 0.01).min(tau) };
                match tau_root(&op, next, lam) {
                    Ok((l, its)) => {
                        lam = l;
                        iterations += its;
                        t = next;
                    }
                    Err(e) => {
                        note = Some(e.to_string());
                        break;
                    }
                }
            }
            if note.is_none() {
                branch = Some(lam);
                tau_at = tau;
            } else {
                branch = None;
            }
        }
        let seeded = tau_root(&op, tau, Complex64::new(local - 1e-3, 0.0))
            .ok()
            .filter(|(l, _)| l.re > CONTINUUM_EDGE);
        let best = match (branch.filter(|_| tau_at == tau), seeded) {
            (Some(a), Some((b, its))) => {
                iterations += its;
                Some(if b.re > a.re { b } else { a })
            }
            (Some(a), None) => Some(a),
            (None, Some((b, its))) => {
                iterations += its;
                Some(b)
            }
            (None, None) => None,
        };
        let entry = match best {
            Some(l) => TauScanEntry {
                tau,
                lambda: [l.re, l.im],
                max_real: l.re,
                iterations,
                converged: true,
                note,
            },
            None => {
                let n = note.unwrap_or_else(|| format!("tau = {tau}: no root found"));
                log::warn!("{n}");
                TauScanEntry {
                    tau,
                    lambda: [f64::NAN, f64::NAN],
                    max_real: f64::NAN,
                    iterations,
                    converged: false,
                    note: Some(n),
                }
            }
        };
        out[idx] = Some(entry);
    }
    Ok(out.into_iter().map(|e| e.expect("every tau visited")).collect())
}

/// Smallest scanned `τ` at which `max_real` has turned non-negative, if any.
pub fn tau_crossing(scan: &[TauScanEntry]) -> Option<f64> {
    let mut sorted: Vec<&TauScanEntry> = scan.iter().filter(|e| e.converged).collect();
    sorted.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    sorted.iter().find(|e| e.max_real >= 0.0).map(|e| e.tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground_state::solve_ground_state;
    use std::sync::OnceLock;

    fn profile() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| solve_ground_state(20.0, 4000, 1e-8).unwrap())
    }

    fn op(mode: usize, gamma: f64, n: usize) -> RadialOperator {
        RadialOperator::new(profile(), mode, gamma, n, 20.0).unwrap()
    }

    #[test]
    fn sturm_bisection_on_known_matrix() {
        // second-difference matrix: eigenvalues -2 + 2cos(jπ/(n+1))
        let n = 50;
        let diag = vec![-2.0; n];
        let off = vec![1.0; n - 1];
        let top = top_eigenvalues(&diag, &off, 3);
        for (j, v) in top.iter().enumerate() {
            let exact = -2.0 + 2.0 * ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn tridiagonal_solver_with_pivoting() {
        let diag = [0.0, 1.0, 4.0, -1.0];
        let off = [2.0, 3.0, 0.5];
        let lam = Complex64::new(0.3, 0.2);
        let x_true: Vec<Complex64> = (0..4).map(|i| Complex64::new(i as f64 + 1.0, -(i as f64))).collect();
        let mut rhs = vec![Complex64::new(0.0, 0.0); 4];
        for i in 0..4 {
            rhs[i] = x_true[i] * (diag[i] - lam);
            if i > 0 {
                rhs[i] += x_true[i - 1] * off[i - 1];
            }
            if i < 3 {
                rhs[i] += x_true[i + 1] * off[i];
            }
        }
        let x = tridiagonal_solve(&diag, &off, lam, &rhs).unwrap();
        for i in 0..4 {
            assert!((x[i] - x_true[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn local_mode_zero_has_positive_top_and_negative_second() {
        let s = local_spectrum(&op(0, 0.0, 2000), profile()).unwrap();
        assert!(s.eigenvalues[0] > 0.0);
        assert!(s.eigenvalues[1] < 0.0);
    }

    #[test]
    fn local_mode_one_zero_eigenvalue_is_translation() {
        let o = op(1, 0.0, 2000);
        let s = local_spectrum(&o, profile()).unwrap();
        assert!(s.eigenvalues[0].abs() <= 1e-3, "{}", s.eigenvalues[0]);
        let dw: Vec<f64> = o.r.iter().map(|&r| profile().evaluate_dw(r)).collect();
        assert!(correlation(&o, &s.eigenfunctions[0], &dw) >= 0.999);
    }

    #[test]
    fn zero_multiplier_reduces_to_local() {
        let o = op(0, 0.0, 2000);
        let n = nlep_spectrum(&o, profile()).unwrap();
        let l = local_spectrum(&o, profile()).unwrap();
        assert_eq!(n.max_real, l.eigenvalues[0]);
    }

    #[test]
    fn operator_apply_matches_matrix() {
        let o = op(0, 2.0, 300);
        let (diag, off) = o.tridiagonal();
        let (a, b) = o.rank_one();
        let phi: Vec<f64> = o.r.iter().map(|r| (-r).exp() * (1.0 + r.sin())).collect();
        let y: Vec<f64> = phi.iter().zip(&o.r).map(|(p, r)| p * r.sqrt()).collect();
        let by: f64 = b.iter().zip(&y).map(|(b, y)| b * y).sum();
        let applied = o.apply(&phi);
        for i in 0..o.len() {
            let mut t = diag[i] * y[i] - 2.0 * a[i] * by;
            if i > 0 {
                t += off[i - 1] * y[i - 1];
            }
            if i + 1 < o.len() {
                t += off[i] * y[i + 1];
            }
            assert!((t / o.r[i].sqrt() - applied[i]).abs() < 1e-9 * (1.0 + applied[i].abs()));
        }
    }

    #[test]
    fn w_is_not_an_nlep_eigenfunction() {
        let o = op(0, 2.0, 2000);
        let out = o.apply(&o.w);
        let nw = o.inner(&o.w, &o.w).sqrt();
        // remove the best multiple of w
        let c = o.inner(&out, &o.w) / (nw * nw);
        let rest: Vec<f64> = out.iter().zip(&o.w).map(|(x, w)| x - c * w).collect();
        assert!(o.inner(&rest, &rest).sqrt() > 0.1 * nw);
    }

    #[test]
    fn tau_scan_continuity_and_large_tau_limit() {
        let o = op(0, 2.0, 400);
        let scan = nlep_tau_scan(profile(), &o, &[0.05, 0.0, 1e3], Complex64::new(0.0, 0.0)).unwrap();
        assert_eq!(scan[1].tau, 0.0);
        assert!(scan[0].converged && scan[2].converged);
        assert!((scan[0].max_real - scan[1].max_real).abs() <= 0.5);
        let local = local_spectrum(&op(0, 0.0, 400), profile()).unwrap().eigenvalues[0];
        assert!(scan[2].max_real > 0.0);
        assert!((scan[2].max_real - local).abs() < 0.01, "{} vs {local}", scan[2].max_real);
    }

    #[test]
    fn tau_zero_reproduces_nlep() {
        let o = op(0, 2.0, 400);
        let scan = nlep_tau_scan(profile(), &o, &[0.0], Complex64::new(0.0, 0.0)).unwrap();
        let direct = nlep_spectrum(&o, profile()).unwrap();
        assert_eq!(scan[0].lambda, direct.eigenvalues[0]);
    }
}
