//! Radial ground state of `Δw - w + w² = 0` on the plane.
//!
//! The profile is found by shooting on `w(0)`: heights that are too large
//! cross zero, heights that are too small turn back up before decaying.
//! Bisection pins `w(0)` to round-off; the forward trajectory is then only
//! trusted up to the radius where the two bracketing trajectories start to
//! separate. Beyond that point the decaying branch is integrated backwards
//! from `r_max` (where the decaying mode is the stable direction) and matched
//! in value to the forward piece.

use std::f64::consts::PI;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{bessel_k0, bessel_k1};

/// Sampled ground state on a uniform grid `r_i = i·h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub r_grid: Vec<f64>,
    pub w_values: Vec<f64>,
    pub w_derivs: Vec<f64>,
    pub w0: f64,
    pub residual_sup: f64,
    /// Radius where the forward shooting branch hands over to the
    /// backward-integrated tail.
    pub splice_radius: f64,
    /// `C` in the far-field model `C r^{-1/2} e^{-r}`, fitted on the last
    /// tenth of the grid.
    pub tail_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStateConstants {
    pub w0: f64,
    /// `∫ w²` over the plane.
    pub int_w2: f64,
    /// `∫ w³` over the plane.
    pub int_w3: f64,
    /// `(1/3) ∫w² ∫w³`.
    pub c1: f64,
    /// `∫ w (∂w/∂r) x₁²/r`, with `x₁` the first Cartesian coordinate.
    /// Integration by parts gives `c2 = -½ ∫w²`.
    pub c2: f64,
}

pub const MIN_R_MAX: f64 = 15.0;
pub const MIN_POINTS: usize = 2000;

const BRACKET: (f64, f64) = (1.0, 4.0);
// Relative separation of the bracketing trajectories at which the forward
// branch is abandoned.
const SPLIT_TOL: f64 = 1e-10;
// Never carry the forward branch below this fraction of w(0).
const SPLICE_FLOOR: f64 = 1e-4;

type State = [f64; 2];

fn rhs(r: f64, y: State) -> State {
    [y[1], -y[1] / r + y[0] - y[0] * y[0]]
}

fn rk4_step(r: f64, y: State, h: f64) -> State {
    let k1 = rhs(r, y);
    let k2 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = rhs(r + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = rhs(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Power series about the origin, `w = a + b r² + c r⁴` with
/// `4b = a - a²` and `16c = b(1 - 2a)`.
fn series_start(w0: f64, r: f64) -> State {
    let b = 0.25 * (w0 - w0 * w0);
    let c = b * (1.0 - 2.0 * w0) / 16.0;
    let r2 = r * r;
    [w0 + b * r2 + c * r2 * r2, 2.0 * b * r + 4.0 * c * r2 * r]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shot {
    /// Crossed zero: initial height too large.
    Overshoot,
    /// Turned back up while positive: initial height too small.
    Undershoot,
    /// Reached the end of the grid exactly on the decaying branch.
    Decayed,
}

struct Trajectory {
    states: Vec<State>,
    outcome: Shot,
}

fn shoot(w0: f64, h: f64, n: usize) -> Trajectory {
    let mut states = Vec::with_capacity(n);
    states.push([w0, 0.0]);
    let mut y = series_start(w0, h);
    states.push(y);
    for i in 1..n - 1 {
        let r = i as f64 * h;
        y = rk4_step(r, y, h);
        if y[0] <= 0.0 {
            return Trajectory {
                states,
                outcome: Shot::Overshoot,
            };
        }
        if y[1] >= 0.0 {
            return Trajectory {
                states,
                outcome: Shot::Undershoot,
            };
        }
        states.push(y);
    }
    // Still positive and decreasing: the sign of the growing component
    // w' + w·K₁/K₀ tells which way the trajectory would eventually leave.
    let r_end = (n - 1) as f64 * h;
    let ratio = match (bessel_k0(r_end), bessel_k1(r_end)) {
        (Ok(k0), Ok(k1)) if k0 > 0.0 => k1 / k0,
        _ => 1.0,
    };
    let growing = y[1] + y[0] * ratio;
    let outcome = if growing > 0.0 {
        Shot::Undershoot
    } else if growing < 0.0 {
        Shot::Overshoot
    } else {
        Shot::Decayed
    };
    Trajectory { states, outcome }
}

pub fn solve_ground_state(r_max: f64, n: usize, tol: f64) -> Result<RadialProfile> {
    if !(r_max >= MIN_R_MAX) {
        return Err(Error::DomainError {
            what: "solve_ground_state::r_max",
            value: r_max,
        });
    }
    if n < MIN_POINTS {
        return Err(Error::DomainError {
            what: "solve_ground_state::n",
            value: n as f64,
        });
    }
    if !(tol > 0.0) {
        return Err(Error::DomainError {
            what: "solve_ground_state::tol",
            value: tol,
        });
    }
    let h = r_max / (n - 1) as f64;

    let (mut lo, mut hi) = BRACKET;
    if shoot(lo, h, n).outcome != Shot::Undershoot || shoot(hi, h, n).outcome != Shot::Overshoot {
        return Err(Error::NonConvergence(format!(
            "initial heights {lo} and {hi} do not bracket the ground state"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(mid, h, n).outcome {
            Shot::Overshoot => hi = mid,
            Shot::Undershoot => lo = mid,
            Shot::Decayed => {
                lo = mid;
                hi = mid;
                break;
            }
        }
    }
    let w0 = 0.5 * (lo + hi);
    let lower = shoot(lo, h, n);
    let upper = shoot(hi, h, n);

    // Forward branch: trust nodes while both bracketing trajectories agree.
    let common = lower.states.len().min(upper.states.len());
    let mut splice = common - 1;
    for i in 1..common {
        let (a, b) = (lower.states[i][0], upper.states[i][0]);
        let mid = 0.5 * (a + b);
        if (a - b).abs() > SPLIT_TOL * mid || mid < SPLICE_FLOOR * w0 {
            splice = i;
            break;
        }
    }
    if splice < n / 4 {
        return Err(Error::NonConvergence(format!(
            "bracketing trajectories separate at r = {:.3}",
            splice as f64 * h
        )));
    }

    let mut w = vec![0.0; n];
    let mut dw = vec![0.0; n];
    for i in 0..=splice {
        w[i] = 0.5 * (lower.states[i][0] + upper.states[i][0]);
        dw[i] = 0.5 * (lower.states[i][1] + upper.states[i][1]);
    }
    dw[0] = 0.0;

    if splice < n - 1 {
        backward_tail(&mut w, &mut dw, splice, h)?;
    }

    let r_grid: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let residual_sup = residual_sup(&r_grid, &w, &dw);
    if residual_sup > tol {
        return Err(Error::NonConvergence(format!(
            "ODE residual {residual_sup:.3e} exceeds tolerance {tol:.3e}"
        )));
    }
    let tail_constant = fit_tail(&r_grid, &w);

    Ok(RadialProfile {
        r_grid,
        w_values: w,
        w_derivs: dw,
        w0,
        residual_sup,
        splice_radius: splice as f64 * h,
        tail_constant,
    })
}

// The inward integration starts at least this far beyond the splice, so the
// growing component picked up from the K₀ start has decayed by e^{-2·12}.
const TAIL_RUNWAY: f64 = 12.0;

/// Fills nodes `splice..n` with the decaying branch, integrated inwards from
/// `max(r_max, r_splice + 12)` and scaled so that it meets the forward value
/// at `splice`.
fn backward_tail(w: &mut [f64], dw: &mut [f64], splice: usize, h: f64) -> Result<()> {
    let n = w.len();
    let extra = ((splice as f64 * h + TAIL_RUNWAY - (n - 1) as f64 * h) / h).ceil().max(0.0) as usize;
    let last = n - 1 + extra;
    let r_end = last as f64 * h;
    let target = w[splice];
    let k0_end = bessel_k0(r_end)?;
    let k1_end = bessel_k1(r_end)?;
    let mut scale = target / bessel_k0(splice as f64 * h)?;

    let integrate = |scale: f64, w: &mut [f64], dw: &mut [f64]| {
        let mut y = [scale * k0_end, -scale * k1_end];
        if last == n - 1 {
            w[n - 1] = y[0];
            dw[n - 1] = y[1];
        }
        for i in (splice..last).rev() {
            let r = (i + 1) as f64 * h;
            y = rk4_step(r, y, -h);
            if i < n {
                w[i] = y[0];
                dw[i] = y[1];
            }
        }
    };

    let forward_slope = dw[splice];
    for _ in 0..20 {
        integrate(scale, w, dw);
        let ratio = target / w[splice];
        scale *= ratio;
        if (ratio - 1.0).abs() < 1e-15 {
            break;
        }
    }
    integrate(scale, w, dw);
    let mismatch = (dw[splice] - forward_slope).abs();
    log::debug!(
        "ground state splice at r = {:.3}: value {target:.3e}, slope mismatch {mismatch:.3e}",
        splice as f64 * h
    );
    Ok(())
}

/// `sup |w'' + w'/r - w + w²|` over interior nodes, with `w''` taken as the
/// fourth-order central difference of the integrator's `w'` samples.
fn residual_sup(r: &[f64], w: &[f64], dw: &[f64]) -> f64 {
    let n = r.len();
    let h = r[1] - r[0];
    // w' is odd in r: dw(-r) = -dw(r)
    let slope = |j: isize| -> f64 {
        if j < 0 {
            -dw[(-j) as usize]
        } else {
            dw[j as usize]
        }
    };
    let mut sup: f64 = 0.0;
    for i in 1..n - 2 {
        let j = i as isize;
        let second = (-slope(j + 2) + 8.0 * slope(j + 1) - 8.0 * slope(j - 1) + slope(j - 2))
            / (12.0 * h);
        let res = second + dw[i] / r[i] - w[i] + w[i] * w[i];
        sup = sup.max(res.abs());
    }
    sup
}

fn fit_tail(r: &[f64], w: &[f64]) -> f64 {
    let n = r.len();
    let start = n - n / 10;
    let logs: Vec<f64> = (start..n)
        .map(|i| (w[i] * r[i].sqrt() * r[i].exp()).ln())
        .collect();
    (logs.iter().sum::<f64>() / logs.len() as f64).exp()
}

impl RadialProfile {
    pub fn r_max(&self) -> f64 {
        *self.r_grid.last().expect("non-empty grid")
    }

    pub fn step(&self) -> f64 {
        self.r_grid[1] - self.r_grid[0]
    }

    pub fn len(&self) -> usize {
        self.r_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_grid.is_empty()
    }

    /// `w(r)`: monotone cubic Hermite interpolation on the grid, far-field
    /// model `C r^{-1/2} e^{-r}` beyond `r_max`.
    pub fn evaluate_w(&self, r: f64) -> f64 {
        let r = r.abs();
        let r_max = self.r_max();
        if r > r_max {
            return self.tail_constant * r.powf(-0.5) * (-r).exp();
        }
        let i = self.r_grid.partition_point(|&x| x <= r).saturating_sub(1);
        if self.r_grid[i] == r {
            return self.w_values[i];
        }
        let i = i.min(self.len() - 2);
        let (x0, x1) = (self.r_grid[i], self.r_grid[i + 1]);
        let (y0, y1) = (self.w_values[i], self.w_values[i + 1]);
        let dx = x1 - x0;
        let (m0, m1) = limited_slopes(y0, y1, self.w_derivs[i], self.w_derivs[i + 1], dx);
        let t = (r - x0) / dx;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * dx * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * dx * m1
    }

    /// `w'(r)` consistent with [`evaluate_w`](Self::evaluate_w).
    pub fn evaluate_dw(&self, r: f64) -> f64 {
        let sign = if r < 0.0 { -1.0 } else { 1.0 };
        let r = r.abs();
        if r > self.r_max() {
            let w = self.tail_constant * r.powf(-0.5) * (-r).exp();
            return -sign * w * (1.0 + 0.5 / r);
        }
        let i = self
            .r_grid
            .partition_point(|&x| x <= r)
            .saturating_sub(1)
            .min(self.len() - 2);
        let (x0, x1) = (self.r_grid[i], self.r_grid[i + 1]);
        let (y0, y1) = (self.w_values[i], self.w_values[i + 1]);
        let dx = x1 - x0;
        let (m0, m1) = limited_slopes(y0, y1, self.w_derivs[i], self.w_derivs[i + 1], dx);
        let t = (r - x0) / dx;
        let t2 = t * t;
        let d = (6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * dx * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * dx * m1;
        sign * d / dx
    }

    /// `r, w, w_prime` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "r,w,w_prime")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{:e},{:e}",
                self.r_grid[i], self.w_values[i], self.w_derivs[i]
            )?;
        }
        Ok(())
    }
}

// Fritsch–Carlson limiter on the supplied node slopes.
fn limited_slopes(y0: f64, y1: f64, m0: f64, m1: f64, dx: f64) -> (f64, f64) {
    let secant = (y1 - y0) / dx;
    if secant == 0.0 {
        return (0.0, 0.0);
    }
    let (mut m0, mut m1) = (m0, m1);
    if m0 * secant < 0.0 {
        m0 = 0.0;
    }
    if m1 * secant < 0.0 {
        m1 = 0.0;
    }
    let (a, b) = (m0 / secant, m1 / secant);
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        m0 = tau * a * secant;
        m1 = tau * b * secant;
    }
    (m0, m1)
}

pub fn evaluate_w(profile: &RadialProfile, r: f64) -> f64 {
    profile.evaluate_w(r)
}

/// Composite Simpson weights on a uniform grid; a trailing odd interval is
/// closed with the 3/8 rule.
pub(crate) fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 4);
    let mut wts = vec![0.0; n];
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { n - 1 } else { n - 4 };
    let mut i = 0;
    while i + 2 <= simpson_end {
        wts[i] += h / 3.0;
        wts[i + 1] += 4.0 * h / 3.0;
        wts[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end != n - 1 {
        let s = simpson_end;
        wts[s] += 3.0 * h / 8.0;
        wts[s + 1] += 9.0 * h / 8.0;
        wts[s + 2] += 9.0 * h / 8.0;
        wts[s + 3] += 3.0 * h / 8.0;
    }
    wts
}

fn constants_on(r: &[f64], w: &[f64], dw: &[f64], tail: f64, w0: f64) -> GroundStateConstants {
    let h = r[1] - r[0];
    let weights = simpson_weights(r.len(), h);
    let mut s2 = 0.0;
    let mut s3 = 0.0;
    let mut sc = 0.0;
    for i in 0..r.len() {
        let ww = w[i] * w[i];
        s2 += weights[i] * ww * r[i];
        s3 += weights[i] * ww * w[i] * r[i];
        sc += weights[i] * w[i] * dw[i] * r[i] * r[i];
    }
    // exterior contributions of C r^{-1/2} e^{-r}
    let rm = *r.last().unwrap();
    let e2 = (-2.0 * rm).exp();
    s2 += tail * tail * e2 / 2.0;
    s3 += tail.powi(3) * rm.powf(-0.5) * (-3.0 * rm).exp() / 3.0;
    sc += -tail * tail * (0.5 * rm + 0.5) * e2;

    let int_w2 = 2.0 * PI * s2;
    let int_w3 = 2.0 * PI * s3;
    GroundStateConstants {
        w0,
        int_w2,
        int_w3,
        c1: int_w2 * int_w3 / 3.0,
        // angular integral of cos²θ contributes π
        c2: PI * sc,
    }
}

pub fn integrals(profile: &RadialProfile) -> GroundStateConstants {
    constants_on(
        &profile.r_grid,
        &profile.w_values,
        &profile.w_derivs,
        profile.tail_constant,
        profile.w0,
    )
}

/// Same quadrature using every `stride`-th node (Richardson-style check).
pub fn integrals_strided(profile: &RadialProfile, stride: usize) -> GroundStateConstants {
    let pick = |v: &[f64]| v.iter().step_by(stride).cloned().collect::<Vec<_>>();
    let r = pick(&profile.r_grid);
    let w = pick(&profile.w_values);
    let dw = pick(&profile.w_derivs);
    constants_on(&r, &w, &dw, profile.tail_constant, profile.w0)
}

impl GroundStateConstants {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "w0": self.w0,
            "int_w2": self.int_w2,
            "int_w3": self.int_w3,
            "c1": self.c1,
            "c2": self.c2,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::OnceLock;

    fn profile() -> &'static RadialProfile {
        static P: OnceLock<RadialProfile> = OnceLock::new();
        P.get_or_init(|| solve_ground_state(20.0, 4000, 1e-8).unwrap())
    }

    #[test]
    fn residual_within_tolerance() {
        let p = profile();
        assert!(p.residual_sup <= 1e-8, "{}", p.residual_sup);
        assert_eq!(p.w_derivs[0], 0.0);
    }

    #[test]
    fn positive_and_strictly_decreasing() {
        let p = profile();
        for i in 0..p.len() - 1 {
            assert!(p.w_values[i] > 0.0);
            assert!(p.w_values[i + 1] < p.w_values[i], "i = {i}");
        }
        assert!(*p.w_values.last().unwrap() < 1e-8 * p.w0);
    }

    #[test]
    fn exponential_decay_rate() {
        let p = profile();
        let idx: Vec<usize> = (0..p.len()).filter(|&i| p.r_grid[i] >= 10.0).step_by(97).collect();
        for (a, &i) in idx.iter().enumerate() {
            for &j in &idx[a + 1..] {
                let bound = (-0.9 * (p.r_grid[j] - p.r_grid[i])).exp();
                assert!(p.w_values[j] / p.w_values[i] <= bound);
            }
        }
    }

    #[test]
    fn tail_matches_decay_form() {
        let p = profile();
        let ratios: Vec<f64> = (0..=50)
            .map(|i| {
                let r = 10.0 + 0.1 * i as f64;
                p.evaluate_w(r) / (r.powf(-0.5) * (-r).exp())
            })
            .collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!(min > 0.0);
        // 1/(8r) correction to the Bessel tail drifts by ~0.4% over [10, 15]
        assert!((max - min) / max < 0.01, "{min} {max}");
    }

    #[test]
    fn evaluate_w_hits_nodes_and_is_monotone() {
        let p = profile();
        assert_eq!(p.evaluate_w(0.0), p.w0);
        for i in (0..p.len()).step_by(37) {
            assert_eq!(p.evaluate_w(p.r_grid[i]), p.w_values[i]);
        }
        assert_eq!(p.evaluate_w(p.r_max()), *p.w_values.last().unwrap());
        let mut last = f64::INFINITY;
        for i in 0..=3000 {
            let v = p.evaluate_w(p.r_max() * i as f64 / 3000.0 + 1e-7);
            assert!(v < last);
            last = v;
        }
        assert!(p.evaluate_w(25.0) < p.evaluate_w(p.r_max()));
    }

    #[test]
    fn derivative_interpolation_consistent() {
        let p = profile();
        for &r in &[0.37, 1.234, 4.5, 9.99] {
            let h = 1e-5;
            let fd = (p.evaluate_w(r + h) - p.evaluate_w(r - h)) / (2.0 * h);
            assert!((fd - p.evaluate_dw(r)).abs() < 1e-7);
        }
    }

    #[test]
    fn c2_integration_by_parts_identity() {
        let c = integrals(profile());
        assert!((c.c2 / c.int_w2 + 0.5).abs() < 1e-6, "{}", c.c2 / c.int_w2);
        assert!(c.int_w2 > 0.0 && c.int_w3 > 0.0 && c.c1 > 0.0 && c.c2 < 0.0);
        assert!(c.w0 > 1.0);
    }

    #[test]
    fn quadrature_stable_under_coarsening() {
        let p = profile();
        let fine = integrals(p);
        let coarse = integrals_strided(p, 2);
        assert!(((fine.int_w2 - coarse.int_w2) / fine.int_w2).abs() < 1e-5);
        assert!(((fine.int_w3 - coarse.int_w3) / fine.int_w3).abs() < 1e-5);
    }

    #[test]
    fn simpson_weights_integrate_cubics() {
        for n in [5usize, 6, 7, 10] {
            let h = 0.1;
            let wts = simpson_weights(n, h);
            let exact = ((n - 1) as f64 * h).powi(4) / 4.0;
            let got: f64 = (0..n).map(|i| wts[i] * (i as f64 * h).powi(3)).sum();
            assert!((got - exact).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn preconditions_enforced() {
        assert!(solve_ground_state(10.0, 4000, 1e-8).is_err());
        assert!(solve_ground_state(20.0, 100, 1e-8).is_err());
        assert!(solve_ground_state(20.0, 4000, 0.0).is_err());
    }

    #[test]
    fn csv_and_json_exports() {
        let p = profile();
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), p.len() + 1);
        let json = integrals(p).to_json();
        for key in ["w0", "int_w2", "int_w3", "c1", "c2"] {
            assert!(json.get(key).is_some());
        }
    }
}
