//! Model parameters, the reduced interaction potential `Π(q)` and the scalar
//! force balance that fixes the polygon radius.
//!
//! Positions `q` live in the inner variable (outer position divided by ε), so
//! two spikes interact through `(σ|qᵢ-qⱼ|)^{-1/2} e^{-σ|qᵢ-qⱼ|}` and feel the
//! precursor through `μ(ε qᵢ)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::cluster_geometry::{build_cluster, PolygonCluster};
use crate::error::{Error, Result};
use crate::ground_state::GroundStateConstants;
use crate::Point;

/// Radially symmetric precursor with `μ(0) = 1`, `μ'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Precursor {
    /// `1 + μ₂ r²/2`
    Quadratic { mu2: f64 },
}

impl Precursor {
    pub fn value(&self, r: f64) -> f64 {
        match *self {
            Precursor::Quadratic { mu2 } => 1.0 + 0.5 * mu2 * r * r,
        }
    }

    /// `μ(r) - 1`, without the cancellation.
    pub fn excess(&self, r: f64) -> f64 {
        match *self {
            Precursor::Quadratic { mu2 } => 0.5 * mu2 * r * r,
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match *self {
            Precursor::Quadratic { mu2 } => mu2 * r,
        }
    }

    pub fn second_at_origin(&self) -> f64 {
        match *self {
            Precursor::Quadratic { mu2 } => mu2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub epsilon: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub tau: f64,
    pub domain_radius: f64,
    pub precursor: Precursor,
}

impl ModelParams {
    pub fn new(epsilon: f64, d: f64, tau: f64, domain_radius: f64, mu2: f64) -> Result<Self> {
        let checks = [
            ("ModelParams::epsilon", epsilon, epsilon > 0.0),
            ("ModelParams::D", d, d > 0.0),
            ("ModelParams::tau", tau, tau >= 0.0),
            ("ModelParams::domain_radius", domain_radius, domain_radius > 0.0),
            ("ModelParams::mu2", mu2, mu2 > 0.0),
        ];
        for (what, value, ok) in checks {
            if !ok || !value.is_finite() {
                return Err(Error::DomainError { what, value });
            }
        }
        let p = Self {
            epsilon,
            d,
            tau,
            domain_radius,
            precursor: Precursor::Quadratic { mu2 },
        };
        for w in p.regime_warnings() {
            log::warn!("{w}");
        }
        Ok(p)
    }

    /// Parameters with `σ = ε/√D` held fixed.
    pub fn with_sigma(sigma: f64, d: f64, mu2: f64) -> Result<Self> {
        Self::new(sigma * d.sqrt(), d, 0.0, 1.0, mu2)
    }

    pub fn sigma(&self) -> f64 {
        self.epsilon / self.d.sqrt()
    }

    pub fn mu2(&self) -> f64 {
        self.precursor.second_at_origin()
    }

    pub fn mu(&self, r: f64) -> f64 {
        self.precursor.value(r)
    }

    /// Smallness conditions of the cluster regime; violations are reported,
    /// never fatal.
    pub fn regime_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.epsilon * self.epsilon / self.d;
        if ratio > 0.1 {
            out.push(format!("epsilon^2/D = {ratio:.3} exceeds 0.1"));
        }
        let log_term = self.d * (self.d.sqrt() / self.epsilon).ln();
        if log_term > 0.1 {
            out.push(format!("D log(sqrt(D)/epsilon) = {log_term:.3} exceeds 0.1"));
        }
        out
    }
}

/// Leading-order `ξ = 2π / (log(1/σ) ∫w²)`.
pub fn compute_xi(params: &ModelParams, int_w2: f64) -> Result<f64> {
    let sigma = params.sigma();
    if sigma >= 1.0 {
        return Err(Error::RegimeError(format!("sigma = {sigma} is not below 1")));
    }
    Ok(2.0 * PI / ((1.0 / sigma).ln() * int_w2))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedConstants {
    pub k: usize,
    pub xi: f64,
    pub c1: f64,
    pub c2: f64,
    /// `-c₂/c₁`, weight of the precursor in `Π`.
    pub c3_potential: f64,
    /// `c₂μ''(0)/(4c₁ sin²(π/k))`, the constant in the polygon force balance.
    pub c3_balance: f64,
}

impl ReducedConstants {
    pub fn new(k: usize, params: &ModelParams, gs: &GroundStateConstants) -> Result<Self> {
        if k < 2 {
            return Err(Error::InvalidK(k));
        }
        let xi = compute_xi(params, gs.int_w2)?;
        let s = (PI / k as f64).sin();
        Ok(Self {
            k,
            xi,
            c1: gs.c1,
            c2: gs.c2,
            c3_potential: -gs.c2 / gs.c1,
            c3_balance: gs.c2 * params.mu2() / (4.0 * gs.c1 * s * s),
        })
    }

    /// Constant of the centre-cluster balance, `|c₂|μ''(0)/c₁`.
    pub fn c3_centre(&self, params: &ModelParams) -> f64 {
        self.c2.abs() * params.mu2() / self.c1
    }
}

/// Interaction kernel `s^{-1/2} e^{-s}` and its first two derivatives.
pub fn kernel(s: f64) -> (f64, f64, f64) {
    let f = s.powf(-0.5) * (-s).exp();
    let inv = 1.0 / s;
    (
        f,
        -f * (1.0 + 0.5 * inv),
        f * (1.0 + inv + 0.75 * inv * inv),
    )
}

fn check_distinct(points: &[Point]) -> Result<()> {
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if (points[i] - points[j]).norm() == 0.0 {
                return Err(Error::CoincidentSpikes(i, j));
            }
        }
    }
    Ok(())
}

fn interaction_sum(points: &[Point], rc: &ReducedConstants, sigma: f64) -> f64 {
    let mut sum = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sum += kernel(sigma * (points[i] - points[j]).norm()).0;
        }
    }
    // ordered pairs i ≠ j
    2.0 * rc.xi * sum
}

pub fn potential_points(points: &[Point], rc: &ReducedConstants, params: &ModelParams) -> Result<f64> {
    check_distinct(points)?;
    let mu: f64 = points
        .iter()
        .map(|q| params.mu(params.epsilon * q.norm()))
        .sum();
    Ok(interaction_sum(points, rc, params.sigma()) + rc.c3_potential * mu)
}

/// `Π` minus the constant `c₃ k`; same derivatives, no cancellation when the
/// precursor contribution is tiny next to `μ(0) = 1`.
pub fn potential_excess(points: &[Point], rc: &ReducedConstants, params: &ModelParams) -> Result<f64> {
    check_distinct(points)?;
    let mu: f64 = points
        .iter()
        .map(|q| params.precursor.excess(params.epsilon * q.norm()))
        .sum();
    Ok(interaction_sum(points, rc, params.sigma()) + rc.c3_potential * mu)
}

pub fn potential(q: &PolygonCluster, rc: &ReducedConstants, params: &ModelParams) -> Result<f64> {
    potential_points(&q.positions, rc, params)
}

/// Cartesian gradient of `Π` with respect to each position.
pub fn potential_gradient(
    points: &[Point],
    rc: &ReducedConstants,
    params: &ModelParams,
) -> Result<Vec<Point>> {
    check_distinct(points)?;
    let sigma = params.sigma();
    let eps = params.epsilon;
    let mut grad = vec![Point::zeros(); points.len()];
    for i in 0..points.len() {
        for j in 0..points.len() {
            if i == j {
                continue;
            }
            let d = points[i] - points[j];
            let r = d.norm();
            let fp = kernel(sigma * r).1;
            grad[i] += d * (2.0 * rc.xi * sigma * fp / r);
        }
        let r = points[i].norm();
        if r > 0.0 {
            grad[i] += points[i] * (rc.c3_potential * eps * params.precursor.derivative(eps * r) / r);
        }
    }
    Ok(grad)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusSolution {
    /// Polygon radius in inner units (distance from origin to a vertex).
    pub radius: f64,
    /// Scaled argument of the balance equation at the root.
    pub x: f64,
    /// `|LHS| / |constant term|` at the root.
    pub residual: f64,
    /// Derivative of the balance left side with respect to the radius.
    pub nondegeneracy: f64,
}

// Solves ξ x^{-3/2} e^{-x} = c·D in log form, x > 3/2.
fn balance_root(xi: f64, c_times_d: f64, x_cap: f64) -> Result<(f64, f64)> {
    let g = |x: f64| xi.ln() - 1.5 * x.ln() - x - c_times_d.ln();
    let dg = |x: f64| -1.5 / x - 1.0;
    let mut lo = 1.5;
    if g(lo) <= 0.0 {
        return Err(Error::NoRoot(format!(
            "balance left side already negative at x = 3/2 (xi = {xi:.3e}, cD = {c_times_d:.3e})"
        )));
    }
    let mut hi = 2.0 * lo;
    while g(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > x_cap {
            return Err(Error::NoRoot(format!("no sign change below x = {x_cap:.3e}")));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        x -= g(x) / dg(x);
    }
    Ok((x, g(x).exp_m1().abs()))
}

/// Root of `ξ(2σR sin(π/k))^{-3/2} e^{-2σR sin(π/k)} + c3_balance·D = 0`.
pub fn equilibrium_radius(k: usize, params: &ModelParams, rc: &ReducedConstants) -> Result<RadiusSolution> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let sigma = params.sigma();
    let s = (PI / k as f64).sin();
    let scale = 2.0 * sigma * s;
    let (x, residual) = balance_root(rc.xi, rc.c3_balance.abs() * params.d, scale * 1e6 / sigma)?;
    let core = rc.xi * x.powf(-1.5) * (-x).exp();
    Ok(RadiusSolution {
        radius: x / scale,
        x,
        residual,
        nondegeneracy: -core * (1.0 + 1.5 / x) * scale,
    })
}

/// Centre-cluster balance `c₁ξσ x^{-1/2} e^{-x} + c₂ε²R̃μ''(0) = 0` with
/// `x = σR̃`; the returned radius is the centre-to-vertex distance.
pub fn equilibrium_radius_centre(
    k: usize,
    params: &ModelParams,
    rc: &ReducedConstants,
) -> Result<RadiusSolution> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let sigma = params.sigma();
    let c = rc.c3_centre(params);
    let (x, residual) = balance_root(rc.xi, c * params.d, 1e6)?;
    let eps2 = params.epsilon * params.epsilon;
    let lead = rc.c1 * rc.xi * sigma * x.powf(-0.5) * (-x).exp();
    let nondegeneracy = -lead * (1.0 + 0.5 / x) * sigma + rc.c2 * eps2 * params.mu2();
    Ok(RadiusSolution {
        radius: x / sigma,
        x,
        residual,
        nondegeneracy,
    })
}

fn log_expansion(d: f64, xi: f64, c: f64) -> Result<f64> {
    if !(d < (-1.0f64).exp()) || d <= 0.0 {
        return Err(Error::DomainError {
            what: "asymptotic radius requires 0 < D < 1/e",
            value: d,
        });
    }
    let l = (1.0 / d).ln();
    Ok(l - 1.5 * l.ln() + (xi / c).ln())
}

/// Two-term expansion of the balance root for small D.
pub fn asymptotic_radius(k: usize, params: &ModelParams, rc: &ReducedConstants) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    let x = log_expansion(params.d, rc.xi, rc.c3_balance.abs())?;
    Ok(x / (2.0 * params.sigma() * (PI / k as f64).sin()))
}

pub fn asymptotic_radius_centre(params: &ModelParams, rc: &ReducedConstants) -> Result<f64> {
    let x = log_expansion(params.d, rc.xi, rc.c3_centre(params))?;
    Ok(x / params.sigma())
}

/// `(lo, hi)` bounds on the radius allowed by the a-priori scaling with
/// constant `c_window`: `(1/C)(√D/ε)log(1/(D log(√D/ε)))` and `C` times it.
pub fn radius_window(params: &ModelParams, c_window: f64) -> Option<(f64, f64)> {
    let inv_sigma = 1.0 / params.sigma();
    let inner = params.d * inv_sigma.ln();
    if inner <= 0.0 || inner >= 1.0 {
        return None;
    }
    let base = inv_sigma * (1.0 / inner).ln();
    Some((base / c_window, base * c_window))
}

/// Outward derivative of `Π` at vertex 0 of the symmetric cluster of radius `r`.
pub fn radial_force(
    k: usize,
    with_centre: bool,
    r: f64,
    rc: &ReducedConstants,
    params: &ModelParams,
) -> Result<f64> {
    let c = build_cluster(k, r, 0.0, with_centre)?;
    let g = potential_gradient(&c.positions, rc, params)?;
    Ok(g[0].x)
}

/// Radius at which the symmetric cluster is an exact critical point of `Π`.
/// The balance root only matches it to leading order; `guess` seeds the
/// bracket search.
pub fn critical_radius(
    k: usize,
    with_centre: bool,
    guess: f64,
    rc: &ReducedConstants,
    params: &ModelParams,
) -> Result<f64> {
    let f = |r: f64| radial_force(k, with_centre, r, rc, params);
    let (mut lo, mut hi) = (0.5 * guess, 2.0 * guess);
    let mut tries = 0;
    while f(lo)? >= 0.0 {
        lo *= 0.5;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoRoot("radial force never negative".into()));
        }
    }
    while f(hi)? <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 120 {
            return Err(Error::NoRoot("radial force never positive".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
