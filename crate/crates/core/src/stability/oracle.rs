//! Finite-difference Hessian of `Π` at the computed equilibrium.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use super::centre::sorted_eigenvalues;
use super::matrices::hessian_scale;
use crate::cluster_geometry::{build_cluster, PolygonCluster};
use crate::error::{Error, Result};
use crate::reduced_problem::{
    critical_radius, equilibrium_radius, equilibrium_radius_centre, potential_excess, ModelParams,
    ReducedConstants,
};
use crate::Point;

/// Sign threshold on the scaled Hessian eigenvalues.
pub const ORACLE_TOL: f64 = 1e-6;
const MAX_ASYMMETRY: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub k: usize,
    pub with_centre: bool,
    /// Root of the leading-order balance equation.
    pub balance_radius: f64,
    /// Radius at which the symmetric cluster is an exact critical point of `Π`.
    pub critical_radius: f64,
    /// Divisor applied to the Hessian before classification.
    pub scale: f64,
    /// Scaled eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// -1, 0 or +1 per eigenvalue at tolerance [`ORACLE_TOL`].
    pub signs: Vec<i8>,
    pub negative: usize,
    pub near_zero: usize,
    pub asymmetry: f64,
    /// `‖HS - SH‖ / ‖H‖` for the cyclic shift `S`.
    pub shift_commutator: f64,
}

/// Hessian of `Π` in the local frames of `cluster`, unscaled. Component `j`
/// is radial for spike `j`, component `n + j` tangential (Cartesian x, y for
/// a centre spike).
pub fn local_hessian(
    cluster: &PolygonCluster,
    rc: &ReducedConstants,
    params: &ModelParams,
    h: f64,
) -> Result<DMatrix<f64>> {
    let n = cluster.len();
    let dirs: Vec<(usize, Point)> = (0..2 * n)
        .map(|a| {
            let j = a % n;
            let f = cluster.frame(j);
            (j, if a < n { f.radial } else { f.tangential })
        })
        .collect();
    let base = &cluster.positions;
    let eval = |moves: &[(usize, f64)]| -> Result<f64> {
        let mut pts = base.clone();
        for &(a, t) in moves {
            let (j, d) = dirs[a];
            pts[j] += d * t;
        }
        potential_excess(&pts, rc, params)
    };
    let centre = eval(&[])?;
    let mut hess = DMatrix::zeros(2 * n, 2 * n);
    for a in 0..2 * n {
        hess[(a, a)] = (eval(&[(a, h)])? - 2.0 * centre + eval(&[(a, -h)])?) / (h * h);
        for b in 0..a {
            let v = (eval(&[(a, h), (b, h)])? - eval(&[(a, h), (b, -h)])?
                - eval(&[(a, -h), (b, h)])?
                + eval(&[(a, -h), (b, -h)])?)
                / (4.0 * h * h);
            hess[(a, b)] = v;
            hess[(b, a)] = v;
        }
    }
    Ok(hess)
}

/// Cyclic shift of the vertices in local coordinates; a centre spike is
/// rotated by `2π/k` in its Cartesian frame.
fn shift_operator(k: usize, with_centre: bool) -> DMatrix<f64> {
    let n = if with_centre { k + 1 } else { k };
    let mut s = DMatrix::zeros(2 * n, 2 * n);
    for j in 0..k {
        s[((j + 1) % k, j)] = 1.0;
        s[(n + (j + 1) % k, n + j)] = 1.0;
    }
    if with_centre {
        let (sn, cs) = (2.0 * PI / k as f64).sin_cos();
        let rot = Matrix2::new(cs, -sn, sn, cs);
        let idx = [k, n + k];
        for a in 0..2 {
            for b in 0..2 {
                s[(idx[a], idx[b])] = rot[(a, b)];
            }
        }
    }
    s
}

pub fn hessian_oracle(
    k: usize,
    with_centre: bool,
    params: &ModelParams,
    rc: &ReducedConstants,
) -> Result<OracleReport> {
    let balance = if with_centre {
        equilibrium_radius_centre(k, params, rc)?
    } else {
        equilibrium_radius(k, params, rc)?
    };
    let r = critical_radius(k, with_centre, balance.radius, rc, params)?;
    let cluster = build_cluster(k, r, 0.0, with_centre)?;
    let hess = local_hessian(&cluster, rc, params, 1e-4 * r)?;

    let max = hess.amax();
    let asymmetry = (&hess - hess.transpose()).amax() / max;
    if asymmetry > MAX_ASYMMETRY {
        return Err(Error::StepError(asymmetry));
    }
    let s = shift_operator(k, with_centre);
    let shift_commutator = (&hess * &s - &s * &hess).norm() / hess.norm();

    let d = if with_centre { r } else { cluster.nearest_neighbour_distance() };
    let scale = hessian_scale(rc.xi, params.sigma(), d);
    let eigenvalues = sorted_eigenvalues(hess / scale);
    let signs: Vec<i8> = eigenvalues
        .iter()
        .map(|&e| {
            if e < -ORACLE_TOL {
                -1
            } else if e > ORACLE_TOL {
                1
            } else {
                0
            }
        })
        .collect();
    let negative = signs.iter().filter(|&&s| s < 0).count();
    let near_zero = signs.iter().filter(|&&s| s == 0).count();
    log::debug!(
        "hessian oracle k={k} centre={with_centre}: balance R = {:.4}, critical R = {r:.4}, eigenvalues {eigenvalues:?}",
        balance.radius
    );
    Ok(OracleReport {
        k,
        with_centre,
        balance_radius: balance.radius,
        critical_radius: r,
        scale,
        eigenvalues,
        signs,
        negative,
        near_zero,
        asymmetry,
        shift_commutator,
    })
}
