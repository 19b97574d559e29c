//! Regular polygon spike configurations and their local frames.
//!
//! Local coordinates follow one convention throughout the crate: component 1
//! is radial (outward), component 2 is tangential (radial turned by +π/2).

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{Matrix2, Matrix4, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolygonCluster {
    pub k: usize,
    pub radius: f64,
    pub phase: f64,
    pub with_centre: bool,
    pub positions: Vec<Point>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalFrame {
    pub radial: Vector2<f64>,
    pub tangential: Vector2<f64>,
}

impl LocalFrame {
    pub fn at_angle(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            radial: Vector2::new(c, s),
            tangential: Vector2::new(-s, c),
        }
    }

    /// Columns are (radial, tangential); maps local to Cartesian components.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.radial, self.tangential])
    }
}

pub fn build_cluster(k: usize, radius: f64, phase: f64, with_centre: bool) -> Result<PolygonCluster> {
    if k < 2 {
        return Err(Error::InvalidK(k));
    }
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::DomainError {
            what: "build_cluster::radius",
            value: radius,
        });
    }
    let mut positions: Vec<Point> = (0..k)
        .map(|j| {
            let theta = vertex_angle(k, j, phase);
            Vector2::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect();
    if with_centre {
        positions.push(Vector2::zeros());
    }
    Ok(PolygonCluster {
        k,
        radius,
        phase,
        with_centre,
        positions,
    })
}

/// `θ_j = 2jπ/k + α` for zero-based `j`.
pub fn vertex_angle(k: usize, j: usize, phase: f64) -> f64 {
    2.0 * PI * j as f64 / k as f64 + phase
}

impl PolygonCluster {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn nearest_neighbour_distance(&self) -> f64 {
        2.0 * self.radius * (PI / self.k as f64).sin()
    }

    /// Frame of vertex `j`. The centre spike (if any) gets the frame of angle 0.
    pub fn frame(&self, j: usize) -> LocalFrame {
        if j >= self.k {
            LocalFrame::at_angle(0.0)
        } else {
            LocalFrame::at_angle(vertex_angle(self.k, j, self.phase))
        }
    }

    /// Rigidly rotated copy.
    pub fn rotated(&self, angle: f64) -> PolygonCluster {
        let (s, c) = angle.sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        PolygonCluster {
            phase: self.phase + angle,
            positions: self.positions.iter().map(|p| rot * p).collect(),
            ..self.clone()
        }
    }

    pub fn distance_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| (self.positions[i] - self.positions[j]).norm()).collect())
            .collect()
    }

    /// CSV `j,x,y` with zero-based `j`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "j,x,y")?;
        for (j, p) in self.positions.iter().enumerate() {
            writeln!(out, "{j},{},{}", p.x, p.y)?;
        }
        Ok(())
    }
}

/// Second derivatives of `|q₁ - q₂|²` with respect to the local coordinates
/// of two adjacent vertices. Row/column index `2a + i` addresses component
/// `i` (0 radial, 1 tangential) of spike `a` (0 or 1).
pub fn second_derivative_pair(k: usize) -> Matrix4<f64> {
    let t = 2.0 * PI / k as f64;
    let (s, c) = t.sin_cos();
    let mut m = Matrix4::zeros();
    m[(0, 0)] = 2.0;
    m[(1, 1)] = 2.0;
    m[(2, 2)] = 2.0;
    m[(3, 3)] = 2.0;
    // cross block: -2 e_i(1)·e_j(2)
    let cross = Matrix2::new(-2.0 * c, 2.0 * s, -2.0 * s, -2.0 * c);
    for i in 0..2 {
        for j in 0..2 {
            m[(i, 2 + j)] = cross[(i, j)];
            m[(2 + j, i)] = cross[(i, j)];
        }
    }
    m
}

/// Second derivatives of `|q₁|²` in the local frame of `q₁`.
pub fn second_derivative_self() -> Matrix2<f64> {
    Matrix2::identity() * 2.0
}
