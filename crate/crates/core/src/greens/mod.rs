//! Free-space Green's function of `Δ - σ²` in the plane.
//!
//! `G(x, z) = K₀(σ|x - z|) / 2π`. Near the diagonal this is
//! `(1/2π) ln(1/σ|x-z|)` plus a bounded remainder; far away it decays like
//! `|x-z|^{-1/2} e^{-σ|x-z|}`. The Neumann correction on a bounded disk is not
//! modelled; [`image_correction_bound`] estimates its size instead.

mod bessel;

pub use bessel::{bessel_k0, bessel_k0_k1, bessel_k1, EULER_GAMMA};

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenParams {
    sigma: f64,
}

impl GreenParams {
    pub fn new(sigma: f64) -> Result<Self> {
        if sigma > 0.0 && sigma.is_finite() {
            Ok(Self { sigma })
        } else {
            Err(Error::DomainError {
                what: "GreenParams::sigma",
                value: sigma,
            })
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

pub fn green_free(p: GreenParams, x: Point, z: Point) -> Result<f64> {
    let r = (x - z).norm();
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    Ok(bessel_k0(p.sigma * r)? / (2.0 * PI))
}

/// Gradient of [`green_free`] with respect to `x`.
pub fn green_gradient(p: GreenParams, x: Point, z: Point) -> Result<Vector2<f64>> {
    let d = x - z;
    let r = d.norm();
    if r == 0.0 {
        return Err(Error::SingularPoint);
    }
    let k1 = bessel_k1(p.sigma * r)?;
    Ok(d * (-p.sigma * k1 / (2.0 * PI * r)))
}

/// Size of the reflected (image) contribution a source at distance
/// `dist_to_boundary` from a straight Neumann wall would add: `K₀(2σ·dist)/2π`.
pub fn image_correction_bound(p: GreenParams, dist_to_boundary: f64) -> Result<f64> {
    if dist_to_boundary <= 0.0 {
        return Err(Error::DomainError {
            what: "image_correction_bound",
            value: dist_to_boundary,
        });
    }
    let bound = bessel_k0(2.0 * p.sigma * dist_to_boundary)? / (2.0 * PI);
    log::debug!(
        "image correction bound at distance {dist_to_boundary}: {bound:.3e} (sigma = {})",
        p.sigma
    );
    Ok(bound)
}

/// Samples `G` and its radial derivative along a ray as CSV `r,g,dg_dr`.
pub fn write_kernel_csv<W: Write>(p: GreenParams, radii: &[f64], mut out: W) -> Result<()> {
    writeln!(out, "r,g,dg_dr")?;
    for &r in radii {
        let x = Vector2::new(r, 0.0);
        let g = green_free(p, x, Vector2::zeros())?;
        let dg = green_gradient(p, x, Vector2::zeros())?.x;
        writeln!(out, "{r},{g:e},{dg:e}")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64) -> Point {
        Vector2::new(x, y)
    }

    #[test]
    fn symmetric_in_arguments() {
        let p = GreenParams::new(0.3).unwrap();
        let (a, b) = (pt(0.2, -1.1), pt(3.0, 0.7));
        assert_eq!(green_free(p, a, b).unwrap(), green_free(p, b, a).unwrap());
    }

    #[test]
    fn singular_point_rejected() {
        let p = GreenParams::new(1.0).unwrap();
        assert!(matches!(
            green_free(p, pt(1.0, 1.0), pt(1.0, 1.0)),
            Err(Error::SingularPoint)
        ));
        assert!(green_gradient(p, pt(0.0, 0.0), pt(0.0, 0.0)).is_err());
        assert!(GreenParams::new(0.0).is_err());
    }

    #[test]
    fn near_field_log_singularity() {
        // G - (1/2π) ln(1/σr) should be flat over a decade near σr = 1e-4.
        let sigma = 0.5;
        let p = GreenParams::new(sigma).unwrap();
        let remainder = |s: f64| {
            let r = s / sigma;
            green_free(p, pt(r, 0.0), pt(0.0, 0.0)).unwrap() - (1.0 / s).ln() / (2.0 * PI)
        };
        let vals: Vec<f64> = [1e-5, 3e-5, 1e-4].iter().map(|&s| remainder(s)).collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
            - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-7, "{vals:?}");
        let expected = (2f64.ln() - EULER_GAMMA) / (2.0 * PI);
        assert!((vals[2] - expected).abs() < 1e-7);
    }

    #[test]
    fn far_field_decay_form() {
        let sigma = 0.7;
        let p = GreenParams::new(sigma).unwrap();
        let ratios: Vec<f64> = (0..=20)
            .map(|i| {
                let s = 10.0 + i as f64;
                let r = s / sigma;
                green_free(p, pt(0.0, r), pt(0.0, 0.0)).unwrap()
                    / (r.powf(-0.5) * (-s).exp() / sigma.sqrt())
            })
            .collect();
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        assert!((max - min) / max < 0.05, "{min} {max}");
    }

    #[test]
    fn radial_derivative_over_value_tends_to_minus_sigma() {
        let sigma = 1.3;
        let p = GreenParams::new(sigma).unwrap();
        let r = 30.0 / sigma;
        let x = pt(r, 0.0);
        let g = green_free(p, x, pt(0.0, 0.0)).unwrap();
        let dg = green_gradient(p, x, pt(0.0, 0.0)).unwrap().x;
        // derivative in the scaled variable σr
        let ratio = dg / (sigma * g);
        assert!((ratio + 1.0).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let sigma = 0.8;
        let p = GreenParams::new(sigma).unwrap();
        let z = pt(0.3, -0.2);
        let dir = Vector2::new(0.6, 0.8);
        let x = z + dir * (2.0 / sigma);
        let g = green_gradient(p, x, z).unwrap();
        let h = 1e-5;
        for axis in 0..2 {
            let mut e = Vector2::zeros();
            e[axis] = h;
            let fd = (green_free(p, x + e, z).unwrap() - green_free(p, x - e, z).unwrap())
                / (2.0 * h);
            assert!((fd - g[axis]).abs() < 1e-6, "axis {axis}: {fd} vs {}", g[axis]);
        }
    }

    #[test]
    fn gradient_antisymmetric_between_source_and_target() {
        let p = GreenParams::new(0.4).unwrap();
        let (x, z) = (pt(1.0, 2.0), pt(-0.5, 0.25));
        let gx = green_gradient(p, x, z).unwrap();
        let gz = green_gradient(p, z, x).unwrap();
        assert!((gx + gz).norm() < 1e-15);
    }

    #[test]
    fn helmholtz_residual_is_second_order() {
        let sigma = 0.9;
        let p = GreenParams::new(sigma).unwrap();
        let c = pt(1.7, -0.4);
        let g = |x: Point| green_free(p, x, pt(0.0, 0.0)).unwrap();
        let residual = |h: f64| {
            let lap = (g(c + Vector2::new(h, 0.0))
                + g(c - Vector2::new(h, 0.0))
                + g(c + Vector2::new(0.0, h))
                + g(c - Vector2::new(0.0, h))
                - 4.0 * g(c))
                / (h * h);
            (lap - sigma * sigma * g(c)).abs()
        };
        let (r1, r2) = (residual(0.02), residual(0.01));
        assert!(r2 < 0.3 * r1, "{r1} {r2}");
        assert!(r2 < 1e-3);
    }

    #[test]
    fn monotone_in_distance() {
        let p = GreenParams::new(0.25).unwrap();
        let mut last = f64::INFINITY;
        for i in 1..200 {
            let v = green_free(p, pt(0.1 * i as f64, 0.0), pt(0.0, 0.0)).unwrap();
            assert!(v < last);
            last = v;
        }
    }

    #[test]
    fn image_bound_is_small_far_from_boundary() {
        let p = GreenParams::new(0.5).unwrap();
        assert!(image_correction_bound(p, 40.0).unwrap() < 1e-9);
        assert!(image_correction_bound(p, 0.0).is_err());
    }

    #[test]
    fn kernel_csv_has_header_and_rows() {
        let p = GreenParams::new(1.0).unwrap();
        let mut buf = Vec::new();
        write_kernel_csv(p, &[0.5, 1.0, 2.0], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("r,g,dg_dr"));
    }
}
