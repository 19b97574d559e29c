//! Modified Bessel functions of the second kind, orders 0 and 1.
//!
//! For `z <= 2` the ascending series is summed directly (it converges like
//! `(z²/4)^k / (k!)²`). Above that the Steed continued fraction for the ratio
//! `K₁/K₀` together with the Temme normalisation sum gives both orders to full
//! double precision.

use crate::error::{Error, Result};

/// Euler–Mascheroni constant, 20 significant digits.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_61;

const SERIES_LIMIT: f64 = 2.0;

pub fn bessel_k0(z: f64) -> Result<f64> {
    check(z, "bessel_k0")?;
    Ok(if z <= SERIES_LIMIT {
        series(z).0
    } else {
        steed(z).0
    })
}

pub fn bessel_k1(z: f64) -> Result<f64> {
    check(z, "bessel_k1")?;
    Ok(if z <= SERIES_LIMIT {
        series(z).1
    } else {
        steed(z).1
    })
}

/// Both orders at once; cheaper than two calls in the large-argument branch.
pub fn bessel_k0_k1(z: f64) -> Result<(f64, f64)> {
    check(z, "bessel_k0_k1")?;
    Ok(if z <= SERIES_LIMIT {
        series(z)
    } else {
        steed(z)
    })
}

fn check(z: f64, what: &'static str) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError { what, value: z })
    }
}

// K0 = -(ln(z/2) + γ) I0 + Σ H_k t^k/(k!)²
// K1 = 1/z + ln(z/2) I1 - (z/4) Σ (ψ(k+1) + ψ(k+2)) t^k/(k!(k+1)!)
fn series(z: f64) -> (f64, f64) {
    let t = 0.25 * z * z;
    let log_half = (0.5 * z).ln();

    let mut term = 1.0; // t^k / (k!)²
    let mut harmonic = 0.0; // H_k
    let mut i0 = 0.0;
    let mut k0_sum = 0.0;
    let mut i1_sum = 0.0;
    let mut k1_sum = 0.0;

    for k in 0..60 {
        if k > 0 {
            let kf = k as f64;
            term *= t / (kf * kf);
            harmonic += 1.0 / kf;
        }
        let shifted = term / (k as f64 + 1.0); // t^k / (k! (k+1)!)
        i0 += term;
        k0_sum += harmonic * term;
        i1_sum += shifted;
        let psi_pair = -2.0 * EULER_GAMMA + 2.0 * harmonic + 1.0 / (k as f64 + 1.0);
        k1_sum += psi_pair * shifted;
        if term < 1e-18 * i0 {
            break;
        }
    }

    let k0 = -(log_half + EULER_GAMMA) * i0 + k0_sum;
    let i1 = 0.5 * z * i1_sum;
    let k1 = 1.0 / z + log_half * i1 - 0.25 * z * k1_sum;
    (k0, k1)
}

fn steed(x: f64) -> (f64, f64) {
    const A1: f64 = 0.25;
    let mut b = 2.0 * (1.0 + x);
    let mut d = 1.0 / b;
    let mut delh = d;
    let mut h = d;
    let mut q1 = 0.0;
    let mut q2 = 1.0;
    let mut q = A1;
    let mut c = A1;
    let mut a = -A1;
    let mut s = 1.0 + q * delh;

    for i in 2..10_000 {
        let fi = i as f64;
        a -= 2.0 * (fi - 1.0);
        c = -a * c / fi;
        let qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh *= b * d - 1.0;
        h += delh;
        let dels = q * delh;
        s += dels;
        if (dels / s).abs() < 1e-17 {
            break;
        }
    }
    h *= A1;

    let k0 = (std::f64::consts::PI / (2.0 * x)).sqrt() * (-x).exp() / s;
    let k1 = k0 * (x + 0.5 - h) / x;
    (k0, k1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    // ∫₀^∞ exp(-z cosh t) cosh(νt) dt by the trapezoid rule; the integrand
    // decays doubly exponentially so a modest step is exact to round-off.
    fn integral_oracle(z: f64, order: i32) -> f64 {
        let h = 1.0 / 64.0;
        let mut sum = 0.5 * (-z).exp();
        let mut i = 1;
        loop {
            let t = i as f64 * h;
            let term = (-z * t.cosh()).exp() * (order as f64 * t).cosh();
            sum += term;
            if term < 1e-300 || i > 200_000 {
                break;
            }
            i += 1;
        }
        sum * h
    }

    #[test]
    fn small_argument_matches_leading_log() {
        for &z in &[1e-3, 1e-4] {
            let lead = bessel_k0(z).unwrap() + (0.5 * z).ln() + EULER_GAMMA;
            // next term is (z²/4)(1 - γ - ln(z/2))
            assert!(lead.abs() < 2.0 * z * z * (1.0 - (0.5 * z).ln()), "z={z} lead={lead}");
        }
        assert!((bessel_k1(1e-4).unwrap() * 1e-4 - 1.0).abs() < 1e-7);
    }

    #[test]
    fn k0_at_one_matches_integral_representation() {
        let oracle = integral_oracle(1.0, 0);
        let k0 = bessel_k0(1.0).unwrap();
        assert!((k0 - oracle).abs() < 1e-10 * oracle, "{k0} vs {oracle}");
    }

    #[test]
    fn both_branches_match_integral_representation() {
        for &z in &[0.05, 0.5, 1.5, 1.999, 2.0, 2.001, 3.0, 7.5, 15.0, 40.0] {
            for order in 0..2 {
                let oracle = integral_oracle(z, order);
                let got = if order == 0 {
                    bessel_k0(z).unwrap()
                } else {
                    bessel_k1(z).unwrap()
                };
                assert!(
                    ((got - oracle) / oracle).abs() < 1e-10,
                    "K{order}({z}) = {got}, oracle {oracle}"
                );
            }
        }
    }

    #[test]
    fn large_argument_expansion() {
        for &z in &[20.0, 40.0] {
            let scaled = bessel_k0(z).unwrap() * z.sqrt() * z.exp();
            let asym = (PI / 2.0).sqrt() * (1.0 - 1.0 / (8.0 * z) + 9.0 / (128.0 * z * z));
            assert!((scaled - asym).abs() < 1e-4 * asym, "{scaled} vs {asym}");
        }
    }

    #[test]
    fn rejects_non_positive() {
        assert!(matches!(bessel_k0(0.0), Err(Error::DomainError { .. })));
        assert!(matches!(bessel_k1(-1.0), Err(Error::DomainError { .. })));
        assert!(bessel_k0(f64::NAN).is_err());
    }

    #[test]
    fn wronskian_like_identity() {
        // K₀' = -K₁, checked by central differences across the branch switch
        for &z in &[0.7, 1.95, 2.05, 9.0] {
            let h = 1e-5;
            let fd = (bessel_k0(z + h).unwrap() - bessel_k0(z - h).unwrap()) / (2.0 * h);
            assert!((fd + bessel_k1(z).unwrap()).abs() < 1e-8, "z={z}");
        }
    }
}
