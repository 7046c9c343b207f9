//! Standard-normal primitives and the Stein-equation solution.
//!
//! The tail is always computed through the complementary error function,
//! never as `1 - cdf`, so it stays accurate to relative 1e-12 out to z = 8.

use crate::error::{Error, Result};
use libm::erfc;
use serde::Serialize;

const SQRT_2: f64 = std::f64::consts::SQRT_2;
const SQRT_2PI: f64 = 2.506_628_274_631_000_5;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Past this point `1/p(w)` overflows in f64; the Stein solution switches to
/// the asymptotic Mills-ratio evaluation and flags the result.
pub const SATURATION_W: f64 = 38.0;

/// Φ(z), the standard normal distribution function.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("cdf requires finite z, got {z}")));
    }
    Ok(0.5 * erfc(-z / SQRT_2))
}

/// 1 - Φ(z), computed without cancellation.
pub fn std_normal_tail(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(Error::Domain(format!("tail requires finite z, got {z}")));
    }
    Ok(0.5 * erfc(z / SQRT_2))
}

/// p(z) = (2π)^{-1/2} e^{-z²/2}, the standard normal density.
#[inline]
pub fn std_normal_density(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Point evaluation of Φ, 1-Φ and the density together.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormalEval {
    pub z: f64,
    pub cdf: f64,
    pub tail: f64,
    pub density: f64,
}

pub fn evaluate(z: f64) -> Result<NormalEval> {
    Ok(NormalEval {
        z,
        cdf: std_normal_cdf(z)?,
        tail: std_normal_tail(z)?,
        density: std_normal_density(z),
    })
}

/// Both sides of the Mills-ratio inequality
/// e^{-z²/2} ≤ √(2π)(1 + z)(1 - Φ(z)) for z > 0.
pub fn mills_check(z: f64) -> Result<(f64, f64)> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("mills_check requires z > 0, got {z}")));
    }
    let lhs = (-0.5 * z * z).exp();
    let rhs = SQRT_2PI * (1.0 + z) * std_normal_tail(z)?;
    Ok((lhs, rhs))
}

/// Mills ratio (1 - Φ(x))/p(x) for x beyond the saturation point, by the
/// asymptotic series (1/x)(1 - 1/x² + 3/x⁴ - 15/x⁶ + ...). For x ≥ 38 the
/// truncation error is below 1e-13 relative.
fn mills_ratio_asymptotic(x: f64) -> f64 {
    let inv2 = 1.0 / (x * x);
    let series = 1.0 + inv2 * (-1.0 + inv2 * (3.0 + inv2 * (-15.0 + inv2 * (105.0 - 945.0 * inv2))));
    series / x
}

/// One point of the bounded solution f_z of the Stein equation
/// f'(w) - w f(w) = 1_{w ≤ z} - Φ(z).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SteinSolutionPoint {
    pub z: f64,
    pub w: f64,
    pub f: f64,
    pub fprime: f64,
    /// True when |w| exceeded the overflow threshold and the value came from
    /// the asymptotic Mills-ratio evaluation.
    pub saturated: bool,
}

/// Evaluate f_z(w) and f_z'(w).
///
/// f_z(w) = Φ(w)(1 - Φ(z))/p(w) for w ≤ z and Φ(z)(1 - Φ(w))/p(w) for w > z;
/// the derivative comes from the equation itself,
/// f'(w) = w f(w) + 1_{w ≤ z} - Φ(z), which is exact on both branches.
pub fn stein_solution(z: f64, w: f64) -> Result<SteinSolutionPoint> {
    if !z.is_finite() || !w.is_finite() {
        return Err(Error::Domain(format!(
            "stein_solution requires finite z and w, got z={z}, w={w}"
        )));
    }
    let cdf_z = std_normal_cdf(z)?;
    let saturated = w.abs() > SATURATION_W;
    let f = if w <= z {
        // Φ(w)(1 - Φ(z))/p(w); for very negative w, Φ(w)/p(w) is the Mills
        // ratio at |w|.
        let ratio = if saturated {
            mills_ratio_asymptotic(-w)
        } else {
            std_normal_cdf(w)? / std_normal_density(w)
        };
        ratio * std_normal_tail(z)?
    } else {
        let ratio = if saturated {
            mills_ratio_asymptotic(w)
        } else {
            std_normal_tail(w)? / std_normal_density(w)
        };
        ratio * cdf_z
    };
    let indicator = if w <= z { 1.0 } else { 0.0 };
    let fprime = w * f + indicator - cdf_z;
    Ok(SteinSolutionPoint {
        z,
        w,
        f,
        fprime,
        saturated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values computed with mpmath at 40 digits.
    const PHI_1: f64 = 0.841_344_746_068_542_9;
    const TAIL_1: f64 = 0.158_655_253_931_457_05;
    const TAIL_8: f64 = 6.220_960_574_271_784e-16;
    const PHI_HALF: f64 = 0.691_462_461_274_013_1;
    const PHI_3: f64 = 0.998_650_101_968_369_9;
    const PHI_MINUS_3: f64 = 1.349_898_031_630_094_5e-3;

    #[test]
    fn cdf_matches_oracle() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert_relative_eq!(std_normal_cdf(1.0).unwrap(), PHI_1, max_relative = 1e-12);
        assert_relative_eq!(std_normal_cdf(-1.0).unwrap(), TAIL_1, max_relative = 1e-12);
        assert_relative_eq!(std_normal_cdf(0.5).unwrap(), PHI_HALF, max_relative = 1e-12);
        assert_relative_eq!(std_normal_cdf(3.0).unwrap(), PHI_3, max_relative = 1e-12);
        assert_relative_eq!(std_normal_cdf(-3.0).unwrap(), PHI_MINUS_3, max_relative = 1e-12);
    }

    #[test]
    fn tail_matches_oracle_deep() {
        assert_eq!(std_normal_tail(0.0).unwrap(), 0.5);
        assert_relative_eq!(std_normal_tail(1.0).unwrap(), TAIL_1, max_relative = 1e-12);
        // deep tail: no cancellation allowed
        assert_relative_eq!(std_normal_tail(8.0).unwrap(), TAIL_8, max_relative = 0.05);
        assert_relative_eq!(std_normal_tail(8.0).unwrap(), TAIL_8, max_relative = 1e-12);
    }

    #[test]
    fn cdf_symmetry_and_complement() {
        for i in 0..=160 {
            let z = -8.0 + 0.1 * i as f64;
            let c = std_normal_cdf(z).unwrap();
            let t = std_normal_tail(z).unwrap();
            assert!((c + t - 1.0).abs() <= 1e-14);
            assert!((std_normal_cdf(-z).unwrap() - t).abs() <= 1e-14);
        }
    }

    #[test]
    fn density_definition() {
        for i in 0..=200 {
            let z = -10.0 + 0.1 * i as f64;
            let expect = (-0.5 * z * z).exp() / SQRT_2PI;
            assert_relative_eq!(std_normal_density(z), expect, max_relative = 1e-14);
        }
    }

    #[test]
    fn non_finite_inputs_rejected() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_tail(f64::INFINITY).is_err());
        assert!(stein_solution(0.0, f64::NAN).is_err());
        assert!(mills_check(0.0).is_err());
        assert!(mills_check(-1.0).is_err());
    }

    #[test]
    fn mills_values_and_inequalities() {
        // oracle: (e^{-1/2}, √(2π)·2·(1-Φ(1))) and (e^{-2}, √(2π)·3·(1-Φ(2)))
        let (l1, r1) = mills_check(1.0).unwrap();
        assert_relative_eq!(l1, 0.606_530_659_712_633_4, max_relative = 1e-12);
        assert_relative_eq!(r1, 0.795_379_490_846_702_9, max_relative = 1e-12);
        let (l2, r2) = mills_check(2.0).unwrap();
        assert_relative_eq!(l2, 0.135_335_283_236_612_7, max_relative = 1e-12);
        assert_relative_eq!(r2, 0.171_078_371_978_676_14, max_relative = 1e-12);

        // near zero: lhs → e^0 = 1 while rhs → √(2π)·0.5·(1+z), so the
        // inequality holds with room to spare
        let (l0, r0) = mills_check(1e-3).unwrap();
        assert!(l0 < r0);
        assert_relative_eq!(l0, 1.0, max_relative = 1e-6);
        // tail(z) ≈ 0.5 - z·p(0) to O(z³)
        assert_relative_eq!(
            r0,
            SQRT_2PI * 1.001 * (0.5 - 0.001 * INV_SQRT_2PI),
            max_relative = 1e-6
        );

        // lhs ≤ rhs ≤ (3√(2π)/2)(1+z²)(1-Φ(z)) on a grid
        for i in 1..=120 {
            let z = 0.05 * i as f64;
            let (lhs, rhs) = mills_check(z).unwrap();
            let upper = 1.5 * SQRT_2PI * (1.0 + z * z) * std_normal_tail(z).unwrap();
            assert!(lhs <= rhs * (1.0 + 1e-14));
            assert!(rhs <= upper * (1.0 + 1e-14));
        }
    }

    #[test]
    fn stein_solution_values() {
        // 0.25/p(0), oracle 0.6266570686577501
        let p = stein_solution(0.0, 0.0).unwrap();
        assert_relative_eq!(p.f, 0.626_657_068_657_750_1, epsilon = 1e-10);
        assert!(!p.saturated);

        // Φ(2)(1-Φ(5))/p(5), oracle 0.18842169489236398
        let p = stein_solution(2.0, 5.0).unwrap();
        assert_relative_eq!(p.f, 0.188_421_694_892_364, epsilon = 1e-5);

        // w → -∞ forces f → 0+ (like Mills(|w|)·(1-Φ(z)) ≈ 0.5/|w| here)
        let p30 = stein_solution(0.0, -30.0).unwrap();
        assert!(p30.f > 0.0 && p30.f < 0.02);
        assert_relative_eq!(p30.f, 0.5 / 30.0, max_relative = 2e-3);
        let p35 = stein_solution(0.0, -35.0).unwrap();
        assert!(p35.f < p30.f);
    }

    #[test]
    fn stein_branches_agree_at_z() {
        for &z in &[0.0, 0.7, 2.0, 4.5] {
            let left = stein_solution(z, z).unwrap().f;
            // right branch value at w = z: Φ(z)(1-Φ(z))/p(z), same expression
            let right = std_normal_cdf(z).unwrap() * std_normal_tail(z).unwrap()
                / std_normal_density(z);
            assert!((left - right).abs() <= 1e-12);
        }
    }

    #[test]
    fn stein_bounds_and_positivity() {
        for zi in 0..=12 {
            let z = 0.5 * zi as f64;
            for wi in -100..=100 {
                let w = 0.1 * wi as f64;
                let p = stein_solution(z, w).unwrap();
                assert!(p.f > 0.0, "f must be positive at z={z}, w={w}");
                assert!(p.f <= 1.0 + 1e-12);
                assert!(p.fprime.abs() <= 1.0 + 1e-12);
            }
        }
    }

    #[test]
    fn w_f_nondecreasing() {
        for zi in 0..=6 {
            let z = zi as f64;
            let mut prev = f64::NEG_INFINITY;
            for wi in -100..=100 {
                let w = 0.1 * wi as f64;
                let p = stein_solution(z, w).unwrap();
                let wf = w * p.f;
                assert!(
                    wf >= prev - 1e-12,
                    "w·f_z(w) decreased at z={z}, w={w}"
                );
                prev = wf;
            }
        }
    }

    #[test]
    fn saturated_evaluation_is_flagged_and_finite() {
        for &w in &[-45.0, 45.0, -38.5, 120.0] {
            let p = stein_solution(1.0, w).unwrap();
            assert!(p.saturated);
            assert!(p.f.is_finite() && p.f > 0.0);
            assert!(p.fprime.is_finite());
        }
        // continuity across the threshold: asymptotic and direct evaluation
        // agree to ~1e-12 where both are representable
        let direct = stein_solution(1.0, -37.9).unwrap();
        let asym = mills_ratio_asymptotic(37.9) * std_normal_tail(1.0).unwrap();
        assert_relative_eq!(direct.f, asym, max_relative = 1e-9);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        // small version of the full acceptance grid
        let h = 1e-5;
        for zi in 0..=6 {
            let z = zi as f64;
            for wi in -50..=50 {
                let w = 0.2 * wi as f64;
                if (w - z).abs() < 0.02 {
                    continue;
                }
                let up = stein_solution(z, w + h).unwrap().f;
                let dn = stein_solution(z, w - h).unwrap().f;
                let fd = (up - dn) / (2.0 * h);
                let an = stein_solution(z, w).unwrap().fprime;
                assert!(
                    (fd - an).abs() <= 1e-6,
                    "fd {fd} vs fprime {an} at z={z}, w={w}"
                );
            }
        }
    }
}
