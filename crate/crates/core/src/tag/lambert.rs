//! Principal branch of the Lambert W function.

use std::f64::consts::E;

use crate::{Error, Result};

const TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 50;

/// `W₀(x)`: the solution `w ≥ -1` of `w·eʷ = x`, for `x ≥ -1/e`.
///
/// Halley iteration from a branch-point series seed below `-0.25` and from
/// `ln(1 + x)` elsewhere.
pub fn lambert_w0(x: f64) -> Result<f64> {
    let branch = -1.0 / E;
    if x.is_nan() || x < branch {
        // Allow one ulp-scale rounding below the branch point.
        if x >= branch - 4.0 * f64::EPSILON {
            return Ok(-1.0);
        }
        return Err(Error::Domain {
            function: "lambert_w0",
            value: x,
        });
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(f64::INFINITY);
    }

    let mut w = if x < -0.25 {
        let p = (2.0 * (E * x + 1.0)).max(0.0).sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        x.ln_1p()
    };
    if w <= -1.0 {
        return Ok(-1.0);
    }

    for _ in 0..MAX_ITERATIONS {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        if wp1 == 0.0 || f.abs() <= 2.0 * f64::EPSILON * x.abs() {
            return Ok(w);
        }
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= TOLERANCE * w.abs().max(f64::MIN_POSITIVE) {
            return Ok(w);
        }
    }
    Err(Error::NonConvergence {
        what: "lambert_w0",
        iterations: MAX_ITERATIONS,
    })
}

/// `W₀(eʸ)` without forming `eʸ`, so the diode model stays finite for very
/// large forward drive. Solves `w + ln w = y` by Newton once `y` is large.
pub fn lambert_w0_exp(y: f64) -> f64 {
    if y < 20.0 {
        // W₀ of a positive argument always converges.
        return lambert_w0(y.exp()).unwrap_or(f64::NAN);
    }
    if y.is_infinite() {
        return y;
    }
    let mut w = y - y.ln();
    for _ in 0..MAX_ITERATIONS {
        let g = w + w.ln() - y;
        let step = g / (1.0 + 1.0 / w);
        w -= step;
        if step.abs() <= 1e-15 * w {
            break;
        }
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Bisection on `w·eʷ - x` over `[-1, max(1, ln(1+x)+1)]`.
    fn bisect_w0(x: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0f64, (1.0 + x.max(0.0)).ln().max(1.0) + 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() > x {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn trivial_values() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(-1.0 / E).unwrap() + 1.0).abs() < 1e-7);
    }

    #[test]
    fn omega_constant_against_bisection() {
        let oracle = bisect_w0(1.0);
        assert!((oracle - 0.567_143_290_4).abs() < 1e-10);
        assert!((lambert_w0(1.0).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn below_branch_point_is_a_domain_error() {
        assert!(matches!(lambert_w0(-0.5), Err(Error::Domain { .. })));
        assert!(lambert_w0(f64::NAN).is_err());
    }

    #[test]
    fn near_branch_point() {
        for &d in &[1e-14, 1e-10, 1e-6, 1e-3] {
            let x = -1.0 / E + d;
            let w = lambert_w0(x).unwrap();
            assert!(w >= -1.0);
            assert!((w * w.exp() - x).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn exp_form_matches_direct() {
        for &y in &[-30.0f64, -3.0, 0.0, 5.0, 19.9, 20.0, 40.0, 300.0] {
            let direct = lambert_w0(y.exp()).unwrap();
            let logform = lambert_w0_exp(y);
            assert!(((direct - logform) / direct).abs() < 1e-13, "y = {y}");
        }
        // beyond f64 range for eʸ
        let w = lambert_w0_exp(1000.0);
        assert!((w + w.ln() - 1000.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn defining_identity(x in -0.3678f64..1e6) {
            let w = lambert_w0(x).unwrap();
            let residual = (w * w.exp() - x).abs();
            prop_assert!(residual <= 1e-12 * x.abs().max(1e-300) + 1e-16);
        }
    }
}
