//! Gaussian tail functions.
//!
//! The phase-error law multiplies `exp(K x²)` by a Gaussian CCDF, which is
//! exponentially ill-conditioned for large K. Everything here is expressed
//! through the scaled complementary error function `erfcx(y) = exp(y²)·erfc(y)`
//! so that callers can stay in a bounded range.

use std::f64::consts::PI;

pub use libm::{erf, erfc};

/// Switch-over point between the direct product and the continued fraction.
const ERFCX_CF_THRESHOLD: f64 = 25.0;
const ERFCX_CF_DEPTH: usize = 80;

/// Scaled complementary error function `exp(y²)·erfc(y)`.
pub fn erfcx(y: f64) -> f64 {
    if y < 0.0 {
        // erfc(-y) = 2 - erfc(y)
        return 2.0 * (y * y).exp() - erfcx(-y);
    }
    if y < ERFCX_CF_THRESHOLD {
        return (y * y).exp() * erfc(y);
    }
    // erfc(y) = exp(-y²)/√π · 1/(y + ½/(y + 1/(y + 3/2/(y + …))))
    let mut t = y;
    for k in (1..=ERFCX_CF_DEPTH).rev() {
        t = y + (k as f64 / 2.0) / t;
    }
    1.0 / (PI.sqrt() * t)
}

/// Standard Gaussian complementary CDF, `Q(x) = P[N(0,1) > x]`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn erfcx_matches_direct_product_in_overlap() {
        for &y in &[0.0f64, 0.5, 1.0, 2.0, 3.5, 4.0, 4.5, 5.0, 6.0] {
            let direct = (y * y).exp() * erfc(y);
            let scaled = erfcx(y);
            assert!(
                ((direct - scaled) / direct).abs() < 1e-12,
                "y = {y}: {direct} vs {scaled}"
            );
        }
    }

    #[test]
    fn erfcx_asymptote() {
        // erfcx(y) ~ 1/(y√π) (1 - 1/(2y²) + 3/(4y⁴))
        let y = 1e3;
        let a = 1.0 / (y * PI.sqrt()) * (1.0 - 0.5 / (y * y) + 0.75 / y.powi(4));
        assert!(((erfcx(y) - a) / a).abs() < 1e-14);
    }

    #[test]
    fn q_function_values() {
        assert!((gaussian_q(0.0) - 0.5).abs() < 1e-16);
        let q1 = gaussian_q(1.0);
        assert!(((q1 - 0.158_655_253_931_457_05) / q1).abs() < 1e-10, "{q1}");
        // far tail, relative
        let q6 = 9.865_876_450_376_98e-10;
        assert!(((gaussian_q(6.0) - q6) / q6).abs() < 1e-10);
        assert!((gaussian_q(-1.0) + gaussian_q(1.0) - 1.0).abs() < 1e-15);
    }
}
