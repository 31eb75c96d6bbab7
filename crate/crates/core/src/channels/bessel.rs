//! Zeroth-order Bessel function of the first kind.

use crate::error::{Error, Result};

/// Switch point between the power series and the asymptotic expansion.
const SERIES_LIMIT: f64 = 12.0;

/// `J_0(x)` to absolute error below 1e-7 for |x| <= 100.
///
/// Power series for |x| <= 12, Hankel asymptotic expansion beyond.
pub fn bessel_j0(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::NonFinite("bessel_j0 argument"));
    }
    let x = x.abs();
    if x <= SERIES_LIMIT {
        Ok(j0_series(x))
    } else {
        Ok(j0_asymptotic(x))
    }
}

/// Alternating series `Σ (−1)^m (x/2)^{2m} / (m!)²`, summed until the
/// terms fall below machine noise. Accurate in f64 for |x| up to ~20;
/// only used below [`SERIES_LIMIT`].
fn j0_series(x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for m in 1..80u32 {
        term *= q / ((m * m) as f64);
        sum += term;
        if term.abs() < 1e-18 * sum.abs().max(1e-3) {
            break;
        }
    }
    sum
}

/// Hankel expansion
/// `J0(x) = sqrt(2/(πx)) [P(x) cos(x−π/4) − Q(x) sin(x−π/4)]`
/// with Hankel symbols a_k = a_{k−1} · −(2k−1)² / (8k):
/// `P = Σ (−1)^k a_{2k} x^{−2k}`, `Q = Σ (−1)^k a_{2k+1} x^{−2k−1}`.
/// Truncated after 8 pairs; error below 1e-10 for x >= 12.
fn j0_asymptotic(x: f64) -> f64 {
    const TERMS: usize = 16;
    let mut hankel = [0.0f64; TERMS];
    hankel[0] = 1.0;
    for k in 1..TERMS {
        let m = (2 * k - 1) as f64;
        hankel[k] = hankel[k - 1] * -(m * m) / (8.0 * k as f64);
    }
    let inv_x2 = 1.0 / (x * x);
    let mut p = 0.0;
    let mut q = 0.0;
    let mut pow = 1.0; // x^{-2k}
    let mut sign = 1.0;
    for k in 0..TERMS / 2 {
        p += sign * hankel[2 * k] * pow;
        q += sign * hankel[2 * k + 1] * pow / x;
        pow *= inv_x2;
        sign = -sign;
    }
    let chi = x - std::f64::consts::FRAC_PI_4;
    (2.0 / (std::f64::consts::PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
