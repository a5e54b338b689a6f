//! Modified Bessel functions of the first kind of real order.
//!
//! Values are returned exponentially scaled, `e^{-z} I_ν(z)`, so that large
//! arguments stay finite. Two regimes are used: the power series on
//! `z <= switch_point(ν)` and the Debye uniform expansion beyond it.

use crate::debye::{DEBYE, DEBYE_TERMS};
use crate::error::{Error, Result};
use crate::math::{exp, ln, ln_gamma, sqrt, LN_2, PI};

/// Argument at which evaluation switches from the series to the uniform expansion.
pub fn switch_point(nu: f64) -> f64 {
    f64::max(40.0, 2.0 * nu.abs())
}

fn check_order(nu: f64, z: f64) -> Result<()> {
    if !nu.is_finite() || nu < -0.5 {
        return Err(Error::OutOfRange {
            what: "Bessel order must be >= -1/2",
            value: nu,
        });
    }
    if !z.is_finite() || z < 0.0 {
        return Err(Error::OutOfRange {
            what: "Bessel argument must be finite and >= 0",
            value: z,
        });
    }
    Ok(())
}

/// `ln S` with `S = Σ_k q^k / (k! (ν+1)_k)`, `q = z²/4`.
fn ln_series(nu: f64, z: f64) -> f64 {
    let q = 0.25 * z * z;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut shift = 0.0;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + nu));
        sum += term;
        if sum > 1e250 {
            sum *= 1e-250;
            term *= 1e-250;
            shift += 250.0 * core::f64::consts::LN_10;
        }
        if term < 1e-17 * sum && k > q / (nu + 1.0) {
            break;
        }
        k += 1.0;
        if k > 1e6 {
            break;
        }
    }
    ln(sum) + shift
}

/// Power series for `e^{-z} I_ν(z)`.
pub fn bessel_i_scaled_series(nu: f64, z: f64) -> f64 {
    if z == 0.0 {
        return if nu == 0.0 {
            1.0
        } else if nu > 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    exp(nu * ln(0.5 * z) - ln_gamma(nu + 1.0) - z + ln_series(nu, z))
}

/// Debye uniform expansion for `e^{-z} I_ν(z)`, `z > 0`.
///
/// For `-1/2 <= ν < 0` it evaluates `I_{|ν|}`; the two differ by a multiple
/// of `K_ν`, which is below one part in `e^{2z}` relative.
pub fn bessel_i_scaled_uniform(nu: f64, z: f64) -> f64 {
    let mu = nu.abs();
    let r = sqrt(mu * mu + z * z);
    let p = mu / r;
    let p2 = p * p;
    let mut sum = 0.0;
    let mut rk = 1.0;
    for coeffs in DEBYE.iter().take(DEBYE_TERMS) {
        let mut poly = 0.0;
        for c in coeffs.iter().rev() {
            poly = poly * p2 + c;
        }
        sum += poly / rk;
        rk *= r;
    }
    let log_amp = if mu == 0.0 {
        0.0
    } else {
        mu * mu / (r + z) + mu * ln(z / (mu + r))
    };
    exp(log_amp) / sqrt(2.0 * PI * r) * sum
}

/// `e^{-z} I_ν(z)` for `ν >= -1/2`, `z >= 0`.
pub fn bessel_i_scaled(nu: f64, z: f64) -> Result<f64> {
    check_order(nu, z)?;
    if z <= switch_point(nu) {
        Ok(bessel_i_scaled_series(nu, z))
    } else {
        Ok(bessel_i_scaled_uniform(nu, z))
    }
}

/// `I_ν(z)`; fails when the value overflows.
pub fn bessel_i(nu: f64, z: f64) -> Result<f64> {
    let s = bessel_i_scaled(nu, z)?;
    let v = s * exp(z);
    if v.is_finite() || (nu < 0.0 && z == 0.0) {
        Ok(v)
    } else {
        Err(Error::Numerical("I_nu overflows; use the scaled form"))
    }
}

/// `e^{-w} h_c(w)` with `h_c(w) = w^{-(c-1/2)} I_{c-1/2}(w)`, finite at `w = 0`.
pub fn h_scaled(c: f64, w: f64) -> Result<f64> {
    let nu = c - 0.5;
    check_order(nu, w)?;
    if w <= switch_point(nu) {
        // 2^{-ν} / Γ(ν+1) · S(w)
        let ls = if w == 0.0 { 0.0 } else { ln_series(nu, w) };
        Ok(exp(-nu * LN_2 - ln_gamma(nu + 1.0) - w + ls))
    } else {
        Ok(exp(-nu * ln(w)) * bessel_i_scaled_uniform(nu, w))
    }
}

/// `h_c(w)`; fails when the value overflows.
pub fn h(c: f64, w: f64) -> Result<f64> {
    let v = h_scaled(c, w)? * exp(w);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numerical("h_c overflows; use the scaled form"))
    }
}

/// Relative mismatch of the two regimes at the switch point.
pub fn seam_mismatch(nu: f64) -> f64 {
    let z = switch_point(nu);
    let a = bessel_i_scaled_series(nu, z);
    let b = bessel_i_scaled_uniform(nu, z);
    ((a - b) / b).abs()
}
