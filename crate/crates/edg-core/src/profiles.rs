//! Scaling constants and self-similar profiles indexed by the kernel exponent.

use crate::error::{check_lambda, Result};
use crate::math::{exp, gamma, ipow, ln, ln_gamma, powf, sqrt, PI};

/// Long-time regime selected by the kernel exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `λ < 3/2`: power-law coarsening, `ℓ ~ t^β`.
    Coarsening,
    /// `λ = 3/2`: exponential growth of the mean cluster size.
    Exponential,
    /// `λ > 3/2`: finite-time blow-up, `ℓ ~ (t* - t)^β`.
    Gelation,
}

/// Constants attached to a kernel exponent `λ ∈ [0, 2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingConstants {
    pub lambda: f64,
    /// `1 / (2 - λ)`
    pub alpha: f64,
    /// `1 / (3 - 2λ)`; `None` at `λ = 3/2`.
    pub beta: Option<f64>,
    /// `λ / (2 (2 - λ))`
    pub c_lambda: f64,
    /// Normalisation of the profile, `(2-λ)^{2/(2-λ)} Γ(1 + 1/(2-λ))`.
    pub z_lambda: f64,
}

impl ScalingConstants {
    pub fn new(lambda: f64) -> Result<Self> {
        check_lambda(lambda)?;
        let alpha = 1.0 / (2.0 - lambda);
        let beta = if lambda == 1.5 {
            None
        } else {
            Some(1.0 / (3.0 - 2.0 * lambda))
        };
        let z_lambda = if lambda == 0.0 {
            sqrt(PI)
        } else if alpha <= 140.0 {
            // split power: (2-λ)^{2α} alone underflows near λ = 2
            let p = powf(2.0 - lambda, alpha);
            p * gamma(1.0 + alpha) * p
        } else {
            exp(2.0 * alpha * ln(2.0 - lambda) + ln_gamma(1.0 + alpha))
        };
        Ok(Self {
            lambda,
            alpha,
            beta,
            c_lambda: lambda / (2.0 * (2.0 - lambda)),
            z_lambda,
        })
    }

    pub fn regime(&self) -> Regime {
        if self.lambda < 1.5 {
            Regime::Coarsening
        } else if self.lambda == 1.5 {
            Regime::Exponential
        } else {
            Regime::Gelation
        }
    }

    /// Order of the Bessel function in the continuum kernel, `c_λ - 1/2 = α - 1`.
    pub fn bessel_order(&self) -> f64 {
        self.c_lambda - 0.5
    }

    /// Growth exponent of `τ(t)` in the coarsening regime, `β / α`.
    pub fn tau_exponent(&self) -> Option<f64> {
        self.beta.map(|b| b / self.alpha)
    }
}

/// Scaling constants for `λ`.
pub fn scaling_constants(lambda: f64) -> Result<ScalingConstants> {
    ScalingConstants::new(lambda)
}

/// Rate kernel `a_λ(k)`: `k^λ`, with `a_λ(0) = 0` for every `λ`.
pub fn kernel_a(lambda: f64, k: usize) -> Result<f64> {
    check_lambda(lambda)?;
    Ok(ipow(k, lambda))
}

/// Spatial modulus `θ_λ(x)`, `x > 0`.
pub fn theta(lambda: f64, x: f64) -> f64 {
    if lambda == 1.0 {
        ln(x)
    } else {
        powf(x, 1.0 - lambda) / (1.0 - lambda)
    }
}

/// Temporal modulus `ω_λ(r)` on `r >= 1`, with `ω_λ(1) = 0`.
pub fn omega(lambda: f64, r: f64) -> f64 {
    if r == 1.0 {
        return 0.0;
    }
    if lambda == 1.0 {
        return ln(2.0 * r - 1.0);
    }
    let alpha = 1.0 / (2.0 - lambda);
    let e = 0.5 * (1.0 - alpha);
    2.0 / (1.0 - alpha).abs() * (powf(r - 0.5, e) - powf(0.5, e)).abs()
}

/// `(θ_λ(x), ω_λ(r))`.
pub fn continuity_moduli(lambda: f64, x: f64, r: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    if !(x > 0.0) || !(r >= 1.0) {
        return Err(crate::error::Error::Invalid("moduli need x > 0 and r >= 1"));
    }
    Ok((theta(lambda, x), omega(lambda, r)))
}

/// Self-similar size profile `g_λ(x)`, with `∫ x g = 1`.
pub fn profile_g(lambda: f64, x: f64) -> Result<f64> {
    let s = ScalingConstants::new(lambda)?;
    Ok(g_with(&s, x))
}

pub(crate) fn g_with(s: &ScalingConstants, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    let e = 2.0 - s.lambda;
    let base = if s.lambda == 1.0 { 1.0 } else { powf(x, 1.0 - s.lambda) };
    base / e * exp(-powf(x, e) / (e * e)) / s.z_lambda
}

/// Tail profile `𝒢_λ(x) = Z_λ⁻¹ exp(-α² x^{2-λ})`, with `∫ 𝒢 = 1`.
pub fn profile_tail(lambda: f64, x: f64) -> Result<f64> {
    let s = ScalingConstants::new(lambda)?;
    Ok(tail_with(&s, x))
}

pub(crate) fn tail_with(s: &ScalingConstants, x: f64) -> f64 {
    if x < 0.0 {
        return 0.0;
    }
    exp(-s.alpha * s.alpha * powf(x, 2.0 - s.lambda)) / s.z_lambda
}

/// Scaling solution `γ_λ(t, x) = t^{-α} 𝒢_λ(t^{-α} x)`.
pub fn scaling_solution(lambda: f64, t: f64, x: f64) -> Result<f64> {
    let s = ScalingConstants::new(lambda)?;
    if !(t > 0.0) {
        return Err(crate::error::Error::OutOfRange {
            what: "time must be positive",
            value: t,
        });
    }
    Ok(gamma_with(&s, t, x))
}

pub(crate) fn gamma_with(s: &ScalingConstants, t: f64, x: f64) -> f64 {
    let sc = powf(t, -s.alpha);
    sc * tail_with(s, sc * x)
}
