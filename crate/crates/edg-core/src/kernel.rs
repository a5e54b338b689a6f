//! The continuum problem on the half line: the explicit fundamental solution
//! `Ψ_λ`, its quadrature semigroup, entropy functionals and the `λ = 0`
//! lattice oracle built from Bessel functions of integer order.

use alloc::vec::Vec;

use crate::bessel::{bessel_i_scaled, h_scaled};
use crate::error::{check_lambda, Error, Result};
use crate::math::{exp, floor, ln, ln1p, powf, sqrt, KahanSum, PI};
use crate::profiles::ScalingConstants;
use crate::quad::{gauss_legendre, integrate, QuadGrid};

/// `z(x) = 2/(2-λ) · x^{1-λ/2}`.
pub fn change_of_variables_z(lambda: f64, x: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(x >= 0.0) {
        return Err(Error::OutOfRange {
            what: "x must be nonnegative",
            value: x,
        });
    }
    Ok(z_of(lambda, x))
}

/// Inverse of [`change_of_variables_z`].
pub fn inverse_z(lambda: f64, z: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if !(z >= 0.0) {
        return Err(Error::OutOfRange {
            what: "z must be nonnegative",
            value: z,
        });
    }
    Ok(x_of(lambda, z))
}

fn z_of(lambda: f64, x: f64) -> f64 {
    if lambda == 0.0 {
        return x;
    }
    2.0 / (2.0 - lambda) * powf(x, 1.0 - 0.5 * lambda)
}

fn x_of(lambda: f64, z: f64) -> f64 {
    if lambda == 0.0 {
        return z;
    }
    powf(0.5 * (2.0 - lambda) * z, 2.0 / (2.0 - lambda))
}

/// Evaluator for `Ψ_λ(t, x, y)` with the constants of `λ` precomputed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsiKernel {
    pub constants: ScalingConstants,
    log_pref: f64,
}

impl PsiKernel {
    pub fn new(lambda: f64) -> Result<Self> {
        let s = ScalingConstants::new(lambda)?;
        let log_pref = lambda * s.alpha * ln(2.0 * s.alpha);
        Ok(Self {
            constants: s,
            log_pref,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.constants.lambda
    }

    /// `Ψ_λ(t, x, y)`; arguments are not checked.
    pub fn eval(&self, t: f64, x: f64, y: f64) -> f64 {
        let l = self.constants.lambda;
        if l == 0.0 {
            let d = x - y;
            let s = x + y;
            return (exp(-d * d / (4.0 * t)) + exp(-s * s / (4.0 * t))) / sqrt(4.0 * PI * t);
        }
        let (zx, zy) = (z_of(l, x), z_of(l, y));
        let w = zx * zy / (2.0 * t);
        let d = zx - zy;
        // e^{-(zx²+zy²)/4t} h_c(w) = e^{-(zx-zy)²/4t} · e^{-w} h_c(w)
        let hs = h_scaled(self.constants.c_lambda, w).unwrap_or(0.0);
        if hs == 0.0 {
            return 0.0;
        }
        exp(self.log_pref - self.constants.alpha * ln(2.0 * t) - d * d / (4.0 * t) + ln(hs))
    }
}

/// `Ψ_λ(t, x, y)`, the fundamental solution of the continuum equation.
pub fn psi_kernel(lambda: f64, t: f64, x: f64, y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange {
            what: "time must be positive",
            value: t,
        });
    }
    if !(x >= 0.0 && y >= 0.0) {
        return Err(Error::Invalid("Psi needs x, y >= 0"));
    }
    Ok(PsiKernel::new(lambda)?.eval(t, x, y))
}

/// Breakpoints in `x` at `z(y) + j·√(2t)`, on which `Ψ(t, ·, y)` is unimodal per piece.
fn psi_breaks(lambda: f64, t: f64, y: f64) -> Vec<f64> {
    let zy = z_of(lambda, y);
    let s = sqrt(2.0 * t);
    let mut b = alloc::vec![0.0];
    for j in -8..=40 {
        let z = zy + j as f64 * s;
        if z > 0.0 {
            b.push(x_of(lambda, z));
        }
    }
    b
}

/// `∫_0^∞ Ψ_λ(t, x, y) dx`.
pub fn psi_mass(lambda: f64, t: f64, y: f64) -> Result<f64> {
    let k = PsiKernel::new(lambda)?;
    if !(t > 0.0) || !(y >= 0.0) {
        return Err(Error::Invalid("psi_mass needs t > 0 and y >= 0"));
    }
    let b = psi_breaks(lambda, t, y);
    let mut s = KahanSum::new();
    for w in b.windows(2) {
        s.add(integrate(|x| k.eval(t, x, y), w[0], w[1], 1e-15, 1e-12)?.value);
    }
    Ok(s.value())
}

/// Quadrature set-up for the continuum semigroup.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuumKernelParams {
    pub lambda: f64,
    pub x_max: f64,
    pub panels: usize,
    pub order: usize,
    pub grading: usize,
}

impl ContinuumKernelParams {
    /// Grid with `∫_{X_max}^∞ γ_λ(t, ·) <= 1e-12`.
    pub fn for_time(lambda: f64, t: f64, panels: usize, order: usize) -> Result<Self> {
        let s = ScalingConstants::new(lambda)?;
        if !(t > 0.0) {
            return Err(Error::OutOfRange {
                what: "time must be positive",
                value: t,
            });
        }
        let x1 = profile_cut(&s, 1e-12)?;
        Ok(Self {
            lambda,
            x_max: powf(t, s.alpha) * x1,
            panels,
            order,
            grading: 12,
        })
    }

    pub fn grid(&self) -> Result<QuadGrid> {
        QuadGrid::new(self.x_max, self.panels, self.order, self.grading)
    }
}

/// Smallest `X` (to bisection accuracy) with `∫_X^∞ 𝒢_λ <= eps`.
fn profile_cut(s: &ScalingConstants, eps: f64) -> Result<f64> {
    let p = 2.0 - s.lambda;
    let a2 = s.alpha * s.alpha;
    let tail = |x: f64| -> Result<f64> {
        // ∫_x^∞ e^{-α² σ^p} dσ, split at the point where the exponent gains 60
        let hi = powf(powf(x, p) + 60.0 / a2, 1.0 / p);
        Ok(integrate(|v| exp(-a2 * powf(v, p)), x, hi, 1e-300, 1e-10)?.value / s.z_lambda)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while tail(hi)? > eps {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tail(mid)? > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// `(𝒮_λ(t) g)(x_i) = Σ_j w_j Ψ_λ(t, x_i, y_j) g(y_j)` on the nodes of `grid`.
///
/// Fails when the result at the last node exceeds `1e-10` of its peak, which
/// means the grid is too short for the requested time.
pub fn semigroup_apply(lambda: f64, t: f64, grid: &QuadGrid, g: &[f64]) -> Result<Vec<f64>> {
    if g.len() != grid.len() {
        return Err(Error::Invalid("sample count does not match the grid"));
    }
    if !(t >= 0.0) {
        return Err(Error::OutOfRange {
            what: "time must be nonnegative",
            value: t,
        });
    }
    if t == 0.0 {
        return Ok(g.to_vec());
    }
    let k = PsiKernel::new(lambda)?;
    let n = grid.len();
    let mut out = alloc::vec![0.0; n];
    for (i, oi) in out.iter_mut().enumerate() {
        let x = grid.nodes[i];
        let mut s = KahanSum::new();
        for j in 0..n {
            if g[j] != 0.0 {
                s.add(grid.weights[j] * k.eval(t, x, grid.nodes[j]) * g[j]);
            }
        }
        *oi = s.value();
    }
    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 && out[n - 1].abs() > 1e-10 * peak {
        return Err(Error::Numerical("grid domain too short for this time"));
    }
    Ok(out)
}

/// Duhamel term `∫_0^t 𝒮_λ(t-s) f(s) ds` by Gauss-Legendre in `s`.
pub fn duhamel_apply<F: FnMut(f64) -> Vec<f64>>(
    lambda: f64,
    t: f64,
    grid: &QuadGrid,
    mut f: F,
    time_nodes: usize,
) -> Result<Vec<f64>> {
    let (xs, ws) = gauss_legendre(time_nodes.max(1));
    let mut acc = alloc::vec![0.0; grid.len()];
    for (x, w) in xs.iter().zip(&ws) {
        let s = 0.5 * t * (1.0 + x);
        let fs = f(s);
        let v = semigroup_apply(lambda, t - s, grid, &fs)?;
        for (a, vi) in acc.iter_mut().zip(&v) {
            *a += 0.5 * t * w * vi;
        }
    }
    Ok(acc)
}

/// Relative entropy and Fisher information of a density against `ρ γ_λ(t, ·)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub entropy: f64,
    pub fisher: f64,
    /// Mass of `μ` on the grid.
    pub rho: f64,
    /// Nodes skipped because `μ` is below the floor.
    pub floored_nodes: usize,
    /// Quadrature weight of the skipped nodes.
    pub floored_weight: f64,
}

pub const DENSITY_FLOOR: f64 = 1e-300;

/// `H = ∫ μ ln(μ / ργ)` and `I = ∫ a_λ |∂_x ln(μ / ργ)|² μ` on the grid nodes.
///
/// `ln γ` is evaluated analytically; derivatives come from the panel-local
/// interpolating polynomials.
pub fn relative_entropy_fisher(grid: &QuadGrid, mu: &[f64], lambda: f64, t: f64) -> Result<EntropyReport> {
    let s = ScalingConstants::new(lambda)?;
    if mu.len() != grid.len() {
        return Err(Error::Invalid("sample count does not match the grid"));
    }
    if !(t > 0.0) {
        return Err(Error::OutOfRange {
            what: "time must be positive",
            value: t,
        });
    }
    if mu.iter().any(|v| *v < 0.0 || !v.is_finite()) {
        return Err(Error::Invalid("density must be finite and nonnegative"));
    }
    let rho = grid.integrate(mu);
    if !(rho > 0.0) {
        return Err(Error::Invalid("density has no mass"));
    }
    let sc = powf(t, -s.alpha);
    let p = 2.0 - lambda;
    let ln_g = |x: f64| ln(sc) - ln(s.z_lambda) - s.alpha * s.alpha * powf(sc * x, p);
    let mut floored_nodes = 0;
    let mut floored_weight = 0.0;
    let lf: Vec<f64> = grid
        .nodes
        .iter()
        .zip(mu)
        .map(|(&x, &m)| ln(m.max(DENSITY_FLOOR)) - ln(rho) - ln_g(x))
        .collect();
    let dlf = grid.differentiate(&lf);
    let (mut h, mut fi) = (KahanSum::new(), KahanSum::new());
    for i in 0..grid.len() {
        if mu[i] < DENSITY_FLOOR {
            floored_nodes += 1;
            floored_weight += grid.weights[i];
            continue;
        }
        let w = grid.weights[i] * mu[i];
        h.add(w * lf[i]);
        fi.add(w * powf(grid.nodes[i], lambda) * dlf[i] * dlf[i]);
    }
    Ok(EntropyReport {
        entropy: h.value(),
        fisher: fi.value(),
        rho,
        floored_nodes,
        floored_weight,
    })
}

/// Constants of the Bobkov-Götze criterion for `μ = e^{-α² x^{2-λ}} dx`,
/// `ν = x^λ μ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BobkovGotze {
    pub b_minus: f64,
    pub b_plus: f64,
    /// `4 max(B_-, B_+)`.
    pub c_lsi_bound: f64,
    pub argmax_minus: f64,
    pub argmax_plus: f64,
}

struct BgFunctional {
    lambda: f64,
    a2: f64,
    p: f64,
}

impl BgFunctional {
    fn ln_term(m: f64) -> f64 {
        // ln(1 + e²/m)
        ln1p(crate::math::E * crate::math::E / m)
    }

    /// `μ([0,x]) ln(1 + e²/μ([0,x])) ∫_x^1 dσ/ν`, `0 < x < 1`.
    fn minus(&self, x: f64) -> Result<f64> {
        let (a2, p, l) = (self.a2, self.p, self.lambda);
        let m = integrate(|s| exp(-a2 * powf(s, p)), 0.0, x, 1e-300, 1e-11)?.value;
        let j = integrate(|u| exp((1.0 - l) * u + a2 * exp(p * u)), ln(x), 0.0, 1e-300, 1e-11)?.value;
        Ok(m * Self::ln_term(m) * j)
    }

    /// `μ([x,∞)) ln(1 + e²/μ([x,∞))) ∫_1^x dσ/ν`, `x > 1`, with the
    /// exponentials `e^{∓α² x^p}` cancelled analytically.
    fn plus(&self, x: f64) -> Result<f64> {
        let (a2, p, l) = (self.a2, self.p, self.lambda);
        let xp = powf(x, p);
        let hi = powf(xp + 60.0 / a2, 1.0 / p);
        let m_red = integrate(|s| exp(-a2 * (powf(s, p) - xp)), x, hi, 1e-300, 1e-11)?.value;
        let j_red = integrate(|s| powf(s, -l) * exp(a2 * (powf(s, p) - xp)), 1.0, x, 1e-300, 1e-11)?.value;
        let ln_m = ln(m_red) - a2 * xp;
        // ln(1 + e²/m) = ln(e² + m) - ln m
        let ln_term = if ln_m < -30.0 {
            2.0 - ln_m
        } else {
            Self::ln_term(exp(ln_m))
        };
        Ok(m_red * j_red * ln_term)
    }
}

/// Supremum of `f` over a log-spaced grid on `[lo, hi]`, refined by golden
/// section around the best node. Fails when the best node is the outer edge.
fn sup_on_grid<F: Fn(f64) -> Result<f64>>(f: F, lo: f64, hi: f64, points: usize, edge_is_hi: bool) -> Result<(f64, f64)> {
    let n = points.max(8);
    let (llo, lhi) = (ln(lo), ln(hi));
    let xs: Vec<f64> = (0..n).map(|i| exp(llo + (lhi - llo) * i as f64 / (n - 1) as f64)).collect();
    let mut best = (0usize, f64::NEG_INFINITY);
    for (i, &x) in xs.iter().enumerate() {
        let v = f(x)?;
        if v > best.1 {
            best = (i, v);
        }
    }
    let edge = if edge_is_hi { n - 1 } else { 0 };
    if best.0 == edge {
        return Err(Error::Numerical("supremum reached the grid edge"));
    }
    let (mut a, mut b) = (ln(xs[best.0.saturating_sub(1)]), ln(xs[(best.0 + 1).min(n - 1)]));
    let g = 0.5 * (sqrt(5.0) - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(exp(c))?, f(exp(d))?);
    for _ in 0..60 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(exp(c))?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(exp(d))?;
        }
        if b - a < 1e-10 {
            break;
        }
    }
    let (x, v) = if fc > fd { (exp(c), fc) } else { (exp(d), fd) };
    if v >= best.1 {
        Ok((v, x))
    } else {
        Ok((best.1, xs[best.0]))
    }
}

/// `B_±` on log-spaced grids with `points` nodes each.
pub fn bobkov_gotze_constants_with(lambda: f64, points: usize) -> Result<BobkovGotze> {
    let s = ScalingConstants::new(lambda)?;
    let f = BgFunctional {
        lambda,
        a2: s.alpha * s.alpha,
        p: 2.0 - lambda,
    };
    let (b_minus, argmax_minus) = sup_on_grid(|x| f.minus(x), 1e-12, 1.0 - 1e-9, points, false)?;
    let (b_plus, argmax_plus) = sup_on_grid(|x| f.plus(x), 1.0 + 1e-9, 1e3, points, true)?;
    Ok(BobkovGotze {
        b_minus,
        b_plus,
        c_lsi_bound: 4.0 * b_minus.max(b_plus),
        argmax_minus,
        argmax_plus,
    })
}

/// [`bobkov_gotze_constants_with`] on 200-point grids.
pub fn bobkov_gotze_constants(lambda: f64) -> Result<BobkovGotze> {
    bobkov_gotze_constants_with(lambda, 200)
}

/// Whole-lattice heat kernel `φ(t, x) = e^{-2t} I_x(2t)`; integer `x` of
/// either sign, or real `x >= -1/2`.
pub fn phi(t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::OutOfRange {
            what: "time must be positive",
            value: t,
        });
    }
    let nu = if floor(x) == x { x.abs() } else { x };
    bessel_i_scaled(nu, 2.0 * t)
}

/// `ψ(t, x, l) = φ(t, x-l) - φ(t, x+l)`, the kernel with absorption at 0.
pub fn psi_reflection(t: f64, x: f64, l: usize) -> Result<f64> {
    Ok(phi(t, x - l as f64)? - phi(t, x + l as f64)?)
}

/// `ψ(t, x, l) = t⁻¹ Σ_{m=1}^l (x-l+2m-1) φ(t, x-l+2m-1)`.
pub fn psi_expansion(t: f64, x: f64, l: usize) -> Result<f64> {
    let mut s = KahanSum::new();
    for m in 1..=l {
        let o = x - l as f64 + (2 * m) as f64 - 1.0;
        s.add(o * phi(t, o)?);
    }
    Ok(s.value() / t)
}

/// `ψ(t, k, l)` for the `λ = 0` lattice problem.
pub fn discrete_heat_oracle_lambda0(t: f64, k: i64, l: usize) -> Result<f64> {
    if l == 0 {
        return Err(Error::Invalid("source site must be >= 1"));
    }
    psi_reflection(t, k as f64, l)
}

/// `Σ_{k∈ℤ} φ(t, k)` over `|k| <= 4t + 40√t`, stopping once terms fall below `1e-20`.
pub fn phi_total_mass(t: f64) -> Result<f64> {
    let kmax = (4.0 * t + 40.0 * sqrt(t)) as i64;
    let mut s = KahanSum::new();
    s.add(phi(t, 0.0)?);
    for k in 1..=kmax {
        let v = phi(t, k as f64)?;
        s.add(2.0 * v);
        if v < 1e-20 && k as f64 > 2.0 * t {
            break;
        }
    }
    Ok(s.value())
}

/// `u(t, x) = Σ_l ψ(t, x, l) c_l` for data `c_1, c_2, ...` (`c[0]` is `c_1`).
pub fn lambda0_solution(t: f64, x: f64, c: &[f64]) -> Result<f64> {
    let mut s = KahanSum::new();
    for (i, &cl) in c.iter().enumerate() {
        if cl != 0.0 {
            s.add(cl * psi_reflection(t, x, i + 1)?);
        }
    }
    Ok(s.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_map_examples() {
        assert_eq!(change_of_variables_z(0.0, 3.3).unwrap(), 3.3);
        assert!((change_of_variables_z(1.0, 4.0).unwrap() - 4.0).abs() < 1e-15);
        assert!(change_of_variables_z(1.0, -1.0).is_err());
    }

    #[test]
    fn psi_at_origin_lambda0() {
        let v = psi_kernel(0.0, 1.0, 0.0, 0.0).unwrap();
        assert!((v - 1.0 / sqrt(PI)).abs() < 1e-15);
        assert!(psi_kernel(0.5, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn phi_examples() {
        assert!((phi(1e-8, 0.0).unwrap() - 1.0).abs() < 1e-7);
        assert!(phi(1e-8, 3.0).unwrap() < 1e-20);
        assert_eq!(discrete_heat_oracle_lambda0(2.0, 0, 3).unwrap(), 0.0);
    }
}
