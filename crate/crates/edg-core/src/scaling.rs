//! Passage from the lattice to the half line: the embedding `ι_ε` and
//! projection `π_ε`, rescaled solutions, the replacement defect, and the
//! estimators for exponents, moments and the time change.
//!
//! Cells have width `h = ε^α`; cell `k >= 1` is `[(k-1)h, kh)`.

use alloc::vec::Vec;

use crate::edg::TimeChangeMap;
use crate::error::{check_lambda, Error, Result};
use crate::heat::{FieldKind, Trajectory};
use crate::lattice;
use crate::math::{floor, ln, powf, sqrt, KahanSum};
use crate::profiles::{g_with, tail_with, ScalingConstants};
use crate::quad::{gauss_legendre, integrate};

fn check_eps(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::OutOfRange {
            what: "epsilon must lie in (0, 1]",
            value: epsilon,
        });
    }
    Ok(())
}

/// Step function `x ↦ ε^{-α} U(⌊ε^{-α} x⌋ + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledField {
    pub epsilon: f64,
    pub alpha: f64,
    pub source: Vec<f64>,
}

impl RescaledField {
    /// Cell width `ε^α`.
    pub fn cell(&self) -> f64 {
        powf(self.epsilon, self.alpha)
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let h = self.cell();
        let k = floor(x / h) as usize;
        self.source.get(k).map_or(0.0, |u| u / h)
    }

    /// `∫ ι_ε U dx`, equal to `Σ U(k)`.
    pub fn integral(&self) -> f64 {
        crate::math::ksum(self.source.iter().copied())
    }

    /// End of the support, `N ε^α`.
    pub fn x_max(&self) -> f64 {
        self.source.len() as f64 * self.cell()
    }
}

/// `ι_ε U` for `U(1), U(2), ...` stored from index 0.
pub fn iota_embed(u: &[f64], lambda: f64, epsilon: f64) -> Result<RescaledField> {
    check_eps(epsilon)?;
    let s = ScalingConstants::new(lambda)?;
    Ok(RescaledField {
        epsilon,
        alpha: s.alpha,
        source: u.to_vec(),
    })
}

/// `(π_ε f)(k) = ∫_{(k-1)h}^{kh} f dx` for `k = 1..n`, by an 8-point
/// Gauss-Legendre rule per cell.
pub fn pi_project_density<F: Fn(f64) -> f64>(f: F, lambda: f64, epsilon: f64, n: usize) -> Result<Vec<f64>> {
    check_eps(epsilon)?;
    let s = ScalingConstants::new(lambda)?;
    let h = powf(epsilon, s.alpha);
    let (xs, ws) = gauss_legendre(8);
    Ok((0..n)
        .map(|k| {
            let c = (k as f64 + 0.5) * h;
            let mut acc = KahanSum::new();
            for (x, w) in xs.iter().zip(&ws) {
                acc.add(0.5 * h * w * f(c + 0.5 * h * x));
            }
            acc.value()
        })
        .collect())
}

/// `π_ε` of a point measure; atoms beyond cell `n` are dropped.
pub fn pi_project_atoms(atoms: &[(f64, f64)], lambda: f64, epsilon: f64, n: usize) -> Result<Vec<f64>> {
    check_eps(epsilon)?;
    let s = ScalingConstants::new(lambda)?;
    let h = powf(epsilon, s.alpha);
    let mut out = alloc::vec![0.0; n];
    for &(x, w) in atoms {
        if x < 0.0 {
            return Err(Error::Invalid("atoms must lie on the half line"));
        }
        let k = floor(x / h) as usize;
        if k < n {
            out[k] += w;
        }
    }
    Ok(out)
}

/// `π_ε` of a step function, by exact overlap of cells.
///
/// With matching `ε` this returns the source, so `π_ε ∘ ι_ε = id` holds exactly.
pub fn pi_project_step(field: &RescaledField, lambda: f64, epsilon: f64, n: usize) -> Result<Vec<f64>> {
    check_eps(epsilon)?;
    let s = ScalingConstants::new(lambda)?;
    if epsilon == field.epsilon && s.alpha == field.alpha {
        let mut out = field.source.clone();
        out.resize(n, 0.0);
        return Ok(out);
    }
    let h = powf(epsilon, s.alpha);
    let hs = field.cell();
    let mut out = alloc::vec![0.0; n];
    for (j, &u) in field.source.iter().enumerate() {
        let (a, b) = (j as f64 * hs, (j + 1) as f64 * hs);
        let k0 = floor(a / h) as usize;
        let mut k = k0;
        while k < n && (k as f64) * h < b {
            let lo = a.max(k as f64 * h);
            let hi = b.min((k + 1) as f64 * h);
            if hi > lo {
                out[k] += u / hs * (hi - lo);
            }
            k += 1;
        }
    }
    Ok(out)
}

/// `Û(t, x) = t^α U(t, ⌊t^α x⌋ + 1)` at the points `xs`.
pub fn rescaled_solution(u: &[f64], t: f64, lambda: f64, xs: &[f64]) -> Result<Vec<f64>> {
    let s = ScalingConstants::new(lambda)?;
    if !(t > 0.0) {
        return Err(Error::OutOfRange {
            what: "time must be positive",
            value: t,
        });
    }
    let sc = powf(t, s.alpha);
    let n = u.len();
    xs.iter()
        .map(|&x| {
            if x < 0.0 {
                return Err(Error::Invalid("rescaled field is defined on x >= 0"));
            }
            let k = floor(sc * x) as usize;
            if k >= n {
                return Err(Error::OutOfRange {
                    what: "x lies beyond the lattice truncation N t^{-alpha}",
                    value: x,
                });
            }
            Ok(sc * u[k])
        })
        .collect()
}

/// `sup_{x∈[δ, X]} |Û(t, x) - ρ 𝒢_λ(x)|`, exact for the step function `Û`
/// because `𝒢_λ` is monotone on each cell.
pub fn self_similarity_error(u: &[f64], t: f64, lambda: f64, rho: f64, window: (f64, f64)) -> Result<f64> {
    let s = ScalingConstants::new(lambda)?;
    let (lo, hi) = window;
    if !(t > 0.0) || !(lo >= 0.0 && hi > lo) {
        return Err(Error::Invalid("self-similarity error needs t > 0 and 0 <= delta < X"));
    }
    if lambda >= 1.0 && lo == 0.0 {
        return Err(Error::Invalid("for lambda >= 1 the window must stay away from 0"));
    }
    let sc = powf(t, s.alpha);
    let h = 1.0 / sc;
    let k_lo = floor(lo * sc) as usize;
    let k_hi = floor(hi * sc) as usize;
    if k_hi >= u.len() {
        return Err(Error::OutOfRange {
            what: "window extends beyond the lattice truncation",
            value: hi,
        });
    }
    let mut worst = 0.0f64;
    for k in k_lo..=k_hi {
        let a = (k as f64 * h).max(lo);
        let b = ((k + 1) as f64 * h).min(hi);
        if b < a {
            continue;
        }
        let v = sc * u[k];
        for x in [a, b] {
            worst = worst.max((v - rho * tail_with(&s, x)).abs());
        }
    }
    Ok(worst)
}

/// A test function with derivatives up to third order.
pub trait SmoothFunction {
    fn value(&self, x: f64) -> f64;
    fn d1(&self, x: f64) -> f64;
    fn d2(&self, x: f64) -> f64;
    fn d3(&self, x: f64) -> f64;
}

/// `e^{-(x/w)²}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBump {
    pub width: f64,
}

impl SmoothFunction for GaussianBump {
    fn value(&self, x: f64) -> f64 {
        let y = x / self.width;
        crate::math::exp(-y * y)
    }
    fn d1(&self, x: f64) -> f64 {
        let y = x / self.width;
        -2.0 * y / self.width * self.value(x)
    }
    fn d2(&self, x: f64) -> f64 {
        let y = x / self.width;
        (4.0 * y * y - 2.0) / (self.width * self.width) * self.value(x)
    }
    fn d3(&self, x: f64) -> f64 {
        let y = x / self.width;
        (12.0 * y - 8.0 * y * y * y) / (self.width * self.width * self.width) * self.value(x)
    }
}

/// `1 / (1 + (x/w)²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RationalBump {
    pub width: f64,
}

impl SmoothFunction for RationalBump {
    fn value(&self, x: f64) -> f64 {
        let y = x / self.width;
        1.0 / (1.0 + y * y)
    }
    fn d1(&self, x: f64) -> f64 {
        let y = x / self.width;
        let q = 1.0 + y * y;
        -2.0 * y / (self.width * q * q)
    }
    fn d2(&self, x: f64) -> f64 {
        let y = x / self.width;
        let q = 1.0 + y * y;
        (6.0 * y * y - 2.0) / (self.width * self.width * q * q * q)
    }
    fn d3(&self, x: f64) -> f64 {
        let y = x / self.width;
        let q = 1.0 + y * y;
        24.0 * y * (1.0 - y * y) / (self.width * self.width * self.width * q * q * q * q)
    }
}

/// `ℒ_λ φ = ∂_x(x^λ ∂_x φ)` at `x > 0`.
pub fn continuum_generator<F: SmoothFunction + ?Sized>(phi: &F, lambda: f64, x: f64) -> f64 {
    let lead = if lambda == 0.0 { 0.0 } else { lambda * powf(x, lambda - 1.0) * phi.d1(x) };
    lead + powf(x, lambda) * phi.d2(x)
}

/// Replacement defect on cells `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectTable {
    pub epsilon: f64,
    /// `R_ε(φ, k)` for `k = 1..=n` (index `k - 1`).
    pub defect: Vec<f64>,
    /// `R_ε / (ε^α ∫_{(k-2)h}^{(k+1)h} (x^{λ-1}|φ''| + x^λ|φ'''|))` for `k >= 3`.
    pub normalized: Vec<Option<f64>>,
    /// `‖ε^{-1} L_λ π_ε φ‖_∞`.
    pub sup_lattice: f64,
    /// `‖ℒ_λ φ‖_∞` over the cell quadrature nodes.
    pub sup_continuum: f64,
}

impl DefectTable {
    /// `‖ε^{-1} L_λ π_ε φ‖_∞ / (‖ℒ_λ φ‖_∞ ε^α)`.
    pub fn lattice_constant(&self, lambda: f64) -> f64 {
        let alpha = 1.0 / (2.0 - lambda);
        self.sup_lattice / (self.sup_continuum * powf(self.epsilon, alpha))
    }

    pub fn max_normalized(&self) -> f64 {
        self.normalized.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `R_ε(φ, k) = ε^{-1} L_λ π_ε φ(k) - π_ε ℒ_λ φ(k)` on `[0, x_max]`.
///
/// Fails when `a_λ ∂_x φ` does not vanish linearly at the origin.
pub fn replacement_defect<F: SmoothFunction + ?Sized>(
    phi: &F,
    lambda: f64,
    epsilon: f64,
    x_max: f64,
) -> Result<DefectTable> {
    check_eps(epsilon)?;
    check_lambda(lambda)?;
    let alpha = 1.0 / (2.0 - lambda);
    let h = powf(epsilon, alpha);
    // |a φ'(x)| / x must stay bounded as x → 0
    let ratio = |x: f64| powf(x, lambda) * phi.d1(x).abs() / x;
    let (r_ref, r_small) = (ratio(1e-2).max(ratio(1e-3)), ratio(1e-8));
    if r_small > 10.0 * r_ref + 1e-12 {
        return Err(Error::Invalid("a_lambda d_x phi is not Lipschitz with zero value at 0"));
    }
    let n = (x_max / h) as usize;
    if n < 4 {
        return Err(Error::Invalid("x_max must cover at least four cells"));
    }
    let p = pi_project_density(|x| phi.value(x), lambda, epsilon, n)?;
    let lp = lattice::apply_l_lambda(lambda, &p)?;
    let q = pi_project_density(|x| continuum_generator(phi, lambda, x), lambda, epsilon, n)?;
    let (xs, ws) = gauss_legendre(8);
    let weight_int = |a: f64, b: f64| {
        let mut acc = KahanSum::new();
        let (c, r) = (0.5 * (a + b), 0.5 * (b - a));
        for (x, w) in xs.iter().zip(&ws) {
            let y = c + r * x;
            acc.add(r * w * (powf(y, lambda - 1.0) * phi.d2(y).abs() + powf(y, lambda) * phi.d3(y).abs()));
        }
        acc.value()
    };
    let mut sup_cont = 0.0f64;
    for k in 0..n {
        for x in &xs {
            let y = (k as f64 + 0.5 + 0.5 * x) * h;
            sup_cont = sup_cont.max(continuum_generator(phi, lambda, y).abs());
        }
    }
    let scale = 1.0 / epsilon;
    let mut defect = Vec::with_capacity(n);
    let mut normalized = Vec::with_capacity(n);
    let mut sup_lat = 0.0f64;
    // the last cell carries the truncation flux; drop it
    for k in 1..n {
        let lv = scale * lp[k - 1];
        sup_lat = sup_lat.max(lv.abs());
        let r = lv - q[k - 1];
        defect.push(r);
        if k >= 3 {
            let d = h * (weight_int((k - 2) as f64 * h, (k - 1) as f64 * h)
                + weight_int((k - 1) as f64 * h, k as f64 * h)
                + weight_int(k as f64 * h, (k + 1) as f64 * h));
            normalized.push((d > 1e-300).then(|| r / d));
        } else {
            normalized.push(None);
        }
    }
    Ok(DefectTable {
        epsilon,
        defect,
        normalized,
        sup_lattice: sup_lat,
        sup_continuum: sup_cont,
    })
}

/// Ordinary least squares `y = a + b x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub slope_stderr: f64,
    pub samples: usize,
}

pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 3 || ys.len() != n {
        return Err(Error::Invalid("linear fit needs at least three paired samples"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    if !(sxx > 0.0) {
        return Err(Error::Invalid("regressor has no spread"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| {
        let r = y - intercept - slope * x;
        r * r
    }).sum();
    let r2 = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let slope_stderr = sqrt(sse / ((nf - 2.0).max(1.0) * sxx));
    Ok(LinearFit {
        slope,
        intercept,
        r2,
        slope_stderr,
        samples: n,
    })
}

/// Which law a growth series is fitted against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitRegime {
    /// `y ~ C t^b`
    Algebraic,
    /// `y ~ C e^{b t}`
    Exponential,
    /// `y ~ C (t* - t)^b`
    Blowup { t_star: f64 },
}

impl FitRegime {
    pub fn label(&self) -> &'static str {
        match self {
            FitRegime::Algebraic => "algebraic",
            FitRegime::Exponential => "exponential",
            FitRegime::Blowup { .. } => "blowup",
        }
    }
}

/// Exponent fit with window and sensitivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub exponent: f64,
    /// Half-width of the 95% interval from the slope standard error.
    pub confidence: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub regime: FitRegime,
    /// `C` in the fitted law.
    pub prefactor: f64,
    pub samples: usize,
    /// Exponents on the half-size and double-size windows, when those exist.
    pub sensitivity: (Option<f64>, Option<f64>),
}

pub const MIN_FIT_SAMPLES: usize = 20;

/// Window of the regressor: `Default` picks the final decade (algebraic and
/// blow-up) or the second half (exponential).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitWindow {
    Default,
    /// Explicit `[t_lo, t_hi]` in the original time variable.
    Range(f64, f64),
}

fn regress(ts: &[f64], ys: &[f64], regime: FitRegime, lo: f64, hi: f64) -> Result<(LinearFit, usize)> {
    let mut xs = Vec::new();
    let mut zs = Vec::new();
    for (&t, &y) in ts.iter().zip(ys) {
        if t < lo || t > hi || !(y > 0.0) {
            continue;
        }
        let x = match regime {
            FitRegime::Algebraic => {
                if !(t > 0.0) {
                    continue;
                }
                ln(t)
            }
            FitRegime::Exponential => t,
            FitRegime::Blowup { t_star } => {
                if !(t < t_star) {
                    continue;
                }
                ln(t_star - t)
            }
        };
        xs.push(x);
        zs.push(ln(y));
    }
    let n = xs.len();
    Ok((linear_fit(&xs, &zs)?, n))
}

/// Default window scaled by `factor` (1 = default, 0.5 = half, 2 = double).
fn default_window(ts: &[f64], regime: FitRegime, factor: f64) -> (f64, f64) {
    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    match regime {
        FitRegime::Algebraic => (t1 / powf(10.0, factor), t1),
        FitRegime::Exponential => (t1 - 0.5 * factor * (t1 - t0), t1),
        FitRegime::Blowup { t_star } => {
            let d = t_star - t1;
            (t_star - d * powf(10.0, factor), t1)
        }
    }
}

fn span_ok(ts: &[f64], regime: FitRegime) -> bool {
    let (t0, t1) = (ts[0], ts[ts.len() - 1]);
    match regime {
        FitRegime::Algebraic => t0 > 0.0 && t1 >= 10.0 * t0,
        FitRegime::Exponential => t1 > t0,
        FitRegime::Blowup { t_star } => t1 < t_star && t_star - t0 >= 10.0 * (t_star - t1),
    }
}

/// Fit a growth law to `(t, y)` samples (sorted by `t`).
pub fn fit_growth(ts: &[f64], ys: &[f64], regime: FitRegime, window: FitWindow) -> Result<FitReport> {
    if ts.len() != ys.len() || ts.len() < MIN_FIT_SAMPLES {
        return Err(Error::Invalid("fit needs at least 20 samples"));
    }
    if ts.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("fit samples must be sorted by time"));
    }
    if !span_ok(ts, regime) {
        return Err(Error::Invalid("samples do not span a decade in the regressor"));
    }
    let (lo, hi) = match window {
        FitWindow::Default => default_window(ts, regime, 1.0),
        FitWindow::Range(a, b) => (a, b),
    };
    let (fit, n) = regress(ts, ys, regime, lo, hi)?;
    if n < MIN_FIT_SAMPLES {
        return Err(Error::Invalid("fit window holds fewer than 20 samples"));
    }
    let sens = |f: f64| -> Option<f64> {
        let (a, b) = match window {
            FitWindow::Default => default_window(ts, regime, f),
            FitWindow::Range(a, b) => match regime {
                FitRegime::Algebraic => (b * powf(a / b, f), b),
                FitRegime::Exponential => (b - f * (b - a), b),
                FitRegime::Blowup { t_star } => (t_star - (t_star - b) * powf((t_star - a) / (t_star - b), f), b),
            },
        };
        regress(ts, ys, regime, a, b)
            .ok()
            .filter(|(_, m)| *m >= 3)
            .map(|(r, _)| r.slope)
    };
    Ok(FitReport {
        exponent: fit.slope,
        confidence: 1.96 * fit.slope_stderr,
        window: (lo, hi),
        r2: fit.r2,
        regime,
        prefactor: crate::math::exp(fit.intercept),
        samples: n,
        sensitivity: (sens(0.5), sens(2.0)),
    })
}

/// Fit `ℓ(t)` against the law of `regime`.
pub fn fit_coarsening_exponent(ts: &[f64], ell: &[f64], regime: FitRegime) -> Result<FitReport> {
    fit_growth(ts, ell, regime, FitWindow::Default)
}

/// Default regime for `λ`, using `t_star` in the gelation case.
pub fn regime_for(lambda: f64, t_star: Option<f64>) -> Result<FitRegime> {
    let s = ScalingConstants::new(lambda)?;
    Ok(match s.regime() {
        crate::Regime::Coarsening => FitRegime::Algebraic,
        crate::Regime::Exponential => FitRegime::Exponential,
        crate::Regime::Gelation => FitRegime::Blowup {
            t_star: t_star.ok_or(Error::Invalid("blow-up fit needs an estimate of t*"))?,
        },
    })
}

/// Fit `τ(t)` from a time-change map; blow-up fits use the map's `t*` estimate.
pub fn tau_asymptotics(map: &TimeChangeMap, lambda: f64) -> Result<FitReport> {
    let regime = regime_for(lambda, map.gel_time_estimate)?;
    let ts: Vec<f64> = map.t_of_tau.iter().skip(1).copied().collect();
    let taus: Vec<f64> = map.tau_grid.iter().skip(1).copied().collect();
    fit_growth(&ts, &taus, regime, FitWindow::Default)
}

/// Rescaled moment `t^{α(1-ν)} M_ν[u](t)` against its limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentAsymptotics {
    pub nu: f64,
    /// Value at the final output time.
    pub estimate: f64,
    /// Value one decade earlier (nearest output time).
    pub previous: f64,
    /// `ρ ∫ x^ν g_λ` for `ν <= 1`.
    pub target: Option<f64>,
    /// Whether the last two decades agree to 5%.
    pub converged: bool,
}

/// `ρ ∫_0^∞ x^ν g_λ(x) dx`.
pub fn moment_target(lambda: f64, nu: f64, rho: f64) -> Result<f64> {
    let s = ScalingConstants::new(lambda)?;
    if nu == 1.0 {
        return Ok(rho);
    }
    let f = |x: f64| if x == 0.0 { 0.0 } else { powf(x, nu) * g_with(&s, x) };
    let mut acc = KahanSum::new();
    let breaks = [0.0, 1e-8, 1e-4, 0.1, 1.0, 5.0, 20.0, 80.0, 400.0];
    for w in breaks.windows(2) {
        acc.add(integrate(f, w[0], w[1], 1e-16, 1e-13)?.value);
    }
    Ok(rho * acc.value())
}

/// Rescaled moment limit from a density trajectory of the linear flow.
pub fn moment_asymptotics(traj: &Trajectory, nu: f64, rho: f64) -> Result<MomentAsymptotics> {
    let s = ScalingConstants::new(traj.lambda)?;
    if traj.kind != FieldKind::Density {
        return Err(Error::Invalid("moment asymptotics need a density trajectory"));
    }
    if !(nu >= 0.0 && nu <= 1.0_f64.max(traj.lambda)) {
        return Err(Error::OutOfRange {
            what: "moment order must lie in [0, max(1, lambda)]",
            value: nu,
        });
    }
    let n = traj.times.len();
    if n < 2 {
        return Err(Error::Invalid("trajectory needs at least two output times"));
    }
    let scaled = |i: usize| powf(traj.times[i], s.alpha * (1.0 - nu)) * lattice::moment(&traj.fields[i], nu);
    let t_end = traj.times[n - 1];
    let j = (0..n - 1)
        .min_by(|&a, &b| {
            let da = (ln(traj.times[a]) - ln(t_end / 10.0)).abs();
            let db = (ln(traj.times[b]) - ln(t_end / 10.0)).abs();
            da.partial_cmp(&db).unwrap_or(core::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    let estimate = scaled(n - 1);
    let previous = scaled(j);
    let target = if nu <= 1.0 { Some(moment_target(traj.lambda, nu, rho)?) } else { None };
    Ok(MomentAsymptotics {
        nu,
        estimate,
        previous,
        target,
        converged: ((estimate - previous) / estimate).abs() < 0.05,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iota_of_indicator() {
        let f = iota_embed(&[1.0, 0.0, 0.0], 0.0, 1.0).unwrap();
        assert_eq!(f.eval(0.0), 1.0);
        assert_eq!(f.eval(0.999), 1.0);
        assert_eq!(f.eval(1.0), 0.0);
        assert!(iota_embed(&[1.0], 0.0, 0.0).is_err());
        assert!(iota_embed(&[1.0], 0.0, 1.5).is_err());
    }

    #[test]
    fn synthetic_power_law() {
        let ts: Vec<f64> = (0..60).map(|i| powf(10.0, 1.0 + 2.0 * i as f64 / 59.0)).collect();
        let ys: Vec<f64> = ts.iter().map(|t| powf(*t, 1.0 / 3.0)).collect();
        let r = fit_coarsening_exponent(&ts, &ys, FitRegime::Algebraic).unwrap();
        assert!((r.exponent - 1.0 / 3.0).abs() < 1e-6);
        assert!((r.r2 - 1.0).abs() < 1e-12);
        assert!(fit_coarsening_exponent(&ts[..10], &ys[..10], FitRegime::Algebraic).is_err());
    }

    #[test]
    fn constant_has_no_defect() {
        struct One;
        impl SmoothFunction for One {
            fn value(&self, _: f64) -> f64 {
                1.0
            }
            fn d1(&self, _: f64) -> f64 {
                0.0
            }
            fn d2(&self, _: f64) -> f64 {
                0.0
            }
            fn d3(&self, _: f64) -> f64 {
                0.0
            }
        }
        let t = replacement_defect(&One, 1.0, 1.0 / 64.0, 4.0).unwrap();
        assert!(t.defect.iter().all(|&r| r.abs() < 1e-12));
    }

    #[test]
    fn rejects_non_lipschitz_flux() {
        struct Root;
        impl SmoothFunction for Root {
            fn value(&self, x: f64) -> f64 {
                sqrt(x)
            }
            fn d1(&self, x: f64) -> f64 {
                0.5 / sqrt(x)
            }
            fn d2(&self, x: f64) -> f64 {
                -0.25 / (x * sqrt(x))
            }
            fn d3(&self, x: f64) -> f64 {
                0.375 / (x * x * sqrt(x))
            }
        }
        assert!(replacement_defect(&Root, 0.0, 1.0 / 16.0, 2.0).is_err());
    }
}
