//! The exchange-driven growth system with product kernel `a_λ(k) a_λ(l)`:
//! direct integration, the time change to the linear flow, coarsening
//! observables and blow-up detection.
//!
//! Truncation at `N` suppresses every exchange that would create a cluster
//! of size `N + 1`, together with the matching donation, so volume and mass
//! are conserved by each remaining event.

use alloc::vec::Vec;

use crate::error::{check_lambda, Error, Result};
use crate::heat::{next_dt, HeatRunConfig, NpStepper};
use crate::lattice;
use crate::math::{ipow, ksum, ln, powf, KahanSum};

/// Tolerance on the normalisation `Σ c = 1` and `Σ k c = ρ` of inputs.
pub const NORMALISATION_TOL: f64 = 1e-10;

/// Cluster densities `c_0..c_N`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    pub lambda: f64,
    pub rho: f64,
    pub c: Vec<f64>,
}

impl ClusterState {
    /// Checks nonnegativity, `Σ c = 1` and `Σ k c = ρ`; data is never rescaled.
    pub fn new(lambda: f64, rho: f64, c: Vec<f64>) -> Result<Self> {
        check_lambda(lambda)?;
        if !(rho > 0.0) || !rho.is_finite() {
            return Err(Error::OutOfRange {
                what: "rho must be positive",
                value: rho,
            });
        }
        if c.len() < 3 {
            return Err(Error::Invalid("cluster state needs N >= 2"));
        }
        if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid("cluster densities must be finite and nonnegative"));
        }
        let vol = ksum(c.iter().copied());
        if (vol - 1.0).abs() > NORMALISATION_TOL {
            return Err(Error::OutOfRange {
                what: "sum of c_k must equal 1",
                value: vol,
            });
        }
        let mass = ksum(c.iter().enumerate().map(|(k, v)| k as f64 * v));
        if (mass - rho).abs() > NORMALISATION_TOL * rho.max(1.0) {
            return Err(Error::OutOfRange {
                what: "sum of k c_k must equal rho",
                value: mass,
            });
        }
        Ok(Self { lambda, rho, c })
    }

    /// `c_1 = ρ`, `c_0 = 1 - ρ` (needs `ρ <= 1`).
    pub fn monodisperse(lambda: f64, rho: f64, n: usize) -> Result<Self> {
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::OutOfRange {
                what: "monodisperse data needs 0 < rho <= 1",
                value: rho,
            });
        }
        let mut c = alloc::vec![0.0; n + 1];
        c[0] = 1.0 - rho;
        c[1] = rho;
        Self::new(lambda, rho, c)
    }

    /// `c_k = A q^{k-1}` for `1 <= k <= N`, with `A` fixing the mass and `c_0`
    /// the volume.
    pub fn geometric(lambda: f64, rho: f64, q: f64, n: usize) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::OutOfRange {
                what: "geometric ratio must lie in (0, 1)",
                value: q,
            });
        }
        let mut p = 1.0;
        let (mut s0, mut s1) = (KahanSum::new(), KahanSum::new());
        let mut w = alloc::vec![0.0; n + 1];
        for (k, wk) in w.iter_mut().enumerate().skip(1) {
            *wk = p;
            s0.add(p);
            s1.add(k as f64 * p);
            p *= q;
        }
        let a = rho / s1.value();
        let c0 = 1.0 - a * s0.value();
        if c0 < 0.0 {
            return Err(Error::Invalid("geometric data with this rho and q has c_0 < 0"));
        }
        let mut c: Vec<f64> = w.iter().map(|v| a * v).collect();
        c[0] = c0;
        Self::new(lambda, rho, c)
    }

    pub fn n(&self) -> usize {
        self.c.len() - 1
    }

    /// `M_κ = Σ_{k>=1} k^κ c_k`.
    pub fn moment(&self, kappa: f64) -> f64 {
        lattice::moment(&self.c[1..], kappa)
    }
}

/// `ℓ = ρ / M_0`.
pub fn mean_cluster_size(state: &ClusterState) -> Result<f64> {
    let m0 = state.moment(0.0);
    if m0 <= 0.0 {
        return Err(Error::Invalid("mean cluster size undefined for the vacuum state"));
    }
    Ok(state.rho / m0)
}

/// Atoms `(k/s, s c_k)`, `k >= 1`.
pub fn empirical_measure(state: &ClusterState, s: f64) -> Result<Vec<(f64, f64)>> {
    if !(s > 0.0) {
        return Err(Error::OutOfRange {
            what: "scale must be positive",
            value: s,
        });
    }
    Ok(state
        .c
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &v)| (k as f64 / s, s * v))
        .collect())
}

fn kernel_table(lambda: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|k| ipow(k, lambda)).collect()
}

/// Right-hand side into `out`; returns `(M_λ, suppressed flux at N)`.
fn rhs_into(a: &[f64], c: &[f64], out: &mut [f64]) -> (f64, f64) {
    let n = c.len() - 1;
    let mut s = KahanSum::new();
    for k in 1..=n {
        s.add(a[k] * c[k]);
    }
    let s = s.value();
    let s_recv = s - a[n] * c[n];
    // J_k: net transfer from size k to k+1
    let mut j_prev = 0.0;
    for k in 0..n {
        let j = s * a[k] * c[k] - s_recv * a[k + 1] * c[k + 1];
        out[k] = j_prev - j;
        j_prev = j;
    }
    out[n] = j_prev;
    (s, s * a[n] * c[n])
}

/// `ċ_k` for all `k = 0..N`.
pub fn edg_rhs(state: &ClusterState) -> Vec<f64> {
    let a = kernel_table(state.lambda, state.n());
    let mut out = alloc::vec![0.0; state.c.len()];
    rhs_into(&a, &state.c, &mut out);
    out
}

/// Scalar observables at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    pub t: f64,
    pub ell: f64,
    pub m0: f64,
    pub m_lambda: f64,
    pub tau: f64,
}

/// Why an integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HaltReason {
    EndReached,
    BlowupCeiling,
    StepUnderflow,
    TruncationLimit,
}

impl HaltReason {
    pub fn as_str(&self) -> &'static str {
        match self {
            HaltReason::EndReached => "t_end reached",
            HaltReason::BlowupCeiling => "blow-up ceiling",
            HaltReason::StepUnderflow => "step underflow",
            HaltReason::TruncationLimit => "truncation limit",
        }
    }
}

/// Options for the direct integrator.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectOptions {
    pub atol: f64,
    pub rtol: f64,
    pub output_times: Vec<f64>,
    /// Halt once `M_λ > ceiling · M_λ(0)`.
    pub ceiling: f64,
    pub h_init: f64,
    pub h_min: f64,
    /// Record observables every this many accepted steps.
    pub observe_every: usize,
}

impl Default for DirectOptions {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            output_times: Vec::new(),
            ceiling: 1e6,
            h_init: 1e-4,
            h_min: 1e-14,
            observe_every: 1,
        }
    }
}

/// Result of a direct run.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectRun {
    pub lambda: f64,
    pub rho: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub observables: Vec<Observables>,
    pub halt: HaltReason,
    pub t_final: f64,
    pub final_state: Vec<f64>,
    pub steps: usize,
    pub rejected: usize,
    /// Largest `|Σc - 1|` seen at accepted steps.
    pub volume_drift: f64,
    /// Largest `|Σkc - ρ|` seen at accepted steps.
    pub mass_drift: f64,
    /// `∫ S a_λ(N) c_N dt`, the exchange flux suppressed at `N`.
    pub leak: f64,
    /// Largest `|c_0 - (1 - Σ_{k>=1} c_k)|` at output times.
    pub c0_discrepancy: f64,
    /// `τ(t_final) = ∫ M_λ dt`.
    pub tau_final: f64,
    /// Blow-up time extrapolated past the ceiling (gelation regime only).
    pub blowup_estimate: Option<f64>,
}

const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Local exponent `d ln y / d ln x` from the samples with `x >= x_end / span`.
fn tail_exponent(xs: &[f64], ys: &[f64], span: f64) -> Option<f64> {
    let n = xs.len();
    if n < 3 {
        return None;
    }
    let x_end = xs[n - 1];
    let j = xs.partition_point(|&x| x < x_end / span).min(n - 2);
    let (x0, y0) = (xs[j], ys[j]);
    let (x1, y1) = (xs[n - 1], ys[n - 1]);
    if !(x0 > 0.0 && y0 > 0.0 && x1 > x0 && y1 > 0.0) {
        return None;
    }
    Some((ln(y1) - ln(y0)) / (ln(x1) - ln(x0)))
}

/// `∫_{τ}^{∞} dσ / M_λ` for `M_λ(σ) = M (σ/τ)^p`, `p > 1`.
fn tail_time(tau: f64, m: f64, p: f64) -> Option<f64> {
    (p > 1.0).then(|| tau / (m * (p - 1.0)))
}

/// Dormand-Prince 5(4) with PI step control and max-norm error.
pub fn solve_edg_direct(c0: &ClusterState, t_end: f64, opts: &DirectOptions) -> Result<DirectRun> {
    if !(t_end > 0.0) {
        return Err(Error::OutOfRange {
            what: "t_end must be positive",
            value: t_end,
        });
    }
    let n = c0.n();
    let a = kernel_table(c0.lambda, n);
    let dim = n + 1;
    let mut y = c0.c.clone();
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| alloc::vec![0.0; dim]);
    let mut ytmp = alloc::vec![0.0; dim];
    let mut ynew = alloc::vec![0.0; dim];
    let (m_l0, mut leak_rate) = rhs_into(&a, &y, &mut k[0]);
    let mut m_l = m_l0;
    let mut t = 0.0;
    let mut tau = 0.0;
    let mut leak = 0.0;
    let mut h = opts.h_init.min(t_end);
    let mut err_old: f64 = 1e-4;
    let mut outputs = opts.output_times.iter().copied().filter(|&s| s <= t_end).peekable();
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut observables = Vec::new();
    let mut run = DirectRun {
        lambda: c0.lambda,
        rho: c0.rho,
        times: Vec::new(),
        states: Vec::new(),
        observables: Vec::new(),
        halt: HaltReason::EndReached,
        t_final: 0.0,
        final_state: Vec::new(),
        steps: 0,
        rejected: 0,
        volume_drift: 0.0,
        mass_drift: 0.0,
        leak: 0.0,
        c0_discrepancy: 0.0,
        tau_final: 0.0,
        blowup_estimate: None,
    };
    let observe = |t: f64, tau: f64, m_l: f64, y: &[f64]| {
        let m0 = lattice::moment(&y[1..], 0.0);
        Observables {
            t,
            ell: if m0 > 0.0 { c0.rho / m0 } else { f64::INFINITY },
            m0,
            m_lambda: m_l,
            tau,
        }
    };
    observables.push(observe(0.0, 0.0, m_l, &y));
    let ceiling = opts.ceiling * m_l0;
    loop {
        if t >= t_end * (1.0 - 1e-14) {
            run.halt = HaltReason::EndReached;
            break;
        }
        if m_l0 > 0.0 && m_l > ceiling {
            run.halt = HaltReason::BlowupCeiling;
            break;
        }
        let target = outputs.peek().copied().unwrap_or(t_end);
        let mut hh = h.min(target - t);
        let hits = hh >= target - t;
        if hh < opts.h_min {
            if hits {
                hh = target - t;
            } else {
                run.halt = HaltReason::StepUnderflow;
                break;
            }
        }
        for s in 1..7 {
            for i in 0..dim {
                let mut acc = y[i];
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += hh * DP_A[s][j] * kj[i];
                }
                ytmp[i] = acc;
            }
            if s == 6 {
                ynew.copy_from_slice(&ytmp);
            }
            rhs_into(&a, &ytmp, &mut k[s]);
        }
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += DP_E[j] * kj[i];
            }
            let sc = opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs());
            err = err.max((hh * e).abs() / sc);
        }
        if !err.is_finite() {
            err = 1e10;
        }
        if err <= 1.0 {
            let (m_new, leak_new) = rhs_into(&a, &ynew, &mut ytmp);
            tau += 0.5 * hh * (m_l + m_new);
            leak += 0.5 * hh * (leak_rate + leak_new);
            m_l = m_new;
            leak_rate = leak_new;
            core::mem::swap(&mut y, &mut ynew);
            k[0].copy_from_slice(&ytmp);
            t = if hits { target } else { t + hh };
            run.steps += 1;
            let vol = ksum(y.iter().copied());
            let mass = ksum(y.iter().enumerate().map(|(kk, v)| kk as f64 * v));
            run.volume_drift = run.volume_drift.max((vol - 1.0).abs());
            run.mass_drift = run.mass_drift.max((mass - c0.rho).abs());
            if run.steps % opts.observe_every.max(1) == 0 {
                observables.push(observe(t, tau, m_l, &y));
            }
            if hits && outputs.peek().is_some() {
                outputs.next();
                let m0 = lattice::moment(&y[1..], 0.0);
                run.c0_discrepancy = run.c0_discrepancy.max((y[0] - (1.0 - m0)).abs());
                times.push(t);
                states.push(y.clone());
            }
            let fac = powf(err.max(1e-10), 0.17) / powf(err_old, 0.04);
            h = hh / (fac / 0.9).clamp(0.1, 5.0);
            err_old = err.max(1e-4);
        } else {
            run.rejected += 1;
            h = hh / (powf(err, 0.2) / 0.9).min(10.0);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite cluster state"));
        }
    }
    if observables.last().map(|o| o.t) != Some(t) {
        observables.push(observe(t, tau, m_l, &y));
    }
    if run.halt == HaltReason::BlowupCeiling && c0.lambda > 1.5 {
        run.blowup_estimate = extrapolate_gel_time(&observables, c0.lambda).0;
    }
    run.times = times;
    run.states = states;
    run.observables = observables;
    run.t_final = t;
    run.final_state = y;
    run.leak = leak;
    run.tau_final = tau;
    Ok(run)
}

/// Blow-up time from observables that end where a run halted: the last `t`
/// plus `∫ dσ / M_λ` over the remaining `τ`, with `M_λ ~ σ^p`.
///
/// The first entry measures `p` on `τ ∈ [τ_end / 1.5, τ_end]` (`None` when
/// `p <= 1`); the second uses the asymptotic `p = α(λ - 1)`.
pub fn extrapolate_gel_time(obs: &[Observables], lambda: f64) -> (Option<f64>, Option<f64>) {
    let Some(last) = obs.last() else {
        return (None, None);
    };
    let taus: Vec<f64> = obs.iter().map(|o| o.tau).collect();
    let ms: Vec<f64> = obs.iter().map(|o| o.m_lambda).collect();
    let measured = tail_exponent(&taus, &ms, 1.5)
        .and_then(|p| tail_time(last.tau, last.m_lambda, p))
        .map(|d| last.t + d);
    let p_th = (lambda - 1.0) / (2.0 - lambda);
    let theory = tail_time(last.tau, last.m_lambda, p_th).map(|d| last.t + d);
    (measured, theory)
}

/// First time at which `M_λ` reaches `level`, interpolated linearly in `ln M_λ`.
pub fn threshold_crossing_time(obs: &[Observables], level: f64) -> Option<f64> {
    let j = obs.iter().position(|o| o.m_lambda >= level)?;
    if j == 0 {
        return Some(obs[0].t);
    }
    let (a, b) = (&obs[j - 1], &obs[j]);
    let (la, lb) = (ln(a.m_lambda), ln(b.m_lambda));
    if lb == la {
        return Some(b.t);
    }
    Some(a.t + (ln(level) - la) / (lb - la) * (b.t - a.t))
}

/// Map between the original clock `t` and the linear clock `τ`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangeMap {
    pub tau_grid: Vec<f64>,
    pub t_of_tau: Vec<f64>,
    /// `t(τ_end) + ∫_{τ_end}^∞ dσ / M_λ` with the tail exponent measured on the run.
    pub gel_time_estimate: Option<f64>,
    /// Same with the asymptotic exponent `α(λ - 1)`.
    pub gel_time_theory_tail: Option<f64>,
}

impl TimeChangeMap {
    /// `t(τ)` by monotone (linear) interpolation.
    pub fn t_at(&self, tau: f64) -> Result<f64> {
        interp_monotone(&self.tau_grid, &self.t_of_tau, tau)
    }

    /// `τ(t)` by monotone (linear) interpolation.
    pub fn tau_at(&self, t: f64) -> Result<f64> {
        interp_monotone(&self.t_of_tau, &self.tau_grid, t)
    }
}

fn interp_monotone(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if n == 0 || x < xs[0] || x > xs[n - 1] {
        return Err(Error::Invalid("interpolation outside the computed tau range"));
    }
    let j = xs.partition_point(|&v| v <= x).clamp(1, n - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    if x1 == x0 {
        return Ok(ys[j]);
    }
    Ok(ys[j - 1] + (x - x0) / (x1 - x0) * (ys[j] - ys[j - 1]))
}

/// Options for the time-change route.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangeOptions {
    /// Times in the original clock at which `c(t)` is returned.
    pub output_times: Vec<f64>,
    /// Halt once `M_λ > ceiling · M_λ(0)`; `None` disables the check.
    pub ceiling: Option<f64>,
    /// Optional cap on `τ`.
    pub tau_max: f64,
    /// Halt when `U(N)` exceeds this fraction of `ρ`.
    pub truncation_tol: f64,
}

impl Default for TimeChangeOptions {
    fn default() -> Self {
        Self {
            output_times: Vec::new(),
            ceiling: None,
            tau_max: f64::INFINITY,
            truncation_tol: 1e-12,
        }
    }
}

/// Result of the time-change route.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeChangeRun {
    pub lambda: f64,
    pub rho: f64,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub observables: Vec<Observables>,
    pub map: TimeChangeMap,
    pub halt: HaltReason,
    pub boundary_level: f64,
    pub steps: usize,
}

/// `M_λ[u]` and `M_0[u]` from the tail `U`, using `u = -∂⁺U`, `U(N+1) = 0`.
fn moments_from_tail(a: &[f64], tail: &[f64]) -> (f64, f64) {
    let mut s = KahanSum::new();
    for (i, &v) in tail.iter().enumerate() {
        s.add(v * (a[i + 1] - a[i]));
    }
    (s.value(), tail[0])
}

/// Solve the nonlinear system through the linear flow in the clock `τ`.
pub fn solve_edg_timechange(
    c0: &ClusterState,
    t_end: f64,
    cfg: &HeatRunConfig,
    opts: &TimeChangeOptions,
) -> Result<TimeChangeRun> {
    let n = c0.n();
    if cfg.lambda != c0.lambda {
        return Err(Error::Invalid("heat configuration and cluster state disagree on lambda"));
    }
    let mut out_times = opts.output_times.clone();
    out_times.retain(|&s| s > 0.0);
    if out_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Invalid("output times must increase"));
    }
    let a = kernel_table(c0.lambda, n);
    let tail0 = lattice::tail_transform(&c0.c[1..]);
    let mut st = NpStepper::new(c0.lambda, tail0)?;
    let (m_l0, _) = moments_from_tail(&a, &st.u);
    if !(m_l0 > 0.0) {
        return Err(Error::Invalid("time change needs M_lambda(0) > 0"));
    }
    let dml = |st: &NpStepper| {
        let lu = st.generator();
        moments_from_tail(&a, &lu).0
    };
    let mut m_l = m_l0;
    let mut dm_l = dml(&st);
    let mut t = 0.0;
    let mut tau_grid = alloc::vec![0.0];
    let mut t_grid = alloc::vec![0.0];
    let observe = |t: f64, tau: f64, m_l: f64, m0: f64| Observables {
        t,
        ell: if m0 > 0.0 { c0.rho / m0 } else { f64::INFINITY },
        m0,
        m_lambda: m_l,
        tau,
    };
    let mut observables = alloc::vec![observe(0.0, 0.0, m_l, st.u[0])];
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut next_out = 0usize;
    let mut dt = cfg.dt_init;
    let mut boundary_level: f64 = 0.0;
    let mut steps = 0usize;
    let to_state = |tail: &[f64], m0: f64| {
        let mut c = alloc::vec![1.0 - m0];
        c.extend(lattice::tail_inverse(tail));
        c
    };
    // ∫ f over one step from endpoint values and slopes (Hermite)
    let hermite = |h: f64, f0: f64, f1: f64, d0: f64, d1: f64| h * 0.5 * (f0 + f1) + h * h / 12.0 * (d0 - d1);
    let halt;
    loop {
        if t >= t_end * (1.0 - 1e-14) && next_out >= out_times.len() {
            halt = HaltReason::EndReached;
            break;
        }
        if let Some(cap) = opts.ceiling {
            if m_l > cap * m_l0 {
                halt = HaltReason::BlowupCeiling;
                break;
            }
        }
        if st.t >= opts.tau_max {
            halt = HaltReason::EndReached;
            break;
        }
        if boundary_level > opts.truncation_tol {
            halt = HaltReason::TruncationLimit;
            break;
        }
        let saved = st.clone();
        let h = dt;
        st.step_cn_monotone(h, 1e-12)?;
        steps += 1;
        let (m_new, m0_new) = moments_from_tail(&a, &st.u);
        if !(m_new > 0.0) || !m_new.is_finite() {
            return Err(Error::Numerical("M_lambda lost positivity in the linear clock"));
        }
        let dm_new = dml(&st);
        let (f0, f1) = (1.0 / m_l, 1.0 / m_new);
        let (d0, d1) = (-dm_l / (m_l * m_l), -dm_new / (m_new * m_new));
        let t_new = t + hermite(h, f0, f1, d0, d1);
        // snapshots at requested t inside this step
        while next_out < out_times.len() && out_times[next_out] <= t_new {
            let target = out_times[next_out];
            // invert the cubic t(τ) on [0, h] by bisection
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let s = mid / h;
                // Hermite interpolant of f, integrated from 0 to mid
                let val = t + cubic_integral(h, s, f0, f1, d0, d1);
                if val < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let dtau = 0.5 * (lo + hi);
            let mut sub = saved.clone();
            if dtau > 0.0 {
                sub.step_cn_monotone(dtau, 1e-12)?;
            }
            states.push(to_state(&sub.u, sub.u[0]));
            times.push(target);
            next_out += 1;
        }
        t = t_new;
        m_l = m_new;
        dm_l = dm_new;
        tau_grid.push(st.t);
        t_grid.push(t);
        observables.push(observe(t, st.t, m_l, m0_new));
        boundary_level = boundary_level.max(st.u[n - 1].abs() / c0.rho);
        dt = next_dt(dt, st.t, cfg);
    }
    if next_out < out_times.len() {
        return Err(Error::Halted {
            reason: if halt == HaltReason::EndReached { "tau limit" } else { halt.as_str() },
            t,
        });
    }
    let (gel, gel_theory) = if c0.lambda > 1.5 && halt != HaltReason::EndReached {
        extrapolate_gel_time(&observables, c0.lambda)
    } else {
        (None, None)
    };
    Ok(TimeChangeRun {
        lambda: c0.lambda,
        rho: c0.rho,
        times,
        states,
        observables,
        map: TimeChangeMap {
            tau_grid,
            t_of_tau: t_grid,
            gel_time_estimate: gel,
            gel_time_theory_tail: gel_theory,
        },
        halt,
        boundary_level,
        steps,
    })
}

/// `∫_0^{s h} p(σ) dσ` for the cubic Hermite interpolant `p` of `f` on `[0, h]`.
fn cubic_integral(h: f64, s: f64, f0: f64, f1: f64, d0: f64, d1: f64) -> f64 {
    // Hermite basis integrated from 0 to s (unit interval)
    let s2 = s * s;
    let s3 = s2 * s;
    let s4 = s3 * s;
    let h00 = s - s3 + 0.5 * s4;
    let h10 = 0.5 * s2 - 2.0 / 3.0 * s3 + 0.25 * s4;
    let h01 = s3 - 0.5 * s4;
    let h11 = -s3 / 3.0 + 0.25 * s4;
    h * (h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rhs_examples() {
        let mut c = alloc::vec![0.0; 12];
        c[0] = 1.0;
        let mut out = alloc::vec![0.0; 12];
        rhs_into(&kernel_table(1.0, 11), &c, &mut out);
        assert!(out.iter().all(|&v| v == 0.0));

        let mut c = alloc::vec![0.0; 12];
        c[..4].copy_from_slice(&[0.5, 0.25, 0.125, 0.125]);
        let rho = 0.25 + 0.25 + 0.375;
        let s = ClusterState::new(1.0, rho, c).unwrap();
        let r = edg_rhs(&s);
        assert!((r[0] - 0.21875).abs() < 1e-15);
        assert!((r[1] + 0.21875).abs() < 1e-15);
        let vol: f64 = r.iter().sum();
        let mass: f64 = r.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        assert!(vol.abs() < 1e-15 && mass.abs() < 1e-15);
    }

    #[test]
    fn truncated_rhs_conserves_with_mass_at_the_edge() {
        let c = alloc::vec![0.2, 0.1, 0.1, 0.2, 0.4];
        let rho = 0.1 + 0.2 + 0.6 + 1.6;
        let s = ClusterState::new(1.4, rho, c).unwrap();
        let r = edg_rhs(&s);
        let vol: f64 = r.iter().sum();
        let mass: f64 = r.iter().enumerate().map(|(k, v)| k as f64 * v).sum();
        assert!(vol.abs() < 1e-14 && mass.abs() < 1e-14);
    }

    #[test]
    fn rejects_unnormalised_data() {
        assert!(ClusterState::new(1.0, 0.5, alloc::vec![0.4, 0.5, 0.0]).is_err());
        assert!(ClusterState::new(1.0, 0.7, alloc::vec![0.5, 0.5, 0.0]).is_err());
        assert!(ClusterState::new(1.0, 0.5, alloc::vec![0.6, 0.5, -0.1, 0.0]).is_err());
        assert!(ClusterState::monodisperse(1.0, 1.5, 10).is_err());
    }

    #[test]
    fn presets_are_normalised() {
        let g = ClusterState::geometric(0.5, 1.0, 0.5, 200).unwrap();
        assert!((ksum(g.c.iter().copied()) - 1.0).abs() < 1e-12);
        let m = ClusterState::monodisperse(0.5, 0.5, 20).unwrap();
        assert_eq!(mean_cluster_size(&m).unwrap(), 1.0);
    }

    #[test]
    fn mean_size_and_measure() {
        let mut c = alloc::vec![0.0; 6];
        c[0] = 0.75;
        c[2] = 0.25;
        let s = ClusterState::new(0.0, 0.5, c).unwrap();
        assert_eq!(mean_cluster_size(&s).unwrap(), 2.0);
        let mu = empirical_measure(&s, 3.0).unwrap();
        let first: f64 = mu.iter().map(|(x, w)| x * w).sum();
        assert!((first - 0.5).abs() < 1e-15);
        let unit = empirical_measure(&s, 1.0).unwrap();
        assert_eq!(unit[1], (2.0, 0.25));
        assert!(empirical_measure(&s, 0.0).is_err());
    }

    #[test]
    fn vacuum_is_stationary() {
        let mut c = alloc::vec![0.0; 10];
        c[0] = 1.0;
        // vacuum carries no mass; build it directly
        let s = ClusterState {
            lambda: 1.0,
            rho: 0.0,
            c,
        };
        let run = solve_edg_direct(&s, 1.0, &DirectOptions::default()).unwrap();
        assert_eq!(run.final_state, s.c);
        assert_eq!(run.halt, HaltReason::EndReached);
    }

    #[test]
    fn cubic_integral_matches_trapezoid_for_linear() {
        let v = cubic_integral(2.0, 1.0, 1.0, 3.0, 1.0, 1.0);
        assert!((v - 4.0).abs() < 1e-14);
        let half = cubic_integral(2.0, 0.5, 1.0, 3.0, 1.0, 1.0);
        assert!((half - 1.5).abs() < 1e-14);
    }

    #[test]
    fn map_interpolation_bounds() {
        let m = TimeChangeMap {
            tau_grid: alloc::vec![0.0, 1.0, 2.0],
            t_of_tau: alloc::vec![0.0, 2.0, 5.0],
            gel_time_estimate: None,
            gel_time_theory_tail: None,
        };
        assert_eq!(m.t_at(1.5).unwrap(), 3.5);
        assert_eq!(m.tau_at(3.5).unwrap(), 1.5);
        assert!(m.t_at(2.5).is_err());
    }
}
