//! Time integration of the lattice heat flows `∂_t U = L_λ U` (tails, zero
//! flux at both ends) and `∂_τ u = Δ(a_λ u)` (densities), with decay,
//! continuity and moment diagnostics.

use alloc::vec::Vec;

use crate::error::{check_lambda, Error, Result};
use crate::lattice::{self, apply_l_with, bond_weights};
use crate::math::{ksum, powf};
use crate::profiles::{omega, theta, ScalingConstants};

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    CrankNicolson,
    ExplicitRk4,
}

/// Run configuration for the heat flows.
#[derive(Debug, Clone, PartialEq)]
pub struct HeatRunConfig {
    pub lambda: f64,
    pub n: usize,
    pub t_end: f64,
    pub dt_init: f64,
    pub scheme: Scheme,
    pub output_times: Vec<f64>,
    /// Geometric growth factor of the step (Crank-Nicolson only).
    pub dt_growth: f64,
    /// Step cap relative to the current time.
    pub dt_rel_cap: f64,
    /// Absolute step cap.
    pub dt_max: f64,
    /// Contamination threshold for `U(N)` relative to `‖U₀‖₁`.
    pub truncation_tol: f64,
}

impl HeatRunConfig {
    pub fn new(lambda: f64, n: usize, t_end: f64) -> Self {
        Self {
            lambda,
            n,
            t_end,
            dt_init: 1e-4,
            scheme: Scheme::CrankNicolson,
            output_times: alloc::vec![t_end],
            dt_growth: 1.2,
            dt_rel_cap: 0.05,
            dt_max: f64::INFINITY,
            truncation_tol: 1e-12,
        }
    }

    pub fn with_outputs(mut self, times: Vec<f64>) -> Self {
        self.output_times = times;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme, dt_init: f64) -> Self {
        self.scheme = scheme;
        self.dt_init = dt_init;
        self
    }

    pub fn with_dt_max(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self
    }

    /// Explicit stability limit `0.4 N^{-λ}`.
    pub fn explicit_dt_limit(&self) -> f64 {
        0.4 * powf(self.n as f64, -self.lambda)
    }

    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        if self.n < 3 {
            return Err(Error::Invalid("heat solver needs N >= 3"));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(Error::OutOfRange {
                what: "t_end must be positive",
                value: self.t_end,
            });
        }
        if !(self.dt_init > 0.0 && self.dt_init <= 1.0) {
            return Err(Error::OutOfRange {
                what: "dt_init must lie in (0, 1]",
                value: self.dt_init,
            });
        }
        if self.scheme == Scheme::ExplicitRk4 && self.dt_init > self.explicit_dt_limit() {
            return Err(Error::OutOfRange {
                what: "explicit step exceeds the stability guard 0.4 N^-lambda",
                value: self.dt_init,
            });
        }
        if !(self.dt_growth >= 1.0) || !(self.dt_rel_cap > 0.0) || !(self.dt_max > 0.0) {
            return Err(Error::Invalid("step controls must be positive (growth >= 1)"));
        }
        let mut prev = 0.0;
        for &t in &self.output_times {
            if !(t > prev) || t > self.t_end * (1.0 + 1e-12) {
                return Err(Error::Invalid("output times must increase within (0, t_end]"));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Run statistics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunDiagnostics {
    pub steps: usize,
    pub retried_steps: usize,
    /// Largest `|Σ U(t) - Σ U₀| / ‖U₀‖₁` seen at output times.
    pub mass_drift: f64,
    /// Largest `|U(t, N)| / ‖U₀‖₁` seen at output times.
    pub boundary_level: f64,
    pub truncation_contaminated: bool,
}

/// Whether a trajectory stores tails or densities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Tail,
    Density,
}

/// Snapshots of a heat flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub lambda: f64,
    pub kind: FieldKind,
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub diagnostics: RunDiagnostics,
}

impl Trajectory {
    /// Snapshot at an output time (matched to 1e-12 relative).
    pub fn at(&self, t: f64) -> Option<&[f64]> {
        if t == 0.0 {
            return Some(&self.initial);
        }
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|i| self.fields[i].as_slice())
    }
}

fn is_tail_shaped(u: &[f64]) -> bool {
    u.iter().all(|&v| v >= 0.0) && u.windows(2).all(|w| w[1] <= w[0])
}

/// Stepper for `∂_t U = L_λ U` on `k = 1..N` with zero-flux ends.
#[derive(Debug, Clone)]
pub struct NpStepper {
    w: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
    scratch: [Vec<f64>; 5],
}

impl NpStepper {
    pub fn new(lambda: f64, u0: Vec<f64>) -> Result<Self> {
        check_lambda(lambda)?;
        let n = u0.len();
        if n < 3 {
            return Err(Error::Invalid("heat solver needs N >= 3"));
        }
        if u0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("initial field has non-finite entries"));
        }
        let z = alloc::vec![0.0; n];
        Ok(Self {
            w: bond_weights(lambda, n),
            u: u0,
            t: 0.0,
            scratch: [z.clone(), z.clone(), z.clone(), z.clone(), z],
        })
    }

    /// One Crank-Nicolson step of size `dt` into `out`.
    fn cn_into(&mut self, dt: f64, out: &mut Vec<f64>) {
        let n = self.u.len();
        let h = 0.5 * dt;
        let [lu, cp, dp, _, _] = &mut self.scratch;
        apply_l_with(&self.w, &self.u, lu);
        // Thomas sweep for (I - h L) x = u + h L u
        let w = &self.w;
        // subnormals ahead of the front are flushed, they make each step ~10x slower
        let flush = |v: f64| if v.abs() < f64::MIN_POSITIVE { 0.0 } else { v };
        let mut prev_c = 0.0;
        let mut prev_d = 0.0;
        for i in 0..n {
            let wl = if i > 0 { w[i - 1] } else { 0.0 };
            let wr = if i + 1 < n { w[i] } else { 0.0 };
            let a = -h * wl;
            let b = 1.0 + h * (wl + wr);
            let c = -h * wr;
            let r = self.u[i] + h * lu[i];
            let m = b - a * prev_c;
            prev_c = c / m;
            prev_d = flush((r - a * prev_d) / m);
            cp[i] = prev_c;
            dp[i] = prev_d;
        }
        out.resize(n, 0.0);
        out[n - 1] = flush(dp[n - 1]);
        for i in (0..n - 1).rev() {
            out[i] = flush(dp[i] - cp[i] * out[i + 1]);
        }
    }

    /// Crank-Nicolson step; advances the state.
    pub fn step_cn(&mut self, dt: f64) {
        let mut out = core::mem::take(&mut self.scratch[3]);
        self.cn_into(dt, &mut out);
        core::mem::swap(&mut self.u, &mut out);
        self.scratch[3] = out;
        self.t += dt;
    }

    /// Crank-Nicolson step that is retried with halved sub-steps while it
    /// breaks nonnegativity or monotonicity beyond `tol · max U`.
    /// Returns the number of retries.
    pub fn step_cn_monotone(&mut self, dt: f64, tol: f64) -> Result<usize> {
        let scale = self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let thr = tol * scale;
        for level in 0..30 {
            let sub = 1usize << level;
            let h = dt / sub as f64;
            let saved = self.u.clone();
            let t0 = self.t;
            let mut ok = true;
            for _ in 0..sub {
                self.step_cn(h);
                if self.u.iter().any(|&v| v < -thr) || self.u.windows(2).any(|w| w[1] > w[0] + thr) {
                    ok = false;
                    break;
                }
            }
            if ok {
                return Ok(level);
            }
            self.u = saved;
            self.t = t0;
        }
        Err(Error::StepUnderflow { t: self.t, dt })
    }

    /// Classical RK4 step.
    pub fn step_rk4(&mut self, dt: f64) {
        let n = self.u.len();
        let [k1, k2, k3, k4, tmp] = &mut self.scratch;
        apply_l_with(&self.w, &self.u, k1);
        for i in 0..n {
            tmp[i] = self.u[i] + 0.5 * dt * k1[i];
        }
        apply_l_with(&self.w, tmp, k2);
        for i in 0..n {
            tmp[i] = self.u[i] + 0.5 * dt * k2[i];
        }
        apply_l_with(&self.w, tmp, k3);
        for i in 0..n {
            tmp[i] = self.u[i] + dt * k3[i];
        }
        apply_l_with(&self.w, tmp, k4);
        for i in 0..n {
            self.u[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        self.t += dt;
    }

    /// `L_λ U` of the current state.
    pub fn generator(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.u.len()];
        apply_l_with(&self.w, &self.u, &mut out);
        out
    }
}

/// Next adaptive step: geometric growth, capped by `rel_cap · t` (never below
/// the initial step) and by `dt_max`.
pub(crate) fn next_dt(dt: f64, t: f64, cfg: &HeatRunConfig) -> f64 {
    (dt * cfg.dt_growth)
        .min((cfg.dt_rel_cap * t).max(cfg.dt_init))
        .min(cfg.dt_max)
}

/// Solve `∂_t U = L_λ U` from `u0`.
pub fn solve_np(u0: &[f64], cfg: &HeatRunConfig) -> Result<Trajectory> {
    cfg.validate()?;
    if u0.len() != cfg.n {
        return Err(Error::Invalid("initial field length differs from N"));
    }
    let monotone = is_tail_shaped(u0);
    let mass0 = ksum(u0.iter().copied());
    let norm0 = ksum(u0.iter().map(|v| v.abs()));
    let mut st = NpStepper::new(cfg.lambda, u0.to_vec())?;
    let mut diag = RunDiagnostics::default();
    let mut fields = Vec::with_capacity(cfg.output_times.len());
    let mut dt = cfg.dt_init;
    for &t_out in &cfg.output_times {
        while st.t < t_out * (1.0 - 1e-14) {
            let h = dt.min(t_out - st.t);
            let last = h >= t_out - st.t;
            match cfg.scheme {
                Scheme::CrankNicolson => {
                    if monotone {
                        diag.retried_steps += st.step_cn_monotone(h, 1e-12)?;
                    } else {
                        st.step_cn(h);
                    }
                }
                Scheme::ExplicitRk4 => st.step_rk4(h),
            }
            if last {
                st.t = t_out;
            }
            diag.steps += 1;
            if cfg.scheme == Scheme::CrankNicolson {
                dt = next_dt(dt, st.t, cfg);
            }
        }
        if st.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite heat state"));
        }
        if norm0 > 0.0 {
            let m = ksum(st.u.iter().copied());
            diag.mass_drift = diag.mass_drift.max((m - mass0).abs() / norm0);
            let b = st.u[cfg.n - 1].abs() / norm0;
            diag.boundary_level = diag.boundary_level.max(b);
        }
        fields.push(st.u.clone());
    }
    diag.truncation_contaminated = diag.boundary_level > cfg.truncation_tol;
    Ok(Trajectory {
        lambda: cfg.lambda,
        kind: FieldKind::Tail,
        initial: u0.to_vec(),
        times: cfg.output_times.clone(),
        fields,
        diagnostics: diag,
    })
}

/// Solve `∂_τ u = Δ(a_λ u)` through the tail transform.
pub fn solve_dp(u0: &[f64], cfg: &HeatRunConfig) -> Result<Trajectory> {
    let tail0 = lattice::tail_transform(u0);
    let mut traj = solve_np(&tail0, cfg)?;
    traj.fields = traj.fields.iter().map(|f| lattice::tail_inverse(f)).collect();
    traj.initial = u0.to_vec();
    traj.kind = FieldKind::Density;
    Ok(traj)
}

/// Largest `|dM₀/dt + u(t, 1)|` at interior output times (central differences).
pub fn dp_mass_loss_residual(traj: &Trajectory) -> f64 {
    let m0: Vec<f64> = traj.fields.iter().map(|f| lattice::moment(f, 0.0)).collect();
    let mut worst = 0.0f64;
    for i in 1..traj.times.len().saturating_sub(1) {
        let d = (m0[i + 1] - m0[i - 1]) / (traj.times[i + 1] - traj.times[i - 1]);
        worst = worst.max((d + traj.fields[i][0]).abs());
    }
    worst
}

/// `Φ(·, ·, l)` at the configured output times.
#[derive(Debug, Clone, PartialEq)]
pub struct FundamentalSolutionTable {
    pub source: usize,
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub diagnostics: RunDiagnostics,
}

pub fn fundamental_solution(l: usize, cfg: &HeatRunConfig) -> Result<FundamentalSolutionTable> {
    if l == 0 || 2 * l > cfg.n {
        return Err(Error::Invalid("source must satisfy 1 <= l <= N/2"));
    }
    let mut u0 = alloc::vec![0.0; cfg.n];
    u0[l - 1] = 1.0;
    let traj = solve_np(&u0, cfg)?;
    Ok(FundamentalSolutionTable {
        source: l,
        times: traj.times,
        fields: traj.fields,
        diagnostics: traj.diagnostics,
    })
}

/// One row of the decay table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayRow {
    pub t: f64,
    pub sup_scaled: f64,
    pub l2_scaled: f64,
    pub energy_scaled: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    /// max/min over `t >= 1` for the three columns.
    pub ratios: [f64; 3],
    pub flagged: [bool; 3],
}

fn max_min_ratio(v: impl Iterator<Item = f64>) -> f64 {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    let mut any = false;
    for x in v {
        any = true;
        lo = lo.min(x);
        hi = hi.max(x);
    }
    if !any || hi == 0.0 {
        1.0
    } else if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// `‖U‖_∞ (1+t)^α`, `‖U‖₂² (1+t)^α` and `E_λ(U) t^{α+1}` along a tail trajectory.
pub fn decay_report(traj: &Trajectory, factor: f64) -> Result<DecayReport> {
    let s = ScalingConstants::new(traj.lambda)?;
    let a = s.alpha;
    let rows: Vec<DecayRow> = traj
        .times
        .iter()
        .zip(&traj.fields)
        .map(|(&t, u)| {
            let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let l2 = ksum(u.iter().map(|v| v * v));
            let e = lattice::dirichlet_form(traj.lambda, u, u).unwrap_or(0.0);
            DecayRow {
                t,
                sup_scaled: sup * powf(1.0 + t, a),
                l2_scaled: l2 * powf(1.0 + t, a),
                energy_scaled: e * powf(t, a + 1.0),
            }
        })
        .collect();
    let late = || rows.iter().filter(|r| r.t >= 1.0);
    let ratios = [
        max_min_ratio(late().map(|r| r.sup_scaled)),
        max_min_ratio(late().map(|r| r.l2_scaled)),
        max_min_ratio(late().map(|r| r.energy_scaled)),
    ];
    let flagged = [ratios[0] > factor, ratios[1] > factor, ratios[2] > factor];
    Ok(DecayReport {
        rows,
        ratios,
        flagged,
    })
}

/// Normalised spatial and temporal continuity moduli.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityReport {
    pub spatial: Vec<f64>,
    pub temporal: Vec<f64>,
    pub max_spatial: f64,
    pub max_temporal: f64,
}

/// `|U(t,k₂) - U(t,k₁)| / (‖U₀‖₁ t^{-α} |θ(t^{-α}k₂) - θ(t^{-α}k₁)|^{1/2})` for
/// `(t, k₁, k₂)` in `spatial`, and `|U(t,k) - U(s,k)| / (‖U₀‖₁ s^{-α} ω(t/s))`
/// for `(s, t, k)` in `temporal`; `0/0` counts as 0.
pub fn continuity_report(
    traj: &Trajectory,
    spatial: &[(f64, usize, usize)],
    temporal: &[(f64, f64, usize)],
) -> Result<ContinuityReport> {
    let s = ScalingConstants::new(traj.lambda)?;
    let a = s.alpha;
    let n = traj.initial.len();
    let norm0 = ksum(traj.initial.iter().map(|v| v.abs()));
    let get = |t: f64| traj.at(t).ok_or(Error::Invalid("time is not an output time"));
    let idx = |k: usize| {
        if k == 0 || k > n {
            Err(Error::Invalid("lattice index outside 1..=N"))
        } else {
            Ok(k - 1)
        }
    };
    let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
    let mut sp = Vec::with_capacity(spatial.len());
    for &(t, k1, k2) in spatial {
        let u = get(t)?;
        let num = (u[idx(k2)?] - u[idx(k1)?]).abs();
        let sc = powf(t, -a);
        let th = (theta(traj.lambda, sc * k2 as f64) - theta(traj.lambda, sc * k1 as f64)).abs();
        sp.push(ratio(num, norm0 * sc * libm::sqrt(th)));
    }
    let mut tm = Vec::with_capacity(temporal.len());
    for &(s0, t, k) in temporal {
        if s0 > t {
            return Err(Error::Invalid("temporal pair needs s <= t"));
        }
        let num = (get(t)?[idx(k)?] - get(s0)?[idx(k)?]).abs();
        tm.push(ratio(num, norm0 * powf(s0, -a) * omega(traj.lambda, t / s0)));
    }
    Ok(ContinuityReport {
        max_spatial: sp.iter().copied().fold(0.0, f64::max),
        max_temporal: tm.iter().copied().fold(0.0, f64::max),
        spatial: sp,
        temporal: tm,
    })
}

/// `M_μ[u(t)] t^{-α(μ-1)}` along a density trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBoundReport {
    pub mu: f64,
    pub times: Vec<f64>,
    pub scaled: Vec<f64>,
    /// max/min of the scaled column.
    pub ratio: f64,
    pub flagged: bool,
}

pub fn moment_bound_report(traj: &Trajectory, mu: f64, factor: f64) -> Result<MomentBoundReport> {
    let s = ScalingConstants::new(traj.lambda)?;
    let scaled: Vec<f64> = traj
        .times
        .iter()
        .zip(&traj.fields)
        .map(|(&t, u)| lattice::moment(u, mu) * powf(t, -s.alpha * (mu - 1.0)))
        .collect();
    let ratio = max_min_ratio(scaled.iter().copied());
    Ok(MomentBoundReport {
        mu,
        times: traj.times.clone(),
        scaled,
        ratio,
        flagged: ratio > factor,
    })
}
