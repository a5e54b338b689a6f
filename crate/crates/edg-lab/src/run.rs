//! One experiment from a validated config to its artifact files.

use std::path::PathBuf;
use std::time::Instant;

use edg_core::edg::{solve_edg_direct, solve_edg_timechange, ClusterState, DirectOptions, Observables, TimeChangeOptions};
use edg_core::heat::{solve_dp, solve_np, HeatRunConfig};
use edg_core::kernel::{psi_mass, ContinuumKernelParams, PsiKernel};
use edg_core::lattice::{moment, tail_transform};
use edg_core::profiles::scaling_constants;
use edg_core::scaling::{fit_growth, moment_asymptotics, regime_for, self_similarity_error, FitReport, FitWindow};
use serde::Serialize;

use crate::config::{EdgMethod, ExperimentConfig, ExperimentKind};
use crate::error::{LabError, LabResult, EXIT_VERIFY_FAILED};
use crate::output::{ArtifactSet, Table};
use crate::verify::{self, CriterionResult};

/// Result of `run_experiment`: exit status, summary payload and files written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub exit_code: i32,
    pub summary: serde_json::Value,
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitSummary {
    pub regime: &'static str,
    pub exponent: f64,
    pub confidence: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub samples: usize,
    pub sensitivity_half: Option<f64>,
    pub sensitivity_double: Option<f64>,
}

impl From<FitReport> for FitSummary {
    fn from(f: FitReport) -> Self {
        Self {
            regime: f.regime.label(),
            exponent: f.exponent,
            confidence: f.confidence,
            window: f.window,
            r2: f.r2,
            samples: f.samples,
            sensitivity_half: f.sensitivity.0,
            sensitivity_double: f.sensitivity.1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct EdgSummary {
    kind: &'static str,
    config_hash: String,
    lambda: f64,
    rho: f64,
    n: usize,
    method: EdgMethod,
    halt: &'static str,
    t_final: f64,
    tau_final: f64,
    steps: usize,
    volume_drift: f64,
    mass_drift: f64,
    leak: Option<f64>,
    boundary_level: Option<f64>,
    expected_beta: Option<f64>,
    fit: Option<FitSummary>,
    fit_error: Option<String>,
    gel_time_estimate: Option<f64>,
    gel_time_theory_tail: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct HeatSummary {
    kind: &'static str,
    config_hash: String,
    lambda: f64,
    rho: f64,
    n: usize,
    steps: usize,
    retried_steps: usize,
    mass_drift: f64,
    first_moment_drift: f64,
    boundary_level: f64,
    truncation_contaminated: bool,
    half_moment: Option<f64>,
    half_moment_target: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
struct KernelSummary {
    kind: &'static str,
    config_hash: String,
    lambda: f64,
    points: usize,
    times: Vec<f64>,
    x_max: Vec<f64>,
    mass_error: f64,
    symmetry_error: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ScalingSummary {
    kind: &'static str,
    config_hash: String,
    lambda: f64,
    rho: f64,
    n: usize,
    window: (f64, f64),
    errors: Vec<(f64, f64)>,
    final_error_over_rho_z: Option<f64>,
    decreasing: bool,
    boundary_level: f64,
    truncation_contaminated: bool,
}

#[derive(Debug, Clone, Serialize)]
struct VerifySummary {
    kind: &'static str,
    config_hash: String,
    seed: u64,
    all_pass: bool,
    checks: Vec<CriterionResult>,
}

/// Validate, run and write artifacts into the resolved output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> LabResult<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let mut art = ArtifactSet::new(cfg.resolved_output_dir());
    let (summary, code) = match cfg.kind {
        ExperimentKind::Edg => (run_edg(cfg, &mut art)?, 0),
        ExperimentKind::Heat => (run_heat(cfg, &mut art)?, 0),
        ExperimentKind::KernelTable => (run_kernel(cfg, &mut art)?, 0),
        ExperimentKind::Scaling => (run_scaling(cfg, &mut art)?, 0),
        ExperimentKind::Verify => run_verify(cfg, &mut art)?,
    };
    art.add_json("summary.json", &summary)?;
    let files = art.write(cfg, start.elapsed().as_secs_f64())?;
    Ok(RunOutcome {
        exit_code: code,
        summary,
        files,
    })
}

fn to_value<T: Serialize>(v: &T) -> LabResult<serde_json::Value> {
    serde_json::to_value(v).map_err(|e| LabError::Serialize(e.to_string()))
}

fn observables_table(obs: &[Observables]) -> Table {
    let mut t = Table::new(vec!["t", "tau", "ell", "m0", "m_lambda"]);
    for o in obs {
        t.push(vec![o.t, o.tau, o.ell, o.m0, o.m_lambda]);
    }
    t
}

fn snapshot_table(times: &[f64], fields: &[Vec<f64>], first_k: usize) -> Table {
    let mut t = Table::new(vec!["t", "k", "value"]);
    for (s, f) in times.iter().zip(fields) {
        for (i, v) in f.iter().enumerate() {
            t.push(vec![*s, (i + first_k) as f64, *v]);
        }
    }
    t
}

fn drifts(states: &[Vec<f64>], rho: f64) -> (f64, f64) {
    let mut vol = 0.0f64;
    let mut mass = 0.0f64;
    for c in states {
        vol = vol.max((c.iter().sum::<f64>() - 1.0).abs());
        mass = mass.max((moment(&c[1..], 1.0) - rho).abs());
    }
    (vol, mass)
}

fn fit_ell(cfg: &ExperimentConfig, obs: &[Observables], t_star: Option<f64>) -> (Option<FitSummary>, Option<String>) {
    let (ts, ell): (Vec<f64>, Vec<f64>) = obs.iter().skip(1).map(|o| (o.t, o.ell)).unzip();
    let r = regime_for(cfg.lambda, t_star).and_then(|reg| fit_growth(&ts, &ell, reg, FitWindow::Default));
    match r {
        Ok(f) => (Some(f.into()), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

fn run_edg(cfg: &ExperimentConfig, art: &mut ArtifactSet) -> LabResult<serde_json::Value> {
    let c0: ClusterState = cfg.initial_state()?;
    let tol = &cfg.tolerances;
    let gelling = cfg.lambda > 1.5;
    // past t* the requested snapshots do not exist
    let times = if gelling { Vec::new() } else { cfg.output_times() };
    let beta = scaling_constants(cfg.lambda)?.beta;
    let s = match cfg.method {
        EdgMethod::TimeChange => {
            let mut hc = HeatRunConfig::new(cfg.lambda, cfg.n, f64::MAX);
            if let Some(dt) = cfg.dt {
                hc = hc.with_dt_max(dt);
            }
            let t_end = cfg.t_end;
            let opts = TimeChangeOptions {
                output_times: times,
                ceiling: gelling.then_some(tol.ceiling),
                truncation_tol: tol.truncation,
                ..Default::default()
            };
            let run = solve_edg_timechange(&c0, t_end, &hc, &opts)?;
            art.add_table("observables.csv", &observables_table(&run.observables))?;
            if cfg.snapshots {
                art.add_table("snapshots.csv", &snapshot_table(&run.times, &run.states, 0))?;
            }
            let (vol, mass) = drifts(&run.states, c0.rho);
            let (fit, fit_error) = fit_ell(cfg, &run.observables, run.map.gel_time_estimate);
            let last = run.observables.last().expect("initial observables");
            EdgSummary {
                kind: "edg",
                config_hash: cfg.hash(),
                lambda: cfg.lambda,
                rho: c0.rho,
                n: cfg.n,
                method: cfg.method,
                halt: run.halt.as_str(),
                t_final: last.t,
                tau_final: last.tau,
                steps: run.steps,
                volume_drift: vol,
                mass_drift: mass,
                leak: None,
                boundary_level: Some(run.boundary_level),
                expected_beta: beta,
                fit,
                fit_error,
                gel_time_estimate: run.map.gel_time_estimate,
                gel_time_theory_tail: run.map.gel_time_theory_tail,
            }
        }
        EdgMethod::Direct => {
            let opts = DirectOptions {
                atol: tol.atol,
                rtol: tol.rtol,
                output_times: times,
                ceiling: tol.ceiling,
                ..Default::default()
            };
            let run = solve_edg_direct(&c0, cfg.t_end, &opts)?;
            art.add_table("observables.csv", &observables_table(&run.observables))?;
            if cfg.snapshots {
                art.add_table("snapshots.csv", &snapshot_table(&run.times, &run.states, 0))?;
            }
            let (fit, fit_error) = fit_ell(cfg, &run.observables, run.blowup_estimate);
            EdgSummary {
                kind: "edg",
                config_hash: cfg.hash(),
                lambda: cfg.lambda,
                rho: c0.rho,
                n: cfg.n,
                method: cfg.method,
                halt: run.halt.as_str(),
                t_final: run.t_final,
                tau_final: run.tau_final,
                steps: run.steps,
                volume_drift: run.volume_drift,
                mass_drift: run.mass_drift,
                leak: Some(run.leak),
                boundary_level: None,
                expected_beta: beta,
                fit,
                fit_error,
                gel_time_estimate: run.blowup_estimate,
                gel_time_theory_tail: None,
            }
        }
    };
    to_value(&s)
}

fn heat_config(cfg: &ExperimentConfig, times: Vec<f64>) -> HeatRunConfig {
    let mut hc = HeatRunConfig::new(cfg.lambda, cfg.n, cfg.t_end).with_outputs(times);
    if let Some(dt) = cfg.dt {
        hc = hc.with_dt_max(dt);
    }
    hc.truncation_tol = cfg.tolerances.truncation;
    hc
}

/// Density flow `∂_t u = Δ(a_λ u)` from the preset's `c_1..c_N`.
fn run_heat(cfg: &ExperimentConfig, art: &mut ArtifactSet) -> LabResult<serde_json::Value> {
    let c0 = cfg.initial_state()?;
    let u0 = c0.c[1..].to_vec();
    let traj = solve_dp(&u0, &heat_config(cfg, cfg.output_times()))?;
    let mut obs = Table::new(vec!["t", "m0", "m1", "sup"]);
    let mut m1_drift = 0.0f64;
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        let m1 = moment(f, 1.0);
        m1_drift = m1_drift.max((m1 - c0.rho).abs());
        obs.push(vec![*t, moment(f, 0.0), m1, f.iter().fold(0.0, |m, v| m.max(v.abs()))]);
    }
    art.add_table("observables.csv", &obs)?;
    if cfg.snapshots {
        art.add_table("snapshots.csv", &snapshot_table(&traj.times, &traj.fields, 1))?;
    }
    let half = moment_asymptotics(&traj, 0.5, c0.rho).ok();
    let d = traj.diagnostics;
    to_value(&HeatSummary {
        kind: "heat",
        config_hash: cfg.hash(),
        lambda: cfg.lambda,
        rho: c0.rho,
        n: cfg.n,
        steps: d.steps,
        retried_steps: d.retried_steps,
        mass_drift: d.mass_drift,
        first_moment_drift: m1_drift,
        boundary_level: d.boundary_level,
        truncation_contaminated: d.truncation_contaminated,
        half_moment: half.map(|m| m.estimate),
        half_moment_target: half.and_then(|m| m.target),
    })
}

/// Largest grid (points per axis times output times) a kernel table may hold.
pub const KERNEL_TABLE_LIMIT: usize = 4_000_000;

/// `Ψ_λ(t, x, y)` on an `n × n` grid over `[0, X(t)]` at each output time.
fn run_kernel(cfg: &ExperimentConfig, art: &mut ArtifactSet) -> LabResult<serde_json::Value> {
    let times = cfg.output_times();
    let pts = cfg.n;
    if pts.saturating_mul(pts).saturating_mul(times.len()) > KERNEL_TABLE_LIMIT {
        return Err(LabError::invalid(
            "n",
            format!("kernel table of {pts}^2 x {} entries exceeds {KERNEL_TABLE_LIMIT}", times.len()),
        ));
    }
    let k = PsiKernel::new(cfg.lambda)?;
    let mut table = Table::new(vec!["t", "x", "y", "psi"]);
    let mut x_max = Vec::new();
    let (mut mass, mut sym) = (0.0f64, 0.0f64);
    for &t in &times {
        let xm = ContinuumKernelParams::for_time(cfg.lambda, t, 1, 1)?.x_max;
        x_max.push(xm);
        let xs: Vec<f64> = (0..pts).map(|i| xm * i as f64 / (pts - 1) as f64).collect();
        for &x in &xs {
            for &y in &xs {
                let v = k.eval(t, x, y);
                let w = k.eval(t, y, x);
                if v.max(w) > 0.0 {
                    sym = sym.max((v - w).abs() / v.max(w));
                }
                table.push(vec![t, x, y, v]);
            }
        }
        for y in [0.0, 0.25 * xm, 0.5 * xm] {
            mass = mass.max((psi_mass(cfg.lambda, t, y)? - 1.0).abs());
        }
    }
    art.add_table("kernel.csv", &table)?;
    to_value(&KernelSummary {
        kind: "kernel_table",
        config_hash: cfg.hash(),
        lambda: cfg.lambda,
        points: pts,
        times,
        x_max,
        mass_error: mass,
        symmetry_error: sym,
    })
}

/// Tail flow from the preset and the self-similarity error `Û` vs `ρ𝒢_λ`.
fn run_scaling(cfg: &ExperimentConfig, art: &mut ArtifactSet) -> LabResult<serde_json::Value> {
    let c0 = cfg.initial_state()?;
    let u0 = tail_transform(&c0.c[1..]);
    let times = cfg.output_times();
    let traj = solve_np(&u0, &heat_config(cfg, times))?;
    let window = if cfg.lambda == 0.0 { (0.0, 3.0) } else { (0.1, 3.0) };
    let mut errs = Vec::new();
    let mut table = Table::new(vec!["t", "sup_error"]);
    for (t, f) in traj.times.iter().zip(&traj.fields) {
        let e = self_similarity_error(f, *t, cfg.lambda, c0.rho, window)?;
        errs.push((*t, e));
        table.push(vec![*t, e]);
    }
    art.add_table("self_similarity.csv", &table)?;
    if cfg.snapshots {
        art.add_table("snapshots.csv", &snapshot_table(&traj.times, &traj.fields, 1))?;
    }
    let z = scaling_constants(cfg.lambda)?.z_lambda;
    let d = traj.diagnostics;
    to_value(&ScalingSummary {
        kind: "scaling",
        config_hash: cfg.hash(),
        lambda: cfg.lambda,
        rho: c0.rho,
        n: cfg.n,
        window,
        final_error_over_rho_z: errs.last().map(|(_, e)| e * z / c0.rho),
        decreasing: errs.windows(2).all(|w| w[1].1 < w[0].1),
        errors: errs,
        boundary_level: d.boundary_level,
        truncation_contaminated: d.truncation_contaminated,
    })
}

fn run_verify(cfg: &ExperimentConfig, art: &mut ArtifactSet) -> LabResult<(serde_json::Value, i32)> {
    let ids: Vec<u32> = if cfg.criteria.is_empty() {
        (1..=verify::CRITERIA).collect()
    } else {
        cfg.criteria.clone()
    };
    let mut checks = Vec::new();
    for id in ids {
        let r = verify::run_criterion(id, cfg.seed)?;
        art.timing(format!("criterion {id}"), r.elapsed_seconds);
        checks.push(r);
    }
    let all_pass = checks.iter().all(|c| c.passed());
    let s = VerifySummary {
        kind: "verify",
        config_hash: cfg.hash(),
        seed: cfg.seed,
        all_pass,
        checks,
    };
    art.add_json("verify.json", &s)?;
    Ok((to_value(&s)?, if all_pass { 0 } else { EXIT_VERIFY_FAILED }))
}
