use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edg_lab::config::{EdgMethod, ExperimentConfig, ExperimentKind, InitialData};
use edg_lab::error::{LabError, LabResult};
use edg_lab::{run_experiment, sweep};

#[derive(Parser)]
#[command(name = "edg-lab", version, about = "Runs exchange-driven growth experiments and acceptance checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster dynamics by the time-change or direct route.
    Edg {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        method: Option<Method>,
    },
    /// Lattice density flow from the preset data.
    Heat {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Tabulate the continuum kernel on an n x n grid.
    Kernel {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Self-similarity of the lattice tail flow.
    Scaling {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run acceptance criteria; exit 1 if any fails.
    Verify {
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<u32>,
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; defaults to the config value, then $EDG_LAB_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a template config over lambda and seed lists concurrently.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0")]
        seeds: Vec<u64>,
        /// Output directory; defaults to the config value, then $EDG_LAB_OUT.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    TimeChange,
    Direct,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Monodisperse,
    Geometric,
    Custom,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    lambda: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    rho: Option<f64>,
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// Ratio of the geometric preset.
    #[arg(long)]
    q: Option<f64>,
    /// File with c_0..c_N for the custom preset.
    #[arg(long)]
    initial_file: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    truncation: Option<f64>,
    #[arg(long)]
    ceiling: Option<f64>,
    #[arg(long)]
    outputs: Option<usize>,
    #[arg(long)]
    decades: Option<f64>,
    #[arg(long)]
    snapshots: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to the config value, then $EDG_LAB_OUT.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn build(self, kind: ExperimentKind) -> LabResult<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => {
                let c = ExperimentConfig::load(p)?;
                if c.kind != kind {
                    return Err(LabError::invalid(
                        "kind",
                        format!("config is for `{}`, subcommand runs `{}`", c.kind.as_str(), kind.as_str()),
                    ));
                }
                c
            }
            None => ExperimentConfig::new(kind),
        };
        set(&mut c.lambda, self.lambda);
        set(&mut c.rho, self.rho);
        set(&mut c.n, self.n);
        set(&mut c.t_end, self.t_end);
        set(&mut c.tolerances.atol, self.atol);
        set(&mut c.tolerances.rtol, self.rtol);
        set(&mut c.tolerances.truncation, self.truncation);
        set(&mut c.tolerances.ceiling, self.ceiling);
        set(&mut c.outputs, self.outputs);
        set(&mut c.decades, self.decades);
        set(&mut c.seed, self.seed);
        if self.dt.is_some() {
            c.dt = self.dt;
        }
        if self.snapshots {
            c.snapshots = true;
        }
        if self.out.is_some() {
            c.output_dir = self.out;
        }
        match self.preset {
            Some(Preset::Monodisperse) => c.initial = InitialData::Monodisperse,
            Some(Preset::Geometric) => {
                let q = self.q.ok_or_else(|| LabError::invalid("initial.q", "geometric preset needs --q"))?;
                c.initial = InitialData::Geometric { q };
            }
            Some(Preset::Custom) => {
                let path = self
                    .initial_file
                    .ok_or_else(|| LabError::invalid("initial.path", "custom preset needs --initial-file"))?;
                c.initial = InitialData::Custom { path };
            }
            None => {
                if let (Some(q), InitialData::Geometric { q: old }) = (self.q, &mut c.initial) {
                    *old = q;
                }
            }
        }
        Ok(c)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn report(cfg: &ExperimentConfig) -> LabResult<i32> {
    let o = run_experiment(cfg)?;
    if let Some(checks) = o.summary.get("checks").and_then(|c| c.as_array()) {
        for c in checks {
            let status = if c["status"] == "pass" { "PASS" } else { "FAIL" };
            println!(
                "criterion {}: {status} {} ({})",
                c["id"],
                c["name"].as_str().unwrap_or(""),
                c["detail"].as_str().unwrap_or("")
            );
        }
    }
    for f in &o.files {
        println!("wrote {}", f.display());
    }
    Ok(o.exit_code)
}

fn dispatch(cli: Cli) -> LabResult<i32> {
    match cli.command {
        Command::Edg { run, method } => {
            let mut c = run.build(ExperimentKind::Edg)?;
            match method {
                Some(Method::TimeChange) => c.method = EdgMethod::TimeChange,
                Some(Method::Direct) => c.method = EdgMethod::Direct,
                None => {}
            }
            report(&c)
        }
        Command::Heat { run } => report(&run.build(ExperimentKind::Heat)?),
        Command::Kernel { run } => report(&run.build(ExperimentKind::KernelTable)?),
        Command::Scaling { run } => report(&run.build(ExperimentKind::Scaling)?),
        Command::Verify { criteria, seed, out } => {
            let mut c = ExperimentConfig::new(ExperimentKind::Verify);
            c.criteria = criteria;
            set(&mut c.seed, seed);
            c.output_dir = out;
            report(&c)
        }
        Command::Sweep {
            config,
            lambdas,
            seeds,
            out,
        } => {
            let mut t = ExperimentConfig::load(&config)?;
            if out.is_some() {
                t.output_dir = out;
            }
            t.validate()?;
            let r = sweep::sweep(&t, &lambdas, &seeds)?;
            for (h, e) in &r.runs {
                let note = e.error.as_deref().unwrap_or("ok");
                println!("{h} lambda {} seed {}: exit {} {note}", e.lambda, e.seed, e.exit_code);
            }
            Ok(r.exit_code)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("edg-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
