//! Experiment configuration: JSON schema, defaults and validation.

use std::path::{Path, PathBuf};

use edg_core::edg::ClusterState;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, LabResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "EDG_LAB_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Edg,
    Heat,
    KernelTable,
    Scaling,
    Verify,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Edg => "edg",
            ExperimentKind::Heat => "heat",
            ExperimentKind::KernelTable => "kernel_table",
            ExperimentKind::Scaling => "scaling",
            ExperimentKind::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// `c_1 = ρ`, `c_0 = 1 - ρ`.
    Monodisperse,
    /// Geometric tail `c_k ∝ q^{k-1}`, normalised to `(1, ρ)`.
    Geometric { q: f64 },
    /// Whitespace- or comma-separated `c_0 .. c_N` read from a file.
    Custom { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgMethod {
    TimeChange,
    Direct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
    /// Halt threshold on `U(N) / ρ` (time change) or `U(N) / ‖U₀‖₁` (heat).
    pub truncation: f64,
    /// Blow-up ceiling on `M_λ / M_λ(0)`.
    pub ceiling: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            atol: 1e-10,
            rtol: 1e-8,
            truncation: 1e-12,
            ceiling: 1e4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub kind: ExperimentKind,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "default_rho")]
    pub rho: f64,
    #[serde(default = "default_initial")]
    pub initial: InitialData,
    #[serde(default = "default_n")]
    pub n: usize,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    /// Step cap for the lattice heat flows; `None` lets the scheme choose.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_method")]
    pub method: EdgMethod,
    /// Number of log-spaced output times in `[t_end / 10^decades, t_end]`.
    #[serde(default = "default_outputs")]
    pub outputs: usize,
    #[serde(default = "default_decades")]
    pub decades: f64,
    /// Write `(t, k, value)` snapshots at the output times.
    #[serde(default)]
    pub snapshots: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Criteria to run in verify mode; empty means all.
    #[serde(default)]
    pub criteria: Vec<u32>,
}

fn default_rho() -> f64 {
    0.5
}
fn default_initial() -> InitialData {
    InitialData::Monodisperse
}
fn default_n() -> usize {
    4096
}
fn default_t_end() -> f64 {
    1e3
}
fn default_method() -> EdgMethod {
    EdgMethod::TimeChange
}
fn default_outputs() -> usize {
    61
}
fn default_decades() -> f64 {
    3.0
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            lambda: 0.0,
            rho: default_rho(),
            initial: default_initial(),
            n: default_n(),
            t_end: default_t_end(),
            dt: None,
            tolerances: Tolerances::default(),
            method: default_method(),
            outputs: default_outputs(),
            decades: default_decades(),
            snapshots: false,
            output_dir: None,
            seed: 0,
            criteria: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> LabResult<Self> {
        serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            LabError::invalid(field_from_serde(&msg), msg.clone())
        })
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> LabResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(LabError::invalid(
                "schema_version",
                format!("expected {SCHEMA_VERSION}, got {}", self.schema_version),
            ));
        }
        if !self.lambda.is_finite() || !(0.0..2.0).contains(&self.lambda) {
            return Err(LabError::invalid("lambda", format!("must lie in [0, 2), got {}", self.lambda)));
        }
        if !(self.rho > 0.0) || !self.rho.is_finite() {
            return Err(LabError::invalid("rho", format!("must be positive, got {}", self.rho)));
        }
        match &self.initial {
            InitialData::Monodisperse if self.rho > 1.0 => {
                return Err(LabError::invalid(
                    "rho",
                    format!("monodisperse data needs rho <= 1, got {}", self.rho),
                ));
            }
            InitialData::Geometric { q } if !(*q > 0.0 && *q < 1.0) => {
                return Err(LabError::invalid("initial.q", format!("must lie in (0, 1), got {q}")));
            }
            _ => {}
        }
        if self.n < 3 {
            return Err(LabError::invalid("n", format!("must be at least 3, got {}", self.n)));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(LabError::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(LabError::invalid("dt", format!("must be positive, got {dt}")));
            }
        }
        let tol = &self.tolerances;
        for (name, v) in [
            ("tolerances.atol", tol.atol),
            ("tolerances.rtol", tol.rtol),
            ("tolerances.truncation", tol.truncation),
            ("tolerances.ceiling", tol.ceiling),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return Err(LabError::invalid(name, format!("must be positive, got {v}")));
            }
        }
        if tol.ceiling <= 1.0 {
            return Err(LabError::invalid("tolerances.ceiling", "must exceed 1"));
        }
        if !(self.decades > 0.0) || !self.decades.is_finite() {
            return Err(LabError::invalid("decades", format!("must be positive, got {}", self.decades)));
        }
        if let Some(bad) = self.criteria.iter().find(|c| !(1..=16).contains(*c)) {
            return Err(LabError::invalid("criteria", format!("criterion {bad} does not exist")));
        }
        Ok(())
    }

    /// Initial cluster state from the preset; normalisation is checked, never forced.
    pub fn initial_state(&self) -> LabResult<ClusterState> {
        let r = match &self.initial {
            InitialData::Monodisperse => ClusterState::monodisperse(self.lambda, self.rho, self.n),
            InitialData::Geometric { q } => ClusterState::geometric(self.lambda, self.rho, *q, self.n),
            InitialData::Custom { path } => {
                let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
                let mut c = Vec::new();
                for tok in text.split(|ch: char| ch.is_whitespace() || ch == ',').filter(|s| !s.is_empty()) {
                    let v: f64 = tok
                        .parse()
                        .map_err(|_| LabError::invalid("initial.path", format!("not a number: {tok:?}")))?;
                    c.push(v);
                }
                if c.len() != self.n + 1 {
                    return Err(LabError::invalid(
                        "initial.path",
                        format!("file holds {} values, expected n + 1 = {}", c.len(), self.n + 1),
                    ));
                }
                ClusterState::new(self.lambda, self.rho, c)
            }
        };
        r.map_err(|e| LabError::invalid("initial", e.to_string()))
    }

    /// Output times: `outputs` log-spaced points ending at `t_end`.
    pub fn output_times(&self) -> Vec<f64> {
        log_times(self.t_end, self.decades, self.outputs)
    }

    /// Canonical JSON of the config without its output directory.
    pub fn canonical_json(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        serde_json::to_string(&c).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }

    /// Configured directory, else `$EDG_LAB_OUT`, else `./edg-lab-out`.
    pub fn resolved_output_dir(&self) -> PathBuf {
        if let Some(d) = &self.output_dir {
            return d.clone();
        }
        std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("edg-lab-out"))
    }
}

pub fn log_times(t_end: f64, decades: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_end],
        _ => (0..count)
            .map(|i| {
                let s = (i as f64 / (count - 1) as f64 - 1.0) * decades;
                if i + 1 == count {
                    t_end
                } else {
                    t_end * 10f64.powf(s)
                }
            })
            .collect(),
    }
}

// serde messages name fields as "unknown field `x`" or "missing field `x`"
fn field_from_serde(msg: &str) -> &str {
    msg.split('`').nth(1).unwrap_or("config")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_output_dir() {
        let mut a = ExperimentConfig::new(ExperimentKind::Edg);
        let h = a.hash();
        a.output_dir = Some("/tmp/x".into());
        assert_eq!(a.hash(), h);
        a.seed = 9;
        assert_ne!(a.hash(), h);
    }

    #[test]
    fn lambda_out_of_range_names_the_field() {
        let mut c = ExperimentConfig::new(ExperimentKind::Edg);
        c.lambda = 2.5;
        match c.validate() {
            Err(LabError::Validation { field, .. }) => assert_eq!(field, "lambda"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_field_is_named() {
        let e = ExperimentConfig::from_json(r#"{"schema_version":1,"kind":"edg","lamda":1}"#).unwrap_err();
        match e {
            LabError::Validation { field, .. } => assert_eq!(field, "lamda"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_times_end_exactly() {
        let t = log_times(1e3, 2.0, 21);
        assert_eq!(t.len(), 21);
        assert_eq!(t[20], 1e3);
        assert!((t[0] - 10.0).abs() < 1e-12);
        assert!(t.windows(2).all(|w| w[1] > w[0]));
    }
}
