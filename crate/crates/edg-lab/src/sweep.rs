//! Parameter sweeps: one isolated worker per `(λ, seed)`, merged by config hash.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::error::{LabError, LabResult};
use crate::output::ArtifactSet;
use crate::run::run_experiment;

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub seed: u64,
    pub exit_code: i32,
    pub summary: Option<serde_json::Value>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub template_hash: String,
    pub exit_code: i32,
    /// Results keyed by the child's config hash.
    pub runs: BTreeMap<String, SweepEntry>,
}

/// Larger codes are worse: 3 numerical, 2 validation, 1 verify failure.
fn worst(a: i32, b: i32) -> i32 {
    a.max(b)
}

/// Run every `(λ, seed)` combination of `template` concurrently and write
/// `sweep.json`; child artifacts go to `<out>/runs/<hash>`.
pub fn sweep(template: &ExperimentConfig, lambdas: &[f64], seeds: &[u64]) -> LabResult<SweepReport> {
    if lambdas.is_empty() || seeds.is_empty() {
        return Err(LabError::invalid("lambdas", "a sweep needs at least one combination"));
    }
    let start = Instant::now();
    let out = template.resolved_output_dir();
    let mut children = Vec::new();
    for &lambda in lambdas {
        for &seed in seeds {
            let mut c = template.clone();
            c.lambda = lambda;
            c.seed = seed;
            let h = c.hash();
            c.output_dir = Some(out.join("runs").join(&h));
            children.push((h, c));
        }
    }
    let results: Vec<(String, SweepEntry)> = children
        .into_par_iter()
        .map(|(h, c)| {
            let entry = match run_experiment(&c) {
                Ok(o) => SweepEntry {
                    lambda: c.lambda,
                    seed: c.seed,
                    exit_code: o.exit_code,
                    summary: Some(o.summary),
                    error: None,
                },
                Err(e) => SweepEntry {
                    lambda: c.lambda,
                    seed: c.seed,
                    exit_code: e.exit_code(),
                    summary: None,
                    error: Some(e.to_string()),
                },
            };
            (h, entry)
        })
        .collect();
    let runs: BTreeMap<String, SweepEntry> = results.into_iter().collect();
    let exit_code = runs.values().fold(0, |a, e| worst(a, e.exit_code));
    let report = SweepReport {
        template_hash: template.hash(),
        exit_code,
        runs,
    };
    let mut art = ArtifactSet::new(&out);
    art.add_json("sweep.json", &report)?;
    art.write(template, start.elapsed().as_secs_f64())?;
    Ok(report)
}
