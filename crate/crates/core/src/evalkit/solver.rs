//! Solvers: the uniform-random baseline and an external-process adapter.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{evaluate, EvalError, EvalOptions, EvalRecord, Truths};
use crate::manifest::{Ability, FamilyType};
use crate::par::Execution;
use crate::pipeline::Instance;
use crate::rng::Stream;

pub const RANDOM_SOLVER: &str = "random";

/// Responses drawn independently and uniformly from each instance's labels.
pub fn random_records(truths: &Truths, k: usize, seed: u64) -> Vec<EvalRecord> {
    let root = Stream::new(seed).split(RANDOM_SOLVER);
    truths
        .0
        .iter()
        .map(|(id, t)| {
            let mut s = root.split(id);
            EvalRecord {
                instance_id: id.clone(),
                solver: RANDOM_SOLVER.to_owned(),
                responses: (0..k).map(|_| Some(t.labels[s.index(t.labels.len())].clone())).collect(),
                latencies: vec![0.0; k],
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { mean, sd: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    pub resamples: usize,
    pub instances: usize,
    pub pass_at_1: Summary,
    pub pass_at_k: Summary,
    pub k_of_k: Summary,
    pub per_ability: BTreeMap<String, Summary>,
}

/// Metrics of the random solver over independent resamples.
pub fn random_baseline(
    truths: &Truths,
    k: usize,
    resamples: usize,
    seed: u64,
    execution: Execution,
) -> Result<RandomBaseline, EvalError> {
    if truths.is_empty() || resamples == 0 {
        return Err(EvalError::Empty);
    }
    let seeds = Stream::new(seed).split("resamples");
    let opts = EvalOptions {
        k,
        execution: Execution::Sequential,
        ..Default::default()
    };
    let reports = execution.try_map_range(resamples, |r| {
        evaluate(&random_records(truths, k, seeds.derive_seed(r as u64)), truths, &opts)
    })?;
    let col = |f: &dyn Fn(&super::EvalReport) -> f64| Summary::of(&reports.iter().map(f).collect::<Vec<_>>());
    let abilities: Vec<String> = reports[0].per_ability.keys().cloned().collect();
    Ok(RandomBaseline {
        resamples,
        instances: truths.len(),
        pass_at_1: col(&|r| r.overall.pass_at_1),
        pass_at_k: col(&|r| r.overall.pass_at_k),
        k_of_k: col(&|r| r.overall.k_of_k.unwrap_or(0.0)),
        per_ability: abilities
            .into_iter()
            .map(|a| {
                let s = col(&|r| r.per_ability[&a].pass_at_1);
                (a, s)
            })
            .collect(),
    })
}

/// What a solver is shown: no answer, parameters or seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicInstance {
    pub instance_id: String,
    pub family: FamilyType,
    pub ability: Ability,
    pub prompt: String,
    pub labels: Vec<String>,
    /// Stimulus first, then candidates in label order.
    pub panels: Vec<PathBuf>,
    pub k: usize,
}

impl PublicInstance {
    /// Panel paths are resolved against `dir` (the instance directory).
    pub fn of(instance: &Instance, dir: &Path, k: usize) -> Self {
        Self {
            instance_id: instance.instance_id.clone(),
            family: instance.family,
            ability: instance.ability,
            prompt: instance.prompt.clone(),
            labels: instance.labels().into_iter().map(str::to_owned).collect(),
            panels: instance.panels.iter().map(|p| dir.join(&p.file)).collect(),
            k,
        }
    }
}

/// An external program reading a [`PublicInstance`] as JSON on stdin and printing
/// up to k labels separated by whitespace. `-` marks an abstention; missing slots
/// are abstentions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProcessSolver {
    pub name: String,
    pub program: PathBuf,
    pub args: Vec<String>,
}

impl ProcessSolver {
    pub fn solve(&self, view: &PublicInstance) -> Result<EvalRecord, EvalError> {
        let err = |m: String| EvalError::Solver(format!("{} on {}: {m}", self.name, view.instance_id));
        let input = serde_json::to_vec(view).map_err(|e| err(e.to_string()))?;
        let start = Instant::now();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| err(e.to_string()))?;
        child.stdin.take().expect("piped").write_all(&input).map_err(|e| err(e.to_string()))?;
        let out = child.wait_with_output().map_err(|e| err(e.to_string()))?;
        let elapsed = start.elapsed().as_secs_f64();
        if !out.status.success() {
            return Err(err(format!("exited with {}", out.status)));
        }
        let text = String::from_utf8_lossy(&out.stdout);
        let mut responses: Vec<Option<String>> =
            text.split_whitespace().take(view.k).map(|t| (t != "-").then(|| t.to_owned())).collect();
        responses.resize(view.k, None);
        Ok(EvalRecord {
            instance_id: view.instance_id.clone(),
            solver: self.name.clone(),
            responses,
            // wall time of the call split evenly over the slots
            latencies: vec![elapsed / view.k as f64; view.k],
        })
    }
}
