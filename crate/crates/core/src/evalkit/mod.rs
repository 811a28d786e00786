//! Offline scoring of solver response logs: pass@1, pass@k, k-of-k reliability,
//! stratified cells, latency summaries and the human simple-pass rate.

mod human;
mod solver;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::manifest::{Ability, Bin, FamilyType};
use crate::par::Execution;
use crate::pipeline::{Instance, UNBINNED};

pub use human::{human_simple_pass, Annotation, HumanPassConfig, HumanPassReport};
pub use solver::{
    random_baseline, random_records, PublicInstance, ProcessSolver, RandomBaseline, Summary, RANDOM_SOLVER,
};

pub const DEFAULT_K: usize = 3;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no records to score")]
    Empty,
    #[error("record for {instance_id} has {got} responses, {k} required")]
    Short { instance_id: String, got: usize, k: usize },
    #[error("record for {instance_id} has {got} responses, at most {k} allowed")]
    Long { instance_id: String, got: usize, k: usize },
    #[error("record refers to unknown instance {0}")]
    UnknownInstance(String),
    #[error("record for {instance_id}: label {label:?} is not a candidate")]
    UnknownLabel { instance_id: String, label: String },
    #[error("record for {instance_id}: ranked responses repeat {label:?}")]
    RepeatedRank { instance_id: String, label: String },
    #[error("unknown stratification axis {0:?}")]
    UnknownAxis(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solver: {0}")]
    Solver(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Responses of one solver to one instance. A `None` slot is an abstention.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub instance_id: String,
    pub solver: String,
    pub responses: Vec<Option<String>>,
    /// Seconds per response.
    #[serde(default)]
    pub latencies: Vec<f64>,
}

/// How the k responses are read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Semantics {
    /// k independent completions; the first is the deterministic run.
    #[default]
    Sampled,
    /// A ranked top-k list of distinct labels; k-of-k is undefined.
    Ranked,
}

impl FromStr for Semantics {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sampled" => Ok(Semantics::Sampled),
            "ranked" => Ok(Semantics::Ranked),
            _ => Err(format!("unknown semantics {s:?}; expected sampled or ranked")),
        }
    }
}

/// What scoring needs to know about an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    pub labels: Vec<String>,
    pub correct_label: String,
    pub ability: Ability,
    pub family: FamilyType,
    pub bin: Option<Bin>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Truths(pub BTreeMap<String, Truth>);

impl Truths {
    pub fn from_instances<'a>(instances: impl IntoIterator<Item = &'a Instance>) -> Self {
        Self(
            instances
                .into_iter()
                .map(|i| {
                    let t = Truth {
                        labels: i.labels().into_iter().map(str::to_owned).collect(),
                        correct_label: i.correct_label.clone(),
                        ability: i.ability,
                        family: i.family,
                        bin: i.difficulty.map(|d| d.bin),
                    };
                    (i.instance_id.clone(), t)
                })
                .collect(),
        )
    }

    pub fn get(&self, id: &str) -> Option<&Truth> {
        self.0.get(id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Counts behind the three metrics; merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    n: usize,
    first: usize,
    any: usize,
    all: usize,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            n: self.n + o.n,
            first: self.first + o.first,
            any: self.any + o.any,
            all: self.all + o.all,
        }
    }

    fn of(record: &EvalRecord, truth: &Truth, k: usize) -> Tally {
        let hit = |r: &Option<String>| r.as_deref() == Some(truth.correct_label.as_str());
        let slots = &record.responses[..k.min(record.responses.len())];
        Tally {
            n: 1,
            first: usize::from(slots.first().is_some_and(hit)),
            any: usize::from(slots.iter().any(hit)),
            all: usize::from(slots.len() == k && slots.iter().all(hit)),
        }
    }

    fn rate(count: usize, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            count as f64 / n as f64
        }
    }

    fn cell(self, semantics: Semantics) -> Cell {
        Cell {
            n: self.n,
            pass_at_1: Self::rate(self.first, self.n),
            pass_at_k: Self::rate(self.any, self.n),
            k_of_k: (semantics == Semantics::Sampled).then(|| Self::rate(self.all, self.n)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub pass_at_1: f64,
    pub pass_at_k: f64,
    /// Absent under ranked semantics.
    pub k_of_k: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencySummary {
    pub n: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
}

/// Linear-interpolation quantile of sorted data.
fn sorted_quantile(v: &[f64], q: f64) -> f64 {
    let pos = q * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

impl LatencySummary {
    pub fn of(latencies: &[f64]) -> Option<Self> {
        let mut v: Vec<f64> = latencies.iter().copied().filter(|x| x.is_finite()).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let (q1, q3) = (sorted_quantile(&v, 0.25), sorted_quantile(&v, 0.75));
        Some(Self {
            n: v.len(),
            median: sorted_quantile(&v, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Ability,
    Bin,
    Family,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::Ability, Axis::Bin, Axis::Family];

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Ability => "ability",
            Axis::Bin => "bin",
            Axis::Family => "family",
        }
    }

    fn key(self, t: &Truth) -> String {
        match self {
            Axis::Ability => t.ability.to_string(),
            Axis::Bin => t.bin.map_or(UNBINNED.to_owned(), |b| b.to_string()),
            Axis::Family => t.family.to_string(),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Axis {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self, EvalError> {
        Axis::ALL.into_iter().find(|a| a.as_str() == s).ok_or_else(|| EvalError::UnknownAxis(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalOptions {
    pub k: usize,
    pub semantics: Semantics,
    pub execution: Execution,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            semantics: Semantics::Sampled,
            execution: Execution::Parallel,
        }
    }
}

/// Check a record against its instance. Returns the instance's truth.
pub fn check_record<'t>(record: &EvalRecord, truths: &'t Truths, opts: &EvalOptions) -> Result<&'t Truth, EvalError> {
    let id = &record.instance_id;
    let truth = truths.get(id).ok_or_else(|| EvalError::UnknownInstance(id.clone()))?;
    let got = record.responses.len();
    if got == 0 {
        return Err(EvalError::Short {
            instance_id: id.clone(),
            got,
            k: 1,
        });
    }
    if got > opts.k {
        return Err(EvalError::Long {
            instance_id: id.clone(),
            got,
            k: opts.k,
        });
    }
    let mut seen: Vec<&str> = Vec::new();
    for label in record.responses.iter().flatten() {
        if !truth.labels.contains(label) {
            return Err(EvalError::UnknownLabel {
                instance_id: id.clone(),
                label: label.clone(),
            });
        }
        if opts.semantics == Semantics::Ranked && seen.contains(&label.as_str()) {
            return Err(EvalError::RepeatedRank {
                instance_id: id.clone(),
                label: label.clone(),
            });
        }
        seen.push(label);
    }
    Ok(truth)
}

fn require_k(records: &[EvalRecord], k: usize) -> Result<(), EvalError> {
    match records.iter().find(|r| r.responses.len() < k) {
        Some(r) => Err(EvalError::Short {
            instance_id: r.instance_id.clone(),
            got: r.responses.len(),
            k,
        }),
        None => Ok(()),
    }
}

fn tally(records: &[EvalRecord], truths: &Truths, opts: &EvalOptions) -> Result<Tally, EvalError> {
    if records.is_empty() {
        return Err(EvalError::Empty);
    }
    let parts = opts.execution.map_slice(records, |r| check_record(r, truths, opts).map(|t| Tally::of(r, t, opts.k)));
    parts.into_iter().try_fold(Tally::default(), |acc, t| Ok(acc.merge(t?)))
}

/// Fraction whose first response is correct.
pub fn pass_at_1(records: &[EvalRecord], truths: &Truths) -> Result<f64, EvalError> {
    let opts = EvalOptions {
        k: records.iter().map(|r| r.responses.len()).max().unwrap_or(1).max(1),
        ..Default::default()
    };
    let t = tally(records, truths, &opts)?;
    Ok(Tally::rate(t.first, t.n))
}

/// Fraction with a correct label among the first `k` responses.
pub fn pass_at_k(records: &[EvalRecord], truths: &Truths, k: usize) -> Result<f64, EvalError> {
    require_k(records, k)?;
    let t = tally(records, truths, &EvalOptions { k, ..Default::default() })?;
    Ok(Tally::rate(t.any, t.n))
}

/// Fraction whose first `k` responses are all correct.
pub fn k_of_k(records: &[EvalRecord], truths: &Truths, k: usize) -> Result<f64, EvalError> {
    require_k(records, k)?;
    let t = tally(records, truths, &EvalOptions { k, ..Default::default() })?;
    Ok(Tally::rate(t.all, t.n))
}

/// Metric cells keyed by the axis value; empty cells are absent.
pub fn stratify(
    records: &[EvalRecord],
    truths: &Truths,
    axis: Axis,
    opts: &EvalOptions,
) -> Result<BTreeMap<String, Cell>, EvalError> {
    let mut tallies: BTreeMap<String, Tally> = BTreeMap::new();
    for r in records {
        let t = check_record(r, truths, opts)?;
        let e = tallies.entry(axis.key(t)).or_default();
        *e = e.merge(Tally::of(r, t, opts.k));
    }
    Ok(tallies.into_iter().map(|(k, t)| (k, t.cell(opts.semantics))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub solver: String,
    pub k: usize,
    pub semantics: Semantics,
    pub overall: Cell,
    pub per_ability: BTreeMap<String, Cell>,
    pub per_bin: BTreeMap<String, Cell>,
    pub per_family: BTreeMap<String, Cell>,
    /// Response latency per family.
    pub latency: BTreeMap<String, LatencySummary>,
}

/// Full report for one solver's records.
pub fn evaluate(records: &[EvalRecord], truths: &Truths, opts: &EvalOptions) -> Result<EvalReport, EvalError> {
    require_k(records, opts.k)?;
    let overall = tally(records, truths, opts)?.cell(opts.semantics);
    let mut latencies: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for r in records {
        let t = check_record(r, truths, opts)?;
        latencies.entry(t.family.to_string()).or_default().extend(&r.latencies);
    }
    let mut solvers: Vec<&str> = records.iter().map(|r| r.solver.as_str()).collect();
    solvers.dedup();
    Ok(EvalReport {
        solver: solvers.join("+"),
        k: opts.k,
        semantics: opts.semantics,
        overall,
        per_ability: stratify(records, truths, Axis::Ability, opts)?,
        per_bin: stratify(records, truths, Axis::Bin, opts)?,
        per_family: stratify(records, truths, Axis::Family, opts)?,
        latency: latencies.into_iter().filter_map(|(f, v)| LatencySummary::of(&v).map(|s| (f, s))).collect(),
    })
}

/// One report per solver, in solver order.
pub fn evaluate_by_solver(records: &[EvalRecord], truths: &Truths, opts: &EvalOptions) -> Result<Vec<EvalReport>, EvalError> {
    let mut groups: BTreeMap<&str, Vec<EvalRecord>> = BTreeMap::new();
    for r in records {
        groups.entry(r.solver.as_str()).or_default().push(r.clone());
    }
    if groups.is_empty() {
        return Err(EvalError::Empty);
    }
    groups.values().map(|g| evaluate(g, truths, opts)).collect()
}

pub const RELIABILITY_HEADER: &str = "solver,pass_at_k,k_of_k";

/// Coverage against reliability, one row per report.
pub fn reliability_coverage_csv(reports: &[EvalReport]) -> String {
    let mut out = format!("{RELIABILITY_HEADER}\n");
    for r in reports {
        let kk = r.overall.k_of_k.map_or(String::new(), |v| v.to_string());
        out.push_str(&format!("{},{},{}\n", csv_field(&r.solver), r.overall.pass_at_k, kk));
    }
    out
}

pub const CELLS_HEADER: &str = "solver,axis,cell,n,pass_at_1,pass_at_k,k_of_k";

/// Overall and stratified cells of every report.
pub fn cells_csv(reports: &[EvalReport]) -> String {
    cells_csv_for(reports, &[None, Some(Axis::Ability), Some(Axis::Bin), Some(Axis::Family)])
}

/// Cells of one stratification, `None` for the overall row, in [`CELLS_HEADER`] layout.
pub fn axis_csv(reports: &[EvalReport], axis: Option<Axis>) -> String {
    cells_csv_for(reports, &[axis])
}

fn cells_csv_for(reports: &[EvalReport], axes: &[Option<Axis>]) -> String {
    let mut out = format!("{CELLS_HEADER}\n");
    for r in reports {
        for axis in axes {
            let rows: Vec<(&str, String, &Cell)> = match axis {
                None => vec![("overall", "all".to_owned(), &r.overall)],
                Some(a) => {
                    let cells = match a {
                        Axis::Ability => &r.per_ability,
                        Axis::Bin => &r.per_bin,
                        Axis::Family => &r.per_family,
                    };
                    cells.iter().map(|(k, c)| (a.as_str(), k.clone(), c)).collect()
                }
            };
            for (axis, key, c) in rows {
                let kk = c.k_of_k.map_or(String::new(), |v| v.to_string());
                out.push_str(&format!(
                    "{},{axis},{key},{},{},{},{kk}\n",
                    csv_field(&r.solver),
                    c.n,
                    c.pass_at_1,
                    c.pass_at_k
                ));
            }
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

/// One JSON record per line; blank lines are skipped.
pub fn read_records(input: impl BufRead) -> Result<Vec<EvalRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line).map_err(|e| EvalError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(r);
    }
    Ok(out)
}

pub fn write_records(records: &[EvalRecord], mut out: impl Write) -> Result<(), EvalError> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests;
