use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{unix_now, Artifact, PipelineError, Synthesizer, SCHEMA_VERSION};
use crate::canonical::sha256_hex;
use crate::difficulty::DifficultyModel;
use crate::manifest::{Bin, FamilyType, Manifest};
use crate::par::Execution;
use crate::rng::Stream;

/// Index key for instances synthesized without a bin.
pub const UNBINNED: &str = "unbinned";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BinMix {
    pub easy: usize,
    pub medium: usize,
    pub hard: usize,
}

impl BinMix {
    pub fn new(easy: usize, medium: usize, hard: usize) -> Self {
        Self { easy, medium, hard }
    }

    pub fn total(&self) -> usize {
        self.easy + self.medium + self.hard
    }

    pub fn get(&self, bin: Bin) -> usize {
        match bin {
            Bin::Easy => self.easy,
            Bin::Medium => self.medium,
            Bin::Hard => self.hard,
        }
    }

    fn slot(&mut self, bin: Bin) -> &mut usize {
        match bin {
            Bin::Easy => &mut self.easy,
            Bin::Medium => &mut self.medium,
            Bin::Hard => &mut self.hard,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BatchEntry {
    pub manifest: Manifest,
    pub count: usize,
    /// Per-bin counts summing to `count`; `None` samples without a bin.
    pub mix: Option<BinMix>,
}

/// Split a batch-wide bin mix over families with the given counts. Every row sums to
/// its family count and every column to the global bin count.
pub fn apportion(counts: &[usize], global: BinMix) -> Result<Vec<BinMix>, String> {
    let total: usize = counts.iter().sum();
    if total != global.total() {
        return Err(format!("bin mix sums to {}, family counts to {total}", global.total()));
    }
    let mut rows = vec![BinMix::default(); counts.len()];
    if total == 0 {
        return Ok(rows);
    }
    let mut remainders = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        for b in Bin::ALL {
            let exact = (c * global.get(b)) as f64 / total as f64;
            *rows[i].slot(b) = exact.floor() as usize;
            remainders.push((exact - exact.floor(), i, b));
        }
    }
    // largest remainders first, then any cell whose row and column are both short
    remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let row_short = |rows: &[BinMix], i: usize| counts[i] > rows[i].total();
    let col_short = |rows: &[BinMix], b: Bin| global.get(b) > rows.iter().map(|r| r.get(b)).sum::<usize>();
    for &(_, i, b) in &remainders {
        if row_short(&rows, i) && col_short(&rows, b) {
            *rows[i].slot(b) += 1;
        }
    }
    for i in 0..counts.len() {
        for b in Bin::ALL {
            while row_short(&rows, i) && col_short(&rows, b) {
                *rows[i].slot(b) += 1;
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub instance_id: String,
    pub manifest: String,
    pub family: FamilyType,
    pub bin: Option<Bin>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetIndex {
    pub schema_version: u32,
    pub master_seed: u64,
    /// family -> bin (or `unbinned`) -> count.
    pub counts: BTreeMap<String, BTreeMap<String, usize>>,
    /// Sorted by instance id.
    pub instances: Vec<IndexEntry>,
}

impl DatasetIndex {
    pub fn total(&self) -> usize {
        self.instances.len()
    }

    pub fn bin_totals(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for per_bin in self.counts.values() {
            for (b, n) in per_bin {
                *out.entry(b.clone()).or_default() += n;
            }
        }
        out
    }

    /// Digest over the sorted instance ids; ids already exclude timestamps.
    pub fn digest(&self) -> String {
        let joined: Vec<&str> = self.instances.iter().map(|e| e.instance_id.as_str()).collect();
        sha256_hex(joined.join("\n").as_bytes())
    }

    fn build(master_seed: u64, artifacts: &[Artifact]) -> Self {
        let mut counts: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
        let instances = artifacts
            .iter()
            .map(|a| {
                let i = &a.instance;
                let bin = i.difficulty.as_ref().map(|d| d.bin);
                let key = bin.map_or(UNBINNED.to_owned(), |b| b.to_string());
                *counts.entry(i.family.to_string()).or_default().entry(key).or_default() += 1;
                IndexEntry {
                    instance_id: i.instance_id.clone(),
                    manifest: i.manifest.clone(),
                    family: i.family,
                    bin,
                    seed: i.seed,
                }
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            master_seed,
            counts,
            instances,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub index: DatasetIndex,
    /// Same order as `index.instances`.
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Copy, Default)]
pub struct BatchOptions<'a> {
    pub model: Option<&'a DifficultyModel>,
    pub execution: Execution,
    /// Defaults to the current time, shared by every instance of the batch.
    pub created_at: Option<u64>,
}

struct Job<'a> {
    manifest: &'a Manifest,
    bin: Option<Bin>,
    seed: u64,
}

fn cell_label(bin: Option<Bin>) -> String {
    bin.map_or(UNBINNED.to_owned(), |b| b.to_string())
}

/// Seeds come from `master_seed` split by manifest key, bin and position.
pub fn synthesize_batch(entries: &[BatchEntry], master_seed: u64, opts: BatchOptions<'_>) -> Result<Dataset, PipelineError> {
    let master = Stream::new(master_seed);
    let mut jobs = Vec::new();
    for e in entries {
        let cells: Vec<(Option<Bin>, usize)> = match e.mix {
            None => vec![(None, e.count)],
            Some(mix) => {
                if mix.total() != e.count {
                    return Err(PipelineError::Format {
                        path: e.manifest.key(),
                        message: format!("bin mix sums to {} for a count of {}", mix.total(), e.count),
                    });
                }
                Bin::ALL.into_iter().map(|b| (Some(b), mix.get(b))).collect()
            }
        };
        let per_manifest = master.split(&e.manifest.key());
        for (bin, n) in cells {
            let stream = per_manifest.split(&cell_label(bin));
            jobs.extend((0..n).map(|j| Job {
                manifest: &e.manifest,
                bin,
                seed: stream.derive_seed(j as u64),
            }));
        }
    }
    let created_at = opts.created_at.unwrap_or_else(unix_now);
    let mut artifacts = opts.execution.try_map_range(jobs.len(), |i| {
        let job = &jobs[i];
        Synthesizer::new(job.manifest)
            .model(opts.model)
            .created_at(created_at)
            .run(job.seed, job.bin)
            .map_err(|e| PipelineError::Cell {
                manifest: job.manifest.key(),
                bin: cell_label(job.bin),
                source: Box::new(e),
            })
    })?;
    artifacts.sort_by(|a, b| a.instance.instance_id.cmp(&b.instance.instance_id));
    let index = DatasetIndex::build(master_seed, &artifacts);
    Ok(Dataset { index, artifacts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn apportion_matches_rows_and_columns() {
        let rows = apportion(&[150; 7], BinMix::new(500, 300, 250)).unwrap();
        assert!(rows.iter().all(|r| r.total() == 150));
        let col = |b| rows.iter().map(|r: &BinMix| r.get(b)).sum::<usize>();
        assert_eq!((col(Bin::Easy), col(Bin::Medium), col(Bin::Hard)), (500, 300, 250));
    }

    #[test]
    fn apportion_rejects_mismatched_totals() {
        assert!(apportion(&[10, 10], BinMix::new(5, 5, 5)).is_err());
    }

    proptest::proptest! {
        #[test]
        fn apportion_is_exact(counts in proptest::collection::vec(0usize..40, 1..9), a in 0u32..100, b in 0u32..100) {
            let total: usize = counts.iter().sum();
            let e = total * a as usize / 100;
            let m = (total - e) * b as usize / 100;
            let mix = BinMix::new(e, m, total - e - m);
            let rows = apportion(&counts, mix).unwrap();
            for (r, c) in rows.iter().zip(&counts) {
                proptest::prop_assert_eq!(r.total(), *c);
            }
            for bin in Bin::ALL {
                proptest::prop_assert_eq!(rows.iter().map(|r| r.get(bin)).sum::<usize>(), mix.get(bin));
            }
        }
    }
}
