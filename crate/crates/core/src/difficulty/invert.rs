//! From a target difficulty back to knob values.

use std::collections::VecDeque;

use super::{blend, DifficultyError, DifficultyModel, FamilyModel};
use crate::manifest::{sample_params, Manifest, ParamDomain, ParamSample, ParamValue};
use crate::rng::Stream;

/// Largest knob grid searched exhaustively.
pub const SEARCH_GRID_LIMIT: usize = 100_000;
const RANDOM_SEARCH: usize = 2000;
const COORDINATE_ROUNDS: usize = 10;
/// Points per real knob in the search grid.
const REAL_GRID: usize = 21;
const MAX_ADJUSTMENTS: usize = 20;
/// Step along the iso-difficulty line between adjustments.
const LINE_STEP: f64 = 0.05;
const HISTORY: usize = 50;
const DIVERSITY_WEIGHT: f64 = 0.1;

type Admissible<'a> = Box<dyn Fn(&ParamSample) -> bool + Sync + 'a>;

/// Inversion with a memory of recent outputs, used by the diversity penalty.
pub struct Inverter<'a> {
    model: &'a DifficultyModel,
    manifest: &'a Manifest,
    family: &'a FamilyModel,
    /// Candidate values per feature knob, with their normalised positions.
    axes: Vec<Vec<(ParamValue, f64)>>,
    history: VecDeque<Vec<f64>>,
    admissible: Option<Admissible<'a>>,
}

impl<'a> Inverter<'a> {
    pub fn new(model: &'a DifficultyModel, manifest: &'a Manifest) -> Result<Self, DifficultyError> {
        let family = model.family(manifest.family()).ok_or(DifficultyError::NoFamily(manifest.family()))?;
        let axes = manifest
            .difficulty_features
            .iter()
            .map(|k| {
                let d = &manifest.params[k];
                let values = d.grid().unwrap_or_else(|| match d {
                    ParamDomain::Real { min, max } => (0..REAL_GRID)
                        .map(|i| ParamValue::Real(min + (max - min) * i as f64 / (REAL_GRID - 1) as f64))
                        .collect(),
                    _ => Vec::new(),
                });
                values
                    .into_iter()
                    .filter_map(|v| d.normalize(&v).map(|x| (v, x)))
                    .collect::<Vec<_>>()
            })
            .collect();
        Ok(Self {
            model,
            manifest,
            family,
            axes,
            history: VecDeque::new(),
            admissible: None,
        })
    }

    /// Only knobs passing `f` are returned.
    pub fn with_admissibility(mut self, f: impl Fn(&ParamSample) -> bool + Sync + 'a) -> Self {
        self.admissible = Some(Box::new(f));
        self
    }

    fn phi(&self, pick: &[usize]) -> Vec<f64> {
        pick.iter().zip(&self.axes).map(|(&i, a)| a[i].1).collect()
    }

    pub fn predicted_d(&self, phi: &[f64]) -> f64 {
        let (t, e) = self.family.calibrated(phi);
        blend(t, e, self.model.alpha)
    }

    fn diversity(&self, phi: &[f64]) -> f64 {
        if self.history.is_empty() || phi.is_empty() {
            return 0.0;
        }
        let scale = (phi.len() as f64).sqrt();
        let nearest = self
            .history
            .iter()
            .map(|h| h.iter().zip(phi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt() / scale)
            .fold(f64::INFINITY, f64::min);
        DIVERSITY_WEIGHT * (1.0 - nearest).max(0.0)
    }

    fn objective(&self, phi: &[f64], log_t: f64, s: f64) -> f64 {
        let (st, ss) = self.family.spread;
        (self.family.predicted_log_time(phi) - log_t).abs() / st.max(1e-6)
            + (self.family.predicted_success(phi) - s).abs() / ss.max(1e-6)
            + self.diversity(phi)
    }

    fn grid_size(&self) -> usize {
        self.axes.iter().try_fold(1usize, |acc, a| acc.checked_mul(a.len())).unwrap_or(usize::MAX)
    }

    /// Every grid pick when the grid is small, else a seeded random subset.
    fn picks(&self, seed: u64) -> (Vec<Vec<usize>>, bool) {
        if self.grid_size() <= SEARCH_GRID_LIMIT {
            let mut out = Vec::new();
            let mut pick = vec![0usize; self.axes.len()];
            loop {
                out.push(pick.clone());
                // odometer over the axes
                let mut j = 0;
                while j < pick.len() {
                    pick[j] += 1;
                    if pick[j] < self.axes[j].len() {
                        break;
                    }
                    pick[j] = 0;
                    j += 1;
                }
                if j == pick.len() {
                    return (out, true);
                }
            }
        }
        let mut r = Stream::new(seed).split("knob_search");
        let out = (0..RANDOM_SEARCH).map(|_| self.axes.iter().map(|a| r.index(a.len())).collect()).collect();
        (out, false)
    }

    /// Smallest and largest predicted difficulty over the searched knobs.
    pub fn reachable(&self) -> (f64, f64) {
        self.picks(0)
            .0
            .iter()
            .map(|p| self.predicted_d(&self.phi(p)))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }

    /// Candidate knob picks in increasing objective order (best few).
    fn search(&self, log_t: f64, s: f64, seed: u64) -> Vec<Vec<usize>> {
        let (picks, exhaustive) = self.picks(seed);
        let mut scored: Vec<(f64, Vec<usize>)> =
            picks.into_iter().map(|p| (self.objective(&self.phi(&p), log_t, s), p)).collect();
        if !exhaustive {
            scored.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut best = scored[0].clone();
            for _ in 0..COORDINATE_ROUNDS {
                let before = best.0;
                for j in 0..self.axes.len() {
                    for i in 0..self.axes[j].len() {
                        let mut p = best.1.clone();
                        p[j] = i;
                        let v = self.objective(&self.phi(&p), log_t, s);
                        if v < best.0 {
                            best = (v, p);
                        }
                    }
                }
                if best.0 >= before {
                    break;
                }
            }
            scored.push(best);
        }
        // stable: ties keep enumeration order, which starts at the low end of every knob
        scored.sort_by(|a, b| a.0.total_cmp(&b.0));
        scored.into_iter().take(32).map(|(_, p)| p).collect()
    }

    fn sample_for(&self, pick: &[usize], seed: u64) -> Result<ParamSample, DifficultyError> {
        let mut sample = sample_params(self.manifest, seed, None, None)?;
        for ((k, axis), &i) in self.manifest.difficulty_features.iter().zip(&self.axes).zip(pick) {
            sample.values.insert(k.clone(), axis[i].0.clone());
        }
        Ok(sample)
    }

    /// Knobs whose predicted difficulty is within `tolerance` of `target`.
    pub fn invert(&mut self, target: f64, tolerance: f64, seed: u64) -> Result<ParamSample, DifficultyError> {
        if !(0.0..=1.0).contains(&target) {
            return Err(DifficultyError::Target(target));
        }
        if self.axes.iter().any(Vec::is_empty) {
            return Err(DifficultyError::NoFamily(self.manifest.family()));
        }
        let alpha = self.model.alpha;
        let fm = self.family;
        let mut tried = 0;
        for k in 0..=MAX_ADJUSTMENTS {
            // 0, +1, -1, +2, -2, ... steps along the line alpha*T + (1-alpha)*E = target
            let u = LINE_STEP * (k.div_ceil(2) as f64) * if k % 2 == 1 { 1.0 } else { -1.0 };
            let (t_star, e_star) = (target + u * (1.0 - alpha), target - u * alpha);
            if !(0.0..=1.0).contains(&t_star) || !(0.0..=1.0).contains(&e_star) {
                continue;
            }
            tried += 1;
            let log_t = fm.log_time_cdf.quantile(fm.time_calibrator.inverse(t_star));
            let s = 1.0 - fm.error_cdf.quantile(fm.error_calibrator.inverse(e_star));
            for pick in self.search(log_t, s, seed) {
                let phi = self.phi(&pick);
                if (self.predicted_d(&phi) - target).abs() > tolerance {
                    continue;
                }
                let sample = self.sample_for(&pick, seed)?;
                if self.admissible.as_ref().is_some_and(|f| !f(&sample)) {
                    continue;
                }
                self.history.push_back(phi);
                if self.history.len() > HISTORY {
                    self.history.pop_front();
                }
                return Ok(sample);
            }
        }
        Err(DifficultyError::NotInverted {
            target,
            tolerance,
            attempts: tried,
        })
    }
}

/// One-off inversion without history.
pub fn invert(
    model: &DifficultyModel,
    manifest: &Manifest,
    target: f64,
    tolerance: f64,
    seed: u64,
) -> Result<ParamSample, DifficultyError> {
    Inverter::new(model, manifest)?.invert(target, tolerance, seed)
}
