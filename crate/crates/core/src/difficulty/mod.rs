//! Difficulty calibration from pilot responses: per-family latency and success fits,
//! rank normalisation, cross-family alignment, the blended score and its bins.

mod invert;
mod isotonic;
mod pilot;
mod quantile;
mod rank;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::canonical::to_canonical_string;
use crate::manifest::{Bin, BinPredictor, FamilyType, Manifest, ManifestError, ParamSample};
use crate::pipeline::Instance;

pub use invert::{invert, Inverter, SEARCH_GRID_LIMIT};
pub use isotonic::{isotonic_fit, pava, AdditiveIsotonic, IsotonicFit};
pub use pilot::{read_pilot_csv, simulate_pilot, write_pilot_csv, PilotRecord, PilotSimulation, PILOT_HEADER};
pub use quantile::{pinball, quantile_fit, sample_quantile, QuantileFit};
pub use rank::{quantile_rank, spearman, EmpiricalCdf, Monotone};

pub const MODEL_VERSION: &str = "difficulty-model/1";
pub const DEFAULT_ALPHA: f64 = 0.6;
/// Families with fewer pilot records are left out of the fit.
pub const MIN_RECORDS_PER_FAMILY: usize = 20;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DifficultyError {
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("pilot data: {0}")]
    Pilot(String),
    #[error("pilot record refers to unknown instance {0}")]
    UnknownInstance(String),
    #[error("no manifest {0} among those supplied")]
    UnknownManifest(String),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("no family could be fitted: {0}")]
    NothingFitted(String),
    #[error("family {0} is not in the model")]
    NoFamily(FamilyType),
    #[error("blend weight {0} outside [0, 1]")]
    Alpha(f64),
    #[error("target difficulty {0} outside [0, 1]")]
    Target(f64),
    #[error("no admissible knobs within {tolerance} of {target} after {attempts} adjustments")]
    NotInverted { target: f64, tolerance: f64, attempts: usize },
    #[error("model file: {0}")]
    Format(String),
}

/// Score and bin of one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Difficulty {
    pub score: f64,
    pub bin: Bin,
}

pub fn blend(t: f64, e: f64, alpha: f64) -> f64 {
    alpha * t + (1.0 - alpha) * e
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyModel {
    pub manifest: String,
    pub features: Vec<String>,
    /// Log latency against the features.
    pub time: AdditiveIsotonic,
    /// Success rate, conditional median.
    pub success: QuantileFit,
    /// Success rate, lower quartile.
    pub success_lower: QuantileFit,
    pub log_time_cdf: EmpiricalCdf,
    /// CDF of `1 - s`.
    pub error_cdf: EmpiricalCdf,
    /// Family rank to pooled rank.
    pub time_calibrator: Monotone,
    pub error_calibrator: Monotone,
    /// Least-squares `d ~ w0 + w . phi`.
    pub surrogate: Vec<f64>,
    /// Calibration-set spread of log latency and success.
    pub spread: (f64, f64),
    pub instances: usize,
    pub records: usize,
}

impl FamilyModel {
    pub fn predicted_log_time(&self, phi: &[f64]) -> f64 {
        self.time.eval(phi)
    }

    pub fn predicted_success(&self, phi: &[f64]) -> f64 {
        self.success.predict(phi)
    }

    pub fn calibrated(&self, phi: &[f64]) -> (f64, f64) {
        let t = self.time_calibrator.eval(self.log_time_cdf.rank(self.predicted_log_time(phi)));
        let e = self.error_calibrator.eval(self.error_cdf.rank(1.0 - self.predicted_success(phi)));
        (t, e)
    }

    pub fn surrogate_score(&self, phi: &[f64]) -> f64 {
        self.surrogate[0] + self.surrogate[1..].iter().zip(phi).map(|(w, x)| w * x).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibratedInstance {
    pub instance_id: String,
    pub family: FamilyType,
    /// Observed mean latency on correct trials, seconds.
    pub t: f64,
    /// Observed success rate.
    pub s: f64,
    pub t_rank: f64,
    pub e_rank: f64,
    pub t_tilde: f64,
    pub e_tilde: f64,
    pub d: f64,
    pub bin: Bin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DifficultyModel {
    pub version: String,
    pub alpha: f64,
    pub families: BTreeMap<FamilyType, FamilyModel>,
    /// Easy below the first, hard at or above the second.
    pub thresholds: [f64; 2],
    pub calibration: Vec<CalibratedInstance>,
    pub warnings: Vec<String>,
}

impl DifficultyModel {
    pub fn bin_of(&self, d: f64) -> Bin {
        if d < self.thresholds[0] {
            Bin::Easy
        } else if d < self.thresholds[1] {
            Bin::Medium
        } else {
            Bin::Hard
        }
    }

    pub fn family(&self, f: FamilyType) -> Option<&FamilyModel> {
        self.families.get(&f)
    }

    /// `d` for knobs of a fitted family.
    pub fn score(&self, manifest: &Manifest, sample: &ParamSample) -> Option<f64> {
        let fm = self.family(manifest.family())?;
        let phi = manifest.features(sample).ok()?;
        let (t, e) = fm.calibrated(&phi);
        Some(blend(t, e, self.alpha))
    }

    pub fn predict(&self, manifest: &Manifest, sample: &ParamSample) -> Option<Difficulty> {
        self.score(manifest, sample).map(|score| Difficulty {
            score,
            bin: self.bin_of(score),
        })
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self).expect("models serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, DifficultyError> {
        let m: DifficultyModel = serde_json::from_str(text).map_err(|e| DifficultyError::Format(e.to_string()))?;
        if m.version != MODEL_VERSION {
            return Err(DifficultyError::Format(format!("version {} is not {MODEL_VERSION}", m.version)));
        }
        if !(0.0..=1.0).contains(&m.alpha) || m.thresholds[0] > m.thresholds[1] {
            return Err(DifficultyError::Format("alpha or thresholds out of order".into()));
        }
        Ok(m)
    }

    /// Per-bin calibration counts.
    pub fn bin_counts(&self) -> BTreeMap<Bin, usize> {
        let mut out: BTreeMap<Bin, usize> = Bin::ALL.iter().map(|&b| (b, 0)).collect();
        for c in &self.calibration {
            *out.entry(c.bin).or_default() += 1;
        }
        out
    }
}

impl BinPredictor for DifficultyModel {
    fn predict_bin(&self, manifest: &Manifest, sample: &ParamSample) -> Option<Bin> {
        self.predict(manifest, sample).map(|d| d.bin)
    }

    fn has_family(&self, manifest: &Manifest) -> bool {
        self.families.get(&manifest.family()).is_some_and(|f| f.manifest == manifest.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub alpha: f64,
    /// Smooth the latency step functions.
    pub smooth: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            smooth: false,
        }
    }
}

struct Observed {
    instance_id: String,
    phi: Vec<f64>,
    log_t: f64,
    t: f64,
    s: f64,
    trials: usize,
}

fn std_dev(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
}

fn calibrator(x: &[f64], y: &[f64]) -> Result<Monotone, DifficultyError> {
    let fit = isotonic_fit(x, y, &vec![1.0; x.len()])?;
    if fit.knots.len() == 1 {
        // one distinct rank: a flat map
        let k = fit.knots[0];
        return Monotone::new(vec![k - 0.5, k + 0.5], vec![fit.values[0]; 2])
            .ok_or_else(|| DifficultyError::Shape("calibrator".into()));
    }
    Monotone::new(fit.knots, fit.values).ok_or_else(|| DifficultyError::Shape("calibrator knots".into()))
}

fn least_squares(phi: &[Vec<f64>], d: &[f64]) -> Vec<f64> {
    let p = phi.first().map_or(0, Vec::len);
    quantile::weighted_ls(phi, d, &vec![1.0; d.len()]).unwrap_or_else(|| {
        let mut w = vec![0.0; p + 1];
        w[0] = d.iter().sum::<f64>() / d.len() as f64;
        w
    })
}

/// `(instance_id, normalised features)` for each instance, input to [`simulate_pilot`].
pub fn feature_items(instances: &[Instance], manifests: &[Manifest]) -> Result<Vec<(String, Vec<f64>)>, DifficultyError> {
    instances
        .iter()
        .map(|inst| {
            let m = manifests
                .iter()
                .find(|m| m.key() == inst.manifest)
                .ok_or_else(|| DifficultyError::UnknownManifest(inst.manifest.clone()))?;
            Ok((inst.instance_id.clone(), m.features(&inst.params)?))
        })
        .collect()
}

/// Fit the model from pilot records joined to their instances.
pub fn fit_difficulty_model(
    pilot: &[PilotRecord],
    instances: &[Instance],
    manifests: &[Manifest],
    opts: FitOptions,
) -> Result<DifficultyModel, DifficultyError> {
    if !(0.0..=1.0).contains(&opts.alpha) {
        return Err(DifficultyError::Alpha(opts.alpha));
    }
    if pilot.is_empty() {
        return Err(DifficultyError::Empty("pilot records"));
    }
    let by_id: BTreeMap<&str, &Instance> = instances.iter().map(|i| (i.instance_id.as_str(), i)).collect();
    // instance id -> (correct times, trials, correct count)
    let mut tally: BTreeMap<&str, (Vec<f64>, Vec<f64>, usize)> = BTreeMap::new();
    let mut records_per_family: BTreeMap<FamilyType, usize> = BTreeMap::new();
    for r in pilot {
        r.check()?;
        let inst = by_id.get(r.instance_id.as_str()).ok_or_else(|| DifficultyError::UnknownInstance(r.instance_id.clone()))?;
        *records_per_family.entry(inst.family).or_default() += 1;
        let e = tally.entry(inst.instance_id.as_str()).or_default();
        e.1.push(r.response_time_s);
        if r.correct {
            e.0.push(r.response_time_s);
            e.2 += 1;
        }
    }

    let mut warnings = Vec::new();
    let mut per_family: BTreeMap<FamilyType, (&Manifest, Vec<Observed>)> = BTreeMap::new();
    for (id, (correct_times, all_times, n_correct)) in &tally {
        let inst = by_id[id];
        let manifest = manifests
            .iter()
            .find(|m| m.key() == inst.manifest)
            .ok_or_else(|| DifficultyError::UnknownManifest(inst.manifest.clone()))?;
        // latency on correct trials; all trials when none was correct
        let times = if correct_times.is_empty() { all_times } else { correct_times };
        let t = times.iter().sum::<f64>() / times.len() as f64;
        let obs = Observed {
            instance_id: inst.instance_id.clone(),
            phi: manifest.features(&inst.params)?,
            log_t: t.ln(),
            t,
            s: *n_correct as f64 / all_times.len() as f64,
            trials: all_times.len(),
        };
        per_family.entry(inst.family).or_insert_with(|| (manifest, Vec::new())).1.push(obs);
    }
    per_family.retain(|f, (_, obs)| {
        let n = records_per_family.get(f).copied().unwrap_or(0);
        let keep = n >= MIN_RECORDS_PER_FAMILY && obs.len() >= 2;
        if !keep {
            warnings.push(format!("{f}: {n} records over {} instances, below the minimum; left out", obs.len()));
        }
        keep
    });
    if per_family.is_empty() {
        return Err(DifficultyError::NothingFitted(warnings.join("; ")));
    }

    // pooled ranks across every fitted family
    let pooled_log_t: Vec<f64> = per_family.values().flat_map(|(_, o)| o.iter().map(|x| x.log_t)).collect();
    let pooled_err: Vec<f64> = per_family.values().flat_map(|(_, o)| o.iter().map(|x| 1.0 - x.s)).collect();
    let pooled_t_rank = quantile_rank(&pooled_log_t);
    let pooled_e_rank = quantile_rank(&pooled_err);

    let mut families = BTreeMap::new();
    let mut calibration = Vec::new();
    let mut offset = 0;
    for (family, (manifest, obs)) in &per_family {
        let n = obs.len();
        let phi: Vec<Vec<f64>> = obs.iter().map(|o| o.phi.clone()).collect();
        let log_t: Vec<f64> = obs.iter().map(|o| o.log_t).collect();
        let s: Vec<f64> = obs.iter().map(|o| o.s).collect();
        let err: Vec<f64> = s.iter().map(|v| 1.0 - v).collect();
        let weights: Vec<f64> = obs.iter().map(|o| o.trials as f64).collect();

        let mut time = AdditiveIsotonic::fit(&phi, &log_t, &weights)?;
        if opts.smooth {
            time.axes = time.axes.iter().map(IsotonicFit::smoothed).collect();
        }
        let success = quantile_fit(&phi, &s, 0.5)?;
        let success_lower = quantile_fit(&phi, &s, 0.25)?;
        for (q, tag) in [(&success, "median"), (&success_lower, "lower quartile")] {
            if q.degenerate {
                warnings.push(format!("{family}: success {tag} fit fell back to an intercept"));
            }
        }
        let t_rank = quantile_rank(&log_t);
        let e_rank = quantile_rank(&err);
        let t_pool = &pooled_t_rank[offset..offset + n];
        let e_pool = &pooled_e_rank[offset..offset + n];
        offset += n;
        let time_calibrator = calibrator(&t_rank, t_pool)?;
        let error_calibrator = calibrator(&e_rank, e_pool)?;

        let mut d = Vec::with_capacity(n);
        for (i, o) in obs.iter().enumerate() {
            let tt = time_calibrator.eval(t_rank[i]);
            let et = error_calibrator.eval(e_rank[i]);
            let score = blend(tt, et, opts.alpha);
            d.push(score);
            calibration.push(CalibratedInstance {
                instance_id: o.instance_id.clone(),
                family: *family,
                t: o.t,
                s: o.s,
                t_rank: t_rank[i],
                e_rank: e_rank[i],
                t_tilde: tt,
                e_tilde: et,
                d: score,
                bin: Bin::Easy,
            });
        }
        families.insert(
            *family,
            FamilyModel {
                manifest: manifest.key(),
                features: manifest.difficulty_features.clone(),
                time,
                success,
                success_lower,
                log_time_cdf: EmpiricalCdf::new(&log_t).ok_or(DifficultyError::Empty("latency CDF"))?,
                error_cdf: EmpiricalCdf::new(&err).ok_or(DifficultyError::Empty("error CDF"))?,
                time_calibrator,
                error_calibrator,
                surrogate: least_squares(&phi, &d),
                spread: (std_dev(&log_t), std_dev(&s)),
                instances: n,
                records: records_per_family[family],
            },
        );
    }

    let thresholds = thresholds(&calibration.iter().map(|c| c.d).collect::<Vec<_>>());
    let mut model = DifficultyModel {
        version: MODEL_VERSION.to_owned(),
        alpha: opts.alpha,
        families,
        thresholds,
        calibration,
        warnings,
    };
    let bins: Vec<Bin> = model.calibration.iter().map(|c| model.bin_of(c.d)).collect();
    for (c, b) in model.calibration.iter_mut().zip(bins) {
        c.bin = b;
    }
    model.calibration.sort_by(|a, b| a.instance_id.cmp(&b.instance_id));
    Ok(model)
}

/// Cut points splitting the sorted scores at n/3 and 2n/3, midway between neighbours.
pub fn thresholds(d: &[f64]) -> [f64; 2] {
    let mut v = d.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let cut = |k: usize| -> f64 {
        match (k, n) {
            (_, 0) => 0.5,
            (0, _) => v[0],
            (k, n) if k >= n => v[n - 1] + f64::EPSILON,
            (k, _) => (v[k - 1] + v[k]) / 2.0,
        }
    };
    let k1 = (n as f64 / 3.0).round() as usize;
    let k2 = (2.0 * n as f64 / 3.0).round() as usize;
    [cut(k1), cut(k2)]
}
