//! Sampling, scene generation with rejection, rendering and assembly into instances.

mod batch;
mod dataset;

use std::collections::BTreeMap;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::canonical::{sha256_hex, to_canonical_string};
use crate::difficulty::{Difficulty, DifficultyModel};
use crate::families::{
    generate_scene, synthesize_distractors, validate_scene, Answer, FamilyError, NearMissKind, Scene,
};
use crate::manifest::{
    render_prompt, sample_params, Ability, Bin, FamilyType, Manifest, ManifestError, ParamSample, ParamValue,
};
use crate::renderer::{rasterize, render, Panel, PanelFormat, PanelRole, RenderError, StyleConfig};
use crate::rng::Stream;

pub use batch::{apportion, synthesize_batch, BatchEntry, BatchOptions, BinMix, Dataset, DatasetIndex, IndexEntry, UNBINNED};
pub use dataset::{read_dataset, read_index, read_instance, read_panel, write_dataset, StoredDataset};

/// Attempts per instance before a (manifest, seed) is declared infeasible.
pub const ATTEMPT_BUDGET: u32 = 1000;
pub const SCHEMA_VERSION: u32 = 1;
pub const STIMULUS_FILE: &str = "stimulus.svg";

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Family(FamilyError),
    #[error("no accepted scene for {manifest} seed {seed} in {attempts} attempts")]
    Exhausted { manifest: String, seed: u64, attempts: u32 },
    #[error("cell {manifest}/{bin}: {source}")]
    Cell {
        manifest: String,
        bin: String,
        #[source]
        source: Box<PipelineError>,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl PipelineError {
    /// True when the family or bin cannot be produced, as opposed to a fault.
    pub fn is_infeasible(&self) -> bool {
        match self {
            PipelineError::Exhausted { .. } | PipelineError::Manifest(ManifestError::Infeasible { .. }) => true,
            PipelineError::Cell { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PanelRef {
    pub file: String,
    pub role: PanelRole,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub label: String,
    pub panel: String,
    pub answer: Answer,
    /// `None` on the correct candidate.
    pub near_miss: Option<NearMissKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub instance_id: String,
    /// `name@version`.
    pub manifest: String,
    pub family: FamilyType,
    pub ability: Ability,
    pub seed: u64,
    pub params: ParamSample,
    pub scene: Scene,
    pub panels: Vec<PanelRef>,
    pub prompt: String,
    /// Presentation order.
    pub candidates: Vec<CandidateEntry>,
    pub correct_label: String,
    /// Present when a difficulty model covered the family at creation time.
    pub difficulty: Option<Difficulty>,
    pub requested_bin: Option<Bin>,
    /// Unix seconds. Not part of `instance_id`.
    pub created_at: u64,
    pub near_miss_kinds: Vec<NearMissKind>,
    pub rejections: u32,
    /// Rejections per validator or stage.
    pub rejected_by: BTreeMap<String, u32>,
}

const VOLATILE: [&str; 2] = ["instance_id", "created_at"];

impl Instance {
    /// Hash of the canonical form without the id and timestamp.
    pub fn content_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("instances serialize");
        if let Some(map) = v.as_object_mut() {
            for k in VOLATILE {
                map.remove(k);
            }
        }
        sha256_hex(to_canonical_string(&v).expect("json values serialize").as_bytes())
    }

    pub fn to_canonical_json(&self) -> String {
        to_canonical_string(self).expect("instances serialize")
    }

    pub fn labels(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.label.as_str()).collect()
    }

    pub fn correct_index(&self) -> Option<usize> {
        self.candidates.iter().position(|c| c.label == self.correct_label)
    }

    /// Re-run the family predicate on every stored candidate.
    pub fn sweep(&self) -> Vec<bool> {
        self.candidates.iter().map(|c| self.scene.holds(&c.answer)).collect()
    }

    /// True iff the predicate holds exactly at the correct label.
    pub fn certified_unique(&self) -> bool {
        let v = self.sweep();
        v.iter().filter(|&&t| t).count() == 1 && self.correct_index().is_some_and(|i| v[i])
    }
}

/// An instance with its rendered panels, keyed by file name.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub instance: Instance,
    pub panels: Vec<(String, Panel)>,
}

impl Artifact {
    pub fn panel(&self, file: &str) -> Option<&Panel> {
        self.panels.iter().find(|(f, _)| f == file).map(|(_, p)| p)
    }

    /// PNG rasters of every SVG panel, with `.png` file names.
    pub fn rasters(&self) -> Result<Vec<(String, Panel)>, RenderError> {
        self.panels
            .iter()
            .filter(|(_, p)| p.format == PanelFormat::Svg)
            .map(|(f, p)| Ok((png_name(f), rasterize(p)?)))
            .collect()
    }
}

pub fn png_name(file: &str) -> String {
    match file.rsplit_once('.') {
        Some((stem, _)) => format!("{stem}.png"),
        None => format!("{file}.png"),
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn candidate_file(label: &str) -> String {
    format!("candidate_{label}.svg")
}

/// Builder over the knobs of one synthesis call.
#[derive(Clone)]
pub struct Synthesizer<'a> {
    manifest: &'a Manifest,
    model: Option<&'a DifficultyModel>,
    palette: Option<String>,
    created_at: Option<u64>,
    budget: u32,
    overrides: BTreeMap<String, ParamValue>,
}

/// Knob values pinned over a sample; each must lie in its declared domain.
pub fn check_overrides(manifest: &Manifest, overrides: &BTreeMap<String, ParamValue>) -> Result<(), ManifestError> {
    for (k, v) in overrides {
        let d = manifest.params.get(k).ok_or_else(|| ManifestError::Knob {
            knob: k.clone(),
            message: format!("not a knob of {}", manifest.key()),
        })?;
        if !d.contains(v) {
            return Err(ManifestError::Knob {
                knob: k.clone(),
                message: format!("{v:?} is outside the declared domain"),
            });
        }
    }
    Ok(())
}

impl<'a> Synthesizer<'a> {
    pub fn new(manifest: &'a Manifest) -> Self {
        Self {
            manifest,
            model: None,
            palette: None,
            created_at: None,
            budget: ATTEMPT_BUDGET,
            overrides: BTreeMap::new(),
        }
    }

    pub fn model(mut self, model: Option<&'a DifficultyModel>) -> Self {
        self.model = model;
        self
    }

    /// Render with this palette instead of the manifest's choice.
    pub fn palette(mut self, name: impl Into<String>) -> Self {
        self.palette = Some(name.into());
        self
    }

    pub fn created_at(mut self, unix: u64) -> Self {
        self.created_at = Some(unix);
        self
    }

    pub fn budget(mut self, attempts: u32) -> Self {
        self.budget = attempts;
        self
    }

    /// Pin knobs after sampling. Bin-conditioned sampling happens first, so the
    /// resulting bin may differ from the requested one.
    pub fn overrides(mut self, values: BTreeMap<String, ParamValue>) -> Self {
        self.overrides = values;
        self
    }

    pub fn run(&self, seed: u64, bin: Option<Bin>) -> Result<Artifact, PipelineError> {
        let m = self.manifest;
        check_overrides(m, &self.overrides)?;
        let predictor = self.model.map(|x| x as &dyn crate::manifest::BinPredictor);
        let attempts = Stream::new(seed).split("attempt");
        let mut rejected_by: BTreeMap<String, u32> = BTreeMap::new();
        let mut reject = |key: &str| *rejected_by.entry(key.to_owned()).or_default() += 1;
        for attempt in 0..self.budget {
            let sub = attempts.derive_seed(u64::from(attempt));
            let mut sample = sample_params(m, sub, bin, predictor)?;
            sample.values.extend(self.overrides.iter().map(|(k, v)| (k.clone(), v.clone())));
            let scene = match generate_scene(m, &sample) {
                Ok(s) => s,
                Err(e) if recoverable(&e) => {
                    reject("generation");
                    continue;
                }
                Err(e) => return Err(fatal(e)),
            };
            let set = match synthesize_distractors(m, &scene, &sample) {
                Ok(s) => s,
                Err(e) if recoverable(&e) => {
                    reject("distractors");
                    continue;
                }
                Err(e) => return Err(fatal(e)),
            };
            let report = validate_scene(m, &sample, &scene, &set).map_err(fatal)?;
            if !report.accepted() {
                let mut kinds: Vec<_> = report.failed.iter().map(|f| f.check).collect();
                kinds.sort();
                kinds.dedup();
                for k in kinds {
                    reject(&serde_json::to_value(k).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default());
                }
                continue;
            }
            let rejections = attempt;
            return self.assemble(seed, bin, sample, scene, set, rejections, rejected_by);
        }
        Err(PipelineError::Exhausted {
            manifest: m.key(),
            seed,
            attempts: self.budget,
        })
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        &self,
        seed: u64,
        bin: Option<Bin>,
        sample: ParamSample,
        scene: Scene,
        set: crate::families::CandidateSet,
        rejections: u32,
        rejected_by: BTreeMap<String, u32>,
    ) -> Result<Artifact, PipelineError> {
        let m = self.manifest;
        let palette = match &self.palette {
            Some(p) => p.clone(),
            None => m.palette_for(&sample)?,
        };
        let r = &m.renderer;
        let style = StyleConfig::new(r.canvas, &palette, r.stroke_width, &r.background)?;
        let labels = &m.answer.labels;
        let mut panels = vec![(STIMULUS_FILE.to_owned(), render(&scene.stimulus(), PanelRole::Stimulus, &style)?)];
        let mut candidates = Vec::with_capacity(set.candidates.len());
        for (c, label) in set.candidates.iter().zip(labels) {
            let file = candidate_file(label);
            panels.push((file.clone(), render(&c.fragment, PanelRole::Candidate, &style)?));
            candidates.push(CandidateEntry {
                label: label.clone(),
                panel: file,
                answer: c.answer.clone(),
                near_miss: c.kind,
            });
        }
        let prompt = render_prompt(m, &scene.outputs())?;
        let difficulty = self.model.and_then(|model| model.predict(m, &sample));
        let mut instance = Instance {
            instance_id: String::new(),
            manifest: m.key(),
            family: m.family(),
            ability: m.ability,
            seed,
            params: sample,
            scene,
            panels: panels
                .iter()
                .map(|(f, p)| PanelRef {
                    file: f.clone(),
                    role: p.role,
                    sha256: sha256_hex(&p.bytes),
                })
                .collect(),
            prompt,
            candidates,
            correct_label: labels[set.correct_index].clone(),
            difficulty,
            requested_bin: bin,
            created_at: self.created_at.unwrap_or_else(unix_now),
            near_miss_kinds: set.near_miss_kinds(),
            rejections,
            rejected_by,
        };
        instance.instance_id = instance.content_hash();
        Ok(Artifact { instance, panels })
    }
}

fn recoverable(e: &FamilyError) -> bool {
    matches!(e, FamilyError::Geometry(_) | FamilyError::Distractors(_))
}

fn fatal(e: FamilyError) -> PipelineError {
    match e {
        FamilyError::Param(m) => PipelineError::Manifest(m),
        FamilyError::Render(r) => PipelineError::Render(r),
        other => PipelineError::Family(other),
    }
}

/// One instance for `(manifest, seed)`, optionally in a difficulty bin.
pub fn synthesize(
    manifest: &Manifest,
    seed: u64,
    bin: Option<Bin>,
    model: Option<&DifficultyModel>,
) -> Result<Artifact, PipelineError> {
    if bin.is_some() && model.is_none() {
        return Err(ManifestError::NoModel(manifest.family().to_string()).into());
    }
    Synthesizer::new(manifest).model(model).run(seed, bin)
}

#[cfg(test)]
mod tests;
