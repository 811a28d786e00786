//! Task manifests: strict parsing, typed knob domains, sampling and prompt templates.

mod prompt;
mod sample;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canonical;
use crate::renderer::palette;

pub use prompt::{placeholders, render_prompt};
pub use sample::{sample_params, BinPredictor, ParamSample, ParamValue, REJECTION_BUDGET};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ManifestError {
    #[error("malformed manifest at {path}: {message}")]
    Malformed { path: String, message: String },
    #[error("domain violation at {path}: {message}")]
    Domain { path: String, message: String },
    #[error("unresolvable placeholder ${name} at {path}")]
    Placeholder { path: String, name: String },
    #[error("unknown invariant tag {value:?} at invariant")]
    UnknownInvariant { value: String },
    #[error("missing value for placeholder ${0}")]
    MissingValue(String),
    #[error("bin-conditioned sampling needs a difficulty model fitted for {0}")]
    NoModel(String),
    #[error("rejection budget exhausted sampling the {bin} bin of {family}")]
    Infeasible { family: String, bin: Bin },
    #[error("knob {knob}: {message}")]
    Knob { knob: String, message: String },
}

impl ManifestError {
    /// Field path within the document, when the error concerns one.
    pub fn path(&self) -> Option<&str> {
        match self {
            ManifestError::Malformed { path, .. }
            | ManifestError::Domain { path, .. }
            | ManifestError::Placeholder { path, .. } => Some(path),
            ManifestError::UnknownInvariant { .. } => Some("invariant"),
            _ => None,
        }
    }
}

fn domain(path: impl Into<String>, message: impl Into<String>) -> ManifestError {
    ManifestError::Domain {
        path: path.into(),
        message: message.into(),
    }
}

/// The built-in scene generator a manifest binds to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyType {
    AgentSight,
    SunDirection,
    Polyomino,
    Revolution,
    Unfolded,
    Pyramid,
    FullViews,
}

impl FamilyType {
    pub const ALL: [FamilyType; 7] = [
        FamilyType::AgentSight,
        FamilyType::SunDirection,
        FamilyType::Polyomino,
        FamilyType::Revolution,
        FamilyType::Unfolded,
        FamilyType::Pyramid,
        FamilyType::FullViews,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FamilyType::AgentSight => "agent_sight",
            FamilyType::SunDirection => "sun_direction",
            FamilyType::Polyomino => "polyomino",
            FamilyType::Revolution => "revolution",
            FamilyType::Unfolded => "unfolded",
            FamilyType::Pyramid => "pyramid",
            FamilyType::FullViews => "full_views",
        }
    }

    /// Scene outputs available to prompt templates.
    pub fn outputs(self) -> &'static [&'static str] {
        match self {
            FamilyType::AgentSight => &["TARGET", "OBJECT_COUNT"],
            FamilyType::SunDirection => &["OBJECT_COUNT"],
            FamilyType::Polyomino => &["ROTATION"],
            FamilyType::Revolution => &["AXIS"],
            FamilyType::Unfolded => &[],
            FamilyType::Pyramid => &["VIEW"],
            FamilyType::FullViews => &[],
        }
    }
}

impl fmt::Display for FamilyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FamilyType {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FamilyType::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown family type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    ViewMatch,
    ReferenceFrame,
    RotationCongruence,
    Topology,
    MultiTransform,
    ShadowDirection,
    ProjectionMatch,
}

impl FromStr for Invariant {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|_| ())
    }
}

/// Ability category used for stratified reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Ability {
    SP,
    SO,
    MOR,
    SV,
}

impl Ability {
    pub const ALL: [Ability; 4] = [Ability::SP, Ability::SO, Ability::MOR, Ability::SV];

    pub fn as_str(self) -> &'static str {
        match self {
            Ability::SP => "SP",
            Ability::SO => "SO",
            Ability::MOR => "MOR",
            Ability::SV => "SV",
        }
    }
}

impl fmt::Display for Ability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bin {
    Easy,
    Medium,
    Hard,
}

impl Bin {
    pub const ALL: [Bin; 3] = [Bin::Easy, Bin::Medium, Bin::Hard];

    pub fn as_str(self) -> &'static str {
        match self {
            Bin::Easy => "easy",
            Bin::Medium => "medium",
            Bin::Hard => "hard",
        }
    }
}

impl fmt::Display for Bin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Bin {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bin::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| format!("unknown bin {s:?} (expected easy, medium or hard)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Version {
    pub major: u32,
    pub minor: u32,
    pub patch: Option<u32>,
}

impl FromStr for Version {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('.').collect();
        let num = |p: &str| {
            if p.is_empty() || !p.bytes().all(|b| b.is_ascii_digit()) {
                Err(format!("{s:?} is not MAJOR.MINOR[.PATCH]"))
            } else {
                p.parse::<u32>().map_err(|e| e.to_string())
            }
        };
        match parts.as_slice() {
            [a, b] => Ok(Version {
                major: num(a)?,
                minor: num(b)?,
                patch: None,
            }),
            [a, b, c] => Ok(Version {
                major: num(a)?,
                minor: num(b)?,
                patch: Some(num(c)?),
            }),
            _ => Err(format!("{s:?} is not MAJOR.MINOR[.PATCH]")),
        }
    }
}

impl fmt::Display for Version {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.patch {
            Some(p) => write!(f, "{}.{}.{}", self.major, self.minor, p),
            None => write!(f, "{}.{}", self.major, self.minor),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ManifestId {
    pub name: String,
    pub family_type: FamilyType,
    pub version: Version,
}

/// A knob's admissible values and prior.
#[derive(Debug, Clone, PartialEq)]
pub enum ParamDomain {
    Int {
        min: i64,
        max: i64,
        weights: Option<Vec<f64>>,
    },
    Real {
        min: f64,
        max: f64,
    },
    Enum {
        values: Vec<String>,
        weights: Option<Vec<f64>>,
    },
}

impl ParamDomain {
    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (ParamDomain::Int { min, max, .. }, ParamValue::Int(x)) => (min..=max).contains(&x),
            (ParamDomain::Real { min, max }, ParamValue::Real(x)) => x.is_finite() && *min <= *x && *x <= *max,
            (ParamDomain::Enum { values, .. }, ParamValue::Enum(s)) => values.contains(s),
            _ => false,
        }
    }

    /// Position of `v` in the domain scaled to `[0, 1]`.
    pub fn normalize(&self, v: &ParamValue) -> Option<f64> {
        let span = |lo: f64, hi: f64, x: f64| if hi > lo { (x - lo) / (hi - lo) } else { 0.0 };
        match (self, v) {
            (ParamDomain::Int { min, max, .. }, ParamValue::Int(x)) => Some(span(*min as f64, *max as f64, *x as f64)),
            (ParamDomain::Real { min, max }, ParamValue::Real(x)) => Some(span(*min, *max, *x)),
            (ParamDomain::Enum { values, .. }, ParamValue::Enum(s)) => {
                let i = values.iter().position(|x| x == s)?;
                Some(span(0.0, (values.len() - 1) as f64, i as f64))
            }
            _ => None,
        }
    }

    /// Every value of a discrete domain, or `None` for real ranges.
    pub fn grid(&self) -> Option<Vec<ParamValue>> {
        match self {
            ParamDomain::Int { min, max, .. } => Some((*min..=*max).map(ParamValue::Int).collect()),
            ParamDomain::Enum { values, .. } => Some(values.iter().cloned().map(ParamValue::Enum).collect()),
            ParamDomain::Real { .. } => None,
        }
    }

    fn check(&self, path: &str) -> Result<(), ManifestError> {
        let check_weights = |w: &Option<Vec<f64>>, len: usize| -> Result<(), ManifestError> {
            if let Some(w) = w {
                if w.len() != len {
                    return Err(domain(format!("{path}.weights"), format!("expected {len} weights, got {}", w.len())));
                }
                if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
                    return Err(domain(format!("{path}.weights"), "weights must be finite and non-negative"));
                }
                if w.iter().sum::<f64>() <= 0.0 {
                    return Err(domain(format!("{path}.weights"), "weights must have positive sum"));
                }
            }
            Ok(())
        };
        match self {
            ParamDomain::Int { min, max, weights } => {
                if min > max {
                    return Err(domain(path, format!("min {min} exceeds max {max}")));
                }
                if max - min > 1_000_000 {
                    return Err(domain(path, "integer range too wide"));
                }
                check_weights(weights, (max - min + 1) as usize)
            }
            ParamDomain::Real { min, max } => {
                if !min.is_finite() || !max.is_finite() {
                    return Err(domain(path, "bounds must be finite"));
                }
                if min > max {
                    return Err(domain(path, format!("min {min} exceeds max {max}")));
                }
                Ok(())
            }
            ParamDomain::Enum { values, weights } => {
                if values.is_empty() {
                    return Err(domain(format!("{path}.values"), "enum needs at least one value"));
                }
                let mut sorted = values.clone();
                sorted.sort();
                sorted.dedup();
                if sorted.len() != values.len() {
                    return Err(domain(format!("{path}.values"), "enum values must be distinct"));
                }
                check_weights(weights, values.len())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidatorKind {
    NonIntersection,
    Margin,
    Uniqueness,
    Symmetry,
    Contrast,
    Parity,
}

/// Validator tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Margins {
    /// Minimum gap between objects, as a fraction of the world extent.
    #[serde(default = "Margins::default_gap")]
    pub gap_fraction: f64,
    /// Minimum angular separation between an answer and a rotated or turned distractor.
    #[serde(default = "Margins::default_angle")]
    pub angle_deg: f64,
    /// Minimum differing cells between projection masks.
    #[serde(default = "Margins::default_hamming")]
    pub hamming: u32,
    /// Minimum angular width of anything the agent must see.
    #[serde(default = "Margins::default_view_angle")]
    pub view_angle_deg: f64,
}

impl Margins {
    fn default_gap() -> f64 {
        0.05
    }
    fn default_angle() -> f64 {
        15.0
    }
    fn default_hamming() -> u32 {
        2
    }
    fn default_view_angle() -> f64 {
        3.0
    }

    pub fn angle_rad(&self) -> f64 {
        self.angle_deg.to_radians()
    }

    pub fn view_angle_rad(&self) -> f64 {
        self.view_angle_deg.to_radians()
    }

    fn check(&self) -> Result<(), ManifestError> {
        if !(self.gap_fraction.is_finite() && (0.0..0.5).contains(&self.gap_fraction)) {
            return Err(domain("margins.gap_fraction", "must lie in [0, 0.5)"));
        }
        if !(self.angle_deg.is_finite() && self.angle_deg > 0.0 && self.angle_deg < 90.0) {
            return Err(domain("margins.angle_deg", "must lie in (0, 90)"));
        }
        if self.hamming == 0 {
            return Err(domain("margins.hamming", "must be at least 1"));
        }
        if !(self.view_angle_deg.is_finite() && self.view_angle_deg > 0.0 && self.view_angle_deg < 45.0) {
            return Err(domain("margins.view_angle_deg", "must lie in (0, 45)"));
        }
        Ok(())
    }
}

impl Default for Margins {
    fn default() -> Self {
        Self {
            gap_fraction: Self::default_gap(),
            angle_deg: Self::default_angle(),
            hamming: Self::default_hamming(),
            view_angle_deg: Self::default_view_angle(),
        }
    }
}

/// Style settings. `palette` is a palette name or `$KNOB` naming an enum knob of palettes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RendererConfig {
    pub palette: String,
    pub canvas: u32,
    pub stroke_width: f64,
    pub background: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnswerConfig {
    pub num_variants: usize,
    pub labels: Vec<String>,
    pub correct_marker: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub id: ManifestId,
    pub invariant: Invariant,
    pub ability: Ability,
    pub params: BTreeMap<String, ParamDomain>,
    pub prompt_template: String,
    pub answer: AnswerConfig,
    pub validators: Vec<ValidatorKind>,
    pub margins: Margins,
    pub renderer: RendererConfig,
    pub difficulty_features: Vec<String>,
}

// Document shape. Field names follow the on-disk format.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: String,
    #[serde(rename = "type")]
    family_type: String,
    version: String,
    invariant: String,
    ability: Ability,
    input: BTreeMap<String, DomainDoc>,
    task: TaskDoc,
    validators: Vec<ValidatorKind>,
    #[serde(default)]
    margins: Margins,
    renderer: RendererConfig,
    difficulty: DifficultyDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum DomainDoc {
    Int {
        min: i64,
        max: i64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
    Real {
        min: f64,
        max: f64,
    },
    Enum {
        values: Vec<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskDoc {
    prompt: String,
    answer: AnswerDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AnswerDoc {
    num_variants: usize,
    variants: VariantsDoc,
    correct: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
enum VariantsDoc {
    Enum { values: Vec<String> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DifficultyDoc {
    features: Vec<String>,
}

const CORRECT_MARKER: &str = "$CORRECT";

/// Parse and validate a manifest document.
pub fn parse_manifest(document: &str) -> Result<Manifest, ManifestError> {
    let de = &mut serde_json::Deserializer::from_str(document);
    let doc: Document = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ManifestError::Malformed {
            path: if path.is_empty() || path == "." { "$".into() } else { path },
            message: e.into_inner().to_string(),
        }
    })?;
    Manifest::from_document(doc)
}

impl Manifest {
    fn from_document(doc: Document) -> Result<Self, ManifestError> {
        if doc.name.trim().is_empty() {
            return Err(domain("name", "must be non-empty"));
        }
        let family_type: FamilyType = doc.family_type.parse().map_err(|m: String| domain("type", m))?;
        let version: Version = doc.version.parse().map_err(|m: String| domain("version", m))?;
        let invariant: Invariant = doc
            .invariant
            .parse()
            .map_err(|_| ManifestError::UnknownInvariant { value: doc.invariant.clone() })?;
        let params: BTreeMap<String, ParamDomain> = doc
            .input
            .into_iter()
            .map(|(k, d)| {
                let dom = match d {
                    DomainDoc::Int { min, max, weights } => ParamDomain::Int { min, max, weights },
                    DomainDoc::Real { min, max } => ParamDomain::Real { min, max },
                    DomainDoc::Enum { values, weights } => ParamDomain::Enum { values, weights },
                };
                (k, dom)
            })
            .collect();
        let VariantsDoc::Enum { values: labels } = doc.task.answer.variants;
        let m = Manifest {
            id: ManifestId {
                name: doc.name,
                family_type,
                version,
            },
            invariant,
            ability: doc.ability,
            params,
            prompt_template: doc.task.prompt,
            answer: AnswerConfig {
                num_variants: doc.task.answer.num_variants,
                labels,
                correct_marker: doc.task.answer.correct,
            },
            validators: doc.validators,
            margins: doc.margins,
            renderer: doc.renderer,
            difficulty_features: doc.difficulty.features,
        };
        m.check_invariants()?;
        Ok(m)
    }

    /// Re-verify every structural invariant.
    pub fn check_invariants(&self) -> Result<(), ManifestError> {
        for (k, d) in &self.params {
            if !is_knob_name(k) {
                return Err(domain(format!("input.{k}"), "knob names must match [A-Z][A-Z0-9_]*"));
            }
            d.check(&format!("input.{k}"))?;
        }
        let a = &self.answer;
        if a.num_variants < 2 {
            return Err(domain("task.answer.num_variants", "must be at least 2"));
        }
        if a.labels.len() != a.num_variants {
            return Err(domain(
                "task.answer.variants.values",
                format!("expected {} labels, got {}", a.num_variants, a.labels.len()),
            ));
        }
        let mut sorted = a.labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != a.labels.len() || a.labels.iter().any(|l| l.trim().is_empty()) {
            return Err(domain("task.answer.variants.values", "labels must be distinct and non-empty"));
        }
        if a.correct_marker != CORRECT_MARKER {
            return Err(domain("task.answer.correct", format!("must be {CORRECT_MARKER:?}")));
        }
        let outputs = self.id.family_type.outputs();
        for name in placeholders(&self.prompt_template) {
            if !outputs.contains(&name.as_str()) {
                return Err(ManifestError::Placeholder {
                    path: "task.prompt".into(),
                    name,
                });
            }
        }
        if self.validators.is_empty() {
            return Err(domain("validators", "must list at least one validator"));
        }
        if !self.validators.contains(&ValidatorKind::Uniqueness) {
            return Err(domain("validators", "uniqueness is required"));
        }
        self.margins.check()?;
        let r = &self.renderer;
        if r.canvas < 64 || r.canvas > 4096 {
            return Err(domain("renderer.canvas", "must lie in 64..=4096"));
        }
        if !(r.stroke_width.is_finite() && r.stroke_width > 0.0 && r.stroke_width < 32.0) {
            return Err(domain("renderer.stroke_width", "must lie in (0, 32)"));
        }
        if palette::Rgb::parse_hex(&r.background).is_none() {
            return Err(domain("renderer.background", "must be #rrggbb"));
        }
        self.palette_candidates()?;
        if self.difficulty_features.is_empty() {
            return Err(domain("difficulty.features", "must name at least one knob"));
        }
        for (i, f) in self.difficulty_features.iter().enumerate() {
            if !self.params.contains_key(f) {
                return Err(domain(format!("difficulty.features[{i}]"), format!("{f} is not a declared knob")));
            }
        }
        Ok(())
    }

    /// Palettes the renderer config can resolve to.
    fn palette_candidates(&self) -> Result<Vec<String>, ManifestError> {
        let p = &self.renderer.palette;
        let names = match p.strip_prefix('$') {
            Some(knob) => match self.params.get(knob) {
                Some(ParamDomain::Enum { values, .. }) => values.clone(),
                _ => return Err(domain("renderer.palette", format!("{p} must name an enum knob"))),
            },
            None => vec![p.clone()],
        };
        for n in &names {
            if palette::palette(n).is_none() {
                return Err(domain("renderer.palette", format!("unknown palette {n:?}")));
            }
        }
        Ok(names)
    }

    /// The palette selected for a sample.
    pub fn palette_for(&self, sample: &ParamSample) -> Result<String, ManifestError> {
        let p = &self.renderer.palette;
        match p.strip_prefix('$') {
            Some(knob) => sample.enum_value(knob).map(str::to_owned),
            None => Ok(p.clone()),
        }
    }

    /// Difficulty features scaled to `[0, 1]`, in declared order.
    pub fn features(&self, sample: &ParamSample) -> Result<Vec<f64>, ManifestError> {
        self.difficulty_features
            .iter()
            .map(|k| {
                let v = sample.get(k)?;
                self.params[k].normalize(v).ok_or_else(|| ManifestError::Knob {
                    knob: k.clone(),
                    message: "value outside its domain".into(),
                })
            })
            .collect()
    }

    pub fn family(&self) -> FamilyType {
        self.id.family_type
    }

    /// `name@version`, the key instances and models refer to.
    pub fn key(&self) -> String {
        format!("{}@{}", self.id.name, self.id.version)
    }

    fn to_document(&self) -> Document {
        Document {
            name: self.id.name.clone(),
            family_type: self.id.family_type.as_str().into(),
            version: self.id.version.to_string(),
            invariant: serde_json::to_value(self.invariant)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            ability: self.ability,
            input: self
                .params
                .iter()
                .map(|(k, d)| {
                    let doc = match d.clone() {
                        ParamDomain::Int { min, max, weights } => DomainDoc::Int { min, max, weights },
                        ParamDomain::Real { min, max } => DomainDoc::Real { min, max },
                        ParamDomain::Enum { values, weights } => DomainDoc::Enum { values, weights },
                    };
                    (k.clone(), doc)
                })
                .collect(),
            task: TaskDoc {
                prompt: self.prompt_template.clone(),
                answer: AnswerDoc {
                    num_variants: self.answer.num_variants,
                    variants: VariantsDoc::Enum {
                        values: self.answer.labels.clone(),
                    },
                    correct: self.answer.correct_marker.clone(),
                },
            },
            validators: self.validators.clone(),
            margins: self.margins,
            renderer: self.renderer.clone(),
            difficulty: DifficultyDoc {
                features: self.difficulty_features.clone(),
            },
        }
    }

    /// Canonical document text.
    pub fn to_canonical_json(&self) -> String {
        canonical::to_canonical_string(&self.to_document()).expect("manifest documents always serialize")
    }
}

fn is_knob_name(s: &str) -> bool {
    let mut b = s.bytes();
    matches!(b.next(), Some(c) if c.is_ascii_uppercase())
        && b.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == b'_')
}

/// The manifests shipped with the crate, as `(file name, document)`.
pub fn shipped() -> [(&'static str, &'static str); 7] {
    [
        ("agent_sight.manifest.json", include_str!("../../manifests/agent_sight.manifest.json")),
        ("sun_direction.manifest.json", include_str!("../../manifests/sun_direction.manifest.json")),
        ("polyomino.manifest.json", include_str!("../../manifests/polyomino.manifest.json")),
        ("revolution.manifest.json", include_str!("../../manifests/revolution.manifest.json")),
        ("unfolded.manifest.json", include_str!("../../manifests/unfolded.manifest.json")),
        ("pyramid.manifest.json", include_str!("../../manifests/pyramid.manifest.json")),
        ("full_views.manifest.json", include_str!("../../manifests/full_views.manifest.json")),
    ]
}

/// JSON Schema for manifest documents.
pub const SCHEMA: &str = include_str!("../../manifests/manifest.schema.json");

pub fn shipped_manifests() -> Vec<Manifest> {
    shipped()
        .iter()
        .map(|(name, doc)| parse_manifest(doc).unwrap_or_else(|e| panic!("shipped manifest {name}: {e}")))
        .collect()
}
