use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Bin, Manifest, ManifestError, ParamDomain};
use crate::rng::{quantize_weights, Stream};

/// Attempts made by bin-conditioned sampling before giving up.
pub const REJECTION_BUDGET: u32 = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Real(f64),
    Enum(String),
}

/// A concrete knob assignment drawn from a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSample {
    pub values: BTreeMap<String, ParamValue>,
    pub seed: u64,
    /// `name@version` of the manifest the values were drawn from.
    pub manifest: String,
}

impl ParamSample {
    pub fn get(&self, knob: &str) -> Result<&ParamValue, ManifestError> {
        self.values.get(knob).ok_or_else(|| ManifestError::Knob {
            knob: knob.into(),
            message: "not present in sample".into(),
        })
    }

    pub fn int(&self, knob: &str) -> Result<i64, ManifestError> {
        match self.get(knob)? {
            ParamValue::Int(v) => Ok(*v),
            _ => Err(kind_error(knob, "int")),
        }
    }

    pub fn real(&self, knob: &str) -> Result<f64, ManifestError> {
        match self.get(knob)? {
            ParamValue::Real(v) => Ok(*v),
            ParamValue::Int(v) => Ok(*v as f64),
            _ => Err(kind_error(knob, "real")),
        }
    }

    pub fn enum_value(&self, knob: &str) -> Result<&str, ManifestError> {
        match self.get(knob)? {
            ParamValue::Enum(v) => Ok(v),
            _ => Err(kind_error(knob, "enum")),
        }
    }

    /// Every value lies inside its declared domain and no undeclared knob is present.
    pub fn conforms_to(&self, manifest: &Manifest) -> bool {
        self.values.len() == manifest.params.len()
            && manifest
                .params
                .iter()
                .all(|(k, d)| self.values.get(k).is_some_and(|v| d.contains(v)))
    }
}

fn kind_error(knob: &str, kind: &str) -> ManifestError {
    ManifestError::Knob {
        knob: knob.into(),
        message: format!("expected a {kind} value"),
    }
}

/// Predicts the difficulty bin of a sample. Implemented by fitted difficulty models.
pub trait BinPredictor {
    /// `None` when there is no fit for the manifest's family.
    fn predict_bin(&self, manifest: &Manifest, sample: &ParamSample) -> Option<Bin>;
    fn has_family(&self, manifest: &Manifest) -> bool;
}

fn draw(domain: &ParamDomain, s: &mut Stream) -> ParamValue {
    match domain {
        ParamDomain::Int { min, max, weights } => match weights {
            Some(w) => ParamValue::Int(min + s.weighted(&quantize_weights(w)) as i64),
            None => ParamValue::Int(s.range_i64(*min, *max)),
        },
        ParamDomain::Real { min, max } => ParamValue::Real(s.lattice(*min, *max)),
        ParamDomain::Enum { values, weights } => {
            let i = match weights {
                Some(w) => s.weighted(&quantize_weights(w)),
                None => s.index(values.len()),
            };
            ParamValue::Enum(values[i].clone())
        }
    }
}

fn draw_once(manifest: &Manifest, seed: u64, attempt: u32) -> ParamSample {
    let base = Stream::new(seed).split("params").split_index(attempt as u64);
    let values = manifest
        .params
        .iter()
        .map(|(k, d)| (k.clone(), draw(d, &mut base.split(k))))
        .collect();
    ParamSample {
        values,
        seed,
        manifest: manifest.key(),
    }
}

/// Draw knob values. With a bin, samples whose predicted bin differs are rejected, up to
/// [`REJECTION_BUDGET`] attempts.
pub fn sample_params(
    manifest: &Manifest,
    seed: u64,
    bin: Option<Bin>,
    model: Option<&dyn BinPredictor>,
) -> Result<ParamSample, ManifestError> {
    let Some(bin) = bin else {
        return Ok(draw_once(manifest, seed, 0));
    };
    let model = model
        .filter(|m| m.has_family(manifest))
        .ok_or_else(|| ManifestError::NoModel(manifest.family().to_string()))?;
    for attempt in 0..REJECTION_BUDGET {
        let s = draw_once(manifest, seed, attempt);
        if model.predict_bin(manifest, &s) == Some(bin) {
            return Ok(s);
        }
    }
    Err(ManifestError::Infeasible {
        family: manifest.family().to_string(),
        bin,
    })
}
