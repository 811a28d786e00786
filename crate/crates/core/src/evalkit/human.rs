//! Aggregating annotator choices into a per-item pass.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Truths;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub annotator: String,
    pub choice: String,
    pub time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HumanPassConfig {
    /// Annotations slower than this are dropped.
    pub time_limit_s: f64,
    /// Correct in-time annotations needed for a pass; also the least number of
    /// in-time annotations an item needs to be scored.
    pub min_correct: usize,
}

impl Default for HumanPassConfig {
    fn default() -> Self {
        Self {
            time_limit_s: 30.0,
            min_correct: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanPassReport {
    /// `passed / scored`, 0 when nothing was scored.
    pub rate: f64,
    pub passed: usize,
    pub scored: usize,
    /// Items with too few in-time annotations, or unknown to `truths`.
    pub excluded: Vec<String>,
}

pub fn human_simple_pass(
    annotations: &BTreeMap<String, Vec<Annotation>>,
    truths: &Truths,
    cfg: &HumanPassConfig,
) -> HumanPassReport {
    let (mut passed, mut scored, mut excluded) = (0, 0, Vec::new());
    for (id, list) in annotations {
        let Some(truth) = truths.get(id) else {
            excluded.push(id.clone());
            continue;
        };
        let in_time: Vec<&Annotation> = list.iter().filter(|a| a.time_s.is_finite() && a.time_s <= cfg.time_limit_s).collect();
        if in_time.len() < cfg.min_correct {
            excluded.push(id.clone());
            continue;
        }
        scored += 1;
        if in_time.iter().filter(|a| a.choice == truth.correct_label).count() >= cfg.min_correct {
            passed += 1;
        }
    }
    HumanPassReport {
        rate: if scored == 0 { 0.0 } else { passed as f64 / scored as f64 },
        passed,
        scored,
        excluded,
    }
}
