//! Pilot response records: CSV exchange format and a synthetic respondent model.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::DifficultyError;
use crate::rng::Stream;

pub const PILOT_HEADER: [&str; 4] = ["instance_id", "respondent_id", "response_time_s", "correct"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotRecord {
    pub instance_id: String,
    /// Opaque.
    pub respondent_id: String,
    pub response_time_s: f64,
    pub correct: bool,
}

impl PilotRecord {
    pub fn check(&self) -> Result<(), DifficultyError> {
        if !(self.response_time_s.is_finite() && self.response_time_s > 0.0) {
            return Err(DifficultyError::Pilot(format!(
                "instance {}: response time {} is not a positive number",
                self.instance_id, self.response_time_s
            )));
        }
        Ok(())
    }
}

fn parse_bool(s: &str) -> Option<bool> {
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "1" => Some(true),
        "false" | "0" => Some(false),
        _ => None,
    }
}

pub fn read_pilot_csv(input: impl Read) -> Result<Vec<PilotRecord>, DifficultyError> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers().map_err(|e| DifficultyError::Pilot(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != PILOT_HEADER {
        return Err(DifficultyError::Pilot(format!("expected header {}, got {:?}", PILOT_HEADER.join(","), header)));
    }
    let mut out = Vec::new();
    for (line, row) in r.records().enumerate() {
        let row = row.map_err(|e| DifficultyError::Pilot(e.to_string()))?;
        let bad = |what: &str| DifficultyError::Pilot(format!("row {}: bad {what}", line + 2));
        let rec = PilotRecord {
            instance_id: row.get(0).ok_or_else(|| bad("instance_id"))?.to_owned(),
            respondent_id: row.get(1).ok_or_else(|| bad("respondent_id"))?.to_owned(),
            response_time_s: row.get(2).and_then(|v| v.parse().ok()).ok_or_else(|| bad("response_time_s"))?,
            correct: row.get(3).and_then(parse_bool).ok_or_else(|| bad("correct"))?,
        };
        rec.check()?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(DifficultyError::Pilot("no pilot records".into()));
    }
    Ok(out)
}

pub fn write_pilot_csv(records: &[PilotRecord], out: impl Write) -> Result<(), DifficultyError> {
    let mut w = csv::Writer::from_writer(out);
    let err = |e: csv::Error| DifficultyError::Pilot(e.to_string());
    w.write_record(PILOT_HEADER).map_err(err)?;
    for r in records {
        let t = r.response_time_s.to_string();
        w.write_record([r.instance_id.as_str(), r.respondent_id.as_str(), t.as_str(), if r.correct { "true" } else { "false" }])
            .map_err(err)?;
    }
    w.flush().map_err(|e| DifficultyError::Pilot(e.to_string()))
}

/// Synthetic respondents whose latency rises and accuracy falls with the mean of the
/// normalised difficulty features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PilotSimulation {
    pub respondents_per_instance: usize,
    pub respondent_pool: usize,
    /// Median latency at hardness 0, seconds.
    pub base_seconds: f64,
    /// Added to log latency at hardness 1.
    pub log_time_gain: f64,
    pub log_time_noise: f64,
    pub p_correct_easy: f64,
    pub p_correct_hard: f64,
}

impl Default for PilotSimulation {
    fn default() -> Self {
        Self {
            respondents_per_instance: 5,
            respondent_pool: 60,
            base_seconds: 6.0,
            log_time_gain: 1.2,
            log_time_noise: 0.25,
            p_correct_easy: 0.95,
            p_correct_hard: 0.45,
        }
    }
}

/// `items` are `(instance_id, features in [0, 1])`.
pub fn simulate_pilot(items: &[(String, Vec<f64>)], sim: &PilotSimulation, seed: u64) -> Vec<PilotRecord> {
    let root = Stream::new(seed).split("pilot");
    let mut abilities = root.split("respondents");
    let speed: Vec<f64> = (0..sim.respondent_pool.max(1)).map(|_| 0.1 * abilities.normal()).collect();
    let mut out = Vec::with_capacity(items.len() * sim.respondents_per_instance);
    for (id, features) in items {
        let h = if features.is_empty() { 0.5 } else { features.iter().sum::<f64>() / features.len() as f64 };
        let mut s = root.split(id);
        let who = s.sample_indices(speed.len(), sim.respondents_per_instance.min(speed.len()));
        for r in who {
            let log_t = sim.base_seconds.ln() + sim.log_time_gain * h + speed[r] + sim.log_time_noise * s.normal();
            let p = sim.p_correct_easy + (sim.p_correct_hard - sim.p_correct_easy) * h;
            let correct = s.unit() < p;
            out.push(PilotRecord {
                instance_id: id.clone(),
                respondent_id: format!("sim-{r:03}"),
                response_time_s: log_t.exp(),
                correct,
            });
        }
    }
    out
}
