//! Run summaries and batch aggregation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    /// Reached `Holding` with at least the contact quorum of fingers on the
    /// object.
    pub success: bool,
    pub reached_hold: bool,
    pub fingers_in_contact_at_hold: usize,
    /// First detection to `Holding`.
    pub time_to_grasp_ms: Option<u64>,
    /// `HAND_OPEN` sent to back in `Idle`.
    pub time_to_release_ms: Option<u64>,
    pub energy_mah: f64,
    pub frame_errors: usize,
    pub anomalies: usize,
    pub hand_close_commands: usize,
    pub hand_open_commands: usize,
    pub duration_ms: u64,
}

impl RunSummary {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_time_to_grasp_ms: Option<f64>,
    pub max_time_to_grasp_ms: Option<u64>,
    pub total_energy_mah: f64,
    pub summaries: Vec<RunSummary>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no runs to summarize")]
    Empty,
}

pub fn summarize_batch(summaries: &[RunSummary]) -> Result<BatchReport, ReportError> {
    if summaries.is_empty() {
        return Err(ReportError::Empty);
    }
    let successes = summaries.iter().filter(|s| s.success).count();
    let grasp_times: Vec<u64> = summaries.iter().filter_map(|s| s.time_to_grasp_ms).collect();
    let mean = (!grasp_times.is_empty()).then(|| grasp_times.iter().sum::<u64>() as f64 / grasp_times.len() as f64);
    Ok(BatchReport {
        runs: summaries.len(),
        successes,
        success_rate: successes as f64 / summaries.len() as f64,
        mean_time_to_grasp_ms: mean,
        max_time_to_grasp_ms: grasp_times.iter().copied().max(),
        total_energy_mah: summaries.iter().map(|s| s.energy_mah).sum(),
        summaries: summaries.to_vec(),
    })
}

impl BatchReport {
    pub fn all_passed(&self) -> bool {
        self.successes == self.runs
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Fixed-width text table, one row per run plus totals.
    pub fn render_table(&self) -> String {
        let opt = |v: Option<u64>| v.map_or_else(|| "-".to_string(), |v| v.to_string());
        let width = self.summaries.iter().map(|s| s.name.len()).max().unwrap_or(0).max(8);
        let mut out = String::new();
        writeln!(
            out,
            "{:<width$}  {:>7}  {:>8}  {:>9}  {:>11}  {:>10}  {:>6}",
            "scenario", "result", "contacts", "grasp_ms", "release_ms", "energy_mah", "errors"
        )
        .unwrap();
        for s in &self.summaries {
            writeln!(
                out,
                "{:<width$}  {:>7}  {:>8}  {:>9}  {:>11}  {:>10.4}  {:>6}",
                s.name,
                if s.success { "PASS" } else { "FAIL" },
                s.fingers_in_contact_at_hold,
                opt(s.time_to_grasp_ms),
                opt(s.time_to_release_ms),
                s.energy_mah,
                s.frame_errors
            )
            .unwrap();
        }
        let mean = self
            .mean_time_to_grasp_ms
            .map_or_else(|| "-".to_string(), |m| format!("{m:.1}"));
        writeln!(
            out,
            "\n{}/{} succeeded (rate {:.2}); time to grasp mean {} ms, max {} ms; total energy {:.4} mAh",
            self.successes,
            self.runs,
            self.success_rate,
            mean,
            opt(self.max_time_to_grasp_ms),
            self.total_energy_mah
        )
        .unwrap();
        out
    }
}
