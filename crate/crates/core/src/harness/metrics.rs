//! Tracking metrics, truth against reference.

use serde::Serialize;

use super::sim::StepRecord;
use super::HarnessError;
use crate::dynamics::wrap_angle;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RunReport {
    /// m
    pub rms_pos_err: f64,
    /// m
    pub max_pos_err: f64,
    /// rad
    pub rms_heading_err: f64,
    /// Saturated channel-steps over all channel-steps.
    pub saturation_fraction: f64,
    pub steps: usize,
    /// s; zero unless filled in by the runner.
    pub wall_time: f64,
}

pub fn position_error(r: &StepRecord) -> f64 {
    (0..3)
        .map(|i| (r.position[i] - r.reference_position[i]).powi(2))
        .sum::<f64>()
        .sqrt()
}

pub fn heading_error(r: &StepRecord) -> f64 {
    wrap_angle(r.course - r.reference_course)
}

pub fn compute_metrics(log: &[StepRecord]) -> Result<RunReport, HarnessError> {
    if log.is_empty() {
        return Err(HarnessError::Core(crate::Error::InvalidArgument(
            "cannot compute metrics of an empty log".into(),
        )));
    }
    let n = log.len() as f64;
    let mut sq = 0.0;
    let mut max: f64 = 0.0;
    let mut heading_sq = 0.0;
    let mut saturated = 0usize;
    for r in log {
        let e = position_error(r);
        sq += e * e;
        max = max.max(e);
        heading_sq += heading_error(r).powi(2);
        saturated += r.saturated.iter().filter(|&&s| s).count();
    }
    Ok(RunReport {
        rms_pos_err: (sq / n).sqrt(),
        max_pos_err: max,
        rms_heading_err: (heading_sq / n).sqrt(),
        saturation_fraction: saturated as f64 / (4.0 * n),
        steps: log.len(),
        wall_time: 0.0,
    })
}
