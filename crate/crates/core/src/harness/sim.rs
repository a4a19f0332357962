//! Closed-loop orchestration: planner → controller → plant → filters.

use std::time::{Duration, Instant};

use nalgebra::{Matrix1, Matrix6, Vector1, Vector6};
use serde::Serialize;

use super::metrics::{compute_metrics, RunReport};
use super::scenario::Scenario;
use super::HarnessError;
use crate::dynamics::{translation_matrices, wrap_angle, HeadingState, NoiseModel, Plant, TranslationState};
use crate::estimation::{scalar_model, update_heading, KalmanState, LinearGaussianModel};
use crate::planning::ReferenceSample;
use crate::regulation::{controller_step, DareOptions, Regulator};

/// Smallest variance the filters work with, so noise-free runs keep an
/// invertible innovation covariance.
pub const COVARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Caps the number of steps (on top of the scenario's own cap).
    pub steps: Option<usize>,
    /// Paces the loop to one step per `dt` of wall-clock time.
    pub realtime: bool,
}

/// Everything known at step `k`, before the command is applied.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StepRecord {
    pub t: f64,
    pub position: [f64; 3],
    pub velocity: [f64; 3],
    pub course: f64,
    pub position_est: [f64; 3],
    pub velocity_est: [f64; 3],
    pub course_est: f64,
    pub reference_position: [f64; 3],
    pub reference_velocity: [f64; 3],
    pub reference_course: f64,
    /// Applied command, clamped to `[-1, 1]`.
    pub command: [f64; 4],
    pub raw_command: [f64; 4],
    pub saturated: [bool; 4],
    /// Measurement the estimates were updated with.
    pub y1: [f64; 6],
    pub y2: f64,
    pub innovation1: [f64; 6],
    pub innovation2: f64,
    /// Diagonals of the estimate covariances.
    pub covariance1: [f64; 6],
    pub covariance2: f64,
    pub dare_iterations: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub log: Vec<StepRecord>,
}

fn floored(noise: &NoiseModel<f64>) -> NoiseModel<f64> {
    let floor6 = |m: &Matrix6<f64>| {
        let mut m = *m;
        for i in 0..6 {
            m[(i, i)] = m[(i, i)].max(COVARIANCE_FLOOR);
        }
        m
    };
    NoiseModel {
        translation_process: floor6(&noise.translation_process),
        translation_measurement: floor6(&noise.translation_measurement),
        heading_process: noise.heading_process.max(COVARIANCE_FLOOR),
        heading_measurement: noise.heading_measurement.max(COVARIANCE_FLOOR),
    }
}

fn arr3(v: &nalgebra::Vector3<f64>) -> [f64; 3] {
    [v.x, v.y, v.z]
}

fn arr6(v: &Vector6<f64>) -> [f64; 6] {
    v.as_slice().try_into().unwrap()
}

#[derive(Serialize)]
struct AbortState<'a> {
    step: usize,
    seed: u64,
    truth_translation: [f64; 6],
    truth_course: f64,
    estimate_translation: [f64; 6],
    estimate_course: f64,
    covariance_translation: Vec<f64>,
    covariance_course: f64,
    reference: Option<ReferenceState>,
    last: Option<&'a StepRecord>,
}

#[derive(Serialize)]
struct ReferenceState {
    t: f64,
    position: [f64; 3],
    velocity: [f64; 3],
    course: f64,
}

/// Runs the scenario to completion.
///
/// Per step: take `r[k]`; predict the heading the command will produce and
/// rebuild the translation gains for it; apply the control law to the
/// current estimates; advance the plant; run both filters on the new
/// measurement. The translation filter predicts with the model built at the
/// heading estimate in effect while the command was applied.
pub fn run_closed_loop(scenario: &Scenario, opts: &RunOptions) -> Result<RunOutput, HarnessError> {
    scenario.validate()?;
    let started = Instant::now();
    let dt = scenario.dt;
    let drone = scenario.drone_gains();
    let noise = scenario.noise_model();
    let filter_noise = floored(&noise);

    let mut refs = scenario.references()?;
    let first = match refs.next() {
        Some(r) => r?,
        None => {
            return Err(HarnessError::Invalid {
                key: "mode".into(),
                msg: "produces no reference samples".into(),
            })
        }
    };
    let (x0, c0) = scenario.initial_state(&first);
    let mut plant = Plant::new(
        x0,
        HeadingState::new(c0)?,
        scenario.plant_gains(),
        &noise,
        scenario.seed,
    )?;
    let mut regulator = Regulator::new(
        drone,
        scenario.regulator_weights(),
        &scenario.heading_config(),
        dt,
        DareOptions::default(),
    )?;
    let k2 = regulator.heading_gain();
    let heading_model = scalar_model(
        1.0,
        drone.k_yaw_rate * dt,
        1.0,
        filter_noise.heading_process,
        filter_noise.heading_measurement,
    );

    let mut y = plant.measure();
    let mut kf1 = KalmanState::from_measurement(y.translation, filter_noise.translation_measurement);
    let mut kf2 = KalmanState::from_measurement(
        Vector1::new(y.heading),
        Matrix1::new(filter_noise.heading_measurement),
    );
    let mut innovation1 = Vector6::zeros();
    let mut innovation2 = 0.0;

    let limit = [opts.steps, scenario.steps]
        .into_iter()
        .flatten()
        .min()
        .unwrap_or(usize::MAX);
    let mut log: Vec<StepRecord> = Vec::new();
    let samples = std::iter::once(Ok(first)).chain(refs).take(limit);

    for (k, sample) in samples.enumerate() {
        let mut reference: Option<ReferenceSample<f64>> = None;
        let step = (|| -> crate::Result<(StepRecord, _)> {
            let r = sample?;
            reference = Some(r);
            let c_hat = kf2.estimate[0];
            let x1_hat = TranslationState::from_vector(&kf1.estimate);

            // B1 is built for the heading expected after this step's command
            let u2 = (k2 * wrap_angle(r.course - c_hat)).clamp(-1.0, 1.0);
            let c_next = wrap_angle(c_hat + drone.k_yaw_rate * dt * u2);
            let update = regulator.update(c_next)?;
            let out = controller_step(&r, &x1_hat, c_hat, &update.gains)?;

            let truth = *plant.translation();
            let record = StepRecord {
                t: r.t,
                position: arr3(&truth.position),
                velocity: arr3(&truth.velocity),
                course: plant.heading(),
                position_est: arr3(&x1_hat.position),
                velocity_est: arr3(&x1_hat.velocity),
                course_est: c_hat,
                reference_position: arr3(&r.position),
                reference_velocity: arr3(&r.velocity),
                reference_course: r.course,
                command: out.command.channels(),
                raw_command: out.raw.channels(),
                saturated: out.saturated,
                y1: arr6(&y.translation),
                y2: y.heading,
                innovation1: arr6(&innovation1),
                innovation2,
                covariance1: arr6(&kf1.covariance.diagonal()),
                covariance2: kf2.covariance[(0, 0)],
                dare_iterations: update.dare_iterations,
            };

            let m = translation_matrices(dt, c_hat, &drone)?;
            let y_next = plant.step(&out.command, dt)?;

            let model = LinearGaussianModel {
                a: m.a,
                b: m.b,
                c: Matrix6::identity(),
                process: filter_noise.translation_process,
                measurement: filter_noise.translation_measurement,
            };
            let prior = kf1.predict(&model, &out.command.translation());
            let innov = y_next.translation - prior.estimate;
            let (post, _) = prior.update_with_innovation(&model, &innov)?;

            let mut prior2 = kf2.predict(&heading_model, &Vector1::new(out.command.yaw_rate));
            prior2.estimate[0] = wrap_angle(prior2.estimate[0]);
            let innov2 = wrap_angle(y_next.heading - prior2.estimate[0]);
            let (post2, _) = update_heading(&prior2, &heading_model, y_next.heading)?;
            Ok((record, (post, post2, innov, innov2, y_next)))
        })();

        match step {
            Ok((record, (post, post2, innov, innov2, y_next))) => {
                log.push(record);
                kf1 = post;
                kf2 = post2;
                innovation1 = innov;
                innovation2 = innov2;
                y = y_next;
            }
            Err(source) => {
                let truth = plant.translation().to_vector();
                let state = AbortState {
                    step: k,
                    seed: scenario.seed,
                    truth_translation: arr6(&truth),
                    truth_course: plant.heading(),
                    estimate_translation: arr6(&kf1.estimate),
                    estimate_course: kf2.estimate[0],
                    covariance_translation: kf1.covariance.as_slice().to_vec(),
                    covariance_course: kf2.covariance[(0, 0)],
                    reference: reference.map(|r| ReferenceState {
                        t: r.t,
                        position: arr3(&r.position),
                        velocity: arr3(&r.velocity),
                        course: r.course,
                    }),
                    last: log.last(),
                };
                return Err(HarnessError::RunAborted {
                    step: k,
                    source,
                    state: serde_json::to_string(&state).unwrap_or_default(),
                });
            }
        }

        if opts.realtime {
            let due = Duration::from_secs_f64(dt * (k + 1) as f64);
            if let Some(wait) = due.checked_sub(started.elapsed()) {
                std::thread::sleep(wait);
            }
        }
    }

    let mut report = compute_metrics(&log)?;
    report.wall_time = started.elapsed().as_secs_f64();
    Ok(RunOutput { report, log })
}
