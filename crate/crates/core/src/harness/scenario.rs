//! Scenario files: versioned JSON describing one closed-loop run.

use std::fs;
use std::path::Path;

use nalgebra::{Matrix6, Vector3};
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::cinematography::{parse_psl, shot_to_manifold, MappingTables, PslShot};
use crate::dynamics::{DroneGains, NoiseModel, TranslationState};
use crate::planning::{
    ActorTrack, BuiltinTrajectory, HeadingProfile, PathSegment, ReferenceGenerator, ReferenceSample,
    SteeringConfig, TrackSample,
};
use crate::regulation::{HeadingGainMode, HeadingRegulatorConfig, RegulatorWeights};

pub const SCHEMA_VERSION: u32 = 1;

/// Lazily produced reference samples.
pub type ReferenceStream = Box<dyn Iterator<Item = crate::Result<ReferenceSample<f64>>> + Send>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "schema_version")]
    pub schema: u32,
    /// Control period (s).
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default)]
    pub seed: u64,
    /// Caps the number of simulated steps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default)]
    pub drone: DroneConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub heading: HeadingConfig,
    #[serde(default)]
    pub steering: SteeringParams,
    /// Plant gains are the nominal gains times this factor.
    #[serde(default = "one")]
    pub plant_gain_mismatch: f64,
    /// Defaults to rest at the first reference sample.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialState>,
    pub mode: Mode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub actors: Vec<ActorConfig>,
}

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_dt() -> f64 {
    0.02
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DroneConfig {
    pub k_roll: f64,
    pub k_pitch: f64,
    pub k_climb: f64,
    pub tau_roll: f64,
    pub tau_pitch: f64,
    pub tau_climb: f64,
    pub k_yaw_rate: f64,
}

impl Default for DroneConfig {
    fn default() -> Self {
        Self::from(DroneGains::default())
    }
}

impl From<DroneGains<f64>> for DroneConfig {
    fn from(g: DroneGains<f64>) -> Self {
        Self {
            k_roll: g.k_roll,
            k_pitch: g.k_pitch,
            k_climb: g.k_climb,
            tau_roll: g.tau_roll,
            tau_pitch: g.tau_pitch,
            tau_climb: g.tau_climb,
            k_yaw_rate: g.k_yaw_rate,
        }
    }
}

impl From<DroneConfig> for DroneGains<f64> {
    fn from(c: DroneConfig) -> Self {
        Self {
            k_roll: c.k_roll,
            k_pitch: c.k_pitch,
            k_climb: c.k_climb,
            tau_roll: c.tau_roll,
            tau_pitch: c.tau_pitch,
            tau_climb: c.tau_climb,
            k_yaw_rate: c.k_yaw_rate,
        }
    }
}

/// Noise standard deviations; full translation covariances override them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub measurement_position: f64,
    pub measurement_velocity: f64,
    pub measurement_heading: f64,
    pub process_position: f64,
    pub process_velocity: f64,
    pub process_heading: f64,
    /// Row-major 6×6, state order `(v, p)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translation_process: Option<[[f64; 6]; 6]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub translation_measurement: Option<[[f64; 6]; 6]>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            measurement_position: 0.02,
            measurement_velocity: 0.05,
            measurement_heading: 0.01,
            process_position: 0.001,
            process_velocity: 0.005,
            process_heading: 0.001,
            translation_process: None,
            translation_measurement: None,
        }
    }
}

impl NoiseConfig {
    pub fn zero() -> Self {
        Self {
            measurement_position: 0.0,
            measurement_velocity: 0.0,
            measurement_heading: 0.0,
            process_position: 0.0,
            process_velocity: 0.0,
            process_heading: 0.0,
            translation_process: None,
            translation_measurement: None,
        }
    }

    pub fn model(&self) -> NoiseModel<f64> {
        let mut m = NoiseModel::from_std_devs(
            self.process_velocity,
            self.process_position,
            self.measurement_velocity,
            self.measurement_position,
            self.process_heading,
            self.measurement_heading,
        );
        if let Some(rows) = self.translation_process {
            m.translation_process = matrix6(&rows);
        }
        if let Some(rows) = self.translation_measurement {
            m.translation_measurement = matrix6(&rows);
        }
        m
    }
}

fn matrix6(rows: &[[f64; 6]; 6]) -> Matrix6<f64> {
    Matrix6::from_fn(|i, j| rows[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeightsConfig {
    pub q_scale: f64,
    pub r_scale: f64,
}

impl Default for WeightsConfig {
    fn default() -> Self {
        Self {
            q_scale: 1.0,
            r_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GainMode {
    PaperFormula,
    #[default]
    PolePlacement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadingConfig {
    /// Error factor left after `horizon` seconds.
    pub attenuation: f64,
    pub horizon: f64,
    /// Defaults to `dt`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_dt: Option<f64>,
    pub mode: GainMode,
}

impl Default for HeadingConfig {
    fn default() -> Self {
        Self {
            attenuation: 0.1,
            horizon: 1.0,
            mean_dt: None,
            mode: GainMode::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringParams {
    pub max_speed: f64,
    pub max_accel: f64,
    pub slow_radius: f64,
    pub heading_rate_limit: f64,
}

impl Default for SteeringParams {
    fn default() -> Self {
        let s = SteeringConfig::<f64>::default();
        Self {
            max_speed: s.max_speed,
            max_accel: s.max_accel,
            slow_radius: s.slow_radius,
            heading_rate_limit: s.heading_rate_limit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position: Option<[f64; 3]>,
    #[serde(default)]
    pub velocity: [f64; 3],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub heading: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum Mode {
    Trajectory(Trajectory),
    PslTransition {
        start: String,
        end: String,
        duration: f64,
        /// Time spent holding the end shot.
        #[serde(default)]
        hold: f64,
    },
    FramingHold {
        shot: String,
        duration: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Heading {
    Fixed(f64),
    Tangent,
}

impl Default for Heading {
    fn default() -> Self {
        Self::Fixed(0.0)
    }
}

impl From<Heading> for HeadingProfile<f64> {
    fn from(h: Heading) -> Self {
        match h {
            Heading::Fixed(c) => HeadingProfile::Fixed(c),
            Heading::Tangent => HeadingProfile::Tangent,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trajectory {
    Square(Square),
    Helix(Helix),
    Line(Line),
    Setpoint(Setpoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Square {
    pub origin: [f64; 3],
    pub side: f64,
    pub speed: f64,
    pub dwell: f64,
    pub laps: usize,
    pub heading: Heading,
}

impl Default for Square {
    fn default() -> Self {
        Self {
            origin: [0.0, 0.0, 1.0],
            side: 2.0,
            speed: 0.25,
            dwell: 0.0,
            laps: 1,
            heading: Heading::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Helix {
    pub center: [f64; 3],
    pub radius: f64,
    pub angular_rate: f64,
    pub climb_rate: f64,
    pub duration: f64,
    pub heading: Heading,
}

impl Default for Helix {
    fn default() -> Self {
        Self {
            center: [0.0, 0.0, 1.0],
            radius: 1.0,
            angular_rate: 0.4,
            climb_rate: 0.1,
            duration: 20.0,
            heading: Heading::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub start: [f64; 3],
    pub end: [f64; 3],
    #[serde(default = "default_speed")]
    pub speed: f64,
    #[serde(default)]
    pub hold: f64,
    #[serde(default)]
    pub heading: Heading,
}

fn default_speed() -> f64 {
    0.25
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Setpoint {
    pub position: [f64; 3],
    #[serde(default)]
    pub course: f64,
    #[serde(default = "default_hold_duration")]
    pub duration: f64,
}

fn default_hold_duration() -> f64 {
    20.0
}

impl From<Trajectory> for BuiltinTrajectory<f64> {
    fn from(t: Trajectory) -> Self {
        let v = |a: [f64; 3]| Vector3::from(a);
        match t {
            Trajectory::Square(s) => Self::Square {
                origin: v(s.origin),
                side: s.side,
                speed: s.speed,
                dwell: s.dwell,
                laps: s.laps,
                heading: s.heading.into(),
            },
            Trajectory::Helix(h) => Self::Helix {
                center: v(h.center),
                radius: h.radius,
                angular_rate: h.angular_rate,
                climb_rate: h.climb_rate,
                duration: h.duration,
                heading: h.heading.into(),
            },
            Trajectory::Line(l) => Self::Line {
                start: v(l.start),
                end: v(l.end),
                speed: l.speed,
                hold: l.hold,
                heading: l.heading.into(),
            },
            Trajectory::Setpoint(s) => Self::Setpoint {
                position: v(s.position),
                course: s.course,
                duration: s.duration,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActorConfig {
    pub id: String,
    /// Aim-point height above the track position (m).
    #[serde(default = "default_height")]
    pub height: f64,
    pub track: Vec<TrackPoint>,
}

fn default_height() -> f64 {
    1.6
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackPoint {
    pub t: f64,
    pub position: [f64; 3],
    #[serde(default)]
    pub facing: f64,
}

impl ActorConfig {
    pub fn track(&self) -> ActorTrack<f64> {
        ActorTrack {
            id: self.id.clone(),
            height: self.height,
            samples: self
                .track
                .iter()
                .map(|p| TrackSample {
                    t: p.t,
                    position: Vector3::from(p.position),
                    facing: p.facing,
                })
                .collect(),
        }
    }

    /// Straight walk sampled every `step` seconds.
    pub fn walking(id: &str, start: [f64; 3], velocity: [f64; 3], duration: f64, step: f64) -> Self {
        let t = ActorTrack::walking(
            id,
            Vector3::from(start),
            Vector3::from(velocity),
            default_height(),
            duration,
            step,
        );
        Self {
            id: id.to_string(),
            height: t.height,
            track: t
                .samples
                .iter()
                .map(|s| TrackPoint {
                    t: s.t,
                    position: s.position.into(),
                    facing: s.facing,
                })
                .collect(),
        }
    }
}

fn invalid(key: impl Into<String>, msg: impl ToString) -> HarnessError {
    HarnessError::Invalid {
        key: key.into(),
        msg: msg.to_string(),
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, HarnessError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Scenario::from_json(&text).map_err(|e| match e {
        HarnessError::Json { source, .. } => HarnessError::Json {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

impl Scenario {
    /// Minimal scenario around `mode`, every other field at its default.
    pub fn new(mode: Mode) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            dt: default_dt(),
            seed: 0,
            steps: None,
            drone: DroneConfig::default(),
            noise: NoiseConfig::default(),
            weights: WeightsConfig::default(),
            heading: HeadingConfig::default(),
            steering: SteeringParams::default(),
            plant_gain_mismatch: 1.0,
            initial: None,
            mode,
            actors: Vec::new(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let s: Self = serde_json::from_str(text).map_err(|source| HarnessError::Json {
            path: "<scenario>".into(),
            source,
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn drone_gains(&self) -> DroneGains<f64> {
        self.drone.into()
    }

    /// Gains of the simulated airframe.
    pub fn plant_gains(&self) -> DroneGains<f64> {
        self.drone_gains().scaled(self.plant_gain_mismatch)
    }

    pub fn noise_model(&self) -> NoiseModel<f64> {
        self.noise.model()
    }

    pub fn regulator_weights(&self) -> RegulatorWeights<f64> {
        RegulatorWeights::scaled(self.weights.q_scale, self.weights.r_scale)
    }

    pub fn heading_config(&self) -> HeadingRegulatorConfig<f64> {
        HeadingRegulatorConfig {
            attenuation: self.heading.attenuation,
            horizon: self.heading.horizon,
            mean_dt: self.heading.mean_dt.unwrap_or(self.dt),
            mode: match self.heading.mode {
                GainMode::PaperFormula => HeadingGainMode::PaperFormula,
                GainMode::PolePlacement => HeadingGainMode::PolePlacement,
            },
        }
    }

    pub fn steering_config(&self) -> SteeringConfig<f64> {
        SteeringConfig {
            max_speed: self.steering.max_speed,
            max_accel: self.steering.max_accel,
            slow_radius: self.steering.slow_radius,
            heading_rate_limit: self.steering.heading_rate_limit,
        }
    }

    pub fn tracks(&self) -> Vec<ActorTrack<f64>> {
        self.actors.iter().map(ActorConfig::track).collect()
    }

    /// Shots named by the mode, parsed.
    pub fn shots(&self) -> Result<Vec<PslShot>, HarnessError> {
        Ok(match &self.mode {
            Mode::Trajectory(_) => Vec::new(),
            Mode::PslTransition { start, end, .. } => vec![parse_psl(start)?, parse_psl(end)?],
            Mode::FramingHold { shot, .. } => vec![parse_psl(shot)?],
        })
    }

    /// Simulated time covered by the mode (s).
    pub fn horizon(&self) -> f64 {
        match &self.mode {
            Mode::Trajectory(t) => BuiltinTrajectory::from(*t).duration(),
            Mode::PslTransition { duration, hold, .. } => duration + hold,
            Mode::FramingHold { duration, .. } => *duration,
        }
    }

    /// Checks every field; errors name the offending key.
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.schema != SCHEMA_VERSION {
            return Err(invalid(
                "schema",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema),
            ));
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid("dt", "must be > 0"));
        }
        if self.steps == Some(0) {
            return Err(invalid("steps", "must be >= 1"));
        }
        self.drone_gains().validate().map_err(|e| invalid("drone", e))?;
        if !(self.plant_gain_mismatch.is_finite() && self.plant_gain_mismatch > 0.0) {
            return Err(invalid("plant_gain_mismatch", "must be > 0"));
        }
        for (key, v) in [
            ("noise.measurement_position", self.noise.measurement_position),
            ("noise.measurement_velocity", self.noise.measurement_velocity),
            ("noise.measurement_heading", self.noise.measurement_heading),
            ("noise.process_position", self.noise.process_position),
            ("noise.process_velocity", self.noise.process_velocity),
            ("noise.process_heading", self.noise.process_heading),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(key, "standard deviation must be >= 0"));
            }
        }
        self.noise_model().validate().map_err(|e| invalid("noise", e))?;
        self.regulator_weights()
            .validate()
            .map_err(|e| invalid("weights", e))?;
        for (key, v) in [("weights.q_scale", self.weights.q_scale), ("weights.r_scale", self.weights.r_scale)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(key, "must be > 0"));
            }
        }
        self.heading_config()
            .validate()
            .map_err(|e| invalid("heading", e))?;
        self.steering_config()
            .validate(Some(&self.drone_gains()))
            .map_err(|e| invalid("steering", e))?;
        if let Some(init) = &self.initial {
            let finite = init.velocity.iter().all(|v| v.is_finite())
                && init.position.is_none_or(|p| p.iter().all(|v| v.is_finite()))
                && init.heading.is_none_or(f64::is_finite);
            if !finite {
                return Err(invalid("initial", "values must be finite"));
            }
        }
        for (i, a) in self.actors.iter().enumerate() {
            if self.actors[..i].iter().any(|b| b.id == a.id) {
                return Err(invalid("actors", format!("duplicate actor {:?}", a.id)));
            }
            if !(a.height.is_finite() && a.height >= 0.0) {
                return Err(invalid(format!("actors[{i}].height"), "must be >= 0"));
            }
        }
        match &self.mode {
            Mode::Trajectory(t) => {
                BuiltinTrajectory::from(*t)
                    .sample(self.dt)
                    .map_err(|e| invalid("mode.trajectory", e))?;
            }
            Mode::PslTransition { duration, hold, .. } => {
                if !(duration.is_finite() && *duration > 0.0) {
                    return Err(invalid("mode.psl-transition.duration", "must be > 0"));
                }
                if !(hold.is_finite() && *hold >= 0.0) {
                    return Err(invalid("mode.psl-transition.hold", "must be >= 0"));
                }
                let shots = self.shots()?;
                if shots[0].subjects != shots[1].subjects {
                    return Err(invalid(
                        "mode.psl-transition.end",
                        "start and end shots must frame the same actors",
                    ));
                }
                self.check_actors(&shots[0])?;
            }
            Mode::FramingHold { duration, .. } => {
                if !(duration.is_finite() && *duration > 0.0) {
                    return Err(invalid("mode.framing-hold.duration", "must be > 0"));
                }
                self.check_actors(&self.shots()?[0])?;
            }
        }
        Ok(())
    }

    fn check_actors(&self, shot: &PslShot) -> Result<(), HarnessError> {
        for id in &shot.subjects {
            let Some((i, a)) = self.actors.iter().enumerate().find(|(_, a)| &a.id == id) else {
                return Err(invalid("actors", format!("no track for actor {id:?}")));
            };
            a.track()
                .check_coverage(self.horizon(), crate::planning::MAX_TRACK_GAP)
                .map_err(|e| invalid(format!("actors[{i}].track"), e))?;
        }
        Ok(())
    }

    /// Reference stream for the mode.
    pub fn references(&self) -> Result<ReferenceStream, HarnessError> {
        match &self.mode {
            Mode::Trajectory(t) => {
                let samples = BuiltinTrajectory::from(*t).sample(self.dt)?;
                Ok(Box::new(samples.into_iter().map(Ok)))
            }
            Mode::PslTransition { duration, .. } => {
                let shots = self.shots()?;
                self.generator(&shots[0], &shots[1], *duration)
            }
            Mode::FramingHold { duration, .. } => {
                let shot = &self.shots()?[0];
                self.generator(shot, shot, *duration)
            }
        }
    }

    fn generator(&self, start: &PslShot, end: &PslShot, duration: f64) -> Result<ReferenceStream, HarnessError> {
        let tables = MappingTables::default();
        let segment = PathSegment {
            start: shot_to_manifold(start, &tables),
            end: shot_to_manifold(end, &tables),
            duration,
            subjects: start.subjects.clone(),
        };
        let gen = ReferenceGenerator::new(
            segment,
            &self.tracks(),
            self.steering_config(),
            self.dt,
            self.horizon(),
        )?;
        Ok(Box::new(gen))
    }

    /// Initial truth given the first reference sample.
    pub fn initial_state(&self, first: &ReferenceSample<f64>) -> (TranslationState<f64>, f64) {
        let init = self.initial.unwrap_or(InitialState {
            position: None,
            velocity: [0.0; 3],
            heading: None,
        });
        let position = init.position.map(Vector3::from).unwrap_or(first.position);
        (
            TranslationState::new(Vector3::from(init.velocity), position),
            init.heading.unwrap_or(first.course),
        )
    }
}
