//! Reference trajectories `r[k] = (v^r, p^r, c^r)`.
//!
//! Cinematographic references interpolate between two shots in surface
//! coordinates, realize the interpolated shot against the actors' current
//! poses, and let a steered virtual camera chase that point. Builtin
//! trajectories (square, helix, line, setpoint) are analytic.

use nalgebra::Vector3;

use crate::cinematography::{aim_heading, realize, ActorPose, ManifoldCoords};
use crate::dynamics::{wrap_angle, DroneGains};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceSample<T: Real> {
    pub t: T,
    pub velocity: Vector3<T>,
    pub position: Vector3<T>,
    pub course: T,
}

/// Largest `‖p[k+1] − p[k] − Δ v[k]‖` over consecutive samples.
pub fn kinematic_defect<T: Real>(samples: &[ReferenceSample<T>]) -> T {
    samples
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            (w[1].position - w[0].position - w[0].velocity * dt).norm()
        })
        .fold(T::zero(), |acc, v| acc.max(v))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSegment<T> {
    pub start: ManifoldCoords<T>,
    pub end: ManifoldCoords<T>,
    pub duration: T,
    pub subjects: Vec<String>,
}

fn lerp<T: Real>(a: T, b: T, s: T) -> T {
    a + (b - a) * s
}

fn lerp_angle<T: Real>(a: T, b: T, s: T) -> T {
    wrap_angle(a + wrap_angle(b - a) * s)
}

/// Interpolates the surface parameters; angles follow the shortest arc and
/// `s = 0` / `s = 1` return the endpoints unchanged.
pub fn interpolate_manifold<T: Real>(seg: &PathSegment<T>, s: T) -> Result<ManifoldCoords<T>> {
    if !(s >= T::zero() && s <= T::one()) {
        return Err(Error::InvalidArgument(
            "interpolation fraction must lie in [0, 1]".into(),
        ));
    }
    if seg.start.is_sphere() != seg.end.is_sphere() {
        return Err(Error::InvalidArgument(
            "cannot interpolate between different surfaces".into(),
        ));
    }
    if s == T::zero() {
        return Ok(seg.start);
    }
    if s == T::one() {
        return Ok(seg.end);
    }
    Ok(match (seg.start, seg.end) {
        (
            ManifoldCoords::Sphere {
                radius: r0,
                azimuth: a0,
                elevation: e0,
            },
            ManifoldCoords::Sphere {
                radius: r1,
                azimuth: a1,
                elevation: e1,
            },
        ) => ManifoldCoords::Sphere {
            radius: lerp(r0, r1, s),
            azimuth: lerp_angle(a0, a1, s),
            elevation: lerp(e0, e1, s),
        },
        (
            ManifoldCoords::Toric {
                alpha: a0,
                theta: t0,
                phi: p0,
            },
            ManifoldCoords::Toric {
                alpha: a1,
                theta: t1,
                phi: p1,
            },
        ) => ManifoldCoords::Toric {
            alpha: lerp(a0, a1, s),
            // θ is bounded by π − α and never wraps
            theta: lerp(t0, t1, s),
            phi: lerp(p0, p1, s),
        },
        _ => unreachable!("surface kinds checked above"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringConfig<T> {
    pub max_speed: T,
    pub max_accel: T,
    pub slow_radius: T,
    pub heading_rate_limit: T,
}

impl<T: Real> Default for SteeringConfig<T> {
    fn default() -> Self {
        Self {
            max_speed: T::lit(0.8),
            max_accel: T::lit(0.8),
            slow_radius: T::one(),
            heading_rate_limit: T::lit(0.6),
        }
    }
}

impl<T: Real> SteeringConfig<T> {
    /// Checks positivity and, when `drone` is given, that the speed limit is
    /// reachable on every axis.
    pub fn validate(&self, drone: Option<&DroneGains<T>>) -> Result<()> {
        for (name, v) in [
            ("max_speed", self.max_speed),
            ("max_accel", self.max_accel),
            ("slow_radius", self.slow_radius),
            ("heading_rate_limit", self.heading_rate_limit),
        ] {
            if !(v.finite() && v > T::zero()) {
                return Err(Error::InvalidArgument(format!("{name} must be > 0")));
            }
        }
        if let Some(g) = drone {
            if self.max_speed > g.min_linear_gain() {
                return Err(Error::InvalidArgument(
                    "max_speed exceeds the drone's smallest linear gain".into(),
                ));
            }
        }
        Ok(())
    }
}

fn clamp_norm<T: Real>(v: Vector3<T>, limit: T) -> Vector3<T> {
    let n = v.norm();
    if n > limit {
        v * (limit / n)
    } else {
        v
    }
}

/// Arrive behavior towards a moving target: desired velocity is the target
/// velocity plus an approach term whose speed ramps down linearly inside the
/// slowing radius, capped at `max_speed`; the velocity change per step is
/// capped at `max_accel · Δ`.
pub fn steer_pursue<T: Real>(
    position: &Vector3<T>,
    velocity: &Vector3<T>,
    target: &Vector3<T>,
    target_velocity: &Vector3<T>,
    cfg: &SteeringConfig<T>,
    dt: T,
) -> (Vector3<T>, Vector3<T>) {
    let offset = target - position;
    let dist = offset.norm();
    let approach = if dist > T::zero() {
        let speed = cfg.max_speed * (dist / cfg.slow_radius).min(T::one());
        offset * (speed / dist)
    } else {
        Vector3::zeros()
    };
    let desired = clamp_norm(target_velocity + approach, cfg.max_speed);
    let accel = clamp_norm(desired - velocity, cfg.max_accel * dt);
    let v = velocity + accel;
    (position + v * dt, v)
}

/// Arrive behavior towards a fixed target.
pub fn steer_arrive<T: Real>(
    position: &Vector3<T>,
    velocity: &Vector3<T>,
    target: &Vector3<T>,
    cfg: &SteeringConfig<T>,
    dt: T,
) -> (Vector3<T>, Vector3<T>) {
    steer_pursue(position, velocity, target, &Vector3::zeros(), cfg, dt)
}

/// Moves `current` towards `target` by at most `max_step` along the short arc.
pub fn rate_limit_angle<T: Real>(current: T, target: T, max_step: T) -> T {
    let err = wrap_angle(target - current);
    wrap_angle(current + err.clamp(-max_step, max_step))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackSample<T: Real> {
    pub t: T,
    pub position: Vector3<T>,
    pub facing: T,
}

/// Timestamped poses of one actor, linearly interpolated between samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ActorTrack<T: Real> {
    pub id: String,
    pub height: T,
    pub samples: Vec<TrackSample<T>>,
}

impl<T: Real> ActorTrack<T> {
    /// Static actor.
    pub fn fixed(id: &str, position: Vector3<T>, facing: T, height: T) -> Self {
        Self {
            id: id.to_string(),
            height,
            samples: vec![TrackSample {
                t: T::zero(),
                position,
                facing,
            }],
        }
    }

    /// Straight walk at constant velocity sampled every `step` seconds.
    pub fn walking(id: &str, start: Vector3<T>, velocity: Vector3<T>, height: T, duration: T, step: T) -> Self {
        let n = (duration / step).ceil().to_usize().unwrap_or(0);
        let facing = velocity.y.atan2(velocity.x);
        let samples = (0..=n)
            .map(|i| {
                let t = T::from_usize(i).unwrap() * step;
                TrackSample {
                    t,
                    position: start + velocity * t,
                    facing,
                }
            })
            .collect();
        Self {
            id: id.to_string(),
            height,
            samples,
        }
    }

    /// Checks that the samples are time-ordered and cover `[0, until]`
    /// without gaps longer than `max_gap`. A single-sample track is static
    /// and covers all time.
    pub fn check_coverage(&self, until: T, max_gap: T) -> Result<()> {
        let Some(first) = self.samples.first() else {
            return Err(Error::Input(format!("actor {:?} has an empty track", self.id)));
        };
        if self.samples.len() == 1 {
            return Ok(());
        }
        if first.t > T::zero() {
            return Err(Error::Input(format!(
                "actor {:?}: no pose for interval [0, {}]",
                self.id, first.t
            )));
        }
        for w in self.samples.windows(2) {
            if !(w[1].t > w[0].t) {
                return Err(Error::Input(format!(
                    "actor {:?}: track times not increasing at t = {}",
                    self.id, w[1].t
                )));
            }
            if w[1].t - w[0].t > max_gap && w[0].t < until {
                return Err(Error::Input(format!(
                    "actor {:?}: no pose for interval ({}, {})",
                    self.id, w[0].t, w[1].t
                )));
            }
        }
        let last = self.samples[self.samples.len() - 1].t;
        if last < until {
            return Err(Error::Input(format!(
                "actor {:?}: no pose for interval ({}, {}]",
                self.id, last, until
            )));
        }
        Ok(())
    }

    /// Pose at time `t`, clamped to the track's time span.
    pub fn pose_at(&self, t: T) -> ActorPose<T> {
        let s = &self.samples;
        let idx = s.partition_point(|x| x.t <= t);
        let (position, facing) = if idx == 0 {
            (s[0].position, s[0].facing)
        } else if idx == s.len() {
            (s[idx - 1].position, s[idx - 1].facing)
        } else {
            let (a, b) = (&s[idx - 1], &s[idx]);
            let f = (t - a.t) / (b.t - a.t);
            (
                a.position + (b.position - a.position) * f,
                lerp_angle(a.facing, b.facing, f),
            )
        };
        ActorPose {
            id: self.id.clone(),
            position,
            facing,
            height: self.height,
        }
    }
}

/// Smoothstep time warp: monotone on `[0, 1]` with zero slope at both ends,
/// so the surface target starts and stops without a velocity jump.
pub fn ease<T: Real>(x: T) -> T {
    let x = x.clamp(T::zero(), T::one());
    x * x * (T::lit(3.0) - T::lit(2.0) * x)
}

/// Point the camera aims at: the actor's head, or the midpoint of two heads.
fn aim_target<T: Real>(actors: &[ActorPose<T>]) -> Vector3<T> {
    let sum = actors
        .iter()
        .fold(Vector3::zeros(), |acc, a| acc + a.aim_point());
    sum / T::from_usize(actors.len()).unwrap()
}

/// Pull-based stream of steered references for one path segment.
///
/// At each step the interpolated shot is realized against the actors' poses
/// at that time, so moving actors bend the path; with `start == end` this
/// holds the framing.
#[derive(Debug, Clone)]
pub struct ReferenceGenerator<T: Real> {
    segment: PathSegment<T>,
    tracks: Vec<ActorTrack<T>>,
    steering: SteeringConfig<T>,
    dt: T,
    steps: usize,
    k: usize,
    position: Vector3<T>,
    velocity: Vector3<T>,
    course: T,
    target: Vector3<T>,
    failed: bool,
}

/// Maximum spacing between actor track samples.
pub const MAX_TRACK_GAP: f64 = 1.0;

impl<T: Real> ReferenceGenerator<T> {
    /// `horizon` (≥ segment duration) is the total streamed time; after the
    /// segment ends the final shot is held. `tracks` must contain every
    /// subject of the segment.
    pub fn new(
        segment: PathSegment<T>,
        tracks: &[ActorTrack<T>],
        steering: SteeringConfig<T>,
        dt: T,
        horizon: T,
    ) -> Result<Self> {
        if !(dt.finite() && dt > T::zero()) {
            return Err(Error::InvalidArgument("time step must be > 0".into()));
        }
        if !(segment.duration.finite() && segment.duration > T::zero()) {
            return Err(Error::InvalidArgument("segment duration must be > 0".into()));
        }
        if horizon < segment.duration {
            return Err(Error::InvalidArgument(
                "horizon shorter than the segment duration".into(),
            ));
        }
        steering.validate(None)?;
        segment.start.validate()?;
        segment.end.validate()?;
        let ordered = segment
            .subjects
            .iter()
            .map(|id| {
                tracks
                    .iter()
                    .find(|t| &t.id == id)
                    .cloned()
                    .ok_or_else(|| Error::Input(format!("no track for actor {id:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        for t in &ordered {
            t.check_coverage(horizon, T::lit(MAX_TRACK_GAP))?;
        }
        let steps = (horizon / dt).round().to_usize().unwrap_or(0) + 1;
        let mut gen = Self {
            segment,
            tracks: ordered,
            steering,
            dt,
            steps,
            k: 0,
            position: Vector3::zeros(),
            velocity: Vector3::zeros(),
            course: T::zero(),
            target: Vector3::zeros(),
            failed: false,
        };
        let (actors, target) = gen.target_at(T::zero())?;
        gen.position = target;
        gen.target = target;
        gen.course = aim_heading(&target, &aim_target(&actors));
        Ok(gen)
    }

    pub fn len(&self) -> usize {
        self.steps
    }

    pub fn is_empty(&self) -> bool {
        self.steps == 0
    }

    fn actors_at(&self, t: T) -> Vec<ActorPose<T>> {
        self.tracks.iter().map(|tr| tr.pose_at(t)).collect()
    }

    fn target_at(&self, t: T) -> Result<(Vec<ActorPose<T>>, Vector3<T>)> {
        let coords = interpolate_manifold(&self.segment, ease(t / self.segment.duration))?;
        let actors = self.actors_at(t);
        let refs: Vec<&ActorPose<T>> = actors.iter().collect();
        let pose = realize(&coords, &refs)?;
        Ok((actors, pose.position))
    }

    /// Surface target point (unsteered) at time `t`.
    pub fn ideal_position(&self, t: T) -> Result<Vector3<T>> {
        Ok(self.target_at(t)?.1)
    }

    fn advance(&mut self) -> Result<()> {
        let t_next = T::from_usize(self.k + 1).unwrap() * self.dt;
        let (actors, target) = self.target_at(t_next)?;
        // Offset to the current target plus its forward-difference velocity:
        // without saturation the error then decays without lead or lag.
        let target_velocity = (target - self.target) / self.dt;
        let (p, v) = steer_pursue(
            &self.position,
            &self.velocity,
            &self.target,
            &target_velocity,
            &self.steering,
            self.dt,
        );
        let aim = aim_heading(&p, &aim_target(&actors));
        self.course = rate_limit_angle(self.course, aim, self.steering.heading_rate_limit * self.dt);
        self.position = p;
        self.velocity = v;
        self.target = target;
        Ok(())
    }
}

impl<T: Real> Iterator for ReferenceGenerator<T> {
    type Item = Result<ReferenceSample<T>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.k >= self.steps {
            return None;
        }
        let sample = ReferenceSample {
            t: T::from_usize(self.k).unwrap() * self.dt,
            velocity: self.velocity,
            position: self.position,
            course: self.course,
        };
        if self.k + 1 < self.steps {
            if let Err(e) = self.advance() {
                self.failed = true;
                return Some(Err(e));
            }
        }
        self.k += 1;
        Some(Ok(sample))
    }
}

/// Convenience wrapper collecting a [`ReferenceGenerator`].
pub fn generate_reference<T: Real>(
    segment: PathSegment<T>,
    tracks: &[ActorTrack<T>],
    steering: SteeringConfig<T>,
    dt: T,
    horizon: T,
) -> Result<Vec<ReferenceSample<T>>> {
    ReferenceGenerator::new(segment, tracks, steering, dt, horizon)?.collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum HeadingProfile<T> {
    Fixed(T),
    /// Along the horizontal direction of travel; held while not moving.
    Tangent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BuiltinTrajectory<T: Real> {
    /// Counterclockwise square starting at `origin`, edges along +x, +y, −x,
    /// −y, with an optional stop at each corner.
    Square {
        origin: Vector3<T>,
        side: T,
        speed: T,
        dwell: T,
        laps: usize,
        heading: HeadingProfile<T>,
    },
    /// Counterclockwise helix around `center`, starting at angle 0.
    Helix {
        center: Vector3<T>,
        radius: T,
        angular_rate: T,
        climb_rate: T,
        duration: T,
        heading: HeadingProfile<T>,
    },
    /// Constant-speed segment, then hold at `end` for `hold` seconds.
    Line {
        start: Vector3<T>,
        end: Vector3<T>,
        speed: T,
        hold: T,
        heading: HeadingProfile<T>,
    },
    /// Constant position and course.
    Setpoint {
        position: Vector3<T>,
        course: T,
        duration: T,
    },
}

fn positive<T: Real>(name: &str, v: T) -> Result<()> {
    if v.finite() && v > T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be > 0")))
    }
}

fn non_negative<T: Real>(name: &str, v: T) -> Result<()> {
    if v.finite() && v >= T::zero() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be >= 0")))
    }
}

fn sample_count<T: Real>(duration: T, dt: T) -> usize {
    (duration / dt).round().to_usize().unwrap_or(0) + 1
}

impl<T: Real> BuiltinTrajectory<T> {
    pub fn duration(&self) -> T {
        match *self {
            Self::Square {
                side,
                speed,
                dwell,
                laps,
                ..
            } => T::from_usize(4 * laps).unwrap() * (side / speed + dwell),
            Self::Helix { duration, .. } | Self::Setpoint { duration, .. } => duration,
            Self::Line {
                start,
                end,
                speed,
                hold,
                ..
            } => (end - start).norm() / speed + hold,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Square {
                side,
                speed,
                dwell,
                laps,
                ..
            } => {
                positive("side", side)?;
                positive("speed", speed)?;
                non_negative("dwell", dwell)?;
                if laps == 0 {
                    return Err(Error::InvalidArgument("laps must be >= 1".into()));
                }
            }
            Self::Helix {
                radius,
                angular_rate,
                climb_rate,
                duration,
                ..
            } => {
                positive("radius", radius)?;
                positive("duration", duration)?;
                if !(angular_rate.finite() && angular_rate != T::zero()) {
                    return Err(Error::InvalidArgument("angular_rate must be non-zero".into()));
                }
                if !climb_rate.finite() {
                    return Err(Error::InvalidArgument("climb_rate must be finite".into()));
                }
            }
            Self::Line {
                start,
                end,
                speed,
                hold,
                ..
            } => {
                positive("speed", speed)?;
                non_negative("hold", hold)?;
                positive("line length", (end - start).norm())?;
            }
            Self::Setpoint { duration, .. } => positive("duration", duration)?,
        }
        Ok(())
    }

    /// Position at time `t` for the piecewise-linear kinds.
    fn piecewise_position(&self, t: T) -> Vector3<T> {
        match *self {
            Self::Square {
                origin,
                side,
                speed,
                dwell,
                laps,
                ..
            } => {
                let edge_time = side / speed;
                let leg = edge_time + dwell;
                let total = T::from_usize(4 * laps).unwrap() * leg;
                let t = t.clamp(T::zero(), total);
                let legs_done = (t / leg).floor();
                let mut idx = legs_done.to_usize().unwrap_or(0);
                let mut into = t - legs_done * leg;
                if idx >= 4 * laps {
                    idx = 4 * laps - 1;
                    into = leg;
                }
                let corners = [
                    Vector3::new(T::zero(), T::zero(), T::zero()),
                    Vector3::new(side, T::zero(), T::zero()),
                    Vector3::new(side, side, T::zero()),
                    Vector3::new(T::zero(), side, T::zero()),
                ];
                let from = corners[idx % 4];
                let to = corners[(idx + 1) % 4];
                let f = (into.min(edge_time) / edge_time).min(T::one());
                origin + from + (to - from) * f
            }
            Self::Line {
                start, end, speed, ..
            } => {
                let len = (end - start).norm();
                let f = (t * speed / len).clamp(T::zero(), T::one());
                start + (end - start) * f
            }
            Self::Helix { .. } | Self::Setpoint { .. } => unreachable!(),
        }
    }

    /// Samples the trajectory every `dt` seconds.
    ///
    /// Helix velocities are the analytic derivative. Piecewise-linear kinds
    /// use the per-step displacement divided by `Δ`, which equals the
    /// derivative along each edge and keeps samples kinematically exact
    /// across corners.
    pub fn sample(&self, dt: T) -> Result<Vec<ReferenceSample<T>>> {
        positive("time step", dt)?;
        self.validate()?;
        let n = sample_count(self.duration(), dt);
        let time = |k: usize| T::from_usize(k).unwrap() * dt;
        let mut out: Vec<ReferenceSample<T>> = Vec::with_capacity(n);
        match *self {
            Self::Helix {
                center,
                radius,
                angular_rate,
                climb_rate,
                heading,
                ..
            } => {
                for k in 0..n {
                    let t = time(k);
                    let (s, c) = (angular_rate * t).sin_cos();
                    let position = center + Vector3::new(radius * c, radius * s, climb_rate * t);
                    let velocity = Vector3::new(
                        -radius * angular_rate * s,
                        radius * angular_rate * c,
                        climb_rate,
                    );
                    let course = match heading {
                        HeadingProfile::Fixed(c) => wrap_angle(c),
                        HeadingProfile::Tangent => velocity.y.atan2(velocity.x),
                    };
                    out.push(ReferenceSample {
                        t,
                        velocity,
                        position,
                        course,
                    });
                }
            }
            Self::Setpoint {
                position, course, ..
            } => {
                for k in 0..n {
                    out.push(ReferenceSample {
                        t: time(k),
                        velocity: Vector3::zeros(),
                        position,
                        course: wrap_angle(course),
                    });
                }
            }
            Self::Square { heading, .. } | Self::Line { heading, .. } => {
                let mut course = match heading {
                    HeadingProfile::Fixed(c) => wrap_angle(c),
                    HeadingProfile::Tangent => {
                        let d = self.piecewise_position(dt) - self.piecewise_position(T::zero());
                        d.y.atan2(d.x)
                    }
                };
                for k in 0..n {
                    let t = time(k);
                    let position = self.piecewise_position(t);
                    let velocity = if k + 1 < n {
                        (self.piecewise_position(time(k + 1)) - position) / dt
                    } else {
                        Vector3::zeros()
                    };
                    if let HeadingProfile::Tangent = heading {
                        let horizontal = (velocity.x * velocity.x + velocity.y * velocity.y).sqrt();
                        if horizontal > T::lit(1e-9) {
                            course = velocity.y.atan2(velocity.x);
                        }
                    }
                    out.push(ReferenceSample {
                        t,
                        velocity,
                        position,
                        course,
                    });
                }
            }
        }
        Ok(out)
    }
}
