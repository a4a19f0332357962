//! Shot descriptions and camera placement around one or two actors.
//!
//! Shots are written in a small subset of the Prose Storyboard Language:
//!
//! ```text
//! <size> on <subject> [and <subject>] [<profile>] [<elevation>]
//! ```
//!
//! A one-actor shot is placed on a sphere around the actor's aim point. A
//! two-actor shot is placed on the toric surface of points from which the two
//! aim points subtend a fixed angle: a horizontal inscribed-angle arc rotated
//! about the axis through both actors.

use std::fmt;

use nalgebra::Vector3;

use crate::dynamics::wrap_angle;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShotSize {
    CloseUp,
    MediumCloseUp,
    MediumShot,
    FullShot,
    LongShot,
}

impl ShotSize {
    pub const ALL: [ShotSize; 5] = [
        Self::CloseUp,
        Self::MediumCloseUp,
        Self::MediumShot,
        Self::FullShot,
        Self::LongShot,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Self::CloseUp => "CU",
            Self::MediumCloseUp => "MCU",
            Self::MediumShot => "MS",
            Self::FullShot => "FS",
            Self::LongShot => "LS",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Profile {
    Front,
    ThreeQuarterLeft,
    Left,
    ThreeQuarterBackLeft,
    Back,
    ThreeQuarterBackRight,
    Right,
    ThreeQuarterRight,
}

impl Profile {
    pub const ALL: [Profile; 8] = [
        Self::Front,
        Self::ThreeQuarterLeft,
        Self::Left,
        Self::ThreeQuarterBackLeft,
        Self::Back,
        Self::ThreeQuarterBackRight,
        Self::Right,
        Self::ThreeQuarterRight,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Self::Front => "front",
            Self::ThreeQuarterLeft => "34left",
            Self::Left => "left",
            Self::ThreeQuarterBackLeft => "34backleft",
            Self::Back => "back",
            Self::ThreeQuarterBackRight => "34backright",
            Self::Right => "right",
            Self::ThreeQuarterRight => "34right",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Elevation {
    Low,
    #[default]
    Eye,
    High,
}

impl Elevation {
    pub const ALL: [Elevation; 3] = [Self::Low, Self::Eye, Self::High];

    pub fn keyword(self) -> &'static str {
        match self {
            Self::Low => "low",
            Self::Eye => "eye",
            Self::High => "high",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

fn lookup<K: Copy>(all: &[K], keyword: fn(K) -> &'static str, word: &str) -> Option<K> {
    all.iter().copied().find(|&k| keyword(k).eq_ignore_ascii_case(word))
}

/// A parsed shot.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PslShot {
    pub size: ShotSize,
    pub subjects: Vec<String>,
    pub profile: Profile,
    pub elevation: Elevation,
}

impl fmt::Display for PslShot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.size.keyword(), self.subjects.join(" and "))?;
        write!(f, " {} {}", self.profile.keyword(), self.elevation.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PSL parse error at offset {offset} (token {token:?}): {message}")]
pub struct PslError {
    pub token: String,
    pub offset: usize,
    pub message: String,
}

fn tokenize(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in text.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((s, &text[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

fn is_identifier(word: &str) -> bool {
    word.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '-')
}

/// Parses a shot sentence. Keywords are case-insensitive; subject names keep
/// their case. Offsets in errors are byte offsets into `text`.
pub fn parse_psl(text: &str) -> Result<PslShot, PslError> {
    let tokens = tokenize(text);
    let mut pos = 0;
    let err = |tok: Option<&(usize, &str)>, message: &str| PslError {
        token: tok.map(|t| t.1.to_string()).unwrap_or_default(),
        offset: tok.map(|t| t.0).unwrap_or(text.len()),
        message: message.to_string(),
    };

    let size_tok = tokens.get(pos);
    let size = size_tok
        .and_then(|t| lookup(&ShotSize::ALL, ShotSize::keyword, t.1))
        .ok_or_else(|| err(size_tok, "expected shot size (CU, MCU, MS, FS, LS)"))?;
    pos += 1;

    let on = tokens.get(pos);
    if !on.is_some_and(|t| t.1.eq_ignore_ascii_case("on")) {
        return Err(err(on, "expected 'on'"));
    }
    pos += 1;

    let mut subjects = Vec::new();
    loop {
        let tok = tokens.get(pos);
        match tok {
            Some(t) if is_identifier(t.1) && !t.1.eq_ignore_ascii_case("and") => {
                subjects.push(t.1.to_string());
                pos += 1;
            }
            _ => return Err(err(tok, "expected subject name")),
        }
        match tokens.get(pos) {
            Some(t) if t.1.eq_ignore_ascii_case("and") => {
                if subjects.len() == 2 {
                    return Err(err(Some(t), "at most two subjects are supported"));
                }
                pos += 1;
            }
            _ => break,
        }
    }

    let mut profile = Profile::Front;
    if let Some(p) = tokens
        .get(pos)
        .and_then(|t| lookup(&Profile::ALL, Profile::keyword, t.1))
    {
        profile = p;
        pos += 1;
    }
    let mut elevation = Elevation::Eye;
    if let Some(e) = tokens
        .get(pos)
        .and_then(|t| lookup(&Elevation::ALL, Elevation::keyword, t.1))
    {
        elevation = e;
        pos += 1;
    }
    if let Some(extra) = tokens.get(pos) {
        return Err(err(Some(extra), "unknown profile or elevation keyword"));
    }
    Ok(PslShot {
        size,
        subjects,
        profile,
        elevation,
    })
}

/// Camera placement as surface coordinates relative to the actors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ManifoldCoords<T> {
    /// Sphere of radius `radius` around one actor's aim point. `azimuth` is
    /// measured from the actor's facing direction, counterclockwise.
    Sphere { radius: T, azimuth: T, elevation: T },
    /// Toric surface for two actors: `alpha` is the angle the aim points
    /// subtend at the camera, `theta` the position along the arc (0 on the
    /// perpendicular bisector, `|theta| < π − alpha`), `phi` the rotation of
    /// the arc about the actor axis (positive lifts the camera).
    Toric { alpha: T, theta: T, phi: T },
}

impl<T: Real> ManifoldCoords<T> {
    pub fn validate(&self) -> Result<()> {
        let half_pi = T::frac_pi_2();
        let ok = match *self {
            Self::Sphere {
                radius,
                azimuth,
                elevation,
            } => {
                radius.finite()
                    && radius > T::zero()
                    && azimuth.finite()
                    && elevation.abs() < half_pi
            }
            Self::Toric { alpha, theta, phi } => {
                alpha.finite()
                    && alpha > T::zero()
                    && alpha < T::pi()
                    && theta.abs() < T::pi() - alpha
                    && phi.abs() < half_pi
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "manifold coordinates out of range: {self:?}"
            )))
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, Self::Sphere { .. })
    }
}

/// Keyword to parameter tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MappingTables<T> {
    /// Sphere radius (m) per shot size, in [`ShotSize::ALL`] order.
    pub radius: [T; 5],
    /// Subtended angle (rad) per shot size.
    pub alpha: [T; 5],
    /// Azimuth (rad) per profile, in [`Profile::ALL`] order.
    pub azimuth: [T; 8],
    /// Elevation (rad) per elevation keyword, in [`Elevation::ALL`] order.
    pub elevation: [T; 3],
    /// Fraction of the usable arc `π − α` a two-actor profile maps to.
    pub arc_fraction: T,
}

impl<T: Real> Default for MappingTables<T> {
    fn default() -> Self {
        let pi = std::f64::consts::PI;
        let lit = |v: &[f64]| v.iter().map(|&x| T::lit(x)).collect::<Vec<_>>();
        Self {
            radius: lit(&[1.0, 1.5, 2.0, 3.0, 4.5]).try_into().unwrap(),
            alpha: lit(&[0.6, 0.5, 0.4, 0.3, 0.2]).try_into().unwrap(),
            azimuth: lit(&[
                0.0,
                pi / 4.0,
                pi / 2.0,
                3.0 * pi / 4.0,
                pi,
                -3.0 * pi / 4.0,
                -pi / 2.0,
                -pi / 4.0,
            ])
            .try_into()
            .unwrap(),
            elevation: lit(&[-0.35, 0.0, 0.35]).try_into().unwrap(),
            arc_fraction: T::lit(0.9),
        }
    }
}

/// Maps a shot to surface coordinates.
///
/// Two-actor profiles move the camera along the arc in proportion to the
/// profile azimuth: `theta = arc_fraction · (az / π) · (π − α)`.
pub fn shot_to_manifold<T: Real>(shot: &PslShot, tables: &MappingTables<T>) -> ManifoldCoords<T> {
    let az = tables.azimuth[shot.profile.index()];
    let el = tables.elevation[shot.elevation.index()];
    if shot.subjects.len() == 1 {
        ManifoldCoords::Sphere {
            radius: tables.radius[shot.size.index()],
            azimuth: az,
            elevation: el,
        }
    } else {
        let alpha = tables.alpha[shot.size.index()];
        ManifoldCoords::Toric {
            alpha,
            theta: tables.arc_fraction * az / T::pi() * (T::pi() - alpha),
            phi: el,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorPose<T: Real> {
    pub id: String,
    pub position: Vector3<T>,
    pub facing: T,
    /// Height of the aim point above `position`.
    pub height: T,
}

impl<T: Real> ActorPose<T> {
    pub fn aim_point(&self) -> Vector3<T> {
        self.position + Vector3::z() * self.height
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose<T: Real> {
    pub position: Vector3<T>,
    pub heading: T,
}

/// Horizontal course from `from` towards `to`.
pub fn aim_heading<T: Real>(from: &Vector3<T>, to: &Vector3<T>) -> T {
    let d = to - from;
    wrap_angle(d.y.atan2(d.x))
}

pub fn sphere_to_pose<T: Real>(coords: &ManifoldCoords<T>, actor: &ActorPose<T>) -> Result<CameraPose<T>> {
    let ManifoldCoords::Sphere {
        radius,
        azimuth,
        elevation,
    } = *coords
    else {
        return Err(Error::InvalidArgument("expected sphere coordinates".into()));
    };
    let aim = actor.aim_point();
    let (sa, ca) = (actor.facing + azimuth).sin_cos();
    let (se, ce) = elevation.sin_cos();
    let position = aim + Vector3::new(ce * ca, ce * sa, se) * radius;
    Ok(CameraPose {
        position,
        heading: aim_heading(&position, &aim),
    })
}

/// Orthonormal frame of an actor pair: `u` along A→B, `n` horizontal and to
/// the left of `u`, `w = u × n`.
struct PairFrame<T: Real> {
    mid: Vector3<T>,
    half: T,
    u: Vector3<T>,
    n: Vector3<T>,
    w: Vector3<T>,
}

fn pair_frame<T: Real>(a: &Vector3<T>, b: &Vector3<T>) -> Result<PairFrame<T>> {
    let ab = b - a;
    let len = ab.norm();
    if !(len > T::lit(1e-6)) {
        return Err(Error::DegenerateGeometry(
            "actors are coincident; two-actor framing is undefined".into(),
        ));
    }
    let u = ab / len;
    let side = Vector3::z().cross(&u);
    if !(side.norm() > T::lit(1e-9)) {
        return Err(Error::DegenerateGeometry(
            "actors are vertically aligned; two-actor framing is undefined".into(),
        ));
    }
    let n = side.normalize();
    let w = u.cross(&n);
    Ok(PairFrame {
        mid: (a + b) * T::lit(0.5),
        half: len * T::lit(0.5),
        u,
        n,
        w,
    })
}

pub fn toric_to_pose<T: Real>(
    coords: &ManifoldCoords<T>,
    actor_a: &ActorPose<T>,
    actor_b: &ActorPose<T>,
) -> Result<CameraPose<T>> {
    let ManifoldCoords::Toric { alpha, theta, phi } = *coords else {
        return Err(Error::InvalidArgument("expected toric coordinates".into()));
    };
    let (a, b) = (actor_a.aim_point(), actor_b.aim_point());
    let f = pair_frame(&a, &b)?;
    let radius = f.half / alpha.sin();
    let center_offset = radius * alpha.cos();
    // in-plane offset from the midpoint: along u and along the arc normal
    let along = radius * theta.sin();
    let across = center_offset + radius * theta.cos();
    let (sp, cp) = phi.sin_cos();
    let normal = f.n * cp + f.w * sp;
    let position = f.mid + f.u * along + normal * across;
    Ok(CameraPose {
        position,
        heading: aim_heading(&position, &f.mid),
    })
}

/// Places the camera for `coords` against one or two actors.
pub fn realize<T: Real>(coords: &ManifoldCoords<T>, actors: &[&ActorPose<T>]) -> Result<CameraPose<T>> {
    match (coords, actors) {
        (ManifoldCoords::Sphere { .. }, [a]) => sphere_to_pose(coords, a),
        (ManifoldCoords::Toric { .. }, [a, b]) => toric_to_pose(coords, a, b),
        _ => Err(Error::InvalidArgument(format!(
            "{} actor(s) do not match the surface type",
            actors.len()
        ))),
    }
}

/// Recovers sphere coordinates from a camera position.
pub fn sphere_coords_of<T: Real>(position: &Vector3<T>, actor: &ActorPose<T>) -> Result<ManifoldCoords<T>> {
    let d = position - actor.aim_point();
    let radius = d.norm();
    if !(radius > T::zero()) {
        return Err(Error::DegenerateGeometry("camera at the aim point".into()));
    }
    let horizontal = (d.x * d.x + d.y * d.y).sqrt();
    Ok(ManifoldCoords::Sphere {
        radius,
        azimuth: wrap_angle(d.y.atan2(d.x) - actor.facing),
        elevation: d.z.atan2(horizontal),
    })
}

/// Recovers toric coordinates from a camera position.
pub fn toric_coords_of<T: Real>(
    position: &Vector3<T>,
    actor_a: &ActorPose<T>,
    actor_b: &ActorPose<T>,
) -> Result<ManifoldCoords<T>> {
    let (a, b) = (actor_a.aim_point(), actor_b.aim_point());
    let f = pair_frame(&a, &b)?;
    let (da, db) = (a - position, b - position);
    let denom = da.norm() * db.norm();
    if !(denom > T::zero()) {
        return Err(Error::DegenerateGeometry("camera coincides with an actor".into()));
    }
    let alpha = (da.dot(&db) / denom).clamp(-T::one(), T::one()).acos();
    let d = position - f.mid;
    let along = d.dot(&f.u);
    let (dn, dw) = (d.dot(&f.n), d.dot(&f.w));
    let across = (dn * dn + dw * dw).sqrt();
    let phi = dw.atan2(dn);
    let radius = f.half / alpha.sin();
    let theta = along.atan2(across - radius * alpha.cos());
    Ok(ManifoldCoords::Toric { alpha, theta, phi })
}

/// Angle subtended at `camera` by the two actors' aim points.
pub fn subtended_angle<T: Real>(camera: &Vector3<T>, actor_a: &ActorPose<T>, actor_b: &ActorPose<T>) -> T {
    let da = actor_a.aim_point() - camera;
    let db = actor_b.aim_point() - camera;
    (da.dot(&db) / (da.norm() * db.norm()))
        .clamp(-T::one(), T::one())
        .acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn actor(id: &str, x: f64, y: f64, facing: f64, height: f64) -> ActorPose<f64> {
        ActorPose {
            id: id.into(),
            position: Vector3::new(x, y, 0.0),
            facing,
            height,
        }
    }

    #[test]
    fn parses_transition_sentences() {
        let s = parse_psl("MS on A front").unwrap();
        assert_eq!(s.size, ShotSize::MediumShot);
        assert_eq!(s.subjects, vec!["A"]);
        assert_eq!(s.profile, Profile::Front);
        assert_eq!(s.elevation, Elevation::Eye);
        let s = parse_psl("MS on A 34backright").unwrap();
        assert_eq!(s.profile, Profile::ThreeQuarterBackRight);
        let s = parse_psl("CU on A and B").unwrap();
        assert_eq!(s.size, ShotSize::CloseUp);
        assert_eq!(s.subjects, vec!["A", "B"]);
        assert_eq!(s.profile, Profile::Front);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let s = parse_psl("  ms ON Alice AND bob 34Left HIGH ").unwrap();
        assert_eq!(s.subjects, vec!["Alice", "bob"]);
        assert_eq!(s.profile, Profile::ThreeQuarterLeft);
        assert_eq!(s.elevation, Elevation::High);
        assert_eq!(parse_psl("LS on A low").unwrap().elevation, Elevation::Low);
    }

    #[test]
    fn parse_errors_cite_token_and_offset() {
        let e = parse_psl("XL on A").unwrap_err();
        assert_eq!((e.token.as_str(), e.offset), ("XL", 0));
        let e = parse_psl("MS on A sideways").unwrap_err();
        assert_eq!((e.token.as_str(), e.offset), ("sideways", 8));
        let e = parse_psl("MS on A and B and C").unwrap_err();
        assert_eq!((e.token.as_str(), e.offset), ("and", 14));
        let e = parse_psl("MS of A").unwrap_err();
        assert_eq!(e.token, "of");
        let e = parse_psl("MS on").unwrap_err();
        assert_eq!(e.offset, 5);
        assert!(parse_psl("").is_err());
        assert!(parse_psl("MS on A front front").is_err());
    }

    #[test]
    fn round_trips_whole_vocabulary() {
        for size in ShotSize::ALL {
            for profile in Profile::ALL {
                for elevation in Elevation::ALL {
                    for subjects in [vec!["A".to_string()], vec!["A".into(), "B".into()]] {
                        let shot = PslShot {
                            size,
                            subjects,
                            profile,
                            elevation,
                        };
                        assert_eq!(parse_psl(&shot.to_string()).unwrap(), shot);
                    }
                }
            }
        }
    }

    #[test]
    fn default_table_mapping() {
        let t = MappingTables::<f64>::default();
        let m = shot_to_manifold(&parse_psl("MS on A front").unwrap(), &t);
        assert_eq!(m, ManifoldCoords::Sphere { radius: 2.0, azimuth: 0.0, elevation: 0.0 });
        let ManifoldCoords::Sphere { azimuth, .. } = shot_to_manifold(&parse_psl("MS on A back").unwrap(), &t) else {
            panic!()
        };
        assert_relative_eq!(azimuth, PI);
        let ManifoldCoords::Sphere { azimuth, .. } =
            shot_to_manifold(&parse_psl("MS on A 34backright").unwrap(), &t)
        else {
            panic!()
        };
        assert_relative_eq!(azimuth, -3.0 * PI / 4.0);
        for p in Profile::ALL {
            let shot = PslShot {
                size: ShotSize::LongShot,
                subjects: vec!["A".into(), "B".into()],
                profile: p,
                elevation: Elevation::High,
            };
            shot_to_manifold(&shot, &t).validate().unwrap();
        }
    }

    #[test]
    fn front_shot_geometry() {
        let a = actor("A", 0.0, 0.0, 0.0, 1.5);
        let pose = sphere_to_pose(
            &ManifoldCoords::Sphere { radius: 2.0, azimuth: 0.0, elevation: 0.0 },
            &a,
        )
        .unwrap();
        assert_relative_eq!(pose.position, Vector3::new(2.0, 0.0, 1.5), epsilon = 1e-15);
        assert_relative_eq!(pose.heading, PI, epsilon = 1e-15);

        let side = sphere_to_pose(
            &ManifoldCoords::Sphere { radius: 2.0, azimuth: PI / 2.0, elevation: 0.0 },
            &a,
        )
        .unwrap();
        assert_relative_eq!(side.position, Vector3::new(0.0, 2.0, 1.5), epsilon = 1e-15);
        assert_relative_eq!(side.heading, -PI / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn sphere_distance_and_aim() {
        let a = actor("A", 1.0, -2.0, 0.7, 1.6);
        for (i, &(az, el)) in [(0.3, 0.2), (-2.0, -0.4), (3.0, 1.2), (1.0, 0.0)].iter().enumerate() {
            let rho = 1.0 + i as f64;
            let pose = sphere_to_pose(
                &ManifoldCoords::Sphere { radius: rho, azimuth: az, elevation: el },
                &a,
            )
            .unwrap();
            let to_actor = a.aim_point() - pose.position;
            assert_relative_eq!(to_actor.norm(), rho, epsilon = 1e-12);
            let horiz = Vector3::new(to_actor.x, to_actor.y, 0.0).normalize();
            let axis = Vector3::new(pose.heading.cos(), pose.heading.sin(), 0.0);
            assert_relative_eq!(axis.dot(&horiz), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn toric_geometry() {
        let a = actor("A", -1.0, 0.0, 0.0, 0.0);
        let b = actor("B", 1.0, 0.0, 0.0, 0.0);
        // α = π/2 with |AB| = 2: Thales circle of radius 1 around the midpoint
        let pose = toric_to_pose(
            &ManifoldCoords::Toric { alpha: PI / 2.0, theta: 0.3, phi: 0.0 },
            &a,
            &b,
        )
        .unwrap();
        assert_relative_eq!(pose.position.norm(), 1.0, epsilon = 1e-12);

        let mid = toric_to_pose(
            &ManifoldCoords::Toric { alpha: 0.4, theta: 0.0, phi: 0.0 },
            &a,
            &b,
        )
        .unwrap();
        assert_relative_eq!(mid.position.x, 0.0, epsilon = 1e-12);
        let (da, db) = ((mid.position - a.aim_point()).norm(), (mid.position - b.aim_point()).norm());
        assert_relative_eq!(da, db, epsilon = 1e-12);
        // camera left of A→B, looking back at the midpoint
        assert!(mid.position.y > 0.0);
        assert_relative_eq!(mid.heading, -PI / 2.0, epsilon = 1e-12);

        assert!(matches!(
            toric_to_pose(&ManifoldCoords::Toric { alpha: 0.4, theta: 0.0, phi: 0.0 }, &a, &a.clone()),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn toric_subtended_angle_and_inverse() {
        let a = actor("A", 0.3, 1.0, 0.0, 1.7);
        let b = actor("B", 2.5, -0.4, 2.0, 1.5);
        for &(alpha, theta, phi) in &[(0.4, 0.0, 0.0), (0.6, 1.5, 0.3), (0.2, -2.5, -0.3), (1.2, 0.5, 1.0)] {
            let c = ManifoldCoords::Toric { alpha, theta, phi };
            let pose = toric_to_pose(&c, &a, &b).unwrap();
            assert_relative_eq!(subtended_angle(&pose.position, &a, &b), alpha, epsilon = 1e-9);
            let back = toric_coords_of(&pose.position, &a, &b).unwrap();
            let ManifoldCoords::Toric { alpha: a2, theta: t2, phi: p2 } = back else { panic!() };
            assert_relative_eq!(a2, alpha, epsilon = 1e-9);
            assert_relative_eq!(t2, theta, epsilon = 1e-9);
            assert_relative_eq!(p2, phi, epsilon = 1e-9);
        }
    }

    #[test]
    fn swapping_actors_mirrors_pose() {
        let a = actor("A", 0.0, 0.0, 0.0, 1.6);
        let b = actor("B", 2.0, 1.0, 0.0, 1.6);
        let c = ManifoldCoords::Toric { alpha: 0.5, theta: 0.8, phi: 0.2 };
        let p = toric_to_pose(&c, &a, &b).unwrap().position;
        let q = toric_to_pose(&ManifoldCoords::Toric { alpha: 0.5, theta: -0.8, phi: 0.2 }, &b, &a)
            .unwrap()
            .position;
        // reflection through the vertical plane containing A and B
        let u = (b.position - a.position).normalize();
        let n = Vector3::z().cross(&u).normalize();
        let mid = (a.aim_point() + b.aim_point()) * 0.5;
        let reflected = p - n * (2.0 * (p - mid).dot(&n));
        assert_relative_eq!(q, reflected, epsilon = 1e-12);
    }

    #[test]
    fn sphere_inverse() {
        let a = actor("A", 3.0, 1.0, -1.0, 1.6);
        let c = ManifoldCoords::Sphere { radius: 2.5, azimuth: 2.2, elevation: -0.3 };
        let pose = sphere_to_pose(&c, &a).unwrap();
        let back = sphere_coords_of(&pose.position, &a).unwrap();
        let (ManifoldCoords::Sphere { radius, azimuth, elevation }, ManifoldCoords::Sphere { .. }) = (back, c) else {
            panic!()
        };
        assert_relative_eq!(radius, 2.5, epsilon = 1e-12);
        assert_relative_eq!(azimuth, 2.2, epsilon = 1e-12);
        assert_relative_eq!(elevation, -0.3, epsilon = 1e-12);
    }

    #[test]
    fn surface_and_actor_count_must_match() {
        let a = actor("A", 0.0, 0.0, 0.0, 1.6);
        let s = ManifoldCoords::Sphere { radius: 1.0, azimuth: 0.0, elevation: 0.0 };
        assert!(realize(&s, &[&a, &a]).is_err());
        assert!(toric_to_pose(&s, &a, &a).is_err());
    }
}
