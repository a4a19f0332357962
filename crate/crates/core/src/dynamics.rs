//! First-order rotary-wing flight model and the simulated plant.
//!
//! The translation state is `x1 = (v, p)` in the world frame. Each command
//! channel drives its body axis through a first-order lag `K_α / τ_α`, and the
//! body axes are rotated into the world frame by the current heading. The
//! heading itself is a pure integrator of the yaw-rate command.

use nalgebra::{DMatrix, Matrix3, Matrix6, SMatrix, Vector3, Vector6};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::scalar::Real;

pub type Matrix6x3<T> = SMatrix<T, 6, 3>;

/// Normalized 4-channel command `(φ, θ, ż, ψ̇)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightCommand<T> {
    pub roll: T,
    pub pitch: T,
    pub climb_rate: T,
    pub yaw_rate: T,
}

impl<T: Real> FlightCommand<T> {
    pub fn new(roll: T, pitch: T, climb_rate: T, yaw_rate: T) -> Result<Self> {
        let cmd = Self {
            roll,
            pitch,
            climb_rate,
            yaw_rate,
        };
        if !cmd.channels().iter().all(|c| c.finite()) {
            return Err(Error::InvalidArgument(
                "flight command channels must be finite".into(),
            ));
        }
        Ok(cmd)
    }

    pub fn zero() -> Self {
        Self::from_channels([T::zero(); 4])
    }

    pub fn from_channels(c: [T; 4]) -> Self {
        Self {
            roll: c[0],
            pitch: c[1],
            climb_rate: c[2],
            yaw_rate: c[3],
        }
    }

    pub fn channels(&self) -> [T; 4] {
        [self.roll, self.pitch, self.climb_rate, self.yaw_rate]
    }

    /// Translation channels `u1 = (φ, θ, ż)`.
    pub fn translation(&self) -> Vector3<T> {
        Vector3::new(self.roll, self.pitch, self.climb_rate)
    }

    /// Clamps every channel to `[-1, 1]` and reports which ones were clipped.
    pub fn saturated(&self) -> (Self, [bool; 4]) {
        let one = T::one();
        let mut clipped = [false; 4];
        let mut out = self.channels();
        for (c, flag) in out.iter_mut().zip(clipped.iter_mut()) {
            if *c > one || *c < -one {
                *flag = true;
                *c = c.clamp(-one, one);
            }
        }
        (Self::from_channels(out), clipped)
    }
}

/// Per-axis gains and time constants of the first-order model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DroneGains<T> {
    pub k_roll: T,
    pub k_pitch: T,
    pub k_climb: T,
    pub tau_roll: T,
    pub tau_pitch: T,
    pub tau_climb: T,
    pub k_yaw_rate: T,
}

impl<T: Real> Default for DroneGains<T> {
    fn default() -> Self {
        Self {
            k_roll: T::lit(2.0),
            k_pitch: T::lit(2.0),
            k_climb: T::lit(1.0),
            tau_roll: T::lit(0.5),
            tau_pitch: T::lit(0.5),
            tau_climb: T::lit(0.4),
            k_yaw_rate: T::lit(1.7),
        }
    }
}

impl<T: Real> DroneGains<T> {
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("k_roll", self.k_roll),
            ("k_pitch", self.k_pitch),
            ("k_climb", self.k_climb),
            ("tau_roll", self.tau_roll),
            ("tau_pitch", self.tau_pitch),
            ("tau_climb", self.tau_climb),
            ("k_yaw_rate", self.k_yaw_rate),
        ];
        for (name, v) in all {
            if !v.finite() || v <= T::zero() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be finite and > 0"
                )));
            }
        }
        Ok(())
    }

    pub fn min_tau(&self) -> T {
        self.tau_roll.min(self.tau_pitch).min(self.tau_climb)
    }

    /// Smallest linear gain; the fastest speed every axis can reach.
    pub fn min_linear_gain(&self) -> T {
        self.k_roll.min(self.k_pitch).min(self.k_climb)
    }

    /// Copy with every gain (not the time constants) multiplied by `factor`.
    pub fn scaled(&self, factor: T) -> Self {
        Self {
            k_roll: self.k_roll * factor,
            k_pitch: self.k_pitch * factor,
            k_climb: self.k_climb * factor,
            k_yaw_rate: self.k_yaw_rate * factor,
            ..*self
        }
    }

    fn linear_gain_matrix(&self) -> Matrix3<T> {
        Matrix3::from_diagonal(&Vector3::new(self.k_roll, self.k_pitch, self.k_climb))
    }

    fn inverse_tau_matrix(&self) -> Matrix3<T> {
        Matrix3::from_diagonal(&Vector3::new(
            T::one() / self.tau_roll,
            T::one() / self.tau_pitch,
            T::one() / self.tau_climb,
        ))
    }
}

/// Velocity and position in the world frame, stacked as `(v, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationState<T: Real> {
    pub velocity: Vector3<T>,
    pub position: Vector3<T>,
}

impl<T: Real> TranslationState<T> {
    pub fn new(velocity: Vector3<T>, position: Vector3<T>) -> Self {
        Self { velocity, position }
    }

    pub fn at_rest(position: Vector3<T>) -> Self {
        Self::new(Vector3::zeros(), position)
    }

    pub fn to_vector(&self) -> Vector6<T> {
        let mut x = Vector6::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(3).copy_from(&self.position);
        x
    }

    pub fn from_vector(x: &Vector6<T>) -> Self {
        Self {
            velocity: x.fixed_rows::<3>(0).into_owned(),
            position: x.fixed_rows::<3>(3).into_owned(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.velocity.iter().chain(self.position.iter()).all(|c| c.finite())
    }
}

/// Course angle, always stored wrapped to `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingState<T>(T);

impl<T: Real> HeadingState<T> {
    pub fn new(course: T) -> Result<Self> {
        if !course.finite() {
            return Err(Error::InvalidArgument("heading must be finite".into()));
        }
        Ok(Self(wrap_angle(course)))
    }

    pub fn course(&self) -> T {
        self.0
    }
}

/// Process and measurement covariances of both sub-models.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T: Real> {
    pub translation_process: Matrix6<T>,
    pub translation_measurement: Matrix6<T>,
    pub heading_process: T,
    pub heading_measurement: T,
}

impl<T: Real> NoiseModel<T> {
    pub fn zero() -> Self {
        Self {
            translation_process: Matrix6::zeros(),
            translation_measurement: Matrix6::zeros(),
            heading_process: T::zero(),
            heading_measurement: T::zero(),
        }
    }

    /// Diagonal covariances built from per-block standard deviations.
    pub fn from_std_devs(
        process_velocity: T,
        process_position: T,
        measurement_velocity: T,
        measurement_position: T,
        process_heading: T,
        measurement_heading: T,
    ) -> Self {
        let diag = |v: T, p: T| {
            Matrix6::from_diagonal(&Vector6::new(v * v, v * v, v * v, p * p, p * p, p * p))
        };
        Self {
            translation_process: diag(process_velocity, process_position),
            translation_measurement: diag(measurement_velocity, measurement_position),
            heading_process: process_heading * process_heading,
            heading_measurement: measurement_heading * measurement_heading,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_psd(&self.translation_process, "translation process covariance")?;
        check_psd(
            &self.translation_measurement,
            "translation measurement covariance",
        )?;
        for (name, v) in [
            ("heading process variance", self.heading_process),
            ("heading measurement variance", self.heading_measurement),
        ] {
            if !v.finite() || v < T::zero() {
                return Err(Error::Config(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }
}

/// Checks symmetry and positive semi-definiteness of a covariance matrix.
pub fn check_psd<T: Real, const N: usize>(
    m: &SMatrix<T, N, N>,
    name: &str,
) -> Result<()> {
    if !m.iter().all(|c| c.finite()) {
        return Err(Error::Config(format!("{name} has non-finite entries")));
    }
    let scale = m.amax().max(T::one());
    let tol = T::lit(1e-9) * scale;
    if (m - m.transpose()).amax() > tol {
        return Err(Error::Config(format!("{name} is not symmetric")));
    }
    let eig = DMatrix::from_column_slice(N, N, m.as_slice()).symmetric_eigenvalues();
    if eig.iter().any(|&l| l < -tol) {
        return Err(Error::Config(format!(
            "{name} is not positive semi-definite"
        )));
    }
    Ok(())
}

/// Wraps an angle to `(-π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let pi = T::pi();
    let two_pi = T::two_pi();
    let mut w = a - two_pi * ((a + pi) / two_pi).floor();
    // floor maps the upper boundary to -π; the canonical representative is +π
    if w <= -pi {
        w += two_pi;
    }
    if w > pi {
        w -= two_pi;
    }
    w
}

/// Heading rotation `M_D(ĉ)`: body axes to world frame about the vertical.
pub fn heading_rotation<T: Real>(course: T) -> Result<Matrix3<T>> {
    if !course.finite() {
        return Err(Error::InvalidArgument("heading must be finite".into()));
    }
    let (s, c) = course.sin_cos();
    let (z, o) = (T::zero(), T::one());
    Ok(Matrix3::new(c, -s, z, s, c, z, z, z, o))
}

/// Raised when the time step is not small against every time constant; the
/// explicit discretization then no longer decays monotonically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationWarning {
    pub dt: f64,
    pub min_tau: f64,
}

/// `(A1, B1)` of the discrete translation model at one step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TranslationMatrices<T: Real> {
    pub a: Matrix6<T>,
    pub b: Matrix6x3<T>,
    pub warning: Option<DiscretizationWarning>,
}

pub fn translation_matrices<T: Real>(
    dt: T,
    course: T,
    gains: &DroneGains<T>,
) -> Result<TranslationMatrices<T>> {
    if !dt.finite() || dt <= T::zero() {
        return Err(Error::InvalidArgument("time step must be > 0".into()));
    }
    let rot = heading_rotation(course)?;
    let t_d = gains.inverse_tau_matrix() * dt;
    let mut a = Matrix6::identity();
    a.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(Matrix3::identity() - t_d));
    a.fixed_view_mut::<3, 3>(3, 0)
        .copy_from(&(Matrix3::identity() * dt));
    let mut b = Matrix6x3::zeros();
    b.fixed_view_mut::<3, 3>(0, 0)
        .copy_from(&(rot * t_d * gains.linear_gain_matrix()));
    let min_tau = gains.min_tau();
    let warning = (dt >= min_tau).then(|| DiscretizationWarning {
        dt: dt.to_f64_lossy(),
        min_tau: min_tau.to_f64_lossy(),
    });
    Ok(TranslationMatrices { a, b, warning })
}

/// Noise-free translation update `x1' = A1 x1 + B1 u1`.
pub fn translation_step<T: Real>(
    state: &TranslationState<T>,
    u1: &Vector3<T>,
    dt: T,
    course: T,
    gains: &DroneGains<T>,
) -> Result<TranslationState<T>> {
    let m = translation_matrices(dt, course, gains)?;
    Ok(TranslationState::from_vector(
        &(m.a * state.to_vector() + m.b * u1),
    ))
}

/// Noise-free heading update `c' = wrap(c + K_ψ̇ Δ ψ̇)`.
pub fn heading_step<T: Real>(course: T, yaw_rate_cmd: T, dt: T, k_yaw_rate: T) -> Result<T> {
    if !dt.finite() || dt <= T::zero() {
        return Err(Error::InvalidArgument("time step must be > 0".into()));
    }
    if !course.finite() || !yaw_rate_cmd.finite() || !k_yaw_rate.finite() {
        return Err(Error::InvalidArgument(
            "heading step inputs must be finite".into(),
        ));
    }
    Ok(wrap_angle(course + k_yaw_rate * dt * yaw_rate_cmd))
}

/// Measurement produced by the plant for the current truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T: Real> {
    pub translation: Vector6<T>,
    pub heading: T,
}

/// Square-root factor `L` with `L Lᵀ = Σ` for a PSD covariance.
fn covariance_factor<T: Real, const N: usize>(cov: &SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    let eig = DMatrix::from_column_slice(N, N, cov.as_slice()).symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|l| l.max(T::zero()).sqrt());
    let factor = eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals);
    SMatrix::<T, N, N>::from_column_slice(factor.as_slice())
}

/// Simulated drone: the model equations plus Gaussian process and
/// measurement noise, driven by a seeded ChaCha stream.
#[derive(Debug, Clone)]
pub struct Plant<T: Real> {
    translation: TranslationState<T>,
    heading: T,
    gains: DroneGains<T>,
    process_factor: Matrix6<T>,
    measurement_factor: Matrix6<T>,
    heading_process_std: T,
    heading_measurement_std: T,
    rng: ChaCha8Rng,
    seed: u64,
    steps: u64,
}

impl<T: Real> Plant<T> {
    /// `gains` are the plant's actual gains (already including any model
    /// mismatch). Fails on invalid gains or non-PSD covariances.
    pub fn new(
        translation: TranslationState<T>,
        heading: HeadingState<T>,
        gains: DroneGains<T>,
        noise: &NoiseModel<T>,
        seed: u64,
    ) -> Result<Self> {
        gains.validate()?;
        noise.validate()?;
        if !translation.is_finite() {
            return Err(Error::InvalidArgument(
                "initial translation state must be finite".into(),
            ));
        }
        Ok(Self {
            translation,
            heading: heading.course(),
            gains,
            process_factor: covariance_factor(&noise.translation_process),
            measurement_factor: covariance_factor(&noise.translation_measurement),
            heading_process_std: noise.heading_process.sqrt(),
            heading_measurement_std: noise.heading_measurement.sqrt(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            steps: 0,
        })
    }

    pub fn translation(&self) -> &TranslationState<T> {
        &self.translation
    }

    pub fn heading(&self) -> T {
        self.heading
    }

    pub fn gains(&self) -> &DroneGains<T> {
        &self.gains
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    fn normal6(&mut self) -> Vector6<T> {
        Vector6::from_fn(|_, _| {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            T::lit(z)
        })
    }

    fn normal(&mut self) -> T {
        let z: f64 = StandardNormal.sample(&mut self.rng);
        T::lit(z)
    }

    /// Samples a measurement of the current truth. Consumes random draws.
    pub fn measure(&mut self) -> Measurement<T> {
        let h1 = self.measurement_factor * self.normal6();
        let h2 = self.heading_measurement_std * self.normal();
        Measurement {
            translation: self.translation.to_vector() + h1,
            heading: wrap_angle(self.heading + h2),
        }
    }

    /// Advances the truth by one step under `command` (clamped to the
    /// normalized range) and returns a measurement of the new truth.
    ///
    /// The translation update uses the true heading at the start of the step.
    pub fn step(&mut self, command: &FlightCommand<T>, dt: T) -> Result<Measurement<T>> {
        let (u, _) = command.saturated();
        let m = translation_matrices(dt, self.heading, &self.gains)?;
        let f1 = self.process_factor * self.normal6();
        let f2 = self.heading_process_std * self.normal();
        let x = m.a * self.translation.to_vector() + m.b * u.translation() + f1;
        self.translation = TranslationState::from_vector(&x);
        self.heading = wrap_angle(self.heading + self.gains.k_yaw_rate * dt * u.yaw_rate + f2);
        self.steps += 1;
        Ok(self.measure())
    }
}
