//! LQ regulator gains and the per-step control law.
//!
//! Translation: `u1 = N1 r1 − K1 x̂1` with `K1` from the infinite-horizon
//! discrete Riccati equation and `N1` the least-squares pre-filter.
//! Heading: `u2 = n2 r2 − k2 x̂2` with `n2 = k2`.

use nalgebra::{Matrix3, Matrix6, SMatrix};

use crate::dynamics::{
    heading_rotation, translation_matrices, wrap_angle, DroneGains, FlightCommand, Matrix6x3,
    TranslationMatrices, TranslationState,
};
use crate::error::{Error, Result};
use crate::planning::ReferenceSample;
use crate::scalar::Real;

pub type Matrix3x6<T> = SMatrix<T, 3, 6>;

/// Heading drift (rad) beyond which a gain set must be recomputed.
pub const STALE_GAIN_LIMIT: f64 = 0.2;

/// State and command weights of the quadratic cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatorWeights<T: Real> {
    pub q: Matrix6<T>,
    pub r: Matrix3<T>,
}

impl<T: Real> Default for RegulatorWeights<T> {
    fn default() -> Self {
        Self {
            q: Matrix6::identity(),
            r: Matrix3::identity(),
        }
    }
}

impl<T: Real> RegulatorWeights<T> {
    /// Identity weights multiplied by the given factors.
    pub fn scaled(q_scale: T, r_scale: T) -> Self {
        Self {
            q: Matrix6::identity() * q_scale,
            r: Matrix3::identity() * r_scale,
        }
    }

    pub fn validate(&self) -> Result<()> {
        crate::dynamics::check_psd(&self.q, "state weight Q")
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        check_positive_definite(&self.r, "command weight R")
    }
}

fn check_positive_definite<T: Real, const N: usize>(m: &SMatrix<T, N, N>, name: &str) -> Result<()> {
    let tol = T::lit(1e-12) * m.amax().max(T::one());
    if !m.iter().all(|v| v.finite()) || (m - m.transpose()).amax() > tol {
        return Err(Error::InvalidArgument(format!("{name} must be finite and symmetric")));
    }
    if m.cholesky().is_none() {
        return Err(Error::InvalidArgument(format!("{name} must be positive definite")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HeadingGainMode {
    /// `k2 = exp(Δ̄ ln γ / (τ − Δ̄))`, used verbatim as the feedback gain.
    PaperFormula,
    /// `k2` chosen so the closed-loop pole `1 − K_ψ̇ Δ̄ k2` equals
    /// `exp(Δ̄ ln γ / τ)`, i.e. the error shrinks by `γ` after `τ`.
    #[default]
    PolePlacement,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingRegulatorConfig<T> {
    pub attenuation: T,
    pub horizon: T,
    pub mean_dt: T,
    pub mode: HeadingGainMode,
}

impl<T: Real> Default for HeadingRegulatorConfig<T> {
    fn default() -> Self {
        Self {
            attenuation: T::lit(0.1),
            horizon: T::one(),
            mean_dt: T::lit(0.02),
            mode: HeadingGainMode::PolePlacement,
        }
    }
}

impl<T: Real> HeadingRegulatorConfig<T> {
    pub fn validate(&self) -> Result<()> {
        let (g, tau, dt) = (self.attenuation, self.horizon, self.mean_dt);
        if !(g.finite() && g > T::zero() && g < T::one()) {
            return Err(Error::InvalidArgument("attenuation must lie in (0, 1)".into()));
        }
        if !(dt.finite() && dt > T::zero()) {
            return Err(Error::InvalidArgument("mean time step must be > 0".into()));
        }
        if !(tau.finite() && tau > dt) {
            return Err(Error::InvalidArgument(
                "attenuation horizon must exceed the mean time step".into(),
            ));
        }
        Ok(())
    }

    /// Pole of the heading loop the pole-placement mode targets.
    pub fn target_pole(&self) -> T {
        (self.mean_dt * self.attenuation.ln() / self.horizon).exp()
    }
}

/// Heading feedback gain `k2`.
pub fn heading_gain<T: Real>(cfg: &HeadingRegulatorConfig<T>, k_yaw_rate: T) -> Result<T> {
    cfg.validate()?;
    let dt = cfg.mean_dt;
    Ok(match cfg.mode {
        HeadingGainMode::PaperFormula => (dt * cfg.attenuation.ln() / (cfg.horizon - dt)).exp(),
        HeadingGainMode::PolePlacement => (T::one() - cfg.target_pole()) / (k_yaw_rate * dt),
    })
}

/// Closed-loop pole of the heading channel for a given gain.
pub fn heading_pole<T: Real>(k2: T, k_yaw_rate: T, dt: T) -> T {
    T::one() - k_yaw_rate * dt * k2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for DareOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-12),
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DareSolution<T: Real, const N: usize> {
    pub p: SMatrix<T, N, N>,
    pub iterations: usize,
    pub residual: T,
}

/// One application of the Riccati map
/// `Q + Aᵀ (P − P B (R + Bᵀ P B)⁻¹ Bᵀ P) A`.
pub fn riccati_map<T: Real, const N: usize, const M: usize>(
    a: &SMatrix<T, N, N>,
    b: &SMatrix<T, N, M>,
    q: &SMatrix<T, N, N>,
    r: &SMatrix<T, M, M>,
    p: &SMatrix<T, N, N>,
) -> Result<SMatrix<T, N, N>> {
    let pb = p * b;
    let s = r + b.transpose() * pb;
    let s_inv = s.try_inverse().ok_or(Error::Singular {
        context: "R + BᵀPB",
        step: None,
    })?;
    let inner = p - pb * s_inv * pb.transpose();
    let next = q + a.transpose() * inner * a;
    Ok((next + next.transpose()) * T::lit(0.5))
}

/// Frobenius residual `‖P − riccati_map(P)‖`.
pub fn dare_residual<T: Real, const N: usize, const M: usize>(
    a: &SMatrix<T, N, N>,
    b: &SMatrix<T, N, M>,
    q: &SMatrix<T, N, N>,
    r: &SMatrix<T, M, M>,
    p: &SMatrix<T, N, N>,
) -> Result<T> {
    Ok((riccati_map(a, b, q, r, p)? - p).norm())
}

/// Solves the discrete algebraic Riccati equation by fixed-point iteration of
/// the Riccati map, starting from `warm_start` or `Q`.
///
/// Stops at the first iterate whose residual is at most `tol (1 + ‖P‖)`.
pub fn solve_dare<T: Real, const N: usize, const M: usize>(
    a: &SMatrix<T, N, N>,
    b: &SMatrix<T, N, M>,
    q: &SMatrix<T, N, N>,
    r: &SMatrix<T, M, M>,
    opts: &DareOptions<T>,
    warm_start: Option<&SMatrix<T, N, N>>,
) -> Result<DareSolution<T, N>> {
    check_positive_definite(r, "R")?;
    let mut p = warm_start.copied().unwrap_or(*q);
    let mut residual = T::max_value().unwrap_or(T::lit(f64::MAX));
    for iterations in 0..=opts.max_iter {
        let next = riccati_map(a, b, q, r, &p)?;
        residual = (next - p).norm();
        if !residual.finite() {
            break;
        }
        if residual <= opts.tol * (T::one() + p.norm()) {
            return Ok(DareSolution {
                p,
                iterations,
                residual,
            });
        }
        p = next;
    }
    Err(Error::Convergence {
        iterations: opts.max_iter,
        residual: residual.to_f64_lossy(),
    })
}

/// `K = (R + Bᵀ P B)⁻¹ Bᵀ P A`.
pub fn feedback_gain<T: Real, const N: usize, const M: usize>(
    a: &SMatrix<T, N, N>,
    b: &SMatrix<T, N, M>,
    p: &SMatrix<T, N, N>,
    r: &SMatrix<T, M, M>,
) -> Result<SMatrix<T, M, N>> {
    let bt_p = b.transpose() * p;
    let s = r + bt_p * b;
    let s_inv = s.try_inverse().ok_or(Error::Singular {
        context: "R + BᵀPB",
        step: None,
    })?;
    Ok(s_inv * bt_p * a)
}

/// `N = (Bᵀ B)⁻¹ Bᵀ ((I + B K) − A)`.
pub fn prefilter<T: Real, const N: usize, const M: usize>(
    a: &SMatrix<T, N, N>,
    b: &SMatrix<T, N, M>,
    k: &SMatrix<T, M, N>,
) -> Result<SMatrix<T, M, N>> {
    let btb_inv = (b.transpose() * b).try_inverse().ok_or(Error::Singular {
        context: "BᵀB (rank-deficient input matrix)",
        step: None,
    })?;
    let inner = SMatrix::<T, N, N>::identity() + b * k - a;
    Ok(btb_inv * b.transpose() * inner)
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: Real, const N: usize>(m: &SMatrix<T, N, N>) -> T {
    nalgebra::DMatrix::from_column_slice(N, N, m.as_slice())
        .complex_eigenvalues()
        .iter()
        .map(|z| (z.re * z.re + z.im * z.im).sqrt())
        .fold(T::zero(), |acc, v| acc.max(v))
}

/// Gains for one control step, with the heading the translation gains were
/// computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSet<T: Real> {
    pub k1: Matrix3x6<T>,
    pub n1: Matrix3x6<T>,
    pub k2: T,
    pub n2: T,
    pub course: T,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlOutput<T> {
    /// Command after clamping to `[-1, 1]`.
    pub command: FlightCommand<T>,
    /// Command before clamping.
    pub raw: FlightCommand<T>,
    pub saturated: [bool; 4],
}

/// Applies the control law to the current estimates.
pub fn controller_step<T: Real>(
    reference: &ReferenceSample<T>,
    translation_estimate: &TranslationState<T>,
    heading_estimate: T,
    gains: &GainSet<T>,
) -> Result<ControlOutput<T>> {
    let drift = wrap_angle(heading_estimate - gains.course).abs();
    let limit = T::lit(STALE_GAIN_LIMIT);
    if !(drift <= limit) {
        return Err(Error::StaleGains {
            drift: drift.to_f64_lossy(),
            limit: STALE_GAIN_LIMIT,
        });
    }
    let r1 = TranslationState::new(reference.velocity, reference.position).to_vector();
    let u1 = gains.n1 * r1 - gains.k1 * translation_estimate.to_vector();
    // reference heading taken at its representative nearest the estimate
    let r2 = heading_estimate + wrap_angle(reference.course - heading_estimate);
    let u2 = gains.n2 * r2 - gains.k2 * heading_estimate;
    let raw = FlightCommand::new(u1[0], u1[1], u1[2], u2)?;
    let (command, saturated) = raw.saturated();
    Ok(ControlOutput {
        command,
        raw,
        saturated,
    })
}

/// Gains plus the model matrices they were computed for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainUpdate<T: Real> {
    pub gains: GainSet<T>,
    pub model: TranslationMatrices<T>,
    pub dare_iterations: usize,
}

/// Controller session: recomputes the translation gains for each heading,
/// warm-starting the Riccati iteration from the previous solution.
#[derive(Debug, Clone)]
pub struct Regulator<T: Real> {
    drone: DroneGains<T>,
    weights: RegulatorWeights<T>,
    dt: T,
    k2: T,
    options: DareOptions<T>,
    warm: Option<(Matrix6<T>, T)>,
}

impl<T: Real> Regulator<T> {
    pub fn new(
        drone: DroneGains<T>,
        weights: RegulatorWeights<T>,
        heading: &HeadingRegulatorConfig<T>,
        dt: T,
        options: DareOptions<T>,
    ) -> Result<Self> {
        drone.validate()?;
        weights.validate()?;
        if !(dt.finite() && dt > T::zero()) {
            return Err(Error::InvalidArgument("time step must be > 0".into()));
        }
        let k2 = heading_gain(heading, drone.k_yaw_rate)?;
        Ok(Self {
            drone,
            weights,
            dt,
            k2,
            options,
            warm: None,
        })
    }

    pub fn heading_gain(&self) -> T {
        self.k2
    }

    /// Translation gains for the model built at heading `course`.
    pub fn update(&mut self, course: T) -> Result<GainUpdate<T>> {
        let model = translation_matrices(self.dt, course, &self.drone)?;
        // B1 rotates with the heading; rotating the previous solution the same
        // way is exact when the two horizontal axes share a time constant.
        let warm = match self.warm {
            Some((p, prev)) => {
                let rot = block_rotation(course - prev)?;
                Some(rot * p * rot.transpose())
            }
            None => None,
        };
        let sol = solve_dare(
            &model.a,
            &model.b,
            &self.weights.q,
            &self.weights.r,
            &self.options,
            warm.as_ref(),
        )?;
        let k1 = feedback_gain(&model.a, &model.b, &sol.p, &self.weights.r)?;
        let n1 = prefilter(&model.a, &model.b, &k1)?;
        self.warm = Some((sol.p, course));
        Ok(GainUpdate {
            gains: GainSet {
                k1,
                n1,
                k2: self.k2,
                n2: self.k2,
                course,
            },
            model,
            dare_iterations: sol.iterations,
        })
    }
}

fn block_rotation<T: Real>(angle: T) -> Result<Matrix6<T>> {
    let m = heading_rotation(angle)?;
    let mut out = Matrix6::zeros();
    out.fixed_view_mut::<3, 3>(0, 0).copy_from(&m);
    out.fixed_view_mut::<3, 3>(3, 3).copy_from(&m);
    Ok(out)
}

/// Convenience: unsaturated translation closed-loop matrix `A − B K`.
pub fn closed_loop<T: Real>(a: &Matrix6<T>, b: &Matrix6x3<T>, k: &Matrix3x6<T>) -> Matrix6<T> {
    a - b * k
}
