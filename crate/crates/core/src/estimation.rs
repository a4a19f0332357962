//! Discrete time-varying Kalman filter.
//!
//! Dimensions are carried in the types, so the state/input/observation sizes
//! of a model and an estimate can never disagree at run time.

use nalgebra::{SMatrix, SVector};

use crate::dynamics::wrap_angle;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// `x[k+1] = A x[k] + B u[k] + f`, `y[k] = C x[k] + h`, with
/// `f ~ N(0, F)` and `h ~ N(0, H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearGaussianModel<T: Real, const N: usize, const M: usize, const Q: usize> {
    pub a: SMatrix<T, N, N>,
    pub b: SMatrix<T, N, M>,
    pub c: SMatrix<T, Q, N>,
    pub process: SMatrix<T, N, N>,
    pub measurement: SMatrix<T, Q, Q>,
}

impl<T: Real, const N: usize, const M: usize, const Q: usize> LinearGaussianModel<T, N, M, Q> {
    pub fn validate(&self) -> Result<()> {
        crate::dynamics::check_psd(&self.process, "process covariance")?;
        crate::dynamics::check_psd(&self.measurement, "measurement covariance")?;
        Ok(())
    }
}

/// Scalar model used for the heading filter.
pub type ScalarModel<T> = LinearGaussianModel<T, 1, 1, 1>;

pub fn scalar_model<T: Real>(a: T, b: T, c: T, process: T, measurement: T) -> ScalarModel<T> {
    LinearGaussianModel {
        a: SMatrix::from_element(a),
        b: SMatrix::from_element(b),
        c: SMatrix::from_element(c),
        process: SMatrix::from_element(process),
        measurement: SMatrix::from_element(measurement),
    }
}

/// Estimate `x̂` with covariance `P̂`, plus the number of measurement
/// updates applied so far (used to locate failures).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KalmanState<T: Real, const N: usize> {
    pub estimate: SVector<T, N>,
    pub covariance: SMatrix<T, N, N>,
    pub updates: usize,
}

impl<T: Real, const N: usize> KalmanState<T, N> {
    pub fn new(estimate: SVector<T, N>, covariance: SMatrix<T, N, N>) -> Self {
        Self {
            estimate,
            covariance,
            updates: 0,
        }
    }

    /// Self-starting initialization for a fully observed state (`C = I`):
    /// the first measurement with the measurement covariance.
    pub fn from_measurement(y: SVector<T, N>, measurement_cov: SMatrix<T, N, N>) -> Self {
        Self::new(y, measurement_cov)
    }

    /// `x̂⁻ = A x̂ + B u`, `P̂⁻ = A P̂ Aᵀ + F`.
    pub fn predict<const M: usize, const Q: usize>(
        &self,
        model: &LinearGaussianModel<T, N, M, Q>,
        input: &SVector<T, M>,
    ) -> Self {
        let estimate = model.a * self.estimate + model.b * input;
        let covariance = symmetrize(model.a * self.covariance * model.a.transpose() + model.process);
        Self {
            estimate,
            covariance,
            updates: self.updates,
        }
    }

    /// Measurement update with the innovation `y − C x̂⁻`.
    pub fn update<const M: usize, const Q: usize>(
        &self,
        model: &LinearGaussianModel<T, N, M, Q>,
        y: &SVector<T, Q>,
    ) -> Result<(Self, SMatrix<T, N, Q>)> {
        let innovation = y - model.c * self.estimate;
        self.update_with_innovation(model, &innovation)
    }

    /// Measurement update given a precomputed innovation. Lets callers apply
    /// their own innovation arithmetic (angle wrapping, gating).
    pub fn update_with_innovation<const M: usize, const Q: usize>(
        &self,
        model: &LinearGaussianModel<T, N, M, Q>,
        innovation: &SVector<T, Q>,
    ) -> Result<(Self, SMatrix<T, N, Q>)> {
        let step = self.updates;
        let pct = self.covariance * model.c.transpose();
        let s = model.c * pct + model.measurement;
        let s_inv = s.try_inverse().ok_or(Error::Singular {
            context: "Kalman innovation covariance",
            step: Some(step),
        })?;
        if !s_inv.iter().all(|v| v.finite()) {
            return Err(Error::Singular {
                context: "Kalman innovation covariance",
                step: Some(step),
            });
        }
        let gain = pct * s_inv;
        let estimate = self.estimate + gain * innovation;
        let covariance = symmetrize(
            (SMatrix::<T, N, N>::identity() - gain * model.c) * self.covariance,
        );
        Ok((
            Self {
                estimate,
                covariance,
                updates: step + 1,
            },
            gain,
        ))
    }
}

/// Heading measurement update: the innovation goes through `wrap_angle` and
/// the updated estimate is wrapped back to `(-π, π]`.
pub fn update_heading<T: Real>(
    state: &KalmanState<T, 1>,
    model: &ScalarModel<T>,
    measured: T,
) -> Result<(KalmanState<T, 1>, T)> {
    let innovation = wrap_angle(measured - model.c[0] * state.estimate[0]);
    let (mut next, gain) = state.update_with_innovation(model, &SVector::from_element(innovation))?;
    next.estimate[0] = wrap_angle(next.estimate[0]);
    Ok((next, gain[0]))
}

fn symmetrize<T: Real, const N: usize>(m: SMatrix<T, N, N>) -> SMatrix<T, N, N> {
    (m + m.transpose()) * T::lit(0.5)
}
