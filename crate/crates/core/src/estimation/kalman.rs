//! Constant-velocity Kalman step in the local plane. State is `[x, vx, y, vy]`.
//!
//! Positions are projected before filtering, so the measurement model is linear and
//! the extended filter's Jacobians are the plain `F` and `H` below.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};

use crate::error::{Error, Result};

pub type State = Vector4<f64>;
pub type Covariance = Matrix4<f64>;

/// Innovation covariances worse conditioned than this are treated as singular.
pub const MAX_INNOVATION_CONDITION: f64 = 1e12;

pub fn transition(dt: f64) -> Matrix4<f64> {
    #[rustfmt::skip]
    let f = Matrix4::new(
        1.0, dt,  0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
        0.0, 0.0, 1.0, dt,
        0.0, 0.0, 0.0, 1.0,
    );
    f
}

/// Continuous white-noise acceleration with intensity `q` (m²/s³) on each axis.
pub fn process_noise(dt: f64, q: f64) -> Matrix4<f64> {
    let (a, b, c) = (q * dt.powi(3) / 3.0, q * dt.powi(2) / 2.0, q * dt);
    #[rustfmt::skip]
    let m = Matrix4::new(
        a,   b,   0.0, 0.0,
        b,   c,   0.0, 0.0,
        0.0, 0.0, a,   b,
        0.0, 0.0, b,   c,
    );
    m
}

pub fn observation() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0)
}

pub fn symmetrize(p: &Covariance) -> Covariance {
    (p + p.transpose()) * 0.5
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub state: State,
    pub covariance: Covariance,
    pub innovation: Vector2<f64>,
    pub innovation_cov: Matrix2<f64>,
    /// Natural log of N(innovation; 0, S).
    pub log_likelihood: f64,
}

impl StepOutput {
    pub fn likelihood(&self) -> f64 {
        self.log_likelihood.exp()
    }
}

pub fn predict(x: &State, p: &Covariance, dt: f64, q: f64) -> (State, Covariance) {
    let f = transition(dt);
    let x = f * x;
    let p = symmetrize(&(f * p * f.transpose() + process_noise(dt, q)));
    (x, p)
}

fn condition_number(s: &Matrix2<f64>) -> f64 {
    // closed-form eigenvalues of a symmetric 2x2
    let (a, b, d) = (s[(0, 0)], 0.5 * (s[(0, 1)] + s[(1, 0)]), s[(1, 1)]);
    let mean = 0.5 * (a + d);
    let radius = (0.25 * (a - d).powi(2) + b * b).sqrt();
    let (lo, hi) = (mean - radius, mean + radius);
    if lo <= 0.0 || !lo.is_finite() || !hi.is_finite() {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Measurement update with position `z` and isotropic noise `sigma` (m).
/// Uses the Joseph form so the posterior stays symmetric PSD.
pub fn update(x: &State, p: &Covariance, z: &Vector2<f64>, sigma: f64) -> Result<StepOutput> {
    let h = observation();
    let r = Matrix2::identity() * (sigma * sigma);
    let innovation = z - h * x;
    let s = h * p * h.transpose() + r;
    let s = (s + s.transpose()) * 0.5;
    let condition = condition_number(&s);
    if condition > MAX_INNOVATION_CONDITION {
        return Err(Error::SingularInnovation { condition });
    }
    let s_inv = s.try_inverse().ok_or(Error::SingularInnovation { condition })?;
    let k: Matrix4x2<f64> = p * h.transpose() * s_inv;
    let i_kh = Matrix4::identity() - k * h;
    let covariance = symmetrize(&(i_kh * p * i_kh.transpose() + k * r * k.transpose()));
    let state = x + k * innovation;

    let mahalanobis = (innovation.transpose() * s_inv * innovation)[(0, 0)];
    let log_likelihood = -0.5 * mahalanobis - (2.0 * std::f64::consts::PI).ln() - 0.5 * s.determinant().ln();
    Ok(StepOutput { state, covariance, innovation, innovation_cov: s, log_likelihood })
}

/// One predict/update cycle.
pub fn ekf_step(x: &State, p: &Covariance, z: &Vector2<f64>, dt: f64, q: f64, sigma: f64) -> Result<StepOutput> {
    let (xp, pp) = predict(x, p, dt, q);
    update(&xp, &pp, z, sigma)
}
