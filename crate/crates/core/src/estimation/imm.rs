//! Two-mode interacting multiple model filter.

use log::warn;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::kalman::{ekf_step, symmetrize, Covariance, State};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Linear,
    Maneuver,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeConfig {
    pub name: ModeName,
    /// White-noise acceleration intensity, m²/s³.
    pub process_noise_intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ImmConfig {
    pub modes: [ModeConfig; 2],
    /// Row-stochastic mode switch matrix; `transition[i][j]` = P(mode j | mode i).
    pub transition: [[f64; 2]; 2],
    pub meas_noise_sigma: f64,
    pub init_pos_var: f64,
    pub init_vel_var: f64,
    pub initial_mode_probs: [f64; 2],
}

impl Default for ImmConfig {
    fn default() -> Self {
        ImmConfig {
            modes: [
                ModeConfig { name: ModeName::Linear, process_noise_intensity: 0.01 },
                ModeConfig { name: ModeName::Maneuver, process_noise_intensity: 1.0 },
            ],
            transition: [[0.95, 0.05], [0.05, 0.95]],
            meas_noise_sigma: 10.0,
            init_pos_var: 100.0,
            init_vel_var: 100.0,
            initial_mode_probs: [0.5, 0.5],
        }
    }
}

impl ImmConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        for row in &self.transition {
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) || (row[0] + row[1] - 1.0).abs() > 1e-12 {
                return bad(format!("transition row {row:?} is not stochastic"));
            }
        }
        let mu = &self.initial_mode_probs;
        if mu.iter().any(|p| !(0.0..=1.0).contains(p)) || (mu[0] + mu[1] - 1.0).abs() > 1e-12 {
            return bad(format!("initial mode probabilities {mu:?} do not sum to 1"));
        }
        if !(self.meas_noise_sigma > 0.0) || !(self.init_pos_var > 0.0) || !(self.init_vel_var > 0.0) {
            return bad("noise and initial variances must be positive".into());
        }
        let (lin, man) = (&self.modes[0], &self.modes[1]);
        if lin.name != ModeName::Linear || man.name != ModeName::Maneuver {
            return bad("modes must be [linear, maneuver]".into());
        }
        if !(lin.process_noise_intensity > 0.0) || !(man.process_noise_intensity > lin.process_noise_intensity) {
            return bad("process noise must satisfy 0 < q_linear < q_maneuver".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeEstimate {
    pub state: State,
    pub covariance: Covariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmState {
    pub modes: [ModeEstimate; 2],
    pub probabilities: [f64; 2],
    pub combined_state: State,
    pub combined_covariance: Covariance,
}

impl ImmState {
    /// Starts both modes at the first measurement with zero velocity.
    pub fn initialize(z: &Vector2<f64>, cfg: &ImmConfig) -> ImmState {
        let state = State::new(z[0], 0.0, z[1], 0.0);
        let covariance = Covariance::from_diagonal(&State::new(cfg.init_pos_var, cfg.init_vel_var, cfg.init_pos_var, cfg.init_vel_var));
        let est = ModeEstimate { state, covariance };
        ImmState {
            modes: [est.clone(), est],
            probabilities: cfg.initial_mode_probs,
            combined_state: state,
            combined_covariance: covariance,
        }
    }
}

/// Moment-matched mixture of per-mode Gaussians, including the spread-of-means term.
pub fn combine(weights: &[f64; 2], estimates: [(&State, &Covariance); 2]) -> (State, Covariance) {
    let mut mean = State::zeros();
    for (w, (x, _)) in weights.iter().zip(estimates.iter()) {
        mean += *x * *w;
    }
    let mut cov = Covariance::zeros();
    for (w, (x, p)) in weights.iter().zip(estimates.iter()) {
        let d = *x - mean;
        cov += (*p + d * d.transpose()) * *w;
    }
    (mean, symmetrize(&cov))
}

/// One IMM cycle: mixing, per-mode filtering, mode probability update, combination.
pub fn imm_step(state: &ImmState, z: &Vector2<f64>, dt: f64, cfg: &ImmConfig) -> Result<ImmState> {
    let pi = &cfg.transition;
    let mu = &state.probabilities;

    // predicted mode probabilities c_j and mixing weights mu_{i|j}
    let c = [pi[0][0] * mu[0] + pi[1][0] * mu[1], pi[0][1] * mu[0] + pi[1][1] * mu[1]];
    let mut mixed = Vec::with_capacity(2);
    for j in 0..2 {
        let w = if c[j] > 0.0 {
            [pi[0][j] * mu[0] / c[j], pi[1][j] * mu[1] / c[j]]
        } else {
            // unreachable mode: keep its own estimate
            let mut w = [0.0; 2];
            w[j] = 1.0;
            w
        };
        let m = &state.modes;
        mixed.push(combine(&w, [(&m[0].state, &m[0].covariance), (&m[1].state, &m[1].covariance)]));
    }

    let mut outputs = Vec::with_capacity(2);
    for (j, (x0, p0)) in mixed.iter().enumerate() {
        outputs.push(ekf_step(x0, p0, z, dt, cfg.modes[j].process_noise_intensity, cfg.meas_noise_sigma)?);
    }

    let lmax = outputs[0].log_likelihood.max(outputs[1].log_likelihood);
    let weighted = [c[0] * (outputs[0].log_likelihood - lmax).exp(), c[1] * (outputs[1].log_likelihood - lmax).exp()];
    let total = weighted[0] + weighted[1];
    let probabilities = if total > 0.0 && total.is_finite() {
        [weighted[0] / total, weighted[1] / total]
    } else {
        warn!("all mode likelihoods vanished; keeping previous mode probabilities");
        *mu
    };

    let (combined_state, combined_covariance) = combine(
        &probabilities,
        [(&outputs[0].state, &outputs[0].covariance), (&outputs[1].state, &outputs[1].covariance)],
    );
    let [a, b] = [outputs.remove(0), outputs.remove(0)];
    Ok(ImmState {
        modes: [
            ModeEstimate { state: a.state, covariance: a.covariance },
            ModeEstimate { state: b.state, covariance: b.covariance },
        ],
        probabilities,
        combined_state,
        combined_covariance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::kalman;
    use nalgebra::SymmetricEigen;

    fn straight_measurements(n: usize, speed: f64, dt: f64) -> Vec<Vector2<f64>> {
        (0..n).map(|i| Vector2::new(0.6 * speed * dt * i as f64, 0.8 * speed * dt * i as f64)).collect()
    }

    #[test]
    fn default_config_is_valid() {
        ImmConfig::default().validate().unwrap();
        let mut cfg = ImmConfig::default();
        cfg.transition[0] = [0.9, 0.2];
        assert!(cfg.validate().is_err());
        let mut cfg = ImmConfig::default();
        cfg.modes[1].process_noise_intensity = 0.001;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn identical_modes_reduce_to_single_filter() {
        let mut cfg = ImmConfig::default();
        cfg.modes[1].process_noise_intensity = cfg.modes[0].process_noise_intensity;
        cfg.transition = [[0.9, 0.1], [0.3, 0.7]];
        cfg.initial_mode_probs = [0.2, 0.8];
        let zs = straight_measurements(40, 5.0, 10.0);
        let mut imm = ImmState::initialize(&zs[0], &cfg);
        let (mut x, mut p) = (imm.combined_state, imm.combined_covariance);
        for z in &zs[1..] {
            let prior = imm.probabilities;
            imm = imm_step(&imm, z, 10.0, &cfg).unwrap();
            let single = kalman::ekf_step(&x, &p, z, 10.0, 0.01, 10.0).unwrap();
            x = single.state;
            p = single.covariance;
            assert!((imm.combined_state - x).amax() < 1e-9);
            assert!((imm.combined_covariance - p).amax() < 1e-9);
            // equal likelihoods: mu' = Pi^T mu
            let expected = [0.9 * prior[0] + 0.3 * prior[1], 0.1 * prior[0] + 0.7 * prior[1]];
            assert!((imm.probabilities[0] - expected[0]).abs() < 1e-12);
        }
        // stationary vector of Pi is (0.75, 0.25)
        assert!((imm.probabilities[0] - 0.75).abs() < 1e-6);
    }

    #[test]
    fn identity_switching_matches_linear_filter_exactly() {
        let mut cfg = ImmConfig::default();
        cfg.transition = [[1.0, 0.0], [0.0, 1.0]];
        cfg.initial_mode_probs = [1.0, 0.0];
        let zs: Vec<_> = straight_measurements(60, 4.0, 7.0)
            .into_iter()
            .enumerate()
            .map(|(i, z)| z + Vector2::new((i as f64 * 1.7).sin() * 9.0, (i as f64 * 0.9).cos() * 7.0))
            .collect();
        let mut imm = ImmState::initialize(&zs[0], &cfg);
        let (mut x, mut p) = (imm.combined_state, imm.combined_covariance);
        for z in &zs[1..] {
            imm = imm_step(&imm, z, 7.0, &cfg).unwrap();
            let single = kalman::ekf_step(&x, &p, z, 7.0, 0.01, 10.0).unwrap();
            x = single.state;
            p = single.covariance;
            assert_eq!(imm.combined_state, x);
            assert_eq!(imm.combined_covariance, p);
            assert_eq!(imm.probabilities, [1.0, 0.0]);
        }
    }

    #[test]
    fn straight_motion_favours_linear_mode() {
        let cfg = ImmConfig::default();
        let zs = straight_measurements(100, 5.0, 10.0);
        let mut imm = ImmState::initialize(&zs[0], &cfg);
        for (step, z) in zs.iter().enumerate().skip(1) {
            imm = imm_step(&imm, z, 10.0, &cfg).unwrap();
            if step >= 20 {
                assert!(imm.probabilities[0] > 0.8, "step {step}: {:?}", imm.probabilities);
            }
        }
    }

    #[test]
    fn turn_raises_maneuver_probability() {
        let cfg = ImmConfig::default();
        let mut zs = straight_measurements(40, 5.0, 10.0);
        let corner = zs[39];
        zs.extend((1..10).map(|i| corner + Vector2::new(50.0 * i as f64, -20.0 * i as f64)));
        let mut imm = ImmState::initialize(&zs[0], &cfg);
        let mut before = 0.0;
        let mut peak: f64 = 0.0;
        for (step, z) in zs.iter().enumerate().skip(1) {
            imm = imm_step(&imm, z, 10.0, &cfg).unwrap();
            if step == 39 {
                before = imm.probabilities[1];
            }
            if step > 39 {
                peak = peak.max(imm.probabilities[1]);
            }
        }
        assert!(peak > 0.5 && peak > before, "before {before}, peak {peak}");
    }

    #[test]
    fn invariants_hold_every_step() {
        let cfg = ImmConfig::default();
        let zs: Vec<_> = (0..200)
            .map(|i| {
                let t = i as f64;
                Vector2::new(300.0 * (t / 30.0).sin() + 0.5 * t, 200.0 * (t / 17.0).cos() + (t * 3.1).sin() * 12.0)
            })
            .collect();
        let mut imm = ImmState::initialize(&zs[0], &cfg);
        for z in &zs[1..] {
            imm = imm_step(&imm, z, 3.0 + (z[0].abs() % 7.0), &cfg).unwrap();
            let mu = imm.probabilities;
            assert!((mu[0] + mu[1] - 1.0).abs() <= 1e-12 && mu.iter().all(|p| *p >= 0.0));
            for p in [&imm.modes[0].covariance, &imm.modes[1].covariance, &imm.combined_covariance] {
                assert_eq!(*p, p.transpose());
                assert!(SymmetricEigen::new(*p).eigenvalues.min() >= -1e-9);
            }
            let mean = imm.modes[0].state * mu[0] + imm.modes[1].state * mu[1];
            assert!((mean - imm.combined_state).amax() < 1e-9);
            // spread-of-means is PSD: P - sum mu_j P_j >= 0
            let within = imm.modes[0].covariance * mu[0] + imm.modes[1].covariance * mu[1];
            assert!(SymmetricEigen::new(imm.combined_covariance - within).eigenvalues.min() >= -1e-9);
        }
    }
}
