//! Direct optimization of point coordinates against a target cloud.
//!
//! Each step draws a handful of views from the angle pool, evaluates the
//! combined objective and takes one Adam step on the flattened coordinates.
//! The loss weights switch once, from `weights_phase1` to `weights_phase2`,
//! after `phase1_steps` steps.

use std::time::Instant;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::{PointCloud, ViewSpec};
use crate::error::{Error, Result};
use crate::losses::{emd, evaluate, view_targets, LossReport, LossWeights, RenderConfig, ViewTarget};

#[derive(Clone, Debug, PartialEq)]
pub struct FitConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub views_per_step: usize,
    pub phase1_steps: usize,
    pub phase2_steps: usize,
    pub weights_phase1: LossWeights,
    pub weights_phase2: LossWeights,
    pub seed: u64,
    /// Record a cloud snapshot (and its EMD to the target) every this many
    /// steps; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl FitConfig {
    /// Learning rate used for network weights in the original training setup.
    pub const NETWORK_LEARNING_RATE: f64 = 0.00005;
    /// Default learning rate for optimizing raw coordinates.
    pub const COORDINATE_LEARNING_RATE: f64 = 0.005;

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Parameter(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        for (name, b) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(b > 0.0 && b < 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in (0, 1), got {b}")));
            }
        }
        if !(self.adam_eps > 0.0) {
            return Err(Error::Parameter(format!("adam eps must be positive, got {}", self.adam_eps)));
        }
        if self.views_per_step == 0 {
            return Err(Error::Parameter("views_per_step must be positive".into()));
        }
        if self.phase1_steps == 0 {
            return Err(Error::Parameter("phase1_steps must be positive".into()));
        }
        self.weights_phase1.validate()?;
        self.weights_phase2.validate()
    }

    pub fn total_steps(&self) -> usize {
        self.phase1_steps + self.phase2_steps
    }

    pub fn weights_at(&self, step: usize) -> LossWeights {
        if step < self.phase1_steps {
            self.weights_phase1
        } else {
            self.weights_phase2
        }
    }
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            learning_rate: Self::COORDINATE_LEARNING_RATE,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            views_per_step: 4,
            phase1_steps: 2000,
            phase2_steps: 500,
            weights_phase1: LossWeights::PHASE1,
            weights_phase2: LossWeights::PHASE2,
            seed: 0,
            snapshot_every: 0,
        }
    }
}

/// First and second moment estimates plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len], t: 0 }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(params: &mut [f64], grad: &[f64], state: &mut AdamState, cfg: &FitConfig) -> Result<()> {
    let n = params.len();
    if grad.len() != n || state.m.len() != n || state.v.len() != n {
        return Err(Error::Dimension(format!(
            "adam: {} params, {} grads, {}/{} moments",
            n,
            grad.len(),
            state.m.len(),
            state.v.len()
        )));
    }
    state.t += 1;
    let bc1 = 1.0 - cfg.beta1.powf(state.t as f64);
    let bc2 = 1.0 - cfg.beta2.powf(state.t as f64);
    for i in 0..n {
        let g = grad[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
    }
    Ok(())
}

#[derive(Clone, Debug, Default)]
pub struct FitTrace {
    /// Objective at each executed step, evaluated before that step's update.
    pub reports: Vec<LossReport>,
    /// Pool indices drawn at each step.
    pub views: Vec<Vec<usize>>,
    pub step_seconds: Vec<f64>,
    /// `(step, cloud)`; `step` counts completed updates.
    pub snapshots: Vec<(usize, PointCloud)>,
}

impl FitTrace {
    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }
}

fn check_finite(step: usize, r: &LossReport) -> Result<()> {
    for (term, v) in [("cd", r.cd), ("edge", r.edge), ("corner", r.corner), ("total", r.total)] {
        if !v.is_finite() {
            return Err(Error::NonFinite { step, term });
        }
    }
    Ok(())
}

/// Runs both phases and returns the final cloud with the per-step trace.
pub fn fit(
    initial: &PointCloud,
    target: &PointCloud,
    pool: &[ViewSpec],
    cfg: &FitConfig,
    render: &RenderConfig,
) -> Result<(PointCloud, FitTrace)> {
    cfg.validate()?;
    render.validate()?;
    if pool.len() < cfg.views_per_step {
        return Err(Error::Parameter(format!(
            "angle pool has {} views, {} needed per step",
            pool.len(),
            cfg.views_per_step
        )));
    }
    let targets = view_targets(target, pool, render)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = initial.to_flat();
    let mut state = AdamState::new(params.len());
    let mut trace = FitTrace::default();

    for step in 0..cfg.total_steps() {
        let started = Instant::now();
        let drawn = index::sample(&mut rng, pool.len(), cfg.views_per_step).into_vec();
        let step_targets: Vec<ViewTarget> = drawn.iter().map(|&i| targets[i].clone()).collect();
        let cloud = PointCloud::from_flat(&params)?;
        let eval = evaluate(&cloud, target, &step_targets, &cfg.weights_at(step), render, None)?;
        check_finite(step, &eval.report)?;
        let grad: Vec<f64> = eval.grad.iter().flatten().copied().collect();
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite { step, term: "gradient" });
        }
        adam_step(&mut params, &grad, &mut state, cfg)?;
        trace.reports.push(eval.report);
        trace.views.push(drawn);
        trace.step_seconds.push(started.elapsed().as_secs_f64());

        let done = step + 1;
        if cfg.snapshot_every > 0 && (done % cfg.snapshot_every == 0 || done == cfg.total_steps()) {
            let snap = PointCloud::from_flat(&params)?;
            if snap.len() == target.len() {
                trace.reports.last_mut().expect("pushed above").emd = Some(emd(&snap, target)?);
            }
            trace.snapshots.push((done, snap));
        }
    }
    Ok((PointCloud::from_flat(&params)?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        let cfg = FitConfig::default();
        let mut p = vec![1.0, -2.0, 3.0];
        let mut s = AdamState::new(3);
        adam_step(&mut p, &[0.0; 3], &mut s, &cfg).unwrap();
        assert_eq!(p, vec![1.0, -2.0, 3.0]);
        assert_eq!(s.t, 1);
    }

    #[test]
    fn constant_gradient_steps_at_learning_rate() {
        let cfg = FitConfig { learning_rate: 0.01, ..FitConfig::default() };
        let mut p = vec![0.0, 0.0];
        let mut s = AdamState::new(2);
        let mut last = p.clone();
        for _ in 0..500 {
            adam_step(&mut p, &[2.5, -0.3], &mut s, &cfg).unwrap();
            let dx = [p[0] - last[0], p[1] - last[1]];
            assert!((dx[0] + 0.01).abs() < 1e-6 && (dx[1] - 0.01).abs() < 1e-6);
            last = p.clone();
        }
    }

    #[test]
    fn quadratic_converges() {
        let cfg = FitConfig { learning_rate: 0.1, ..FitConfig::default() };
        let mut x = [0.0];
        let mut s = AdamState::new(1);
        let mut converged_at = None;
        for k in 0..2000 {
            let g = 2.0 * (x[0] - 3.0);
            adam_step(&mut x, &[g], &mut s, &cfg).unwrap();
            if converged_at.is_none() && (x[0] - 3.0f64).abs() < 1e-3 {
                converged_at = Some(k);
            }
        }
        assert!((x[0] - 3.0).abs() < 1e-3, "{}", x[0]);
        assert!(converged_at.is_some());
    }

    #[test]
    fn length_mismatch() {
        let mut s = AdamState::new(2);
        assert!(matches!(adam_step(&mut [0.0; 3], &[0.0; 3], &mut s, &FitConfig::default()), Err(Error::Dimension(_))));
    }

    #[test]
    fn config_validation() {
        let bad = FitConfig { beta1: 1.0, ..FitConfig::default() };
        assert!(bad.validate().is_err());
        let bad = FitConfig { learning_rate: 0.0, ..FitConfig::default() };
        assert!(bad.validate().is_err());
        assert_eq!(FitConfig::default().weights_at(1999), LossWeights::PHASE1);
        assert_eq!(FitConfig::default().weights_at(2000), LossWeights::PHASE2);
    }
}
