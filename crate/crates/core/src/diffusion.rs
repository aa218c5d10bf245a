//! Euler-Maruyama integration of the four-type Wright-Fisher SDE with
//! selection and recombination, with fixation detection. Serves as the
//! forward-model cross-check for the duality and fixation estimators.

use crate::model::{ModelParams, SimplexState};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SdeError {
    #[error("dt must be positive, got {0}")]
    InvalidDt(f64),
    #[error("fixation threshold eta must lie in (0, 1e-2), got {0}")]
    InvalidEta(f64),
    #[error("step rejected {0} times in a row; drift too stiff for the configured dt")]
    StepRejectionCascade(u32),
}

/// Integration configuration. The event "type `i` fixed" is declared when
/// `x_i > 1 - eta` and every other coordinate is below `eta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeConfig {
    pub dt: f64,
    pub t_max: f64,
    pub eta: f64,
    pub max_halvings: u32,
}

impl SdeConfig {
    pub fn new(dt: f64, t_max: f64) -> Result<Self, SdeError> {
        let cfg = SdeConfig { dt, t_max, eta: 1e-6, max_halvings: 20 };
        cfg.check()?;
        Ok(cfg)
    }

    /// Default step for a given selection scale, `1e-4 / (1 + alpha)`.
    pub fn default_dt(alpha: f64) -> f64 {
        1e-4 / (1.0 + alpha)
    }

    fn check(&self) -> Result<(), SdeError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(SdeError::InvalidDt(self.dt));
        }
        if !(0.0 < self.eta && self.eta < 1e-2) {
            return Err(SdeError::InvalidEta(self.eta));
        }
        Ok(())
    }
}

/// Drift vector of the SDE: selection terms `x_i (alpha_i - sum_j alpha_j x_j)`
/// plus recombination flux `rho (x1 x2 - x0 x3)` into types 0 and 3 and out
/// of types 1 and 2. Components sum to zero.
pub fn drift(x: &SimplexState, p: &ModelParams) -> [f64; 4] {
    let f = x.frequencies();
    let coeff = [0.0, p.alpha1, p.alpha2, p.alpha];
    let mean_fitness: f64 = coeff.iter().zip(&f).map(|(a, x)| a * x).sum();
    let flux = p.rho * (f[1] * f[2] - f[0] * f[3]);
    [
        f[0] * (coeff[0] - mean_fitness) + flux,
        f[1] * (coeff[1] - mean_fitness) - flux,
        f[2] * (coeff[2] - mean_fitness) - flux,
        f[3] * (coeff[3] - mean_fitness) + flux,
    ]
}

/// One Euler-Maruyama step with the antisymmetric pair noise: one Gaussian
/// per unordered pair `{k, l}`, entering the `k`-equation with `+` and the
/// `l`-equation with `-`, scaled by `sqrt(x_k x_l dt)`. The contributions
/// cancel pairwise, so the coordinate sum is conserved up to rounding and
/// repaired exactly by renormalization.
///
/// If the drift would move any coordinate by more than 0.5 in one step, the
/// step is retried with a halved dt (up to `max_halvings`, then an error).
pub fn sde_step<R: Rng>(
    x: &SimplexState,
    p: &ModelParams,
    cfg: &SdeConfig,
    rng: &mut R,
) -> Result<SimplexState, SdeError> {
    let mut dt = cfg.dt;
    for _ in 0..=cfg.max_halvings {
        let d = drift(x, p);
        debug_assert!(
            d.iter().sum::<f64>().abs() < 1e-9 * (1.0 + d.iter().map(|v| v.abs()).sum::<f64>()),
            "drift components must sum to zero"
        );
        if d.iter().any(|v| (v * dt).abs() > 0.5) {
            dt *= 0.5;
            continue;
        }
        let f = x.frequencies();
        let sqrt_dt = dt.sqrt();
        let mut next = [f[0] + d[0] * dt, f[1] + d[1] * dt, f[2] + d[2] * dt, f[3] + d[3] * dt];
        for k in 0..4 {
            for l in (k + 1)..4 {
                let amp = (f[k] * f[l]).max(0.0).sqrt();
                if amp > 0.0 {
                    let w: f64 = rng.sample(StandardNormal);
                    let inc = amp * sqrt_dt * w;
                    next[k] += inc;
                    next[l] -= inc;
                }
            }
        }
        return Ok(SimplexState::renormalized(next[0], next[1], next[2], next[3]));
    }
    Err(SdeError::StepRejectionCascade(cfg.max_halvings))
}

/// Summary of one integrated path.
#[derive(Debug, Clone, Serialize)]
pub struct SdePath {
    /// Fixed type and the first time the fixation rule held, if any.
    pub fixed: Option<(usize, f64)>,
    pub final_state: SimplexState,
    pub final_time: f64,
    /// State at each requested probe time (state in effect at that time).
    pub probes: Vec<(f64, SimplexState)>,
    pub steps: u64,
}

fn fixed_type(x: &SimplexState, eta: f64) -> Option<usize> {
    let f = x.frequencies();
    (0..4).find(|&i| {
        f[i] > 1.0 - eta && (0..4).all(|j| j == i || f[j] < eta)
    })
}

/// Integrates a path to fixation (per the `eta` rule) or `t_max`, recording
/// the state at the requested probe times.
pub fn simulate_sde<R: Rng>(
    x0: &SimplexState,
    p: &ModelParams,
    cfg: &SdeConfig,
    rng: &mut R,
    probe_times: &[f64],
) -> Result<SdePath, SdeError> {
    cfg.check()?;
    let mut x = *x0;
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut probes = Vec::with_capacity(probe_times.len());
    let mut next_probe = 0usize;
    let mut fixed = fixed_type(&x, cfg.eta).map(|i| (i, 0.0));

    while fixed.is_none() && t < cfg.t_max {
        while next_probe < probe_times.len() && probe_times[next_probe] <= t {
            probes.push((probe_times[next_probe], x));
            next_probe += 1;
        }
        x = sde_step(&x, p, cfg, rng)?;
        t += cfg.dt;
        steps += 1;
        if let Some(i) = fixed_type(&x, cfg.eta) {
            fixed = Some((i, t));
        }
    }
    while next_probe < probe_times.len() {
        probes.push((probe_times[next_probe], x));
        next_probe += 1;
    }
    Ok(SdePath { fixed, final_state: x, final_time: t, probes, steps })
}
