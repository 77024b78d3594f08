//! Euler Monte Carlo for the square-root stochastic volatility model.
//!
//! Every path draws from its own xoshiro256++ generator whose state is derived
//! from `(seed, path_index)`, so results do not depend on how paths are
//! scheduled across threads.

mod panel;
mod stats;

pub use panel::{synth_panel, PathwiseDay, SynthPanel};
pub use stats::{mc_moment, mc_variance_third_variation, Functional, MomentEstimate, TerminalSet};

use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::{SplitMix64, Xoshiro256PlusPlus};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{HestonParams, ModelError};

/// Length of one trading day in years.
pub const DAY_LENGTH: f64 = 1.0 / 252.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `V` is floored at zero inside drift and diffusion; the auxiliary
    /// state itself may go negative.
    #[default]
    FullTruncationEuler,
    /// The proposed variance is replaced by its absolute value.
    ReflectionEuler,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub params: HestonParams<f64>,
    /// Horizon in years.
    pub horizon: f64,
    pub steps_per_day: usize,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
}

impl SimConfig {
    pub fn new(params: HestonParams<f64>, horizon: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            params,
            horizon,
            steps_per_day: 390,
            n_paths,
            seed,
            scheme: Scheme::default(),
        }
    }

    pub fn with_steps_per_day(mut self, steps_per_day: usize) -> Self {
        self.steps_per_day = steps_per_day;
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.params.validate()?;
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(SimError::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if self.steps_per_day == 0 {
            return Err(SimError::InvalidConfig("steps_per_day must be at least 1".into()));
        }
        if self.n_paths == 0 {
            return Err(SimError::InvalidConfig("n_paths must be at least 1".into()));
        }
        Ok(())
    }

    /// Total number of Euler steps; the step size is adjusted so the grid
    /// ends exactly at the horizon.
    pub fn n_steps(&self) -> usize {
        let exact = self.horizon / DAY_LENGTH * self.steps_per_day as f64;
        let rounded = exact.round();
        let n = if (exact - rounded).abs() < 1e-9 * exact.max(1.0) {
            rounded
        } else {
            exact.ceil()
        };
        (n as usize).max(1)
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_steps() as f64
    }
}

/// Instantaneous state of one path plus its running variation integrals.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct State {
    /// Cumulative return.
    pub r: f64,
    /// Scheme state; may be negative under full truncation.
    pub v_aux: f64,
    pub qv: f64,
    pub tv: f64,
    pub fv: f64,
    pub truncated: u64,
}

impl State {
    fn start(v0: f64) -> Self {
        Self {
            v_aux: v0,
            ..Self::default()
        }
    }

    /// Reported variance, always non-negative.
    pub fn v(&self) -> f64 {
        self.v_aux.max(0.0)
    }
}

/// One Euler step with the variation integrals accumulated at the left point.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stepper {
    kappa: f64,
    theta: f64,
    gamma: f64,
    mu: f64,
    rho: f64,
    rho_bar: f64,
    dt: f64,
    sqrt_dt: f64,
    scheme: Scheme,
}

impl Stepper {
    pub fn new(cfg: &SimConfig) -> Self {
        Self::with_dt(cfg, cfg.dt())
    }

    pub fn with_dt(cfg: &SimConfig, dt: f64) -> Self {
        let p = &cfg.params;
        Self {
            kappa: p.kappa,
            theta: p.theta,
            gamma: p.gamma,
            mu: p.mu,
            rho: p.rho,
            rho_bar: (1.0 - p.rho * p.rho).max(0.0).sqrt(),
            dt,
            sqrt_dt: dt.sqrt(),
            scheme: cfg.scheme,
        }
    }

    /// Brownian increments `(dW^s, dW^v)` from two independent normals.
    #[inline]
    pub fn increments(&self, z1: f64, z2: f64) -> (f64, f64) {
        let dws = self.sqrt_dt * z1;
        (dws, self.rho * dws + self.rho_bar * self.sqrt_dt * z2)
    }

    /// Advances `s` by one step of length `dt` given Brownian increments.
    #[inline]
    pub fn step_with(&self, s: &mut State, dws: f64, dwv: f64, dt: f64) {
        let v = s.v();
        s.truncated += u64::from(s.v_aux < 0.0);
        let r = s.r;
        let vdt = v * dt;
        s.qv += vdt;
        s.tv += 2.0 * r * vdt;
        s.fv += 4.0 * r * r * vdt;
        let sv = v.sqrt();
        s.r = r + self.mu * dt + sv * dws;
        s.v_aux = match self.scheme {
            Scheme::FullTruncationEuler => s.v_aux + self.kappa * (self.theta - v) * dt + self.gamma * sv * dwv,
            Scheme::ReflectionEuler => (v + self.kappa * (self.theta - v) * dt + self.gamma * sv * dwv).abs(),
        };
    }

    #[inline]
    pub fn step(&self, s: &mut State, rng: &mut PathRng) {
        let z1: f64 = StandardNormal.sample(rng);
        let z2: f64 = StandardNormal.sample(rng);
        let (dws, dwv) = self.increments(z1, z2);
        self.step_with(s, dws, dwv, self.dt);
    }
}

pub(crate) type PathRng = Xoshiro256PlusPlus;

/// Generator of path `path_index`. The seed is scrambled once and combined
/// injectively with the path index; the generator state is then expanded
/// from that word by SplitMix64.
pub(crate) fn path_rng(seed: u64, path_index: u64) -> PathRng {
    let key = SplitMix64::seed_from_u64(seed).next_u64();
    Xoshiro256PlusPlus::seed_from_u64(key ^ path_index)
}

/// Full trajectory of one simulated path at every Euler step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    pub qv: Vec<f64>,
    pub tv: Vec<f64>,
    pub fv: Vec<f64>,
    /// Steps at which the scheme state was negative before flooring.
    pub truncated_steps: u64,
}

impl PathRecord {
    fn with_capacity(n: usize) -> Self {
        Self {
            times: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            v: Vec::with_capacity(n),
            qv: Vec::with_capacity(n),
            tv: Vec::with_capacity(n),
            fv: Vec::with_capacity(n),
            truncated_steps: 0,
        }
    }

    fn push(&mut self, t: f64, s: &State) {
        self.times.push(t);
        self.r.push(s.r);
        self.v.push(s.v());
        self.qv.push(s.qv);
        self.tv.push(s.tv);
        self.fv.push(s.fv);
    }
}

/// Simulates full path records. Memory grows with `n_paths * n_steps`; use
/// [`simulate_terminals`] for large Monte Carlo runs.
pub fn simulate_paths(cfg: &SimConfig) -> Result<Vec<PathRecord>, SimError> {
    cfg.validate()?;
    let stepper = Stepper::new(cfg);
    let n_steps = cfg.n_steps();
    let dt = cfg.dt();
    let records = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut s = State::start(cfg.params.v0);
            let mut rec = PathRecord::with_capacity(n_steps + 1);
            rec.push(0.0, &s);
            for k in 1..=n_steps {
                stepper.step(&mut s, &mut rng);
                rec.push(k as f64 * dt, &s);
            }
            rec.truncated_steps = s.truncated;
            rec
        })
        .collect();
    Ok(records)
}

/// Values of one path at the horizon.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Terminal {
    pub r: f64,
    pub v: f64,
    pub qv: f64,
    pub tv: f64,
    pub fv: f64,
    pub truncated_steps: u64,
}

fn simulate_terminal(cfg: &SimConfig, stepper: &Stepper, n_steps: usize, path_index: u64) -> Terminal {
    let mut rng = path_rng(cfg.seed, path_index);
    let mut s = State::start(cfg.params.v0);
    for _ in 0..n_steps {
        stepper.step(&mut s, &mut rng);
    }
    Terminal {
        r: s.r,
        v: s.v(),
        qv: s.qv,
        tv: s.tv,
        fv: s.fv,
        truncated_steps: s.truncated,
    }
}

/// Simulates all paths keeping only terminal values, in path-index order.
pub fn simulate_terminals(cfg: &SimConfig) -> Result<TerminalSet, SimError> {
    cfg.validate()?;
    let stepper = Stepper::new(cfg);
    let n_steps = cfg.n_steps();
    let terminals = (0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| simulate_terminal(cfg, &stepper, n_steps, i))
        .collect();
    Ok(TerminalSet::new(terminals, n_steps))
}

/// Residuals of the pathwise Itô identities on a fine grid and on the grid
/// with every pair of fine steps merged, driven by the same Brownian path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdentityResiduals {
    /// `R^3 - 3 sum R^2 dR - 1.5 tv` on the fine grid.
    pub third_fine: f64,
    pub third_coarse: f64,
    /// `R^4 - 4 sum R^3 dR - 1.5 fv` on the fine grid.
    pub fourth_fine: f64,
    pub fourth_coarse: f64,
}

#[derive(Clone, Copy, Default)]
struct IdentityTrack {
    s: State,
    sum_r2_dr: f64,
    sum_r3_dr: f64,
}

impl IdentityTrack {
    fn advance(&mut self, stepper: &Stepper, dws: f64, dwv: f64, dt: f64) {
        let r = self.s.r;
        stepper.step_with(&mut self.s, dws, dwv, dt);
        let dr = self.s.r - r;
        self.sum_r2_dr += r * r * dr;
        self.sum_r3_dr += r * r * r * dr;
    }

    fn residuals(&self) -> (f64, f64) {
        let r = self.s.r;
        (
            r * r * r - 3.0 * self.sum_r2_dr - 1.5 * self.s.tv,
            r * r * r * r - 4.0 * self.sum_r3_dr - 1.5 * self.s.fv,
        )
    }
}

/// Computes coupled identity residuals for every path. The fine grid uses
/// `cfg.steps_per_day`, which must be even.
pub fn identity_residuals(cfg: &SimConfig) -> Result<Vec<IdentityResiduals>, SimError> {
    cfg.validate()?;
    cfg.params.require_martingale()?;
    let n_steps = cfg.n_steps();
    if n_steps % 2 != 0 {
        return Err(SimError::InvalidConfig(format!(
            "coupled residuals need an even step count, got {n_steps}"
        )));
    }
    let dt = cfg.dt();
    let stepper = Stepper::new(cfg);
    Ok((0..cfg.n_paths as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = path_rng(cfg.seed, i);
            let mut fine = IdentityTrack {
                s: State::start(cfg.params.v0),
                ..Default::default()
            };
            let mut coarse = fine;
            for _ in 0..n_steps / 2 {
                let mut sum = (0.0, 0.0);
                for _ in 0..2 {
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    let z2: f64 = StandardNormal.sample(&mut rng);
                    let (dws, dwv) = stepper.increments(z1, z2);
                    fine.advance(&stepper, dws, dwv, dt);
                    sum.0 += dws;
                    sum.1 += dwv;
                }
                coarse.advance(&stepper, sum.0, sum.1, 2.0 * dt);
            }
            let (third_fine, fourth_fine) = fine.residuals();
            let (third_coarse, fourth_coarse) = coarse.residuals();
            IdentityResiduals {
                third_fine,
                third_coarse,
                fourth_fine,
                fourth_coarse,
            }
        })
        .collect())
}
