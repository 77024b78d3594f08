use serde::{Deserialize, Serialize};

use super::{simulate_terminals, SimConfig, SimError, Terminal};

/// Functions of the terminal state of a path.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    R3,
    R4,
    Qv,
    Qv2,
    Tv,
    Fv,
    Tv15,
    Fv15,
    /// `R_t V_t`.
    RvAtT,
    /// `R_t^2 V_t`.
    R2vAtT,
    V,
    V2,
    /// `V_t [R]_t`.
    VQv,
    /// `R_t^3 - 1.5 [R, R^2]_t`.
    BiasThird,
    /// `R_t^4 - 1.5 [R^2]_t`.
    BiasFourth,
}

impl Functional {
    pub fn eval(self, s: &Terminal) -> f64 {
        match self {
            Functional::R3 => s.r.powi(3),
            Functional::R4 => s.r.powi(4),
            Functional::Qv => s.qv,
            Functional::Qv2 => s.qv * s.qv,
            Functional::Tv => s.tv,
            Functional::Fv => s.fv,
            Functional::Tv15 => 1.5 * s.tv,
            Functional::Fv15 => 1.5 * s.fv,
            Functional::RvAtT => s.r * s.v,
            Functional::R2vAtT => s.r * s.r * s.v,
            Functional::V => s.v,
            Functional::V2 => s.v * s.v,
            Functional::VQv => s.v * s.qv,
            Functional::BiasThird => s.r.powi(3) - 1.5 * s.tv,
            Functional::BiasFourth => s.r.powi(4) - 1.5 * s.fv,
        }
    }
}

/// Monte Carlo sample mean with standard error `sample_std / sqrt(n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub n: usize,
}

impl MomentEstimate {
    pub fn from_sample(xs: &[f64]) -> Self {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
        } else {
            0.0
        };
        Self {
            estimate: mean,
            std_error: (var / n as f64).sqrt(),
            n,
        }
    }

    /// Distance to `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        (self.estimate - target) / self.std_error
    }
}

/// Terminal values of all simulated paths, in path-index order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalSet {
    terminals: Vec<Terminal>,
    n_steps: usize,
}

impl TerminalSet {
    pub(crate) fn new(terminals: Vec<Terminal>, n_steps: usize) -> Self {
        Self { terminals, n_steps }
    }

    pub fn terminals(&self) -> &[Terminal] {
        &self.terminals
    }

    pub fn values(&self, f: Functional) -> Vec<f64> {
        self.terminals.iter().map(|s| f.eval(s)).collect()
    }

    pub fn moment(&self, f: Functional) -> MomentEstimate {
        MomentEstimate::from_sample(&self.values(f))
    }

    /// Share of all Euler steps whose scheme state was negative.
    pub fn truncated_fraction(&self) -> f64 {
        let total: u64 = self.terminals.iter().map(|s| s.truncated_steps).sum();
        total as f64 / (self.n_steps as f64 * self.terminals.len() as f64)
    }

    /// Running mean and standard error over the first `n` paths for each
    /// checkpoint `n` (checkpoints beyond the sample size are skipped).
    pub fn running(&self, f: Functional, checkpoints: &[usize]) -> Vec<MomentEstimate> {
        let mut out = Vec::with_capacity(checkpoints.len());
        let mut sorted: Vec<usize> = checkpoints
            .iter()
            .copied()
            .filter(|&n| n >= 1 && n <= self.terminals.len())
            .collect();
        sorted.sort_unstable();
        sorted.dedup();
        // Welford accumulation
        let (mut mean, mut m2) = (0.0, 0.0);
        let mut next = sorted.iter().peekable();
        for (i, s) in self.terminals.iter().enumerate() {
            let x = f.eval(s);
            let n = (i + 1) as f64;
            let d = x - mean;
            mean += d / n;
            m2 += d * (x - mean);
            while next.peek() == Some(&&(i + 1)) {
                next.next();
                let var = if i > 0 { m2 / (n - 1.0) } else { 0.0 };
                out.push(MomentEstimate {
                    estimate: mean,
                    std_error: (var / n).sqrt(),
                    n: i + 1,
                });
            }
        }
        out
    }

    /// Sample variance of `f` with its delete-one jackknife standard error.
    pub fn variance_with_jackknife(&self, f: Functional) -> (f64, f64) {
        sample_variance_jackknife(&self.values(f))
    }
}

/// Sample variance (denominator `n - 1`) and the jackknife standard error of
/// that variance, using closed-form leave-one-out variances.
pub fn sample_variance_jackknife(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n < 3 {
        return (f64::NAN, f64::NAN);
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    let var = ss / (nf - 1.0);
    let loo = |x: f64| (ss - nf / (nf - 1.0) * (x - mean) * (x - mean)) / (nf - 2.0);
    let loo_mean = xs.iter().map(|&x| loo(x)).sum::<f64>() / nf;
    let spread: f64 = xs.iter().map(|&x| (loo(x) - loo_mean).powi(2)).sum();
    (var, ((nf - 1.0) / nf * spread).sqrt())
}

/// Simulates the configuration and estimates `E[f]`.
pub fn mc_moment(cfg: &SimConfig, f: Functional) -> Result<MomentEstimate, SimError> {
    Ok(simulate_terminals(cfg)?.moment(f))
}

/// Variance of the terminal third moment variation across paths, with
/// jackknife standard error.
pub fn mc_variance_third_variation(cfg: &SimConfig) -> Result<(f64, f64), SimError> {
    cfg.params.require_martingale()?;
    Ok(simulate_terminals(cfg)?.variance_with_jackknife(Functional::Tv))
}
