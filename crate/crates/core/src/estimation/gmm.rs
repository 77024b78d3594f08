//! Two-step GMM on the conditional moment recursions of realized variance,
//! third variation and squared realized variance.

use log::warn;
use nalgebra::{DMatrix, DVector};

use super::hac::{hac_covariance, hac_lag};
use super::optim::{minimize, SimplexOptions};
use super::report::{Diagnostics, EstimationReport, Method, StdErrors};
use super::EstimationError;
use crate::model::{gmm_constants, GmmConstants, HestonParams};
use crate::realized::{DailyMomentPanel, DailyMoments};

/// Minimum panel length accepted by [`gmm_estimate`].
pub const GMM_MIN_DAYS: usize = 100;
const N_MOMENTS: usize = 6;
/// Rows consumed by one moment vector: two lags, the current and the next day.
const WINDOW: usize = 4;

#[derive(Clone, Copy, Debug)]
pub struct GmmOptions {
    pub simplex: SimplexOptions,
    /// Relative step of the central-difference Jacobian.
    pub jacobian_step: f64,
    /// Diagonal ridge added to the standardized long-run covariance when it
    /// is not positive definite.
    pub ridge: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self {
            simplex: SimplexOptions {
                rel_tol: 1e-10,
                max_iters: 4000,
                restarts: 3,
            },
            jacobian_step: 1e-5,
            ridge: 1e-10,
        }
    }
}

fn moments_at(c: &GmmConstants<f64>, lag2: &Obs, lag1: &Obs, cur: &Obs, next: &Obs) -> [f64; N_MOMENTS] {
    let e_rv = next.rv - c.a * cur.rv - c.b * c.delta;
    let e_tv = next.tv - c.a * cur.tv - c.third_variation_intercept();
    let e_sq = next.rv * next.rv - c.c * cur.rv * cur.rv - c.big_f * cur.rv - c.big_g;
    [e_rv, e_rv * lag1.rv, e_rv * lag2.rv, e_tv, e_tv * lag1.tv, e_sq]
}

#[derive(Clone, Copy)]
struct Obs {
    rv: f64,
    tv: f64,
}

impl From<&DailyMoments<f64>> for Obs {
    fn from(d: &DailyMoments<f64>) -> Self {
        Obs { rv: d.rv, tv: d.tv }
    }
}

/// Moment vector for one window of four consecutive days
/// `[i-2, i-1, i, i+1]`:
///
/// 1. `rv_{i+1} - a rv_i - (1 - a) theta delta`
/// 2. (1) times `rv_{i-1}`
/// 3. (1) times `rv_{i-2}`
/// 4. `tv_{i+1} - a tv_i + a beta3 - alpha3 b - beta3`
/// 5. (4) times `tv_{i-1}`
/// 6. `rv_{i+1}^2 - c rv_i^2 - F rv_i - G`
pub fn gmm_moment_vector(
    eta: &HestonParams<f64>,
    window: &[DailyMoments<f64>],
    delta: f64,
) -> Result<[f64; N_MOMENTS], EstimationError> {
    if window.len() != WINDOW {
        return Err(EstimationError::Window {
            needed: WINDOW,
            got: window.len(),
        });
    }
    let c = gmm_constants(eta, delta)?;
    let o: Vec<Obs> = window.iter().map(Obs::from).collect();
    Ok(moments_at(&c, &o[0], &o[1], &o[2], &o[3]))
}

struct Sample {
    obs: Vec<Obs>,
    delta: f64,
}

impl Sample {
    fn new(panel: &DailyMomentPanel<f64>, delta: f64) -> Result<Self, EstimationError> {
        if panel.len() < WINDOW {
            return Err(EstimationError::Window {
                needed: WINDOW,
                got: panel.len(),
            });
        }
        let obs: Vec<Obs> = panel.rows().iter().map(Obs::from).collect();
        if obs.iter().any(|o| !(o.rv.is_finite() && o.tv.is_finite())) {
            return Err(EstimationError::NonFinite("panel"));
        }
        Ok(Self { obs, delta })
    }

    fn n(&self) -> usize {
        self.obs.len() - (WINDOW - 1)
    }

    fn for_each(&self, eta: &HestonParams<f64>, mut f: impl FnMut(usize, [f64; N_MOMENTS])) -> Result<(), EstimationError> {
        let c = gmm_constants(eta, self.delta)?;
        for (i, w) in self.obs.windows(WINDOW).enumerate() {
            f(i, moments_at(&c, &w[0], &w[1], &w[2], &w[3]));
        }
        Ok(())
    }

    fn mean(&self, eta: &HestonParams<f64>) -> Result<DVector<f64>, EstimationError> {
        let mut acc = [0.0; N_MOMENTS];
        self.for_each(eta, |_, g| {
            for (a, x) in acc.iter_mut().zip(g) {
                *a += x;
            }
        })?;
        let n = self.n() as f64;
        Ok(DVector::from_iterator(N_MOMENTS, acc.iter().map(|a| a / n)))
    }

    fn matrix(&self, eta: &HestonParams<f64>) -> Result<DMatrix<f64>, EstimationError> {
        let mut m = DMatrix::zeros(self.n(), N_MOMENTS);
        self.for_each(eta, |i, g| {
            for (j, x) in g.into_iter().enumerate() {
                m[(i, j)] = x;
            }
        })?;
        Ok(m)
    }

    fn objective(&self, eta: &HestonParams<f64>, w: Option<&DMatrix<f64>>) -> f64 {
        match self.mean(eta) {
            Ok(g) => match w {
                Some(w) => (g.transpose() * w * &g)[(0, 0)],
                None => g.norm_squared(),
            },
            Err(_) => f64::NAN,
        }
    }
}

/// All moment vectors of the panel, one row per window (`M - 3` rows).
pub fn gmm_moment_matrix(
    eta: &HestonParams<f64>,
    panel: &DailyMomentPanel<f64>,
    delta: f64,
) -> Result<DMatrix<f64>, EstimationError> {
    Sample::new(panel, delta)?.matrix(eta)
}

/// `g_bar' W g_bar` with `g_bar` the mean moment vector; identity weight when
/// `weight` is `None`.
pub fn gmm_objective(
    eta: &HestonParams<f64>,
    panel: &DailyMomentPanel<f64>,
    delta: f64,
    weight: Option<&DMatrix<f64>>,
) -> Result<f64, EstimationError> {
    let s = Sample::new(panel, delta)?;
    let g = s.mean(eta)?;
    Ok(match weight {
        Some(w) => (g.transpose() * w * &g)[(0, 0)],
        None => g.norm_squared(),
    })
}

fn to_free(p: &HestonParams<f64>) -> [f64; 4] {
    [
        p.kappa.ln(),
        p.theta.ln(),
        p.gamma.ln(),
        p.rho.clamp(-0.995, 0.995).atanh(),
    ]
}

fn from_free(u: &[f64]) -> HestonParams<f64> {
    HestonParams::new(u[0].exp(), u[1].exp(), u[2].exp(), u[3].tanh())
}

/// Inverse of a long-run covariance through its correlation form
/// `S = D R D`, so that moments of very different magnitudes do not spoil
/// the factorization.
fn weight_from_covariance(s: &DMatrix<f64>, ridge: f64, warnings: &mut Vec<String>) -> Result<DMatrix<f64>, EstimationError> {
    let k = s.nrows();
    let mut d = DVector::from_iterator(k, (0..k).map(|i| s[(i, i)].max(0.0).sqrt()));
    for i in 0..k {
        if d[i] == 0.0 || !d[i].is_finite() {
            warnings.push(format!("moment {} has zero long-run variance", i + 1));
            d[i] = f64::MIN_POSITIVE.sqrt();
        }
    }
    let mut r = DMatrix::from_fn(k, k, |i, j| s[(i, j)] / (d[i] * d[j]));
    let chol = match r.clone().cholesky() {
        Some(c) => c,
        None => {
            warnings.push(format!("long-run covariance not positive definite; ridge {ridge} added"));
            for i in 0..k {
                r[(i, i)] += ridge;
            }
            r.cholesky().ok_or(EstimationError::Degenerate("long-run covariance of moments is singular"))?
        }
    };
    let r_inv = chol.inverse();
    Ok(DMatrix::from_fn(k, k, |i, j| r_inv[(i, j)] / (d[i] * d[j])))
}

/// Central-difference Jacobian of the mean moment vector with respect to
/// `(kappa, theta, gamma, rho)`.
fn jacobian(s: &Sample, eta: &HestonParams<f64>, rel_step: f64) -> Result<DMatrix<f64>, EstimationError> {
    let base = [eta.kappa, eta.theta, eta.gamma, eta.rho];
    let mut jac = DMatrix::zeros(N_MOMENTS, 4);
    for j in 0..4 {
        let mut h = rel_step * base[j].abs().max(1e-3);
        if j == 3 {
            h = h.min(0.5 * (1.0 - eta.rho.abs())).max(f64::EPSILON);
        }
        let shifted = |sign: f64| {
            let mut x = base;
            x[j] += sign * h;
            HestonParams::new(x[0], x[1], x[2], x[3])
        };
        let up = s.mean(&shifted(1.0))?;
        let down = s.mean(&shifted(-1.0))?;
        jac.set_column(j, &((up - down) / (2.0 * h)));
    }
    Ok(jac)
}

/// Two-step GMM from `start`: identity weight first, then the inverse
/// Bartlett HAC covariance of the moments at the first-step optimum.
/// Non-convergence is reported through `diagnostics.converged`.
pub fn gmm_estimate(
    panel: &DailyMomentPanel<f64>,
    delta: f64,
    start: &HestonParams<f64>,
    opts: GmmOptions,
) -> Result<EstimationReport, EstimationError> {
    super::check_delta(delta)?;
    if panel.len() < GMM_MIN_DAYS {
        return Err(EstimationError::InsufficientData {
            needed: GMM_MIN_DAYS,
            got: panel.len(),
        });
    }
    start.validate()?;
    let mut warnings = Vec::new();
    let start = if start.gamma > 0.0 {
        *start
    } else {
        warnings.push("start gamma is 0; search starts from gamma = 0.01".into());
        HestonParams { gamma: 0.01, ..*start }
    };
    let sample = Sample::new(panel, delta)?;
    let steps = [0.3, 0.2, 0.3, 0.3];
    let optimizer = |e: argmin::core::Error| EstimationError::Optimizer(e.to_string());

    let obj1 = |u: &[f64]| sample.objective(&from_free(u), None);
    let step1 = minimize(&obj1, &to_free(&start), &steps, opts.simplex).map_err(optimizer)?;
    let eta1 = from_free(&step1.x);

    let lag = hac_lag(panel.len());
    let s_hat = hac_covariance(&sample.matrix(&eta1)?, lag);
    let w = weight_from_covariance(&s_hat, opts.ridge, &mut warnings)?;
    let obj2 = |u: &[f64]| sample.objective(&from_free(u), Some(&w));
    let step2 = minimize(&obj2, &step1.x, &steps, opts.simplex).map_err(optimizer)?;
    let eta = from_free(&step2.x);
    let converged = step1.converged && step2.converged;
    if !converged {
        warnings.push("GMM search stopped at the iteration limit".into());
    }

    let std_errors = {
        let g = jacobian(&sample, &eta, opts.jacobian_step)?;
        let gwg = g.transpose() * &w * &g;
        match gwg.clone().try_inverse() {
            Some(bread) => {
                let meat = g.transpose() * &w * &s_hat * &w * &g;
                let cov = &bread * meat * &bread / sample.n() as f64;
                let se = |i: usize| cov[(i, i)].max(0.0).sqrt();
                Some(StdErrors {
                    kappa: se(0),
                    theta: se(1),
                    gamma_squared: 2.0 * eta.gamma * se(2),
                    rho: se(3),
                })
            }
            None => {
                warnings.push("moment Jacobian is rank deficient; standard errors unavailable".into());
                None
            }
        }
    };

    for w in &warnings {
        warn!("{w}");
    }
    let diagnostics = Diagnostics {
        objective_step1: Some(step1.value),
        objective_step2_start: Some(sample.objective(&eta1, Some(&w))),
        objective: Some(step2.value),
        iterations: Some(step1.iterations + step2.iterations),
        converged: Some(converged),
        hac_lag: Some(lag),
        ..Diagnostics::default()
    };
    let mut report = EstimationReport::new(Method::Gmm, eta, panel.len(), delta, diagnostics, warnings);
    report.std_errors = std_errors;
    report.start = Some(start);
    Ok(report)
}
