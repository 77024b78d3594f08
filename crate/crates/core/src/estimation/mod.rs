//! Parameter estimation from daily realized moment panels: the simple
//! sample-average estimator and two-step GMM.

mod arma;
mod gmm;
mod hac;
pub mod optim;
mod report;

pub use arma::{css, fit_arma11, ArmaFit, ARMA_BOUND, ARMA_MIN_LEN};
pub use gmm::{gmm_estimate, gmm_moment_matrix, gmm_moment_vector, gmm_objective, GmmOptions, GMM_MIN_DAYS};
pub use hac::{hac_covariance, hac_lag};
pub use report::{Diagnostics, EstimationReport, Method, StdErrors};

use thiserror::Error;

use crate::model::{HestonParams, ModelError};
use crate::realized::DailyMomentPanel;
use crate::scalar::exp_tail;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimationError {
    #[error("empty panel")]
    EmptyPanel,
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid observation interval {0}")]
    InvalidDelta(f64),
    #[error("non-finite values in {0}")]
    NonFinite(&'static str),
    #[error("degenerate data: {0}")]
    Degenerate(&'static str),
    #[error("AR coefficient {0} is not in (0, 1); kappa cannot be recovered")]
    NonPositiveAr(f64),
    #[error("negative variance of realized variance estimate: {0}")]
    NegativeQvVariance(f64),
    #[error("zero denominator in the {0} estimator")]
    ZeroDenominator(&'static str),
    #[error("{what} did not converge; last iterate {last:?}")]
    NotConverged { what: &'static str, last: Vec<f64> },
    #[error("optimizer failure: {0}")]
    Optimizer(String),
    #[error("GMM window needs {needed} rows, got {got}")]
    Window { needed: usize, got: usize },
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        source: Box<EstimationError>,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl EstimationError {
    fn at(self, stage: &'static str) -> Self {
        EstimationError::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

fn check_delta(delta: f64) -> Result<(), EstimationError> {
    if delta.is_finite() && delta > 0.0 {
        Ok(())
    } else {
        Err(EstimationError::InvalidDelta(delta))
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `mean(rv) / delta`.
pub fn estimate_theta(panel: &DailyMomentPanel<f64>, delta: f64) -> Result<f64, EstimationError> {
    check_delta(delta)?;
    if panel.is_empty() {
        return Err(EstimationError::EmptyPanel);
    }
    Ok(mean(&panel.rv()) / delta)
}

/// `-ln(ar) / delta`.
pub fn kappa_from_ar(ar: f64, delta: f64) -> Result<f64, EstimationError> {
    check_delta(delta)?;
    if !(ar > 0.0 && ar < 1.0) {
        return Err(EstimationError::NonPositiveAr(ar));
    }
    Ok(-ar.ln() / delta)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub fit: ArmaFit,
}

/// Mean-reversion speed from the AR coefficient of an ARMA(1,1) fitted to
/// the realized variance series.
pub fn estimate_kappa(panel: &DailyMomentPanel<f64>, delta: f64) -> Result<KappaEstimate, EstimationError> {
    check_delta(delta)?;
    let fit = fit_arma11(&panel.rv())?;
    Ok(KappaEstimate {
        kappa: kappa_from_ar(fit.ar, delta)?,
        fit,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GammaEstimate {
    pub gamma: f64,
    pub warning: Option<String>,
}

/// Relative size, against `theta^2 delta^2`, below which the numerator of
/// the gamma estimator is treated as zero.
const GAMMA_ZERO_TOL: f64 = 1e-12;

/// Matches the sample mean of squared realized variance to its stationary
/// expectation `theta^2 delta^2 + (gamma^2 theta / kappa^2)(e^{-kappa delta}/kappa + delta - 1/kappa)`.
pub fn estimate_gamma(
    panel: &DailyMomentPanel<f64>,
    delta: f64,
    theta: f64,
    kappa: f64,
) -> Result<GammaEstimate, EstimationError> {
    check_delta(delta)?;
    if panel.is_empty() {
        return Err(EstimationError::EmptyPanel);
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(ModelError::Domain {
            name: "kappa",
            value: kappa,
        }
        .into());
    }
    let rv = panel.rv();
    let second = rv.iter().map(|x| x * x).sum::<f64>() / rv.len() as f64;
    let base = theta * theta * delta * delta;
    let numerator = second - base;
    // (theta / kappa^2)(e^{-x}/kappa + delta - 1/kappa) = theta delta^2 R_2(x) / kappa
    let denominator = theta * delta * delta * exp_tail(2, kappa * delta) / kappa;
    if numerator.abs() <= GAMMA_ZERO_TOL * base {
        return Ok(GammaEstimate {
            gamma: 0.0,
            warning: Some("second moment of realized variance matches theta^2 delta^2; gamma set to 0".into()),
        });
    }
    if numerator < 0.0 {
        return Err(EstimationError::NegativeQvVariance(numerator));
    }
    if denominator <= 0.0 {
        return Err(EstimationError::ZeroDenominator("gamma"));
    }
    Ok(GammaEstimate {
        gamma: (numerator / denominator).sqrt(),
        warning: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RhoEstimate {
    /// Estimate clamped to `[-1, 1]`.
    pub rho: f64,
    /// Unclamped ratio.
    pub raw: f64,
    pub clamped: bool,
}

/// Matches the sample mean of the third variation to its stationary
/// expectation `(2 gamma rho theta / kappa)((e^{-kappa delta} - 1)/kappa + delta)`.
pub fn estimate_rho(
    panel: &DailyMomentPanel<f64>,
    delta: f64,
    theta: f64,
    kappa: f64,
    gamma: f64,
) -> Result<RhoEstimate, EstimationError> {
    check_delta(delta)?;
    if panel.is_empty() {
        return Err(EstimationError::EmptyPanel);
    }
    // (2 gamma theta / kappa)((e^{-x} - 1)/kappa + delta) = 2 gamma theta delta^2 R_2(x)
    let denominator = 2.0 * gamma * theta * delta * delta * exp_tail(2, kappa * delta);
    if denominator == 0.0 || !denominator.is_finite() {
        return Err(EstimationError::ZeroDenominator("rho"));
    }
    let raw = mean(&panel.tv()) / denominator;
    let rho = raw.clamp(-1.0, 1.0);
    Ok(RhoEstimate {
        rho,
        raw,
        clamped: rho != raw,
    })
}

/// Runs theta, kappa, gamma and rho estimation in sequence.
///
/// A panel whose realized variance does not vary at all has no
/// identifiable mean reversion or leverage: the report then carries
/// `theta`, `gamma = 0`, `kappa = rho = NaN` and the `degenerate` flag.
pub fn simple_estimate(panel: &DailyMomentPanel<f64>, delta: f64) -> Result<EstimationReport, EstimationError> {
    let theta = estimate_theta(panel, delta).map_err(|e| e.at("theta"))?;
    let mut warnings = Vec::new();
    let mut diagnostics = Diagnostics::default();

    let kappa = match estimate_kappa(panel, delta) {
        Ok(k) => {
            diagnostics.arma_ar = Some(k.fit.ar);
            diagnostics.arma_ma = Some(k.fit.ma);
            if k.fit.at_boundary {
                warnings.push(format!(
                    "ARMA coefficients at the search bound (ar {}, ma {})",
                    k.fit.ar, k.fit.ma
                ));
            }
            k.kappa
        }
        Err(EstimationError::Degenerate(_)) => {
            warnings.push("realized variance is constant; kappa and rho are not identified".into());
            diagnostics.degenerate = true;
            let params = HestonParams {
                kappa: f64::NAN,
                theta,
                gamma: 0.0,
                rho: f64::NAN,
                mu: 0.0,
                v0: theta,
            };
            return Ok(EstimationReport::new(Method::Simple, params, panel.len(), delta, diagnostics, warnings));
        }
        Err(e) => return Err(e.at("kappa")),
    };

    let gamma = estimate_gamma(panel, delta, theta, kappa).map_err(|e| e.at("gamma"))?;
    warnings.extend(gamma.warning.clone());
    let rho = if gamma.gamma == 0.0 {
        warnings.push("gamma is 0; rho is not identified and set to 0".into());
        0.0
    } else {
        let r = estimate_rho(panel, delta, theta, kappa, gamma.gamma).map_err(|e| e.at("rho"))?;
        if r.clamped {
            warnings.push(format!("rho estimate {} clamped to [-1, 1]", r.raw));
            diagnostics.rho_clamped = true;
            diagnostics.raw_rho = Some(r.raw);
        }
        r.rho
    };
    let params = HestonParams::new(kappa, theta, gamma.gamma, rho);
    params.validate().map_err(|e| EstimationError::from(e).at("validate"))?;
    Ok(EstimationReport::new(Method::Simple, params, panel.len(), delta, diagnostics, warnings))
}
