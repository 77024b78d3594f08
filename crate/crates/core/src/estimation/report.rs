use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::model::HestonParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Simple,
    Gmm,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Simple => "simple",
            Method::Gmm => "gmm",
        })
    }
}

/// Standard errors of the GMM estimates; the entry for gamma refers to
/// `gamma^2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StdErrors {
    pub kappa: f64,
    pub theta: f64,
    pub gamma_squared: f64,
    pub rho: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `2 kappa theta > gamma^2` at the estimates.
    pub feller: bool,
    pub arma_ar: Option<f64>,
    pub arma_ma: Option<f64>,
    /// GMM objective after the first (identity-weighted) step.
    pub objective_step1: Option<f64>,
    /// GMM objective of the second step evaluated at its starting point.
    pub objective_step2_start: Option<f64>,
    /// Final GMM objective.
    pub objective: Option<f64>,
    pub iterations: Option<u64>,
    pub converged: Option<bool>,
    pub hac_lag: Option<usize>,
    pub rho_clamped: bool,
    pub raw_rho: Option<f64>,
    /// The panel carried no information about some parameters.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub method: Method,
    /// Estimated parameters; `mu` is fixed at 0 and `v0` set to `theta`.
    pub estimates: HestonParams<f64>,
    pub std_errors: Option<StdErrors>,
    /// Starting point of the GMM search.
    pub start: Option<HestonParams<f64>>,
    pub diagnostics: Diagnostics,
    pub n_days: usize,
    pub delta: f64,
    pub warnings: Vec<String>,
}

impl EstimationReport {
    pub(crate) fn new(
        method: Method,
        estimates: HestonParams<f64>,
        n_days: usize,
        delta: f64,
        mut diagnostics: Diagnostics,
        warnings: Vec<String>,
    ) -> Self {
        diagnostics.feller = estimates.feller();
        Self {
            method,
            estimates,
            std_errors: None,
            start: None,
            diagnostics,
            n_days,
            delta,
            warnings,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let e = &self.estimates;
        let _ = writeln!(s, "method: {}", self.method);
        let _ = writeln!(s, "days: {}  delta: {}", self.n_days, self.delta);
        let se = self.std_errors;
        let row = |s: &mut String, name: &str, v: f64, err: Option<f64>| {
            let _ = match err {
                Some(err) => writeln!(s, "{name:<8}{v:>14.6}  ({err:.6})"),
                None => writeln!(s, "{name:<8}{v:>14.6}"),
            };
        };
        row(&mut s, "theta", e.theta, se.map(|x| x.theta));
        row(&mut s, "kappa", e.kappa, se.map(|x| x.kappa));
        row(&mut s, "gamma", e.gamma, se.map(|x| x.gamma_squared));
        row(&mut s, "rho", e.rho, se.map(|x| x.rho));
        if se.is_some() {
            let _ = writeln!(s, "(standard error for gamma refers to gamma^2)");
        }
        let d = &self.diagnostics;
        let _ = writeln!(s, "feller condition: {}", if d.feller { "satisfied" } else { "violated" });
        if let (Some(a), Some(b)) = (d.arma_ar, d.arma_ma) {
            let _ = writeln!(s, "arma(1,1): ar {a:.6}  ma {b:.6}");
        }
        if let Some(start) = &self.start {
            let _ = writeln!(
                s,
                "start: theta {:.6} kappa {:.6} gamma {:.6} rho {:.6}",
                start.theta, start.kappa, start.gamma, start.rho
            );
        }
        if let Some(q) = d.objective {
            let _ = writeln!(s, "objective: {q:.6e}");
        }
        if let (Some(it), Some(c)) = (d.iterations, d.converged) {
            let _ = writeln!(s, "iterations: {it}  converged: {c}");
        }
        for w in &self.warnings {
            let _ = writeln!(s, "warning: {w}");
        }
        s
    }
}
