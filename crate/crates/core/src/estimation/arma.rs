//! Conditional-sum-of-squares fit of a demeaned ARMA(1,1).

use serde::{Deserialize, Serialize};

use super::optim::{minimize, SimplexOptions};
use super::EstimationError;

/// Minimum series length accepted by [`fit_arma11`].
pub const ARMA_MIN_LEN: usize = 50;
/// Coefficients are searched on `(-ARMA_BOUND, ARMA_BOUND)`.
pub const ARMA_BOUND: f64 = 0.999;
/// An estimate this close to the bound is flagged.
const BOUNDARY_FLAG: f64 = 0.998;

/// `y_i - mean = ar (y_{i-1} - mean) + n_i + ma n_{i-1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmaFit {
    pub ar: f64,
    pub ma: f64,
    /// Sample mean removed before fitting.
    pub intercept: f64,
    pub innovation_variance: f64,
    /// Gaussian conditional log-likelihood at the fitted coefficients.
    pub log_likelihood: f64,
    pub n_obs: usize,
    /// Either coefficient ended next to the search bound.
    pub at_boundary: bool,
    pub converged: bool,
}

/// Innovations `n_i = y_i - ar y_{i-1} - ma n_{i-1}` for `i >= 1`, `n_0 = 0`,
/// returning their sum of squares.
pub fn css(y: &[f64], ar: f64, ma: f64) -> f64 {
    let mut prev = 0.0;
    let mut ss = 0.0;
    for w in y.windows(2) {
        let n = w[1] - ar * w[0] - ma * prev;
        ss += n * n;
        prev = n;
    }
    ss
}

fn to_coef(u: f64) -> f64 {
    ARMA_BOUND * u.tanh()
}

fn to_free(c: f64) -> f64 {
    (c / ARMA_BOUND).clamp(-0.9999, 0.9999).atanh()
}

pub fn fit_arma11(series: &[f64]) -> Result<ArmaFit, EstimationError> {
    if series.len() < ARMA_MIN_LEN {
        return Err(EstimationError::InsufficientData {
            needed: ARMA_MIN_LEN,
            got: series.len(),
        });
    }
    if series.iter().any(|x| !x.is_finite()) {
        return Err(EstimationError::NonFinite("ARMA input series"));
    }
    let n = series.len() as f64;
    let mean = series.iter().sum::<f64>() / n;
    let y: Vec<f64> = series.iter().map(|x| x - mean).collect();
    let ss0: f64 = y.iter().map(|v| v * v).sum();
    // coefficient of variation below 1e-10 counts as constant
    if ss0 <= 1e-20 * mean * mean * n {
        return Err(EstimationError::Degenerate("ARMA input series has no variation"));
    }
    let lag1 = y.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / ss0;

    let objective = |u: &[f64]| css(&y, to_coef(u[0]), to_coef(u[1]));
    let opts = SimplexOptions::default();
    let starts = [(lag1, 0.0), (0.9, -0.5), (0.5, 0.0), (-0.5, 0.3)];
    let mut best = None;
    for (a0, b0) in starts {
        let m = minimize(&objective, &[to_free(a0), to_free(b0)], &[0.3, 0.3], opts)
            .map_err(|e| EstimationError::Optimizer(e.to_string()))?;
        if best.as_ref().is_none_or(|b: &super::optim::Minimum| m.value < b.value) {
            best = Some(m);
        }
    }
    let best = best.expect("at least one start");
    let (ar, ma) = (to_coef(best.x[0]), to_coef(best.x[1]));
    if !best.converged {
        return Err(EstimationError::NotConverged {
            what: "ARMA(1,1) fit",
            last: vec![ar, ma],
        });
    }
    let m = (series.len() - 1) as f64;
    let sigma2 = best.value / m;
    Ok(ArmaFit {
        ar,
        ma,
        intercept: mean,
        innovation_variance: sigma2,
        log_likelihood: -0.5 * m * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0),
        n_obs: series.len(),
        at_boundary: ar.abs() > BOUNDARY_FLAG || ma.abs() > BOUNDARY_FLAG,
        converged: best.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    use rand_xoshiro::Xoshiro256PlusPlus;

    fn arma_series(a: f64, b: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut y = Vec::with_capacity(n);
        let (mut prev_y, mut prev_e) = (0.0, 0.0);
        for _ in 0..n + 200 {
            let e: f64 = StandardNormal.sample(&mut rng);
            let v = a * prev_y + e + b * prev_e;
            y.push(v + 3.0);
            prev_y = v;
            prev_e = e;
        }
        y.split_off(200)
    }

    #[test]
    fn recovers_ar1() {
        let fit = fit_arma11(&arma_series(0.9, 0.0, 10_000, 1)).unwrap();
        assert!((fit.ar - 0.9).abs() < 0.03, "{fit:?}");
        assert!(fit.ma.abs() < 0.05);
        assert!((fit.innovation_variance - 1.0).abs() < 0.05);
        assert!((fit.intercept - 3.0).abs() < 0.2);
    }

    #[test]
    fn recovers_arma11() {
        let fit = fit_arma11(&arma_series(0.95, -0.6, 20_000, 2)).unwrap();
        assert!((fit.ar - 0.95).abs() < 0.02, "{fit:?}");
        assert!((fit.ma + 0.6).abs() < 0.05, "{fit:?}");
    }

    #[test]
    fn white_noise_has_no_persistence() {
        let y = arma_series(0.0, 0.0, 5_000, 3);
        let fit = fit_arma11(&y).unwrap();
        // a and b are weakly identified when both are zero; the implied
        // first autocorrelation must still be close to zero
        let rho1 = (fit.ar + fit.ma) * (1.0 + fit.ar * fit.ma) / (1.0 + 2.0 * fit.ar * fit.ma + fit.ma * fit.ma);
        assert!(rho1.abs() < 2.0 * 2.0 / (5_000f64).sqrt(), "{fit:?}");
    }

    #[test]
    fn errors() {
        assert!(matches!(
            fit_arma11(&[1.0; 10]),
            Err(EstimationError::InsufficientData { needed: 50, got: 10 })
        ));
        assert!(matches!(fit_arma11(&[2.0; 60]), Err(EstimationError::Degenerate(_))));
    }

    #[test]
    fn css_matches_hand_recursion() {
        let y = [1.0, 2.0, -1.0];
        // n1 = 2 - 0.5, n2 = -1 - 1.0 - 0.25 * 1.5
        let expect = 1.5f64.powi(2) + (-1.0 - 1.0 - 0.375f64).powi(2);
        assert!((css(&y, 0.5, 0.25) - expect).abs() < 1e-15);
    }
}
