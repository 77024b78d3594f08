//! Derivative-free minimization on top of argmin's Nelder-Mead solver.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;

/// Stand-in cost for points where the objective is not finite, so the
/// simplex moves away from them.
const PENALTY: f64 = 1e300;

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: u64,
    pub converged: bool,
}

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Stop when the standard deviation of the simplex values, relative to
    /// the objective at the starting point, falls below this.
    pub rel_tol: f64,
    pub max_iters: u64,
    /// Number of times the search is restarted from the best point with a
    /// fresh simplex.
    pub restarts: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iters: 2000,
            restarts: 2,
        }
    }
}

struct Scaled<'a, F> {
    f: &'a F,
    scale: f64,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Scaled<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Self::Param) -> Result<f64, ArgminError> {
        let v = (self.f)(x) / self.scale;
        Ok(if v.is_finite() { v } else { PENALTY })
    }
}

fn simplex_around(x0: &[f64], steps: &[f64]) -> Vec<Vec<f64>> {
    let mut pts = vec![x0.to_vec()];
    for (i, &h) in steps.iter().enumerate() {
        let mut p = x0.to_vec();
        p[i] += h;
        pts.push(p);
    }
    pts
}

/// Minimizes `f` starting from `x0` with an initial simplex spanned by the
/// coordinate steps `steps`.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    steps: &[f64],
    opts: SimplexOptions,
) -> Result<Minimum, ArgminError> {
    let f0 = f(x0);
    let scale = if f0.is_finite() && f0.abs() > 0.0 { f0.abs() } else { 1.0 };
    let mut best = Minimum {
        x: x0.to_vec(),
        value: f0 / scale,
        iterations: 0,
        converged: false,
    };
    if !best.value.is_finite() {
        best.value = PENALTY;
    }
    for _ in 0..=opts.restarts {
        let solver = NelderMead::new(simplex_around(&best.x, steps)).with_sd_tolerance(opts.rel_tol)?;
        let res = Executor::new(Scaled { f, scale }, solver)
            .configure(|s| s.max_iters(opts.max_iters))
            .run()?;
        let state = res.state();
        let converged = matches!(
            state.get_termination_status(),
            TerminationStatus::Terminated(TerminationReason::SolverConverged)
        );
        let value = state.get_best_cost();
        let x = state.get_best_param().cloned().unwrap_or_else(|| best.x.clone());
        let improved = value < best.value;
        let small_gain = best.value - value <= opts.rel_tol * value.abs().max(opts.rel_tol);
        best.iterations += state.get_iter();
        if improved {
            best.x = x;
            best.value = value;
        }
        best.converged = converged;
        if converged && (small_gain || !improved) {
            break;
        }
    }
    best.value *= scale;
    if best.value >= PENALTY * scale {
        best.value = f64::INFINITY;
        best.converged = false;
    }
    Ok(best)
}
