//! Moment condition for the fourth moment variation `[R^2]_t = 4 int_0^t R_u^2 d[R]_u`.

use super::moments::{third_variation_unchecked, v_times_iv_unchecked};
use super::params::{check_time, HestonParams, ModelError};
use super::terms::m;
use crate::quadrature::integrate;
use crate::scalar::Scalar;

/// Default relative tolerance for [`expected_fourth_variation`].
pub const FOURTH_VARIATION_TOL: f64 = 1e-10;

/// `E[R_u^2 V_u]` for a martingale return.
///
/// Applying Itô to `R^2 V` splits it into `E[V_u int_0^u V ds]` plus
/// `2 E[V_u int_0^u R sqrt(V) dW^s]`, and the latter equals
/// `2 (gamma rho int_0^u E[R_s V_s] ds - kappa m(u))`.
pub fn expected_r2v<T: Scalar>(p: &HestonParams<T>, u: T) -> Result<T, ModelError> {
    p.validate()?;
    check_time("u", u)?;
    p.require_martingale()?;
    Ok(r2v_unchecked(p, u))
}

fn r2v_unchecked<T: Scalar>(p: &HestonParams<T>, u: T) -> T {
    let int_rv = T::lit(0.5) * third_variation_unchecked(p, u);
    T::lit(2.0) * (p.gamma * p.rho * int_rv - p.kappa * m(p, u)) + v_times_iv_unchecked(p, u)
}

/// `E[[R^2]_t] = 4 int_0^t E[R_u^2 V_u] du`, integrated numerically to
/// relative tolerance `quad_tol`.
pub fn expected_fourth_variation<T: Scalar>(
    p: &HestonParams<T>,
    t: T,
    quad_tol: T,
) -> Result<T, ModelError> {
    p.validate()?;
    check_time("t", t)?;
    p.require_martingale()?;
    if !(quad_tol > T::zero()) {
        return Err(ModelError::Domain {
            name: "quad_tol",
            value: quad_tol.as_f64(),
        });
    }
    let r = integrate(|u| r2v_unchecked(p, u), T::zero(), t, quad_tol, T::zero())?;
    Ok(T::lit(4.0) * r.value)
}

/// `E[R_t^4] = 1.5 E[[R^2]_t]` under a martingale return.
pub fn expected_fourth_moment<T: Scalar>(p: &HestonParams<T>, t: T, quad_tol: T) -> Result<T, ModelError> {
    expected_fourth_variation(p, t, quad_tol).map(|v| T::lit(1.5) * v)
}
