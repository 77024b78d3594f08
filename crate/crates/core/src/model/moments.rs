//! Closed-form expectations under the square-root stochastic volatility model.
//!
//! All functions take time in years and return the expectation at horizon `t`
//! for a process started at `(R_0, V_0) = (0, p.v0)`.

use super::params::{check_time, HestonParams, ModelError};
use crate::scalar::{exp_tail, Scalar};

/// Tolerance of the agreement check between the two algebraic forms of
/// `E[[R]_t^2]`, relative to `max(1, |value|)`.
pub const QV_SQUARED_FORM_TOL: f64 = 1e-12;

fn prepare<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<(), ModelError> {
    p.validate()?;
    check_time("t", t)
}

/// `E[V_t] = V_0 e^{-kappa t} + theta (1 - e^{-kappa t})`.
pub fn expected_variance<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    Ok(p.theta + (p.v0 - p.theta) * (-p.kappa * t).exp())
}

/// `E[[R]_t] = E[int_0^t V_s ds]`.
pub fn expected_qv<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    // (1 - e^{-kt}) / k = t R_1(kt)
    let decay = t * exp_tail(1, p.kappa * t);
    Ok(decay * (p.v0 - p.theta) + p.theta * t)
}

/// `E[V_t^2]`.
pub fn expected_variance_squared<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    let (k, th, g, v0) = (p.kappa, p.theta, p.gamma, p.v0);
    let e = (-k * t).exp();
    let one_minus_e = -(-k * t).exp_m1();
    let s = (T::lit(2.0) * k * th + g * g) / k;
    Ok(e * e * v0 * v0 + s * e * one_minus_e * v0 + th * s * T::lit(0.5) * one_minus_e * one_minus_e)
}

/// Stationary second moment `lim E[V_t^2] = theta^2 + gamma^2 theta / (2 kappa)`.
pub fn stationary_variance_squared<T: Scalar>(p: &HestonParams<T>) -> Result<T, ModelError> {
    p.validate()?;
    Ok(p.theta * p.theta + p.gamma * p.gamma * p.theta / (T::lit(2.0) * p.kappa))
}

/// `E[V_t int_0^t V_u du]`.
pub fn expected_v_times_iv<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    Ok(v_times_iv_unchecked(p, t))
}

pub(crate) fn v_times_iv_unchecked<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let (k, th, g, v0) = (p.kappa, p.theta, p.gamma, p.v0);
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let e = (-k * t).exp();
    let g2 = g * g;
    let dv = v0 - th;
    dv * (th + g2 / k) * t * e
        + (dv * (v0 - two * th) / k - g2 * v0 / (k * k)) * e
        + (-dv * dv / k + g2 / (k * k) * (v0 - half * th)) * e * e
        + th * th * t
        + dv * th / k
        + g2 * th / (two * k * k)
}

/// First algebraic form of `E[[R]_t^2]`, grouped by powers of `t` and
/// exponentials with `(V_0 - theta)` coefficients.
pub fn qv_squared_form1<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let (k, th, g, v0) = (p.kappa, p.theta, p.gamma, p.v0);
    let two = T::lit(2.0);
    let e = (-k * t).exp();
    let g2 = g * g;
    let k2 = k * k;
    let k3 = k2 * k;
    let dv = v0 - th;
    two * (th - v0) / k * (th + g2 / k) * t * e
        + two * (g2 * th / k3 - dv * dv / k2) * e
        + (dv * dv / k2 - g2 / k3 * (v0 - T::lit(0.5) * th)) * e * e
        + th * th * t * t
        + (two * dv * th / k + g2 * th / k2) * t
        + dv * dv / k2
        + g2 / k3 * (v0 - T::lit(2.5) * th)
}

/// Second algebraic form of `E[[R]_t^2]`: a quadratic polynomial in `V_0`.
pub fn qv_squared_form2<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let (k, th, g, v0) = (p.kappa, p.theta, p.gamma, p.v0);
    let (c2, c1, c0) = qv_squared_v0_coefficients(k, th, g, t);
    c2 * v0 * v0 + c1 * v0 + c0
}

/// Coefficients `(C, D, E)` of `E[[R]_t^2] = C V_0^2 + D V_0 + E`.
pub(crate) fn qv_squared_v0_coefficients<T: Scalar>(k: T, th: T, g: T, t: T) -> (T, T, T) {
    let two = T::lit(2.0);
    let e = (-k * t).exp();
    let g2 = g * g;
    let k2 = k * k;
    let k3 = k2 * k;
    let c2 = (e - T::one()) * (e - T::one()) / k2;
    let c1 = -two / k * (th + g2 / k) * t * e + T::lit(4.0) * th / k2 * e
        - (two * th / k2 + g2 / k3) * e * e
        + two * th / k * t
        - two * th / k2
        + g2 / k3;
    let c0 = two * th / k * (th + g2 / k) * t * e
        + two * (g2 * th / k3 - th * th / k2) * e
        + (th * th / k2 + g2 * th / (two * k3)) * e * e
        + th * th * t * t
        + (g2 * th / k2 - two * th * th / k) * t
        + th * th / k2
        - T::lit(5.0) * g2 * th / (two * k3);
    (c2, c1, c0)
}

/// `E[[R]_t^2] = E[(int_0^t V_s ds)^2]`.
///
/// Both algebraic forms are evaluated; a disagreement beyond
/// [`QV_SQUARED_FORM_TOL`] is returned as [`ModelError::FormMismatch`].
pub fn expected_qv_squared<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    let f1 = qv_squared_form1(p, t);
    let f2 = qv_squared_form2(p, t);
    let scale = f1.abs().max(T::one());
    if (f1 - f2).abs() > T::lit(QV_SQUARED_FORM_TOL) * scale {
        return Err(ModelError::FormMismatch {
            form1: f1.as_f64(),
            form2: f2.as_f64(),
        });
    }
    Ok(f1)
}

/// `E[R_u V_u]` for a martingale return.
pub fn expected_rv<T: Scalar>(p: &HestonParams<T>, u: T) -> Result<T, ModelError> {
    prepare(p, u)?;
    p.require_martingale()?;
    Ok(rv_unchecked(p, u))
}

pub(crate) fn rv_unchecked<T: Scalar>(p: &HestonParams<T>, u: T) -> T {
    let (k, th, g, r, v0) = (p.kappa, p.theta, p.gamma, p.rho, p.v0);
    let x = k * u;
    let e = (-x).exp();
    let one_minus_e = -(-x).exp_m1();
    g * r / k * ((v0 - th) * x * e + th * one_minus_e)
}

/// `E[[R^2, R]_t] = 2 int_0^t E[R_u V_u] du` for a martingale return.
pub fn expected_third_variation<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    p.require_martingale()?;
    Ok(third_variation_unchecked(p, t))
}

pub(crate) fn third_variation_unchecked<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let x = p.kappa * t;
    let r1 = exp_tail(1, x);
    let r2 = exp_tail(2, x);
    // (1 - e^{-x}(1+x)) / x^2 = R_1 - R_2 and (e^{-x} - 1 + x) / x^2 = R_2
    T::lit(2.0) * p.gamma * p.rho * t * t * ((p.v0 - p.theta) * (r1 - r2) + p.theta * r2)
}

/// `E[R_t^3] = 1.5 E[[R^2, R]_t]`, the third moment implied by the
/// third moment variation under a martingale return.
pub fn expected_third_moment<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    expected_third_variation(p, t).map(|v| T::lit(1.5) * v)
}

/// Same quantity as [`expected_third_moment`], evaluated in the grouping
/// with separate `V_0` and `theta` coefficients.
pub fn third_moment_by_initial_variance<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let (k, th, g, r, v0) = (p.kappa, p.theta, p.gamma, p.rho, p.v0);
    let x = k * t;
    let e = (-x).exp();
    let two = T::lit(2.0);
    T::lit(3.0) * g * r / k
        * (v0 * (T::one() - e * (x + T::one())) / k + th * ((e * (x + two) - two) / k + t))
}

/// Stationary limit `(2 gamma rho theta / kappa)(e^{-kappa t}/kappa + t - 1/kappa)`
/// of the expected third moment variation.
pub fn longrun_third_variation<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    let x = p.kappa * t;
    Ok(T::lit(2.0) * p.gamma * p.rho * p.theta * t * t * exp_tail(2, x))
}

/// `E[R_t^3] - 1.5 E[[R, R^2]_t]` under a constant drift `mu`, stationary start.
pub fn drift_bias_third<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    let mu = p.mu;
    Ok(mu * mu * mu * t * t * t + T::lit(1.5) * mu * p.theta * t * t)
}

/// `E[R_t^4] - 1.5 E[[R^2]_t]` under a constant drift `mu`, stationary start:
/// `mu^4 t^4 + 4 mu^2 theta t^3 + (12 gamma rho theta mu / kappa)((1 - e^{-kappa t})/kappa^2 + t^2/2 - t/kappa)`.
pub fn drift_bias_fourth<T: Scalar>(p: &HestonParams<T>, t: T) -> Result<T, ModelError> {
    prepare(p, t)?;
    let (mu, th) = (p.mu, p.theta);
    let t2 = t * t;
    let t3 = t2 * t;
    // (1 - e^{-x})/k^2 + t^2/2 - t/k = k t^3 R_3(x)
    let leverage = T::lit(12.0) * p.gamma * p.rho * th * mu * t3 * exp_tail(3, p.kappa * t);
    Ok(mu.powi(4) * t3 * t + T::lit(4.0) * mu * mu * th * t3 + leverage)
}
