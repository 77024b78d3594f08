use serde::{Deserialize, Serialize};

use super::moments::qv_squared_v0_coefficients;
use super::params::{HestonParams, ModelError};
use crate::scalar::{exp_tail, Scalar};

/// Scalars of the one-step conditional moment recursions at observation
/// interval `delta`:
///
/// ```text
/// E[V_{i+1} | F_i]            = a V_i + b
/// E[[R]_{i,i+1} | F_i]        = alpha V_i + beta + ... (alpha (V_i - theta) + theta delta)
/// E[[R,R^2]_{i,i+1} | F_i]    = alpha3 V_i + beta3
/// E[[R]^2_{i,i+1} | F_i]      = C V_i^2 + D V_i + E
/// E[V_{i+1}^2 | F_i]          = c V_i^2 + d V_i + f
/// E[[R]^2_{i+1,i+2} | F_{i+1}] = c [R]^2_{i,i+1} + F [R]_{i,i+1} + G
/// ```
///
/// `beta = theta (delta - alpha)` is the intercept of `[R]_{i,i+1}` as an
/// affine function of `V_i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GmmConstants<T> {
    pub a: T,
    pub b: T,
    pub alpha: T,
    pub beta: T,
    pub alpha3: T,
    pub beta3: T,
    #[serde(rename = "C")]
    pub big_c: T,
    #[serde(rename = "D")]
    pub big_d: T,
    #[serde(rename = "E")]
    pub big_e: T,
    pub c: T,
    pub d: T,
    pub f: T,
    #[serde(rename = "F")]
    pub big_f: T,
    #[serde(rename = "G")]
    pub big_g: T,
    pub delta: T,
}

pub fn gmm_constants<T: Scalar>(p: &HestonParams<T>, delta: T) -> Result<GmmConstants<T>, ModelError> {
    p.validate()?;
    if !(delta.is_finite() && delta > T::zero()) {
        return Err(ModelError::Domain {
            name: "delta",
            value: delta.as_f64(),
        });
    }
    let (k, th, g, r) = (p.kappa, p.theta, p.gamma, p.rho);
    let two = T::lit(2.0);
    let x = k * delta;
    let a = (-x).exp();
    let one_minus_a = -(-x).exp_m1();
    let b = th * one_minus_a;
    let alpha = delta * exp_tail(1, x);
    // delta - alpha = delta x R_2(x)
    let beta = th * delta * x * exp_tail(2, x);

    let r1 = exp_tail(1, x);
    let r2 = exp_tail(2, x);
    let r3 = exp_tail(3, x);
    let dd = delta * delta;
    // (1 - e^{-x}(x+1)) / k^2 = delta^2 (R_1 - R_2)
    let alpha3 = two * g * r * dd * (r1 - r2);
    // ((e^{-x}(x+2) - 2)/k + delta) / k = delta^2 x (R_2 - 2 R_3)
    let beta3 = two * g * r * th * dd * x * (r2 - two * r3);

    let (big_c, big_d, big_e) = qv_squared_v0_coefficients(k, th, g, delta);
    let c = a * a;
    let s = (two * k * th + g * g) / k;
    let d = s * (a - c);
    let f = th * s * T::lit(0.5) * one_minus_a * one_minus_a;

    let slope = big_c * d + (a - c) * big_d;
    let big_f = slope / alpha;
    let big_g = -beta / alpha * slope + big_c * f + b * big_d + (T::one() - c) * big_e;
    Ok(GmmConstants {
        a,
        b,
        alpha,
        beta,
        alpha3,
        beta3,
        big_c,
        big_d,
        big_e,
        c,
        d,
        f,
        big_f,
        big_g,
        delta,
    })
}

impl<T: Scalar> GmmConstants<T> {
    /// Intercept `-a beta3 + alpha3 b + beta3` of the third-variation recursion.
    pub fn third_variation_intercept(&self) -> T {
        -self.a * self.beta3 + self.alpha3 * self.b + self.beta3
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::moments::{expected_qv, expected_third_variation};

    fn model2() -> HestonParams<f64> {
        HestonParams::new(15.0, 0.02, 0.7, 0.3)
    }

    #[test]
    fn ar_coefficients() {
        let d = 1.0 / 252.0;
        let c = gmm_constants(&model2(), d).unwrap();
        assert_eq!(c.a, (-15.0 * d).exp());
        assert_eq!(c.c, c.a * c.a);
        assert!(c.a > 0.0 && c.a < 1.0);
        assert!((c.b - 0.02 * (1.0 - c.a)).abs() < 1e-18);
        assert!((c.alpha - (1.0 - c.a) / 15.0).abs() < 1e-16);
    }

    #[test]
    fn no_leverage_no_third_variation_constants() {
        let p = HestonParams::new(15.0, 0.02, 0.7, 0.0);
        let c = gmm_constants(&p, 1.0 / 252.0).unwrap();
        assert_eq!(c.alpha3, 0.0);
        assert_eq!(c.beta3, 0.0);
    }

    #[test]
    fn recursion_slopes_match_conditional_means() {
        // [R] and [R,R^2] over one interval are affine in the starting variance.
        let p = model2();
        let d = 1.0 / 252.0;
        let c = gmm_constants(&p, d).unwrap();
        for &v in &[0.0, 0.01, 0.05] {
            let q = expected_qv(&p.with_v0(v), d).unwrap();
            assert!((q - (c.alpha * v + c.beta)).abs() < 1e-16, "qv at {v}");
            let tv = expected_third_variation(&p.with_v0(v), d).unwrap();
            assert!((tv - (c.alpha3 * v + c.beta3)).abs() < 1e-18, "tv at {v}");
        }
    }

    #[test]
    fn f_and_g_identities() {
        for p in [model2(), HestonParams::new(5.0, 0.05, 0.8, -0.5), HestonParams::new(0.7, 0.1, 2.1, -0.9)] {
            let c = gmm_constants(&p, 1.0 / 252.0).unwrap();
            let slope = c.big_c * c.d + (c.a - c.c) * c.big_d;
            assert!((c.big_f * c.alpha - slope).abs() <= 1e-12 * slope.abs());
            let g = -c.beta * slope / c.alpha + c.big_c * c.f + c.b * c.big_d + (1.0 - c.c) * c.big_e;
            assert!((c.big_g - g).abs() <= 1e-12 * g.abs());
        }
    }

    #[test]
    fn rejects_nonpositive_delta() {
        assert!(gmm_constants(&model2(), 0.0).is_err());
        assert!(gmm_constants(&model2(), f64::INFINITY).is_err());
    }
}
