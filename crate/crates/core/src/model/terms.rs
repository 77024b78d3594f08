//! Intermediate expectations that the closed forms are assembled from. Only
//! `m` enters a public closed form; the others are kept to check the
//! integral equations linking them.
//!
//! `w(u) = E[V_u int_0^u sqrt(V) dW^v]`, `x(t) = E[int sqrt(V) dW^s int gamma sqrt(V) dW^v]`,
//! `y(t) = E[int_0^t V ds int_0^t sqrt(V) dW^s]`, `z(t) = E[(int_0^t V ds)^2]`,
//! `p(s) = E[V_s int_0^s V du]` and `m(u) = E[int_0^u V ds int_0^u R sqrt(V) dW^s]`.

#[cfg(test)]
use super::moments::{qv_squared_form1, v_times_iv_unchecked};
use super::params::HestonParams;
use crate::scalar::Scalar;

#[cfg(test)]
pub(crate) fn w<T: Scalar>(p: &HestonParams<T>, u: T) -> T {
    let (k, th, g, v0) = (p.kappa, p.theta, p.gamma, p.v0);
    let e = (-k * u).exp();
    g * (v0 - th) * u * e + g * th * u * crate::scalar::exp_tail(1, k * u)
}

#[cfg(test)]
pub(crate) fn x<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let (k, th, v0) = (p.kappa, p.theta, p.v0);
    p.gamma * p.rho * ((v0 - th) * t * crate::scalar::exp_tail(1, k * t) + th * t)
}

#[cfg(test)]
pub(crate) fn y<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    let (k, th, v0) = (p.kappa, p.theta, p.v0);
    let kt = k * t;
    let e = (-kt).exp();
    p.gamma * p.rho / (k * k)
        * ((v0 - th) * (T::one() - e - kt * e) + th * (-T::one() + e + kt))
}

#[cfg(test)]
pub(crate) fn z<T: Scalar>(p: &HestonParams<T>, t: T) -> T {
    qv_squared_form1(p, t)
}

#[cfg(test)]
pub(crate) fn p_term<T: Scalar>(p: &HestonParams<T>, s: T) -> T {
    v_times_iv_unchecked(p, s)
}

/// Solution of `m' = -kappa m + gamma rho int_0^u E[R_s V_s] ds`, `m(0) = 0`.
pub(crate) fn m<T: Scalar>(p: &HestonParams<T>, u: T) -> T {
    let (k, th, g, r, v0) = (p.kappa, p.theta, p.gamma, p.rho, p.v0);
    let ku = k * u;
    let e = (-ku).exp();
    let two = T::lit(2.0);
    g * g * r * r / (k * k * k)
        * ((v0 - th) * (T::one() - e - (ku + k * k * u * u / two) * e)
            + th * (two * (e - T::one()) + ku * (T::one() + e)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> HestonParams<f64> {
        HestonParams::new(3.0, 0.04, 2.0, -0.5).with_v0(0.05)
    }

    // Each term against its leading small-time behaviour: the ratio must
    // approach one linearly in t.
    fn assert_leading(f: impl Fn(f64) -> f64, lead: impl Fn(f64) -> f64) {
        let r1 = f(1e-3) / lead(1e-3);
        let r2 = f(1e-4) / lead(1e-4);
        assert!((r1 - 1.0).abs() < 0.1, "ratio {r1}");
        assert!((r2 - 1.0).abs() < 0.2 * (r1 - 1.0).abs() + 1e-6, "{r1} {r2}");
    }

    #[test]
    fn small_time_limits() {
        let p = params();
        let (g, r, v0) = (p.gamma, p.rho, p.v0);
        assert_leading(|u| w(&p, u), |u| g * v0 * u);
        assert_leading(|t| x(&p, t), |t| g * r * v0 * t);
        assert_leading(|t| y(&p, t), |t| g * r * v0 * t * t / 2.0);
        assert_leading(|s| p_term(&p, s), |s| v0 * v0 * s);
        assert_leading(|u| m(&p, u), |u| g * g * r * r * v0 * u.powi(3) / 6.0);
        // z(t) ~ v0^2 t^2 cancels catastrophically in f64 for small t
        let pd: HestonParams<crate::double_double::DoubleDouble> = p.cast();
        let zr = |t: f64| {
            let zt: f64 = z(&pd, crate::double_double::DoubleDouble::lift(t)).into();
            zt / (v0 * v0 * t * t)
        };
        let (r1, r2) = (zr(1e-4), zr(1e-5));
        assert!((r2 - 1.0).abs() < 0.2 * (r1 - 1.0).abs() + 1e-6, "{r1} {r2}");
    }

    #[test]
    fn integral_equations_hold() {
        // y' = -kappa y + x and m' = -kappa m + gamma rho (y-integral)
        let p = params();
        let h = 1e-6;
        for &t in &[0.05, 0.4, 1.3] {
            let dy = (y(&p, t + h) - y(&p, t - h)) / (2.0 * h);
            assert!((dy - (-p.kappa * y(&p, t) + x(&p, t))).abs() < 1e-7 * dy.abs().max(1e-3));
            let tv_half = 0.5 * super::super::moments::third_variation_unchecked(&p, t);
            let dm = (m(&p, t + h) - m(&p, t - h)) / (2.0 * h);
            let rhs = -p.kappa * m(&p, t) + p.gamma * p.rho * tv_half;
            assert!((dm - rhs).abs() < 1e-6 * rhs.abs().max(1e-6), "{dm} {rhs}");
            // w' = -kappa w + gamma E[V]
            let dw = (w(&p, t + h) - w(&p, t - h)) / (2.0 * h);
            let ev = p.theta + (p.v0 - p.theta) * (-p.kappa * t).exp();
            assert!((dw - (-p.kappa * w(&p, t) + p.gamma * ev)).abs() < 1e-6);
        }
    }

    #[test]
    fn rv_is_minus_kappa_y_plus_x() {
        let p = params();
        for &u in &[0.01, 0.3, 2.0] {
            let direct = super::super::moments::rv_unchecked(&p, u);
            let via = -p.kappa * y(&p, u) + x(&p, u);
            assert!((direct - via).abs() < 1e-12 * direct.abs().max(1e-12));
        }
    }
}
