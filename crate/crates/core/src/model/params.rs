use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quadrature::QuadError;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid {name}: {value}")]
    Domain { name: &'static str, value: f64 },
    #[error("closed form requires a martingale return (mu = 0), got mu = {0}")]
    NonzeroDrift(f64),
    #[error("the two forms of E[[R]_t^2] disagree: {form1} vs {form2}")]
    FormMismatch { form1: f64, form2: f64 },
    #[error(transparent)]
    Quadrature(#[from] QuadError),
}

/// Parameters of the square-root stochastic volatility model
///
/// ```text
/// dR_t = mu dt + sqrt(V_t) dW^s_t
/// dV_t = kappa (theta - V_t) dt + gamma sqrt(V_t) dW^v_t,   d[W^s, W^v]_t = rho dt
/// ```
///
/// with time measured in years. `gamma = 0` is accepted as the deterministic
/// variance limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HestonParams<T> {
    pub kappa: T,
    pub theta: T,
    pub gamma: T,
    pub rho: T,
    pub mu: T,
    pub v0: T,
}

impl<T: Scalar> HestonParams<T> {
    /// Zero drift, started at the long-run variance.
    pub fn new(kappa: T, theta: T, gamma: T, rho: T) -> Self {
        Self {
            kappa,
            theta,
            gamma,
            rho,
            mu: T::zero(),
            v0: theta,
        }
    }

    pub fn with_v0(mut self, v0: T) -> Self {
        self.v0 = v0;
        self
    }

    pub fn with_mu(mut self, mu: T) -> Self {
        self.mu = mu;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let check = |name, v: T, ok: bool| {
            if v.is_finite() && ok {
                Ok(())
            } else {
                Err(ModelError::Domain {
                    name,
                    value: v.as_f64(),
                })
            }
        };
        check("kappa", self.kappa, self.kappa > T::zero())?;
        check("theta", self.theta, self.theta > T::zero())?;
        check("gamma", self.gamma, self.gamma >= T::zero())?;
        check("rho", self.rho, self.rho.abs() <= T::one())?;
        check("mu", self.mu, true)?;
        check("v0", self.v0, self.v0 >= T::zero())?;
        Ok(())
    }

    /// `2 kappa theta > gamma^2`. Reported only; violating parameter sets are
    /// still valid model inputs.
    pub fn feller(&self) -> bool {
        T::lit(2.0) * self.kappa * self.theta > self.gamma * self.gamma
    }

    pub(crate) fn require_martingale(&self) -> Result<(), ModelError> {
        if self.mu == T::zero() {
            Ok(())
        } else {
            Err(ModelError::NonzeroDrift(self.mu.as_f64()))
        }
    }

    pub fn cast<U: Scalar>(&self) -> HestonParams<U> {
        let c = |x: T| U::lit(x.as_f64());
        HestonParams {
            kappa: c(self.kappa),
            theta: c(self.theta),
            gamma: c(self.gamma),
            rho: c(self.rho),
            mu: c(self.mu),
            v0: c(self.v0),
        }
    }
}

pub(crate) fn check_time<T: Scalar>(name: &'static str, t: T) -> Result<(), ModelError> {
    if t.is_finite() && t >= T::zero() {
        Ok(())
    } else {
        Err(ModelError::Domain {
            name,
            value: t.as_f64(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn feller_flag_is_reported_not_enforced() {
        // kappa=5, theta=0.05, gamma=0.8: 2*5*0.05 = 0.5 < 0.64
        let p = HestonParams::new(5.0, 0.05, 0.8, -0.5);
        assert!(p.validate().is_ok());
        assert!(!p.feller());
        assert!(HestonParams::new(15.0, 0.02, 0.5, 0.3).feller());
    }

    #[test]
    fn rejects_out_of_domain_values() {
        let p = HestonParams::new(5.0, 0.05, 0.8, -0.5);
        assert!(p.with_v0(-1e-3).validate().is_err());
        assert!(HestonParams::new(0.0, 0.05, 0.8, 0.0).validate().is_err());
        assert!(HestonParams::new(1.0, 0.05, 0.8, 1.2).validate().is_err());
        assert!(HestonParams::new(1.0, f64::NAN, 0.8, 0.0).validate().is_err());
        assert!(HestonParams::new(1.0, 0.05, 0.0, 0.0).validate().is_ok());
    }
}
