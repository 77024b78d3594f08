use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating point type the closed-form moment expressions are evaluated in.
///
/// Implemented for every `Float` that can be built from an `f64` literal, which
/// covers `f32`, `f64` and extended-precision types such as double-double.
pub trait Scalar: Float + FromPrimitive + Debug + Send + Sync + 'static {
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("constant must be representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where T: Float + FromPrimitive + Debug + Send + Sync + 'static {}

/// Tail of the exponential series,
/// `R_n(x) = sum_{j>=0} (-x)^j / (j+n)! = (e^{-x} - sum_{k<n} (-x)^k/k!) / (-x)^n`.
///
/// Evaluated by its power series for small `x` and by the closed form
/// otherwise, so that expressions such as `(1 - e^{-x}) / x` keep full
/// relative precision as `x -> 0`.
pub(crate) fn exp_tail<T: Scalar>(n: u32, x: T) -> T {
    let cutoff = T::lit(0.5);
    if x.abs() < cutoff {
        // (-x)^j / (j+n)!, summed until the terms underflow the sum.
        let mut fact = T::one();
        for k in 2..=n {
            fact = fact * T::lit(k as f64);
        }
        let mut term = T::one() / fact;
        let mut sum = term;
        for j in 1..60u32 {
            term = term * (-x) / T::lit((j + n) as f64);
            sum = sum + term;
            if term.abs() <= sum.abs() * T::epsilon() * T::lit(1e-3) {
                break;
            }
        }
        sum
    } else {
        let neg = -x;
        let mut partial = T::zero();
        let mut term = T::one();
        for k in 0..n {
            if k > 0 {
                term = term * neg / T::lit(k as f64);
            }
            partial = partial + term;
        }
        let rem = if n == 1 { neg.exp_m1() } else { neg.exp() - partial };
        rem / neg.powi(n as i32)
    }
}
