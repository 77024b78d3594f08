//! Closed-form expectations of the square-root stochastic volatility model.

mod fourth;
mod gmm_constants;
mod moments;
mod params;
mod terms;

pub use fourth::{expected_fourth_moment, expected_fourth_variation, expected_r2v, FOURTH_VARIATION_TOL};
pub use gmm_constants::{gmm_constants, GmmConstants};
pub use moments::{
    drift_bias_fourth, drift_bias_third, expected_qv, expected_qv_squared, expected_rv, expected_third_moment,
    expected_third_variation, expected_v_times_iv, expected_variance, expected_variance_squared,
    longrun_third_variation, qv_squared_form1, qv_squared_form2, stationary_variance_squared,
    third_moment_by_initial_variance, QV_SQUARED_FORM_TOL,
};
pub use params::{HestonParams, ModelError};
