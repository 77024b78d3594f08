//! Variation-based realized third and fourth moments, their expectations under
//! the square-root stochastic volatility model, and estimators of the model
//! parameters from daily realized moment panels.

pub mod double_double;
pub mod estimation;
pub mod inference;
pub mod model;
pub mod quadrature;
pub mod realized;
pub mod scalar;
pub mod simulator;

pub use model::{GmmConstants, HestonParams, ModelError};
pub use scalar::Scalar;

pub type HestonParams64 = HestonParams<f64>;
pub type HestonParams32 = HestonParams<f32>;
pub type HestonParamsDD = HestonParams<double_double::DoubleDouble>;
pub type GmmConstants64 = GmmConstants<f64>;
pub type IntradayGrid64 = realized::IntradayGrid<f64>;
pub type DailyMomentPanel64 = realized::DailyMomentPanel<f64>;
