//! Realized moment variations from equally spaced intraday log prices.
//!
//! Within each day the return is measured from the first observation, so
//! `R_i = x_i - x_0` and overnight gaps never enter the sums:
//!
//! ```text
//! rv = sum (R_i - R_{i-1})^2
//! tv = sum (R_i - R_{i-1}) (R_i^2 - R_{i-1}^2)
//! fv = sum (R_i^2 - R_{i-1}^2)^2
//! ```
//!
//! `1.5 tv` and `1.5 fv` are the realized third and fourth moments.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RealizedError {
    #[error("day {day_id}: a grid needs at least two observations, got {len}")]
    EmptyGrid { day_id: String, len: usize },
    #[error("day {day_id}: non-finite log price at position {index}")]
    NonFinite { day_id: String, index: usize },
    #[error("panel has {len} rows, at least {min} required")]
    TooFewRows { len: usize, min: usize },
}

/// One day of log prices at `N + 1` equally spaced times.
#[derive(Clone, Debug, PartialEq)]
pub struct IntradayGrid<T> {
    day_id: String,
    log_prices: Vec<T>,
}

impl<T: Scalar> IntradayGrid<T> {
    pub fn new(day_id: impl Into<String>, log_prices: Vec<T>) -> Result<Self, RealizedError> {
        let day_id = day_id.into();
        if log_prices.len() < 2 {
            return Err(RealizedError::EmptyGrid {
                day_id,
                len: log_prices.len(),
            });
        }
        if let Some(index) = log_prices.iter().position(|x| !x.is_finite()) {
            return Err(RealizedError::NonFinite { day_id, index });
        }
        Ok(Self { day_id, log_prices })
    }

    pub fn day_id(&self) -> &str {
        &self.day_id
    }

    pub fn log_prices(&self) -> &[T] {
        &self.log_prices
    }

    /// Number of bars `N`.
    pub fn n_bars(&self) -> usize {
        self.log_prices.len() - 1
    }

    /// Consecutive pairs `(R_{i-1}, R_i)` of within-day cumulative returns.
    fn return_pairs(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let x0 = self.log_prices[0];
        self.log_prices.windows(2).map(move |w| (w[0] - x0, w[1] - x0))
    }

    pub fn close_return(&self) -> T {
        self.log_prices[self.log_prices.len() - 1] - self.log_prices[0]
    }
}

pub fn realized_variance<T: Scalar>(g: &IntradayGrid<T>) -> T {
    g.return_pairs().fold(T::zero(), |s, (a, b)| s + (b - a) * (b - a))
}

/// Unscaled realized third moment variation.
pub fn realized_third<T: Scalar>(g: &IntradayGrid<T>) -> T {
    g.return_pairs().fold(T::zero(), |s, (a, b)| s + (b - a) * (b * b - a * a))
}

/// Unscaled realized fourth moment variation.
pub fn realized_fourth<T: Scalar>(g: &IntradayGrid<T>) -> T {
    g.return_pairs().fold(T::zero(), |s, (a, b)| {
        let d = b * b - a * a;
        s + d * d
    })
}

/// Realized quantities of one day.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyMoments<T> {
    pub day_id: String,
    pub rv: T,
    pub tv: T,
    pub fv: T,
    pub r_close: T,
}

impl<T: Scalar> DailyMoments<T> {
    pub fn from_grid(g: &IntradayGrid<T>) -> Self {
        Self {
            day_id: g.day_id.clone(),
            rv: realized_variance(g),
            tv: realized_third(g),
            fv: realized_fourth(g),
            r_close: g.close_return(),
        }
    }

    pub fn tv15(&self) -> T {
        T::lit(1.5) * self.tv
    }

    pub fn fv15(&self) -> T {
        T::lit(1.5) * self.fv
    }

    pub fn r3(&self) -> T {
        self.r_close.powi(3)
    }

    pub fn r4(&self) -> T {
        self.r_close.powi(4)
    }
}

/// Daily realized moments in day order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DailyMomentPanel<T> {
    rows: Vec<DailyMoments<T>>,
}

impl<T: Scalar> DailyMomentPanel<T> {
    pub fn from_rows(rows: Vec<DailyMoments<T>>) -> Result<Self, RealizedError> {
        if rows.is_empty() {
            return Err(RealizedError::TooFewRows { len: 0, min: 1 });
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[DailyMoments<T>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn column(&self, f: impl Fn(&DailyMoments<T>) -> T) -> Vec<T> {
        self.rows.iter().map(f).collect()
    }

    pub fn rv(&self) -> Vec<T> {
        self.column(|r| r.rv)
    }

    pub fn tv(&self) -> Vec<T> {
        self.column(|r| r.tv)
    }

    pub fn fv(&self) -> Vec<T> {
        self.column(|r| r.fv)
    }

    pub fn tv15(&self) -> Vec<T> {
        self.column(|r| r.tv15())
    }

    pub fn fv15(&self) -> Vec<T> {
        self.column(|r| r.fv15())
    }

    pub fn r_close(&self) -> Vec<T> {
        self.column(|r| r.r_close)
    }

    pub fn r3(&self) -> Vec<T> {
        self.column(|r| r.r3())
    }

    pub fn r4(&self) -> Vec<T> {
        self.column(|r| r.r4())
    }

    /// Contiguous sub-panel of days `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self, RealizedError> {
        let end = (start + len).min(self.rows.len());
        Self::from_rows(self.rows[start.min(end)..end].to_vec())
    }
}

pub fn build_panel<T: Scalar>(days: &[IntradayGrid<T>]) -> Result<DailyMomentPanel<T>, RealizedError> {
    DailyMomentPanel::from_rows(days.iter().map(DailyMoments::from_grid).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats<T> {
    pub mean: T,
    pub std_dev: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats<T> {
    pub n_days: usize,
    pub tv: ColumnStats<T>,
    pub tv15: ColumnStats<T>,
    pub r3: ColumnStats<T>,
    pub fv: ColumnStats<T>,
    pub fv15: ColumnStats<T>,
    pub r4: ColumnStats<T>,
}

/// Sample mean and sample standard deviation (denominator `n - 1`).
pub fn mean_std<T: Scalar>(xs: &[T]) -> ColumnStats<T> {
    let n = T::lit(xs.len() as f64);
    let mean = xs.iter().fold(T::zero(), |s, &x| s + x) / n;
    let ss = xs.iter().fold(T::zero(), |s, &x| s + (x - mean) * (x - mean));
    ColumnStats {
        mean,
        std_dev: (ss / (n - T::one())).sqrt(),
    }
}

pub fn summary_stats<T: Scalar>(panel: &DailyMomentPanel<T>) -> Result<SummaryStats<T>, RealizedError> {
    if panel.len() < 2 {
        return Err(RealizedError::TooFewRows {
            len: panel.len(),
            min: 2,
        });
    }
    Ok(SummaryStats {
        n_days: panel.len(),
        tv: mean_std(&panel.tv()),
        tv15: mean_std(&panel.tv15()),
        r3: mean_std(&panel.r3()),
        fv: mean_std(&panel.fv()),
        fv15: mean_std(&panel.fv15()),
        r4: mean_std(&panel.r4()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(x: &[f64]) -> IntradayGrid<f64> {
        IntradayGrid::new("d", x.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_three_point_day() {
        let g = grid(&[0.0, 0.01, -0.01]);
        assert!((realized_variance(&g) - 5e-4).abs() < 1e-18);
        assert!((realized_third(&g) - 1e-6).abs() < 1e-20);
        assert!((realized_fourth(&g) - 1e-8).abs() < 1e-22);
    }

    #[test]
    fn symmetric_reversal() {
        let g = grid(&[0.0, 0.01, 0.0]);
        assert!((realized_third(&g) - 2e-6).abs() < 1e-20);
    }

    #[test]
    fn constant_prices_give_zero() {
        let g = grid(&[4.6; 6]);
        assert_eq!(realized_variance(&g), 0.0);
        assert_eq!(realized_third(&g), 0.0);
        assert_eq!(realized_fourth(&g), 0.0);
    }

    #[test]
    fn returns_are_measured_from_the_open() {
        // same shape, shifted level
        let a = grid(&[0.0, 0.003, -0.002, 0.004]);
        let b = grid(&[5.0, 5.003, 4.998, 5.004]);
        assert!((realized_third(&a) - realized_third(&b)).abs() < 1e-15);
        assert!((realized_fourth(&a) - realized_fourth(&b)).abs() < 1e-15);
    }

    #[test]
    fn invalid_grids() {
        assert!(matches!(
            IntradayGrid::new("x", vec![1.0f64]),
            Err(RealizedError::EmptyGrid { .. })
        ));
        assert!(matches!(
            IntradayGrid::new("x", vec![1.0, f64::NAN]),
            Err(RealizedError::NonFinite { index: 1, .. })
        ));
    }

    #[test]
    fn single_day_panel_matches_operations() {
        let g = grid(&[0.0, 0.01, -0.01]);
        let p = build_panel(std::slice::from_ref(&g)).unwrap();
        let row = &p.rows()[0];
        assert_eq!(row.rv, realized_variance(&g));
        assert_eq!(row.tv15(), 1.5 * realized_third(&g));
        assert_eq!(row.fv15(), 1.5 * realized_fourth(&g));
        assert_eq!(row.r_close, -0.01);
        assert!((row.r3() + 1e-6).abs() < 1e-20);
    }

    #[test]
    fn summary_statistics() {
        let rows = [1.0, 2.0, 3.0]
            .iter()
            .map(|&v| DailyMoments {
                day_id: v.to_string(),
                rv: 1.0,
                tv: v,
                fv: 7.0,
                r_close: 0.0,
            })
            .collect();
        let p = DailyMomentPanel::from_rows(rows).unwrap();
        let s = summary_stats(&p).unwrap();
        assert_eq!(s.tv.mean, 2.0);
        assert_eq!(s.tv.std_dev, 1.0);
        assert_eq!(s.fv.std_dev, 0.0);
        let one = p.slice(0, 1).unwrap();
        assert!(matches!(summary_stats(&one), Err(RealizedError::TooFewRows { .. })));
    }
}
