use serde::{Deserialize, Serialize};

use super::{path_rng, SimConfig, SimError, State, Stepper, DAY_LENGTH};
use crate::realized::{build_panel, DailyMomentPanel, IntradayGrid};

/// Continuous-time variation integrals of one simulated day.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathwiseDay {
    pub qv: f64,
    pub tv: f64,
    pub fv: f64,
    /// Variance at the end of the day.
    pub v_close: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthPanel {
    pub panel: DailyMomentPanel<f64>,
    /// Intraday log-price grids the panel was built from.
    pub grids: Vec<IntradayGrid<f64>>,
    pub pathwise: Vec<PathwiseDay>,
    pub truncated_fraction: f64,
}

/// Simulates one path of `days` contiguous trading days and samples
/// `intraday_bars` equally spaced bars per day.
///
/// The variance path runs continuously across days; the return and the
/// pathwise integrals restart at zero at each day's open. `cfg.horizon` must
/// equal `days` trading days and `cfg.steps_per_day` must be a multiple of
/// `intraday_bars`. Path index 0 of `cfg.seed` is used.
pub fn synth_panel(cfg: &SimConfig, days: usize, intraday_bars: usize) -> Result<SynthPanel, SimError> {
    cfg.validate()?;
    if days == 0 || intraday_bars == 0 {
        return Err(SimError::InvalidConfig("days and intraday_bars must be positive".into()));
    }
    let expected = days as f64 * DAY_LENGTH;
    if (cfg.horizon - expected).abs() > 1e-9 * expected {
        return Err(SimError::InvalidConfig(format!(
            "horizon {} does not match {days} trading days",
            cfg.horizon
        )));
    }
    if cfg.steps_per_day % intraday_bars != 0 {
        return Err(SimError::InvalidConfig(format!(
            "steps_per_day {} is not a multiple of intraday_bars {intraday_bars}",
            cfg.steps_per_day
        )));
    }
    let steps_per_bar = cfg.steps_per_day / intraday_bars;
    let stepper = Stepper::with_dt(cfg, DAY_LENGTH / cfg.steps_per_day as f64);
    let mut rng = path_rng(cfg.seed, 0);
    let mut s = State::start(cfg.params.v0);
    let mut log_price = 0.0;
    let mut grids = Vec::with_capacity(days);
    let mut pathwise = Vec::with_capacity(days);
    for day in 0..days {
        s = State {
            v_aux: s.v_aux,
            truncated: s.truncated,
            ..State::default()
        };
        let open = log_price;
        let mut prices = Vec::with_capacity(intraday_bars + 1);
        prices.push(open);
        for _ in 0..intraday_bars {
            for _ in 0..steps_per_bar {
                stepper.step(&mut s, &mut rng);
            }
            prices.push(open + s.r);
        }
        log_price = open + s.r;
        pathwise.push(PathwiseDay {
            qv: s.qv,
            tv: s.tv,
            fv: s.fv,
            v_close: s.v(),
        });
        grids.push(IntradayGrid::new(day.to_string(), prices).map_err(|e| SimError::InvalidConfig(e.to_string()))?);
    }
    let panel = build_panel(&grids).map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    Ok(SynthPanel {
        panel,
        grids,
        pathwise,
        truncated_fraction: s.truncated as f64 / (days * cfg.steps_per_day) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::HestonParams;

    #[test]
    fn deterministic_variance_days() {
        let p = HestonParams::new(5.0, 0.05, 0.0, -0.5);
        let cfg = SimConfig::new(p, 30.0 * DAY_LENGTH, 1, 9);
        let sp = synth_panel(&cfg, 30, 78).unwrap();
        assert_eq!(sp.panel.len(), 30);
        for (row, pw) in sp.panel.rows().iter().zip(&sp.pathwise) {
            assert!((row.rv / (0.05 * DAY_LENGTH) - 1.0).abs() < 0.5);
            assert!((pw.qv - 0.05 * DAY_LENGTH).abs() < 1e-15);
            assert_eq!(pw.v_close, 0.05);
        }
        let mean_rv = sp.panel.rv().iter().sum::<f64>() / 30.0;
        assert!((mean_rv / (0.05 * DAY_LENGTH) - 1.0).abs() < 0.02 * 5.0);
    }

    #[test]
    fn panel_matches_rebuilt_grids_and_is_reproducible() {
        let p = HestonParams::new(5.0, 0.05, 0.8, -0.5);
        let cfg = SimConfig::new(p, 10.0 * DAY_LENGTH, 1, 4);
        let a = synth_panel(&cfg, 10, 78).unwrap();
        let b = synth_panel(&cfg, 10, 78).unwrap();
        assert_eq!(a, b);
        assert_eq!(build_panel(&a.grids).unwrap(), a.panel);
        // contiguous prices across days
        for w in a.grids.windows(2) {
            assert_eq!(w[0].log_prices().last(), w[1].log_prices().first());
        }
    }

    #[test]
    fn config_mismatches() {
        let p = HestonParams::new(5.0, 0.05, 0.8, -0.5);
        let cfg = SimConfig::new(p, 10.0 * DAY_LENGTH, 1, 4);
        assert!(synth_panel(&cfg, 9, 78).is_err());
        assert!(synth_panel(&cfg, 10, 77).is_err());
        assert!(synth_panel(&cfg, 10, 0).is_err());
    }
}
