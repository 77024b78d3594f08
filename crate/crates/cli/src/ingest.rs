//! Tick CSV ingestion and resampling onto an equally spaced session grid.

use std::io::Read;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime, TimeDelta};
use log::warn;
use momvar_core::realized::IntradayGrid;

use crate::error::CliError;

/// Largest share of empty bars for which a day is kept.
pub const MAX_MISSING_SHARE: f64 = 0.10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Session {
    pub open: NaiveTime,
    pub close: NaiveTime,
    pub bar_minutes: u32,
}

impl Default for Session {
    fn default() -> Self {
        Self {
            open: NaiveTime::from_hms_opt(9, 30, 0).expect("valid time"),
            close: NaiveTime::from_hms_opt(16, 0, 0).expect("valid time"),
            bar_minutes: 5,
        }
    }
}

impl Session {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.bar_minutes == 0 {
            return Err(CliError::Input("bar width must be positive".into()));
        }
        if self.close <= self.open {
            return Err(CliError::Input(format!(
                "session close {} is not after open {}",
                self.close, self.open
            )));
        }
        let minutes = (self.close - self.open).num_seconds();
        if minutes % (60 * self.bar_minutes as i64) != 0 {
            return Err(CliError::Input(format!(
                "bar width {} min does not divide the session length",
                self.bar_minutes
            )));
        }
        Ok(())
    }

    pub fn n_bars(&self) -> usize {
        ((self.close - self.open).num_seconds() / (60 * self.bar_minutes as i64)) as usize
    }

    fn boundary(&self, j: usize) -> NaiveTime {
        self.open + TimeDelta::minutes(j as i64 * self.bar_minutes as i64)
    }
}

/// Parses epoch seconds (taken as UTC), RFC 3339 timestamps (kept in their
/// own offset's wall-clock time) or naive ISO-8601 date-times.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(secs) = s.parse::<f64>() {
        if !secs.is_finite() {
            return None;
        }
        let whole = secs.floor();
        let nanos = ((secs - whole) * 1e9).round() as u32;
        return DateTime::from_timestamp(whole as i64, nanos.min(999_999_999)).map(|d| d.naive_utc());
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.naive_local());
    }
    const FORMATS: [&str; 4] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];
    FORMATS.iter().find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tick {
    pub time: NaiveDateTime,
    pub price: f64,
}

/// Reads and validates a `timestamp,price` CSV.
pub fn read_ticks<R: Read>(reader: R, path: &Path) -> Result<Vec<Tick>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["timestamp", "price"] {
        return Err(parse_err(1, format!("expected header `timestamp,price`, got `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut ticks: Vec<Tick> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let (timestamp, price) = (&rec[0], &rec[1]);
        let time =
            parse_timestamp(timestamp).ok_or_else(|| parse_err(line, format!("unparseable timestamp `{timestamp}`")))?;
        let price: f64 = price
            .parse()
            .map_err(|_| parse_err(line, format!("unparseable price `{price}`")))?;
        if !(price.is_finite() && price > 0.0) {
            return Err(parse_err(line, format!("price must be positive, got {price}")));
        }
        if let Some(prev) = ticks.last() {
            if time < prev.time {
                return Err(parse_err(line, "timestamps must be non-decreasing".into()));
            }
        }
        ticks.push(Tick { time, price });
    }
    Ok(ticks)
}

#[derive(Debug, Default)]
pub struct Resampled {
    pub grids: Vec<IntradayGrid<f64>>,
    pub warnings: Vec<String>,
}

/// Samples each day's last price at or before every bar boundary.
///
/// The opening price is the last tick at or before the open, or the first
/// tick of the session when there is none. A bar is empty when no tick falls
/// in `(b_{j-1}, b_j]`; empty bars carry the previous price forward, and a
/// day with more than 10% empty bars is dropped with a warning.
pub fn resample(ticks: &[Tick], session: &Session) -> Result<Resampled, CliError> {
    session.validate()?;
    let n = session.n_bars();
    let mut out = Resampled::default();
    let mut start = 0;
    while start < ticks.len() {
        let date = ticks[start].time.date();
        let end = start + ticks[start..].iter().take_while(|t| t.time.date() == date).count();
        match resample_day(&ticks[start..end], date, session, n) {
            Ok(grid) => out.grids.push(grid),
            Err(msg) => {
                warn!("{msg}");
                out.warnings.push(msg);
            }
        }
        start = end;
    }
    if out.grids.is_empty() {
        return Err(CliError::Input("no complete trading day in the input".into()));
    }
    Ok(out)
}

fn resample_day(day: &[Tick], date: NaiveDate, session: &Session, n: usize) -> Result<IntradayGrid<f64>, String> {
    let at = |j: usize| date.and_time(session.boundary(j));
    let open = at(0);
    let before_open = day.iter().take_while(|t| t.time <= open).count();
    let in_session = day[before_open..].iter().take_while(|t| t.time <= at(n)).count();
    if in_session == 0 {
        return Err(format!("day {date} dropped: no ticks during the session"));
    }
    let mut price = if before_open > 0 {
        day[before_open - 1].price
    } else {
        day[0].price
    };
    let mut prices = Vec::with_capacity(n + 1);
    prices.push(price.ln());
    let mut i = before_open;
    let mut missing = 0usize;
    for j in 1..=n {
        let boundary = at(j);
        let first = i;
        while i < day.len() && day[i].time <= boundary {
            price = day[i].price;
            i += 1;
        }
        if i == first {
            missing += 1;
        }
        prices.push(price.ln());
    }
    if missing as f64 > MAX_MISSING_SHARE * n as f64 {
        return Err(format!("day {date} dropped: {missing} of {n} bars have no ticks"));
    }
    IntradayGrid::new(date.to_string(), prices).map_err(|e| e.to_string())
}

pub fn ingest_and_resample(path: &Path, session: &Session) -> Result<Resampled, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    let ticks = read_ticks(file, path)?;
    resample(&ticks, session)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str) -> NaiveDateTime {
        parse_timestamp(s).unwrap()
    }

    fn session() -> Session {
        Session {
            open: NaiveTime::from_hms_opt(9, 30, 0).unwrap(),
            close: NaiveTime::from_hms_opt(9, 50, 0).unwrap(),
            bar_minutes: 5,
        }
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(t("2024-01-02T09:30:00"), t("2024-01-02 09:30:00"));
        assert_eq!(t("2024-01-02T09:30"), t("2024-01-02 09:30:00"));
        assert_eq!(t("2024-01-02T09:30:00-05:00"), t("2024-01-02 09:30:00"));
        assert_eq!(t("1704187800"), t("2024-01-02 09:30:00"));
        assert_eq!(t("1704187800.5"), t("2024-01-02 09:30:00.5"));
        assert!(parse_timestamp("yesterday").is_none());
    }

    #[test]
    fn session_validation() {
        assert_eq!(Session::default().n_bars(), 78);
        let bad = Session {
            bar_minutes: 7,
            ..session()
        };
        assert!(bad.validate().is_err());
        let inverted = Session {
            close: NaiveTime::from_hms_opt(9, 0, 0).unwrap(),
            ..session()
        };
        assert!(inverted.validate().is_err());
    }

    #[test]
    fn ticks_on_boundaries_resample_to_themselves() {
        let prices = [100.0, 101.0, 100.5, 102.0, 101.5];
        let ticks: Vec<Tick> = prices
            .iter()
            .enumerate()
            .map(|(j, &price)| Tick {
                time: t(&format!("2024-01-02 09:{}:00", 30 + 5 * j)),
                price,
            })
            .collect();
        let r = resample(&ticks, &session()).unwrap();
        assert_eq!(r.grids.len(), 1);
        let expect: Vec<f64> = prices.iter().map(|p: &f64| p.ln()).collect();
        assert_eq!(r.grids[0].log_prices(), expect.as_slice());
        assert_eq!(r.grids[0].day_id(), "2024-01-02");
    }

    #[test]
    fn sparse_day_is_dropped() {
        let mut ticks = vec![
            Tick { time: t("2024-01-02 09:30:00"), price: 100.0 },
            Tick { time: t("2024-01-02 09:40:00"), price: 101.0 },
        ];
        for (j, p) in [100.0, 100.2, 100.4, 100.6, 100.8].iter().enumerate() {
            ticks.push(Tick {
                time: t(&format!("2024-01-03 09:{}:00", 30 + 5 * j)),
                price: *p,
            });
        }
        let r = resample(&ticks, &session()).unwrap();
        assert_eq!(r.grids.len(), 1);
        assert_eq!(r.grids[0].day_id(), "2024-01-03");
        assert_eq!(r.warnings.len(), 1);
        assert!(r.warnings[0].contains("2024-01-02"));
    }

    #[test]
    fn open_price_from_pre_session_tick_and_carry_forward() {
        let s = Session {
            close: NaiveTime::from_hms_opt(10, 20, 0).unwrap(),
            ..session()
        };
        // ten bars, one of them empty: kept with the price carried forward
        let mut ticks = vec![Tick { time: t("2024-01-02 09:10:00"), price: 50.0 }];
        for j in 1..=10 {
            if j == 4 {
                continue;
            }
            ticks.push(Tick {
                time: t(&format!("2024-01-02 {}", (s.open + TimeDelta::minutes(5 * j - 1)).format("%H:%M:%S"))),
                price: 50.0 + j as f64,
            });
        }
        let r = resample(&ticks, &s).unwrap();
        let g = &r.grids[0];
        assert_eq!(g.log_prices()[0], 50f64.ln());
        assert_eq!(g.log_prices()[4], 53f64.ln());
        assert_eq!(g.log_prices()[10], 60f64.ln());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let data = "timestamp,price\n2024-01-02 09:30:00,100\n2024-01-02 09:35:00,-1\n";
        let err = read_ticks(data.as_bytes(), Path::new("x.csv")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let data = "timestamp,price\n2024-01-02 09:30:00,100\nnot a time,101\n";
        assert!(read_ticks(data.as_bytes(), Path::new("x.csv")).unwrap_err().to_string().contains("line 3"));
        let data = "timestamp,price\n2024-01-02 09:35:00,100\n2024-01-02 09:30:00,101\n";
        assert!(read_ticks(data.as_bytes(), Path::new("x.csv")).unwrap_err().to_string().contains("non-decreasing"));
        let data = "time,px\n";
        assert!(read_ticks(data.as_bytes(), Path::new("x.csv")).is_err());
    }

    #[test]
    fn empty_output_is_an_error() {
        assert!(resample(&[], &session()).is_err());
    }
}
