//! Panel CSV with columns `day_id,rv,tv,fv,tv15,fv15,r_close,r3,r4`.

use std::io::{Read, Write};
use std::path::Path;

use momvar_core::realized::{DailyMomentPanel, DailyMoments};

use crate::error::CliError;

pub const PANEL_HEADER: [&str; 9] = ["day_id", "rv", "tv", "fv", "tv15", "fv15", "r_close", "r3", "r4"];

/// Formats with 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_panel<W: Write>(panel: &DailyMomentPanel<f64>, out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    let to_input = |e: csv::Error| CliError::Input(format!("writing panel: {e}"));
    w.write_record(PANEL_HEADER).map_err(to_input)?;
    for r in panel.rows() {
        let values = [r.rv, r.tv, r.fv, r.tv15(), r.fv15(), r.r_close, r.r3(), r.r4()];
        let mut rec = vec![r.day_id.clone()];
        rec.extend(values.iter().map(|&x| fmt_f64(x)));
        w.write_record(&rec).map_err(to_input)?;
    }
    w.flush().map_err(|e| CliError::Input(format!("writing panel: {e}")))?;
    Ok(())
}

/// Reads a panel; derived columns are recomputed from `rv`, `tv`, `fv` and
/// `r_close` rather than trusted.
pub fn read_panel<R: Read>(input: R, path: &Path) -> Result<DailyMomentPanel<f64>, CliError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let parse_err = |line: u64, message: String| CliError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let headers = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != PANEL_HEADER {
        return Err(parse_err(1, format!("expected header `{}`", PANEL_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |i: usize| -> Result<f64, CliError> {
            let v: f64 = rec[i]
                .parse()
                .map_err(|_| parse_err(line, format!("column {}: unparseable number `{}`", PANEL_HEADER[i], &rec[i])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(parse_err(line, format!("column {}: non-finite value", PANEL_HEADER[i])))
            }
        };
        let row = DailyMoments {
            day_id: rec[0].to_string(),
            rv: num(1)?,
            tv: num(2)?,
            fv: num(3)?,
            r_close: num(6)?,
        };
        if row.rv < 0.0 || row.fv < 0.0 {
            return Err(parse_err(line, "rv and fv must be non-negative".into()));
        }
        rows.push(row);
    }
    DailyMomentPanel::from_rows(rows).map_err(|_| CliError::Input(format!("{}: panel has no rows", path.display())))
}

pub fn read_panel_file(path: &Path) -> Result<DailyMomentPanel<f64>, CliError> {
    let file = std::fs::File::open(path).map_err(CliError::io(path))?;
    read_panel(file, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![
            DailyMoments {
                day_id: "2024-01-02".into(),
                rv: 1.0 / 3.0 * 1e-4,
                tv: -2.0f64.sqrt() * 1e-7,
                fv: std::f64::consts::PI * 1e-9,
                r_close: -0.012345678901234567,
            },
            DailyMoments {
                day_id: "2024-01-03".into(),
                rv: 5e-324,
                tv: 0.0,
                fv: f64::MAX,
                r_close: 1e-300,
            },
        ];
        let panel = DailyMomentPanel::from_rows(rows).unwrap();
        let mut buf = Vec::new();
        write_panel(&panel, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("day_id,rv,tv,fv,tv15,fv15,r_close,r3,r4\n"));
        let back = read_panel(buf.as_slice(), Path::new("p.csv")).unwrap();
        assert_eq!(back, panel);
    }

    #[test]
    fn bad_rows() {
        let head = "day_id,rv,tv,fv,tv15,fv15,r_close,r3,r4\n";
        let bad = format!("{head}a,1e-4,0,0,0,0,0,0,0\nb,x,0,0,0,0,0,0,0\n");
        let err = read_panel(bad.as_bytes(), Path::new("p.csv")).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let neg = format!("{head}a,-1e-4,0,0,0,0,0,0,0\n");
        assert!(read_panel(neg.as_bytes(), Path::new("p.csv")).is_err());
        assert!(read_panel(head.as_bytes(), Path::new("p.csv")).is_err());
        assert!(read_panel("a,b\n".as_bytes(), Path::new("p.csv")).is_err());
    }
}
