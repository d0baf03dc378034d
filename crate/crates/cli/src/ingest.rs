//! Dataset ingestion with cleaning: duplicate timestamps dropped, rows with
//! non-finite values rejected (and counted), monotone time enforced, and
//! optional resampling to a fixed period by linear interpolation.

use std::path::Path;

use anyhow::{bail, Context, Result};
use cellbench_core::timeseries::TimeSeries;

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct DropReport {
    pub duplicate_timestamps: usize,
    pub bad_rows: usize,
}

/// Reads a `t,i[,v][,temp][,soc_cc]` CSV and cleans it. Column headers are
/// matched case-insensitively with the same aliases as the core loader.
pub fn ingest_timeseries(
    path: impl AsRef<Path>,
    resample_period: Option<f64>,
) -> Result<(TimeSeries, DropReport)> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let find = |names: &[&str]| -> Option<usize> {
        headers
            .iter()
            .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
    };
    let Some(it) = find(&["t", "time", "time_s"]) else {
        bail!("{}: missing time column", path.display())
    };
    let Some(ii) = find(&["i", "current", "current_a"]) else {
        bail!("{}: missing current column", path.display())
    };
    let iv = find(&["v", "voltage", "voltage_v"]);
    let itemp = find(&["temp", "temperature", "t_k"]);
    let isoc = find(&["soc_cc", "soc"]);

    // (t, i, v, temp, soc_cc)
    type Row = (f64, f64, Option<f64>, Option<f64>, Option<f64>);
    let mut report = DropReport::default();
    let mut rows: Vec<Row> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |idx: usize| -> Option<f64> {
            rec.get(idx)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
        };
        let t = parse(it);
        let i = parse(ii);
        let v = iv.map(parse);
        let temp = itemp.map(parse);
        let soc = isoc.map(parse);
        // a row is bad when any present column fails to parse to a finite value
        let bad = t.is_none()
            || i.is_none()
            || v == Some(None)
            || temp == Some(None)
            || soc == Some(None);
        if bad {
            report.bad_rows += 1;
            continue;
        }
        rows.push((
            t.unwrap(),
            i.unwrap(),
            v.flatten(),
            temp.flatten(),
            soc.flatten(),
        ));
    }
    if rows.is_empty() {
        bail!("{}: no usable rows", path.display());
    }

    // drop duplicate timestamps, keeping the first occurrence
    let mut deduped: Vec<Row> = Vec::with_capacity(rows.len());
    for row in rows {
        if deduped.last().is_some_and(|last| last.0 == row.0) {
            report.duplicate_timestamps += 1;
            continue;
        }
        deduped.push(row);
    }
    if report.bad_rows > 0 || report.duplicate_timestamps > 0 {
        log::warn!(
            "{}: dropped {} bad rows, {} duplicate timestamps",
            path.display(),
            report.bad_rows,
            report.duplicate_timestamps
        );
    }
    for w in deduped.windows(2) {
        if w[1].0 <= w[0].0 {
            bail!(
                "{}: time not strictly increasing at t = {}",
                path.display(),
                w[1].0
            );
        }
    }

    let mut ts = TimeSeries {
        t: deduped.iter().map(|r| r.0).collect(),
        current: deduped.iter().map(|r| r.1).collect(),
        voltage: iv.map(|_| deduped.iter().map(|r| r.2.unwrap()).collect()),
        temperature: itemp.map(|_| deduped.iter().map(|r| r.3.unwrap()).collect()),
        soc_cc: isoc.map(|_| deduped.iter().map(|r| r.4.unwrap()).collect()),
    };
    if let Some(period) = resample_period {
        ts = resample(&ts, period)?;
    }
    ts.validate()?;
    Ok((ts, report))
}

/// Linear interpolation onto a uniform clock starting at the first sample.
fn resample(ts: &TimeSeries, period: f64) -> Result<TimeSeries> {
    if period <= 0.0 {
        bail!("resample period must be positive, got {period}");
    }
    let t0 = ts.t[0];
    let t_end = *ts.t.last().unwrap();
    let n = ((t_end - t0) / period).floor() as usize;
    let interp_column = |col: &[f64]| -> Vec<f64> {
        (0..=n)
            .map(|k| {
                let t = t0 + k as f64 * period;
                let hi = ts.t.partition_point(|&v| v <= t).min(ts.t.len() - 1);
                let lo = hi.saturating_sub(1);
                if hi == lo {
                    return col[lo];
                }
                let w = ((t - ts.t[lo]) / (ts.t[hi] - ts.t[lo])).clamp(0.0, 1.0);
                col[lo] + w * (col[hi] - col[lo])
            })
            .collect()
    };
    Ok(TimeSeries {
        t: (0..=n).map(|k| t0 + k as f64 * period).collect(),
        current: interp_column(&ts.current),
        voltage: ts.voltage.as_ref().map(|c| interp_column(c)),
        temperature: ts.temperature.as_ref().map(|c| interp_column(c)),
        soc_cc: ts.soc_cc.as_ref().map(|c| interp_column(c)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(path: &Path, body: &str) {
        std::fs::write(path, body).unwrap();
    }

    #[test]
    fn clean_file_passes_through() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write(&p, "t,i,v\n0,1,3.6\n1,1,3.59\n2,1,3.58\n");
        let (ts, report) = ingest_timeseries(&p, None).unwrap();
        assert_eq!(ts.len(), 3);
        assert_eq!(report, DropReport::default());
    }

    #[test]
    fn duplicate_timestamp_dropped_and_counted() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write(&p, "t,i,v\n0,1,3.6\n1,1,3.59\n1,1,3.585\n2,1,3.58\n");
        let (ts, report) = ingest_timeseries(&p, None).unwrap();
        assert_eq!(ts.len(), 3);
        assert_eq!(report.duplicate_timestamps, 1);
        ts.validate().unwrap();
    }

    #[test]
    fn nan_row_excluded_with_count() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write(&p, "t,i,v\n0,1,3.6\n1,1,NaN\n2,1,3.58\n");
        let (ts, report) = ingest_timeseries(&p, None).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(report.bad_rows, 1);
    }

    #[test]
    fn decreasing_time_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write(&p, "t,i\n0,1\n2,1\n1,1\n");
        assert!(ingest_timeseries(&p, None).is_err());
    }

    #[test]
    fn resampling_interpolates_linearly() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write(&p, "t,i\n0,0\n2,2\n4,4\n");
        let (ts, _) = ingest_timeseries(&p, Some(1.0)).unwrap();
        assert_eq!(ts.t, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(ts.current, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }
}
