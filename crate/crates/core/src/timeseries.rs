//! Sampled current/voltage/temperature records.

use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TimeSeriesError {
    #[error("time series is empty")]
    Empty,
    #[error("time must be strictly increasing at sample {0}")]
    NonMonotoneTime(usize),
    #[error("column lengths differ: {0}")]
    RaggedColumns(String),
    #[error("missing required column `{0}`")]
    MissingColumn(&'static str),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

/// A sampled record with time, applied current (positive = discharge), and
/// optional voltage / temperature / Coulomb-counted SOC columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub current: Vec<f64>,
    pub voltage: Option<Vec<f64>>,
    pub temperature: Option<Vec<f64>>,
    pub soc_cc: Option<Vec<f64>>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, current: Vec<f64>) -> Result<Self, TimeSeriesError> {
        let ts = Self {
            t,
            current,
            ..Default::default()
        };
        ts.validate()?;
        Ok(ts)
    }

    pub fn validate(&self) -> Result<(), TimeSeriesError> {
        if self.t.is_empty() {
            return Err(TimeSeriesError::Empty);
        }
        for i in 1..self.t.len() {
            if self.t[i] <= self.t[i - 1] {
                return Err(TimeSeriesError::NonMonotoneTime(i));
            }
        }
        let n = self.t.len();
        let check = |name: &str, len: usize| {
            if len != n {
                Err(TimeSeriesError::RaggedColumns(format!(
                    "{name} has {len} samples, time has {n}"
                )))
            } else {
                Ok(())
            }
        };
        check("current", self.current.len())?;
        if let Some(v) = &self.voltage {
            check("voltage", v.len())?;
        }
        if let Some(v) = &self.temperature {
            check("temperature", v.len())?;
        }
        if let Some(v) = &self.soc_cc {
            check("soc_cc", v.len())?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn duration(&self) -> f64 {
        if self.t.is_empty() {
            0.0
        } else {
            self.t[self.t.len() - 1] - self.t[0]
        }
    }

    /// Constant-current hold sampled at `dt` for `duration` seconds.
    pub fn constant_current(current: f64, duration: f64, dt: f64) -> Self {
        let n = (duration / dt).round() as usize;
        let t: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
        let c = vec![current; t.len()];
        Self {
            t,
            current: c,
            ..Default::default()
        }
    }

    /// Concatenates `other` after `self`, shifting its clock to continue
    /// strictly after the last sample. The junction sample takes the new
    /// segment's current, so a zero-order-hold integrator switches segments
    /// exactly at the junction time.
    pub fn chain(mut self, other: &TimeSeries) -> Self {
        let offset = self.t.last().copied().unwrap_or(0.0);
        let skip_first = !other.t.is_empty() && other.t[0] == 0.0 && !self.t.is_empty();
        if skip_first {
            *self.current.last_mut().unwrap() = other.current[0];
        }
        let start = usize::from(skip_first);
        for k in start..other.t.len() {
            self.t.push(offset + other.t[k]);
            self.current.push(other.current[k]);
        }
        self
    }

    /// Reads a CSV with header `t,i[,v][,temp][,soc_cc]` (column order free,
    /// names matched case-insensitively; `current`/`voltage`/`temperature`
    /// accepted as aliases).
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, TimeSeriesError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())?;
        let headers = rdr.headers()?.clone();
        let find = |names: &[&str]| -> Option<usize> {
            headers
                .iter()
                .position(|h| names.iter().any(|n| h.eq_ignore_ascii_case(n)))
        };
        let it = find(&["t", "time", "time_s"]).ok_or(TimeSeriesError::MissingColumn("t"))?;
        let ii = find(&["i", "current", "current_a"]).ok_or(TimeSeriesError::MissingColumn("i"))?;
        let iv = find(&["v", "voltage", "voltage_v"]);
        let itemp = find(&["temp", "temperature", "t_k"]);
        let isoc = find(&["soc_cc", "soc"]);

        let mut ts = TimeSeries::default();
        let mut voltage = Vec::new();
        let mut temperature = Vec::new();
        let mut soc = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let get = |idx: usize| -> f64 {
                rec.get(idx)
                    .and_then(|s| s.parse().ok())
                    .unwrap_or(f64::NAN)
            };
            ts.t.push(get(it));
            ts.current.push(get(ii));
            if let Some(idx) = iv {
                voltage.push(get(idx));
            }
            if let Some(idx) = itemp {
                temperature.push(get(idx));
            }
            if let Some(idx) = isoc {
                soc.push(get(idx));
            }
        }
        if iv.is_some() {
            ts.voltage = Some(voltage);
        }
        if itemp.is_some() {
            ts.temperature = Some(temperature);
        }
        if isoc.is_some() {
            ts.soc_cc = Some(soc);
        }
        ts.validate()?;
        Ok(ts)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), TimeSeriesError> {
        let mut wtr = csv::Writer::from_path(path.as_ref())?;
        let mut header = vec!["t", "i"];
        if self.voltage.is_some() {
            header.push("v");
        }
        if self.temperature.is_some() {
            header.push("temp");
        }
        if self.soc_cc.is_some() {
            header.push("soc_cc");
        }
        wtr.write_record(&header)?;
        for k in 0..self.len() {
            let mut row = vec![self.t[k].to_string(), self.current[k].to_string()];
            if let Some(v) = &self.voltage {
                row.push(v[k].to_string());
            }
            if let Some(v) = &self.temperature {
                row.push(v[k].to_string());
            }
            if let Some(v) = &self.soc_cc {
                row.push(v[k].to_string());
            }
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monotone_time_enforced() {
        let err = TimeSeries::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).unwrap_err();
        assert!(matches!(err, TimeSeriesError::NonMonotoneTime(2)));
    }

    #[test]
    fn constant_current_shape() {
        let ts = TimeSeries::constant_current(1.5, 10.0, 1.0);
        assert_eq!(ts.len(), 11);
        assert_eq!(ts.t[10], 10.0);
        assert!(ts.current.iter().all(|&c| c == 1.5));
    }

    #[test]
    fn chain_keeps_time_monotone() {
        let a = TimeSeries::constant_current(1.0, 5.0, 1.0);
        let b = TimeSeries::constant_current(-1.0, 5.0, 1.0);
        let ab = a.chain(&b);
        ab.validate().unwrap();
        assert_eq!(ab.t.last().copied().unwrap(), 10.0);
        assert_eq!(ab.current[0], 1.0);
        assert_eq!(*ab.current.last().unwrap(), -1.0);
    }

    #[test]
    fn csv_round_trip_with_aliases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ts.csv");
        std::fs::write(&path, "Time,Current,Voltage\n0,1.0,3.6\n1,1.0,3.59\n").unwrap();
        let ts = TimeSeries::load_csv(&path).unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts.voltage.as_ref().unwrap()[1], 3.59);
    }
}
