//! Generic cycling-data container with CSV interchange, plus a seeded
//! synthetic-degradation generator used for tests and examples.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::TimeSeries;

#[derive(Debug, Error)]
pub enum CyclingError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad cycling csv: {0}")]
    Format(String),
}

/// One charge record of one cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleRecord {
    pub cycle_index: u32,
    pub record: TimeSeries,
    /// Capacity measured at this point of life, Ah (absent for cycles
    /// awaiting estimation).
    pub q_measured_ah: Option<f64>,
    pub temperature: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CyclingDataset {
    pub cycles: Vec<CycleRecord>,
}

impl CyclingDataset {
    /// Reads `t,i,v,temp,cycle_index[,q_measured]` rows grouped by cycle.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, CyclingError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_path(path.as_ref())?;
        let headers = rdr.headers()?.clone();
        let idx = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
        let (it, ii, iv) = match (idx("t"), idx("i"), idx("v")) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => return Err(CyclingError::Format("need t, i, v columns".into())),
        };
        let itemp = idx("temp");
        let icycle = idx("cycle_index")
            .ok_or_else(|| CyclingError::Format("need cycle_index column".into()))?;
        let iq = idx("q_measured");

        let mut cycles: Vec<CycleRecord> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let fget = |k: usize| -> Result<f64, CyclingError> {
                rec.get(k)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| CyclingError::Format(format!("bad float in column {k}")))
            };
            let cycle: u32 = rec
                .get(icycle)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| CyclingError::Format("bad cycle_index".into()))?;
            let q = iq.and_then(|k| rec.get(k)).and_then(|s| {
                if s.is_empty() {
                    None
                } else {
                    s.parse::<f64>().ok()
                }
            });
            let temp = itemp.map(&fget).transpose()?.unwrap_or(298.15);
            if cycles.last().map(|c| c.cycle_index) != Some(cycle) {
                cycles.push(CycleRecord {
                    cycle_index: cycle,
                    record: TimeSeries::default(),
                    q_measured_ah: q,
                    temperature: temp,
                });
            }
            let current = cycles.last_mut().unwrap();
            current.record.t.push(fget(it)?);
            current.record.current.push(fget(ii)?);
            current
                .record
                .voltage
                .get_or_insert_with(Vec::new)
                .push(fget(iv)?);
        }
        for c in &cycles {
            c.record
                .validate()
                .map_err(|e| CyclingError::Format(format!("cycle {}: {e}", c.cycle_index)))?;
        }
        Ok(Self { cycles })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), CyclingError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path.as_ref())?);
        writeln!(f, "t,i,v,temp,cycle_index,q_measured")?;
        for c in &self.cycles {
            let v = c
                .record
                .voltage
                .as_ref()
                .expect("cycling records carry voltage");
            let q = c.q_measured_ah.map(|q| q.to_string()).unwrap_or_default();
            for (k, vk) in v.iter().enumerate() {
                writeln!(
                    f,
                    "{},{},{},{},{},{}",
                    c.record.t[k], c.record.current[k], vk, c.temperature, c.cycle_index, q
                )?;
            }
        }
        f.flush()?;
        Ok(())
    }
}

/// Parameters of the synthetic degradation generator.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticCyclingSpec {
    pub cycles: usize,
    pub q_nom_ah: f64,
    /// Relative capacity loss per cycle (linear term).
    pub linear_fade: f64,
    /// Relative capacity loss times sqrt(cycle).
    pub sqrt_fade: f64,
    /// Relative noise on the measured capacity.
    pub capacity_noise: f64,
    /// Absolute noise on voltage samples, V.
    pub voltage_noise: f64,
    pub dt: f64,
}

impl Default for SyntheticCyclingSpec {
    fn default() -> Self {
        Self {
            cycles: 60,
            q_nom_ah: 3.0,
            linear_fade: 0.002,
            sqrt_fade: 0.01,
            capacity_noise: 0.002,
            voltage_noise: 0.0,
            dt: 5.0,
        }
    }
}

/// Generates CC-CV charge records whose shape degrades with capacity: the
/// CC voltage ramp steepens and the CV tail shortens as the cell fades.
pub fn synthetic_cycling(spec: &SyntheticCyclingSpec, seed: u64) -> CyclingDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cycles = Vec::with_capacity(spec.cycles);
    let i_cc = 0.5 * spec.q_nom_ah; // C/2 on the fresh cell
    for k in 0..spec.cycles {
        let kf = k as f64;
        let q_true =
            spec.q_nom_ah * (1.0 - spec.linear_fade * kf - spec.sqrt_fade * kf.sqrt()).max(0.2);
        let noise = if spec.capacity_noise > 0.0 {
            1.0 + rng.gen_range(-spec.capacity_noise..=spec.capacity_noise)
        } else {
            1.0
        };
        let q_measured = q_true * noise;

        // CC: charge 75% of the true capacity at fixed current
        let t_cc = 0.75 * q_true * 3600.0 / i_cc;
        // CV: exponential tail whose time constant scales with health
        let tau_cv = 400.0 * q_true / spec.q_nom_ah;
        let t_cv = 900.0;
        let n = ((t_cc + t_cv) / spec.dt).floor() as usize;
        let mut t = Vec::with_capacity(n + 1);
        let mut current = Vec::with_capacity(n + 1);
        let mut voltage = Vec::with_capacity(n + 1);
        for s in 0..=n {
            let tk = s as f64 * spec.dt;
            t.push(tk);
            if tk < t_cc {
                let tau = tk / t_cc;
                current.push(-i_cc);
                let v = 3.45 + 0.65 * tau.powf(0.9);
                let dv = if spec.voltage_noise > 0.0 {
                    rng.gen_range(-spec.voltage_noise..=spec.voltage_noise)
                } else {
                    0.0
                };
                voltage.push(v + dv);
            } else {
                current.push(-i_cc * (-(tk - t_cc) / tau_cv).exp());
                voltage.push(4.1);
            }
        }
        cycles.push(CycleRecord {
            cycle_index: k as u32,
            record: TimeSeries {
                t,
                current,
                voltage: Some(voltage),
                ..Default::default()
            },
            q_measured_ah: Some(q_measured),
            temperature: 298.15,
        });
    }
    CyclingDataset { cycles }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generator_is_deterministic_and_fading() {
        let spec = SyntheticCyclingSpec::default();
        let a = synthetic_cycling(&spec, 5);
        let b = synthetic_cycling(&spec, 5);
        assert_eq!(a, b);
        let q0 = a.cycles[0].q_measured_ah.unwrap();
        let q_last = a.cycles.last().unwrap().q_measured_ah.unwrap();
        assert!(q_last < q0);
    }

    #[test]
    fn csv_round_trip() {
        let spec = SyntheticCyclingSpec {
            cycles: 3,
            dt: 60.0,
            ..Default::default()
        };
        let ds = synthetic_cycling(&spec, 1);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cycles.csv");
        ds.save_csv(&path).unwrap();
        let back = CyclingDataset::load_csv(&path).unwrap();
        assert_eq!(back.cycles.len(), 3);
        assert_eq!(back.cycles[2].cycle_index, 2);
        let q_orig = ds.cycles[1].q_measured_ah.unwrap();
        let q_back = back.cycles[1].q_measured_ah.unwrap();
        assert!((q_orig - q_back).abs() < 1e-12);
    }
}
