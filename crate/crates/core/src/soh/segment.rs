//! Charge-event segmentation: locate the constant-current and
//! constant-voltage phases of a charge record and crop the pre-specified
//! feature windows. Time inside a window is positional only (elapsed from
//! phase start); absolute timestamps never become features.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::timeseries::TimeSeries;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("record contains no charge event (threshold {0} A)")]
    NoChargeEvent(f64),
    #[error("record has no voltage column")]
    NoVoltage,
    #[error("{phase} phase ({available:.1} s) shorter than the requested window ending at {requested:.1} s")]
    WindowTooShort {
        phase: &'static str,
        available: f64,
        requested: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct SegmentOptions {
    /// Minimum charging current magnitude to count as a charge event, A.
    pub current_threshold: f64,
    /// Relative flatness tolerance classifying CC samples.
    pub cc_tolerance: f64,
    /// Voltage flatness tolerance classifying CV samples, V.
    pub cv_tolerance: f64,
    /// CC feature window (offset, length) from phase start, s.
    pub window_cc: (f64, f64),
    /// CV feature window (offset, length) from phase start, s.
    pub window_cv: (f64, f64),
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            current_threshold: 0.05,
            cc_tolerance: 0.05,
            cv_tolerance: 0.01,
            window_cc: (0.0, 600.0),
            window_cv: (0.0, 600.0),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SegmentMeta {
    pub cell_id: String,
    pub cycle_index: u32,
    pub temperature: f64,
}

/// Windowed CC voltage and CV current samples of one charge event. Times are
/// elapsed seconds from the respective phase start.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargeSegment {
    pub cc_time: Vec<f64>,
    pub cc_voltage: Vec<f64>,
    pub cv_time: Vec<f64>,
    pub cv_current: Vec<f64>,
    /// The protocol had no CV tail (pure CC charge).
    pub cv_missing: bool,
    pub meta: SegmentMeta,
}

/// Detects the charge event (charging current is negative) and crops the
/// feature windows. A missing CV tail is flagged, not an error; a window
/// that does not fit inside a present phase is an error.
pub fn segment_charge(
    record: &TimeSeries,
    opts: &SegmentOptions,
    meta: SegmentMeta,
) -> Result<ChargeSegment, SegmentError> {
    let voltage = record.voltage.as_ref().ok_or(SegmentError::NoVoltage)?;

    // longest contiguous run of charging samples
    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for k in 0..=record.len() {
        let charging = k < record.len() && record.current[k] <= -opts.current_threshold;
        match (charging, run_start) {
            (true, None) => run_start = Some(k),
            (false, Some(s)) => {
                let len = k - s;
                if best.is_none_or(|(bs, be)| len > be - bs) {
                    best = Some((s, k));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    let (start, end) = best.ok_or(SegmentError::NoChargeEvent(opts.current_threshold))?;

    // CC: samples holding the run's peak current magnitude within tolerance
    let i_peak = record.current[start..end]
        .iter()
        .fold(0.0f64, |m, &c| m.max(c.abs()));
    let mut switch = end;
    for k in start..end {
        if record.current[k].abs() < (1.0 - opts.cc_tolerance) * i_peak {
            switch = k;
            break;
        }
    }

    // CV: from the switch while voltage stays flat
    let mut cv_end = switch;
    if switch < end {
        let v_ref = voltage[switch];
        cv_end = end;
        for (k, v) in voltage.iter().enumerate().take(end).skip(switch) {
            if (v - v_ref).abs() > opts.cv_tolerance {
                cv_end = k;
                break;
            }
        }
    }

    let crop = |phase: &'static str,
                range: std::ops::Range<usize>,
                window: (f64, f64),
                column: &[f64]|
     -> Result<(Vec<f64>, Vec<f64>), SegmentError> {
        let t0 = record.t[range.start];
        let available = record.t[range.end - 1] - t0;
        let requested = window.0 + window.1;
        if available + 1e-9 < requested {
            return Err(SegmentError::WindowTooShort {
                phase,
                available,
                requested,
            });
        }
        let mut ts = Vec::new();
        let mut ys = Vec::new();
        for k in range {
            let elapsed = record.t[k] - t0;
            if elapsed >= window.0 && elapsed <= window.0 + window.1 {
                ts.push(elapsed - window.0);
                ys.push(column[k]);
            }
        }
        Ok((ts, ys))
    };

    let (cc_time, cc_voltage) = crop("CC", start..switch.max(start + 1), opts.window_cc, voltage)?;

    let (cv_time, cv_current, cv_missing) = if switch >= cv_end {
        (Vec::new(), Vec::new(), true)
    } else {
        let (t, c) = crop("CV", switch..cv_end, opts.window_cv, &record.current)?;
        (t, c, false)
    };

    Ok(ChargeSegment {
        cc_time,
        cc_voltage,
        cv_time,
        cv_current,
        cv_missing,
        meta,
    })
}
