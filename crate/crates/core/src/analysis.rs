//! Welch's t-test per time sample and fixed-vs-random TVLA verdicts.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::PowerTrace;

pub const DEFAULT_THRESHOLD: f64 = 4.5;
/// Magnitude reported for samples whose variance vanishes but whose means differ.
pub const SENTINEL_T: f64 = 1e6;
const DEGENERATE: f64 = 1e-30;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("trace set {set} has {got} traces, at least 2 are required")]
    SetTooSmall { set: char, got: usize },
    #[error("trace {index} of set {set} has {got} samples, expected {expected}")]
    LengthMismatch {
        set: char,
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("threshold must be positive and finite, got {0}")]
    Threshold(f64),
}

impl AsRef<[f64]> for PowerTrace {
    fn as_ref(&self) -> &[f64] {
        &self.samples
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TSeries {
    pub t: Vec<f64>,
    /// True where both variances vanish and `t` is 0 or the sentinel.
    pub undefined: Vec<bool>,
}

impl TSeries {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn undefined_count(&self) -> usize {
        self.undefined.iter().filter(|&&u| u).count()
    }

    /// CSV with header `sample,t,defined`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,t,defined\n");
        for (i, (t, u)) in self.t.iter().zip(&self.undefined).enumerate() {
            writeln!(out, "{i},{t},{}", u8::from(!u)).unwrap();
        }
        out
    }
}

#[derive(Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn var(&self) -> f64 {
        self.m2 / (self.n - 1.0)
    }
}

fn moments<T: AsRef<[f64]>>(set: &[T], name: char, len: usize) -> Result<Vec<Welford>, AnalysisError> {
    if set.len() < 2 {
        return Err(AnalysisError::SetTooSmall {
            set: name,
            got: set.len(),
        });
    }
    let mut acc = vec![Welford::default(); len];
    for (index, trace) in set.iter().enumerate() {
        let s = trace.as_ref();
        if s.len() != len {
            return Err(AnalysisError::LengthMismatch {
                set: name,
                index,
                got: s.len(),
                expected: len,
            });
        }
        for (w, &x) in acc.iter_mut().zip(s) {
            w.push(x);
        }
    }
    Ok(acc)
}

/// Welch's t per sample, `t = (μa − μb) / √(sa²/na + sb²/nb)`.
pub fn welch_t<A: AsRef<[f64]>, B: AsRef<[f64]>>(a: &[A], b: &[B]) -> Result<TSeries, AnalysisError> {
    let len = a
        .first()
        .map(|t| t.as_ref().len())
        .ok_or(AnalysisError::SetTooSmall { set: 'A', got: 0 })?;
    let ma = moments(a, 'A', len)?;
    let mb = moments(b, 'B', len)?;
    let mut t = Vec::with_capacity(len);
    let mut undefined = Vec::with_capacity(len);
    for (wa, wb) in ma.iter().zip(&mb) {
        let diff = wa.mean - wb.mean;
        let denom = (wa.var() / wa.n + wb.var() / wb.n).sqrt();
        if denom < DEGENERATE {
            t.push(if diff.abs() < DEGENERATE {
                0.0
            } else {
                SENTINEL_T.copysign(diff)
            });
            undefined.push(true);
        } else {
            t.push(diff / denom);
            undefined.push(false);
        }
    }
    Ok(TSeries { t, undefined })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvlaVerdict {
    pub threshold: f64,
    pub max_abs_t: f64,
    pub leaky: bool,
    pub first_violation_sample: Option<usize>,
    pub undefined_samples: usize,
}

impl TvlaVerdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdict serializes")
    }
}

/// Scan the defined samples of `series` against `±threshold`.
pub fn tvla_verdict(series: &TSeries, threshold: f64) -> Result<TvlaVerdict, AnalysisError> {
    if !(threshold > 0.0 && threshold.is_finite()) {
        return Err(AnalysisError::Threshold(threshold));
    }
    let mut max_abs_t: f64 = 0.0;
    let mut first = None;
    for (i, (&t, &u)) in series.t.iter().zip(&series.undefined).enumerate() {
        if u {
            continue;
        }
        max_abs_t = max_abs_t.max(t.abs());
        if first.is_none() && t.abs() > threshold {
            first = Some(i);
        }
    }
    Ok(TvlaVerdict {
        threshold,
        max_abs_t,
        leaky: first.is_some(),
        first_violation_sample: first,
        undefined_samples: series.undefined_count(),
    })
}
