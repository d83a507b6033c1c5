//! Single complementary-switching memristor: write/read truth tables, power
//! marks, bias waveforms, sampled power and cycle-to-cycle variation.
//!
//! State `'0'` is the branch pair {PH, NL}, state `'1'` is {PL, NH}. A positive
//! bias probes the P branch, a negative bias the N branch.

use std::fmt;
use std::ops::Not;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::DeviceRng;

/// Truncation of the C2C perturbation, in standard deviations.
pub const C2C_TRUNCATION: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("resistance {name} must be positive and finite, got {value}")]
    NonPositiveResistance { name: &'static str, value: f64 },
    #[error("low-resistance branch {low} must be below {high}")]
    BranchOrder { low: &'static str, high: &'static str },
    #[error("invalid device parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DeviceState {
    /// {PH, NL}
    #[default]
    #[serde(rename = "0")]
    Zero,
    /// {PL, NH}
    #[serde(rename = "1")]
    One,
}

impl DeviceState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            DeviceState::One
        } else {
            DeviceState::Zero
        }
    }

    pub fn bit(self) -> bool {
        self == DeviceState::One
    }
}

impl Not for DeviceState {
    type Output = DeviceState;

    fn not(self) -> DeviceState {
        match self {
            DeviceState::Zero => DeviceState::One,
            DeviceState::One => DeviceState::Zero,
        }
    }
}

impl fmt::Display for DeviceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeviceState::Zero => f.write_str("{PH,NL}"),
            DeviceState::One => f.write_str("{PL,NH}"),
        }
    }
}

/// Per-branch resistances in ohms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BranchResistances {
    pub r_pl: f64,
    pub r_ph: f64,
    pub r_nl: f64,
    pub r_nh: f64,
}

impl Default for BranchResistances {
    fn default() -> Self {
        Self {
            r_pl: 1.0e6,
            r_ph: 100.0e6,
            r_nl: 1.0e6,
            r_nh: 100.0e6,
        }
    }
}

impl BranchResistances {
    pub fn validate(&self) -> Result<(), DeviceError> {
        for (name, value) in [
            ("r_pl", self.r_pl),
            ("r_ph", self.r_ph),
            ("r_nl", self.r_nl),
            ("r_nh", self.r_nh),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DeviceError::NonPositiveResistance { name, value });
            }
        }
        if self.r_pl >= self.r_ph {
            return Err(DeviceError::BranchOrder {
                low: "r_pl",
                high: "r_ph",
            });
        }
        if self.r_nl >= self.r_nh {
            return Err(DeviceError::BranchOrder {
                low: "r_nl",
                high: "r_nh",
            });
        }
        Ok(())
    }

    /// Resistance seen by a bias of the given sign in the given state.
    /// `None` for zero bias.
    pub fn branch(&self, state: DeviceState, voltage: f64) -> Option<f64> {
        if voltage > 0.0 {
            Some(match state {
                DeviceState::Zero => self.r_ph,
                DeviceState::One => self.r_pl,
            })
        } else if voltage < 0.0 {
            Some(match state {
                DeviceState::Zero => self.r_nl,
                DeviceState::One => self.r_nh,
            })
        } else {
            None
        }
    }
}

/// Electrical parameters. Voltages in volts, times in milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeviceParams {
    pub nominal: BranchResistances,
    pub v_write: f64,
    pub v_read: f64,
    pub v_threshold: f64,
    pub t_cycle: f64,
    pub dt: f64,
    pub c2c_sigma: f64,
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self {
            nominal: BranchResistances::default(),
            v_write: 6.0,
            v_read: 2.5,
            v_threshold: 4.0,
            t_cycle: 100.0,
            dt: 1.0,
            c2c_sigma: 0.0,
        }
    }
}

impl DeviceParams {
    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.c2c_sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        self.nominal.validate()?;
        let bad = |name, reason: &str| {
            Err(DeviceError::InvalidParam {
                name,
                reason: reason.to_string(),
            })
        };
        if !(self.v_write.is_finite() && self.v_write > 0.0) {
            return bad("v_write", "must be positive");
        }
        if !(self.v_threshold > 0.0 && self.v_threshold < self.v_write) {
            return bad("v_threshold", "must satisfy 0 < v_threshold < v_write");
        }
        if !(self.v_read > 0.0 && self.v_read < self.v_threshold) {
            return bad("v_read", "must satisfy 0 < v_read < v_threshold");
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return bad("dt", "must be positive");
        }
        if !(self.t_cycle.is_finite() && self.t_cycle > 0.0) {
            return bad("t_cycle", "must be positive");
        }
        let ratio = self.t_cycle / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 2.0 {
            return bad("t_cycle", "must be an integer multiple (>= 2) of dt");
        }
        if !(0.0..1.0).contains(&self.c2c_sigma) {
            return bad("c2c_sigma", "must satisfy 0 <= sigma < 1");
        }
        Ok(())
    }

    pub fn samples_per_cycle(&self) -> usize {
        (self.t_cycle / self.dt).round() as usize
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("device params serialize")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WriteMark {
    /// No bias.
    A,
    /// Negative bias, state stays '0'.
    B,
    /// Positive bias, '0' switches to '1'.
    C,
    /// Negative bias, '1' switches to '0'.
    D,
    /// Positive bias, state stays '1'.
    E,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReadMark {
    /// PH probed (state '0', r=1).
    W,
    /// NH probed (state '1', r=0).
    X,
    /// PL probed (state '1', r=1).
    Y,
    /// NL probed (state '0', r=0).
    Z,
}

impl fmt::Display for WriteMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl fmt::Display for ReadMark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CycleKind {
    Init,
    Write,
    Read,
}

/// Write truth table. TE/BE are electrode logic levels.
pub fn write_transition(state: DeviceState, te: bool, be: bool) -> (DeviceState, WriteMark) {
    match (te, be, state) {
        (true, true, _) | (false, false, _) => (state, WriteMark::A),
        (false, true, DeviceState::Zero) => (DeviceState::Zero, WriteMark::B),
        (false, true, DeviceState::One) => (DeviceState::Zero, WriteMark::D),
        (true, false, DeviceState::Zero) => (DeviceState::One, WriteMark::C),
        (true, false, DeviceState::One) => (DeviceState::One, WriteMark::E),
    }
}

/// Non-destructive read. Low-resistance branches read as '1', so r=1 returns
/// the state and r=0 its complement.
pub fn read_value(state: DeviceState, r: bool) -> (bool, ReadMark) {
    match (state, r) {
        (DeviceState::Zero, true) => (false, ReadMark::W),
        (DeviceState::One, true) => (true, ReadMark::Y),
        (DeviceState::Zero, false) => (true, ReadMark::Z),
        (DeviceState::One, false) => (false, ReadMark::X),
    }
}

/// Signed write bias for electrode levels.
pub fn write_bias(params: &DeviceParams, te: bool, be: bool) -> f64 {
    match (te, be) {
        (true, false) => params.v_write,
        (false, true) => -params.v_write,
        _ => 0.0,
    }
}

/// Triangular pulse 0 → `v_peak` → 0 over one cycle, sampled at `k * dt` for
/// `k` in `0..t_cycle/dt`. The closing zero at `t_cycle` is the first sample
/// of the next cycle.
pub fn write_waveform(params: &DeviceParams, v_peak: f64) -> Vec<f64> {
    let n = params.samples_per_cycle();
    let half = n as f64 / 2.0;
    (0..n)
        .map(|k| v_peak * (1.0 - ((k as f64 - half) / half).abs()))
        .collect()
}

/// Rectangular read pulse, `+v_read` for r=1 and `-v_read` for r=0.
pub fn read_waveform(params: &DeviceParams, r: bool) -> Vec<f64> {
    let v = if r { params.v_read } else { -params.v_read };
    vec![v; params.samples_per_cycle()]
}

/// Instantaneous power `V²/R` per sample. The state flips at the first sample
/// whose magnitude reaches the threshold with a polarity opposing the state;
/// that sample already uses the new branch.
pub fn cycle_energy(
    state_before: DeviceState,
    waveform: &[f64],
    resistances: &BranchResistances,
    params: &DeviceParams,
) -> (Vec<f64>, DeviceState) {
    let mut state = state_before;
    let power = waveform
        .iter()
        .map(|&v| {
            if v.abs() >= params.v_threshold {
                if v > 0.0 && state == DeviceState::Zero {
                    state = DeviceState::One;
                } else if v < 0.0 && state == DeviceState::One {
                    state = DeviceState::Zero;
                }
            }
            match resistances.branch(state, v) {
                Some(r) => v * v / r,
                None => 0.0,
            }
        })
        .collect();
    (power, state)
}

/// Integrated energy in joules of a power series sampled every `dt_ms`.
pub fn energy(power: &[f64], dt_ms: f64) -> f64 {
    power.iter().sum::<f64>() * dt_ms * 1e-3
}

/// Multiply each branch by an independent `1 + ε`, ε ~ N(0, σ²) truncated to ±3σ.
pub fn perturb_resistances(
    nominal: &BranchResistances,
    sigma: f64,
    rng: &mut DeviceRng,
) -> BranchResistances {
    if sigma == 0.0 {
        return *nominal;
    }
    let mut factor = || 1.0 + sigma * rng.next_truncated_normal(C2C_TRUNCATION);
    BranchResistances {
        r_pl: nominal.r_pl * factor(),
        r_ph: nominal.r_ph * factor(),
        r_nl: nominal.r_nl * factor(),
        r_nh: nominal.r_nh * factor(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use DeviceState::{One, Zero};

    fn ideal() -> DeviceParams {
        DeviceParams::default()
    }

    #[test]
    fn write_examples() {
        assert_eq!(write_transition(Zero, false, true), (Zero, WriteMark::B));
        assert_eq!(write_transition(One, true, true), (One, WriteMark::A));
        assert_eq!(write_transition(Zero, true, false), (One, WriteMark::C));
        assert_eq!(write_transition(One, false, true), (Zero, WriteMark::D));
    }

    #[test]
    fn write_marks_follow_bias_and_switching() {
        let params = ideal();
        for state in [Zero, One] {
            for te in [false, true] {
                for be in [false, true] {
                    let (next, mark) = write_transition(state, te, be);
                    let v = write_bias(&params, te, be);
                    let switched = next != state;
                    match mark {
                        WriteMark::A => assert!(v == 0.0 && !switched),
                        WriteMark::B => assert!(v < 0.0 && !switched),
                        WriteMark::D => assert!(v < 0.0 && switched),
                        WriteMark::C => assert!(v > 0.0 && switched),
                        WriteMark::E => assert!(v > 0.0 && !switched),
                    }
                    if te != be {
                        let (again, _) = write_transition(next, te, be);
                        assert_eq!(again, next);
                    }
                }
            }
        }
    }

    #[test]
    fn read_examples() {
        assert_eq!(read_value(Zero, true), (false, ReadMark::W));
        assert_eq!(read_value(One, true), (true, ReadMark::Y));
        assert_eq!(read_value(One, false), (false, ReadMark::X));
        assert_eq!(read_value(Zero, false), (true, ReadMark::Z));
        for s in [Zero, One] {
            assert_ne!(read_value(s, true).0, read_value(s, false).0);
        }
    }

    #[test]
    fn triangle_shape() {
        let params = ideal();
        let w = write_waveform(&params, 6.0);
        assert_eq!(w.len(), 100);
        assert_eq!(w[0], 0.0);
        assert_eq!(w[50], 6.0);
        assert!(w.iter().all(|v| (0.0..=6.0).contains(v)));
        assert!(write_waveform(&params, 0.0).iter().all(|&v| v == 0.0));
        let sq: f64 = w.iter().map(|v| v * v).sum::<f64>() * params.dt * 1e-3;
        assert!((sq - 1.2).abs() / 1.2 < 0.01, "{sq}");
    }

    #[test]
    fn read_pulse() {
        let params = ideal();
        assert!(read_waveform(&params, true).iter().all(|&v| v == 2.5));
        assert!(read_waveform(&params, false).iter().all(|&v| v == -2.5));
        let sq: f64 = read_waveform(&params, true).iter().map(|v| v * v).sum::<f64>() * 1e-3;
        assert!((sq - 0.625).abs() < 1e-12);
    }

    #[test]
    fn energies_match_closed_forms() {
        let params = ideal();
        let res = params.nominal;
        let (p, s) = cycle_energy(Zero, &write_waveform(&params, 0.0), &res, &params);
        assert_eq!(s, Zero);
        assert_eq!(energy(&p, params.dt), 0.0);

        let (p, s) = cycle_energy(One, &write_waveform(&params, 6.0), &res, &params);
        assert_eq!(s, One);
        let e = energy(&p, params.dt);
        assert!((e - 1.2e-6).abs() / 1.2e-6 < 0.01, "{e}");

        let (p, s) = cycle_energy(One, &read_waveform(&params, true), &res, &params);
        assert_eq!(s, One);
        assert!((energy(&p, params.dt) - 0.625e-6).abs() < 1e-15);
    }

    #[test]
    fn switching_cycles_flip_once_and_reads_never() {
        let params = ideal();
        let res = params.nominal;
        let (_, s) = cycle_energy(Zero, &write_waveform(&params, 6.0), &res, &params);
        assert_eq!(s, One);
        let (_, s) = cycle_energy(One, &write_waveform(&params, -6.0), &res, &params);
        assert_eq!(s, Zero);
        for st in [Zero, One] {
            for r in [false, true] {
                let (_, after) = cycle_energy(st, &read_waveform(&params, r), &res, &params);
                assert_eq!(after, st);
            }
        }
        // C: high branch until the +4 V crossing at sample 34
        let (p, _) = cycle_energy(Zero, &write_waveform(&params, 6.0), &res, &params);
        let w = write_waveform(&params, 6.0);
        assert_eq!(p[33], w[33] * w[33] / res.r_ph);
        assert_eq!(p[34], w[34] * w[34] / res.r_pl);
    }

    #[test]
    fn mark_b_equals_mark_e_for_symmetric_branches() {
        let params = ideal();
        let res = params.nominal;
        let (pb, _) = cycle_energy(Zero, &write_waveform(&params, -6.0), &res, &params);
        let (pe, _) = cycle_energy(One, &write_waveform(&params, 6.0), &res, &params);
        let (eb, ee) = (energy(&pb, 1.0), energy(&pe, 1.0));
        assert!((eb - ee).abs() <= 1e-12 * ee);
        let (pc, _) = cycle_energy(Zero, &write_waveform(&params, 6.0), &res, &params);
        let (pd, _) = cycle_energy(One, &write_waveform(&params, -6.0), &res, &params);
        assert_eq!(pc, pd);
    }

    #[test]
    fn zero_sigma_is_deterministic() {
        let params = ideal();
        let mut rng = DeviceRng::new(3);
        assert_eq!(
            perturb_resistances(&params.nominal, 0.0, &mut rng),
            params.nominal
        );
        let w = write_waveform(&params, 6.0);
        let a = cycle_energy(Zero, &w, &params.nominal, &params);
        let b = cycle_energy(Zero, &w, &params.nominal, &params);
        assert_eq!(a, b);
    }

    #[test]
    fn perturbation_is_seeded() {
        let nominal = BranchResistances::default();
        let a = perturb_resistances(&nominal, 0.1, &mut DeviceRng::new(99));
        let b = perturb_resistances(&nominal, 0.1, &mut DeviceRng::new(99));
        assert_eq!(a, b);
        assert_ne!(a, nominal);
    }

    #[test]
    fn perturbation_spread_matches_truncated_normal() {
        // Monte-Carlo oracle: std-dev of a N(0, 0.3²) truncated at ±3σ is
        // 0.3 * sqrt(1 - 6φ(3)/(2Φ(3)-1)) ≈ 0.296.
        let nominal = BranchResistances::default();
        let mut rng = DeviceRng::new(2024);
        let eps: Vec<f64> = (0..10_000)
            .map(|_| perturb_resistances(&nominal, 0.3, &mut rng).r_pl / nominal.r_pl - 1.0)
            .collect();
        let mean = eps.iter().sum::<f64>() / eps.len() as f64;
        let sd = (eps.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (eps.len() - 1) as f64).sqrt();
        assert!((0.26..=0.30).contains(&sd), "{sd}");
        assert!(eps.iter().all(|e| e.abs() <= 0.9 + 1e-12));
    }

    #[test]
    fn params_validation() {
        assert!(ideal().validate().is_ok());
        let mut p = ideal();
        p.v_threshold = 7.0;
        assert!(p.validate().is_err());
        let mut p = ideal();
        p.v_read = 4.5;
        assert!(p.validate().is_err());
        let mut p = ideal();
        p.dt = 0.3;
        assert!(p.validate().is_err());
        let mut p = ideal();
        p.c2c_sigma = 1.0;
        assert!(p.validate().is_err());
        let mut p = ideal();
        p.nominal.r_pl = 200e6;
        assert_eq!(
            p.validate(),
            Err(DeviceError::BranchOrder {
                low: "r_pl",
                high: "r_ph"
            })
        );
    }

    #[test]
    fn params_json_round_trip() {
        let p = ideal().with_sigma(0.1);
        let text = p.to_json();
        assert!(text.contains("\"v_threshold\""));
        assert!(text.contains("\"r_nh\""));
        assert_eq!(DeviceParams::from_json(&text).unwrap(), p);
        let partial = DeviceParams::from_json(r#"{"c2c_sigma": 0.3}"#).unwrap();
        assert_eq!(partial.v_write, 6.0);
        assert!(DeviceParams::from_json(r#"{"bogus": 1}"#).is_err());
    }
}
