//! Cycle-by-cycle execution of a [`Schedule`] on the device model, producing
//! total-power traces, plus fixed-vs-random trace campaigns and their on-disk
//! form.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{
    cycle_energy, perturb_resistances, read_value, read_waveform, write_bias, write_waveform, CycleKind,
    DeviceError, DeviceParams, DeviceState,
};
use crate::hiding::canonical_sum;
use crate::netlist::{schedule, Netlist, NetlistError, Schedule};
use crate::rng::DeviceRng;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "memcrs-traces/1";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
    #[error("campaign input `{0}` is neither a plaintext bit p<i> nor a key bit k<i>")]
    CampaignInput(String),
    #[error("{name} {value:#x} does not fit in {width} bits")]
    ValueWidth {
        name: &'static str,
        value: u32,
        width: usize,
    },
    #[error("each trace class needs at least 2 traces (fixed {n_fixed}, random {n_random})")]
    TooFewTraces { n_fixed: usize, n_random: usize },
}

#[derive(Debug, Error)]
pub enum TraceIoError {
    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no {MANIFEST_FILE} in {}", .0.display())]
    MissingManifest(PathBuf),
    #[error("{}:{line}: {msg}", .path.display())]
    Malformed { path: PathBuf, line: usize, msg: String },
    #[error("trace set is empty")]
    Empty,
    #[error("trace {index} has {got} samples, expected {expected}")]
    LengthMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceIoError + '_ {
    move |source| TraceIoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub device: DeviceParams,
    pub seed: u64,
    pub include_init: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            device: DeviceParams::default(),
            seed: 0,
            include_init: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceClass {
    Fixed,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    /// Input bits in netlist order.
    pub inputs: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plaintext: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<TraceClass>,
    pub hiding: bool,
    pub seed: u64,
    pub stream: u64,
    pub sigma: f64,
    pub dt_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerTrace {
    pub samples: Vec<f64>,
    pub meta: TraceMeta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub trace: PowerTrace,
    /// Output bits read from the functional cells.
    pub outputs: Vec<bool>,
}

fn bit_string(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Simulate one evaluation using random stream 0 of `params.seed`.
pub fn simulate_run(schedule: &Schedule, inputs: &[bool], params: &SimParams) -> Result<RunResult, SimError> {
    let mut rng = DeviceRng::stream(params.seed, 0);
    simulate_with_rng(schedule, inputs, params, &mut rng, 0)
}

struct Waveforms {
    write_pos: Vec<f64>,
    write_neg: Vec<f64>,
    idle: Vec<f64>,
    read_pos: Vec<f64>,
    read_neg: Vec<f64>,
}

impl Waveforms {
    fn new(params: &DeviceParams) -> Self {
        Self {
            write_pos: write_waveform(params, params.v_write),
            write_neg: write_waveform(params, -params.v_write),
            idle: write_waveform(params, 0.0),
            read_pos: read_waveform(params, true),
            read_neg: read_waveform(params, false),
        }
    }

    fn write(&self, params: &DeviceParams, te: bool, be: bool) -> &[f64] {
        let v = write_bias(params, te, be);
        if v > 0.0 {
            &self.write_pos
        } else if v < 0.0 {
            &self.write_neg
        } else {
            &self.idle
        }
    }

    fn read(&self, r: bool) -> &[f64] {
        if r {
            &self.read_pos
        } else {
            &self.read_neg
        }
    }
}

/// Simulate one evaluation, drawing C2C variation from `rng`.
///
/// Every level runs an init, a write and a read cycle on all of its cells.
/// Resistances are redrawn per cell and cycle. A trace sample is the total
/// power of the level's cells, summed in ascending order.
pub fn simulate_with_rng(
    schedule: &Schedule,
    inputs: &[bool],
    params: &SimParams,
    rng: &mut DeviceRng,
    stream: u64,
) -> Result<RunResult, SimError> {
    let dev = &params.device;
    dev.validate()?;
    let compiled = &schedule.compiled;
    if inputs.len() != compiled.inputs.len() {
        return Err(NetlistError::InputArity {
            expected: compiled.inputs.len(),
            got: inputs.len(),
        }
        .into());
    }
    let n = dev.samples_per_cycle();
    let waves = Waveforms::new(dev);
    let traced_cycles = if params.include_init { 3 } else { 2 } * schedule.level_count();
    let mut samples = Vec::with_capacity(traced_cycles * n);
    let mut states = vec![DeviceState::Zero; schedule.cells_required];
    let mut values = vec![false; compiled.net_count];
    for (&net, &v) in compiled.inputs.iter().zip(inputs) {
        values[net] = v;
    }

    let mut column = Vec::new();
    for placements in &schedule.placements {
        // (cell, plan, q, p, output net if functional)
        let mut cells = Vec::new();
        for pl in placements {
            let (qn, pn, out) = compiled.gates[pl.gate];
            let (q, p) = (values[qn], values[pn]);
            for &(cell, plan) in &pl.cells {
                cells.push((cell, plan, q, p, (cell == pl.functional_cell).then_some(out)));
            }
        }
        cells.sort_unstable_by_key(|c| c.0);

        for kind in [CycleKind::Init, CycleKind::Write, CycleKind::Read] {
            let mut powers = Vec::with_capacity(cells.len());
            let mut outputs = Vec::new();
            for &(cell, plan, q, p, out) in &cells {
                let res = perturb_resistances(&dev.nominal, dev.c2c_sigma, rng);
                let wave = match kind {
                    CycleKind::Init => {
                        let (te, be) = plan.init_electrodes();
                        waves.write(dev, te, be)
                    }
                    CycleKind::Write => waves.write(dev, plan.te.eval(q, p), plan.be.eval(q, p)),
                    CycleKind::Read => waves.read(plan.r.eval(q, p)),
                };
                let (power, next) = cycle_energy(states[cell], wave, &res, dev);
                states[cell] = next;
                if kind == CycleKind::Read {
                    if let Some(net) = out {
                        outputs.push((net, read_value(next, plan.r.eval(q, p)).0));
                    }
                }
                powers.push(power);
            }
            for (net, bit) in outputs {
                values[net] = bit;
            }
            if kind == CycleKind::Init && !params.include_init {
                continue;
            }
            for t in 0..n {
                column.clear();
                column.extend(powers.iter().map(|p| p[t]));
                samples.push(canonical_sum(&mut column));
            }
        }
    }

    Ok(RunResult {
        trace: PowerTrace {
            samples,
            meta: TraceMeta {
                inputs: bit_string(inputs),
                plaintext: None,
                key: None,
                class: None,
                hiding: schedule.hiding,
                seed: params.seed,
                stream,
                sigma: dev.c2c_sigma,
                dt_ms: dev.dt,
            },
        },
        outputs: compiled.outputs.iter().map(|&o| values[o]).collect(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct CampaignSpec {
    pub netlist: Netlist,
    pub key: u32,
    pub fixed_plaintext: u32,
    pub n_fixed: usize,
    pub n_random: usize,
    pub hiding: bool,
    pub sigma: f64,
}

/// Campaign settings recorded alongside the traces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignInfo {
    pub key: u32,
    pub fixed_plaintext: u32,
    pub n_fixed: usize,
    pub n_random: usize,
    pub hiding: bool,
    pub sigma: f64,
    pub seed: u64,
    pub include_init: bool,
    pub netlist: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Campaign {
    pub info: CampaignInfo,
    pub fixed: Vec<PowerTrace>,
    pub random: Vec<PowerTrace>,
}

/// Width of the plaintext and key words, from inputs named `p<i>` / `k<i>`.
fn campaign_layout(netlist: &Netlist) -> Result<(Vec<(bool, usize)>, usize, usize), SimError> {
    let mut layout = Vec::with_capacity(netlist.inputs.len());
    let (mut pw, mut kw) = (0, 0);
    for name in &netlist.inputs {
        let (is_key, rest) = match name.split_at(1) {
            ("p", rest) => (false, rest),
            ("k", rest) => (true, rest),
            _ => return Err(SimError::CampaignInput(name.clone())),
        };
        let bit: usize = rest.parse().map_err(|_| SimError::CampaignInput(name.clone()))?;
        if bit >= 32 {
            return Err(SimError::CampaignInput(name.clone()));
        }
        if is_key {
            kw = kw.max(bit + 1);
        } else {
            pw = pw.max(bit + 1);
        }
        layout.push((is_key, bit));
    }
    Ok((layout, pw, kw))
}

fn check_width(name: &'static str, value: u32, width: usize) -> Result<(), SimError> {
    if width < 32 && value >> width != 0 {
        return Err(SimError::ValueWidth { name, value, width });
    }
    Ok(())
}

/// Input vector for a netlist whose inputs are named `p<i>` and `k<i>`.
pub fn plaintext_key_inputs(netlist: &Netlist, plaintext: u32, key: u32) -> Result<Vec<bool>, SimError> {
    let (layout, pw, kw) = campaign_layout(netlist)?;
    check_width("plaintext", plaintext, pw)?;
    check_width("key", key, kw)?;
    Ok(layout
        .into_iter()
        .map(|(is_key, bit)| (if is_key { key } else { plaintext }) >> bit & 1 == 1)
        .collect())
}

/// Fixed-vs-random campaign. Trace `i` (fixed first, then random) draws its
/// plaintext and all C2C variation from stream `i` of the seed, so traces can
/// be generated in any order.
pub fn run_campaign(spec: &CampaignSpec, params: &SimParams) -> Result<Campaign, SimError> {
    if spec.n_fixed < 2 || spec.n_random < 2 {
        return Err(SimError::TooFewTraces {
            n_fixed: spec.n_fixed,
            n_random: spec.n_random,
        });
    }
    let (_, pw, _) = campaign_layout(&spec.netlist)?;
    plaintext_key_inputs(&spec.netlist, spec.fixed_plaintext, spec.key)?;
    let sched = schedule(&spec.netlist, spec.hiding)?;
    let mut params = params.clone();
    params.device.c2c_sigma = spec.sigma;
    params.device.validate()?;
    let mask = if pw >= 32 { u32::MAX } else { (1u32 << pw) - 1 };

    let total = spec.n_fixed + spec.n_random;
    let traces = (0..total)
        .into_par_iter()
        .map(|i| {
            let stream = i as u64;
            let mut rng = DeviceRng::stream(params.seed, stream);
            let drawn = rng.next_u64() as u32 & mask;
            let (class, plaintext) = if i < spec.n_fixed {
                (TraceClass::Fixed, spec.fixed_plaintext)
            } else {
                (TraceClass::Random, drawn)
            };
            let inputs = plaintext_key_inputs(&spec.netlist, plaintext, spec.key)?;
            let mut run = simulate_with_rng(&sched, &inputs, &params, &mut rng, stream)?;
            run.trace.meta.plaintext = Some(plaintext);
            run.trace.meta.key = Some(spec.key);
            run.trace.meta.class = Some(class);
            Ok(run.trace)
        })
        .collect::<Result<Vec<_>, SimError>>()?;
    let mut traces = traces;
    let random = traces.split_off(spec.n_fixed);
    Ok(Campaign {
        info: CampaignInfo {
            key: spec.key,
            fixed_plaintext: spec.fixed_plaintext,
            n_fixed: spec.n_fixed,
            n_random: spec.n_random,
            hiding: spec.hiding,
            sigma: spec.sigma,
            seed: params.seed,
            include_init: params.include_init,
            netlist: spec.netlist.to_mnl(),
        },
        fixed: traces,
        random,
    })
}

/// Traces plus optional campaign settings, as stored in a campaign directory.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    pub campaign: Option<CampaignInfo>,
    pub traces: Vec<PowerTrace>,
}

impl TraceSet {
    pub fn class(&self, class: TraceClass) -> Vec<&PowerTrace> {
        self.traces
            .iter()
            .filter(|t| t.meta.class == Some(class))
            .collect()
    }
}

impl From<Campaign> for TraceSet {
    fn from(c: Campaign) -> Self {
        let mut traces = c.fixed;
        traces.extend(c.random);
        TraceSet {
            campaign: Some(c.info),
            traces,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub meta: TraceMeta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub campaign: Option<CampaignInfo>,
    pub traces: Vec<ManifestEntry>,
}

/// One trace as `t_ms,power_w` CSV.
pub fn trace_csv(trace: &PowerTrace) -> String {
    let mut out = String::with_capacity(24 * trace.samples.len() + 16);
    out.push_str("t_ms,power_w\n");
    for (k, p) in trace.samples.iter().enumerate() {
        out.push_str(&format!("{},{}\n", k as f64 * trace.meta.dt_ms, p));
    }
    out
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), TraceIoError> {
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(contents).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn write_trace_csv(trace: &PowerTrace, path: &Path) -> Result<(), TraceIoError> {
    write_atomic(path, trace_csv(trace).as_bytes())
}

/// Write one CSV per trace, then `manifest.json`.
pub fn write_trace_set(set: &TraceSet, dir: &Path) -> Result<Manifest, TraceIoError> {
    let first = set.traces.first().ok_or(TraceIoError::Empty)?;
    let expected = first.samples.len();
    if let Some((index, t)) = set
        .traces
        .iter()
        .enumerate()
        .find(|(_, t)| t.samples.len() != expected)
    {
        return Err(TraceIoError::LengthMismatch {
            index,
            got: t.samples.len(),
            expected,
        });
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut entries = Vec::with_capacity(set.traces.len());
    for (i, trace) in set.traces.iter().enumerate() {
        let file = format!("trace_{i:05}.csv");
        write_trace_csv(trace, &dir.join(&file))?;
        entries.push(ManifestEntry {
            file,
            meta: trace.meta.clone(),
        });
    }
    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        samples: expected,
        campaign: set.campaign.clone(),
        traces: entries,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_atomic(&dir.join(MANIFEST_FILE), text.as_bytes())?;
    Ok(manifest)
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<f64>, TraceIoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let malformed = |line: usize, msg: String| TraceIoError::Malformed {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, "t_ms,power_w")) => {}
        _ => return Err(malformed(1, "expected header `t_ms,power_w`".into())),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let (_, power) = l
                .split_once(',')
                .ok_or_else(|| malformed(i + 1, "expected two columns".into()))?;
            power
                .trim()
                .parse::<f64>()
                .map_err(|e| malformed(i + 1, format!("bad power value: {e}")))
        })
        .collect()
}

pub fn read_trace_set(dir: &Path) -> Result<TraceSet, TraceIoError> {
    let manifest_path = dir.join(MANIFEST_FILE);
    if !manifest_path.is_file() {
        return Err(TraceIoError::MissingManifest(dir.to_path_buf()));
    }
    let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| TraceIoError::Malformed {
        path: manifest_path.clone(),
        line: e.line(),
        msg: e.to_string(),
    })?;
    if manifest.format != MANIFEST_FORMAT {
        return Err(TraceIoError::Malformed {
            path: manifest_path,
            line: 0,
            msg: format!("unsupported format `{}`", manifest.format),
        });
    }
    let mut traces = Vec::with_capacity(manifest.traces.len());
    for (index, entry) in manifest.traces.into_iter().enumerate() {
        let samples = read_trace_csv(&dir.join(&entry.file))?;
        if samples.len() != manifest.samples {
            return Err(TraceIoError::LengthMismatch {
                index,
                got: samples.len(),
                expected: manifest.samples,
            });
        }
        traces.push(PowerTrace {
            samples,
            meta: entry.meta,
        });
    }
    Ok(TraceSet {
        campaign: manifest.campaign,
        traces,
    })
}
