//! `memcrs` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 validation, 3 I/O, 4 leakage detected
//! (`ttest --fail-on-leak`).

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{tvla_verdict, welch_t, AnalysisError, DEFAULT_THRESHOLD};
use crate::device::{DeviceError, DeviceParams};
use crate::gates::{execute_plan, plan_for, GateType, INPUT_PAIRS};
use crate::hiding::{catalog, group_marks, verify_balance, GroupMarks, HidingError};
use crate::netlist::{assignment_from_bits, levelize, parse_mnl, schedule, stats, Netlist, NetlistError};
use crate::sim::{
    read_trace_set, run_campaign, simulate_run, write_trace_csv, write_trace_set, CampaignSpec, SimError,
    SimParams, TraceClass, TraceIoError,
};
use crate::synth::{
    build_xor4sbox, synthesize_nor, verify_equiv, xor4sbox_table, Equivalence, SboxSpec, SynthError,
    TruthTable,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_LEAK: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "memcrs",
    version,
    about = "CRS-R memristive logic simulator with power-balanced hiding"
)]
pub struct Cli {
    /// JSON file with device parameters
    #[arg(long, global = true, value_name = "FILE")]
    pub device_config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print a gate's cycle plan and its truth table with power marks
    GateSim {
        #[arg(long)]
        gate: String,
    },
    /// Dump the hiding-group catalog
    Groups {
        #[arg(long)]
        json: bool,
    },
    /// Validate a netlist and print its levels
    NetlistCheck { file: PathBuf },
    /// Synthesize a NOR netlist from a truth table
    Synth {
        #[arg(long, value_name = "FILE")]
        table: PathBuf,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Build the xor4SBox netlist
    SboxBuild {
        /// 16 hex nibbles; defaults to the small-scale AES S-box
        #[arg(long, value_name = "FILE")]
        sbox: Option<PathBuf>,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Simulate one evaluation and write its power trace
    Run {
        #[arg(long, value_name = "FILE")]
        netlist: PathBuf,
        /// Input bits in declaration order
        #[arg(long)]
        inputs: String,
        #[command(flatten)]
        sim: SimArgs,
        /// Leave initialization cycles out of the trace
        #[arg(long)]
        no_init: bool,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
    },
    /// Run a fixed-vs-random trace campaign
    Campaign {
        #[arg(long, value_name = "FILE")]
        netlist: PathBuf,
        #[arg(long, value_parser = parse_hex)]
        key: u32,
        #[arg(long, value_parser = parse_hex, default_value = "0")]
        fixed: u32,
        /// Total traces, split evenly between the classes
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[command(flatten)]
        sim: SimArgs,
        #[arg(short, long, value_name = "DIR")]
        output: PathBuf,
    },
    /// Welch t-test over a campaign directory
    Ttest {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        #[arg(short, long, value_name = "FILE")]
        output: PathBuf,
        /// Also write the verdict JSON to a file
        #[arg(long, value_name = "FILE")]
        verdict: Option<PathBuf>,
        #[arg(long)]
        fail_on_leak: bool,
    },
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long)]
    hiding: bool,
    /// C2C variation sigma, overriding the device config
    #[arg(long, value_name = "SIGMA")]
    c2c: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_hex(s: &str) -> Result<u32, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u32::from_str_radix(digits, 16).map_err(|e| format!("`{s}` is not a hex value: {e}"))
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) => m,
        }
    }
}

macro_rules! validation_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Validation(e.to_string())
            }
        }
    )*};
}

validation_from!(NetlistError, SynthError, DeviceError, HidingError, AnalysisError);

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<TraceIoError> for CliError {
    fn from(e: TraceIoError) -> Self {
        match e {
            TraceIoError::Malformed { .. } | TraceIoError::LengthMismatch { .. } | TraceIoError::Empty => {
                CliError::Validation(e.to_string())
            }
            TraceIoError::Io { .. } | TraceIoError::MissingManifest(_) => CliError::Io(e.to_string()),
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_netlist(path: &Path) -> Result<Netlist, CliError> {
    let text = read_file(path)?;
    parse_mnl(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn load_device(path: Option<&Path>) -> Result<DeviceParams, CliError> {
    let params = match path {
        None => DeviceParams::default(),
        Some(p) => DeviceParams::from_json(&read_file(p)?)
            .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
    };
    params.validate()?;
    Ok(params)
}

fn sim_params(device: &DeviceParams, args: &SimArgs, include_init: bool) -> Result<SimParams, CliError> {
    let mut device = device.clone();
    if let Some(sigma) = args.c2c {
        device.c2c_sigma = sigma;
    }
    device.validate()?;
    Ok(SimParams {
        device,
        seed: args.seed,
        include_init,
    })
}

/// Parse `args` (including the program name) and execute. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn bit(b: bool) -> u8 {
    u8::from(b)
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    let device = load_device(cli.device_config.as_deref())?;
    let mut buf = String::new();
    let code = match &cli.command {
        Command::GateSim { gate } => {
            let gate: GateType = gate
                .parse()
                .map_err(|e: crate::gates::UnknownGate| CliError::Validation(e.to_string()))?;
            gate_sim(gate, &mut buf);
            EXIT_OK
        }
        Command::Groups { json } => {
            groups(&device, *json, &mut buf)?;
            EXIT_OK
        }
        Command::NetlistCheck { file } => {
            let n = load_netlist(file)?;
            let s = stats(&n)?;
            buf.push_str(&s.to_string());
            for (i, level) in levelize(&n)?.levels.iter().enumerate() {
                let ids: Vec<&str> = level.iter().map(|&g| n.gates[g].id.as_str()).collect();
                buf.push_str(&format!("level {}: {}\n", i + 1, ids.join(" ")));
            }
            EXIT_OK
        }
        Command::Synth { table, output } => {
            let tt = TruthTable::parse(&read_file(table)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", table.display())))?;
            let n = synthesize_nor(&tt);
            check_equiv(&n, &tt)?;
            write_file(output, &n.to_mnl())?;
            buf.push_str(&stats(&n)?.to_string());
            EXIT_OK
        }
        Command::SboxBuild { sbox, output } => {
            let spec = match sbox {
                None => SboxSpec::default(),
                Some(p) => read_file(p)?
                    .parse::<SboxSpec>()
                    .map_err(|e| CliError::Validation(format!("{}: {e}", p.display())))?,
            };
            let n = build_xor4sbox(&spec);
            check_equiv(&n, &xor4sbox_table(&spec))?;
            write_file(output, &n.to_mnl())?;
            buf.push_str(&format!("sbox {spec}\n"));
            buf.push_str(&stats(&n)?.to_string());
            EXIT_OK
        }
        Command::Run {
            netlist,
            inputs,
            sim,
            no_init,
            output,
        } => {
            let n = load_netlist(netlist)?;
            let assignment = assignment_from_bits(&n, inputs)?;
            let params = sim_params(&device, sim, !no_init)?;
            let sched = schedule(&n, sim.hiding)?;
            let result = simulate_run(&sched, &assignment, &params)?;
            write_trace_csv(&result.trace, output)?;
            for (name, v) in n.outputs.iter().zip(&result.outputs) {
                buf.push_str(&format!("{name}={}\n", bit(*v)));
            }
            buf.push_str(&format!(
                "cycles {} cells {} samples {}\n",
                sched.cycles.len(),
                sched.cells_required,
                result.trace.samples.len()
            ));
            EXIT_OK
        }
        Command::Campaign {
            netlist,
            key,
            fixed,
            n,
            sim,
            output,
        } => {
            let params = sim_params(&device, sim, true)?;
            let spec = CampaignSpec {
                netlist: load_netlist(netlist)?,
                key: *key,
                fixed_plaintext: *fixed,
                n_fixed: n / 2,
                n_random: n - n / 2,
                hiding: sim.hiding,
                sigma: params.device.c2c_sigma,
            };
            let campaign = run_campaign(&spec, &params)?;
            let manifest = write_trace_set(&campaign.into(), output)?;
            buf.push_str(&format!(
                "wrote {} traces ({} fixed, {} random) of {} samples to {}\n",
                manifest.traces.len(),
                spec.n_fixed,
                spec.n_random,
                manifest.samples,
                output.display()
            ));
            EXIT_OK
        }
        Command::Ttest {
            dir,
            threshold,
            output,
            verdict,
            fail_on_leak,
        } => {
            let set = read_trace_set(dir)?;
            let series = welch_t(&set.class(TraceClass::Fixed), &set.class(TraceClass::Random))?;
            let v = tvla_verdict(&series, *threshold)?;
            write_file(output, &series.to_csv())?;
            let json = v.to_json();
            if let Some(path) = verdict {
                write_file(path, &json)?;
            }
            buf.push_str(&json);
            buf.push('\n');
            if *fail_on_leak && v.leaky {
                EXIT_LEAK
            } else {
                EXIT_OK
            }
        }
    };
    out.write_all(buf.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))?;
    Ok(code)
}

fn check_equiv(n: &Netlist, tt: &TruthTable) -> Result<(), CliError> {
    match verify_equiv(n, tt)? {
        Equivalence::Equal => Ok(()),
        mismatch => Err(CliError::Validation(format!(
            "synthesized netlist disagrees with table: {mismatch:?}"
        ))),
    }
}

fn gate_sim(gate: GateType, buf: &mut String) {
    let plan = plan_for(gate);
    buf.push_str(&format!("{gate}: {plan}\n"));
    buf.push_str("q p | write state | read out\n");
    for (q, p) in INPUT_PAIRS {
        let e = execute_plan(plan, q, p);
        buf.push_str(&format!(
            "{} {} |   {}     {}   |  {}    {}\n",
            bit(q),
            bit(p),
            e.write_mark,
            bit(e.written.bit()),
            e.read_mark,
            bit(e.out)
        ));
    }
}

#[derive(Serialize)]
struct GroupEntry {
    gate: GateType,
    group: String,
    members: Vec<String>,
    functional_index: usize,
    marks: Vec<(String, GroupMarks)>,
    balanced: bool,
}

fn groups(device: &DeviceParams, json: bool, buf: &mut String) -> Result<(), CliError> {
    let ideal = device.clone().with_sigma(0.0);
    let mut entries = Vec::new();
    for (gate, group) in catalog() {
        let balanced = verify_balance(&group, &ideal).is_ok();
        entries.push(GroupEntry {
            gate,
            group: group.id.to_string(),
            members: group
                .members
                .iter()
                .map(|m| format!("{} [{}]", m.gate, m.plan))
                .collect(),
            functional_index: group.functional_index,
            marks: INPUT_PAIRS
                .iter()
                .map(|&(q, p)| (format!("{}{}", bit(q), bit(p)), group_marks(&group, q, p)))
                .collect(),
            balanced,
        });
    }
    if json {
        buf.push_str(&serde_json::to_string_pretty(&entries).expect("catalog serializes"));
        buf.push('\n');
        return Ok(());
    }
    for e in &entries {
        buf.push_str(&format!(
            "{} {} functional {} {}\n",
            e.gate,
            e.group,
            e.functional_index,
            if e.balanced { "balanced" } else { "UNBALANCED" }
        ));
        for m in &e.members {
            buf.push_str(&format!("  member {m}\n"));
        }
        for (qp, marks) in &e.marks {
            let w: Vec<String> = marks.write.iter().map(|m| m.to_string()).collect();
            let r: Vec<String> = marks.read.iter().map(|m| m.to_string()).collect();
            buf.push_str(&format!("  qp={qp} write {} read {}\n", w.join(""), r.join("")));
        }
    }
    Ok(())
}
