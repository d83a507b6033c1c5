//! Gate-level netlists: the MNL text format, levelization and scheduling onto
//! reusable memristor cells.
//!
//! ```text
//! # 2:1 multiplexer
//! inputs D0 D1 S
//! outputs Y
//! gate U1 P_ANDN_Q S D0 -> A0
//! gate U2 AND S D1 -> A1
//! gate U3 OR A0 A1 -> Y
//! ```
//!
//! Operand order is `<q> <p>`. Unary gate types repeat their net.

use std::collections::{BTreeMap, HashMap};
use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::device::CycleKind;
use crate::gates::{plan_for, CyclePlan, GateType};
use crate::hiding::group_for;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetlistError {
    #[error("{}{kind}", .line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, kind: InvalidKind },
    #[error("expected {expected} input values, got {got}")]
    InputArity { expected: usize, got: usize },
    #[error("no value for input `{0}`")]
    MissingInput(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InvalidKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown gate type `{0}`")]
    UnknownGate(String),
    #[error("undeclared net `{0}`")]
    UndeclaredNet(String),
    #[error("net `{0}` is driven more than once")]
    MultiplyDriven(String),
    #[error("combinational cycle through gate `{0}`")]
    CombinationalCycle(String),
    #[error("arity mismatch: {0}")]
    Arity(String),
    #[error("duplicate gate id `{0}`")]
    DuplicateGate(String),
}

impl NetlistError {
    fn at(line: Option<usize>, kind: InvalidKind) -> Self {
        NetlistError::Invalid { line, kind }
    }

    pub fn line(&self) -> Option<usize> {
        match self {
            NetlistError::Invalid { line, .. } => *line,
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GateInstance {
    pub id: String,
    pub gate: GateType,
    pub in_q: String,
    pub in_p: String,
    pub out: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Netlist {
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub gates: Vec<GateInstance>,
}

/// Source line numbers used to locate validation errors.
#[derive(Default)]
struct SourceLines {
    inputs: Option<usize>,
    outputs: Option<usize>,
    gates: Vec<usize>,
}

impl Netlist {
    pub fn validate(&self) -> Result<(), NetlistError> {
        check(self, &SourceLines::default()).map(|_| ())
    }

    pub fn to_mnl(&self) -> String {
        self.to_string()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.inputs.iter().position(|n| n == name)
    }
}

impl fmt::Display for Netlist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.inputs.join(" "))?;
        writeln!(f, "outputs {}", self.outputs.join(" "))?;
        for g in &self.gates {
            writeln!(f, "gate {} {} {} {} -> {}", g.id, g.gate, g.in_q, g.in_p, g.out)?;
        }
        Ok(())
    }
}

pub fn parse_mnl(text: &str) -> Result<Netlist, NetlistError> {
    let mut netlist = Netlist::default();
    let mut lines = SourceLines::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let syntax = |msg: &str| NetlistError::at(Some(line), InvalidKind::Syntax(msg.to_string()));
        match tokens[0] {
            "inputs" => {
                if lines.inputs.is_some() {
                    return Err(syntax("repeated `inputs` line"));
                }
                lines.inputs = Some(line);
                netlist.inputs = tokens[1..].iter().map(|s| s.to_string()).collect();
            }
            "outputs" => {
                if lines.outputs.is_some() {
                    return Err(syntax("repeated `outputs` line"));
                }
                lines.outputs = Some(line);
                netlist.outputs = tokens[1..].iter().map(|s| s.to_string()).collect();
            }
            "gate" => {
                if tokens.len() != 7 || tokens[5] != "->" {
                    return Err(NetlistError::at(
                        Some(line),
                        InvalidKind::Arity("expected `gate <id> <TYPE> <q> <p> -> <out>`".into()),
                    ));
                }
                let gate = tokens[2]
                    .parse::<GateType>()
                    .map_err(|e| NetlistError::at(Some(line), InvalidKind::UnknownGate(e.0)))?;
                netlist.gates.push(GateInstance {
                    id: tokens[1].to_string(),
                    gate,
                    in_q: tokens[3].to_string(),
                    in_p: tokens[4].to_string(),
                    out: tokens[6].to_string(),
                });
                lines.gates.push(line);
            }
            other => return Err(syntax(&format!("unknown directive `{other}`"))),
        }
    }
    if lines.inputs.is_none() {
        return Err(NetlistError::at(
            None,
            InvalidKind::Syntax("missing `inputs` line".into()),
        ));
    }
    if lines.outputs.is_none() {
        return Err(NetlistError::at(
            None,
            InvalidKind::Syntax("missing `outputs` line".into()),
        ));
    }
    check(&netlist, &lines)?;
    Ok(netlist)
}

/// Net-indexed form shared by evaluation, levelization and simulation.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub net_count: usize,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// (q, p, out) per gate.
    pub gates: Vec<(usize, usize, usize)>,
    pub gate_level: Vec<usize>,
    pub levels: Vec<Vec<usize>>,
}

fn check(netlist: &Netlist, lines: &SourceLines) -> Result<Compiled, NetlistError> {
    let gate_line = |i: usize| lines.gates.get(i).copied();
    let mut nets: HashMap<&str, usize> = HashMap::new();
    let mut driver: Vec<Option<usize>> = Vec::new();

    let mut inputs = Vec::new();
    for name in &netlist.inputs {
        if nets.contains_key(name.as_str()) {
            return Err(NetlistError::at(
                lines.inputs,
                InvalidKind::MultiplyDriven(name.clone()),
            ));
        }
        let id = nets.len();
        nets.insert(name, id);
        driver.push(None);
        inputs.push(id);
    }
    let mut ids = HashMap::new();
    for (i, g) in netlist.gates.iter().enumerate() {
        if ids.insert(g.id.as_str(), i).is_some() {
            return Err(NetlistError::at(
                gate_line(i),
                InvalidKind::DuplicateGate(g.id.clone()),
            ));
        }
        if g.gate.is_unary() && g.in_q != g.in_p {
            return Err(NetlistError::at(
                gate_line(i),
                InvalidKind::Arity(format!("{} gate `{}` takes one net, repeat it", g.gate, g.id)),
            ));
        }
        if nets.contains_key(g.out.as_str()) {
            return Err(NetlistError::at(
                gate_line(i),
                InvalidKind::MultiplyDriven(g.out.clone()),
            ));
        }
        let id = nets.len();
        nets.insert(&g.out, id);
        driver.push(Some(i));
    }
    let mut gates = Vec::with_capacity(netlist.gates.len());
    for (i, g) in netlist.gates.iter().enumerate() {
        let lookup = |n: &String| {
            nets.get(n.as_str())
                .copied()
                .ok_or_else(|| NetlistError::at(gate_line(i), InvalidKind::UndeclaredNet(n.clone())))
        };
        gates.push((lookup(&g.in_q)?, lookup(&g.in_p)?, nets[g.out.as_str()]));
    }
    let mut outputs = Vec::new();
    for name in &netlist.outputs {
        let id = nets
            .get(name.as_str())
            .copied()
            .ok_or_else(|| NetlistError::at(lines.outputs, InvalidKind::UndeclaredNet(name.clone())))?;
        outputs.push(id);
    }

    // Kahn levelization
    let n = gates.len();
    let mut gate_level = vec![0usize; n];
    let mut pending = vec![0usize; n];
    let mut fanout: Vec<Vec<usize>> = vec![Vec::new(); nets.len()];
    for (i, &(q, p, _)) in gates.iter().enumerate() {
        let mut srcs = vec![q];
        if p != q {
            srcs.push(p);
        }
        for s in srcs {
            if driver[s].is_some() {
                pending[i] += 1;
                fanout[s].push(i);
            }
        }
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
    let mut done = 0;
    while let Some(i) = ready.pop() {
        done += 1;
        let (q, p, out) = gates[i];
        let lvl = |net: usize| driver[net].map_or(0, |d| gate_level[d]);
        gate_level[i] = 1 + lvl(q).max(lvl(p));
        for &succ in &fanout[out] {
            pending[succ] -= 1;
            if pending[succ] == 0 {
                ready.push(succ);
            }
        }
    }
    if done < n {
        let stuck = (0..n).find(|&i| pending[i] > 0).expect("cycle member");
        return Err(NetlistError::at(
            gate_line(stuck),
            InvalidKind::CombinationalCycle(netlist.gates[stuck].id.clone()),
        ));
    }
    let depth = gate_level.iter().copied().max().unwrap_or(0);
    let mut levels = vec![Vec::new(); depth];
    for (i, &l) in gate_level.iter().enumerate() {
        levels[l - 1].push(i);
    }
    Ok(Compiled {
        net_count: nets.len(),
        inputs,
        outputs,
        gates,
        gate_level,
        levels,
    })
}

impl Compiled {
    pub fn from_netlist(netlist: &Netlist) -> Result<Self, NetlistError> {
        check(netlist, &SourceLines::default())
    }

    pub fn eval(&self, netlist: &Netlist, inputs: &[bool]) -> Result<Vec<bool>, NetlistError> {
        if inputs.len() != self.inputs.len() {
            return Err(NetlistError::InputArity {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        let mut values = vec![false; self.net_count];
        for (&net, &v) in self.inputs.iter().zip(inputs) {
            values[net] = v;
        }
        for level in &self.levels {
            for &g in level {
                let (q, p, out) = self.gates[g];
                values[out] = netlist.gates[g].gate.eval(values[q], values[p]);
            }
        }
        Ok(self.outputs.iter().map(|&o| values[o]).collect())
    }
}

/// Gate levels: primary inputs sit at level 0, a gate one above its deepest driver.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Levelization {
    /// 1-based level of each gate, in declaration order.
    pub gate_level: Vec<usize>,
    /// Gate indices per level, declaration order within a level.
    pub levels: Vec<Vec<usize>>,
}

pub fn levelize(netlist: &Netlist) -> Result<Levelization, NetlistError> {
    let c = Compiled::from_netlist(netlist)?;
    Ok(Levelization {
        gate_level: c.gate_level,
        levels: c.levels,
    })
}

/// Evaluate with input values in `netlist.inputs` order.
pub fn eval_netlist(netlist: &Netlist, inputs: &[bool]) -> Result<Vec<bool>, NetlistError> {
    Compiled::from_netlist(netlist)?.eval(netlist, inputs)
}

/// Evaluate from a name → value map.
pub fn eval_netlist_named(
    netlist: &Netlist,
    values: &HashMap<String, bool>,
) -> Result<Vec<bool>, NetlistError> {
    let inputs = assignment_from_map(netlist, values)?;
    eval_netlist(netlist, &inputs)
}

pub fn assignment_from_map(
    netlist: &Netlist,
    values: &HashMap<String, bool>,
) -> Result<Vec<bool>, NetlistError> {
    netlist
        .inputs
        .iter()
        .map(|n| {
            values
                .get(n)
                .copied()
                .ok_or_else(|| NetlistError::MissingInput(n.clone()))
        })
        .collect()
}

/// Assignment from a bit string like `"101"` in input order.
pub fn assignment_from_bits(netlist: &Netlist, bits: &str) -> Result<Vec<bool>, NetlistError> {
    let values: Vec<bool> = bits
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_')
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(NetlistError::at(
                None,
                InvalidKind::Syntax(format!("bad bit `{other}`")),
            )),
        })
        .collect::<Result<_, _>>()?;
    if values.len() != netlist.inputs.len() {
        return Err(NetlistError::InputArity {
            expected: netlist.inputs.len(),
            got: values.len(),
        });
    }
    Ok(values)
}

/// One gate's cells within its level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Placement {
    pub gate: usize,
    /// Physical cell and plan for every member; one entry without hiding.
    pub cells: Vec<(usize, CyclePlan)>,
    /// Physical cell whose read-out drives the gate's output net.
    pub functional_cell: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub level: usize,
    pub cell_index: usize,
    pub block_start: usize,
    pub block_len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ScheduledCycle {
    pub level: usize,
    pub kind: CycleKind,
}

/// Cell-pool layout: cells are grouped into pools keyed by the cell
/// configuration (plan, or the member plans of a hiding group). Slot `k` of a
/// pool in every level maps to the same physical block, so a block is only
/// ever re-initialized from the written states of the same configuration.
#[derive(Clone, Debug, Serialize)]
pub struct Schedule {
    pub hiding: bool,
    pub levels: Vec<Vec<String>>,
    pub slots: BTreeMap<String, Slot>,
    pub cells_required: usize,
    pub cycles: Vec<ScheduledCycle>,
    pub placements: Vec<Vec<Placement>>,
    #[serde(skip)]
    pub netlist: Netlist,
    #[serde(skip)]
    pub(crate) compiled: Compiled,
}

impl Schedule {
    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    /// Active cells of a level, ascending.
    pub fn active_cells(&self, level: usize) -> Vec<usize> {
        let mut cells: Vec<usize> = self.placements[level - 1]
            .iter()
            .flat_map(|p| p.cells.iter().map(|c| c.0))
            .collect();
        cells.sort_unstable();
        cells
    }
}

fn cell_config(gate: GateType, hiding: bool) -> (Vec<CyclePlan>, usize) {
    if hiding {
        if let Ok(group) = group_for(gate) {
            return (group.plans().collect(), group.functional_index);
        }
    }
    (vec![plan_for(gate)], 0)
}

pub fn schedule(netlist: &Netlist, hiding: bool) -> Result<Schedule, NetlistError> {
    let compiled = Compiled::from_netlist(netlist)?;

    // pool key -> (max blocks in any level, block size), in first-use order
    let mut pools: Vec<(Vec<CyclePlan>, usize)> = Vec::new();
    let pool_of = |key: &Vec<CyclePlan>, pools: &mut Vec<(Vec<CyclePlan>, usize)>| {
        pools.iter().position(|(k, _)| k == key).unwrap_or_else(|| {
            pools.push((key.clone(), 0));
            pools.len() - 1
        })
    };
    for level in &compiled.levels {
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for &g in level {
            let (key, _) = cell_config(netlist.gates[g].gate, hiding);
            let pool = pool_of(&key, &mut pools);
            *counts.entry(pool).or_default() += 1;
        }
        for (pool, count) in counts {
            pools[pool].1 = pools[pool].1.max(count);
        }
    }
    let mut offsets = Vec::with_capacity(pools.len());
    let mut cells_required = 0;
    for (key, blocks) in &pools {
        offsets.push(cells_required);
        cells_required += key.len() * blocks;
    }

    let mut slots = BTreeMap::new();
    let mut placements = Vec::with_capacity(compiled.levels.len());
    let mut levels = Vec::with_capacity(compiled.levels.len());
    let mut cycles = Vec::with_capacity(3 * compiled.levels.len());
    for (li, level) in compiled.levels.iter().enumerate() {
        let mut used = vec![0usize; pools.len()];
        let mut level_placements = Vec::with_capacity(level.len());
        for &g in level {
            let (key, functional) = cell_config(netlist.gates[g].gate, hiding);
            let pool = pools
                .iter()
                .position(|(k, _)| *k == key)
                .expect("pool registered");
            let start = offsets[pool] + used[pool] * key.len();
            used[pool] += 1;
            let cells: Vec<(usize, CyclePlan)> =
                key.iter().enumerate().map(|(i, &pl)| (start + i, pl)).collect();
            slots.insert(
                netlist.gates[g].id.clone(),
                Slot {
                    level: li + 1,
                    cell_index: start + functional,
                    block_start: start,
                    block_len: key.len(),
                },
            );
            level_placements.push(Placement {
                gate: g,
                cells,
                functional_cell: start + functional,
            });
        }
        levels.push(level.iter().map(|&g| netlist.gates[g].id.clone()).collect());
        placements.push(level_placements);
        for kind in [CycleKind::Init, CycleKind::Write, CycleKind::Read] {
            cycles.push(ScheduledCycle { level: li + 1, kind });
        }
    }
    Ok(Schedule {
        hiding,
        levels,
        slots,
        cells_required,
        cycles,
        placements,
        netlist: netlist.clone(),
        compiled,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct NetlistStats {
    pub inputs: usize,
    pub outputs: usize,
    pub gates: usize,
    pub levels: usize,
    pub max_width: usize,
    pub level_widths: Vec<usize>,
    pub gate_counts: BTreeMap<String, usize>,
    pub cells_plain: usize,
    pub cells_hidden: usize,
}

pub fn stats(netlist: &Netlist) -> Result<NetlistStats, NetlistError> {
    let lv = levelize(netlist)?;
    let mut gate_counts = BTreeMap::new();
    for g in &netlist.gates {
        *gate_counts.entry(g.gate.name().to_string()).or_default() += 1;
    }
    let level_widths: Vec<usize> = lv.levels.iter().map(Vec::len).collect();
    Ok(NetlistStats {
        inputs: netlist.inputs.len(),
        outputs: netlist.outputs.len(),
        gates: netlist.gates.len(),
        levels: lv.levels.len(),
        max_width: level_widths.iter().copied().max().unwrap_or(0),
        level_widths,
        gate_counts,
        cells_plain: schedule(netlist, false)?.cells_required,
        cells_hidden: schedule(netlist, true)?.cells_required,
    })
}

impl fmt::Display for NetlistStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut counts = String::new();
        for (name, n) in &self.gate_counts {
            let _ = write!(counts, " {name}:{n}");
        }
        writeln!(
            f,
            "inputs {} outputs {} gates {} ({})",
            self.inputs,
            self.outputs,
            self.gates,
            counts.trim()
        )?;
        writeln!(f, "levels {} max width {}", self.levels, self.max_width)?;
        writeln!(
            f,
            "cells without hiding {} with hiding {}",
            self.cells_plain, self.cells_hidden
        )
    }
}
