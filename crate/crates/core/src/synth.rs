//! NOR-only synthesis from truth tables and the xor4SBox construction.
//!
//! Each output column is minimized twice with Quine–McCluskey: once for the
//! function (sum of products) and once for its complement (giving a product of
//! sums). Both are mapped onto two-input NORs with literal inverters and the
//! smaller mapping wins. Identical NORs are shared across terms and outputs.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::gates::GateType;
use crate::netlist::{Compiled, GateInstance, Netlist, NetlistError};

/// Small-scale AES 4-bit S-box: GF(2⁴) inversion modulo x⁴+x+1 followed by
/// the affine layer with constant 0x6.
pub const SMALL_AES_SBOX: [u8; 16] = [
    0x6, 0xB, 0x5, 0x4, 0x2, 0xE, 0x7, 0xA, 0x9, 0xD, 0xF, 0xC, 0x3, 0x1, 0x0, 0x8,
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SynthError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("truth tables take 1 to {max} inputs, got {got}")]
    InputCount { got: usize, max: usize },
    #[error("output `{name}` has {got} rows, expected {expected}")]
    ColumnLength {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("arity mismatch: netlist has {netlist_inputs} inputs / {netlist_outputs} outputs, table has {table_inputs} / {table_outputs}")]
    Arity {
        netlist_inputs: usize,
        netlist_outputs: usize,
        table_inputs: usize,
        table_outputs: usize,
    },
    #[error("S-box needs 16 hex nibbles: {0}")]
    Sbox(String),
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

/// Multi-output truth table. Row `i` assigns input `j` the bit `n-1-j` of `i`,
/// so the first input is the most significant.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruthTable {
    pub inputs: Vec<String>,
    pub outputs: Vec<(String, Vec<bool>)>,
}

impl TruthTable {
    pub const MAX_INPUTS: usize = 8;

    pub fn new(inputs: Vec<String>, outputs: Vec<(String, Vec<bool>)>) -> Result<Self, SynthError> {
        Self::with_limit(inputs, outputs, Self::MAX_INPUTS)
    }

    fn with_limit(
        inputs: Vec<String>,
        outputs: Vec<(String, Vec<bool>)>,
        max: usize,
    ) -> Result<Self, SynthError> {
        if inputs.is_empty() || inputs.len() > max {
            return Err(SynthError::InputCount {
                got: inputs.len(),
                max,
            });
        }
        let rows = 1usize << inputs.len();
        for (name, bits) in &outputs {
            if bits.len() != rows {
                return Err(SynthError::ColumnLength {
                    name: name.clone(),
                    got: bits.len(),
                    expected: rows,
                });
            }
        }
        Ok(Self { inputs, outputs })
    }

    /// Build from a row function returning one bit per output.
    pub fn from_fn(
        inputs: &[&str],
        outputs: &[&str],
        f: impl Fn(usize) -> Vec<bool>,
    ) -> Result<Self, SynthError> {
        let rows = 1usize << inputs.len();
        let mut columns = vec![Vec::with_capacity(rows); outputs.len()];
        for row in 0..rows {
            for (col, bit) in columns.iter_mut().zip(f(row)) {
                col.push(bit);
            }
        }
        Self::new(
            inputs.iter().map(|s| s.to_string()).collect(),
            outputs.iter().map(|s| s.to_string()).zip(columns).collect(),
        )
    }

    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn rows(&self) -> usize {
        1 << self.inputs.len()
    }

    pub fn row_inputs(&self, row: usize) -> Vec<bool> {
        row_bits(row, self.inputs.len())
    }

    /// Exhaustive table of a netlist (up to 20 inputs).
    pub fn from_netlist(netlist: &Netlist) -> Result<Self, SynthError> {
        let compiled = Compiled::from_netlist(netlist)?;
        let n = netlist.inputs.len();
        let mut columns = vec![Vec::new(); netlist.outputs.len()];
        for row in 0..(1usize << n) {
            let out = compiled.eval(netlist, &row_bits(row, n))?;
            for (col, bit) in columns.iter_mut().zip(out) {
                col.push(bit);
            }
        }
        Self::with_limit(
            netlist.inputs.clone(),
            netlist.outputs.iter().cloned().zip(columns).collect(),
            20,
        )
    }

    /// Text form:
    ///
    /// ```text
    /// inputs q p
    /// output y 1000
    /// ```
    pub fn parse(text: &str) -> Result<Self, SynthError> {
        let mut inputs = None;
        let mut outputs = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let tokens: Vec<&str> = content.split_whitespace().collect();
            let err = |msg: String| SynthError::Parse { line, msg };
            match tokens[0] {
                "inputs" => inputs = Some(tokens[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>()),
                "output" => {
                    if tokens.len() != 3 {
                        return Err(err("expected `output <name> <bits>`".into()));
                    }
                    let bits = tokens[2]
                        .chars()
                        .map(|c| match c {
                            '0' => Ok(false),
                            '1' => Ok(true),
                            other => Err(err(format!("bad bit `{other}`"))),
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    outputs.push((tokens[1].to_string(), bits));
                }
                other => return Err(err(format!("unknown directive `{other}`"))),
            }
        }
        let inputs = inputs.ok_or(SynthError::Parse {
            line: 0,
            msg: "missing `inputs` line".into(),
        })?;
        Self::new(inputs, outputs)
    }
}

impl fmt::Display for TruthTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "inputs {}", self.inputs.join(" "))?;
        for (name, bits) in &self.outputs {
            let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            writeln!(f, "output {name} {s}")?;
        }
        Ok(())
    }
}

fn row_bits(row: usize, n: usize) -> Vec<bool> {
    (0..n).map(|j| (row >> (n - 1 - j)) & 1 == 1).collect()
}

/// Product term: variables whose `mask` bit is set are eliminated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Implicant {
    mask: u32,
    value: u32,
}

impl Implicant {
    fn covers(self, minterm: u32) -> bool {
        minterm & !self.mask == self.value
    }

    /// `(variable index, positive)` in input order.
    fn literals(self, n: usize) -> Vec<(usize, bool)> {
        (0..n)
            .filter_map(|j| {
                let bit = 1 << (n - 1 - j);
                (self.mask & bit == 0).then_some((j, self.value & bit != 0))
            })
            .collect()
    }
}

fn prime_implicants(minterms: &[u32]) -> Vec<Implicant> {
    let mut current: BTreeSet<Implicant> = minterms
        .iter()
        .map(|&m| Implicant { mask: 0, value: m })
        .collect();
    let mut primes = BTreeSet::new();
    while !current.is_empty() {
        let items: Vec<Implicant> = current.iter().copied().collect();
        let mut merged = vec![false; items.len()];
        let mut next = BTreeSet::new();
        for i in 0..items.len() {
            for j in i + 1..items.len() {
                let (a, b) = (items[i], items[j]);
                if a.mask != b.mask {
                    continue;
                }
                let diff = a.value ^ b.value;
                if diff.count_ones() == 1 {
                    merged[i] = true;
                    merged[j] = true;
                    next.insert(Implicant {
                        mask: a.mask | diff,
                        value: a.value & !diff,
                    });
                }
            }
        }
        primes.extend(
            items
                .iter()
                .zip(&merged)
                .filter(|(_, &m)| !m)
                .map(|(&imp, _)| imp),
        );
        current = next;
    }
    primes.into_iter().collect()
}

/// Essential primes first, then greedy by uncovered count; ties go to the
/// lowest prime index.
fn minimize(minterms: &[u32]) -> Vec<Implicant> {
    let primes = prime_implicants(minterms);
    let mut uncovered: BTreeSet<u32> = minterms.iter().copied().collect();
    let mut chosen: Vec<usize> = Vec::new();
    for &m in minterms {
        let covering: Vec<usize> = (0..primes.len()).filter(|&i| primes[i].covers(m)).collect();
        if let [only] = covering[..] {
            if !chosen.contains(&only) {
                chosen.push(only);
            }
        }
    }
    for &i in &chosen {
        uncovered.retain(|&m| !primes[i].covers(m));
    }
    while !uncovered.is_empty() {
        let best = (0..primes.len())
            .filter(|i| !chosen.contains(i))
            .max_by_key(|&i| {
                let count = uncovered.iter().filter(|&&m| primes[i].covers(m)).count();
                (count, std::cmp::Reverse(i))
            })
            .expect("primes cover all minterms");
        uncovered.retain(|&m| !primes[best].covers(m));
        chosen.push(best);
    }
    chosen.sort_unstable();
    chosen.into_iter().map(|i| primes[i]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Net {
    Input(usize),
    Gate(usize),
}

/// Two-input NOR network with structural hashing.
#[derive(Clone, Debug, Default)]
struct NorBuilder {
    gates: Vec<(Net, Net)>,
    cache: HashMap<(Net, Net), usize>,
}

impl NorBuilder {
    fn nor(&mut self, a: Net, b: Net) -> Net {
        let key = if a <= b { (a, b) } else { (b, a) };
        if let Some(&g) = self.cache.get(&key) {
            return Net::Gate(g);
        }
        self.gates.push(key);
        self.cache.insert(key, self.gates.len() - 1);
        Net::Gate(self.gates.len() - 1)
    }

    fn inv(&mut self, a: Net) -> Net {
        self.nor(a, a)
    }

    /// Fresh gate outside the structural hash.
    fn nor_uncached(&mut self, a: Net, b: Net) -> Net {
        self.gates.push((a, b));
        Net::Gate(self.gates.len() - 1)
    }

    fn nor_many(&mut self, nets: &[Net]) -> Net {
        match nets {
            [a] => self.inv(*a),
            [a, b] => self.nor(*a, *b),
            _ => {
                let (left, right) = nets.split_at(nets.len() / 2);
                let l = self.or_many(left);
                let r = self.or_many(right);
                self.nor(l, r)
            }
        }
    }

    fn or_many(&mut self, nets: &[Net]) -> Net {
        match nets {
            [a] => *a,
            _ => {
                let n = self.nor_many(nets);
                self.inv(n)
            }
        }
    }

    fn const_zero(&mut self, var: Net) -> Net {
        let nv = self.inv(var);
        self.nor(var, nv)
    }

    fn literal(&mut self, vars: &[Net], (j, positive): (usize, bool)) -> Net {
        if positive {
            vars[j]
        } else {
            self.inv(vars[j])
        }
    }

    /// Product of literals as a net.
    fn term(&mut self, vars: &[Net], literals: &[(usize, bool)]) -> Net {
        if let [lit] = literals {
            return self.literal(vars, *lit);
        }
        let complements: Vec<Net> = literals
            .iter()
            .map(|&(j, pos)| self.literal(vars, (j, !pos)))
            .collect();
        self.nor_many(&complements)
    }

    fn sop(&mut self, vars: &[Net], terms: &[Implicant]) -> Net {
        let nets: Vec<Net> = terms
            .iter()
            .map(|t| self.term(vars, &t.literals(vars.len())))
            .collect();
        self.or_many(&nets)
    }

    /// Product of sums from the cover of the complement.
    fn pos(&mut self, vars: &[Net], complement_terms: &[Implicant]) -> Net {
        let nets: Vec<Net> = complement_terms
            .iter()
            .map(|t| self.term(vars, &t.literals(vars.len())))
            .collect();
        self.nor_many(&nets)
    }

    fn column(&mut self, vars: &[Net], column: &[bool]) -> Net {
        let ones: Vec<u32> = (0..column.len() as u32).filter(|&r| column[r as usize]).collect();
        let zeros: Vec<u32> = (0..column.len() as u32)
            .filter(|&r| !column[r as usize])
            .collect();
        if ones.is_empty() {
            return self.const_zero(vars[0]);
        }
        if zeros.is_empty() {
            let zero = self.const_zero(vars[0]);
            return self.inv(zero);
        }
        let mut sop = self.clone();
        let sop_net = sop.sop(vars, &minimize(&ones));
        let mut pos = self.clone();
        let pos_net = pos.pos(vars, &minimize(&zeros));
        if pos.gates.len() < sop.gates.len() {
            *self = pos;
            pos_net
        } else {
            *self = sop;
            sop_net
        }
    }

    fn into_netlist(mut self, inputs: Vec<String>, outputs: Vec<(String, Net)>) -> Netlist {
        // each output needs its own driving gate
        let mut claimed: HashMap<usize, String> = HashMap::new();
        for (name, net) in &outputs {
            let gate = match net {
                Net::Gate(g) if !claimed.contains_key(g) => *g,
                _ => {
                    let inv = self.inv(*net);
                    match self.nor_uncached(inv, inv) {
                        Net::Gate(g) => g,
                        Net::Input(_) => unreachable!(),
                    }
                }
            };
            claimed.insert(gate, name.clone());
        }
        let mut used: HashSet<String> = inputs.iter().cloned().collect();
        used.extend(outputs.iter().map(|(n, _)| n.clone()));
        let mut counter = 0;
        let mut names = Vec::with_capacity(self.gates.len());
        for g in 0..self.gates.len() {
            names.push(claimed.get(&g).cloned().unwrap_or_else(|| loop {
                counter += 1;
                let candidate = format!("n{counter}");
                if !used.contains(&candidate) {
                    break candidate;
                }
            }));
        }
        let net_name = |net: Net| match net {
            Net::Input(i) => inputs[i].clone(),
            Net::Gate(g) => names[g].clone(),
        };
        let gates = self
            .gates
            .iter()
            .enumerate()
            .map(|(g, &(a, b))| GateInstance {
                id: format!("U{}", g + 1),
                gate: GateType::Nor,
                in_q: net_name(a),
                in_p: net_name(b),
                out: names[g].clone(),
            })
            .collect();
        Netlist {
            inputs: inputs.clone(),
            outputs: outputs.into_iter().map(|(n, _)| n).collect(),
            gates,
        }
    }
}

/// NOR-only netlist computing every output column of `table`.
pub fn synthesize_nor(table: &TruthTable) -> Netlist {
    let mut builder = NorBuilder::default();
    let vars: Vec<Net> = (0..table.n_inputs()).map(Net::Input).collect();
    let outputs = table
        .outputs
        .iter()
        .map(|(name, bits)| (name.clone(), builder.column(&vars, bits)))
        .collect();
    builder.into_netlist(table.inputs.clone(), outputs)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Equivalence {
    Equal,
    Mismatch {
        row: usize,
        inputs: Vec<bool>,
        output: String,
        expected: bool,
        got: bool,
    },
}

impl Equivalence {
    pub fn is_equal(&self) -> bool {
        matches!(self, Equivalence::Equal)
    }
}

/// Exhaustive comparison; inputs and outputs are matched by position.
pub fn verify_equiv(netlist: &Netlist, table: &TruthTable) -> Result<Equivalence, SynthError> {
    if netlist.inputs.len() != table.n_inputs() || netlist.outputs.len() != table.outputs.len() {
        return Err(SynthError::Arity {
            netlist_inputs: netlist.inputs.len(),
            netlist_outputs: netlist.outputs.len(),
            table_inputs: table.n_inputs(),
            table_outputs: table.outputs.len(),
        });
    }
    let compiled = Compiled::from_netlist(netlist)?;
    for row in 0..table.rows() {
        let inputs = table.row_inputs(row);
        let got = compiled.eval(netlist, &inputs)?;
        for ((name, bits), &g) in table.outputs.iter().zip(&got) {
            if bits[row] != g {
                return Ok(Equivalence::Mismatch {
                    row,
                    inputs,
                    output: name.clone(),
                    expected: bits[row],
                    got: g,
                });
            }
        }
    }
    Ok(Equivalence::Equal)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SboxSpec {
    pub table: [u8; 16],
}

impl Default for SboxSpec {
    fn default() -> Self {
        Self {
            table: SMALL_AES_SBOX,
        }
    }
}

impl SboxSpec {
    pub fn new(table: [u8; 16]) -> Result<Self, SynthError> {
        if let Some(v) = table.iter().find(|&&v| v > 15) {
            return Err(SynthError::Sbox(format!("entry {v} exceeds 15")));
        }
        Ok(Self { table })
    }

    pub fn identity() -> Self {
        Self {
            table: std::array::from_fn(|i| i as u8),
        }
    }

    pub fn apply(&self, x: u8) -> u8 {
        self.table[(x & 0xF) as usize]
    }
}

impl FromStr for SboxSpec {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let body: String = s
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .collect::<Vec<_>>()
            .join(" ");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        if tokens.len() != 16 {
            return Err(SynthError::Sbox(format!("found {} entries", tokens.len())));
        }
        let mut table = [0u8; 16];
        for (slot, tok) in table.iter_mut().zip(&tokens) {
            *slot = u8::from_str_radix(tok, 16)
                .ok()
                .filter(|v| *v < 16 && tok.len() == 1)
                .ok_or_else(|| SynthError::Sbox(format!("bad nibble `{tok}`")))?;
        }
        Self::new(table)
    }
}

impl fmt::Display for SboxSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.table.iter().map(|v| format!("{v:X}")).collect();
        f.write_str(&parts.join(" "))
    }
}

pub const XOR4SBOX_INPUTS: [&str; 8] = ["p3", "p2", "p1", "p0", "k3", "k2", "k1", "k0"];
pub const XOR4SBOX_OUTPUTS: [&str; 4] = ["c3", "c2", "c1", "c0"];

/// Reference table of `c = S(p ⊕ k)`; row index is `p << 4 | k`.
pub fn xor4sbox_table(sbox: &SboxSpec) -> TruthTable {
    TruthTable::from_fn(&XOR4SBOX_INPUTS, &XOR4SBOX_OUTPUTS, |row| {
        let c = sbox.apply(((row >> 4) ^ row) as u8 & 0xF);
        (0..4).rev().map(|b| (c >> b) & 1 == 1).collect()
    })
    .expect("8-input table")
}

/// NOR-only key addition (five NORs per bit) followed by the synthesized S-box.
pub fn build_xor4sbox(sbox: &SboxSpec) -> Netlist {
    let mut builder = NorBuilder::default();
    let mut xs = Vec::with_capacity(4);
    for bit in 0..4 {
        let (p, k) = (Net::Input(bit), Net::Input(bit + 4));
        let n1 = builder.nor(p, k);
        let n2 = builder.nor(p, n1);
        let n3 = builder.nor(k, n1);
        let xnor = builder.nor(n2, n3);
        xs.push(builder.inv(xnor));
    }
    let outputs = (0..4)
        .map(|o| {
            let shift = 3 - o;
            let column: Vec<bool> = (0..16).map(|x| (sbox.apply(x) >> shift) & 1 == 1).collect();
            (XOR4SBOX_OUTPUTS[o].to_string(), builder.column(&xs, &column))
        })
        .collect();
    builder.into_netlist(XOR4SBOX_INPUTS.iter().map(|s| s.to_string()).collect(), outputs)
}

/// Plaintext and key nibbles as an input vector for [`build_xor4sbox`] netlists.
pub fn xor4sbox_inputs(plaintext: u8, key: u8) -> Vec<bool> {
    row_bits(((plaintext as usize & 0xF) << 4) | (key as usize & 0xF), 8)
}
