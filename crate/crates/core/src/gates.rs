//! The 16 two-input gate types and their init/write/read cycle plans.
//!
//! A plan initializes the cell to `init`, drives TE/BE from two logic input
//! expressions during the write cycle and selects the read polarity from a
//! third. With `init = '0'` the written state is `TE · ¬BE`; with `init = '1'`
//! it is `TE + ¬BE`. Reading with r=0 complements the result.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::device::{read_value, write_transition, DeviceState, ReadMark, WriteMark};

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown gate type `{0}`")]
pub struct UnknownGate(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum GateType {
    Zero,
    One,
    P,
    Q,
    Np,
    Nq,
    And,
    Or,
    Nand,
    Nor,
    Xor,
    Xnor,
    /// p · ¬q
    PAndnQ,
    /// ¬p · q
    NpAndQ,
    /// p + ¬q
    POrnQ,
    /// ¬p + q
    NpOrQ,
}

impl GateType {
    pub const ALL: [GateType; 16] = [
        GateType::Zero,
        GateType::One,
        GateType::P,
        GateType::Q,
        GateType::Np,
        GateType::Nq,
        GateType::And,
        GateType::Or,
        GateType::Nand,
        GateType::Nor,
        GateType::Xor,
        GateType::Xnor,
        GateType::PAndnQ,
        GateType::NpAndQ,
        GateType::POrnQ,
        GateType::NpOrQ,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GateType::Zero => "ZERO",
            GateType::One => "ONE",
            GateType::P => "P",
            GateType::Q => "Q",
            GateType::Np => "NP",
            GateType::Nq => "NQ",
            GateType::And => "AND",
            GateType::Or => "OR",
            GateType::Nand => "NAND",
            GateType::Nor => "NOR",
            GateType::Xor => "XOR",
            GateType::Xnor => "XNOR",
            GateType::PAndnQ => "P_ANDN_Q",
            GateType::NpAndQ => "NP_AND_Q",
            GateType::POrnQ => "P_ORN_Q",
            GateType::NpOrQ => "NP_OR_Q",
        }
    }

    /// Truth table with bit `2q + p` holding the output for `(q, p)`.
    pub fn truth_table(self) -> u8 {
        let mut table = 0;
        for q in [false, true] {
            for p in [false, true] {
                if self.eval(q, p) {
                    table |= 1 << ((q as u8) << 1 | p as u8);
                }
            }
        }
        table
    }

    pub fn eval(self, q: bool, p: bool) -> bool {
        match self {
            GateType::Zero => false,
            GateType::One => true,
            GateType::P => p,
            GateType::Q => q,
            GateType::Np => !p,
            GateType::Nq => !q,
            GateType::And => p && q,
            GateType::Or => p || q,
            GateType::Nand => !(p && q),
            GateType::Nor => !(p || q),
            GateType::Xor => p ^ q,
            GateType::Xnor => !(p ^ q),
            GateType::PAndnQ => p && !q,
            GateType::NpAndQ => !p && q,
            GateType::POrnQ => p || !q,
            GateType::NpOrQ => !p || q,
        }
    }

    /// Literal and constant gates read at most one net; in netlist files both
    /// input positions must name the same net.
    pub fn is_unary(self) -> bool {
        matches!(
            self,
            GateType::Zero | GateType::One | GateType::P | GateType::Q | GateType::Np | GateType::Nq
        )
    }

    /// The gate computing the same function with q and p exchanged.
    pub fn swapped(self) -> GateType {
        match self {
            GateType::P => GateType::Q,
            GateType::Q => GateType::P,
            GateType::Np => GateType::Nq,
            GateType::Nq => GateType::Np,
            GateType::PAndnQ => GateType::NpAndQ,
            GateType::NpAndQ => GateType::PAndnQ,
            GateType::POrnQ => GateType::NpOrQ,
            GateType::NpOrQ => GateType::POrnQ,
            g => g,
        }
    }
}

impl fmt::Display for GateType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateType {
    type Err = UnknownGate;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GateType::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| UnknownGate(s.to_string()))
    }
}

/// Logic input variable applied to an electrode or used as read selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LivExpr {
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "!q")]
    NotQ,
    #[serde(rename = "!p")]
    NotP,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
}

impl LivExpr {
    pub fn eval(self, q: bool, p: bool) -> bool {
        match self {
            LivExpr::Q => q,
            LivExpr::P => p,
            LivExpr::NotQ => !q,
            LivExpr::NotP => !p,
            LivExpr::Zero => false,
            LivExpr::One => true,
        }
    }

    pub fn negated(self) -> LivExpr {
        match self {
            LivExpr::Q => LivExpr::NotQ,
            LivExpr::P => LivExpr::NotP,
            LivExpr::NotQ => LivExpr::Q,
            LivExpr::NotP => LivExpr::P,
            LivExpr::Zero => LivExpr::One,
            LivExpr::One => LivExpr::Zero,
        }
    }

    pub fn swapped(self) -> LivExpr {
        match self {
            LivExpr::Q => LivExpr::P,
            LivExpr::P => LivExpr::Q,
            LivExpr::NotQ => LivExpr::NotP,
            LivExpr::NotP => LivExpr::NotQ,
            c => c,
        }
    }
}

impl fmt::Display for LivExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LivExpr::Q => "q",
            LivExpr::P => "p",
            LivExpr::NotQ => "!q",
            LivExpr::NotP => "!p",
            LivExpr::Zero => "0",
            LivExpr::One => "1",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CyclePlan {
    pub init: DeviceState,
    pub te: LivExpr,
    pub be: LivExpr,
    pub r: LivExpr,
}

impl CyclePlan {
    pub const fn new(init: DeviceState, te: LivExpr, be: LivExpr, r: LivExpr) -> Self {
        Self { init, te, be, r }
    }

    /// Plan with q and p exchanged everywhere.
    pub fn swapped(self) -> Self {
        Self {
            init: self.init,
            te: self.te.swapped(),
            be: self.be.swapped(),
            r: self.r.swapped(),
        }
    }

    pub fn with_read(self, r: LivExpr) -> Self {
        Self { r, ..self }
    }

    /// Boolean function realized by the plan, derived from the write formulas
    /// rather than the device truth tables.
    pub fn realized(self, q: bool, p: bool) -> bool {
        let te = self.te.eval(q, p);
        let be = self.be.eval(q, p);
        let written = match self.init {
            DeviceState::Zero => te && !be,
            DeviceState::One => te || !be,
        };
        written == self.r.eval(q, p)
    }

    /// Electrode levels that drive a cell into `init`.
    pub fn init_electrodes(self) -> (bool, bool) {
        match self.init {
            DeviceState::Zero => (false, true),
            DeviceState::One => (true, false),
        }
    }
}

impl fmt::Display for CyclePlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "S'={} TE={} BE={} r={}",
            self.init.bit() as u8,
            self.te,
            self.be,
            self.r
        )
    }
}

/// Which operand the XOR/XNOR write cycle stores; the other selects the read
/// polarity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum XorConfig {
    /// Written state is p or ¬p, read selector is q or ¬q.
    #[default]
    WriteP,
    /// Written state is q or ¬q, read selector is p or ¬p.
    WriteQ,
}

use DeviceState::{One as S1, Zero as S0};
use LivExpr::{NotP, NotQ, One as L1, Zero as L0, P, Q};

pub fn plan_for(gate: GateType) -> CyclePlan {
    plan_with(gate, XorConfig::WriteP)
}

pub fn plan_with(gate: GateType, xor: XorConfig) -> CyclePlan {
    match gate {
        GateType::Zero => CyclePlan::new(S0, L0, L0, L1),
        GateType::One => CyclePlan::new(S1, L0, L0, L1),
        GateType::P => CyclePlan::new(S0, P, NotP, L1),
        GateType::Q => CyclePlan::new(S0, Q, NotQ, L1),
        GateType::Np => CyclePlan::new(S0, NotP, P, L1),
        GateType::Nq => CyclePlan::new(S0, NotQ, Q, L1),
        GateType::And => CyclePlan::new(S0, P, NotQ, L1),
        GateType::PAndnQ => CyclePlan::new(S0, P, Q, L1),
        GateType::NpAndQ => CyclePlan::new(S0, Q, P, L1),
        GateType::Nor => CyclePlan::new(S0, NotQ, P, L1),
        GateType::Or => CyclePlan::new(S1, P, NotQ, L1),
        GateType::POrnQ => CyclePlan::new(S1, P, Q, L1),
        GateType::NpOrQ => CyclePlan::new(S1, Q, P, L1),
        GateType::Nand => CyclePlan::new(S1, NotP, Q, L1),
        GateType::Xor | GateType::Xnor => {
            let family = xor_family(xor);
            if gate == GateType::Xor {
                family[0]
            } else {
                family[2]
            }
        }
    }
}

/// The four single-cell XOR/XNOR realizations sharing `init = '0'`, ordered
/// XOR (stored operand), XOR (negated operand), XNOR (stored), XNOR (negated).
pub fn xor_family(config: XorConfig) -> [CyclePlan; 4] {
    let family = [
        CyclePlan::new(S0, P, NotP, NotQ),
        CyclePlan::new(S0, NotP, P, Q),
        CyclePlan::new(S0, P, NotP, Q),
        CyclePlan::new(S0, NotP, P, NotQ),
    ];
    match config {
        XorConfig::WriteP => family,
        XorConfig::WriteQ => family.map(CyclePlan::swapped),
    }
}

/// Outcome of running one cell through init, write and read.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Execution {
    pub out: bool,
    pub written: DeviceState,
    pub write_mark: WriteMark,
    pub read_mark: ReadMark,
}

pub fn execute_plan(plan: CyclePlan, q: bool, p: bool) -> Execution {
    let (written, write_mark) = write_transition(plan.init, plan.te.eval(q, p), plan.be.eval(q, p));
    let (out, read_mark) = read_value(written, plan.r.eval(q, p));
    Execution {
        out,
        written,
        write_mark,
        read_mark,
    }
}

/// All four `(q, p)` input pairs in row order 00, 01, 10, 11.
pub const INPUT_PAIRS: [(bool, bool); 4] = [(false, false), (false, true), (true, false), (true, true)];
