//! Power-balanced hiding groups.
//!
//! A group is a set of cells sharing one initialization state that are driven
//! by the same `(q, p)` operands. Its write-mark and read-mark multisets, and
//! the multiset of written states, do not depend on the operands, so the
//! group's per-cycle power is data independent. Only the member at
//! `functional_index` feeds the circuit; the others shape power.

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::device::{
    cycle_energy, read_waveform, write_bias, write_waveform, CycleKind, DeviceParams, DeviceState, ReadMark,
    WriteMark,
};
use crate::gates::{
    execute_plan, plan_for, xor_family, CyclePlan, GateType, LivExpr, XorConfig, INPUT_PAIRS,
};

#[derive(Debug, Error, PartialEq)]
pub enum HidingError {
    #[error("gate {0} is an ungrouped constant")]
    UngroupedConstant(GateType),
    #[error("balance check needs ideal devices, c2c_sigma is {0}")]
    NonIdealDevice(f64),
    #[error(
        "group {group} unbalanced in {kind:?} cycle: input (q={q},p={p}) differs from (q=0,p=0): {detail}",
        q = .input.0 as u8, p = .input.1 as u8
    )]
    Unbalanced {
        group: GroupId,
        input: (bool, bool),
        kind: CycleKind,
        detail: String,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum GroupId {
    #[serde(rename = "HG2")]
    Hg2,
    #[serde(rename = "HG3a")]
    Hg3a,
    #[serde(rename = "HG3b")]
    Hg3b,
    #[serde(rename = "HG3c")]
    Hg3c,
    #[serde(rename = "HG3d")]
    Hg3d,
    #[serde(rename = "HG4X")]
    Hg4x,
}

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupId::Hg2 => "HG2",
            GroupId::Hg3a => "HG3a",
            GroupId::Hg3b => "HG3b",
            GroupId::Hg3c => "HG3c",
            GroupId::Hg3d => "HG3d",
            GroupId::Hg4x => "HG4X",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GroupMember {
    pub gate: GateType,
    pub plan: CyclePlan,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct HidingGroup {
    pub id: GroupId,
    pub members: Vec<GroupMember>,
    pub functional_index: usize,
}

impl HidingGroup {
    pub fn new(id: GroupId, members: Vec<GroupMember>, functional_index: usize) -> Self {
        assert!(functional_index < members.len());
        Self {
            id,
            members,
            functional_index,
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn plans(&self) -> impl Iterator<Item = CyclePlan> + '_ {
        self.members.iter().map(|m| m.plan)
    }

    pub fn functional(&self) -> &GroupMember {
        &self.members[self.functional_index]
    }
}

fn member(gate: GateType, plan: CyclePlan) -> GroupMember {
    GroupMember { gate, plan }
}

fn std_member(gate: GateType) -> GroupMember {
    member(gate, plan_for(gate))
}

/// Literal realized under `init = '1'`: `TE + ¬BE` with TE = x, BE = ¬x.
fn or_family_literal(gate: GateType) -> GroupMember {
    let te = match gate {
        GateType::P => LivExpr::P,
        GateType::Np => LivExpr::NotP,
        _ => unreachable!("only p literals appear in OR-family groups"),
    };
    member(
        gate,
        CyclePlan::new(DeviceState::One, te, te.negated(), LivExpr::One),
    )
}

fn hg3(id: GroupId, gate: GateType) -> HidingGroup {
    let members = match id {
        GroupId::Hg3a => vec![
            std_member(GateType::And),
            std_member(GateType::PAndnQ),
            std_member(GateType::Np),
        ],
        GroupId::Hg3b => vec![
            std_member(GateType::Nor),
            std_member(GateType::NpAndQ),
            std_member(GateType::P),
        ],
        GroupId::Hg3c => vec![
            std_member(GateType::Or),
            std_member(GateType::POrnQ),
            or_family_literal(GateType::Np),
        ],
        GroupId::Hg3d => vec![
            std_member(GateType::Nand),
            std_member(GateType::NpOrQ),
            or_family_literal(GateType::P),
        ],
        _ => unreachable!(),
    };
    let functional_index = members
        .iter()
        .position(|m| m.gate == gate)
        .expect("gate belongs to its group");
    HidingGroup::new(id, members, functional_index)
}

/// Group used to hide `gate`, with `functional_index` on the requested gate.
pub fn group_for(gate: GateType) -> Result<HidingGroup, HidingError> {
    group_for_with(gate, XorConfig::WriteP)
}

pub fn group_for_with(gate: GateType, xor: XorConfig) -> Result<HidingGroup, HidingError> {
    Ok(match gate {
        GateType::Zero | GateType::One => return Err(HidingError::UngroupedConstant(gate)),
        GateType::And | GateType::PAndnQ => hg3(GroupId::Hg3a, gate),
        GateType::Nor | GateType::NpAndQ => hg3(GroupId::Hg3b, gate),
        GateType::Or | GateType::POrnQ => hg3(GroupId::Hg3c, gate),
        GateType::Nand | GateType::NpOrQ => hg3(GroupId::Hg3d, gate),
        GateType::P | GateType::Np | GateType::Q | GateType::Nq => {
            let negation = match gate {
                GateType::P => GateType::Np,
                GateType::Np => GateType::P,
                GateType::Q => GateType::Nq,
                _ => GateType::Q,
            };
            HidingGroup::new(GroupId::Hg2, vec![std_member(gate), std_member(negation)], 0)
        }
        GateType::Xor | GateType::Xnor => {
            let [x0, x1, n0, n1] = xor_family(xor);
            let members = vec![
                member(GateType::Xor, x0),
                member(GateType::Xor, x1),
                member(GateType::Xnor, n0),
                member(GateType::Xnor, n1),
            ];
            HidingGroup::new(GroupId::Hg4x, members, if gate == GateType::Xor { 0 } else { 2 })
        }
    })
}

/// One group per non-constant gate type.
pub fn catalog() -> Vec<(GateType, HidingGroup)> {
    GateType::ALL
        .into_iter()
        .filter_map(|g| group_for(g).ok().map(|grp| (g, grp)))
        .collect()
}

/// Sorted write and read marks of all members on one input pair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GroupMarks {
    pub write: Vec<WriteMark>,
    pub read: Vec<ReadMark>,
}

pub fn group_marks(group: &HidingGroup, q: bool, p: bool) -> GroupMarks {
    let mut write = Vec::with_capacity(group.len());
    let mut read = Vec::with_capacity(group.len());
    for plan in group.plans() {
        let e = execute_plan(plan, q, p);
        write.push(e.write_mark);
        read.push(e.read_mark);
    }
    write.sort();
    read.sort();
    GroupMarks { write, read }
}

/// Per-cycle group energies (J) on one input pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CycleEnergies {
    pub write: f64,
    pub read: f64,
    pub reinit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceReport {
    pub group: GroupId,
    pub marks: GroupMarks,
    pub ones_written: usize,
    pub per_input: Vec<((bool, bool), CycleEnergies)>,
}

/// Sum in ascending order so equal multisets give bit-identical totals.
pub(crate) fn canonical_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

fn input_energies(group: &HidingGroup, params: &DeviceParams, q: bool, p: bool) -> (CycleEnergies, usize) {
    let res = &params.nominal;
    let mut write = Vec::new();
    let mut read = Vec::new();
    let mut reinit = Vec::new();
    let mut ones = 0;
    for plan in group.plans() {
        let te = plan.te.eval(q, p);
        let be = plan.be.eval(q, p);
        let w = write_waveform(params, write_bias(params, te, be));
        let (wp, written) = cycle_energy(plan.init, &w, res, params);
        let (rp, after_read) = cycle_energy(written, &read_waveform(params, plan.r.eval(q, p)), res, params);
        let (ite, ibe) = plan.init_electrodes();
        let (ip, _) = cycle_energy(
            after_read,
            &write_waveform(params, write_bias(params, ite, ibe)),
            res,
            params,
        );
        ones += written.bit() as usize;
        write.push(crate::device::energy(&wp, params.dt));
        read.push(crate::device::energy(&rp, params.dt));
        reinit.push(crate::device::energy(&ip, params.dt));
    }
    (
        CycleEnergies {
            write: canonical_sum(&mut write),
            read: canonical_sum(&mut read),
            reinit: canonical_sum(&mut reinit),
        },
        ones,
    )
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Exhaustive balance check over the four input pairs on nominal devices.
pub fn verify_balance(group: &HidingGroup, params: &DeviceParams) -> Result<BalanceReport, HidingError> {
    if params.c2c_sigma != 0.0 {
        return Err(HidingError::NonIdealDevice(params.c2c_sigma));
    }
    let reference_marks = group_marks(group, false, false);
    let (reference, reference_ones) = input_energies(group, params, false, false);
    let mut per_input = vec![((false, false), reference)];
    for (q, p) in INPUT_PAIRS.into_iter().skip(1) {
        let fail = |kind, detail: String| HidingError::Unbalanced {
            group: group.id,
            input: (q, p),
            kind,
            detail,
        };
        let marks = group_marks(group, q, p);
        if marks.write != reference_marks.write {
            return Err(fail(
                CycleKind::Write,
                format!("marks {:?} vs {:?}", marks.write, reference_marks.write),
            ));
        }
        if marks.read != reference_marks.read {
            return Err(fail(
                CycleKind::Read,
                format!("marks {:?} vs {:?}", marks.read, reference_marks.read),
            ));
        }
        let (e, ones) = input_energies(group, params, q, p);
        if !close(e.write, reference.write) {
            return Err(fail(
                CycleKind::Write,
                format!("energy {} vs {}", e.write, reference.write),
            ));
        }
        if !close(e.read, reference.read) {
            return Err(fail(
                CycleKind::Read,
                format!("energy {} vs {}", e.read, reference.read),
            ));
        }
        if ones != reference_ones || !close(e.reinit, reference.reinit) {
            return Err(fail(
                CycleKind::Init,
                format!("re-init energy {} vs {}", e.reinit, reference.reinit),
            ));
        }
        per_input.push(((q, p), e));
    }
    Ok(BalanceReport {
        group: group.id,
        marks: reference_marks,
        ones_written: reference_ones,
        per_input,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use WriteMark::*;

    #[test]
    fn nor_group_members() {
        let g = group_for(GateType::Nor).unwrap();
        assert_eq!(g.id, GroupId::Hg3b);
        let gates: Vec<_> = g.members.iter().map(|m| m.gate).collect();
        assert_eq!(gates, [GateType::Nor, GateType::NpAndQ, GateType::P]);
        assert_eq!(g.functional().gate, GateType::Nor);
    }

    #[test]
    fn and_group_members() {
        let g = group_for(GateType::And).unwrap();
        assert_eq!(g.id, GroupId::Hg3a);
        let gates: Vec<_> = g.members.iter().map(|m| m.gate).collect();
        assert_eq!(gates, [GateType::And, GateType::PAndnQ, GateType::Np]);
    }

    #[test]
    fn functional_index_points_at_gate() {
        for (gate, g) in catalog() {
            let f = g.functional();
            for (q, p) in INPUT_PAIRS {
                assert_eq!(execute_plan(f.plan, q, p).out, gate.eval(q, p), "{gate}");
            }
            assert!(g.plans().all(|pl| pl.init == g.members[0].plan.init));
        }
        assert_eq!(catalog().len(), 14);
    }

    #[test]
    fn constants_are_ungrouped() {
        assert_eq!(
            group_for(GateType::Zero),
            Err(HidingError::UngroupedConstant(GateType::Zero))
        );
        assert!(group_for(GateType::One).is_err());
    }

    #[test]
    fn hg3b_marks() {
        let g = group_for(GateType::Nor).unwrap();
        for (q, p) in INPUT_PAIRS {
            let m = group_marks(&g, q, p);
            assert_eq!(m.write, [A, B, C]);
            assert_eq!(m.read, [ReadMark::W, ReadMark::W, ReadMark::Y]);
        }
    }

    #[test]
    fn hg4x_marks() {
        let g = group_for(GateType::Xor).unwrap();
        let m = group_marks(&g, false, true);
        assert_eq!(m.write, [B, B, C, C]);
        assert_eq!(m.read, [ReadMark::W, ReadMark::X, ReadMark::Y, ReadMark::Z]);
        let alt = group_for_with(GateType::Xnor, XorConfig::WriteQ).unwrap();
        assert!(verify_balance(&alt, &DeviceParams::default()).is_ok());
    }

    #[test]
    fn hg2_marks() {
        let g = group_for(GateType::P).unwrap();
        for p in [false, true] {
            assert_eq!(group_marks(&g, false, p).write, [B, C]);
        }
    }

    #[test]
    fn catalog_is_balanced() {
        let params = DeviceParams::default();
        for (gate, g) in catalog() {
            let report = verify_balance(&g, &params).unwrap_or_else(|e| panic!("{gate}: {e}"));
            let first = report.per_input[0].1;
            for (_, e) in &report.per_input {
                assert_eq!(e.write, first.write);
                assert_eq!(e.read, first.read);
                assert_eq!(e.reinit, first.reinit);
            }
        }
    }

    #[test]
    fn ones_written_per_group() {
        let params = DeviceParams::default();
        let expect = [
            (GateType::And, 1),
            (GateType::Nor, 1),
            (GateType::Or, 2),
            (GateType::Nand, 2),
            (GateType::Xor, 2),
            (GateType::P, 1),
        ];
        for (gate, ones) in expect {
            let report = verify_balance(&group_for(gate).unwrap(), &params).unwrap();
            assert_eq!(report.ones_written, ones, "{gate}");
        }
    }

    #[test]
    fn broken_group_is_caught() {
        let and = std_member(GateType::And);
        let g = HidingGroup::new(GroupId::Hg3a, vec![and; 3], 0);
        // brute force: all-B at (0,0), all-C at (1,1)
        assert_eq!(group_marks(&g, false, false).write, [B, B, B]);
        assert_eq!(group_marks(&g, true, true).write, [C, C, C]);
        let err = verify_balance(&g, &DeviceParams::default()).unwrap_err();
        assert!(matches!(
            err,
            HidingError::Unbalanced {
                kind: CycleKind::Write,
                ..
            }
        ));
    }

    #[test]
    fn balance_requires_ideal_devices() {
        let g = group_for(GateType::Nor).unwrap();
        let params = DeviceParams::default().with_sigma(0.1);
        assert_eq!(verify_balance(&g, &params), Err(HidingError::NonIdealDevice(0.1)));
    }
}
