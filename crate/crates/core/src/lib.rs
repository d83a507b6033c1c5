//! Cycle-accurate simulation of complementary resistive switching (CRS-R)
//! memristive logic, power-balanced hiding groups, NOR synthesis and
//! fixed-vs-random leakage assessment.

pub mod analysis;
pub mod cli;
pub mod device;
pub mod gates;
pub mod hiding;
pub mod netlist;
pub mod rng;
pub mod sim;
pub mod synth;

pub use device::{BranchResistances, CycleKind, DeviceParams, DeviceState, ReadMark, WriteMark};
pub use gates::{execute_plan, plan_for, CyclePlan, GateType, LivExpr};
pub use hiding::{group_for, verify_balance, GroupId, HidingGroup};
pub use netlist::{eval_netlist, levelize, parse_mnl, schedule, Netlist, Schedule};
