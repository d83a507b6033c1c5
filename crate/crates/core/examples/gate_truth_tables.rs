//! Cycle plans, outputs and power marks of all sixteen gates.

use memcrs::gates::INPUT_PAIRS;
use memcrs::{execute_plan, plan_for, GateType};

fn main() {
    for gate in GateType::ALL {
        let plan = plan_for(gate);
        let mut out = String::new();
        let mut writes = String::new();
        let mut reads = String::new();
        for (q, p) in INPUT_PAIRS {
            let e = execute_plan(plan, q, p);
            assert_eq!(e.out, gate.eval(q, p));
            out.push(if e.out { '1' } else { '0' });
            writes.push_str(&e.write_mark.to_string());
            reads.push_str(&e.read_mark.to_string());
        }
        println!(
            "{:10} {:28} y={out} write={writes} read={reads}",
            gate.name(),
            plan.to_string()
        );
    }
}
