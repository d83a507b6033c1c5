//! Every hiding group with its per-input mark multisets and energy balance.

use memcrs::gates::INPUT_PAIRS;
use memcrs::hiding::{catalog, group_marks, verify_balance};
use memcrs::DeviceParams;

fn main() {
    let params = DeviceParams::default();
    for (gate, group) in catalog() {
        let members: Vec<&str> = group.members.iter().map(|m| m.gate.name()).collect();
        let report = verify_balance(&group, &params).expect("catalog groups are balanced");
        let (_, e) = report.per_input[0];
        let marks = group_marks(&group, false, false);
        println!(
            "{:10} {:5} {{{}}} write {:?} read {:?}  E_w={:.4} uJ E_r={:.4} uJ E_init={:.4} uJ",
            gate.name(),
            group.id.to_string(),
            members.join(", "),
            marks.write,
            marks.read,
            e.write * 1e6,
            e.read * 1e6,
            e.reinit * 1e6
        );
        for (q, p) in INPUT_PAIRS {
            assert_eq!(group_marks(&group, q, p), marks);
        }
    }
}
