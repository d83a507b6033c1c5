//! A 2:1 multiplexer scheduled with and without hiding, and its power traces.

use memcrs::device::energy;
use memcrs::sim::{simulate_run, SimParams};
use memcrs::{parse_mnl, schedule};

const MUX: &str = include_str!("../fixtures/mux.mnl");

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let netlist = parse_mnl(MUX)?;
    let params = SimParams::default();
    let cycle = params.device.samples_per_cycle();
    for hiding in [false, true] {
        let sched = schedule(&netlist, hiding)?;
        println!(
            "hiding={hiding}: {} cycles on {} cells",
            sched.cycles.len(),
            sched.cells_required
        );
        for row in 0..8usize {
            let inputs: Vec<bool> = (0..3).map(|j| row >> (2 - j) & 1 == 1).collect();
            let run = simulate_run(&sched, &inputs, &params)?;
            let per_cycle: Vec<String> = run
                .trace
                .samples
                .chunks(cycle)
                .map(|c| format!("{:7.3}", energy(c, params.device.dt) * 1e6))
                .collect();
            println!(
                "  D0 D1 S = {} -> Y={}  uJ per cycle: {}",
                run.trace.meta.inputs,
                u8::from(run.outputs[0]),
                per_cycle.join(" ")
            );
        }
    }
    Ok(())
}
