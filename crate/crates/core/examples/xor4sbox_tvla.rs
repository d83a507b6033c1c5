//! Fixed-vs-random t-test on the xor4SBox circuit, with and without hiding.
//!
//! Run with `cargo run --release --example xor4sbox_tvla`.

use memcrs::analysis::{tvla_verdict, welch_t, DEFAULT_THRESHOLD};
use memcrs::netlist::stats;
use memcrs::sim::{run_campaign, CampaignSpec, SimParams};
use memcrs::synth::{build_xor4sbox, SboxSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let netlist = build_xor4sbox(&SboxSpec::default());
    println!("xor4SBox: {}", stats(&netlist)?);
    let params = SimParams {
        seed: 1,
        ..SimParams::default()
    };

    for (hiding, sigma) in [(false, 0.1), (true, 0.1), (true, 0.3)] {
        let spec = CampaignSpec {
            netlist: netlist.clone(),
            key: 0,
            fixed_plaintext: 0,
            n_fixed: 32,
            n_random: 32,
            hiding,
            sigma,
        };
        let campaign = run_campaign(&spec, &params)?;
        let t = welch_t(&campaign.fixed, &campaign.random)?;
        let v = tvla_verdict(&t, DEFAULT_THRESHOLD)?;
        println!(
            "hiding={hiding:<5} sigma={sigma:.2}  samples={}  max|t|={:8.3}  undefined={:4}  {}",
            t.len(),
            v.max_abs_t,
            v.undefined_samples,
            if v.leaky { "LEAKY" } else { "pass" }
        );
    }
    Ok(())
}
