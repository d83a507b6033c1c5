//! NOR synthesis of a few truth tables and of the xor4SBox circuit.

use memcrs::netlist::stats;
use memcrs::synth::{build_xor4sbox, synthesize_nor, verify_equiv, xor4sbox_table, SboxSpec, TruthTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tables = [
        (
            "xor",
            TruthTable::from_fn(&["q", "p"], &["y"], |r| vec![r == 1 || r == 2])?,
        ),
        (
            "majority",
            TruthTable::from_fn(&["a", "b", "c"], &["m"], |r| vec![r.count_ones() >= 2])?,
        ),
        (
            "2-bit adder",
            TruthTable::from_fn(&["a1", "a0", "b1", "b0"], &["s2", "s1", "s0"], |r| {
                let s = (r >> 2) + (r & 3);
                vec![s & 4 != 0, s & 2 != 0, s & 1 != 0]
            })?,
        ),
    ];
    for (name, tt) in &tables {
        let n = synthesize_nor(tt);
        assert!(verify_equiv(&n, tt)?.is_equal());
        print!("{name}\n{}", stats(&n)?);
    }

    let sbox = SboxSpec::default();
    let n = build_xor4sbox(&sbox);
    assert!(verify_equiv(&n, &xor4sbox_table(&sbox))?.is_equal());
    print!("xor4SBox with S = {sbox}\n{}", stats(&n)?);
    Ok(())
}
