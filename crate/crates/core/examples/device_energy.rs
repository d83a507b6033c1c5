//! Energy of the basic write and read pulses on a single device.

use memcrs::device::{cycle_energy, energy, read_waveform, write_waveform};
use memcrs::{DeviceParams, DeviceState};

fn main() {
    let params = DeviceParams::default();
    let r = &params.nominal;
    let t = params.t_cycle * 1e-3;
    println!(
        "write ±{} V triangle, read ±{} V rectangle, {} samples per cycle",
        params.v_write,
        params.v_read,
        params.samples_per_cycle()
    );

    let cases = [
        (
            "write +V on '0' (mark C)",
            DeviceState::Zero,
            write_waveform(&params, params.v_write),
        ),
        (
            "write -V on '0' (mark B)",
            DeviceState::Zero,
            write_waveform(&params, -params.v_write),
        ),
        (
            "write -V on '1' (mark D)",
            DeviceState::One,
            write_waveform(&params, -params.v_write),
        ),
        (
            "write +V on '1' (mark E)",
            DeviceState::One,
            write_waveform(&params, params.v_write),
        ),
        (
            "read r=1 on '0' (mark W)",
            DeviceState::Zero,
            read_waveform(&params, true),
        ),
        (
            "read r=1 on '1' (mark Y)",
            DeviceState::One,
            read_waveform(&params, true),
        ),
        (
            "read r=0 on '0' (mark Z)",
            DeviceState::Zero,
            read_waveform(&params, false),
        ),
        (
            "read r=0 on '1' (mark X)",
            DeviceState::One,
            read_waveform(&params, false),
        ),
    ];
    for (label, state, wave) in cases {
        let (power, after) = cycle_energy(state, &wave, r, &params);
        println!(
            "{label:26} {:>10.4} uJ  -> {after}",
            energy(&power, params.dt) * 1e6
        );
    }

    let tri = params.v_write.powi(2) * t / (3.0 * r.r_pl);
    let rect = params.v_read.powi(2) * t / r.r_pl;
    println!(
        "closed forms at R = {:.0e} ohm: triangle {:.4} uJ, rectangle {:.4} uJ",
        r.r_pl,
        tri * 1e6,
        rect * 1e6
    );
}
