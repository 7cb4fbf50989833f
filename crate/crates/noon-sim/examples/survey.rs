//! Quick preset survey: max fidelity, argmax cell, and runtime per preset.

use noon_sim::{find_max, preset, run_sweep, PRESET_NAMES};

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).collect();
    for name in PRESET_NAMES {
        if !filter.is_empty() && !filter.iter().any(|f| f == name) {
            continue;
        }
        let spec = preset(name).unwrap();
        let t0 = std::time::Instant::now();
        let grid = run_sweep(&spec).unwrap();
        let elapsed = t0.elapsed().as_secs_f64();
        let (fmax, (r, c)) = find_max(&grid).unwrap();
        println!(
            "{name}: max F = {fmax:.4} at param = {:.4}, t = {:.4} ({elapsed:.1} s)",
            grid.axis_values[r], grid.times[c]
        );
    }
}
