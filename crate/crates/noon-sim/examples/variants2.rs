//! Backscattering panels with the large detuning retained from the
//! preceding panel, under both detuning conventions.

use noon_sim::model::{DetuningConvention, SchemeConfig};
use noon_sim::{find_max, preset, run_sweep};

fn main() {
    for name in ["fig4c", "fig5b", "fig6b"] {
        for (tag, convention) in [
            ("delta5 (+)", DetuningConvention::EmitterMinusCavity),
            ("delta5 (-)", DetuningConvention::CavityMinusEmitter),
        ] {
            let mut spec = preset(name).unwrap();
            match &mut spec.scheme {
                SchemeConfig::JcArray(c) => {
                    c.detuning_convention = convention;
                    for s in &mut c.subsystems {
                        s.omega_eg = 5.0;
                    }
                }
                SchemeConfig::DdiRings(c) => {
                    c.detuning_convention = convention;
                    c.omega_eg = 5.0;
                }
            }
            let grid = run_sweep(&spec).unwrap();
            let (fmax, (r, c)) = find_max(&grid).unwrap();
            println!(
                "{name} {tag}: max F = {fmax:.4} at param = {:.3}, t = {:.3}",
                grid.axis_values[r], grid.times[c]
            );
        }
    }
}
