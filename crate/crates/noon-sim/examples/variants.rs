//! Probe detuning-convention and detuning-value variants of the
//! backscattering panels.

use noon_sim::model::{DetuningConvention, SchemeConfig};
use noon_sim::{find_max, preset, run_sweep};

fn main() {
    for name in ["fig4c", "fig5b", "fig6b"] {
        for (tag, convention, delta) in [
            ("default(+0.5)", DetuningConvention::EmitterMinusCavity, None),
            ("flipped(-0.5)", DetuningConvention::CavityMinusEmitter, None),
            ("resonant(0.0)", DetuningConvention::EmitterMinusCavity, Some(0.0)),
        ] {
            let mut spec = preset(name).unwrap();
            match &mut spec.scheme {
                SchemeConfig::JcArray(c) => {
                    c.detuning_convention = convention;
                    if let Some(d) = delta {
                        for s in &mut c.subsystems {
                            s.omega_eg = d;
                        }
                    }
                }
                SchemeConfig::DdiRings(c) => {
                    c.detuning_convention = convention;
                    if let Some(d) = delta {
                        c.omega_eg = d;
                    }
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
