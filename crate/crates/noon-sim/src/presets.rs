//! Built-in sweep configurations for the standard parameter-study panels
//! (`fig3a` ... `fig6c`).
//!
//! All rates are in units of the reference coupling. The `fig3`/`fig4`
//! family runs the two-subsystem array with a single excitation; `fig5` runs
//! the four-subsystem array with two excitations; `fig6` runs the coupled
//! rings with two emitters per cavity and two excitations.
//!
//! Panels whose fixed rate is not pinned by the study (`fig4a`, `fig5c`,
//! `fig6c`) sweep the coupling at fixed unit decay rate, with the detuning
//! tied to the swept coupling as `0.5 g`; their time axis is therefore in
//! units of the inverse decay rate.

use num_complex::Complex64 as C64;

use crate::basis::Slot;
use crate::dynamics::TimeGrid;
use crate::fidelity::NoonTarget;
use crate::model::{DdiRingConfig, JcArrayConfig, SchemeConfig, SubsystemParams};
use crate::sweep::{
    LinkedParameter, Method, StateSpec, SweepAxis, SweepParameter, SweepSpec, SCHEMA_VERSION,
};

/// Default sweep resolution: parameter points x time points.
pub const DEFAULT_AXIS_POINTS: usize = 151;
pub const DEFAULT_TIME_POINTS: usize = 301;

pub const PRESET_NAMES: [&str; 12] = [
    "fig3a", "fig3b", "fig3c", "fig4a", "fig4b", "fig4c", "fig5a", "fig5b", "fig5c", "fig6a",
    "fig6b", "fig6c",
];

fn array_scheme(n: usize, delta: f64, g: f64, kappa: f64, eta: f64) -> SchemeConfig {
    SchemeConfig::JcArray(JcArrayConfig::uniform(
        n,
        SubsystemParams {
            omega_eg: delta,
            omega_c: 0.0,
            g: C64::new(g, 0.0),
            kappa_odd: kappa,
            kappa_even: kappa,
            eta,
            gamma: 0.0,
        },
    ))
}

fn ring_scheme(delta: f64, g: f64, kappa: f64, eta: f64, xi: f64) -> SchemeConfig {
    SchemeConfig::DdiRings(DdiRingConfig {
        emitters_per_cavity: 2,
        omega_eg: delta,
        omega_c1: 0.0,
        omega_c2: 0.0,
        g_left: C64::new(g, 0.0),
        g_right: C64::new(g, 0.0),
        eta_left: eta,
        eta_right: eta,
        xi_left: vec![xi],
        xi_right: vec![xi],
        kappa: [kappa; 4],
        gamma: 0.0,
        detuning_convention: Default::default(),
    })
}

fn emitters(indices: &[usize]) -> Vec<Slot> {
    indices.iter().map(|&i| Slot::Emitter(i)).collect()
}

fn modes(indices: &[usize]) -> Vec<Slot> {
    indices.iter().map(|&i| Slot::Mode(i)).collect()
}

fn kappa_axis() -> SweepAxis {
    SweepAxis {
        parameter: SweepParameter::Kappa,
        start: 0.0,
        stop: 1.5,
        points: DEFAULT_AXIS_POINTS,
        linked: Vec::new(),
    }
}

/// Coupling sweep at unit decay rate; the detuning tracks the coupling.
fn coupling_axis() -> SweepAxis {
    SweepAxis {
        parameter: SweepParameter::G,
        start: 0.0,
        stop: 10.0,
        points: DEFAULT_AXIS_POINTS,
        linked: vec![LinkedParameter { parameter: SweepParameter::DeltaAc, factor: 0.5 }],
    }
}

fn time_grid() -> TimeGrid {
    TimeGrid::new(0.0, 6.0, DEFAULT_TIME_POINTS).expect("static grid is valid")
}

fn noon(photons: usize, left: Vec<Slot>, right: Vec<Slot>) -> NoonTarget {
    NoonTarget::new(photons, 0.0, left, right).expect("static groups are valid")
}

fn spec(
    scheme: SchemeConfig,
    axis: SweepAxis,
    time_unit: &str,
    initial: NoonTarget,
    target: NoonTarget,
) -> SweepSpec {
    SweepSpec {
        schema: SCHEMA_VERSION,
        scheme,
        axis,
        time: time_grid(),
        time_unit: time_unit.into(),
        initial_state: StateSpec::Noon(initial),
        target,
        method: Method::Nojump,
        trajectories: None,
        seed: 1,
        dump_amplitudes: false,
    }
}

/// Look up a built-in sweep by name.
pub fn preset(name: &str) -> Option<SweepSpec> {
    let bell = noon(1, emitters(&[0]), emitters(&[1]));
    let cavity_pair = noon(1, modes(&[0, 1]), modes(&[2, 3]));
    let hybrid = noon(
        1,
        vec![Slot::Emitter(0), Slot::Mode(0), Slot::Mode(1)],
        vec![Slot::Emitter(1), Slot::Mode(2), Slot::Mode(3)],
    );
    let four_emitters = noon(2, emitters(&[0, 1]), emitters(&[2, 3]));
    let cavity_quad = noon(2, modes(&[0, 1, 2, 3]), modes(&[4, 5, 6, 7]));
    let ring_cavities = noon(2, modes(&[0, 1]), modes(&[2, 3]));

    let s = match name {
        // Single excitation, two cascaded subsystems.
        "fig3a" => spec(array_scheme(2, 0.5, 1.0, 0.0, 0.0), kappa_axis(), "1/g", bell.clone(), bell),
        "fig3b" => spec(
            array_scheme(2, 0.5, 1.0, 0.0, 0.0),
            kappa_axis(),
            "1/g",
            bell,
            cavity_pair,
        ),
        "fig3c" => spec(array_scheme(2, 0.5, 1.0, 0.0, 0.0), kappa_axis(), "1/g", bell, hybrid),
        "fig4a" => spec(
            array_scheme(2, 0.5, 1.0, 1.0, 0.0),
            coupling_axis(),
            "1/kappa",
            bell,
            cavity_pair,
        ),
        "fig4b" => spec(
            array_scheme(2, 5.0, 1.0, 0.0, 0.0),
            kappa_axis(),
            "1/g",
            bell,
            cavity_pair,
        ),
        "fig4c" => spec(
            array_scheme(2, 0.5, 1.0, 0.0, 1.5),
            kappa_axis(),
            "1/g",
            bell,
            cavity_pair,
        ),
        // Two excitations, four cascaded subsystems grouped 1-2 vs 3-4.
        "fig5a" => spec(
            array_scheme(4, 5.0, 1.0, 0.0, 0.0),
            kappa_axis(),
            "1/g",
            four_emitters,
            cavity_quad,
        ),
        "fig5b" => spec(
            array_scheme(4, 0.5, 1.0, 0.0, 1.5),
            kappa_axis(),
            "1/g",
            four_emitters,
            cavity_quad,
        ),
        "fig5c" => spec(
            array_scheme(4, 0.5, 1.0, 1.0, 0.0),
            coupling_axis(),
            "1/kappa",
            four_emitters,
            cavity_quad,
        ),
        // Two excitations, two rings with two DDI emitters each.
        "fig6a" => spec(
            ring_scheme(5.0, 1.0, 0.0, 0.0, 0.5),
            kappa_axis(),
            "1/g",
            four_emitters,
            ring_cavities,
        ),
        "fig6b" => spec(
            ring_scheme(0.5, 1.0, 0.0, 1.5, 0.5),
            kappa_axis(),
            "1/g",
            four_emitters,
            ring_cavities,
        ),
        "fig6c" => spec(
            ring_scheme(0.5, 1.0, 1.0, 0.0, 0.5),
            coupling_axis(),
            "1/kappa",
            four_emitters,
            ring_cavities,
        ),
        _ => return None,
    };
    Some(s)
}
