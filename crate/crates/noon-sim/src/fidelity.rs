//! Ideal N00N targets over configurable slot groupings and the fidelity of
//! propagated states against them.
//!
//! Each arm of the target places all excitations in the uniform symmetric
//! superposition over its group's slots; for a group of k slots the
//! single-excitation arm is `(1/sqrt(k)) sum_s s^dagger |vac>`, and
//! multi-excitation arms apply the summed creation operator repeatedly and
//! normalize. A pure target reduces the Uhlmann fidelity to a plain overlap.

use std::sync::Arc;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{enumerate_basis, raising_matrix_element, ExcitationBasis, Slot};
use crate::dynamics::{DensityMatrix, StateVector};

/// What kind of slots the two arms are built from.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupingMode {
    EmittersOnly,
    ModesOnly,
    Hybrid,
}

/// Specification of an ideal N00N state: all `photon_number` excitations in
/// the left group, superposed with all of them in the right group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoonTarget {
    pub photon_number: usize,
    /// Relative phase between the two arms, in radians.
    pub phase: f64,
    pub left_group: Vec<Slot>,
    pub right_group: Vec<Slot>,
    grouping_mode: GroupingMode,
}

#[derive(Debug, Error)]
pub enum FidelityError {
    #[error("invalid target groups: {0}")]
    BadGroups(String),
    #[error("target photon number {photons} does not match the basis excitation number {sector}")]
    SectorMismatch { photons: usize, sector: usize },
    #[error("a group cannot hold {photons} excitations: {0}", photons = .1)]
    GroupOverflow(String, usize),
    #[error("state and target live on different bases")]
    BasisMismatch,
}

impl NoonTarget {
    pub fn new(
        photon_number: usize,
        phase: f64,
        left_group: Vec<Slot>,
        right_group: Vec<Slot>,
    ) -> Result<NoonTarget, FidelityError> {
        if photon_number == 0 {
            return Err(FidelityError::BadGroups("photon number must be at least 1".into()));
        }
        if left_group.is_empty() || right_group.is_empty() {
            return Err(FidelityError::BadGroups("both groups must be nonempty".into()));
        }
        for s in &left_group {
            if right_group.contains(s) {
                return Err(FidelityError::BadGroups(format!("slot {s} appears in both groups")));
            }
        }
        for group in [&left_group, &right_group] {
            for (i, s) in group.iter().enumerate() {
                if group[i + 1..].contains(s) {
                    return Err(FidelityError::BadGroups(format!("slot {s} repeated in a group")));
                }
            }
        }
        let grouping_mode = {
            let all = left_group.iter().chain(&right_group);
            let (mut emitters, mut modes) = (false, false);
            for s in all {
                match s {
                    Slot::Emitter(_) => emitters = true,
                    Slot::Mode(_) => modes = true,
                }
            }
            match (emitters, modes) {
                (true, false) => GroupingMode::EmittersOnly,
                (false, true) => GroupingMode::ModesOnly,
                _ => GroupingMode::Hybrid,
            }
        };
        Ok(NoonTarget { photon_number, phase, left_group, right_group, grouping_mode })
    }

    pub fn grouping_mode(&self) -> GroupingMode {
        self.grouping_mode
    }

    /// The same target with the two arms exchanged (the relative phase stays
    /// on the new right arm).
    pub fn swapped(&self) -> NoonTarget {
        NoonTarget {
            photon_number: self.photon_number,
            phase: self.phase,
            left_group: self.right_group.clone(),
            right_group: self.left_group.clone(),
            grouping_mode: self.grouping_mode,
        }
    }
}

/// Normalized arm vector: `photons` applications of the summed creation
/// operator of `group` on the vacuum. Errors if the group saturates (e.g.
/// two excitations on a single two-level emitter).
fn arm_vector(
    group: &[Slot],
    photons: usize,
    basis: &ExcitationBasis,
) -> Result<Array1<C64>, FidelityError> {
    let layout = basis.layout();
    for s in group {
        if !layout.contains(*s) {
            return Err(FidelityError::BadGroups(format!("slot {s} not in layout")));
        }
    }
    let mut current = Array1::from(vec![C64::new(1.0, 0.0)]);
    for m in 0..photons {
        let lower = enumerate_basis(layout, m);
        let upper = if m + 1 == photons {
            basis.clone()
        } else {
            enumerate_basis(layout, m + 1)
        };
        let mut next: Array1<C64> = Array1::zeros(upper.dim());
        for s in group {
            let raise = raising_matrix_element(&lower, &upper, *s)
                .expect("layout checked and sectors adjacent");
            raise.apply_add(&current.view(), &mut next);
        }
        current = next;
    }
    let norm_sqr: f64 = current.iter().map(|z| z.norm_sqr()).sum();
    if norm_sqr <= 0.0 {
        return Err(FidelityError::GroupOverflow(
            format!("{:?}", group.iter().map(|s| s.to_string()).collect::<Vec<_>>()),
            photons,
        ));
    }
    let norm = norm_sqr.sqrt();
    Ok(current.mapv(|z| z / norm))
}

/// Construct the N00N state `(|N_L, 0_R> + e^{i phi} |0_L, N_R>) / sqrt(2)`
/// on the given excitation sector.
pub fn build_noon_state(
    target: &NoonTarget,
    basis: &Arc<ExcitationBasis>,
) -> Result<StateVector, FidelityError> {
    if target.photon_number != basis.excitation_number() {
        return Err(FidelityError::SectorMismatch {
            photons: target.photon_number,
            sector: basis.excitation_number(),
        });
    }
    let left = arm_vector(&target.left_group, target.photon_number, basis)?;
    let right = arm_vector(&target.right_group, target.photon_number, basis)?;
    let phase = C64::from_polar(1.0, target.phase);
    let inv_sqrt2 = C64::from(1.0 / 2f64.sqrt());
    let amplitudes = left.iter().zip(right.iter()).map(|(l, r)| inv_sqrt2 * (l + phase * r));
    let psi = StateVector::new(basis.clone(), amplitudes.collect(), 0.0);
    debug_assert!(
        (psi.norm_sqr() - 1.0).abs() < 1e-12,
        "disjoint groups give orthogonal arms"
    );
    Ok(psi)
}

/// Fidelity of a (possibly unnormalized no-jump) state against a pure
/// target: `|<target|psi>|^2`.
pub fn fidelity_pure(psi: &StateVector, target: &StateVector) -> Result<f64, FidelityError> {
    if psi.basis() != target.basis() {
        return Err(FidelityError::BasisMismatch);
    }
    Ok(target.overlap(psi).norm_sqr().clamp(0.0, 1.0))
}

/// Fidelity of a density operator against a pure target living in one
/// excitation sector of the stacked space: `<target|rho|target>`.
pub fn fidelity_pure_density(
    rho: &DensityMatrix,
    target: &StateVector,
) -> Result<f64, FidelityError> {
    let space = rho.space();
    let m = target.sector();
    if m > space.max_excitation() || space.sector(m) != target.basis() {
        return Err(FidelityError::BasisMismatch);
    }
    let off = space.offset(m);
    let mut acc = C64::new(0.0, 0.0);
    for (i, a) in target.amplitudes.iter().enumerate() {
        for (j, b) in target.amplitudes.iter().enumerate() {
            acc += a.conj() * rho.matrix[(off + i, off + j)] * b;
        }
    }
    Ok(acc.re.clamp(0.0, 1.0))
}

/// Map [`fidelity_pure`] over a propagation result.
pub fn fidelity_series(
    states: &[StateVector],
    target: &StateVector,
) -> Result<Vec<(f64, f64)>, FidelityError> {
    states.iter().map(|s| Ok((s.time, fidelity_pure(s, target)?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::SlotLayout;
    use crate::dynamics::{
        assemble_density_single_excitation, partial_trace_modes, propagate_nojump, TimeGrid,
    };
    use crate::model::{JcArrayConfig, OperatorSet, SchemeConfig, SubsystemParams};
    use proptest::prelude::*;

    fn real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn sector(layout: &SlotLayout, m: usize) -> Arc<ExcitationBasis> {
        Arc::new(enumerate_basis(layout, m))
    }

    fn emitter_bell(phase: f64) -> NoonTarget {
        NoonTarget::new(1, phase, vec![Slot::Emitter(0)], vec![Slot::Emitter(1)]).unwrap()
    }

    #[test]
    fn emitter_bell_state_amplitudes() {
        let layout = SlotLayout::jc_array(2);
        let basis = sector(&layout, 1);
        let psi = build_noon_state(&emitter_bell(0.0), &basis).unwrap();
        let inv = 1.0 / 2f64.sqrt();
        assert!((psi.amplitudes[0] - real(inv)).norm() < 1e-15);
        assert!((psi.amplitudes[1] - real(inv)).norm() < 1e-15);
        for k in 2..6 {
            assert_eq!(psi.amplitudes[k], real(0.0));
        }
        assert_eq!(psi.basis().excitation_number(), 1);
    }

    #[test]
    fn mode_group_fidelity_is_quarter_of_coherent_sum() {
        let layout = SlotLayout::jc_array(2);
        let basis = sector(&layout, 1);
        let target = NoonTarget::new(
            1,
            0.0,
            vec![Slot::Mode(0), Slot::Mode(1)],
            vec![Slot::Mode(2), Slot::Mode(3)],
        )
        .unwrap();
        let target_state = build_noon_state(&target, &basis).unwrap();
        // Arbitrary (unnormalized) no-jump amplitudes in canonical order
        // e1 e2 a1 a2 a3 a4.
        let amps = vec![
            C64::new(0.2, 0.1),
            C64::new(-0.1, 0.0),
            C64::new(0.3, -0.2),
            C64::new(0.1, 0.4),
            C64::new(-0.2, 0.2),
            C64::new(0.05, -0.1),
        ];
        let psi = StateVector::new(basis, Array1::from(amps.clone()), 0.0);
        let f = fidelity_pure(&psi, &target_state).unwrap();
        let coherent = amps[2] + amps[3] + amps[4] + amps[5];
        assert!((f - 0.25 * coherent.norm_sqr()).abs() < 1e-14);
    }

    #[test]
    fn opposite_phase_target_is_orthogonal() {
        let layout = SlotLayout::jc_array(2);
        let basis = sector(&layout, 1);
        let symmetric = build_noon_state(&emitter_bell(0.0), &basis).unwrap();
        let antisymmetric = build_noon_state(&emitter_bell(std::f64::consts::PI), &basis).unwrap();
        let f = fidelity_pure(&symmetric, &antisymmetric).unwrap();
        assert!(f < 1e-20);
    }

    #[test]
    fn two_excitations_on_one_emitter_overflow() {
        let layout = SlotLayout::jc_array(2);
        let basis = sector(&layout, 2);
        let target =
            NoonTarget::new(2, 0.0, vec![Slot::Emitter(0)], vec![Slot::Emitter(1)]).unwrap();
        assert!(matches!(
            build_noon_state(&target, &basis),
            Err(FidelityError::GroupOverflow(_, 2))
        ));
    }

    #[test]
    fn two_photon_mode_arm_has_symmetric_pattern() {
        // (a1^dag + a2^dag)^2 |vac> normalizes to
        // (sqrt(2)|20> + 2|11> + sqrt(2)|02>) / (2 sqrt(2)).
        let layout = SlotLayout::ddi_rings(1);
        let basis = sector(&layout, 2);
        let target = NoonTarget::new(
            2,
            0.0,
            vec![Slot::Mode(0), Slot::Mode(1)],
            vec![Slot::Mode(2), Slot::Mode(3)],
        )
        .unwrap();
        let psi = build_noon_state(&target, &basis).unwrap();
        let b = psi.basis();
        let amp_of = |occ: [u8; 4]| {
            let s = crate::basis::BasisState::new(vec![0, 0], occ.to_vec());
            psi.amplitudes[b.index_of(&s).unwrap()]
        };
        let inv_sqrt2 = 1.0 / 2f64.sqrt();
        let expect_double = inv_sqrt2 * 2f64.sqrt() / (2.0 * 2f64.sqrt());
        let expect_cross = inv_sqrt2 * 2.0 / (2.0 * 2f64.sqrt());
        assert!((amp_of([2, 0, 0, 0]) - real(expect_double)).norm() < 1e-14);
        assert!((amp_of([1, 1, 0, 0]) - real(expect_cross)).norm() < 1e-14);
        assert!((amp_of([0, 2, 0, 0]) - real(expect_double)).norm() < 1e-14);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn density_fidelity_limits() {
        let layout = SlotLayout::jc_array(2);
        let basis = sector(&layout, 1);
        let target = build_noon_state(&emitter_bell(0.0), &basis).unwrap();
        let rho = assemble_density_single_excitation(&target);
        assert!((fidelity_pure_density(&rho, &target).unwrap() - 1.0).abs() < 1e-13);

        // Vacuum density: zero overlap with any single-excitation target.
        let mut vac = rho.clone();
        vac.matrix.fill(real(0.0));
        vac.matrix[(0, 0)] = real(1.0);
        assert_eq!(fidelity_pure_density(&vac, &target).unwrap(), 0.0);
    }

    #[test]
    fn hybrid_fidelity_starts_at_one_third() {
        // Emitter Bell state against the six-slot hybrid target: the overlap
        // is (1/6)|c1 + c4|^2 = 1/3 at t = 0.
        let layout = SlotLayout::jc_array(2);
        let basis = sector(&layout, 1);
        let hybrid = NoonTarget::new(
            1,
            0.0,
            vec![Slot::Emitter(0), Slot::Mode(0), Slot::Mode(1)],
            vec![Slot::Emitter(1), Slot::Mode(2), Slot::Mode(3)],
        )
        .unwrap();
        assert_eq!(hybrid.grouping_mode(), GroupingMode::Hybrid);
        let target = build_noon_state(&hybrid, &basis).unwrap();
        let bell = build_noon_state(&emitter_bell(0.0), &basis).unwrap();
        let f = fidelity_pure(&bell, &target).unwrap();
        assert!((f - 1.0 / 3.0).abs() < 1e-14);
        // Same number from the closed-form expression.
        let c1 = bell.amplitudes[0];
        let c4 = bell.amplitudes[1];
        assert!((f - (c1 + c4).norm_sqr() / 6.0).abs() < 1e-14);
    }

    fn bell_transfer_setup(kappa: f64) -> (OperatorSet, StateVector) {
        let cfg = SchemeConfig::JcArray(JcArrayConfig::uniform(
            2,
            SubsystemParams {
                omega_eg: 0.5,
                omega_c: 0.0,
                g: real(1.0),
                kappa_odd: kappa,
                kappa_even: kappa,
                eta: 0.0,
                gamma: 0.0,
            },
        ));
        let ops = OperatorSet::build(&cfg, 1).unwrap();
        let basis = ops.space().sector(1).clone();
        let psi0 = build_noon_state(&emitter_bell(0.0), &basis).unwrap();
        (ops, psi0)
    }

    #[test]
    fn emitter_fidelity_from_trace_matches_amplitude_formula() {
        let (ops, psi0) = bell_transfer_setup(0.3);
        let grid = TimeGrid::new(0.0, 5.0, 11).unwrap();
        let states = propagate_nojump(&ops, &psi0, &grid).unwrap();
        for s in &states {
            let rho = assemble_density_single_excitation(&s);
            let reduced = partial_trace_modes(&rho, &[0, 1]).unwrap();
            let reduced_basis = reduced.space().sector(1).clone();
            let target = build_noon_state(&emitter_bell(0.0), &reduced_basis).unwrap();
            let via_trace = fidelity_pure_density(&reduced, &target).unwrap();
            let closed_form = 0.5 * (s.amplitudes[0] + s.amplitudes[1]).norm_sqr();
            assert!(
                (via_trace - closed_form).abs() < 1e-12,
                "t = {}: {via_trace} vs {closed_form}",
                s.time
            );
        }
    }

    #[test]
    fn mirror_swapped_target_gives_identical_series() {
        let (ops, psi0) = bell_transfer_setup(0.4);
        let grid = TimeGrid::new(0.0, 6.0, 61).unwrap();
        let states = propagate_nojump(&ops, &psi0, &grid).unwrap();
        let basis = ops.space().sector(1).clone();
        let target = build_noon_state(
            &NoonTarget::new(
                1,
                0.7,
                vec![Slot::Mode(0), Slot::Mode(1)],
                vec![Slot::Mode(2), Slot::Mode(3)],
            )
            .unwrap(),
            &basis,
        )
        .unwrap();
        let swapped = build_noon_state(
            &NoonTarget::new(
                1,
                0.7,
                vec![Slot::Mode(2), Slot::Mode(3)],
                vec![Slot::Mode(0), Slot::Mode(1)],
            )
            .unwrap(),
            &basis,
        )
        .unwrap();
        let f1 = fidelity_series(&states, &target).unwrap();
        let f2 = fidelity_series(&states, &swapped).unwrap();
        for ((t, a), (_, b)) in f1.iter().zip(&f2) {
            assert!((a - b).abs() < 1e-10, "t = {t}");
        }
    }

    #[test]
    fn series_preserves_time_column() {
        let (ops, psi0) = bell_transfer_setup(0.2);
        let grid = TimeGrid::new(0.0, 3.0, 7).unwrap();
        let states = propagate_nojump(&ops, &psi0, &grid).unwrap();
        let basis = ops.space().sector(1).clone();
        let target = build_noon_state(&emitter_bell(0.0), &basis).unwrap();
        let series = fidelity_series(&states, &target).unwrap();
        for (point, t) in series.iter().zip(grid.times()) {
            assert_eq!(point.0, t);
            assert!(point.1 >= 0.0 && point.1 <= 1.0);
        }
    }

    #[test]
    fn group_validation_errors() {
        assert!(NoonTarget::new(1, 0.0, vec![], vec![Slot::Emitter(0)]).is_err());
        assert!(NoonTarget::new(
            1,
            0.0,
            vec![Slot::Emitter(0)],
            vec![Slot::Emitter(0)]
        )
        .is_err());
        assert!(NoonTarget::new(
            1,
            0.0,
            vec![Slot::Emitter(0), Slot::Emitter(0)],
            vec![Slot::Emitter(1)]
        )
        .is_err());
        assert!(NoonTarget::new(0, 0.0, vec![Slot::Emitter(0)], vec![Slot::Emitter(1)]).is_err());
        // Slot outside the layout is caught at build time.
        let layout = SlotLayout::jc_array(1);
        let basis = sector(&layout, 1);
        let bad = NoonTarget::new(1, 0.0, vec![Slot::Emitter(0)], vec![Slot::Emitter(7)]).unwrap();
        assert!(matches!(build_noon_state(&bad, &basis), Err(FidelityError::BadGroups(_))));
    }

    proptest! {
        #[test]
        fn fidelity_is_bounded_and_phase_invariant(
            re in proptest::collection::vec(-1.0f64..1.0, 6),
            im in proptest::collection::vec(-1.0f64..1.0, 6),
            global in 0.0f64..std::f64::consts::TAU,
            phi in -10.0f64..10.0,
        ) {
            let layout = SlotLayout::jc_array(2);
            let basis = sector(&layout, 1);
            let amps: Vec<C64> = re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)).collect();
            let mut v = Array1::from(amps);
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            prop_assume!(norm > 1e-3);
            v.mapv_inplace(|z| z / norm);
            let psi = StateVector::new(basis.clone(), v.clone(), 0.0);

            let target = build_noon_state(
                &NoonTarget::new(
                    1,
                    phi,
                    vec![Slot::Mode(0), Slot::Mode(1)],
                    vec![Slot::Mode(2), Slot::Mode(3)],
                ).unwrap(),
                &basis,
            ).unwrap();
            let f = fidelity_pure(&psi, &target).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));

            // Global phase on the state.
            let rotated = StateVector::new(
                basis.clone(),
                v.mapv(|z| z * C64::from_polar(1.0, global)),
                0.0,
            );
            let f_rot = fidelity_pure(&rotated, &target).unwrap();
            prop_assert!((f - f_rot).abs() < 1e-12);

            // Target phase is 2 pi periodic.
            let wrapped = build_noon_state(
                &NoonTarget::new(
                    1,
                    phi + std::f64::consts::TAU,
                    vec![Slot::Mode(0), Slot::Mode(1)],
                    vec![Slot::Mode(2), Slot::Mode(3)],
                ).unwrap(),
                &basis,
            ).unwrap();
            let f_wrapped = fidelity_pure(&psi, &wrapped).unwrap();
            prop_assert!((f - f_wrapped).abs() < 1e-12);
        }
    }
}
