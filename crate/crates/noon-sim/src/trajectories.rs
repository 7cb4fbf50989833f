//! Stochastic quantum-jump unraveling of the cascaded master equation.
//!
//! Between jump decisions the unnormalized no-jump state evolves under the
//! effective non-Hermitian Hamiltonian with the same integrator as the
//! deterministic solver; at every decision step the jump probability of
//! channel j is `P_j = <psi|J_j^dag J_j|psi> dt` evaluated on the
//! unnormalized state, and a firing channel resets the state to
//! `J_j psi / |J_j psi|`. Ensemble averages of normalized-snapshot
//! observables reproduce the master equation at the usual `1/sqrt(n)` rate.
//!
//! Every trajectory draws from its own counter-based random stream derived
//! from `(seed, trajectory index)`, so parallel execution is reproducible
//! regardless of scheduling; reductions run in trajectory-index order.

use std::io::Write;

use ndarray::Array1;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{propagate_block, DynamicsError, StateVector, TimeGrid};
use crate::fidelity::{fidelity_pure, FidelityError};
use crate::integrate::IntegrateError;
use crate::model::{JumpLabel, OperatorSet};
use crate::sparse::SparseOp;

/// Maximum total jump probability allowed in one decision step.
pub const MAX_STEP_JUMP_PROBABILITY: f64 = 0.1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    /// Spacing of the jump decisions.
    pub dt: f64,
    pub seed: u64,
    /// Restrict the active jump channels; `None` enables all of them.
    #[serde(default)]
    pub channels: Option<Vec<JumpLabel>>,
}

impl TrajectoryConfig {
    /// Check shape and return advisory warnings (e.g. a decision step that is
    /// coarse relative to the fastest decay rate).
    pub fn validate(&self, ops: &OperatorSet) -> Result<Vec<String>, TrajectoryError> {
        if self.n_traj < 1 {
            return Err(TrajectoryError::BadConfig("n_traj must be at least 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(TrajectoryError::BadConfig(format!("dt must be > 0, got {}", self.dt)));
        }
        let mut warnings = Vec::new();
        let max_rate = max_total_jump_rate(ops);
        if self.dt * max_rate > 0.05 {
            warnings.push(format!(
                "dt * max_rate = {:.3} exceeds 0.05; first-order jump sampling may bias results",
                self.dt * max_rate
            ));
        }
        Ok(warnings)
    }
}

/// Largest diagonal entry of `sum_j J_j^dag J_j` over all sectors: an upper
/// bound on the total jump rate out of any basis state.
fn max_total_jump_rate(ops: &OperatorSet) -> f64 {
    let mut worst = 0.0f64;
    for m in 1..=ops.max_excitation() {
        let dim = ops.space().sector(m).dim();
        let mut diag = vec![0.0; dim];
        for channel in ops.jumps() {
            let j = channel.from_sector(m);
            for &(_, col, v) in j.entries() {
                diag[col] += v.norm_sqr();
            }
        }
        // Off-diagonal contributions of J^dag J cancel against interference
        // at worst a factor of the channel multiplicity; the diagonal of the
        // collective operator is computed exactly instead.
        let mut exact = vec![0.0; dim];
        for channel in ops.jumps() {
            let j = channel.from_sector(m);
            let jtj = j.dagger().compose(j);
            for &(r, c, v) in jtj.entries() {
                if r == c {
                    exact[r] += v.re;
                }
            }
        }
        let _ = diag;
        worst = exact.iter().fold(worst, |w, &x| w.max(x));
    }
    worst
}

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("total jump probability {p_total:.3} in one step at t = {t} exceeds {max}; reduce dt",
            max = MAX_STEP_JUMP_PROBABILITY)]
    DtTooCoarse { t: f64, p_total: f64 },
    #[error("invalid trajectory configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
}

/// One recorded jump.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpEvent {
    pub trajectory: usize,
    pub time: f64,
    pub channel: JumpLabel,
}

/// What to accumulate over the ensemble.
#[derive(Clone, Debug)]
pub enum TrajectoryObservable {
    /// Overlap with a pure target state (evaluated on normalized snapshots).
    Fidelity(StateVector),
    /// Probability of holding exactly `m` excitations.
    SectorPopulation(usize),
}

impl TrajectoryObservable {
    fn label(&self) -> String {
        match self {
            TrajectoryObservable::Fidelity(_) => "fidelity".into(),
            TrajectoryObservable::SectorPopulation(m) => format!("population_m{m}"),
        }
    }
}

/// Ensemble mean and standard error of one observable on the output grid.
#[derive(Clone, Debug)]
pub struct ObservableSeries {
    pub label: String,
    pub mean: Vec<f64>,
    pub std_error: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct TrajectoryResult {
    pub times: Vec<f64>,
    pub series: Vec<ObservableSeries>,
    /// Every jump, ordered by trajectory index and time.
    pub events: Vec<JumpEvent>,
}

/// Decision outcome of one sampling step.
#[derive(Clone, Debug)]
pub enum JumpDecision {
    NoJump,
    Jump { channel: JumpLabel, state: Array1<C64> },
}

/// Sample the jump channels over one step of length `dt`: channel j fires
/// with probability `<psi|J_j^dag J_j|psi> dt` and yields the normalized
/// reset state.
pub fn sample_jump<R: Rng>(
    psi: &Array1<C64>,
    channels: &[(JumpLabel, &SparseOp)],
    dt: f64,
    t: f64,
    rng: &mut R,
) -> Result<JumpDecision, TrajectoryError> {
    let mut probabilities = Vec::with_capacity(channels.len());
    let mut p_total = 0.0;
    for (_, op) in channels {
        let p = op.apply_norm_sqr(&psi.view()) * dt;
        probabilities.push(p);
        p_total += p;
    }
    if p_total > MAX_STEP_JUMP_PROBABILITY {
        return Err(TrajectoryError::DtTooCoarse { t, p_total });
    }
    if p_total <= 0.0 {
        return Ok(JumpDecision::NoJump);
    }
    let u: f64 = rng.gen();
    if u >= p_total {
        return Ok(JumpDecision::NoJump);
    }
    let mut acc = 0.0;
    for ((label, op), p) in channels.iter().zip(&probabilities) {
        acc += p;
        if u < acc {
            let mut state = op.apply(&psi.view());
            let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            state.mapv_inplace(|z| z / norm);
            return Ok(JumpDecision::Jump { channel: *label, state });
        }
    }
    // Cumulative rounding can leave u in the last channel's band.
    let (label, op) = channels.last().expect("p_total > 0 implies a channel");
    let mut state = op.apply(&psi.view());
    let norm = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    state.mapv_inplace(|z| z / norm);
    Ok(JumpDecision::Jump { channel: *label, state })
}

/// Raw snapshots of a single trajectory: `(sector, amplitudes)` at each grid
/// time, plus its jump events. Amplitudes are the unnormalized no-jump
/// values between jumps.
pub fn trajectory_states(
    ops: &OperatorSet,
    psi0: &StateVector,
    grid: &TimeGrid,
    tcfg: &TrajectoryConfig,
    trajectory: usize,
) -> Result<(Vec<(usize, Array1<C64>)>, Vec<JumpEvent>), TrajectoryError> {
    let mut rng = ChaCha12Rng::seed_from_u64(tcfg.seed);
    rng.set_stream(trajectory as u64);

    let active: Vec<&crate::model::JumpChannel> = match &tcfg.channels {
        None => ops.jumps().iter().collect(),
        Some(labels) => ops.jumps().iter().filter(|j| labels.contains(&j.label)).collect(),
    };

    let times = grid.times();
    let mut snapshots: Vec<(usize, Array1<C64>)> = Vec::with_capacity(times.len());
    let mut events = Vec::new();

    let mut sector = psi0.sector();
    let mut psi = psi0.amplitudes.clone();
    let mut t = grid.t_start;
    let mut next_output = 0;
    if times[next_output] == t {
        snapshots.push((sector, psi.clone()));
        next_output += 1;
    }

    while next_output < times.len() {
        let step_end = (t + tcfg.dt).min(grid.t_end);
        let dt = step_end - t;

        // Jump decision for the interval [t, t + dt]. The decision is
        // conditioned on having survived so far, so the probabilities are
        // evaluated on the renormalized copy of the current state; the
        // stored amplitudes stay unnormalized between jumps.
        if sector > 0 && !active.is_empty() {
            let channels: Vec<(JumpLabel, &SparseOp)> =
                active.iter().map(|j| (j.label, j.from_sector(sector))).collect();
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let conditioned = if norm > 0.0 { psi.mapv(|z| z / norm) } else { psi.clone() };
            match sample_jump(&conditioned, &channels, dt, t, &mut rng)? {
                JumpDecision::NoJump => {}
                JumpDecision::Jump { channel, state } => {
                    events.push(JumpEvent { trajectory, time: t, channel });
                    sector -= 1;
                    psi = state;
                    // The reset consumes the step: hold the post-jump state
                    // across [t, t + dt] at first order in dt.
                    while next_output < times.len() && times[next_output] <= step_end {
                        snapshots.push((sector, psi.clone()));
                        next_output += 1;
                    }
                    t = step_end;
                    continue;
                }
            }
        }

        // No jump: coherent non-Hermitian evolution over the step, sampling
        // any output times inside it.
        let mut sample_points: Vec<f64> = Vec::new();
        while next_output + sample_points.len() < times.len()
            && times[next_output + sample_points.len()] <= step_end
        {
            sample_points.push(times[next_output + sample_points.len()]);
        }
        let needs_end = sample_points.last() != Some(&step_end);
        if needs_end {
            sample_points.push(step_end);
        }
        let h = ops.h_nh_sector(sector);
        let (ys, _) = propagate_block(h, &psi, t, &sample_points, &grid.options)?;
        let n_out = if needs_end { ys.len() - 1 } else { ys.len() };
        for y in ys.iter().take(n_out) {
            snapshots.push((sector, y.clone()));
        }
        next_output += n_out;
        psi = ys.into_iter().last().expect("at least the endpoint is sampled");
        t = step_end;
    }
    Ok((snapshots, events))
}

fn evaluate(
    observable: &TrajectoryObservable,
    ops: &OperatorSet,
    sector: usize,
    psi: &Array1<C64>,
) -> f64 {
    match observable {
        TrajectoryObservable::Fidelity(target) => {
            if sector != target.sector() {
                return 0.0;
            }
            let norm_sqr: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
            if norm_sqr <= 0.0 {
                return 0.0;
            }
            let normalized = StateVector::new(
                ops.space().sector(sector).clone(),
                psi.mapv(|z| z / norm_sqr.sqrt()),
                0.0,
            );
            fidelity_pure(&normalized, target).expect("bases match by construction")
        }
        TrajectoryObservable::SectorPopulation(m) => {
            if sector == *m {
                1.0
            } else {
                0.0
            }
        }
    }
}

/// Run the full ensemble and return per-grid-time means with standard
/// errors, deterministic for a fixed seed and configuration.
pub fn run_trajectories(
    ops: &OperatorSet,
    psi0: &StateVector,
    grid: &TimeGrid,
    tcfg: &TrajectoryConfig,
    observables: &[TrajectoryObservable],
) -> Result<TrajectoryResult, TrajectoryError> {
    grid.validate().map_err(TrajectoryError::Dynamics)?;
    tcfg.validate(ops)?;
    let norm = psi0.norm_sqr();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(TrajectoryError::Dynamics(DynamicsError::NotNormalized { norm_sqr: norm }));
    }
    for obs in observables {
        if let TrajectoryObservable::Fidelity(target) = obs {
            if target.basis().layout() != ops.space().layout() {
                return Err(TrajectoryError::Fidelity(FidelityError::BasisMismatch));
            }
        }
    }

    let times = grid.times();
    let n_times = times.len();
    let per_traj: Result<Vec<(Vec<f64>, Vec<JumpEvent>)>, TrajectoryError> = (0..tcfg.n_traj)
        .into_par_iter()
        .map(|k| {
            let (snapshots, events) = trajectory_states(ops, psi0, grid, tcfg, k)?;
            let mut values = Vec::with_capacity(n_times * observables.len());
            for (sector, psi) in &snapshots {
                for obs in observables {
                    values.push(evaluate(obs, ops, *sector, psi));
                }
            }
            Ok((values, events))
        })
        .collect();
    let per_traj = per_traj?;

    // Reduce in trajectory-index order for bit reproducibility.
    let n = tcfg.n_traj as f64;
    let mut mean = vec![0.0; n_times * observables.len()];
    let mut events = Vec::new();
    for (values, traj_events) in &per_traj {
        for (acc, v) in mean.iter_mut().zip(values) {
            *acc += v;
        }
        events.extend(traj_events.iter().cloned());
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; n_times * observables.len()];
    for (values, _) in &per_traj {
        for ((acc, v), m) in var.iter_mut().zip(values).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }

    let series = observables
        .iter()
        .enumerate()
        .map(|(o, obs)| {
            let mut series_mean = Vec::with_capacity(n_times);
            let mut std_error = Vec::with_capacity(n_times);
            for ti in 0..n_times {
                let idx = ti * observables.len() + o;
                series_mean.push(mean[idx]);
                let se = if tcfg.n_traj > 1 {
                    (var[idx] / (n * (n - 1.0))).sqrt()
                } else {
                    0.0
                };
                std_error.push(se);
            }
            ObservableSeries { label: obs.label(), mean: series_mean, std_error }
        })
        .collect();

    Ok(TrajectoryResult { times, series, events })
}

/// Write jump events as JSON lines `{traj, t, channel}`.
pub fn write_event_log<W: Write>(events: &[JumpEvent], mut w: W) -> std::io::Result<()> {
    for e in events {
        writeln!(
            w,
            "{}",
            serde_json::json!({ "traj": e.trajectory, "t": e.time, "channel": e.channel.to_string() })
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{master_solve, propagate_nojump, DensityMatrix};
    use crate::fidelity::{build_noon_state, fidelity_pure_density, NoonTarget};
    use crate::model::{JcArrayConfig, SchemeConfig, SubsystemParams};
    use crate::basis::Slot;

    fn real(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn array_config(n: usize, delta: f64, g: f64, kappa: f64) -> SchemeConfig {
        SchemeConfig::JcArray(JcArrayConfig::uniform(
            n,
            SubsystemParams {
                omega_eg: delta,
                omega_c: 0.0,
                g: real(g),
                kappa_odd: kappa,
                kappa_even: kappa,
                eta: 0.0,
                gamma: 0.0,
            },
        ))
    }

    fn bell_state(ops: &OperatorSet) -> StateVector {
        let basis = ops.space().sector(1).clone();
        build_noon_state(
            &NoonTarget::new(1, 0.0, vec![Slot::Emitter(0)], vec![Slot::Emitter(1)]).unwrap(),
            &basis,
        )
        .unwrap()
    }

    #[test]
    fn closed_system_has_no_jumps_and_matches_unitary() {
        let ops = OperatorSet::build(&array_config(2, 0.5, 1.0, 0.0), 1).unwrap();
        let psi0 = bell_state(&ops);
        let grid = TimeGrid::new(0.0, 3.0, 31).unwrap();
        let tcfg = TrajectoryConfig { n_traj: 8, dt: 0.01, seed: 1, channels: None };
        let target = bell_state(&ops);
        let result = run_trajectories(
            &ops,
            &psi0,
            &grid,
            &tcfg,
            &[TrajectoryObservable::Fidelity(target.clone())],
        )
        .unwrap();
        assert!(result.events.is_empty());
        let deterministic = propagate_nojump(&ops, &psi0, &grid).unwrap();
        for (i, s) in deterministic.iter().enumerate() {
            let f = fidelity_pure(s, &target).unwrap();
            assert!((result.series[0].mean[i] - f).abs() < 1e-9);
            assert!(result.series[0].std_error[i] < 1e-12, "all trajectories identical");
        }
    }

    #[test]
    fn jump_time_histogram_matches_exponential_law() {
        // A single decaying mode: waiting times are exponential with rate
        // kappa. Multinomial 3-sigma check per bin, overflow bin included.
        let kappa = 0.8;
        let ops = OperatorSet::build(&array_config(1, 0.0, 0.0, kappa), 1).unwrap();
        let basis = ops.space().sector(1).clone();
        let mut amps = Array1::zeros(basis.dim());
        amps[1] = real(1.0); // photon in a1
        let psi0 = StateVector::new(basis, amps, 0.0);
        let t_end = 5.0 / kappa;
        let grid = TimeGrid::new(0.0, t_end, 11).unwrap();
        let n_traj = 4000;
        let tcfg = TrajectoryConfig { n_traj, dt: 0.005, seed: 20240811, channels: None };
        let result = run_trajectories(
            &ops,
            &psi0,
            &grid,
            &tcfg,
            &[TrajectoryObservable::SectorPopulation(1)],
        )
        .unwrap();

        let n_bins = 10;
        let bin_width = t_end / n_bins as f64;
        let mut counts = vec![0usize; n_bins + 1];
        let mut jumps_per_traj = vec![0usize; n_traj];
        for e in &result.events {
            jumps_per_traj[e.trajectory] += 1;
            let b = ((e.time / bin_width) as usize).min(n_bins - 1);
            counts[b] += 1;
        }
        assert!(jumps_per_traj.iter().all(|&c| c <= 1), "one excitation, at most one jump");
        counts[n_bins] = jumps_per_traj.iter().filter(|&&c| c == 0).count();

        for b in 0..n_bins {
            let lo = b as f64 * bin_width;
            let hi = lo + bin_width;
            let p = (-kappa * lo).exp() - (-kappa * hi).exp();
            let expect = n_traj as f64 * p;
            let sigma = (n_traj as f64 * p * (1.0 - p)).sqrt();
            let observed = counts[b] as f64;
            assert!(
                (observed - expect).abs() <= 3.0 * sigma,
                "bin {b}: observed {observed}, expected {expect:.1} +- {sigma:.1}"
            );
        }
        let p_none = (-kappa * t_end).exp();
        let expect = n_traj as f64 * p_none;
        let sigma = (n_traj as f64 * p_none * (1.0 - p_none)).sqrt();
        assert!((counts[n_bins] as f64 - expect).abs() <= 3.0 * sigma);
    }

    #[test]
    fn ensemble_fidelity_agrees_with_master_equation() {
        let ops = OperatorSet::build(&array_config(2, 0.5, 1.0, 0.1), 1).unwrap();
        let psi0 = bell_state(&ops);
        let grid = TimeGrid::new(0.0, 6.0, 31).unwrap();
        let basis = ops.space().sector(1).clone();
        let target = build_noon_state(
            &NoonTarget::new(
                1,
                0.0,
                vec![Slot::Mode(0), Slot::Mode(1)],
                vec![Slot::Mode(2), Slot::Mode(3)],
            )
            .unwrap(),
            &basis,
        )
        .unwrap();
        let tcfg = TrajectoryConfig { n_traj: 1000, dt: 0.01, seed: 99, channels: None };
        let result = run_trajectories(
            &ops,
            &psi0,
            &grid,
            &tcfg,
            &[TrajectoryObservable::Fidelity(target.clone())],
        )
        .unwrap();

        let rho0 = DensityMatrix::from_pure(ops.space().clone(), &psi0);
        let master = master_solve(&ops, &rho0, &grid).unwrap();
        for (i, rho) in master.states.iter().enumerate() {
            let f_master = fidelity_pure_density(rho, &target).unwrap();
            let diff = (result.series[0].mean[i] - f_master).abs();
            let bound = 4.0 * result.series[0].std_error[i] + 1e-9;
            assert!(
                diff <= bound,
                "t = {}: |{} - {}| = {diff} > {bound}",
                rho.time,
                result.series[0].mean[i],
                f_master
            );
        }
    }

    #[test]
    fn forced_nojump_trajectory_matches_deterministic_solver() {
        let ops = OperatorSet::build(&array_config(2, 0.5, 1.0, 0.3), 1).unwrap();
        let psi0 = bell_state(&ops);
        let grid = TimeGrid::new(0.0, 6.0, 61).unwrap();
        let tcfg =
            TrajectoryConfig { n_traj: 1, dt: 0.01, seed: 5, channels: Some(Vec::new()) };
        let (snapshots, events) = trajectory_states(&ops, &psi0, &grid, &tcfg, 0).unwrap();
        assert!(events.is_empty());
        let deterministic = propagate_nojump(&ops, &psi0, &grid).unwrap();
        for ((sector, amps), s) in snapshots.iter().zip(&deterministic) {
            assert_eq!(*sector, 1);
            for (a, b) in amps.iter().zip(s.amplitudes.iter()) {
                assert!((a - b).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn sample_jump_never_picks_empty_channel() {
        let kappa = 0.5;
        let ops = OperatorSet::build(&array_config(1, 0.0, 0.0, kappa), 1).unwrap();
        let mut psi: Array1<C64> = Array1::zeros(3);
        psi[1] = real(1.0); // photon in a1 only: the even channel is dark
        let odd = ops.jumps()[0].from_sector(1);
        let even = ops.jumps()[1].from_sector(1);
        let channels = vec![
            (JumpLabel::CollectiveOdd, odd),
            (JumpLabel::CollectiveEven, even),
        ];
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut jumps = 0;
        for _ in 0..20000 {
            match sample_jump(&psi, &channels, 0.05, 0.0, &mut rng).unwrap() {
                JumpDecision::NoJump => {}
                JumpDecision::Jump { channel, state } => {
                    assert_eq!(channel, JumpLabel::CollectiveOdd);
                    let norm: f64 = state.iter().map(|z| z.norm_sqr()).sum();
                    assert!((norm - 1.0).abs() < 1e-12, "reset state is normalized");
                    jumps += 1;
                }
            }
        }
        assert!(jumps > 0);
    }

    #[test]
    fn channel_selection_follows_rate_ratio() {
        // Photon split between a1 and a2 with unequal decay rates: the
        // empirical channel ratio must match the rate ratio within 3 sigma.
        let cfg = SchemeConfig::JcArray(JcArrayConfig::uniform(
            1,
            SubsystemParams {
                omega_eg: 0.0,
                omega_c: 0.0,
                g: real(0.0),
                kappa_odd: 0.9,
                kappa_even: 0.3,
                eta: 0.0,
                gamma: 0.0,
            },
        ));
        let ops = OperatorSet::build(&cfg, 1).unwrap();
        let mut psi: Array1<C64> = Array1::zeros(3);
        psi[1] = real(1.0 / 2f64.sqrt());
        psi[2] = real(1.0 / 2f64.sqrt());
        let channels: Vec<(JumpLabel, &SparseOp)> =
            ops.jumps().iter().map(|j| (j.label, j.from_sector(1))).collect();
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let (mut odd, mut even) = (0u64, 0u64);
        let draws = 100_000;
        for _ in 0..draws {
            if let JumpDecision::Jump { channel, .. } =
                sample_jump(&psi, &channels, 0.1, 0.0, &mut rng).unwrap()
            {
                match channel {
                    JumpLabel::CollectiveOdd => odd += 1,
                    JumpLabel::CollectiveEven => even += 1,
                    other => panic!("unexpected channel {other}"),
                }
            }
        }
        let total = (odd + even) as f64;
        let p_odd = 0.9 / 1.2;
        let sigma = (total * p_odd * (1.0 - p_odd)).sqrt();
        assert!(
            (odd as f64 - total * p_odd).abs() <= 3.0 * sigma,
            "odd {odd}, even {even}, expected fraction {p_odd}"
        );
    }

    #[test]
    fn identical_seeds_give_identical_event_lists() {
        let ops = OperatorSet::build(&array_config(2, 0.5, 1.0, 0.4), 1).unwrap();
        let psi0 = bell_state(&ops);
        let grid = TimeGrid::new(0.0, 4.0, 9).unwrap();
        let tcfg = TrajectoryConfig { n_traj: 64, dt: 0.02, seed: 1234, channels: None };
        let a = run_trajectories(&ops, &psi0, &grid, &tcfg, &[]).unwrap();
        let b = run_trajectories(&ops, &psi0, &grid, &tcfg, &[]).unwrap();
        assert_eq!(a.events, b.events);
        assert!(!a.events.is_empty());
    }

    #[test]
    fn coarse_dt_is_rejected_at_runtime() {
        let ops = OperatorSet::build(&array_config(1, 0.0, 0.0, 10.0), 1).unwrap();
        let basis = ops.space().sector(1).clone();
        let mut amps = Array1::zeros(3);
        amps[1] = real(1.0);
        let psi0 = StateVector::new(basis, amps, 0.0);
        let grid = TimeGrid::new(0.0, 1.0, 3).unwrap();
        let tcfg = TrajectoryConfig { n_traj: 1, dt: 0.05, seed: 0, channels: None };
        let err = run_trajectories(&ops, &psi0, &grid, &tcfg, &[]);
        assert!(matches!(err, Err(TrajectoryError::DtTooCoarse { .. })));
    }

    #[test]
    fn validation_warns_on_marginal_dt() {
        let ops = OperatorSet::build(&array_config(1, 0.0, 0.0, 2.0), 1).unwrap();
        let tcfg = TrajectoryConfig { n_traj: 10, dt: 0.04, seed: 0, channels: None };
        let warnings = tcfg.validate(&ops).unwrap();
        assert_eq!(warnings.len(), 1);
        let tcfg = TrajectoryConfig { n_traj: 10, dt: 0.01, seed: 0, channels: None };
        assert!(tcfg.validate(&ops).unwrap().is_empty());
        let bad = TrajectoryConfig { n_traj: 0, dt: 0.01, seed: 0, channels: None };
        assert!(bad.validate(&ops).is_err());
    }

    #[test]
    fn event_log_is_json_lines() {
        let events = vec![JumpEvent { trajectory: 3, time: 1.5, channel: JumpLabel::CollectiveOdd }];
        let mut buf = Vec::new();
        write_event_log(&events, &mut buf).unwrap();
        let line: serde_json::Value =
            serde_json::from_str(std::str::from_utf8(&buf).unwrap().trim()).unwrap();
        assert_eq!(line["traj"], 3);
        assert_eq!(line["channel"], "J_o");
    }
}
