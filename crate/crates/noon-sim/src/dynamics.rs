//! Deterministic propagation: the no-jump state under the non-Hermitian
//! Hamiltonian, and the full cascaded master equation used as the oracle for
//! the other solvers.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{linalg::general_mat_mul, s, Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::basis::{ExcitationBasis, SlotLayout, StackedBasis};
use crate::integrate::{integrate, IntegrateError, IntegratorOptions, StepStats};
use crate::model::OperatorSet;
use crate::sparse::SparseOp;

/// Positivity slack allowed before the master solver aborts.
pub const EPS_POSITIVITY: f64 = 1e-8;

/// Uniform output sampling plus integrator settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_points: usize,
    #[serde(default)]
    pub options: IntegratorOptions,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_points: usize) -> Result<TimeGrid, DynamicsError> {
        let grid = TimeGrid { t_start, t_end, n_points, options: IntegratorOptions::default() };
        grid.validate()?;
        Ok(grid)
    }

    pub fn with_options(mut self, options: IntegratorOptions) -> TimeGrid {
        self.options = options;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(DynamicsError::BadGrid(format!(
                "need finite t_start < t_end, got [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        if self.n_points < 2 {
            return Err(DynamicsError::BadGrid(format!(
                "need at least 2 output points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = (self.t_end - self.t_start) / (self.n_points - 1) as f64;
        let mut times: Vec<f64> =
            (0..self.n_points).map(|i| self.t_start + i as f64 * dt).collect();
        // Land on the endpoint exactly despite rounding.
        *times.last_mut().unwrap() = self.t_end;
        times
    }
}

/// Complex amplitude vector over one excitation sector.
#[derive(Clone, Debug)]
pub struct StateVector {
    pub time: f64,
    pub amplitudes: Array1<C64>,
    basis: Arc<ExcitationBasis>,
}

impl StateVector {
    pub fn new(basis: Arc<ExcitationBasis>, amplitudes: Array1<C64>, time: f64) -> StateVector {
        assert_eq!(amplitudes.len(), basis.dim(), "amplitude count must match basis dimension");
        StateVector { time, amplitudes, basis }
    }

    pub fn basis(&self) -> &Arc<ExcitationBasis> {
        &self.basis
    }

    pub fn sector(&self) -> usize {
        self.basis.excitation_number()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Inner product `<self|other>`.
    pub fn overlap(&self, other: &StateVector) -> C64 {
        self.amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn normalized(&self) -> StateVector {
        let norm = self.norm_sqr().sqrt();
        let mut out = self.clone();
        if norm > 0.0 {
            out.amplitudes.mapv_inplace(|z| z / norm);
        }
        out
    }
}

/// Complex matrix over the direct sum of excitation sectors.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub time: f64,
    pub matrix: Array2<C64>,
    space: Arc<StackedBasis>,
}

impl DensityMatrix {
    pub fn new(space: Arc<StackedBasis>, matrix: Array2<C64>, time: f64) -> DensityMatrix {
        assert_eq!(matrix.nrows(), space.total_dim());
        assert_eq!(matrix.ncols(), space.total_dim());
        DensityMatrix { time, matrix, space }
    }

    /// Rank-one density `|psi><psi|` of a sector state embedded in the
    /// stacked space.
    pub fn from_pure(space: Arc<StackedBasis>, psi: &StateVector) -> DensityMatrix {
        let dim = space.total_dim();
        let m = psi.sector();
        let off = space.offset(m);
        let mut matrix = Array2::zeros((dim, dim));
        for (i, a) in psi.amplitudes.iter().enumerate() {
            for (j, b) in psi.amplitudes.iter().enumerate() {
                matrix[(off + i, off + j)] = a * b.conj();
            }
        }
        DensityMatrix { time: psi.time, matrix, space }
    }

    pub fn space(&self) -> &Arc<StackedBasis> {
        &self.space
    }

    pub fn trace(&self) -> C64 {
        self.matrix.diag().sum()
    }

    pub fn purity(&self) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.matrix.nrows() {
            for j in 0..self.matrix.ncols() {
                acc += self.matrix[(i, j)] * self.matrix[(j, i)];
            }
        }
        acc.re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.matrix.nrows() {
            for j in 0..=i {
                worst = worst.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        min_hermitian_eigenvalue(&self.matrix)
    }

    /// Expectation value of a sparse operator on the stacked space.
    pub fn expectation(&self, op: &SparseOp) -> C64 {
        // tr(op rho) = sum_{ij} op[i,j] rho[j,i]
        op.entries().iter().map(|&(i, j, v)| v * self.matrix[(j, i)]).sum()
    }
}

fn min_hermitian_eigenvalue(mat: &Array2<C64>) -> f64 {
    let d = mat.nrows();
    let herm = nalgebra::DMatrix::from_fn(d, d, |i, j| {
        let z = 0.5 * (mat[(i, j)] + mat[(j, i)].conj());
        nalgebra::Complex::new(z.re, z.im)
    });
    herm.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("initial state must have unit norm, got |psi|^2 = {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },
    #[error("state and operator set live on different spaces")]
    BasisMismatch,
    #[error("operator set only covers sectors up to {available}, state needs {required}")]
    SectorUnavailable { required: usize, available: usize },
    #[error("density positivity violated at t = {t}: min eigenvalue {min_eig:.3e}")]
    PositivityViolated { t: f64, min_eig: f64 },
    #[error("invalid partial-trace keep set: {0}")]
    InvalidKeepSet(String),
}

/// Evolve a sector amplitude vector under a (generally non-Hermitian)
/// Hamiltonian block: `i d psi / dt = H psi`.
pub(crate) fn propagate_block(
    h: &Array2<C64>,
    psi0: &Array1<C64>,
    t0: f64,
    sample_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<(Vec<Array1<C64>>, StepStats), IntegrateError> {
    let minus_i = C64::new(0.0, -1.0);
    let mut rhs = move |_t: f64, y: &ArrayView1<C64>, dy: &mut Array1<C64>| {
        for (i, row) in h.outer_iter().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (a, b) in row.iter().zip(y.iter()) {
                acc += a * b;
            }
            dy[i] = minus_i * acc;
        }
    };
    integrate(&mut rhs, t0, psi0, sample_times, opts)
}

/// Propagate the unnormalized no-jump state under the effective non-Hermitian
/// Hamiltonian and sample it on the grid.
///
/// The initial state must be unit norm and live in a single excitation
/// sector of the operator set's space.
pub fn propagate_nojump(
    ops: &OperatorSet,
    psi0: &StateVector,
    grid: &TimeGrid,
) -> Result<Vec<StateVector>, DynamicsError> {
    grid.validate()?;
    if psi0.basis().layout() != ops.space().layout() {
        return Err(DynamicsError::BasisMismatch);
    }
    let sector = psi0.sector();
    if sector > ops.max_excitation() {
        return Err(DynamicsError::SectorUnavailable {
            required: sector,
            available: ops.max_excitation(),
        });
    }
    let norm_sqr = psi0.norm_sqr();
    if (norm_sqr - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::NotNormalized { norm_sqr });
    }
    let times = grid.times();
    let (ys, _) = propagate_block(
        ops.h_nh_sector(sector),
        &psi0.amplitudes,
        grid.t_start,
        &times,
        &grid.options,
    )?;
    let basis = ops.space().sector(sector).clone();
    Ok(times
        .into_iter()
        .zip(ys)
        .map(|(t, amplitudes)| StateVector::new(basis.clone(), amplitudes, t))
        .collect())
}

/// Probability that the excitation has been emitted and detected, i.e. the
/// weight accumulated in the ground state: `1 - |psi|^2`, clamped to [0, 1].
pub fn ground_population(psi: &StateVector) -> f64 {
    (1.0 - psi.norm_sqr()).clamp(0.0, 1.0)
}

/// Ensemble density operator of the single-excitation no-jump evolution:
/// the rank-one no-jump part plus the detected-photon weight on the vacuum,
/// which carries unit trace by construction.
pub fn assemble_density_single_excitation(psi: &StateVector) -> DensityMatrix {
    assert_eq!(psi.sector(), 1, "assembly formula applies to single-excitation states");
    let space = Arc::new(StackedBasis::new(psi.basis().layout(), 1));
    let mut rho = DensityMatrix::from_pure(space, psi);
    rho.matrix[(0, 0)] = C64::new(ground_population(psi), 0.0);
    rho
}

/// Integration diagnostics of a master-equation solve.
#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct MasterDiagnostics {
    /// Largest deviation of the trace from its initial value over the run.
    pub max_trace_drift: f64,
    /// Largest Hermiticity defect over the run.
    pub max_hermiticity_defect: f64,
    /// Smallest eigenvalue encountered at any output time.
    pub min_eigenvalue: f64,
    pub stats: StepStats,
}

/// Master-equation solution: densities at the grid times plus diagnostics.
#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub states: Vec<DensityMatrix>,
    pub diagnostics: MasterDiagnostics,
}

/// Integrate the cascaded master equation
/// `d rho / dt = -i (H_nh rho - rho H_nh^dag) + sum_j J_j rho J_j^dag`
/// over the full stacked space.
///
/// Trace and Hermiticity are monitored; positivity is monitored and a
/// violation beyond [`EPS_POSITIVITY`] aborts with a diagnostic error.
pub fn master_solve(
    ops: &OperatorSet,
    rho0: &DensityMatrix,
    grid: &TimeGrid,
) -> Result<MasterSolution, DynamicsError> {
    grid.validate()?;
    if **rho0.space() != **ops.space() {
        return Err(DynamicsError::BasisMismatch);
    }
    let space = ops.space().clone();
    let dim = space.total_dim();
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);

    let blocks: Vec<(usize, Array2<C64>, Array2<C64>)> = (0..=ops.max_excitation())
        .map(|m| {
            let h = ops.h_nh_sector(m).clone();
            let h_dag = h.t().mapv(|z| z.conj());
            (space.offset(m), h, h_dag)
        })
        .collect();
    let jumps: Vec<SparseOp> = ops.jumps().iter().map(|j| ops.jump_full(j)).collect();

    let mut sandwich: Array2<C64> = Array2::zeros((dim, dim));
    let mut rhs = move |_t: f64, y: &ArrayView1<C64>, dy: &mut Array1<C64>| {
        let rho: ArrayView2<C64> = y.into_shape_with_order((dim, dim)).unwrap();
        dy.fill(C64::new(0.0, 0.0));
        let mut drho = dy.view_mut().into_shape_with_order((dim, dim)).unwrap();
        for (off, h, h_dag) in &blocks {
            let d = h.nrows();
            if d == 0 {
                continue;
            }
            let rows = s![*off..*off + d, ..];
            let cols = s![.., *off..*off + d];
            // -i H rho on this block's rows, +i rho H^dag on its columns.
            general_mat_mul(minus_i, h, &rho.slice(rows), one, &mut drho.slice_mut(rows));
            general_mat_mul(plus_i, &rho.slice(cols), h_dag, one, &mut drho.slice_mut(cols));
        }
        for j in &jumps {
            // sandwich = J rho, then drho += sandwich J^dag.
            sandwich.fill(C64::new(0.0, 0.0));
            for &(r, c, v) in j.entries() {
                let src = rho.row(c);
                let mut dst = sandwich.row_mut(r);
                dst.zip_mut_with(&src, |d, s| *d += v * s);
            }
            for &(r, c, v) in j.entries() {
                let vc = v.conj();
                let src = sandwich.column(c).to_owned();
                let mut dst = drho.column_mut(r);
                dst.zip_mut_with(&src, |d, s| *d += s * vc);
            }
        }
    };

    let y0 = Array1::from_iter(rho0.matrix.iter().cloned());
    let times = grid.times();
    let (ys, stats) = integrate(&mut rhs, grid.t_start, &y0, &times, &grid.options)?;

    let trace0 = rho0.trace().re;
    let mut diagnostics = MasterDiagnostics {
        min_eigenvalue: f64::INFINITY,
        stats,
        ..Default::default()
    };
    let mut states = Vec::with_capacity(ys.len());
    for (t, y) in times.into_iter().zip(ys) {
        let matrix = y.into_shape_with_order((dim, dim)).unwrap();
        let rho = DensityMatrix::new(space.clone(), matrix, t);
        diagnostics.max_trace_drift =
            diagnostics.max_trace_drift.max((rho.trace().re - trace0).abs());
        diagnostics.max_hermiticity_defect =
            diagnostics.max_hermiticity_defect.max(rho.hermiticity_defect());
        let min_eig = rho.min_eigenvalue();
        diagnostics.min_eigenvalue = diagnostics.min_eigenvalue.min(min_eig);
        if min_eig < -EPS_POSITIVITY {
            return Err(DynamicsError::PositivityViolated { t, min_eig });
        }
        states.push(rho);
    }
    Ok(MasterSolution { states, diagnostics })
}

/// Trace out every cavity mode (and any emitter not listed in `keep`),
/// returning the reduced emitter density operator on an emitter-only layout.
pub fn partial_trace_modes(
    rho: &DensityMatrix,
    keep: &[usize],
) -> Result<DensityMatrix, DynamicsError> {
    let layout = rho.space().layout();
    if keep.is_empty() {
        return Err(DynamicsError::InvalidKeepSet("keep set is empty".into()));
    }
    let mut seen = vec![false; layout.n_emitters()];
    for &e in keep {
        if e >= layout.n_emitters() {
            return Err(DynamicsError::InvalidKeepSet(format!(
                "emitter index {e} out of range (layout has {})",
                layout.n_emitters()
            )));
        }
        if seen[e] {
            return Err(DynamicsError::InvalidKeepSet(format!("emitter index {e} repeated")));
        }
        seen[e] = true;
    }

    let max_m = rho.space().max_excitation().min(keep.len());
    let reduced_layout = SlotLayout::emitters_only(keep.len(), layout.scheme());
    let reduced = Arc::new(StackedBasis::new(&reduced_layout, max_m));

    // Group the global indices by the configuration of everything traced
    // out; matrix elements diagonal in that configuration survive.
    let space = rho.space();
    let mut groups: HashMap<Vec<u8>, Vec<(usize, usize)>> = HashMap::new();
    for m in 0..=space.max_excitation() {
        let basis = space.sector(m);
        for (i, state) in basis.states().iter().enumerate() {
            let kept: Vec<u8> = keep.iter().map(|&e| state.emitter_bit(e)).collect();
            let kept_excitation: usize = kept.iter().map(|&b| b as usize).sum();
            if kept_excitation > max_m {
                continue;
            }
            let reduced_state = crate::basis::BasisState::new(kept.clone(), Vec::new());
            let local = reduced
                .sector(kept_excitation)
                .index_of(&reduced_state)
                .expect("reduced state fits the reduced layout");
            let reduced_global = reduced.embed(kept_excitation, local);

            let mut signature: Vec<u8> = Vec::new();
            for e in 0..layout.n_emitters() {
                if !keep.contains(&e) {
                    signature.push(state.emitter_bit(e));
                }
            }
            signature.extend_from_slice(state.mode_occupations());
            groups
                .entry(signature)
                .or_default()
                .push((space.embed(m, i), reduced_global));
        }
    }

    let dim = reduced.total_dim();
    let mut out = Array2::zeros((dim, dim));
    for members in groups.values() {
        for &(gi, ri) in members {
            for &(gj, rj) in members {
                out[(ri, rj)] += rho.matrix[(gi, gj)];
            }
        }
    }
    Ok(DensityMatrix::new(reduced, out, rho.time))
}
