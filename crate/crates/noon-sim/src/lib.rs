//! Simulator for the dissipative dynamics of multi-excitation N00N states in
//! two coupled-cavity QED architectures: a bidirectionally cascaded
//! Jaynes-Cummings array and a pair of fiber-coupled ring resonators hosting
//! dipole-dipole-interacting emitters.
//!
//! Time-resolved N00N-state fidelities are computed by three mutually
//! validating methods: no-jump non-Hermitian propagation, full cascaded
//! master-equation integration, and stochastic quantum trajectories.

pub mod basis;
pub mod config;
pub mod dynamics;
pub mod fidelity;
pub mod integrate;
pub mod model;
pub mod presets;
pub mod sparse;
pub mod sweep;
pub mod trajectories;

pub use basis::{
    enumerate_basis, raising_matrix_element, BasisError, BasisState, ExcitationBasis, SchemeTag,
    Slot, SlotLayout, StackedBasis,
};
pub use model::{
    DdiRingConfig, DetuningConvention, JcArrayConfig, JumpChannel, JumpLabel, ModelError,
    OperatorSet, SchemeConfig, SubsystemParams,
};
pub use dynamics::{
    assemble_density_single_excitation, ground_population, master_solve, partial_trace_modes,
    propagate_nojump, DensityMatrix, DynamicsError, MasterDiagnostics, MasterSolution,
    StateVector, TimeGrid,
};
pub use fidelity::{
    build_noon_state, fidelity_pure, fidelity_pure_density, fidelity_series, FidelityError,
    GroupingMode, NoonTarget,
};
pub use integrate::{IntegrationMethod, IntegratorOptions, StepStats};
pub use config::{load_config, parse_config};
pub use presets::{preset, PRESET_NAMES};
pub use sparse::SparseOp;
pub use sweep::{
    apply_parameter, emit, find_max, instantiate, run_sweep, EmitFormat, Manifest, Method,
    ResultGrid, RowStatus, StateSpec, SweepAxis, SweepError, SweepParameter, SweepSpec,
    TrajectorySettings,
};
pub use trajectories::{
    run_trajectories, sample_jump, write_event_log, JumpDecision, JumpEvent, ObservableSeries,
    TrajectoryConfig, TrajectoryError, TrajectoryObservable, TrajectoryResult,
};
