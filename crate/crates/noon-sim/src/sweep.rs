//! Parameter sweeps: drive one solver over a (parameter x time) grid, track
//! per-row diagnostics, and emit machine-readable results with a re-runnable
//! manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{
    master_solve, propagate_nojump, DensityMatrix, DynamicsError, StateVector, TimeGrid,
};
use crate::fidelity::{
    build_noon_state, fidelity_pure, fidelity_pure_density, FidelityError, NoonTarget,
};
use crate::model::{ConfigIssue, ModelError, OperatorSet, SchemeConfig};
use crate::trajectories::{
    run_trajectories, TrajectoryConfig, TrajectoryError, TrajectoryObservable,
};

pub const SCHEMA_VERSION: u32 = 1;

/// Which solver fills the grid.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    Nojump,
    Master,
    Trajectories,
}

/// A physical parameter that can be swept uniformly across the
/// configuration.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    /// All mode decay rates.
    Kappa,
    /// All emitter-cavity coupling magnitudes (phases preserved).
    G,
    /// The emitter-cavity detuning (moves the emitter line).
    DeltaAc,
    /// All backscattering rates.
    Eta,
    /// All dipole-dipole couplings (ring scheme only).
    Xi,
    /// All spontaneous-emission rates.
    Gamma,
}

impl std::fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SweepParameter::Kappa => "kappa",
            SweepParameter::G => "g",
            SweepParameter::DeltaAc => "delta_ac",
            SweepParameter::Eta => "eta",
            SweepParameter::Xi => "xi",
            SweepParameter::Gamma => "gamma",
        };
        f.write_str(s)
    }
}

/// A secondary parameter tied linearly to the swept one (for panels where
/// e.g. the detuning tracks the varied coupling).
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkedParameter {
    pub parameter: SweepParameter,
    pub factor: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepAxis {
    pub parameter: SweepParameter,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub linked: Vec<LinkedParameter>,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let dt = (self.stop - self.start) / (self.points - 1) as f64;
        let mut v: Vec<f64> = (0..self.points).map(|i| self.start + i as f64 * dt).collect();
        *v.last_mut().unwrap() = self.stop;
        v
    }
}

/// Initial state: a N00N construction on the top sector or raw canonical
/// amplitudes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Noon(NoonTarget),
    Raw { sector: usize, amplitudes: Vec<(f64, f64)> },
}

impl StateSpec {
    pub fn sector(&self) -> usize {
        match self {
            StateSpec::Noon(t) => t.photon_number,
            StateSpec::Raw { sector, .. } => *sector,
        }
    }
}

/// Monte Carlo settings used when the method is `trajectories`; the stream
/// seed comes from the sweep seed.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySettings {
    pub n_traj: usize,
    pub dt: f64,
}

/// Complete, self-contained description of one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub schema: u32,
    pub scheme: SchemeConfig,
    pub axis: SweepAxis,
    pub time: TimeGrid,
    /// Label for the time axis (e.g. "1/g" or "1/kappa"); metadata only.
    pub time_unit: String,
    pub initial_state: StateSpec,
    pub target: NoonTarget,
    #[serde(default)]
    pub method: Method,
    #[serde(default)]
    pub trajectories: Option<TrajectorySettings>,
    #[serde(default)]
    pub seed: u64,
    /// Also record the raw no-jump amplitudes of every row.
    #[serde(default)]
    pub dump_amplitudes: bool,
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep specification: {}", issues.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid { issues: Vec<ConfigIssue> },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fidelity(#[from] FidelityError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed result file {path}: {message}")]
    Malformed { path: String, message: String },
}

fn parameter_applies(scheme: &SchemeConfig, p: SweepParameter) -> bool {
    match (scheme, p) {
        (SchemeConfig::JcArray(_), SweepParameter::Xi) => false,
        _ => true,
    }
}

/// The base configuration with one parameter uniformly overridden.
pub fn apply_parameter(scheme: &SchemeConfig, p: SweepParameter, value: f64) -> SchemeConfig {
    let mut out = scheme.clone();
    match (&mut out, p) {
        (SchemeConfig::JcArray(c), _) => {
            for s in &mut c.subsystems {
                match p {
                    SweepParameter::Kappa => {
                        s.kappa_odd = value;
                        s.kappa_even = value;
                    }
                    SweepParameter::G => {
                        let phase = if s.g.norm() > 0.0 { s.g / s.g.norm() } else { 1.0.into() };
                        s.g = phase * value;
                    }
                    SweepParameter::DeltaAc => {
                        s.omega_eg = s.omega_c + value;
                    }
                    SweepParameter::Eta => s.eta = value,
                    SweepParameter::Gamma => s.gamma = value,
                    SweepParameter::Xi => unreachable!("checked by parameter_applies"),
                }
            }
        }
        (SchemeConfig::DdiRings(c), _) => match p {
            SweepParameter::Kappa => c.kappa = [value; 4],
            SweepParameter::G => {
                for g in [&mut c.g_left, &mut c.g_right] {
                    let phase = if g.norm() > 0.0 { *g / g.norm() } else { 1.0.into() };
                    *g = phase * value;
                }
            }
            SweepParameter::DeltaAc => c.omega_eg = c.omega_c1 + value,
            SweepParameter::Eta => {
                c.eta_left = value;
                c.eta_right = value;
            }
            SweepParameter::Xi => {
                for xs in [&mut c.xi_left, &mut c.xi_right] {
                    for x in xs.iter_mut() {
                        *x = value;
                    }
                }
            }
            SweepParameter::Gamma => c.gamma = value,
        },
    }
    out
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SweepError> {
        let mut issues = Vec::new();
        if self.schema != SCHEMA_VERSION {
            issues.push(issue("schema", format!("expected {SCHEMA_VERSION}, got {}", self.schema)));
        }
        if let Err(ModelError::InvalidConfig { issues: more }) = self.scheme.validate() {
            issues.extend(more.into_iter().map(|i| ConfigIssue {
                path: format!("scheme.{}", i.path),
                message: i.message,
            }));
        }
        if !(self.axis.start.is_finite() && self.axis.stop.is_finite()) {
            issues.push(issue("axis", "range must be finite"));
        }
        if self.axis.points == 0 {
            issues.push(issue("axis.points", "need at least one point"));
        }
        if !parameter_applies(&self.scheme, self.axis.parameter) {
            issues.push(issue(
                "axis.parameter",
                format!("parameter {} does not exist in this scheme", self.axis.parameter),
            ));
        }
        for (i, link) in self.axis.linked.iter().enumerate() {
            if !parameter_applies(&self.scheme, link.parameter) {
                issues.push(issue(
                    format!("axis.linked[{i}].parameter"),
                    format!("parameter {} does not exist in this scheme", link.parameter),
                ));
            }
            if link.parameter == self.axis.parameter {
                issues.push(issue(
                    format!("axis.linked[{i}].parameter"),
                    "linked parameter equals the swept one",
                ));
            }
        }
        if let Err(e) = self.time.validate() {
            issues.push(issue("time", e.to_string()));
        }
        if self.initial_state.sector() != self.target.photon_number {
            issues.push(issue(
                "target.photon_number",
                format!(
                    "target sector {} does not match the initial excitation number {}",
                    self.target.photon_number,
                    self.initial_state.sector()
                ),
            ));
        }
        if self.method == Method::Trajectories && self.trajectories.is_none() {
            issues.push(issue("trajectories", "required when method = trajectories"));
        }
        if let Some(t) = &self.trajectories {
            if t.n_traj == 0 {
                issues.push(issue("trajectories.n_traj", "need at least one trajectory"));
            }
            if !(t.dt > 0.0) {
                issues.push(issue("trajectories.dt", "step must be positive"));
            }
        }
        if let StateSpec::Raw { amplitudes, .. } = &self.initial_state {
            let norm: f64 = amplitudes.iter().map(|(re, im)| re * re + im * im).sum();
            if (norm - 1.0).abs() > 1e-9 {
                issues.push(issue(
                    "initial_state.amplitudes",
                    format!("must be unit norm, got |psi|^2 = {norm}"),
                ));
            }
        }
        if issues.is_empty() {
            Ok(())
        } else {
            Err(SweepError::Invalid { issues })
        }
    }
}

fn issue(path: impl Into<String>, message: impl Into<String>) -> ConfigIssue {
    ConfigIssue { path: path.into(), message: message.into() }
}

/// Operator set, initial state and target for one axis value.
pub fn instantiate(
    spec: &SweepSpec,
    axis_value: f64,
) -> Result<(OperatorSet, StateVector, StateVector), SweepError> {
    let mut scheme = apply_parameter(&spec.scheme, spec.axis.parameter, axis_value);
    for link in &spec.axis.linked {
        scheme = apply_parameter(&scheme, link.parameter, link.factor * axis_value);
    }
    let sector = spec.initial_state.sector();
    let ops = OperatorSet::build(&scheme, sector)?;
    let basis = ops.space().sector(sector).clone();
    let psi0 = match &spec.initial_state {
        StateSpec::Noon(t) => build_noon_state(t, &basis)?,
        StateSpec::Raw { amplitudes, .. } => {
            let amps = amplitudes.iter().map(|&(re, im)| num_complex::Complex64::new(re, im));
            StateVector::new(basis.clone(), amps.collect(), spec.time.t_start)
        }
    };
    let target = build_noon_state(&spec.target, &basis)?;
    Ok((ops, psi0, target))
}

/// Fate of one grid row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed { error: String },
}

/// Per-row integration metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDiagnostics {
    pub axis_value: f64,
    pub status: RowStatus,
    pub steps: usize,
    pub rejected_steps: usize,
    pub rhs_evals: usize,
    /// Squared norm of the no-jump state at the final time, when applicable.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub final_norm_sqr: Option<f64>,
    /// Master-equation sanity numbers, when applicable.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub master: Option<MasterSummary>,
    /// Monte Carlo standard errors per time, when applicable.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<Vec<f64>>,
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MasterSummary {
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: f64,
}

/// Raw no-jump amplitudes of one row, for the amplitude dump.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowAmplitudes {
    pub axis_value: f64,
    /// `[time][state]` pairs of (re, im) in canonical basis order.
    pub amplitudes: Vec<Vec<(f64, f64)>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u32,
    pub code_version: String,
    pub seed: u64,
    pub spec: SweepSpec,
}

/// One fidelity value per (parameter, time) cell plus diagnostics and the
/// manifest needed to reproduce it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultGrid {
    pub manifest: Manifest,
    pub axis_values: Vec<f64>,
    pub times: Vec<f64>,
    /// `fidelity[row][col]`; `None` marks a failed cell.
    pub fidelity: Vec<Vec<Option<f64>>>,
    pub rows: Vec<RowDiagnostics>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub amplitudes: Option<Vec<RowAmplitudes>>,
}

struct RowOutput {
    fidelity: Vec<Option<f64>>,
    diagnostics: RowDiagnostics,
    amplitudes: Option<RowAmplitudes>,
}

fn run_row(spec: &SweepSpec, axis_value: f64, n_times: usize) -> RowOutput {
    let failed = |err: String| RowOutput {
        fidelity: vec![None; n_times],
        diagnostics: RowDiagnostics {
            axis_value,
            status: RowStatus::Failed { error: err },
            steps: 0,
            rejected_steps: 0,
            rhs_evals: 0,
            final_norm_sqr: None,
            master: None,
            std_error: None,
        },
        amplitudes: None,
    };

    let (ops, psi0, target) = match instantiate(spec, axis_value) {
        Ok(v) => v,
        Err(e) => return failed(e.to_string()),
    };
    let mut diagnostics = RowDiagnostics {
        axis_value,
        status: RowStatus::Ok,
        steps: 0,
        rejected_steps: 0,
        rhs_evals: 0,
        final_norm_sqr: None,
        master: None,
        std_error: None,
    };

    match spec.method {
        Method::Nojump => {
            let states = match propagate_nojump(&ops, &psi0, &spec.time) {
                Ok(s) => s,
                Err(e) => return failed(e.to_string()),
            };
            let fidelity: Vec<Option<f64>> = states
                .iter()
                .map(|s| fidelity_pure(s, &target).ok())
                .collect();
            diagnostics.final_norm_sqr = states.last().map(StateVector::norm_sqr);
            let amplitudes = spec.dump_amplitudes.then(|| RowAmplitudes {
                axis_value,
                amplitudes: states
                    .iter()
                    .map(|s| s.amplitudes.iter().map(|z| (z.re, z.im)).collect())
                    .collect(),
            });
            RowOutput { fidelity, diagnostics, amplitudes }
        }
        Method::Master => {
            let rho0 = DensityMatrix::from_pure(ops.space().clone(), &psi0);
            let solution = match master_solve(&ops, &rho0, &spec.time) {
                Ok(s) => s,
                Err(e) => return failed(e.to_string()),
            };
            let fidelity: Vec<Option<f64>> = solution
                .states
                .iter()
                .map(|rho| fidelity_pure_density(rho, &target).ok())
                .collect();
            diagnostics.steps = solution.diagnostics.stats.steps;
            diagnostics.rejected_steps = solution.diagnostics.stats.rejected;
            diagnostics.rhs_evals = solution.diagnostics.stats.rhs_evals;
            diagnostics.master = Some(MasterSummary {
                max_trace_drift: solution.diagnostics.max_trace_drift,
                max_hermiticity_defect: solution.diagnostics.max_hermiticity_defect,
                min_eigenvalue: solution.diagnostics.min_eigenvalue,
            });
            RowOutput { fidelity, diagnostics, amplitudes: None }
        }
        Method::Trajectories => {
            let settings = spec.trajectories.expect("validated");
            let tcfg = TrajectoryConfig {
                n_traj: settings.n_traj,
                dt: settings.dt,
                seed: spec.seed,
                channels: None,
            };
            let result = match run_trajectories(
                &ops,
                &psi0,
                &spec.time,
                &tcfg,
                &[TrajectoryObservable::Fidelity(target)],
            ) {
                Ok(r) => r,
                Err(e) => return failed(e.to_string()),
            };
            let series = &result.series[0];
            diagnostics.std_error = Some(series.std_error.clone());
            RowOutput {
                fidelity: series.mean.iter().map(|&f| Some(f)).collect(),
                diagnostics,
                amplitudes: None,
            }
        }
    }
}

/// Run the sweep: one row per axis value, rows computed independently (and
/// in parallel), failures recorded per row without aborting the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<ResultGrid, SweepError> {
    spec.validate()?;
    let axis_values = spec.axis.values();
    let times = spec.time.times();
    let n_times = times.len();

    let rows: Vec<RowOutput> = axis_values
        .par_iter()
        .map(|&v| run_row(spec, v, n_times))
        .collect();

    let mut fidelity = Vec::with_capacity(rows.len());
    let mut diagnostics = Vec::with_capacity(rows.len());
    let mut amplitudes = spec.dump_amplitudes.then(Vec::new);
    for row in rows {
        fidelity.push(row.fidelity);
        diagnostics.push(row.diagnostics);
        if let (Some(all), Some(one)) = (amplitudes.as_mut(), row.amplitudes) {
            all.push(one);
        }
    }

    Ok(ResultGrid {
        manifest: Manifest {
            schema: SCHEMA_VERSION,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: spec.seed,
            spec: spec.clone(),
        },
        axis_values,
        times,
        fidelity,
        rows: diagnostics,
        amplitudes,
    })
}

/// Global maximum with ties broken by the lowest (row, col); `None` if every
/// cell failed.
pub fn find_max(grid: &ResultGrid) -> Option<(f64, (usize, usize))> {
    let mut best: Option<(f64, (usize, usize))> = None;
    for (r, row) in grid.fidelity.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if let Some(f) = cell {
                if best.map_or(true, |(b, _)| *f > b) {
                    best = Some((*f, (r, c)));
                }
            }
        }
    }
    best
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmitFormat {
    Csv,
    Json,
    Both,
}

/// Write the CSV form: a `#`-prefixed header block carrying the manifest,
/// then `param_value,t,fidelity` records in row-major order.
pub fn write_csv<W: Write>(grid: &ResultGrid, mut w: W) -> std::io::Result<()> {
    writeln!(w, "# noon-sim sweep result")?;
    writeln!(w, "# schema = {}", grid.manifest.schema)?;
    writeln!(w, "# code_version = {}", grid.manifest.code_version)?;
    writeln!(w, "# seed = {}", grid.manifest.seed)?;
    writeln!(w, "# axis = {}", grid.manifest.spec.axis.parameter)?;
    writeln!(w, "# time_unit = {}", grid.manifest.spec.time_unit)?;
    writeln!(
        w,
        "# manifest = {}",
        serde_json::to_string(&grid.manifest).expect("manifest serializes")
    )?;
    writeln!(w, "param_value,t,fidelity")?;
    for (v, row) in grid.axis_values.iter().zip(&grid.fidelity) {
        for (t, cell) in grid.times.iter().zip(row) {
            match cell {
                Some(f) => writeln!(w, "{v},{t},{f}")?,
                None => writeln!(w, "{v},{t},nan")?,
            }
        }
    }
    Ok(())
}

/// Write the raw-amplitude dump: `param_value,t,re_c1,im_c1,...` per record.
pub fn write_amplitudes_csv<W: Write>(grid: &ResultGrid, mut w: W) -> std::io::Result<()> {
    let Some(amplitudes) = &grid.amplitudes else {
        return Ok(());
    };
    let n_states = amplitudes
        .first()
        .and_then(|r| r.amplitudes.first())
        .map_or(0, Vec::len);
    write!(w, "param_value,t")?;
    for i in 1..=n_states {
        write!(w, ",re_c{i},im_c{i}")?;
    }
    writeln!(w)?;
    for row in amplitudes {
        for (t, amps) in grid.times.iter().zip(&row.amplitudes) {
            write!(w, "{},{t}", row.axis_value)?;
            for (re, im) in amps {
                write!(w, ",{re},{im}")?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_json<W: Write>(grid: &ResultGrid, w: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(w, grid).map_err(std::io::Error::other)
}

/// Emit result files under `dir` with the given stem; returns the paths
/// written. Output is byte-stable for a fixed configuration and seed.
pub fn emit(
    grid: &ResultGrid,
    format: EmitFormat,
    dir: &Path,
    stem: &str,
) -> Result<Vec<PathBuf>, SweepError> {
    let io_err = |path: &Path, source: std::io::Error| SweepError::Io {
        path: path.display().to_string(),
        source,
    };
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut written = Vec::new();
    if matches!(format, EmitFormat::Csv | EmitFormat::Both) {
        let path = dir.join(format!("{stem}.csv"));
        let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_csv(grid, std::io::BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    if matches!(format, EmitFormat::Json | EmitFormat::Both) {
        let path = dir.join(format!("{stem}.json"));
        let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_json(grid, std::io::BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    if grid.amplitudes.is_some() {
        let path = dir.join(format!("{stem}_amplitudes.csv"));
        let file = std::fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_amplitudes_csv(grid, std::io::BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

/// Recover the manifest from an emitted CSV header block.
pub fn manifest_from_csv(text: &str, path: &str) -> Result<Manifest, SweepError> {
    for line in text.lines() {
        if let Some(json) = line.strip_prefix("# manifest = ") {
            return serde_json::from_str(json).map_err(|e| SweepError::Malformed {
                path: path.to_string(),
                message: e.to_string(),
            });
        }
        if !line.starts_with('#') {
            break;
        }
    }
    Err(SweepError::Malformed { path: path.to_string(), message: "no manifest line".into() })
}
