//! Run configuration files: a versioned TOML schema that maps onto
//! [`SweepSpec`]. Scalar fields broadcast over subsystems, slots are named
//! by their display labels (`e1`, `a4`, ...), and complex couplings accept
//! either a real number or a `[re, im]` pair.

use num_complex::Complex64 as C64;
use serde::Deserialize;

use crate::basis::Slot;
use crate::dynamics::TimeGrid;
use crate::fidelity::NoonTarget;
use crate::integrate::{IntegrationMethod, IntegratorOptions};
use crate::model::{
    ConfigIssue, DdiRingConfig, DetuningConvention, JcArrayConfig, SchemeConfig, SubsystemParams,
};
use crate::sweep::{
    LinkedParameter, Method, StateSpec, SweepAxis, SweepError, SweepParameter, SweepSpec,
    TrajectorySettings, SCHEMA_VERSION,
};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    schema: u32,
    scheme: SchemeSection,
    sweep: SweepSection,
    time: TimeSection,
    initial_state: StateSection,
    target: TargetSection,
    #[serde(default)]
    method: MethodSection,
    #[serde(default)]
    output: OutputSection,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScalarOrVec {
    Scalar(f64),
    Vec(Vec<f64>),
}

impl ScalarOrVec {
    fn broadcast(&self, n: usize, path: &str, issues: &mut Vec<ConfigIssue>) -> Vec<f64> {
        match self {
            ScalarOrVec::Scalar(v) => vec![*v; n],
            ScalarOrVec::Vec(v) => {
                if v.len() == n {
                    v.clone()
                } else {
                    issues.push(ConfigIssue {
                        path: path.into(),
                        message: format!("expected {n} entries, got {}", v.len()),
                    });
                    vec![0.0; n]
                }
            }
        }
    }
}

fn default_scalar() -> ScalarOrVec {
    ScalarOrVec::Scalar(0.0)
}

#[derive(Debug, Deserialize, Clone, Copy)]
#[serde(untagged)]
enum ComplexIn {
    Real(f64),
    Pair([f64; 2]),
}

impl From<ComplexIn> for C64 {
    fn from(c: ComplexIn) -> C64 {
        match c {
            ComplexIn::Real(r) => C64::new(r, 0.0),
            ComplexIn::Pair([re, im]) => C64::new(re, im),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ComplexScalarOrVec {
    Scalar(ComplexIn),
    Vec(Vec<ComplexIn>),
}

impl ComplexScalarOrVec {
    fn broadcast(&self, n: usize, path: &str, issues: &mut Vec<ConfigIssue>) -> Vec<C64> {
        match self {
            ComplexScalarOrVec::Scalar(v) => vec![(*v).into(); n],
            ComplexScalarOrVec::Vec(v) => {
                if v.len() == n {
                    v.iter().map(|&c| c.into()).collect()
                } else {
                    issues.push(ConfigIssue {
                        path: path.into(),
                        message: format!("expected {n} entries, got {}", v.len()),
                    });
                    vec![C64::new(0.0, 0.0); n]
                }
            }
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum SchemeSection {
    JcArray {
        subsystems: usize,
        omega_eg: ScalarOrVec,
        omega_c: ScalarOrVec,
        g: ComplexScalarOrVec,
        #[serde(default = "default_scalar")]
        kappa: ScalarOrVec,
        #[serde(default)]
        kappa_odd: Option<ScalarOrVec>,
        #[serde(default)]
        kappa_even: Option<ScalarOrVec>,
        #[serde(default = "default_scalar")]
        eta: ScalarOrVec,
        #[serde(default = "default_scalar")]
        gamma: ScalarOrVec,
        #[serde(default)]
        detuning_convention: DetuningConvention,
    },
    DdiRings {
        emitters_per_cavity: usize,
        omega_eg: f64,
        omega_c1: f64,
        omega_c2: f64,
        #[serde(default)]
        g: Option<ComplexIn>,
        #[serde(default)]
        g_left: Option<ComplexIn>,
        #[serde(default)]
        g_right: Option<ComplexIn>,
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        eta_left: Option<f64>,
        #[serde(default)]
        eta_right: Option<f64>,
        #[serde(default)]
        xi: Option<f64>,
        #[serde(default)]
        xi_left: Option<Vec<f64>>,
        #[serde(default)]
        xi_right: Option<Vec<f64>>,
        #[serde(default = "default_scalar")]
        kappa: ScalarOrVec,
        #[serde(default)]
        gamma: f64,
        #[serde(default)]
        detuning_convention: DetuningConvention,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    parameter: SweepParameter,
    start: f64,
    stop: f64,
    points: usize,
    #[serde(default)]
    linked: Vec<LinkedIn>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinkedIn {
    parameter: SweepParameter,
    factor: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TimeSection {
    start: f64,
    stop: f64,
    points: usize,
    #[serde(default = "default_time_unit")]
    unit: String,
    #[serde(default)]
    rtol: Option<f64>,
    #[serde(default)]
    atol: Option<f64>,
    #[serde(default)]
    integrator: Option<IntegratorIn>,
}

fn default_time_unit() -> String {
    "1/g".into()
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case")]
enum IntegratorIn {
    Dopri5,
    Rk4 { substeps: usize },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StateSection {
    Noon(NoonIn),
    Raw { sector: usize, amplitudes: Vec<[f64; 2]> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoonIn {
    photon_number: usize,
    #[serde(default)]
    phase: f64,
    left: Vec<String>,
    right: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetSection {
    photon_number: usize,
    #[serde(default)]
    phase: f64,
    left: Vec<String>,
    right: Vec<String>,
}

#[derive(Debug, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum MethodSection {
    #[default]
    Nojump,
    Master,
    Trajectories {
        n_traj: usize,
        dt: f64,
    },
}

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct OutputSection {
    #[serde(default)]
    dump_amplitudes: bool,
    #[serde(default)]
    seed: u64,
}

fn parse_slots(labels: &[String], path: &str, issues: &mut Vec<ConfigIssue>) -> Vec<Slot> {
    let mut slots = Vec::with_capacity(labels.len());
    for (i, label) in labels.iter().enumerate() {
        match Slot::parse(label) {
            Some(s) => slots.push(s),
            None => issues.push(ConfigIssue {
                path: format!("{path}[{i}]"),
                message: format!("cannot parse slot label {label:?} (use e1.., a1..)"),
            }),
        }
    }
    slots
}

fn build_noon(
    photons: usize,
    phase: f64,
    left: &[String],
    right: &[String],
    path: &str,
    issues: &mut Vec<ConfigIssue>,
) -> Option<NoonTarget> {
    let left = parse_slots(left, &format!("{path}.left"), issues);
    let right = parse_slots(right, &format!("{path}.right"), issues);
    match NoonTarget::new(photons, phase, left, right) {
        Ok(t) => Some(t),
        Err(e) => {
            issues.push(ConfigIssue { path: path.into(), message: e.to_string() });
            None
        }
    }
}

fn build_scheme(section: &SchemeSection, issues: &mut Vec<ConfigIssue>) -> Option<SchemeConfig> {
    match section {
        SchemeSection::JcArray {
            subsystems,
            omega_eg,
            omega_c,
            g,
            kappa,
            kappa_odd,
            kappa_even,
            eta,
            gamma,
            detuning_convention,
        } => {
            let n = *subsystems;
            if n == 0 {
                issues.push(ConfigIssue {
                    path: "scheme.subsystems".into(),
                    message: "need at least one subsystem".into(),
                });
                return None;
            }
            let omega_eg = omega_eg.broadcast(n, "scheme.omega_eg", issues);
            let omega_c = omega_c.broadcast(n, "scheme.omega_c", issues);
            let g = g.broadcast(n, "scheme.g", issues);
            let kappa = kappa.broadcast(n, "scheme.kappa", issues);
            let kappa_odd = kappa_odd
                .as_ref()
                .map(|k| k.broadcast(n, "scheme.kappa_odd", issues))
                .unwrap_or_else(|| kappa.clone());
            let kappa_even = kappa_even
                .as_ref()
                .map(|k| k.broadcast(n, "scheme.kappa_even", issues))
                .unwrap_or_else(|| kappa.clone());
            let eta = eta.broadcast(n, "scheme.eta", issues);
            let gamma = gamma.broadcast(n, "scheme.gamma", issues);
            let subsystems = (0..n)
                .map(|i| SubsystemParams {
                    omega_eg: omega_eg[i],
                    omega_c: omega_c[i],
                    g: g[i],
                    kappa_odd: kappa_odd[i],
                    kappa_even: kappa_even[i],
                    eta: eta[i],
                    gamma: gamma[i],
                })
                .collect();
            Some(SchemeConfig::JcArray(JcArrayConfig {
                subsystems,
                detuning_convention: *detuning_convention,
            }))
        }
        SchemeSection::DdiRings {
            emitters_per_cavity,
            omega_eg,
            omega_c1,
            omega_c2,
            g,
            g_left,
            g_right,
            eta,
            eta_left,
            eta_right,
            xi,
            xi_left,
            xi_right,
            kappa,
            gamma,
            detuning_convention,
        } => {
            let n = *emitters_per_cavity;
            let pick_g = |side: Option<ComplexIn>, path: &str, issues: &mut Vec<ConfigIssue>| {
                match side.or(*g) {
                    Some(v) => C64::from(v),
                    None => {
                        issues.push(ConfigIssue {
                            path: path.into(),
                            message: "set g or both g_left and g_right".into(),
                        });
                        C64::new(0.0, 0.0)
                    }
                }
            };
            let g_left = pick_g(*g_left, "scheme.g_left", issues);
            let g_right = pick_g(*g_right, "scheme.g_right", issues);
            let eta_left = eta_left.or(*eta).unwrap_or(0.0);
            let eta_right = eta_right.or(*eta).unwrap_or(0.0);
            let chain = n.saturating_sub(1);
            let pick_xi = |side: &Option<Vec<f64>>| match side {
                Some(v) => v.clone(),
                None => vec![xi.unwrap_or(0.0); chain],
            };
            let xi_left = pick_xi(xi_left);
            let xi_right = pick_xi(xi_right);
            let kappa_v = kappa.broadcast(4, "scheme.kappa", issues);
            Some(SchemeConfig::DdiRings(DdiRingConfig {
                emitters_per_cavity: n,
                omega_eg: *omega_eg,
                omega_c1: *omega_c1,
                omega_c2: *omega_c2,
                g_left,
                g_right,
                eta_left,
                eta_right,
                xi_left,
                xi_right,
                kappa: [kappa_v[0], kappa_v[1], kappa_v[2], kappa_v[3]],
                gamma: *gamma,
                detuning_convention: *detuning_convention,
            }))
        }
    }
}

/// Parse a TOML run configuration into a sweep specification, collecting
/// path-tagged problems.
pub fn parse_config(text: &str) -> Result<SweepSpec, SweepError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| SweepError::Invalid {
        issues: vec![ConfigIssue { path: "(file)".into(), message: e.to_string() }],
    })?;
    let mut issues = Vec::new();
    if file.schema != SCHEMA_VERSION {
        issues.push(ConfigIssue {
            path: "schema".into(),
            message: format!("expected {SCHEMA_VERSION}, got {}", file.schema),
        });
    }

    let scheme = build_scheme(&file.scheme, &mut issues);

    let mut options = IntegratorOptions::default();
    if let Some(rtol) = file.time.rtol {
        options.rtol = rtol;
    }
    if let Some(atol) = file.time.atol {
        options.atol = atol;
    }
    if let Some(integrator) = &file.time.integrator {
        options.method = match integrator {
            IntegratorIn::Dopri5 => IntegrationMethod::Dopri5,
            IntegratorIn::Rk4 { substeps } => IntegrationMethod::Rk4 { substeps: *substeps },
        };
    }
    let time = TimeGrid {
        t_start: file.time.start,
        t_end: file.time.stop,
        n_points: file.time.points,
        options,
    };

    let initial_state = match &file.initial_state {
        StateSection::Noon(n) => build_noon(
            n.photon_number,
            n.phase,
            &n.left,
            &n.right,
            "initial_state",
            &mut issues,
        )
        .map(StateSpec::Noon),
        StateSection::Raw { sector, amplitudes } => Some(StateSpec::Raw {
            sector: *sector,
            amplitudes: amplitudes.iter().map(|&[re, im]| (re, im)).collect(),
        }),
    };
    let target = build_noon(
        file.target.photon_number,
        file.target.phase,
        &file.target.left,
        &file.target.right,
        "target",
        &mut issues,
    );

    let (method, trajectories) = match file.method {
        MethodSection::Nojump => (Method::Nojump, None),
        MethodSection::Master => (Method::Master, None),
        MethodSection::Trajectories { n_traj, dt } => {
            (Method::Trajectories, Some(TrajectorySettings { n_traj, dt }))
        }
    };

    let (Some(scheme), Some(initial_state), Some(target)) = (scheme, initial_state, target)
    else {
        return Err(SweepError::Invalid { issues });
    };
    if !issues.is_empty() {
        return Err(SweepError::Invalid { issues });
    }

    let spec = SweepSpec {
        schema: file.schema,
        scheme,
        axis: SweepAxis {
            parameter: file.sweep.parameter,
            start: file.sweep.start,
            stop: file.sweep.stop,
            points: file.sweep.points,
            linked: file
                .sweep
                .linked
                .iter()
                .map(|l| LinkedParameter { parameter: l.parameter, factor: l.factor })
                .collect(),
        },
        time,
        time_unit: file.time.unit.clone(),
        initial_state,
        target,
        method,
        trajectories,
        seed: file.output.seed,
        dump_amplitudes: file.output.dump_amplitudes,
    };
    spec.validate()?;
    Ok(spec)
}

/// Read and parse a configuration file.
pub fn load_config(path: &std::path::Path) -> Result<SweepSpec, SweepError> {
    let text = std::fs::read_to_string(path).map_err(|e| SweepError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_config(&text)
}
