//! Complex-vector ODE integration: an embedded Dormand-Prince 5(4) pair with
//! fourth-order dense output for uniform sampling, and a fixed-step classical
//! RK4 fallback.

use ndarray::{Array1, ArrayView1};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// Difference between the fifth- and fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// Dense-output weights.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 10.0;
// Accept steps well inside the tolerance budget so the accumulated global
// error stays below the configured tolerance, not just the per-step one.
const ACCEPT_FRACTION: f64 = 0.2;

/// Which stepper to use.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMethod {
    /// Adaptive embedded 5(4) pair with dense output (default).
    Dopri5,
    /// Classical fixed-step RK4; the step is the sample interval divided by
    /// `substeps`.
    Rk4 { substeps: usize },
}

impl Default for IntegrationMethod {
    fn default() -> Self {
        IntegrationMethod::Dopri5
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub method: IntegrationMethod,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        IntegratorOptions {
            rtol: 1e-10,
            atol: 1e-12,
            method: IntegrationMethod::Dopri5,
            max_steps: 5_000_000,
        }
    }
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

#[derive(Debug, Error)]
pub enum IntegrateError {
    #[error("tolerance not met: step size underflow at t = {t}")]
    ToleranceNotMet { t: f64 },
    #[error("exceeded {max_steps} steps at t = {t}")]
    MaxSteps { t: f64, max_steps: usize },
    #[error("sample times must be finite, strictly increasing, and start at or after t0")]
    BadSampleTimes,
}

/// Integrate `dy/dt = rhs(t, y)` from `(t0, y0)` and return the solution at
/// each requested sample time (strictly increasing, all `>= t0`).
pub fn integrate<F>(
    rhs: &mut F,
    t0: f64,
    y0: &Array1<C64>,
    sample_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<(Vec<Array1<C64>>, StepStats), IntegrateError>
where
    F: FnMut(f64, &ArrayView1<C64>, &mut Array1<C64>),
{
    if sample_times.is_empty() {
        return Ok((Vec::new(), StepStats::default()));
    }
    let increasing = sample_times.windows(2).all(|w| w[0] < w[1]);
    if !increasing || sample_times[0] < t0 || sample_times.iter().any(|t| !t.is_finite()) {
        return Err(IntegrateError::BadSampleTimes);
    }
    match opts.method {
        IntegrationMethod::Dopri5 => dopri5(rhs, t0, y0, sample_times, opts),
        IntegrationMethod::Rk4 { substeps } => rk4(rhs, t0, y0, sample_times, substeps.max(1)),
    }
}

fn dopri5<F>(
    rhs: &mut F,
    t0: f64,
    y0: &Array1<C64>,
    sample_times: &[f64],
    opts: &IntegratorOptions,
) -> Result<(Vec<Array1<C64>>, StepStats), IntegrateError>
where
    F: FnMut(f64, &ArrayView1<C64>, &mut Array1<C64>),
{
    let dim = y0.len();
    let t_end = *sample_times.last().unwrap();
    let span = t_end - t0;
    let mut out = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let mut stats = StepStats::default();

    let mut t = t0;
    let mut y = y0.clone();
    if sample_times[0] == t0 {
        out.push(y.clone());
        next_sample = 1;
    }
    if next_sample == sample_times.len() {
        return Ok((out, stats));
    }
    if span <= 0.0 {
        return Err(IntegrateError::BadSampleTimes);
    }

    let mut k: Vec<Array1<C64>> = (0..7).map(|_| Array1::zeros(dim)).collect();
    let mut y_stage: Array1<C64> = Array1::zeros(dim);
    let mut y_new: Array1<C64> = Array1::zeros(dim);

    rhs(t, &y.view(), &mut k[0]);
    stats.rhs_evals += 1;

    // The initial step scales with the requested span, which keeps the whole
    // integration covariant under a joint rescaling of rates and time.
    let mut h = span * 1e-4;
    let h_floor = span * 1e-14;

    while next_sample < sample_times.len() {
        if stats.steps + stats.rejected >= opts.max_steps {
            return Err(IntegrateError::MaxSteps { t, max_steps: opts.max_steps });
        }
        if h < h_floor {
            return Err(IntegrateError::ToleranceNotMet { t });
        }
        if t + h > t_end {
            h = t_end - t;
        }

        // Stages 2..6.
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A21 * k[0][i]);
        }
        rhs(t + C2 * h, &y_stage.view(), &mut k[1]);
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A31 * k[0][i] + A32 * k[1][i]);
        }
        rhs(t + C3 * h, &y_stage.view(), &mut k[2]);
        for i in 0..dim {
            y_stage[i] = y[i] + h * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
        }
        rhs(t + C4 * h, &y_stage.view(), &mut k[3]);
        for i in 0..dim {
            y_stage[i] =
                y[i] + h * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
        }
        rhs(t + C5 * h, &y_stage.view(), &mut k[4]);
        for i in 0..dim {
            y_stage[i] = y[i]
                + h * (A61 * k[0][i]
                    + A62 * k[1][i]
                    + A63 * k[2][i]
                    + A64 * k[3][i]
                    + A65 * k[4][i]);
        }
        rhs(t + h, &y_stage.view(), &mut k[5]);
        // Fifth-order solution; its weights are also the seventh stage (FSAL).
        for i in 0..dim {
            y_new[i] = y[i]
                + h * (B1 * k[0][i] + B3 * k[2][i] + B4 * k[3][i] + B5 * k[4][i] + B6 * k[5][i]);
        }
        rhs(t + h, &y_new.view(), &mut k[6]);
        stats.rhs_evals += 6;

        // Weighted max-norm error estimate.
        let mut err_norm = 0.0f64;
        for i in 0..dim {
            let err = h
                * (E1 * k[0][i]
                    + E3 * k[2][i]
                    + E4 * k[3][i]
                    + E5 * k[4][i]
                    + E6 * k[5][i]
                    + E7 * k[6][i]);
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err_norm = err_norm.max(err.norm() / scale);
        }

        let ratio = err_norm / ACCEPT_FRACTION;
        if ratio <= 1.0 {
            // Accepted: serve all samples inside (t, t + h] from the dense
            // interpolant before advancing.
            while next_sample < sample_times.len() && sample_times[next_sample] <= t + h {
                let ts = sample_times[next_sample];
                if ts == t + h {
                    out.push(y_new.clone());
                } else {
                    out.push(interpolate(&y, &y_new, &k, h, (ts - t) / h));
                }
                next_sample += 1;
            }
            t += h;
            std::mem::swap(&mut y, &mut y_new);
            k.swap(0, 6);
            stats.steps += 1;
        } else {
            stats.rejected += 1;
        }

        let scale = if ratio <= f64::EPSILON {
            MAX_SCALE
        } else {
            (SAFETY * ratio.powf(-0.2)).clamp(MIN_SCALE, MAX_SCALE)
        };
        let scale = if ratio > 1.0 { scale.min(1.0) } else { scale };
        h *= scale;
    }
    Ok((out, stats))
}

/// Fourth-order continuous extension of an accepted step.
fn interpolate(
    y_old: &Array1<C64>,
    y_new: &Array1<C64>,
    k: &[Array1<C64>],
    h: f64,
    theta: f64,
) -> Array1<C64> {
    let dim = y_old.len();
    let mut out = Array1::zeros(dim);
    let th1 = 1.0 - theta;
    for i in 0..dim {
        let ydiff = y_new[i] - y_old[i];
        let bspl = h * k[0][i] - ydiff;
        let r4 = ydiff - h * k[6][i] - bspl;
        let r5 = h
            * (D1 * k[0][i]
                + D3 * k[2][i]
                + D4 * k[3][i]
                + D5 * k[4][i]
                + D6 * k[5][i]
                + D7 * k[6][i]);
        out[i] = y_old[i] + theta * (ydiff + th1 * (bspl + theta * (r4 + th1 * r5)));
    }
    out
}

fn rk4<F>(
    rhs: &mut F,
    t0: f64,
    y0: &Array1<C64>,
    sample_times: &[f64],
    substeps: usize,
) -> Result<(Vec<Array1<C64>>, StepStats), IntegrateError>
where
    F: FnMut(f64, &ArrayView1<C64>, &mut Array1<C64>),
{
    let dim = y0.len();
    let mut stats = StepStats::default();
    let mut out = Vec::with_capacity(sample_times.len());
    let mut t = t0;
    let mut y = y0.clone();
    let mut k1: Array1<C64> = Array1::zeros(dim);
    let mut k2: Array1<C64> = Array1::zeros(dim);
    let mut k3: Array1<C64> = Array1::zeros(dim);
    let mut k4: Array1<C64> = Array1::zeros(dim);
    let mut tmp: Array1<C64> = Array1::zeros(dim);

    for &ts in sample_times {
        if ts == t0 && out.is_empty() {
            out.push(y.clone());
            continue;
        }
        let h = (ts - t) / substeps as f64;
        for step in 0..substeps {
            let tn = t + step as f64 * h;
            rhs(tn, &y.view(), &mut k1);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k1[i];
            }
            rhs(tn + 0.5 * h, &tmp.view(), &mut k2);
            for i in 0..dim {
                tmp[i] = y[i] + 0.5 * h * k2[i];
            }
            rhs(tn + 0.5 * h, &tmp.view(), &mut k3);
            for i in 0..dim {
                tmp[i] = y[i] + h * k3[i];
            }
            rhs(tn + h, &tmp.view(), &mut k4);
            for i in 0..dim {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            stats.steps += 1;
            stats.rhs_evals += 4;
        }
        t = ts;
        out.push(y.clone());
    }
    Ok((out, stats))
}
