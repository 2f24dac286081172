//! Adaptive embedded Runge-Kutta oracle for the spatially homogeneous
//! reduction beta y''' + y'' = |y'|^p, written as the first-order system
//! (y, y', y''). Dormand-Prince 5(4) pair with PI step-size control;
//! blow-up is reported when the accepted step collapses below 1e-12.

use crate::{MgtError, Result};

/// Step size below which the integration declares blow-up.
pub const STEP_COLLAPSE: f64 = 1e-12;

type Vec3 = [f64; 3];

/// Accepted solution points of the homogeneous oracle.
#[derive(Debug, Clone)]
pub struct OdeSolution {
    pub times: Vec<f64>,
    /// (y, y', y'') at each recorded time.
    pub states: Vec<Vec3>,
    pub blew_up: bool,
    /// Time at which the step collapsed, present iff `blew_up`.
    pub t_blowup: Option<f64>,
}

fn rhs(beta: f64, p: f64, y: &Vec3) -> Vec3 {
    [y[1], y[2], (y[1].abs().powf(p) - y[2]) / beta]
}

// Dormand-Prince 5(4) tableau.
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
// embedded 4th-order weights
const E1: f64 = 5179.0 / 57600.0;
const E3: f64 = 7571.0 / 16695.0;
const E4: f64 = 393.0 / 640.0;
const E5: f64 = -92097.0 / 339200.0;
const E6: f64 = 187.0 / 2100.0;
const E7: f64 = 1.0 / 40.0;

struct DpStep {
    y_new: Vec3,
    err: f64,
}

fn dp_step(beta: f64, p: f64, y: &Vec3, h: f64, k1: &Vec3, tol: f64) -> DpStep {
    let stage = |coeffs: &[(f64, &Vec3)]| -> Vec3 {
        let mut out = *y;
        for &(c, k) in coeffs {
            for i in 0..3 {
                out[i] += h * c * k[i];
            }
        }
        out
    };
    let k2 = rhs(beta, p, &stage(&[(A21, k1)]));
    let k3 = rhs(beta, p, &stage(&[(A31, k1), (A32, &k2)]));
    let k4 = rhs(beta, p, &stage(&[(A41, k1), (A42, &k2), (A43, &k3)]));
    let k5 = rhs(beta, p, &stage(&[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
    let k6 = rhs(
        beta,
        p,
        &stage(&[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
    );
    let mut y5 = *y;
    for i in 0..3 {
        y5[i] += h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
    }
    let k7 = rhs(beta, p, &y5);
    let mut err = 0.0;
    for i in 0..3 {
        let y4_i = y[i]
            + h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = tol * (1.0 + y[i].abs().max(y5[i].abs()));
        let e = (y5[i] - y4_i) / sc;
        err += e * e;
    }
    DpStep {
        y_new: y5,
        err: (err / 3.0).sqrt(),
    }
}

fn integrate(
    beta: f64,
    p: f64,
    y1: f64,
    y2: f64,
    t_end: f64,
    tol: f64,
    samples: Option<&[f64]>,
) -> Result<OdeSolution> {
    if !(tol > 0.0) {
        return Err(MgtError::InvalidParameter(format!("tol = {tol} <= 0")));
    }
    if !(beta > 0.0) || !(p > 1.0) {
        return Err(MgtError::InvalidParameter(format!(
            "ode_oracle: beta = {beta}, p = {p}"
        )));
    }
    let mut t = 0.0;
    let mut y: Vec3 = [0.0, y1, y2];
    let mut h: f64 = (t_end * 1e-4).min(1e-3).max(1e-10);
    let mut err_prev: f64 = 1.0;

    let mut sol = OdeSolution {
        times: Vec::new(),
        states: Vec::new(),
        blew_up: false,
        t_blowup: None,
    };
    let mut sample_idx = 0usize;
    let record_all = samples.is_none();
    if record_all {
        sol.times.push(t);
        sol.states.push(y);
    } else if let Some(s) = samples {
        while sample_idx < s.len() && s[sample_idx] <= t + 1e-300 {
            sol.times.push(s[sample_idx]);
            sol.states.push(y);
            sample_idx += 1;
        }
    }

    while t < t_end - 1e-14 {
        let mut h_try = h.min(t_end - t);
        // clamp to the next requested sample
        if let Some(s) = samples {
            if sample_idx < s.len() && t + h_try > s[sample_idx] {
                h_try = s[sample_idx] - t;
            }
        }
        if h_try < STEP_COLLAPSE || !y.iter().all(|x| x.is_finite()) {
            sol.blew_up = true;
            sol.t_blowup = Some(t);
            return Ok(sol);
        }
        let k1 = rhs(beta, p, &y);
        let trial = dp_step(beta, p, &y, h_try, &k1, tol);
        if trial.err <= 1.0 && trial.y_new.iter().all(|x| x.is_finite()) {
            t += h_try;
            y = trial.y_new;
            if record_all {
                sol.times.push(t);
                sol.states.push(y);
            } else if let Some(s) = samples {
                while sample_idx < s.len() && s[sample_idx] <= t + 1e-12 * (1.0 + t) {
                    sol.times.push(s[sample_idx]);
                    sol.states.push(y);
                    sample_idx += 1;
                }
            }
            // PI controller (Gustafsson-style exponents)
            let fac = 0.9 * trial.err.max(1e-10).powf(-0.17) * err_prev.powf(0.04);
            err_prev = trial.err.max(1e-10);
            h = h_try * fac.clamp(0.2, 10.0);
        } else {
            let fac = 0.9 * trial.err.max(1e-10).powf(-0.2);
            h = h_try * fac.clamp(0.1, 0.9);
            if h < STEP_COLLAPSE {
                sol.blew_up = true;
                sol.t_blowup = Some(t);
                return Ok(sol);
            }
        }
    }
    Ok(sol)
}

/// Integrates beta y''' + y'' = |y'|^p from (y, y', y'')(0) = (0, y1, y2)
/// to `t_end` (or blow-up), recording every accepted step.
pub fn ode_oracle(beta: f64, p: f64, y1: f64, y2: f64, t_end: f64, tol: f64) -> Result<OdeSolution> {
    integrate(beta, p, y1, y2, t_end, tol, None)
}

/// Same integration, but records the solution exactly at the requested
/// increasing `samples` (steps are clamped to land on them).
pub fn ode_oracle_sampled(
    beta: f64,
    p: f64,
    y1: f64,
    y2: f64,
    samples: &[f64],
    tol: f64,
) -> Result<OdeSolution> {
    let t_end = samples.last().copied().unwrap_or(0.0);
    integrate(beta, p, y1, y2, t_end, tol, Some(samples))
}
