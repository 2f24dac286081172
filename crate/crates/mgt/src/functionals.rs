//! The blow-up functional F1(t) = int u_t Psi dx with its companions: the
//! data integrals I_beta, J_beta, the auxiliary functionals G and H, the
//! running nonlinear space-time integral and the integral-identity
//! residual along simulated solutions.

use serde::{Deserialize, Serialize};

use crate::config::{DataShape, ProblemParams};
use crate::mgt_system::{bump, laplacian_radial, FieldState, RadialMesh, StepProbe};
use crate::quadrature::simpson_uniform;
use crate::special_functions::{sphere_measure, EigenfunctionEvaluator};
use crate::{MgtError, Result};

/// Absolute floor used when normalizing functional-scale tolerances.
pub const ABS_FLOOR: f64 = 1e-12;

/// Radial quadrature of f against Psi(t, .):
/// omega_{n-1} e^{-t} * Simpson( f_i Phi(r_i) r_i^{n-1} ).
fn weighted_integral(values: &[f64], weights: &[f64], t: f64, omega: f64, dr: f64) -> f64 {
    let integrand: Vec<f64> = values.iter().zip(weights).map(|(&v, &w)| v * w).collect();
    omega * (-t).exp() * simpson_uniform(&integrand, dr)
}

fn phi_weights(mesh: &RadialMesh, evaluator: &EigenfunctionEvaluator) -> Result<Vec<f64>> {
    (0..mesh.num_nodes())
        .map(|i| {
            let r = mesh.r(i);
            Ok(evaluator.phi(r)? * r.powi(mesh.n as i32 - 1))
        })
        .collect()
}

/// F1(t) = int u_t(t, x) Psi(t, x) dx by composite Simpson on the mesh.
pub fn f1(state: &FieldState, mesh: &RadialMesh, evaluator: &EigenfunctionEvaluator) -> Result<f64> {
    let weights = phi_weights(mesh, evaluator)?;
    Ok(weighted_integral(
        &state.v,
        &weights,
        state.t,
        sphere_measure(mesh.n),
        mesh.dr,
    ))
}

fn data_profiles(shape: &DataShape, params: &ProblemParams, mesh: &RadialMesh) -> [Vec<f64>; 3] {
    let profile = |amplitude: f64| -> Vec<f64> {
        (0..mesh.num_nodes())
            .map(|i| amplitude * bump(mesh.r(i), params.r_support, shape.m))
            .collect()
    };
    [
        profile(shape.amplitude_u0),
        profile(shape.amplitude_u1),
        profile(shape.amplitude_u2),
    ]
}

/// I_beta = int (beta u2 + (beta+1) u1 + u0) Phi dx. Amplitudes exclude
/// epsilon; callers scale.
pub fn i_beta(
    shape: &DataShape,
    params: &ProblemParams,
    mesh: &RadialMesh,
    evaluator: &EigenfunctionEvaluator,
) -> Result<f64> {
    let [u0, u1, u2] = data_profiles(shape, params, mesh);
    let combo: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| params.beta * u2[i] + (params.beta + 1.0) * u1[i] + u0[i])
        .collect();
    let weights = phi_weights(mesh, evaluator)?;
    Ok(weighted_integral(
        &combo,
        &weights,
        0.0,
        sphere_measure(mesh.n),
        mesh.dr,
    ))
}

/// J_beta = int (beta u2 + (beta+1) u1) Phi dx. Amplitudes exclude epsilon.
pub fn j_beta(
    shape: &DataShape,
    params: &ProblemParams,
    mesh: &RadialMesh,
    evaluator: &EigenfunctionEvaluator,
) -> Result<f64> {
    let [_, u1, u2] = data_profiles(shape, params, mesh);
    let combo: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| params.beta * u2[i] + (params.beta + 1.0) * u1[i])
        .collect();
    let weights = phi_weights(mesh, evaluator)?;
    Ok(weighted_integral(
        &combo,
        &weights,
        0.0,
        sphere_measure(mesh.n),
        mesh.dr,
    ))
}

/// int u1 Phi dx and int u2 Phi dx separately (the bound engine's C2
/// wants them with their distinct coefficients).
pub fn data_phi_integrals(
    shape: &DataShape,
    params: &ProblemParams,
    mesh: &RadialMesh,
    evaluator: &EigenfunctionEvaluator,
) -> Result<(f64, f64)> {
    let [_, u1, u2] = data_profiles(shape, params, mesh);
    let weights = phi_weights(mesh, evaluator)?;
    let omega = sphere_measure(mesh.n);
    let int_u1 = weighted_integral(&u1, &weights, 0.0, omega, mesh.dr);
    let int_u2 = weighted_integral(&u2, &weights, 0.0, omega, mesh.dr);
    Ok((int_u1, int_u2))
}

/// Time series of the functionals along a run.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FunctionalTrace {
    pub times: Vec<f64>,
    /// F1(t) samples.
    pub f1: Vec<f64>,
    /// Running value of int_0^t int |u_t|^p Psi dx ds (trapezoid in time).
    pub nl: Vec<f64>,
    /// int (beta u_tt + (beta+1) u_t + u) Psi dx at each sample, with
    /// u_tt reconstructed as Lap u + w from the factorized state.
    pub rhs_eq01: Vec<f64>,
    /// Data integrals, fixed at t = 0 (epsilon excluded).
    pub ibeta: f64,
    pub jbeta: f64,
    pub epsilon: f64,
    pub beta: f64,
}

impl FunctionalTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// H(t) = (beta+1)^{-1} NL(t) + eps (beta+1)^{-1} J_beta, exactly by
    /// construction.
    pub fn h_series(&self) -> Vec<f64> {
        let c = 1.0 / (self.beta + 1.0);
        self.nl
            .iter()
            .map(|&nl| c * nl + self.epsilon * c * self.jbeta)
            .collect()
    }

    /// First derivative of a series by centered differences; second-order
    /// one-sided stencils at the endpoints. Assumes uniform sampling.
    fn derivative(&self, series: &[f64]) -> Result<Vec<f64>> {
        if self.len() < 3 {
            return Err(MgtError::TraceTooShort(
                "need >= 3 points for centered differences".into(),
            ));
        }
        let dt = self.times[1] - self.times[0];
        let n = series.len();
        let mut out = vec![0.0; n];
        out[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt);
        for i in 1..n - 1 {
            out[i] = (series[i + 1] - series[i - 1]) / (2.0 * dt);
        }
        out[n - 1] = (3.0 * series[n - 1] - 4.0 * series[n - 2] + series[n - 3]) / (2.0 * dt);
        Ok(out)
    }

    /// G(t) = F1'(t) + 2 F1(t) - (beta+1)^{-1} NL(t)
    ///        - eps (beta+1)^{-1} J_beta.
    pub fn g_series(&self) -> Result<Vec<f64>> {
        let f1_prime = self.derivative(&self.f1)?;
        let c = 1.0 / (self.beta + 1.0);
        Ok((0..self.len())
            .map(|i| f1_prime[i] + 2.0 * self.f1[i] - c * self.nl[i] - self.epsilon * c * self.jbeta)
            .collect())
    }

    /// Worst (most negative) value of G along the trace.
    pub fn check_g_nonnegative(&self) -> Result<f64> {
        let g = self.g_series()?;
        Ok(g.into_iter().fold(f64::INFINITY, f64::min))
    }

    /// Prefix of the trace with times <= t_end. Centered-difference
    /// series (G, F1') are unreliable across the explosive tail of a
    /// blow-up run; evaluate them on a truncated prefix instead.
    pub fn truncated(&self, t_end: f64) -> FunctionalTrace {
        let k = self.times.partition_point(|&t| t <= t_end);
        FunctionalTrace {
            times: self.times[..k].to_vec(),
            f1: self.f1[..k].to_vec(),
            nl: self.nl[..k].to_vec(),
            rhs_eq01: self.rhs_eq01[..k].to_vec(),
            ibeta: self.ibeta,
            jbeta: self.jbeta,
            epsilon: self.epsilon,
            beta: self.beta,
        }
    }

    /// dNL/dt by centered differences (= int |u_t|^p Psi dx).
    pub fn nl_rate(&self) -> Result<Vec<f64>> {
        self.derivative(&self.nl)
    }

    /// Residual series of the integral identity
    /// NL(t) = int (beta u_tt + (beta+1) u_t + u) Psi dx - eps I_beta,
    /// normalized as |LHS - RHS| / (1 + |RHS|).
    pub fn identity_residuals(&self) -> Vec<f64> {
        self.nl
            .iter()
            .zip(&self.rhs_eq01)
            .map(|(&nl, &int)| {
                let rhs = int - self.epsilon * self.ibeta;
                (nl - rhs).abs() / (1.0 + rhs.abs())
            })
            .collect()
    }

    /// Worst ratio F1(t) / (C2 eps) over sampled t >= 1/2; expected >= 1
    /// up to discretization error.
    pub fn check_initial_lower_bound(&self, c2: f64) -> Result<f64> {
        let floor = c2 * self.epsilon;
        if !(floor > 0.0) {
            return Err(MgtError::InvalidParameter(format!(
                "C2 eps = {floor} must be positive"
            )));
        }
        let mut worst = f64::INFINITY;
        let mut seen = false;
        for (t, f) in self.times.iter().zip(&self.f1) {
            if *t >= 0.5 {
                worst = worst.min(f / floor);
                seen = true;
            }
        }
        if !seen {
            return Err(MgtError::TraceTooShort("trace ends before t = 1/2".into()));
        }
        Ok(worst)
    }
}

/// Residual of the integral identity at one synchronized trace sample,
/// recomputed from the full field state (u_tt = Lap u + w).
pub fn identity_residual_eq01(
    trace: &FunctionalTrace,
    state: &FieldState,
    params: &ProblemParams,
    mesh: &RadialMesh,
    evaluator: &EigenfunctionEvaluator,
) -> Result<f64> {
    let idx = trace
        .times
        .iter()
        .position(|&t| (t - state.t).abs() <= 1e-9 * (1.0 + state.t))
        .ok_or_else(|| {
            MgtError::InvalidParameter(format!(
                "state at t = {} not synchronized with the trace",
                state.t
            ))
        })?;
    let weights = phi_weights(mesh, evaluator)?;
    let lap_u = laplacian_radial(&state.u, mesh);
    let combo: Vec<f64> = (0..mesh.num_nodes())
        .map(|i| {
            let u_tt = lap_u[i] + state.w[i];
            params.beta * u_tt + (params.beta + 1.0) * state.v[i] + state.u[i]
        })
        .collect();
    let int = weighted_integral(&combo, &weights, state.t, sphere_measure(mesh.n), mesh.dr);
    let rhs = int - params.epsilon * trace.ibeta;
    Ok((trace.nl[idx] - rhs).abs() / (1.0 + rhs.abs()))
}

/// Step probe accumulating a [`FunctionalTrace`] every `stride` steps.
pub struct FunctionalProbe {
    params: ProblemParams,
    weights: Vec<f64>,
    omega: f64,
    stride: usize,
    counter: usize,
    p_is_square: bool,
    /// (t, integrand) of the previous NL sample for trapezoid accumulation.
    prev_nl_sample: Option<(f64, f64)>,
    pub trace: FunctionalTrace,
}

impl FunctionalProbe {
    pub fn new(
        params: &ProblemParams,
        shape: &DataShape,
        mesh: &RadialMesh,
        stride: usize,
    ) -> Result<Self> {
        let evaluator = EigenfunctionEvaluator::new(mesh.n)?;
        let weights = phi_weights(mesh, &evaluator)?;
        let ibeta = i_beta(shape, params, mesh, &evaluator)?;
        let jbeta = j_beta(shape, params, mesh, &evaluator)?;
        Ok(FunctionalProbe {
            params: *params,
            weights,
            omega: sphere_measure(mesh.n),
            stride: stride.max(1),
            counter: 0,
            p_is_square: (params.p - 2.0).abs() < 1e-15,
            prev_nl_sample: None,
            trace: FunctionalTrace {
                ibeta,
                jbeta,
                epsilon: params.epsilon,
                beta: params.beta,
                ..FunctionalTrace::default()
            },
        })
    }
}

impl StepProbe for FunctionalProbe {
    fn on_step(&mut self, state: &FieldState, mesh: &RadialMesh) -> Result<()> {
        let take = self.counter % self.stride == 0;
        self.counter += 1;
        if !take {
            return Ok(());
        }
        let f1_val = weighted_integral(&state.v, &self.weights, state.t, self.omega, mesh.dr);

        // integrand of NL at this time: int |u_t|^p Psi dx
        let vp: Vec<f64> = state
            .v
            .iter()
            .map(|&v| if self.p_is_square { v * v } else { v.abs().powf(self.params.p) })
            .collect();
        let nl_integrand = weighted_integral(&vp, &self.weights, state.t, self.omega, mesh.dr);
        let nl_prev = self.trace.nl.last().copied().unwrap_or(0.0);
        let nl_val = match self.prev_nl_sample {
            Some((t_prev, f_prev)) => {
                nl_prev + 0.5 * (state.t - t_prev) * (f_prev + nl_integrand)
            }
            None => 0.0,
        };
        self.prev_nl_sample = Some((state.t, nl_integrand));

        let lap_u = laplacian_radial(&state.u, mesh);
        let combo: Vec<f64> = (0..mesh.num_nodes())
            .map(|i| {
                let u_tt = lap_u[i] + state.w[i];
                self.params.beta * u_tt + (self.params.beta + 1.0) * state.v[i] + state.u[i]
            })
            .collect();
        let rhs = weighted_integral(&combo, &self.weights, state.t, self.omega, mesh.dr);

        self.trace.times.push(state.t);
        self.trace.f1.push(f1_val);
        self.trace.nl.push(nl_val);
        self.trace.rhs_eq01.push(rhs);
        Ok(())
    }
}
