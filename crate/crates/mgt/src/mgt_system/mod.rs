//! Radial method-of-lines solver for the conservative MGT equation with
//! derivative-type nonlinearity, written as the factorized first-order
//! system
//!
//! ```text
//! u_t = v,   v_t = Lap u + w,   w_t = (|v|^p - w) / beta,
//! ```
//!
//! where w carries u_tt - Lap u. Classical RK4 in time with dt = cfl * dr,
//! second-order centered differences in space, symmetric-limit treatment
//! of the r = 0 singularity and a hard-zero outer boundary backed by the
//! support-cone invariant.

pub mod ode;

pub use ode::{ode_oracle, ode_oracle_sampled, OdeSolution};

use serde::{Deserialize, Serialize};

use crate::config::{DataShape, ProblemParams, SolverConfig};
use crate::quadrature::trapezoid_uniform;
use crate::{MgtError, Result};

/// Uniform radial grid with nodes r_i = i * dr, i = 0..=num_cells.
#[derive(Debug, Clone)]
pub struct RadialMesh {
    pub n: u32,
    pub num_cells: usize,
    pub dr: f64,
}

impl RadialMesh {
    pub fn new(n: u32, r_max: f64, num_cells: usize) -> Result<Self> {
        if n < 1 || num_cells < 2 || !(r_max > 0.0) {
            return Err(MgtError::InvalidParameter(format!(
                "bad mesh: n = {n}, r_max = {r_max}, num_cells = {num_cells}"
            )));
        }
        Ok(RadialMesh {
            n,
            num_cells,
            dr: r_max / num_cells as f64,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_cells + 1
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr
    }

    pub fn r_max(&self) -> f64 {
        self.num_cells as f64 * self.dr
    }
}

/// Evolution state of the factorized system at a time t.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub w: Vec<f64>,
}

impl FieldState {
    pub fn zero(mesh: &RadialMesh) -> Self {
        let n = mesh.num_nodes();
        FieldState {
            t: 0.0,
            u: vec![0.0; n],
            v: vec![0.0; n],
            w: vec![0.0; n],
        }
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
            && self.w.iter().all(|x| x.is_finite())
    }
}

/// Outcome of a single evolution run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    BlewUp,
    Survived,
}

/// Per-run lifespan outcome.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LifespanRecord {
    pub epsilon: f64,
    pub status: RunStatus,
    /// Detection time, present iff the run blew up; localized to within
    /// dt_min by terminal-step bisection, reported without extrapolation.
    pub t_detect: Option<f64>,
    /// Sampled (t, sup |v|) history.
    pub sup_norm_history: Vec<(f64, f64)>,
    pub resolution: usize,
    /// Theoretical lifespan upper bound, when a bound bundle supplied one.
    pub t_bound_theory: Option<f64>,
}

/// Source term driving w_t = (S - w) / beta.
#[derive(Clone, Copy)]
pub enum SourceTerm<'a> {
    /// S = |v|^p, the semilinear problem.
    PowerLaw,
    /// S = 0, the linear MGT equation.
    Zero,
    /// S = f(t, r), a prescribed forcing replacing |v|^p.
    Prescribed(&'a dyn Fn(f64, f64) -> f64),
}

/// Run-mode switches for `step`/`evolve`.
#[derive(Clone, Copy)]
pub struct EvolveOptions<'a> {
    pub source: SourceTerm<'a>,
    /// Spatially homogeneous mode: the Laplacian (and the support-cone
    /// check) is switched off; the PDE reduces to the ODE
    /// beta y''' + y'' = |y'|^p at every node.
    pub homogeneous: bool,
}

impl Default for EvolveOptions<'static> {
    fn default() -> Self {
        EvolveOptions {
            source: SourceTerm::PowerLaw,
            homogeneous: false,
        }
    }
}

/// Step-probe callback invoked at every accepted step (including t = 0).
pub trait StepProbe {
    fn on_step(&mut self, state: &FieldState, mesh: &RadialMesh) -> Result<()>;
}

/// Probe storing every `stride`-th state; uniform effective dt as long as
/// the run itself uses a fixed step.
pub struct StateHistory {
    pub stride: usize,
    pub states: Vec<FieldState>,
    counter: usize,
}

impl StateHistory {
    pub fn new(stride: usize) -> Self {
        StateHistory {
            stride: stride.max(1),
            states: Vec::new(),
            counter: 0,
        }
    }
}

impl StepProbe for StateHistory {
    fn on_step(&mut self, state: &FieldState, _mesh: &RadialMesh) -> Result<()> {
        if self.counter % self.stride == 0 {
            self.states.push(state.clone());
        }
        self.counter += 1;
        Ok(())
    }
}

/// The compactly supported bump profile (1 - r^2/R^2)_+^m.
pub fn bump(r: f64, r_support: f64, m: u32) -> f64 {
    let s = 1.0 - (r / r_support).powi(2);
    if s <= 0.0 {
        0.0
    } else {
        s.powi(m as i32)
    }
}

/// Builds the t = 0 state: u = eps A0 bump, v = eps A1 bump,
/// w = eps (A2 bump - Lap(A0 bump)) with the discrete radial Laplacian.
pub fn make_initial_data(
    params: &ProblemParams,
    shape: &DataShape,
    mesh: &RadialMesh,
) -> Result<FieldState> {
    if params.r_support / mesh.dr < 16.0 {
        return Err(MgtError::Config(format!(
            "mesh too coarse: R = {} resolved by {:.1} cells, need >= 16",
            params.r_support,
            params.r_support / mesh.dr
        )));
    }
    let eps = params.epsilon;
    let profile = |amplitude: f64| -> Vec<f64> {
        (0..mesh.num_nodes())
            .map(|i| amplitude * bump(mesh.r(i), params.r_support, shape.m))
            .collect()
    };
    let u0 = profile(shape.amplitude_u0);
    let u1 = profile(shape.amplitude_u1);
    let u2 = profile(shape.amplitude_u2);
    let lap_u0 = laplacian_radial(&u0, mesh);
    let n = mesh.num_nodes();
    let mut state = FieldState {
        t: 0.0,
        u: vec![0.0; n],
        v: vec![0.0; n],
        w: vec![0.0; n],
    };
    for i in 0..n {
        state.u[i] = eps * u0[i];
        state.v[i] = eps * u1[i];
        state.w[i] = eps * (u2[i] - lap_u0[i]);
    }
    Ok(state)
}

/// Discrete radial Laplacian f'' + (n-1)/r f'. At r = 0 the symmetric
/// limit n f''(0) is used; the outermost node is pinned to zero (the
/// support cone keeps fields away from it).
pub fn laplacian_radial(field: &[f64], mesh: &RadialMesh) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    laplacian_radial_into(field, mesh, &mut out);
    out
}

fn laplacian_radial_into(field: &[f64], mesh: &RadialMesh, out: &mut [f64]) {
    let n = field.len();
    debug_assert_eq!(n, mesh.num_nodes());
    let dr2 = mesh.dr * mesh.dr;
    let dim = mesh.n as f64;
    // r = 0: symmetric data gives Lap f = n f''(0) = 2n (f_1 - f_0)/dr^2.
    out[0] = dim * 2.0 * (field[1] - field[0]) / dr2;
    for i in 1..n - 1 {
        let second = (field[i + 1] - 2.0 * field[i] + field[i - 1]) / dr2;
        let first = (field[i + 1] - field[i - 1]) / (2.0 * mesh.dr);
        out[i] = second + (dim - 1.0) / mesh.r(i) * first;
    }
    out[n - 1] = 0.0;
}

fn source_eval(source: &SourceTerm, t: f64, r: f64, v: f64, p: f64, p_is_square: bool) -> f64 {
    match source {
        SourceTerm::PowerLaw => {
            if p_is_square {
                v * v
            } else {
                v.abs().powf(p)
            }
        }
        SourceTerm::Zero => 0.0,
        SourceTerm::Prescribed(f) => f(t, r),
    }
}

struct Rhs<'a> {
    mesh: &'a RadialMesh,
    beta: f64,
    p: f64,
    p_is_square: bool,
    opts: EvolveOptions<'a>,
    lap: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(mesh: &'a RadialMesh, params: &ProblemParams, opts: EvolveOptions<'a>) -> Self {
        Rhs {
            mesh,
            beta: params.beta,
            p: params.p,
            p_is_square: (params.p - 2.0).abs() < 1e-15,
            opts,
            lap: vec![0.0; mesh.num_nodes()],
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn eval(
        &mut self,
        t: f64,
        u: &[f64],
        v: &[f64],
        w: &[f64],
        du: &mut [f64],
        dv: &mut [f64],
        dw: &mut [f64],
    ) {
        let n = u.len();
        if self.opts.homogeneous {
            for i in 0..n {
                du[i] = v[i];
                dv[i] = w[i];
            }
        } else {
            laplacian_radial_into(u, self.mesh, &mut self.lap);
            for i in 0..n {
                du[i] = v[i];
                dv[i] = self.lap[i] + w[i];
            }
        }
        for i in 0..n {
            let s = source_eval(
                &self.opts.source,
                t,
                self.mesh.r(i),
                v[i],
                self.p,
                self.p_is_square,
            );
            dw[i] = (s - w[i]) / self.beta;
        }
    }
}

/// One classical 4-stage Runge-Kutta step. Nonfinite output is the
/// caller's blow-up signal, not an error.
pub fn step(
    state: &FieldState,
    dt: f64,
    params: &ProblemParams,
    mesh: &RadialMesh,
    opts: EvolveOptions,
) -> FieldState {
    let mut rhs = Rhs::new(mesh, params, opts);
    step_with(state, dt, &mut rhs)
}

fn step_with(state: &FieldState, dt: f64, rhs: &mut Rhs) -> FieldState {
    let n = state.u.len();
    let zeros = || vec![0.0; n];
    let (mut k1u, mut k1v, mut k1w) = (zeros(), zeros(), zeros());
    let (mut k2u, mut k2v, mut k2w) = (zeros(), zeros(), zeros());
    let (mut k3u, mut k3v, mut k3w) = (zeros(), zeros(), zeros());
    let (mut k4u, mut k4v, mut k4w) = (zeros(), zeros(), zeros());
    let (mut su, mut sv, mut sw) = (zeros(), zeros(), zeros());

    let t = state.t;
    rhs.eval(t, &state.u, &state.v, &state.w, &mut k1u, &mut k1v, &mut k1w);

    let half = 0.5 * dt;
    for i in 0..n {
        su[i] = state.u[i] + half * k1u[i];
        sv[i] = state.v[i] + half * k1v[i];
        sw[i] = state.w[i] + half * k1w[i];
    }
    rhs.eval(t + half, &su, &sv, &sw, &mut k2u, &mut k2v, &mut k2w);

    for i in 0..n {
        su[i] = state.u[i] + half * k2u[i];
        sv[i] = state.v[i] + half * k2v[i];
        sw[i] = state.w[i] + half * k2w[i];
    }
    rhs.eval(t + half, &su, &sv, &sw, &mut k3u, &mut k3v, &mut k3w);

    for i in 0..n {
        su[i] = state.u[i] + dt * k3u[i];
        sv[i] = state.v[i] + dt * k3v[i];
        sw[i] = state.w[i] + dt * k3w[i];
    }
    rhs.eval(t + dt, &su, &sv, &sw, &mut k4u, &mut k4v, &mut k4w);

    let sixth = dt / 6.0;
    let mut next = FieldState {
        t: t + dt,
        u: zeros(),
        v: zeros(),
        w: zeros(),
    };
    for i in 0..n {
        next.u[i] = state.u[i] + sixth * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
        next.v[i] = state.v[i] + sixth * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        next.w[i] = state.w[i] + sixth * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i]);
    }
    next
}

/// Relative tolerance of the support-containment invariant: fields beyond
/// the cone must stay below 1e-10 of their sup norms.
pub const SUPPORT_REL_TOL: f64 = 1e-10;

fn check_support(state: &FieldState, mesh: &RadialMesh, r_support: f64) -> Result<()> {
    // The numerical front outruns the physical cone: the reach of the
    // centered stencil grows like e/2 cells per unit time regardless of
    // cfl, so tails up to ~1.4 t past the support radius are discretization
    // artifacts, not containment failures. Check beyond 1.5 t plus a fixed
    // stencil offset; when the mesh is not wide enough to expose that
    // region the pre-run cone validation is the only guard.
    let cone = r_support + 1.5 * state.t + 10.0 * mesh.dr;
    if cone >= mesh.r_max() {
        return Ok(());
    }
    let i_cut = (cone / mesh.dr).ceil() as usize + 1;
    if i_cut >= mesh.num_nodes() {
        return Ok(());
    }
    let sup = |f: &[f64]| f.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let (su, sv, sw) = (sup(&state.u), sup(&state.v), sup(&state.w));
    for i in i_cut..mesh.num_nodes() {
        if state.u[i].abs() > SUPPORT_REL_TOL * su
            || state.v[i].abs() > SUPPORT_REL_TOL * sv
            || state.w[i].abs() > SUPPORT_REL_TOL * sw
        {
            return Err(MgtError::ConeViolation {
                t: state.t,
                needed_r_max: cone,
                r_max: mesh.r(i),
            });
        }
    }
    Ok(())
}

fn triggered(state: &FieldState, threshold: f64) -> bool {
    !state.is_finite() || state.sup_v() > threshold
}

/// Advances the state with dt = cfl * dr until t_max, a sup-norm trigger
/// or nonfinite values. Probes run at every accepted step; on trigger the
/// final step is bisected down to dt_min to localize t_detect.
pub fn evolve(
    initial: FieldState,
    params: &ProblemParams,
    solver: &SolverConfig,
    mesh: &RadialMesh,
    opts: EvolveOptions,
    probes: &mut [&mut dyn StepProbe],
) -> Result<LifespanRecord> {
    if !opts.homogeneous {
        solver.validate(params.r_support)?;
    }
    let dt = solver.cfl * mesh.dr;
    let total_steps = (solver.t_max / dt).ceil() as usize;
    let history_stride = (total_steps / 1024).max(1);

    let mut rhs = Rhs::new(mesh, params, opts);
    let mut state = initial;
    let mut history: Vec<(f64, f64)> = Vec::new();
    let mut step_index = 0usize;

    let record = |state: &FieldState, history: &mut Vec<(f64, f64)>, idx: usize| {
        if idx % history_stride == 0 {
            history.push((state.t, state.sup_v()));
        }
    };

    for probe in probes.iter_mut() {
        probe.on_step(&state, mesh)?;
    }
    record(&state, &mut history, step_index);

    if triggered(&state, solver.blowup_threshold) {
        return Ok(LifespanRecord {
            epsilon: params.epsilon,
            status: RunStatus::BlewUp,
            t_detect: Some(state.t),
            sup_norm_history: history,
            resolution: mesh.num_cells,
            t_bound_theory: None,
        });
    }

    while state.t < solver.t_max - 1e-12 {
        let dt_now = dt.min(solver.t_max - state.t);
        let next = step_with(&state, dt_now, &mut rhs);
        step_index += 1;

        if triggered(&next, solver.blowup_threshold) {
            // Bisect [state.t, state.t + dt_now] down to dt_min.
            let mut lo = 0.0;
            let mut hi = dt_now;
            while hi - lo > solver.dt_min {
                let mid = 0.5 * (lo + hi);
                let probe_state = step_with(&state, mid, &mut rhs);
                if triggered(&probe_state, solver.blowup_threshold) {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            let t_detect = state.t + hi;
            history.push((t_detect, f64::INFINITY));
            return Ok(LifespanRecord {
                epsilon: params.epsilon,
                status: RunStatus::BlewUp,
                t_detect: Some(t_detect),
                sup_norm_history: history,
                resolution: mesh.num_cells,
                t_bound_theory: None,
            });
        }

        state = next;
        if !opts.homogeneous {
            check_support(&state, mesh, params.r_support)?;
        }
        for probe in probes.iter_mut() {
            probe.on_step(&state, mesh)?;
        }
        record(&state, &mut history, step_index);
    }

    Ok(LifespanRecord {
        epsilon: params.epsilon,
        status: RunStatus::Survived,
        t_detect: None,
        sup_norm_history: history,
        resolution: mesh.num_cells,
        t_bound_theory: None,
    })
}

/// Exact solution e^{-t/beta} g(r) of the linear MGT equation for the
/// compatible data (u, u_t, u_tt)(0) = (g, -g/beta, g/beta^2).
pub fn manufactured_linear_solution<G: Fn(f64) -> f64>(g: G, beta: f64, t: f64, r: f64) -> f64 {
    (-t / beta).exp() * g(r)
}

/// Relative residual, at a probe node and mid-trace time, of the memory
/// formulation u_tt - Lap u = e^{-t/beta} w(0, r)
/// + (1/beta) int_0^t e^{(tau-t)/beta} |u_t|^p dtau (the last term only in
/// nonlinear runs). The trace must have uniform dt and >= 8 steps.
pub fn wave_memory_residual(
    states: &[FieldState],
    params: &ProblemParams,
    mesh: &RadialMesh,
    nonlinear: bool,
) -> Result<f64> {
    if states.len() < 9 {
        return Err(MgtError::TraceTooShort(format!(
            "wave_memory_residual needs >= 8 steps, got {}",
            states.len().saturating_sub(1)
        )));
    }
    let dt = states[1].t - states[0].t;
    for pair in states.windows(2) {
        if ((pair[1].t - pair[0].t) - dt).abs() > 1e-9 * dt {
            return Err(MgtError::TraceTooShort(
                "wave_memory_residual needs a uniform-dt trace".into(),
            ));
        }
    }
    let node = ((params.r_support / 2.0) / mesh.dr).round() as usize;
    let k = states.len() / 2;
    let t_k = states[k].t;

    let u_tt = (states[k + 1].u[node] - 2.0 * states[k].u[node] + states[k - 1].u[node])
        / (dt * dt);
    let lap_u = laplacian_radial(&states[k].u, mesh)[node];
    let lhs = u_tt - lap_u;

    // w at t = 0 carries eps (u2 - Lap u0) exactly by construction.
    let forcing = (-t_k / params.beta).exp() * states[0].w[node];
    let memory = if nonlinear {
        let integrand: Vec<f64> = states[..=k]
            .iter()
            .map(|s| ((s.t - t_k) / params.beta).exp() * s.v[node].abs().powf(params.p))
            .collect();
        trapezoid_uniform(&integrand, dt) / params.beta
    } else {
        0.0
    };
    let rhs = forcing + memory;
    Ok((lhs - rhs).abs() / (1.0 + rhs.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{DataShape, ProblemParams, SolverConfig};
    use crate::special_functions::phi;

    fn default_params(eps: f64) -> ProblemParams {
        ProblemParams::new(1, 2.0, 1.0, 1.0, eps).unwrap()
    }

    #[test]
    fn laplacian_of_constant_vanishes_inside() {
        let mesh = RadialMesh::new(3, 4.0, 128).unwrap();
        let field = vec![1.5; mesh.num_nodes()];
        let lap = laplacian_radial(&field, &mesh);
        // outermost node is pinned to zero; node just inside sees the pin
        for (i, &l) in lap.iter().enumerate().take(mesh.num_nodes() - 2) {
            assert!(l.abs() < 1e-12, "node {i}: {l}");
        }
    }

    #[test]
    fn laplacian_of_r_squared_is_2n() {
        for n in 1..=3u32 {
            let mesh = RadialMesh::new(n, 4.0, 256).unwrap();
            // window r^2 away from the boundary
            let field: Vec<f64> = (0..mesh.num_nodes())
                .map(|i| {
                    let r = mesh.r(i);
                    if r < 2.0 {
                        r * r
                    } else {
                        0.0
                    }
                })
                .collect();
            let lap = laplacian_radial(&field, &mesh);
            let expected = 2.0 * n as f64;
            for i in 0..(1.5 / mesh.dr) as usize {
                assert!(
                    (lap[i] - expected).abs() < 1e-8,
                    "n={n} i={i}: {} vs {expected}",
                    lap[i]
                );
            }
        }
    }

    #[test]
    fn laplacian_of_phi_is_phi() {
        // Delta Phi = Phi, windowed away from the boundary.
        for n in 1..=3u32 {
            let mesh = RadialMesh::new(n, 8.0, 2048).unwrap();
            let field: Vec<f64> = (0..mesh.num_nodes())
                .map(|i| {
                    let r = mesh.r(i);
                    if r < 4.0 {
                        phi(n, r).unwrap()
                    } else {
                        0.0
                    }
                })
                .collect();
            let lap = laplacian_radial(&field, &mesh);
            for i in 0..(2.0 / mesh.dr) as usize {
                let rel = (lap[i] - field[i]).abs() / field[i];
                assert!(rel < 1e-4, "n={n} i={i}: rel {rel}");
            }
        }
    }

    #[test]
    fn initial_data_properties() {
        let params = default_params(2.0);
        let shape = DataShape::default();
        let mesh = RadialMesh::new(1, 6.0, 512).unwrap();
        let state = make_initial_data(&params, &shape, &mesh).unwrap();
        assert_eq!(state.t, 0.0);
        // u1-only bump: v(0) = eps at the center, u identically zero
        assert!((state.v[0] - 2.0).abs() < 1e-14);
        assert!(state.u.iter().all(|&x| x == 0.0));
        assert!(state.v.iter().all(|&x| x >= 0.0));

        // all amplitudes zero is rejected by DataShape::validate, but a
        // raw zero shape still produces the zero state
        let zero_shape = DataShape {
            amplitude_u0: 0.0,
            amplitude_u1: 0.0,
            amplitude_u2: 0.0,
            m: 3,
        };
        let z = make_initial_data(&params, &zero_shape, &mesh).unwrap();
        assert!(z.u.iter().chain(&z.v).chain(&z.w).all(|&x| x == 0.0));

        // too-coarse mesh rejected
        let coarse = RadialMesh::new(1, 6.0, 32).unwrap();
        assert!(make_initial_data(&params, &shape, &coarse).is_err());
    }

    #[test]
    fn zero_state_stays_zero() {
        let params = default_params(1.0);
        let mesh = RadialMesh::new(1, 6.0, 128).unwrap();
        let state = FieldState::zero(&mesh);
        let next = step(&state, 0.01, &params, &mesh, EvolveOptions::default());
        assert!(next.u.iter().chain(&next.v).chain(&next.w).all(|&x| x == 0.0));
    }

    #[test]
    fn linear_mode_decays_exactly() {
        // data (g, -g/beta, g/beta^2 - Lap g) evolves as e^{-t/beta} g.
        let beta = 1.3;
        let params = ProblemParams::new(1, 2.0, beta, 1.0, 1.0).unwrap();
        let mesh = RadialMesh::new(1, 6.0, 512).unwrap();
        let g: Vec<f64> = (0..mesh.num_nodes()).map(|i| bump(mesh.r(i), 1.0, 4)).collect();
        let lap_g = laplacian_radial(&g, &mesh);
        let mut state = FieldState::zero(&mesh);
        for i in 0..mesh.num_nodes() {
            state.u[i] = g[i];
            state.v[i] = -g[i] / beta;
            state.w[i] = g[i] / (beta * beta) - lap_g[i];
        }
        let opts = EvolveOptions {
            source: SourceTerm::Zero,
            homogeneous: false,
        };
        let dt = 0.4 * mesh.dr;
        let t_end = 1.0;
        let steps = (t_end / dt).round() as usize;
        let dt = t_end / steps as f64;
        for _ in 0..steps {
            state = step(&state, dt, &params, &mesh, opts);
        }
        let decay = (-t_end / beta).exp();
        let err = state
            .u
            .iter()
            .zip(&g)
            .map(|(&num, &exact)| (num - decay * exact).abs())
            .fold(0.0f64, f64::max);
        assert!(err < 2e-4, "max error {err}");
    }

    #[test]
    fn evolve_zero_epsilon_survives() {
        // identically zero data survives to t_max with zero fields
        let params = default_params(1e-300); // epsilon must be > 0; fields ~ 0
        let shape = DataShape::default();
        let solver = SolverConfig {
            r_max: 4.0,
            num_cells: 256,
            cfl: 0.4,
            t_max: 2.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        };
        let mesh = RadialMesh::new(1, solver.r_max, solver.num_cells).unwrap();
        let initial = make_initial_data(&params, &shape, &mesh).unwrap();
        let record = evolve(initial, &params, &solver, &mesh, EvolveOptions::default(), &mut [])
            .unwrap();
        assert_eq!(record.status, RunStatus::Survived);
        assert!(record.t_detect.is_none());
    }

    #[test]
    fn blowup_time_decreases_with_amplitude() {
        let solver = SolverConfig {
            r_max: 6.0,
            num_cells: 512,
            cfl: 0.4,
            t_max: 4.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        };
        let mesh = RadialMesh::new(1, solver.r_max, solver.num_cells).unwrap();
        let shape = DataShape::default();
        let mut detects = Vec::new();
        for &eps in &[5.0, 10.0, 20.0] {
            let params = default_params(eps);
            let initial = make_initial_data(&params, &shape, &mesh).unwrap();
            let record =
                evolve(initial, &params, &solver, &mesh, EvolveOptions::default(), &mut [])
                    .unwrap();
            assert_eq!(record.status, RunStatus::BlewUp, "eps = {eps}");
            detects.push(record.t_detect.unwrap());
        }
        assert!(detects[0] > detects[1] && detects[1] > detects[2], "{detects:?}");
    }

    #[test]
    fn evolve_is_deterministic() {
        let solver = SolverConfig {
            r_max: 6.0,
            num_cells: 256,
            cfl: 0.4,
            t_max: 3.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        };
        let mesh = RadialMesh::new(1, solver.r_max, solver.num_cells).unwrap();
        let shape = DataShape::default();
        let params = default_params(8.0);
        let run = || {
            let initial = make_initial_data(&params, &shape, &mesh).unwrap();
            evolve(initial, &params, &solver, &mesh, EvolveOptions::default(), &mut []).unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(a.t_detect.map(f64::to_bits), b.t_detect.map(f64::to_bits));
        assert_eq!(a.sup_norm_history.len(), b.sup_norm_history.len());
        for (x, y) in a.sup_norm_history.iter().zip(&b.sup_norm_history) {
            assert_eq!(x.0.to_bits(), y.0.to_bits());
            assert_eq!(x.1.to_bits(), y.1.to_bits());
        }
    }

    #[test]
    fn manufactured_solution_values() {
        let g = |r: f64| bump(r, 1.0, 3);
        let beta = 2.0;
        assert_eq!(manufactured_linear_solution(g, beta, 0.0, 0.3), g(0.3));
        let at_beta = manufactured_linear_solution(g, beta, beta, 0.3);
        assert!((at_beta - g(0.3) / 1f64.exp()).abs() < 1e-15);
        let ratio = manufactured_linear_solution(g, beta, 1.1, 0.3)
            / manufactured_linear_solution(g, beta, 1.0, 0.3);
        assert!((ratio - (-0.1f64 / beta).exp()).abs() < 1e-14);
    }

    #[test]
    fn wave_memory_residual_modes() {
        let params = default_params(1.0);
        let mesh = RadialMesh::new(1, 5.0, 400).unwrap();

        // zero trace -> zero residual
        let zeros: Vec<FieldState> = (0..12)
            .map(|k| {
                let mut s = FieldState::zero(&mesh);
                s.t = 0.01 * k as f64;
                s
            })
            .collect();
        assert_eq!(wave_memory_residual(&zeros, &params, &mesh, true).unwrap(), 0.0);

        // too-short trace rejected
        assert!(wave_memory_residual(&zeros[..5], &params, &mesh, true).is_err());

        // linear run with u2 = Lap u0 (w(0) = 0): pure wave residual
        let shape = DataShape {
            amplitude_u0: 1.0,
            amplitude_u1: 1.0,
            amplitude_u2: 0.0,
            m: 4,
        };
        let solver = SolverConfig {
            r_max: 5.0,
            num_cells: 400,
            cfl: 0.4,
            t_max: 1.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        };
        let mut initial = make_initial_data(&params, &shape, &mesh).unwrap();
        // overwrite w with zero: this is exactly u2 = Lap u0
        for w in initial.w.iter_mut() {
            *w = 0.0;
        }
        let mut hist = StateHistory::new(1);
        let opts = EvolveOptions {
            source: SourceTerm::Zero,
            homogeneous: false,
        };
        let mut probes: [&mut dyn StepProbe; 1] = [&mut hist];
        evolve(initial, &params, &solver, &mesh, opts, &mut probes).unwrap();
        let res = wave_memory_residual(&hist.states, &params, &mesh, false).unwrap();
        assert!(res < 5e-2, "pure wave residual {res}");
    }

    #[test]
    fn nonlinear_memory_residual_decreases_under_refinement() {
        let run = |cells: usize| {
            let params = default_params(1.0);
            let solver = SolverConfig {
                r_max: 4.0,
                num_cells: cells,
                cfl: 0.4,
                t_max: 1.0,
                blowup_threshold: 1e8,
                dt_min: 1e-10,
            };
            let mesh = RadialMesh::new(1, solver.r_max, solver.num_cells).unwrap();
            let initial = make_initial_data(&params, &DataShape::default(), &mesh).unwrap();
            let mut hist = StateHistory::new(1);
            let mut probes: [&mut dyn StepProbe; 1] = [&mut hist];
            evolve(
                initial,
                &params,
                &solver,
                &mesh,
                EvolveOptions::default(),
                &mut probes,
            )
            .unwrap();
            wave_memory_residual(&hist.states, &params, &mesh, true).unwrap()
        };
        let coarse = run(200);
        let fine = run(400);
        assert!(coarse < 1e-2, "coarse residual {coarse}");
        assert!(fine < coarse, "fine {fine} vs coarse {coarse}");
    }
}
