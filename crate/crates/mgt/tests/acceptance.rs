//! Acceptance gate: one test per release criterion, each printing a
//! single pass/fail line (visible with `cargo test -- --nocapture`).

use mgtlab::bound_engine::{
    critical_bundle, first_lower_bound_constants, l_partial, lifespan_bound_subcritical, slicing,
    subcritical_bundle, subcritical_closed_forms, subcritical_exponent, subcritical_exponent_alt,
    verify_slicing_inequality, critical_sigma,
};
use mgtlab::config::{DataShape, ProblemParams, RunConfig, SolverConfig, SweepConfig};
use mgtlab::experiments::{compare_bounds, fit_subcritical, run_sweep, SweepPlan};
use mgtlab::functionals::{data_phi_integrals, FunctionalProbe};
use mgtlab::mgt_system::{
    bump, evolve, make_initial_data, ode_oracle, ode_oracle_sampled,
    EvolveOptions, FieldState, RadialMesh, SourceTerm, StepProbe,
};
use mgtlab::special_functions::{
    adjoint_residual, estimate_c1, phi, sphere_measure, EigenfunctionEvaluator,
};

fn pass(n: u32, what: &str) {
    println!("[PASS] criterion {n}: {what}");
}

struct LastState(Option<FieldState>);

impl StepProbe for LastState {
    fn on_step(&mut self, state: &FieldState, _mesh: &RadialMesh) -> mgtlab::Result<()> {
        self.0 = Some(state.clone());
        Ok(())
    }
}

#[test]
fn criterion_1_eigenfunction_suite() {
    // Delta Phi = Phi by centered differences, relative 1e-6
    let h = 1e-4;
    for n in 1..=3u32 {
        for &r in &[0.5, 1.0, 2.0, 5.0] {
            let fp = phi(n, r + h).unwrap();
            let f0 = phi(n, r).unwrap();
            let fm = phi(n, r - h).unwrap();
            let lap = (fp - 2.0 * f0 + fm) / (h * h)
                + (n as f64 - 1.0) / r * (fp - fm) / (2.0 * h);
            assert!(
                (lap - f0).abs() <= 1e-6 * f0,
                "n={n} r={r}: lap {lap} vs {f0}"
            );
        }
        // value at the origin equals the unit-sphere measure
        let at0 = phi(n, 0.0).unwrap();
        let surf = sphere_measure(n);
        assert!((at0 - surf).abs() <= 1e-12 * surf, "n={n}: {at0} vs {surf}");

        // growth envelope: s(r) = Phi(r) r^{(n-1)/2} e^{-r} settles to a
        // constant; consecutive dyadic samples agree within 2%
        let s = |r: f64| phi(n, r).unwrap() * r.powf((n as f64 - 1.0) / 2.0) * (-r).exp();
        let (a, b, c) = (s(20.0), s(40.0), s(80.0));
        assert!((b / a - 1.0).abs() < 0.02 && (c / b - 1.0).abs() < 0.02);
    }
    pass(1, "eigenfunction identity, origin value, growth envelope");
}

#[test]
fn criterion_2_adjoint_residual() {
    for &beta in &[0.5, 1.0, 2.0] {
        // n = 2 carries measurable truncation; order >= 2 in h
        let rc = adjoint_residual(2, beta, 1.0, 1.0, 0.16).unwrap().abs();
        let rf = adjoint_residual(2, beta, 1.0, 1.0, 0.08).unwrap().abs();
        let order = (rc / rf).log2();
        assert!(order >= 2.0 - 0.05, "beta={beta}: order {order}");
        // n = 1 and n = 3: the centered stencil annihilates the separated
        // eigenfunction exactly; residual sits at roundoff
        for &(n, t, r) in &[(1u32, 1.0, 1.0), (3, 2.0, 0.5)] {
            let res = adjoint_residual(n, beta, t, r, 1e-3).unwrap().abs();
            assert!(res <= 1e-6, "n={n} beta={beta}: residual {res}");
        }
    }
    pass(2, "adjoint residual vanishes with order >= 2");
}

#[test]
fn criterion_3_linear_solver_convergence() {
    // exact solution e^{-t/beta} g(r) of the linear equation, any g, with
    // data (g, -g/beta, g/beta^2 - Lap g); the analytic Laplacian is used
    // here on purpose — with the discrete one the semi-discrete system is
    // solved exactly and no spatial order would be visible
    let beta = 1.0;
    let params = ProblemParams::new(1, 2.0, beta, 1.0, 1.0).unwrap();
    let r_max = 4.0;
    let g = |r: f64| bump(r, 1.0, 6);
    // n = 1: Lap g = g'' = -12(1-r^2)^5 + 120 r^2 (1-r^2)^4 inside r < 1
    let lap_g = |r: f64| {
        let s = 1.0 - r * r;
        if s <= 0.0 {
            0.0
        } else {
            -12.0 * s.powi(5) + 120.0 * r * r * s.powi(4)
        }
    };
    let mut errs = Vec::new();
    for &cells in &[1024usize, 2048, 4096] {
        // dr = 1/256, 1/512, 1/1024
        let mesh = RadialMesh::new(1, r_max, cells).unwrap();
        let profile: Vec<f64> = (0..mesh.num_nodes()).map(|i| g(mesh.r(i))).collect();
        let initial = FieldState {
            t: 0.0,
            u: profile.clone(),
            v: profile.iter().map(|x| -x / beta).collect(),
            w: (0..mesh.num_nodes())
                .map(|i| profile[i] / (beta * beta) - lap_g(mesh.r(i)))
                .collect(),
        };
        let solver = SolverConfig {
            r_max,
            num_cells: cells,
            cfl: 0.4,
            t_max: 1.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        };
        let mut last = LastState(None);
        {
            let mut probes: [&mut dyn StepProbe; 1] = [&mut last];
            let opts = EvolveOptions {
                source: SourceTerm::Zero,
                homogeneous: false,
            };
            evolve(initial, &params, &solver, &mesh, opts, &mut probes).unwrap();
        }
        let state = last.0.unwrap();
        assert!((state.t - 1.0).abs() < 1e-12);
        let decay = (-1.0f64 / beta).exp();
        let err = (0..mesh.num_nodes())
            .map(|i| (state.u[i] - decay * g(mesh.r(i))).abs())
            .fold(0.0f64, f64::max);
        errs.push(err);
    }
    let o1 = (errs[0] / errs[1]).log2();
    let o2 = (errs[1] / errs[2]).log2();
    assert!(
        o1 >= 1.9 && o2 >= 1.9,
        "orders {o1:.3}, {o2:.3} from errors {errs:?}"
    );
    pass(3, "manufactured linear solution converges at order >= 2");
}

#[test]
fn criterion_4_ode_oracle_equivalence() {
    for &(beta, p) in &[(1.0, 2.0), (2.0, 3.0)] {
        let (y1, y2) = (1.0, 0.5);
        let oracle = ode_oracle(beta, p, y1, y2, 200.0, 1e-10).unwrap();
        let t_blow = oracle.t_blowup.expect("positive data blows up");
        let t_end = 0.95 * t_blow;

        let params = ProblemParams::new(1, p, beta, 1.0, 1.0).unwrap();
        let mesh = RadialMesh::new(1, 4.0, 1024).unwrap();
        let n_nodes = mesh.num_nodes();
        let initial = FieldState {
            t: 0.0,
            u: vec![0.0; n_nodes],
            v: vec![y1; n_nodes],
            w: vec![y2; n_nodes],
        };
        let solver = SolverConfig {
            r_max: 4.0,
            num_cells: 1024,
            cfl: 0.4,
            t_max: t_end,
            blowup_threshold: 1e12,
            dt_min: 1e-10,
        };
        let mut history = mgtlab::mgt_system::StateHistory::new(16);
        {
            let mut probes: [&mut dyn StepProbe; 1] = [&mut history];
            let opts = EvolveOptions {
                source: SourceTerm::PowerLaw,
                homogeneous: true,
            };
            evolve(initial, &params, &solver, &mesh, opts, &mut probes).unwrap();
        }
        let times: Vec<f64> = history.states.iter().map(|s| s.t).collect();
        let sampled = ode_oracle_sampled(beta, p, y1, y2, &times, 1e-12).unwrap();
        let mut worst = 0.0f64;
        for (state, y) in history.states.iter().zip(&sampled.states) {
            worst = worst.max((state.v[0] - y[1]).abs() / (1.0 + y[1].abs()));
        }
        assert!(
            worst <= 1e-6,
            "beta={beta} p={p}: max rel diff {worst:.3e} up to {t_end:.4}"
        );
    }
    pass(4, "homogeneous PDE matches the adaptive ODE oracle to 1e-6");
}

#[test]
fn criterion_5_identity_residual_and_functional_floors() {
    let shape = DataShape::default();
    let run = |cells: usize| {
        let params = ProblemParams::new(1, 2.0, 1.0, 1.0, 2.0).unwrap();
        let solver = SolverConfig {
            r_max: 10.0,
            num_cells: cells,
            cfl: 0.4,
            t_max: 8.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        };
        let mesh = RadialMesh::new(1, solver.r_max, cells).unwrap();
        let initial = make_initial_data(&params, &shape, &mesh).unwrap();
        let mut probe = FunctionalProbe::new(&params, &shape, &mesh, 16).unwrap();
        {
            let mut probes: [&mut dyn StepProbe; 1] = [&mut probe];
            evolve(
                initial,
                &params,
                &solver,
                &mesh,
                EvolveOptions::default(),
                &mut probes,
            )
            .unwrap();
        }
        (params, mesh, probe.trace)
    };

    let (params, mesh, trace_fine) = run(2048);
    let t_last = *trace_fine.times.last().unwrap();
    let window = trace_fine.truncated(0.9 * t_last);
    let res_fine = window
        .identity_residuals()
        .into_iter()
        .fold(0.0f64, f64::max);
    assert!(res_fine <= 1e-2, "residual {res_fine:.3e} at 2048 cells");

    let (_, _, trace_coarse) = run(1024);
    let res_coarse = trace_coarse
        .truncated(0.9 * t_last)
        .identity_residuals()
        .into_iter()
        .fold(0.0f64, f64::max);
    assert!(
        res_fine < res_coarse,
        "no refinement gain: {res_coarse:.3e} -> {res_fine:.3e}"
    );

    // G >= -1e-3 max |G| on the pre-blow-up window
    let g = window.g_series().unwrap();
    let g_max = g.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
    let g_min = g.iter().fold(f64::INFINITY, |m, &x| m.min(x));
    assert!(g_min >= -1e-3 * g_max, "min G {g_min:.3e}, max |G| {g_max:.3e}");

    // F1(t) >= C2 eps for sampled t >= 1/2
    let evaluator = EigenfunctionEvaluator::new(1).unwrap();
    let (int_u1, int_u2) = data_phi_integrals(&shape, &params, &mesh, &evaluator).unwrap();
    let c1 = estimate_c1(1, 1.0, 50.0, 48).unwrap();
    let c3 = c1.powf(1.0 - params.p) / (1.0 + params.beta);
    let (c2, _) = first_lower_bound_constants(&params, int_u1, int_u2, c3).unwrap();
    let worst_ratio = window.check_initial_lower_bound(c2).unwrap();
    assert!(worst_ratio >= 1.0 - 1e-3, "F1/(C2 eps) dipped to {worst_ratio}");

    pass(5, "integral identity residual, G floor, and first lower bound");
}

#[test]
fn criterion_6_bound_engine_exactness() {
    // recursions vs closed forms to 1e-12 for j <= 40
    for &(n, p) in &[(1u32, 2.0f64), (2, 1.7), (3, 1.5)] {
        let params = ProblemParams::new(n, p, 1.0, 1.0, 1.0).unwrap();
        let (mut a, mut g) = subcritical_closed_forms(0, &params).unwrap();
        for j in 1..=40u32 {
            a = (n as f64 - 1.0) * (p - 1.0) / 2.0 + a * p;
            g = g * p + 1.0;
            let (ac, gc) = subcritical_closed_forms(j, &params).unwrap();
            assert!((ac - a).abs() <= 1e-12 * a.abs().max(1.0));
            assert!((gc - g).abs() <= 1e-12 * g.abs());
        }
    }
    let mut sigma = 0.0;
    for j in 1..=40u32 {
        sigma = sigma * 3.0 + 1.0;
        assert!((critical_sigma(j, 3.0) - sigma).abs() <= 1e-12 * sigma);
    }

    // K and Q floors beyond the threshold indices
    let sub = ProblemParams::new(1, 2.0, 1.0, 1.0, 1.0).unwrap();
    let bundle = subcritical_bundle(&sub, 5.7, 0.55, 40).unwrap();
    for &m in &bundle.k_floor_margins() {
        assert!(m >= -1e-12, "K floor margin {m}");
    }
    let crit = ProblemParams::new(2, 3.0, 1.0, 1.0, 0.5).unwrap();
    let cb = critical_bundle(&crit, 0.02, 0.4, 40).unwrap();
    for &m in &cb.q_floor_margins() {
        assert!(m >= -1e-12, "Q floor margin {m}");
    }

    // slicing inequality margins on the grid of examples
    for &p in &[1.2, 2.0, 3.0] {
        for j in 0..=20u32 {
            let t = l_partial(p, j + 1);
            let margin = verify_slicing_inequality(p, j, &[t]).unwrap();
            assert!(margin >= 0.0, "p={p} j={j}: margin {margin}");
        }
    }

    // L limit against the 200-term oracle
    let oracle: f64 = (0..200).map(|k| 1.0 + 2f64.powi(-k)).product();
    let s = slicing(2.0, 1e-12).unwrap();
    assert!((s.l_limit - oracle).abs() <= 1e-10 * oracle);

    pass(6, "bound-engine recursions, floors, slicing margins, L limit");
}

#[test]
fn criterion_7_lifespan_consistency_headline() {
    let problem = ProblemParams::new(1, 2.0, 1.0, 1.0, 4.0).unwrap();
    let shape = DataShape::default();
    let config = RunConfig {
        problem,
        data: shape,
        solver: SolverConfig {
            r_max: 42.0,
            num_cells: 4096,
            cfl: 0.4,
            t_max: 40.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        },
        sweep: Some(SweepConfig {
            epsilons: vec![4.0, 2.83, 2.0, 1.41, 1.0, 0.71, 0.5, 0.4],
            resolutions: vec![2048, 4096],
        }),
    };

    let mesh = RadialMesh::new(1, config.solver.r_max, config.solver.num_cells).unwrap();
    let evaluator = EigenfunctionEvaluator::new(1).unwrap();
    let (int_u1, int_u2) = data_phi_integrals(&config.data, &problem, &mesh, &evaluator).unwrap();
    let c1 = estimate_c1(1, 1.0, 50.0, 48).unwrap();
    let c3 = c1.powf(1.0 - problem.p) / (1.0 + problem.beta);
    let (c2, _) = first_lower_bound_constants(&problem, int_u1, int_u2, c3).unwrap();
    let eps0 = subcritical_bundle(&problem, c1, c2, 40).unwrap().eps0;
    assert!(
        config.sweep.as_ref().unwrap().epsilons.iter().all(|&e| e <= eps0),
        "amplitude ladder exceeds eps0 = {eps0}"
    );

    let bound = move |eps: f64| {
        let p = ProblemParams { epsilon: eps, ..problem };
        let b = subcritical_bundle(&p, c1, c2, 40).unwrap();
        lifespan_bound_subcritical(&b, &p).unwrap()
    };
    let plan = SweepPlan::from_config(&config).unwrap();
    let records = run_sweep(&plan, &config, Some(&bound));

    for r in &records {
        assert_eq!(r.status, "blew_up", "eps={} did not blow up: {:?}", r.epsilon, r.error);
        let t = r.t_detect.unwrap();
        let b = r.t_bound_theory.unwrap();
        assert!(t <= b, "eps={}: t_detect {t} above bound {b}", r.epsilon);
    }
    let report = compare_bounds(&records, eps0);
    assert_eq!(report.num_violations, 0);

    // slope within 50% of -1; the tolerance is heuristic, since theory
    // supplies only an upper bound for the lifespan
    let fit = fit_subcritical(&records, &problem).unwrap();
    assert!(fit.slope < 0.0, "slope {} not negative", fit.slope);
    assert!(
        fit.relative_gap <= 0.5,
        "slope {} vs theory {} (gap {:.2})",
        fit.slope,
        fit.theory_slope,
        fit.relative_gap
    );
    pass(
        7,
        "headline sweep: all detections below the theoretical bound, slope near -1",
    );
}

#[test]
fn criterion_8_exponent_identity_grid() {
    let mut count = 0;
    for n in 1..=10u32 {
        let p_hi = if n == 1 { 6.0 } else { ProblemParams::glassey_exponent(n).min(6.0) };
        for k in 1..=10 {
            let p = 1.0 + (p_hi - 1.0) * (k as f64) / 10.5; // stays subcritical
            let a = subcritical_exponent(n, p);
            let b = subcritical_exponent_alt(n, p);
            assert!((a - b).abs() <= 1e-12 * a.abs(), "n={n} p={p}: {a} vs {b}");
            count += 1;
        }
    }
    assert_eq!(count, 100);
    pass(8, "lifespan exponent identity on a 100-point subcritical grid");
}
