//! Small end-to-end sweep: run a ladder of amplitudes, fit the lifespan
//! scaling law, and check every detection time against the theoretical
//! upper bound.

use mgtlab::bound_engine::{
    first_lower_bound_constants, lifespan_bound_subcritical, subcritical_bundle,
};
use mgtlab::config::{DataShape, ProblemParams, RunConfig, SolverConfig, SweepConfig};
use mgtlab::experiments::{compare_bounds, fit_subcritical, records_to_csv, run_sweep, SweepPlan};
use mgtlab::functionals::data_phi_integrals;
use mgtlab::mgt_system::RadialMesh;
use mgtlab::special_functions::{estimate_c1, EigenfunctionEvaluator};

fn main() -> mgtlab::Result<()> {
    let problem = ProblemParams::new(1, 2.0, 1.0, 1.0, 4.0)?;
    let config = RunConfig {
        problem,
        data: DataShape::default(),
        solver: SolverConfig {
            r_max: 42.0,
            num_cells: 1024,
            cfl: 0.4,
            t_max: 40.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        },
        sweep: Some(SweepConfig {
            epsilons: vec![4.0, 2.83, 2.0, 1.41, 1.0, 0.71, 0.5, 0.4],
            resolutions: vec![768, 1024],
        }),
    };

    let mesh = RadialMesh::new(problem.n, config.solver.r_max, config.solver.num_cells)?;
    let evaluator = EigenfunctionEvaluator::new(problem.n)?;
    let (int_u1, int_u2) = data_phi_integrals(&config.data, &problem, &mesh, &evaluator)?;
    let c1 = estimate_c1(problem.n, problem.r_support, 50.0, 48)?;
    let c3 = c1.powf(1.0 - problem.p) / (1.0 + problem.beta);
    let (c2, _) = first_lower_bound_constants(&problem, int_u1, int_u2, c3)?;
    let eps0 = subcritical_bundle(&problem, c1, c2, 40)?.eps0;

    let bound = move |eps: f64| {
        let p = ProblemParams { epsilon: eps, ..problem };
        let b = subcritical_bundle(&p, c1, c2, 40).expect("subcritical");
        lifespan_bound_subcritical(&b, &p).expect("subcritical")
    };
    let plan = SweepPlan::from_config(&config)?;
    let records = run_sweep(&plan, &config, Some(&bound));
    print!("{}", records_to_csv(&records));

    let fit = fit_subcritical(&records, &problem)?;
    println!(
        "fit: slope {:.4} vs theory {:.4} (gap {:.2}%), r^2 = {:.6}",
        fit.slope,
        fit.theory_slope,
        100.0 * fit.relative_gap,
        fit.r_squared
    );
    let report = compare_bounds(&records, eps0);
    println!(
        "bound check: {} compared, {} violations",
        report.num_checked, report.num_violations
    );
    Ok(())
}
