//! Records the blow-up functional F1, its source integral NL, and the
//! differential-identity series G and H along a nonlinear run.

use mgtlab::config::{DataShape, ProblemParams, SolverConfig};
use mgtlab::functionals::FunctionalProbe;
use mgtlab::mgt_system::{evolve, make_initial_data, EvolveOptions, RadialMesh, StepProbe};

fn main() -> mgtlab::Result<()> {
    let params = ProblemParams::new(1, 2.0, 1.0, 1.0, 2.0)?;
    let shape = DataShape::default();
    let solver = SolverConfig {
        r_max: 10.0,
        num_cells: 2048,
        cfl: 0.4,
        t_max: 8.0,
        blowup_threshold: 1e8,
        dt_min: 1e-10,
    };
    let mesh = RadialMesh::new(params.n, solver.r_max, solver.num_cells)?;
    let initial = make_initial_data(&params, &shape, &mesh)?;
    let mut probe = FunctionalProbe::new(&params, &shape, &mesh, 64)?;
    {
        let mut probes: [&mut dyn StepProbe; 1] = [&mut probe];
        evolve(
            initial,
            &params,
            &solver,
            &mesh,
            EvolveOptions::default(),
            &mut probes,
        )?;
    }
    let trace = &probe.trace;
    let g = trace.g_series()?;
    let h = trace.h_series();
    let res = trace.identity_residuals();
    println!(
        "{:>8} {:>14} {:>14} {:>14} {:>14} {:>12}",
        "t", "F1", "NL", "G", "H", "residual"
    );
    for i in (0..trace.times.len()).step_by(trace.times.len() / 16) {
        println!(
            "{:>8.4} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>12.4e}",
            trace.times[i], trace.f1[i], trace.nl[i], g[i], h[i], res[i]
        );
    }
    let t_last = *trace.times.last().unwrap();
    println!(
        "worst G on t <= {:.4} (90% of the trace): {:+.6e}",
        0.9 * t_last,
        trace.truncated(0.9 * t_last).check_g_nonnegative()?
    );
    Ok(())
}
