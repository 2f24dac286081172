//! One nonlinear run at a large amplitude: evolve until the sup-norm
//! trigger fires, then print the detection time and the tail of the
//! sup-norm history.

use mgtlab::config::{DataShape, ProblemParams, SolverConfig};
use mgtlab::mgt_system::{evolve, make_initial_data, EvolveOptions, RadialMesh};

fn main() -> mgtlab::Result<()> {
    let params = ProblemParams::new(1, 2.0, 1.0, 1.0, 4.0)?;
    let solver = SolverConfig {
        r_max: 12.0,
        num_cells: 1024,
        cfl: 0.4,
        t_max: 10.0,
        blowup_threshold: 1e8,
        dt_min: 1e-10,
    };
    let mesh = RadialMesh::new(params.n, solver.r_max, solver.num_cells)?;
    let initial = make_initial_data(&params, &DataShape::default(), &mesh)?;
    let record = evolve(
        initial,
        &params,
        &solver,
        &mesh,
        EvolveOptions::default(),
        &mut [],
    )?;
    println!(
        "epsilon={} cells={} status={:?} t_detect={:?}",
        record.epsilon, record.resolution, record.status, record.t_detect
    );
    println!("last sup|u_t| samples:");
    for (t, s) in record.sup_norm_history.iter().rev().take(8).rev() {
        println!("  t={t:>10.6}  sup={s:.6e}");
    }
    Ok(())
}
