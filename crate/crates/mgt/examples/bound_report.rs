//! Evaluates the whole constant chain of the lifespan upper bound for the
//! default subcritical configuration and a critical one.

use mgtlab::bound_engine::{
    critical_bundle, first_lower_bound_constants, lifespan_bound_critical,
    lifespan_bound_subcritical, subcritical_bundle,
};
use mgtlab::config::ProblemParams;
use mgtlab::special_functions::estimate_c1;

fn main() -> mgtlab::Result<()> {
    // subcritical: n = 1, p = 2
    let params = ProblemParams::new(1, 2.0, 1.0, 1.0, 1.0)?;
    let c1 = estimate_c1(1, 1.0, 50.0, 48)?;
    let c3 = c1.powf(1.0 - params.p) / (1.0 + params.beta);
    // unit-amplitude bump data produces these Phi-weighted integrals at
    // desk scale; any positive pair works for the report
    let (c2, k0) = first_lower_bound_constants(&params, 1.1, 0.0, c3)?;
    let bundle = subcritical_bundle(&params, c1, c2, 40)?;
    println!("n=1 p=2: C1={c1:.6e} C2={c2:.6e} C3={:.6e} K0={k0:.6e}", bundle.c3);
    println!(
        "  M={:.6e} D={:.6e} E={:.6e} E1={:.6e} E2={:.6e}",
        bundle.m_const, bundle.d, bundle.e, bundle.e1, bundle.e2
    );
    println!(
        "  j0={} eps0={:.6e} L={:.10}",
        bundle.j0, bundle.eps0, bundle.l_limit
    );
    for eps in [1.0, 0.5, 0.25] {
        let p = ProblemParams { epsilon: eps, ..params };
        let b = subcritical_bundle(&p, c1, c2, 40)?;
        let bound = lifespan_bound_subcritical(&b, &p)?;
        println!("  eps={eps:<5} T <= {:.6e} (guaranteed: {})", bound.value, bound.guaranteed);
    }

    // critical: n = 2, p = 3
    let crit = ProblemParams::new(2, 3.0, 1.0, 1.0, 1.0)?;
    let c1c = estimate_c1(2, 1.0, 50.0, 48)?;
    let c3c = c1c.powf(1.0 - crit.p) / (1.0 + crit.beta);
    let (c2c, _) = first_lower_bound_constants(&crit, 1.1, 0.0, c3c)?;
    let cb = critical_bundle(&crit, c3c, c2c, 40)?;
    println!(
        "n=2 p=3: C4={:.6e} D~={:.6e} E~={:.6e} j1={} eps0={}",
        cb.c4, cb.d_tilde, cb.e_tilde, cb.j1, cb.eps0
    );
    for eps in [1.0, 0.5] {
        let p = ProblemParams { epsilon: eps, ..crit };
        let b = critical_bundle(&p, c3c, c2c, 40)?;
        let bound = lifespan_bound_critical(&b, &p, b.l_limit)?;
        println!("  eps={eps:<5} log T-bound = {:.6e}", bound.log_value);
    }
    Ok(())
}
