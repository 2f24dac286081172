//! Finite-difference check that Psi = e^{-t} Phi annihilates the adjoint
//! operator -beta d_t^3 + d_t^2 - Lap + beta d_t Lap, plus the C1
//! envelope constant used by the bound engine.

use mgtlab::special_functions::{adjoint_residual, estimate_c1, psi_ball_integral};

fn main() -> mgtlab::Result<()> {
    for &beta in &[0.5, 1.0, 2.0] {
        for &h in &[0.16, 0.08, 0.04, 1e-3] {
            let res = adjoint_residual(2, beta, 1.0, 1.0, h)?;
            println!("beta={beta} h={h:>6}: residual {res:+.6e}");
        }
    }
    println!();
    for t in [0.0, 1.0, 5.0, 20.0] {
        let v = psi_ball_integral(1, t, 1.0)?;
        println!("int Psi over the support ball, n=1 t={t:>4}: {v:.8e}");
    }
    let c1 = estimate_c1(1, 1.0, 50.0, 48)?;
    println!("C1(n=1, R=1) = {c1:.8e} (2e = {:.8e})", 2.0 * 1f64.exp());
    Ok(())
}
