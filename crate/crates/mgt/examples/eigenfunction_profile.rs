//! Tabulates the radial eigenfunction Phi of Delta Phi = Phi for several
//! dimensions and checks the n = 3 closed form 4 pi sinh(r)/r.

use mgtlab::special_functions::{phi, sphere_measure};

fn main() -> mgtlab::Result<()> {
    println!("{:>6} {:>16} {:>16} {:>16}", "r", "n=1", "n=2", "n=3");
    for k in 0..=10 {
        let r = 0.5 * k as f64;
        println!(
            "{:>6.2} {:>16.8e} {:>16.8e} {:>16.8e}",
            r,
            phi(1, r)?,
            phi(2, r)?,
            phi(3, r)?
        );
    }

    for n in 1..=4 {
        println!("Phi_{n}(0) = {:.12e} (surface measure)", sphere_measure(n));
    }

    let r: f64 = 1.3;
    let closed = 4.0 * std::f64::consts::PI * r.sinh() / r;
    println!(
        "n=3 closed form at r={r}: {closed:.12e}, series: {:.12e}",
        phi(3, r)?
    );
    Ok(())
}
