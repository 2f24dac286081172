//! Quadrature helpers: adaptive Simpson for smooth integrands and
//! composite rules over uniformly sampled grid functions.

use crate::{MgtError, Result};

/// Absolute floor below which adaptive refinement stops regardless of the
/// relative tolerance (integrands here are smooth and positive, but may be
/// identically zero on subintervals).
pub const ABS_FLOOR: f64 = 1e-14;

const MAX_DEPTH: u32 = 48;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(fa, flm, fm, m - a);
    let right = simpson(fm, frm, fb, b - m);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol || delta.abs() <= ABS_FLOOR {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(MgtError::Quadrature { a, b });
    }
    let l = adapt(f, a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)?;
    let r = adapt(f, m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)?;
    Ok(l + r)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to relative tolerance
/// `rel_tol` (with absolute floor [`ABS_FLOOR`]).
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    let whole = simpson(fa, fm, fb, b - a);
    // Seed the absolute tolerance from a crude first estimate; refined
    // intervals split it.
    let tol = (whole.abs() * rel_tol).max(ABS_FLOOR);
    adapt(&f, a, b, fa, fm, fb, whole, tol, 0)
}

/// Composite Simpson rule over uniformly spaced samples. Odd interval
/// counts are handled with a 3/8 rule on the last three intervals.
pub fn simpson_uniform(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    if n == 2 {
        return 0.5 * dx * (values[0] + values[1]);
    }
    let intervals = n - 1;
    let (even_part, tail) = if intervals % 2 == 0 {
        (intervals, 0)
    } else if intervals >= 3 {
        (intervals - 3, 3)
    } else {
        (0, 0)
    };
    let mut sum = 0.0;
    if even_part > 0 {
        sum += values[0] + values[even_part];
        let mut i = 1;
        while i < even_part {
            sum += 4.0 * values[i];
            if i + 1 < even_part {
                sum += 2.0 * values[i + 1];
            }
            i += 2;
        }
        sum *= dx / 3.0;
    }
    if tail == 3 {
        let v = &values[even_part..];
        sum += 3.0 * dx / 8.0 * (v[0] + 3.0 * v[1] + 3.0 * v[2] + v[3]);
    }
    sum
}

/// Trapezoidal rule over uniformly spaced samples.
pub fn trapezoid_uniform(values: &[f64], dx: f64) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mut sum = 0.5 * (values[0] + values[n - 1]);
    for &v in &values[1..n - 1] {
        sum += v;
    }
    sum * dx
}
