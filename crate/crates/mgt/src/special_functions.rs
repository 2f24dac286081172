//! The positive Laplace eigenfunction Phi (Delta Phi = Phi), the decaying
//! separated test function Psi(t, x) = e^{-t} Phi(x), the ball integral of
//! Psi and the numerical growth constant C1.
//!
//! For n >= 2, Phi(r) = (2 pi)^{n/2} r^{(2-n)/2} I_{(n-2)/2}(r); only small
//! integer and half-integer Bessel orders occur, so the modified Bessel
//! function is evaluated by power series for small arguments and by the
//! rescaled asymptotic expansion for large ones.

use crate::quadrature::adaptive_simpson;
use crate::{MgtError, Result};

/// Argument threshold switching I_nu from power series to asymptotics.
pub const SERIES_CUTOFF: f64 = 30.0;
const SERIES_MAX_TERMS: usize = 60;
const SERIES_REL_EPS: f64 = 1e-16;

/// Gamma function for positive integer or half-integer arguments, by
/// recursion from Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
pub fn gamma_half_integer(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    debug_assert!(
        (2.0 * x - twice).abs() < 1e-9 && twice >= 1.0,
        "gamma_half_integer needs positive multiples of 1/2, got {x}"
    );
    let mut z;
    let mut acc;
    if twice as i64 % 2 == 0 {
        z = 1.0;
        acc = 1.0;
    } else {
        z = 0.5;
        acc = std::f64::consts::PI.sqrt();
    }
    while z + 0.5 < x {
        acc *= z;
        z += 1.0;
    }
    acc
}

/// Measure of the unit (n-1)-sphere, |S^{n-1}| = 2 pi^{n/2} / Gamma(n/2).
/// For n = 1 this is 2 (the two endpoints), consistent with radial
/// integration in one dimension.
pub fn sphere_measure(n: u32) -> f64 {
    let half_n = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(half_n) / gamma_half_integer(half_n)
}

/// Modified Bessel function I_nu(x) for x >= 0 and nonnegative integer or
/// half-integer order nu.
pub fn bessel_i(nu: f64, x: f64) -> f64 {
    debug_assert!(x >= 0.0 && nu >= 0.0);
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    if x < SERIES_CUTOFF {
        bessel_i_series(nu, x)
    } else {
        bessel_i_asymptotic(nu, x)
    }
}

fn bessel_i_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = (0.5 * x).powf(nu) / gamma_half_integer(nu + 1.0);
    let mut sum = term;
    for k in 0..SERIES_MAX_TERMS {
        let kf = k as f64;
        term *= q / ((kf + 1.0) * (kf + 1.0 + nu));
        sum += term;
        if term < SERIES_REL_EPS * sum {
            break;
        }
    }
    sum
}

fn bessel_i_asymptotic(nu: f64, x: f64) -> f64 {
    // I_nu(x) ~ e^x / sqrt(2 pi x) * sum_k (-1)^k a_k(nu) / x^k,
    // a_k(nu) = prod_{j=1..k} (4 nu^2 - (2j-1)^2) / (8^k k!).
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    let mut prev = f64::INFINITY;
    for k in 1..=30 {
        let kf = k as f64;
        term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (8.0 * kf * x);
        if term.abs() >= prev {
            break; // divergent tail of the asymptotic series
        }
        sum += term;
        prev = term.abs();
        if term.abs() < SERIES_REL_EPS * sum.abs() {
            break;
        }
    }
    x.exp() / (2.0 * std::f64::consts::PI * x).sqrt() * sum
}

/// Evaluator for Phi and Psi at a fixed dimension.
#[derive(Debug, Clone, Copy)]
pub struct EigenfunctionEvaluator {
    pub n: u32,
    pub series_cutoff: f64,
    pub tol: f64,
}

impl EigenfunctionEvaluator {
    pub fn new(n: u32) -> Result<Self> {
        if n < 1 {
            return Err(MgtError::InvalidParameter(format!("dimension n = {n} < 1")));
        }
        Ok(EigenfunctionEvaluator {
            n,
            series_cutoff: SERIES_CUTOFF,
            tol: 1e-10,
        })
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        phi(self.n, r)
    }

    pub fn psi(&self, t: f64, r: f64) -> Result<f64> {
        psi(self.n, t, r)
    }
}

/// Radial profile of the eigenfunction:
/// Phi(r) = e^r + e^{-r} for n = 1, the sphere integral of e^{x . omega}
/// for n >= 2 (via the Bessel closed form). Positive for all r >= 0.
pub fn phi(n: u32, r: f64) -> Result<f64> {
    if n < 1 {
        return Err(MgtError::InvalidParameter(format!("dimension n = {n} < 1")));
    }
    if r < 0.0 {
        return Err(MgtError::InvalidParameter(format!("radius r = {r} < 0")));
    }
    if n == 1 {
        return Ok(r.exp() + (-r).exp());
    }
    if r == 0.0 {
        // Removable singularity: the limit is the sphere measure.
        return Ok(sphere_measure(n));
    }
    let nu = (n as f64 - 2.0) / 2.0;
    let two_pi = 2.0 * std::f64::consts::PI;
    Ok(two_pi.powf(n as f64 / 2.0) * r.powf((2.0 - n as f64) / 2.0) * bessel_i(nu, r))
}

/// Psi(t, r) = e^{-t} Phi(r).
pub fn psi(n: u32, t: f64, r: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(MgtError::InvalidParameter(format!("time t = {t} < 0")));
    }
    Ok((-t).exp() * phi(n, r)?)
}

/// Centered finite-difference residual of the adjoint equation
/// -beta d_t^3 Psi + d_t^2 Psi - Lap Psi + beta d_t Lap Psi at (t, r).
/// Expected O(h^2)-small for every beta since Psi solves it exactly.
pub fn adjoint_residual(n: u32, beta: f64, t: f64, r: f64, h: f64) -> Result<f64> {
    if h <= 0.0 {
        return Err(MgtError::InvalidParameter(format!("step h = {h} <= 0")));
    }
    if t <= 3.0 * h || r <= 3.0 * h {
        return Err(MgtError::InvalidParameter(
            "adjoint_residual needs t > 3h and r > 3h".into(),
        ));
    }
    let f = |tt: f64, rr: f64| -> Result<f64> { psi(n, tt, rr) };
    let lap = |tt: f64| -> Result<f64> {
        // radial Laplacian Psi_rr + (n-1)/r Psi_r by centered differences
        let fp = f(tt, r + h)?;
        let f0 = f(tt, r)?;
        let fm = f(tt, r - h)?;
        let second = (fp - 2.0 * f0 + fm) / (h * h);
        let first = (fp - fm) / (2.0 * h);
        Ok(second + (n as f64 - 1.0) / r * first)
    };

    let d3t = (f(t + 2.0 * h, r)? - 2.0 * f(t + h, r)? + 2.0 * f(t - h, r)?
        - f(t - 2.0 * h, r)?)
        / (2.0 * h * h * h);
    let d2t = (f(t + h, r)? - 2.0 * f(t, r)? + f(t - h, r)?) / (h * h);
    let lap0 = lap(t)?;
    let dt_lap = (lap(t + h)? - lap(t - h)?) / (2.0 * h);

    Ok(-beta * d3t + d2t - lap0 + beta * dt_lap)
}

/// Integral of Psi(t, .) over the ball B_{t+R}, computed radially as
/// omega_{n-1} e^{-t} int_0^{t+R} Phi(r) r^{n-1} dr to relative 1e-8.
pub fn psi_ball_integral(n: u32, t: f64, r_support: f64) -> Result<f64> {
    if t < 0.0 {
        return Err(MgtError::InvalidParameter(format!("time t = {t} < 0")));
    }
    if r_support <= 0.0 {
        return Err(MgtError::InvalidParameter(format!(
            "R = {r_support} <= 0"
        )));
    }
    phi(n, 0.0)?; // validates n
    let upper = t + r_support;
    let integrand = |r: f64| phi(n, r).unwrap_or(f64::NAN) * r.powi(n as i32 - 1);
    let radial = adaptive_simpson(integrand, 0.0, upper, 1e-9)?;
    Ok(sphere_measure(n) * (-t).exp() * radial)
}

/// Safety factor applied to the sampled supremum defining C1. The constant
/// is a numerical estimate, not a proven bound.
pub const C1_SAFETY: f64 = 1.05;

/// Numerical estimate of the constant C1 with
/// int_{B_{t+R}} Psi(t, x) dx <= C1 (t + R)^{(n-1)/2}: the maximum of the
/// ratio over a geometric t-grid in [0, t_horizon], inflated by 5%.
pub fn estimate_c1(n: u32, r_support: f64, t_horizon: f64, samples: usize) -> Result<f64> {
    if t_horizon <= 0.0 {
        return Err(MgtError::InvalidParameter(format!(
            "t_horizon = {t_horizon} <= 0"
        )));
    }
    if samples < 2 {
        return Err(MgtError::InvalidParameter(format!(
            "samples = {samples} < 2"
        )));
    }
    let decay = ((n as f64) - 1.0) / 2.0;
    let mut best = f64::NEG_INFINITY;
    for i in 0..samples {
        // t = 0 plus a geometric ladder ending at the horizon.
        let t = if i == 0 {
            0.0
        } else {
            t_horizon * 2f64.powi(-((samples - 1 - i) as i32))
        };
        let ratio = psi_ball_integral(n, t, r_support)? * (t + r_support).powf(-decay);
        best = best.max(ratio);
    }
    Ok(C1_SAFETY * best)
}
