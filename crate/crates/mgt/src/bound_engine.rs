//! The iteration machinery behind the lifespan upper bounds: slicing
//! sequence, subcritical sequences and constants, critical sequences and
//! constants, threshold indices, admissible amplitude eps0 and the bounds
//! themselves.
//!
//! The K_j and Q_j sequences grow double-exponentially (p^j in the
//! exponent), so they are carried in log space throughout.

use serde::{Deserialize, Serialize};

use crate::config::{ProblemParams, Regime};
use crate::{MgtError, Result};

/// Slicing sequence ell_k = 1 + p^{-k} with partial products L_j.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlicingSequence {
    pub p: f64,
    /// ell_0, ell_1, ... (at least 64 stored terms).
    pub ell: Vec<f64>,
    /// Partial products L_j = prod_{k<=j} ell_k.
    pub l_partial: Vec<f64>,
    /// Limit L of the full infinite product.
    pub l_limit: f64,
}

/// ell_k for arbitrary k without building the sequence.
pub fn ell(p: f64, k: u32) -> f64 {
    1.0 + p.powi(-(k as i32))
}

/// log(ell_k) evaluated as log1p(p^{-k}); forming 1 + p^{-k} first loses
/// the low bits of p^{-k} once it drops below the ulp of 1.
pub fn log_ell(p: f64, k: u32) -> f64 {
    p.powi(-(k as i32)).ln_1p()
}

/// Partial product L_j = prod_{k=0..=j} (1 + p^{-k}).
pub fn l_partial(p: f64, j: u32) -> f64 {
    (0..=j).map(|k| ell(p, k)).product()
}

const SLICING_MIN_TERMS: usize = 64;

/// Computes the slicing sequence; terms are added until
/// ell_k - 1 < tol * (p - 1), and the limit accumulates log(1 + p^{-k})
/// down to machine precision (relative accuracy of L well below 1e-10).
pub fn slicing(p: f64, tol: f64) -> Result<SlicingSequence> {
    if !(p > 1.0) {
        return Err(MgtError::InvalidParameter(format!("slicing needs p > 1, got {p}")));
    }
    if !(tol > 0.0) {
        return Err(MgtError::InvalidParameter(format!("tol = {tol} <= 0")));
    }
    let mut ell_seq = Vec::new();
    let mut l_partial_seq = Vec::new();
    let mut log_l = 0.0;
    let mut k = 0u32;
    loop {
        let e = ell(p, k);
        log_l += (p.powi(-(k as i32))).ln_1p();
        ell_seq.push(e);
        l_partial_seq.push(log_l.exp());
        let done = (e - 1.0) < tol * (p - 1.0) && ell_seq.len() >= SLICING_MIN_TERMS;
        if done {
            break;
        }
        k += 1;
        if k > 1_000_000 {
            return Err(MgtError::InvalidParameter(
                "slicing did not converge (p too close to 1 for the requested tol)".into(),
            ));
        }
    }
    // exhaust the tail: log(1 + x) terms below 1e-18 no longer move log_l
    let mut kk = k + 1;
    loop {
        let x = p.powi(-(kk as i32));
        if x < 1e-18 {
            break;
        }
        log_l += x.ln_1p();
        kk += 1;
    }
    Ok(SlicingSequence {
        p,
        ell: ell_seq,
        l_partial: l_partial_seq,
        l_limit: log_l.exp(),
    })
}

/// Closed-form exponents of the subcritical lower-bound sequence:
/// alpha_j = p^j (alpha_0 + (n-1)/2) - (n-1)/2,
/// gamma_j = p^j (gamma_0 + 1/(p-1)) - 1/(p-1),
/// with alpha_0 = (n-1)(p-1)/2 and gamma_0 = 1.
pub fn subcritical_closed_forms(j: u32, params: &ProblemParams) -> Result<(f64, f64)> {
    require_regime(params, Regime::Subcritical)?;
    let n = params.n as f64;
    let p = params.p;
    let alpha0 = (n - 1.0) * (p - 1.0) / 2.0;
    let gamma0 = 1.0;
    let pj = p.powi(j as i32);
    let alpha = pj * (alpha0 + (n - 1.0) / 2.0) - (n - 1.0) / 2.0;
    let gamma = pj * (gamma0 + 1.0 / (p - 1.0)) - 1.0 / (p - 1.0);
    Ok((alpha, gamma))
}

/// Critical counting exponent sigma_j = (p^j - 1)/(p - 1).
pub fn critical_sigma(j: u32, p: f64) -> f64 {
    (p.powi(j as i32) - 1.0) / (p - 1.0)
}

fn require_regime(params: &ProblemParams, required: Regime) -> Result<()> {
    let found = params.regime();
    if found != required {
        return Err(MgtError::RegimeMismatch { required, found });
    }
    Ok(())
}

/// Exponent theta = (n+1) - (n-1)p, positive in the subcritical range.
pub fn theta(n: u32, p: f64) -> f64 {
    (n as f64 + 1.0) - (n as f64 - 1.0) * p
}

/// Lifespan exponent 2(p-1)/((n+1)-(n-1)p).
pub fn subcritical_exponent(n: u32, p: f64) -> f64 {
    2.0 * (p - 1.0) / theta(n, p)
}

/// The same exponent in the form (1/(p-1) - (n-1)/2)^{-1}.
pub fn subcritical_exponent_alt(n: u32, p: f64) -> f64 {
    1.0 / (1.0 / (p - 1.0) - (n as f64 - 1.0) / 2.0)
}

/// First lower-bound constants from the data integrals:
/// C2 = (1/2) int u1 Phi + (beta/(2(beta+1)))(1 - 1/e) int u2 Phi,
/// K0 = C2^p C3 (1 - 1/e) eps^p / 4.
pub fn first_lower_bound_constants(
    params: &ProblemParams,
    int_u1_phi: f64,
    int_u2_phi: f64,
    c3: f64,
) -> Result<(f64, f64)> {
    let one_minus_inv_e = 1.0 - (-1f64).exp();
    let c2 = 0.5 * int_u1_phi
        + params.beta / (2.0 * (params.beta + 1.0)) * one_minus_inv_e * int_u2_phi;
    if !(c2 > 0.0) {
        return Err(MgtError::InvalidParameter(format!(
            "C2 = {c2} <= 0: u1 or u2 must not vanish identically"
        )));
    }
    let k0 = c2.powf(params.p) * c3 * one_minus_inv_e * params.epsilon.powf(params.p) / 4.0;
    Ok((c2, k0))
}

/// All sequences and constants of the subcritical iteration argument.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SubcriticalBundle {
    pub n: u32,
    pub p: f64,
    pub beta: f64,
    pub r_support: f64,
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    /// C3 = C1^{1-p}/(1+beta).
    pub c3: f64,
    pub alpha0: f64,
    pub gamma0: f64,
    /// alpha_j, gamma_j for j = 0..=j_max.
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
    /// log K_j for j = 0..=j_max, from the full recursion.
    pub log_k: Vec<f64>,
    /// Uniform lower bound of ell_j^{-gamma_j}.
    pub m_const: f64,
    pub d: f64,
    pub log_e: f64,
    pub e: f64,
    pub log_e1: f64,
    pub e1: f64,
    pub e2: f64,
    pub j0: usize,
    /// Admissible amplitude (numerical, not certified: depends on the
    /// numerical C1 estimate).
    pub eps0: f64,
    /// Limit of the slicing partial products.
    pub l_limit: f64,
}

/// Evaluates the whole subcritical constant chain. C1 comes from
/// `special_functions::estimate_c1`, C2 from
/// [`first_lower_bound_constants`].
pub fn subcritical_bundle(
    params: &ProblemParams,
    c1: f64,
    c2: f64,
    j_max: u32,
) -> Result<SubcriticalBundle> {
    require_regime(params, Regime::Subcritical)?;
    if !(c1 > 0.0 && c2 > 0.0) {
        return Err(MgtError::InvalidParameter(format!(
            "need positive constants, got C1 = {c1}, C2 = {c2}"
        )));
    }
    let n = params.n as f64;
    let p = params.p;
    let beta = params.beta;
    let eps = params.epsilon;
    let one_minus_inv_e = 1.0 - (-1f64).exp();

    let c3 = c1.powf(1.0 - p) / (1.0 + beta);
    let alpha0 = (n - 1.0) * (p - 1.0) / 2.0;
    let gamma0 = 1.0;
    let gamma_sum = gamma0 + 1.0 / (p - 1.0);

    let slices = slicing(p, 1e-12)?;

    // sequences: closed forms for the exponents, log recursion for K
    let mut alpha = Vec::with_capacity(j_max as usize + 1);
    let mut gamma = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        let (a, g) = subcritical_closed_forms(j, params)?;
        alpha.push(a);
        gamma.push(g);
    }
    let log_k0 =
        p * c2.ln() + c3.ln() + one_minus_inv_e.ln() + p * eps.ln() - 4f64.ln();
    let mut log_k = vec![log_k0];
    for j in 0..j_max as usize {
        let exponent = gamma[j] * p + 1.0;
        let next = (p - 1.0).ln() - 2.0 * (j as f64 + 1.0) * p.ln() + c3.ln()
            + p * log_k[j]
            - exponent.ln()
            - exponent * log_ell(p, j as u32 + 1);
        log_k.push(next);
    }

    // M: sampled minimum of ell_j^{-gamma_j} plus the analytic tail limit
    let mut m_const = (-gamma_sum).exp();
    for j in 0..=j_max {
        let val = (-gamma[j as usize] * log_ell(p, j)).exp();
        m_const = m_const.min(val);
    }

    let d = (p - 1.0) * m_const * c3 / gamma_sum;
    let log_e = d.ln() / (p - 1.0) - 3.0 * p * p.ln() / ((p - 1.0) * (p - 1.0))
        + p * c2.ln()
        + c3.ln()
        + one_minus_inv_e.ln()
        - 4f64.ln();
    let e = log_e.exp();
    let log_e1 = -(alpha0 + (n - 1.0) / 2.0 + gamma_sum) * 2f64.ln() + log_e;
    let e1 = log_e1.exp();

    let th = theta(params.n, p);
    debug_assert!(th > 0.0);
    let e2 = (-(2.0 * (p - 1.0) / (p * th)) * log_e1).exp();

    let j0_real = d.ln() / (3.0 * p.ln()) - p / (p - 1.0);
    let j0 = if j0_real <= 0.0 { 0 } else { j0_real.ceil() as usize };
    if (j_max as usize) < j0 {
        return Err(MgtError::InvalidParameter(format!(
            "j_max = {j_max} below the threshold index j0 = {j0}"
        )));
    }

    // eps0 solves the fixing inequality with equality:
    // eps0^{-2(p-1)/theta} = E1^{2(p-1)/(p theta)} max{R, 2L}.
    let scale = params.r_support.max(2.0 * slices.l_limit);
    let log_eps0 = -log_e1 / p - th / (2.0 * (p - 1.0)) * scale.ln();
    let eps0 = log_eps0.exp();
    // a-posteriori check of the display at the returned eps0
    let lhs = -(2.0 * (p - 1.0) / th) * log_eps0;
    let rhs = (2.0 * (p - 1.0) / (p * th)) * log_e1 + scale.ln();
    if lhs < rhs - 1e-9 * (1.0 + rhs.abs()) {
        return Err(MgtError::InvalidParameter(format!(
            "eps0 fixing display violated: {lhs} < {rhs}"
        )));
    }

    let bundle = SubcriticalBundle {
        n: params.n,
        p,
        beta,
        r_support: params.r_support,
        epsilon: eps,
        c1,
        c2,
        c3,
        alpha0,
        gamma0,
        alpha,
        gamma,
        log_k,
        m_const,
        d,
        log_e,
        e,
        log_e1,
        e1,
        e2,
        j0,
        eps0,
        l_limit: slices.l_limit,
    };
    Ok(bundle)
}

impl SubcriticalBundle {
    /// Margins (log K_j - p^j log(E eps^p)) / p^j for j0 <= j <= j_max;
    /// all must be nonnegative for the iteration chain to be coherent.
    pub fn k_floor_margins(&self) -> Vec<f64> {
        let floor = self.log_e + self.p * self.epsilon.ln();
        (self.j0..self.log_k.len())
            .map(|j| {
                let pj = self.p.powi(j as i32);
                (self.log_k[j] - pj * floor) / pj
            })
            .collect()
    }

    /// Positivity of the divergence bracket
    /// log(E1 eps^p t^{p theta / (2(p-1))}) at time t.
    pub fn divergence_bracket(&self, t: f64) -> f64 {
        let th = theta(self.n, self.p);
        self.log_e1
            + self.p * self.epsilon.ln()
            + self.p * th / (2.0 * (self.p - 1.0)) * t.ln()
    }
}

/// Lifespan bound with its guarantee flag. The critical bound is a double
/// exponential in 1/eps and routinely overflows f64, so the log is the
/// authoritative field; `value` is its exponential (possibly +inf).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LifespanBound {
    pub value: f64,
    pub log_value: f64,
    /// False when eps > eps0: the bound formula is still evaluated but is
    /// not covered by the blow-up argument.
    pub guaranteed: bool,
}

/// T(eps) <= E2 eps^{-2(p-1)/((n+1)-(n-1)p)}. Also evaluates the
/// equivalent exponent form (1/(p-1) - (n-1)/2)^{-1} and insists the two
/// agree to 1e-12.
pub fn lifespan_bound_subcritical(
    bundle: &SubcriticalBundle,
    params: &ProblemParams,
) -> Result<LifespanBound> {
    require_regime(params, Regime::Subcritical)?;
    let a = subcritical_exponent(params.n, params.p);
    let b = subcritical_exponent_alt(params.n, params.p);
    if (a - b).abs() > 1e-12 * a.abs() {
        return Err(MgtError::InvalidParameter(format!(
            "exponent forms disagree: {a} vs {b}"
        )));
    }
    let log_value = bundle.e2.ln() - a * params.epsilon.ln();
    Ok(LifespanBound {
        value: log_value.exp(),
        log_value,
        guaranteed: params.epsilon <= bundle.eps0,
    })
}

/// All sequences and constants of the critical iteration argument.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriticalBundle {
    pub n: u32,
    pub p: f64,
    pub beta: f64,
    pub r_support: f64,
    pub epsilon: f64,
    pub c2: f64,
    pub c3: f64,
    /// C4 = C3/(1+R), the sharpest uniform constant for the step from
    /// (s+R)^{-1} to s^{-1} on s >= 1.
    pub c4: f64,
    /// sigma_j for j = 0..=j_max.
    pub sigma: Vec<f64>,
    /// log Q_j for j = 0..=j_max.
    pub log_q: Vec<f64>,
    pub d_tilde: f64,
    pub e_tilde: f64,
    pub j1: usize,
    /// The paper's critical fixing condition holds for every positive
    /// amplitude, so eps0 is unconstrained (reported as +inf).
    pub eps0: f64,
    pub l_limit: f64,
}

/// Evaluates the critical constant chain (p = p_Gla(n), n >= 2).
pub fn critical_bundle(
    params: &ProblemParams,
    c3: f64,
    c2: f64,
    j_max: u32,
) -> Result<CriticalBundle> {
    require_regime(params, Regime::Critical)?;
    if !(c3 > 0.0 && c2 > 0.0) {
        return Err(MgtError::InvalidParameter(format!(
            "need positive constants, got C3 = {c3}, C2 = {c2}"
        )));
    }
    let p = params.p;
    let eps = params.epsilon;
    let c4 = c3 / (1.0 + params.r_support);

    let slices = slicing(p, 1e-12)?;

    let mut sigma = Vec::with_capacity(j_max as usize + 1);
    for j in 0..=j_max {
        sigma.push(critical_sigma(j, p));
    }
    let mut log_q = vec![(c2 * eps).ln()];
    for j in 0..j_max as usize {
        let next = c4.ln() + p * log_q[j] + (p - 1.0).ln()
            - 2.0 * (j as f64 + 1.0) * p.ln()
            - (sigma[j] * p + 1.0).ln();
        log_q.push(next);
    }

    let d_tilde = c4 * (p - 1.0) * (p - 1.0);
    let e_tilde =
        (d_tilde.ln() / (p - 1.0) - 3.0 * p * p.ln() / ((p - 1.0) * (p - 1.0)) + c2.ln()).exp();
    let j1_real = d_tilde.ln() / (3.0 * p.ln()) - p / (p - 1.0);
    let j1 = if j1_real <= 0.0 { 0 } else { j1_real.ceil() as usize };
    if (j_max as usize) < j1 {
        return Err(MgtError::InvalidParameter(format!(
            "j_max = {j_max} below the threshold index j1 = {j1}"
        )));
    }

    Ok(CriticalBundle {
        n: params.n,
        p,
        beta: params.beta,
        r_support: params.r_support,
        epsilon: eps,
        c2,
        c3,
        c4,
        sigma,
        log_q,
        d_tilde,
        e_tilde,
        j1,
        eps0: f64::INFINITY,
        l_limit: slices.l_limit,
    })
}

impl CriticalBundle {
    /// Margins (log Q_j - p^j log(E~ eps)) / p^j for j1 <= j <= j_max.
    pub fn q_floor_margins(&self) -> Vec<f64> {
        let floor = (self.e_tilde * self.epsilon).ln();
        (self.j1..self.log_q.len())
            .map(|j| {
                let pj = self.p.powi(j as i32);
                (self.log_q[j] - pj * floor) / pj
            })
            .collect()
    }
}

/// T(eps) <= L exp(E~^{-(p-1)} eps^{-(p-1)}).
pub fn lifespan_bound_critical(
    bundle: &CriticalBundle,
    params: &ProblemParams,
    l_limit: f64,
) -> Result<LifespanBound> {
    require_regime(params, Regime::Critical)?;
    let p = params.p;
    let log_value =
        l_limit.ln() + bundle.e_tilde.powf(-(p - 1.0)) * params.epsilon.powf(-(p - 1.0));
    Ok(LifespanBound {
        value: log_value.exp(),
        log_value,
        guaranteed: true, // eps0 is unconstrained in the critical case
    })
}

/// Worst margin of the slicing inequality
/// 1 - e^{2t(1/ell_{j+1} - 1)} >= 2(p-1) p^{-2(j+1)} over `t_samples`,
/// all of which must be >= L_{j+1}.
pub fn verify_slicing_inequality(p: f64, j: u32, t_samples: &[f64]) -> Result<f64> {
    if !(p > 1.0) {
        return Err(MgtError::InvalidParameter(format!("p = {p} <= 1")));
    }
    let ell_next = ell(p, j + 1);
    let l_next = l_partial(p, j + 1);
    let rhs = 2.0 * (p - 1.0) * p.powi(-2 * (j as i32 + 1));
    let mut worst = f64::INFINITY;
    for &t in t_samples {
        if t < l_next * (1.0 - 1e-12) {
            return Err(MgtError::InvalidParameter(format!(
                "sample t = {t} below L_{} = {l_next}",
                j + 1
            )));
        }
        let lhs = 1.0 - (2.0 * t * (1.0 / ell_next - 1.0)).exp();
        worst = worst.min(lhs - rhs);
    }
    if t_samples.is_empty() {
        return Err(MgtError::InvalidParameter("no samples supplied".into()));
    }
    Ok(worst)
}
