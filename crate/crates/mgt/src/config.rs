//! Shared problem description and run configuration.
//!
//! A run is described by a JSON file with sections `problem`, `data`,
//! `solver` and (optionally) `sweep`; unknown keys are rejected.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{MgtError, Result};

/// Position of (n, p) relative to the Glassey exponent p_Gla(n) = (n+1)/(n-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::Subcritical => "subcritical",
            Regime::Critical => "critical",
            Regime::Supercritical => "supercritical",
        };
        f.write_str(s)
    }
}

/// The scalar quintuple (n, p, beta, R, epsilon) after the normalization
/// c^2 = 1.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemParams {
    /// Spatial dimension, n >= 1.
    pub n: u32,
    /// Nonlinearity exponent, p > 1.
    pub p: f64,
    /// Relaxation parameter, beta > 0.
    pub beta: f64,
    /// Radius of the initial data support.
    #[serde(rename = "R")]
    pub r_support: f64,
    /// Data amplitude.
    pub epsilon: f64,
}

impl ProblemParams {
    pub fn new(n: u32, p: f64, beta: f64, r_support: f64, epsilon: f64) -> Result<Self> {
        let params = ProblemParams {
            n,
            p,
            beta,
            r_support,
            epsilon,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(MgtError::InvalidParameter(format!("n = {} < 1", self.n)));
        }
        if !(self.p > 1.0) {
            return Err(MgtError::InvalidParameter(format!("p = {} <= 1", self.p)));
        }
        if !(self.beta > 0.0) {
            return Err(MgtError::InvalidParameter(format!(
                "beta = {} <= 0",
                self.beta
            )));
        }
        if !(self.r_support > 0.0) {
            return Err(MgtError::InvalidParameter(format!(
                "R = {} <= 0",
                self.r_support
            )));
        }
        if !(self.epsilon > 0.0) {
            return Err(MgtError::InvalidParameter(format!(
                "epsilon = {} <= 0",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn regime(&self) -> Regime {
        classify_regime(self)
    }

    /// Glassey exponent p_Gla(n) = (n+1)/(n-1); infinite for n = 1.
    pub fn glassey_exponent(n: u32) -> f64 {
        if n == 1 {
            f64::INFINITY
        } else {
            (n as f64 + 1.0) / (n as f64 - 1.0)
        }
    }
}

/// Relative tolerance for deciding p = p_Gla(n). The critical case is
/// typically requested by constructing p from the formula, so exact
/// rational input is not required.
pub const CRITICAL_REL_TOL: f64 = 1e-12;

/// Classifies (n, p) against the Glassey exponent. Total function; the tag
/// depends on n and p only.
pub fn classify_regime(params: &ProblemParams) -> Regime {
    if params.n == 1 {
        return Regime::Subcritical;
    }
    let p_gla = ProblemParams::glassey_exponent(params.n);
    if (params.p - p_gla).abs() <= CRITICAL_REL_TOL * p_gla {
        Regime::Critical
    } else if params.p < p_gla {
        Regime::Subcritical
    } else {
        Regime::Supercritical
    }
}

/// Parametric family of initial data u_i(x) = A_i (1 - |x|^2/R^2)_+^m.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataShape {
    pub amplitude_u0: f64,
    pub amplitude_u1: f64,
    pub amplitude_u2: f64,
    /// Bump exponent; m >= 3 keeps the data in H^2.
    pub m: u32,
}

impl Default for DataShape {
    fn default() -> Self {
        DataShape {
            amplitude_u0: 0.0,
            amplitude_u1: 1.0,
            amplitude_u2: 0.0,
            m: 3,
        }
    }
}

impl DataShape {
    pub fn validate(&self) -> Result<()> {
        if self.amplitude_u0 < 0.0 || self.amplitude_u1 < 0.0 || self.amplitude_u2 < 0.0 {
            return Err(MgtError::InvalidParameter(
                "data amplitudes must be nonnegative".into(),
            ));
        }
        if self.amplitude_u1 + self.amplitude_u2 <= 0.0 {
            return Err(MgtError::InvalidParameter(
                "u1 or u2 must not vanish identically (amplitude_u1 + amplitude_u2 > 0)".into(),
            ));
        }
        if self.m < 3 {
            return Err(MgtError::InvalidParameter(format!(
                "bump exponent m = {} < 3",
                self.m
            )));
        }
        Ok(())
    }
}

/// Discretization and termination controls for a single evolution run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub r_max: f64,
    pub num_cells: usize,
    pub cfl: f64,
    pub t_max: f64,
    pub blowup_threshold: f64,
    pub dt_min: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            r_max: 6.0,
            num_cells: 1024,
            cfl: 0.4,
            t_max: 4.0,
            blowup_threshold: 1e8,
            dt_min: 1e-10,
        }
    }
}

impl SolverConfig {
    pub fn dr(&self) -> f64 {
        self.r_max / self.num_cells as f64
    }

    /// Checks that the support cone of a run with data radius `r_support`
    /// never reaches the outer boundary before t_max.
    pub fn validate(&self, r_support: f64) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(MgtError::InvalidParameter(format!(
                "cfl = {} not in (0, 1]",
                self.cfl
            )));
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(MgtError::InvalidParameter(
                "blowup_threshold must be positive".into(),
            ));
        }
        if !(self.dt_min > 0.0) {
            return Err(MgtError::InvalidParameter("dt_min must be positive".into()));
        }
        if self.num_cells < 2 {
            return Err(MgtError::InvalidParameter(
                "num_cells must be at least 2".into(),
            ));
        }
        if !(self.t_max > 0.0) {
            return Err(MgtError::InvalidParameter("t_max must be positive".into()));
        }
        let needed = self.t_max + r_support + 2.0 * self.dr();
        if self.r_max < needed {
            return Err(MgtError::ConeViolation {
                t: self.t_max,
                needed_r_max: needed,
                r_max: self.r_max,
            });
        }
        Ok(())
    }
}

/// Sweep section of a run configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Strictly decreasing amplitudes.
    pub epsilons: Vec<f64>,
    /// Grid resolutions; the last (finest) one feeds lifespan fits.
    pub resolutions: Vec<usize>,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilons.is_empty() {
            return Ok(());
        }
        for w in self.epsilons.windows(2) {
            if w[1] >= w[0] {
                return Err(MgtError::InvalidParameter(
                    "sweep epsilons must be strictly decreasing".into(),
                ));
            }
        }
        if self.epsilons.iter().any(|&e| e <= 0.0) {
            return Err(MgtError::InvalidParameter(
                "sweep epsilons must be positive".into(),
            ));
        }
        if self.resolutions.is_empty() {
            return Err(MgtError::InvalidParameter(
                "sweep needs at least one resolution".into(),
            ));
        }
        Ok(())
    }
}

/// Full run configuration as read from a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemParams,
    pub data: DataShape,
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.problem.validate()?;
        self.data.validate()?;
        self.solver.validate(self.problem.r_support)?;
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(n: u32, p: f64) -> ProblemParams {
        ProblemParams::new(n, p, 1.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn regime_examples() {
        assert_eq!(classify_regime(&params(3, 2.0)), Regime::Critical);
        assert_eq!(classify_regime(&params(1, 7.0)), Regime::Subcritical);
        assert_eq!(classify_regime(&params(2, 2.0)), Regime::Subcritical);
        assert_eq!(classify_regime(&params(2, 3.5)), Regime::Supercritical);
    }

    #[test]
    fn critical_exact_at_glassey() {
        for n in 2..=10 {
            let p = ProblemParams::glassey_exponent(n);
            assert_eq!(classify_regime(&params(n, p)), Regime::Critical, "n = {n}");
        }
    }

    #[test]
    fn rejects_bad_params() {
        assert!(ProblemParams::new(0, 2.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(1, 1.0, 1.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(1, 2.0, 0.0, 1.0, 1.0).is_err());
        assert!(ProblemParams::new(1, 2.0, 1.0, -1.0, 1.0).is_err());
        assert!(ProblemParams::new(1, 2.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn data_shape_hypothesis() {
        let shape = DataShape {
            amplitude_u0: 1.0,
            amplitude_u1: 0.0,
            amplitude_u2: 0.0,
            m: 3,
        };
        assert!(shape.validate().is_err());
        assert!(DataShape::default().validate().is_ok());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let text = r#"{
            "problem": {"n": 1, "p": 2.0, "beta": 1.0, "R": 1.0, "epsilon": 1.0},
            "data": {"amplitude_u0": 0.0, "amplitude_u1": 1.0, "amplitude_u2": 0.0, "m": 3},
            "solver": {"r_max": 6.0, "num_cells": 512, "cfl": 0.4, "t_max": 4.0,
                       "blowup_threshold": 1e8, "dt_min": 1e-10, "bogus": 1}
        }"#;
        assert!(RunConfig::from_json(text).is_err());
    }

    #[test]
    fn cone_containment_enforced() {
        let solver = SolverConfig {
            r_max: 4.0,
            t_max: 4.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solver.validate(1.0),
            Err(MgtError::ConeViolation { .. })
        ));
    }

    proptest! {
        // The tag is a function of (n, p) only.
        #[test]
        fn regime_scale_free(n in 1u32..8, p in 1.01f64..6.0,
                             beta in 0.01f64..100.0, r in 0.01f64..100.0,
                             eps in 1e-6f64..1e6) {
            let a = classify_regime(&params(n, p));
            let b = classify_regime(&ProblemParams::new(n, p, beta, r, eps).unwrap());
            prop_assert_eq!(a, b);
        }
    }
}
