//! Amplitude sweeps, lifespan scaling fits, and the numerics-vs-theory
//! bound comparison. Sweep entries run concurrently but merge by plan
//! index, so the emitted CSV is byte-identical across reruns.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bound_engine::{subcritical_exponent_alt, LifespanBound};
use crate::config::{ProblemParams, Regime, RunConfig};
use crate::functionals::FunctionalProbe;
use crate::mgt_system::{evolve, make_initial_data, EvolveOptions, RadialMesh, RunStatus};
use crate::{MgtError, Result};

/// Expanded list of planned runs (amplitude x mesh resolution).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepPlan {
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    /// Coarsest to finest.
    pub resolutions: Vec<usize>,
    pub regime: Regime,
}

impl SweepPlan {
    pub fn from_config(config: &RunConfig) -> Result<Self> {
        let sweep = config.sweep.as_ref().ok_or_else(|| {
            MgtError::Config("config has no `sweep` section".into())
        })?;
        sweep.validate()?;
        let mut resolutions = sweep.resolutions.clone();
        if resolutions.is_empty() {
            resolutions.push(config.solver.num_cells);
        }
        resolutions.sort_unstable();
        Ok(SweepPlan {
            epsilons: sweep.epsilons.clone(),
            resolutions,
            regime: config.problem.regime(),
        })
    }

    fn finest(&self) -> usize {
        *self.resolutions.last().expect("non-empty resolutions")
    }
}

/// One CSV row of a sweep: outcome at the finest resolution with the
/// next-coarser detection time as an uncertainty column.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRecord {
    pub epsilon: f64,
    /// Finest resolution used for this row.
    pub num_cells: usize,
    /// "blew_up", "survived", or "error".
    pub status: String,
    pub t_detect: Option<f64>,
    /// Detection time at the next-coarser resolution, when available.
    pub t_detect_coarse: Option<f64>,
    pub t_bound_theory: Option<f64>,
    /// F1 at t = 1/2 (linear interpolation of the functional trace).
    pub f1_at_half: Option<f64>,
    /// bound - t_detect, when both exist.
    pub margin: Option<f64>,
    /// Failure description for status = "error".
    pub error: Option<String>,
}

struct RunOutcome {
    status: RunStatus,
    t_detect: Option<f64>,
    f1_at_half: Option<f64>,
}

fn single_run(
    config: &RunConfig,
    epsilon: f64,
    num_cells: usize,
    with_trace: bool,
) -> Result<RunOutcome> {
    let params = ProblemParams {
        epsilon,
        ..config.problem
    };
    params.validate()?;
    let mut solver = config.solver.clone();
    solver.num_cells = num_cells;
    let mesh = RadialMesh::new(params.n, solver.r_max, num_cells)?;
    let initial = make_initial_data(&params, &config.data, &mesh)?;
    let total_steps = (solver.t_max / (solver.cfl * mesh.dr)).ceil() as usize;
    let stride = (total_steps / 2048).max(1);
    if with_trace {
        let mut probe = FunctionalProbe::new(&params, &config.data, &mesh, stride)?;
        let record = {
            let mut probes: [&mut dyn crate::mgt_system::StepProbe; 1] = [&mut probe];
            evolve(
                initial,
                &params,
                &solver,
                &mesh,
                EvolveOptions::default(),
                &mut probes,
            )?
        };
        let f1_at_half = interp_at(&probe.trace.times, &probe.trace.f1, 0.5);
        return Ok(RunOutcome {
            status: record.status,
            t_detect: record.t_detect,
            f1_at_half,
        });
    }
    let record = evolve(
        initial,
        &params,
        &solver,
        &mesh,
        EvolveOptions::default(),
        &mut [],
    )?;
    Ok(RunOutcome {
        status: record.status,
        t_detect: record.t_detect,
        f1_at_half: None,
    })
}

/// Linear interpolation of (xs, ys) at x; None when x is outside the range.
fn interp_at(xs: &[f64], ys: &[f64], x: f64) -> Option<f64> {
    if xs.len() < 2 || x < xs[0] || x > *xs.last().unwrap() {
        return None;
    }
    let k = xs.partition_point(|&t| t <= x).min(xs.len() - 1).max(1);
    let (x0, x1) = (xs[k - 1], xs[k]);
    let (y0, y1) = (ys[k - 1], ys[k]);
    if x1 == x0 {
        return Some(y0);
    }
    Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
}

/// Runs the full plan: for every amplitude, one evolve per resolution.
/// Each row reports the finest-resolution outcome; a per-run failure
/// becomes a structured "error" row and never aborts the sweep. The
/// optional `bound` evaluates the theoretical lifespan bound at eps.
pub fn run_sweep(
    plan: &SweepPlan,
    config: &RunConfig,
    bound: Option<&(dyn Fn(f64) -> LifespanBound + Sync)>,
) -> Vec<SweepRecord> {
    let finest = if plan.resolutions.is_empty() {
        return Vec::new();
    } else {
        plan.finest()
    };
    let coarse = if plan.resolutions.len() >= 2 {
        Some(plan.resolutions[plan.resolutions.len() - 2])
    } else {
        None
    };
    plan.epsilons
        .par_iter()
        .map(|&eps| {
            let fine = single_run(config, eps, finest, true);
            let coarse_t = coarse.and_then(|cells| {
                single_run(config, eps, cells, false)
                    .ok()
                    .and_then(|o| o.t_detect)
            });
            match fine {
                Ok(outcome) => {
                    let t_bound = bound.map(|b| b(eps));
                    let margin = match (&outcome.t_detect, &t_bound) {
                        (Some(t), Some(b)) => Some(b.value - t),
                        _ => None,
                    };
                    SweepRecord {
                        epsilon: eps,
                        num_cells: finest,
                        status: match outcome.status {
                            RunStatus::BlewUp => "blew_up".into(),
                            RunStatus::Survived => "survived".into(),
                        },
                        t_detect: outcome.t_detect,
                        t_detect_coarse: coarse_t,
                        t_bound_theory: t_bound.map(|b| b.value),
                        f1_at_half: outcome.f1_at_half,
                        margin,
                        error: None,
                    }
                }
                Err(err) => SweepRecord {
                    epsilon: eps,
                    num_cells: finest,
                    status: "error".into(),
                    t_detect: None,
                    t_detect_coarse: None,
                    t_bound_theory: None,
                    f1_at_half: None,
                    margin: None,
                    error: Some(err.to_string()),
                },
            }
        })
        .collect()
}

const CSV_HEADER: &str =
    "epsilon,num_cells,status,t_detect,t_detect_coarse,t_bound_theory,F1_at_half,margin";

fn csv_field(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.17e}"),
        None => String::new(),
    }
}

/// Deterministic CSV serialization (fixed 17-digit scientific notation).
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{:.17e},{},{},{},{},{},{},{}\n",
            r.epsilon,
            r.num_cells,
            r.status,
            csv_field(r.t_detect),
            csv_field(r.t_detect_coarse),
            csv_field(r.t_bound_theory),
            csv_field(r.f1_at_half),
            csv_field(r.margin),
        ));
    }
    out
}

pub fn records_from_csv(text: &str) -> Result<Vec<SweepRecord>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| MgtError::InsufficientRecords("empty CSV".into()))?;
    if header.trim() != CSV_HEADER {
        return Err(MgtError::InsufficientRecords(format!(
            "unexpected CSV header: {header}"
        )));
    }
    let parse_opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse::<f64>()
                .map(Some)
                .map_err(|e| MgtError::InsufficientRecords(format!("bad float {s}: {e}")))
        }
    };
    let mut records = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(MgtError::InsufficientRecords(format!(
                "expected 8 columns, got {} in: {line}",
                cols.len()
            )));
        }
        records.push(SweepRecord {
            epsilon: cols[0].parse().map_err(|e| {
                MgtError::InsufficientRecords(format!("bad epsilon {}: {e}", cols[0]))
            })?,
            num_cells: cols[1].parse().map_err(|e| {
                MgtError::InsufficientRecords(format!("bad num_cells {}: {e}", cols[1]))
            })?,
            status: cols[2].to_string(),
            t_detect: parse_opt(cols[3])?,
            t_detect_coarse: parse_opt(cols[4])?,
            t_bound_theory: parse_opt(cols[5])?,
            f1_at_half: parse_opt(cols[6])?,
            margin: parse_opt(cols[7])?,
            error: None,
        });
    }
    Ok(records)
}

/// Least-squares scaling fit against the theoretical lifespan exponent.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScalingFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub theory_slope: f64,
    pub relative_gap: f64,
}

fn least_squares(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).min(1.0) };
    (slope, intercept, r2)
}

fn blowup_samples(records: &[SweepRecord]) -> Result<Vec<(f64, f64)>> {
    let samples: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.status == "blew_up")
        .filter_map(|r| r.t_detect.map(|t| (r.epsilon, t)))
        .collect();
    if samples.len() < 4 {
        return Err(MgtError::InsufficientRecords(format!(
            "need >= 4 detected blow-ups, got {}",
            samples.len()
        )));
    }
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &(e, _) in &samples {
        lo = lo.min(e);
        hi = hi.max(e);
    }
    if hi / lo < 10.0 * (1.0 - 1e-12) {
        return Err(MgtError::InsufficientRecords(format!(
            "amplitudes span {:.3}x, need at least one decade",
            hi / lo
        )));
    }
    Ok(samples)
}

/// Fits log T_detect = slope * log eps + intercept; the comparison target
/// is -(1/(p-1) - (n-1)/2)^{-1}.
pub fn fit_subcritical(records: &[SweepRecord], params: &ProblemParams) -> Result<ScalingFit> {
    if params.regime() != Regime::Subcritical {
        return Err(MgtError::RegimeMismatch {
            required: Regime::Subcritical,
            found: params.regime(),
        });
    }
    let samples = blowup_samples(records)?;
    let xs: Vec<f64> = samples.iter().map(|&(e, _)| e.ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, t)| t.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    let theory_slope = -subcritical_exponent_alt(params.n, params.p);
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        theory_slope,
        relative_gap: (slope - theory_slope).abs() / theory_slope.abs(),
    })
}

/// Fits log T_detect = slope * eps^{-(p-1)} + intercept; a positive slope
/// indicates the exponential lifespan law.
pub fn fit_critical(records: &[SweepRecord], params: &ProblemParams) -> Result<ScalingFit> {
    if params.regime() != Regime::Critical {
        return Err(MgtError::RegimeMismatch {
            required: Regime::Critical,
            found: params.regime(),
        });
    }
    let samples = blowup_samples(records)?;
    let xs: Vec<f64> = samples
        .iter()
        .map(|&(e, _)| e.powf(-(params.p - 1.0)))
        .collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, t)| t.ln()).collect();
    let (slope, intercept, r_squared) = least_squares(&xs, &ys);
    Ok(ScalingFit {
        slope,
        intercept,
        r_squared,
        theory_slope: slope, // no sharp constant is claimed; report the fit itself
        relative_gap: 0.0,
    })
}

/// One line of the bound-consistency report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub epsilon: f64,
    pub t_detect: f64,
    pub bound: f64,
    pub margin: f64,
    /// False when eps > eps0: informational only, excluded from assertions.
    pub checked: bool,
    pub violated: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundComparison {
    pub entries: Vec<ComparisonEntry>,
    pub num_checked: usize,
    pub num_violations: usize,
}

/// Checks every detected blow-up against its theoretical bound.
/// Records with eps > eps0 are reported but never asserted; survivors and
/// error rows are skipped.
pub fn compare_bounds(records: &[SweepRecord], eps0: f64) -> BoundComparison {
    let mut entries = Vec::new();
    let mut num_checked = 0;
    let mut num_violations = 0;
    for r in records {
        let (Some(t), Some(b)) = (r.t_detect, r.t_bound_theory) else {
            continue;
        };
        let checked = r.epsilon <= eps0;
        let violated = checked && t > b;
        if checked {
            num_checked += 1;
        }
        if violated {
            num_violations += 1;
        }
        entries.push(ComparisonEntry {
            epsilon: r.epsilon,
            t_detect: t,
            bound: b,
            margin: b - t,
            checked,
            violated,
        });
    }
    BoundComparison {
        entries,
        num_checked,
        num_violations,
    }
}
