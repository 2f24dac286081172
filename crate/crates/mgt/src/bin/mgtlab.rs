//! Command-line front end: eigenfunction values, simulations, functional
//! traces, bound bundles, sweeps, fits, and the bound-consistency check.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use mgtlab::bound_engine::{
    critical_bundle, first_lower_bound_constants, lifespan_bound_critical,
    lifespan_bound_subcritical, subcritical_bundle, CriticalBundle, LifespanBound,
    SubcriticalBundle,
};
use mgtlab::config::{Regime, RunConfig};
use mgtlab::experiments::{
    compare_bounds, fit_critical, fit_subcritical, records_from_csv, records_to_csv, run_sweep,
    SweepPlan,
};
use mgtlab::functionals::{identity_residual_eq01, FunctionalProbe};
use mgtlab::mgt_system::{
    evolve, make_initial_data, EvolveOptions, FieldState, RadialMesh, SourceTerm, StepProbe,
};
use mgtlab::special_functions::{estimate_c1, phi, EigenfunctionEvaluator};
use mgtlab::{MgtError, Result};

#[derive(Parser)]
#[command(name = "mgtlab", about = "Radial blow-up laboratory for a third-order acoustic wave model", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the eigenfunction Phi(r) of Delta Phi = Phi.
    Phi {
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: f64,
    },
    /// Estimate the test-function integral bound C1 = sup_t int Psi dx / (1+t+R)^{(n-1)/2}.
    C1 {
        #[arg(long)]
        n: u32,
        #[arg(long = "R")]
        r_support: f64,
        #[arg(long, default_value_t = 50.0)]
        horizon: f64,
        #[arg(long, default_value_t = 48)]
        samples: usize,
    },
    /// Run one simulation from a config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Switch the |u_t|^p source off (linear evolution).
        #[arg(long)]
        linear: bool,
        /// Drop the Laplacian: every node follows the blow-up ODE.
        #[arg(long)]
        homogeneous: bool,
        /// Write a state snapshot CSV every k accepted steps (0 = none).
        #[arg(long, default_value_t = 0)]
        dump_every: usize,
        /// Directory for snapshot files.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Run a simulation and write the functional trace CSV.
    Functionals {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate the full constant chain and lifespan bound.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 40)]
        jmax: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the amplitude sweep from the config's sweep section.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the lifespan scaling law to sweep records.
    Fit {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// subcritical or critical; defaults to the config's regime.
        #[arg(long)]
        regime: Option<String>,
    },
    /// Check detected blow-up times against a bound bundle.
    Compare {
        #[arg(long)]
        records: PathBuf,
        #[arg(long)]
        bundle: PathBuf,
    },
}

/// On-disk form of `bounds` output, reused by `compare`.
#[derive(Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
enum BundleFile {
    Subcritical {
        #[serde(flatten)]
        bundle: SubcriticalBundle,
        bound: LifespanBound,
    },
    Critical {
        #[serde(flatten)]
        bundle: CriticalBundle,
        bound: LifespanBound,
    },
}

fn build_bundle(config: &RunConfig, jmax: u32) -> Result<BundleFile> {
    let params = &config.problem;
    let mesh = RadialMesh::new(params.n, config.solver.r_max, config.solver.num_cells)?;
    let evaluator = EigenfunctionEvaluator::new(params.n)?;
    let (int_u1, int_u2) =
        mgtlab::functionals::data_phi_integrals(&config.data, params, &mesh, &evaluator)?;
    let c1 = estimate_c1(params.n, params.r_support, 50.0, 48)?;
    let c3 = c1.powf(1.0 - params.p) / (1.0 + params.beta);
    let (c2, _k0) = first_lower_bound_constants(params, int_u1, int_u2, c3)?;
    match params.regime() {
        Regime::Subcritical => {
            let bundle = subcritical_bundle(params, c1, c2, jmax)?;
            let bound = lifespan_bound_subcritical(&bundle, params)?;
            Ok(BundleFile::Subcritical { bundle, bound })
        }
        Regime::Critical => {
            let bundle = critical_bundle(params, c3, c2, jmax)?;
            let bound = lifespan_bound_critical(&bundle, params, bundle.l_limit)?;
            Ok(BundleFile::Critical { bundle, bound })
        }
        Regime::Supercritical => Err(MgtError::RegimeMismatch {
            required: Regime::Subcritical,
            found: Regime::Supercritical,
        }),
    }
}

/// Probe writing `r,u,v,w` snapshot CSVs every `every` steps.
struct SnapshotDumper {
    every: usize,
    counter: usize,
    dir: PathBuf,
    written: usize,
}

impl StepProbe for SnapshotDumper {
    fn on_step(&mut self, state: &FieldState, mesh: &RadialMesh) -> Result<()> {
        let take = self.counter % self.every == 0;
        self.counter += 1;
        if !take {
            return Ok(());
        }
        let mut text = format!("# t={:.12e}\nr,u,v,w\n", state.t);
        for i in 0..mesh.num_nodes() {
            text.push_str(&format!(
                "{:.12e},{:.12e},{:.12e},{:.12e}\n",
                mesh.r(i),
                state.u[i],
                state.v[i],
                state.w[i]
            ));
        }
        let path = self.dir.join(format!("snapshot_{:06}.csv", self.written));
        std::fs::write(path, text)?;
        self.written += 1;
        Ok(())
    }
}

fn cmd_simulate(
    config_path: &PathBuf,
    linear: bool,
    homogeneous: bool,
    dump_every: usize,
    out_dir: &PathBuf,
) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let mesh = RadialMesh::new(
        config.problem.n,
        config.solver.r_max,
        config.solver.num_cells,
    )?;
    let initial = make_initial_data(&config.problem, &config.data, &mesh)?;
    let opts = EvolveOptions {
        source: if linear {
            SourceTerm::Zero
        } else {
            SourceTerm::PowerLaw
        },
        homogeneous,
    };
    let mut dumper = SnapshotDumper {
        every: dump_every.max(1),
        counter: 0,
        dir: out_dir.clone(),
        written: 0,
    };
    let mut probes: Vec<&mut dyn StepProbe> = Vec::new();
    if dump_every > 0 {
        std::fs::create_dir_all(out_dir)?;
        probes.push(&mut dumper);
    }
    let record = evolve(initial, &config.problem, &config.solver, &mesh, opts, &mut probes)?;
    match record.t_detect {
        Some(t) => println!(
            "blew_up t_detect={t:.12e} epsilon={} cells={}",
            record.epsilon, record.resolution
        ),
        None => println!(
            "survived t_max={} epsilon={} cells={}",
            config.solver.t_max, record.epsilon, record.resolution
        ),
    }
    if dump_every > 0 {
        println!("snapshots={} dir={}", dumper.written, out_dir.display());
    }
    Ok(())
}

fn cmd_functionals(config_path: &PathBuf, out: &PathBuf) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let params = &config.problem;
    let mesh = RadialMesh::new(params.n, config.solver.r_max, config.solver.num_cells)?;
    let initial = make_initial_data(params, &config.data, &mesh)?;
    let dt = config.solver.cfl * mesh.dr;
    let total_steps = (config.solver.t_max / dt).ceil() as usize;
    let stride = (total_steps / 4096).max(1);
    let mut probe = FunctionalProbe::new(params, &config.data, &mesh, stride)?;
    let mut last_state = LastState::default();
    let record = {
        let mut probes: [&mut dyn StepProbe; 2] = [&mut probe, &mut last_state];
        evolve(
            initial,
            params,
            &config.solver,
            &mesh,
            EvolveOptions::default(),
            &mut probes,
        )?
    };
    let trace = &probe.trace;
    let g = trace.g_series()?;
    let h = trace.h_series();
    let residuals = trace.identity_residuals();
    let mut text = String::from("t,F1,NL,G,H,residual_eq01\n");
    for i in 0..trace.times.len() {
        text.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}\n",
            trace.times[i], trace.f1[i], trace.nl[i], g[i], h[i], residuals[i]
        ));
    }
    std::fs::write(out, text)?;
    // cross-check the identity against the final held state
    if let Some(state) = last_state.state {
        let evaluator = EigenfunctionEvaluator::new(params.n)?;
        if let Ok(res) = identity_residual_eq01(trace, &state, params, &mesh, &evaluator) {
            println!("final_state_residual_eq01={res:.6e}");
        }
    }
    println!(
        "samples={} status={} out={}",
        trace.times.len(),
        if record.t_detect.is_some() { "blew_up" } else { "survived" },
        out.display()
    );
    Ok(())
}

#[derive(Default)]
struct LastState {
    state: Option<FieldState>,
}

impl StepProbe for LastState {
    fn on_step(&mut self, state: &FieldState, _mesh: &RadialMesh) -> Result<()> {
        self.state = Some(state.clone());
        Ok(())
    }
}

fn cmd_bounds(config_path: &PathBuf, jmax: u32, out: &PathBuf) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let mut file = build_bundle(&config, jmax)?;
    // report carries only a readable prefix of the sequences
    match &mut file {
        BundleFile::Subcritical { bundle, .. } => {
            bundle.alpha.truncate(20);
            bundle.gamma.truncate(20);
            bundle.log_k.truncate(20);
        }
        BundleFile::Critical { bundle, .. } => {
            bundle.sigma.truncate(20);
            bundle.log_q.truncate(20);
        }
    }
    let json = serde_json::to_string_pretty(&file)?;
    std::fs::write(out, &json)?;
    match &file {
        BundleFile::Subcritical { bundle, bound } => println!(
            "subcritical eps0={:.6e} bound={:.6e} guaranteed={} out={}",
            bundle.eps0,
            bound.value,
            bound.guaranteed,
            out.display()
        ),
        BundleFile::Critical { bundle, bound } => println!(
            "critical eps0=inf log_bound={:.6e} j1={} out={}",
            bound.log_value,
            bundle.j1,
            out.display()
        ),
    }
    Ok(())
}

fn cmd_sweep(config_path: &PathBuf, out: &PathBuf) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let plan = SweepPlan::from_config(&config)?;
    // theoretical bound per amplitude when the constant chain applies
    let bundle = build_bundle(&config, 40).ok();
    let bound_fn = bundle.as_ref().map(|file| {
        let config = config.clone();
        move |eps: f64| -> LifespanBound {
            let mut params = config.problem;
            params.epsilon = eps;
            match file {
                BundleFile::Subcritical { bundle, .. } => {
                    let b = subcritical_bundle(&params, bundle.c1, bundle.c2, 40)
                        .expect("same regime as the template bundle");
                    lifespan_bound_subcritical(&b, &params).expect("subcritical params")
                }
                BundleFile::Critical { bundle, .. } => {
                    let b = critical_bundle(&params, bundle.c3, bundle.c2, 40)
                        .expect("same regime as the template bundle");
                    lifespan_bound_critical(&b, &params, b.l_limit).expect("critical params")
                }
            }
        }
    });
    let records = match &bound_fn {
        Some(f) => run_sweep(&plan, &config, Some(f)),
        None => run_sweep(&plan, &config, None),
    };
    std::fs::write(out, records_to_csv(&records))?;
    let blew = records.iter().filter(|r| r.status == "blew_up").count();
    println!(
        "runs={} blew_up={} out={}",
        records.len(),
        blew,
        out.display()
    );
    Ok(())
}

fn cmd_fit(records_path: &PathBuf, config_path: &PathBuf, regime: &Option<String>) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let records = records_from_csv(&std::fs::read_to_string(records_path)?)?;
    let tag = regime
        .clone()
        .unwrap_or_else(|| config.problem.regime().to_string());
    let fit = match tag.as_str() {
        "subcritical" => fit_subcritical(&records, &config.problem)?,
        "critical" => fit_critical(&records, &config.problem)?,
        other => {
            return Err(MgtError::InvalidParameter(format!(
                "unknown regime tag {other} (expected subcritical or critical)"
            )))
        }
    };
    println!(
        "slope={:.6e} intercept={:.6e} r_squared={:.6} theory_slope={:.6e} relative_gap={:.4}",
        fit.slope, fit.intercept, fit.r_squared, fit.theory_slope, fit.relative_gap
    );
    Ok(())
}

fn cmd_compare(records_path: &PathBuf, bundle_path: &PathBuf) -> Result<bool> {
    let records = records_from_csv(&std::fs::read_to_string(records_path)?)?;
    let file: BundleFile = serde_json::from_str(&std::fs::read_to_string(bundle_path)?)?;
    let eps0 = match &file {
        BundleFile::Subcritical { bundle, .. } => bundle.eps0,
        BundleFile::Critical { bundle, .. } => bundle.eps0,
    };
    let report = compare_bounds(&records, eps0);
    for e in &report.entries {
        let tag = if e.violated {
            "VIOLATION"
        } else if e.checked {
            "ok"
        } else {
            "info(eps>eps0)"
        };
        println!(
            "eps={:.6e} t_detect={:.6e} bound={:.6e} margin={:+.6e} {}",
            e.epsilon, e.t_detect, e.bound, e.margin, tag
        );
    }
    println!(
        "checked={} violations={}",
        report.num_checked, report.num_violations
    );
    Ok(report.num_violations == 0)
}

fn run(cli: Cli) -> Result<bool> {
    match &cli.command {
        Command::Phi { n, r } => {
            println!("{:.11e}", phi(*n, *r)?);
            Ok(true)
        }
        Command::C1 {
            n,
            r_support,
            horizon,
            samples,
        } => {
            println!("{:.11e}", estimate_c1(*n, *r_support, *horizon, *samples)?);
            Ok(true)
        }
        Command::Simulate {
            config,
            linear,
            homogeneous,
            dump_every,
            out_dir,
        } => {
            cmd_simulate(config, *linear, *homogeneous, *dump_every, out_dir)?;
            Ok(true)
        }
        Command::Functionals { config, out } => {
            cmd_functionals(config, out)?;
            Ok(true)
        }
        Command::Bounds { config, jmax, out } => {
            cmd_bounds(config, *jmax, out)?;
            Ok(true)
        }
        Command::Sweep { config, out } => {
            cmd_sweep(config, out)?;
            Ok(true)
        }
        Command::Fit {
            records,
            config,
            regime,
        } => {
            cmd_fit(records, config, regime)?;
            Ok(true)
        }
        Command::Compare { records, bundle } => cmd_compare(records, bundle),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}
