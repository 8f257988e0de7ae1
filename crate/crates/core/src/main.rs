use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stcl::error::{Error, Result};
use stcl::estimator::DeltaTable;
use stcl::geometry::{metric_preset, LeafMesh};
use stcl::harness::{emit_report, run_experiments, ExperimentConfig, ExperimentReport, ReportTable, SCENARIOS};
use stcl::mollifier::Profile;
use stcl::flux::flux_preset;
use stcl::solver::{
    evolve_diffusion, evolve_hyperbolic, viscosity_preset, InitialCondition, SchemeConfig, SliceField,
};

#[derive(Parser)]
#[command(name = "stcl", version, about = "Scalar conservation laws on foliated 1+1 spacetimes")]
struct Cli {
    /// Directory for CSV reports.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for every randomised step (overrides scenario seeds).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve one initial datum and write the snapshots.
    Solve(SolveArgs),
    /// Tabulate the error budget of a scenario over a delta grid.
    Estimate {
        #[arg(long, default_value = "budget-flat-smooth")]
        scenario: String,
        /// `log:lo:hi:n` or a comma-separated list.
        #[arg(long)]
        delta_grid: Option<String>,
    },
    /// Check L1 contraction between two trajectories.
    Contraction {
        #[arg(long, default_value = "contraction-flat-burgers")]
        scenario: String,
        #[arg(long, value_delimiter = ',')]
        cells: Vec<usize>,
    },
    /// Compare the exact flux with perturbed fluxes.
    CompareFlux {
        #[arg(long, value_delimiter = ',')]
        eta: Vec<f64>,
    },
    /// Vanishing-viscosity rate against the inviscid reference.
    DiffusionRate {
        #[arg(long, value_delimiter = ',')]
        eps: Vec<f64>,
    },
    /// Certify the mollifier conditions.
    VerifyMollifier {
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        delta: Vec<f64>,
        #[arg(long, default_value = "minkowski")]
        metric: String,
        /// Ball grid points per radius.
        #[arg(long, default_value_t = 16)]
        grid: usize,
        #[arg(long, default_value = "bump")]
        profile: String,
    },
    /// Run scenarios from a config file or by name (`all` runs every built-in).
    Run {
        #[arg(long)]
        config: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        scenario: Vec<String>,
    },
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, default_value = "minkowski")]
    metric: String,
    /// Metric parameters as `key=value`.
    #[arg(long = "metric-param", value_parser = parse_param)]
    metric_params: Vec<(String, f64)>,
    #[arg(long, default_value = "burgers")]
    flux: String,
    /// Flux parameters as `key=value`.
    #[arg(long = "flux-param", value_parser = parse_param)]
    flux_params: Vec<(String, f64)>,
    #[arg(long, default_value = "sine(0.5)")]
    ic: String,
    #[arg(long, default_value_t = 256)]
    cells: usize,
    #[arg(long, default_value_t = 0.9)]
    cfl: f64,
    #[arg(long, default_value_t = 1.0)]
    tmax: f64,
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
    #[arg(long, default_value_t = 1.0)]
    leaf_length: f64,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Viscosity preset (`linear`, `cubic`, `zero`).
    #[arg(long)]
    phi: Option<String>,
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v = v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}"))?;
    Ok((k.trim().to_string(), v))
}

fn lookup(params: &[(String, f64)]) -> impl Fn(&str) -> Option<f64> + '_ {
    move |key| params.iter().rev().find(|(k, _)| k == key).map(|(_, v)| *v)
}

fn parse_delta_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("delta grid '{spec}' is neither log:lo:hi:n nor a list"));
    if let Some(rest) = spec.strip_prefix("log:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let [lo, hi, n] = parts[..] else { return Err(bad()) };
        let lo: f64 = lo.parse().map_err(|_| bad())?;
        let hi: f64 = hi.parse().map_err(|_| bad())?;
        let n: usize = n.parse().map_err(|_| bad())?;
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(bad());
        }
        return Ok(DeltaTable::log_grid(lo, hi, n));
    }
    spec.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn solve(args: &SolveArgs, out: &Path) -> Result<bool> {
    let st = metric_preset(&args.metric, 0.0, args.tmax, args.leaf_length, lookup(&args.metric_params))?;
    let f = flux_preset(&args.flux, lookup(&args.flux_params))?;
    let mesh = LeafMesh::for_spacetime(&st, args.cells)?;
    let u0 = SliceField::from_initial(st.t_min(), mesh, &InitialCondition::parse(&args.ic)?);
    let cfg = SchemeConfig::new(args.cells, args.c0).with_cfl(args.cfl).with_stride(args.stride);
    let traj = match &args.phi {
        Some(name) => {
            let phi = viscosity_preset(name, args.eps)?;
            evolve_diffusion(&st, &f, phi.as_ref(), &u0, args.tmax, &cfg)?
        }
        None => evolve_hyperbolic(&st, &f, &u0, args.tmax, &cfg)?,
    };
    let mut table = ReportTable::new(&["t", "x_j", "u_j"]);
    for s in &traj.slices {
        for (x, &u) in mesh.centers().zip(&s.values) {
            table.push(vec![s.t.into(), x.into(), u.into()]);
        }
    }
    let path = out.join("solve.csv");
    emit_report(&table, &path)?;
    println!(
        "solve: {} slices, {} steps, max courant {:.3}, clipped {} -> {}",
        traj.slices.len(),
        traj.n_steps,
        traj.max_courant,
        traj.clipped,
        path.display()
    );
    Ok(traj.clipped == 0)
}

fn preset_with(name: &str, edit: impl FnOnce(&mut ExperimentConfig) -> Result<()>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::preset(name)?;
    edit(&mut cfg)?;
    Ok(cfg)
}

fn summarize(report: &ExperimentReport) {
    let verdict = if report.verdict { "PASS" } else { "FAIL" };
    let metrics: Vec<String> = report.metrics.iter().map(|(k, v)| format!("{k}={v:.6e}")).collect();
    println!("{verdict} {} {}", report.scenario, metrics.join(" "));
    for note in &report.notes {
        println!("  note: {note}");
    }
}

fn run_all(mut cfgs: Vec<ExperimentConfig>, cli: &Cli) -> Result<bool> {
    for cfg in &mut cfgs {
        if let Some(seed) = cli.seed {
            cfg.seed = seed;
        }
        if cfg.output.is_none() {
            cfg.output = Some(cli.out.join(format!("{}.csv", cfg.scenario)));
        }
    }
    let mut pass = true;
    for result in run_experiments(&cfgs) {
        let report = result?;
        summarize(&report);
        pass &= report.verdict;
    }
    Ok(pass)
}

fn execute(cli: &Cli) -> Result<bool> {
    let cfgs = match &cli.command {
        Command::Solve(args) => return solve(args, &cli.out),
        Command::Estimate { scenario, delta_grid } => vec![preset_with(scenario, |c| {
            if c.kind != stcl::harness::ScenarioKind::Budget {
                return Err(Error::Config(format!("'{scenario}' is not a budget scenario")));
            }
            if let Some(spec) = delta_grid {
                c.sweep.values = parse_delta_grid(spec)?;
            }
            Ok(())
        })?],
        Command::Contraction { scenario, cells } => vec![preset_with(scenario, |c| {
            if !cells.is_empty() {
                c.sweep.values = cells.iter().map(|&n| n as f64).collect();
            }
            Ok(())
        })?],
        Command::CompareFlux { eta } => vec![preset_with("flux-perturbation", |c| {
            if !eta.is_empty() {
                c.sweep.values = eta.clone();
            }
            Ok(())
        })?],
        Command::DiffusionRate { eps } => vec![preset_with("viscosity-rate", |c| {
            if !eps.is_empty() {
                c.sweep.values = eps.clone();
            }
            Ok(())
        })?],
        Command::VerifyMollifier {
            delta,
            metric,
            grid,
            profile,
        } => vec![preset_with("mollifier-admissibility", |c| {
            c.scenario = format!("verify-mollifier-{metric}");
            c.metric = stcl::harness::Preset::new(metric);
            c.resolution = *grid;
            c.profile = Profile::parse(profile)?;
            c.sweep.values = delta.clone();
            Ok(())
        })?],
        Command::Run { config, scenario } => {
            let mut cfgs = config
                .iter()
                .map(|p| ExperimentConfig::from_file(p))
                .collect::<Result<Vec<_>>>()?;
            for name in scenario {
                if name == "all" {
                    cfgs.extend(SCENARIOS.iter().map(|n| ExperimentConfig::preset(n)).collect::<Result<Vec<_>>>()?);
                } else {
                    cfgs.push(ExperimentConfig::preset(name)?);
                }
            }
            if cfgs.is_empty() {
                return Err(Error::Config("run needs --config or --scenario".into()));
            }
            cfgs
        }
    };
    run_all(cfgs, cli)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
