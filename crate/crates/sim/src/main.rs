use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rcs_sim::config::{load_with_overrides, ExecutionKind, ScenarioFile};
use rcs_sim::experiments::{
    aggregate, aggregate_csv, calibrate, calibration_csv, compare, execute, parse_policies, plan,
    plotdata_csv, seed_list, sweep_csv, CalibrationGrid, CalibrationTarget, SweepSpec,
};
use rcs_sim::output::{create_dir, write_file, write_run};
use rcs_sim::CliError;

#[derive(Parser)]
#[command(name = "rcs-sim", version, about = "Closed-loop UAV tracking over lossy links")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override a scenario key, e.g. `--set downlink.loss_prob=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct Parallel {
    /// Worker threads; defaults to RCS_SIM_JOBS, then the number of CPUs.
    #[arg(long, env = "RCS_SIM_JOBS")]
    jobs: Option<usize>,
}

impl Parallel {
    fn workers(&self) -> Result<usize, CliError> {
        match self.jobs {
            Some(0) => Err(CliError::config("--jobs", "must be >= 1")),
            Some(n) => Ok(n),
            None => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.csv and summary.json.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sweep one parameter over several policies and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// `VAR=a,b,c` or `VAR=start:stop:step`, VAR one of d_s, d_e,
        /// loss_prob, gamma, base_period.
        #[arg(long)]
        sweep: SweepSpec,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long, default_value = "latest_only,semce")]
        policies: String,
        #[arg(long)]
        out: PathBuf,
        /// Also write plotdata.csv for grouped bar charts.
        #[arg(long)]
        emit_plotdata: bool,
        #[command(flatten)]
        parallel: Parallel,
    },
    /// Compare a candidate execution policy against a baseline.
    Compare {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "latest_only")]
        baseline: String,
        #[arg(long, default_value = "semce")]
        candidate: String,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        #[arg(long)]
        sweep: Option<SweepSpec>,
        /// Directory for comparison.json.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        parallel: Parallel,
    },
    /// Search downlink loss, delay and transmission period for the
    /// configuration where SemCE gains most over latest-only execution.
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 20)]
        seeds: u64,
        /// Directory for calibration.csv.
        #[arg(long)]
        out: PathBuf,
        /// Write the best configuration to this scenario file.
        #[arg(long)]
        write: Option<PathBuf>,
        #[command(flatten)]
        parallel: Parallel,
    },
}

fn load(common: &Common) -> Result<ScenarioFile, CliError> {
    load_with_overrides(&common.config, &common.overrides)
}

fn policy(name: &str, flag: &str) -> Result<ExecutionKind, CliError> {
    ExecutionKind::parse(name).ok_or_else(|| CliError::config(flag, format!("unknown policy `{name}`")))
}

fn first_seed(file: &ScenarioFile) -> u64 {
    file.seed.unwrap_or(0)
}

fn cmd_run(common: &Common, seed: Option<u64>, out: &Path) -> Result<(), CliError> {
    let mut file = load(common)?;
    if seed.is_some() {
        file.seed = seed;
    }
    let cfg = file.to_scenario()?;
    let result = rcs_core::engine::run(&cfg)?;
    write_run(out, &result)?;
    let s = &result.summary;
    println!(
        "{}: safety_rate {:.4}, tracking_success_rate {:.4} over {} slots -> {}",
        cfg.policies.execution.name(),
        s.safety_rate,
        s.tracking_success_rate,
        s.evaluated_slots,
        out.display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    common: &Common,
    sweep: &SweepSpec,
    seeds: u64,
    policies: &str,
    out: &Path,
    emit_plotdata: bool,
    workers: usize,
) -> Result<(), CliError> {
    let file = load(common)?;
    let seeds = seed_list(first_seed(&file), seeds)?;
    let policies = parse_policies(policies)?;
    let jobs = plan(&file, Some(sweep), &policies, &seeds)?;
    let results = execute(&jobs, workers)?;
    let points = aggregate(&results);
    create_dir(out)?;
    let var = Some(sweep.variable);
    write_file(&out.join("sweep.csv"), &sweep_csv(var, &results))?;
    write_file(&out.join("aggregate.csv"), &aggregate_csv(var, &points))?;
    if emit_plotdata {
        write_file(&out.join("plotdata.csv"), &plotdata_csv(var, &points))?;
    }
    println!("{} runs -> {}", results.len(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { common, seed, out } => cmd_run(common, *seed, out),
        Command::Sweep {
            common,
            sweep,
            seeds,
            policies,
            out,
            emit_plotdata,
            parallel,
        } => parallel
            .workers()
            .and_then(|w| cmd_sweep(common, sweep, *seeds, policies, out, *emit_plotdata, w)),
        Command::Compare {
            common,
            baseline,
            candidate,
            seeds,
            sweep,
            out,
            parallel,
        } => (|| {
            let file = load(common)?;
            let baseline = policy(baseline, "--baseline")?;
            let candidate = policy(candidate, "--candidate")?;
            let seeds = seed_list(first_seed(&file), *seeds)?;
            let report = compare(&file, baseline, candidate, sweep.as_ref(), &seeds, parallel.workers()?)?;
            print!("{}", report.table());
            if let Some(out) = out {
                create_dir(out)?;
                let mut json = serde_json::to_string_pretty(&report).expect("report serializes");
                json.push('\n');
                write_file(&out.join("comparison.json"), json.as_bytes())?;
            }
            Ok(())
        })(),
        Command::Calibrate {
            common,
            seeds,
            out,
            write,
            parallel,
        } => (|| {
            let file = load(common)?;
            let seeds = seed_list(first_seed(&file), *seeds)?;
            let target = CalibrationTarget::default();
            let cal = calibrate(&file, &CalibrationGrid::default(), &target, &seeds, parallel.workers()?)?;
            create_dir(out)?;
            write_file(&out.join("calibration.csv"), &calibration_csv(&cal.rows))?;
            let best = &cal.rows[cal.best];
            println!(
                "best: loss_prob {} geometric_p {} base_period {} | safety ratio {} success ratio {} | target met: {}",
                best.loss_prob,
                best.geometric_p,
                best.base_period,
                best.safety_ratio,
                best.success_ratio,
                best.meets_target
            );
            if let Some(path) = write {
                let header = format!(
                    "# Written by `rcs-sim calibrate` ({} seeds). Downlink loss, delay and\n\
                     # transmission period are the grid point with the best SemCE gain over\n\
                     # latest-only execution at d_s={}, d_e={}; target met: {}.\n\n",
                    seeds.len(),
                    target.stringent.0,
                    target.stringent.1,
                    best.meets_target
                );
                write_file(path, (header + &cal.scenario.to_toml()).as_bytes())?;
            }
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
