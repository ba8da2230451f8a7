use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use spin_steering::AngleSearchPolicy;
use spin_steering_cli::checks::{format_hierarchy, hierarchy_table, self_check};
use spin_steering_cli::{parse_criteria, render_plot, run_sweep, write_output, CliError, OutputFormat, SweepConfig};

#[derive(Parser)]
#[command(name = "steer-hier", version, about = "Steering criteria for split spin-squeezed states")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate criteria over a grid of atom numbers and twist strengths.
    Sweep(SweepArgs),
    /// Check the hierarchy of criteria over a grid and print a table.
    Hierarchy(HierarchyArgs),
    /// Compare against brute-force references at small atom numbers.
    #[command(hide = true)]
    SelfCheck(SearchArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Coarse grid points per Alice angle over [0, π).
    #[arg(long, default_value_t = 121)]
    grid_points: usize,
    #[arg(long, default_value_t = 3)]
    refine_rounds: usize,
}

impl SearchArgs {
    fn policy(&self) -> AngleSearchPolicy {
        AngleSearchPolicy {
            coarse_points: self.grid_points,
            refine_rounds: self.refine_rounds,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Atom numbers, comma separated.
    #[arg(long = "n", value_delimiter = ',', default_value = "20")]
    n: Vec<usize>,
    #[arg(long, default_value_t = 0.0)]
    mu_min: f64,
    #[arg(long, default_value_t = 0.6)]
    mu_max: f64,
    #[arg(long, default_value_t = 61)]
    mu_steps: usize,
    #[arg(long, env = "STEER_HIER_WORKERS", default_value_t = 1)]
    workers: usize,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// e.g. `delta1,delta2:1,delta2:2,delta3:1,delta3:2,delta4`.
    #[arg(long, default_value = "delta1,delta2:1,delta2:2,delta3:1,delta3:2,delta4")]
    criteria: String,
    /// Also emit angle-optimized first terms.
    #[arg(long)]
    first_terms: bool,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// SVG plot of the values.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Args)]
struct HierarchyArgs {
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    search: SearchArgs,
    /// Measurement orders, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2")]
    orders: Vec<usize>,
}

fn sweep(args: SweepArgs) -> Result<(), CliError> {
    let config = SweepConfig {
        n_atoms: args.grid.n,
        mu_min: args.grid.mu_min,
        mu_max: args.grid.mu_max,
        mu_steps: args.grid.mu_steps,
        criteria: parse_criteria(&args.criteria)?,
        angle_policy: args.search.policy(),
        emit_first_terms: args.first_terms,
        output_path: args.out,
        format: args.format,
        plot_path: args.plot,
        workers: args.grid.workers,
    };
    config.validate()?;
    let out = run_sweep(&config)?;
    write_output(&config, &out)?;
    if let Some(plot) = &config.plot_path {
        render_plot(&out.rows, plot)?;
    }
    Ok(())
}

fn hierarchy(args: HierarchyArgs) -> Result<(), CliError> {
    let config = SweepConfig {
        n_atoms: args.grid.n.clone(),
        mu_min: args.grid.mu_min,
        mu_max: args.grid.mu_max,
        mu_steps: args.grid.mu_steps,
        angle_policy: args.search.policy(),
        workers: args.grid.workers,
        ..Default::default()
    };
    config.validate()?;
    let rows = hierarchy_table(
        &config.n_atoms,
        &config.mu_grid(),
        &args.orders,
        &config.angle_policy,
        config.workers,
    )?;
    print!("{}", format_hierarchy(&rows));
    let failed = rows.iter().filter(|r| !r.passed()).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} grid points violate the hierarchy")));
    }
    Ok(())
}

fn check(args: SearchArgs) -> Result<(), CliError> {
    let lines = self_check(&args.policy())?;
    for l in &lines {
        println!("{} {}: {}", if l.passed { "PASS" } else { "FAIL" }, l.name, l.detail);
    }
    let failed = lines.iter().filter(|l| !l.passed).count();
    if failed > 0 {
        return Err(CliError::Numerical(format!("{failed} oracle checks failed")));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sweep(a) => sweep(a),
        Command::Hierarchy(a) => hierarchy(a),
        Command::SelfCheck(a) => check(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
