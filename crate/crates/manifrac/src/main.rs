use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use manifrac::config::{parse_audit_config, parse_config};
use manifrac::constants::{ball_volume, sphere_area, sphere_coordinate_moment};
use manifrac::mollifiers::audit_family;
use manifrac::report::{emit_csv, emit_json};
use manifrac::sweep::run_sweep;

/// Nonlocal functionals on discretized compact manifolds: run convergence
/// sweeps, audit mollifier families, and print the dimensional constants.
#[derive(Parser)]
#[command(name = "manifrac", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write the convergence report.
    Run {
        /// Experiment configuration (JSON).
        #[arg(long)]
        config: PathBuf,
        /// Output file for the report.
        #[arg(long)]
        out: PathBuf,
        /// Report format.
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Audit a mollifier family against the four kernel axioms.
    AuditKernels {
        /// Audit configuration (JSON).
        #[arg(long)]
        config: PathBuf,
    },
    /// Print sphere areas, ball volumes, coordinate moments and their
    /// consistency identity for n = 1..=max_n.
    Constants {
        #[arg(long, default_value_t = 5)]
        max_n: u32,
    },
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn init_threads() {
    if let Ok(text) = std::env::var("MANIFRAC_THREADS") {
        if let Ok(count) = text.parse::<usize>() {
            if count >= 1 {
                // Values are bit-identical for any worker count; the cap only
                // bounds CPU usage.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(count).build_global();
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(cli) {
        Ok(all_pass) => {
            if all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> manifrac::Result<bool> {
    match cli.command {
        Command::Run { config, out, format } => {
            let text = std::fs::read_to_string(&config)?;
            let experiment = parse_config(&text)?;
            if cli.verbose {
                eprintln!(
                    "running sweep over {} grid points on {:?}",
                    experiment.grid.len(),
                    experiment.manifold
                );
            }
            let report = run_sweep(&experiment)?;
            let rendered = match format {
                Format::Csv => emit_csv(&report),
                Format::Json => emit_json(&report)?,
            };
            std::fs::write(&out, rendered)?;
            let pass = report.verdict.as_ref().map(|v| v.pass).unwrap_or(true);
            match (&report.reference, &report.verdict) {
                (Some(reference), Some(verdict)) => println!(
                    "limit {:.6e} (uncertainty {:.2e}) vs reference {:.6e}: {} (relative error {:.3e})",
                    report.limit.value,
                    report.limit.uncertainty,
                    reference.value,
                    if verdict.pass { "pass" } else { "FAIL" },
                    verdict.relative_error,
                ),
                _ => println!(
                    "limit {:.6e} (uncertainty {:.2e}); no analytic reference",
                    report.limit.value, report.limit.uncertainty,
                ),
            }
            if report.under_resolved.iter().any(|&b| b) {
                let flagged: Vec<String> = report
                    .grid
                    .iter()
                    .zip(&report.under_resolved)
                    .filter(|(_, &u)| u)
                    .map(|(g, _)| format!("{g}"))
                    .collect();
                println!("under-resolved grid points (kernel support below 3h): {}", flagged.join(", "));
            }
            Ok(pass)
        }
        Command::AuditKernels { config } => {
            let text = std::fs::read_to_string(&config)?;
            let audit = parse_audit_config(&text)?;
            let report = audit_family(
                &audit.family,
                &audit.sigma_grid,
                &audit.delta_grid,
                &audit.options,
                audit.mass_scale,
            )?;
            println!("family: {}", report.family);
            println!("sigma grid: {:?}", report.sigma_grid);
            println!("delta grid: {:?}", report.delta_grid);
            for (name, check) in [
                ("monotone nonincreasing", &report.monotone),
                ("fixed normalized mass", &report.normalization),
                ("vanishing tails", &report.tail),
                ("locally uniform decay", &report.local_decay),
            ] {
                println!(
                    "  {:<24} {}  ({})",
                    name,
                    if check.pass { "pass" } else { "FAIL" },
                    check.detail
                );
                if cli.verbose {
                    for m in &check.measured {
                        match m.delta {
                            Some(d) => eprintln!(
                                "    sigma={:<10.3e} delta={:<8.3} value={:.6e}",
                                m.sigma, d, m.value
                            ),
                            None => eprintln!("    sigma={:<10.3e} value={:.6e}", m.sigma, m.value),
                        }
                    }
                }
            }
            Ok(report.all_pass())
        }
        Command::Constants { max_n } => {
            println!(
                "{:>3} {:>22} {:>22} {:>22} {:>22} {:>14}",
                "n", "sphere_area(n)", "ball_volume(n-1)", "moment(1,n)", "moment(2,n)", "identity"
            );
            for n in 1..=max_n.max(1) {
                let area = sphere_area(n);
                let ball = ball_volume(n - 1);
                let k1 = sphere_coordinate_moment(1.0, n);
                let k2 = sphere_coordinate_moment(2.0, n);
                // identity: area x moment(1, n) - 2 x ball_volume(n-1) = 0
                let identity = area * k1 - 2.0 * ball;
                println!(
                    "{n:>3} {area:>22.15e} {ball:>22.15e} {k1:>22.15e} {k2:>22.15e} {identity:>14.3e}"
                );
            }
            Ok(true)
        }
    }
}
