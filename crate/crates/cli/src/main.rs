use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lpspec::floquet::DEFAULT_GAP_TOL;
use lpspec::homogenize::DEFAULT_HOMOGENEITY_POINTS;
use lpspec::hull::HullSpec;
use lpspec::Error;

mod commands;
mod config;
mod io;

use commands::{Format, HomogeneityInput};
use io::InputError;

/// Spectra of periodic and limit-periodic Jacobi operators.
#[derive(Parser)]
#[command(name = "lpspec", version)]
struct Cli {
    /// Worker threads for parallel sweeps (defaults to all cores).
    #[arg(long, global = true, env = "LPSPEC_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bands, gaps and genericity metrics of a periodic operator.
    Bands {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        /// Extension factor used for the break-point spacing metric.
        #[arg(short, default_value_t = 2)]
        k: usize,
        /// Genericity threshold relative to the operator scale.
        #[arg(long, default_value_t = DEFAULT_GAP_TOL)]
        gap_tol: f64,
        /// Closed-gap merge threshold relative to the operator scale.
        #[arg(long)]
        merge_tol: Option<f64>,
    },
    /// Energies where the discriminant equals 2 cos(pi j / k).
    Breakpoints {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        merge_tol: Option<f64>,
    },
    /// Open all gaps of the k-fold extension within a budget.
    Perturb {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[arg(short)]
        k: usize,
        #[arg(long)]
        eps: f64,
        /// Absolute genericity threshold (default min(1e-9 scale, eps/100)).
        #[arg(long)]
        gap_tol: Option<f64>,
    },
    /// Run the iterative construction and write the run with certificates.
    Construct {
        #[arg(short, long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Density of states table as CSV, with a JSON summary.
    Ids {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Where to write the summary (stderr when omitted).
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Sample points per band.
        #[arg(long, default_value_t = 100)]
        grid: usize,
    },
    /// Homogeneity profile of a run's spectra or of an interval set.
    CheckHomogeneity {
        #[arg(long, conflicts_with_all = ["intervals", "tau", "delta_max"])]
        run: Option<PathBuf>,
        /// Only this step of the run.
        #[arg(long, requires = "run")]
        step: Option<usize>,
        #[arg(long, requires_all = ["tau", "delta_max"])]
        intervals: Option<PathBuf>,
        #[arg(long)]
        tau: Option<f64>,
        #[arg(long)]
        delta_max: Option<f64>,
        #[arg(long, default_value_t = 64)]
        n_delta: usize,
        #[arg(long, default_value_t = DEFAULT_HOMOGENEITY_POINTS)]
        n_points: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Express a run's potentials as sampling functions on a hull.
    LiftHull {
        #[arg(long)]
        run: PathBuf,
        /// Hull JSON `{"indices": [...]}`.
        #[arg(long, conflicts_with = "p_adic", required_unless_present = "p_adic")]
        hull: Option<PathBuf>,
        /// Use n_j = q^j instead of a hull file.
        #[arg(long)]
        p_adic: Option<usize>,
        #[arg(long, default_value_t = 0)]
        q0: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Seeded random check of the band-length and density bounds.
    Sweep {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 8)]
        max_period: usize,
        #[arg(long, default_value_t = 50)]
        grid: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Bands {
            input,
            output,
            format,
            k,
            gap_tol,
            merge_tol,
        } => commands::bands(&input, output.as_deref(), format, k, gap_tol, merge_tol),
        Command::Breakpoints {
            input,
            output,
            format,
            k,
            merge_tol,
        } => commands::breakpoints(&input, output.as_deref(), format, k, merge_tol),
        Command::Perturb {
            input,
            output,
            k,
            eps,
            gap_tol,
        } => commands::perturb(&input, output.as_deref(), k, eps, gap_tol),
        Command::Construct { config, out_dir } => commands::construct_cmd(&config, &out_dir),
        Command::Ids {
            input,
            output,
            summary,
            grid,
        } => commands::ids(&input, output.as_deref(), summary.as_deref(), grid),
        Command::CheckHomogeneity {
            run,
            step,
            intervals,
            tau,
            delta_max,
            n_delta,
            n_points,
            output,
        } => {
            let input = match (run, intervals, tau, delta_max) {
                (Some(path), _, _, _) => HomogeneityInput::Run { path, step },
                (None, Some(path), Some(tau), Some(delta_max)) => HomogeneityInput::Set {
                    path,
                    tau,
                    delta_max,
                },
                _ => {
                    return Err(Error::InvalidArgument(
                        "give --run, or --intervals with --tau and --delta-max".into(),
                    )
                    .into())
                }
            };
            commands::check_homogeneity(input, output.as_deref(), n_delta, n_points)
        }
        Command::LiftHull {
            run,
            hull,
            p_adic,
            q0,
            output,
        } => {
            let spec = match (hull, p_adic) {
                (Some(path), _) => io::read_json::<HullSpec>(&path)?,
                (None, Some(q)) => {
                    let probe: lpspec::ConstructionRun = io::read_json(&run)?;
                    HullSpec::p_adic(q, q0 + probe.depth())?
                }
                (None, None) => unreachable!("clap requires one of them"),
            };
            commands::lift_hull(&run, spec, q0, output.as_deref())
        }
        Command::Sweep {
            seed,
            count,
            max_period,
            grid,
            output,
        } => commands::sweep(seed, count, max_period, grid, output.as_deref()),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<Error>() {
        return match e {
            Error::InvalidArgument(_) => 2,
            Error::SearchFailure { .. } => 4,
            Error::NumericFailure { .. } | Error::NotElliptic { .. } | Error::EdgeSingularity { .. } => 3,
        };
    }
    if err.downcast_ref::<InputError>().is_some() {
        return 2;
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
