use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use randpoly_cli::config::{default_route, DEFAULT_PRECISION_BITS};
use randpoly_cli::{exit, load_config, report_diff, run, Report, RunError, Status};
use randpoly_core::chebyshev::{direction_scan, ScanRoute};
use randpoly_core::geometry::WeightedSet;
use randpoly_core::orthopoly::OrthonormalBasis;

#[derive(Parser)]
#[command(name = "randpoly", version, about = "Random polynomial experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a config without running it.
    Validate { config: PathBuf },
    /// Run an experiment; resumes from completed trials in its output directory.
    Run { config: PathBuf },
    /// Compare the aggregate tables of two reports.
    Diff { a: PathBuf, b: PathBuf },
    /// Build an orthonormal basis and save it as JSON.
    Basis {
        #[arg(long)]
        geom: PathBuf,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PRECISION_BITS)]
        precision_bits: u32,
    },
    /// Scan Chebyshev constants along a direction of the simplex.
    Scan {
        #[arg(long)]
        geom: PathBuf,
        /// Comma separated direction, e.g. `1,0`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        dir: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30")]
        n: Vec<u32>,
        #[arg(long)]
        route: Option<Route>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_PRECISION_BITS)]
        precision_bits: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Route {
    L2,
    Sup,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(dispatch(cli.command) as u8)
}

fn dispatch(cmd: Command) -> i32 {
    match cmd {
        Command::Validate { config } => match load_config(&config) {
            Ok(_) => {
                println!("{}: ok", config.display());
                exit::OK
            }
            Err(e) => {
                eprint!("{e}");
                exit::INVALID
            }
        },
        Command::Run { config } => {
            let cfg = match load_config(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprint!("{e}");
                    return exit::INVALID;
                }
            };
            match run(&cfg) {
                Ok(report) => {
                    print_summary(&report);
                    match report.status {
                        Status::Fail => exit::FAILED,
                        Status::Error => exit::RUNTIME,
                        _ => exit::OK,
                    }
                }
                Err(RunError::Numerical { message, report }) => {
                    eprintln!("error: {message}\npartial report: {}", report.display());
                    exit::RUNTIME
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit::RUNTIME
                }
            }
        }
        Command::Diff { a, b } => {
            let (ra, rb) = match (Report::load(&a), Report::load(&b)) {
                (Ok(x), Ok(y)) => (x, y),
                (Err(e), _) | (_, Err(e)) => {
                    eprintln!("error: {e}");
                    return exit::RUNTIME;
                }
            };
            match report_diff(&ra, &rb) {
                Ok(d) => {
                    println!("{}", serde_json::to_string_pretty(&d).expect("diff serializes"));
                    if d.within_tolerance() {
                        exit::OK
                    } else {
                        exit::FAILED
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    exit::INVALID
                }
            }
        }
        Command::Basis {
            geom,
            n,
            out,
            precision_bits,
        } => report_errors(|| {
            let set = WeightedSet::load(&geom)?;
            let basis = OrthonormalBasis::for_set(&set, n, precision_bits)?;
            basis.save(&out)?;
            println!("wrote {} ({} polynomials)", out.display(), basis.len());
            Ok(())
        }),
        Command::Scan {
            geom,
            dir,
            n,
            route,
            out,
            precision_bits,
        } => report_errors(|| {
            let set = WeightedSet::load(&geom)?;
            let route = match route {
                Some(Route::L2) => ScanRoute::L2,
                Some(Route::Sup) => ScanRoute::Sup,
                None => default_route(&set),
            };
            let scan = direction_scan(&set, &dir, &n, route, precision_bits)?;
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            std::fs::write(&out, scan.to_csv())?;
            println!("wrote {} ({} rows)", out.display(), scan.rows.len());
            Ok(())
        }),
    }
}

fn report_errors(f: impl FnOnce() -> anyhow::Result<()>) -> i32 {
    match f() {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit::RUNTIME
        }
    }
}

fn print_summary(r: &Report) {
    println!("{} {:?} in {:.1}s, {} trial records", r.kind, r.status, r.wall_clock_s, r.trials_completed);
    for t in &r.thresholds {
        let name = t.threshold.name.clone().unwrap_or_else(|| format!("{}.{}", t.threshold.table, t.threshold.column));
        let tag = if t.threshold.advisory { " (advisory)" } else { "" };
        println!("  {} {name}{tag}: {:?}", if t.pass { "PASS" } else { "FAIL" }, t.observed);
    }
}
