//! `bbwave`: run, sweep and check the internal-wave solver from config files.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bbwave_core::harness::config::parse_times;
use bbwave_core::harness::experiments::{self, SweepReport, TABLE_STEPS};
use bbwave_core::harness::{validate, Column, RunConfig};
use bbwave_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "bbwave", version, about = "Pseudospectral solver for two-layer Boussinesq internal waves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Integrate one configuration, writing diagnostics and snapshots.
    Run(Common),
    /// Repeat a configuration with successively halved time steps.
    #[command(name = "sweep-dt")]
    SweepDt {
        #[command(flatten)]
        common: Common,
        /// Number of time steps in the sweep, starting at the configured dt.
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    /// Repeat a configuration over grid sizes at a fixed time step.
    #[command(name = "sweep-N")]
    SweepN {
        #[command(flatten)]
        common: Common,
        /// Grid sizes, comma separated.
        #[arg(long, value_delimiter = ',', default_value = "64,96,128,192")]
        ns: Vec<usize>,
    },
    /// Run the solitary-wave temporal convergence table.
    #[command(name = "reproduce-table")]
    ReproduceTable(Common),
    /// Run the built-in oracle and invariant checks.
    Validate,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Run description (key = value lines); built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Snapshot times, comma separated.
    #[arg(long)]
    snapshots: Option<String>,
    /// Record diagnostics every K steps.
    #[arg(long)]
    stride: Option<usize>,
    /// Apply the 2/3 rule to fields and products.
    #[arg(long)]
    dealias: bool,
    /// Fixed-point tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Fixed-point iteration cap.
    #[arg(long = "max-iter")]
    max_iter: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        if let Some(times) = &self.snapshots {
            cfg.snapshots = parse_times("snapshots", times)?;
        }
        if let Some(stride) = self.stride {
            cfg.stride = stride;
        }
        cfg.dealias |= self.dealias;
        if let Some(tol) = self.tol {
            cfg.tol = tol;
        }
        if let Some(max_iter) = self.max_iter {
            cfg.max_iter = max_iter;
        }
        cfg.prepare()?;
        Ok(cfg)
    }
}

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;
const EXIT_VALIDATION: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config { .. } => EXIT_CONFIG,
        Error::Validation(_) => EXIT_VALIDATION,
        _ => EXIT_NUMERICAL,
    }
}

fn write_out(dir: Option<&Path>, name: &str, text: &str) -> Result<(), Error> {
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(name);
        std::fs::write(&path, text)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn report_sweep(report: &SweepReport, dir: Option<&Path>, name: &str) -> Result<(), Error> {
    print!("{}", report.to_text());
    write_out(dir, name, &report.to_csv())?;
    let failures = report.failures();
    if failures.is_empty() {
        return Ok(());
    }
    for (i, msg) in &failures {
        eprintln!("cell {i} failed: {msg}");
    }
    Err(Error::SweepCells {
        failed: failures.len(),
        total: report.cells.len(),
    })
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Run(common) => {
            let cfg = common.load()?;
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("out"));
            let (output, files) = experiments::run_to_dir(&cfg, &out)?;
            let last = output.records.last().expect("a run records its final step");
            println!("t = {}  H = {}  max|dH| = {:e}", last.t, last.hamiltonian, output.drift().max);
            if let Some(e) = output.final_errors {
                println!(
                    "final errors: zeta L2 {:e} Linf {:e}, v1 L2 {:e} Linf {:e}",
                    e.l2[0], e.linf[0], e.l2[1], e.linf[1]
                );
            }
            println!("wrote {}", files.diagnostics.display());
            for path in files.snapshots.iter().chain(&files.sections) {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
        Command::SweepDt { common, levels } => {
            let cfg = common.load()?;
            let report = experiments::sweep_dt(&cfg, levels)?;
            report_sweep(&report, cfg.out.as_deref(), "sweep_dt.csv")
        }
        Command::SweepN { common, ns } => {
            let cfg = common.load()?;
            let report = experiments::sweep_n(&cfg, &ns)?;
            report_sweep(&report, cfg.out.as_deref(), "sweep_n.csv")
        }
        Command::ReproduceTable(common) => {
            if common.config.is_some() {
                return Err(Error::Config {
                    field: "config".into(),
                    message: "reproduce-table uses its fixed setup; only solver flags apply".into(),
                });
            }
            let flags = common.load()?;
            println!(
                "gamma = 0.5, delta = 0.9, BBM-BBM, L = 16, N = 256, T = 5, dt = {:e} .. {:e}",
                TABLE_STEPS[0],
                TABLE_STEPS[TABLE_STEPS.len() - 1]
            );
            let report = experiments::reproduce_table(&flags)?;
            report_sweep(&report, flags.out.as_deref(), "table.csv")?;
            let rates: Vec<f64> = Column::ALL.iter().flat_map(|c| report.rates(*c)).flatten().collect();
            if rates.len() == 4 * (TABLE_STEPS.len() - 1) && rates.iter().all(|r| (1.9..=2.05).contains(r)) {
                println!("all rates within [1.90, 2.05]");
                Ok(())
            } else {
                Err(Error::Validation("convergence rates outside [1.90, 2.05]".into()))
            }
        }
        Command::Validate => {
            let report = validate();
            print!("{}", report.to_text());
            report.into_result().map(|_| ())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
