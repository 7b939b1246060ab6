//! `sgsim` — simulate three-outcome magnet experiments and rebuild their
//! quantum description from the recorded statistics.
//!
//! Exit status: 0 on success, 1 on domain errors (invalid sources, singular
//! designs, degenerate spectra, malformed files), 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use sgsim_core::error::Error as CoreError;
use sgsim_core::experiment::{
    double_sg_frequencies, eprb_frequencies, sample_events, single_sg_frequencies,
    ExperimentConfig, ExperimentKind, FrequencyTable,
};
use sgsim_core::io;
use sgsim_core::projectors::{beam_projectors, lagrange_projectors};
use sgsim_core::spin::{spin_projection, Direction};
use sgsim_core::tomography::{
    reconstruct_source, separability_residual, Observation, SourceState,
};

mod report;

#[derive(Parser)]
#[command(
    name = "sgsim",
    version,
    about = "Event-level simulation and reconstruction for three-outcome magnet experiments",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    #[value(name = "single-sg")]
    SingleSg,
    #[value(name = "double-sg")]
    DoubleSg,
    #[value(name = "eprb")]
    Eprb,
}

impl From<KindArg> for ExperimentKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::SingleSg => ExperimentKind::SingleSg,
            KindArg::DoubleSg => ExperimentKind::DoubleSg,
            KindArg::Eprb => ExperimentKind::Eprb,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Closed,
    Lagrange,
}

#[derive(Subcommand)]
enum Command {
    /// Sample an event log from a source matrix and magnet settings.
    Simulate {
        #[arg(long)]
        kind: KindArg,
        /// Source matrix file (3x3, or 9x9 for eprb).
        #[arg(long)]
        source: PathBuf,
        /// First magnet setting `x,y,z`.
        #[arg(long)]
        a: String,
        /// Second magnet setting `x,y,z` (double-sg and eprb).
        #[arg(long)]
        b: Option<String>,
        /// Number of events.
        #[arg(short = 'N', long = "n-events")]
        n_events: u64,
        #[arg(long)]
        seed: u64,
        /// Sampling chunk size (1 = single stream; >= 2 seeds chunk i with seed XOR i).
        #[arg(long, default_value_t = 1)]
        chunk: u64,
        /// Output event-log path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Relative frequencies of an event log.
    Freq {
        #[arg(long = "in")]
        input: PathBuf,
        /// Write here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Moments of an event log.
    Moments {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Beam projectors for a setting, by either construction.
    Projectors {
        #[arg(long)]
        a: String,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Directory receiving M_plus1, M_0, M_minus1.
        #[arg(long)]
        out: PathBuf,
    },
    /// Reconstruct a 3x3 source from per-direction moments.
    Tomography {
        /// Directions file, one `x,y,z` per line.
        #[arg(long)]
        design: PathBuf,
        /// Moments file, one `m1 m2` per line matching the design.
        #[arg(long)]
        moments: PathBuf,
        /// Output matrix path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one source to a directory of pair frequency tables and report the misfit.
    Separability {
        /// Directory of table files (`# a=`, `# b=`, then 9 `k l f` lines).
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve a source matrix under a generator schedule.
    Evolve {
        #[arg(long)]
        source: PathBuf,
        /// Schedule file (`schedule n=<rows>`, rows `lambda h1..h8`).
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long = "lambda-max")]
        lambda_max: f64,
        #[arg(long)]
        step: f64,
        /// Directory receiving one matrix file per saved grid point.
        #[arg(long)]
        out: PathBuf,
        /// Diagnostics report path.
        #[arg(long)]
        report: PathBuf,
        /// Save every n-th grid point (the first and last are always saved).
        #[arg(long, default_value_t = 1)]
        save_every: usize,
    },
    /// Frequencies, moments, and provenance of an event log in one file.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

enum CliError {
    Usage(String),
    Domain(CoreError),
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Domain(e)
    }
}

fn parse_direction_arg(name: &str, value: &str) -> Result<Direction, CliError> {
    io::parse_direction(value).map_err(|e| {
        CliError::Usage(match e {
            CoreError::NotUnit { norm } => {
                format!("--{name} {value:?} is not unit-norm (norm {norm})")
            }
            other => format!("--{name} {value:?}: {other}"),
        })
    })
}

fn write_file(path: &std::path::Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| {
        CliError::Domain(CoreError::Io { path: path.display().to_string(), message: e.to_string() })
    })
}

fn make_dir(path: &std::path::Path) -> Result<(), CliError> {
    std::fs::create_dir_all(path).map_err(|e| {
        CliError::Domain(CoreError::Io { path: path.display().to_string(), message: e.to_string() })
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate { kind, source, a, b, n_events, seed, chunk, out } => {
            let kind: ExperimentKind = kind.into();
            let a = parse_direction_arg("a", &a)?;
            let b = match (&b, kind.is_pair()) {
                (Some(text), _) => Some(parse_direction_arg("b", text)?),
                (None, true) => {
                    return Err(CliError::Usage(format!("--b is required for --kind {kind}")))
                }
                (None, false) => None,
            };
            if n_events == 0 {
                return Err(CliError::Usage("-N must be at least 1".into()));
            }
            let config = ExperimentConfig::new(kind, a, b, n_events, seed)
                .map_err(|e| CliError::Usage(e.to_string()))?
                .with_chunk(chunk);

            let f = SourceState::new(io::read_matrix(&source)?)?;
            let freq = match kind {
                ExperimentKind::SingleSg => FrequencyTable::Single(single_sg_frequencies(&f, a)?),
                ExperimentKind::DoubleSg => {
                    FrequencyTable::Pair(double_sg_frequencies(&f, a, b.expect("checked"))?)
                }
                ExperimentKind::Eprb => {
                    FrequencyTable::Pair(eprb_frequencies(&f, a, b.expect("checked"))?)
                }
            };
            let log = sample_events(config, &freq)?;
            io::write_event_log(&out, &log)?;
            Ok(())
        }

        Command::Freq { input, out } => {
            let log = io::read_event_log(&input)?;
            let table = sgsim_core::experiment::relative_frequencies(&log)?;
            emit(out.as_deref(), &report::render_frequencies(&table))
        }

        Command::Moments { input, out } => {
            let log = io::read_event_log(&input)?;
            let moments = sgsim_core::experiment::moments_from_events(&log)?;
            emit(out.as_deref(), &report::render_moments(&moments))
        }

        Command::Projectors { a, method, out } => {
            let a = parse_direction_arg("a", &a)?;
            let set = match method {
                MethodArg::Closed => beam_projectors(a),
                MethodArg::Lagrange => lagrange_projectors(&spin_projection(a), 1e-10)?,
            };
            make_dir(&out)?;
            // outcomes descend (+1, 0, -1) in both constructions; the
            // lagrange outcomes are computed eigenvalues, so go by position
            for (index, name) in [(0, "M_plus1"), (1, "M_0"), (2, "M_minus1")] {
                io::write_matrix(&out.join(name), set.projector(index))?;
            }
            Ok(())
        }

        Command::Tomography { design, moments, out } => {
            let directions = io::read_design(&design)?;
            let lines = io::read_moment_lines(&moments)?;
            if directions.len() != lines.len() {
                return Err(CliError::Usage(format!(
                    "design has {} directions but moments file has {} lines",
                    directions.len(),
                    lines.len()
                )));
            }
            let observations: Vec<Observation> = directions
                .iter()
                .zip(&lines)
                .map(|(&direction, &(m1, m2))| Observation { direction, m1, m2 })
                .collect();
            let rec = reconstruct_source(&observations)?;
            io::write_matrix(&out, rec.source.matrix())?;
            println!("psd_adjustment={}", io::format_f64(rec.psd_adjustment));
            Ok(())
        }

        Command::Separability { dataset, out } => {
            let mut entries: Vec<PathBuf> = std::fs::read_dir(&dataset)
                .map_err(|e| CoreError::Io {
                    path: dataset.display().to_string(),
                    message: e.to_string(),
                })?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            entries.sort();
            let mut tables = Vec::with_capacity(entries.len());
            for path in &entries {
                let (a, b, table) = io::read_pair_table(path)?;
                tables.push(((a, b), table));
            }
            let rep = separability_residual(&tables)?;
            let mut text = String::new();
            text.push_str(&format!("residual={}\n", io::format_f64(rep.residual)));
            text.push_str(&format!("psd_adjustment={}\n", io::format_f64(rep.psd_adjustment)));
            text.push_str(&io::format_matrix(rep.fitted.matrix()));
            write_file(&out, &text)?;
            println!("residual={}", io::format_f64(rep.residual));
            Ok(())
        }

        Command::Evolve { source, schedule, lambda_max, step, out, report: report_path, save_every } => {
            if !lambda_max.is_finite() || lambda_max <= 0.0 || !step.is_finite() || step <= 0.0 {
                return Err(CliError::Usage("--lambda-max and --step must be positive".into()));
            }
            let f0 = SourceState::new(io::read_matrix(&source)?)?;
            let sched = io::read_schedule(&schedule)?;
            let (trajectory, rep) =
                sgsim_core::dynamics::evolve_source(&f0, &sched, lambda_max, step)?;
            make_dir(&out)?;
            let every = save_every.max(1);
            let last = trajectory.len() - 1;
            for (i, (_, f)) in trajectory.iter().enumerate() {
                if i % every != 0 && i != last {
                    continue;
                }
                io::write_matrix(&out.join(format!("F_{i:06}.mat")), f.matrix())?;
            }
            let mut text = String::new();
            text.push_str(&format!("points={}\n", trajectory.len()));
            text.push_str(&format!("lambda_max={}\n", io::format_f64(lambda_max)));
            text.push_str(&format!("spectrum_drift={}\n", io::format_f64(rep.spectrum_drift)));
            text.push_str(&format!(
                "trace_derivative_residual={}\n",
                io::format_f64(rep.trace_derivative_residual)
            ));
            text.push_str(&format!("unitarity_defect={}\n", io::format_f64(rep.unitarity_defect)));
            write_file(&report_path, &text)?;
            Ok(())
        }

        Command::Report { input, out } => {
            let text = report::run_report(&input)?;
            write_file(&out, &text)?;
            Ok(())
        }
    }
}

fn emit(out: Option<&std::path::Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
