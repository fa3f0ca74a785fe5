//! Command-line interface.
//!
//! Exit codes: 0 success, 1 usage error, 2 verification failure,
//! 3 limit exceeded.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use geodesic_crossings::classifier::{self, ClassificationReport, Config};
use geodesic_crossings::gauss_code::{parse_code, CodeError};
use geodesic_crossings::planar_map::{realize_on_sphere, MapError};
use geodesic_crossings::render::render_svg;

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_LIMIT: u8 = 3;

#[derive(Parser)]
#[command(name = "geodesic-crossings", version, about = "Classify self-crossing patterns of closed geodesics on convex surfaces")]
struct Cli {
    #[command(flatten)]
    tuning: Tuning,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Tuning {
    /// Direction-search grid resolution.
    #[arg(long, global = true, default_value_t = 4096)]
    grid: usize,
    /// Certificate strictness margin.
    #[arg(long, global = true, default_value_t = 1e-6)]
    margin: f64,
    /// Enable the joint turning-polytope bound as a fallback.
    #[arg(long, global = true, default_value_t = false)]
    joint_bound: bool,
    /// Grid budget for the joint bound.
    #[arg(long, global = true, default_value_t = 1_000_000)]
    polytope_budget: usize,
    /// Crossing-count budget for enumeration and realization.
    #[arg(long, global = true, default_value_t = 8)]
    max_crossings: usize,
}

impl Tuning {
    fn config(&self) -> Config {
        Config {
            max_crossings: self.max_crossings,
            grid: self.grid,
            margin: self.margin,
            joint_bound: self.joint_bound,
            polytope_budget: self.polytope_budget,
            samples: 10_000,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Classify one Gauss code and emit a report with certificates.
    Classify {
        /// Whitespace-separated crossing labels, e.g. "1 2 3 1 2 3".
        #[arg(long)]
        code: String,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        json: Option<PathBuf>,
        /// Also render the diagram to this SVG path.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Enumerate and classify all patterns up to a crossing count.
    Census {
        #[arg(long)]
        crossings: usize,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Count mirror-image classes separately.
        #[arg(long, default_value_t = false)]
        mirror_distinct: bool,
    },
    /// Render a Gauss code as SVG.
    Render {
        #[arg(long)]
        code: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-verify a serialized classification report.
    Verify {
        #[arg(long)]
        report: PathBuf,
    },
}

fn classify_exit(err: &classifier::ClassifyError) -> u8 {
    match err {
        classifier::ClassifyError::Code(CodeError::LimitExceeded(..)) => EXIT_LIMIT,
        classifier::ClassifyError::Map(MapError::LimitExceeded(..)) => EXIT_LIMIT,
        classifier::ClassifyError::Code(_) => EXIT_USAGE,
        _ => EXIT_VERIFY,
    }
}

fn run(cli: Cli) -> Result<(), u8> {
    let config = cli.tuning.config();
    match cli.command {
        Command::Classify { code, json, svg } => {
            let code = parse_code(&code).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_USAGE
            })?;
            let report = classifier::classify(&code, &config).map_err(|e| {
                eprintln!("error: {e}");
                classify_exit(&e)
            })?;
            let body = serde_json::to_string_pretty(&report).expect("report serializes");
            match json {
                Some(path) => write_file(&path, &body)?,
                None => println!("{body}"),
            }
            if let Some(path) = svg {
                if let Some(diagram) =
                    realize_on_sphere(&parse_code(&report.canonical_code).unwrap(), config.max_crossings)
                        .map_err(|e| {
                            eprintln!("error: {e}");
                            EXIT_LIMIT
                        })?
                {
                    write_file(&path, &render_svg(&diagram))?;
                }
            }
            Ok(())
        }
        Command::Census { crossings, json, mirror_distinct } => {
            let rows = classifier::census(crossings, &config, mirror_distinct).map_err(|e| {
                eprintln!("error: {e}");
                classify_exit(&e)
            })?;
            match json {
                Some(path) => {
                    let body = serde_json::to_string_pretty(&rows).expect("rows serialize");
                    write_file(&path, &body)?;
                }
                None => {
                    for row in &rows {
                        println!(
                            "n={} code=\"{}\" faces={:?} verdict={} ({} ms)",
                            row.n,
                            row.canonical_code,
                            row.face_vector,
                            serde_json::to_value(row.verdict).unwrap().as_str().unwrap(),
                            row.millis
                        );
                    }
                }
            }
            Ok(())
        }
        Command::Render { code, out } => {
            let code = parse_code(&code).map_err(|e| {
                eprintln!("error: {e}");
                EXIT_USAGE
            })?;
            let diagram = realize_on_sphere(&code, config.max_crossings)
                .map_err(|e| {
                    eprintln!("error: {e}");
                    EXIT_LIMIT
                })?
                .ok_or_else(|| {
                    eprintln!("error: code is not realizable on the sphere");
                    EXIT_VERIFY
                })?;
            write_file(&out, &render_svg(&diagram))
        }
        Command::Verify { report } => {
            let body = fs::read_to_string(&report).map_err(|e| {
                eprintln!("error: cannot read {}: {e}", report.display());
                EXIT_USAGE
            })?;
            let report: ClassificationReport = serde_json::from_str(&body).map_err(|e| {
                eprintln!("error: malformed report: {e}");
                EXIT_VERIFY
            })?;
            match classifier::verify_report(&report) {
                Ok(true) => {
                    println!("report verified");
                    Ok(())
                }
                Ok(false) => {
                    eprintln!("error: report failed verification");
                    Err(EXIT_VERIFY)
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Err(EXIT_VERIFY)
                }
            }
        }
    }
}

fn write_file(path: &PathBuf, body: &str) -> Result<(), u8> {
    fs::write(path, body).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        EXIT_USAGE
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are successes; everything else is a
            // usage error with exit code 1.
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code),
    }
}
