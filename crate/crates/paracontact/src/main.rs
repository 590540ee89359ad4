use clap::{Parser, Subcommand};
use paracontact::cli::{self, specfile, ManifoldSource, OutputFormat, RunConfig};
use paracontact::examples;
use paracontact::geometry::DConvention;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "paracontact",
    about = "Verify curvature identities of almost (para)contact metric structures on coordinate charts"
)]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run identity suites on a builtin structure or a .pcm spec file.
    Verify {
        /// Builtin name or path to a .pcm file.
        #[arg(long)]
        manifold: String,
        /// Comma-separated list: axioms,geometry,structure,cone,contact,normal or all.
        #[arg(long, default_value = "all")]
        suite: String,
        /// Sample points per suite.
        #[arg(long, default_value_t = 32)]
        points: usize,
        /// Random vector tuples per point, in addition to the coordinate basis.
        #[arg(long, default_value_t = 8)]
        vectors: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 1e-7)]
        tol: f64,
        /// Exterior-derivative normalization: `half` or `one`.
        #[arg(long = "d-eta", default_value = "half")]
        d_eta: String,
        /// Use the operator-pairing reading of the Tr(∇φ)² frame sum.
        #[arg(long)]
        tr_phi_pairing: bool,
        /// Output format: `text` or `json`.
        #[arg(long, default_value = "text")]
        format: String,
    },
    /// List the builtin example structures.
    ListExamples,
    /// Print a builtin structure in the .pcm text format.
    ExportExample {
        name: String,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(args: Args) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match args.command {
        Command::Verify {
            manifold,
            suite,
            points,
            vectors,
            seed,
            tol,
            d_eta,
            tr_phi_pairing,
            format,
        } => {
            let source = if examples::BUILTIN_NAMES.contains(&manifold.as_str()) {
                ManifoldSource::Builtin(manifold)
            } else {
                ManifoldSource::File(PathBuf::from(manifold))
            };
            let mut cfg = RunConfig::new(source);
            cfg.suites = cli::parse_suites(&suite)?;
            cfg.points = points;
            cfg.vectors = vectors;
            cfg.seed = seed;
            cfg.tol = tol;
            cfg.convention = match d_eta.as_str() {
                "half" => DConvention::Half,
                "one" => DConvention::One,
                other => return Err(format!("unknown d-eta convention `{other}`").into()),
            };
            cfg.tr_phi_pairing = tr_phi_pairing;
            cfg.format = match format.as_str() {
                "text" => OutputFormat::Text,
                "json" => OutputFormat::Json,
                other => return Err(format!("unknown format `{other}`").into()),
            };
            let summary = cli::run(&cfg)?;
            print!("{}", summary.rendered);
            Ok(if summary.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            })
        }
        Command::ListExamples => {
            for name in examples::BUILTIN_NAMES {
                let s = examples::load_builtin(name)?;
                println!(
                    "{name:<18} dim {}  eps0 {:+}  eps1 {:+}",
                    s.dim(),
                    s.eps0 as i64,
                    s.eps1 as i64
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::ExportExample { name, output } => {
            let s = examples::load_builtin(&name)?;
            let text = specfile::serialize_spec(&s);
            match output {
                Some(path) => std::fs::write(path, text)?,
                None => print!("{text}"),
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}
