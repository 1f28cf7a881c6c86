//! `eqbundle`: run checks and anomaly-cancellation searches on scenario files.

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eqbundle::cli::{run, Command, Flags};
use eqbundle::report::Format;

#[derive(Parser)]
#[command(name = "eqbundle", version, about = "Equivariant U(1)-bundles: holonomy, curvature and anomaly cancellation")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Seed for probes and random draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Held-out tolerance (fit tolerance is a tenth of it); cocycle tolerance for check-cocycle.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Fit and held-out probe counts.
    #[arg(long, global = true)]
    probes: Option<usize>,
    #[arg(long, global = true)]
    max_word_len: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Fmt::JsonLike)]
    format: Fmt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fmt {
    JsonLike,
    Text,
}

#[derive(Subcommand)]
enum Cmd {
    /// Cocycle law on relations, flows and products of short words.
    CheckCocycle { scenario: String },
    /// Infinitesimal anomaly by flow derivative and moment formula.
    Anomaly {
        scenario: String,
        #[arg(long)]
        section: Option<String>,
    },
    /// Equivariant holonomy of a word along a path (`unit` or a named path).
    Holonomy {
        scenario: String,
        #[arg(long)]
        word: String,
        #[arg(long, default_value = "unit")]
        path: String,
        #[arg(long)]
        section: Option<String>,
    },
    /// Equivariant curvature, moment maps, closedness and descent.
    Curvature {
        scenario: String,
        #[arg(long)]
        section: Option<String>,
    },
    /// Obstruction pipeline; `--local` runs the lattice locality pipeline.
    Verdict {
        scenario: String,
        #[arg(long)]
        local: bool,
    },
    /// Invariant suites on all bundled scenarios, or on one.
    Selftest { scenario: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, scenario) = match cli.command {
        Cmd::CheckCocycle { scenario } => (Command::CheckCocycle, Some(scenario)),
        Cmd::Anomaly { scenario, section } => (Command::Anomaly { section }, Some(scenario)),
        Cmd::Holonomy {
            scenario,
            word,
            path,
            section,
        } => (Command::Holonomy { word, path, section }, Some(scenario)),
        Cmd::Curvature { scenario, section } => (Command::Curvature { section }, Some(scenario)),
        Cmd::Verdict { scenario, local } => (Command::Verdict { local }, Some(scenario)),
        Cmd::Selftest { scenario } => (Command::Selftest, scenario),
    };
    let c = cli.common;
    let flags = Flags {
        seed: c.seed,
        tol: c.tol,
        probes: c.probes,
        max_word_len: c.max_word_len,
    };
    let format = match c.format {
        Fmt::JsonLike => Format::JsonLike,
        Fmt::Text => Format::Text,
    };
    let report = run(&command, scenario.as_deref(), &flags);
    let text = report.render(format);
    match &c.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("eqbundle: cannot write {}: {e}", path.display());
                return ExitCode::from(1);
            }
            eprint!("{}", report.render(Format::Text));
        }
        None => print!("{text}"),
    }
    ExitCode::from(report.exit_code as u8)
}
