use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use entrain::manifest::{Manifest, Overrides};
use entrain::pipeline::{emit_outputs, extract_dyad, run_study, RunOptions};
use entrain::stream::write_events;

#[derive(Parser)]
#[command(
    name = "entrain",
    version,
    about = "Acoustic-prosodic entrainment between two speakers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze every dyad of a study manifest.
    Analyze(AnalyzeArgs),
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Study manifest (JSON)
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (not used with --stream).
    #[arg(long, required_unless_present = "stream")]
    out: Option<PathBuf>,
    /// Significance level for the correlation flags.
    #[arg(long)]
    alpha: Option<f64>,
    /// Resampling grid step in seconds.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Neighbours averaged per grid point.
    #[arg(long)]
    k: Option<usize>,
    /// Synchrony lag in seconds.
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Emit sliding-window events for one dyad as NDJSON on stdout.
    #[arg(long)]
    stream: bool,
    /// Dyad to stream when the manifest lists several.
    #[arg(long, requires = "stream")]
    dyad: Option<String>,
    /// Worker threads (default: one per core).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

fn analyze(args: AnalyzeArgs) -> anyhow::Result<()> {
    let manifest = Manifest::load(&args.manifest)?;
    let overrides = Overrides {
        alpha: args.alpha,
        grid_step: args.grid_step,
        k: args.k,
        delta: args.delta,
    };
    if args.stream {
        let entry = match (&args.dyad, manifest.dyads.as_slice()) {
            (Some(id), dyads) => dyads
                .iter()
                .find(|d| &d.id == id)
                .with_context(|| format!("no dyad {id:?}"))?,
            (None, [only]) => only,
            (None, _) => bail!(
                "--stream needs --dyad when the manifest lists {} dyads",
                manifest.dyads.len()
            ),
        };
        let cfg = manifest.dyad_config(entry, &overrides)?;
        let speakers = extract_dyad(entry, &cfg)?;
        let stdout = std::io::stdout();
        let mut out = BufWriter::new(stdout.lock());
        write_events(&speakers, &cfg, &mut out)?;
        out.flush().context("writing stdout")?;
        return Ok(());
    }
    let out = args.out.expect("clap requires --out without --stream");
    let report = run_study(
        &manifest,
        &RunOptions {
            overrides,
            jobs: args.jobs,
        },
    )?;
    emit_outputs(&report, &out)?;
    let failed = report.dyads.iter().filter(|d| d.report.is_none()).count();
    eprintln!(
        "analyzed {} dyads ({failed} failed), wrote {}",
        report.dyads.len(),
        out.display()
    );
    Ok(())
}

// library errors already embed their source in the message
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain().map(ToString::to_string) {
        if !out.contains(&cause) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&cause);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Analyze(args) => analyze(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
