mod artifacts;
mod error;
mod execute;
mod presets;
mod spec;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::artifacts::{spec_hash, OutDir};
use crate::error::CliError;
use crate::execute::{execute, Context};
use crate::spec::parse_spec;

/// Batch runner for MD-PSM and PSM link simulations.
#[derive(Debug, Parser)]
#[command(name = "mdpsm", version, about, arg_required_else_help = true)]
struct Cli {
    /// Print the available presets and exit.
    #[arg(long)]
    list_presets: bool,

    /// Override the seed of every experiment.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true, env = "MDPSM_OUT_DIR", default_value = "results")]
    out: PathBuf,

    /// Maximum number of worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a spec file.
    Run { spec: PathBuf },
    /// Run a preset and compare against the published headline numbers.
    Reproduce { id: String },
}

fn run_spec(path: &PathBuf, ctx: &Context<'_>) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let spec = parse_spec(&text)?;
    let done = execute(&spec, &text, ctx)?;
    println!("{}", done.summary);
    for f in &done.files {
        println!("  wrote {}", ctx.out.path(f).display());
    }
    Ok(())
}

fn reproduce(id: &str, ctx: &Context<'_>) -> Result<(), CliError> {
    let preset = presets::find(id).ok_or_else(|| CliError::UnknownPreset(id.to_string(), presets::ids()))?;
    println!("{}: {}", preset.id, preset.description);
    let mut outcomes = Vec::new();
    let mut report = format!("# {}\n# preset: {} ({})\n", artifacts::version_string(), preset.id, preset.description);
    for (stem, text) in (preset.specs)() {
        ctx.out.write(&format!("{stem}.spec"), &text)?;
        let spec = parse_spec(&text)?;
        let done = execute(&spec, &text, ctx)?;
        println!("  {}", done.summary);
        report.push_str(&format!("# {stem}: spec_sha256 {}\n", spec_hash(&text)));
        outcomes.push(done.outcome);
    }
    let headlines = (preset.headlines)(&outcomes);
    for h in &headlines {
        let line = format!("{} {}: {}", if h.pass { "PASS" } else { "FAIL" }, h.label, h.measured);
        println!("{line}");
        report.push_str(&line);
        report.push('\n');
    }
    ctx.out.write(&format!("{}_report.txt", preset.id), &report)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if cli.list_presets {
        for p in presets::PRESETS {
            println!("{:<8} {}", p.id, p.description);
        }
        return ExitCode::SUCCESS;
    }
    if cli.jobs > 0 {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let Some(command) = cli.command else {
        eprintln!("error: nothing to do; pass `run <spec>`, `reproduce <id>` or `--list-presets`");
        return ExitCode::from(2);
    };
    let out = match OutDir::create(&cli.out) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    let ctx = Context { out: &out, seed_override: cli.seed, jobs: cli.jobs };
    let result = match &command {
        Command::Run { spec } => run_spec(spec, &ctx),
        // headline mismatches are reported as FAIL lines, not as errors
        Command::Reproduce { id } => reproduce(id, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
