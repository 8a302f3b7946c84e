use clap::{Parser, Subcommand};
use morrey_lab::harness::audit::{run_audit, run_experiment};
use morrey_lab::harness::experiments::{run_check, run_norm, run_op, RunOptions};
use morrey_lab::harness::{ExperimentConfig, Outcome};
use morrey_lab::{Error, Exec};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Variable-exponent and complementary Morrey norm laboratory.
#[derive(Parser, Debug)]
#[command(name = "morrey-lab", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for CSV files.
    #[arg(long, global = true, default_value = "results")]
    out: PathBuf,
    /// Override the ladder depth K.
    #[arg(long, global = true)]
    ladder_depth: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run boundedness experiments whose hypotheses fail (labelled non-conforming).
    #[arg(long, global = true)]
    force: bool,
    /// Override the seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Compute a norm of the configured field.
    Norm,
    /// Evaluate an operator at probe points.
    Op,
    /// Run condition verdicts for the configured weights.
    Check,
    /// Run the experiment named in the config.
    Experiment,
    /// Run the built-in acceptance suite.
    Audit,
}

fn load(cli: &Cli) -> Result<ExperimentConfig, Error> {
    let path = cli.config.as_ref().ok_or_else(|| Error::InvalidArgument("--config is required".into()))?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
    let mut cfg = ExperimentConfig::from_text(&text)?;
    if let Some(k) = cli.ladder_depth {
        cfg.ladder_depth = k;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn report(o: &Outcome, dir: &Path) -> Result<bool, Error> {
    for p in o.write(dir)? {
        println!("wrote {}", p.display());
    }
    print!("{}", o.summary());
    Ok(o.passed())
}

fn run(cli: &Cli) -> Result<bool, Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::InvalidArgument("--threads must be positive".into()));
        }
        morrey_lab::exec::set_threads(n)?;
    }
    let opts = RunOptions { exec: Exec::default(), force: cli.force };
    match cli.cmd {
        Cmd::Audit => {
            let r = run_audit(&cli.out, cli.seed, opts)?;
            for (name, o) in &r.runs {
                let tag = if o.conforming { "" } else { " [non-conforming]" };
                println!("{} {name}{tag}", if o.passed() { "PASS" } else { "FAIL" });
            }
            Ok(r.passed())
        }
        cmd => {
            let cfg = load(cli)?;
            let o = match cmd {
                Cmd::Norm => run_norm(&cfg, opts)?,
                Cmd::Op => run_op(&cfg, opts)?,
                Cmd::Check => run_check(&cfg)?,
                _ => run_experiment(&cfg, opts)?,
            };
            report(&o, &cli.out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
