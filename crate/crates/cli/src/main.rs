use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use smo_enhance::commands::{self, Manifest, Outcome, Stage};
use smo_enhance::config::Config;

#[derive(Parser)]
#[command(name = "smo-enhance", version, about = "Swarm-tuned diffusion + CLAHE image enhancement")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_parser = ["pmd-only", "clahe-only", "hybrid"])]
    mode: Option<String>,
    #[arg(long, global = true, value_parser = ["csv", "json"])]
    report: Option<String>,
    /// Model file, or `bundled` for the built-in test scorer.
    #[arg(long, global = true)]
    brisque_model: Option<String>,
    #[arg(long, global = true)]
    ceiq_model: Option<String>,
    #[arg(long, global = true, value_parser = ["smo", "pso", "both"])]
    optimizer: Option<String>,
    /// Images processed concurrently, 0 = one per core.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum StageArg {
    Pmd,
    Clahe,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance images (files or directories) with the configured mode.
    Enhance {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Quality metrics of an enhanced image against its original.
    Metrics {
        original: PathBuf,
        enhanced: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run pmd-only, clahe-only and hybrid on every input.
    Compare {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tune one stage with SMO and/or PSO and report the runs.
    Optimize {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        stage: StageArg,
    },
    /// Write the synthetic fixture corpus.
    Fixtures {
        #[arg(long)]
        out: PathBuf,
    },
    /// Refit the bundled test scorers and write them as model files.
    FitModels {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default configuration.
    DefaultConfig,
}

impl Cli {
    fn resolve(&self) -> Result<Config> {
        let mut c = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        if let Some(v) = self.seed {
            c.run.seed = v;
        }
        if let Some(v) = &self.mode {
            c.run.mode = v.clone();
        }
        if let Some(v) = &self.report {
            c.run.report = v.clone();
        }
        if let Some(v) = &self.optimizer {
            c.run.optimizer = v.clone();
        }
        if let Some(v) = self.workers {
            c.run.workers = v;
        }
        if let Some(v) = &self.brisque_model {
            c.models.brisque = v.clone();
        }
        if let Some(v) = &self.ceiq_model {
            c.models.ceiq = v.clone();
        }
        Ok(c)
    }
}

fn finish(o: Outcome) -> ExitCode {
    for r in &o.reports {
        println!("{}", r.display());
    }
    if o.success() {
        ExitCode::SUCCESS
    } else {
        eprintln!("{} of {} images failed", o.failed, o.total);
        ExitCode::from(1)
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let config = cli.resolve()?;
    let manifest = |inputs: &[PathBuf], out: &PathBuf| Manifest {
        inputs: inputs.to_vec(),
        out: out.clone(),
        config: config.clone(),
    };
    Ok(match &cli.command {
        Command::Enhance { inputs, out } => finish(commands::cmd_enhance(&manifest(inputs, out))?),
        Command::Compare { inputs, out } => finish(commands::cmd_compare(&manifest(inputs, out))?),
        Command::Optimize { inputs, out, stage } => {
            let stage = match stage {
                StageArg::Pmd => Stage::Pmd,
                StageArg::Clahe => Stage::Clahe,
            };
            finish(commands::cmd_optimize(&manifest(inputs, out), stage)?)
        }
        Command::Metrics { original, enhanced, out } => {
            let text = commands::metrics_report(original, enhanced, &config)?;
            match out {
                Some(p) => std::fs::write(p, text)?,
                None => print!("{text}"),
            }
            ExitCode::SUCCESS
        }
        Command::Fixtures { out } => {
            for p in commands::write_fixtures(out)? {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Command::FitModels { out } => {
            for p in commands::fit_models(out)? {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Command::DefaultConfig => {
            print!("{}", config.to_toml());
            ExitCode::SUCCESS
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
