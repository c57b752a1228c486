use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use phide::config::{Algorithm, ExperimentConfig, Mode, ScheduleKind};
use phide::experiment::{read_runs_csv, run_experiment, write_runs_csv};
use phide::games::GameSelector;
use phide::summary::{summarize, write_summary_csv, Summary};
use phide::verify;
use phide_core::oracle::best_response_value;
use phide_core::{BehavioralPolicy, GameDocument, InfoPartition, LearnerKind, ProxMode};

#[derive(Parser)]
#[command(name = "phide", version, about = "Learning on relaxed information maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seeded batch and write runs.csv and summary.csv.
    Run(RunArgs),
    /// Recompute summary.csv from a runs.csv.
    Summarize {
        runs: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.9")]
        quantiles: Vec<f64>,
        #[arg(long, default_value_t = 0.95)]
        threshold: f64,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the acceptance criteria.
    Verify {
        /// Criteria to check, all by default.
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
    },
    /// Write a game and its maps as a TOML document.
    Game {
        #[arg(long)]
        game: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Best value a player can reach with a deterministic policy on one map.
    Value {
        #[arg(long)]
        game: String,
        #[arg(long, default_value = "original")]
        map: String,
        #[arg(long, default_value_t = 0)]
        player: usize,
    },
}

/// Every flag overrides the matching key of `--config`.
#[derive(Args)]
struct RunArgs {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    game: Option<String>,
    #[arg(long, value_enum)]
    algorithm: Option<Algorithm>,
    #[arg(long)]
    relaxed_map: Option<String>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleKind>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    target: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long, value_parser = parse_learner)]
    learner: Option<LearnerKind>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    exploration: Option<f64>,
    #[arg(long, value_parser = parse_prox_mode)]
    prox_mode: Option<ProxMode>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, env = "PHIDE_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    randomize_init: Option<bool>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    quantiles: Option<Vec<f64>>,
    #[arg(long)]
    player: Option<usize>,
}

fn parse_learner(s: &str) -> Result<LearnerKind, String> {
    toml_enum(s)
}

fn parse_prox_mode(s: &str) -> Result<ProxMode, String> {
    toml_enum(s)
}

/// Parses a unit enum variant the way the config file spells it.
fn toml_enum<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, String> {
    #[derive(serde::Deserialize)]
    struct Wrap<T> {
        v: T,
    }
    toml::from_str::<Wrap<T>>(&format!("v = {s:?}"))
        .map(|w| w.v)
        .map_err(|_| format!("unknown value {s:?}"))
}

impl RunArgs {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = &self.$field {
                    c.$field = v.clone();
                }
            )*};
        }
        set!(game, algorithm, relaxed_map, schedule, lambda, target, iterations, learner, mode,
             exploration, prox_mode, repeats, seed, randomize_init, threshold, quantiles, player);
        if self.eta.is_some() {
            c.eta = self.eta;
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_final(summary: &Summary) {
    let row = summary.final_row();
    let quantiles: Vec<String> = summary
        .quantiles
        .iter()
        .zip(&row.quantiles)
        .map(|(q, v)| format!("q{q}={v:.4}"))
        .collect();
    println!(
        "t={} runs={} mean={:.4} {} success_rate={:.3} (threshold {})",
        row.t,
        summary.runs,
        row.mean,
        quantiles.join(" "),
        row.success_rate,
        summary.threshold
    );
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let config = args.config()?;
    let records = run_experiment(&config)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    std::fs::write(args.out.join("config.toml"), config.to_toml()?)?;
    write_runs_csv(BufWriter::new(File::create(args.out.join("runs.csv"))?), &records)?;
    let summary = summarize(&records, &config.quantiles, config.threshold)?;
    write_summary_csv(BufWriter::new(File::create(args.out.join("summary.csv"))?), &summary)?;
    print_final(&summary);
    Ok(())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<ExitCode> {
    match command {
        Command::Run(args) => run(args)?,
        Command::Summarize {
            runs,
            quantiles,
            threshold,
            out,
        } => {
            let records = read_runs_csv(File::open(&runs).with_context(|| format!("opening {}", runs.display()))?)?;
            let summary = summarize(&records, &quantiles, threshold)?;
            match out {
                Some(path) => {
                    write_summary_csv(BufWriter::new(File::create(&path)?), &summary)?;
                    print_final(&summary);
                }
                None => write_summary_csv(std::io::stdout().lock(), &summary)?,
            }
        }
        Command::Verify { only } => {
            let mut failed = false;
            for id in verify::CRITERIA {
                if only.is_empty() || only.contains(&id) {
                    let outcome = verify::check(id);
                    println!("{}", outcome.line());
                    failed |= !outcome.passed();
                }
            }
            if failed {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Game { game, out } => {
            let loaded = game.parse::<GameSelector>()?.load()?;
            let text = GameDocument::from_game(&loaded.game, &loaded.maps).to_toml()?;
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
        }
        Command::Value { game, map, player } => {
            let loaded = game.parse::<GameSelector>()?.load()?;
            let part = InfoPartition::compile(&loaded.game, loaded.map(&map)?)?;
            let value = best_response_value(&loaded.game, &part, player, &BehavioralPolicy::uniform(&part))?;
            println!("{value:?}");
        }
    }
    Ok(ExitCode::SUCCESS)
}
