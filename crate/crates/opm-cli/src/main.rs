//! Command-line interface: Monte Carlo simulation of the clutter scenario,
//! a two-bandit decision demo and a runtime validation suite.

mod validate;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Deserialize;

use opm::bandit::{select_bandit, BanditChoice, BanditPosterior, ExpectedReward};
use opm::sim::{monte_carlo, MetricsRow, ScenarioConfig};

#[derive(Parser)]
#[command(
    name = "opm",
    about = "Possibilistic state estimation with outer probability measures",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo benchmark of the possibilistic filter against the
    /// fully informed probabilistic baseline.
    Simulate(SimulateArgs),
    /// Replay a seeded two-bandit session, printing credibilities and the
    /// selection decision after every play.
    BanditDemo(BanditDemoArgs),
    /// Run the runtime oracle-equivalence suite and exit nonzero on any
    /// violation.
    Validate(ValidateArgs),
}

#[derive(Parser, Debug)]
struct SimulateArgs {
    /// Configuration file (TOML) mirroring these flags; flags take
    /// precedence over the file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated detection probabilities.
    #[arg(long, value_delimiter = ',')]
    pd: Option<Vec<f64>>,
    /// Monte Carlo runs per detection probability.
    #[arg(long)]
    runs: Option<usize>,
    /// Time steps per run.
    #[arg(long)]
    steps: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Clutter credibility: `auto` selects 1 - p_d.
    #[arg(long)]
    alpha: Option<AlphaArg>,
    /// Weight threshold for pruning hypotheses.
    #[arg(long)]
    prune: Option<f64>,
    /// Squared-Mahalanobis threshold for merging hypotheses.
    #[arg(long)]
    merge: Option<f64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Parser, Debug)]
struct BanditDemoArgs {
    /// Seed for the hidden bandit probabilities and the outcome draws.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Number of plays.
    #[arg(long, default_value_t = 12)]
    plays: usize,
    /// Number of outcomes per bandit (rewards are 1..=arms).
    #[arg(long, default_value_t = 3)]
    arms: usize,
}

#[derive(Parser, Debug)]
struct ValidateArgs {
    /// Random model instantiations for the filter-equivalence check.
    #[arg(long, default_value_t = 20)]
    models: usize,
    /// Steps per instantiation.
    #[arg(long, default_value_t = 100)]
    steps: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum, Deserialize, PartialEq)]
#[serde(rename_all = "lowercase")]
enum OutputFormat {
    Csv,
    Json,
}

/// Clutter credibility argument: a number or the literal `auto`.
#[derive(Clone, Copy, Debug)]
enum AlphaArg {
    Auto,
    Value(f64),
}

impl FromStr for AlphaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s == "auto" {
            return Ok(AlphaArg::Auto);
        }
        s.parse::<f64>()
            .map(AlphaArg::Value)
            .map_err(|e| format!("expected a number or `auto`: {e}"))
    }
}

impl<'de> Deserialize<'de> for AlphaArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(AlphaArg::Value(v)),
            Raw::Text(s) => AlphaArg::from_str(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// File-backed counterpart of the simulate flags.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SimulateFile {
    pd: Option<Vec<f64>>,
    runs: Option<usize>,
    steps: Option<usize>,
    seed: Option<u64>,
    alpha: Option<AlphaArg>,
    prune: Option<f64>,
    merge: Option<f64>,
    out: Option<PathBuf>,
    format: Option<OutputFormat>,
}

struct SimulatePlan {
    cfg: ScenarioConfig,
    pd_list: Vec<f64>,
    runs: usize,
    out: Option<PathBuf>,
    format: OutputFormat,
}

fn resolve_simulate(args: SimulateArgs) -> Result<SimulatePlan> {
    let file: SimulateFile = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => SimulateFile::default(),
    };

    let alpha = match args.alpha.or(file.alpha) {
        None | Some(AlphaArg::Auto) => None,
        Some(AlphaArg::Value(v)) => Some(v),
    };
    let cfg = ScenarioConfig {
        n_steps: args.steps.or(file.steps).unwrap_or(100),
        seed: args.seed.or(file.seed).unwrap_or(0),
        alpha,
        prune_threshold: args.prune.or(file.prune).unwrap_or(1e-3),
        merge_sq_threshold: args.merge.or(file.merge).unwrap_or(3.22),
        ..ScenarioConfig::default()
    };
    let pd_list = args.pd.or(file.pd).unwrap_or_else(|| vec![0.9, 0.8, 0.7]);
    if pd_list.is_empty() {
        bail!("need at least one detection probability");
    }
    Ok(SimulatePlan {
        cfg,
        pd_list,
        runs: args.runs.or(file.runs).unwrap_or(200),
        out: args.out.or(file.out),
        format: args.format.or(file.format).unwrap_or(OutputFormat::Csv),
    })
}

fn render_csv(rows: &[MetricsRow]) -> String {
    let mut text = String::from("method,p_d,rmse,assoc_error,runs,seed\n");
    for row in rows {
        let _ = writeln!(
            text,
            "{},{},{},{},{},{}",
            row.method, row.p_d, row.rmse, row.assoc_error, row.runs, row.seed
        );
    }
    text
}

fn run_simulate(args: SimulateArgs) -> Result<()> {
    let plan = resolve_simulate(args)?;
    let rows = monte_carlo(&plan.cfg, &plan.pd_list, plan.runs)?;
    let text = match plan.format {
        OutputFormat::Csv => render_csv(&rows),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows)?;
            s.push('\n');
            s
        }
    };
    match plan.out {
        Some(path) => {
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn describe_expected_reward(r: &ExpectedReward) -> String {
    match r {
        ExpectedReward::Value(v) => format!("{v:.3}"),
        ExpectedReward::Interval { low, high } => format!("[{low:.3}, {high:.3}]"),
    }
}

fn run_bandit_demo(args: BanditDemoArgs) -> Result<()> {
    if args.arms < 2 {
        bail!("need at least two outcomes");
    }
    let mut rng = ChaCha12Rng::seed_from_u64(args.seed);
    let rewards: Vec<f64> = (1..=args.arms).map(|i| i as f64).collect();

    // Hidden truth: one categorical distribution per bandit.
    let draw_simplex = |rng: &mut ChaCha12Rng| -> Vec<f64> {
        let raw: Vec<f64> = (0..args.arms).map(|_| rng.gen_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / total).collect()
    };
    let truths = [draw_simplex(&mut rng), draw_simplex(&mut rng)];
    let mut bandits = [
        BanditPosterior::unplayed(rewards.clone())?,
        BanditPosterior::unplayed(rewards.clone())?,
    ];
    let names = ["A", "B"];
    let best = args.arms - 1;

    println!(
        "Two bandits with {} outcomes, rewards 1..{}; outcome probabilities unknown to the player.",
        args.arms, args.arms
    );
    println!("Playing the bandit with the larger maximum credible reward, first on ties.\n");
    for play in 1..=args.plays {
        let choice = match select_bandit(&bandits[0], &bandits[1])? {
            BanditChoice::First => 0,
            BanditChoice::Second => 1,
        };
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut outcome = best;
        for (i, &p) in truths[choice].iter().enumerate() {
            acc += p;
            if u < acc {
                outcome = i;
                break;
            }
        }
        bandits[choice].observe(outcome)?;

        let cred_a = bandits[0].event_credibility(&[best])?;
        let cred_b = bandits[1].event_credibility(&[best])?;
        println!(
            "play {play:>2}: chose {} -> outcome {} (reward {})",
            names[choice],
            outcome + 1,
            rewards[outcome]
        );
        println!(
            "          credibility of top reward: A {cred_a:.3}, B {cred_b:.3}; \
             max credible reward: A {:.3}, B {:.3}; expected reward: A {}, B {}",
            bandits[0].max_credible_reward(),
            bandits[1].max_credible_reward(),
            describe_expected_reward(&bandits[0].expected_reward_star()),
            describe_expected_reward(&bandits[1].expected_reward_star()),
        );
    }
    println!();
    for (i, bandit) in bandits.iter().enumerate() {
        println!(
            "bandit {}: plays {:?} (total {}), hidden probabilities {:?}",
            names[i],
            bandit.counts(),
            bandit.total(),
            truths[i]
                .iter()
                .map(|p| format!("{p:.3}"))
                .collect::<Vec<_>>()
        );
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::BanditDemo(args) => run_bandit_demo(args),
        Command::Validate(args) => validate::run(args.models, args.steps),
    };
    if let Err(error) = outcome {
        eprintln!("error: {error:#}");
        std::process::exit(1);
    }
}
