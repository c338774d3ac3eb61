//! Command-line interface. Flags override the config file.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, estimate::EstimateArgs};
use crate::error::AppResult;
use crate::spec::{ExperimentSpec, FeedKind};

#[derive(Debug, Parser)]
#[command(name = "impatience", about = "Impatient tenants in two Markovian queues: simulation, training and asymptotic checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate every feed over the arrival-rate set.
    Simulate(SimulateArgs),
    /// Train the actor-critic feed.
    Train(TrainArgs),
    /// Check the large-backlog limits for one feed.
    Asymptotics(AsymptoticsArgs),
    /// Print the closed-form quantities of one state.
    Estimate(EstimateCmd),
    /// Print the version.
    Version,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML experiment file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: config `out_dir`, then $IMPATIENCE_OUT_DIR, then `out`].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub name: Option<String>,
}

impl Common {
    fn spec(&self) -> AppResult<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.seed = seed;
        }
        if let Some(name) = &self.name {
            spec.name = name.clone();
        }
        Ok(spec)
    }

    fn out_dir(&self, spec: &ExperimentSpec, command: &str) -> PathBuf {
        commands::resolve_out_dir(self.out.as_deref(), spec).join(command)
    }
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Feed to simulate; repeat for paired runs.
    #[arg(long = "feed", value_parser = parse_feed)]
    pub feeds: Vec<FeedKind>,
    /// Total arrival rates; repeat to replace the set.
    #[arg(long = "lambda")]
    pub lambdas: Vec<f64>,
    /// Fixed arrival-rate offset instead of a random one per replication.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub replications: Option<u64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Write one event trace per run.
    #[arg(long)]
    pub trace: bool,
    /// Replications per backlog of the rate profile; 0 skips it.
    #[arg(long)]
    pub profile_reps: Option<u64>,
    /// Trained model for the learned feed.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Hidden layer widths, e.g. `128,128`.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    /// Continue from a checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Fail (exit 2) unless the final losses are below the initial ones.
    #[arg(long)]
    pub check: bool,
}

#[derive(Debug, Args)]
pub struct AsymptoticsArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_parser = parse_feed, default_value = "markov")]
    pub feed: FeedKind,
    /// Backlog grid; repeat to replace it.
    #[arg(long = "n")]
    pub grid: Vec<u64>,
    /// Replications per backlog of the sweep.
    #[arg(long)]
    pub reps: Option<u64>,
    /// Draw the alternative queue from its stationary law instead of fixing it.
    #[arg(long)]
    pub stationary_m: bool,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EstimateCmd {
    /// Requests ahead of the tenant, including the one in service.
    #[arg(long)]
    pub k: u64,
    #[arg(long)]
    pub mu: f64,
    /// Patience budget `T`.
    #[arg(long = "patience", short = 'T')]
    pub patience: f64,
    /// Time already spent waiting.
    #[arg(long, default_value_t = 0.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.0)]
    pub lambda_tar: f64,
    /// Horizon of the target-queue PMF.
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Target-queue position [default: k].
    #[arg(long)]
    pub k_j: Option<u64>,
    /// Target per-server rate [default: mu].
    #[arg(long)]
    pub mu_j: Option<f64>,
    /// Print CSV instead of a table.
    #[arg(long)]
    pub csv: bool,
}

fn parse_feed(s: &str) -> Result<FeedKind, String> {
    FeedKind::parse(s).map_err(|e| e.to_string())
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

pub fn simulate_spec(args: &SimulateArgs) -> AppResult<ExperimentSpec> {
    let mut spec = args.common.spec()?;
    if !args.feeds.is_empty() {
        spec.simulate.feeds = args.feeds.clone();
    }
    if !args.lambdas.is_empty() {
        spec.system.lambda_set = args.lambdas.clone();
    }
    if args.delta.is_some() {
        spec.system.delta = args.delta;
    }
    set(&mut spec.simulate.replications, args.replications);
    set(&mut spec.simulate.horizon, args.horizon);
    set(&mut spec.simulate.profile_reps, args.profile_reps);
    spec.simulate.trace |= args.trace;
    if args.checkpoint.is_some() {
        spec.checkpoint = args.checkpoint.clone();
    }
    spec.validate()?;
    Ok(spec)
}

pub fn train_spec(args: &TrainArgs) -> AppResult<ExperimentSpec> {
    let mut spec = args.common.spec()?;
    set(&mut spec.train.episodes, args.episodes);
    set(&mut spec.train.epochs_per_episode, args.epochs);
    set(&mut spec.train.hidden, args.hidden.clone());
    set(&mut spec.train.learning_rate, args.learning_rate);
    spec.validate()?;
    Ok(spec)
}

pub fn asymptotics_spec(args: &AsymptoticsArgs) -> AppResult<ExperimentSpec> {
    let mut spec = args.common.spec()?;
    if !args.grid.is_empty() {
        spec.asymptotics.grid = args.grid.clone();
    }
    set(&mut spec.asymptotics.reps, args.reps);
    spec.asymptotics.stationary_m |= args.stationary_m;
    if args.checkpoint.is_some() {
        spec.checkpoint = args.checkpoint.clone();
    }
    spec.validate()?;
    Ok(spec)
}

fn report(line: impl AsRef<str>) {
    eprintln!("{}", line.as_ref());
}

pub fn run(cli: Cli) -> AppResult<()> {
    match cli.command {
        Command::Simulate(args) => {
            let spec = simulate_spec(&args)?;
            let out = args.common.out_dir(&spec, "simulate");
            commands::write_spec(&out, &spec)?;
            let summary = commands::simulate::simulate(&spec, &out)?;
            report(format!("{} runs written to {}", summary.runs, out.display()));
            for f in &summary.feeds {
                if let Some(p) = &f.profile {
                    report(format!(
                        "{}: jockey rate peaks at backlog {} and decays {:.3}; final renege ratio {:.3}",
                        f.feed, p.peak_queue_size, p.jockey_decay, p.renege_final_ratio
                    ));
                }
            }
            Ok(())
        }
        Command::Train(args) => {
            let spec = train_spec(&args)?;
            let out = args.common.out_dir(&spec, "train");
            commands::write_spec(&out, &spec)?;
            let s = commands::train::train(&spec, &out, args.resume.as_deref(), args.check)?;
            report(format!(
                "{} episodes (mean loss {:.5} first, {:.5} last) written to {}",
                s.episodes,
                s.first_mean_loss,
                s.last_mean_loss,
                out.display()
            ));
            Ok(())
        }
        Command::Asymptotics(args) => {
            let spec = asymptotics_spec(&args)?;
            let out = args.common.out_dir(&spec, "asymptotics").join(args.feed.as_str());
            commands::write_spec(&out, &spec)?;
            let r = commands::asymptotics::asymptotics(&spec, &out, args.feed)?;
            for c in &r.checks {
                report(format!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail));
            }
            r.into_result().map(|_| ())
        }
        Command::Estimate(e) => {
            let rows = commands::estimate::estimate(&EstimateArgs {
                k: e.k,
                mu: e.mu,
                patience: e.patience,
                t0: e.t0,
                lambda_tar: e.lambda_tar,
                t: e.t,
                k_j: e.k_j.unwrap_or(e.k),
                mu_j: e.mu_j.unwrap_or(e.mu),
            })?;
            let mut stdout = std::io::stdout().lock();
            if e.csv {
                commands::estimate::print_csv(&rows, &mut stdout)
            } else {
                commands::estimate::print_table(&rows, &mut stdout)
            }
        }
        Command::Version => {
            println!("impatience {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
