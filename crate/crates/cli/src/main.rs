use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use gasper_lab::engine::SeededRandom;
use gasper_lab::experiments::{
    budget_refined, budget_targeted, listening_time_s, opportune_wait, run_detailed,
    selection_probs, sweep_tdelay, trial_seed, write_results, ExperimentConfig, ListeningVariant,
    SweepSpec,
};
use gasper_lab::net::{cdf_stats, load_trace, synthetic_trace, write_trace, SyntheticSender};
use gasper_lab::validators::StrategyConfig;

#[derive(Parser)]
#[command(name = "gasper-lab", version, about = "Gasper consensus attack simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured experiment and write one CSV row per trial.
    Simulate(SimulateArgs),
    /// Grid-search the balancing attack's swaying delay.
    Sweep(SweepArgs),
    /// Reception CDF statistics of one sender in a delay trace.
    AnalyzeTrace {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        sender: u32,
        /// Also write the mean CDF as `t_ms,fraction` CSV.
        #[arg(long)]
        cdf_out: Option<PathBuf>,
    },
    /// Closed-form calculators.
    Calc {
        #[command(subcommand)]
        formula: Formula,
    },
    /// Write a synthetic lognormal delay trace.
    GenTrace(GenTraceArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, env = "GASPER_LAB_SEED")]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(h) = self.horizon {
            cfg.horizon = h;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Print every simulation event to stderr.
    #[arg(long)]
    verbose: bool,
    /// Print the effective configuration as JSON and exit.
    #[arg(long)]
    dump_config: bool,
    /// Also write full per-run records as JSON.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    t_delay_min: Option<u64>,
    #[arg(long)]
    t_delay_max: Option<u64>,
    #[arg(long)]
    t_delay_step: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Formula {
    BudgetRefined {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        w_honest: u64,
    },
    BudgetTargeted {
        #[arg(long)]
        k: u64,
    },
    SelectionProbs {
        #[arg(long, default_value_t = 200)]
        n_adv: u64,
        #[arg(long, default_value_t = 230_000)]
        n_total: u64,
        #[arg(long, default_value_t = 32)]
        slots_per_epoch: u64,
        #[arg(long, default_value_t = 7200)]
        horizon_slots: u64,
    },
    OpportuneWait {
        #[arg(long)]
        beta: f64,
    },
    ListeningTime {
        #[arg(long)]
        k: u64,
        #[arg(long, value_enum, default_value_t = Variant::Targeted)]
        variant: Variant,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Variant {
    Targeted,
    Probabilistic,
}

#[derive(Args)]
struct GenTraceArgs {
    /// Median delay per sender; sender `i` gets the `i`-th value.
    #[arg(long = "median-ms", default_value = "100")]
    median_ms: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 750)]
    nodes: u32,
    #[arg(long, default_value_t = 20)]
    messages: u32,
    #[arg(long, env = "GASPER_LAB_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn config_dir(path: &Path) -> Option<&Path> {
    path.parent().filter(|p| !p.as_os_str().is_empty())
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let cfg = args.run.load()?;
    if args.dump_config {
        let mut out = output(args.run.out.as_deref())?;
        serde_json::to_writer_pretty(&mut out, &cfg)?;
        writeln!(out)?;
        return Ok(());
    }
    let network = cfg.delay.to_model(config_dir(&args.run.config))?;
    let mut records = Vec::new();
    for trial in 0..cfg.trials {
        let seed = trial_seed(cfg.seed, trial);
        let (record, outcome) = run_detailed(&cfg, &cfg.strategy, &network, seed, args.verbose)?;
        if args.verbose {
            let mut err = io::stderr().lock();
            writeln!(err, "# trial {trial} seed {seed}")?;
            for line in &outcome.trace.events {
                writeln!(err, "{line}")?;
            }
        }
        records.push(record);
    }
    write_results(&records, output(args.run.out.as_deref())?)?;
    if let Some(path) = &args.records {
        let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        serde_json::to_writer_pretty(BufWriter::new(file), &records)?;
    }
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let mut cfg = args.run.load()?;
    let base = cfg.sweep.unwrap_or(SweepSpec {
        t_min_ms: 60,
        t_max_ms: 140,
        step_ms: 5,
    });
    cfg.sweep = Some(SweepSpec {
        t_min_ms: args.t_delay_min.unwrap_or(base.t_min_ms),
        t_max_ms: args.t_delay_max.unwrap_or(base.t_max_ms),
        step_ms: args.t_delay_step.unwrap_or(base.step_ms),
    });
    if !matches!(cfg.strategy, StrategyConfig::Balancing { .. }) {
        bail!("invalid config field `strategy`: sweep requires the balancing strategy");
    }
    cfg.validate()?;
    let network = cfg.delay.to_model(config_dir(&args.run.config))?;
    let points = cfg.sweep.expect("set above").points();
    let result = sweep_tdelay(&cfg, &network, &points, args.jobs)?;
    result.write_csv(output(args.run.out.as_deref())?)?;
    if let Some(best) = result.argmax() {
        eprintln!(
            "argmax t_delay_ms={} mean_stall_slots={:.2}",
            best.t_delay_ms, best.mean_stall_slots
        );
    }
    Ok(())
}

fn analyze_trace(trace: &Path, sender: u32, cdf_out: Option<&Path>) -> Result<()> {
    let trace = load_trace(trace).with_context(|| format!("loading trace {}", trace.display()))?;
    let stats = cdf_stats(&trace, sender)?;
    println!("sender: {sender}");
    println!("messages: {}", stats.per_message.len());
    println!("median_ms: {}", stats.median_ms);
    for q in [0.1, 0.9] {
        let t = stats
            .mean_cdf
            .iter()
            .find(|&&(_, f)| f >= q)
            .map_or(0, |&(t, _)| t);
        println!("p{:.0}_ms: {t}", q * 100.0);
    }
    if let Some(path) = cdf_out {
        let mut out = output(Some(path))?;
        writeln!(out, "t_ms,fraction")?;
        for (t, f) in &stats.mean_cdf {
            writeln!(out, "{t},{f:.6}")?;
        }
    }
    Ok(())
}

fn calc(formula: &Formula) -> Result<()> {
    match *formula {
        Formula::BudgetRefined { k, w_honest } => println!("{}", budget_refined(k, w_honest)?),
        Formula::BudgetTargeted { k } => println!("{}", budget_targeted(k)?),
        Formula::SelectionProbs {
            n_adv,
            n_total,
            slots_per_epoch,
            horizon_slots,
        } => {
            let p = selection_probs(n_adv, n_total, slots_per_epoch, horizon_slots)?;
            println!("p_proposer: {:.5}", p.p_proposer);
            println!("p_committee: {:.5}", p.p_committee);
            println!("p_joint: {:.5}", p.p_joint);
        }
        Formula::OpportuneWait { beta } => println!("{:.4}", opportune_wait(beta)?),
        Formula::ListeningTime { k, variant } => {
            let v = match variant {
                Variant::Targeted => ListeningVariant::Targeted,
                Variant::Probabilistic => ListeningVariant::Probabilistic,
            };
            println!("{}", listening_time_s(k, v)?);
        }
    }
    Ok(())
}

fn gen_trace(args: &GenTraceArgs) -> Result<()> {
    let senders: Vec<SyntheticSender> = args
        .median_ms
        .iter()
        .enumerate()
        .map(|(i, &median_ms)| SyntheticSender {
            sender: i as u32,
            median_ms,
            sigma: args.sigma,
        })
        .collect();
    let mut rng = SeededRandom::new(args.seed);
    let trace = synthetic_trace(&senders, args.nodes, args.messages, &mut rng)?;
    write_trace(&trace, output(Some(&args.out))?)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(args) => simulate(args),
        Command::Sweep(args) => sweep(args),
        Command::AnalyzeTrace {
            trace,
            sender,
            cdf_out,
        } => analyze_trace(trace, *sender, cdf_out.as_deref()),
        Command::Calc { formula } => calc(formula),
        Command::GenTrace(args) => gen_trace(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
