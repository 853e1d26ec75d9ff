use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use permlab::config::ExperimentConfig;
use permlab::plot::emit_gnuplot;
use permlab::sweep::{cmd_run, Summary};
use permlab::CliError;
use permlab_core::analysis::lemmas::{defaults, LemmaReport, LemmaStatus};
use permlab_core::instances::{GeneratorSpec, IgdHardVariant, Instance};
use permlab_core::problems::{FiniteSum, StepContext, StepSizeRule};
use permlab_core::schedulers::{BaseOrder, StrategySpec};
use permlab_core::search::{
    exhaustive_sequence_search, greedy_sequence_run, Objective, SequenceSearchBudget,
};
use permlab_core::Vector;
use serde_json::json;

#[derive(Parser)]
#[command(name = "permlab", version, about = "Permutation-based SGD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "PERMLAB_OUT", default_value = "permlab-out")]
        out: PathBuf,
    },
    /// Run a sweep configured by flags.
    Sweep(SweepArgs),
    /// Greedy or exhaustive permutation-sequence search.
    Search(SearchArgs),
    /// Numerical check of one of the supporting inequalities.
    Verify(VerifyArgs),
    /// Print a gnuplot script for a sweep summary.
    Plot {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long, default_value = "summary.dat")]
        data: String,
    },
}

#[derive(Args)]
struct InstanceArgs {
    /// Named generator.
    #[arg(long, value_enum, conflicts_with = "instance_json")]
    instance: Option<Kind>,
    /// JSON instance file (any kind, including inline quadratics).
    #[arg(long)]
    instance_json: Option<PathBuf>,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long = "L", default_value_t = 1.0)]
    l: f64,
    /// Seed of randomized generators.
    #[arg(long, default_value_t = 0)]
    instance_seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    MeanComputation,
    LbF1,
    LbF2,
    LbF3,
    LbCombined,
    NonconvexPair,
    Logistic1d,
    IgdHard,
}

impl InstanceArgs {
    fn spec(&self) -> Result<GeneratorSpec, CliError> {
        if let Some(path) = &self.instance_json {
            let text = std::fs::read_to_string(path)?;
            return Ok(GeneratorSpec::from_json(&text)?);
        }
        let (n, l) = (self.n, self.l);
        Ok(match self.instance {
            None => return Err(CliError::Usage("need --instance or --instance-json".into())),
            Some(Kind::MeanComputation) => GeneratorSpec::MeanComputation {
                n,
                d: self.d,
                seed: self.instance_seed,
            },
            Some(Kind::LbF1) => GeneratorSpec::LbF1 { n, l },
            Some(Kind::LbF2) => GeneratorSpec::LbF2 { n, l },
            Some(Kind::LbF3) => GeneratorSpec::LbF3 { n, l },
            Some(Kind::LbCombined) => GeneratorSpec::LbCombined { n, l },
            Some(Kind::NonconvexPair) => GeneratorSpec::NonconvexPair { l },
            Some(Kind::Logistic1d) => GeneratorSpec::Logistic1d {
                n,
                seed: self.instance_seed,
            },
            Some(Kind::IgdHard) => GeneratorSpec::IgdHard {
                n,
                l,
                g: 1.0,
                variant: IgdHardVariant::TwoBlock,
            },
        })
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    /// Base strategy; repeat for several.
    #[arg(long, value_parser = ["igd", "ss", "rr"])]
    algo: Vec<String>,
    /// Wrap every `--algo` in FlipFlop.
    #[arg(long)]
    flipflop: bool,
    /// Full labels such as `rr,ff-rr`, in addition to `--algo`.
    #[arg(long, value_delimiter = ',')]
    algos: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
    k_grid: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    /// Master seed for permutations.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Constant step size; overrides `--scale`.
    #[arg(long)]
    alpha: Option<f64>,
    /// Constant `c` of the rule `c log(nK)/(μnK)`.
    #[arg(long, default_value_t = 10.0)]
    scale: f64,
    #[arg(long, env = "PERMLAB_OUT", default_value = "permlab-out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Greedy,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Min,
    Max,
}

#[derive(Args)]
struct SearchArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, value_enum, default_value = "greedy")]
    mode: Mode,
    #[arg(long, value_enum, default_value = "min")]
    objective: ObjectiveArg,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    /// Step size; greedy mode defaults to the exponential-regime rule.
    #[arg(long)]
    alpha: Option<f64>,
    /// Initialization (comma-separated); the origin when absent.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Vec<f64>,
    #[arg(long, default_value_t = 1u128 << 24)]
    max_sequences: u128,
}

#[derive(Clone, Copy, ValueEnum)]
enum LemmaArg {
    Amgm,
    Coupling,
    Prefix,
    Zmoment,
    Bounded,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum)]
    lemma: LemmaArg,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Step size override (amgm only).
    #[arg(long)]
    alpha: Option<f64>,
}

fn print_json(v: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(v).map_err(|e| CliError::Usage(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn sweep(args: SweepArgs) -> Result<ExitCode, CliError> {
    let mut algos: Vec<String> = args
        .algo
        .iter()
        .map(|a| -> Result<String, CliError> {
            Ok(StrategySpec::new(BaseOrder::parse(a)?, args.flipflop).label())
        })
        .collect::<Result<_, _>>()?;
    algos.extend(args.algos.iter().cloned());
    let step_rule = match args.alpha {
        Some(alpha) => StepSizeRule::Explicit { alpha },
        None => StepSizeRule::LogRegime { scale: args.scale },
    };
    let cfg = ExperimentConfig {
        instance: args.instance.spec()?,
        algos,
        k_grid: args.k_grid,
        repeats: args.repeats,
        seed: args.seed,
        step_rule,
        x0: None,
        burn_in: permlab_core::analysis::fit::DEFAULT_BURN_IN,
    };
    let out = cmd_run(&cfg, &args.out)?;
    print_json(&out.summary)?;
    Ok(ExitCode::SUCCESS)
}

fn search(args: SearchArgs) -> Result<ExitCode, CliError> {
    let instance = args.instance.spec()?.build()?;
    let d = instance.dim();
    let x0 = if args.x0.is_empty() {
        Vector::zeros(d)
    } else if args.x0.len() == d {
        Vector::from_column_slice(&args.x0)
    } else {
        return Err(CliError::Usage(format!("--x0: expected {d} values")));
    };
    let x_star = instance.minimizer()?;
    let objective = match args.objective {
        ObjectiveArg::Min => Objective::MinFinalError,
        ObjectiveArg::Max => Objective::MaxFinalError,
    };
    let (alpha, result) = match args.mode {
        Mode::Greedy => {
            let alpha = match args.alpha {
                Some(a) => a,
                None => {
                    let stats = instance.stats(&x0)?;
                    let ctx = StepContext::from_stats(
                        instance.num_components(),
                        args.epochs,
                        &stats,
                        instance.l_hessian(),
                    );
                    StepSizeRule::OneDimExponential.resolve(&ctx)?
                }
            };
            (
                alpha,
                greedy_sequence_run(&instance, &x0, &x_star, alpha, args.epochs)?,
            )
        }
        Mode::Exhaustive => {
            let q = match &instance {
                Instance::Quadratic(q) => q,
                _ => {
                    return Err(CliError::Usage(
                        "exhaustive search needs a quadratic instance".into(),
                    ))
                }
            };
            let alpha = args
                .alpha
                .ok_or_else(|| CliError::Usage("exhaustive search needs --alpha".into()))?;
            let budget = SequenceSearchBudget {
                max_sequences: args.max_sequences,
                objective,
                max_epochs: args.epochs.max(1),
                ..Default::default()
            };
            (
                alpha,
                exhaustive_sequence_search(q, &x0, &x_star, alpha, args.epochs, &budget)?,
            )
        }
    };
    print_json(&json!({
        "mode": match args.mode { Mode::Greedy => "greedy", Mode::Exhaustive => "exhaustive" },
        "alpha": alpha,
        "epochs": args.epochs,
        "result": result,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let report: LemmaReport = match args.lemma {
        LemmaArg::Amgm => {
            let trials = args.trials.unwrap_or(1000);
            match args.alpha {
                Some(alpha) => permlab_core::analysis::lemmas::verify_amgm_matrix(
                    trials, 4, 3, 1.0, 10.0, alpha, args.seed,
                )?,
                None => defaults::amgm(trials, args.seed)?,
            }
        }
        LemmaArg::Coupling => defaults::coupling(args.trials.unwrap_or(500), args.seed)?,
        LemmaArg::Prefix => defaults::prefix_sums(args.trials.unwrap_or(100_000), args.seed)?,
        LemmaArg::Zmoment => defaults::z_moment(args.trials.unwrap_or(10_000), args.seed)?,
        LemmaArg::Bounded => defaults::bounded_iterates(args.trials.unwrap_or(100), args.seed)?,
    };
    print_json(&report)?;
    Ok(if report.status == LemmaStatus::Violated {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn dispatch(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        Command::Run { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let output = cmd_run(&cfg, &out)?;
            print_json(&output.summary)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep(args) => sweep(args),
        Command::Search(args) => search(args),
        Command::Verify(args) => verify(args),
        Command::Plot { summary, data } => {
            let text = std::fs::read_to_string(&summary)?;
            let parsed: Summary = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("summary: {e}")))?;
            print!("{}", emit_gnuplot(&parsed, &data));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Core(permlab_core::Error::BudgetExceeded { estimated, allowed }) = &e {
                eprintln!(
                    "{}",
                    json!({"refused": true, "estimated": estimated.to_string(), "allowed": allowed.to_string()})
                );
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
