use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwaccel::accel_eval::{Method, Severity};
use pwaccel_cli::commands;
use pwaccel_cli::config::{Mode, RunConfig};
use pwaccel_cli::CliError;
use serde::de::DeserializeOwned;

/// Piecewise-mixture fitting and accelerated evaluation of cut-in encounters.
#[derive(Parser)]
#[command(name = "pwaccel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw synthetic events from a preset model.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
    /// Fit piecewise and single-baseline models to an event CSV.
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Tune accelerated distributions by cross-entropy.
    Tune {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Estimate the event probability by crude Monte Carlo or importance sampling.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        rule: Rule,
        /// crude or is
        #[arg(long, value_parser = parse_enum::<Mode>)]
        mode: Option<Mode>,
        #[arg(long)]
        accelerated: Option<PathBuf>,
        #[arg(long)]
        tune: bool,
        #[arg(long)]
        identity: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Compare piecewise IS, single IS and crude Monte Carlo over repeats.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        rule: Rule,
        /// Comma-separated subset of piecewise-is, single-is, crude
        #[arg(long, value_delimiter = ',', value_parser = parse_enum::<Method>)]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        repeats: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores). Results do not depend on it.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Args)]
struct Target {
    /// Scenario model JSON.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Built-in preset name.
    #[arg(long)]
    preset: Option<String>,
    /// Problem JSON (scenario, tail or bernoulli).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// required_decel or min_range
    #[arg(long, value_parser = parse_enum::<Severity>)]
    severity: Option<Severity>,
}

#[derive(Args)]
struct Rule {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    cadence: Option<u64>,
    #[arg(long)]
    min_samples: Option<u64>,
    #[arg(long)]
    max_samples: Option<u64>,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('_', "-")))
        .or_else(|_| serde_json::from_value(serde_json::Value::String(s.replace('-', "_"))))
        .map_err(|_| format!("unknown value {s:?}"))
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        set_opt(&mut cfg.seed, self.seed);
        set_opt(&mut cfg.workers, self.workers);
        Ok(cfg)
    }
}

impl Target {
    fn apply(self, cfg: &mut RunConfig) {
        if self.model.is_some() || self.preset.is_some() || self.problem.is_some() {
            cfg.target.model = self.model;
            cfg.target.preset = self.preset;
            cfg.target.problem = self.problem;
        }
        set(&mut cfg.severity, self.severity);
    }
}

impl Rule {
    fn apply(self, cfg: &mut RunConfig) {
        set(&mut cfg.rule.alpha, self.alpha);
        set(&mut cfg.rule.beta, self.beta);
        set(&mut cfg.rule.cadence, self.cadence);
        set(&mut cfg.rule.min_samples, self.min_samples);
        set(&mut cfg.rule.max_samples, self.max_samples);
    }
}

fn init_workers(cfg: &RunConfig) -> Result<(), CliError> {
    if let Some(n) = cfg.workers {
        if n == 0 {
            return Err(CliError::Input("--workers must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { common, preset, n, out, model_out } => {
            let mut cfg = common.load()?;
            set(&mut cfg.generate.preset, preset);
            set(&mut cfg.generate.n, n);
            set_opt(&mut cfg.generate.out, out);
            set_opt(&mut cfg.generate.model_out, model_out);
            if cfg.generate.n == 0 {
                eprintln!("warning: n = 0, writing a header-only CSV");
            }
            let s = commands::generate(&cfg)?;
            println!("wrote {} events to {} and the model to {}", s.events, s.csv.display(), s.model.display());
        }
        Command::Fit { common, input, out_dir } => {
            let mut cfg = common.load()?;
            set_opt(&mut cfg.fit.input, input);
            set_opt(&mut cfg.fit.out_dir, out_dir);
            let s = commands::fit(&cfg)?;
            println!("fitted {} events in {} speed segments", s.events, s.segments.len());
        }
        Command::Tune { common, target, out } => {
            let mut cfg = common.load()?;
            target.apply(&mut cfg);
            set_opt(&mut cfg.tune.out, out);
            init_workers(&cfg)?;
            let r = commands::tune(&cfg)?;
            println!("cross-entropy: {} iterations, levels {:?}", r.iterations, r.levels);
            if !r.reached {
                return Err(CliError::NotConverged("elite threshold did not reach the event".into()));
            }
        }
        Command::Evaluate { common, target, rule, mode, accelerated, tune, identity, out, trace } => {
            let mut cfg = common.load()?;
            target.apply(&mut cfg);
            rule.apply(&mut cfg);
            set(&mut cfg.evaluate.mode, mode);
            set_opt(&mut cfg.evaluate.accelerated, accelerated);
            cfg.evaluate.tune |= tune;
            cfg.evaluate.identity |= identity;
            set_opt(&mut cfg.evaluate.out, out);
            set_opt(&mut cfg.evaluate.trace, trace);
            init_workers(&cfg)?;
            let o = commands::evaluate(&cfg)?;
            let r = &o.result;
            println!(
                "P = {:.6e} (se {:.3e}, relative half-width {:.4}) after {} samples",
                r.estimate, r.std_error, r.rel_half_width, r.samples
            );
            if !r.converged {
                return Err(CliError::NotConverged(format!("stopped at {} samples without converging", r.samples)));
            }
        }
        Command::Compare { common, target, rule, methods, repeats, out, trace } => {
            let mut cfg = common.load()?;
            target.apply(&mut cfg);
            rule.apply(&mut cfg);
            set(&mut cfg.compare.methods, methods);
            set(&mut cfg.compare.repeats, repeats);
            set_opt(&mut cfg.compare.out, out);
            set_opt(&mut cfg.compare.trace, trace);
            init_workers(&cfg)?;
            let t = commands::compare(&cfg)?;
            print!("{}", commands::format_table(&t));
            if t.rows.iter().any(|r| r.error.is_some() || r.converged_runs < r.runs.len()) {
                return Err(CliError::NotConverged("some methods failed or did not converge".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
