use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use eat_qkd::channel::{read_channel, PerturbationBudget};
use eat_qkd::config::RunConfig;
use eat_qkd::error::{Error, Result};
use eat_qkd::frank_wolfe::{trace_csv, FwOptions};
use eat_qkd::markov::{check_condition_b, decompose_blocks};
use eat_qkd::protocols::x_announcement_counterexample;
use eat_qkd::scan::{algorithm1_candidates, algorithm2_candidate, emit_csv, run_scan, to_csv};
use eat_qkd::tradeoff::{asymptotic_rate, crossover_to_full, Target};

#[derive(Parser)]
#[command(name = "eat-qkd", version, about = "Finite-size QKD key rates via entropy accumulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Increase log verbosity (-v info, -vv per-point trace).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    protocol: Option<String>,
    /// Comma-separated block sizes.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    alg: Option<String>,
    #[arg(long)]
    thm: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    xi_t: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    distance_km: Option<String>,
    #[arg(long)]
    p_z: Option<String>,
    /// Additional `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let pairs = [
            ("protocol", self.protocol.clone()),
            ("n", self.n.clone()),
            ("alg", self.alg.clone()),
            ("thm", self.thm.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("xi_t", self.xi_t.clone()),
            ("q", self.q.clone()),
            ("lambda", self.lambda.clone()),
            ("distance_km", self.distance_km.clone()),
            ("p_z", self.p_z.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                cfg.set(k, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("--set expects KEY=VALUE, got {kv}")))?;
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Key-rate curve over the configured block sizes.
    Scan(ConfigArgs),
    /// Test the announcement structure of a channel for weak dependence.
    MarkovCheck {
        /// Channel file; omit with --counterexample.
        channel: Option<PathBuf>,
        /// Check the built-in X-announcement / Z-key counterexample instead.
        #[arg(long)]
        counterexample: bool,
    },
    /// Print the min-tradeoff function built at the configured testing probability.
    Tradeoff(ConfigArgs),
    /// Lower bound on the asymptotic rate at the expected statistics.
    Asymptotic {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Write the Frank-Wolfe iteration trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

fn write_file(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| Error::Io { path: path.clone(), source })
}

fn scan(args: &ConfigArgs) -> Result<()> {
    let cfg = args.load()?;
    let table = run_scan(&cfg)?;
    match &cfg.out {
        Some(p) => emit_csv(&table, p),
        None => {
            print!("{}", to_csv(&table));
            Ok(())
        }
    }
}

fn markov(channel: Option<&PathBuf>, counterexample: bool) -> Result<()> {
    let povm = match (channel, counterexample) {
        (_, true) => x_announcement_counterexample(),
        (Some(p), false) => read_channel(p)?.elements(),
        (None, false) => return Err(Error::Parse("give a channel file or --counterexample".into())),
    };
    let report = check_condition_b(&povm)?;
    println!("{}", if report.pass { "PASS" } else { "FAIL" });
    println!("worst commutator norm {:.6e}", report.worst_commutator);
    if report.pass {
        let dec = decompose_blocks(&povm)?;
        println!("announcements {}", dec.announcements.join(" "));
        for (dim, c) in dec.dims().iter().zip(&dec.constants) {
            let cs: Vec<String> = c.iter().map(|v| format!("{v:.6}")).collect();
            println!("block dim {dim} constants {}", cs.join(" "));
        }
    }
    Ok(())
}

fn tradeoff(args: &ConfigArgs) -> Result<()> {
    let cfg = args.load()?;
    cfg.validate()?;
    let spec = cfg.protocol()?.build(cfg.p_z.unwrap_or(0.9))?;
    let g = match cfg.algorithm {
        eat_qkd::config::Algorithm::One => {
            let q0 = spec.q_bar.clone();
            let budget = PerturbationBudget::default_for(&spec.channel);
            let opts = eat_qkd::tradeoff::BuildOptions {
                target: Target::Crossover,
                fw: FwOptions { tol: cfg.fw_tol, max_iter: cfg.fw_max_iter },
            };
            match eat_qkd::tradeoff::algorithm1(&q0, &spec.channel, &budget, &opts) {
                Ok(r) => r.function,
                // Expected statistics can sit on the boundary; fall back to the grid.
                Err(_) => algorithm1_candidates(&cfg, &spec)?
                    .into_iter()
                    .next()
                    .ok_or_else(|| Error::Numerical("no first-order function".into()))?,
            }
        }
        eat_qkd::config::Algorithm::Two => algorithm2_candidate(&cfg, &spec, cfg.ns[0])?,
    };
    let full = crossover_to_full(&g, spec.gamma)?;
    let text = format!("{}{}", g.to_text(), full.to_text());
    match &cfg.out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn asymptotic(args: &ConfigArgs, trace: Option<&PathBuf>) -> Result<()> {
    let cfg = args.load()?;
    cfg.validate()?;
    let spec = cfg.protocol()?.build(cfg.p_z.unwrap_or(0.9))?;
    let budget = PerturbationBudget::default_for(&spec.channel);
    let fw = FwOptions { tol: cfg.fw_tol, max_iter: cfg.fw_max_iter };
    let r = asymptotic_rate(&spec.q_bar, &spec.channel, &budget, Target::Crossover, &fw)?;
    println!("p_z {:.16e}", spec.p_z);
    println!("lower_bound {:.16e}", r.lower_bound);
    println!("value {:.16e}", r.value);
    println!("gap {:.16e}", r.gap);
    println!("eta_epsilon {:.16e}", r.eta_epsilon);
    println!("iterations {}", r.iterations);
    println!("key_rate {:.16e}", r.lower_bound - cfg.f_ec * spec.h_cond);
    if let Some(p) = trace {
        write_file(p, &trace_csv(&r.trace))?;
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Parameter(_) | Error::Io { .. } | Error::Dimension(_) => 2,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();
    let res = match &cli.command {
        Command::Scan(a) => scan(a),
        Command::MarkovCheck { channel, counterexample } => markov(channel.as_ref(), *counterexample),
        Command::Tradeoff(a) => tradeoff(a),
        Command::Asymptotic { cfg, trace } => asymptotic(cfg, trace.as_ref()),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
