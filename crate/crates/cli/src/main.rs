use std::path::PathBuf;
use std::process::ExitCode;

use acqkd_core::harness::{
    emit_csv, emit_qkd_detail, parse_config_with, run_scenario_full, write_csv, RunConfig,
    Scenario, SetError,
};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

/// Exact desk-scale checks of composable QKD security claims.
#[derive(Parser, Debug)]
#[command(name = "sim", version)]
struct Cli {
    /// Global seed (required unless the config file sets one).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// CSV output path; stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, `key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Record per-scenario wall-clock time in the runtime_ms column.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Randomised audit of the metric identities and inequalities.
    Metrics {
        #[arg(long)]
        trials: Option<usize>,
    },
    /// One-time pad, exhaustive over keys and messages.
    Otp {
        #[arg(long)]
        max_len: Option<usize>,
    },
    /// BB84 security sandwich or robustness.
    Qkd {
        /// Attack family, e.g. `standard:17` or `identity,intercept-resend:0.5`.
        #[arg(long)]
        attack: Option<String>,
        #[arg(long, default_value = "qkd", value_parser = ["qkd", "robustness"])]
        scenario: String,
        #[arg(long)]
        q_tol: Option<f64>,
        /// Also write per-attack figures to this CSV.
        #[arg(long)]
        detail: Option<PathBuf>,
    },
    /// Authentication: ASU2 check, substitution attacks, parallel copies.
    Auth {
        /// Hash block sizes, comma-separated.
        #[arg(long)]
        b: Option<String>,
    },
    /// Composition scenarios.
    Compose {
        #[arg(long, default_value = "compose",
              value_parser = ["compose", "leaked-key", "qkd-otp", "parallel-qkd", "key-expansion"])]
        scenario: String,
    },
    /// Information locking demonstration.
    Lockdemo {
        #[arg(long)]
        m: Option<String>,
    },
    /// Runs the scenario named in the config file.
    Run,
}

fn load(cli: &Cli, default: Scenario) -> Result<RunConfig> {
    let text = match &cli.config {
        Some(p) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        None => String::new(),
    };
    let mut cfg = parse_config_with(&text, cli.seed, default)?;
    let mut set = |k: &str, v: &str| -> Result<()> {
        cfg.set(k, v).map_err(|e| match e {
            SetError::UnknownKey => anyhow::anyhow!("unknown key '{k}'"),
            SetError::BadValue(r) => anyhow::anyhow!("bad value for '{k}': {r}"),
        })
    };
    match &cli.command {
        Command::Metrics { trials } => {
            set("scenario", "metrics-suite")?;
            if let Some(t) = trials {
                set("trials", &t.to_string())?;
            }
        }
        Command::Otp { max_len } => {
            set("scenario", "otp")?;
            if let Some(l) = max_len {
                set("otp_max_len", &l.to_string())?;
            }
        }
        Command::Qkd {
            attack,
            scenario,
            q_tol,
            ..
        } => {
            set("scenario", scenario)?;
            if let Some(a) = attack {
                set("attack", a)?;
            }
            if let Some(q) = q_tol {
                set("q_tol", &q.to_string())?;
            }
        }
        Command::Auth { b } => {
            set("scenario", "auth")?;
            if let Some(b) = b {
                set("hash_bits", b)?;
            }
        }
        Command::Compose { scenario } => set("scenario", scenario)?,
        Command::Lockdemo { m } => {
            set("scenario", "lockdemo")?;
            if let Some(m) = m {
                set("m", m)?;
            }
        }
        Command::Run => {}
    }
    for kv in &cli.sets {
        let Some((k, v)) = kv.split_once('=') else {
            bail!("--set expects KEY=VALUE, got '{kv}'");
        };
        set(k.trim(), v)?;
    }
    if cli.timings {
        cfg.timings = true;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<bool> {
    if matches!(cli.command, Command::Run) && cli.config.is_none() {
        bail!("`run` needs --config");
    }
    let cfg = load(cli, Scenario::Qkd)?;
    let out = run_scenario_full(&cfg)?;
    match &cfg.out {
        Some(p) => emit_csv(&out.rows, p).with_context(|| format!("writing {}", p.display()))?,
        None => write_csv(&out.rows, std::io::stdout().lock())?,
    }
    if let Command::Qkd {
        detail: Some(p), ..
    } = &cli.command
    {
        emit_qkd_detail(cfg.n_qubits.unwrap_or(4), &out.qkd, p)
            .with_context(|| format!("writing {}", p.display()))?;
    }
    let failed: Vec<_> = out.rows.iter().filter(|r| !r.holds).collect();
    for r in &failed {
        eprintln!(
            "violated: {} {} measured {} > bound {}",
            r.scenario, r.case, r.measured, r.bound
        );
    }
    eprintln!(
        "{}: {} rows, {} violated",
        cfg.scenario,
        out.rows.len(),
        failed.len()
    );
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
