use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::tolerance;

/// Named scenarios; each maps to one group of report rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scenario {
    MetricsSuite,
    Otp,
    Qkd,
    Robustness,
    Auth,
    LeakedKey,
    QkdOtp,
    ParallelQkd,
    KeyExpansion,
    Compose,
    LockDemo,
}

impl Scenario {
    pub const ALL: [Scenario; 11] = [
        Scenario::MetricsSuite,
        Scenario::Otp,
        Scenario::Qkd,
        Scenario::Robustness,
        Scenario::Auth,
        Scenario::LeakedKey,
        Scenario::QkdOtp,
        Scenario::ParallelQkd,
        Scenario::KeyExpansion,
        Scenario::Compose,
        Scenario::LockDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::MetricsSuite => "metrics-suite",
            Scenario::Otp => "otp",
            Scenario::Qkd => "qkd",
            Scenario::Robustness => "robustness",
            Scenario::Auth => "auth",
            Scenario::LeakedKey => "leaked-key",
            Scenario::QkdOtp => "qkd-otp",
            Scenario::ParallelQkd => "parallel-qkd",
            Scenario::KeyExpansion => "key-expansion",
            Scenario::Compose => "compose",
            Scenario::LockDemo => "lockdemo",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scenario::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown scenario '{s}'"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SetError {
    #[error("unknown key")]
    UnknownKey,
    #[error("{0}")]
    BadValue(String),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for '{key}': {reason}")]
    BadValue {
        line: usize,
        key: String,
        reason: String,
    },
    #[error("no seed given")]
    MissingSeed,
}

/// Scenario selection plus every tunable parameter. Protocol parameters left
/// unset fall back to per-scenario defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub seed: u64,
    pub n_qubits: Option<usize>,
    pub t: Option<usize>,
    pub q_tol: Option<f64>,
    pub h_rows: Option<usize>,
    pub out_len: Option<usize>,
    pub pa_seed: Option<u64>,
    /// Comma-separated strategies: identity, intercept-resend:p, depolarize:q,
    /// noise:q, standard:points, intercept-resend-grid:points.
    pub attack: Option<String>,
    /// Crossing strategies for parallel QKD: none, swap-all, or `i-j` pairs joined by '+'.
    pub crossing: Option<String>,
    pub noise: Vec<f64>,
    pub hash_bits: Vec<u32>,
    pub copies: usize,
    pub split: Option<usize>,
    pub msg: Option<String>,
    pub rounds: Vec<usize>,
    pub m: Vec<usize>,
    pub trials: usize,
    pub otp_max_len: usize,
    pub out: Option<PathBuf>,
    /// Slack allowed on `measured ≤ bound` for bound rows; a negative value
    /// demands that margin instead.
    pub tolerance: f64,
    /// Record wall-clock time per row (breaks byte-identical reruns).
    pub timings: bool,
}

impl RunConfig {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        Self {
            scenario,
            seed,
            n_qubits: None,
            t: None,
            q_tol: None,
            h_rows: None,
            out_len: None,
            pa_seed: None,
            attack: None,
            crossing: None,
            noise: vec![0.0, 0.1, 0.3],
            hash_bits: vec![3, 4],
            copies: 3,
            split: None,
            msg: None,
            rounds: vec![0, 1, 2],
            m: vec![1, 2, 3],
            trials: 200,
            otp_max_len: 8,
            out: None,
            tolerance: tolerance::BOUND,
            timings: false,
        }
    }

    /// Sets one key; the error carries no line number (callers add it).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), SetError> {
        self.set_inner(key, value).map_err(|e| {
            if e == UNKNOWN {
                SetError::UnknownKey
            } else {
                SetError::BadValue(e)
            }
        })
    }

    fn set_inner(&mut self, key: &str, value: &str) -> Result<(), String> {
        let v = value.trim();
        match key {
            "scenario" => self.scenario = v.parse()?,
            "seed" => self.seed = parse_u64(v)?,
            "n_qubits" => self.n_qubits = Some(parse(v)?),
            "t" => self.t = Some(parse(v)?),
            "q_tol" => {
                let q: f64 = parse(v)?;
                if !(0.0..=1.0).contains(&q) {
                    return Err(format!("{q} outside [0, 1]"));
                }
                self.q_tol = Some(q);
            }
            "h_rows" => self.h_rows = Some(parse(v)?),
            "out_len" => self.out_len = Some(parse(v)?),
            "pa_seed" => self.pa_seed = Some(parse_u64(v)?),
            "attack" => self.attack = Some(v.to_string()),
            "crossing" => self.crossing = Some(v.to_string()),
            "noise" => {
                let qs: Vec<f64> = parse_list(v)?;
                if let Some(q) = qs.iter().find(|q| !(0.0..=1.0).contains(*q)) {
                    return Err(format!("{q} outside [0, 1]"));
                }
                self.noise = qs;
            }
            "b" | "hash_bits" => {
                let bs: Vec<u32> = parse_list(v)?;
                if let Some(b) = bs.iter().find(|b| !(1..=8).contains(*b)) {
                    return Err(format!("{b} outside 1..=8"));
                }
                self.hash_bits = bs;
            }
            "copies" => self.copies = parse(v)?,
            "split" => self.split = Some(parse(v)?),
            "msg" => self.msg = Some(v.to_string()),
            "rounds" => self.rounds = parse_list(v)?,
            "m" => self.m = parse_list(v)?,
            "trials" => self.trials = parse(v)?,
            "otp_max_len" => self.otp_max_len = parse(v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "tolerance" => {
                let t: f64 = parse(v)?;
                if !t.is_finite() {
                    return Err(format!("{t} is not finite"));
                }
                self.tolerance = t;
            }
            "timings" => self.timings = parse(v)?,
            _ => return Err(UNKNOWN.into()),
        }
        Ok(())
    }
}

const UNKNOWN: &str = "\0unknown";

fn parse<T: FromStr>(v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("'{v}': {e}"))
}

fn parse_u64(v: &str) -> Result<u64, String> {
    match v.strip_prefix("0x") {
        Some(hex) => {
            u64::from_str_radix(&hex.replace('_', ""), 16).map_err(|e| format!("'{v}': {e}"))
        }
        None => parse(&v.replace('_', "")),
    }
}

fn parse_list<T: FromStr>(v: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    v.split(',').map(|x| parse(x.trim())).collect()
}

/// Parses `key = value` lines; `#` starts a comment. A seed is mandatory and
/// each key may appear once.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(text, None, Scenario::Qkd)
}

/// As [`parse_config`], with a seed supplied from elsewhere (the command line)
/// that takes precedence, and the scenario used when the text names none.
pub fn parse_config_with(
    text: &str,
    seed: Option<u64>,
    scenario: Scenario,
) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::new(scenario, 0);
    let mut seen = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::BadValue {
                line,
                key: content.to_string(),
                reason: "expected 'key = value'".into(),
            });
        };
        let key = key.trim();
        if !seen.insert(key.to_string()) {
            return Err(ConfigError::BadValue {
                line,
                key: key.to_string(),
                reason: "duplicate key".into(),
            });
        }
        cfg.set(key, value).map_err(|e| match e {
            SetError::UnknownKey => ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            },
            SetError::BadValue(reason) => ConfigError::BadValue {
                line,
                key: key.to_string(),
                reason,
            },
        })?;
    }
    match seed {
        Some(s) => cfg.seed = s,
        None if !seen.contains("seed") => return Err(ConfigError::MissingSeed),
        None => {}
    }
    Ok(cfg)
}
