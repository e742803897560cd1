use std::path::PathBuf;

use clap::{Args, ValueEnum};
use nlsearch::nldyn::{default_alpha, default_dt, hold_time, NonlinearParams, ANALYTIC_MAX_INPUTS};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Algo {
    Pairwise,
    Local,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleMode {
    None,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Flags shared by `run` and `trace`.
#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Number of input qubits.
    #[arg(long)]
    pub n: usize,
    /// Marked inputs: comma-separated integers or n-character binary strings
    /// (`6`, `110` and `0b110` all name the same input). Empty or `none`
    /// means no marked input.
    #[arg(long, conflicts_with = "s")]
    pub marked: Option<String>,
    /// Marked count for the analytic path (local algorithm only).
    #[arg(long)]
    pub s: Option<u64>,
    #[arg(long, value_enum)]
    pub algo: Option<Algo>,
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.01)]
    pub eta: f64,
    /// Gain; `auto` picks max(2^n, 10·2^(n-1)/eta).
    #[arg(long, default_value = "auto")]
    pub alpha: String,
    /// Defaults to max(2π/eps, π/ω(n, 1)).
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    /// Defaults to 1e-3 · 2π/eps.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_enum, default_value = "none")]
    pub oracle: OracleMode,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Marked(Vec<u64>),
    Count(u64),
}

impl Target {
    pub fn s(&self) -> u64 {
        match self {
            Target::Marked(m) => m.len() as u64,
            Target::Count(s) => *s,
        }
    }
}

/// A validated run request.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub target: Target,
    pub algorithm: Algo,
    pub epsilon: f64,
    pub eta: f64,
    pub alpha: f64,
    pub alpha_auto: bool,
    pub t_max: f64,
    pub dt: f64,
    pub oracle: OracleMode,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    pub format: Format,
}

impl RunConfig {
    pub fn params(&self) -> NonlinearParams {
        NonlinearParams {
            epsilon: self.epsilon,
            alpha: self.alpha,
            eta: self.eta,
        }
    }

    pub fn from_args(
        args: &RunArgs,
        default_algo: Algo,
        default_format: Format,
    ) -> Result<Self, CliError> {
        let usage = |m: String| CliError::Usage(m);
        let n = args.n;
        if n == 0 || n > ANALYTIC_MAX_INPUTS {
            return Err(usage(format!("--n must be in 1..={ANALYTIC_MAX_INPUTS}")));
        }
        let target = match (&args.marked, args.s) {
            (Some(text), None) => Target::Marked(parse_marked(text, n).map_err(usage)?),
            (None, Some(s)) => Target::Count(s),
            (None, None) => return Err(usage("one of --marked or --s is required".into())),
            (Some(_), Some(_)) => {
                return Err(usage("--marked and --s are mutually exclusive".into()))
            }
        };
        let algorithm = args.algo.unwrap_or(match target {
            Target::Count(_) => Algo::Local,
            Target::Marked(_) => default_algo,
        });
        if matches!(target, Target::Count(_)) && algorithm != Algo::Local {
            return Err(usage(
                "--s (analytic path) is only valid with --algo local".into(),
            ));
        }
        if n < 64 && target.s() > 1u64 << n {
            return Err(usage(format!("--s {} exceeds 2^{n}", target.s())));
        }

        let (alpha, alpha_auto) = match args.alpha.as_str() {
            "auto" => (default_alpha(n, args.eta), true),
            text => (
                text.parse::<f64>()
                    .map_err(|e| usage(format!("--alpha `{text}`: {e}")))?,
                false,
            ),
        };
        let params =
            NonlinearParams::new(args.eps, alpha, args.eta).map_err(|e| usage(e.to_string()))?;
        let t_max = match args.t_max {
            Some(t) => t,
            None => {
                let period = 2.0 * hold_time(n, 1, &params).map_err(|e| usage(e.to_string()))?;
                (std::f64::consts::TAU / params.epsilon).max(period)
            }
        };
        let dt = args.dt.unwrap_or_else(|| default_dt(params.epsilon));
        if !(dt > 0.0 && t_max >= dt && t_max.is_finite()) {
            return Err(usage(format!(
                "need 0 < dt <= t-max, got dt = {dt}, t-max = {t_max}"
            )));
        }

        Ok(RunConfig {
            n,
            target,
            algorithm,
            epsilon: params.epsilon,
            eta: params.eta,
            alpha,
            alpha_auto,
            t_max,
            dt,
            oracle: args.oracle,
            out: args.out.clone(),
            format: args.format.unwrap_or(default_format),
        })
    }
}

/// Parses `--marked`. A token of exactly `n` binary digits is read as a bit
/// string `i₁…iₙ`; `0b`-prefixed tokens are binary; anything else is decimal.
pub fn parse_marked(text: &str, n: usize) -> Result<Vec<u64>, String> {
    let trimmed = text.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("none") {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for token in trimmed.split(',').map(str::trim) {
        let value = if let Some(bits) = token.strip_prefix("0b") {
            u64::from_str_radix(bits, 2)
        } else if token.len() == n && token.bytes().all(|b| b == b'0' || b == b'1') {
            u64::from_str_radix(token, 2)
        } else {
            token.parse::<u64>()
        }
        .map_err(|e| format!("--marked token `{token}`: {e}"))?;
        if n < 64 && value >> n != 0 {
            return Err(format!("--marked value {value} does not fit in {n} bits"));
        }
        if out.contains(&value) {
            return Err(format!("--marked value {value} listed twice"));
        }
        out.push(value);
    }
    Ok(out)
}
