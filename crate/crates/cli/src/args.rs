use std::path::PathBuf;

use clap::{Parser, ValueEnum};

pub const DEFAULT_DELTAS: &str = "1e-2,1e-3,1e-4,1e-5,1e-6,1e-7";

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Condition numbers of one problem at one point.
    Analyze,
    /// Run the bound and identity checks.
    Verify,
    /// Finite-delta estimates against the linearized ones.
    Sweep,
    /// Tabulate closed-form moments and bounds per dimension.
    Moments,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Worst-case and stochastic condition numbers, and checks of the bounds
/// relating them.
///
/// Ranges are `a..b` (inclusive), a single value, or a comma list.
#[derive(Debug, Parser)]
#[command(name = "condana", version)]
pub struct Cli {
    #[arg(long, value_enum)]
    pub command: Command,

    /// Corpus problem name, or a path to a matrix file (`n m` header, then rows).
    #[arg(long, default_value = "identity")]
    pub problem: String,

    /// Comma-separated coordinates, or `random`.
    #[arg(long, allow_hyphen_values = true, default_value = "random")]
    pub point: String,

    /// Input dimension for dimension-free problems (inferred from --point otherwise).
    #[arg(long)]
    pub dim: Option<usize>,

    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,

    /// Master seed; the CONDANA_SEED environment variable takes precedence.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,

    /// Strictly decreasing perturbation sizes for `sweep`.
    #[arg(long, allow_hyphen_values = true, default_value = DEFAULT_DELTAS)]
    pub deltas: String,

    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,

    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Input dimensions (`verify`, `moments`).
    #[arg(long)]
    pub m_range: Option<String>,

    /// Output dimensions (`verify` theorem1, `moments` bound columns).
    #[arg(long)]
    pub n_range: Option<String>,

    /// Random instances per dimension (`verify`).
    #[arg(long)]
    pub trials: Option<usize>,

    /// Comma-separated check groups for `verify` (default: all).
    #[arg(long)]
    pub checks: Option<String>,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Parses `a..b`, `a..=b`, `a` or `a,b,c`.
pub fn parse_range(s: &str) -> Result<Vec<usize>, String> {
    let s = s.trim();
    let num = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("bad range value `{t}`: {e}"))
    };
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b.strip_prefix('=').unwrap_or(b))?);
        if a > b {
            return Err(format!("empty range `{s}`"));
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(num).collect()
}

pub fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| {
            let v = t
                .trim()
                .parse::<f64>()
                .map_err(|e| format!("bad {what} value `{t}`: {e}"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("non-finite {what} value `{t}`"))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("1..3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_range("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_range("7").unwrap(), vec![7]);
        assert_eq!(parse_range("1, 5,9").unwrap(), vec![1, 5, 9]);
        assert!(parse_range("4..2").is_err());
        assert!(parse_range("a").is_err());
    }

    #[test]
    fn reals() {
        assert_eq!(parse_reals("1,-1e-3", "x").unwrap(), vec![1.0, -1e-3]);
        assert!(parse_reals("1,,2", "x").is_err());
        assert!(parse_reals("inf", "x").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
