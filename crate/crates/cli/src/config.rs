//! Command arguments. Every run-producing command's arguments double as its
//! resolved configuration and are echoed verbatim into the run manifest.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    /// Tabulated game file.
    File,
    /// Synthetic game spec written by `pairx synth`.
    Synthetic,
    /// Remote oracle speaking the line-delimited JSON protocol.
    Remote,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub oracle: OracleKind,
    /// Game file for `--oracle file` or `--oracle synthetic`.
    #[arg(long, required_if_eq_any([("oracle", "file"), ("oracle", "synthetic")]))]
    pub game: Option<PathBuf>,
    /// `tcp://host:port` or `cmd:program args…` for `--oracle remote`.
    #[arg(long, required_if_eq("oracle", "remote"))]
    pub endpoint: Option<String>,
    /// Per-message timeout for remote oracles.
    #[arg(long, default_value_t = 60.0)]
    pub timeout_secs: f64,
    /// Retries per batch after a transport failure.
    #[arg(long, default_value_t = 2)]
    pub retries: usize,
    /// Cap on masks per remote request, below the advertised limit.
    #[arg(long)]
    pub max_batch: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Naive,
    CrossModal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum KernelChoice {
    Wbanzhaf,
    Shapley,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryChoice {
    /// Empty and full set enforced as equality constraints.
    Constrained,
    /// Empty and full set as heavily weighted rows.
    LargeWeight,
}

/// `full`, `clique:K` or `cross-modal`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum BasisChoice {
    Full,
    Clique(usize),
    CrossModal,
}

impl FromStr for BasisChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "cross-modal" => Ok(Self::CrossModal),
            _ => s
                .strip_prefix("clique:")
                .and_then(|k| k.parse().ok())
                .map(Self::Clique)
                .ok_or_else(|| format!("basis {s:?} is not one of full, clique:K, cross-modal")),
        }
    }
}

impl fmt::Display for BasisChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Full => f.write_str("full"),
            Self::Clique(k) => write!(f, "clique:{k}"),
            Self::CrossModal => f.write_str("cross-modal"),
        }
    }
}

impl From<BasisChoice> for String {
    fn from(b: BasisChoice) -> Self {
        b.to_string()
    }
}

impl TryFrom<String> for BasisChoice {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    /// Number of sampled masks (`m_I · m_T` may fall short in cross-modal mode).
    #[arg(long)]
    pub budget: usize,
    #[arg(long, value_enum, default_value_t = ModeChoice::Naive)]
    pub mode: ModeChoice,
    #[arg(long, default_value_t = BasisChoice::Full)]
    pub basis: BasisChoice,
    #[arg(long, value_enum, default_value_t = KernelChoice::Wbanzhaf)]
    pub kernel: KernelChoice,
    /// Boundary handling of the Shapley kernel.
    #[arg(long, value_enum, default_value_t = BoundaryChoice::Constrained)]
    pub boundary: BoundaryChoice,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run directory; must not exist yet.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
    /// Explanation JSON produced by `explain` or `exact`.
    #[arg(long)]
    pub explanation: PathBuf,
    /// Sampling probabilities for the correlation metric; defaults to the
    /// explanation's own p (0.5 for Shapley explanations).
    #[arg(long, value_delimiter = ',')]
    pub eval_p: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub eval_m: usize,
    #[arg(long)]
    pub pointing_spec: Option<PathBuf>,
    /// Score explanations without pairs through products of their singles.
    #[arg(long)]
    pub pgr_first_order_fallback: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub oracle: OracleArgs,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    /// Random 2-additive game, coefficients uniform in [-1, 1].
    TwoAdditive,
    /// Random table of i.i.d. values, written as a tabulated game file.
    Tabulated,
    /// Two-tower similarity game with independently encoded sides.
    Factored,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum)]
    pub kind: SynthKind,
    #[arg(long)]
    pub n_image: usize,
    #[arg(long)]
    pub n_text: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Embedding width of factored games.
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    /// Output scale of factored games.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize, Args)]
pub struct CheckArgs {
    #[arg(long)]
    pub endpoint: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30.0)]
    pub timeout_secs: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    /// Served game: a tabulated file or a synthetic spec.
    #[arg(long, value_enum)]
    pub oracle: OracleKind,
    #[arg(long)]
    pub game: PathBuf,
    /// Listen on this address instead of stdin/stdout; port 0 picks one.
    #[arg(long)]
    pub tcp: Option<String>,
    #[arg(long, default_value_t = 256)]
    pub max_batch: usize,
    /// Fault injection: answer in reversed order.
    #[arg(long)]
    pub reverse_order: bool,
    /// Fault injection: add uniform noise of this scale to every value.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Fault injection: drop the last value of every response.
    #[arg(long)]
    pub drop_value: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_round_trips() {
        for b in [BasisChoice::Full, BasisChoice::Clique(72), BasisChoice::CrossModal] {
            assert_eq!(b.to_string().parse::<BasisChoice>().unwrap(), b);
            let json = serde_json::to_string(&b).unwrap();
            assert_eq!(serde_json::from_str::<BasisChoice>(&json).unwrap(), b);
        }
        assert!("clique:x".parse::<BasisChoice>().is_err());
        assert!("pairs".parse::<BasisChoice>().is_err());
    }
}
