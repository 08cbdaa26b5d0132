//! Game sources and the synthetic game file format.

use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use pairx_core::game::{FactoredGame, TabulatedGameFile};
use pairx_core::{Endpoint, GameOracle, PlayerSpace, RemoteConfig, RemoteOracle, TabulatedGame, TwoAdditiveGame};

use crate::config::{OracleArgs, OracleKind};
use crate::error::{CliError, CliResult};
use crate::run::Inputs;

pub const SYNTHETIC_SCHEMA_VERSION: u32 = 1;

/// Synthetic game spec. A 2-additive spec lists every coefficient, so the
/// file itself is the ground truth an explanation should recover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFile {
    pub schema_version: u32,
    #[serde(flatten)]
    pub game: SyntheticGame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SyntheticGame {
    TwoAdditive {
        n_image: usize,
        n_text: usize,
        constant: f64,
        singles: Vec<f64>,
        /// `[i, j, value]` with `i < j`.
        pairs: Vec<(usize, usize, f64)>,
    },
    Factored {
        n_image: usize,
        n_text: usize,
        dim: usize,
        scale: f64,
        seed: u64,
    },
}

impl SyntheticGame {
    pub fn from_two_additive(game: &TwoAdditiveGame) -> Self {
        let space = game.space();
        SyntheticGame::TwoAdditive {
            n_image: space.n_image,
            n_text: space.n_text,
            constant: game.constant(),
            singles: game.singles().to_vec(),
            pairs: game.pairs().iter().map(|p| (p.i, p.j, p.value)).collect(),
        }
    }

    pub fn build(&self) -> CliResult<Arc<dyn GameOracle>> {
        Ok(match self {
            SyntheticGame::TwoAdditive {
                n_image,
                n_text,
                constant,
                singles,
                pairs,
            } => Arc::new(TwoAdditiveGame::new(
                PlayerSpace::new(*n_image, *n_text)?,
                *constant,
                singles.clone(),
                pairs.iter().copied(),
            )?),
            SyntheticGame::Factored {
                n_image,
                n_text,
                dim,
                scale,
                seed,
            } => {
                if *dim == 0 {
                    return Err(CliError::Usage("factored game needs dim > 0".into()));
                }
                Arc::new(FactoredGame::random(PlayerSpace::new(*n_image, *n_text)?, *dim, *scale, *seed))
            }
        })
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_slice(&bytes).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Opens a game file of the given kind, recording its hash.
pub fn load_game_file(kind: OracleKind, path: &Path, inputs: &mut Inputs) -> CliResult<Arc<dyn GameOracle>> {
    inputs.record(path)?;
    match kind {
        OracleKind::File => {
            let file: TabulatedGameFile = read_json(path)?;
            Ok(Arc::new(TabulatedGame::from_file(file)?))
        }
        OracleKind::Synthetic => {
            let file: SyntheticFile = read_json(path)?;
            if file.schema_version != SYNTHETIC_SCHEMA_VERSION {
                return Err(CliError::Usage(format!(
                    "unsupported synthetic schema version {}",
                    file.schema_version
                )));
            }
            file.game.build()
        }
        OracleKind::Remote => Err(CliError::Usage("remote oracles have no game file".into())),
    }
}

pub fn remote_config(endpoint: &str, timeout_secs: f64) -> CliResult<RemoteConfig> {
    if !(timeout_secs.is_finite() && timeout_secs > 0.0) {
        return Err(CliError::Usage(format!("timeout must be positive, got {timeout_secs}")));
    }
    let mut config = RemoteConfig::new(Endpoint::parse(endpoint)?);
    config.timeout = Duration::from_secs_f64(timeout_secs);
    Ok(config)
}

/// Opens the oracle named by the arguments.
pub fn open(args: &OracleArgs, inputs: &mut Inputs) -> CliResult<Arc<dyn GameOracle>> {
    match args.oracle {
        OracleKind::File | OracleKind::Synthetic => {
            let path = args
                .game
                .as_deref()
                .ok_or_else(|| CliError::Usage("--game is required for file and synthetic oracles".into()))?;
            load_game_file(args.oracle, path, inputs)
        }
        OracleKind::Remote => {
            let endpoint = args
                .endpoint
                .as_deref()
                .ok_or_else(|| CliError::Usage("--endpoint is required for remote oracles".into()))?;
            let mut config = remote_config(endpoint, args.timeout_secs)?;
            config.retries = args.retries;
            config.max_batch = args.max_batch;
            Ok(Arc::new(RemoteOracle::connect(config)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pairx_core::game::random_two_additive;

    #[test]
    fn synthetic_file_round_trips() {
        let g = random_two_additive(PlayerSpace::new(2, 2).unwrap(), 3);
        let file = SyntheticFile {
            schema_version: SYNTHETIC_SCHEMA_VERSION,
            game: SyntheticGame::from_two_additive(&g),
        };
        let text = serde_json::to_string(&file).unwrap();
        assert!(text.contains("\"kind\":\"two-additive\""));
        let back: SyntheticFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back, file);
        let built = back.game.build().unwrap();
        let masks: Vec<_> = (0..16).map(|b| pairx_core::Mask::from_bits(4, b)).collect();
        assert_eq!(built.evaluate(&masks).unwrap(), g.evaluate(&masks).unwrap());
    }
}
