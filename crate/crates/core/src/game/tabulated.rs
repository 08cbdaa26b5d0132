use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_masks, GameOracle};
use crate::error::{Error, Result};
use crate::space::{Mask, PlayerSpace};

/// Largest player count for which full tables and exact solvers are allowed.
pub const ENUMERATION_LIMIT: usize = 24;

const PAR_THRESHOLD: usize = 4096;

/// Game stored as a full table of `2^n` values indexed by mask bits.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedGame {
    space: PlayerSpace,
    values: Vec<f64>,
}

/// On-disk form: `{"n_image", "n_text", "values": [2^n floats in mask-bit order]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct TabulatedGameFile {
    pub n_image: usize,
    pub n_text: usize,
    pub values: Vec<f64>,
}

pub(crate) fn check_guard(space: &PlayerSpace) -> Result<()> {
    if space.size() > ENUMERATION_LIMIT {
        Err(Error::EnumerationGuard {
            players: space.size(),
            limit: ENUMERATION_LIMIT,
        })
    } else {
        Ok(())
    }
}

impl TabulatedGame {
    pub fn new(space: PlayerSpace, values: Vec<f64>) -> Result<Self> {
        check_guard(&space)?;
        let expected = 1usize << space.size();
        if values.len() != expected {
            return Err(Error::LengthMismatch {
                what: "game table",
                expected,
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self { space, values })
    }

    pub fn from_fn(space: PlayerSpace, f: impl Fn(u64) -> f64 + Sync + Send) -> Result<Self> {
        check_guard(&space)?;
        let values = (0..1u64 << space.size()).into_par_iter().map(f).collect();
        Self::new(space, values)
    }

    pub fn space(&self) -> PlayerSpace {
        self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, bits: u64) -> f64 {
        self.values[bits as usize]
    }

    pub fn value(&self, mask: &Mask) -> f64 {
        self.value_at(mask.to_bits().expect("tabulated games have at most 24 players"))
    }

    pub fn to_file(&self) -> TabulatedGameFile {
        TabulatedGameFile {
            n_image: self.space.n_image,
            n_text: self.space.n_text,
            values: self.values.clone(),
        }
    }

    pub fn from_file(file: TabulatedGameFile) -> Result<Self> {
        Self::new(PlayerSpace::new(file.n_image, file.n_text)?, file.values)
    }

    /// Linear combination `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &TabulatedGame, beta: f64) -> Result<Self> {
        self.space.ensure_same(&other.space)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Self::new(self.space, values)
    }
}

impl GameOracle for TabulatedGame {
    fn space(&self) -> PlayerSpace {
        self.space
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        check_masks(&self.space, masks)?;
        if masks.len() >= PAR_THRESHOLD {
            Ok(masks.par_iter().map(|m| self.value(m)).collect())
        } else {
            Ok(masks.iter().map(|m| self.value(m)).collect())
        }
    }
}

/// Builds the full table of any oracle by enumerating its masks.
pub fn tabulate(game: &dyn GameOracle) -> Result<TabulatedGame> {
    let space = game.space();
    check_guard(&space)?;
    let n = space.size();
    let total = 1u64 << n;
    let mut values = Vec::with_capacity(total as usize);
    let chunk = 1u64 << 16;
    let mut start = 0;
    while start < total {
        let end = (start + chunk).min(total);
        let masks: Vec<Mask> = (start..end).map(|b| Mask::from_bits(n, b)).collect();
        values.extend(game.evaluate(&masks)?);
        start = end;
    }
    TabulatedGame::new(space, values)
}
