use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_masks, GameOracle};
use crate::error::{Error, Result};
use crate::space::{Mask, PlayerSpace};

/// Pairwise term `{i, j}` with `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// Game of the form `e0 + Σ_{i∈M} e_i + Σ_{{i,j}⊆M} e_ij`.
///
/// Pairs are kept sorted by `(i, j)`; a pair that is not listed is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoAdditiveGame {
    space: PlayerSpace,
    constant: f64,
    singles: Vec<f64>,
    pairs: Vec<Pair>,
    // row-major n×n, symmetric, zero where no pair is listed
    dense: Vec<f64>,
}

impl TwoAdditiveGame {
    pub fn new(
        space: PlayerSpace,
        constant: f64,
        singles: Vec<f64>,
        pairs: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let n = space.size();
        if singles.len() != n {
            return Err(Error::LengthMismatch {
                what: "singles",
                expected: n,
                actual: singles.len(),
            });
        }
        let mut sorted = Vec::new();
        for (a, b, value) in pairs {
            if a == b {
                return Err(Error::InvalidArgument(format!("pair ({a}, {b}) has equal endpoints")));
            }
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if j >= n {
                return Err(Error::InvalidArgument(format!("pair ({i}, {j}) outside {n} players")));
            }
            sorted.push(Pair { i, j, value });
        }
        sorted.sort_by_key(|p| (p.i, p.j));
        if let Some(w) = sorted.windows(2).find(|w| (w[0].i, w[0].j) == (w[1].i, w[1].j)) {
            return Err(Error::InvalidArgument(format!("duplicate pair ({}, {})", w[0].i, w[0].j)));
        }
        let mut dense = vec![0.0; n * n];
        for p in &sorted {
            dense[p.i * n + p.j] = p.value;
            dense[p.j * n + p.i] = p.value;
        }
        Ok(Self {
            space,
            constant,
            singles,
            pairs: sorted,
            dense,
        })
    }

    /// Game with no terms at all; handy as a zero surrogate.
    pub fn zero(space: PlayerSpace) -> Self {
        Self::new(space, 0.0, vec![0.0; space.size()], []).expect("zero game is valid")
    }

    pub fn space(&self) -> PlayerSpace {
        self.space
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn singles(&self) -> &[f64] {
        &self.singles
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn pair_value(&self, i: usize, j: usize) -> f64 {
        let n = self.space.size();
        self.dense[i * n + j]
    }

    /// Same game with every pair term removed.
    pub fn without_pairs(&self) -> Self {
        Self::new(self.space, self.constant, self.singles.clone(), []).expect("valid")
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(
            self.space,
            self.constant * factor,
            self.singles.iter().map(|v| v * factor).collect(),
            self.pairs.iter().map(|p| (p.i, p.j, p.value * factor)),
        )
        .expect("valid")
    }

    pub fn value(&self, mask: &Mask) -> f64 {
        let n = self.space.size();
        let active: Vec<usize> = mask.iter().collect();
        let mut total = self.constant;
        for &i in &active {
            total += self.singles[i];
        }
        if active.len() * active.len() / 2 <= self.pairs.len() {
            for (a, &i) in active.iter().enumerate() {
                let row = &self.dense[i * n..(i + 1) * n];
                for &j in &active[a + 1..] {
                    total += row[j];
                }
            }
        } else {
            for p in &self.pairs {
                if mask.contains(p.i) && mask.contains(p.j) {
                    total += p.value;
                }
            }
        }
        total
    }
}

impl GameOracle for TwoAdditiveGame {
    fn space(&self) -> PlayerSpace {
        self.space
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        check_masks(&self.space, masks)?;
        if masks.len() >= 1024 {
            Ok(masks.par_iter().map(|m| self.value(m)).collect())
        } else {
            Ok(masks.iter().map(|m| self.value(m)).collect())
        }
    }
}
