//! Cooperative games over image and text tokens.
//!
//! A game maps every [`Mask`] of its [`PlayerSpace`] to a real value. All
//! games implement [`GameOracle`], which evaluates batches so that remote
//! oracles can amortize transport. Games are immutable once built and may be
//! shared across threads.

mod factored;
mod memo;
mod random;
mod tabulated;
mod two_additive;

use std::sync::Arc;

pub use factored::FactoredGame;
pub use memo::MemoizedOracle;
pub use random::{make_random_game, random_tabulated, random_two_additive, RandomGameKind};
pub use tabulated::{tabulate, TabulatedGame, TabulatedGameFile, ENUMERATION_LIMIT};
pub use two_additive::{Pair, TwoAdditiveGame};

use crate::error::Result;
use crate::space::{Mask, PlayerSpace};

/// Batched access to a game `ν`.
pub trait GameOracle: Send + Sync {
    fn space(&self) -> PlayerSpace;

    /// `ν(masks[k])` for every `k`, in input order.
    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>>;

    /// Values of all unions `image_pool[a] ∪ text_pool[b]`, with `a` the outer
    /// index. Oracles whose value factors over the two modalities override
    /// this to encode each pool element once.
    fn evaluate_product(&self, image_pool: &[Mask], text_pool: &[Mask]) -> Result<Vec<f64>> {
        let masks: Vec<Mask> = image_pool
            .iter()
            .flat_map(|a| text_pool.iter().map(move |b| a.union(b)))
            .collect();
        self.evaluate(&masks)
    }
}

/// Evaluates a single mask.
pub fn evaluate_one(game: &dyn GameOracle, mask: &Mask) -> Result<f64> {
    Ok(game.evaluate(std::slice::from_ref(mask))?[0])
}

pub(crate) fn check_masks(space: &PlayerSpace, masks: &[Mask]) -> Result<()> {
    masks.iter().try_for_each(|m| m.check_width(space))
}

impl<G: GameOracle + ?Sized> GameOracle for &G {
    fn space(&self) -> PlayerSpace {
        (**self).space()
    }
    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        (**self).evaluate(masks)
    }
    fn evaluate_product(&self, image_pool: &[Mask], text_pool: &[Mask]) -> Result<Vec<f64>> {
        (**self).evaluate_product(image_pool, text_pool)
    }
}

impl<G: GameOracle + ?Sized> GameOracle for Box<G> {
    fn space(&self) -> PlayerSpace {
        (**self).space()
    }
    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        (**self).evaluate(masks)
    }
    fn evaluate_product(&self, image_pool: &[Mask], text_pool: &[Mask]) -> Result<Vec<f64>> {
        (**self).evaluate_product(image_pool, text_pool)
    }
}

impl<G: GameOracle + ?Sized> GameOracle for Arc<G> {
    fn space(&self) -> PlayerSpace {
        (**self).space()
    }
    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        (**self).evaluate(masks)
    }
    fn evaluate_product(&self, image_pool: &[Mask], text_pool: &[Mask]) -> Result<Vec<f64>> {
        (**self).evaluate_product(image_pool, text_pool)
    }
}

/// Game defined by a closure. Mostly useful in tests.
pub struct FnGame<F> {
    space: PlayerSpace,
    f: F,
}

impl<F: Fn(&Mask) -> f64 + Send + Sync> FnGame<F> {
    pub fn new(space: PlayerSpace, f: F) -> Self {
        Self { space, f }
    }
}

impl<F: Fn(&Mask) -> f64 + Send + Sync> GameOracle for FnGame<F> {
    fn space(&self) -> PlayerSpace {
        self.space
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        check_masks(&self.space, masks)?;
        Ok(masks.iter().map(&self.f).collect())
    }
}
