use std::sync::atomic::{AtomicU64, Ordering};

use rand::Rng;

use super::{check_masks, GameOracle};
use crate::error::Result;
use crate::rng;
use crate::space::{Mask, PlayerSpace};

/// Synthetic two-tower similarity game.
///
/// Each side is encoded independently as `tanh(bias + Σ_{active} w_t)` and the
/// game value is `scale · cos(image_embedding, text_embedding)`. Every side
/// encoding is counted, which makes the cost of an evaluation strategy
/// observable: [`GameOracle::evaluate`] pays two encodings per mask while
/// [`GameOracle::evaluate_product`] pays one per pool element.
#[derive(Debug)]
pub struct FactoredGame {
    space: PlayerSpace,
    dim: usize,
    scale: f64,
    token_vectors: Vec<Vec<f64>>,
    image_bias: Vec<f64>,
    text_bias: Vec<f64>,
    encodings: AtomicU64,
}

impl FactoredGame {
    pub fn random(space: PlayerSpace, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = rng::stream(seed, "factored-game");
        let mut draw = |len: usize| (0..len).map(|_| rng.gen_range(-1.0..=1.0)).collect::<Vec<f64>>();
        let image_bias = draw(dim);
        let text_bias = draw(dim);
        let token_vectors = (0..space.size()).map(|_| draw(dim)).collect();
        Self {
            space,
            dim,
            scale,
            token_vectors,
            image_bias,
            text_bias,
            encodings: AtomicU64::new(0),
        }
    }

    /// Number of side encodings performed so far.
    pub fn encodings(&self) -> u64 {
        self.encodings.load(Ordering::Relaxed)
    }

    pub fn reset_encodings(&self) {
        self.encodings.store(0, Ordering::Relaxed);
    }

    fn encode(&self, mask: &Mask, range: std::ops::Range<usize>, bias: &[f64]) -> Vec<f64> {
        self.encodings.fetch_add(1, Ordering::Relaxed);
        let mut acc = bias.to_vec();
        for t in mask.iter().filter(|t| range.contains(t)) {
            for (a, w) in acc.iter_mut().zip(&self.token_vectors[t]) {
                *a += w;
            }
        }
        let mut out: Vec<f64> = acc.into_iter().map(f64::tanh).collect();
        let norm = out.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
        out.iter_mut().for_each(|x| *x /= norm);
        out
    }

    fn encode_image(&self, mask: &Mask) -> Vec<f64> {
        self.encode(mask, self.space.image_range(), &self.image_bias)
    }

    fn encode_text(&self, mask: &Mask) -> Vec<f64> {
        self.encode(mask, self.space.text_range(), &self.text_bias)
    }

    fn similarity(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), self.dim);
        self.scale * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

impl GameOracle for FactoredGame {
    fn space(&self) -> PlayerSpace {
        self.space
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        check_masks(&self.space, masks)?;
        Ok(masks
            .iter()
            .map(|m| self.similarity(&self.encode_image(m), &self.encode_text(m)))
            .collect())
    }

    fn evaluate_product(&self, image_pool: &[Mask], text_pool: &[Mask]) -> Result<Vec<f64>> {
        check_masks(&self.space, image_pool)?;
        check_masks(&self.space, text_pool)?;
        let images: Vec<Vec<f64>> = image_pool.iter().map(|m| self.encode_image(m)).collect();
        let texts: Vec<Vec<f64>> = text_pool.iter().map(|m| self.encode_text(m)).collect();
        let mut out = Vec::with_capacity(images.len() * texts.len());
        for a in &images {
            for b in &texts {
                out.push(self.similarity(a, b));
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_one_shot_and_costs_less() {
        let s = PlayerSpace::new(3, 2).unwrap();
        let g = FactoredGame::random(s, 6, 100.0, 4);
        let img: Vec<Mask> = [0b000u64, 0b101, 0b111].iter().map(|&b| Mask::from_bits(5, b)).collect();
        let txt: Vec<Mask> = [0b01000u64, 0b11000].iter().map(|&b| Mask::from_bits(5, b)).collect();
        let product = g.evaluate_product(&img, &txt).unwrap();
        assert_eq!(g.encodings(), 5);
        g.reset_encodings();
        let unions: Vec<Mask> = img.iter().flat_map(|a| txt.iter().map(move |b| a.union(b))).collect();
        let direct = g.evaluate(&unions).unwrap();
        assert_eq!(g.encodings(), 12);
        for (a, b) in product.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(direct.iter().all(|v| v.abs() <= 100.0 + 1e-9));
    }
}
