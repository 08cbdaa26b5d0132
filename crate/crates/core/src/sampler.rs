//! Mask sampling from the product-Bernoulli distribution `P_p`.
//!
//! Two schemes are supported. Naive sampling draws every mask independently,
//! each token active with probability `p`. Cross-modal sampling draws `m_I`
//! image-side masks and `m_T` text-side masks from independent streams and
//! emits all `m_I · m_T` unions; each emitted mask is still marginally `P_p`
//! distributed but only `m_I + m_T` side encodings are needed to evaluate a
//! factored oracle on the whole batch.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};
use crate::game::GameOracle;
use crate::rng;
use crate::space::{Mask, PlayerSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SamplingMode {
    Naive { masks: usize },
    CrossModal { image: usize, text: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    pub space: PlayerSpace,
    pub p: f64,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl SamplePlan {
    pub fn naive(space: PlayerSpace, p: f64, masks: usize, seed: u64) -> Result<Self> {
        check_probability(p)?;
        if masks == 0 {
            return Err(Error::InvalidArgument("budget must be positive".into()));
        }
        Ok(Self {
            space,
            p,
            mode: SamplingMode::Naive { masks },
            seed,
        })
    }

    /// Cross-modal plan with explicit pool sizes.
    pub fn cross_modal(space: PlayerSpace, p: f64, image: usize, text: usize, seed: u64) -> Result<Self> {
        check_probability(p)?;
        if image == 0 || text == 0 {
            return Err(Error::InvalidArgument(format!(
                "cross-modal pools must be non-empty (m_I={image}, m_T={text})"
            )));
        }
        Ok(Self {
            space,
            p,
            mode: SamplingMode::CrossModal { image, text },
            seed,
        })
    }

    /// Cross-modal plan whose pool sizes come from [`split_budget`].
    pub fn cross_modal_budget(space: PlayerSpace, p: f64, budget: usize, seed: u64) -> Result<Self> {
        let (image, text) = split_budget(&space, budget)?;
        Self::cross_modal(space, p, image, text, seed)
    }

    /// Number of masks the plan emits.
    pub fn budget(&self) -> usize {
        match self.mode {
            SamplingMode::Naive { masks } => masks,
            SamplingMode::CrossModal { image, text } => image * text,
        }
    }
}

/// Image/text pool sizes for a cross-modal budget `m`:
///
/// ```text
/// m_T = min(2^{n_T}, max(4, ⌈√m · n_T / n_I⌉))
/// m_I = min(2^{n_I}, max(4, ⌊√m · n_I / n_T⌋))
/// ```
///
/// No re-balancing happens when a cap binds, so `m_I · m_T` may fall short
/// of `m`.
pub fn split_budget(space: &PlayerSpace, budget: usize) -> Result<(usize, usize)> {
    if budget < 16 {
        return Err(Error::InvalidArgument(format!("cross-modal budget must be at least 16, got {budget}")));
    }
    let root = (budget as f64).sqrt();
    let (ni, nt) = (space.n_image as f64, space.n_text as f64);
    let cap = |k: usize| if k >= 63 { usize::MAX } else { 1usize << k };
    let text = ((root * nt / ni).ceil() as usize).max(4).min(cap(space.n_text));
    let image = ((root * ni / nt).floor() as usize).max(4).min(cap(space.n_image));
    Ok((image, text))
}

/// Where the masks of a batch came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Supplied directly (enumeration, replay of a naive batch, tests).
    Explicit,
    Naive,
    /// `pairs[k] = (ℓ_I, ℓ_T)` means `masks[k] = image_pool[ℓ_I] ∪ text_pool[ℓ_T]`.
    CrossModal {
        image_pool: Vec<Mask>,
        text_pool: Vec<Mask>,
        pairs: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleBatch {
    pub space: PlayerSpace,
    pub masks: Vec<Mask>,
    pub provenance: Provenance,
}

fn bernoulli_mask(space: &PlayerSpace, range: std::ops::Range<usize>, p: f64, rng: &mut rng::Stream) -> Mask {
    let mut mask = space.empty_mask();
    for i in range {
        if rng.gen::<f64>() < p {
            mask.insert(i);
        }
    }
    mask
}

impl SampleBatch {
    pub fn from_masks(space: PlayerSpace, masks: Vec<Mask>) -> Result<Self> {
        masks.iter().try_for_each(|m| m.check_width(&space))?;
        Ok(Self {
            space,
            masks,
            provenance: Provenance::Explicit,
        })
    }

    /// Every mask of a space exactly once, in bit order.
    pub fn enumerate(space: PlayerSpace) -> Result<Self> {
        crate::game::ENUMERATION_LIMIT
            .checked_sub(space.size())
            .ok_or(Error::EnumerationGuard {
                players: space.size(),
                limit: crate::game::ENUMERATION_LIMIT,
            })?;
        let n = space.size();
        Self::from_masks(space, (0..1u64 << n).map(|b| Mask::from_bits(n, b)).collect())
    }

    pub fn len(&self) -> usize {
        self.masks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masks.is_empty()
    }

    /// Game values of every mask, using the product path for cross-modal batches.
    pub fn evaluate(&self, game: &dyn GameOracle) -> Result<Vec<f64>> {
        self.space.ensure_same(&game.space())?;
        match &self.provenance {
            Provenance::CrossModal {
                image_pool,
                text_pool,
                pairs,
            } if pairs.len() == image_pool.len() * text_pool.len()
                && pairs
                    .iter()
                    .enumerate()
                    .all(|(k, &(a, b))| k == a * text_pool.len() + b) =>
            {
                game.evaluate_product(image_pool, text_pool)
            }
            _ => game.evaluate(&self.masks),
        }
    }

    /// One JSON object per line: `{"mask": bits}` plus `image_index` and
    /// `text_index` for cross-modal batches.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for (k, mask) in self.masks.iter().enumerate() {
            let record = match &self.provenance {
                Provenance::CrossModal { pairs, .. } => BatchRecord {
                    mask: mask.clone(),
                    image_index: Some(pairs[k].0),
                    text_index: Some(pairs[k].1),
                },
                _ => BatchRecord {
                    mask: mask.clone(),
                    image_index: None,
                    text_index: None,
                },
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl(space: PlayerSpace, input: impl BufRead) -> Result<Self> {
        let mut masks = Vec::new();
        let mut pairs = Vec::new();
        let mut cross = None;
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: BatchRecord = serde_json::from_str(&line)?;
            record.mask.check_width(&space)?;
            let is_cross = record.image_index.is_some() && record.text_index.is_some();
            if *cross.get_or_insert(is_cross) != is_cross {
                return Err(Error::InvalidArgument("batch mixes cross-modal and plain records".into()));
            }
            if let (Some(a), Some(b)) = (record.image_index, record.text_index) {
                pairs.push((a, b));
            }
            masks.push(record.mask);
        }
        if cross != Some(true) {
            return Self::from_masks(space, masks);
        }
        let image_len = pairs.iter().map(|p| p.0).max().unwrap_or(0) + 1;
        let text_len = pairs.iter().map(|p| p.1).max().unwrap_or(0) + 1;
        let mut image_pool: Vec<Option<Mask>> = vec![None; image_len];
        let mut text_pool: Vec<Option<Mask>> = vec![None; text_len];
        let (image_part, text_part) = (space.image_mask(), space.text_mask());
        for (mask, &(a, b)) in masks.iter().zip(&pairs) {
            for (slot, part) in [(&mut image_pool[a], &image_part), (&mut text_pool[b], &text_part)] {
                let side = mask.intersection(part);
                match slot {
                    Some(prev) if *prev != side => {
                        return Err(Error::InvalidArgument("inconsistent cross-modal provenance".into()))
                    }
                    _ => *slot = Some(side),
                }
            }
        }
        let collect = |pool: Vec<Option<Mask>>| {
            pool.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| Error::InvalidArgument("cross-modal pool has gaps".into()))
        };
        Ok(Self {
            space,
            masks,
            provenance: Provenance::CrossModal {
                image_pool: collect(image_pool)?,
                text_pool: collect(text_pool)?,
                pairs,
            },
        })
    }
}

#[derive(Serialize, Deserialize)]
struct BatchRecord {
    mask: Mask,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    image_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    text_index: Option<usize>,
}

/// `m` i.i.d. masks from `P_p`.
pub fn sample_naive(plan: &SamplePlan) -> Result<SampleBatch> {
    let SamplingMode::Naive { masks: m } = plan.mode else {
        return Err(Error::InvalidArgument("sample_naive needs a naive plan".into()));
    };
    let space = plan.space;
    let mut rng = rng::stream(plan.seed, rng::LABEL_NAIVE);
    let masks = (0..m).map(|_| bernoulli_mask(&space, 0..space.size(), plan.p, &mut rng)).collect();
    Ok(SampleBatch {
        space,
        masks,
        provenance: Provenance::Naive,
    })
}

/// All `m_I · m_T` unions of independently drawn image-side and text-side
/// masks, image index outermost.
pub fn sample_cross_modal(plan: &SamplePlan) -> Result<SampleBatch> {
    let SamplingMode::CrossModal { image, text } = plan.mode else {
        return Err(Error::InvalidArgument("sample_cross_modal needs a cross-modal plan".into()));
    };
    let space = plan.space;
    let mut image_rng = rng::stream(plan.seed, rng::LABEL_IMAGE);
    let mut text_rng = rng::stream(plan.seed, rng::LABEL_TEXT);
    let image_pool: Vec<Mask> = (0..image)
        .map(|_| bernoulli_mask(&space, space.image_range(), plan.p, &mut image_rng))
        .collect();
    let text_pool: Vec<Mask> = (0..text)
        .map(|_| bernoulli_mask(&space, space.text_range(), plan.p, &mut text_rng))
        .collect();
    let mut masks = Vec::with_capacity(image * text);
    let mut pairs = Vec::with_capacity(image * text);
    for (a, im) in image_pool.iter().enumerate() {
        for (b, tx) in text_pool.iter().enumerate() {
            masks.push(im.union(tx));
            pairs.push((a, b));
        }
    }
    Ok(SampleBatch {
        space,
        masks,
        provenance: Provenance::CrossModal {
            image_pool,
            text_pool,
            pairs,
        },
    })
}

/// Draws the batch a plan describes.
pub fn sample(plan: &SamplePlan) -> Result<SampleBatch> {
    match plan.mode {
        SamplingMode::Naive { .. } => sample_naive(plan),
        SamplingMode::CrossModal { .. } => sample_cross_modal(plan),
    }
}

/// Monte Carlo estimate of `F_p(ν, ν̂)`: mean squared residual over the
/// plan's batch. Unbiased in both sampling modes.
pub fn estimate_p_faithfulness(nu: &dyn GameOracle, nu_hat: &dyn GameOracle, plan: &SamplePlan) -> Result<f64> {
    nu.space().ensure_same(&nu_hat.space())?;
    plan.space.ensure_same(&nu.space())?;
    let batch = sample(plan)?;
    let a = batch.evaluate(nu)?;
    let b = batch.evaluate(nu_hat)?;
    Ok(a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, HashSet};

    use super::*;
    use crate::game::{random_tabulated, TwoAdditiveGame};

    fn space(a: usize, b: usize) -> PlayerSpace {
        PlayerSpace::new(a, b).unwrap()
    }

    #[test]
    fn naive_mean_popcount() {
        let plan = SamplePlan::naive(space(2, 2), 0.5, 100_000, 17).unwrap();
        let batch = sample_naive(&plan).unwrap();
        let mean = batch.masks.iter().map(|m| m.count()).sum::<usize>() as f64 / batch.len() as f64;
        assert!((1.98..=2.02).contains(&mean), "mean popcount {mean}");
    }

    #[test]
    fn naive_mask_frequencies_match_p_p() {
        let p = 0.3;
        let m = 1_000_000;
        let plan = SamplePlan::naive(space(1, 2), p, m, 5).unwrap();
        let batch = sample_naive(&plan).unwrap();
        let mut counts = [0usize; 8];
        for mask in &batch.masks {
            counts[mask.to_bits().unwrap() as usize] += 1;
        }
        for (bits, &c) in counts.iter().enumerate() {
            let k = (bits as u32).count_ones() as i32;
            let prob = p.powi(k) * (1.0 - p).powi(3 - k);
            let sigma = (m as f64 * prob * (1.0 - prob)).sqrt();
            assert!((c as f64 - m as f64 * prob).abs() < 4.0 * sigma, "mask {bits:03b}: {c}");
        }
    }

    #[test]
    fn plans_are_seed_deterministic() {
        let s = space(3, 2);
        let a = SamplePlan::naive(s, 0.4, 50, 3).unwrap();
        assert_eq!(sample(&a).unwrap(), sample(&a).unwrap());
        let b = SamplePlan::naive(s, 0.4, 50, 4).unwrap();
        assert_ne!(sample(&a).unwrap(), sample(&b).unwrap());
        let c = SamplePlan::cross_modal(s, 0.4, 5, 6, 3).unwrap();
        assert_eq!(sample(&c).unwrap(), sample(&c).unwrap());
    }

    #[test]
    fn split_budget_reference_case() {
        assert_eq!(split_budget(&space(49, 30), 4096).unwrap(), (104, 40));
    }

    #[test]
    fn split_budget_caps_and_floors() {
        // text side capped at 2^2
        let (_, text) = split_budget(&space(3, 2), 1 << 30).unwrap();
        assert_eq!(text, 4);
        // small side floored at 4: ⌈4·2/40⌉ = 1
        let (image, text) = split_budget(&space(40, 2), 16).unwrap();
        assert_eq!(text, 4);
        assert_eq!(image, 80);
        assert_eq!(split_budget(&space(10, 10), 16).unwrap(), (4, 4));
        assert!(split_budget(&space(10, 10), 15).is_err());
    }

    #[test]
    fn degenerate_cross_modal_is_single_draw() {
        let s = space(3, 3);
        let plan = SamplePlan::cross_modal(s, 0.5, 1, 1, 9).unwrap();
        let batch = sample_cross_modal(&plan).unwrap();
        assert_eq!(batch.len(), 1);
        let Provenance::CrossModal { image_pool, text_pool, pairs } = &batch.provenance else {
            panic!("expected cross-modal provenance");
        };
        assert_eq!(pairs, &vec![(0, 0)]);
        assert_eq!(batch.masks[0], image_pool[0].union(&text_pool[0]));
    }

    #[test]
    fn provenance_covers_every_pair_once() {
        let plan = SamplePlan::cross_modal(space(4, 3), 0.5, 7, 5, 1).unwrap();
        let batch = sample_cross_modal(&plan).unwrap();
        let Provenance::CrossModal { image_pool, text_pool, pairs } = &batch.provenance else {
            panic!()
        };
        let unique: HashSet<_> = pairs.iter().collect();
        assert_eq!(unique.len(), 35);
        assert_eq!(pairs.len(), 35);
        for (mask, &(a, b)) in batch.masks.iter().zip(pairs) {
            assert_eq!(*mask, image_pool[a].union(&text_pool[b]));
            assert!(image_pool[a].is_subset(&plan.space.image_mask()));
            assert!(text_pool[b].is_subset(&plan.space.text_mask()));
        }
    }

    #[test]
    fn cross_modal_marginals_match_p_p() {
        let p = 0.5;
        let plan = SamplePlan::cross_modal(space(2, 2), p, 4096, 4096, 12).unwrap();
        let batch = sample_cross_modal(&plan).unwrap();
        let Provenance::CrossModal { image_pool, text_pool, .. } = &batch.provenance else {
            panic!()
        };
        // Side pools are i.i.d., so side-mask frequencies get a plain binomial band.
        for (pool, shift) in [(image_pool, 0), (text_pool, 2)] {
            let mut counts = [0usize; 4];
            for m in pool {
                counts[(m.to_bits().unwrap() >> shift) as usize] += 1;
            }
            for &c in &counts {
                let sigma = (4096.0 * 0.25 * 0.75f64).sqrt();
                assert!((c as f64 - 1024.0).abs() < 4.0 * sigma);
            }
        }
        // Pooled frequency of each union: the estimate is a product of two
        // independent side frequencies, so its variance is bounded by the
        // product-of-binomials formula.
        let mut counts = BTreeMap::new();
        for m in &batch.masks {
            *counts.entry(m.to_bits().unwrap()).or_insert(0usize) += 1;
        }
        let total = batch.len() as f64;
        for bits in 0..16u64 {
            let freq = *counts.get(&bits).unwrap_or(&0) as f64 / total;
            let (qi, qt) = (0.25f64, 0.25f64);
            let m = 4096.0;
            let var = (qi * qi + qi * (1.0 - qi) / m) * (qt * qt + qt * (1.0 - qt) / m) - qi * qi * qt * qt;
            assert!((freq - 1.0 / 16.0).abs() < 4.0 * var.sqrt(), "mask {bits:04b}: {freq}");
        }
    }

    #[test]
    fn token_marginals_are_p() {
        let p = 0.3;
        let s = space(3, 3);
        for plan in [
            SamplePlan::naive(s, p, 100_000, 2).unwrap(),
            SamplePlan::cross_modal(s, p, 400, 250, 2).unwrap(),
        ] {
            let batch = sample(&plan).unwrap();
            // Cross-modal emissions are dependent; the effective sample size
            // of a token's indicator is its side pool size.
            for t in 0..6 {
                let hits = batch.masks.iter().filter(|m| m.contains(t)).count() as f64;
                let freq = hits / batch.len() as f64;
                let eff = match plan.mode {
                    SamplingMode::Naive { masks } => masks as f64,
                    SamplingMode::CrossModal { image, text } => {
                        if t < 3 {
                            image as f64
                        } else {
                            text as f64
                        }
                    }
                };
                let sigma = (p * (1.0 - p) / eff).sqrt();
                assert!((freq - p).abs() < 4.0 * sigma, "token {t}: {freq}");
            }
        }
    }

    #[test]
    fn permuting_text_pool_keeps_mask_multiset() {
        let plan = SamplePlan::cross_modal(space(3, 3), 0.5, 6, 6, 8).unwrap();
        let batch = sample_cross_modal(&plan).unwrap();
        let Provenance::CrossModal { image_pool, text_pool, .. } = &batch.provenance else {
            panic!()
        };
        let mut reversed = text_pool.clone();
        reversed.reverse();
        let mut a: Vec<Mask> = batch.masks.clone();
        let mut b: Vec<Mask> = image_pool
            .iter()
            .flat_map(|x| reversed.iter().map(move |y| x.union(y)))
            .collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn estimate_is_zero_for_identical_games() {
        let s = space(2, 2);
        let g = random_tabulated(s, 3).unwrap();
        for plan in [
            SamplePlan::naive(s, 0.5, 64, 1).unwrap(),
            SamplePlan::cross_modal_budget(s, 0.5, 64, 1).unwrap(),
        ] {
            assert_eq!(estimate_p_faithfulness(&g, &g, &plan).unwrap(), 0.0);
        }
    }

    #[test]
    fn jsonl_round_trip_both_modes() {
        let s = space(3, 2);
        for plan in [
            SamplePlan::naive(s, 0.5, 20, 1).unwrap(),
            SamplePlan::cross_modal(s, 0.5, 4, 3, 1).unwrap(),
        ] {
            let batch = sample(&plan).unwrap();
            let mut buf = Vec::new();
            batch.write_jsonl(&mut buf).unwrap();
            let back = SampleBatch::read_jsonl(s, buf.as_slice()).unwrap();
            assert_eq!(back.masks, batch.masks);
            if let Provenance::CrossModal { .. } = batch.provenance {
                assert_eq!(back.provenance, batch.provenance);
            }
        }
        let first = String::from_utf8({
            let mut buf = Vec::new();
            sample(&SamplePlan::cross_modal(s, 0.5, 1, 1, 1).unwrap())
                .unwrap()
                .write_jsonl(&mut buf)
                .unwrap();
            buf
        })
        .unwrap();
        assert!(first.contains("\"image_index\":0") && first.contains("\"text_index\":0"));
    }

    #[test]
    fn evaluate_uses_product_order() {
        let s = space(2, 2);
        let g = TwoAdditiveGame::new(s, 0.0, vec![1.0, 2.0, 4.0, 8.0], []).unwrap();
        let batch = sample(&SamplePlan::cross_modal(s, 0.5, 5, 5, 2).unwrap()).unwrap();
        let via_product = batch.evaluate(&g).unwrap();
        let direct = g.evaluate(&batch.masks).unwrap();
        assert_eq!(via_product, direct);
    }
}
