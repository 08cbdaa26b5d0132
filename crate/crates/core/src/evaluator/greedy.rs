use rayon::prelude::*;

use crate::regressor::Explanation;
use crate::space::Mask;

/// Above this many players only every other token seeds a greedy run.
pub const FULL_SEEDING_LIMIT: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GreedyOptions {
    /// Seed every `stride`-th token; `None` picks 1 up to
    /// [`FULL_SEEDING_LIMIT`] players and 2 above.
    pub seed_stride: Option<usize>,
}

/// Best subset of every size `k = 0..=n` found by the greedy search, with
/// the surrogate value of each.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtremalSubsets {
    pub direction: Direction,
    pub masks: Vec<Mask>,
    pub values: Vec<f64>,
}

pub fn greedy_extremal_subsets(e: &Explanation, direction: Direction) -> ExtremalSubsets {
    greedy_extremal_subsets_with(e, direction, GreedyOptions::default())
}

/// Greedy search for subsets of extreme surrogate value.
///
/// From each seed token the run repeatedly appends the token with the best
/// marginal gain (lowest index among ties). For every size the best run wins;
/// earlier seeds win ties. The minimizing search is the maximizing search on
/// the negated explanation, so negating `e` swaps the two exactly.
pub fn greedy_extremal_subsets_with(e: &Explanation, direction: Direction, options: GreedyOptions) -> ExtremalSubsets {
    let n = e.space().size();
    let sign = match direction {
        Direction::Max => 1.0,
        Direction::Min => -1.0,
    };
    let stride = options
        .seed_stride
        .unwrap_or(if n <= FULL_SEEDING_LIMIT { 1 } else { 2 })
        .max(1);
    let seeds: Vec<usize> = (0..n).step_by(stride).collect();
    let sur = e.surrogate();
    let runs: Vec<(Vec<usize>, Vec<f64>)> = seeds
        .par_iter()
        .map(|&seed| {
            let mut taken = vec![false; n];
            let mut gain: Vec<f64> = (0..n).map(|t| sign * sur.singles()[t] + sign * sur.pair_value(seed, t)).collect();
            let mut value = sign * sur.constant() + sign * sur.singles()[seed];
            taken[seed] = true;
            let mut order = vec![seed];
            let mut values = vec![value];
            while order.len() < n {
                let mut best = usize::MAX;
                for t in 0..n {
                    if !taken[t] && (best == usize::MAX || gain[t] > gain[best]) {
                        best = t;
                    }
                }
                taken[best] = true;
                value += gain[best];
                order.push(best);
                values.push(value);
                for u in 0..n {
                    gain[u] += sign * sur.pair_value(best, u);
                }
            }
            (order, values)
        })
        .collect();

    let mut masks = Vec::with_capacity(n + 1);
    masks.push(Mask::empty(n));
    for k in 1..=n {
        let mut best = 0;
        for r in 1..runs.len() {
            if runs[r].1[k - 1] > runs[best].1[k - 1] {
                best = r;
            }
        }
        masks.push(Mask::from_indices(n, runs[best].0[..k].iter().copied()));
    }
    let values = masks.iter().map(|m| e.value(m)).collect();
    ExtremalSubsets {
        direction,
        masks,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regressor::{BasisSpec, Kernel};
    use crate::rng;
    use crate::space::PlayerSpace;
    use rand::Rng;

    fn random_explanation(s: PlayerSpace, seed: u64, pairs: bool) -> Explanation {
        let mut r = rng::stream(seed, "test-explanation");
        let n = s.size();
        let singles = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let basis = if pairs { BasisSpec::full(s) } else { BasisSpec::first_order(s) };
        let values: Vec<_> = basis.pairs().iter().map(|&(i, j)| (i, j, r.gen_range(-1.0..1.0))).collect();
        Explanation::from_values(basis, Kernel::weighted_banzhaf(0.5).unwrap(), 0.1, singles, values).unwrap()
    }

    fn exhaustive(e: &Explanation, k: usize, direction: Direction) -> f64 {
        let n = e.space().size();
        let vals = (0u64..1 << n)
            .filter(|b| b.count_ones() as usize == k)
            .map(|b| e.value(&Mask::from_bits(n, b)));
        match direction {
            Direction::Max => vals.fold(f64::NEG_INFINITY, f64::max),
            Direction::Min => vals.fold(f64::INFINITY, f64::min),
        }
    }

    #[test]
    fn sizes_and_endpoints() {
        let s = PlayerSpace::new(3, 4).unwrap();
        let e = random_explanation(s, 1, true);
        for dir in [Direction::Max, Direction::Min] {
            let out = greedy_extremal_subsets(&e, dir);
            assert_eq!(out.masks.len(), 8);
            for (k, m) in out.masks.iter().enumerate() {
                assert_eq!(m.count(), k);
            }
            assert_eq!(out.masks[7], s.full_mask());
        }
    }

    #[test]
    fn interaction_free_matches_ranking() {
        let s = PlayerSpace::new(5, 4).unwrap();
        let e = random_explanation(s, 9, false);
        let mut order: Vec<usize> = (0..9).collect();
        order.sort_by(|&a, &b| e.singles()[b].total_cmp(&e.singles()[a]));
        let max = greedy_extremal_subsets(&e, Direction::Max);
        let min = greedy_extremal_subsets(&e, Direction::Min);
        for k in 0..=9 {
            assert_eq!(max.masks[k], Mask::from_indices(9, order[..k].iter().copied()));
            assert_eq!(min.masks[k], Mask::from_indices(9, order[9 - k..].iter().copied()));
        }
    }

    #[test]
    fn gap_to_exhaustive_optimum_is_small() {
        let s = PlayerSpace::new(5, 5).unwrap();
        let mut worst: f64 = 0.0;
        for seed in 0..5 {
            let e = random_explanation(s, seed, true);
            for dir in [Direction::Max, Direction::Min] {
                let out = greedy_extremal_subsets(&e, dir);
                for k in 0..=10 {
                    let opt = exhaustive(&e, k, dir);
                    let gap = match dir {
                        Direction::Max => opt - out.values[k],
                        Direction::Min => out.values[k] - opt,
                    };
                    assert!(gap >= -1e-12);
                    worst = worst.max(gap);
                }
            }
        }
        eprintln!("largest greedy gap to exhaustive optimum: {worst:.4}");
    }

    #[test]
    fn negation_swaps_directions() {
        let s = PlayerSpace::new(4, 4).unwrap();
        let e = random_explanation(s, 3, true);
        let neg = Explanation::from_values(
            e.basis().clone(),
            e.kernel(),
            -e.constant(),
            e.singles().iter().map(|v| -v).collect(),
            e.surrogate().pairs().iter().map(|p| (p.i, p.j, -p.value)),
        )
        .unwrap();
        assert_eq!(
            greedy_extremal_subsets(&e, Direction::Min).masks,
            greedy_extremal_subsets(&neg, Direction::Max).masks
        );
    }

    #[test]
    fn seed_stride_is_configurable() {
        let s = PlayerSpace::new(3, 3).unwrap();
        let e = random_explanation(s, 4, true);
        let all = greedy_extremal_subsets(&e, Direction::Max);
        let half = greedy_extremal_subsets_with(&e, Direction::Max, GreedyOptions { seed_stride: Some(2) });
        for k in 0..=6 {
            assert!(half.values[k] <= all.values[k] + 1e-12);
        }
    }
}
