//! Enumeration-based ground truth.
//!
//! Everything here walks all `2^n` masks of a [`TabulatedGame`] and is
//! therefore limited to [`ENUMERATION_LIMIT`](crate::game::ENUMERATION_LIMIT)
//! players. Subsets are addressed by their bit pattern (image tokens in the
//! low bits).

use nalgebra::{DMatrix, DVector};

use crate::error::{check_probability, Result};
use crate::game::{tabulate, GameOracle, TabulatedGame, TwoAdditiveGame};
use crate::space::PlayerSpace;

/// Möbius coefficients `a(S)` of a game, indexed by subset bits.
#[derive(Debug, Clone, PartialEq)]
pub struct MobiusTransform {
    space: PlayerSpace,
    coefficients: Vec<f64>,
}

impl MobiusTransform {
    pub fn space(&self) -> PlayerSpace {
        self.space
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficient(&self, subset: u64) -> f64 {
        self.coefficients[subset as usize]
    }

    /// Rebuilds the game through `ν(M) = Σ_{L⊆M} a(L)`.
    pub fn reconstruct(&self) -> Result<TabulatedGame> {
        let mut values = self.coefficients.clone();
        for bit in 0..self.space.size() {
            let step = 1usize << bit;
            for m in 0..values.len() {
                if m & step != 0 {
                    values[m] += values[m ^ step];
                }
            }
        }
        TabulatedGame::new(self.space, values)
    }
}

/// `a(M) = Σ_{L⊆M} (-1)^{|M|-|L|} ν(L)` via the fast subset transform.
pub fn mobius(game: &TabulatedGame) -> Result<MobiusTransform> {
    let space = game.space();
    let mut coefficients = game.values().to_vec();
    for bit in 0..space.size() {
        let step = 1usize << bit;
        for m in 0..coefficients.len() {
            if m & step != 0 {
                coefficients[m] -= coefficients[m ^ step];
            }
        }
    }
    Ok(MobiusTransform { space, coefficients })
}

/// Weight `p^{|M|} (1-p)^{n-|M|}` of every mask, indexed by bits.
pub fn mask_weights(n: usize, p: f64) -> Vec<f64> {
    let per_size: Vec<f64> = (0..=n)
        .map(|s| p.powi(s as i32) * (1.0 - p).powi((n - s) as i32))
        .collect();
    (0..1u64 << n).map(|m| per_size[m.count_ones() as usize]).collect()
}

/// The optimal order-2 explanation of a game under the `P_p` weighting.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactExplanation {
    pub p: f64,
    pub surrogate: TwoAdditiveGame,
}

impl ExactExplanation {
    pub fn basis_size(&self) -> usize {
        self.surrogate.space().full_basis_size()
    }
}

/// Basis of constant, singles and pairs as subset bit patterns, in the
/// canonical order used by every solver: `∅`, `{0}..{n-1}`, then `{i,j}` with
/// `i < j` in lexicographic order.
pub(crate) fn full_basis_subsets(n: usize) -> Vec<u64> {
    let mut out = Vec::with_capacity(1 + n + n * (n - 1) / 2);
    out.push(0);
    out.extend((0..n).map(|i| 1u64 << i));
    for i in 0..n {
        for j in i + 1..n {
            out.push((1u64 << i) | (1u64 << j));
        }
    }
    out
}

fn superset_sums(values: &mut [f64], n: usize) {
    for bit in 0..n {
        let step = 1usize << bit;
        for m in 0..values.len() {
            if m & step == 0 {
                values[m] += values[m | step];
            }
        }
    }
}

/// Exact FIxLIP-p: minimizes `F_p(ν, ν̂_e)` over all order-2 explanations.
///
/// The normal equations are assembled from explicit per-mask weights: with
/// design features `x_A(M) = [A ⊆ M]`, the Gram entry for basis elements
/// `A, B` is `Σ_{M ⊇ A∪B} w(M)` and the right-hand side is
/// `Σ_{M ⊇ A} w(M) ν(M)`. Both are read off superset-sum transforms of the
/// weight table, so assembly costs `O(n 2^n)` instead of `O(|B|^2 2^n)`.
pub fn exact_fixlip(game: &TabulatedGame, p: f64) -> Result<ExactExplanation> {
    check_probability(p)?;
    let space = game.space();
    let n = space.size();

    let mut weight_sums = mask_weights(n, p);
    let mut value_sums: Vec<f64> = weight_sums.iter().zip(game.values()).map(|(w, v)| w * v).collect();
    superset_sums(&mut weight_sums, n);
    superset_sums(&mut value_sums, n);

    let basis = full_basis_subsets(n);
    let d = basis.len();
    let gram = DMatrix::from_fn(d, d, |a, b| weight_sums[(basis[a] | basis[b]) as usize]);
    let rhs = DVector::from_iterator(d, basis.iter().map(|&s| value_sums[s as usize]));
    let coef = gram
        .cholesky()
        .expect("full enumeration with positive weights yields a positive definite Gram matrix")
        .solve(&rhs);

    let singles = coef.as_slice()[1..=n].to_vec();
    let mut pairs = Vec::with_capacity(d - 1 - n);
    let mut k = n + 1;
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j, coef[k]));
            k += 1;
        }
    }
    Ok(ExactExplanation {
        p,
        surrogate: TwoAdditiveGame::new(space, coef[0], singles, pairs)?,
    })
}

/// Weighted Banzhaf values `φ_i = Σ_{M∋i} p^{|M|-1} a(M)`.
pub fn exact_weighted_banzhaf_values(game: &TabulatedGame, p: f64) -> Result<Vec<f64>> {
    check_probability(p)?;
    let a = mobius(game)?;
    let n = game.space().size();
    let powers: Vec<f64> = (0..=n as i32).map(|k| p.powi(k)).collect();
    let mut values = vec![0.0; n];
    for (subset, &coef) in a.coefficients().iter().enumerate() {
        if subset == 0 || coef == 0.0 {
            continue;
        }
        let weight = powers[subset.count_ones() as usize - 1] * coef;
        let mut bits = subset;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            values[i] += weight;
            bits &= bits - 1;
        }
    }
    Ok(values)
}

/// `F_p(ν, ν̂) = Σ_M p^{|M|} (1-p)^{n-|M|} (ν(M) - ν̂(M))^2`.
pub fn exact_p_faithfulness(nu: &TabulatedGame, nu_hat: &dyn GameOracle, p: f64) -> Result<f64> {
    check_probability(p)?;
    nu.space().ensure_same(&nu_hat.space())?;
    let approx = tabulate(nu_hat)?;
    let weights = mask_weights(nu.space().size(), p);
    Ok(nu
        .values()
        .iter()
        .zip(approx.values())
        .zip(&weights)
        .map(|((a, b), w)| w * (a - b) * (a - b))
        .sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::game::{random_tabulated, random_two_additive};

    fn space(a: usize, b: usize) -> PlayerSpace {
        PlayerSpace::new(a, b).unwrap()
    }

    #[test]
    fn mobius_of_constant_game() {
        let g = TabulatedGame::from_fn(space(2, 2), |_| 3.5).unwrap();
        let a = mobius(&g).unwrap();
        assert_eq!(a.coefficient(0), 3.5);
        assert!(a.coefficients()[1..].iter().all(|&c| c == 0.0));
    }

    #[test]
    fn mobius_of_additive_game() {
        let w = [0.5, -1.0, 2.0, 0.25];
        let g = TabulatedGame::from_fn(space(2, 2), |m| (0..4).filter(|i| m >> i & 1 == 1).map(|i| w[i]).sum()).unwrap();
        let a = mobius(&g).unwrap();
        assert_eq!(a.coefficient(0), 0.0);
        for i in 0..4 {
            assert!((a.coefficient(1 << i) - w[i]).abs() < 1e-12);
        }
        for s in 0..16u64 {
            if s.count_ones() >= 2 {
                assert!(a.coefficient(s).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mobius_matches_alternating_sum() {
        let g = random_tabulated(space(1, 2), 21).unwrap();
        let a = mobius(&g).unwrap();
        // Direct inclusion-exclusion per subset.
        for m in 0..8u64 {
            let mut total = 0.0;
            for l in 0..8u64 {
                if l & !m == 0 {
                    let sign = if (m.count_ones() - l.count_ones()) % 2 == 0 { 1.0 } else { -1.0 };
                    total += sign * g.value_at(l);
                }
            }
            assert!((a.coefficient(m) - total).abs() < 1e-12);
        }
    }

    #[test]
    fn mobius_zeta_inverse_pair() {
        for (seed, (a, b)) in [(1u64, (3, 3)), (2, (5, 7)), (3, (6, 6))] {
            let g = random_tabulated(space(a, b), seed).unwrap();
            let back = mobius(&g).unwrap().reconstruct().unwrap();
            for (x, y) in g.values().iter().zip(back.values()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fixlip_reproduces_two_additive_games() {
        let s = space(2, 3);
        let truth = random_two_additive(s, 8);
        let table = tabulate(&truth).unwrap();
        for p in [0.2, 0.5, 0.9] {
            let e = exact_fixlip(&table, p).unwrap();
            assert!((e.surrogate.constant() - truth.constant()).abs() < 1e-10);
            for (x, y) in e.surrogate.singles().iter().zip(truth.singles()) {
                assert!((x - y).abs() < 1e-10);
            }
            for (x, y) in e.surrogate.pairs().iter().zip(truth.pairs()) {
                assert!((x.value - y.value).abs() < 1e-10);
            }
            assert!(exact_p_faithfulness(&table, &e.surrogate, p).unwrap() < 1e-20);
        }
    }

    #[test]
    fn fixlip_depends_on_p() {
        let g = random_tabulated(space(2, 2), 4).unwrap();
        let a = exact_fixlip(&g, 0.3).unwrap();
        let b = exact_fixlip(&g, 0.7).unwrap();
        let diff: f64 = a
            .surrogate
            .pairs()
            .iter()
            .zip(b.surrogate.pairs())
            .map(|(x, y)| (x.value - y.value).abs())
            .sum();
        assert!(diff > 1e-3);
    }

    #[test]
    fn rejects_closed_interval_endpoints() {
        let g = random_tabulated(space(1, 1), 0).unwrap();
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(exact_fixlip(&g, p), Err(Error::InvalidProbability(_))));
            assert!(exact_weighted_banzhaf_values(&g, p).is_err());
        }
    }

    #[test]
    fn banzhaf_of_additive_game_is_weight() {
        let w = [0.5, -1.0, 2.0];
        let g = TabulatedGame::from_fn(space(1, 2), |m| (0..3).filter(|i| m >> i & 1 == 1).map(|i| w[i]).sum()).unwrap();
        for p in [0.1, 0.5, 0.8] {
            let phi = exact_weighted_banzhaf_values(&g, p).unwrap();
            for i in 0..3 {
                assert!((phi[i] - w[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn banzhaf_of_single_pair_game() {
        let s = space(1, 2);
        let g = TwoAdditiveGame::new(s, 0.0, vec![1.0, 0.0, 0.0], [(0, 1, 2.0)]).unwrap();
        let phi = exact_weighted_banzhaf_values(&tabulate(&g).unwrap(), 0.5).unwrap();
        assert!((phi[0] - 2.0).abs() < 1e-12);
        assert!((phi[1] - 1.0).abs() < 1e-12);
        assert!(phi[2].abs() < 1e-12);
    }

    #[test]
    fn faithfulness_single_player_by_hand() {
        // n = 1 is not a valid two-modality space, so pad with a dummy text
        // token whose presence never changes ν or ν̂.
        let s = space(1, 1);
        let nu = TabulatedGame::new(s, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let zero = TwoAdditiveGame::zero(s);
        assert!((exact_p_faithfulness(&nu, &zero, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(exact_p_faithfulness(&nu, &nu, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn faithfulness_matches_direct_summation() {
        let s = space(1, 2);
        let nu = random_tabulated(s, 1).unwrap();
        let hat = random_tabulated(s, 2).unwrap();
        let p: f64 = 0.3;
        let mut expect = 0.0;
        for m in 0..8u64 {
            let k = m.count_ones() as i32;
            let r = nu.value_at(m) - hat.value_at(m);
            expect += p.powi(k) * (1.0 - p).powi(3 - k) * r * r;
        }
        assert!((exact_p_faithfulness(&nu, &hat, p).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn faithfulness_space_mismatch() {
        let nu = random_tabulated(space(1, 2), 1).unwrap();
        let hat = random_tabulated(space(2, 1), 2).unwrap();
        assert!(matches!(exact_p_faithfulness(&nu, &hat, 0.5), Err(Error::SpaceMismatch { .. })));
    }
}
