use rand::Rng;

use super::{GameOracle, TabulatedGame, TwoAdditiveGame};
use crate::error::Result;
use crate::rng;
use crate::space::PlayerSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomGameKind {
    Tabulated,
    TwoAdditive,
}

/// Table of i.i.d. values uniform in `[-1, 1]`.
pub fn random_tabulated(space: PlayerSpace, seed: u64) -> Result<TabulatedGame> {
    super::tabulated::check_guard(&space)?;
    let mut rng = rng::stream(seed, "random-tabulated");
    let values = (0..1usize << space.size()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    TabulatedGame::new(space, values)
}

/// Full 2-additive game with every coefficient uniform in `[-1, 1]`.
///
/// Draw order: constant, singles by index, then pairs in `(i, j)` order.
pub fn random_two_additive(space: PlayerSpace, seed: u64) -> TwoAdditiveGame {
    let n = space.size();
    let mut rng = rng::stream(seed, "random-two-additive");
    let constant = rng.gen_range(-1.0..=1.0);
    let singles = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let mut pairs = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j, rng.gen_range(-1.0..=1.0)));
        }
    }
    TwoAdditiveGame::new(space, constant, singles, pairs).expect("generated pairs are valid")
}

pub fn make_random_game(space: PlayerSpace, kind: RandomGameKind, seed: u64) -> Result<Box<dyn GameOracle>> {
    Ok(match kind {
        RandomGameKind::Tabulated => Box::new(random_tabulated(space, seed)?),
        RandomGameKind::TwoAdditive => Box::new(random_two_additive(space, seed)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::exact::mobius;
    use crate::game::tabulate;

    #[test]
    fn tabulated_is_seed_deterministic() {
        let s = PlayerSpace::new(2, 2).unwrap();
        assert_eq!(random_tabulated(s, 7).unwrap(), random_tabulated(s, 7).unwrap());
        assert_ne!(random_tabulated(s, 7).unwrap(), random_tabulated(s, 8).unwrap());
    }

    #[test]
    fn tabulated_values_are_finite_and_bounded() {
        let g = random_tabulated(PlayerSpace::new(2, 1).unwrap(), 3).unwrap();
        assert_eq!(g.values().len(), 8);
        assert!(g.values().iter().all(|v| v.is_finite() && v.abs() <= 1.0));
    }

    #[test]
    fn two_additive_has_no_higher_order_mobius_terms() {
        let s = PlayerSpace::new(3, 3).unwrap();
        let g = make_random_game(s, RandomGameKind::TwoAdditive, 1).unwrap();
        let a = mobius(&tabulate(g.as_ref()).unwrap()).unwrap();
        for (subset, coef) in a.coefficients().iter().enumerate() {
            if subset.count_ones() > 2 {
                assert!(coef.abs() < 1e-12, "subset {subset:b} has {coef}");
            }
        }
    }

    #[test]
    fn tabulated_guard() {
        let s = PlayerSpace::new(20, 5).unwrap();
        assert!(matches!(
            make_random_game(s, RandomGameKind::Tabulated, 0),
            Err(Error::EnumerationGuard { .. })
        ));
    }
}
