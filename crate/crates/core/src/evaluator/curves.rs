use std::io::Write;

use super::greedy::{greedy_extremal_subsets_with, Direction, ExtremalSubsets, GreedyOptions};
use crate::error::{Error, Result};
use crate::game::GameOracle;
use crate::regressor::Explanation;

/// Points of the fixed `[0, 1]` grid curves are resampled on.
pub const CURVE_GRID_POINTS: usize = 51;

/// Version tag written at the top of curve CSV files.
pub const CURVES_SCHEMA_VERSION: u32 = 1;

/// Insertion and deletion curves of an explanation against a game.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSet {
    /// Point `k = 1..=n`: game value of the best subset of size `k`.
    pub insertion: Vec<f64>,
    /// Point `k = 1..=n`: game value of the worst subset of size `n - k`.
    pub deletion: Vec<f64>,
    pub empty_value: f64,
    pub full_value: f64,
    /// `Σ_k ν(best_k) - ν(worst_k)` over `k = 1..=n`.
    pub aid: f64,
    pub best: ExtremalSubsets,
    pub worst: ExtremalSubsets,
}

/// Evenly spaced fractions `0, 1/50, …, 1`.
pub fn grid_fractions() -> Vec<f64> {
    (0..CURVE_GRID_POINTS)
        .map(|j| j as f64 / (CURVE_GRID_POINTS - 1) as f64)
        .collect()
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`; `xs` increasing.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let hi = xs.partition_point(|&v| v < x).min(xs.len() - 1);
    if hi == 0 || xs[hi] == x {
        return ys[hi];
    }
    let lo = hi - 1;
    let t = (x - xs[lo]) / (xs[hi] - xs[lo]);
    ys[lo] + t * (ys[hi] - ys[lo])
}

impl CurveSet {
    pub fn len(&self) -> usize {
        self.insertion.len()
    }

    pub fn is_empty(&self) -> bool {
        self.insertion.is_empty()
    }

    /// Raw curves resampled on the grid. The `k = 0` point is prepended:
    /// the empty set for insertion and the full set for deletion.
    pub fn raw_grid(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.len();
        let xs: Vec<f64> = (0..=n).map(|k| k as f64 / n as f64).collect();
        let ins: Vec<f64> = std::iter::once(self.empty_value).chain(self.insertion.iter().copied()).collect();
        let del: Vec<f64> = std::iter::once(self.full_value).chain(self.deletion.iter().copied()).collect();
        let grid = grid_fractions();
        (
            grid.iter().map(|&x| interpolate(&xs, &ins, x)).collect(),
            grid.iter().map(|&x| interpolate(&xs, &del, x)).collect(),
        )
    }

    /// Grid curves mapped so the full set scores 1 and the empty set 0.
    pub fn normalized(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let span = self.full_value - self.empty_value;
        if span == 0.0 {
            return Err(Error::NormalizationDegenerate(self.full_value));
        }
        let (ins, del) = self.raw_grid();
        let norm = |v: Vec<f64>| v.into_iter().map(|x| (x - self.empty_value) / span).collect();
        Ok((norm(ins), norm(del)))
    }

    /// CSV with columns `fraction, insertion_raw, deletion_raw,
    /// insertion_norm, deletion_norm`; normalized cells are left empty when
    /// normalization is degenerate.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let (ins, del) = self.raw_grid();
        let norm = self.normalized().ok();
        writeln!(out, "# curves schema_version={CURVES_SCHEMA_VERSION}")?;
        writeln!(out, "fraction,insertion_raw,deletion_raw,insertion_norm,deletion_norm")?;
        for (j, x) in grid_fractions().into_iter().enumerate() {
            match &norm {
                Some((ni, nd)) => writeln!(out, "{x},{},{},{},{}", ins[j], del[j], ni[j], nd[j])?,
                None => writeln!(out, "{x},{},{},,", ins[j], del[j])?,
            }
        }
        Ok(())
    }
}

pub fn insertion_deletion(e: &Explanation, nu: &dyn GameOracle) -> Result<CurveSet> {
    insertion_deletion_with(e, nu, GreedyOptions::default())
}

/// Insertion/deletion curves from the greedy extremal subsets of `e`,
/// evaluated on the game in one batch.
pub fn insertion_deletion_with(e: &Explanation, nu: &dyn GameOracle, options: GreedyOptions) -> Result<CurveSet> {
    e.space().ensure_same(&nu.space())?;
    let n = e.space().size();
    let best = greedy_extremal_subsets_with(e, Direction::Max, options);
    let worst = greedy_extremal_subsets_with(e, Direction::Min, options);
    let mut masks = best.masks.clone();
    masks.extend(worst.masks.iter().cloned());
    let values = nu.evaluate(&masks)?;
    let (best_values, worst_values) = values.split_at(n + 1);
    let empty_value = best_values[0];
    let full_value = best_values[n];
    let insertion = best_values[1..].to_vec();
    let deletion = (1..=n).map(|k| worst_values[n - k]).collect();
    let aid = (1..=n).map(|k| best_values[k] - worst_values[k]).sum();
    Ok(CurveSet {
        insertion,
        deletion,
        empty_value,
        full_value,
        aid,
        best,
        worst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{FnGame, TwoAdditiveGame};
    use crate::regressor::{BasisSpec, Kernel};
    use crate::space::{Mask, PlayerSpace};

    #[test]
    fn grid_has_51_points() {
        let g = grid_fractions();
        assert_eq!(g.len(), 51);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[50], 1.0);
        assert!((g[25] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn interpolation_is_exact_at_knots_and_linear_between() {
        let xs = [0.0, 0.25, 0.5, 1.0];
        let ys = [1.0, 3.0, -1.0, 0.0];
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(interpolate(&xs, &ys, *x), *y);
        }
        assert!((interpolate(&xs, &ys, 0.125) - 2.0).abs() < 1e-15);
        assert!((interpolate(&xs, &ys, 0.75) + 0.5).abs() < 1e-15);
        assert_eq!(interpolate(&xs, &[2.0; 4], 0.3), 2.0);
    }

    #[test]
    fn additive_explanation_on_additive_game() {
        let s = PlayerSpace::new(3, 3).unwrap();
        let w = vec![0.5, -1.0, 2.0, 0.25, -0.75, 1.5];
        let game = TwoAdditiveGame::new(s, 0.0, w.clone(), []).unwrap();
        let e = Explanation::from_values(BasisSpec::first_order(s), Kernel::weighted_banzhaf(0.5).unwrap(), 0.0, w.clone(), [])
            .unwrap();
        let curves = insertion_deletion(&e, &game).unwrap();

        let mut sorted = w.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        let prefix: Vec<f64> = (1..=6).map(|k| sorted[..k].iter().sum()).collect();
        let suffix: Vec<f64> = (1..=6).map(|k| sorted[6 - k..].iter().sum()).collect();
        for k in 0..6 {
            assert!((curves.insertion[k] - prefix[k]).abs() < 1e-12);
        }
        let aid: f64 = (0..6).map(|k| prefix[k] - suffix[k]).sum();
        assert!((curves.aid - aid).abs() < 1e-12);
        // deletion at k keeps the worst n-k tokens, i.e. the complement of the best k
        for k in 1..6 {
            assert_eq!(curves.worst.masks[6 - k], curves.best.masks[k].complement());
        }
    }

    #[test]
    fn degenerate_normalization_keeps_raw_curves() {
        let s = PlayerSpace::new(1, 2).unwrap();
        let game = FnGame::new(s, |m: &Mask| if m.count() == 1 { 1.0 } else { 0.0 });
        let e = Explanation::from_values(BasisSpec::first_order(s), Kernel::shapley(), 0.0, vec![1.0, 2.0, 3.0], []).unwrap();
        let curves = insertion_deletion(&e, &game).unwrap();
        assert_eq!(curves.insertion, vec![1.0, 0.0, 0.0]);
        assert!(matches!(curves.normalized(), Err(Error::NormalizationDegenerate(v)) if v == 0.0));
        let mut csv = Vec::new();
        curves.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().count(), 53);
        assert!(text.lines().nth(2).unwrap().ends_with(",,"));
    }

    #[test]
    fn normalized_anchors() {
        let s = PlayerSpace::new(2, 2).unwrap();
        let w = vec![1.0, 2.0, -0.5, 0.5];
        let game = TwoAdditiveGame::new(s, 1.0, w.clone(), []).unwrap();
        let e = Explanation::from_values(BasisSpec::first_order(s), Kernel::shapley(), 0.0, w, []).unwrap();
        let (ins, del) = insertion_deletion(&e, &game).unwrap().normalized().unwrap();
        assert_eq!(ins[0], 0.0);
        assert_eq!(ins[50], 1.0);
        assert_eq!(del[0], 1.0);
        assert_eq!(del[50], 0.0);
        // leaving out the negative token pushes insertion above 100%
        assert!(ins.iter().any(|&v| v > 1.0));
    }
}
