use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Result};

/// How the Shapley kernel treats the empty and the full mask, whose kernel
/// weight is infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Exact equality constraints `ν̂(∅) = ν(∅)` and `ν̂(N) = ν(N)`.
    #[default]
    Constrained,
    /// Ordinary rows carrying [`LARGE_BOUNDARY_WEIGHT`] times the largest
    /// interior weight.
    LargeWeight,
}

/// Relative weight of boundary rows under [`Boundary::LargeWeight`].
pub const LARGE_BOUNDARY_WEIGHT: f64 = 1e6;

/// Objective that an explanation is fitted against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// Masks weighted by `P_p`. With sampled batches the sampling itself
    /// realizes the weighting and rows are uniform.
    WeightedBanzhaf { p: f64 },
    /// Shapley kernel over mask sizes; rows always carry explicit weights.
    Shapley { boundary: Boundary },
}

impl Kernel {
    pub fn weighted_banzhaf(p: f64) -> Result<Self> {
        check_probability(p)?;
        Ok(Kernel::WeightedBanzhaf { p })
    }

    pub fn shapley() -> Self {
        Kernel::Shapley {
            boundary: Boundary::Constrained,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Kernel::WeightedBanzhaf { .. } => "wbanzhaf",
            Kernel::Shapley { .. } => "shapley",
        }
    }

    /// Masking probability, for weighted Banzhaf kernels.
    pub fn p(&self) -> Option<f64> {
        match *self {
            Kernel::WeightedBanzhaf { p } => Some(p),
            Kernel::Shapley { .. } => None,
        }
    }
}

/// Kernel weight of a mask of a given size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelWeight {
    Finite(f64),
    /// The empty and the full mask: enforced as constraints, not weighted.
    Constraint,
}

/// Shapley kernel `(n-1) / (C(n,s) · s · (n-s))` for `0 < s < n`.
pub fn shapley_kernel_weight(s: usize, n: usize) -> KernelWeight {
    assert!(s <= n, "mask size {s} exceeds {n} players");
    if s == 0 || s == n {
        return KernelWeight::Constraint;
    }
    let log_binom = ln_binomial(n, s);
    let w = ((n - 1) as f64).ln() - log_binom - (s as f64).ln() - ((n - s) as f64).ln();
    KernelWeight::Finite(w.exp())
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `p^s (1-p)^{n-s}`.
pub fn banzhaf_weight(s: usize, n: usize, p: f64) -> f64 {
    p.powi(s as i32) * (1.0 - p).powi((n - s) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finite(s: usize, n: usize) -> f64 {
        match shapley_kernel_weight(s, n) {
            KernelWeight::Finite(w) => w,
            KernelWeight::Constraint => panic!("boundary at s={s}"),
        }
    }

    #[test]
    fn boundary_sizes_are_constraints() {
        assert_eq!(shapley_kernel_weight(0, 6), KernelWeight::Constraint);
        assert_eq!(shapley_kernel_weight(6, 6), KernelWeight::Constraint);
    }

    #[test]
    fn small_n_values() {
        // n = 4: s=1 → 3/(4·1·3) = 1/4, s=2 → 3/(6·2·2) = 1/8
        assert!((finite(1, 4) - 0.25).abs() < 1e-15);
        assert!((finite(2, 4) - 0.125).abs() < 1e-15);
        assert!((finite(3, 4) - finite(1, 4)).abs() < 1e-15);
    }

    #[test]
    fn mirror_symmetric_with_minimum_at_half() {
        for n in [4, 8, 12, 30] {
            for s in 1..n {
                let a = finite(s, n);
                assert!(a > 0.0);
                assert!((a - finite(n - s, n)).abs() <= 1e-12 * a);
                assert!(a >= finite(n / 2, n) * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn large_n_stays_finite() {
        let w = finite(113, 226);
        assert!(w > 0.0 && w.is_finite());
    }

    #[test]
    fn kernel_labels() {
        assert_eq!(Kernel::weighted_banzhaf(0.3).unwrap().p(), Some(0.3));
        assert!(Kernel::weighted_banzhaf(1.0).is_err());
        assert_eq!(Kernel::shapley().label(), "shapley");
        assert_eq!(Kernel::shapley().p(), None);
    }
}
