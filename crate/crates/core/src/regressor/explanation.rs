use serde::{Deserialize, Serialize};

use super::basis::{BasisKind, BasisSpec};
use super::kernel::{Boundary, Kernel};
use crate::error::{Error, Result};
use crate::exact::ExactExplanation;
use crate::game::{GameOracle, TwoAdditiveGame};
use crate::space::{Mask, PlayerSpace};

/// Version of the explanation JSON layout.
pub const EXPLANATION_SCHEMA_VERSION: u32 = 1;

/// What the fit saw and how it solved.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Weighted mean squared residual over the rows that entered the objective.
    pub residual_mse: f64,
    pub condition_estimate: f64,
    pub samples: usize,
    pub distinct_masks: usize,
    pub solver: String,
}

/// An order-2 explanation: constant, per-token values and pair values over
/// a declared basis. Pairs outside the basis are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    basis: BasisSpec,
    kernel: Kernel,
    surrogate: TwoAdditiveGame,
    diagnostics: FitDiagnostics,
    exact: bool,
}

impl Explanation {
    /// Builds an explanation from explicit values. Basis pairs that are not
    /// listed get zero; listing a pair outside the basis is an error.
    pub fn from_values(
        basis: BasisSpec,
        kernel: Kernel,
        constant: f64,
        singles: Vec<f64>,
        pairs: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let given = TwoAdditiveGame::new(basis.space(), constant, singles, pairs)?;
        if let Some(p) = given.pairs().iter().find(|p| !basis.contains_pair(p.i, p.j)) {
            return Err(Error::InvalidArgument(format!(
                "pair ({}, {}) is outside the {} basis",
                p.i,
                p.j,
                basis.label()
            )));
        }
        let full: Vec<(usize, usize, f64)> = basis
            .pairs()
            .iter()
            .map(|&(i, j)| (i, j, given.pair_value(i, j)))
            .collect();
        let surrogate = TwoAdditiveGame::new(basis.space(), constant, given.singles().to_vec(), full)?;
        Ok(Self {
            basis,
            kernel,
            surrogate,
            diagnostics: FitDiagnostics::default(),
            exact: false,
        })
    }

    /// Wraps an exact solution; `faithfulness` is its `F_p`.
    pub fn from_exact(exact: &ExactExplanation, faithfulness: f64) -> Self {
        let space = exact.surrogate.space();
        Self {
            basis: BasisSpec::full(space),
            kernel: Kernel::WeightedBanzhaf { p: exact.p },
            surrogate: exact.surrogate.clone(),
            diagnostics: FitDiagnostics {
                residual_mse: faithfulness,
                condition_estimate: 0.0,
                samples: 1usize << space.size(),
                distinct_masks: 1usize << space.size(),
                solver: "exact-enumeration".into(),
            },
            exact: true,
        }
    }

    pub(crate) fn with_diagnostics(mut self, diagnostics: FitDiagnostics) -> Self {
        self.diagnostics = diagnostics;
        self
    }

    pub fn space(&self) -> PlayerSpace {
        self.basis.space()
    }

    pub fn basis(&self) -> &BasisSpec {
        &self.basis
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn p(&self) -> Option<f64> {
        self.kernel.p()
    }

    pub fn constant(&self) -> f64 {
        self.surrogate.constant()
    }

    pub fn singles(&self) -> &[f64] {
        self.surrogate.singles()
    }

    /// Value of pair `{i, j}`; zero outside the basis.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        self.surrogate.pair_value(i, j)
    }

    pub fn surrogate(&self) -> &TwoAdditiveGame {
        &self.surrogate
    }

    pub fn diagnostics(&self) -> &FitDiagnostics {
        &self.diagnostics
    }

    pub fn is_exact(&self) -> bool {
        self.exact
    }

    pub fn value(&self, mask: &Mask) -> f64 {
        self.surrogate.value(mask)
    }

    /// Same constant and singles with every pair dropped.
    pub fn without_interactions(&self) -> Self {
        Self {
            basis: BasisSpec::first_order(self.space()),
            kernel: self.kernel,
            surrogate: self.surrogate.without_pairs(),
            diagnostics: self.diagnostics.clone(),
            exact: false,
        }
    }

    pub fn to_file(&self) -> ExplanationFile {
        let clique = match self.basis.kind() {
            BasisKind::Clique { members } => Some(members.clone()),
            _ => None,
        };
        let boundary = match self.kernel {
            Kernel::Shapley { boundary } => Some(boundary),
            Kernel::WeightedBanzhaf { .. } => None,
        };
        ExplanationFile {
            schema_version: EXPLANATION_SCHEMA_VERSION,
            space: self.space(),
            p: self.p(),
            kernel: self.kernel.label().into(),
            boundary,
            basis: self.basis.label(),
            clique,
            exact: self.exact,
            e0: self.constant(),
            singles: self.singles().iter().copied().enumerate().collect(),
            pairs: self.surrogate.pairs().iter().map(|p| (p.i, p.j, p.value)).collect(),
            diagnostics: self.diagnostics.clone(),
        }
    }

    pub fn from_file(file: ExplanationFile) -> Result<Self> {
        if file.schema_version != EXPLANATION_SCHEMA_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported explanation schema version {}",
                file.schema_version
            )));
        }
        let space = PlayerSpace::new(file.space.n_image, file.space.n_text)?;
        let kernel = match (file.kernel.as_str(), file.p) {
            ("wbanzhaf", Some(p)) => Kernel::weighted_banzhaf(p)?,
            ("wbanzhaf", None) => return Err(Error::InvalidArgument("weighted Banzhaf explanation without p".into())),
            ("shapley", _) => Kernel::Shapley {
                boundary: file.boundary.unwrap_or_default(),
            },
            (other, _) => return Err(Error::InvalidArgument(format!("unknown kernel {other:?}"))),
        };
        let basis = match (file.basis.as_str(), file.clique) {
            ("full", _) => BasisSpec::full(space),
            ("first-order", _) => BasisSpec::first_order(space),
            ("cross-modal", _) => BasisSpec::cross_modal(space),
            (label, Some(members)) if label.starts_with("clique:") => BasisSpec::clique(space, members)?,
            (other, _) => return Err(Error::InvalidArgument(format!("unknown basis {other:?}"))),
        };
        let n = space.size();
        let mut singles = vec![0.0; n];
        let mut seen = vec![false; n];
        for (i, v) in file.singles {
            if i >= n || seen[i] {
                return Err(Error::InvalidArgument(format!("bad or repeated single index {i}")));
            }
            seen[i] = true;
            singles[i] = v;
        }
        let mut e = Self::from_values(basis, kernel, file.e0, singles, file.pairs)?;
        e.diagnostics = file.diagnostics;
        e.exact = file.exact;
        Ok(e)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("explanation serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(serde_json::from_str(text)?)
    }
}

impl GameOracle for Explanation {
    fn space(&self) -> PlayerSpace {
        self.basis.space()
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        self.surrogate.evaluate(masks)
    }
}

/// On-disk explanation. Pair entries are `[i, j, value]` with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplanationFile {
    pub schema_version: u32,
    pub space: PlayerSpace,
    pub p: Option<f64>,
    pub kernel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
    pub basis: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clique: Option<Vec<usize>>,
    pub exact: bool,
    pub e0: f64,
    pub singles: Vec<(usize, f64)>,
    pub pairs: Vec<(usize, usize, f64)>,
    pub diagnostics: FitDiagnostics,
}

/// Collapses a weighted Banzhaf explanation to per-token attributions
/// `e_i + p Σ_j e_ij`, which are the weighted Banzhaf values of the surrogate.
pub fn first_order_conversion(e: &Explanation) -> Result<Vec<f64>> {
    let p = match e.kernel() {
        Kernel::WeightedBanzhaf { p } => p,
        Kernel::Shapley { .. } => return Err(Error::UnsupportedConversion),
    };
    let mut out = e.singles().to_vec();
    for pair in e.surrogate().pairs() {
        out[pair.i] += p * pair.value;
        out[pair.j] += p * pair.value;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{exact_fixlip, exact_weighted_banzhaf_values};
    use crate::game::{random_tabulated, tabulate};

    fn space(a: usize, b: usize) -> PlayerSpace {
        PlayerSpace::new(a, b).unwrap()
    }

    #[test]
    fn conversion_direct_formula() {
        let s = space(1, 2);
        let wb = Kernel::weighted_banzhaf(0.5).unwrap();
        let e = Explanation::from_values(BasisSpec::full(s), wb, 0.0, vec![1.0, 0.0, 0.0], [(0, 1, 2.0)]).unwrap();
        assert_eq!(first_order_conversion(&e).unwrap(), vec![2.0, 1.0, 0.0]);

        let flat = Explanation::from_values(BasisSpec::full(s), wb, 0.3, vec![1.0, -2.0, 0.5], []).unwrap();
        assert_eq!(first_order_conversion(&flat).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn conversion_rejects_shapley() {
        let s = space(1, 1);
        let e = Explanation::from_values(BasisSpec::full(s), Kernel::shapley(), 0.0, vec![0.0; 2], []).unwrap();
        assert!(matches!(first_order_conversion(&e), Err(Error::UnsupportedConversion)));
    }

    #[test]
    fn conversion_matches_mobius_values_of_surrogate() {
        let s = space(4, 4);
        let g = random_tabulated(s, 21).unwrap();
        let exact = exact_fixlip(&g, 0.7).unwrap();
        let e = Explanation::from_exact(&exact, 0.0);
        let converted = first_order_conversion(&e).unwrap();
        let surrogate_table = tabulate(e.surrogate()).unwrap();
        let reference = exact_weighted_banzhaf_values(&surrogate_table, 0.7).unwrap();
        for (a, b) in converted.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn pairs_outside_basis_rejected() {
        let s = space(2, 2);
        let wb = Kernel::weighted_banzhaf(0.5).unwrap();
        assert!(Explanation::from_values(BasisSpec::cross_modal(s), wb, 0.0, vec![0.0; 4], [(0, 1, 1.0)]).is_err());
        let ok = Explanation::from_values(BasisSpec::cross_modal(s), wb, 0.0, vec![0.0; 4], [(3, 1, 1.0)]).unwrap();
        assert_eq!(ok.pair(1, 3), 1.0);
        assert_eq!(ok.surrogate().pairs().len(), 4);
    }

    #[test]
    fn json_round_trip_and_pair_order() {
        let s = space(2, 3);
        let basis = BasisSpec::clique(s, [4, 0, 2]).unwrap();
        let e = Explanation::from_values(
            basis,
            Kernel::weighted_banzhaf(0.3).unwrap(),
            0.25,
            vec![0.1, 0.2, 0.3, 0.4, 0.5],
            [(4, 2, -1.5), (0, 4, 0.75)],
        )
        .unwrap();
        let text = e.to_json();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["schema_version"], 1);
        assert_eq!(value["basis"], "clique:3");
        for pair in value["pairs"].as_array().unwrap() {
            assert!(pair[0].as_u64().unwrap() < pair[1].as_u64().unwrap());
        }
        let back = Explanation::from_json(&text).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn shapley_json_round_trip() {
        let s = space(1, 2);
        let e = Explanation::from_values(
            BasisSpec::first_order(s),
            Kernel::Shapley {
                boundary: Boundary::LargeWeight,
            },
            1.0,
            vec![1.0, 2.0, 3.0],
            [],
        )
        .unwrap();
        let text = e.to_json();
        assert!(text.contains("\"large-weight\""));
        assert_eq!(Explanation::from_json(&text).unwrap(), e);
    }

    #[test]
    fn evaluates_like_its_surrogate() {
        let s = space(2, 3);
        let wb = Kernel::weighted_banzhaf(0.5).unwrap();
        let pairs: Vec<_> = s
            .image_range()
            .flat_map(|i| s.text_range().map(move |j| (i, j, 1.0)))
            .collect();
        let e = Explanation::from_values(BasisSpec::cross_modal(s), wb, 0.0, vec![0.0; 5], pairs).unwrap();
        assert_eq!(e.value(&s.full_mask()), 6.0);
        assert_eq!(e.without_interactions().value(&s.full_mask()), 0.0);
    }
}
