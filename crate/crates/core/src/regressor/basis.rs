use crate::error::{Error, Result};
use crate::space::PlayerSpace;

/// Which pair terms an explanation may carry. The constant and every single
/// token are always part of the basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisKind {
    /// Every pair.
    Full,
    /// No pairs at all.
    FirstOrder,
    /// Pairs among the listed members only (sorted, distinct).
    Clique { members: Vec<usize> },
    /// Image–text pairs only.
    CrossModal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisSpec {
    space: PlayerSpace,
    kind: BasisKind,
    pairs: Vec<(usize, usize)>,
}

/// Smallest allowed clique: the text side alone takes at least five tokens.
pub const MIN_TEXT_CLIQUE: usize = 5;

impl BasisSpec {
    pub fn full(space: PlayerSpace) -> Self {
        let n = space.size();
        let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        Self {
            space,
            kind: BasisKind::Full,
            pairs,
        }
    }

    pub fn first_order(space: PlayerSpace) -> Self {
        Self {
            space,
            kind: BasisKind::FirstOrder,
            pairs: Vec::new(),
        }
    }

    pub fn cross_modal(space: PlayerSpace) -> Self {
        let pairs = space
            .image_range()
            .flat_map(|i| space.text_range().map(move |j| (i, j)))
            .collect();
        Self {
            space,
            kind: BasisKind::CrossModal,
            pairs,
        }
    }

    pub fn clique(space: PlayerSpace, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&bad) = members.iter().find(|&&m| m >= space.size()) {
            return Err(Error::InvalidArgument(format!("clique member {bad} outside {} players", space.size())));
        }
        let pairs = members
            .iter()
            .enumerate()
            .flat_map(|(a, &i)| members[a + 1..].iter().map(move |&j| (i, j)))
            .collect();
        Ok(Self {
            space,
            kind: BasisKind::Clique { members },
            pairs,
        })
    }

    pub fn space(&self) -> PlayerSpace {
        self.space
    }

    pub fn kind(&self) -> &BasisKind {
        &self.kind
    }

    /// Pair terms in `(i, j)` lexicographic order with `i < j`.
    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    /// Number of coefficients: constant, singles and pairs.
    pub fn size(&self) -> usize {
        1 + self.space.size() + self.pairs.len()
    }

    pub fn contains_pair(&self, i: usize, j: usize) -> bool {
        let key = if i < j { (i, j) } else { (j, i) };
        self.pairs.binary_search(&key).is_ok()
    }

    /// Short label used in artifacts and on the command line.
    pub fn label(&self) -> String {
        match &self.kind {
            BasisKind::Full => "full".into(),
            BasisKind::FirstOrder => "first-order".into(),
            BasisKind::Clique { members } => format!("clique:{}", members.len()),
            BasisKind::CrossModal => "cross-modal".into(),
        }
    }
}

/// Picks the `k` tokens with the largest absolute first-order attribution,
/// split across modalities as
///
/// ```text
/// k_T = max(5, ⌈k · n_T / (n_I + n_T)⌉),   k_I = k - k_T
/// ```
///
/// Ties go to the lower token index. When a modality has fewer tokens than
/// its share, the shortfall is handed to the other modality.
pub fn select_clique(first_order: &[f64], space: PlayerSpace, k: usize) -> Result<BasisSpec> {
    let n = space.size();
    if first_order.len() != n {
        return Err(Error::LengthMismatch {
            what: "first-order attributions",
            expected: n,
            actual: first_order.len(),
        });
    }
    if k <= MIN_TEXT_CLIQUE {
        return Err(Error::InvalidArgument(format!(
            "clique size must exceed {MIN_TEXT_CLIQUE}, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!("clique size {k} exceeds {n} players")));
    }
    let (k_image, k_text) = clique_split(&space, k);

    let top = |range: std::ops::Range<usize>, count: usize| {
        let mut idx: Vec<usize> = range.collect();
        idx.sort_by(|&a, &b| {
            first_order[b]
                .abs()
                .partial_cmp(&first_order[a].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        idx.truncate(count);
        idx
    };
    let mut members = top(space.image_range(), k_image);
    members.extend(top(space.text_range(), k_text));
    BasisSpec::clique(space, members)
}

/// `(k_I, k_T)` for a clique of size `k <= n`.
pub fn clique_split(space: &PlayerSpace, k: usize) -> (usize, usize) {
    let wanted_text = MIN_TEXT_CLIQUE.max((k * space.n_text).div_ceil(space.size()));
    let text = wanted_text.min(space.n_text).min(k);
    let image = (k - text).min(space.n_image);
    let text = (k - image).min(space.n_text);
    (image, text)
}
