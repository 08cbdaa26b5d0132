//! Players and masks.
//!
//! Players are indexed globally: image tokens occupy `0..n_image` and text
//! tokens `n_image..n_image + n_text`. A [`Mask`] stores player `i` in bit
//! `i % 64` of word `i / 64`, so image tokens always sit in the low bits.
//! For spaces of at most 64 players the first word doubles as the index into
//! a tabulated game.
//!
//! The textual form of a mask is a string of `'0'`/`'1'` characters whose
//! character `i` is player `i` (index 0 leftmost).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Partition of the players into image and text tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlayerSpace {
    pub n_image: usize,
    pub n_text: usize,
}

/// Which modality a player belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modality {
    Image,
    Text,
}

impl PlayerSpace {
    pub fn new(n_image: usize, n_text: usize) -> Result<Self> {
        if n_image == 0 || n_text == 0 {
            return Err(Error::InvalidSpace(format!(
                "both modalities need at least one token (n_image={n_image}, n_text={n_text})"
            )));
        }
        Ok(Self { n_image, n_text })
    }

    /// Total number of players.
    pub fn size(&self) -> usize {
        self.n_image + self.n_text
    }

    pub fn image_range(&self) -> std::ops::Range<usize> {
        0..self.n_image
    }

    pub fn text_range(&self) -> std::ops::Range<usize> {
        self.n_image..self.size()
    }

    pub fn modality(&self, player: usize) -> Modality {
        if player < self.n_image {
            Modality::Image
        } else {
            Modality::Text
        }
    }

    pub fn is_cross_modal(&self, i: usize, j: usize) -> bool {
        self.modality(i) != self.modality(j)
    }

    /// Number of order-2 basis elements: constant, singles and all pairs.
    pub fn full_basis_size(&self) -> usize {
        let n = self.size();
        1 + n + n * (n - 1) / 2
    }

    pub fn ensure_same(&self, other: &PlayerSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    pub fn empty_mask(&self) -> Mask {
        Mask::empty(self.size())
    }

    pub fn full_mask(&self) -> Mask {
        Mask::full(self.size())
    }

    pub fn image_mask(&self) -> Mask {
        Mask::from_indices(self.size(), self.image_range())
    }

    pub fn text_mask(&self) -> Mask {
        Mask::from_indices(self.size(), self.text_range())
    }
}

impl fmt::Display for PlayerSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.n_image, self.n_text)
    }
}

/// Fixed-width set of active players.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Mask {
    width: usize,
    words: Vec<u64>,
}

fn word_count(width: usize) -> usize {
    width.div_ceil(64)
}

impl Mask {
    pub fn empty(width: usize) -> Self {
        Self {
            width,
            words: vec![0; word_count(width)],
        }
    }

    pub fn full(width: usize) -> Self {
        let mut mask = Self::empty(width);
        for w in mask.words.iter_mut() {
            *w = u64::MAX;
        }
        mask.trim();
        mask
    }

    pub fn from_indices(width: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = Self::empty(width);
        for i in indices {
            mask.insert(i);
        }
        mask
    }

    /// Builds a mask from the low `width` bits of `bits` (`width <= 64`).
    pub fn from_bits(width: usize, bits: u64) -> Self {
        assert!(width <= 64, "from_bits supports at most 64 players");
        let mut mask = Self::empty(width);
        if width > 0 {
            mask.words[0] = bits;
            mask.trim();
        }
        mask
    }

    /// Integer index of the mask for spaces of at most 64 players.
    pub fn to_bits(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn contains(&self, i: usize) -> bool {
        i < self.width && (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn insert(&mut self, i: usize) {
        assert!(i < self.width, "player {i} outside mask width {}", self.width);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn remove(&mut self, i: usize) {
        assert!(i < self.width, "player {i} outside mask width {}", self.width);
        self.words[i / 64] &= !(1 << (i % 64));
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn union(&self, other: &Mask) -> Mask {
        assert_eq!(self.width, other.width, "mask width mismatch");
        Mask {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub fn intersection(&self, other: &Mask) -> Mask {
        assert_eq!(self.width, other.width, "mask width mismatch");
        Mask {
            width: self.width,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub fn complement(&self) -> Mask {
        let mut out = Mask {
            width: self.width,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.trim();
        out
    }

    pub fn is_subset(&self, other: &Mask) -> bool {
        self.width == other.width && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    /// Active players in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &word)| {
            let mut w = word;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let bit = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * 64 + bit)
                }
            })
        })
    }

    pub fn to_bitstring(&self) -> String {
        (0..self.width)
            .map(|i| if self.contains(i) { '1' } else { '0' })
            .collect()
    }

    pub fn parse_bitstring(s: &str) -> Result<Mask> {
        let mut mask = Mask::empty(s.len());
        for (i, c) in s.bytes().enumerate() {
            match c {
                b'1' => mask.insert(i),
                b'0' => {}
                _ => {
                    return Err(Error::MalformedBitstring(format!(
                        "unexpected character {:?} at position {i}",
                        c as char
                    )))
                }
            }
        }
        Ok(mask)
    }

    /// Errors unless the mask was built for `space`.
    pub fn check_width(&self, space: &PlayerSpace) -> Result<()> {
        if self.width == space.size() {
            Ok(())
        } else {
            Err(Error::InvalidMask {
                expected: space.size(),
                actual: self.width,
            })
        }
    }

    fn trim(&mut self) {
        let rem = self.width % 64;
        if rem != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Mask({})", self.to_bitstring())
    }
}

impl fmt::Display for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_bitstring())
    }
}

impl Serialize for Mask {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_bitstring())
    }
}

impl<'de> Deserialize<'de> for Mask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Mask::parse_bitstring(&s).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use proptest::prelude::*;

    use super::*;

    #[test]
    fn space_rejects_empty_modality() {
        assert!(PlayerSpace::new(0, 3).is_err());
        assert!(PlayerSpace::new(3, 0).is_err());
        let s = PlayerSpace::new(2, 3).unwrap();
        assert_eq!(s.image_range(), 0..2);
        assert_eq!(s.text_range(), 2..5);
        assert_eq!(s.full_basis_size(), 1 + 5 + 10);
    }

    #[test]
    fn image_tokens_occupy_low_bits() {
        let s = PlayerSpace::new(2, 3).unwrap();
        assert_eq!(s.image_mask().to_bits(), Some(0b00011));
        assert_eq!(s.text_mask().to_bits(), Some(0b11100));
        assert_eq!(s.image_mask().to_bitstring(), "11000");
    }

    #[test]
    fn bitstring_index_zero_is_leftmost() {
        let m = Mask::parse_bitstring("1001").unwrap();
        assert!(m.contains(0) && m.contains(3));
        assert_eq!(m.to_bits(), Some(0b1001));
        assert_eq!(Mask::from_bits(4, 0b0010).to_bitstring(), "0100");
        assert!(Mask::parse_bitstring("10x1").is_err());
    }

    #[test]
    fn wide_masks_span_words() {
        let mut m = Mask::empty(130);
        m.insert(0);
        m.insert(64);
        m.insert(129);
        assert_eq!(m.count(), 3);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![0, 64, 129]);
        assert_eq!(m.complement().count(), 127);
        assert_eq!(Mask::full(130).count(), 130);
        assert_eq!(m.to_bits(), None);
        let back = Mask::parse_bitstring(&m.to_bitstring()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn width_check() {
        let s = PlayerSpace::new(2, 2).unwrap();
        assert!(Mask::empty(4).check_width(&s).is_ok());
        assert!(matches!(
            Mask::empty(5).check_width(&s),
            Err(Error::InvalidMask { expected: 4, actual: 5 })
        ));
    }

    fn to_set(m: &Mask) -> BTreeSet<usize> {
        m.iter().collect()
    }

    proptest! {
        #[test]
        fn bit_ops_agree_with_sets(width in 1usize..=16, a in any::<u64>(), b in any::<u64>()) {
            let ma = Mask::from_bits(width, a);
            let mb = Mask::from_bits(width, b);
            let sa: BTreeSet<usize> = (0..width).filter(|i| a >> i & 1 == 1).collect();
            let sb: BTreeSet<usize> = (0..width).filter(|i| b >> i & 1 == 1).collect();
            let all: BTreeSet<usize> = (0..width).collect();

            prop_assert_eq!(to_set(&ma), sa.clone());
            prop_assert_eq!(to_set(&ma.union(&mb)), sa.union(&sb).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(to_set(&ma.intersection(&mb)), sa.intersection(&sb).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(to_set(&ma.complement()), all.difference(&sa).copied().collect::<BTreeSet<_>>());
            prop_assert_eq!(ma.count(), sa.len());
            prop_assert!(ma.count() <= width);
            prop_assert_eq!(ma.is_subset(&mb), sa.is_subset(&sb));
        }

        #[test]
        fn bitstring_round_trip(bits in proptest::collection::vec(any::<bool>(), 1..200)) {
            let s: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            let m = Mask::parse_bitstring(&s).unwrap();
            prop_assert_eq!(m.to_bitstring(), s);
        }
    }
}
