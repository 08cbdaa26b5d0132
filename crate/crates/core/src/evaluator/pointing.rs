use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regressor::Explanation;
use crate::space::PlayerSpace;

/// One planted object: text tokens and the image patches they refer to.
/// All indices are global player indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointingObject {
    pub text_tokens: Vec<usize>,
    pub image_patches: Vec<usize>,
}

/// Pointing spec file: `{"objects": [{"text_tokens": [...], "image_patches": [...]}, ...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointingGameSpec {
    pub objects: Vec<PointingObject>,
}

impl PointingGameSpec {
    pub fn validate(&self, space: &PlayerSpace) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPointingSpec(msg));
        if self.objects.is_empty() {
            return bad("no objects".into());
        }
        let mut owner = vec![usize::MAX; space.size()];
        for (k, obj) in self.objects.iter().enumerate() {
            if obj.text_tokens.is_empty() || obj.image_patches.is_empty() {
                return bad(format!("object {k} needs at least one text token and one image patch"));
            }
            for &t in &obj.text_tokens {
                if !space.text_range().contains(&t) {
                    return bad(format!("object {k}: {t} is not a text token index"));
                }
            }
            for &i in &obj.image_patches {
                if !space.image_range().contains(&i) {
                    return bad(format!("object {k}: {i} is not an image patch index"));
                }
            }
            for &x in obj.text_tokens.iter().chain(&obj.image_patches) {
                if owner[x] != usize::MAX {
                    return bad(format!("index {x} belongs to objects {} and {k}", owner[x]));
                }
                owner[x] = k;
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PgrOptions {
    /// Score explanations without any pair terms through the surrogate
    /// pairs `e_i · e_j`; off by default, leaving PGR undefined for them.
    pub first_order_fallback: bool,
}

pub fn pointing_game_recognition(e: &Explanation, spec: &PointingGameSpec) -> Result<f64> {
    pointing_game_recognition_with(e, spec, PgrOptions::default())
}

/// Share of absolute cross-modal interaction mass with the planted sign:
/// positive between an object's text tokens and its own patches, negative
/// between its text tokens and other objects' patches. Intra-modal pairs and
/// singles never enter.
pub fn pointing_game_recognition_with(e: &Explanation, spec: &PointingGameSpec, options: PgrOptions) -> Result<f64> {
    spec.validate(&e.space())?;
    let product = options.first_order_fallback && e.surrogate().pairs().is_empty();
    let value = |i: usize, j: usize| {
        if product {
            e.singles()[i] * e.singles()[j]
        } else {
            e.pair(i, j)
        }
    };
    let (mut hit, mut total) = (0.0, 0.0);
    for (k, obj) in spec.objects.iter().enumerate() {
        for &t in &obj.text_tokens {
            for (other, patches) in spec.objects.iter().enumerate().map(|(o, x)| (o, &x.image_patches)) {
                for &i in patches {
                    let v = value(i, t);
                    total += v.abs();
                    if (other == k && v > 0.0) || (other != k && v < 0.0) {
                        hit += v.abs();
                    }
                }
            }
        }
    }
    if total == 0.0 {
        return Err(Error::UndefinedPgr);
    }
    Ok(hit / total)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::regressor::{BasisSpec, Kernel};
    use crate::rng;
    use rand::Rng;

    fn grid_spec() -> (PlayerSpace, PointingGameSpec) {
        // 8 patches in 4 quadrants of two, 4 single-token labels
        let space = PlayerSpace::new(8, 4).unwrap();
        let objects = (0..4)
            .map(|k| PointingObject {
                text_tokens: vec![8 + k],
                image_patches: vec![2 * k, 2 * k + 1],
            })
            .collect();
        (space, PointingGameSpec { objects })
    }

    fn with_pairs(space: PlayerSpace, f: impl Fn(usize, usize) -> f64) -> Explanation {
        let pairs: Vec<_> = space
            .image_range()
            .flat_map(|i| space.text_range().map(move |t| (i, t)))
            .map(|(i, t)| (i, t, f(i, t)))
            .collect();
        Explanation::from_values(
            BasisSpec::full(space),
            Kernel::weighted_banzhaf(0.5).unwrap(),
            0.0,
            vec![0.0; space.size()],
            pairs,
        )
        .unwrap()
    }

    fn planted(space: PlayerSpace, sign: f64) -> Explanation {
        with_pairs(space, |i, t| if i / 2 == t - 8 { sign * 1.5 } else { -sign * 0.5 })
    }

    #[test]
    fn planted_and_flipped() {
        let (s, spec) = grid_spec();
        assert_eq!(pointing_game_recognition(&planted(s, 1.0), &spec).unwrap(), 1.0);
        assert_eq!(pointing_game_recognition(&planted(s, -1.0), &spec).unwrap(), 0.0);
    }

    #[test]
    fn intra_modal_pairs_ignored() {
        let (s, spec) = grid_spec();
        let base = planted(s, 1.0);
        let mut pairs: Vec<_> = base
            .surrogate()
            .pairs()
            .iter()
            .filter(|p| s.is_cross_modal(p.i, p.j))
            .map(|p| (p.i, p.j, p.value))
            .collect();
        pairs.push((0, 1, -100.0));
        pairs.push((8, 9, -100.0));
        let e = Explanation::from_values(base.basis().clone(), base.kernel(), 0.0, vec![5.0; 12], pairs).unwrap();
        assert_eq!(pointing_game_recognition(&e, &spec).unwrap(), 1.0);
    }

    #[test]
    fn random_signs_average_one_half() {
        let (s, spec) = grid_spec();
        let mut r = rng::stream(5, "pgr-random");
        let trials = 2000;
        let mean: f64 = (0..trials)
            .map(|_| {
                let signs: Vec<f64> = (0..96).map(|_| if r.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
                let e = with_pairs(s, |i, t| signs[i * 12 + t - 8]);
                pointing_game_recognition(&e, &spec).unwrap()
            })
            .sum::<f64>()
            / trials as f64;
        assert!((mean - 0.5).abs() < 0.01, "{mean}");
    }

    #[test]
    fn first_order_needs_fallback() {
        let (s, spec) = grid_spec();
        let singles: Vec<f64> = (0..12).map(|i| if i < 8 { 1.0 } else { 2.0 }).collect();
        let e = Explanation::from_values(BasisSpec::first_order(s), Kernel::shapley(), 0.0, singles, []).unwrap();
        assert!(matches!(pointing_game_recognition(&e, &spec), Err(Error::UndefinedPgr)));
        let opts = PgrOptions { first_order_fallback: true };
        // all products positive: only in-object mass counts, 8 of 32 patch–token links
        assert!((pointing_game_recognition_with(&e, &spec, opts).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spec_validation() {
        let (s, spec) = grid_spec();
        assert!(spec.validate(&s).is_ok());
        let mut overlap = spec.clone();
        overlap.objects[1].image_patches.push(0);
        assert!(overlap.validate(&s).is_err());
        let mut wrong_side = spec.clone();
        wrong_side.objects[0].text_tokens = vec![3];
        assert!(wrong_side.validate(&s).is_err());
        let mut empty = spec.clone();
        empty.objects[2].text_tokens.clear();
        assert!(empty.validate(&s).is_err());
        assert!(PointingGameSpec { objects: vec![] }.validate(&s).is_err());
        let parsed = PointingGameSpec::from_json(r#"{"objects":[{"text_tokens":[8],"image_patches":[0,1]}]}"#).unwrap();
        assert!(parsed.validate(&s).is_ok());
    }

    proptest! {
        #[test]
        fn bounded_scale_invariant_and_flip_complementary(
            values in proptest::collection::vec(-3.0f64..3.0, 96),
            scale in 0.01f64..100.0,
        ) {
            let (s, spec) = grid_spec();
            let e = with_pairs(s, |i, t| values[i * 12 + t - 8]);
            let scaled = with_pairs(s, |i, t| scale * values[i * 12 + t - 8]);
            let flipped = with_pairs(s, |i, t| -values[i * 12 + t - 8]);
            if let Ok(x) = pointing_game_recognition(&e, &spec) {
                prop_assert!((0.0..=1.0).contains(&x));
                prop_assert!((pointing_game_recognition(&scaled, &spec).unwrap() - x).abs() < 1e-12);
                prop_assert!((pointing_game_recognition(&flipped, &spec).unwrap() - (1.0 - x)).abs() < 1e-12);
            }
        }
    }
}
