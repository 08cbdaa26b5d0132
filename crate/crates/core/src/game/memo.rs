use std::collections::HashMap;
use std::sync::Mutex;

use super::GameOracle;
use crate::error::Result;
use crate::space::{Mask, PlayerSpace};

/// Per-run cache of oracle answers keyed by mask.
///
/// Repeated masks are sent to the inner oracle once; every position of the
/// output is still filled, so callers see one value per requested mask.
pub struct MemoizedOracle<G> {
    inner: G,
    cache: Mutex<HashMap<Mask, f64>>,
}

impl<G: GameOracle> MemoizedOracle<G> {
    pub fn new(inner: G) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn cached(&self) -> usize {
        self.cache.lock().unwrap().len()
    }

    pub fn into_inner(self) -> G {
        self.inner
    }
}

impl<G: GameOracle> GameOracle for MemoizedOracle<G> {
    fn space(&self) -> PlayerSpace {
        self.inner.space()
    }

    fn evaluate(&self, masks: &[Mask]) -> Result<Vec<f64>> {
        let missing: Vec<Mask> = {
            let cache = self.cache.lock().unwrap();
            let mut seen = std::collections::HashSet::new();
            masks
                .iter()
                .filter(|m| !cache.contains_key(*m) && seen.insert(*m))
                .cloned()
                .collect()
        };
        if !missing.is_empty() {
            let values = self.inner.evaluate(&missing)?;
            let mut cache = self.cache.lock().unwrap();
            for (m, v) in missing.into_iter().zip(values) {
                cache.insert(m, v);
            }
        }
        let cache = self.cache.lock().unwrap();
        Ok(masks.iter().map(|m| cache[m]).collect())
    }
}
