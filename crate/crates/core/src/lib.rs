//! Faithful second-order interaction explanations of two-modality games.
//!
//! A similarity model over `n_image` image tokens and `n_text` text tokens is
//! treated as a cooperative game on masks. The crate fits order-2 surrogates
//! (constant, per-token values, pairwise interactions) by weighted least
//! squares, solves small games exactly by enumeration, and scores
//! explanations by rank correlation, insertion/deletion curves and the
//! pointing game.

pub mod error;
pub mod evaluator;
pub mod exact;
pub mod game;
pub mod regressor;
pub mod remote;
pub mod rng;
pub mod sampler;
pub mod space;

pub use error::{Error, Result};
pub use exact::{ExactExplanation, MobiusTransform};
pub use game::{GameOracle, TabulatedGame, TwoAdditiveGame};
pub use regressor::{BasisSpec, Explanation, Kernel};
pub use remote::{Endpoint, RemoteConfig, RemoteOracle};
pub use sampler::{SampleBatch, SamplePlan, SamplingMode};
pub use space::{Mask, Modality, PlayerSpace};
