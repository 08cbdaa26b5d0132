//! Order-2 explanations fitted by weighted least squares.

mod basis;
mod explanation;
mod fit;
mod kernel;

pub use basis::{clique_split, select_clique, BasisKind, BasisSpec, MIN_TEXT_CLIQUE};
pub use explanation::{first_order_conversion, Explanation, ExplanationFile, FitDiagnostics, EXPLANATION_SCHEMA_VERSION};
pub use fit::{fit, fit_with, two_step_fit, FitOptions, Weighting, CONDITION_LIMIT};
pub use kernel::{banzhaf_weight, shapley_kernel_weight, Boundary, Kernel, KernelWeight, LARGE_BOUNDARY_WEIGHT};
