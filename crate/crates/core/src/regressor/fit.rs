//! Weighted least squares over a sample batch.
//!
//! The design matrix is never materialized. Each row's active features
//! (constant, active singles, basis pairs with both ends active) are listed
//! and the upper triangle of the Gram matrix is accumulated from them. Rows
//! are processed in fixed chunks; within a chunk the Gram matrix is split
//! into bands of rows that are filled in parallel, so every entry is summed
//! in batch order regardless of the thread count.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::basis::{select_clique, BasisSpec};
use super::explanation::{Explanation, FitDiagnostics};
use super::kernel::{banzhaf_weight, shapley_kernel_weight, Boundary, Kernel, KernelWeight, LARGE_BOUNDARY_WEIGHT};
use crate::error::{check_probability, Error, Result};
use crate::game::GameOracle;
use crate::sampler::SampleBatch;
use crate::space::Mask;

/// Above this condition estimate the Cholesky solve is abandoned for an
/// eigen-decomposition based minimum-norm solve.
pub const CONDITION_LIMIT: f64 = 1e10;

const CHUNK_ROWS: usize = 512;
const GRAM_BANDS: usize = 64;

/// Row weighting for weighted Banzhaf fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Every draw counts once; the sampling distribution supplies `P_p`.
    #[default]
    Uniform,
    /// Each row carries `p^{|M|} (1-p)^{n-|M|}`, for batches that were not
    /// drawn from `P_p` (e.g. full enumeration).
    Explicit,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FitOptions {
    pub weighting: Weighting,
}

/// Fits an explanation with default options.
pub fn fit(batch: &SampleBatch, values: &[f64], basis: &BasisSpec, kernel: Kernel) -> Result<Explanation> {
    fit_with(batch, values, basis, kernel, FitOptions::default())
}

pub fn fit_with(
    batch: &SampleBatch,
    values: &[f64],
    basis: &BasisSpec,
    kernel: Kernel,
    options: FitOptions,
) -> Result<Explanation> {
    let space = basis.space();
    batch.space.ensure_same(&space)?;
    if values.len() != batch.len() {
        return Err(Error::LengthMismatch {
            what: "values",
            expected: batch.len(),
            actual: values.len(),
        });
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(bad));
    }
    if batch.is_empty() {
        return Err(Error::IllPosedFit {
            rank: 0,
            basis_size: basis.size(),
            deficiency: basis.size(),
        });
    }
    if let Some(p) = kernel.p() {
        check_probability(p)?;
    }

    let design = Design::new(basis);
    let d = design.d;
    let RowWeights { weights, constraints } = row_weights(batch, values, kernel, options.weighting)?;

    let (gram, rhs) = design.accumulate(&batch.masks, values, &weights);
    let (coef, condition, solver) = if constraints.is_empty() {
        solve_normal(gram, rhs)?
    } else {
        let mut c = DMatrix::zeros(constraints.len(), d);
        let mut target = DVector::zeros(constraints.len());
        for (r, (mask, value)) in constraints.iter().enumerate() {
            for f in design.features(mask) {
                c[(r, f as usize)] = 1.0;
            }
            target[r] = *value;
        }
        solve_constrained(gram, rhs, &c, &target)?
    };

    let n = space.size();
    let singles = coef.as_slice()[1..=n].to_vec();
    let pairs = basis
        .pairs()
        .iter()
        .zip(&coef.as_slice()[n + 1..])
        .map(|(&(i, j), &v)| (i, j, v));
    let explanation = Explanation::from_values(basis.clone(), kernel, coef[0], singles, pairs)?;

    let predicted = explanation.evaluate(&batch.masks)?;
    let (mut num, mut den) = (0.0, 0.0);
    for ((w, y), yhat) in weights.iter().zip(values).zip(&predicted) {
        if *w > 0.0 {
            num += w * (y - yhat) * (y - yhat);
            den += w;
        }
    }
    let distinct = batch.masks.iter().collect::<HashSet<&Mask>>().len();
    Ok(explanation.with_diagnostics(FitDiagnostics {
        residual_mse: if den > 0.0 { num / den } else { 0.0 },
        condition_estimate: condition,
        samples: batch.len(),
        distinct_masks: distinct,
        solver: solver.into(),
    }))
}

/// Two-step filtering: a first-order fit ranks the tokens, then the order-2
/// fit is restricted to pairs inside the top-`k` clique.
pub fn two_step_fit(batch: &SampleBatch, values: &[f64], k: usize, p: f64) -> Result<Explanation> {
    let kernel = Kernel::weighted_banzhaf(p)?;
    let first = fit(batch, values, &BasisSpec::first_order(batch.space), kernel)?;
    let basis = select_clique(first.singles(), batch.space, k)?;
    fit(batch, values, &basis, kernel)
}

struct RowWeights {
    weights: Vec<f64>,
    constraints: Vec<(Mask, f64)>,
}

fn row_weights(batch: &SampleBatch, values: &[f64], kernel: Kernel, weighting: Weighting) -> Result<RowWeights> {
    let n = batch.space.size();
    let mut constraints = Vec::new();
    let mut weights: Vec<f64> = match kernel {
        Kernel::WeightedBanzhaf { p } => match weighting {
            Weighting::Uniform => vec![1.0; batch.len()],
            Weighting::Explicit => batch.masks.iter().map(|m| banzhaf_weight(m.count(), n, p)).collect(),
        },
        Kernel::Shapley { boundary } => {
            let interior_max = match shapley_kernel_weight(1, n) {
                KernelWeight::Finite(w) => w,
                KernelWeight::Constraint => 1.0, // n = 1 cannot happen: both modalities are non-empty
            };
            let mut empty = Vec::new();
            let mut full = Vec::new();
            let weights = batch
                .masks
                .iter()
                .zip(values)
                .map(|(m, &y)| match shapley_kernel_weight(m.count(), n) {
                    KernelWeight::Finite(w) => w,
                    KernelWeight::Constraint => {
                        if m.is_empty() { &mut empty } else { &mut full }.push(y);
                        match boundary {
                            Boundary::Constrained => 0.0,
                            Boundary::LargeWeight => LARGE_BOUNDARY_WEIGHT * interior_max,
                        }
                    }
                })
                .collect();
            if boundary == Boundary::Constrained {
                if empty.is_empty() {
                    return Err(Error::MissingConstraintRow("empty"));
                }
                if full.is_empty() {
                    return Err(Error::MissingConstraintRow("full"));
                }
                let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
                constraints.push((batch.space.empty_mask(), mean(&empty)));
                constraints.push((batch.space.full_mask(), mean(&full)));
            }
            weights
        }
    };
    // Rescale to unit mean so Gram entries stay O(rows) however small the
    // raw kernel values are; the minimizer is unchanged.
    let total: f64 = weights.iter().sum();
    let active = weights.iter().filter(|w| **w > 0.0).count();
    if total > 0.0 {
        let scale = active as f64 / total;
        weights.iter_mut().for_each(|w| *w *= scale);
    }
    Ok(RowWeights { weights, constraints })
}

struct Design {
    n: usize,
    d: usize,
    // for each i, the basis pairs (j, feature) with j > i, sorted by j
    adjacency: Vec<Vec<(usize, u32)>>,
}

impl Design {
    fn new(basis: &BasisSpec) -> Self {
        let n = basis.space().size();
        let mut adjacency = vec![Vec::new(); n];
        for (k, &(i, j)) in basis.pairs().iter().enumerate() {
            adjacency[i].push((j, (1 + n + k) as u32));
        }
        Self {
            n,
            d: basis.size(),
            adjacency,
        }
    }

    /// Active feature indices of a mask, in increasing order.
    fn features(&self, mask: &Mask) -> Vec<u32> {
        let active: Vec<usize> = mask.iter().collect();
        let mut out = Vec::with_capacity(1 + active.len());
        out.push(0);
        out.extend(active.iter().map(|&i| (1 + i) as u32));
        for (a, &i) in active.iter().enumerate() {
            let adj = &self.adjacency[i];
            if adj.is_empty() {
                continue;
            }
            let rest = &active[a + 1..];
            if adj.len() <= rest.len() {
                out.extend(adj.iter().filter(|(j, _)| mask.contains(*j)).map(|&(_, f)| f));
            } else {
                for &j in rest {
                    if let Ok(k) = adj.binary_search_by_key(&j, |&(j, _)| j) {
                        out.push(adj[k].1);
                    }
                }
            }
        }
        debug_assert!(out.windows(2).all(|w| w[0] < w[1]) && self.n + 1 <= self.d);
        out
    }

    fn accumulate(&self, masks: &[Mask], values: &[f64], weights: &[f64]) -> (DMatrix<f64>, DVector<f64>) {
        let d = self.d;
        let rows: Vec<usize> = (0..masks.len()).filter(|&r| weights[r] > 0.0).collect();
        let mut gram = vec![0.0; d * d];
        let mut rhs = vec![0.0; d];
        let band = d.div_ceil(GRAM_BANDS).max(1);
        for chunk in rows.chunks(CHUNK_ROWS) {
            let feats: Vec<Vec<u32>> = chunk.par_iter().map(|&r| self.features(&masks[r])).collect();
            for (f, &r) in feats.iter().zip(chunk) {
                let wy = weights[r] * values[r];
                for &a in f {
                    rhs[a as usize] += wy;
                }
            }
            gram.par_chunks_mut(band * d).enumerate().for_each(|(bi, slab)| {
                let lo = bi * band;
                let hi = lo + slab.len() / d;
                for (f, &r) in feats.iter().zip(chunk) {
                    let w = weights[r];
                    let start = f.partition_point(|&a| (a as usize) < lo);
                    for x in start..f.len() {
                        let a = f[x] as usize;
                        if a >= hi {
                            break;
                        }
                        let row = &mut slab[(a - lo) * d..(a - lo + 1) * d];
                        for &b in &f[x..] {
                            row[b as usize] += w;
                        }
                    }
                }
            });
        }
        let mut g = DMatrix::from_row_slice(d, d, &gram);
        for a in 0..d {
            for b in 0..a {
                g[(a, b)] = g[(b, a)];
            }
        }
        (g, DVector::from_vec(rhs))
    }
}

fn rank_tolerance(d: usize) -> f64 {
    (4.0 * d as f64 * f64::EPSILON).max(1e-12)
}

/// Solves `G x = b` for symmetric positive semi-definite `G`.
fn solve_normal(gram: DMatrix<f64>, rhs: DVector<f64>) -> Result<(DVector<f64>, f64, &'static str)> {
    let d = gram.nrows();
    if let Some(chol) = gram.clone().cholesky() {
        let l = chol.l_dirty();
        let diag = l.diagonal();
        let (lo, hi) = diag.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        let condition = (hi / lo).powi(2);
        if lo > 0.0 && condition <= CONDITION_LIMIT {
            return Ok((chol.solve(&rhs), condition, "cholesky"));
        }
    }
    let eigen = gram.symmetric_eigen();
    let top = eigen.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let cutoff = top * rank_tolerance(d);
    let rank = eigen.eigenvalues.iter().filter(|&&v| v > cutoff).count();
    if top == 0.0 || rank < d {
        return Err(Error::IllPosedFit {
            rank,
            basis_size: d,
            deficiency: d - rank,
        });
    }
    let smallest = eigen.eigenvalues.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    let mut x = DVector::zeros(d);
    for (k, &lambda) in eigen.eigenvalues.iter().enumerate() {
        let v = eigen.eigenvectors.column(k);
        x.axpy(v.dot(&rhs) / lambda, &v, 1.0);
    }
    Ok((x, top / smallest, "min-norm"))
}

/// Minimizes `xᵀGx - 2bᵀx` subject to `Cx = c` by the null-space method:
/// Householder reflections `Q` with `Cᵀ = QR` split `x = Q[y1; y2]`, where
/// `y1` is pinned by the constraints and `y2` solves a reduced system.
fn solve_constrained(
    mut gram: DMatrix<f64>,
    mut rhs: DVector<f64>,
    c: &DMatrix<f64>,
    target: &DVector<f64>,
) -> Result<(DVector<f64>, f64, &'static str)> {
    let d = gram.nrows();
    let r = c.nrows();
    let mut a = c.transpose();
    let mut reflectors = Vec::with_capacity(r);
    for k in 0..r {
        let x = a.view((k, k), (d - k, 1)).clone_owned();
        let norm = x.norm();
        let mut v = DVector::zeros(d);
        v.rows_mut(k, d - k).copy_from(&x.column(0));
        v[k] += if x[0] >= 0.0 { norm } else { -norm };
        let vn = v.norm();
        if norm == 0.0 || vn == 0.0 {
            return Err(Error::IllPosedFit {
                rank: d - r,
                basis_size: d,
                deficiency: r - k,
            });
        }
        v /= vn;
        let w = a.tr_mul(&v);
        a.ger(-2.0, &v, &w, 1.0);
        reflectors.push(v);
    }
    // Rᵀ y1 = c, with R the leading r×r block of the reduced Cᵀ.
    let rt = a.rows(0, r).transpose();
    let y1 = rt
        .solve_lower_triangular(target)
        .ok_or(Error::IllPosedFit { rank: d - r, basis_size: d, deficiency: r })?;

    for v in &reflectors {
        let w = gram.tr_mul(v);
        gram.ger(-2.0, v, &w, 1.0);
        let u = &gram * v;
        gram.ger(-2.0, &u, v, 1.0);
        let s = v.dot(&rhs);
        rhs.axpy(-2.0 * s, v, 1.0);
    }
    let g22 = gram.view((r, r), (d - r, d - r)).clone_owned();
    let g21 = gram.view((r, 0), (d - r, r)).clone_owned();
    let b2 = rhs.rows(r, d - r) - &g21 * &y1;
    let (y2, condition, solver) = solve_normal(g22, b2).map_err(|e| match e {
        Error::IllPosedFit { deficiency, .. } => Error::IllPosedFit {
            rank: d - deficiency,
            basis_size: d,
            deficiency,
        },
        other => other,
    })?;

    let mut x = DVector::zeros(d);
    x.rows_mut(0, r).copy_from(&y1);
    x.rows_mut(r, d - r).copy_from(&y2);
    for v in reflectors.iter().rev() {
        let s = v.dot(&x);
        x.axpy(-2.0 * s, v, 1.0);
    }
    let solver = if solver == "cholesky" { "constrained-cholesky" } else { "constrained-min-norm" };
    Ok((x, condition, solver))
}
