use crate::error::{check_probability, Error, Result};
use crate::game::GameOracle;
use crate::regressor::Explanation;
use crate::sampler::{sample_naive, SamplePlan};

/// Number of masks drawn for the faithfulness correlation by default.
pub const DEFAULT_CORRELATION_SAMPLES: usize = 1000;

/// Ranks starting at 1; tied entries share the average of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Spearman rank correlation of two equally long samples.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            what: "correlation sample",
            expected: x.len(),
            actual: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("correlation needs at least two samples".into()));
    }
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    let mean = (x.len() + 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mean) * (b - mean);
        sxx += (a - mean) * (a - mean);
        syy += (b - mean) * (b - mean);
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("first sample"));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("second sample"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman correlation between game and surrogate values over `m` masks
/// drawn from `P_p`.
pub fn faithfulness_correlation(e: &Explanation, nu: &dyn GameOracle, p: f64, m: usize, seed: u64) -> Result<f64> {
    check_probability(p)?;
    if m < 2 {
        return Err(Error::InvalidArgument(format!("correlation needs m >= 2, got {m}")));
    }
    e.space().ensure_same(&nu.space())?;
    let batch = sample_naive(&SamplePlan::naive(e.space(), p, m, seed)?)?;
    let truth = batch.evaluate(nu)?;
    let approx = e.evaluate(&batch.masks)?;
    spearman(&truth, &approx).map_err(|err| match err {
        Error::UndefinedCorrelation("first sample") => Error::UndefinedCorrelation("game values"),
        Error::UndefinedCorrelation(_) => Error::UndefinedCorrelation("explanation values"),
        other => other,
    })
}
