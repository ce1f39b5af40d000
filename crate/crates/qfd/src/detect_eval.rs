//! Scoring and detection evaluation.
//!
//! A chip's response is the dot product of the model's reduced
//! coefficients with the chip's reduced features, which equals the full
//! quadratic form without ever materialising it. Responses are calibrated
//! so clutter scores high: a chip is declared target when its response
//! falls below the threshold, so a false alarm is a clutter chip below
//! threshold and a miss is a target chip at or above it.

use crate::degeneracy::DegeneracyMatrix;
use crate::error::{QfdError, Result};
use crate::point_group::GroupRep;
use crate::qfd_train::QfdModel;

/// Response of one chip under a trained model.
pub fn score(model: &QfdModel, dm: &DegeneracyMatrix, chip: &[f64]) -> Result<f64> {
    if dm.fingerprint() != model.fingerprint() {
        return Err(QfdError::FingerprintMismatch { context: "score" });
    }
    if chip.iter().any(|v| !v.is_finite()) {
        return Err(QfdError::NonFinite("chip values"));
    }
    let reduced = dm.reduce_chip(chip)?;
    Ok(model
        .coeffs()
        .iter()
        .zip(&reduced)
        .map(|(&f, &z)| f * z)
        .sum())
}

/// Responses of a batch of chips.
pub fn score_chips(model: &QfdModel, dm: &DegeneracyMatrix, chips: &[Vec<f64>]) -> Result<Vec<f64>> {
    chips.iter().map(|chip| score(model, dm, chip)).collect()
}

/// Largest relative response deviation over all chips and all elements of
/// `rep` between a chip and its transformed copies. Zero up to rounding
/// when the model's group contains `rep`; substantially nonzero otherwise.
pub fn check_response_invariance(
    model: &QfdModel,
    rep: &GroupRep,
    dm: &DegeneracyMatrix,
    chips: &[Vec<f64>],
) -> Result<f64> {
    if rep.lattice() != dm.lattice() {
        return Err(QfdError::DimensionMismatch {
            context: "invariance check",
            expected: dm.lattice().pixel_count(),
            actual: rep.lattice().pixel_count(),
        });
    }
    let mut worst = 0.0f64;
    for chip in chips {
        let base = score(model, dm, chip)?;
        for op in rep.ops() {
            let moved = op.apply(chip)?;
            let transformed = score(model, dm, &moved)?;
            let dev = (transformed - base).abs() / 1f64.max(base.abs()).max(transformed.abs());
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

/// One operating point of a detection error tradeoff curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    /// Decision threshold this point was evaluated at.
    pub threshold: f64,
    /// Fraction of clutter chips scoring below the threshold.
    pub p_fa: f64,
    /// Fraction of target chips scoring at or above the threshold.
    pub p_miss: f64,
    /// Binomial standard error of `p_fa`.
    pub se_fa: f64,
    /// Binomial standard error of `p_miss`.
    pub se_miss: f64,
}

fn checked_sorted(what: &'static str, scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(QfdError::EmptyScores(what));
    }
    if scores.iter().any(|v| !v.is_finite()) {
        return Err(QfdError::NonFinite("scores"));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    Ok(sorted)
}

fn binomial_se(p: f64, count: usize) -> f64 {
    (p * (1.0 - p) / count as f64).sqrt()
}

/// Detection error tradeoff curve: one point per distinct observed score,
/// plus a final all-clutter point at an infinite threshold. The curve
/// starts at `(p_fa, p_miss) = (0, 1)` and ends at `(1, 0)`, with `p_fa`
/// nondecreasing and `p_miss` nonincreasing along it. Chips scoring
/// exactly at a threshold count on the clutter side.
pub fn det_curve(target_scores: &[f64], clutter_scores: &[f64]) -> Result<Vec<DetPoint>> {
    let target = checked_sorted("target", target_scores)?;
    let clutter = checked_sorted("clutter", clutter_scores)?;

    let mut thresholds: Vec<f64> = target.iter().chain(&clutter).copied().collect();
    thresholds.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    thresholds.dedup();
    thresholds.push(f64::INFINITY);

    let curve = thresholds
        .into_iter()
        .map(|threshold| {
            let fa = clutter.partition_point(|&s| s < threshold);
            let missed = target.len() - target.partition_point(|&s| s < threshold);
            let p_fa = fa as f64 / clutter.len() as f64;
            let p_miss = missed as f64 / target.len() as f64;
            DetPoint {
                threshold,
                p_fa,
                p_miss,
                se_fa: binomial_se(p_fa, clutter.len()),
                se_miss: binomial_se(p_miss, target.len()),
            }
        })
        .collect();
    Ok(curve)
}
