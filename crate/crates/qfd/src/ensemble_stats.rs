//! Ensemble statistics in reduced coordinates.
//!
//! The feature vector of a chip stacks its pixel values and all ordered
//! pixel-pair products. Statistics are accumulated directly in reduced
//! coordinates: the reduced mean equals the reduction of the full mean,
//! and the reduced covariance equals the reduction of the full covariance
//! from both sides, whether or not the full statistics were symmetrised
//! first. The full-coordinate path is kept alongside as an independent
//! reference for exactly that equivalence.
//!
//! Accumulators use a single-pass mean and scatter update and merge
//! associatively, so partial ensembles can be combined in any grouping.

use nalgebra::{DMatrix, DVector};

use crate::degeneracy::DegeneracyMatrix;
use crate::error::{QfdError, Result};
use crate::lattice::LatticeSpec;
use crate::point_group::{GroupRep, SymmetryOp};

/// Full feature vector of a chip: `N` pixel values followed by the `N^2`
/// ordered pair products in pair-index order.
pub fn features(chip: &[f64]) -> Vec<f64> {
    let n = chip.len();
    let mut out = Vec::with_capacity(n + n * n);
    out.extend_from_slice(chip);
    for b in 0..n {
        for a in 0..n {
            out.push(chip[a] * chip[b]);
        }
    }
    out
}

/// Applies a group element to a full-coordinate vector, rank-2 block on
/// the first `N` entries and rank-4 block on the remaining `N^2`.
pub fn apply_to_features(op: &SymmetryOp, full: &[f64]) -> Result<Vec<f64>> {
    let n = op.pixel_count();
    if full.len() != n + n * n {
        return Err(QfdError::DimensionMismatch {
            context: "full-coordinate action",
            expected: n + n * n,
            actual: full.len(),
        });
    }
    let mut out = op.apply(&full[..n])?;
    out.extend(op.apply_quadratic(&full[n..])?);
    Ok(out)
}

/// Mergeable single-pass mean and covariance accumulator over reduced
/// features.
#[derive(Debug, Clone)]
pub struct EnsembleStats {
    lattice: LatticeSpec,
    selector: String,
    fingerprint: u64,
    count: u64,
    mean: DVector<f64>,
    scatter: DMatrix<f64>,
    /// Covariance as handed to [`EnsembleStats::from_moments`], kept
    /// verbatim so a load followed by a save is bit-exact. Dropped as
    /// soon as further accumulation changes the moments.
    loaded_covariance: Option<DMatrix<f64>>,
}

impl EnsembleStats {
    /// Fresh accumulator bound to one degeneracy reduction.
    pub fn new(dm: &DegeneracyMatrix) -> Self {
        let dim = dm.dof().total();
        EnsembleStats {
            lattice: dm.lattice(),
            selector: dm.selector().to_string(),
            fingerprint: dm.fingerprint(),
            count: 0,
            mean: DVector::zeros(dim),
            scatter: DMatrix::zeros(dim, dim),
            loaded_covariance: None,
        }
    }

    /// Rebuilds an accumulator from stored moments.
    pub fn from_moments(
        dm: &DegeneracyMatrix,
        count: u64,
        mean: DVector<f64>,
        covariance: DMatrix<f64>,
    ) -> Result<Self> {
        let dim = dm.dof().total();
        if mean.len() != dim || covariance.nrows() != dim || covariance.ncols() != dim {
            return Err(QfdError::DimensionMismatch {
                context: "stored moments",
                expected: dim,
                actual: mean.len().max(covariance.nrows()),
            });
        }
        if count < 2 {
            return Err(QfdError::InsufficientCount {
                context: "stored moments",
                needed: 2,
                actual: count,
            });
        }
        let scatter = &covariance * (count as f64 - 1.0);
        Ok(EnsembleStats {
            lattice: dm.lattice(),
            selector: dm.selector().to_string(),
            fingerprint: dm.fingerprint(),
            count,
            mean,
            scatter,
            loaded_covariance: Some(covariance),
        })
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn selector(&self) -> &str {
        &self.selector
    }

    /// Fingerprint of the degeneracy reduction the features live in.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Reduces a chip and folds it into the running moments.
    pub fn accumulate(&mut self, dm: &DegeneracyMatrix, chip: &[f64]) -> Result<()> {
        if dm.fingerprint() != self.fingerprint {
            return Err(QfdError::FingerprintMismatch {
                context: "accumulate",
            });
        }
        if chip.iter().any(|v| !v.is_finite()) {
            return Err(QfdError::NonFinite("chip values"));
        }
        let reduced = dm.reduce_chip(chip)?;
        self.push(&reduced);
        Ok(())
    }

    fn push(&mut self, reduced: &[f64]) {
        self.loaded_covariance = None;
        self.count += 1;
        let z = DVector::from_column_slice(reduced);
        let delta = &z - &self.mean;
        self.mean.axpy(1.0 / self.count as f64, &delta, 1.0);
        let delta2 = z - &self.mean;
        self.scatter.ger(1.0, &delta, &delta2, 1.0);
    }

    /// Folds another accumulator into this one; both must be bound to the
    /// same reduction. Merging is associative up to rounding.
    pub fn merge(&mut self, other: &EnsembleStats) -> Result<()> {
        if other.fingerprint != self.fingerprint {
            return Err(QfdError::FingerprintMismatch { context: "merge" });
        }
        if other.count == 0 {
            return Ok(());
        }
        if self.count == 0 {
            self.count = other.count;
            self.mean.copy_from(&other.mean);
            self.scatter.copy_from(&other.scatter);
            self.loaded_covariance = other.loaded_covariance.clone();
            return Ok(());
        }
        self.loaded_covariance = None;
        let n1 = self.count as f64;
        let n2 = other.count as f64;
        let delta = &other.mean - &self.mean;
        self.mean.axpy(n2 / (n1 + n2), &delta, 1.0);
        self.scatter += &other.scatter;
        self.scatter.ger(n1 * n2 / (n1 + n2), &delta, &delta, 1.0);
        self.count += other.count;
        Ok(())
    }

    /// Sample mean of the reduced features.
    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    /// Sample covariance with divisor `count - 1`, symmetrised exactly.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        if self.count < 2 {
            return Err(QfdError::InsufficientCount {
                context: "covariance",
                needed: 2,
                actual: self.count,
            });
        }
        if let Some(loaded) = &self.loaded_covariance {
            return Ok(loaded.clone());
        }
        let scale = 1.0 / (self.count as f64 - 1.0);
        let dim = self.mean.len();
        let mut cov = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..=i {
                let v = 0.5 * (self.scatter[(i, j)] + self.scatter[(j, i)]) * scale;
                cov[(i, j)] = v;
                cov[(j, i)] = v;
            }
        }
        Ok(cov)
    }
}

/// Full-coordinate sample mean and covariance of an ensemble, computed in
/// two passes over the feature vectors. This is the reference path that
/// reduced accumulation is checked against.
pub fn full_feature_moments(chips: &[Vec<f64>]) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if chips.len() < 2 {
        return Err(QfdError::InsufficientCount {
            context: "full-coordinate moments",
            needed: 2,
            actual: chips.len() as u64,
        });
    }
    let n = chips[0].len();
    let dim = n + n * n;
    let mut mean = DVector::zeros(dim);
    for chip in chips {
        if chip.len() != n {
            return Err(QfdError::DimensionMismatch {
                context: "full-coordinate moments",
                expected: n,
                actual: chip.len(),
            });
        }
        mean += DVector::from_vec(features(chip));
    }
    mean /= chips.len() as f64;
    let mut cov = DMatrix::zeros(dim, dim);
    for chip in chips {
        let centred = DVector::from_vec(features(chip)) - &mean;
        cov.ger(1.0, &centred, &centred, 1.0);
    }
    cov /= chips.len() as f64 - 1.0;
    Ok((mean, cov))
}

fn stacked_perm(op: &SymmetryOp) -> Vec<usize> {
    let n = op.pixel_count();
    let perm = op.perm0();
    let mut stack = Vec::with_capacity(n + n * n);
    stack.extend_from_slice(perm);
    for b in 0..n {
        for a in 0..n {
            stack.push(n + perm[a] + perm[b] * n);
        }
    }
    stack
}

/// Group-averages full-coordinate statistics: the mean over all elements
/// of the transformed mean vector and of the two-sided transformed
/// covariance. Both outputs are invariant under every element of the
/// group, and the operation is idempotent.
pub fn symmetrise_stats(
    rep: &GroupRep,
    mean: &DVector<f64>,
    covariance: &DMatrix<f64>,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = rep.lattice().pixel_count();
    let dim = n + n * n;
    if mean.len() != dim || covariance.nrows() != dim || covariance.ncols() != dim {
        return Err(QfdError::DimensionMismatch {
            context: "symmetrise",
            expected: dim,
            actual: mean.len().max(covariance.nrows()),
        });
    }
    let mut sym_mean = DVector::zeros(dim);
    let mut sym_cov = DMatrix::zeros(dim, dim);
    for op in rep.ops() {
        let stack = stacked_perm(op);
        for d in 0..dim {
            sym_mean[d] += mean[stack[d]];
        }
        for d1 in 0..dim {
            let s1 = stack[d1];
            for d2 in 0..dim {
                sym_cov[(d1, d2)] += covariance[(s1, stack[d2])];
            }
        }
    }
    let scale = 1.0 / rep.order() as f64;
    sym_mean *= scale;
    sym_cov *= scale;
    Ok((sym_mean, sym_cov))
}

/// Reduces a full-coordinate vector through the degeneracy classes.
fn reduce_vector(dm: &DegeneracyMatrix, full: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(dm.reduce(full.as_slice())?))
}

/// Reduces a full-coordinate matrix from both sides.
fn reduce_matrix(dm: &DegeneracyMatrix, full: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = dm.lattice().pixel_count();
    let dim = n + n * n;
    if full.nrows() != dim || full.ncols() != dim {
        return Err(QfdError::DimensionMismatch {
            context: "matrix reduction",
            expected: dim,
            actual: full.nrows(),
        });
    }
    let offset = dm.dof().linear;
    let class = |index: usize| -> usize {
        if index < n {
            dm.linear().class_of(index + 1).expect("index in range") - 1
        } else {
            offset + dm.quadratic().class_of(index - n + 1).expect("index in range") - 1
        }
    };
    let total = dm.dof().total();
    let mut out = DMatrix::zeros(total, total);
    for i in 0..dim {
        let ci = class(i);
        for j in 0..dim {
            out[(ci, class(j))] += full[(i, j)];
        }
    }
    Ok(out)
}

/// Largest elementwise deviation between two equally sized arrays,
/// relative to `max(1, |a|, |b|)` per element.
pub fn max_relative_deviation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "deviation of equally sized arrays");
    a.iter()
        .zip(b)
        .map(|(&x, &y)| (x - y).abs() / 1f64.max(x.abs()).max(y.abs()))
        .fold(0.0, f64::max)
}

/// Deviations between the reduced accumulator and the reduced
/// full-coordinate statistics, along both the raw and the symmetrised
/// route.
#[derive(Debug, Clone, Copy)]
pub struct EquivalenceReport {
    /// Accumulated reduced mean vs reduction of the full mean.
    pub mean_dev: f64,
    /// Accumulated reduced covariance vs two-sided reduction of the full
    /// covariance.
    pub cov_dev: f64,
    /// Reduction of the raw full mean vs reduction of the symmetrised one.
    pub sym_mean_dev: f64,
    /// Two-sided reduction of the raw vs the symmetrised full covariance.
    pub sym_cov_dev: f64,
}

impl EquivalenceReport {
    pub fn max_dev(&self) -> f64 {
        self.mean_dev
            .max(self.cov_dev)
            .max(self.sym_mean_dev)
            .max(self.sym_cov_dev)
    }
}

/// Checks that reduced accumulation agrees with reducing full-coordinate
/// statistics, and that the reduction of raw and symmetrised full
/// statistics coincide.
pub fn reduced_equivalence_check(
    stats: &EnsembleStats,
    full_mean: &DVector<f64>,
    full_cov: &DMatrix<f64>,
    rep: &GroupRep,
    dm: &DegeneracyMatrix,
) -> Result<EquivalenceReport> {
    if dm.fingerprint() != stats.fingerprint() {
        return Err(QfdError::FingerprintMismatch {
            context: "equivalence check",
        });
    }
    let reduced_mean = reduce_vector(dm, full_mean)?;
    let reduced_cov = reduce_matrix(dm, full_cov)?;
    let accumulated_cov = stats.covariance()?;
    let (sym_mean, sym_cov) = symmetrise_stats(rep, full_mean, full_cov)?;
    let reduced_sym_mean = reduce_vector(dm, &sym_mean)?;
    let reduced_sym_cov = reduce_matrix(dm, &sym_cov)?;
    Ok(EquivalenceReport {
        mean_dev: max_relative_deviation(stats.mean().as_slice(), reduced_mean.as_slice()),
        cov_dev: max_relative_deviation(accumulated_cov.as_slice(), reduced_cov.as_slice()),
        sym_mean_dev: max_relative_deviation(reduced_mean.as_slice(), reduced_sym_mean.as_slice()),
        sym_cov_dev: max_relative_deviation(reduced_cov.as_slice(), reduced_sym_cov.as_slice()),
    })
}
