//! Discriminant training in reduced coordinates.
//!
//! Training solves `(C + lambda I) f = g` by symmetric eigendecomposition
//! with spectral truncation, where `g` is the clutter-minus-target mean
//! difference and `C` the sum of the two class covariances, both reduced.
//! The deflection objective `(f' g)^2 / (f' C f)` is scale invariant and
//! maximised by that solution whenever `C` is positive definite.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::degeneracy::DegeneracyMatrix;
use crate::ensemble_stats::EnsembleStats;
use crate::error::{QfdError, Result};
use crate::lattice::LatticeSpec;
use crate::point_group::GroupRep;

/// Default spectral truncation threshold, relative to the largest
/// eigenvalue magnitude.
pub const DEFAULT_PINV_TOL: f64 = 1e-10;

/// Default ridge weight added to the covariance diagonal.
pub const DEFAULT_LAMBDA: f64 = 0.0;

/// Solution of one truncated pseudoinverse solve.
#[derive(Debug, Clone)]
pub struct PinvSolution {
    /// Minimum-norm coefficients over the retained spectrum.
    pub coeffs: DVector<f64>,
    /// Number of eigenvalues above the truncation cutoff.
    pub effective_rank: usize,
    /// Absolute eigenvalue cutoff that was applied.
    pub cutoff: f64,
}

fn check_parameter(what: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(QfdError::InvalidParameter {
            what,
            reason: format!("{value} is not a finite non-negative number"),
        });
    }
    Ok(())
}

/// Solves `(matrix + lambda I) x = rhs` for symmetric `matrix` via
/// eigendecomposition, dropping every eigencomponent whose magnitude is
/// at most `pinv_tol` times the largest. The result is the minimum-norm
/// least-squares solution over the retained spectrum.
pub fn pinv_solve(
    matrix: &DMatrix<f64>,
    rhs: &DVector<f64>,
    lambda: f64,
    pinv_tol: f64,
) -> Result<PinvSolution> {
    let dim = matrix.nrows();
    if matrix.ncols() != dim || rhs.len() != dim {
        return Err(QfdError::DimensionMismatch {
            context: "pseudoinverse solve",
            expected: dim,
            actual: if matrix.ncols() != dim {
                matrix.ncols()
            } else {
                rhs.len()
            },
        });
    }
    check_parameter("lambda", lambda)?;
    check_parameter("pinv_tol", pinv_tol)?;
    if matrix.iter().any(|v| !v.is_finite()) || rhs.iter().any(|v| !v.is_finite()) {
        return Err(QfdError::NonFinite("solver input"));
    }
    let mut scale: f64 = 1.0;
    let mut asymmetry: f64 = 0.0;
    for i in 0..dim {
        for j in 0..=i {
            scale = scale.max(matrix[(i, j)].abs()).max(matrix[(j, i)].abs());
            asymmetry = asymmetry.max((matrix[(i, j)] - matrix[(j, i)]).abs());
        }
    }
    if asymmetry > 1e-8 * scale {
        return Err(QfdError::NotSymmetric(asymmetry));
    }

    let mut regularised = matrix.clone();
    for i in 0..dim {
        regularised[(i, i)] += lambda;
    }
    let eig = SymmetricEigen::new(regularised);
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, &e| m.max(e.abs()));
    let cutoff = pinv_tol * max_abs;
    let mut coeffs = DVector::zeros(dim);
    let mut effective_rank = 0;
    for k in 0..dim {
        let value = eig.eigenvalues[k];
        if value.abs() > cutoff {
            effective_rank += 1;
            let vector = eig.eigenvectors.column(k);
            coeffs.axpy(vector.dot(rhs) / value, &vector, 1.0);
        }
    }
    Ok(PinvSolution {
        coeffs,
        effective_rank,
        cutoff,
    })
}

/// Deflection of a direction against a mean difference and covariance:
/// `(f' g)^2 / (f' C f)`.
pub fn objective(coeffs: &DVector<f64>, g: &DVector<f64>, c: &DMatrix<f64>) -> Result<f64> {
    let dim = g.len();
    if coeffs.len() != dim || c.nrows() != dim || c.ncols() != dim {
        return Err(QfdError::DimensionMismatch {
            context: "objective",
            expected: dim,
            actual: coeffs.len(),
        });
    }
    let numerator = coeffs.dot(g);
    let denominator = coeffs.dot(&(c * coeffs));
    let usable = denominator.is_finite() && denominator > 0.0 && numerator.is_finite();
    if !usable {
        return Err(QfdError::DegenerateObjective);
    }
    Ok(numerator * numerator / denominator)
}

/// Reduced mean difference (clutter minus target) and summed covariance
/// of two class ensembles over the same reduction.
pub fn difference_stats(
    target: &EnsembleStats,
    clutter: &EnsembleStats,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if target.fingerprint() != clutter.fingerprint() {
        return Err(QfdError::FingerprintMismatch {
            context: "difference statistics",
        });
    }
    let g = clutter.mean() - target.mean();
    let c = target.covariance()? + clutter.covariance()?;
    Ok((g, c))
}

/// Trained discriminant: reduced coefficients plus everything needed to
/// rebuild the reduction they live in.
#[derive(Debug, Clone, PartialEq)]
pub struct QfdModel {
    lattice: LatticeSpec,
    selector: String,
    lambda: f64,
    pinv_tol: f64,
    coeffs: Vec<f64>,
    fingerprint: u64,
}

impl QfdModel {
    /// Reassembles a model from stored fields, rebuilding the group and
    /// degeneracy reduction to validate the coefficient length.
    pub fn from_parts(
        lattice: LatticeSpec,
        selector: &str,
        lambda: f64,
        pinv_tol: f64,
        coeffs: Vec<f64>,
    ) -> Result<QfdModel> {
        check_parameter("lambda", lambda)?;
        check_parameter("pinv_tol", pinv_tol)?;
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(QfdError::NonFinite("model coefficients"));
        }
        let rep = GroupRep::by_selector(lattice, selector)?;
        let dm = DegeneracyMatrix::build(&rep);
        if coeffs.len() != dm.dof().total() {
            return Err(QfdError::DimensionMismatch {
                context: "model coefficients",
                expected: dm.dof().total(),
                actual: coeffs.len(),
            });
        }
        Ok(QfdModel {
            lattice,
            selector: dm.selector().to_string(),
            lambda,
            pinv_tol,
            coeffs,
            fingerprint: dm.fingerprint(),
        })
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    pub fn selector(&self) -> &str {
        &self.selector
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn pinv_tol(&self) -> f64 {
        self.pinv_tol
    }

    /// Reduced coefficients, one per degree of freedom.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Fingerprint of the reduction the coefficients live in.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Rebuilds the group representation and degeneracy reduction this
    /// model was trained under.
    pub fn rebuild_reduction(&self) -> Result<(GroupRep, DegeneracyMatrix)> {
        let rep = GroupRep::by_selector(self.lattice, &self.selector)?;
        let dm = DegeneracyMatrix::build(&rep);
        if dm.fingerprint() != self.fingerprint {
            return Err(QfdError::FingerprintMismatch {
                context: "model reduction rebuild",
            });
        }
        Ok((rep, dm))
    }

    /// Expands the reduced coefficients to full coordinates, producing the
    /// group-invariant coefficient vector over pixels and pixel pairs.
    pub fn expanded_coefficients(&self, dm: &DegeneracyMatrix) -> Result<Vec<f64>> {
        if dm.fingerprint() != self.fingerprint {
            return Err(QfdError::FingerprintMismatch {
                context: "coefficient expansion",
            });
        }
        dm.expand(&self.coeffs)
    }
}

/// A trained model together with solver diagnostics.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: QfdModel,
    /// Retained spectral dimension of the regularised covariance.
    pub effective_rank: usize,
    /// Absolute eigenvalue cutoff applied during the solve.
    pub cutoff: f64,
    /// Deflection of the trained direction on the training statistics.
    pub objective: f64,
}

/// Trains a discriminant from two class ensembles accumulated over the
/// same reduction. The returned coefficients score clutter high and
/// target low.
pub fn train(
    target: &EnsembleStats,
    clutter: &EnsembleStats,
    lambda: f64,
    pinv_tol: f64,
) -> Result<TrainReport> {
    let (g, c) = difference_stats(target, clutter)?;
    let solution = pinv_solve(&c, &g, lambda, pinv_tol)?;
    let objective = objective(&solution.coeffs, &g, &c)?;
    let lattice = target.lattice();
    let model = QfdModel {
        lattice,
        selector: target.selector().to_string(),
        lambda,
        pinv_tol,
        coeffs: solution.coeffs.as_slice().to_vec(),
        fingerprint: target.fingerprint(),
    };
    Ok(TrainReport {
        model,
        effective_rank: solution.effective_rank,
        cutoff: solution.cutoff,
        objective,
    })
}
