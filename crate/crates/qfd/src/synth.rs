//! Synthetic chip generation.
//!
//! Chips are draws from a stationary Gaussian texture plus an optional
//! centre bump. The texture covariance is a squared-exponential kernel
//! over the lattice's planar pixel positions, so the ensemble
//! distribution is invariant under the lattice point group, and the bump
//! depends only on distance from the centre, so it shares that
//! invariance. Target ensembles carry the bump; clutter ensembles set its
//! amplitude to zero.
//!
//! Each chip is drawn from its own counter-derived generator stream, so
//! chip `i` of a given seed is the same whether chips are generated
//! serially, in parallel or as part of a longer run.

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::chip_io::ChipSet;
use crate::error::{QfdError, Result};
use crate::lattice::LatticeSpec;
use crate::point_group::GroupRep;

/// Relative diagonal jitter keeping the kernel factorisable.
const KERNEL_JITTER: f64 = 1e-10;

/// Parameters of one synthetic ensemble.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthSpec {
    pub lattice: LatticeSpec,
    /// Base seed; every chip index derives an independent stream from it.
    pub seed: u64,
    pub count: u32,
    /// Length scale of the squared-exponential texture kernel.
    pub correlation_length: f64,
    /// Marginal variance of the texture.
    pub variance: f64,
    /// Peak value of the centre bump; zero yields pure clutter.
    pub bump_amplitude: f64,
    /// Length scale of the centre bump.
    pub bump_radius: f64,
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("correlation_length", self.correlation_length),
            ("variance", self.variance),
            ("bump_radius", self.bump_radius),
        ];
        for (what, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(QfdError::InvalidParameter {
                    what,
                    reason: format!("{value} is not a finite positive number"),
                });
            }
        }
        if !self.bump_amplitude.is_finite() {
            return Err(QfdError::InvalidParameter {
                what: "bump_amplitude",
                reason: "must be finite".into(),
            });
        }
        Ok(())
    }
}

/// Draws the ensemble described by `spec`. Deterministic in all of the
/// spec's fields and independent of thread count.
pub fn synthesise(spec: &SynthSpec) -> Result<ChipSet> {
    spec.validate()?;
    let positions = spec.lattice.positions();
    let pixels = spec.lattice.pixel_count();

    let two_l2 = 2.0 * spec.correlation_length * spec.correlation_length;
    let mut kernel = DMatrix::zeros(pixels, pixels);
    for p in 0..pixels {
        for q in 0..pixels {
            let dx = positions[p].0 - positions[q].0;
            let dy = positions[p].1 - positions[q].1;
            kernel[(p, q)] = spec.variance * (-(dx * dx + dy * dy) / two_l2).exp();
        }
        kernel[(p, p)] += KERNEL_JITTER * spec.variance;
    }
    let factor = Cholesky::new(kernel).ok_or(QfdError::InvalidParameter {
        what: "texture kernel",
        reason: "kernel is not positive definite at these settings".into(),
    })?;
    let lower = factor.l();

    let two_r2 = 2.0 * spec.bump_radius * spec.bump_radius;
    let bump = DVector::from_fn(pixels, |p, _| {
        let (x, y) = positions[p];
        spec.bump_amplitude * (-(x * x + y * y) / two_r2).exp()
    });

    let chips: Vec<Vec<f64>> = (0..spec.count)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(index as u64);
            let draw = DVector::from_fn(pixels, |_, _| rng.sample::<f64, _>(StandardNormal));
            (&lower * draw + &bump).as_slice().to_vec()
        })
        .collect();
    ChipSet::new(spec.lattice, chips)
}

/// Expands a chip set to its full group orbit: every element of `rep`
/// applied to every chip, in element order within each chip's block.
pub fn augment_chips(rep: &GroupRep, chips: &ChipSet) -> Result<ChipSet> {
    if rep.lattice() != chips.lattice() {
        return Err(QfdError::DimensionMismatch {
            context: "orbit augmentation",
            expected: chips.lattice().pixel_count(),
            actual: rep.lattice().pixel_count(),
        });
    }
    let mut out = Vec::with_capacity(chips.len() * rep.order());
    for chip in chips.chips() {
        for op in rep.ops() {
            out.push(op.apply(chip)?);
        }
    }
    ChipSet::new(chips.lattice(), out)
}
