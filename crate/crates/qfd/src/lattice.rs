//! Index arithmetic for square and hexagonal image lattices.
//!
//! Pixels are addressed three ways:
//!
//! * a 2-index pair `(i, j)`: row/column on the square lattice, arc
//!   position/ring on the hexagonal lattice, both 1-based;
//! * a flattened 2-index in `1..=N`;
//! * a flattened 4-index in `1..=N^2` addressing an ordered pixel pair,
//!   used by the quadratic feature block.
//!
//! All public indices are 1-based. Zero-based offsets are a private detail
//! of the modules that hold dense arrays.

use crate::error::{QfdError, Result};

/// Lattice family: square grid or hexagonal rings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LatticeKind {
    Square,
    Hexagonal,
}

impl std::fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LatticeKind::Square => write!(f, "square"),
            LatticeKind::Hexagonal => write!(f, "hexagonal"),
        }
    }
}

/// A concrete lattice: family plus side length (square) or ring count
/// (hexagonal).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LatticeSpec {
    kind: LatticeKind,
    n: usize,
}

/// Flattened pixel index in `1..=N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index2(usize);

/// Flattened ordered-pair index in `1..=N^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Index4(usize);

impl Index2 {
    /// 1-based value.
    pub fn get(self) -> usize {
        self.0
    }

    pub(crate) fn from_raw(value: usize) -> Self {
        Index2(value)
    }
}

impl Index4 {
    /// 1-based value.
    pub fn get(self) -> usize {
        self.0
    }

    pub(crate) fn from_raw(value: usize) -> Self {
        Index4(value)
    }
}

impl LatticeSpec {
    /// Builds a lattice description; `n >= 1`.
    pub fn new(kind: LatticeKind, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(QfdError::InvalidLattice(format!(
                "{kind} lattice needs n >= 1"
            )));
        }
        Ok(LatticeSpec { kind, n })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(LatticeKind::Square, n)
    }

    pub fn hexagonal(n: usize) -> Result<Self> {
        Self::new(LatticeKind::Hexagonal, n)
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    /// Side length (square) or ring count (hexagonal).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of pixels: `n^2` on the square lattice, `1 + 3n(n-1)` on the
    /// hexagonal one.
    pub fn pixel_count(&self) -> usize {
        match self.kind {
            LatticeKind::Square => self.n * self.n,
            LatticeKind::Hexagonal => 1 + 3 * self.n * (self.n - 1),
        }
    }

    /// Number of ordered pixel pairs, `N^2`.
    pub fn pair_count(&self) -> usize {
        self.pixel_count() * self.pixel_count()
    }

    /// Flattens a 2-index pair to `1..=N`.
    ///
    /// Square: `(row i, column j) -> i + (j-1) n`, so the row index varies
    /// fastest. Hexagonal: `(arc i, ring j)` walks the rings outwards,
    /// `i + min(1, j-1) + 3 (j-2)(j-1)`.
    pub fn flatten(&self, i: usize, j: usize) -> Result<Index2> {
        match self.kind {
            LatticeKind::Square => {
                check_range("row index i", i, self.n)?;
                check_range("column index j", j, self.n)?;
                Ok(Index2(i + (j - 1) * self.n))
            }
            LatticeKind::Hexagonal => {
                check_range("ring index j", j, self.n)?;
                check_range("arc index i", i, ring_size(j))?;
                let j = j as i64;
                let v = i as i64 + (j - 1).min(1) + 3 * (j - 2) * (j - 1);
                Ok(Index2(v as usize))
            }
        }
    }

    /// Inverts [`flatten`](Self::flatten), returning `(i, j)`.
    pub fn unflatten(&self, index: Index2) -> Result<(usize, usize)> {
        let v = index.0;
        check_range("flattened index", v, self.pixel_count())?;
        match self.kind {
            LatticeKind::Square => {
                let i = (v - 1) % self.n + 1;
                let j = (v - 1) / self.n + 1;
                Ok((i, j))
            }
            LatticeKind::Hexagonal => {
                if v == 1 {
                    return Ok((1, 1));
                }
                let mut j = 2;
                // First flattened index of ring j (j >= 2) is 2 + 3(j-2)(j-1).
                while j < self.n && v >= 2 + 3 * (j - 1) * j {
                    j += 1;
                }
                let i = v - (2 + 3 * (j - 2) * (j - 1)) + 1;
                Ok((i, j))
            }
        }
    }

    /// Validates a raw 1-based value as a flattened pixel index.
    pub fn index2(&self, value: usize) -> Result<Index2> {
        check_range("flattened index", value, self.pixel_count())?;
        Ok(Index2(value))
    }

    /// Validates a raw 1-based value as a flattened pair index.
    pub fn index4(&self, value: usize) -> Result<Index4> {
        check_range("pair index", value, self.pair_count())?;
        Ok(Index4(value))
    }

    /// Flattens an ordered pixel pair `(a, b)` to `a + (b-1) N` in `1..=N^2`.
    pub fn pair(&self, a: Index2, b: Index2) -> Result<Index4> {
        let n = self.pixel_count();
        check_range("first pair member", a.0, n)?;
        check_range("second pair member", b.0, n)?;
        Ok(Index4(a.0 + (b.0 - 1) * n))
    }

    /// Inverts [`pair`](Self::pair).
    pub fn unpair(&self, index: Index4) -> Result<(Index2, Index2)> {
        let n = self.pixel_count();
        check_range("pair index", index.0, n * n)?;
        let a = (index.0 - 1) % n + 1;
        let b = (index.0 - 1) / n + 1;
        Ok((Index2(a), Index2(b)))
    }

    /// Planar embedding of the pixels in flatten order, unit spacing.
    ///
    /// Square: pixel `(i, j)` sits at `(j - c, c - i)` with `c = (n+1)/2`,
    /// so rows run downwards and columns rightwards. Hexagonal: the centre
    /// sits at the origin and ring `j` is walked anticlockwise from the
    /// positive x-axis with unit edge length.
    pub fn positions(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.pixel_count());
        match self.kind {
            LatticeKind::Square => {
                let c = (self.n as f64 + 1.0) / 2.0;
                for v in 1..=self.pixel_count() {
                    let i = (v - 1) % self.n + 1;
                    let j = (v - 1) / self.n + 1;
                    out.push((j as f64 - c, c - i as f64));
                }
            }
            LatticeKind::Hexagonal => {
                out.push((0.0, 0.0));
                let a1 = (1.0, 0.0);
                let a2 = (0.5, 3f64.sqrt() / 2.0);
                // Walk directions visiting each ring anticlockwise from r*a1.
                let dirs = [
                    (a2.0 - a1.0, a2.1 - a1.1),
                    (-a1.0, -a1.1),
                    (-a2.0, -a2.1),
                    (a1.0 - a2.0, a1.1 - a2.1),
                    a1,
                    a2,
                ];
                for ring in 1..self.n {
                    let mut p = (ring as f64 * a1.0, ring as f64 * a1.1);
                    for dir in dirs {
                        for _ in 0..ring {
                            out.push(p);
                            p = (p.0 + dir.0, p.1 + dir.1);
                        }
                    }
                }
            }
        }
        out
    }
}

/// Pixels on hexagonal ring `j`: 1 for the centre, otherwise `6 (j-1)`.
pub fn ring_size(j: usize) -> usize {
    if j <= 1 {
        1
    } else {
        6 * (j - 1)
    }
}

fn check_range(what: &'static str, value: usize, bound: usize) -> Result<()> {
    if value == 0 || value > bound {
        return Err(QfdError::IndexOutOfRange { what, value, bound });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pixel_counts() {
        assert_eq!(LatticeSpec::square(1).unwrap().pixel_count(), 1);
        assert_eq!(LatticeSpec::square(3).unwrap().pixel_count(), 9);
        assert_eq!(LatticeSpec::square(25).unwrap().pixel_count(), 625);
        let hex: Vec<usize> = (1..=5)
            .map(|n| LatticeSpec::hexagonal(n).unwrap().pixel_count())
            .collect();
        assert_eq!(hex, [1, 7, 19, 37, 61]);
    }

    #[test]
    fn ring_sizes_sum_to_pixel_count() {
        for n in 1..=15 {
            let spec = LatticeSpec::hexagonal(n).unwrap();
            let total: usize = (1..=n).map(ring_size).sum();
            assert_eq!(total, spec.pixel_count());
        }
    }

    #[test]
    fn square_flatten_examples() {
        let spec = LatticeSpec::square(3).unwrap();
        assert_eq!(spec.flatten(2, 3).unwrap().get(), 8);
        assert_eq!(spec.flatten(1, 1).unwrap().get(), 1);
        let one = LatticeSpec::square(1).unwrap();
        assert_eq!(one.flatten(1, 1).unwrap().get(), 1);
    }

    #[test]
    fn hex_flatten_examples() {
        let spec = LatticeSpec::hexagonal(3).unwrap();
        assert_eq!(spec.flatten(1, 1).unwrap().get(), 1);
        assert_eq!(spec.flatten(6, 2).unwrap().get(), 7);
        assert_eq!(spec.flatten(1, 3).unwrap().get(), 8);
        assert_eq!(spec.flatten(12, 3).unwrap().get(), 19);
    }

    #[test]
    fn flatten_is_a_bijection() {
        for spec in [
            LatticeSpec::square(1).unwrap(),
            LatticeSpec::square(2).unwrap(),
            LatticeSpec::square(7).unwrap(),
            LatticeSpec::hexagonal(1).unwrap(),
            LatticeSpec::hexagonal(2).unwrap(),
            LatticeSpec::hexagonal(6).unwrap(),
        ] {
            let mut seen = vec![false; spec.pixel_count()];
            match spec.kind() {
                LatticeKind::Square => {
                    for j in 1..=spec.n() {
                        for i in 1..=spec.n() {
                            let v = spec.flatten(i, j).unwrap();
                            assert_eq!(spec.unflatten(v).unwrap(), (i, j));
                            assert!(!seen[v.get() - 1]);
                            seen[v.get() - 1] = true;
                        }
                    }
                }
                LatticeKind::Hexagonal => {
                    for j in 1..=spec.n() {
                        for i in 1..=ring_size(j) {
                            let v = spec.flatten(i, j).unwrap();
                            assert_eq!(spec.unflatten(v).unwrap(), (i, j));
                            assert!(!seen[v.get() - 1]);
                            seen[v.get() - 1] = true;
                        }
                    }
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn pair_examples_and_roundtrip() {
        let spec = LatticeSpec::square(3).unwrap();
        let a = spec.index2(2).unwrap();
        let b = spec.index2(3).unwrap();
        assert_eq!(spec.pair(a, b).unwrap().get(), 20);
        for v in 1..=spec.pair_count() {
            let idx = spec.index4(v).unwrap();
            let (a, b) = spec.unpair(idx).unwrap();
            assert_eq!(spec.pair(a, b).unwrap(), idx);
        }
    }

    #[test]
    fn out_of_range_is_rejected() {
        let spec = LatticeSpec::square(3).unwrap();
        assert!(spec.flatten(0, 1).is_err());
        assert!(spec.flatten(4, 1).is_err());
        assert!(spec.index2(10).is_err());
        assert!(spec.index4(82).is_err());
        let hex = LatticeSpec::hexagonal(2).unwrap();
        assert!(hex.flatten(2, 1).is_err());
        assert!(hex.flatten(7, 2).is_err());
        assert!(LatticeSpec::square(0).is_err());
    }

    #[test]
    fn square_positions_are_centred_unit_grid() {
        let spec = LatticeSpec::square(3).unwrap();
        let pos = spec.positions();
        let centre = spec.flatten(2, 2).unwrap().get() - 1;
        assert_eq!(pos[centre], (0.0, 0.0));
        let top_left = spec.flatten(1, 1).unwrap().get() - 1;
        assert_eq!(pos[top_left], (-1.0, 1.0));
        let bottom_right = spec.flatten(3, 3).unwrap().get() - 1;
        assert_eq!(pos[bottom_right], (1.0, -1.0));
    }

    #[test]
    fn hex_positions_walk_rings_anticlockwise() {
        let spec = LatticeSpec::hexagonal(3).unwrap();
        let pos = spec.positions();
        assert_eq!(pos.len(), 19);
        assert_eq!(pos[0], (0.0, 0.0));
        // Ring radii: corners at distance j-1, edge midpoints closer.
        for j in 2..=3 {
            let r = (j - 1) as f64;
            for i in 1..=ring_size(j) {
                let p = pos[spec.flatten(i, j).unwrap().get() - 1];
                let d = (p.0 * p.0 + p.1 * p.1).sqrt();
                assert!(d <= r + 1e-12 && d >= r * 3f64.sqrt() / 2.0 - 1e-12);
            }
        }
        // First pixel of each ring lies on the positive x-axis.
        for j in 2..=3 {
            let p = pos[spec.flatten(1, j).unwrap().get() - 1];
            assert!((p.0 - (j - 1) as f64).abs() < 1e-12 && p.1.abs() < 1e-12);
        }
        // Anticlockwise: second ring-1 pixel sits at 60 degrees.
        let p = pos[spec.flatten(2, 2).unwrap().get() - 1];
        assert!((p.0 - 0.5).abs() < 1e-12 && (p.1 - 3f64.sqrt() / 2.0).abs() < 1e-12);
        // Neighbouring walk steps are unit length.
        for j in 2..=3 {
            for i in 1..=ring_size(j) {
                let a = pos[spec.flatten(i, j).unwrap().get() - 1];
                let inext = i % ring_size(j) + 1;
                let b = pos[spec.flatten(inext, j).unwrap().get() - 1];
                let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
                assert!((d - 1.0).abs() < 1e-12);
            }
        }
    }
}
