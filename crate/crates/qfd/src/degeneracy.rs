//! Orbit partitions and the degeneracy reduction.
//!
//! The group action partitions pixel indices (rank 2) and ordered pixel
//! pairs (rank 4) into orbits. Pair orbits are additionally merged with
//! their transposes, matching the permutation symmetry of the quadratic
//! features: the pair values `x(a) x(b)` and `x(b) x(a)` coincide, so a
//! detector never needs to tell them apart.
//!
//! The degeneracy matrix `D` is the 0/1 matrix mapping each reduced class
//! to its members. It is never stored densely: `reduce` computes per-class
//! sums (the action of `D` transposed) and `expand` broadcasts class
//! values back to members (the action of `D`). Orbits are found by
//! union-find over the group's actions instead of scanning columns of the
//! summed representation matrices, which gives the identical partition
//! without `N^2 x N^2` storage.

use sha2::{Digest, Sha256};

use crate::error::{QfdError, Result};
use crate::lattice::LatticeSpec;
use crate::point_group::GroupRep;

/// A partition of `1..=domain` into orbit classes.
///
/// Classes are numbered `1..=class_count` in order of their smallest
/// member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrbitPartition {
    class_of: Vec<u32>,
    class_sizes: Vec<usize>,
    representatives: Vec<usize>,
}

impl OrbitPartition {
    pub fn domain_size(&self) -> usize {
        self.class_of.len()
    }

    pub fn class_count(&self) -> usize {
        self.class_sizes.len()
    }

    /// 1-based class of a 1-based element.
    pub fn class_of(&self, element: usize) -> Result<usize> {
        if element == 0 || element > self.class_of.len() {
            return Err(QfdError::IndexOutOfRange {
                what: "partition element",
                value: element,
                bound: self.class_of.len(),
            });
        }
        Ok(self.class_of[element - 1] as usize + 1)
    }

    /// Class sizes in class order.
    pub fn class_sizes(&self) -> &[usize] {
        &self.class_sizes
    }

    /// Smallest member of each class, 1-based, in class order.
    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    fn class0(&self, element0: usize) -> usize {
        self.class_of[element0] as usize
    }
}

struct UnionFind {
    parent: Vec<u32>,
}

impl UnionFind {
    fn new(size: usize) -> Self {
        UnionFind {
            parent: (0..size as u32).collect(),
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let grand = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grand;
            x = grand;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Point the larger root at the smaller so roots stay minimal.
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi as usize] = lo;
        }
    }

    fn into_partition(mut self) -> OrbitPartition {
        let size = self.parent.len();
        let mut class_of = vec![u32::MAX; size];
        let mut class_sizes = Vec::new();
        let mut representatives = Vec::new();
        let mut class_of_root = vec![u32::MAX; size];
        for (x, slot) in class_of.iter_mut().enumerate() {
            let root = self.find(x as u32) as usize;
            if class_of_root[root] == u32::MAX {
                class_of_root[root] = class_sizes.len() as u32;
                class_sizes.push(0);
                representatives.push(x + 1);
            }
            let class = class_of_root[root];
            *slot = class;
            class_sizes[class as usize] += 1;
        }
        OrbitPartition {
            class_of,
            class_sizes,
            representatives,
        }
    }
}

/// Orbits of pixel indices under the rank-2 action.
pub fn orbit_partition_rank2(rep: &GroupRep) -> OrbitPartition {
    let n = rep.lattice().pixel_count();
    let mut uf = UnionFind::new(n);
    for op in rep.ops() {
        for (dest, &src) in op.perm0().iter().enumerate() {
            uf.union(dest as u32, src as u32);
        }
    }
    uf.into_partition()
}

/// Orbits of ordered pair indices under the rank-4 action, with each pair
/// identified with its transpose.
pub fn orbit_partition_rank4(rep: &GroupRep) -> OrbitPartition {
    let mut uf = rank4_union(rep);
    let n = rep.lattice().pixel_count();
    for b in 0..n {
        for a in 0..b {
            uf.union((a + b * n) as u32, (b + a * n) as u32);
        }
    }
    uf.into_partition()
}

/// Orbits of ordered pair indices under the rank-4 action alone, without
/// transpose identification. Used by the class census.
pub fn orbit_partition_rank4_group_only(rep: &GroupRep) -> OrbitPartition {
    rank4_union(rep).into_partition()
}

fn rank4_union(rep: &GroupRep) -> UnionFind {
    let n = rep.lattice().pixel_count();
    let mut uf = UnionFind::new(n * n);
    for op in rep.ops() {
        let perm = op.perm0();
        for b in 0..n {
            let src_b = perm[b] * n;
            for (a, &src_a) in perm.iter().enumerate() {
                uf.union((a + b * n) as u32, (src_a + src_b) as u32);
            }
        }
    }
    uf
}

/// Per-pixel and per-pair degrees of freedom of a reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofCounts {
    pub pixels: usize,
    pub linear: usize,
    pub quadratic: usize,
}

impl DofCounts {
    pub fn total(&self) -> usize {
        self.linear + self.quadratic
    }
}

/// The block-diagonal degeneracy reduction for one group representation:
/// a rank-2 block over pixels and a rank-4 block over ordered pairs.
#[derive(Debug, Clone)]
pub struct DegeneracyMatrix {
    lattice: LatticeSpec,
    selector: String,
    linear: OrbitPartition,
    quadratic: OrbitPartition,
    fingerprint: u64,
}

impl DegeneracyMatrix {
    pub fn build(rep: &GroupRep) -> DegeneracyMatrix {
        let lattice = rep.lattice();
        let selector = rep.selector();
        let linear = orbit_partition_rank2(rep);
        let quadratic = orbit_partition_rank4(rep);
        let fingerprint = fingerprint(lattice, &selector, &linear, &quadratic);
        DegeneracyMatrix {
            lattice,
            selector,
            linear,
            quadratic,
            fingerprint,
        }
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    /// Canonical selector of the group this reduction was built from.
    pub fn selector(&self) -> &str {
        &self.selector
    }

    pub fn linear(&self) -> &OrbitPartition {
        &self.linear
    }

    pub fn quadratic(&self) -> &OrbitPartition {
        &self.quadratic
    }

    pub fn dof(&self) -> DofCounts {
        DofCounts {
            pixels: self.lattice.pixel_count(),
            linear: self.linear.class_count(),
            quadratic: self.quadratic.class_count(),
        }
    }

    /// Dimension of full coordinates, `N + N^2`.
    pub fn full_dim(&self) -> usize {
        let n = self.lattice.pixel_count();
        n + n * n
    }

    /// Identifies this reduction: lattice, selector and both partitions.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Per-class sums of a full-coordinate vector `[linear; quadratic]`.
    pub fn reduce(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.full_dim() {
            return Err(QfdError::DimensionMismatch {
                context: "reduce",
                expected: self.full_dim(),
                actual: full.len(),
            });
        }
        let n = self.lattice.pixel_count();
        let offset = self.linear.class_count();
        let mut out = vec![0.0; self.dof().total()];
        for (p, &v) in full[..n].iter().enumerate() {
            out[self.linear.class0(p)] += v;
        }
        for (q, &v) in full[n..].iter().enumerate() {
            out[offset + self.quadratic.class0(q)] += v;
        }
        Ok(out)
    }

    /// Reduced features of a chip: per-class sums of the pixel values and
    /// of the ordered pair products, without materialising the length
    /// `N + N^2` feature vector.
    pub fn reduce_chip(&self, chip: &[f64]) -> Result<Vec<f64>> {
        let n = self.lattice.pixel_count();
        if chip.len() != n {
            return Err(QfdError::DimensionMismatch {
                context: "reduce_chip",
                expected: n,
                actual: chip.len(),
            });
        }
        let offset = self.linear.class_count();
        let mut out = vec![0.0; self.dof().total()];
        for (p, &v) in chip.iter().enumerate() {
            out[self.linear.class0(p)] += v;
        }
        for b in 0..n {
            let row = b * n;
            let xb = chip[b];
            for a in 0..n {
                out[offset + self.quadratic.class0(a + row)] += chip[a] * xb;
            }
        }
        Ok(out)
    }

    /// Broadcasts class values back to members, the transpose of
    /// [`reduce`](Self::reduce).
    pub fn expand(&self, reduced: &[f64]) -> Result<Vec<f64>> {
        if reduced.len() != self.dof().total() {
            return Err(QfdError::DimensionMismatch {
                context: "expand",
                expected: self.dof().total(),
                actual: reduced.len(),
            });
        }
        let n = self.lattice.pixel_count();
        let offset = self.linear.class_count();
        let mut out = Vec::with_capacity(self.full_dim());
        for p in 0..n {
            out.push(reduced[self.linear.class0(p)]);
        }
        for q in 0..n * n {
            out.push(reduced[offset + self.quadratic.class0(q)]);
        }
        Ok(out)
    }
}

fn fingerprint(
    lattice: LatticeSpec,
    selector: &str,
    linear: &OrbitPartition,
    quadratic: &OrbitPartition,
) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update([match lattice.kind() {
        crate::lattice::LatticeKind::Square => 0u8,
        crate::lattice::LatticeKind::Hexagonal => 1u8,
    }]);
    hasher.update((lattice.n() as u32).to_le_bytes());
    hasher.update((selector.len() as u32).to_le_bytes());
    hasher.update(selector.as_bytes());
    for &c in &linear.class_of {
        hasher.update(c.to_le_bytes());
    }
    for &c in &quadratic.class_of {
        hasher.update(c.to_le_bytes());
    }
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is long enough"))
}

/// One class of the stabiliser census.
#[derive(Debug, Clone, Copy)]
pub struct CensusEntry {
    /// 1-based smallest member.
    pub representative: usize,
    pub class_size: usize,
    /// Number of group elements fixing the representative.
    pub stabiliser: usize,
}

/// Stabiliser census of the rank-2 classes.
pub fn census_rank2(rep: &GroupRep) -> Vec<CensusEntry> {
    let partition = orbit_partition_rank2(rep);
    partition
        .representatives()
        .iter()
        .zip(partition.class_sizes())
        .map(|(&member, &class_size)| {
            let p0 = member - 1;
            let stabiliser = rep
                .ops()
                .iter()
                .filter(|op| op.perm0()[p0] == p0)
                .count();
            CensusEntry {
                representative: member,
                class_size,
                stabiliser,
            }
        })
        .collect()
}

/// Stabiliser census of the rank-4 classes under the group action alone.
pub fn census_rank4(rep: &GroupRep) -> Vec<CensusEntry> {
    let n = rep.lattice().pixel_count();
    let partition = orbit_partition_rank4_group_only(rep);
    partition
        .representatives()
        .iter()
        .zip(partition.class_sizes())
        .map(|(&member, &class_size)| {
            let q = member - 1;
            let (a, b) = (q % n, q / n);
            let stabiliser = rep
                .ops()
                .iter()
                .filter(|op| op.perm0()[a] == a && op.perm0()[b] == b)
                .count();
            CensusEntry {
                representative: member,
                class_size,
                stabiliser,
            }
        })
        .collect()
}
