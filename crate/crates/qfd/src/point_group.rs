//! Point-group representations acting on lattice pixels.
//!
//! The square lattice admits the eight-element dihedral symmetry group of
//! the square, the hexagonal lattice the twelve-element group of the
//! regular hexagon. Elements are stored as pixel permutations, never as
//! dense matrices, and the rank-4 action on ordered pixel pairs is derived
//! from the rank-2 permutation on demand instead of materialising `N^2 x
//! N^2` matrices.
//!
//! Labels follow a fixed scheme with `h` the rotation count (4 on the
//! square lattice, 6 on the hexagonal): `T1` is the identity, `T{1+k}` the
//! anticlockwise rotation by `k` turns of `1/h`, `T{h+1}` the reflection in
//! the x-axis, and `T{h+1+k}` the product of `T{1+k}` with `T{h+1}`
//! (reflection first). Products compose right to left: `a * b` applies `b`
//! first.

use crate::error::{QfdError, Result};
use crate::lattice::{Index2, Index4, LatticeKind, LatticeSpec};

/// Number of group elements for a lattice family: 8 or 12.
pub fn group_order(kind: LatticeKind) -> usize {
    match kind {
        LatticeKind::Square => 8,
        LatticeKind::Hexagonal => 12,
    }
}

fn rotation_count(kind: LatticeKind) -> usize {
    group_order(kind) / 2
}

/// Label of a group element, `T1..=T8` or `T1..=T12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OpLabel(u8);

impl OpLabel {
    /// Builds the label `T{index}`; `index` must lie in `1..=group_order`.
    pub fn new(kind: LatticeKind, index: usize) -> Result<Self> {
        if index == 0 || index > group_order(kind) {
            return Err(QfdError::UnknownLabel(format!("T{index}")));
        }
        Ok(OpLabel(index as u8))
    }

    /// 1-based label index.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Splits into (rotation exponent, reflected) against the label scheme.
    fn parts(self, kind: LatticeKind) -> (usize, bool) {
        let h = rotation_count(kind);
        let idx = self.index() - 1;
        (idx % h, idx >= h)
    }

    fn from_parts(kind: LatticeKind, k: usize, reflected: bool) -> Self {
        let h = rotation_count(kind);
        let idx = k % h + if reflected { h } else { 0 };
        OpLabel(idx as u8 + 1)
    }

    /// Dihedral product `self * other`, `other` applied first.
    fn product(self, other: OpLabel, kind: LatticeKind) -> OpLabel {
        let h = rotation_count(kind);
        let (k1, f1) = self.parts(kind);
        let (k2, f2) = other.parts(kind);
        if f1 {
            // A reflection conjugates rotations into their inverses.
            OpLabel::from_parts(kind, (h + k1 - k2) % h, !f2)
        } else {
            OpLabel::from_parts(kind, (k1 + k2) % h, f2)
        }
    }

    fn inverse(self, kind: LatticeKind) -> OpLabel {
        let h = rotation_count(kind);
        let (k, f) = self.parts(kind);
        if f {
            self
        } else {
            OpLabel::from_parts(kind, (h - k) % h, false)
        }
    }
}

impl std::fmt::Display for OpLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "T{}", self.0)
    }
}

/// Parses a label of the form `T3`.
pub fn parse_label(kind: LatticeKind, s: &str) -> Result<OpLabel> {
    let err = || QfdError::UnknownLabel(s.to_string());
    let digits = s.strip_prefix('T').ok_or_else(err)?;
    let index: usize = digits.parse().map_err(|_| err())?;
    OpLabel::new(kind, index)
}

/// One group element: a labelled pixel permutation.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryOp {
    kind: LatticeKind,
    label: OpLabel,
    /// `perm[d]` is the 0-based source pixel feeding 0-based destination `d`.
    perm: Vec<usize>,
}

impl SymmetryOp {
    pub fn label(&self) -> OpLabel {
        self.label
    }

    pub fn pixel_count(&self) -> usize {
        self.perm.len()
    }

    pub(crate) fn perm0(&self) -> &[usize] {
        &self.perm
    }

    /// Source pixel feeding `dest` under the rank-2 action.
    pub fn source_pixel(&self, dest: Index2) -> Index2 {
        Index2::from_raw(self.perm[dest.get() - 1] + 1)
    }

    /// Source pair feeding `dest` under the rank-4 action, computed
    /// componentwise from the rank-2 permutation.
    pub fn source_pair(&self, dest: Index4) -> Index4 {
        let n = self.perm.len();
        let q = dest.get() - 1;
        let (a, b) = (q % n, q / n);
        Index4::from_raw(self.perm[a] + self.perm[b] * n + 1)
    }

    /// Applies the rank-2 action to a chip: `y[d] = x[perm[d]]`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.perm.len() {
            return Err(QfdError::DimensionMismatch {
                context: "rank-2 action",
                expected: self.perm.len(),
                actual: x.len(),
            });
        }
        Ok(self.perm.iter().map(|&s| x[s]).collect())
    }

    /// Applies the rank-4 action to a length-`N^2` pair-value vector.
    pub fn apply_quadratic(&self, x2: &[f64]) -> Result<Vec<f64>> {
        let n = self.perm.len();
        if x2.len() != n * n {
            return Err(QfdError::DimensionMismatch {
                context: "rank-4 action",
                expected: n * n,
                actual: x2.len(),
            });
        }
        let mut out = Vec::with_capacity(n * n);
        for b in 0..n {
            for a in 0..n {
                out.push(x2[self.perm[a] + self.perm[b] * n]);
            }
        }
        Ok(out)
    }

    /// Group product `self * other`, `other` applied first.
    pub fn compose(&self, other: &SymmetryOp) -> SymmetryOp {
        let perm = self.perm.iter().map(|&d| other.perm[d]).collect();
        SymmetryOp {
            kind: self.kind,
            label: self.label.product(other.label, self.kind),
            perm,
        }
    }

    pub fn inverse(&self) -> SymmetryOp {
        let mut perm = vec![0; self.perm.len()];
        for (d, &s) in self.perm.iter().enumerate() {
            perm[s] = d;
        }
        SymmetryOp {
            kind: self.kind,
            label: self.label.inverse(self.kind),
            perm,
        }
    }

    /// Wraps an externally supplied permutation, deriving its label by
    /// matching it against the lattice's symmetry elements.
    pub fn from_permutation(spec: LatticeSpec, perm: Vec<usize>) -> Result<Self> {
        let n = spec.pixel_count();
        if perm.len() != n {
            return Err(QfdError::DimensionMismatch {
                context: "permutation length",
                expected: n,
                actual: perm.len(),
            });
        }
        let mut seen = vec![false; n];
        for &s in &perm {
            if s >= n || seen[s] {
                return Err(QfdError::NotAPermutation(format!(
                    "source {s} repeated or out of range"
                )));
            }
            seen[s] = true;
        }
        let label = canonical_elements(spec)
            .into_iter()
            .find(|op| op.perm == perm)
            .map(|op| op.label)
            .ok_or(QfdError::NotALatticeSymmetry(spec.kind()))?;
        Ok(SymmetryOp {
            kind: spec.kind(),
            label,
            perm,
        })
    }
}

fn identity_op(spec: LatticeSpec) -> SymmetryOp {
    SymmetryOp {
        kind: spec.kind(),
        label: OpLabel(1),
        perm: (0..spec.pixel_count()).collect(),
    }
}

/// Builds one element directly from its closed-form index map.
///
/// Square-lattice elements move pixel `(i', j')` to `(i, j)`:
///
/// | label | destination          |
/// |-------|----------------------|
/// | T1    | `(i', j')`           |
/// | T2    | `(n-j'+1, i')`       |
/// | T3    | `(n-i'+1, n-j'+1)`   |
/// | T4    | `(j', n-i'+1)`       |
/// | T5    | `(n-i'+1, j')`       |
/// | T6    | `(n-j'+1, n-i'+1)`   |
/// | T7    | `(i', n-j'+1)`       |
/// | T8    | `(j', i')`           |
///
/// Hexagonal-lattice elements act ring by ring. On ring `j'` with `L =
/// 6(j'-1)` arc positions, rotations `T{1+k}` move arc `i'` to `(i'-1 +
/// k(j'-1)) mod L + 1` and reflections `T{7+k}` move it to `((6+k)(j'-1) -
/// (i'-1)) mod L + 1`, with the convention that `x mod 0 = 0` so every
/// element fixes the centre pixel.
pub fn closed_form_op(spec: LatticeSpec, label: OpLabel) -> Result<SymmetryOp> {
    OpLabel::new(spec.kind(), label.index())?;
    let n = spec.n();
    let count = spec.pixel_count();
    let mut perm = vec![usize::MAX; count];
    match spec.kind() {
        LatticeKind::Square => {
            for jp in 1..=n {
                for ip in 1..=n {
                    let (i, j) = match label.index() {
                        1 => (ip, jp),
                        2 => (n - jp + 1, ip),
                        3 => (n - ip + 1, n - jp + 1),
                        4 => (jp, n - ip + 1),
                        5 => (n - ip + 1, jp),
                        6 => (n - jp + 1, n - ip + 1),
                        7 => (ip, n - jp + 1),
                        8 => (jp, ip),
                        _ => unreachable!("label validated above"),
                    };
                    let dest = spec.flatten(i, j)?.get() - 1;
                    perm[dest] = spec.flatten(ip, jp)?.get() - 1;
                }
            }
        }
        LatticeKind::Hexagonal => {
            perm[0] = 0;
            let (k, reflected) = label.parts(spec.kind());
            for jp in 2..=n {
                let ring = (jp - 1) as i64;
                let len = 6 * ring;
                for ipx in 1..=(6 * (jp - 1)) {
                    let ip = ipx as i64;
                    let expr = if reflected {
                        (6 + k as i64) * ring - (ip - 1)
                    } else {
                        (ip - 1) + k as i64 * ring
                    };
                    let dest_arc = expr.rem_euclid(len) as usize + 1;
                    let dest = spec.flatten(dest_arc, jp)?.get() - 1;
                    perm[dest] = spec.flatten(ipx, jp)?.get() - 1;
                }
            }
        }
    }
    debug_assert!(perm.iter().all(|&s| s != usize::MAX));
    Ok(SymmetryOp {
        kind: spec.kind(),
        label,
        perm,
    })
}

/// The two generators: the smallest anticlockwise rotation and the
/// reflection in the x-axis.
pub fn build_generators(spec: LatticeSpec) -> Vec<SymmetryOp> {
    let kind = spec.kind();
    let h = rotation_count(kind);
    let rotation = OpLabel::new(kind, 2).expect("rotation label");
    let mirror = OpLabel::new(kind, h + 1).expect("mirror label");
    vec![
        closed_form_op(spec, rotation).expect("closed-form rotation"),
        closed_form_op(spec, mirror).expect("closed-form mirror"),
    ]
}

/// All `s` elements produced by repeated multiplication of the generators,
/// ordered by label.
fn canonical_elements(spec: LatticeSpec) -> Vec<SymmetryOp> {
    let h = rotation_count(spec.kind());
    let gens = build_generators(spec);
    let (rotation, mirror) = (&gens[0], &gens[1]);
    let mut ops = Vec::with_capacity(2 * h);
    let mut power = identity_op(spec);
    for _ in 0..h {
        ops.push(power.compose(mirror));
        ops.push(power.clone());
        power = rotation.compose(&power);
    }
    ops.sort_by_key(|op| op.label);
    debug_assert!(ops.iter().enumerate().all(|(i, op)| op.label.index() == i + 1));
    ops
}

/// A set of labelled group elements over one lattice.
#[derive(Debug, Clone)]
pub struct GroupRep {
    lattice: LatticeSpec,
    ops: Vec<SymmetryOp>,
}

impl GroupRep {
    /// The full point group: all 8 (square) or 12 (hexagonal) elements.
    pub fn full(spec: LatticeSpec) -> GroupRep {
        GroupRep {
            lattice: spec,
            ops: canonical_elements(spec),
        }
    }

    pub fn lattice(&self) -> LatticeSpec {
        self.lattice
    }

    /// Number of elements, counted as labelled elements.
    pub fn order(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[SymmetryOp] {
        &self.ops
    }

    pub fn op(&self, label: OpLabel) -> Option<&SymmetryOp> {
        self.ops.iter().find(|op| op.label == label)
    }

    pub fn is_full(&self) -> bool {
        self.ops.len() == group_order(self.lattice.kind())
    }

    /// Canonical selector string: `full`, or the sorted label list such as
    /// `T1,T3`.
    pub fn selector(&self) -> String {
        if self.is_full() {
            return "full".to_string();
        }
        let labels: Vec<String> = self.ops.iter().map(|op| op.label.to_string()).collect();
        labels.join(",")
    }

    /// Restricts to a catalogued subgroup given by its labels.
    pub fn subgroup(&self, labels: &[OpLabel]) -> Result<GroupRep> {
        let kind = self.lattice.kind();
        let mut indices: Vec<usize> = labels.iter().map(|l| l.index()).collect();
        indices.sort_unstable();
        indices.dedup();
        if !catalogue(kind).contains(&indices) {
            return Err(QfdError::UnknownSubgroup {
                selector: indices
                    .iter()
                    .map(|i| format!("T{i}"))
                    .collect::<Vec<_>>()
                    .join(","),
                kind,
            });
        }
        let mut ops = Vec::with_capacity(indices.len());
        for index in indices {
            let label = OpLabel::new(kind, index)?;
            let op = self
                .op(label)
                .ok_or_else(|| QfdError::UnknownLabel(label.to_string()))?;
            ops.push(op.clone());
        }
        Ok(GroupRep {
            lattice: self.lattice,
            ops,
        })
    }

    /// Builds a catalogued group from a selector string.
    pub fn by_selector(spec: LatticeSpec, selector: &str) -> Result<GroupRep> {
        let labels = parse_selector(spec.kind(), selector)?;
        GroupRep::full(spec).subgroup(&labels)
    }
}

/// Catalogued subgroups, as sorted 1-based label lists.
///
/// Square: the full group, the rotation group, the two four-element
/// reflection groups (axis-aligned and diagonal mirrors), the half-turn
/// pair, the four single-mirror pairs, and the trivial group. Hexagonal:
/// the full group, the rotation group, the two six-element triangle
/// groups, the three-fold rotation group, the six single-mirror pairs, and
/// the trivial group.
fn catalogue(kind: LatticeKind) -> Vec<Vec<usize>> {
    match kind {
        LatticeKind::Square => vec![
            (1..=8).collect(),
            vec![1, 2, 3, 4],
            vec![1, 3, 5, 7],
            vec![1, 3, 6, 8],
            vec![1, 3],
            vec![1, 5],
            vec![1, 6],
            vec![1, 7],
            vec![1, 8],
            vec![1],
        ],
        LatticeKind::Hexagonal => {
            let mut sets: Vec<Vec<usize>> = vec![
                (1..=12).collect(),
                (1..=6).collect(),
                vec![1, 3, 5, 7, 9, 11],
                vec![1, 3, 5, 8, 10, 12],
                vec![1, 3, 5],
            ];
            sets.extend((7..=12).map(|k| vec![1, k]));
            sets.push(vec![1]);
            sets
        }
    }
}

/// Lists the catalogued selector strings for a lattice family.
pub fn catalogued_selectors(kind: LatticeKind) -> Vec<String> {
    catalogue(kind)
        .into_iter()
        .map(|set| {
            if set.len() == group_order(kind) {
                "full".to_string()
            } else {
                set.iter()
                    .map(|i| format!("T{i}"))
                    .collect::<Vec<_>>()
                    .join(",")
            }
        })
        .collect()
}

/// Parses `full`, `trivial`, or a comma-separated label list.
pub fn parse_selector(kind: LatticeKind, selector: &str) -> Result<Vec<OpLabel>> {
    let trimmed = selector.trim();
    match trimmed {
        "full" => (1..=group_order(kind))
            .map(|i| OpLabel::new(kind, i))
            .collect(),
        "trivial" => Ok(vec![OpLabel::new(kind, 1)?]),
        _ => trimmed
            .split(',')
            .map(|part| parse_label(kind, part.trim()))
            .collect(),
    }
}

/// Generates the group closure of labelled elements.
///
/// All inputs must be symmetries of `spec`'s lattice; the closure is taken
/// over the abstract dihedral products so the result stays labelled even
/// where the permutation representation is not faithful (the single-pixel
/// lattices).
pub fn generate_group(spec: LatticeSpec, generators: &[SymmetryOp]) -> Result<GroupRep> {
    let kind = spec.kind();
    let canonical = canonical_elements(spec);
    let mut present = vec![false; group_order(kind) + 1];
    present[1] = true;
    for gen in generators {
        if gen.kind != kind || gen.perm.len() != spec.pixel_count() {
            return Err(QfdError::NotALatticeSymmetry(kind));
        }
        if canonical[gen.label.index() - 1].perm != gen.perm {
            return Err(QfdError::NotALatticeSymmetry(kind));
        }
        present[gen.label.index()] = true;
    }
    let bound = 2 * group_order(kind);
    for round in 0.. {
        if round > bound {
            return Err(QfdError::ClosureBound { bound });
        }
        let members: Vec<usize> = (1..present.len()).filter(|&i| present[i]).collect();
        let mut grew = false;
        for &a in &members {
            for &b in &members {
                let la = OpLabel(a as u8);
                let lb = OpLabel(b as u8);
                let product = la.product(lb, kind).index();
                if !present[product] {
                    present[product] = true;
                    grew = true;
                }
            }
        }
        if !grew {
            break;
        }
    }
    let ops: Vec<SymmetryOp> = canonical
        .into_iter()
        .filter(|op| present[op.label.index()])
        .collect();
    Ok(GroupRep { lattice: spec, ops })
}

/// Outcome of the group-axiom checks.
#[derive(Debug, Clone)]
pub struct GroupCheck {
    pub violations: Vec<String>,
}

impl GroupCheck {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the group axioms on the stored permutations: permutation
/// validity, identity, closure, inverses, and associativity over all
/// element triples. Full groups on lattices with more than one pixel are
/// additionally required to be non-Abelian, witnessed on the square
/// lattice by `T5 T6 = T4` differing from `T6 T5 = T2`.
pub fn verify_group(rep: &GroupRep) -> GroupCheck {
    let mut violations = Vec::new();
    let n = rep.lattice.pixel_count();
    for op in &rep.ops {
        if op.perm.len() != n {
            violations.push(format!("{}: permutation length {}", op.label, op.perm.len()));
            continue;
        }
        let mut seen = vec![false; n];
        for &s in &op.perm {
            if s >= n || seen[s] {
                violations.push(format!("{}: not a permutation", op.label));
                break;
            }
            seen[s] = true;
        }
    }
    if !violations.is_empty() {
        return GroupCheck { violations };
    }

    let identity: Vec<usize> = (0..n).collect();
    match rep.op(OpLabel(1)) {
        Some(op) if op.perm == identity => {}
        _ => violations.push("identity element T1 missing or not the identity map".into()),
    }

    let member = |perm: &[usize]| rep.ops.iter().any(|op| op.perm == perm);
    for a in &rep.ops {
        for b in &rep.ops {
            let ab = a.compose(b);
            if !member(&ab.perm) {
                violations.push(format!("closure violated: {} * {}", a.label, b.label));
            }
        }
        if !member(&a.inverse().perm) {
            violations.push(format!("inverse of {} missing", a.label));
        }
    }

    for a in &rep.ops {
        for b in &rep.ops {
            let ab = a.compose(b);
            for c in &rep.ops {
                let left = ab.compose(c);
                let right = a.compose(&b.compose(c));
                if left.perm != right.perm {
                    violations.push(format!(
                        "associativity violated on ({}, {}, {})",
                        a.label, b.label, c.label
                    ));
                }
            }
        }
    }

    if rep.is_full() && n > 1 {
        match rep.lattice.kind() {
            LatticeKind::Square => {
                let op = |i: usize| rep.op(OpLabel(i as u8)).expect("full group element");
                let t5t6 = op(5).compose(op(6));
                let t6t5 = op(6).compose(op(5));
                if t5t6.perm != op(4).perm
                    || t6t5.perm != op(2).perm
                    || t5t6.perm == t6t5.perm
                {
                    violations.push("non-Abelian witness T5 T6 = T4 != T2 = T6 T5 failed".into());
                }
            }
            LatticeKind::Hexagonal => {
                let op = |i: usize| rep.op(OpLabel(i as u8)).expect("full group element");
                if op(2).compose(op(7)).perm == op(7).compose(op(2)).perm {
                    violations.push("full hexagonal group unexpectedly Abelian on T2, T7".into());
                }
            }
        }
    }

    GroupCheck { violations }
}

#[cfg(test)]
pub(crate) fn corrupt_first_rotation(rep: &mut GroupRep) {
    let op = &mut rep.ops[1];
    op.perm.swap(0, 1);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> LatticeSpec {
        LatticeSpec::square(n).unwrap()
    }

    fn hexagonal(n: usize) -> LatticeSpec {
        LatticeSpec::hexagonal(n).unwrap()
    }

    fn label(kind: LatticeKind, i: usize) -> OpLabel {
        OpLabel::new(kind, i).unwrap()
    }

    #[test]
    fn square_rotation_example() {
        // Anticlockwise quarter turn on n = 3: destination (3, 1) is fed by
        // source (1, 1).
        let spec = square(3);
        let t2 = closed_form_op(spec, label(spec.kind(), 2)).unwrap();
        let dest = spec.flatten(3, 1).unwrap();
        assert_eq!(t2.source_pixel(dest), spec.flatten(1, 1).unwrap());
    }

    #[test]
    fn square_quarter_turn_on_2x2_matches_hand_rotation() {
        // Chip values laid out as x(1,1)=1, x(2,1)=2, x(1,2)=3, x(2,2)=4;
        // rotating the picture anticlockwise by hand gives (3, 1, 4, 2) in
        // flatten order.
        let spec = square(2);
        let t2 = closed_form_op(spec, label(spec.kind(), 2)).unwrap();
        let rotated = t2.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(rotated, vec![3.0, 1.0, 4.0, 2.0]);
    }

    #[test]
    fn square_mirror_flips_rows() {
        let spec = square(3);
        let t5 = closed_form_op(spec, label(spec.kind(), 5)).unwrap();
        for j in 1..=3 {
            for i in 1..=3 {
                let dest = spec.flatten(i, j).unwrap();
                assert_eq!(t5.source_pixel(dest), spec.flatten(4 - i, j).unwrap());
            }
        }
    }

    #[test]
    fn hex_elements_fix_the_centre_and_advance_rings() {
        let spec = hexagonal(3);
        let full = GroupRep::full(spec);
        let centre = spec.flatten(1, 1).unwrap();
        for op in full.ops() {
            assert_eq!(op.source_pixel(centre), centre);
        }
        // One rotation step advances ring j by j-1 arc positions, so the
        // pixel landing at arc 2 of ring 2 came from arc 1.
        let t2 = full.op(label(spec.kind(), 2)).unwrap();
        assert_eq!(
            t2.source_pixel(spec.flatten(2, 2).unwrap()),
            spec.flatten(1, 2).unwrap()
        );
        // On ring 3 the same step spans two arc positions.
        assert_eq!(
            t2.source_pixel(spec.flatten(3, 3).unwrap()),
            spec.flatten(1, 3).unwrap()
        );
    }

    #[test]
    fn closed_forms_match_generated_products() {
        for spec in [square(1), square(2), square(3), square(4), square(5)] {
            let generated = canonical_elements(spec);
            for op in &generated {
                let direct = closed_form_op(spec, op.label()).unwrap();
                assert_eq!(op.perm, direct.perm, "{} on {:?}", op.label(), spec);
            }
        }
        for spec in [hexagonal(1), hexagonal(2), hexagonal(3), hexagonal(4)] {
            let generated = canonical_elements(spec);
            for op in &generated {
                let direct = closed_form_op(spec, op.label()).unwrap();
                assert_eq!(op.perm, direct.perm, "{} on {:?}", op.label(), spec);
            }
        }
    }

    /// Independent construction of every element as a planar isometry: the
    /// source pixel of each destination is found by moving the destination
    /// position through the inverse isometry and matching coordinates.
    fn geometric_op(spec: LatticeSpec, lab: OpLabel) -> SymmetryOp {
        let half = rotation_count(spec.kind());
        let (k, reflected) = lab.parts(spec.kind());
        let angle = -(k as f64) * 2.0 * std::f64::consts::PI / half as f64;
        let (sin, cos) = angle.sin_cos();
        let positions = spec.positions();
        let find = |x: f64, y: f64| -> usize {
            let mut best = usize::MAX;
            for (idx, &(px, py)) in positions.iter().enumerate() {
                if (px - x).abs() < 1e-9 && (py - y).abs() < 1e-9 {
                    assert_eq!(best, usize::MAX, "positions are distinct");
                    best = idx;
                }
            }
            assert_ne!(best, usize::MAX, "no pixel at ({x}, {y})");
            best
        };
        let perm: Vec<usize> = positions
            .iter()
            .map(|&(x, y)| {
                // Inverse of rotation-after-mirror: rotate back, then mirror.
                let (rx, ry) = (cos * x - sin * y, sin * x + cos * y);
                if reflected {
                    find(rx, -ry)
                } else {
                    find(rx, ry)
                }
            })
            .collect();
        SymmetryOp {
            kind: spec.kind(),
            label: lab,
            perm,
        }
    }

    #[test]
    fn closed_forms_match_planar_isometries() {
        for spec in [
            square(2),
            square(3),
            square(4),
            square(5),
            hexagonal(2),
            hexagonal(3),
            hexagonal(4),
        ] {
            for op in GroupRep::full(spec).ops() {
                let geo = geometric_op(spec, op.label());
                assert_eq!(op.perm, geo.perm, "{} on {:?}", op.label(), spec);
            }
        }
    }

    #[test]
    fn full_groups_have_distinct_elements_beyond_one_pixel() {
        for spec in [square(2), square(3), hexagonal(2), hexagonal(3)] {
            let full = GroupRep::full(spec);
            assert_eq!(full.order(), group_order(spec.kind()));
            for a in 0..full.order() {
                for b in 0..a {
                    assert_ne!(full.ops()[a].perm, full.ops()[b].perm);
                }
            }
        }
        // On a single pixel every element represents as the identity but
        // the labelled element count is unchanged.
        assert_eq!(GroupRep::full(square(1)).order(), 8);
        assert_eq!(GroupRep::full(hexagonal(1)).order(), 12);
    }

    #[test]
    fn rotations_have_full_order() {
        for spec in [square(3), hexagonal(3)] {
            let h = rotation_count(spec.kind());
            let t2 = closed_form_op(spec, label(spec.kind(), 2)).unwrap();
            let mut power = identity_op(spec);
            for step in 1..=h {
                power = t2.compose(&power);
                let is_identity = power.perm.iter().enumerate().all(|(d, &s)| d == s);
                assert_eq!(is_identity, step == h);
            }
            assert_eq!(power.label().index(), 1);
        }
    }

    #[test]
    fn quadratic_action_is_the_square_of_the_linear_action() {
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for spec in [square(3), hexagonal(2)] {
            let n = spec.pixel_count();
            let x: Vec<f64> = (0..n).map(|_| next() - 0.5).collect();
            let outer: Vec<f64> = (0..n * n).map(|q| x[q % n] * x[q / n]).collect();
            for op in GroupRep::full(spec).ops() {
                let via_rank4 = op.apply_quadratic(&outer).unwrap();
                let tx = op.apply(&x).unwrap();
                let via_outer: Vec<f64> = (0..n * n).map(|q| tx[q % n] * tx[q / n]).collect();
                assert_eq!(via_rank4, via_outer, "{}", op.label());
            }
        }
    }

    #[test]
    fn rank4_action_matches_explicit_kronecker_square() {
        for spec in [square(2), hexagonal(2)] {
            let n = spec.pixel_count();
            for op in GroupRep::full(spec).ops() {
                let mut dense = vec![vec![0.0; n]; n];
                for d in 0..n {
                    dense[d][op.perm[d]] = 1.0;
                }
                for q in 0..n * n {
                    let (a, b) = (q % n, q / n);
                    for q2 in 0..n * n {
                        let (a2, b2) = (q2 % n, q2 / n);
                        let kron = dense[a][a2] * dense[b][b2];
                        let idx4 = Index4::from_raw(q + 1);
                        let expected = if op.source_pair(idx4).get() - 1 == q2 {
                            1.0
                        } else {
                            0.0
                        };
                        assert_eq!(kron, expected, "{} at ({q}, {q2})", op.label());
                    }
                }
            }
        }
    }

    #[test]
    fn composition_and_inverse_are_consistent() {
        for spec in [square(3), hexagonal(2)] {
            let full = GroupRep::full(spec);
            for a in full.ops() {
                let inv = a.inverse();
                let prod = a.compose(&inv);
                assert_eq!(prod.label().index(), 1);
                assert!(prod.perm.iter().enumerate().all(|(d, &s)| d == s));
                for b in full.ops() {
                    let ab = a.compose(b);
                    let canonical = full.op(ab.label()).unwrap();
                    assert_eq!(ab.perm, canonical.perm);
                }
            }
        }
    }

    #[test]
    fn square_witness_is_non_abelian() {
        for n in 2..=5 {
            let spec = square(n);
            let full = GroupRep::full(spec);
            let op = |i: usize| full.op(label(spec.kind(), i)).unwrap();
            let t5t6 = op(5).compose(op(6));
            let t6t5 = op(6).compose(op(5));
            assert_eq!(t5t6.perm, op(4).perm);
            assert_eq!(t6t5.perm, op(2).perm);
            assert_ne!(t5t6.perm, t6t5.perm);
        }
    }

    #[test]
    fn generate_group_reproduces_the_full_group() {
        for spec in [square(2), square(4), hexagonal(2), hexagonal(3)] {
            let rep = generate_group(spec, &build_generators(spec)).unwrap();
            assert_eq!(rep.order(), group_order(spec.kind()));
            assert!(verify_group(&rep).is_ok());
        }
    }

    #[test]
    fn generate_group_from_identity_alone() {
        let spec = square(3);
        let rep = generate_group(spec, &[identity_op(spec)]).unwrap();
        assert_eq!(rep.order(), 1);
        assert!(verify_group(&rep).is_ok());
    }

    #[test]
    fn from_permutation_validates_and_labels() {
        let spec = square(3);
        let t2 = closed_form_op(spec, label(spec.kind(), 2)).unwrap();
        let rebuilt = SymmetryOp::from_permutation(spec, t2.perm.clone()).unwrap();
        assert_eq!(rebuilt.label().index(), 2);

        let mut repeated = t2.perm.clone();
        repeated[0] = repeated[1];
        assert!(matches!(
            SymmetryOp::from_permutation(spec, repeated),
            Err(QfdError::NotAPermutation(_))
        ));

        // A lone transposition of two pixels is a bijection but not a
        // symmetry of the 3 x 3 lattice.
        let mut stray: Vec<usize> = (0..9).collect();
        stray.swap(0, 1);
        assert!(matches!(
            SymmetryOp::from_permutation(spec, stray),
            Err(QfdError::NotALatticeSymmetry(_))
        ));
    }

    #[test]
    fn subgroup_catalogue_accepts_listed_sets_only() {
        let spec = square(3);
        let full = GroupRep::full(spec);
        for selector in catalogued_selectors(spec.kind()) {
            let rep = GroupRep::by_selector(spec, &selector).unwrap();
            assert!(verify_group(&rep).is_ok(), "{selector}");
        }
        let labels = parse_selector(spec.kind(), "T1,T2").unwrap();
        assert!(matches!(
            full.subgroup(&labels),
            Err(QfdError::UnknownSubgroup { .. })
        ));

        let hex = hexagonal(2);
        for selector in catalogued_selectors(hex.kind()) {
            let rep = GroupRep::by_selector(hex, &selector).unwrap();
            assert!(verify_group(&rep).is_ok(), "{selector}");
        }
        assert!(GroupRep::by_selector(hex, "T1,T4").is_err());
    }

    #[test]
    fn selector_strings_are_canonical() {
        let spec = square(3);
        let full = GroupRep::full(spec);
        assert_eq!(full.selector(), "full");
        let rep = GroupRep::by_selector(spec, "T3,T1").unwrap();
        assert_eq!(rep.selector(), "T1,T3");
        let trivial = GroupRep::by_selector(spec, "trivial").unwrap();
        assert_eq!(trivial.selector(), "T1");
        assert_eq!(
            GroupRep::by_selector(spec, "full").unwrap().selector(),
            "full"
        );
    }

    #[test]
    fn verify_group_detects_a_corrupted_element() {
        let spec = square(3);
        let mut rep = GroupRep::full(spec);
        assert!(verify_group(&rep).is_ok());
        corrupt_first_rotation(&mut rep);
        let check = verify_group(&rep);
        assert!(!check.is_ok());
        assert!(check.violations.iter().any(|v| v.contains("closure")));
    }

    #[test]
    fn labels_parse_and_display() {
        let kind = LatticeKind::Hexagonal;
        assert_eq!(parse_label(kind, "T12").unwrap().index(), 12);
        assert!(parse_label(kind, "T13").is_err());
        assert!(parse_label(LatticeKind::Square, "T9").is_err());
        assert!(parse_label(kind, "12").is_err());
        assert_eq!(label(kind, 7).to_string(), "T7");
    }
}
