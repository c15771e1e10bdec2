//! Sparse vectors over F_q and an incremental echelon basis.
//!
//! Pivots are the *largest* nonzero index of each row, the same convention
//! as column reduction in persistent homology. With simplices listed in
//! dimension-major order this keeps fill-in low on boundary matrices.

use rustc_hash::FxHashMap;

use super::field::FieldSpec;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SparseVec {
    entries: Vec<(usize, u32)>,
}

impl SparseVec {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(i: usize) -> Self {
        Self {
            entries: vec![(i, 1)],
        }
    }

    /// Builds a vector from unsorted entries, summing duplicates.
    pub fn from_entries(field: FieldSpec, mut entries: Vec<(usize, u32)>) -> Self {
        entries.sort_unstable_by_key(|e| e.0);
        let mut out: Vec<(usize, u32)> = Vec::with_capacity(entries.len());
        for (i, v) in entries {
            let v = v % field.q();
            match out.last_mut() {
                Some(last) if last.0 == i => last.1 = field.add(last.1, v),
                _ => out.push((i, v)),
            }
        }
        out.retain(|e| e.1 != 0);
        Self { entries: out }
    }

    pub fn from_signed(field: FieldSpec, entries: impl IntoIterator<Item = (usize, i64)>) -> Self {
        Self::from_entries(
            field,
            entries
                .into_iter()
                .map(|(i, v)| (i, field.from_i64(v)))
                .collect(),
        )
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(usize, u32)] {
        &self.entries
    }

    pub fn leading(&self) -> Option<(usize, u32)> {
        self.entries.last().copied()
    }

    pub fn get(&self, i: usize) -> u32 {
        match self.entries.binary_search_by_key(&i, |e| e.0) {
            Ok(p) => self.entries[p].1,
            Err(_) => 0,
        }
    }

    pub fn scale(&mut self, field: FieldSpec, c: u32) {
        if c == 0 {
            self.entries.clear();
            return;
        }
        for e in &mut self.entries {
            e.1 = field.mul(e.1, c);
        }
    }

    pub fn scaled(&self, field: FieldSpec, c: u32) -> Self {
        let mut v = self.clone();
        v.scale(field, c);
        v
    }

    /// `self += c * other`
    pub fn axpy(&mut self, field: FieldSpec, c: u32, other: &SparseVec) {
        if c == 0 || other.is_zero() {
            return;
        }
        let a = &self.entries;
        let b = &other.entries;
        let mut out = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => {
                    out.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    out.push((b[j].0, field.mul(c, b[j].1)));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    let v = field.add(a[i].1, field.mul(c, b[j].1));
                    if v != 0 {
                        out.push((a[i].0, v));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend(b[j..].iter().map(|&(k, v)| (k, field.mul(c, v))));
        self.entries = out;
    }

    pub fn add(&self, field: FieldSpec, other: &SparseVec) -> SparseVec {
        let mut v = self.clone();
        v.axpy(field, 1, other);
        v
    }

    pub fn sub(&self, field: FieldSpec, other: &SparseVec) -> SparseVec {
        let mut v = self.clone();
        v.axpy(field, field.neg(1), other);
        v
    }

    /// Applies a sparse linear map given by its columns.
    pub fn map_through(&self, field: FieldSpec, columns: &[SparseVec]) -> SparseVec {
        let mut acc = SparseVec::zero();
        for &(i, v) in &self.entries {
            acc.axpy(field, v, &columns[i]);
        }
        acc
    }

    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut d = vec![0; len];
        for &(i, v) in &self.entries {
            d[i] = v;
        }
        d
    }
}

/// Row echelon basis with optional tracking of how each row was formed
/// from caller-supplied "tag" vectors.
#[derive(Debug, Clone)]
pub struct Echelon {
    field: FieldSpec,
    rows: Vec<SparseVec>,
    combos: Vec<SparseVec>,
    pivot_of: FxHashMap<usize, usize>,
    track: bool,
}

/// Outcome of inserting a vector.
#[derive(Debug, Clone)]
pub enum Insert {
    /// The vector was independent and became a new row.
    Added,
    /// The vector reduced to zero; carries the tracked combination that
    /// produced the zero (a kernel relation when tags are domain units).
    Dependent(SparseVec),
}

impl Echelon {
    pub fn new(field: FieldSpec) -> Self {
        Self {
            field,
            rows: Vec::new(),
            combos: Vec::new(),
            pivot_of: FxHashMap::default(),
            track: false,
        }
    }

    pub fn tracked(field: FieldSpec) -> Self {
        Self {
            track: true,
            ..Self::new(field)
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn pivots(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivot_of.keys().copied()
    }

    pub fn has_pivot(&self, i: usize) -> bool {
        self.pivot_of.contains_key(&i)
    }

    /// Reduces `v` until its leading index is not a pivot (or it is zero).
    pub fn reduce(&self, mut v: SparseVec) -> SparseVec {
        while let Some((lead, c)) = v.leading() {
            match self.pivot_of.get(&lead) {
                Some(&r) => v.axpy(self.field, self.field.neg(c), &self.rows[r]),
                None => break,
            }
        }
        v
    }

    /// Like [`reduce`](Self::reduce) but also accumulates the tag combination.
    pub fn reduce_tracked(&self, mut v: SparseVec, mut combo: SparseVec) -> (SparseVec, SparseVec) {
        while let Some((lead, c)) = v.leading() {
            match self.pivot_of.get(&lead) {
                Some(&r) => {
                    let k = self.field.neg(c);
                    v.axpy(self.field, k, &self.rows[r]);
                    if self.track {
                        combo.axpy(self.field, k, &self.combos[r]);
                    }
                }
                None => break,
            }
        }
        (v, combo)
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v.clone()).is_zero()
    }

    pub fn insert(&mut self, v: SparseVec) -> bool {
        matches!(self.insert_tagged(v, SparseVec::zero()), Insert::Added)
    }

    pub fn insert_tagged(&mut self, v: SparseVec, tag: SparseVec) -> Insert {
        let (mut r, mut combo) = self.reduce_tracked(v, tag);
        match r.leading() {
            None => Insert::Dependent(combo),
            Some((lead, c)) => {
                let inv = self.field.inv(c);
                r.scale(self.field, inv);
                if self.track {
                    combo.scale(self.field, inv);
                }
                self.pivot_of.insert(lead, self.rows.len());
                self.rows.push(r);
                self.combos.push(if self.track { combo } else { SparseVec::zero() });
                Insert::Added
            }
        }
    }

    /// Expresses `v` (assumed to lie in the span) as a tag combination.
    /// Returns `None` when `v` is not in the span.
    pub fn coordinates(&self, v: &SparseVec) -> Option<SparseVec> {
        let (r, combo) = self.reduce_tracked(v.clone(), SparseVec::zero());
        if r.is_zero() {
            // reduce_tracked subtracts rows; the coordinates are the negation.
            Some(combo.scaled(self.field, self.field.neg(1)))
        } else {
            None
        }
    }
}

/// Rank of the span of `vs`.
pub fn span_rank(field: FieldSpec, vs: impl IntoIterator<Item = SparseVec>) -> usize {
    let mut e = Echelon::new(field);
    for v in vs {
        e.insert(v);
    }
    e.rank()
}

/// Kernel of a linear map on a subspace: `domain[j]` maps to `images[j]`.
/// Returns kernel vectors expressed in the ambient coordinates of `domain`.
pub fn kernel_basis(field: FieldSpec, domain: &[SparseVec], images: &[SparseVec]) -> Vec<SparseVec> {
    debug_assert_eq!(domain.len(), images.len());
    let mut e = Echelon::tracked(field);
    let mut out = Vec::new();
    for (j, img) in images.iter().enumerate() {
        if let Insert::Dependent(combo) = e.insert_tagged(img.clone(), SparseVec::unit(j)) {
            // combo is in domain-index coordinates; lift to ambient chains.
            out.push(combo.map_through(field, domain));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u32) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    #[test]
    fn axpy_cancels() {
        let k = f(3);
        let a = SparseVec::from_signed(k, [(0, 1), (2, 1)]);
        let mut b = a.clone();
        b.axpy(k, 2, &a);
        assert!(b.is_zero());
    }

    #[test]
    fn echelon_rank_and_coordinates() {
        let k = f(5);
        let mut e = Echelon::tracked(k);
        let v0 = SparseVec::from_signed(k, [(0, 1), (1, 1)]);
        let v1 = SparseVec::from_signed(k, [(1, 1), (2, 1)]);
        assert!(matches!(e.insert_tagged(v0.clone(), SparseVec::unit(0)), Insert::Added));
        assert!(matches!(e.insert_tagged(v1.clone(), SparseVec::unit(1)), Insert::Added));
        let w = v0.scaled(k, 2).add(k, &v1.scaled(k, 3));
        let c = e.coordinates(&w).unwrap();
        assert_eq!(c.get(0), 2);
        assert_eq!(c.get(1), 3);
        assert!(e.coordinates(&SparseVec::unit(3)).is_none());
    }

    #[test]
    fn kernel_of_rank_one_map() {
        let k = f(2);
        let dom = vec![SparseVec::unit(0), SparseVec::unit(1)];
        let img = vec![SparseVec::unit(7), SparseVec::unit(7)];
        let ker = kernel_basis(k, &dom, &img);
        assert_eq!(ker.len(), 1);
        assert_eq!(ker[0], SparseVec::from_signed(k, [(0, 1), (1, 1)]));
    }
}
