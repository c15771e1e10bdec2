//! Simplicial chains of a pair (K, L) and chain maps induced by vertex maps.

use crate::complexes::{sort_sign, SimplicialComplex};

use super::{homology_ranks, ChainComplex, FieldSpec, HomologyError, HomologyRanks, SparseVec};

const NONE: u32 = u32::MAX;

/// C(K, L) with the bookkeeping to move between simplices and basis chains.
#[derive(Debug, Clone)]
pub struct RelativeChains {
    pub chains: ChainComplex,
    /// `cells[d][i]` = index in `K.simplices(d)` of basis chain i.
    pub cells: Vec<Vec<usize>>,
    /// Inverse of `cells`; `u32::MAX` for simplices of L.
    slots: Vec<Vec<u32>>,
}

impl RelativeChains {
    pub fn slot(&self, d: usize, simplex_idx: usize) -> Option<usize> {
        let s = *self.slots.get(d)?.get(simplex_idx)?;
        (s != NONE).then_some(s as usize)
    }

    pub fn field(&self) -> FieldSpec {
        self.chains.field
    }
}

/// Relative chain complex: basis = simplices of K not in L, oriented by
/// sorted vertex order.
pub fn chain_complex(k: &SimplicialComplex, l: &SimplicialComplex, field: FieldSpec) -> Result<RelativeChains, HomologyError> {
    if !l.is_subcomplex_of(k) {
        return Err(HomologyError::NotASubcomplex);
    }
    let top = k.dim();
    let ndeg = top.map_or(0, |t| t + 1);
    let mut cells = Vec::with_capacity(ndeg);
    let mut slots = Vec::with_capacity(ndeg);
    for d in 0..ndeg {
        let mut c = Vec::new();
        let mut s = vec![NONE; k.count(d)];
        for (i, simplex) in k.simplices(d).iter().enumerate() {
            if !l.contains(simplex) {
                s[i] = c.len() as u32;
                c.push(i);
            }
        }
        cells.push(c);
        slots.push(s);
    }
    let mut boundaries = Vec::with_capacity(ndeg);
    for d in 0..ndeg {
        let mut cols = Vec::with_capacity(cells[d].len());
        for &i in &cells[d] {
            if d == 0 {
                cols.push(SparseVec::zero());
                continue;
            }
            let s = &k.simplices(d)[i];
            let mut entries = Vec::with_capacity(s.len());
            let mut face = Vec::with_capacity(s.len() - 1);
            for drop in 0..s.len() {
                face.clear();
                face.extend(s.iter().enumerate().filter(|&(j, _)| j != drop).map(|(_, &v)| v));
                let fi = k.index_of(&face).expect("K is downward closed");
                let slot = slots[d - 1][fi];
                if slot != NONE {
                    let sign = if drop % 2 == 0 { 1 } else { -1 };
                    entries.push((slot as usize, sign));
                }
            }
            cols.push(SparseVec::from_signed(field, entries));
        }
        boundaries.push(cols);
    }
    // Truncation in L does not matter; truncation in K caps the top degree.
    let truncated = k.truncated_above().is_some();
    let chains = ChainComplex::new(field, boundaries, truncated)?;
    Ok(RelativeChains { chains, cells, slots })
}

/// Chain map C(K1, L1) → C(K2, L2) induced by a vertex map.
///
/// Returns `cols[d][j]` = image of source basis chain j. Collapsed simplices
/// and simplices landing in L2 map to zero.
pub fn chain_map(
    src_k: &SimplicialComplex,
    src: &RelativeChains,
    dst_k: &SimplicialComplex,
    dst: &RelativeChains,
    vertex_map: &[usize],
) -> Result<Vec<Vec<SparseVec>>, HomologyError> {
    let field = src.field();
    let mut out = Vec::with_capacity(src.cells.len());
    for (d, cells) in src.cells.iter().enumerate() {
        let mut cols = Vec::with_capacity(cells.len());
        for &i in cells {
            let s = &src_k.simplices(d)[i];
            let img: Vec<usize> = s.iter().map(|&v| vertex_map[v]).collect();
            let mut sorted = img.clone();
            sorted.sort_unstable();
            sorted.dedup();
            let Some(ti) = dst_k.index_of(&sorted) else {
                return Err(HomologyError::NotSimplicial(s.clone()));
            };
            if sorted.len() < s.len() {
                cols.push(SparseVec::zero());
                continue;
            }
            match dst.slot(d, ti) {
                Some(slot) => cols.push(SparseVec::from_signed(field, [(slot, sort_sign(&img))])),
                None => cols.push(SparseVec::zero()),
            }
        }
        out.push(cols);
    }
    Ok(out)
}

/// Locally finite homology of a window nerve, realized as homology rel the
/// frontier sub-nerve.
pub fn lf_homology(
    k: &SimplicialComplex,
    frontier_sub: &SimplicialComplex,
    field: FieldSpec,
    unbounded: bool,
) -> Result<HomologyRanks, HomologyError> {
    if unbounded && frontier_sub.is_empty() {
        return Err(HomologyError::FrontierEmptyForUnboundedModel);
    }
    let c = chain_complex(k, frontier_sub, field)?;
    Ok(homology_ranks(&c.chains))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::homology::{HomologyBasis, InducedMap};

    fn f(q: u32) -> FieldSpec {
        FieldSpec::new(q).unwrap()
    }

    fn hollow_triangle() -> SimplicialComplex {
        SimplicialComplex::from_generators(3, [vec![0, 1], vec![1, 2], vec![0, 2]], None).unwrap()
    }

    #[test]
    fn hollow_triangle_mod_two() {
        let k = hollow_triangle();
        let c = chain_complex(&k, &SimplicialComplex::empty(3), f(2)).unwrap();
        assert_eq!(homology_ranks(&c.chains).table(), BTreeMap::from([(0, 1), (1, 1)]));
    }

    #[test]
    fn edge_rel_endpoints() {
        let k = SimplicialComplex::from_generators(2, [vec![0, 1]], None).unwrap();
        let l = SimplicialComplex::from_generators(2, [vec![0], vec![1]], None).unwrap();
        let c = chain_complex(&k, &l, f(3)).unwrap();
        assert_eq!(c.chains.rank(1), 1);
        assert_eq!(homology_ranks(&c.chains).table(), BTreeMap::from([(1, 1)]));
    }

    #[test]
    fn solid_triangle_is_acyclic() {
        let k = SimplicialComplex::from_generators(3, [vec![0, 1, 2]], None).unwrap();
        let c = chain_complex(&k, &SimplicialComplex::empty(3), f(5)).unwrap();
        assert_eq!(homology_ranks(&c.chains).table(), BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn rejects_non_subcomplex() {
        let k = hollow_triangle();
        let l = SimplicialComplex::from_generators(4, [vec![3]], None).unwrap();
        assert_eq!(chain_complex(&k, &l, f(2)).unwrap_err(), HomologyError::NotASubcomplex);
    }

    #[test]
    fn collapse_kills_h1() {
        let k = hollow_triangle();
        let pt = SimplicialComplex::from_generators(3, [vec![0]], None).unwrap();
        let e = SimplicialComplex::empty(3);
        let ck = chain_complex(&k, &e, f(3)).unwrap();
        let cp = chain_complex(&pt, &e, f(3)).unwrap();
        let cols = chain_map(&k, &ck, &pt, &cp, &[0, 0, 0]).unwrap();
        let m = InducedMap::new(&HomologyBasis::compute(&ck.chains), &HomologyBasis::compute(&cp.chains), &cols).unwrap();
        assert!(m.is_iso(0));
        assert_eq!(m.rank(1), 0);
    }

    #[test]
    fn identity_is_iso() {
        let k = hollow_triangle();
        let e = SimplicialComplex::empty(3);
        let ck = chain_complex(&k, &e, f(7)).unwrap();
        let cols = chain_map(&k, &ck, &k, &ck, &[0, 1, 2]).unwrap();
        let b = HomologyBasis::compute(&ck.chains);
        let m = InducedMap::new(&b, &b, &cols).unwrap();
        assert!(m.is_iso_everywhere());
    }

    #[test]
    fn reflection_of_circle_reverses_orientation() {
        // swapping 1 and 2 reverses the cycle; over F_3 this is -1 on H_1
        let k = hollow_triangle();
        let e = SimplicialComplex::empty(3);
        let ck = chain_complex(&k, &e, f(3)).unwrap();
        let cols = chain_map(&k, &ck, &k, &ck, &[0, 2, 1]).unwrap();
        let b = HomologyBasis::compute(&ck.chains);
        let m = InducedMap::new(&b, &b, &cols).unwrap();
        assert_eq!(m.matrices[1][0].get(0), 2);
    }
}
