//! Chain complexes over prime fields, homology ranks with explicit
//! representatives, induced maps and Euler characteristics.

mod chains;
mod field;
pub mod oracle;
mod sparse;

use std::collections::BTreeMap;

use rustc_hash::FxHashSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use chains::{chain_complex, chain_map, lf_homology, RelativeChains};
pub use field::{is_prime, FieldSpec};
pub use sparse::{kernel_basis, span_rank, Echelon, Insert, SparseVec};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HomologyError {
    #[error("{0} is not a supported prime")]
    NotPrime(u32),
    #[error("pair (K, L) is invalid: L is not a subcomplex of K")]
    NotASubcomplex,
    #[error("boundary of boundary is nonzero in degree {0}")]
    BoundarySquaredNonzero(usize),
    #[error("vertex map is not simplicial on simplex {0:?}")]
    NotSimplicial(Vec<usize>),
    #[error("map does not respect the designated subcomplexes")]
    PairNotPreserved,
    #[error("induced map sends a cycle to a non-cycle in degree {0}")]
    NotAChainMap(usize),
    #[error("Euler characteristic requested but ranks are truncated above degree {0:?}")]
    TruncationMasksTopDegree(Option<usize>),
    #[error("frontier is empty for an unbounded model")]
    FrontierEmptyForUnboundedModel,
}

/// A finite chain complex: `boundaries[d][j]` is the boundary of the j-th
/// basis chain in degree d, written in degree d-1 coordinates.
#[derive(Debug, Clone)]
pub struct ChainComplex {
    pub field: FieldSpec,
    pub boundaries: Vec<Vec<SparseVec>>,
    /// True when cells above the top stored degree exist but were dropped,
    /// so homology in the top stored degree is unknown.
    pub truncated: bool,
}

impl ChainComplex {
    pub fn new(field: FieldSpec, boundaries: Vec<Vec<SparseVec>>, truncated: bool) -> Result<Self, HomologyError> {
        let c = Self {
            field,
            boundaries,
            truncated,
        };
        c.check_boundary_squared()?;
        Ok(c)
    }

    pub fn rank(&self, d: usize) -> usize {
        self.boundaries.get(d).map_or(0, Vec::len)
    }

    pub fn top_degree(&self) -> Option<usize> {
        self.boundaries.len().checked_sub(1)
    }

    /// Highest degree whose homology is determined by the stored cells.
    pub fn top_computed(&self) -> Option<usize> {
        let top = self.top_degree()?;
        if self.truncated {
            top.checked_sub(1)
        } else {
            Some(top)
        }
    }

    pub fn check_boundary_squared(&self) -> Result<(), HomologyError> {
        for d in 2..self.boundaries.len() {
            for col in &self.boundaries[d] {
                if !col.map_through(self.field, &self.boundaries[d - 1]).is_zero() {
                    return Err(HomologyError::BoundarySquaredNonzero(d));
                }
            }
        }
        Ok(())
    }

    pub fn euler_of_chains(&self) -> i64 {
        self.boundaries
            .iter()
            .enumerate()
            .map(|(d, b)| if d % 2 == 0 { b.len() as i64 } else { -(b.len() as i64) })
            .sum()
    }
}

/// Per-degree homology ranks over F_q.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomologyRanks {
    pub field: u32,
    /// Every computed degree, including zero ranks.
    pub ranks: BTreeMap<usize, usize>,
    /// Degrees above this value were not computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truncated_above: Option<usize>,
}

impl HomologyRanks {
    pub fn rank(&self, d: usize) -> usize {
        self.ranks.get(&d).copied().unwrap_or(0)
    }

    /// Nonzero entries only, the usual way rank tables are compared.
    pub fn table(&self) -> BTreeMap<usize, usize> {
        self.ranks
            .iter()
            .filter(|(_, &r)| r > 0)
            .map(|(&d, &r)| (d, r))
            .collect()
    }

    pub fn is_computed(&self, d: usize) -> bool {
        self.truncated_above.is_none_or(|t| d <= t)
    }

    pub fn euler_characteristic(&self) -> Result<i64, HomologyError> {
        if self.truncated_above.is_some() {
            return Err(HomologyError::TruncationMasksTopDegree(self.truncated_above));
        }
        Ok(self
            .ranks
            .iter()
            .map(|(&d, &r)| if d % 2 == 0 { r as i64 } else { -(r as i64) })
            .sum())
    }

    /// Sum of ranks in degrees ≥ n that were computed.
    pub fn tail_sum(&self, n: usize) -> usize {
        self.ranks.range(n..).map(|(_, &r)| r).sum()
    }
}

/// Homology in one degree with chosen representative cycles and a
/// coordinate system on Z_d / B_d.
#[derive(Debug, Clone)]
pub struct DegreeHomology {
    pub reps: Vec<SparseVec>,
    coords: Echelon,
}

impl DegreeHomology {
    pub fn rank(&self) -> usize {
        self.reps.len()
    }

    /// Coordinates of the class of `cycle` in the representative basis;
    /// `None` if `cycle` is not a cycle.
    pub fn coordinates(&self, cycle: &SparseVec) -> Option<SparseVec> {
        self.coords.coordinates(cycle)
    }

    pub fn is_boundary(&self, chain: &SparseVec) -> bool {
        self.coordinates(chain).is_some_and(|c| c.is_zero())
    }
}

#[derive(Debug, Clone)]
pub struct HomologyBasis {
    pub field: FieldSpec,
    pub degrees: Vec<DegreeHomology>,
    pub truncated_above: Option<usize>,
}

impl HomologyBasis {
    pub fn compute(c: &ChainComplex) -> Self {
        let out = reduce(c, true);
        let field = c.field;
        let degrees = out
            .per_degree
            .into_iter()
            .map(|(boundary_rows, reps)| {
                let mut coords = Echelon::tracked(field);
                for row in boundary_rows {
                    coords.insert_tagged(row, SparseVec::zero());
                }
                for (i, r) in reps.iter().enumerate() {
                    coords.insert_tagged(r.clone(), SparseVec::unit(i));
                }
                DegreeHomology { reps, coords }
            })
            .collect();
        Self {
            field,
            degrees,
            truncated_above: out.truncated_above,
        }
    }

    pub fn ranks(&self) -> HomologyRanks {
        HomologyRanks {
            field: self.field.q(),
            ranks: self.degrees.iter().enumerate().map(|(d, h)| (d, h.rank())).collect(),
            truncated_above: self.truncated_above,
        }
    }

    pub fn degree(&self, d: usize) -> Option<&DegreeHomology> {
        self.degrees.get(d)
    }
}

struct Reduced {
    /// For each computed degree: (rows spanning B_d, representative cycles).
    per_degree: Vec<(Vec<SparseVec>, Vec<SparseVec>)>,
    truncated_above: Option<usize>,
    ranks: Vec<usize>,
}

/// Column reduction from the top degree down, skipping columns already
/// known to be cycles paired with a higher boundary ("clearing").
fn reduce(c: &ChainComplex, track: bool) -> Reduced {
    let field = c.field;
    let Some(top) = c.top_degree() else {
        return Reduced {
            per_degree: Vec::new(),
            truncated_above: None,
            ranks: Vec::new(),
        };
    };
    let top_computed = c.top_computed();
    let ncomp = top_computed.map_or(0, |t| t + 1);
    let mut per_degree: Vec<(Vec<SparseVec>, Vec<SparseVec>)> = vec![(Vec::new(), Vec::new()); ncomp];
    let mut ranks = vec![0usize; ncomp];
    // Pivots of the reduction one degree up, in degree-d coordinates.
    let mut cleared: FxHashSet<usize> = FxHashSet::default();
    let mut boundary_rows_above: Vec<SparseVec> = Vec::new();
    let mut boundary_rank_above = 0usize;

    for d in (0..=top).rev() {
        let mut ech = if track {
            Echelon::tracked(field)
        } else {
            Echelon::new(field)
        };
        let mut reps = Vec::new();
        let mut cycles = 0usize;
        for (j, col) in c.boundaries[d].iter().enumerate() {
            if cleared.contains(&j) {
                continue;
            }
            let tag = if track { SparseVec::unit(j) } else { SparseVec::zero() };
            match ech.insert_tagged(col.clone(), tag) {
                Insert::Added => {}
                Insert::Dependent(combo) => {
                    cycles += 1;
                    if track {
                        reps.push(combo);
                    }
                }
            }
        }
        if d < ncomp {
            ranks[d] = cycles;
            debug_assert_eq!(
                cycles + boundary_rank_above + ech.rank(),
                c.rank(d),
                "rank bookkeeping in degree {d}"
            );
            per_degree[d] = (std::mem::take(&mut boundary_rows_above), reps);
        }
        cleared = ech.pivots().collect();
        boundary_rank_above = ech.rank();
        if track {
            boundary_rows_above = ech.rows().to_vec();
        }
    }
    Reduced {
        per_degree,
        truncated_above: if c.truncated { Some(top.saturating_sub(1)) } else { None },
        ranks,
    }
}

/// Homology ranks without representatives.
pub fn homology_ranks(c: &ChainComplex) -> HomologyRanks {
    let out = reduce(c, false);
    HomologyRanks {
        field: c.field.q(),
        ranks: out.ranks.into_iter().enumerate().collect(),
        truncated_above: out.truncated_above,
    }
}

/// Matrix of a chain map on homology, degree by degree.
#[derive(Debug, Clone)]
pub struct InducedMap {
    pub source: HomologyRanks,
    pub target: HomologyRanks,
    /// `matrices[d][i]` = target coordinates of the image of source class i.
    pub matrices: Vec<Vec<SparseVec>>,
    pub field: FieldSpec,
}

impl InducedMap {
    /// `chain_cols[d][j]` is the image of source basis chain j in degree d.
    pub fn new(
        source: &HomologyBasis,
        target: &HomologyBasis,
        chain_cols: &[Vec<SparseVec>],
    ) -> Result<Self, HomologyError> {
        let field = source.field;
        let n = source.degrees.len().min(target.degrees.len());
        let mut matrices = Vec::with_capacity(n);
        for d in 0..n {
            let cols = &chain_cols[d];
            let mut m = Vec::with_capacity(source.degrees[d].rank());
            for rep in &source.degrees[d].reps {
                let img = rep.map_through(field, cols);
                let c = target.degrees[d]
                    .coordinates(&img)
                    .ok_or(HomologyError::NotAChainMap(d))?;
                m.push(c);
            }
            matrices.push(m);
        }
        Ok(Self {
            source: source.ranks(),
            target: target.ranks(),
            matrices,
            field,
        })
    }

    pub fn rank(&self, d: usize) -> usize {
        self.matrices
            .get(d)
            .map_or(0, |m| span_rank(self.field, m.iter().cloned()))
    }

    pub fn degrees(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_iso(&self, d: usize) -> bool {
        let r = self.rank(d);
        r == self.source.rank(d) && r == self.target.rank(d)
    }

    pub fn is_iso_everywhere(&self) -> bool {
        (0..self.degrees()).all(|d| self.is_iso(d))
    }

    pub fn rank_table(&self) -> BTreeMap<usize, usize> {
        (0..self.degrees()).map(|d| (d, self.rank(d))).collect()
    }

    /// Composition `other ∘ self` on homology.
    pub fn then(&self, other: &InducedMap) -> InducedMap {
        let n = self.degrees().min(other.degrees());
        let matrices = (0..n)
            .map(|d| {
                self.matrices[d]
                    .iter()
                    .map(|col| col.map_through(self.field, &other.matrices[d]))
                    .collect()
            })
            .collect();
        InducedMap {
            source: self.source.clone(),
            target: other.target.clone(),
            matrices,
            field: self.field,
        }
    }

    pub fn matrix_eq(&self, other: &InducedMap) -> bool {
        self.matrices == other.matrices
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FieldSpec {
        FieldSpec::new(2).unwrap()
    }

    #[test]
    fn point_has_rank_one() {
        let c = ChainComplex::new(f2(), vec![vec![SparseVec::zero()]], false).unwrap();
        assert_eq!(homology_ranks(&c).table(), BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn truncated_top_degree_is_not_reported() {
        // a single edge with its vertices, pretending 2-cells were dropped
        let k = f2();
        let c = ChainComplex::new(
            k,
            vec![
                vec![SparseVec::zero(), SparseVec::zero()],
                vec![SparseVec::from_signed(k, [(0, 1), (1, 1)])],
            ],
            true,
        )
        .unwrap();
        let h = homology_ranks(&c);
        assert_eq!(h.truncated_above, Some(0));
        assert_eq!(h.ranks, BTreeMap::from([(0, 1)]));
        assert!(h.euler_characteristic().is_err());
    }
}
