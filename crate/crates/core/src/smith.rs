//! Smith theory for ℤ/p acting on regular simplicial pairs: the operators
//! σ and τ^j, special homology, the exact triangle, the inequalities, the
//! orbit-space isomorphism, transfer maps and the Euler identity.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::complexes::{quotient_complex, ComplexError, GComplex, SimplicialComplex};
use crate::group::GroupSpec;
use crate::homology::{
    chain_complex, chain_map, span_rank, ChainComplex, DegreeHomology, Echelon, FieldSpec, HomologyBasis, HomologyError,
    HomologyRanks, InducedMap, Insert, RelativeChains, SparseVec,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SmithError {
    #[error("group is not cyclic of prime order (order {0})")]
    NotCyclicOfOrderP(usize),
    #[error("Smith theory for ℤ/{p} needs coefficients in F_{p}, got F_{q}")]
    FieldMismatch { p: u32, q: u32 },
    #[error("complex is not regular: {0}")]
    NotRegular(String),
    #[error("subcomplex is not invariant")]
    NotInvariant,
    #[error("short exact sequence of chain complexes fails: {0}")]
    ChainSequenceNotExact(String),
    #[error("operator identity fails: {0}")]
    OperatorIdentity(String),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Complex(#[from] ComplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SmithKind {
    Sigma,
    TauPower(u32),
}

/// An element of F_p[ℤ/p] given by its coefficients on g^0..g^{p−1}.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SmithOperator {
    pub kind: SmithKind,
    pub p: u32,
    pub generator: usize,
    pub coeffs: Vec<u32>,
    /// Group element g^i for each i.
    #[serde(skip)]
    pub powers: Vec<usize>,
}

fn binomial_row(j: u32, p: u32) -> Vec<u32> {
    let mut row = vec![1u32];
    for _ in 0..j {
        let mut next = vec![1u32; row.len() + 1];
        for i in 1..row.len() {
            next[i] = (row[i - 1] + row[i]) % p;
        }
        row = next;
    }
    row
}

impl SmithOperator {
    fn new(kind: SmithKind, p: u32, generator: usize, powers: Vec<usize>) -> Self {
        let coeffs = match kind {
            SmithKind::Sigma => vec![1; p as usize],
            SmithKind::TauPower(j) => {
                // (1 − g)^j = Σ_i C(j, i) (−1)^i g^i, reduced with g^p = 1
                let mut c = vec![0u32; p as usize];
                for (i, b) in binomial_row(j, p).into_iter().enumerate() {
                    let v = if i % 2 == 0 { b } else { (p - b) % p };
                    let slot = i % p as usize;
                    c[slot] = (c[slot] + v) % p;
                }
                c
            }
        };
        Self {
            kind,
            p,
            generator,
            coeffs,
            powers,
        }
    }

    /// ρ̄: σ̄ = τ and τ̄^j = τ^{p−j}.
    pub fn complement(&self) -> SmithOperator {
        let kind = match self.kind {
            SmithKind::Sigma => SmithKind::TauPower(1),
            SmithKind::TauPower(j) if j == self.p - 1 => SmithKind::TauPower(1),
            SmithKind::TauPower(j) => SmithKind::TauPower(self.p - j),
        };
        SmithOperator::new(kind, self.p, self.generator, self.powers.clone())
    }

    /// Product in F_p[ℤ/p].
    pub fn compose(&self, other: &SmithOperator) -> Vec<u32> {
        let p = self.p as usize;
        let mut out = vec![0u32; p];
        for i in 0..p {
            for j in 0..p {
                out[(i + j) % p] = ((out[(i + j) % p] as u64 + self.coeffs[i] as u64 * other.coeffs[j] as u64) % p as u64) as u32;
            }
        }
        out
    }
}

/// σ and τ^1..τ^{p−1} for a cyclic group of prime order.
pub fn smith_operators(group: &GroupSpec, generator: Option<usize>) -> Result<Vec<SmithOperator>, SmithError> {
    let n = group.order();
    let p = group.p_group_prime().filter(|&p| p as usize == n).ok_or(SmithError::NotCyclicOfOrderP(n))?;
    let g = match generator {
        Some(g) => g,
        None => (0..n).find(|&g| g != group.identity).ok_or(SmithError::NotCyclicOfOrderP(n))?,
    };
    if group.element_order(g) != n {
        return Err(SmithError::NotCyclicOfOrderP(n));
    }
    let powers: Vec<usize> = (0..n).map(|i| group.pow(g, i)).collect();
    let mut ops = vec![SmithOperator::new(SmithKind::Sigma, p, g, powers.clone())];
    for j in 1..p {
        ops.push(SmithOperator::new(SmithKind::TauPower(j), p, g, powers.clone()));
    }
    let sigma = &ops[0];
    let tau = &ops[1];
    let zero = vec![0u32; n];
    if sigma.compose(tau) != zero || tau.compose(sigma) != zero {
        return Err(SmithError::OperatorIdentity("στ ≠ 0".into()));
    }
    if ops[p as usize - 1].coeffs != sigma.coeffs {
        return Err(SmithError::OperatorIdentity("σ ≠ τ^{p−1}".into()));
    }
    for j in 1..p as usize {
        if ops[j].compose(&ops[j].complement()) != zero {
            return Err(SmithError::OperatorIdentity(format!("τ^{j} τ̄^{j} ≠ 0")));
        }
    }
    Ok(ops)
}

/// C(K, L) with the group acting by signed permutations of basis cells.
#[derive(Debug, Clone)]
pub struct GChains {
    pub gc: GComplex,
    pub l: SimplicialComplex,
    pub rel: RelativeChains,
    /// `act[g][d][j]` = (slot, sign) of g applied to cell j.
    act: Vec<Vec<Vec<(usize, i64)>>>,
    /// `fixed[d][j]`: the simplex of cell j lies in K^G.
    fixed: Vec<Vec<bool>>,
}

impl GChains {
    pub fn new(gc: &GComplex, l: &SimplicialComplex, field: FieldSpec) -> Result<Self, SmithError> {
        if !gc.is_invariant(l) {
            return Err(SmithError::NotInvariant);
        }
        let rel = chain_complex(&gc.complex, l, field)?;
        let k = &gc.complex;
        let mut act = Vec::with_capacity(gc.order());
        for g in 0..gc.order() {
            let mut per_deg = Vec::with_capacity(rel.cells.len());
            for (d, cells) in rel.cells.iter().enumerate() {
                let mut v = Vec::with_capacity(cells.len());
                for &i in cells {
                    let (img, sign) = gc.apply(g, &k.simplices(d)[i]);
                    let ti = k.index_of(&img).ok_or(SmithError::NotInvariant)?;
                    let slot = rel.slot(d, ti).ok_or(SmithError::NotInvariant)?;
                    v.push((slot, sign));
                }
                per_deg.push(v);
            }
            act.push(per_deg);
        }
        let fixed = rel
            .cells
            .iter()
            .enumerate()
            .map(|(d, cells)| {
                cells
                    .iter()
                    .map(|&i| k.simplices(d)[i].iter().all(|&v| gc.is_fixed_vertex(v)))
                    .collect()
            })
            .collect();
        Ok(Self {
            gc: gc.clone(),
            l: l.clone(),
            rel,
            act,
            fixed,
        })
    }

    pub fn field(&self) -> FieldSpec {
        self.rel.field()
    }

    pub fn degrees(&self) -> usize {
        self.rel.cells.len()
    }

    pub fn dim(&self, d: usize) -> usize {
        self.rel.cells.get(d).map_or(0, Vec::len)
    }

    pub fn act_vec(&self, g: usize, d: usize, v: &SparseVec) -> SparseVec {
        let f = self.field();
        let cols = &self.act[g][d];
        SparseVec::from_entries(
            f,
            v.entries()
                .iter()
                .map(|&(j, c)| {
                    let (slot, sign) = cols[j];
                    (slot, if sign > 0 { c } else { f.neg(c) })
                })
                .collect(),
        )
    }

    /// Σ_i c_i g^i applied to a chain.
    pub fn apply(&self, op: &SmithOperator, d: usize, v: &SparseVec) -> SparseVec {
        let f = self.field();
        let mut out = SparseVec::zero();
        for (i, &c) in op.coeffs.iter().enumerate() {
            if c != 0 {
                out.axpy(f, c, &self.act_vec(op.powers[i], d, v));
            }
        }
        out
    }

    fn boundary(&self, d: usize, v: &SparseVec) -> SparseVec {
        v.map_through(self.field(), &self.rel.chains.boundaries[d])
    }

    /// Checks στ = τσ = 0 and σ = τ^{p−1} on every basis chain.
    pub fn verify_operator_identities(&self, ops: &[SmithOperator]) -> Result<(), SmithError> {
        let sigma = &ops[0];
        let tau = &ops[1];
        let last = &ops[ops.len() - 1];
        for d in 0..self.degrees() {
            for j in 0..self.dim(d) {
                let e = SparseVec::unit(j);
                let st = self.apply(sigma, d, &self.apply(tau, d, &e));
                let ts = self.apply(tau, d, &self.apply(sigma, d, &e));
                if !st.is_zero() || !ts.is_zero() {
                    return Err(SmithError::OperatorIdentity(format!("στ on cell {j} of degree {d}")));
                }
                if self.apply(sigma, d, &e) != self.apply(last, d, &e) {
                    return Err(SmithError::OperatorIdentity(format!("σ ≠ τ^(p−1) on cell {j} of degree {d}")));
                }
            }
        }
        Ok(())
    }
}

/// A subcomplex of C(K, L) given by a basis in cell coordinates.
#[derive(Debug, Clone)]
pub struct SubChains {
    pub basis: Vec<Vec<SparseVec>>,
    ech: Vec<Echelon>,
    /// Spanning-vector tag → basis position.
    tag_pos: Vec<FxHashMap<usize, usize>>,
    pub chains: ChainComplex,
}

impl SubChains {
    /// `spanning[d]` lists (tag, vector) pairs; tags must be distinct per
    /// degree.
    fn build(g: &GChains, spanning: Vec<Vec<(usize, SparseVec)>>) -> Result<Self, SmithError> {
        let f = g.field();
        let mut basis = Vec::with_capacity(spanning.len());
        let mut ech = Vec::with_capacity(spanning.len());
        let mut tag_pos = Vec::with_capacity(spanning.len());
        for level in spanning {
            let mut e = Echelon::tracked(f);
            let mut b = Vec::new();
            let mut pos = FxHashMap::default();
            for (tag, v) in level {
                if let Insert::Added = e.insert_tagged(v.clone(), SparseVec::unit(tag)) {
                    pos.insert(tag, b.len());
                    b.push(v);
                }
            }
            basis.push(b);
            ech.push(e);
            tag_pos.push(pos);
        }
        let mut boundaries = Vec::with_capacity(basis.len());
        for d in 0..basis.len() {
            let mut cols = Vec::with_capacity(basis[d].len());
            for v in &basis[d] {
                if d == 0 {
                    cols.push(SparseVec::zero());
                    continue;
                }
                let bd = g.boundary(d, v);
                let c = coords_in(&ech[d - 1], &tag_pos[d - 1], f, &bd)
                    .ok_or_else(|| SmithError::ChainSequenceNotExact(format!("subcomplex not closed under ∂ in degree {d}")))?;
                cols.push(c);
            }
            boundaries.push(cols);
        }
        let chains = ChainComplex::new(f, boundaries, g.rel.chains.truncated)?;
        Ok(Self {
            basis,
            ech,
            tag_pos,
            chains,
        })
    }

    pub fn dim(&self, d: usize) -> usize {
        self.basis.get(d).map_or(0, Vec::len)
    }

    /// Coordinates of an ambient chain in this basis.
    pub fn coords(&self, d: usize, v: &SparseVec) -> Option<SparseVec> {
        coords_in(&self.ech[d], &self.tag_pos[d], self.chains.field, v)
    }

    /// The same, as a combination of spanning tags.
    fn tag_combo(&self, d: usize, v: &SparseVec) -> Option<SparseVec> {
        self.ech[d].coordinates(v)
    }

    fn to_ambient(&self, d: usize, c: &SparseVec) -> SparseVec {
        c.map_through(self.chains.field, &self.basis[d])
    }
}

fn coords_in(e: &Echelon, pos: &FxHashMap<usize, usize>, f: FieldSpec, v: &SparseVec) -> Option<SparseVec> {
    let combo = e.coordinates(v)?;
    Some(SparseVec::from_entries(f, combo.entries().iter().map(|&(t, c)| (pos[&t], c)).collect()))
}

/// ρC(K, L) with an explicit basis; spanning tags are cell indices, which
/// makes the tag combination of a chain a preimage under ρ.
pub fn special_subcomplex(g: &GChains, op: &SmithOperator) -> Result<SubChains, SmithError> {
    let spanning = (0..g.degrees())
        .map(|d| orbit_ordered_cells(g, d).into_iter().map(|j| (j, g.apply(op, d, &SparseVec::unit(j)))).collect())
        .collect();
    SubChains::build(g, spanning)
}

/// Cells grouped orbit by orbit so each operator image block is reduced
/// together.
fn orbit_ordered_cells(g: &GChains, d: usize) -> Vec<usize> {
    let n = g.dim(d);
    let mut seen = vec![false; n];
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        if seen[j] {
            continue;
        }
        for per_g in &g.act {
            let (t, _) = per_g[d][j];
            if !seen[t] {
                seen[t] = true;
                out.push(t);
            }
        }
    }
    out
}

/// ρ̄C(K, L) ⊕ C(K^G, L^G) inside C(K, L).
fn kernel_subcomplex(g: &GChains, op: &SmithOperator) -> Result<(SubChains, SubChains, SubChains), SmithError> {
    let bar = op.complement();
    let fixed_span: Vec<Vec<(usize, SparseVec)>> = (0..g.degrees())
        .map(|d| (0..g.dim(d)).filter(|&j| g.fixed[d][j]).map(|j| (j, SparseVec::unit(j))).collect())
        .collect();
    let bar_c = special_subcomplex(g, &bar)?;
    let fixed_c = SubChains::build(g, fixed_span.clone())?;
    let mut both = Vec::with_capacity(g.degrees());
    for (d, fixed) in fixed_span.into_iter().enumerate() {
        let n = g.dim(d);
        let mut level: Vec<(usize, SparseVec)> = fixed;
        level.extend(orbit_ordered_cells(g, d).into_iter().map(|j| (n + j, g.apply(&bar, d, &SparseVec::unit(j)))));
        both.push(level);
    }
    Ok((SubChains::build(g, both)?, bar_c, fixed_c))
}

pub fn special_homology(s: &SubChains) -> HomologyRanks {
    crate::homology::homology_ranks(&s.chains)
}

#[derive(Debug, Clone, Serialize)]
pub struct SmithTriangleReport {
    pub p: u32,
    pub operator: SmithKind,
    pub h_pair: BTreeMap<usize, usize>,
    pub h_rho: BTreeMap<usize, usize>,
    pub h_rho_bar: BTreeMap<usize, usize>,
    pub h_fixed: BTreeMap<usize, usize>,
    /// rank of i_*: H_n(ρ̄C ⊕ C(K^G,L^G)) → H_n(K, L).
    pub rank_i: BTreeMap<usize, usize>,
    /// rank of ρ_*: H_n(K, L) → H^ρ_n.
    pub rank_rho: BTreeMap<usize, usize>,
    /// rank of δ_*: H^ρ_n → H_{n−1}(ρ̄C ⊕ C(K^G,L^G)), keyed by n.
    pub rank_delta: BTreeMap<usize, usize>,
    pub chain_exact: bool,
    pub exact_at_kernel: bool,
    pub exact_at_pair: bool,
    pub exact_at_image: bool,
    pub compositions_vanish: bool,
}

impl SmithTriangleReport {
    pub fn exact(&self) -> bool {
        self.chain_exact && self.exact_at_kernel && self.exact_at_pair && self.exact_at_image && self.compositions_vanish
    }
}

fn class_matrix(
    reps: &[SparseVec],
    to_target_chain: impl Fn(&SparseVec) -> Option<SparseVec>,
    target: &DegreeHomology,
    what: &str,
) -> Result<Vec<SparseVec>, SmithError> {
    reps.iter()
        .map(|r| {
            let img = to_target_chain(r).ok_or_else(|| SmithError::ChainSequenceNotExact(format!("{what}: image outside target")))?;
            target
                .coordinates(&img)
                .ok_or_else(|| SmithError::ChainSequenceNotExact(format!("{what}: image is not a cycle")))
        })
        .collect()
}

fn all_zero(f: FieldSpec, first: &[SparseVec], second: &[SparseVec]) -> bool {
    first.iter().all(|c| c.map_through(f, second).is_zero())
}

/// Build 0 → ρ̄C ⊕ C(K^G,L^G) → C(K,L) → ρC → 0, check it is exact on
/// chains, and certify exactness of the homology triangle at every node.
pub fn exact_triangle_check(g: &GChains, op: &SmithOperator) -> Result<SmithTriangleReport, SmithError> {
    let f = g.field();
    if f.q() != op.p {
        return Err(SmithError::FieldMismatch { p: op.p, q: f.q() });
    }
    let c = special_subcomplex(g, op)?;
    let (a, bar_c, fixed_c) = kernel_subcomplex(g, op)?;
    let nd = g.degrees();

    let mut chain_exact = true;
    for d in 0..nd {
        if a.dim(d) + c.dim(d) != g.dim(d) {
            chain_exact = false;
        }
        if a.basis[d].iter().any(|v| !g.apply(op, d, v).is_zero()) {
            chain_exact = false;
        }
        if bar_c.dim(d) + fixed_c.dim(d) != a.dim(d) {
            chain_exact = false;
        }
    }
    if !chain_exact {
        return Err(SmithError::ChainSequenceNotExact("dimensions of ker ρ and ρ̄C ⊕ C(K^G,L^G) differ".into()));
    }

    let hb = HomologyBasis::compute(&g.rel.chains);
    let ha = HomologyBasis::compute(&a.chains);
    let hc = HomologyBasis::compute(&c.chains);
    let computed = hb.degrees.len().min(ha.degrees.len()).min(hc.degrees.len());

    let mut mi = Vec::with_capacity(computed);
    let mut mr = Vec::with_capacity(computed);
    let mut md = Vec::with_capacity(computed);
    for n in 0..computed {
        mi.push(class_matrix(&ha.degrees[n].reps, |r| Some(a.to_ambient(n, r)), &hb.degrees[n], "i")?);
        mr.push(class_matrix(&hb.degrees[n].reps, |r| c.coords(n, &g.apply(op, n, r)), &hc.degrees[n], "ρ")?);
        if n == 0 {
            md.push(vec![SparseVec::zero(); hc.degrees[0].rank()]);
        } else {
            // zig-zag: lift along ρ, take the boundary, read it in the kernel
            md.push(class_matrix(
                &hc.degrees[n].reps,
                |r| {
                    let x = c.to_ambient(n, r);
                    let lift = c.tag_combo(n, &x)?;
                    a.coords(n - 1, &g.boundary(n, &lift))
                },
                &ha.degrees[n - 1],
                "δ",
            )?);
        }
    }
    let rank = |m: &Vec<SparseVec>| span_rank(f, m.iter().cloned());
    let rank_i: BTreeMap<usize, usize> = (0..computed).map(|n| (n, rank(&mi[n]))).collect();
    let rank_rho: BTreeMap<usize, usize> = (0..computed).map(|n| (n, rank(&mr[n]))).collect();
    let rank_delta: BTreeMap<usize, usize> = (0..computed).map(|n| (n, rank(&md[n]))).collect();
    let h = |b: &HomologyBasis, n: usize| b.degrees.get(n).map_or(0, DegreeHomology::rank);

    let mut exact_at_pair = true;
    let mut exact_at_image = true;
    let mut exact_at_kernel = true;
    let mut compositions_vanish = true;
    for n in 0..computed {
        // at H_n(K,L): im i = ker ρ
        exact_at_pair &= rank_i[&n] + rank_rho[&n] == h(&hb, n);
        // at H^ρ_n: im ρ = ker δ
        exact_at_image &= rank_rho[&n] + rank_delta[&n] == h(&hc, n);
        // at H_n(A): im δ_{n+1} = ker i_n
        let delta_above = if n + 1 < computed { rank_delta[&(n + 1)] } else { 0 };
        if n + 1 < computed {
            exact_at_kernel &= delta_above + rank_i[&n] == h(&ha, n);
        }
        compositions_vanish &= all_zero(f, &mi[n], &mr[n]);
        if n > 0 {
            compositions_vanish &= all_zero(f, &mr[n], &md[n]);
            compositions_vanish &= all_zero(f, &md[n], &mi[n - 1]);
        }
    }
    Ok(SmithTriangleReport {
        p: op.p,
        operator: op.kind,
        h_pair: hb.ranks().ranks,
        h_rho: hc.ranks().ranks,
        h_rho_bar: special_homology(&bar_c).ranks,
        h_fixed: special_homology(&fixed_c).ranks,
        rank_i,
        rank_rho,
        rank_delta,
        chain_exact,
        exact_at_kernel,
        exact_at_pair,
        exact_at_image,
        compositions_vanish,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InequalityRow {
    pub n: usize,
    pub lhs: usize,
    pub rhs: usize,
    pub margin: i64,
    pub holds: bool,
}

/// rk H^ρ_n + Σ_{i≥n} rk H_i(fixed) ≤ Σ_{i≥n} rk H_i(whole), for every n up
/// to the largest degree present.
pub fn smith_inequalities(
    h_rho: &BTreeMap<usize, usize>,
    h_fixed: &BTreeMap<usize, usize>,
    h_whole: &BTreeMap<usize, usize>,
) -> Vec<InequalityRow> {
    let top = [h_rho, h_fixed, h_whole]
        .iter()
        .filter_map(|m| m.keys().next_back().copied())
        .max()
        .unwrap_or(0);
    let tail = |m: &BTreeMap<usize, usize>, n: usize| m.range(n..).map(|(_, &r)| r).sum::<usize>();
    (0..=top)
        .map(|n| {
            let lhs = h_rho.get(&n).copied().unwrap_or(0) + tail(h_fixed, n);
            let rhs = tail(h_whole, n);
            InequalityRow {
                n,
                lhs,
                rhs,
                margin: rhs as i64 - lhs as i64,
                holds: lhs <= rhs,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitIsoReport {
    pub special: BTreeMap<usize, usize>,
    pub quotient_pair: BTreeMap<usize, usize>,
    pub equal: bool,
}

/// H^σ(K, L) against H(K/G, (K^G ∪ L)/G).
pub fn orbit_iso_check(g: &GChains, ops: &[SmithOperator]) -> Result<OrbitIsoReport, SmithError> {
    let sigma = ops.iter().find(|o| o.kind == SmithKind::Sigma).expect("σ is always present");
    let special = special_homology(&special_subcomplex(g, sigma)?);
    let q = quotient_complex(&g.gc)?;
    let fixed_or_l = g.gc.fixed_subcomplex().union(&g.l);
    let sub = q.project(&fixed_or_l);
    let pair = chain_complex(&q.complex, &sub, g.field())?;
    let quotient = crate::homology::homology_ranks(&pair.chains);
    let equal = special.table() == quotient.table();
    Ok(OrbitIsoReport {
        special: special.table(),
        quotient_pair: quotient.table(),
        equal,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SecondSequenceRow {
    pub j: u32,
    pub chain_exact: bool,
    pub chi_tau_j: i64,
    pub chi_tau_j1: i64,
    pub chi_sigma: i64,
    pub holds: bool,
}

/// 0 → σC → τ^jC → τ^{j+1}C → 0 (the last map is τ) for 1 ≤ j ≤ p−2, with
/// the Euler characteristic bookkeeping χ(τ^j) = χ(τ^{j+1}) + χ(σ).
pub fn second_sequence_check(g: &GChains, ops: &[SmithOperator]) -> Result<Vec<SecondSequenceRow>, SmithError> {
    let p = ops[0].p;
    let sigma_c = special_subcomplex(g, &ops[0])?;
    let chi_sigma = special_homology(&sigma_c).euler_characteristic()?;
    let mut rows = Vec::new();
    for j in 1..p.saturating_sub(1) {
        let tj = special_subcomplex(g, &ops[j as usize])?;
        let tj1 = special_subcomplex(g, &ops[j as usize + 1])?;
        let mut chain_exact = true;
        for d in 0..g.degrees() {
            chain_exact &= tj.dim(d) == sigma_c.dim(d) + tj1.dim(d);
            chain_exact &= sigma_c.basis[d].iter().all(|v| tj.coords(d, v).is_some());
            chain_exact &= sigma_c.basis[d].iter().all(|v| g.apply(&ops[1], d, v).is_zero());
            chain_exact &= tj.basis[d].iter().all(|v| tj1.coords(d, &g.apply(&ops[1], d, v)).is_some());
        }
        let chi_tau_j = special_homology(&tj).euler_characteristic()?;
        let chi_tau_j1 = special_homology(&tj1).euler_characteristic()?;
        rows.push(SecondSequenceRow {
            j,
            chain_exact,
            chi_tau_j,
            chi_tau_j1,
            chi_sigma,
            holds: chain_exact && chi_tau_j == chi_tau_j1 + chi_sigma,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferReport {
    pub field: u32,
    pub order: usize,
    pub h_pair: BTreeMap<usize, usize>,
    pub h_quotient: BTreeMap<usize, usize>,
    pub rank_pi: BTreeMap<usize, usize>,
    pub rank_mu: BTreeMap<usize, usize>,
    /// Columns where π_*μ_* differs from |G|·id.
    pub pi_mu_residual: usize,
    /// Columns where μ_*π_* differs from Σ_g g_*.
    pub mu_pi_residual: usize,
    /// dim H(K,L)^G and whether π_* maps it isomorphically onto H(K/G,L/G);
    /// `None` when the characteristic divides |G|.
    pub invariant_dim: Option<usize>,
    pub invariant_iso: Option<bool>,
}

impl TransferReport {
    pub fn holds(&self) -> bool {
        self.pi_mu_residual == 0 && self.mu_pi_residual == 0 && self.invariant_iso != Some(false)
    }
}

/// Transfer μ: C(K/G, L/G) → C(K, L), σ̄ ↦ Σ_g g·s̃ for a lift s̃ oriented
/// so that π(s̃) = σ̄. Fixed simplices are counted |G| times.
pub fn transfer_maps(g: &GChains) -> Result<TransferReport, SmithError> {
    let f = g.field();
    let k = &g.gc.complex;
    let q = quotient_complex(&g.gc)?;
    let lq = q.project(&g.l);
    let relq = chain_complex(&q.complex, &lq, f)?;
    let order = g.gc.order();

    // μ on chains
    let mut mu_cols = Vec::with_capacity(relq.cells.len());
    for (d, cells) in relq.cells.iter().enumerate() {
        let mut lift_of: FxHashMap<Vec<usize>, (usize, i64)> = FxHashMap::default();
        for (i, s) in k.simplices(d).iter().enumerate() {
            let img: Vec<usize> = s.iter().map(|&v| q.proj[v]).collect();
            let mut sorted = img.clone();
            sorted.sort_unstable();
            lift_of.entry(sorted).or_insert((i, crate::complexes::sort_sign(&img)));
        }
        let mut cols = Vec::with_capacity(cells.len());
        for &qi in cells {
            let (li, e) = lift_of[&q.complex.simplices(d)[qi]];
            let slot = g.rel.slot(d, li).ok_or(SmithError::NotInvariant)?;
            let base = SparseVec::from_signed(f, [(slot, e)]);
            let mut v = SparseVec::zero();
            for h in 0..order {
                v.axpy(f, 1, &g.act_vec(h, d, &base));
            }
            cols.push(v);
        }
        mu_cols.push(cols);
    }
    let pi_cols = chain_map(k, &g.rel, &q.complex, &relq, &q.proj)?;

    let hb = HomologyBasis::compute(&g.rel.chains);
    let hq = HomologyBasis::compute(&relq.chains);
    let pi = InducedMap::new(&hb, &hq, &pi_cols)?;
    let mu = InducedMap::new(&hq, &hb, &mu_cols)?;
    let g_maps: Vec<InducedMap> = (0..order)
        .map(|h| {
            let cols: Vec<Vec<SparseVec>> = (0..g.degrees())
                .map(|d| (0..g.dim(d)).map(|j| g.act_vec(h, d, &SparseVec::unit(j))).collect())
                .collect();
            InducedMap::new(&hb, &hb, &cols)
        })
        .collect::<Result<_, _>>()?;

    let scalar = f.from_i64(order as i64);
    let pm = mu.then(&pi);
    let mut pi_mu_residual = 0;
    for (d, m) in pm.matrices.iter().enumerate() {
        for (i, col) in m.iter().enumerate() {
            let want = SparseVec::unit(i).scaled(f, scalar);
            if *col != want {
                pi_mu_residual += 1;
            }
            let _ = d;
        }
    }
    let mp = pi.then(&mu);
    let mut mu_pi_residual = 0;
    for (d, m) in mp.matrices.iter().enumerate() {
        for (i, col) in m.iter().enumerate() {
            let mut want = SparseVec::zero();
            for gm in &g_maps {
                want.axpy(f, 1, &gm.matrices[d][i]);
            }
            if *col != want {
                mu_pi_residual += 1;
            }
        }
    }

    let (invariant_dim, invariant_iso) = if f.from_i64(order as i64) == 0 {
        (None, None)
    } else {
        let mut dim = 0;
        let mut iso = true;
        for d in 0..pi.degrees() {
            // invariants: kernel of the stacked maps g_* − id
            let r = hb.degrees[d].rank();
            let mut e = Echelon::tracked(f);
            let mut inv = Vec::new();
            for i in 0..r {
                let mut stacked = Vec::new();
                for (gi, gm) in g_maps.iter().enumerate() {
                    let diff = gm.matrices[d][i].sub(f, &SparseVec::unit(i));
                    stacked.extend(diff.entries().iter().map(|&(row, c)| (gi * r + row, c)));
                }
                let col = SparseVec::from_entries(f, stacked);
                if let Insert::Dependent(combo) = e.insert_tagged(col, SparseVec::unit(i)) {
                    inv.push(combo);
                }
            }
            dim += inv.len();
            let images: Vec<SparseVec> = inv.iter().map(|c| c.map_through(f, &pi.matrices[d])).collect();
            let rk = span_rank(f, images);
            iso &= rk == inv.len() && rk == hq.degrees[d].rank();
        }
        (Some(dim), Some(iso))
    };

    Ok(TransferReport {
        field: f.q(),
        order,
        h_pair: hb.ranks().ranks,
        h_quotient: hq.ranks().ranks,
        rank_pi: pi.rank_table(),
        rank_mu: mu.rank_table(),
        pi_mu_residual,
        mu_pi_residual,
        invariant_dim,
        invariant_iso,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EulerReport {
    pub p: u32,
    pub chi_space: i64,
    pub chi_fixed: i64,
    pub chi_quotient: i64,
    /// χ(X) + (p−1)χ(X^G) − pχ(X/G).
    pub residual: i64,
    pub congruence: bool,
}

pub fn euler_identity(p: u32, chi_space: i64, chi_fixed: i64, chi_quotient: i64) -> EulerReport {
    let p64 = p as i64;
    EulerReport {
        p,
        chi_space,
        chi_fixed,
        chi_quotient,
        residual: chi_space + (p64 - 1) * chi_fixed - p64 * chi_quotient,
        congruence: (chi_space - chi_fixed).rem_euclid(p64) == 0,
    }
}

/// Everything Smith theory says about one regular pair, for one operator
/// set.
#[derive(Debug, Clone, Serialize)]
pub struct SmithBundle {
    pub triangles: Vec<SmithTriangleReport>,
    pub inequalities: BTreeMap<String, Vec<InequalityRow>>,
    pub orbit_iso: OrbitIsoReport,
    pub second_sequence: Vec<SecondSequenceRow>,
}

pub fn smith_bundle(g: &GChains) -> Result<SmithBundle, SmithError> {
    let ops = smith_operators(&g.gc.group, None)?;
    if g.field().q() != ops[0].p {
        return Err(SmithError::FieldMismatch {
            p: ops[0].p,
            q: g.field().q(),
        });
    }
    let reg = g.gc.check_regularity();
    if !reg.regular() {
        return Err(SmithError::NotRegular(reg.witness.unwrap_or_default()));
    }
    g.verify_operator_identities(&ops)?;
    let mut triangles = Vec::new();
    let mut inequalities = BTreeMap::new();
    for op in &ops {
        let t = exact_triangle_check(g, op)?;
        inequalities.insert(format!("{:?}", op.kind), smith_inequalities(&t.h_rho, &t.h_fixed, &t.h_pair));
        triangles.push(t);
    }
    Ok(SmithBundle {
        triangles,
        inequalities,
        orbit_iso: orbit_iso_check(g, &ops)?,
        second_sequence: second_sequence_check(g, &ops)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexes::regularize;

    fn fp(p: u32) -> FieldSpec {
        FieldSpec::new(p).unwrap()
    }

    /// 3k-cycle with ℤ/3 rotating by k.
    fn free_circle(k: usize) -> GComplex {
        let n = 3 * k;
        let c = SimplicialComplex::from_generators(n, (0..n).map(|i| vec![i, (i + 1) % n]), None).unwrap();
        let vperm = (0..3).map(|g| (0..n).map(|v| (v + g * k) % n).collect()).collect();
        GComplex::new(c, GroupSpec::cyclic(3), vperm).unwrap()
    }

    #[test]
    fn tau_squared_is_sigma_mod_three() {
        let ops = smith_operators(&GroupSpec::cyclic(3), None).unwrap();
        assert_eq!(ops[0].coeffs, vec![1, 1, 1]);
        assert_eq!(ops[1].coeffs, vec![1, 2, 0]);
        assert_eq!(ops[2].coeffs, vec![1, 1, 1]);
    }

    #[test]
    fn mod_two_sigma_equals_tau() {
        let ops = smith_operators(&GroupSpec::cyclic(2), None).unwrap();
        assert_eq!(ops[0].coeffs, ops[1].coeffs);
    }

    #[test]
    fn non_prime_group_rejected() {
        assert_eq!(smith_operators(&GroupSpec::cyclic(4), None).unwrap_err(), SmithError::NotCyclicOfOrderP(4));
    }

    #[test]
    fn free_orbit_of_a_vertex() {
        let k = SimplicialComplex::from_generators(3, (0..3).map(|i| vec![i]), None).unwrap();
        let gc = GComplex::new(k.clone(), GroupSpec::cyclic(3), vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]]).unwrap();
        let g = GChains::new(&gc, &SimplicialComplex::empty(3), fp(3)).unwrap();
        let ops = smith_operators(&gc.group, None).unwrap();
        assert_eq!(special_subcomplex(&g, &ops[0]).unwrap().dim(0), 1);
        assert_eq!(special_subcomplex(&g, &ops[1]).unwrap().dim(0), 2);
    }

    #[test]
    fn free_circle_triangle_and_orbit_iso() {
        let gc = free_circle(3);
        assert!(gc.check_regularity().regular());
        let g = GChains::new(&gc, &SimplicialComplex::empty(9), fp(3)).unwrap();
        let b = smith_bundle(&g).unwrap();
        for t in &b.triangles {
            assert!(t.exact(), "{t:?}");
        }
        let sigma = &b.triangles[0];
        assert_eq!(sigma.rank_delta.get(&1), Some(&1));
        assert_eq!(b.orbit_iso.special, BTreeMap::from([(0, 1), (1, 1)]));
        assert!(b.orbit_iso.equal);
        assert!(b.second_sequence.iter().all(|r| r.holds));
        assert!(b.inequalities.values().flatten().all(|r| r.holds));
    }

    #[test]
    fn transfer_over_f5_on_free_circle() {
        let gc = free_circle(3);
        let g = GChains::new(&gc, &SimplicialComplex::empty(9), fp(5)).unwrap();
        let t = transfer_maps(&g).unwrap();
        assert!(t.holds(), "{t:?}");
        assert_eq!(t.invariant_iso, Some(true));
        assert_eq!(t.h_quotient, BTreeMap::from([(0, 1), (1, 1)]));
    }

    #[test]
    fn reflection_of_an_edge_over_f2() {
        let k = SimplicialComplex::from_generators(2, [vec![0, 1]], None).unwrap();
        let gc = GComplex::new(k, GroupSpec::cyclic(2), vec![vec![0, 1], vec![1, 0]]).unwrap();
        let reg = regularize(&gc);
        let n = reg.complex.complex.num_vertices();
        let g = GChains::new(&reg.complex, &SimplicialComplex::empty(n), fp(2)).unwrap();
        let b = smith_bundle(&g).unwrap();
        assert!(b.triangles.iter().all(SmithTriangleReport::exact));
        let t = transfer_maps(&g).unwrap();
        assert_eq!(t.invariant_iso, None);
        assert!(t.holds());
    }

    #[test]
    fn euler_identity_residual() {
        let e = euler_identity(3, 1, 1, 1);
        assert_eq!(e.residual, 0);
        assert!(e.congruence);
        assert_eq!(euler_identity(2, 1, -1, 0).residual, 0);
    }

    #[test]
    fn trivial_action_inequality_is_equality() {
        let rows = smith_inequalities(&BTreeMap::new(), &BTreeMap::from([(0, 1), (1, 1)]), &BTreeMap::from([(0, 1), (1, 1)]));
        assert!(rows.iter().all(|r| r.margin == 0));
    }
}
