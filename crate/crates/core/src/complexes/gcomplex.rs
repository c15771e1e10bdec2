use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::group::GroupSpec;

use super::{sort_sign, ComplexError, Simplex, SimplicialComplex};

/// A simplicial complex with a group acting by vertex permutations.
#[derive(Debug, Clone)]
pub struct GComplex {
    pub complex: SimplicialComplex,
    pub group: GroupSpec,
    /// `vperm[g][v]` = g·v.
    pub vperm: Vec<Vec<usize>>,
}

/// Which of Bredon's conditions hold; a witness is recorded for the first
/// failure found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RegularityReport {
    pub condition_a: bool,
    pub condition_b: bool,
    pub witness: Option<String>,
}

impl RegularityReport {
    pub fn regular(&self) -> bool {
        self.condition_a && self.condition_b
    }
}

impl GComplex {
    pub fn new(complex: SimplicialComplex, group: GroupSpec, vperm: Vec<Vec<usize>>) -> Result<Self, ComplexError> {
        let n = complex.num_vertices();
        if vperm.len() != group.order() {
            return Err(ComplexError::BadAction(format!("{} permutations for a group of order {}", vperm.len(), group.order())));
        }
        for (g, p) in vperm.iter().enumerate() {
            if !crate::group::is_permutation(p, n) {
                return Err(ComplexError::BadAction(format!("element {g} is not a vertex permutation")));
            }
            for s in complex.iter() {
                let t = SimplicialComplex::image(s, p);
                if t.len() != s.len() || !complex.contains(&t) {
                    return Err(ComplexError::BadAction(format!("element {g} maps {s:?} outside the complex")));
                }
            }
        }
        Ok(Self { complex, group, vperm })
    }

    pub fn trivial(complex: SimplicialComplex) -> Self {
        let n = complex.num_vertices();
        Self {
            complex,
            group: GroupSpec::trivial(),
            vperm: vec![(0..n).collect()],
        }
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    /// Sorted image of a simplex and the orientation sign of g on it.
    pub fn apply(&self, g: usize, s: &[usize]) -> (Simplex, i64) {
        let img: Vec<usize> = s.iter().map(|&v| self.vperm[g][v]).collect();
        let sign = sort_sign(&img);
        let mut sorted = img;
        sorted.sort_unstable();
        (sorted, sign)
    }

    pub fn is_fixed_vertex(&self, v: usize) -> bool {
        self.vperm.iter().all(|p| p[v] == v)
    }

    /// K^G: simplices all of whose vertices are fixed. For a regular
    /// complex this triangulates the fixed set of the realization.
    pub fn fixed_subcomplex(&self) -> SimplicialComplex {
        self.complex.full_subcomplex(|v| self.is_fixed_vertex(v))
    }

    pub fn is_invariant(&self, sub: &SimplicialComplex) -> bool {
        sub.iter().all(|s| {
            self.vperm
                .iter()
                .all(|p| sub.contains(&SimplicialComplex::image(s, p)))
        })
    }

    /// The same complex with the action restricted to a subgroup.
    pub fn restrict_group(&self, sub: &[usize]) -> GComplex {
        GComplex {
            complex: self.complex.clone(),
            group: self.group.restrict(sub),
            vperm: sub.iter().map(|&g| self.vperm[g].clone()).collect(),
        }
    }

    /// Orbits of d-simplices as lists of indices into `simplices(d)`,
    /// ordered by smallest member.
    pub fn simplex_orbits(&self, d: usize) -> Vec<Vec<usize>> {
        let level = self.complex.simplices(d);
        let mut seen = vec![false; level.len()];
        let mut out = Vec::new();
        for i in 0..level.len() {
            if seen[i] {
                continue;
            }
            let mut orbit: Vec<usize> = self
                .vperm
                .iter()
                .map(|p| {
                    let t = SimplicialComplex::image(&level[i], p);
                    self.complex.index_of(&t).expect("invariant complex")
                })
                .collect();
            orbit.sort_unstable();
            orbit.dedup();
            for &j in &orbit {
                seen[j] = true;
            }
            out.push(orbit);
        }
        out
    }

    /// Bredon's regularity conditions, checked over all subgroups.
    ///
    /// (B): if v and g·v lie in a common simplex then g·v = v.
    /// (A): whenever (v_0..v_n) and (g_0 v_0..g_n v_n) are simplices with
    /// g_i in H, some g in H has g v_i = g_i v_i for all i.
    pub fn check_regularity(&self) -> RegularityReport {
        let mut report = RegularityReport {
            condition_a: true,
            condition_b: true,
            witness: None,
        };
        for e in self.complex.simplices(1) {
            let (u, v) = (e[0], e[1]);
            if let Some(g) = (0..self.order()).find(|&g| self.vperm[g][u] == v) {
                report.condition_b = false;
                report.witness = Some(format!("(B) fails: {} maps vertex {u} to {v} across edge {e:?}", self.group.names[g]));
                break;
            }
        }
        'outer: for h in self.group.subgroups() {
            if h.len() == 1 {
                continue;
            }
            for s in self.complex.iter() {
                if s.iter().all(|&v| h.iter().all(|&g| self.vperm[g][v] == v)) {
                    continue;
                }
                if let Some(w) = self.condition_a_violation(&h, s) {
                    report.condition_a = false;
                    if report.witness.is_none() {
                        report.witness = Some(format!("(A) fails for subgroup {h:?}: {s:?} and {w:?} are both simplices"));
                    }
                    break 'outer;
                }
            }
        }
        report
    }

    /// A tuple (g_i v_i) forming a simplex that no single g in H realizes.
    fn condition_a_violation(&self, h: &[usize], s: &[usize]) -> Option<Vec<usize>> {
        let orbits: Vec<Vec<usize>> = s
            .iter()
            .map(|&v| {
                let mut o: Vec<usize> = h.iter().map(|&g| self.vperm[g][v]).collect();
                o.sort_unstable();
                o.dedup();
                o
            })
            .collect();
        // elements of H consistent with the prefix chosen so far
        let mut tuple = Vec::with_capacity(s.len());
        self.dfs_a(s, &orbits, &mut tuple, h.to_vec())
    }

    fn dfs_a(&self, s: &[usize], orbits: &[Vec<usize>], tuple: &mut Vec<usize>, consistent: Vec<usize>) -> Option<Vec<usize>> {
        let i = tuple.len();
        if i == s.len() {
            return consistent.is_empty().then(|| tuple.clone());
        }
        for &w in &orbits[i] {
            tuple.push(w);
            let mut set = tuple.clone();
            set.sort_unstable();
            set.dedup();
            if self.complex.contains(&set) {
                let next: Vec<usize> = consistent.iter().copied().filter(|&g| self.vperm[g][s[i]] == w).collect();
                if let Some(found) = self.dfs_a(s, orbits, tuple, next) {
                    return Some(found);
                }
            }
            tuple.pop();
        }
        None
    }
}

/// Barycentric subdivision with the induced action.
///
/// Vertex i of the result corresponds to `meaning[i]`, a simplex of the
/// input. Simplices are chains of faces.
#[derive(Debug, Clone)]
pub struct Subdivision {
    pub result: GComplex,
    pub meaning: Vec<Simplex>,
}

impl Subdivision {
    /// The subdivision of a subcomplex M of the input: chains of simplices
    /// of M.
    pub fn lift(&self, sub: &SimplicialComplex) -> SimplicialComplex {
        self.result.complex.full_subcomplex(|v| sub.contains(&self.meaning[v]))
    }
}

pub fn barycentric_subdivision(gc: &GComplex) -> Subdivision {
    let k = &gc.complex;
    let meaning: Vec<Simplex> = k.iter().cloned().collect();
    let id: FxHashMap<&[usize], usize> = meaning.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut flags: FxHashSet<Simplex> = FxHashSet::default();
    for top in k.maximal_simplices() {
        // each ordering of the vertices gives a maximal flag
        let mut perm: Vec<usize> = top.clone();
        permutations(&mut perm, 0, &mut |order| {
            let mut chain = Vec::with_capacity(order.len());
            let mut face: Vec<usize> = Vec::with_capacity(order.len());
            for &v in order {
                face.push(v);
                let mut sorted = face.clone();
                sorted.sort_unstable();
                chain.push(id[sorted.as_slice()]);
            }
            chain.sort_unstable();
            flags.insert(chain);
        });
    }
    let complex = SimplicialComplex::from_generators(meaning.len(), flags, None).expect("ids in range");
    let complex = complex.with_truncation(k.truncated_above());
    let vperm = gc
        .vperm
        .iter()
        .map(|p| {
            meaning
                .iter()
                .map(|s| id[SimplicialComplex::image(s, p).as_slice()])
                .collect()
        })
        .collect();
    Subdivision {
        result: GComplex {
            complex,
            group: gc.group.clone(),
            vperm,
        },
        meaning,
    }
}

fn permutations(v: &mut Vec<usize>, start: usize, f: &mut impl FnMut(&[usize])) {
    if start == v.len() {
        f(v);
        return;
    }
    for i in start..v.len() {
        v.swap(start, i);
        permutations(v, start + 1, f);
        v.swap(start, i);
    }
}

/// A regular G-complex obtained by at most two barycentric subdivisions.
#[derive(Debug, Clone)]
pub struct Regularized {
    pub complex: GComplex,
    pub steps: Vec<Subdivision>,
    pub original: RegularityReport,
}

impl Regularized {
    pub fn subdivisions(&self) -> usize {
        self.steps.len()
    }

    /// Image of a subcomplex of the original complex.
    pub fn lift(&self, sub: &SimplicialComplex) -> SimplicialComplex {
        let mut cur = sub.clone();
        for s in &self.steps {
            cur = s.lift(&cur);
        }
        cur
    }

    /// For each vertex of the result, the original vertex it descends from
    /// through "first vertex of the carrier" choices; a simplicial
    /// approximation of the identity onto the original complex.
    pub fn carrier_vertex(&self) -> Vec<usize> {
        let mut map: Vec<usize> = (0..self.complex.complex.num_vertices()).collect();
        for s in self.steps.iter().rev() {
            map = map.iter().map(|&v| s.meaning[v][0]).collect();
        }
        map
    }
}

/// Subdivide until regular. One subdivision suffices when (B) holds, and
/// the first derived complex always satisfies (B).
pub fn regularize(gc: &GComplex) -> Regularized {
    let original = gc.check_regularity();
    let mut steps = Vec::new();
    let mut cur = gc.clone();
    if !original.regular() {
        if !original.condition_b {
            let s = barycentric_subdivision(&cur);
            cur = s.result.clone();
            steps.push(s);
        }
        let s = barycentric_subdivision(&cur);
        cur = s.result.clone();
        steps.push(s);
    }
    Regularized {
        complex: cur,
        steps,
        original,
    }
}

/// K/G for a complex satisfying (B): vertices are vertex orbits.
#[derive(Debug, Clone)]
pub struct Quotient {
    pub complex: SimplicialComplex,
    /// Orbit id of each vertex of K.
    pub proj: Vec<usize>,
}

impl Quotient {
    pub fn project(&self, sub: &SimplicialComplex) -> SimplicialComplex {
        SimplicialComplex::from_generators(
            self.complex.num_vertices(),
            sub.iter().map(|s| SimplicialComplex::image(s, &self.proj)),
            None,
        )
        .expect("orbit ids in range")
    }
}

pub fn quotient_complex(gc: &GComplex) -> Result<Quotient, ComplexError> {
    let n = gc.complex.num_vertices();
    let mut proj = vec![usize::MAX; n];
    let mut count = 0;
    for v in 0..n {
        if proj[v] == usize::MAX {
            for p in &gc.vperm {
                proj[p[v]] = count;
            }
            count += 1;
        }
    }
    let mut gens = Vec::new();
    for s in gc.complex.iter() {
        let t = SimplicialComplex::image(s, &proj);
        if t.len() != s.len() {
            return Err(ComplexError::NotRegular(format!("{s:?} collapses in the quotient")));
        }
        gens.push(t);
    }
    let complex = SimplicialComplex::from_generators(count, gens, None)?.with_truncation(gc.complex.truncated_above());
    Ok(Quotient { complex, proj })
}
