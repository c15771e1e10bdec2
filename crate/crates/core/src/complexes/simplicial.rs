use rustc_hash::FxHashMap;

use super::ComplexError;

/// A simplex as a strictly increasing list of vertex ids.
pub type Simplex = Vec<usize>;

/// Finite abstract simplicial complex stored by dimension.
///
/// Vertex ids live in an ambient range `0..num_vertices`; a subcomplex keeps
/// the ambient numbering of its parent, so its vertex set may be sparse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplicialComplex {
    num_vertices: usize,
    simplices: Vec<Vec<Simplex>>,
    index: Vec<FxHashMap<Simplex, usize>>,
    truncated_above: Option<usize>,
}

impl SimplicialComplex {
    pub fn empty(num_vertices: usize) -> Self {
        Self {
            num_vertices,
            simplices: Vec::new(),
            index: Vec::new(),
            truncated_above: None,
        }
    }

    /// Downward closure of `generators`. Faces of dimension above `max_dim`
    /// are dropped and the complex is flagged as truncated.
    pub fn from_generators<I>(num_vertices: usize, generators: I, max_dim: Option<usize>) -> Result<Self, ComplexError>
    where
        I: IntoIterator<Item = Simplex>,
    {
        let mut by_dim: Vec<FxHashMap<Simplex, ()>> = Vec::new();
        let mut truncated = false;
        for mut g in generators {
            g.sort_unstable();
            g.dedup();
            if g.is_empty() {
                continue;
            }
            if let Some(&v) = g.iter().find(|&&v| v >= num_vertices) {
                return Err(ComplexError::VertexOutOfRange(v));
            }
            let cap = max_dim.map_or(g.len(), |m| (m + 1).min(g.len()));
            if cap < g.len() {
                truncated = true;
            }
            add_faces(&g, cap, &mut by_dim);
        }
        let simplices = by_dim
            .into_iter()
            .map(|m| {
                let mut v: Vec<Simplex> = m.into_keys().collect();
                v.sort_unstable();
                v
            })
            .collect();
        let mut k = Self::from_sorted_levels(num_vertices, simplices);
        if truncated {
            k.truncated_above = max_dim;
        }
        Ok(k)
    }

    fn from_sorted_levels(num_vertices: usize, mut simplices: Vec<Vec<Simplex>>) -> Self {
        while simplices.last().is_some_and(Vec::is_empty) {
            simplices.pop();
        }
        let index = simplices
            .iter()
            .map(|level| level.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect())
            .collect();
        Self {
            num_vertices,
            simplices,
            index,
            truncated_above: None,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn dim(&self) -> Option<usize> {
        self.simplices.len().checked_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// `Some(d)` if simplices of dimension above `d` were dropped.
    pub fn truncated_above(&self) -> Option<usize> {
        self.truncated_above
    }

    pub fn with_truncation(mut self, t: Option<usize>) -> Self {
        self.truncated_above = t;
        self
    }

    pub fn simplices(&self, d: usize) -> &[Simplex] {
        self.simplices.get(d).map_or(&[], Vec::as_slice)
    }

    pub fn count(&self, d: usize) -> usize {
        self.simplices(d).len()
    }

    pub fn num_simplices(&self) -> usize {
        self.simplices.iter().map(Vec::len).sum()
    }

    pub fn f_vector(&self) -> Vec<usize> {
        self.simplices.iter().map(Vec::len).collect()
    }

    /// All simplices, dimension-major.
    pub fn iter(&self) -> impl Iterator<Item = &Simplex> {
        self.simplices.iter().flatten()
    }

    pub fn index_of(&self, s: &[usize]) -> Option<usize> {
        let d = s.len().checked_sub(1)?;
        self.index.get(d)?.get(s).copied()
    }

    pub fn contains(&self, s: &[usize]) -> bool {
        self.index_of(s).is_some()
    }

    pub fn vertices(&self) -> Vec<usize> {
        self.simplices(0).iter().map(|s| s[0]).collect()
    }

    pub fn has_vertex(&self, v: usize) -> bool {
        self.contains(&[v])
    }

    pub fn euler_of_simplices(&self) -> i64 {
        self.simplices
            .iter()
            .enumerate()
            .map(|(d, l)| if d % 2 == 0 { l.len() as i64 } else { -(l.len() as i64) })
            .sum()
    }

    /// Largest subcomplex whose simplices satisfy `keep`.
    pub fn filter<F: Fn(&[usize]) -> bool>(&self, keep: F) -> Self {
        let mut levels: Vec<Vec<Simplex>> = Vec::with_capacity(self.simplices.len());
        let mut kept: Vec<rustc_hash::FxHashSet<&[usize]>> = Vec::new();
        for (d, level) in self.simplices.iter().enumerate() {
            let mut out = Vec::new();
            let mut set = rustc_hash::FxHashSet::default();
            for s in level {
                if !keep(s) {
                    continue;
                }
                if d > 0 && !facets(s).all(|f| kept[d - 1].contains(f.as_slice())) {
                    continue;
                }
                out.push(s.clone());
                set.insert(s.as_slice());
            }
            levels.push(out);
            kept.push(set);
        }
        let mut k = Self::from_sorted_levels(self.num_vertices, levels);
        k.truncated_above = self.truncated_above;
        k
    }

    /// Full subcomplex spanned by the vertices satisfying `keep`.
    pub fn full_subcomplex<F: Fn(usize) -> bool>(&self, keep: F) -> Self {
        self.filter(|s| s.iter().all(|&v| keep(v)))
    }

    pub fn is_subcomplex_of(&self, other: &SimplicialComplex) -> bool {
        self.iter().all(|s| other.contains(s))
    }

    pub fn is_downward_closed(&self) -> bool {
        self.simplices
            .iter()
            .enumerate()
            .skip(1)
            .all(|(_, level)| level.iter().all(|s| facets(s).all(|f| self.contains(&f))))
    }

    /// Simplices not properly contained in another simplex.
    pub fn maximal_simplices(&self) -> Vec<Simplex> {
        let mut out = Vec::new();
        for d in 0..self.simplices.len() {
            let mut covered = rustc_hash::FxHashSet::default();
            for s in self.simplices(d + 1) {
                for f in facets(s) {
                    covered.insert(f);
                }
            }
            out.extend(self.simplices(d).iter().filter(|s| !covered.contains(*s)).cloned());
        }
        out
    }

    pub fn union(&self, other: &SimplicialComplex) -> Self {
        let n = self.num_vertices.max(other.num_vertices);
        let mut levels: Vec<Vec<Simplex>> = Vec::new();
        let top = self.simplices.len().max(other.simplices.len());
        for d in 0..top {
            let mut l: Vec<Simplex> = self.simplices(d).iter().chain(other.simplices(d)).cloned().collect();
            l.sort_unstable();
            l.dedup();
            levels.push(l);
        }
        let mut k = Self::from_sorted_levels(n, levels);
        k.truncated_above = match (self.truncated_above, other.truncated_above) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        k
    }

    /// Image of a simplex under a vertex map, sorted and deduplicated.
    pub fn image(s: &[usize], map: &[usize]) -> Simplex {
        let mut t: Simplex = s.iter().map(|&v| map[v]).collect();
        t.sort_unstable();
        t.dedup();
        t
    }
}

/// Codimension-one faces, each still sorted.
pub fn facets(s: &[usize]) -> impl Iterator<Item = Simplex> + '_ {
    let n = if s.len() > 1 { s.len() } else { 0 };
    (0..n).map(move |i| {
        let mut f = Vec::with_capacity(s.len() - 1);
        f.extend_from_slice(&s[..i]);
        f.extend_from_slice(&s[i + 1..]);
        f
    })
}

fn add_faces(g: &[usize], cap: usize, by_dim: &mut Vec<FxHashMap<Simplex, ()>>) {
    if by_dim.len() < cap {
        by_dim.resize_with(cap, FxHashMap::default);
    }
    // Top-down walk that stops at faces already present.
    let mut stack: Vec<Simplex> = Vec::new();
    if g.len() <= cap {
        stack.push(g.to_vec());
    } else {
        // Enumerate the cap-subsets directly.
        let n = g.len();
        let mut idx: Vec<usize> = (0..cap).collect();
        loop {
            stack.push(idx.iter().map(|&i| g[i]).collect());
            let mut i = cap;
            let mut advanced = false;
            while i > 0 {
                i -= 1;
                if idx[i] < n - cap + i {
                    idx[i] += 1;
                    for j in i + 1..cap {
                        idx[j] = idx[j - 1] + 1;
                    }
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                break;
            }
        }
    }
    while let Some(s) = stack.pop() {
        let d = s.len() - 1;
        if by_dim[d].contains_key(&s) {
            continue;
        }
        for f in facets(&s) {
            if !by_dim[d - 1].contains_key(&f) {
                stack.push(f);
            }
        }
        by_dim[d].insert(s, ());
    }
}

/// Sign of the permutation that sorts `v` (entries distinct).
pub fn sort_sign(v: &[usize]) -> i64 {
    let mut inversions = 0usize;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            if v[i] > v[j] {
                inversions += 1;
            }
        }
    }
    if inversions % 2 == 0 {
        1
    } else {
        -1
    }
}
