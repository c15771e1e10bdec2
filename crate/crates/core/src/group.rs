//! Finite groups given by multiplication tables.

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("multiplication table is not {0}x{0}")]
    BadTable(usize),
    #[error("table entry {0} out of range")]
    EntryOutOfRange(usize),
    #[error("group law violated: {0}")]
    GroupLawViolation(String),
    #[error("element {0} out of range")]
    NoSuchElement(usize),
    #[error("{0:?} is not a subgroup")]
    NotASubgroup(Vec<usize>),
    #[error("permutation {0} is not a bijection of the right length")]
    NotAPermutation(usize),
    #[error("generated group exceeds {0} elements")]
    TooLarge(usize),
}

/// A finite group: `mult[a][b]` is the index of `a·b`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub mult: Vec<Vec<usize>>,
    pub identity: usize,
    pub names: Vec<String>,
}

impl GroupSpec {
    /// Validates associativity, identity and inverses exhaustively.
    pub fn new(mult: Vec<Vec<usize>>, identity: usize, names: Vec<String>) -> Result<Self, GroupError> {
        let g = Self { mult, identity, names };
        g.validate()?;
        Ok(g)
    }

    pub fn trivial() -> Self {
        Self::cyclic(1)
    }

    pub fn cyclic(n: usize) -> Self {
        let mult = (0..n).map(|a| (0..n).map(|b| (a + b) % n).collect()).collect();
        let names = (0..n)
            .map(|i| match i {
                0 => "e".to_string(),
                1 => "g".to_string(),
                _ => format!("g^{i}"),
            })
            .collect();
        Self {
            mult,
            identity: 0,
            names,
        }
    }

    /// Direct product; element (a, b) has index a * |H| + b.
    pub fn product(&self, other: &GroupSpec) -> Self {
        let (n, m) = (self.order(), other.order());
        let mut mult = vec![vec![0; n * m]; n * m];
        for a in 0..n * m {
            for b in 0..n * m {
                let x = self.mult[a / m][b / m];
                let y = other.mult[a % m][b % m];
                mult[a][b] = x * m + y;
            }
        }
        let names = (0..n * m)
            .map(|i| format!("({},{})", self.names[i / m], other.names[i % m]))
            .collect();
        Self {
            mult,
            identity: self.identity * m + other.identity,
            names,
        }
    }

    pub fn order(&self) -> usize {
        self.mult.len()
    }

    pub fn validate(&self) -> Result<(), GroupError> {
        let n = self.mult.len();
        if n == 0 || self.mult.iter().any(|r| r.len() != n) || self.names.len() != n {
            return Err(GroupError::BadTable(n));
        }
        if self.identity >= n {
            return Err(GroupError::NoSuchElement(self.identity));
        }
        for row in &self.mult {
            if let Some(&x) = row.iter().find(|&&x| x >= n) {
                return Err(GroupError::EntryOutOfRange(x));
            }
        }
        let e = self.identity;
        for a in 0..n {
            if self.mult[e][a] != a || self.mult[a][e] != a {
                return Err(GroupError::GroupLawViolation(format!("identity fails on {}", self.names[a])));
            }
            if !(0..n).any(|b| self.mult[a][b] == e && self.mult[b][a] == e) {
                return Err(GroupError::GroupLawViolation(format!("{} has no inverse", self.names[a])));
            }
        }
        for a in 0..n {
            for b in 0..n {
                let ab = self.mult[a][b];
                for c in 0..n {
                    if self.mult[ab][c] != self.mult[a][self.mult[b][c]] {
                        return Err(GroupError::GroupLawViolation(format!(
                            "associativity fails on ({}, {}, {})",
                            self.names[a], self.names[b], self.names[c]
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.mult[a][b]
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.order())
            .find(|&b| self.mult[a][b] == self.identity)
            .expect("validated group")
    }

    pub fn pow(&self, a: usize, k: usize) -> usize {
        let mut acc = self.identity;
        for _ in 0..k {
            acc = self.mult[acc][a];
        }
        acc
    }

    pub fn element_order(&self, a: usize) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mult[x][a];
            k += 1;
        }
        k
    }

    /// Smallest subgroup containing `gens`, as a sorted element list.
    pub fn closure(&self, gens: &[usize]) -> Vec<usize> {
        let mut seen = BTreeSet::from([self.identity]);
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mult[x][g];
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        seen.into_iter().collect()
    }

    pub fn is_subgroup(&self, elems: &[usize]) -> bool {
        let set: BTreeSet<usize> = elems.iter().copied().collect();
        set.contains(&self.identity)
            && set.iter().all(|&a| set.iter().all(|&b| set.contains(&self.mult[a][self.inverse(b)])))
    }

    /// Every subgroup, sorted by order then lexicographically.
    pub fn subgroups(&self) -> Vec<Vec<usize>> {
        let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
        let cyclic: BTreeSet<Vec<usize>> = (0..self.order()).map(|a| self.closure(&[a])).collect();
        found.extend(cyclic.iter().cloned());
        let mut frontier: Vec<Vec<usize>> = cyclic.iter().cloned().collect();
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for h in &frontier {
                for c in &cyclic {
                    let mut gens = h.clone();
                    gens.extend_from_slice(c);
                    let j = self.closure(&gens);
                    if found.insert(j.clone()) {
                        next.push(j);
                    }
                }
            }
            frontier = next;
        }
        let mut out: Vec<Vec<usize>> = found.into_iter().collect();
        out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        out
    }

    pub fn is_normal(&self, sub: &[usize]) -> bool {
        let set: BTreeSet<usize> = sub.iter().copied().collect();
        (0..self.order()).all(|g| {
            let gi = self.inverse(g);
            sub.iter().all(|&h| set.contains(&self.mult[self.mult[g][h]][gi]))
        })
    }

    /// Returns the prime p if the order is a power of p (order 1 gives None).
    pub fn p_group_prime(&self) -> Option<u32> {
        let mut n = self.order();
        if n < 2 {
            return None;
        }
        let p = (2..=n).find(|d| n % d == 0)?;
        while n % p == 0 {
            n /= p;
        }
        (n == 1).then_some(p as u32)
    }

    /// A chain {e} = G_0 ◁ ... ◁ G_k = G of subgroups with each G_i normal
    /// in G_{i+1} of index p. Exists for every p-group.
    pub fn composition_series(&self, p: usize) -> Option<Vec<Vec<usize>>> {
        let subs = self.subgroups();
        let mut chain = vec![(0..self.order()).collect::<Vec<_>>()];
        loop {
            let top = chain.last().unwrap().clone();
            if top.len() == 1 {
                break;
            }
            let sub_group = self.restrict(&top);
            let next = subs.iter().find(|h| {
                h.len() * p == top.len()
                    && h.iter().all(|x| top.contains(x))
                    && sub_group.is_normal(&h.iter().map(|x| top.binary_search(x).unwrap()).collect::<Vec<_>>())
            })?;
            chain.push(next.clone());
        }
        chain.reverse();
        Some(chain)
    }

    /// The subgroup `elems` as a group in its own right, indexed by position
    /// in the sorted element list.
    pub fn restrict(&self, elems: &[usize]) -> GroupSpec {
        let pos: HashMap<usize, usize> = elems.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let mult = elems
            .iter()
            .map(|&a| elems.iter().map(|&b| pos[&self.mult[a][b]]).collect())
            .collect();
        GroupSpec {
            mult,
            identity: pos[&self.identity],
            names: elems.iter().map(|&x| self.names[x].clone()).collect(),
        }
    }

    /// Closes a set of permutations under composition. Element 0 is the
    /// identity; `perm[g∘h] = perm[g] ∘ perm[h]` (apply h first).
    pub fn from_permutations(gens: &[Vec<usize>], names: &[&str], limit: usize) -> Result<(GroupSpec, Vec<Vec<usize>>), GroupError> {
        let n = gens.first().map_or(0, Vec::len);
        for (i, g) in gens.iter().enumerate() {
            if !is_permutation(g, n) {
                return Err(GroupError::NotAPermutation(i));
            }
        }
        let id: Vec<usize> = (0..n).collect();
        let mut elems = vec![id.clone()];
        let mut labels = vec!["e".to_string()];
        let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(id, 0)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            for (gi, g) in gens.iter().enumerate() {
                let y: Vec<usize> = (0..n).map(|p| g[elems[x][p]]).collect();
                if !index.contains_key(&y) {
                    if elems.len() >= limit {
                        return Err(GroupError::TooLarge(limit));
                    }
                    let name = if x == 0 {
                        names.get(gi).map_or(format!("s{gi}"), |s| s.to_string())
                    } else {
                        format!("{}{}", names.get(gi).map_or(format!("s{gi}"), |s| s.to_string()), labels[x])
                    };
                    index.insert(y.clone(), elems.len());
                    elems.push(y);
                    labels.push(name);
                    queue.push_back(elems.len() - 1);
                }
            }
        }
        let m = elems.len();
        let mut mult = vec![vec![0; m]; m];
        for a in 0..m {
            for b in 0..m {
                let c: Vec<usize> = (0..n).map(|p| elems[a][elems[b][p]]).collect();
                mult[a][b] = index[&c];
            }
        }
        Ok((
            GroupSpec {
                mult,
                identity: 0,
                names: labels,
            },
            elems,
        ))
    }
}

pub fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &x in p {
        if x >= n || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_group_is_valid() {
        let g = GroupSpec::cyclic(6);
        g.validate().unwrap();
        assert_eq!(g.element_order(1), 6);
        assert_eq!(g.inverse(2), 4);
        assert_eq!(g.subgroups().len(), 4);
    }

    #[test]
    fn rejects_non_associative_table() {
        // a latin square with identity that is not a group (order 5 loop)
        let t = vec![
            vec![0, 1, 2, 3, 4],
            vec![1, 0, 3, 4, 2],
            vec![2, 4, 0, 1, 3],
            vec![3, 2, 4, 0, 1],
            vec![4, 3, 1, 2, 0],
        ];
        let names = (0..5).map(|i| i.to_string()).collect();
        assert!(matches!(GroupSpec::new(t, 0, names), Err(GroupError::GroupLawViolation(_))));
    }

    #[test]
    fn klein_four_series() {
        let v = GroupSpec::cyclic(2).product(&GroupSpec::cyclic(2));
        assert_eq!(v.p_group_prime(), Some(2));
        assert_eq!(v.subgroups().len(), 5);
        let series = v.composition_series(2).unwrap();
        assert_eq!(series.iter().map(Vec::len).collect::<Vec<_>>(), vec![1, 2, 4]);
    }

    #[test]
    fn permutation_closure_matches_composition() {
        let r = vec![1, 2, 0];
        let (g, perms) = GroupSpec::from_permutations(&[r], &["r"], 10).unwrap();
        assert_eq!(g.order(), 3);
        for a in 0..3 {
            for b in 0..3 {
                let comp: Vec<usize> = (0..3).map(|x| perms[a][perms[b][x]]).collect();
                assert_eq!(comp, perms[g.mul(a, b)]);
            }
        }
    }
}
