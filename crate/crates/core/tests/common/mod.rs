//! Shared helpers for the integration tests: a random ℤ/p complex
//! generator and a dense homology oracle written from scratch.

#![allow(dead_code)]

use coarsesmith::complexes::{regularize, GComplex, SimplicialComplex};
use coarsesmith::group::GroupSpec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A regular ℤ/p complex with an invariant subcomplex, plus the size of the
/// complex before regularization.
pub struct RandomCase {
    pub p: u32,
    pub gc: GComplex,
    pub l: SimplicialComplex,
    pub raw_simplices: usize,
}

/// Vertices: `fixed` fixed points followed by free orbits of size p. The
/// generator rotates each free orbit by one step.
fn cyclic_vertex_action(p: usize, fixed: usize, orbits: usize) -> Vec<Vec<usize>> {
    let n = fixed + p * orbits;
    (0..p)
        .map(|g| {
            (0..n)
                .map(|v| {
                    if v < fixed {
                        v
                    } else {
                        let (o, i) = ((v - fixed) / p, (v - fixed) % p);
                        fixed + o * p + (i + g) % p
                    }
                })
                .collect()
        })
        .collect()
}

fn orbit_of(s: &[usize], vperm: &[Vec<usize>]) -> Vec<Vec<usize>> {
    vperm
        .iter()
        .map(|perm| {
            let mut t: Vec<usize> = s.iter().map(|&v| perm[v]).collect();
            t.sort_unstable();
            t
        })
        .collect()
}

/// One random case; at most `max_simplices` simplices before
/// regularization.
pub fn random_case(rng: &mut ChaCha8Rng, max_simplices: usize) -> RandomCase {
    let p = [2usize, 3, 5][rng.random_range(0..3)];
    let fixed = rng.random_range(0..3);
    let orbits = rng.random_range(1..=if p == 5 { 2 } else { 3 });
    let vperm = cyclic_vertex_action(p, fixed, orbits);
    let n = fixed + p * orbits;
    let mut gens: Vec<Vec<usize>> = (0..n).map(|v| vec![v]).collect();
    let mut k = SimplicialComplex::from_generators(n, gens.clone(), None).unwrap();
    for _ in 0..rng.random_range(1..12) {
        let size = rng.random_range(2..=3).min(n);
        let mut s: Vec<usize> = Vec::new();
        while s.len() < size {
            let v = rng.random_range(0..n);
            if !s.contains(&v) {
                s.push(v);
            }
        }
        let mut trial = gens.clone();
        trial.extend(orbit_of(&s, &vperm));
        let next = SimplicialComplex::from_generators(n, trial.clone(), None).unwrap();
        if next.num_simplices() <= max_simplices {
            gens = trial;
            k = next;
        }
    }
    let raw_simplices = k.num_simplices();
    let gc = GComplex::new(k, GroupSpec::cyclic(p), vperm.clone()).unwrap();
    let l = if rng.random_bool(0.5) {
        SimplicialComplex::empty(n)
    } else {
        let v = rng.random_range(0..n);
        SimplicialComplex::from_generators(n, orbit_of(&[v], &vperm), None).unwrap()
    };
    let reg = regularize(&gc);
    let l = reg.lift(&l);
    RandomCase {
        p: p as u32,
        gc: reg.complex,
        l,
        raw_simplices,
    }
}

pub fn random_cases(seed: u64, count: usize, max_simplices: usize) -> Vec<RandomCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_case(&mut rng, max_simplices)).collect()
}

/// A random complex on up to `n` vertices with a random subcomplex.
pub fn random_pair(rng: &mut ChaCha8Rng, n: usize, max_simplices: usize) -> (SimplicialComplex, SimplicialComplex) {
    let mut gens: Vec<Vec<usize>> = Vec::new();
    let mut k = SimplicialComplex::empty(n);
    for _ in 0..rng.random_range(1..8) {
        let size = rng.random_range(1..=3.min(n));
        let mut s: Vec<usize> = Vec::new();
        while s.len() < size {
            let v = rng.random_range(0..n);
            if !s.contains(&v) {
                s.push(v);
            }
        }
        s.sort_unstable();
        let mut trial = gens.clone();
        trial.push(s);
        let next = SimplicialComplex::from_generators(n, trial.clone(), None).unwrap();
        if next.num_simplices() <= max_simplices {
            gens = trial;
            k = next;
        }
    }
    let keep: Vec<Vec<usize>> = k.iter().filter(|_| rng.random_bool(0.3)).cloned().collect();
    let l = SimplicialComplex::from_generators(n, keep, None).unwrap();
    (k, l)
}

/// Rank over F_q of a dense matrix, by row reduction.
fn rank_mod(q: i64, mut m: Vec<Vec<i64>>) -> usize {
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(piv) = (rank..m.len()).find(|&r| m[r][c].rem_euclid(q) != 0) else {
            continue;
        };
        m.swap(rank, piv);
        let inv = (1..q).find(|&x| (m[rank][c].rem_euclid(q) * x) % q == 1).unwrap();
        for x in m[rank].iter_mut() {
            *x = (*x * inv).rem_euclid(q);
        }
        for r in 0..m.len() {
            if r != rank && m[r][c].rem_euclid(q) != 0 {
                let f = m[r][c].rem_euclid(q);
                let row = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(row) {
                    *x = (*x - f * y).rem_euclid(q);
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Relative Betti numbers b_0..b_top of (K, L) over F_q from dense boundary
/// matrices. Every simplex is found by brute force over vertex subsets.
pub fn dense_betti(k: &SimplicialComplex, l: &SimplicialComplex, q: u32) -> Vec<usize> {
    let q = q as i64;
    let Some(top) = k.dim() else {
        return Vec::new();
    };
    let cells: Vec<Vec<Vec<usize>>> = (0..=top)
        .map(|d| k.iter().filter(|s| s.len() == d + 1 && !l.contains(s)).cloned().collect())
        .collect();
    // rank of ∂_d : C_d → C_{d−1}
    let mut ranks = vec![0usize; top + 2];
    for d in 1..=top {
        let m: Vec<Vec<i64>> = cells[d - 1]
            .iter()
            .map(|row| {
                cells[d]
                    .iter()
                    .map(|col| {
                        (0..col.len())
                            .find(|&i| {
                                let mut f = col.clone();
                                f.remove(i);
                                f == *row
                            })
                            .map_or(0, |i| if i % 2 == 0 { 1 } else { -1 })
                    })
                    .collect()
            })
            .collect();
        ranks[d] = rank_mod(q, m);
    }
    (0..=top).map(|d| cells[d].len() - ranks[d] - ranks[d + 1]).collect()
}
