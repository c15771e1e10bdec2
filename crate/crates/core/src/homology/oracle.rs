//! Dense brute-force homology, kept deliberately naive so it shares no code
//! with the sparse reduction. Used to cross-check small complexes.

use crate::complexes::SimplicialComplex;

/// Rank of a dense matrix over F_q by plain Gaussian elimination.
pub fn dense_rank(q: u64, mut m: Vec<Vec<u64>>) -> usize {
    let rows = m.len();
    if rows == 0 {
        return 0;
    }
    let cols = m[0].len();
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..rows).find(|&r| m[r][c] % q != 0) else {
            continue;
        };
        m.swap(rank, p);
        let inv = modpow(m[rank][c], q - 2, q);
        for x in m[rank].iter_mut() {
            *x = *x * inv % q;
        }
        for r in 0..rows {
            if r != rank && m[r][c] != 0 {
                let f = m[r][c];
                for j in 0..cols {
                    let sub = f * m[rank][j] % q;
                    m[r][j] = (m[r][j] + q - sub) % q;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn modpow(mut b: u64, mut e: u64, q: u64) -> u64 {
    let mut acc = 1;
    b %= q;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % q;
        }
        b = b * b % q;
        e >>= 1;
    }
    acc
}

/// Relative homology ranks of (K, L) over F_q by assembling every boundary
/// operator densely. Degrees run over the stored dimensions of K.
pub fn dense_relative_ranks(k: &SimplicialComplex, l: &SimplicialComplex, q: u32) -> Vec<usize> {
    let q = q as u64;
    let top = match k.dim() {
        Some(t) => t,
        None => return Vec::new(),
    };
    let basis: Vec<Vec<Vec<usize>>> = (0..=top)
        .map(|d| k.simplices(d).iter().filter(|s| !l.contains(s)).cloned().collect())
        .collect();
    // rank of ∂_d : C_d → C_{d-1}
    let mut bd_rank = vec![0usize; top + 2];
    for d in 1..=top {
        let rows = basis[d - 1].len();
        if rows == 0 || basis[d].is_empty() {
            continue;
        }
        let mut m = vec![vec![0u64; basis[d].len()]; rows];
        for (j, s) in basis[d].iter().enumerate() {
            for i in 0..s.len() {
                let mut face = s.clone();
                face.remove(i);
                if let Some(r) = basis[d - 1].iter().position(|t| *t == face) {
                    m[r][j] = if i % 2 == 0 { 1 } else { q - 1 };
                }
            }
        }
        bd_rank[d] = dense_rank(q, m);
    }
    (0..=top)
        .map(|d| basis[d].len() - bd_rank[d] - bd_rank[d + 1])
        .collect()
}
