mod common;

use coarsesmith::homology::FieldSpec;
use coarsesmith::smith::{smith_bundle, GChains};
use common::{dense_betti, random_cases};

const DENSE_LIMIT: usize = 400;

#[test]
fn smith_sequences_on_random_cyclic_complexes() {
    let cases = random_cases(0x5317, 200, 40);
    let mut by_prime = [0usize; 6];
    let mut dense_checked = 0;
    for (i, c) in cases.iter().enumerate() {
        assert!(c.raw_simplices <= 40);
        assert!(c.gc.check_regularity().regular(), "case {i} not regular");
        let g = GChains::new(&c.gc, &c.l, FieldSpec::new(c.p).unwrap()).unwrap();
        let b = smith_bundle(&g).unwrap();
        for t in &b.triangles {
            assert!(t.exact(), "case {i}: triangle for {:?} not exact: {t:?}", t.operator);
        }
        // the pair and fixed-set homology against the dense oracle
        if c.gc.complex.num_simplices() <= DENSE_LIMIT {
            let t = &b.triangles[0];
            let want: Vec<usize> = dense_betti(&c.gc.complex, &c.l, c.p);
            let got: Vec<usize> = (0..want.len()).map(|d| t.h_pair.get(&d).copied().unwrap_or(0)).collect();
            assert_eq!(got, want, "case {i}: pair homology");
            let kg = c.gc.fixed_subcomplex();
            let lg = c.l.filter(|s| kg.contains(s));
            let want: Vec<usize> = dense_betti(&kg, &lg, c.p);
            let got: Vec<usize> = (0..want.len()).map(|d| t.h_fixed.get(&d).copied().unwrap_or(0)).collect();
            assert_eq!(got, want, "case {i}: fixed homology");
            dense_checked += 1;
        }
        for (op, rows) in &b.inequalities {
            assert!(rows.iter().all(|r| r.holds), "case {i}: inequality for {op}");
        }
        assert!(b.orbit_iso.equal, "case {i}: orbit iso");
        assert!(b.second_sequence.iter().all(|r| r.holds), "case {i}: second sequence");
        by_prime[c.p as usize] += 1;
    }
    // every prime is exercised
    assert!(by_prime[2] > 0 && by_prime[3] > 0 && by_prime[5] > 0);
    assert!(dense_checked >= 20, "only {dense_checked} cases small enough for the oracle");
}
