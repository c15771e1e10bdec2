//! Acceptance run: one PASS/FAIL line per criterion. Expected values are
//! derived here from the geometry of each model, not read back from the
//! library.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use coarsesmith::complexes::{regularize, GComplex, SimplicialComplex};
use coarsesmith::fixed_sets::{centralizer_subspace, Verdict};
use coarsesmith::group::GroupSpec;
use coarsesmith::homology::{chain_complex, homology_ranks, FieldSpec};
use coarsesmith::limits::Certificate;
use coarsesmith::models::{cayley_ball, SwapSemidirect};
use coarsesmith::scenario::{builtin, run_scenario, Report, BUILTINS};
use coarsesmith::smith::{smith_bundle, transfer_maps, GChains, SmithBundle};
use common::{dense_betti, random_cases, random_pair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($arg:tt)+) => {
        if !$cond {
            return Err(format!($($arg)+));
        }
    };
}

/// Builtin reports, each run once.
struct Runs {
    reports: BTreeMap<&'static str, (Report, Duration)>,
}

impl Runs {
    fn new() -> Self {
        let mut reports = BTreeMap::new();
        for name in BUILTINS {
            let spec = builtin(name).unwrap();
            let t = Instant::now();
            let r = run_scenario(&spec).unwrap_or_else(|e| panic!("{name}: {e}"));
            reports.insert(name, (r, t.elapsed()));
        }
        Self { reports }
    }

    fn get(&self, name: &str) -> &Report {
        &self.reports[name].0
    }

    /// Every Smith bundle attached to a builtin level.
    fn level_bundles(&self) -> Vec<(String, &SmithBundle)> {
        let mut out = Vec::new();
        for (name, (r, _)) in &self.reports {
            for (n, lv) in r.levels.iter().enumerate() {
                if let Some(b) = &lv.smith {
                    out.push((format!("{name} level {n}"), b));
                }
                for s in &lv.subgroup_smith {
                    out.push((format!("{name} level {n} subgroup {:?}", s.subgroup), &s.bundle));
                }
            }
        }
        out
    }
}

fn table(pairs: &[(usize, usize)]) -> BTreeMap<usize, usize> {
    pairs.iter().copied().collect()
}

/// χ of a coarse homology m-sphere: one class in degree m.
fn sphere_chi(m: usize) -> i64 {
    if m % 2 == 0 {
        1
    } else {
        -1
    }
}

fn euclidean_tables() -> Outcome {
    let mut notes = Vec::new();
    for (n, name) in [(1, "euclidean_line"), (2, "euclidean_plane"), (3, "euclidean_space3")] {
        let mut tables = Vec::new();
        for window in [8, 16] {
            let mut spec = builtin(name).unwrap();
            spec.set_window(window);
            let t = Instant::now();
            let r = run_scenario(&spec).map_err(|e| format!("{name} at {window}: {e}"))?;
            let dt = t.elapsed();
            let h = r.homology.ok_or(format!("{name}: no homology"))?;
            ensure!(h.space.certificate == Certificate::StableWindow, "{name} at {window}: not stable");
            ensure!(h.space.ranks == table(&[(n, 1)]), "{name} at {window}: {:?}", h.space.ranks);
            ensure!(dt < Duration::from_secs(60), "{name} at {window} took {dt:?}");
            tables.push(h.space.ranks);
            notes.push(format!("n={n} N={window} {:.1}s", dt.as_secs_f64()));
        }
        ensure!(tables[0] == tables[1], "{name}: tables differ between windows");
    }
    Ok(notes.join(", "))
}

fn goalposts_do_not_stabilize() -> Outcome {
    let t = Instant::now();
    let r = run_scenario(&builtin("goalposts").unwrap()).map_err(|e| e.to_string())?;
    let dt = t.elapsed();
    let scan = r.fixed_sets.ok_or("no fixed-set scan")?.scan;
    let want: Vec<f64> = (1..=12).map(f64::from).collect();
    ensure!(scan.scales == want, "scales {:?}", scan.scales);
    ensure!(scan.verdict == Verdict::NotStableInWindow, "verdict {:?}", scan.verdict);
    // density of X_{k₁} in X_{k_j}: never shrinks and ends far above its start
    let row: Vec<f64> = scan.density_matrix[0][1..]
        .iter()
        .map(|d| d.ok_or("missing density"))
        .collect::<Result<_, _>>()?;
    ensure!(row.windows(2).all(|w| w[1] >= w[0]), "densities shrink: {row:?}");
    ensure!(row.last() > row.first(), "densities do not grow: {row:?}");
    ensure!(r.outcome.exit_code == 3, "exit code {}", r.outcome.exit_code);
    ensure!(dt < Duration::from_secs(30), "took {dt:?}");
    Ok(format!("density {:.2} → {:.2}, {:.1}s", row[0], row[row.len() - 1], dt.as_secs_f64()))
}

fn random_bundles() -> Vec<(u32, SmithBundle, usize)> {
    random_cases(0xACCE, 200, 40)
        .iter()
        .map(|c| {
            assert!(c.raw_simplices <= 40);
            let g = GChains::new(&c.gc, &c.l, FieldSpec::new(c.p).unwrap()).unwrap();
            (c.p, smith_bundle(&g).unwrap(), c.gc.complex.num_simplices())
        })
        .collect()
}

fn triangles_exact(random: &[(u32, SmithBundle, usize)], runs: &Runs, elapsed: Duration) -> Outcome {
    let mut nodes = 0;
    let mut primes = [0usize; 6];
    for (i, (p, b, _)) in random.iter().enumerate() {
        primes[*p as usize] += 1;
        for t in &b.triangles {
            ensure!(t.exact(), "random case {i}: {:?} triangle not exact", t.operator);
            nodes += 1;
        }
    }
    ensure!(primes[2] > 0 && primes[3] > 0 && primes[5] > 0, "primes exercised {primes:?}");
    let levels = runs.level_bundles();
    ensure!(levels.len() >= 8, "only {} builtin level bundles", levels.len());
    for (at, b) in &levels {
        for t in &b.triangles {
            ensure!(t.exact(), "{at}: {:?} triangle not exact", t.operator);
            nodes += 1;
        }
    }
    ensure!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    Ok(format!(
        "{nodes} triangles over 200 random complexes and {} builtin levels, {:.1}s",
        levels.len(),
        elapsed.as_secs_f64()
    ))
}

fn inequalities_hold(random: &[(u32, SmithBundle, usize)], runs: &Runs) -> Outcome {
    let mut rows = 0;
    let mut check = |at: &str, b: &SmithBundle| -> Result<(), String> {
        ensure!(!b.inequalities.is_empty(), "{at}: no inequalities");
        for (op, rs) in &b.inequalities {
            for r in rs {
                ensure!(r.holds, "{at}: {op} fails at n={}", r.n);
                ensure!(r.margin == r.rhs as i64 - r.lhs as i64, "{at}: margin mismatch");
                rows += 1;
            }
        }
        Ok(())
    };
    for (i, (_, b, _)) in random.iter().enumerate() {
        check(&format!("random case {i}"), b)?;
    }
    for (at, b) in runs.level_bundles() {
        check(&at, b)?;
    }
    let mut coarse = 0;
    for name in ["reflection_plane", "rotation_plane", "semidirect_swap"] {
        let cs = runs.get(name).coarse_smith.as_ref().ok_or(format!("{name}: no coarse section"))?;
        ensure!(!cs.inequalities.is_empty(), "{name}: no coarse inequalities");
        for (op, rs) in &cs.inequalities {
            for r in rs {
                ensure!(r.holds, "{name}: coarse {op} fails at n={}", r.n);
                coarse += 1;
            }
        }
    }
    Ok(format!("{rows} level rows, {coarse} coarse rows"))
}

fn euler_identity(runs: &Runs) -> Outcome {
    // (scenario, p, dim X, dim of the fixed set, χ of the quotient):
    // a reflection folds the plane onto a half-plane (χ = 0); a rotation
    // of order 3 leaves a cone, coarsely a plane (χ = 1)
    let cases = [
        ("reflection_plane", 2u32, 2usize, 1usize, 0i64),
        ("rotation_plane", 3, 2, 0, 1),
        ("semidirect_swap", 2, 2, 1, 0),
    ];
    let mut notes = Vec::new();
    for (name, p, m, r, chi_q) in cases {
        let e = runs
            .get(name)
            .coarse_smith
            .as_ref()
            .and_then(|c| c.euler.clone())
            .ok_or(format!("{name}: no Euler report"))?;
        let (chi_x, chi_f) = (sphere_chi(m), sphere_chi(r));
        ensure!(e.p == p, "{name}: p = {}", e.p);
        ensure!(
            (e.chi_space, e.chi_fixed, e.chi_quotient) == (chi_x, chi_f, chi_q),
            "{name}: χ = ({}, {}, {}), expected ({chi_x}, {chi_f}, {chi_q})",
            e.chi_space,
            e.chi_fixed,
            e.chi_quotient
        );
        let residual = chi_x + (p as i64 - 1) * chi_f - p as i64 * chi_q;
        ensure!(residual == 0 && e.residual == 0, "{name}: residual {} / {residual}", e.residual);
        notes.push(format!("{name} χ=({chi_x},{chi_f},{chi_q})"));
    }
    Ok(notes.join(", "))
}

/// The 9-cycle with ℤ/3 rotating by three steps: free, quotient a
/// triangle.
fn free_circle() -> (GComplex, SimplicialComplex) {
    let n = 9;
    let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![i, (i + 1) % n]).collect();
    let k = SimplicialComplex::from_generators(n, edges, None).unwrap();
    let vperm = (0..3).map(|g| (0..n).map(|v| (v + 3 * g) % n).collect()).collect();
    let reg = regularize(&GComplex::new(k, GroupSpec::cyclic(3), vperm).unwrap());
    let l = SimplicialComplex::empty(reg.complex.complex.num_vertices());
    (reg.complex, l)
}

fn transfer_identities(runs: &Runs) -> Outcome {
    let (gc, l) = free_circle();
    let t = transfer_maps(&GChains::new(&gc, &l, FieldSpec::new(5).unwrap()).unwrap()).unwrap();
    let circle = table(&[(0, 1), (1, 1)]);
    ensure!(t.h_pair == circle && t.h_quotient == circle, "circle homology {:?} / {:?}", t.h_pair, t.h_quotient);
    // the covering map has degree 3, a unit in F₅
    ensure!(t.rank_pi == circle, "rank π_* {:?}", t.rank_pi);
    ensure!(t.pi_mu_residual == 0 && t.mu_pi_residual == 0, "free circle residuals");
    ensure!(t.invariant_iso == Some(true), "free circle: invariant iso {:?}", t.invariant_iso);
    let mut levels = 0;
    for name in ["reflection_plane", "semidirect_swap"] {
        let r = runs.get(name);
        ensure!(r.group_order == 2, "{name}: order {}", r.group_order);
        for (n, lv) in r.levels.iter().enumerate() {
            let t = lv.transfer.as_ref().ok_or(format!("{name} level {n}: no transfer"))?;
            ensure!(t.field == 3, "{name} level {n}: field {}", t.field);
            ensure!(t.pi_mu_residual == 0 && t.mu_pi_residual == 0, "{name} level {n}: residuals");
            ensure!(t.invariant_iso == Some(true), "{name} level {n}: invariant iso {:?}", t.invariant_iso);
            levels += 1;
        }
    }
    Ok(format!("free ℤ/3 circle over F5 and {levels} ℤ/2 levels over F3"))
}

fn sandwich_agreement(runs: &Runs) -> Outcome {
    // the bounded fixed set of each model: an axis, the origin, the
    // origin, the diagonal line
    let expected = [
        ("reflection_plane", table(&[(1, 1)])),
        ("rotation_plane", table(&[(0, 1)])),
        ("klein", table(&[(0, 1)])),
        ("semidirect_swap", table(&[(1, 1)])),
    ];
    let mut checked = Vec::new();
    for (name, (r, _)) in &runs.reports {
        let spec = builtin(name).unwrap();
        let stable = r.fixed_sets.as_ref().is_some_and(|f| matches!(f.scan.verdict, Verdict::Stable { .. }));
        if !stable || !spec.tasks.homology {
            continue;
        }
        let b = r.bounded_fixed.as_ref().ok_or(format!("{name}: no bounded fixed section"))?;
        ensure!(b.rho_check == Some(true), "{name}: rho_check {:?}", b.rho_check);
        let tower = b.tower.as_ref().ok_or(format!("{name}: no tower paths"))?;
        let t = tower.table().ok_or(format!("{name}: not stabilized"))?;
        ensure!(tower.restricted.ranks == *t && tower.fixed_r.ranks == *t && tower.fixed.ranks == *t, "{name}: paths differ");
        let want = &expected.iter().find(|(n, _)| n == name).ok_or(format!("{name}: no expectation"))?.1;
        ensure!(t == want, "{name}: {t:?}, expected {want:?}");
        if let Some(a) = &r.theorem_a {
            ensure!(a.stages.iter().all(|s| s.rho_check), "{name}: a stage fails rho_check");
        }
        checked.push(*name);
    }
    ensure!(checked.len() == expected.len(), "checked only {checked:?}");
    Ok(checked.join(", "))
}

fn sphere_dimensions(runs: &Runs) -> Outcome {
    let refl = runs.get("reflection_plane").theorem_a.as_ref().ok_or("reflection: no report")?;
    ensure!(refl.p == 2 && refl.m == 2 && refl.r == 1 && refl.passed, "reflection: p={} m={} r={}", refl.p, refl.m, refl.r);
    let rot = runs.get("rotation_plane").theorem_a.as_ref().ok_or("rotation: no report")?;
    ensure!(rot.p == 3 && rot.m == 2 && rot.r == 0 && rot.passed, "rotation: p={} m={} r={}", rot.p, rot.m, rot.r);
    ensure!((rot.m - rot.r) % 2 == 0 && rot.parity_even, "rotation: m − r odd");
    Ok(format!("reflection r={}, rotation r={} with m−r={}", refl.r, rot.r, rot.m - rot.r))
}

fn sparse_matches_dense(random: &[(u32, SmithBundle, usize)]) -> Outcome {
    let mut checked = 0;
    let mut compare = |k: &SimplicialComplex, l: &SimplicialComplex, q: u32| -> Result<(), String> {
        if k.num_simplices() > 12 {
            return Ok(());
        }
        let c = chain_complex(k, l, FieldSpec::new(q).unwrap()).map_err(|e| e.to_string())?;
        let h = homology_ranks(&c.chains);
        let dense = dense_betti(k, l, q);
        for (d, &b) in dense.iter().enumerate() {
            ensure!(h.rank(d) == b, "degree {d}: sparse {} dense {b}", h.rank(d));
        }
        checked += 1;
        Ok(())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0xD15E);
    for i in 0..600 {
        let (k, l) = random_pair(&mut rng, 2 + i % 5, 12);
        compare(&k, &l, [2, 3, 5][i % 3])?;
    }
    for c in random_cases(0xACCE, 200, 40) {
        let empty = SimplicialComplex::empty(c.gc.complex.num_vertices());
        compare(&c.gc.complex, &c.l, c.p)?;
        compare(&c.gc.complex, &empty, c.p)?;
        let fixed = c.gc.fixed_subcomplex();
        compare(&fixed, &c.l.filter(|s| fixed.contains(s)), c.p)?;
    }
    ensure!(random.len() == 200, "random cases");
    ensure!(checked >= 600, "only {checked} small complexes");
    Ok(format!("{checked} complexes with at most 12 simplices"))
}

/// Word length in ℤ²⋊ℤ/2 from the normal form (v, ε): the swap never
/// changes |v|₁, and ε costs one letter.
fn word_length(x: (i64, i64, u8)) -> f64 {
    (x.0.abs() + x.1.abs() + i64::from(x.2)) as f64
}

/// d(x, y) = |x⁻¹y| = |v − u|₁ + [ε ≠ δ].
fn word_dist(x: (i64, i64, u8), y: (i64, i64, u8)) -> f64 {
    ((y.0 - x.0).abs() + (y.1 - x.1).abs() + i64::from(x.2 != y.2)) as f64
}

fn centralizer_constant() -> Outcome {
    let g = SwapSemidirect;
    let scales: Vec<f64> = (1..=5).map(f64::from).collect();
    let mut constants = Vec::new();
    for radius in [8u32, 16] {
        let w = cayley_ball(&g, &g.standard_generators(), radius, 2.0, &[g.swap()]).map_err(|e| e.to_string())?;
        let el = &w.elements;
        ensure!(el.iter().all(|&x| x.0.abs() + x.1.abs() <= radius as i64), "radius {radius}: element outside");
        ensure!(el.len() == 2 * (2 * radius as usize * (radius as usize + 1) + 1), "radius {radius}: {} elements", el.len());
        for (i, &x) in el.iter().enumerate() {
            ensure!(f64::from(w.word_length[i]) == word_length(x), "radius {radius}: |{x:?}|");
            for (j, &y) in el.iter().enumerate() {
                ensure!(w.ws.space.dist(i, j) == word_dist(x, y), "radius {radius}: d({x:?}, {y:?})");
            }
        }
        let c = centralizer_subspace(&g, &w, &scales).map_err(|e| e.to_string())?;
        // the swap s acts on the left: s(v, ε) = (σv, 1 − ε), so the
        // displacement of (a, b, ε) is 2|a − b| + 1; the centralizer is the
        // diagonal a = b
        let cent: Vec<(i64, i64, u8)> = el.iter().copied().filter(|x| x.0 == x.1).collect();
        let found: Vec<(i64, i64, u8)> = c.centralizer.iter().map(|&i| el[i]).collect();
        ensure!(found == cent, "radius {radius}: centralizer differs");
        for (k, &got) in scales.iter().zip(&c.densities) {
            let want = el
                .iter()
                .filter(|x| (2 * (x.0 - x.1).abs() + 1) as f64 <= *k)
                .map(|&x| cent.iter().map(|&z| word_dist(x, z)).fold(f64::INFINITY, f64::min))
                .fold(0.0, f64::max);
            ensure!(got == want, "radius {radius}, k={k}: density {got}, expected {want}");
        }
        ensure!(c.certified, "radius {radius}: constant {} above cap", c.constant);
        constants.push(c.constant);
    }
    ensure!(constants[0] == constants[1], "constants differ: {constants:?}");
    Ok(format!("c = {} at radius 8 and 16", constants[0]))
}

fn run(label: &str, f: impl FnOnce() -> Outcome) -> bool {
    let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match out {
        Ok(note) => {
            println!("PASS {label}: {note}");
            true
        }
        Err(why) => {
            println!("FAIL {label}: {why}");
            false
        }
    }
}

fn main() -> ExitCode {
    let runs = Runs::new();
    let t = Instant::now();
    let random = random_bundles();
    let random_time = t.elapsed() + runs.reports.values().map(|(_, d)| *d).sum::<Duration>();
    let results = [
        run(" 1 Euclidean windows have HC = {n:1}", euclidean_tables),
        run(" 2 goalposts fixed sets do not stabilize", goalposts_do_not_stabilize),
        run(" 3 Smith triangles are exact", || triangles_exact(&random, &runs, random_time)),
        run(" 4 Smith inequalities hold", || inequalities_hold(&random, &runs)),
        run(" 5 Euler identity has residual 0", || euler_identity(&runs)),
        run(" 6 transfer identities are exact", || transfer_identities(&runs)),
        run(" 7 three fixed-set paths agree", || sandwich_agreement(&runs)),
        run(" 8 fixed sets are spheres of the right dimension", || sphere_dimensions(&runs)),
        run(" 9 sparse ranks match dense elimination", || sparse_matches_dense(&random)),
        run("10 centralizer constant is window independent", centralizer_constant),
    ];
    let passed = results.iter().filter(|&&r| r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
