//! Direct systems over coarsening levels and their within-window limits.
//!
//! A [`Tower`] holds, per level, the nerve of the covering (regularized when
//! a group acts) together with the frontier sub-nerve, and the vertex maps
//! induced by the refinement projections. Selectors carve a pair of
//! complexes out of each level; homology of the pairs and the induced maps
//! form a [`DirectSystem`], and [`stabilized_ranks`] looks for the level from
//! which every map is an isomorphism.

use std::collections::BTreeMap;

use rustc_hash::FxHashMap;
use serde::Serialize;
use thiserror::Error;

use crate::action::IsometricAction;
use crate::complexes::{
    barycentric_subdivision, equivariant_nerve, nerve, quotient_complex, restrict_nerve, ComplexError, GComplex,
    Regularized, Simplex, SimplicialComplex,
};
use crate::coverings::CoarseningSystem;
use crate::fixed_sets::{fixed_set, stabilization_scan, FixedSetError, StabilizationReport, Verdict};
use crate::homology::{chain_complex, chain_map, FieldSpec, HomologyBasis, HomologyError, HomologyRanks, InducedMap};
use crate::metric::WindowedSpace;

#[derive(Debug, Error)]
pub enum LimitError {
    #[error("a limit needs at least two levels, got {0}")]
    InsufficientLevels(usize),
    #[error("bounded fixed set absent: {0}")]
    BoundedFixedSetAbsent(String),
    #[error("rank table has not stabilized in the window")]
    NotStabilized,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("level complexes are not regular after subdivision: {0}")]
    NotRegular(String),
    #[error("action is required for selector {0}")]
    MissingAction(&'static str),
    #[error(transparent)]
    Complex(#[from] ComplexError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    FixedSet(#[from] FixedSetError),
}

/// One level of a tower.
#[derive(Debug, Clone)]
pub struct Level {
    /// K(𝒰ₙ), possibly truncated.
    pub nerve: SimplicialComplex,
    /// K(𝒰ₙ | Fr).
    pub frontier: SimplicialComplex,
    /// The nerve as a G-complex, subdivided twice when the group is
    /// nontrivial so that every level has the same subdivision depth.
    pub reg: Regularized,
}

impl Level {
    pub fn complex(&self) -> &GComplex {
        &self.reg.complex
    }

    /// The frontier sub-nerve inside the regularized complex.
    pub fn frontier_lift(&self) -> SimplicialComplex {
        self.reg.lift(&self.frontier)
    }
}

#[derive(Debug, Clone)]
pub struct Tower {
    pub ws: WindowedSpace,
    pub action: IsometricAction,
    pub system: CoarseningSystem,
    pub levels: Vec<Level>,
    /// Vertex maps of the nerves, level n → n+1 (the projections).
    pub nerve_maps: Vec<Vec<usize>>,
    /// The same maps carried through the subdivisions.
    pub maps: Vec<Vec<usize>>,
    pub max_dim: Option<usize>,
}

fn subdivide_uniformly(gc: GComplex, steps: usize) -> Result<Regularized, LimitError> {
    let original = gc.check_regularity();
    let mut cur = gc;
    let mut subs = Vec::with_capacity(steps);
    for _ in 0..steps {
        let s = barycentric_subdivision(&cur);
        cur = s.result.clone();
        subs.push(s);
    }
    let rep = cur.check_regularity();
    if !rep.regular() {
        return Err(LimitError::NotRegular(rep.witness.unwrap_or_default()));
    }
    Ok(Regularized {
        complex: cur,
        steps: subs,
        original,
    })
}

/// Carry a vertex map K → K' through one barycentric subdivision on each
/// side: the barycenter of s goes to the barycenter of f(s).
fn subdivide_map(
    map: &[usize],
    src_meaning: &[Simplex],
    dst_meaning: &[Simplex],
) -> Vec<usize> {
    let id: FxHashMap<&[usize], usize> = dst_meaning.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    src_meaning
        .iter()
        .map(|s| id[SimplicialComplex::image(s, map).as_slice()])
        .collect()
}

impl Tower {
    /// Nerves of every level, their frontier sub-nerves and the level maps.
    /// With a nontrivial action the nerves are equivariant and subdivided
    /// twice.
    pub fn build(
        ws: &WindowedSpace,
        action: Option<&IsometricAction>,
        system: CoarseningSystem,
        max_dim: Option<usize>,
    ) -> Result<Self, LimitError> {
        let n = ws.len();
        let nontrivial = action.is_some_and(|a| a.order() > 1);
        let mut levels = Vec::with_capacity(system.levels.len());
        for c in &system.levels {
            let gc = match action {
                Some(a) if nontrivial => equivariant_nerve(c, a, n, max_dim)?,
                _ => GComplex::trivial(nerve(c, n, max_dim)),
            };
            let frontier = restrict_nerve(c, &ws.frontier, n, max_dim);
            let nerve = gc.complex.clone();
            let reg = subdivide_uniformly(gc, if nontrivial { 2 } else { 0 })?;
            levels.push(Level { nerve, frontier, reg });
        }
        let nerve_maps: Vec<Vec<usize>> = system.projections.iter().map(|p| p.map.clone()).collect();
        let maps = nerve_maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let (a, b) = (&levels[i].reg.steps, &levels[i + 1].reg.steps);
                a.iter()
                    .zip(b)
                    .fold(m.clone(), |f, (sa, sb)| subdivide_map(&f, &sa.meaning, &sb.meaning))
            })
            .collect();
        Ok(Self {
            ws: ws.clone(),
            action: action.cloned().unwrap_or_else(|| IsometricAction::trivial(n)),
            system,
            levels,
            nerve_maps,
            maps,
            max_dim,
        })
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

/// Which pair of complexes to take at each level. Radii are per level so
/// the double limit can advance r together with n.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Selector {
    /// (K, K(𝒰|Fr)) on the regularized nerve.
    Full,
    /// Fixed subcomplex of the regularized nerve for a subgroup, rel the
    /// frontier.
    FixedG { subgroup: Vec<usize> },
    /// K^H ∩ K(𝒰|X^H_r) rel K^H ∩ K(𝒰|X^H_r ∩ Fr).
    FixedGr { subgroup: Vec<usize>, radii: Vec<f64> },
    /// K(𝒰|X^H_r) rel K(𝒰|X^H_r ∩ Fr) on the plain nerve.
    Restricted { subgroup: Vec<usize>, radii: Vec<f64> },
    /// K/G rel Fr/G.
    Quotient,
    /// K/G rel (K^G ∪ Fr)/G.
    QuotientFixed,
}

impl Selector {
    pub fn name(&self) -> &'static str {
        match self {
            Selector::Full => "full",
            Selector::FixedG { .. } => "fixed",
            Selector::FixedGr { .. } => "fixed_r",
            Selector::Restricted { .. } => "restricted",
            Selector::Quotient => "quotient",
            Selector::QuotientFixed => "quotient_fixed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirectSystem {
    pub selector: Selector,
    pub levels: Vec<HomologyRanks>,
    pub maps: Vec<InducedMap>,
    /// Simplex counts of the selected complex per level.
    pub sizes: Vec<usize>,
}

/// A pair (M, L) at one level, with the ambient vertex numbering used by
/// the level maps.
struct Pair {
    m: SimplicialComplex,
    l: SimplicialComplex,
}

fn intersect(a: &SimplicialComplex, b: &SimplicialComplex) -> SimplicialComplex {
    a.filter(|s| b.contains(s))
}

fn radius_at(radii: &[f64], n: usize) -> f64 {
    radii[n.min(radii.len() - 1)]
}

fn fixed_points_inside_frontier(ws: &WindowedSpace, pts: &[usize]) -> Vec<usize> {
    pts.iter().copied().filter(|x| ws.frontier.binary_search(x).is_ok()).collect()
}

fn pair_at(t: &Tower, sel: &Selector, n: usize) -> Result<(Pair, Option<Vec<usize>>), LimitError> {
    let lv = &t.levels[n];
    let np = t.ws.len();
    let cov = &t.system.levels[n];
    let k = &lv.complex().complex;
    Ok(match sel {
        Selector::Full => (
            Pair {
                m: k.clone(),
                l: lv.frontier_lift(),
            },
            None,
        ),
        Selector::FixedG { subgroup } => {
            let fixed = lv.complex().restrict_group(subgroup).fixed_subcomplex();
            let l = intersect(&fixed, &lv.frontier_lift());
            (Pair { m: fixed, l }, None)
        }
        Selector::FixedGr { subgroup, radii } => {
            let a = t.action.restrict(subgroup);
            let pts = fixed_set(&t.ws, &a, radius_at(radii, n));
            let fr = fixed_points_inside_frontier(&t.ws, &pts);
            let fixed = lv.complex().restrict_group(subgroup).fixed_subcomplex();
            let m = intersect(&fixed, &lv.reg.lift(&restrict_nerve(cov, &pts, np, t.max_dim)));
            let l = intersect(&m, &lv.reg.lift(&restrict_nerve(cov, &fr, np, t.max_dim)));
            (Pair { m, l }, None)
        }
        Selector::Restricted { subgroup, radii } => {
            let a = t.action.restrict(subgroup);
            let pts = fixed_set(&t.ws, &a, radius_at(radii, n));
            let fr = fixed_points_inside_frontier(&t.ws, &pts);
            let m = restrict_nerve(cov, &pts, np, t.max_dim);
            let l = restrict_nerve(cov, &fr, np, t.max_dim);
            (Pair { m, l }, None)
        }
        Selector::Quotient | Selector::QuotientFixed => {
            let q = quotient_complex(lv.complex())?;
            let mut sub = lv.frontier_lift();
            if *sel == Selector::QuotientFixed {
                sub = sub.union(&lv.complex().fixed_subcomplex());
            }
            let l = q.project(&sub);
            (Pair { m: q.complex, l }, Some(q.proj))
        }
    })
}

/// Homology of the selected pair at every level and the maps between
/// consecutive levels.
pub fn direct_system(t: &Tower, sel: &Selector, field: FieldSpec) -> Result<DirectSystem, LimitError> {
    let mut pairs = Vec::with_capacity(t.len());
    for n in 0..t.len() {
        pairs.push(pair_at(t, sel, n)?);
    }
    let mut chains = Vec::with_capacity(pairs.len());
    let mut bases = Vec::with_capacity(pairs.len());
    for (p, _) in &pairs {
        let c = chain_complex(&p.m, &p.l, field)?;
        bases.push(HomologyBasis::compute(&c.chains));
        chains.push(c);
    }
    let plain = matches!(sel, Selector::Restricted { .. });
    let mut maps = Vec::with_capacity(pairs.len().saturating_sub(1));
    for n in 0..pairs.len().saturating_sub(1) {
        let base = if plain { &t.nerve_maps[n] } else { &t.maps[n] };
        let vmap: Vec<usize> = match (&pairs[n].1, &pairs[n + 1].1) {
            (Some(q0), Some(q1)) => {
                // orbit of v ↦ orbit of f(v), well defined by equivariance
                let mut m = vec![0; pairs[n].0.m.num_vertices()];
                for (v, &o) in q0.iter().enumerate() {
                    m[o] = q1[base[v]];
                }
                m
            }
            _ => base.clone(),
        };
        let cols = chain_map(&pairs[n].0.m, &chains[n], &pairs[n + 1].0.m, &chains[n + 1], &vmap)?;
        maps.push(InducedMap::new(&bases[n], &bases[n + 1], &cols)?);
    }
    Ok(DirectSystem {
        selector: sel.clone(),
        levels: bases.iter().map(HomologyBasis::ranks).collect(),
        maps,
        sizes: pairs.iter().map(|(p, _)| p.m.num_simplices()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Certificate {
    StableWindow,
    NotStabilized,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseHomologyEstimate {
    pub field: u32,
    /// Nonzero ranks of the last level.
    pub ranks: BTreeMap<usize, usize>,
    pub truncated_above: Option<usize>,
    pub stable_from: Option<usize>,
    pub certificate: Certificate,
    pub per_level: Vec<BTreeMap<usize, usize>>,
    /// Rank of each level map per degree.
    pub map_ranks: Vec<BTreeMap<usize, usize>>,
}

impl CoarseHomologyEstimate {
    pub fn is_stable(&self) -> bool {
        self.certificate == Certificate::StableWindow
    }
}

/// The first level from which every map is an isomorphism in every
/// computed degree.
pub fn stabilized_ranks(ds: &DirectSystem) -> Result<CoarseHomologyEstimate, LimitError> {
    if ds.levels.len() < 2 {
        return Err(LimitError::InsufficientLevels(ds.levels.len()));
    }
    let mut stable_from = ds.maps.len();
    while stable_from > 0 && ds.maps[stable_from - 1].is_iso_everywhere() {
        stable_from -= 1;
    }
    let last = ds.levels.last().expect("at least two levels");
    let stable = stable_from < ds.maps.len();
    Ok(CoarseHomologyEstimate {
        field: last.field,
        ranks: last.table(),
        truncated_above: last.truncated_above,
        stable_from: stable.then_some(stable_from),
        certificate: if stable {
            Certificate::StableWindow
        } else {
            Certificate::NotStabilized
        },
        per_level: ds.levels.iter().map(HomologyRanks::table).collect(),
        map_ranks: ds.maps.iter().map(InducedMap::rank_table).collect(),
    })
}

/// The three routes to HC(X^H_bd) and whether they agree.
#[derive(Debug, Clone, Serialize)]
pub struct BoundedFixedHomology {
    pub subgroup: Vec<usize>,
    pub k0: f64,
    /// Fixed-set radius used at each level.
    pub r_grid: Vec<f64>,
    pub restricted: CoarseHomologyEstimate,
    pub fixed_r: CoarseHomologyEstimate,
    pub fixed: CoarseHomologyEstimate,
    pub rho_check: bool,
}

impl BoundedFixedHomology {
    /// The common table, when the check passed.
    pub fn table(&self) -> Option<&BTreeMap<usize, usize>> {
        self.rho_check.then_some(&self.fixed.ranks)
    }

    pub fn estimate(&self) -> &CoarseHomologyEstimate {
        &self.fixed
    }
}

/// HC(X^H_bd) three ways: via K(𝒰ₙ|X^H_r), via K(𝒰ₙ)^H_r and via K(𝒰ₙ)^H.
/// The double limit runs diagonally: level n uses the n-th scan scale at
/// or above k₀.
pub fn bounded_fixed_homology(
    t: &Tower,
    subgroup: &[usize],
    scan: &StabilizationReport,
    field: FieldSpec,
) -> Result<BoundedFixedHomology, LimitError> {
    let Verdict::Stable { k0, .. } = scan.verdict else {
        return Err(LimitError::BoundedFixedSetAbsent(format!("scan verdict {:?}", scan.verdict)));
    };
    let i0 = scan.stable_index().expect("stable verdict has an index");
    let r_grid: Vec<f64> = (0..t.len()).map(|n| scan.scales[(i0 + n).min(scan.scales.len() - 1)]).collect();
    let sub = subgroup.to_vec();
    let run = |sel: Selector| -> Result<CoarseHomologyEstimate, LimitError> {
        stabilized_ranks(&direct_system(t, &sel, field)?)
    };
    let restricted = run(Selector::Restricted {
        subgroup: sub.clone(),
        radii: r_grid.clone(),
    })?;
    let fixed_r = run(Selector::FixedGr {
        subgroup: sub.clone(),
        radii: r_grid.clone(),
    })?;
    let fixed = run(Selector::FixedG { subgroup: sub.clone() })?;
    let rho_check = [&restricted, &fixed_r, &fixed].iter().all(|e| e.is_stable())
        && restricted.ranks == fixed.ranks
        && fixed_r.ranks == fixed.ranks;
    Ok(BoundedFixedHomology {
        subgroup: sub,
        k0,
        r_grid,
        restricted,
        fixed_r,
        fixed,
        rho_check,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SphereVerdict {
    pub is_coarse_sphere: bool,
    pub dimension: Option<usize>,
    pub field: u32,
}

/// A coarse r-sphere has a single 1 in degree r and zeros elsewhere.
pub fn classify_sphere(est: &CoarseHomologyEstimate) -> Result<SphereVerdict, LimitError> {
    if !est.is_stable() {
        return Err(LimitError::NotStabilized);
    }
    let nonzero: Vec<(usize, usize)> = est.ranks.iter().map(|(&d, &r)| (d, r)).filter(|p| p.1 > 0).collect();
    let dimension = match nonzero.as_slice() {
        [(d, 1)] if est.truncated_above.is_none_or(|t| *d <= t) => Some(*d),
        _ => None,
    };
    Ok(SphereVerdict {
        is_coarse_sphere: dimension.is_some(),
        dimension,
        field: est.field,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremAStage {
    pub order: usize,
    pub subgroup: Vec<usize>,
    pub r: usize,
    pub rho_check: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremAReport {
    pub p: u32,
    pub m: usize,
    pub stages: Vec<TheoremAStage>,
    pub r: usize,
    pub range_ok: bool,
    /// m − r even; only required for odd p.
    pub parity_even: bool,
    pub passed: bool,
}

/// Walk a normal series e = G₀ ◁ … ◁ G_k = G with index-p steps and
/// classify X^{Gᵢ}_bd at every stage.
pub fn theorem_a_check(t: &Tower, scales: &[f64], field: FieldSpec) -> Result<TheoremAReport, LimitError> {
    let group = &t.action.group;
    let p = field.q();
    let pre = |s: String| LimitError::PreconditionFailed(s);
    if group.order() > 1 && group.p_group_prime() != Some(p) {
        return Err(pre(format!("group of order {} is not a {p}-group", group.order())));
    }
    let series = group
        .composition_series(p as usize)
        .ok_or_else(|| pre("no normal series with index-p steps".into()))?;
    let whole = stabilized_ranks(&direct_system(t, &Selector::Full, field)?)?;
    let m = match classify_sphere(&whole) {
        Ok(SphereVerdict {
            dimension: Some(m), ..
        }) => m,
        Ok(_) => return Err(pre(format!("space is not a coarse sphere: {:?}", whole.ranks))),
        Err(_) => return Err(pre("homology of the space did not stabilize".into())),
    };
    let mut stages = Vec::with_capacity(series.len());
    for sub in &series {
        let scan = stabilization_scan(&t.ws, &t.action.restrict(sub), scales, None)?;
        if !matches!(scan.verdict, Verdict::Stable { .. }) {
            return Err(pre(format!("action of the order-{} subgroup is not tame in the window", sub.len())));
        }
        let bf = bounded_fixed_homology(t, sub, &scan, field)?;
        let v = classify_sphere(bf.estimate())
            .map_err(|_| pre(format!("fixed homology of the order-{} subgroup did not stabilize", sub.len())))?;
        let r = v
            .dimension
            .ok_or_else(|| pre(format!("fixed set of the order-{} subgroup is not a coarse sphere", sub.len())))?;
        stages.push(TheoremAStage {
            order: sub.len(),
            subgroup: sub.clone(),
            r,
            rho_check: bf.rho_check,
        });
    }
    let r = stages.last().map_or(m, |s| s.r);
    let range_ok = stages.windows(2).all(|w| w[1].r <= w[0].r) && r <= m;
    let parity_even = (m - r.min(m)) % 2 == 0;
    let passed = range_ok && (p == 2 || parity_even) && stages.iter().all(|s| s.rho_check);
    Ok(TheoremAReport {
        p,
        m,
        stages,
        r,
        range_ok,
        parity_even,
        passed,
    })
}
