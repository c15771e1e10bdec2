//! Uniform coverings, saturation, Lebesgue bounds, coarsening systems and
//! decomposition witnesses.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::action::IsometricAction;
use crate::metric::{LatticeNorm, ValidationReport, WindowedSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CoveringError {
    #[error("radius must be positive, got {0}")]
    RadiusNotPositive(f64),
    #[error("point {0} is covered by no set")]
    Uncovered(usize),
    #[error("covering has an empty set at index {0}")]
    EmptySet(usize),
    #[error("lattice centers requested on a non-lattice space")]
    NotALattice,
    #[error("cannot satisfy the Lebesgue condition at level {level}: radius would exceed {max_radius}")]
    CannotSatisfyLebesgue { level: usize, max_radius: f64 },
    #[error("growth factor must exceed 1, got {0}")]
    BadGrowth(f64),
    #[error("classes do not partition the point set: {0}")]
    NotAPartition(String),
    #[error("no equivariant refinement projection: set {0} has no stabilizer-fixed superset")]
    NoEquivariantProjection(usize),
    #[error("refinement projection fails containment for set {0}")]
    ProjectionNotContaining(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringOrigin {
    Ball,
    Saturated,
    StarPullback,
    Explicit,
}

/// Where a ball is centered: a point of the space, or a lattice site that
/// need not lie in the window.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Center {
    Point(usize),
    Site(Vec<i64>),
}

#[derive(Debug, Clone, Serialize)]
pub struct Covering {
    /// Sorted point lists; the set id is the position.
    pub sets: Vec<Vec<usize>>,
    /// Declared diameter bound.
    pub scale: f64,
    pub origin: CoveringOrigin,
    pub radius: Option<f64>,
    #[serde(skip)]
    pub centers: Option<Vec<Center>>,
    /// `index_action[g][i]` = id of g·U_i, when the covering is G-invariant
    /// as an indexed family.
    #[serde(skip)]
    pub index_action: Option<Vec<Vec<usize>>>,
    pub labels: Vec<String>,
}

impl Covering {
    pub fn explicit(n: usize, mut sets: Vec<Vec<usize>>, scale: f64) -> Result<Self, CoveringError> {
        for s in &mut sets {
            s.sort_unstable();
            s.dedup();
        }
        let labels = (0..sets.len()).map(|i| format!("U{i}")).collect();
        let c = Self {
            sets,
            scale,
            origin: CoveringOrigin::Explicit,
            radius: None,
            centers: None,
            index_action: None,
            labels,
        };
        c.check_cover(n)?;
        Ok(c)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn check_cover(&self, n: usize) -> Result<(), CoveringError> {
        if let Some(i) = self.sets.iter().position(Vec::is_empty) {
            return Err(CoveringError::EmptySet(i));
        }
        let m = self.membership(n);
        if let Some(x) = m.iter().position(Vec::is_empty) {
            return Err(CoveringError::Uncovered(x));
        }
        Ok(())
    }

    /// For each point, the sorted ids of the sets containing it.
    pub fn membership(&self, n: usize) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); n];
        for (i, s) in self.sets.iter().enumerate() {
            for &x in s {
                m[x].push(i);
            }
        }
        m
    }

    pub fn contains(&self, set: usize, x: usize) -> bool {
        self.sets[set].binary_search(&x).is_ok()
    }
}

/// How ball centers are chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CenterStrategy {
    /// Greedy net in point order: a point becomes a center if it is farther
    /// than `separation` from every earlier center.
    Greedy { separation: f64 },
    /// Sites of the sublattice step·ℤⁿ (axial coordinates for hex; the
    /// even-sum part of it under ℓ¹). These are
    /// fixed setwise by every linear lattice automorphism, so the covering
    /// is invariant under such actions.
    Lattice { step: i64 },
    /// Sites of step·ℤ^base in the first `base` coordinates; a ball
    /// ignores the remaining coordinates, so each set is a union of whole
    /// fibers.
    Fibered { step: i64, base: usize },
    /// Every point is a center.
    All,
}

pub fn center_dist(ws: &WindowedSpace, c: &Center, x: usize) -> f64 {
    match c {
        Center::Point(p) => ws.space.dist(*p, x),
        Center::Site(v) => {
            let xc = ws.space.lattice_coords(x).expect("lattice space");
            let diff: Vec<i64> = xc.iter().zip(v).map(|(a, b)| a - b).collect();
            ws.space.lattice_norm().expect("lattice space").norm(&diff)
        }
    }
}

/// Closed balls of the given radius around the chosen centers.
pub fn ball_covering(ws: &WindowedSpace, radius: f64, strategy: CenterStrategy) -> Result<Covering, CoveringError> {
    if !(radius > 0.0) {
        return Err(CoveringError::RadiusNotPositive(radius));
    }
    let n = ws.len();
    let (mut sets, mut centers) = match strategy {
        CenterStrategy::Greedy { separation } => {
            let mut centers: Vec<usize> = Vec::new();
            for x in 0..n {
                if centers.iter().all(|&c| ws.space.dist(c, x) > separation) {
                    centers.push(x);
                }
            }
            point_balls(ws, radius, centers)
        }
        CenterStrategy::All => point_balls(ws, radius, (0..n).collect()),
        CenterStrategy::Lattice { step } => site_balls(ws, radius, step, None)?,
        CenterStrategy::Fibered { step, base } => site_balls(ws, radius, step, Some(base))?,
    };
    let mut scale = 2.0 * radius;
    if let CenterStrategy::Fibered { base, .. } = strategy {
        // sites near the window edge can cut out the same set
        let mut seen = std::collections::HashSet::new();
        let keep: Vec<bool> = sets.iter().map(|s| seen.insert(s.clone())).collect();
        let mut k = keep.iter();
        sets.retain(|_| *k.next().unwrap());
        let mut k = keep.iter();
        centers.retain(|_| *k.next().unwrap());
        scale += fiber_extent(ws, base);
    }
    let labels = centers
        .iter()
        .map(|c| match c {
            Center::Point(p) => format!("B({})", ws.space.points[*p]),
            Center::Site(v) => format!("B{}", crate::metric::fmt_coords(v)),
        })
        .collect();
    let c = Covering {
        sets,
        scale,
        origin: CoveringOrigin::Ball,
        radius: Some(radius),
        centers: Some(centers),
        index_action: None,
        labels,
    };
    c.check_cover(n)?;
    Ok(c)
}

fn point_balls(ws: &WindowedSpace, radius: f64, centers: Vec<usize>) -> (Vec<Vec<usize>>, Vec<Center>) {
    let sets = centers
        .iter()
        .map(|&c| (0..ws.len()).filter(|&x| ws.space.dist(c, x) <= radius).collect())
        .collect();
    (sets, centers.into_iter().map(Center::Point).collect())
}

fn site_balls(
    ws: &WindowedSpace,
    radius: f64,
    step: i64,
    base: Option<usize>,
) -> Result<(Vec<Vec<usize>>, Vec<Center>), CoveringError> {
    let norm = ws.space.lattice_norm().ok_or(CoveringError::NotALattice)?;
    if norm == LatticeNorm::Euclidean || step < 1 {
        return Err(CoveringError::NotALattice);
    }
    let r = radius.floor() as i64;
    // under ℓ¹ only sites step·m with Σm even: in the coordinates
    // (x+y, x−y) these are the square lattice of step 2·step, so the balls
    // behave like Chebyshev squares (degree 2ᵏ, Lebesgue number about r/2)
    let checker = norm == LatticeNorm::Manhattan;
    let mut site_index: HashMap<Vec<i64>, usize> = HashMap::new();
    let mut sites: Vec<Vec<i64>> = Vec::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for x in 0..ws.len() {
        let xc = ws.space.lattice_coords(x).unwrap();
        let xc = &xc[..base.unwrap_or(xc.len()).min(xc.len())];
        // candidate sites in the box [x - r, x + r]; the norm filter is exact
        let ranges: Vec<(i64, i64)> = xc
            .iter()
            .map(|&v| ((v - r).div_euclid(step) + i64::from((v - r).rem_euclid(step) != 0), (v + r).div_euclid(step)))
            .collect();
        let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        'outer: loop {
            let site: Vec<i64> = k.iter().map(|&v| v * step).collect();
            let diff: Vec<i64> = xc.iter().zip(&site).map(|(a, b)| a - b).collect();
            if !(checker && k.iter().sum::<i64>() % 2 != 0) && norm.norm(&diff) <= radius {
                let id = *site_index.entry(site.clone()).or_insert_with(|| {
                    sites.push(site);
                    members.push(Vec::new());
                    sites.len() - 1
                });
                members[id].push(x);
            }
            for i in (0..k.len()).rev() {
                if k[i] < ranges[i].1 {
                    k[i] += 1;
                    for j in i + 1..k.len() {
                        k[j] = ranges[j].0;
                    }
                    continue 'outer;
                }
            }
            break;
        }
    }
    // deterministic order: by site coordinates
    let mut order: Vec<usize> = (0..sites.len()).collect();
    order.sort_by(|&a, &b| sites[a].cmp(&sites[b]));
    let sets = order.iter().map(|&i| std::mem::take(&mut members[i])).collect();
    let centers = order.iter().map(|&i| Center::Site(sites[i].clone())).collect();
    Ok((sets, centers))
}

/// Linear map on lattice coordinates realizing `perm`, if the action is
/// linear (fixes the origin and is determined by the unit vectors).
fn linear_part(ws: &WindowedSpace, perm: &[usize]) -> Option<Vec<Vec<i64>>> {
    let dim = ws.space.lattice_coords(0)?.len();
    let find = |v: &[i64]| (0..ws.len()).find(|&x| ws.space.lattice_coords(x).unwrap() == v);
    let origin = find(&vec![0; dim])?;
    if perm[origin] != origin {
        return None;
    }
    let mut cols = Vec::with_capacity(dim);
    for i in 0..dim {
        let mut e = vec![0; dim];
        e[i] = 1;
        let x = find(&e)?;
        cols.push(ws.space.lattice_coords(perm[x]).unwrap().to_vec());
    }
    let apply = |v: &[i64]| -> Vec<i64> {
        (0..dim).map(|r| (0..dim).map(|c| cols[c][r] * v[c]).sum()).collect()
    };
    let ok = (0..ws.len()).all(|x| apply(ws.space.lattice_coords(x).unwrap()) == ws.space.lattice_coords(perm[x]).unwrap());
    ok.then_some(cols)
}

/// Derives the index action of a ball covering from the action on centers,
/// then checks g·U_i = U_{g·i} pointwise. `None` if the covering is not
/// invariant as an indexed family.
pub fn invariant_index_action(c: &Covering, ws: &WindowedSpace, a: &IsometricAction) -> Option<Vec<Vec<usize>>> {
    invariant_by_centers(c, ws, a).or_else(|| invariant_by_sets(c, a))
}

fn invariant_by_centers(c: &Covering, ws: &WindowedSpace, a: &IsometricAction) -> Option<Vec<Vec<usize>>> {
    let centers = c.centers.as_ref()?;
    let pos: HashMap<&Center, usize> = centers.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut out = Vec::with_capacity(a.order());
    for perm in &a.perm {
        let lin = match centers.first() {
            Some(Center::Site(_)) => Some(linear_part(ws, perm)?),
            _ => None,
        };
        let mut row = Vec::with_capacity(centers.len());
        for ctr in centers {
            let img = match ctr {
                Center::Point(p) => Center::Point(perm[*p]),
                Center::Site(v) => {
                    let m = lin.as_ref().unwrap();
                    Center::Site((0..v.len()).map(|r| (0..v.len()).map(|k| m[k][r] * v[k]).sum()).collect())
                }
            };
            row.push(*pos.get(&img)?);
        }
        out.push(row);
    }
    let valid = out.iter().zip(&a.perm).all(|(row, perm)| {
        c.sets.iter().enumerate().all(|(i, s)| {
            let mut img: Vec<usize> = s.iter().map(|&x| perm[x]).collect();
            img.sort_unstable();
            img == c.sets[row[i]]
        })
    });
    valid.then_some(out)
}

/// Fallback for actions that are not linear in the coordinates: match each
/// image set against the covering. Only used when the sets are distinct, so
/// the index action is determined by the point action.
fn invariant_by_sets(c: &Covering, a: &IsometricAction) -> Option<Vec<Vec<usize>>> {
    let pos: HashMap<&[usize], usize> = c.sets.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    if pos.len() != c.len() {
        return None;
    }
    a.perm
        .iter()
        .map(|perm| {
            c.sets
                .iter()
                .map(|s| {
                    let mut img: Vec<usize> = s.iter().map(|&x| perm[x]).collect();
                    img.sort_unstable();
                    pos.get(img.as_slice()).copied()
                })
                .collect()
        })
        .collect()
}

/// All translates g·U as distinct indexed sets (g, U), id = g·|𝒰| + u.
pub fn saturate_g(c: &Covering, a: &IsometricAction) -> Covering {
    let m = c.len();
    let order = a.order();
    let mut sets = Vec::with_capacity(m * order);
    let mut labels = Vec::with_capacity(m * order);
    for g in 0..order {
        for (u, s) in c.sets.iter().enumerate() {
            let mut img: Vec<usize> = s.iter().map(|&x| a.perm[g][x]).collect();
            img.sort_unstable();
            sets.push(img);
            labels.push(format!("({},{})", a.group.names[g], c.labels[u]));
        }
    }
    let index_action = (0..order)
        .map(|h| (0..m * order).map(|i| a.group.mul(h, i / m) * m + i % m).collect())
        .collect();
    let centers = c.centers.as_ref().and_then(|cs| {
        let mut out = Vec::with_capacity(m * order);
        for g in 0..order {
            for ctr in cs {
                match ctr {
                    Center::Point(p) => out.push(Center::Point(a.perm[g][*p])),
                    Center::Site(_) => return None,
                }
            }
        }
        Some(out)
    });
    Covering {
        sets,
        scale: c.scale,
        origin: CoveringOrigin::Saturated,
        radius: c.radius,
        centers,
        index_action: Some(index_action),
        labels,
    }
}

/// Checks that the index action is a permutation action with g·U_i = U_{g·i}.
pub fn check_invariance(c: &Covering, a: &IsometricAction) -> ValidationReport {
    let mut rep = ValidationReport::new(true);
    let Some(act) = &c.index_action else {
        rep.fail(|| "covering carries no index action".into());
        return rep;
    };
    for (g, row) in act.iter().enumerate() {
        if !crate::group::is_permutation(row, c.len()) {
            rep.fail(|| format!("index action of {} is not a permutation", a.group.names[g]));
            continue;
        }
        for (i, s) in c.sets.iter().enumerate() {
            rep.checked += 1;
            let mut img: Vec<usize> = s.iter().map(|&x| a.perm[g][x]).collect();
            img.sort_unstable();
            if img != c.sets[row[i]] {
                rep.fail(|| format!("{}·U{} != U{}", a.group.names[g], i, row[i]));
            }
        }
    }
    for g in 0..a.order() {
        for h in 0..a.order() {
            let gh = a.group.mul(g, h);
            if (0..c.len()).any(|i| act[g][act[h][i]] != act[gh][i]) {
                rep.fail(|| format!("index action not a homomorphism at ({g},{h})"));
            }
        }
    }
    rep
}

/// Maximum number of sets meeting at a point.
pub fn degree(c: &Covering, n: usize) -> usize {
    c.membership(n).iter().map(Vec::len).max().unwrap_or(0)
}

/// Certified diameter bound of each set: exact for small sets, otherwise
/// twice the eccentricity from the center.
pub fn diameter_bounds(c: &Covering, ws: &WindowedSpace) -> Vec<f64> {
    const EXACT_LIMIT: usize = 600;
    c.sets
        .iter()
        .enumerate()
        .map(|(i, s)| {
            if s.len() <= EXACT_LIMIT {
                return ws.space.diameter(s);
            }
            match c.centers.as_ref().map(|cs| &cs[i]) {
                Some(ctr) => 2.0 * s.iter().map(|&x| center_dist(ws, ctr, x)).fold(0.0, f64::max) + fiber_spread(ws, ctr, s),
                None => ws.space.diameter(s),
            }
        })
        .collect()
}

/// Spread of the coordinates past `base` over the whole window.
fn fiber_extent(ws: &WindowedSpace, base: usize) -> f64 {
    let all: Vec<usize> = (0..ws.len()).collect();
    fiber_spread(ws, &Center::Site(vec![0; base]), &all)
}

/// Sum over the coordinates a site ignores of their spread across `s`. The
/// ℓ¹ and ℓ∞ norms are both bounded by the base part plus this sum.
fn fiber_spread(ws: &WindowedSpace, ctr: &Center, s: &[usize]) -> f64 {
    let Center::Site(v) = ctr else {
        return 0.0;
    };
    let Some(dim) = ws.space.lattice_coords(0).map(<[i64]>::len) else {
        return 0.0;
    };
    (v.len()..dim)
        .map(|k| {
            let vals = s.iter().map(|&x| ws.space.lattice_coords(x).unwrap()[k]);
            (vals.clone().max().unwrap_or(0) - vals.min().unwrap_or(0)) as f64
        })
        .sum()
}

/// Certified lower bound for the Lebesgue number:
/// min over x of max over U ∋ x of d(x, X∖U). `None` means no bound
/// (some point sees no outside at all, e.g. a set equal to the space).
///
/// With known centers the inner radius is bounded below by
/// d(c_U, X∖U) − d(c_U, x), which avoids a quadratic scan per point.
pub fn lebesgue_bound(c: &Covering, ws: &WindowedSpace) -> Option<f64> {
    let n = ws.len();
    let member = c.membership(n);
    let inner_at: Box<dyn Fn(usize, usize) -> f64> = match &c.centers {
        Some(centers) => {
            let reach: Vec<f64> = c
                .sets
                .iter()
                .zip(centers)
                .map(|(s, ctr)| {
                    (0..n)
                        .filter(|x| s.binary_search(x).is_err())
                        .map(|x| center_dist(ws, ctr, x))
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            Box::new(move |u, x| reach[u] - center_dist(ws, &centers[u], x))
        }
        None => Box::new(move |u, x| {
            (0..n)
                .filter(|y| c.sets[u].binary_search(y).is_err())
                .map(|y| ws.space.dist(x, y))
                .fold(f64::INFINITY, f64::min)
        }),
    };
    let mut lam = f64::INFINITY;
    for (x, sets) in member.iter().enumerate() {
        let best = sets.iter().map(|&u| inner_at(u, x)).fold(f64::NEG_INFINITY, f64::max);
        lam = lam.min(best);
    }
    lam.is_finite().then_some(lam)
}

/// Lebesgue bound with "unbounded" encoded as the window diameter.
pub fn lebesgue_number(c: &Covering, ws: &WindowedSpace) -> f64 {
    lebesgue_bound(c, ws).unwrap_or_else(|| ws.diameter_bound())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    Lowest,
    Highest,
}

/// Level n → level n+1 map on set ids.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementProjection {
    pub map: Vec<usize>,
    pub equivariant: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseningSystem {
    pub levels: Vec<Covering>,
    pub radii: Vec<f64>,
    /// Certified diameter bound R_n per level.
    pub diameter_bounds: Vec<f64>,
    /// Certified Lebesgue bound per level; `None` = unbounded.
    pub lebesgue: Vec<Option<f64>>,
    pub projections: Vec<RefinementProjection>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StrategyKind {
    /// Lattice sites on lattice spaces, greedy nets elsewhere.
    Auto,
    Greedy,
    Lattice,
    /// Lattice sites in the first k coordinates only.
    Fibered(usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemOptions {
    pub levels: usize,
    pub growth: f64,
    pub base_radius: Option<f64>,
    pub strategy: StrategyKind,
    pub tie_break: TieBreak,
    /// Saturate even when the ball covering is already invariant.
    pub force_saturation: bool,
    /// Largest admissible ball radius; defaults to window_radius − collar − ε.
    pub max_radius: Option<f64>,
}

impl Default for SystemOptions {
    fn default() -> Self {
        Self {
            levels: 2,
            growth: 2.0,
            base_radius: None,
            strategy: StrategyKind::Auto,
            tie_break: TieBreak::Lowest,
            force_saturation: false,
            max_radius: None,
        }
    }
}

fn covering_at(
    ws: &WindowedSpace,
    a: Option<&IsometricAction>,
    radius: f64,
    opts: &SystemOptions,
) -> Result<Covering, CoveringError> {
    let lattice_ok = ws
        .space
        .lattice_norm()
        .is_some_and(|n| n != LatticeNorm::Euclidean);
    // ℓ¹ sites form the checkerboard h·D_k (see site_balls), the rotated
    // copy of the step r+1 square lattice
    let step = match ws.space.lattice_norm() {
        Some(LatticeNorm::Manhattan) => radius.floor() as i64 / 2 + 1,
        _ => radius.floor() as i64 + 1,
    };
    let strategy = match opts.strategy {
        StrategyKind::Lattice => CenterStrategy::Lattice { step },
        StrategyKind::Auto if lattice_ok => CenterStrategy::Lattice { step },
        StrategyKind::Fibered(base) => CenterStrategy::Fibered { step, base },
        _ => CenterStrategy::Greedy { separation: radius },
    };
    let mut c = ball_covering(ws, radius, strategy)?;
    if let Some(a) = a {
        if opts.force_saturation {
            c = saturate_g(&c, a);
        } else {
            match invariant_index_action(&c, ws, a) {
                Some(act) => c.index_action = Some(act),
                None => c = saturate_g(&c, a),
            }
        }
    }
    Ok(c)
}

/// Builds a coarsening system: each level's radius is the smallest value
/// ≥ growth·r_{n−1} (integers on integral metrics) whose certified
/// Lebesgue bound strictly exceeds the previous certified diameter bound.
pub fn build_coarsening_system(
    ws: &WindowedSpace,
    a: Option<&IsometricAction>,
    opts: SystemOptions,
) -> Result<CoarseningSystem, CoveringError> {
    if !(opts.growth > 1.0) {
        return Err(CoveringError::BadGrowth(opts.growth));
    }
    let integral = ws.space.is_integral();
    // a compact space has no frontier: once r reaches the diameter the
    // single covering set has no Lebesgue bound and the search stops
    let max_radius = opts.max_radius.unwrap_or(if ws.unbounded {
        (ws.window_radius - ws.collar - 1e-9).max(1.0)
    } else {
        f64::INFINITY
    });
    let base = opts
        .base_radius
        .unwrap_or_else(|| (ws.window_radius / 8.0).floor().max(1.0));
    let mut levels = Vec::new();
    let mut radii = Vec::new();
    let mut dbounds = Vec::new();
    let mut lebesgue = Vec::new();

    let first = covering_at(ws, a, base, &opts)?;
    dbounds.push(diameter_bounds(&first, ws).into_iter().fold(0.0, f64::max));
    lebesgue.push(lebesgue_bound(&first, ws));
    radii.push(base);
    levels.push(first);

    for level in 1..opts.levels {
        let prev_r = radii[level - 1];
        let prev_d = dbounds[level - 1];
        let mut r = opts.growth * prev_r;
        if integral {
            r = r.ceil();
        }
        loop {
            if r > max_radius {
                return Err(CoveringError::CannotSatisfyLebesgue { level, max_radius });
            }
            let c = covering_at(ws, a, r, &opts)?;
            let lam = lebesgue_bound(&c, ws);
            if lam.is_none_or(|l| l > prev_d) {
                dbounds.push(diameter_bounds(&c, ws).into_iter().fold(0.0, f64::max));
                lebesgue.push(lam);
                radii.push(r);
                levels.push(c);
                break;
            }
            r = if integral { r + 1.0 } else { r * 1.125 };
        }
    }
    let projections = (0..levels.len().saturating_sub(1))
        .map(|n| refinement_projection(&levels[n], &levels[n + 1], a, opts.tie_break))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CoarseningSystem {
        levels,
        radii,
        diameter_bounds: dbounds,
        lebesgue,
        projections,
    })
}

fn is_subset(a: &[usize], b: &[usize]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

/// First containing set, made equivariant: pick for each orbit
/// representative a superset fixed by its stabilizer and propagate.
pub fn refinement_projection(
    from: &Covering,
    to: &Covering,
    a: Option<&IsometricAction>,
    tie: TieBreak,
) -> Result<RefinementProjection, CoveringError> {
    let pick = |u: usize, allowed: &dyn Fn(usize) -> bool| -> Option<usize> {
        let mut cands = (0..to.len()).filter(|&v| allowed(v) && is_subset(&from.sets[u], &to.sets[v]));
        match tie {
            TieBreak::Lowest => cands.next(),
            TieBreak::Highest => cands.last(),
        }
    };
    let (Some(a), Some(act_from), Some(act_to)) = (a, &from.index_action, &to.index_action) else {
        let map = (0..from.len())
            .map(|u| pick(u, &|_| true).ok_or(CoveringError::ProjectionNotContaining(u)))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(RefinementProjection { map, equivariant: false });
    };
    let mut map = vec![usize::MAX; from.len()];
    for u in 0..from.len() {
        if map[u] != usize::MAX {
            continue;
        }
        let stab: Vec<usize> = (0..a.order()).filter(|&g| act_from[g][u] == u).collect();
        let v = pick(u, &|v| stab.iter().all(|&g| act_to[g][v] == v))
            .ok_or(CoveringError::NoEquivariantProjection(u))?;
        for g in 0..a.order() {
            map[act_from[g][u]] = act_to[g][v];
        }
    }
    Ok(RefinementProjection { map, equivariant: true })
}

/// Re-checks every invariant of a coarsening system.
pub fn verify_system(sys: &CoarseningSystem, ws: &WindowedSpace, a: Option<&IsometricAction>) -> ValidationReport {
    let mut rep = ValidationReport::new(true);
    for (n, c) in sys.levels.iter().enumerate() {
        if let Err(e) = c.check_cover(ws.len()) {
            rep.fail(|| format!("level {n}: {e}"));
        }
        let d = diameter_bounds(c, ws).into_iter().fold(0.0, f64::max);
        rep.checked += 1;
        if d > sys.diameter_bounds[n] + 1e-9 || d > c.scale + 1e-9 {
            rep.fail(|| format!("level {n}: diameter {d} exceeds bound"));
        }
        if let Some(a) = a {
            let inv = check_invariance(c, a);
            if !inv.passed {
                rep.fail(|| format!("level {n} not invariant: {}", inv.violations.join("; ")));
            }
        }
    }
    for n in 0..sys.projections.len() {
        rep.checked += 1;
        if sys.lebesgue[n + 1].is_some_and(|l| l <= sys.diameter_bounds[n]) {
            rep.fail(|| format!("Lebesgue bound of level {} does not exceed R_{n}", n + 1));
        }
        let p = &sys.projections[n];
        let (from, to) = (&sys.levels[n], &sys.levels[n + 1]);
        for (u, &v) in p.map.iter().enumerate() {
            rep.checked += 1;
            if !is_subset(&from.sets[u], &to.sets[v]) {
                rep.fail(|| format!("level {n}: U{u} not inside β(U{u}) = U{v}"));
            }
        }
        if p.equivariant {
            if let (Some(a), Some(af), Some(at)) = (a, &from.index_action, &to.index_action) {
                for g in 0..a.order() {
                    for u in 0..from.len() {
                        rep.checked += 1;
                        if p.map[af[g][u]] != at[g][p.map[u]] {
                            rep.fail(|| format!("level {n}: β not equivariant at ({g}, U{u})"));
                        }
                    }
                }
            }
        }
    }
    rep
}

/// A candidate witness for asymptotic dimension ≤ l at scale r: l+1
/// families whose r-components are uniformly bounded.
#[derive(Debug, Clone, Serialize)]
pub struct DecompositionWitness {
    pub r: f64,
    pub classes: Vec<Vec<usize>>,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DisconnectedReport {
    pub report: ValidationReport,
    pub max_component_diameter: f64,
    /// Smallest distance between distinct components of one class.
    pub min_separation: Option<f64>,
}

/// Splits each class into components under the linkage d < r and checks the
/// component diameters against the bound.
pub fn verify_r_disconnected(w: &DecompositionWitness, ws: &WindowedSpace) -> Result<DisconnectedReport, CoveringError> {
    let n = ws.len();
    let mut seen = vec![false; n];
    for class in &w.classes {
        for &x in class {
            if x >= n || seen[x] {
                return Err(CoveringError::NotAPartition(format!("point {x} repeated or out of range")));
            }
            seen[x] = true;
        }
    }
    if let Some(x) = seen.iter().position(|s| !s) {
        return Err(CoveringError::NotAPartition(format!("point {x} missing")));
    }
    let mut rep = ValidationReport::new(true);
    let mut max_diam: f64 = 0.0;
    let mut min_sep: Option<f64> = None;
    for (ci, class) in w.classes.iter().enumerate() {
        let comps = components(ws, class, w.r);
        for comp in &comps {
            let d = ws.space.diameter(comp);
            max_diam = max_diam.max(d);
            rep.checked += 1;
            if d > w.bound + 1e-9 {
                rep.fail(|| format!("class {ci}: component of diameter {d} exceeds {}", w.bound));
            }
        }
        for i in 0..comps.len() {
            for j in i + 1..comps.len() {
                let s = comps[i]
                    .iter()
                    .map(|&x| ws.space.dist_to_set(x, &comps[j]))
                    .fold(f64::INFINITY, f64::min);
                min_sep = Some(min_sep.map_or(s, |m: f64| m.min(s)));
            }
        }
    }
    Ok(DisconnectedReport {
        report: rep,
        max_component_diameter: max_diam,
        min_separation: min_sep,
    })
}

fn components(ws: &WindowedSpace, class: &[usize], r: f64) -> Vec<Vec<usize>> {
    let mut comp = vec![usize::MAX; class.len()];
    let mut out = Vec::new();
    for s in 0..class.len() {
        if comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut stack = vec![s];
        let mut members = Vec::new();
        while let Some(i) = stack.pop() {
            members.push(class[i]);
            for j in 0..class.len() {
                if comp[j] == usize::MAX && ws.space.dist(class[i], class[j]) < r {
                    comp[j] = id;
                    stack.push(j);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::FiniteMetricSpace;
    use crate::models::{lattice_window, LatticeWindow};

    fn path(lo: i64, hi: i64) -> WindowedSpace {
        WindowedSpace::compact(FiniteMetricSpace::lattice(
            "path",
            1,
            (lo..=hi).map(|x| vec![x]).collect(),
            LatticeNorm::Chebyshev,
        ))
    }

    #[test]
    fn one_point_space() {
        let ws = path(0, 0);
        let c = ball_covering(&ws, 1.0, CenterStrategy::Greedy { separation: 1.0 }).unwrap();
        assert_eq!(c.sets, vec![vec![0]]);
        assert!(ball_covering(&ws, 0.0, CenterStrategy::All).is_err());
    }

    #[test]
    fn unit_balls_on_a_path() {
        let ws = path(0, 10);
        let c = ball_covering(&ws, 1.0, CenterStrategy::All).unwrap();
        assert_eq!(c.len(), 11);
        assert_eq!(c.sets.iter().filter(|s| s.len() == 3).count(), 9);
        assert_eq!(degree(&c, ws.len()), 3);
    }

    #[test]
    fn two_halves_lebesgue() {
        let ws = path(0, 10);
        let c = Covering::explicit(11, vec![(0..=5).collect(), (5..=10).collect()], 5.0).unwrap();
        // the overlap point 5 sees the outside of each half at distance 1
        assert_eq!(lebesgue_bound(&c, &ws), Some(1.0));
        let whole = Covering::explicit(11, vec![(0..=10).collect()], 10.0).unwrap();
        assert_eq!(lebesgue_bound(&whole, &ws), None);
        assert_eq!(lebesgue_number(&whole, &ws), ws.diameter_bound());
    }

    #[test]
    fn grid_ball_covering_diameter() {
        let ws = lattice_window(&LatticeWindow::square(2, 8, LatticeNorm::Euclidean, 1.0));
        let c = ball_covering(&ws, 2.0, CenterStrategy::Greedy { separation: 2.0 }).unwrap();
        let d = diameter_bounds(&c, &ws).into_iter().fold(0.0, f64::max);
        assert!(d <= 4.0 * 2f64.sqrt() + 1e-9 && d <= 4.0 + 1e-9);
        assert!(c.check_cover(ws.len()).is_ok());
        let lam = lebesgue_bound(&c, &ws).unwrap();
        assert!(lam > 0.0);
    }

    #[test]
    fn manhattan_sites_cover_with_degree_four() {
        let ws = lattice_window(&LatticeWindow::square(2, 12, LatticeNorm::Manhattan, 1.0));
        let opts = SystemOptions {
            strategy: StrategyKind::Lattice,
            ..SystemOptions::default()
        };
        for r in 1..=6 {
            let c = covering_at(&ws, None, r as f64, &opts).unwrap();
            assert!(c.check_cover(ws.len()).is_ok(), "r = {r}");
            assert!(degree(&c, ws.len()) <= 4, "r = {r}");
        }
    }

    #[test]
    fn fibered_sets_are_unions_of_fibers() {
        // ℤ² × {0, 1} with the ℓ¹ norm; the swap (a, b, e) ↦ (b, a, 1 − e)
        let coords: Vec<Vec<i64>> = (-4..=4)
            .flat_map(|a| (-4..=4).flat_map(move |b| [vec![a, b, 0], vec![a, b, 1]]))
            .collect();
        let perm: Vec<usize> = coords
            .iter()
            .map(|v| coords.iter().position(|w| *w == vec![v[1], v[0], 1 - v[2]]).unwrap())
            .collect();
        let n = coords.len();
        let ws = WindowedSpace::compact(FiniteMetricSpace::lattice("sheets", 3, coords.clone(), LatticeNorm::Manhattan));
        let a = IsometricAction {
            group: crate::group::GroupSpec::cyclic(2),
            perm: vec![(0..n).collect(), perm],
            tol_iso: 1e-9,
        };
        let c = ball_covering(&ws, 2.0, CenterStrategy::Fibered { step: 2, base: 2 }).unwrap();
        for s in &c.sets {
            assert!(s.iter().all(|&x| {
                let v = &coords[x];
                s.iter().any(|&y| coords[y] == vec![v[0], v[1], 1 - v[2]])
            }));
        }
        // the declared scale covers the fiber
        assert_eq!(c.scale, 5.0);
        let d = diameter_bounds(&c, &ws).into_iter().fold(0.0, f64::max);
        assert!(d <= c.scale);
        assert!(invariant_index_action(&c, &ws, &a).is_some());
    }

    #[test]
    fn disjoint_covering_has_degree_one() {
        let c = Covering::explicit(4, vec![vec![0, 1], vec![2, 3]], 1.0).unwrap();
        assert_eq!(degree(&c, 4), 1);
    }

    #[test]
    fn even_odd_blocks_witness_asdim_one() {
        let ws = path(-32, 32);
        let r = 3.0;
        let block = 4i64;
        let mut classes = vec![Vec::new(), Vec::new()];
        for x in 0..ws.len() {
            let v = x as i64 - 32;
            classes[v.div_euclid(block).rem_euclid(2) as usize].push(x);
        }
        let w = DecompositionWitness {
            r,
            classes,
            bound: (block - 1) as f64,
        };
        let out = verify_r_disconnected(&w, &ws).unwrap();
        assert!(out.report.passed);
        assert!(out.min_separation.unwrap() >= r);
        let whole = DecompositionWitness {
            r,
            classes: vec![(0..ws.len()).collect()],
            bound: 5.0,
        };
        assert!(!verify_r_disconnected(&whole, &ws).unwrap().report.passed);
    }

    #[test]
    fn path_system_radii_and_certificates() {
        let ws = lattice_window(&LatticeWindow::square(1, 32, LatticeNorm::Chebyshev, 1.0));
        let opts = SystemOptions {
            levels: 3,
            base_radius: Some(1.0),
            ..SystemOptions::default()
        };
        let sys = build_coarsening_system(&ws, None, opts).unwrap();
        assert_eq!(sys.radii.len(), 3);
        assert!(sys.radii.windows(2).all(|w| w[1] >= 2.0 * w[0]));
        assert!(verify_system(&sys, &ws, None).passed);
    }

    #[test]
    fn growth_must_exceed_one() {
        let ws = path(0, 3);
        let opts = SystemOptions {
            growth: 1.0,
            ..SystemOptions::default()
        };
        assert!(matches!(build_coarsening_system(&ws, None, opts), Err(CoveringError::BadGrowth(_))));
    }
}
