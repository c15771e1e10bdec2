//! Builders for the concrete metric models: lattice windows, the goalposts
//! space, Poincaré disk samples and Cayley balls.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::PI;
use std::hash::Hash;

use thiserror::Error;

use crate::action::IsometricAction;
use crate::group::{GroupError, GroupSpec};
use crate::metric::{FiniteMetricSpace, LatticeNorm, WindowedSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("generators are not closed under inverses")]
    NonSymmetricGenerators,
    #[error("radius must be at least 1")]
    RadiusTooSmall,
    #[error("linear map does not preserve the window")]
    WindowNotInvariant,
    #[error("word metric differs from the coordinate metric at ({0}, {1})")]
    CoordinateMetricMismatch(usize, usize),
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowShape {
    /// [−N, N]^dim regardless of the metric.
    Box,
    /// {x : |x| ≤ N} in the lattice norm.
    Ball,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeWindow {
    pub dim: usize,
    pub radius: i64,
    pub norm: LatticeNorm,
    pub collar: f64,
    pub shape: WindowShape,
}

impl LatticeWindow {
    pub fn square(dim: usize, radius: i64, norm: LatticeNorm, collar: f64) -> Self {
        Self {
            dim,
            radius,
            norm,
            collar,
            shape: WindowShape::Box,
        }
    }

    pub fn ball(dim: usize, radius: i64, norm: LatticeNorm, collar: f64) -> Self {
        Self {
            dim,
            radius,
            norm,
            collar,
            shape: WindowShape::Ball,
        }
    }
}

/// Lattice points of the window in lexicographic order; depth is measured
/// in the norm that defines the window shape.
pub fn lattice_window(w: &LatticeWindow) -> WindowedSpace {
    let n = w.radius;
    let shape_norm = match w.shape {
        WindowShape::Box => LatticeNorm::Chebyshev,
        WindowShape::Ball => w.norm,
    };
    let mut coords = Vec::new();
    let mut cur = vec![-n; w.dim];
    loop {
        if shape_norm.norm(&cur) <= n as f64 {
            coords.push(cur.clone());
        }
        let mut i = w.dim;
        loop {
            if i == 0 {
                break;
            }
            i -= 1;
            if cur[i] < n {
                cur[i] += 1;
                for c in cur.iter_mut().skip(i + 1) {
                    *c = -n;
                }
                break;
            }
            if i == 0 {
                cur.clear();
            }
        }
        if cur.is_empty() || w.dim == 0 {
            break;
        }
    }
    let depth = coords.iter().map(|c| n as f64 - shape_norm.norm(c)).collect();
    let label = format!("Z^{} window N={} ({:?})", w.dim, n, w.norm);
    let space = FiniteMetricSpace::lattice(label, w.dim, coords, w.norm);
    WindowedSpace::new(space, depth, n as f64, w.collar, true)
}

/// Action of the group generated by integer matrices (row-major) acting on
/// lattice coordinates. Fails if a matrix does not map the window to itself.
pub fn linear_action(ws: &WindowedSpace, gens: &[Vec<Vec<i64>>], names: &[&str]) -> Result<IsometricAction, ModelError> {
    let index: HashMap<Vec<i64>, usize> = (0..ws.len())
        .map(|i| (ws.space.lattice_coords(i).unwrap().to_vec(), i))
        .collect();
    let mut perms = Vec::with_capacity(gens.len());
    for m in gens {
        let mut p = Vec::with_capacity(ws.len());
        for i in 0..ws.len() {
            let x = ws.space.lattice_coords(i).unwrap();
            let y: Vec<i64> = m.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
            p.push(*index.get(&y).ok_or(ModelError::WindowNotInvariant)?);
        }
        perms.push(p);
    }
    let (group, perm) = GroupSpec::from_permutations(&perms, names, 512)?;
    Ok(IsometricAction {
        group,
        perm,
        tol_iso: ws.space.default_tol(),
    })
}

/// Reflection (a, b) ↦ (a + b, −b) of the hex lattice in axial
/// coordinates. It fixes the a-axis, a row of every site lattice, so
/// coverings by lattice sites have invariant sets all along the axis.
pub fn hex_reflection() -> Vec<Vec<i64>> {
    vec![vec![1, 1], vec![0, -1]]
}

/// Rotation by 120° of the hex lattice in axial coordinates.
pub fn hex_rotation() -> Vec<Vec<i64>> {
    vec![vec![-1, -1], vec![1, 0]]
}

/// Reflection x ↦ −x of the first coordinate.
pub fn axis_reflection(dim: usize) -> Vec<Vec<i64>> {
    (0..dim)
        .map(|r| (0..dim).map(|c| if r == c { if r == 0 { -1 } else { 1 } } else { 0 }).collect())
        .collect()
}

/// Sampled goalposts space in ℝ³ with the subspace metric, ℤ/2 swapping
/// the branches by x ↦ −x.
///
/// Two lines x = ±1/2, z = 0 carry, at every integer y = n ≥ 1, a copy of
/// Y_n: posts of length 1 from (±1/2, n, 0), a bar of length n joining the
/// post tops, and rays from the bar ends. Y_n lies in the plane spanned by
/// e_x and u_n = (0, −cos θ_n, sin θ_n) with θ_n = nπ/(2n+2).
pub fn goalposts(window: f64, spacing: f64) -> (WindowedSpace, IsometricAction) {
    let mut pts: Vec<[f64; 3]> = Vec::new();
    let inside = |p: &[f64; 3]| (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt() <= window + 1e-12;
    // only points with x > 0 are generated; mirrors are appended in pairs
    let steps = (window / spacing).floor() as i64;
    for i in -steps..=steps {
        let p = [0.5, i as f64 * spacing, 0.0];
        if inside(&p) {
            pts.push(p);
        }
    }
    let mut n = 1usize;
    loop {
        let base = [0.5, n as f64, 0.0];
        if !inside(&base) {
            break;
        }
        let theta = n as f64 * PI / (2.0 * n as f64 + 2.0);
        let u = [0.0, -theta.cos(), theta.sin()];
        let at = |x: f64, t: f64| [x, n as f64 + t * u[1], t * u[2]];
        // post, excluding its foot which lies on the line
        let mut t = spacing;
        while t <= 1.0 + 1e-12 {
            let p = at(0.5, t);
            if inside(&p) {
                pts.push(p);
            }
            t += spacing;
        }
        // bar from the post top outwards to x = n/2
        let mut x = 0.5 + spacing;
        while x <= n as f64 / 2.0 + 1e-12 {
            let p = at(x, 1.0);
            if inside(&p) {
                pts.push(p);
            }
            x += spacing;
        }
        // ray from the bar end
        let mut t = 1.0 + spacing;
        loop {
            let p = at(n as f64 / 2.0, t);
            if !inside(&p) {
                break;
            }
            pts.push(p);
            t += spacing;
        }
        n += 1;
    }
    let half = pts.len();
    let mut coords: Vec<Vec<f64>> = pts.iter().map(|p| p.to_vec()).collect();
    coords.extend(pts.iter().map(|p| vec![-p[0], p[1], p[2]]));
    let depth = coords
        .iter()
        .map(|c| window - (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt())
        .collect();
    let space = FiniteMetricSpace::euclidean(format!("goalposts W={window}"), 3, coords);
    let ws = WindowedSpace::new(space, depth, window, 2.0 * spacing, true);
    let swap: Vec<usize> = (0..2 * half).map(|i| if i < half { i + half } else { i - half }).collect();
    let action = IsometricAction {
        group: GroupSpec::cyclic(2),
        perm: vec![(0..2 * half).collect(), swap],
        tol_iso: 1e-6,
    };
    (ws, action)
}

/// Concentric rings of Poincaré-disk samples, symmetric under rotation by
/// 2π/order about the center. Ring j has hyperbolic radius j·step and
/// `order·(j)` points (the center is ring 0).
pub fn poincare_rings(rings: usize, step: f64, order: usize) -> (WindowedSpace, IsometricAction) {
    let mut coords = vec![(0.0, 0.0)];
    let mut radii = vec![0.0];
    for j in 1..=rings {
        let rho = j as f64 * step;
        let e = (rho / 2.0).tanh();
        let m = order * j;
        for k in 0..m {
            let a = 2.0 * PI * k as f64 / m as f64;
            coords.push((e * a.cos(), e * a.sin()));
            radii.push(rho);
        }
    }
    let window = rings as f64 * step;
    let depth = radii.iter().map(|r| window - r).collect();
    let n = coords.len();
    let space = FiniteMetricSpace::poincare_disk(format!("H^2 rings={rings}"), coords);
    let ws = WindowedSpace::new(space, depth, window, step, true);
    // rotation by one ring-1 step maps ring j index k to k + j
    let mut rot = vec![0usize; n];
    let mut offset = 1;
    for j in 1..=rings {
        let m = order * j;
        for k in 0..m {
            rot[offset + k] = offset + (k + j) % m;
        }
        offset += m;
    }
    let (group, perm) = GroupSpec::from_permutations(&[rot], &["r"], 64).expect("cyclic");
    let action = IsometricAction {
        group,
        perm,
        tol_iso: 1e-6,
    };
    (ws, action)
}

/// A finitely generated group we can enumerate balls of.
pub trait FgGroup {
    type Elem: Clone + Eq + Hash + Ord + std::fmt::Debug;
    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inv(&self, a: &Self::Elem) -> Self::Elem;
    fn show(&self, a: &Self::Elem) -> String;
}

/// ℤⁿ.
#[derive(Debug, Clone, Copy)]
pub struct FreeAbelian(pub usize);

impl FgGroup for FreeAbelian {
    type Elem = Vec<i64>;
    fn identity(&self) -> Vec<i64> {
        vec![0; self.0]
    }
    fn mul(&self, a: &Vec<i64>, b: &Vec<i64>) -> Vec<i64> {
        a.iter().zip(b).map(|(x, y)| x + y).collect()
    }
    fn inv(&self, a: &Vec<i64>) -> Vec<i64> {
        a.iter().map(|x| -x).collect()
    }
    fn show(&self, a: &Vec<i64>) -> String {
        crate::metric::fmt_coords(a)
    }
}

impl FreeAbelian {
    pub fn standard_generators(&self) -> Vec<Vec<i64>> {
        let mut g = Vec::new();
        for i in 0..self.0 {
            for s in [1, -1] {
                let mut e = vec![0; self.0];
                e[i] = s;
                g.push(e);
            }
        }
        g
    }
}

/// ℤ² ⋊ ℤ/2 with the generator of ℤ/2 swapping coordinates:
/// (v, ε)(w, δ) = (v + σ^ε w, ε + δ).
#[derive(Debug, Clone, Copy)]
pub struct SwapSemidirect;

impl FgGroup for SwapSemidirect {
    type Elem = (i64, i64, u8);
    fn identity(&self) -> Self::Elem {
        (0, 0, 0)
    }
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let (wx, wy) = if a.2 == 1 { (b.1, b.0) } else { (b.0, b.1) };
        (a.0 + wx, a.1 + wy, (a.2 + b.2) % 2)
    }
    fn inv(&self, a: &Self::Elem) -> Self::Elem {
        // (v, ε)^{-1} = (−σ^ε v, ε)
        if a.2 == 1 {
            (-a.1, -a.0, 1)
        } else {
            (-a.0, -a.1, 0)
        }
    }
    fn show(&self, a: &Self::Elem) -> String {
        format!("(({},{}),{})", a.0, a.1, a.2)
    }
}

impl SwapSemidirect {
    pub fn standard_generators(&self) -> Vec<(i64, i64, u8)> {
        vec![(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1)]
    }

    pub fn swap(&self) -> (i64, i64, u8) {
        (0, 0, 1)
    }
}

/// A Cayley-ball window with a finite subgroup acting by left
/// multiplication.
#[derive(Debug, Clone)]
pub struct CayleyWindow<E> {
    pub ws: WindowedSpace,
    pub elements: Vec<E>,
    /// Elements of the acting finite subgroup, identity first.
    pub subgroup: Vec<E>,
    pub action: IsometricAction,
    /// Word length of each element.
    pub word_length: Vec<u32>,
}

fn word_lengths<G: FgGroup>(g: &G, gens: &[G::Elem], radius: u32) -> BTreeMap<G::Elem, u32> {
    let mut len = BTreeMap::from([(g.identity(), 0u32)]);
    let mut queue = VecDeque::from([g.identity()]);
    while let Some(x) = queue.pop_front() {
        let l = len[&x];
        if l == radius {
            continue;
        }
        for s in gens {
            let y = g.mul(&x, s);
            if !len.contains_key(&y) {
                len.insert(y.clone(), l + 1);
                queue.push_back(y);
            }
        }
    }
    len
}

/// Elements within `radius` of the orbit H·e under the word metric, with
/// H (closure of `subgroup_gens`) acting by left multiplication. With H
/// trivial this is the ordinary ball of word length ≤ radius. The
/// H-saturation keeps the window invariant: left multiplication moves the
/// identity, so a plain ball is not preserved.
pub fn cayley_ball<G: FgGroup>(
    g: &G,
    generators: &[G::Elem],
    radius: u32,
    collar: f64,
    subgroup_gens: &[G::Elem],
) -> Result<CayleyWindow<G::Elem>, ModelError> {
    if radius < 1 {
        return Err(ModelError::RadiusTooSmall);
    }
    if generators.iter().any(|s| !generators.contains(&g.inv(s))) {
        return Err(ModelError::NonSymmetricGenerators);
    }
    // finite subgroup closure
    let mut sub = vec![g.identity()];
    let mut i = 0;
    while i < sub.len() {
        for h in subgroup_gens {
            let y = g.mul(&sub[i], h);
            if !sub.contains(&y) {
                sub.push(y);
                if sub.len() > 256 {
                    return Err(ModelError::Group(GroupError::TooLarge(256)));
                }
            }
        }
        i += 1;
    }
    let sub_len_max = sub.iter().map(|h| word_lengths(g, generators, 64).get(h).copied().unwrap_or(64)).max().unwrap_or(0);
    let lengths = word_lengths(g, generators, 2 * radius + 2 * sub_len_max + 2);
    let len_of = |x: &G::Elem| lengths.get(x).copied();
    // distance from x to the orbit H·e = min_h |h^{-1} x|
    let orbit_dist = |x: &G::Elem| sub.iter().filter_map(|h| len_of(&g.mul(&g.inv(h), x))).min();
    let mut elements: Vec<G::Elem> = lengths
        .keys()
        .filter(|x| orbit_dist(x).is_some_and(|d| d <= radius))
        .cloned()
        .collect();
    elements.sort();
    let pos: HashMap<G::Elem, usize> = elements.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
    let n = elements.len();
    let mut dist = vec![vec![0.0; n]; n];
    for a in 0..n {
        let ia = g.inv(&elements[a]);
        for b in a + 1..n {
            let d = len_of(&g.mul(&ia, &elements[b])).expect("ball enumerated to twice the radius") as f64;
            dist[a][b] = d;
            dist[b][a] = d;
        }
    }
    let depth: Vec<f64> = elements
        .iter()
        .map(|x| radius as f64 - orbit_dist(x).unwrap() as f64)
        .collect();
    let word_length = elements.iter().map(|x| len_of(x).unwrap()).collect();
    let points = elements.iter().map(|x| g.show(x)).collect();
    let space = FiniteMetricSpace::from_matrix(format!("Cayley ball R={radius}"), points, dist).expect("word metric");
    let ws = WindowedSpace::new(space, depth, radius as f64, collar, true);
    let perms: Vec<Vec<usize>> = sub
        .iter()
        .map(|h| elements.iter().map(|x| pos[&g.mul(h, x)]).collect())
        .collect();
    let names: Vec<String> = sub.iter().map(|h| g.show(h)).collect();
    let order = sub.len();
    let sub_pos: HashMap<G::Elem, usize> = sub.iter().enumerate().map(|(i, x)| (x.clone(), i)).collect();
    let mult = (0..order)
        .map(|a| (0..order).map(|b| sub_pos[&g.mul(&sub[a], &sub[b])]).collect())
        .collect();
    let group = GroupSpec::new(mult, 0, names)?;
    Ok(CayleyWindow {
        ws,
        elements,
        subgroup: sub,
        action: IsometricAction {
            group,
            perm: perms,
            tol_iso: 1e-9,
        },
        word_length,
    })
}

/// Re-expresses a ℤ²⋊ℤ/2 ball as a subset of ℤ³ with the ℓ¹ norm, via
/// (v, ε) ↦ (v₁, v₂, ε). The word length of (v, ε) is |v|₁ + ε, so the
/// two metrics agree; every pair is checked anyway. Lattice coordinates
/// let coverings be built from sites in the first two coordinates.
pub fn swap_semidirect_lattice(w: &CayleyWindow<(i64, i64, u8)>) -> Result<WindowedSpace, ModelError> {
    let coords: Vec<Vec<i64>> = w.elements.iter().map(|&(a, b, e)| vec![a, b, i64::from(e)]).collect();
    let space = FiniteMetricSpace::lattice(w.ws.space.label.clone(), 3, coords, LatticeNorm::Manhattan);
    let n = space.len();
    for i in 0..n {
        for j in i + 1..n {
            if space.dist(i, j) != w.ws.space.dist(i, j) {
                return Err(ModelError::CoordinateMetricMismatch(i, j));
            }
        }
    }
    Ok(WindowedSpace::new(space, w.ws.depth.clone(), w.ws.window_radius, w.ws.collar, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::validate_action;
    use crate::metric::validate_metric;

    #[test]
    fn integer_ball_is_a_path() {
        let z = FreeAbelian(1);
        let w = cayley_ball(&z, &z.standard_generators(), 5, 2.0, &[]).unwrap();
        assert_eq!(w.ws.len(), 11);
        let frontier: Vec<&str> = w.ws.frontier.iter().map(|&i| w.ws.space.points[i].as_str()).collect();
        assert_eq!(frontier, vec!["(-5)", "(-4)", "(4)", "(5)"]);
    }

    #[test]
    fn z2_ball_is_a_diamond() {
        let z = FreeAbelian(2);
        let r = 4;
        let w = cayley_ball(&z, &z.standard_generators(), r, 1.0, &[]).unwrap();
        // |{v : |v|_1 ≤ r}| = 2r² + 2r + 1
        assert_eq!(w.ws.len() as u32, 2 * r * r + 2 * r + 1);
        for (i, x) in w.elements.iter().enumerate() {
            assert_eq!(w.word_length[i] as i64, x[0].abs() + x[1].abs());
        }
    }

    #[test]
    fn semidirect_ball_action_is_valid() {
        let g = SwapSemidirect;
        let w = cayley_ball(&g, &g.standard_generators(), 4, 1.0, &[g.swap()]).unwrap();
        assert_eq!(w.action.order(), 2);
        assert!(validate_action(&w.action, &w.ws.space).unwrap().passed);
        assert!(validate_metric(&w.ws.space, 1e-9).passed || !validate_metric(&w.ws.space, 1e-9).exhaustive);
        // word length is |v|_1 + ε
        for (i, x) in w.elements.iter().enumerate() {
            assert_eq!(w.word_length[i] as i64, x.0.abs() + x.1.abs() + x.2 as i64);
        }
    }

    #[test]
    fn non_symmetric_generators_rejected() {
        let z = FreeAbelian(1);
        assert_eq!(
            cayley_ball(&z, &[vec![1]], 3, 1.0, &[]).unwrap_err(),
            ModelError::NonSymmetricGenerators
        );
    }

    #[test]
    fn hex_window_symmetries() {
        let ws = lattice_window(&LatticeWindow::ball(2, 4, LatticeNorm::Hex, 1.0));
        // hex ball of radius N has 3N² + 3N + 1 points
        assert_eq!(ws.len(), 61);
        let refl = linear_action(&ws, &[hex_reflection()], &["s"]).unwrap();
        let rot = linear_action(&ws, &[hex_rotation()], &["r"]).unwrap();
        assert_eq!(refl.order(), 2);
        assert_eq!(rot.order(), 3);
        assert!(validate_action(&refl, &ws.space).unwrap().passed);
        assert!(validate_action(&rot, &ws.space).unwrap().passed);
    }

    #[test]
    fn goalposts_is_symmetric() {
        let (ws, a) = goalposts(8.0, 0.5);
        assert!(validate_action(&a, &ws.space).unwrap().passed);
        assert!(ws.check_frontier().passed);
    }

    #[test]
    fn poincare_rotation_is_isometric() {
        let (ws, a) = poincare_rings(3, 0.7, 3);
        assert_eq!(a.order(), 3);
        assert!(validate_action(&a, &ws.space).unwrap().passed);
    }

    #[test]
    fn semidirect_ball_is_an_l1_lattice_set() {
        let g = SwapSemidirect;
        let w = cayley_ball(&g, &g.standard_generators(), 4, 1.0, &[g.swap()]).unwrap();
        let ws = swap_semidirect_lattice(&w).unwrap();
        assert_eq!(ws.len(), w.ws.len());
        assert_eq!(ws.frontier, w.ws.frontier);
        assert_eq!(ws.space.lattice_norm(), Some(LatticeNorm::Manhattan));
    }
}
