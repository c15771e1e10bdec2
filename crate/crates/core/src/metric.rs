//! Finite metric models and the windowing that stands in for properness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix is not square (row {row} has {len} entries, expected {n})")]
    NonSquareMatrix { row: usize, len: usize, n: usize },
    #[error("negative or non-finite distance {value} at ({i}, {j})")]
    NegativeDistance { i: usize, j: usize, value: f64 },
    #[error("point list has {points} ids but geometry has {geometry} points")]
    PointCountMismatch { points: usize, geometry: usize },
    #[error("subset is empty but the space is not")]
    EmptySubsetOfNonemptySpace,
    #[error("point index {0} out of range")]
    PointOutOfRange(usize),
    #[error("quasi-isometry parameters out of range: {0}")]
    BadParams(String),
}

/// Norms on integer lattices. `Hex` uses axial coordinates (a, b) with
/// |(a, b)| = max(|a|, |b|, |a + b|), the graph metric of the triangular
/// lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LatticeNorm {
    Chebyshev,
    Manhattan,
    Hex,
    Euclidean,
}

impl LatticeNorm {
    pub fn norm(self, v: &[i64]) -> f64 {
        match self {
            LatticeNorm::Chebyshev => v.iter().map(|x| x.abs()).max().unwrap_or(0) as f64,
            LatticeNorm::Manhattan => v.iter().map(|x| x.abs()).sum::<i64>() as f64,
            LatticeNorm::Hex => {
                let (a, b) = (v[0], v[1]);
                a.abs().max(b.abs()).max((a + b).abs()) as f64
            }
            LatticeNorm::Euclidean => (v.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt(),
        }
    }

    pub fn is_integral(self) -> bool {
        !matches!(self, LatticeNorm::Euclidean)
    }
}

#[derive(Debug, Clone)]
enum Geometry {
    Matrix(Vec<f64>),
    Lattice { dim: usize, coords: Vec<i64>, norm: LatticeNorm },
    Euclidean { dim: usize, coords: Vec<f64> },
    PoincareDisk(Vec<(f64, f64)>),
}

/// A finite metric space. Distances are computed on demand from the
/// underlying geometry so large lattice windows never need an n² matrix.
#[derive(Debug, Clone)]
pub struct FiniteMetricSpace {
    pub label: String,
    pub points: Vec<String>,
    geometry: Geometry,
}

impl FiniteMetricSpace {
    pub fn from_matrix(label: impl Into<String>, points: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self, MetricError> {
        let n = dist.len();
        if points.len() != n {
            return Err(MetricError::PointCountMismatch {
                points: points.len(),
                geometry: n,
            });
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in dist.iter().enumerate() {
            if row.len() != n {
                return Err(MetricError::NonSquareMatrix { row: i, len: row.len(), n });
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(MetricError::NegativeDistance { i, j, value: v });
                }
                flat.push(v);
            }
        }
        Ok(Self {
            label: label.into(),
            points,
            geometry: Geometry::Matrix(flat),
        })
    }

    pub fn lattice(label: impl Into<String>, dim: usize, coords: Vec<Vec<i64>>, norm: LatticeNorm) -> Self {
        assert!(norm != LatticeNorm::Hex || dim == 2, "hex norm needs dimension 2");
        let points = coords.iter().map(|c| fmt_coords(c)).collect();
        Self {
            label: label.into(),
            points,
            geometry: Geometry::Lattice {
                dim,
                coords: coords.into_iter().flatten().collect(),
                norm,
            },
        }
    }

    pub fn euclidean(label: impl Into<String>, dim: usize, coords: Vec<Vec<f64>>) -> Self {
        let points = coords
            .iter()
            .map(|c| format!("({})", c.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(",")))
            .collect();
        Self {
            label: label.into(),
            points,
            geometry: Geometry::Euclidean {
                dim,
                coords: coords.into_iter().flatten().collect(),
            },
        }
    }

    /// Points of the open unit disk with the hyperbolic (curvature −1) metric.
    pub fn poincare_disk(label: impl Into<String>, coords: Vec<(f64, f64)>) -> Self {
        let points = coords.iter().map(|(x, y)| format!("({x:.4},{y:.4})")).collect();
        Self {
            label: label.into(),
            points,
            geometry: Geometry::PoincareDisk(coords),
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Matrix(d) => d[i * self.points.len() + j],
            Geometry::Lattice { dim, coords, norm } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                match norm {
                    LatticeNorm::Chebyshev => a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0) as f64,
                    LatticeNorm::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<i64>() as f64,
                    _ => {
                        let v: Vec<i64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
                        norm.norm(&v)
                    }
                }
            }
            Geometry::Euclidean { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
            }
            Geometry::PoincareDisk(c) => {
                let (x1, y1) = c[i];
                let (x2, y2) = c[j];
                let num = (x1 - x2).powi(2) + (y1 - y2).powi(2);
                let den = (1.0 - x1 * x1 - y1 * y1) * (1.0 - x2 * x2 - y2 * y2);
                (1.0 + 2.0 * num / den).acosh()
            }
        }
    }

    /// True when every distance is an integer by construction.
    pub fn is_integral(&self) -> bool {
        match &self.geometry {
            Geometry::Matrix(d) => d.iter().all(|x| x.fract() == 0.0),
            Geometry::Lattice { norm, .. } => norm.is_integral(),
            _ => false,
        }
    }

    /// Default triangle/isometry tolerance for this geometry.
    pub fn default_tol(&self) -> f64 {
        if self.is_integral() {
            1e-9
        } else {
            1e-6
        }
    }

    pub fn lattice_coords(&self, i: usize) -> Option<&[i64]> {
        match &self.geometry {
            Geometry::Lattice { dim, coords, .. } => Some(&coords[i * dim..(i + 1) * dim]),
            _ => None,
        }
    }

    pub fn lattice_norm(&self) -> Option<LatticeNorm> {
        match &self.geometry {
            Geometry::Lattice { norm, .. } => Some(*norm),
            _ => None,
        }
    }

    pub fn real_coords(&self, i: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Euclidean { dim, coords } => Some(&coords[i * dim..(i + 1) * dim]),
            _ => None,
        }
    }

    /// Max distance from `x` to any point of `set`.
    pub fn eccentricity(&self, x: usize, set: &[usize]) -> f64 {
        set.iter().map(|&y| self.dist(x, y)).fold(0.0, f64::max)
    }

    /// Exact diameter of a subset.
    pub fn diameter(&self, set: &[usize]) -> f64 {
        let mut d: f64 = 0.0;
        for (a, &x) in set.iter().enumerate() {
            for &y in &set[a + 1..] {
                d = d.max(self.dist(x, y));
            }
        }
        d
    }

    pub fn dist_to_set(&self, x: usize, set: &[usize]) -> f64 {
        set.iter().map(|&y| self.dist(x, y)).fold(f64::INFINITY, f64::min)
    }

    /// A copy of the space restricted to `subset`, as an explicit matrix.
    pub fn restrict(&self, subset: &[usize], label: impl Into<String>) -> FiniteMetricSpace {
        let dist = subset
            .iter()
            .map(|&i| subset.iter().map(|&j| self.dist(i, j)).collect())
            .collect();
        let points = subset.iter().map(|&i| self.points[i].clone()).collect();
        FiniteMetricSpace::from_matrix(label, points, dist).expect("restriction of a metric")
    }
}

pub fn fmt_coords(c: &[i64]) -> String {
    format!("({})", c.iter().map(i64::to_string).collect::<Vec<_>>().join(","))
}

/// Outcome of a validation pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    /// Number of constraints evaluated.
    pub checked: u64,
    pub exhaustive: bool,
    /// First few violations, human readable.
    pub violations: Vec<String>,
    pub violation_count: u64,
}

impl ValidationReport {
    pub fn new(exhaustive: bool) -> Self {
        Self {
            passed: true,
            checked: 0,
            exhaustive,
            violations: Vec::new(),
            violation_count: 0,
        }
    }

    pub fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.passed = false;
        self.violation_count += 1;
        if self.violations.len() < 32 {
            self.violations.push(msg());
        }
    }
}

/// Spaces up to this size get every triple checked.
pub const EXHAUSTIVE_LIMIT: usize = 220;
const SAMPLED_TRIPLES: u64 = 400_000;

/// Symmetry, zero diagonal and triangle inequality. Exhaustive for small
/// spaces; larger ones get a seeded random sample of triples plus every
/// pair involving a sampled point, and the report says so.
pub fn validate_metric(m: &FiniteMetricSpace, tol: f64) -> ValidationReport {
    let n = m.len();
    let exhaustive = n <= EXHAUSTIVE_LIMIT;
    let mut rep = ValidationReport::new(exhaustive);
    let triangle = |i: usize, j: usize, k: usize, rep: &mut ValidationReport| {
        rep.checked += 1;
        if m.dist(i, k) > m.dist(i, j) + m.dist(j, k) + tol {
            rep.fail(|| format!("triangle ({},{},{})", m.points[i], m.points[j], m.points[k]));
        }
    };
    if exhaustive {
        for i in 0..n {
            if m.dist(i, i).abs() > tol {
                rep.fail(|| format!("d({0},{0}) != 0", m.points[i]));
            }
            for j in 0..n {
                rep.checked += 1;
                if (m.dist(i, j) - m.dist(j, i)).abs() > tol {
                    rep.fail(|| format!("asymmetric ({},{})", m.points[i], m.points[j]));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    triangle(i, j, k, &mut rep);
                }
            }
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for _ in 0..SAMPLED_TRIPLES {
            let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
            rep.checked += 1;
            if (m.dist(i, j) - m.dist(j, i)).abs() > tol || m.dist(i, i).abs() > tol {
                rep.fail(|| format!("asymmetric or nonzero diagonal at ({},{})", m.points[i], m.points[j]));
            }
            triangle(i, j, k, &mut rep);
        }
    }
    rep
}

/// Smallest c such that every point of `whole` is within c of `sub`,
/// with the farthest point as witness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Density {
    pub required: f64,
    pub witness: Option<usize>,
}

pub fn coarse_density(m: &FiniteMetricSpace, sub: &[usize], whole: &[usize]) -> Result<Density, MetricError> {
    if sub.is_empty() {
        if whole.is_empty() {
            return Ok(Density {
                required: 0.0,
                witness: None,
            });
        }
        return Err(MetricError::EmptySubsetOfNonemptySpace);
    }
    let mut best = Density {
        required: 0.0,
        witness: None,
    };
    for &x in whole {
        let d = m.dist_to_set(x, sub);
        if d > best.required {
            best = Density {
                required: d,
                witness: Some(x),
            };
        }
    }
    Ok(best)
}

/// Whether `sub` is c-dense in all of `m`; on failure returns the farthest
/// point.
pub fn check_coarse_density(sub: &[usize], m: &FiniteMetricSpace, c: f64) -> Result<(bool, Option<usize>), MetricError> {
    let whole: Vec<usize> = (0..m.len()).collect();
    let d = coarse_density(m, sub, &whole)?;
    if d.required <= c + 1e-12 {
        Ok((true, None))
    } else {
        Ok((false, d.witness))
    }
}

/// Constants (Λ, C) of a quasi-isometric embedding plus a closeness bound
/// for coarsely equivariant maps. Isometric actions use (1, 0, 0).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiIsometryParams {
    pub lambda: f64,
    pub c: f64,
    pub closeness: f64,
}

impl QuasiIsometryParams {
    pub fn new(lambda: f64, c: f64, closeness: f64) -> Result<Self, MetricError> {
        if !(lambda >= 1.0 && c >= 0.0 && closeness >= 0.0) {
            return Err(MetricError::BadParams(format!("lambda={lambda}, c={c}, closeness={closeness}")));
        }
        Ok(Self { lambda, c, closeness })
    }

    pub fn isometric() -> Self {
        Self {
            lambda: 1.0,
            c: 0.0,
            closeness: 0.0,
        }
    }
}

/// Checks (1/Λ)d(x,y) − C ≤ d(f x, f y) ≤ Λ d(x,y) + C on every pair.
pub fn check_quasi_isometric_embedding(
    src: &FiniteMetricSpace,
    dst: &FiniteMetricSpace,
    map: &[usize],
    params: QuasiIsometryParams,
) -> ValidationReport {
    let mut rep = ValidationReport::new(true);
    for x in 0..src.len() {
        for y in x + 1..src.len() {
            rep.checked += 1;
            let d = src.dist(x, y);
            let e = dst.dist(map[x], map[y]);
            if e > params.lambda * d + params.c + 1e-9 || e < d / params.lambda - params.c - 1e-9 {
                rep.fail(|| format!("pair ({},{}): {d} -> {e}", src.points[x], src.points[y]));
            }
        }
    }
    rep
}

/// A finite window of an unbounded proper space.
///
/// `depth[x]` is the distance from `x` to the edge of the window; points
/// with depth below `collar` form the frontier, the finite stand-in for
/// "infinity" in locally finite homology.
#[derive(Debug, Clone)]
pub struct WindowedSpace {
    pub space: FiniteMetricSpace,
    pub frontier: Vec<usize>,
    pub window_radius: f64,
    pub collar: f64,
    pub depth: Vec<f64>,
    /// False for compact models, whose frontier may be empty.
    pub unbounded: bool,
}

impl WindowedSpace {
    pub fn new(space: FiniteMetricSpace, depth: Vec<f64>, window_radius: f64, collar: f64, unbounded: bool) -> Self {
        let frontier = (0..space.len()).filter(|&i| depth[i] < collar).collect();
        Self {
            space,
            frontier,
            window_radius,
            collar,
            depth,
            unbounded,
        }
    }

    /// A bounded model: no frontier.
    pub fn compact(space: FiniteMetricSpace) -> Self {
        let n = space.len();
        let all: Vec<usize> = (0..n).collect();
        let radius = all.iter().map(|&i| space.eccentricity(i, &all)).fold(0.0, f64::max);
        Self {
            space,
            frontier: Vec::new(),
            window_radius: radius,
            collar: 0.0,
            depth: vec![f64::INFINITY; n],
            unbounded: false,
        }
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    pub fn is_frontier(&self, x: usize) -> bool {
        self.frontier.binary_search(&x).is_ok()
    }

    /// Re-derives the frontier from depths and compares.
    pub fn check_frontier(&self) -> ValidationReport {
        let mut rep = ValidationReport::new(true);
        for x in 0..self.len() {
            rep.checked += 1;
            let want = self.depth[x] < self.collar;
            if want != self.is_frontier(x) {
                rep.fail(|| format!("frontier membership wrong at {}", self.space.points[x]));
            }
        }
        if self.unbounded && self.frontier.is_empty() && !self.is_empty() {
            rep.fail(|| "unbounded model with empty frontier".to_string());
        }
        rep
    }

    /// Window diameter, used to encode "no bound" in serialized output.
    pub fn diameter_bound(&self) -> f64 {
        2.0 * self.window_radius
    }
}
