//! Finite groups acting by isometries, and orbit spaces.

use serde::Serialize;
use thiserror::Error;

use crate::group::{is_permutation, GroupError, GroupSpec};
use crate::metric::{validate_metric, FiniteMetricSpace, ValidationReport, WindowedSpace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ActionError {
    #[error("permutation for element {0} is not a bijection of the point set")]
    NotAPermutation(usize),
    #[error("group law violated: {0}")]
    GroupLawViolation(String),
    #[error("action failed validation: {0}")]
    InvalidAction(String),
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// `perm[g][x]` is g·x.
#[derive(Debug, Clone, Serialize)]
pub struct IsometricAction {
    pub group: GroupSpec,
    pub perm: Vec<Vec<usize>>,
    pub tol_iso: f64,
}

impl IsometricAction {
    pub fn trivial(n: usize) -> Self {
        Self {
            group: GroupSpec::trivial(),
            perm: vec![(0..n).collect()],
            tol_iso: 1e-9,
        }
    }

    pub fn order(&self) -> usize {
        self.group.order()
    }

    #[inline]
    pub fn apply(&self, g: usize, x: usize) -> usize {
        self.perm[g][x]
    }

    pub fn orbit(&self, x: usize) -> Vec<usize> {
        let mut o: Vec<usize> = self.perm.iter().map(|p| p[x]).collect();
        o.sort_unstable();
        o.dedup();
        o
    }

    /// Orbits ordered by their smallest point.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let n = self.perm[0].len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for x in 0..n {
            if !seen[x] {
                let o = self.orbit(x);
                for &y in &o {
                    seen[y] = true;
                }
                out.push(o);
            }
        }
        out
    }

    /// The same action restricted to a subgroup given by element indices.
    pub fn restrict(&self, sub: &[usize]) -> IsometricAction {
        IsometricAction {
            group: self.group.restrict(sub),
            perm: sub.iter().map(|&g| self.perm[g].clone()).collect(),
            tol_iso: self.tol_iso,
        }
    }
}

/// Group laws, identity axiom, homomorphism property and isometry bound.
pub fn validate_action(a: &IsometricAction, m: &FiniteMetricSpace) -> Result<ValidationReport, ActionError> {
    a.group
        .validate()
        .map_err(|e| ActionError::GroupLawViolation(e.to_string()))?;
    let n = m.len();
    if a.perm.len() != a.group.order() {
        return Err(ActionError::NotAPermutation(a.perm.len()));
    }
    for (g, p) in a.perm.iter().enumerate() {
        if !is_permutation(p, n) {
            return Err(ActionError::NotAPermutation(g));
        }
    }
    let mut rep = ValidationReport::new(true);
    let e = a.group.identity;
    for x in 0..n {
        rep.checked += 1;
        if a.perm[e][x] != x {
            rep.fail(|| format!("identity moves {}", m.points[x]));
        }
    }
    let order = a.group.order();
    for g in 0..order {
        for h in 0..order {
            let gh = a.group.mul(g, h);
            rep.checked += 1;
            if (0..n).any(|x| a.perm[g][a.perm[h][x]] != a.perm[gh][x]) {
                rep.fail(|| format!("perm({})∘perm({}) != perm({})", a.group.names[g], a.group.names[h], a.group.names[gh]));
            }
        }
    }
    for g in 0..order {
        if g == e {
            continue;
        }
        let p = &a.perm[g];
        for x in 0..n {
            for y in x + 1..n {
                rep.checked += 1;
                let d0 = m.dist(x, y);
                let d1 = m.dist(p[x], p[y]);
                if (d0 - d1).abs() > a.tol_iso {
                    rep.fail(|| {
                        format!(
                            "{} distorts ({},{}): {} -> {}",
                            a.group.names[g], m.points[x], m.points[y], d0, d1
                        )
                    });
                }
            }
        }
    }
    Ok(rep)
}

/// X/G with the orbit metric d*(x̄, ȳ) = min_g d(x, g y).
#[derive(Debug, Clone)]
pub struct OrbitSpace {
    pub base: FiniteMetricSpace,
    /// Orbit id of each point.
    pub proj: Vec<usize>,
    /// Points of each orbit, sorted; the first is the representative.
    pub orbits: Vec<Vec<usize>>,
}

impl OrbitSpace {
    /// Windowed version: orbits inherit depth (the action preserves the window).
    pub fn windowed(&self, ws: &WindowedSpace) -> WindowedSpace {
        let depth = self.orbits.iter().map(|o| ws.depth[o[0]]).collect();
        WindowedSpace::new(self.base.clone(), depth, ws.window_radius, ws.collar, ws.unbounded)
    }
}

pub fn orbit_distance(m: &FiniteMetricSpace, a: &IsometricAction, x: usize, y: usize) -> f64 {
    a.perm.iter().map(|p| m.dist(x, p[y])).fold(f64::INFINITY, f64::min)
}

pub fn orbit_space(m: &FiniteMetricSpace, a: &IsometricAction) -> Result<OrbitSpace, ActionError> {
    let rep = validate_action(a, m)?;
    if !rep.passed {
        return Err(ActionError::InvalidAction(rep.violations.join("; ")));
    }
    let orbits = a.orbits();
    let mut proj = vec![0; m.len()];
    for (i, o) in orbits.iter().enumerate() {
        for &x in o {
            proj[x] = i;
        }
    }
    let k = orbits.len();
    let mut dist = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let d = orbit_distance(m, a, orbits[i][0], orbits[j][0]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let names = orbits.iter().map(|o| format!("[{}]", m.points[o[0]])).collect();
    let base = FiniteMetricSpace::from_matrix(format!("{}/G", m.label), names, dist)
        .map_err(|e| ActionError::InvalidAction(e.to_string()))?;
    let check = validate_metric(&base, m.default_tol());
    if !check.passed {
        return Err(ActionError::InvalidAction(format!("orbit metric: {}", check.violations.join("; "))));
    }
    Ok(OrbitSpace { base, proj, orbits })
}

/// d*(p x, p y) ≤ d(x, y) on every pair.
pub fn check_projection_nonexpanding(m: &FiniteMetricSpace, q: &OrbitSpace) -> bool {
    (0..m.len()).all(|x| (0..m.len()).all(|y| q.base.dist(q.proj[x], q.proj[y]) <= m.dist(x, y) + 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::LatticeNorm;

    fn path(k: i64) -> FiniteMetricSpace {
        FiniteMetricSpace::lattice("path", 1, (-k..=k).map(|x| vec![x]).collect(), LatticeNorm::Chebyshev)
    }

    fn flip(n: usize) -> IsometricAction {
        IsometricAction {
            group: GroupSpec::cyclic(2),
            perm: vec![(0..n).collect(), (0..n).rev().collect()],
            tol_iso: 1e-9,
        }
    }

    #[test]
    fn trivial_group_passes_and_quotient_is_copy() {
        let m = path(3);
        let a = IsometricAction::trivial(m.len());
        assert!(validate_action(&a, &m).unwrap().passed);
        let q = orbit_space(&m, &a).unwrap();
        assert_eq!(q.base.len(), m.len());
        for i in 0..m.len() {
            for j in 0..m.len() {
                assert_eq!(q.base.dist(i, j), m.dist(i, j));
            }
        }
    }

    #[test]
    fn swap_with_fixed_equidistant_point() {
        let d = vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]];
        let m = FiniteMetricSpace::from_matrix("tri", vec!["a".into(), "b".into(), "c".into()], d).unwrap();
        let a = IsometricAction {
            group: GroupSpec::cyclic(2),
            perm: vec![vec![0, 1, 2], vec![1, 0, 2]],
            tol_iso: 1e-9,
        };
        assert!(validate_action(&a, &m).unwrap().passed);
    }

    #[test]
    fn non_isometric_swap_fails_with_witness() {
        let m = path(1); // points -1, 0, 1
        let a = IsometricAction {
            group: GroupSpec::cyclic(2),
            perm: vec![vec![0, 1, 2], vec![1, 0, 2]],
            tol_iso: 1e-9,
        };
        let r = validate_action(&a, &m).unwrap();
        assert!(!r.passed);
        assert!(r.violations[0].contains("distorts"));
    }

    #[test]
    fn folding_path_gives_half_line() {
        let k = 4;
        let m = path(k);
        let q = orbit_space(&m, &flip(m.len())).unwrap();
        assert_eq!(q.base.len(), k as usize + 1);
        // orbit i has representative -k + i, at distance k - i from the fold
        for i in 0..q.base.len() {
            for j in 0..q.base.len() {
                assert_eq!(q.base.dist(i, j), (i as f64 - j as f64).abs());
            }
        }
        assert!(check_projection_nonexpanding(&m, &q));
    }

    #[test]
    fn transitive_rotation_has_one_orbit() {
        let s = 2.0;
        let d = vec![vec![0.0, s, s], vec![s, 0.0, s], vec![s, s, 0.0]];
        let m = FiniteMetricSpace::from_matrix("tri", vec!["a".into(), "b".into(), "c".into()], d).unwrap();
        let a = IsometricAction {
            group: GroupSpec::cyclic(3),
            perm: vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
            tol_iso: 1e-9,
        };
        assert_eq!(orbit_space(&m, &a).unwrap().base.len(), 1);
    }

    #[test]
    fn bad_permutation_is_an_error() {
        let m = path(1);
        let a = IsometricAction {
            group: GroupSpec::cyclic(2),
            perm: vec![vec![0, 1, 2], vec![0, 0, 2]],
            tol_iso: 1e-9,
        };
        assert_eq!(validate_action(&a, &m).unwrap_err(), ActionError::NotAPermutation(1));
    }
}
