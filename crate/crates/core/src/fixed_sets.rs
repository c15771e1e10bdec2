//! Coarse fixed sets X^G_k and the scan for where they stabilize.

use serde::Serialize;
use thiserror::Error;

use crate::action::IsometricAction;
use crate::metric::{coarse_density, MetricError, WindowedSpace};
use crate::models::{CayleyWindow, FgGroup};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FixedSetError {
    #[error("no scales to scan")]
    NoScales,
    #[error("scales must be non-negative and increasing")]
    BadScales,
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// max_g d(x, g·x).
pub fn displacement(ws: &WindowedSpace, a: &IsometricAction, x: usize) -> f64 {
    a.perm.iter().map(|p| ws.space.dist(x, p[x])).fold(0.0, f64::max)
}

/// X^G_k = {x : d(x, g·x) ≤ k for all g}.
pub fn fixed_set(ws: &WindowedSpace, a: &IsometricAction, k: f64) -> Vec<usize> {
    let tol = ws.space.default_tol();
    (0..ws.len()).filter(|&x| displacement(ws, a, x) <= k + tol).collect()
}

/// 0 followed by powers of two up to half the window radius.
pub fn default_scales(window_radius: f64) -> Vec<f64> {
    let mut s = vec![0.0];
    let mut k = 1.0;
    while k <= window_radius / 2.0 {
        s.push(k);
        k *= 2.0;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Verdict {
    Stable { k0: f64, c0: f64 },
    NotStableInWindow,
    AllEmpty,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilizationReport {
    pub scales: Vec<f64>,
    pub sizes: Vec<usize>,
    /// `density_matrix[i][j]` for i < j: smallest c with X_{k_i} c-dense
    /// in X_{k_j}; `None` when X_{k_i} is empty but X_{k_j} is not.
    pub density_matrix: Vec<Vec<Option<f64>>>,
    /// The same matrix computed inside the half-radius window.
    pub inner_density_matrix: Vec<Vec<Option<f64>>>,
    pub density_cap: f64,
    pub verdict: Verdict,
    /// Why each candidate k_i was rejected, if it was.
    pub rejections: Vec<Option<String>>,
}

impl StabilizationReport {
    /// max over j > i of the density of X_{k_i} in X_{k_j}.
    pub fn row_max(&self, i: usize) -> Option<f64> {
        row_max(&self.density_matrix, i)
    }

    pub fn stable_index(&self) -> Option<usize> {
        match self.verdict {
            Verdict::Stable { k0, .. } => self.scales.iter().position(|&s| s == k0),
            _ => None,
        }
    }
}

fn row_max(m: &[Vec<Option<f64>>], i: usize) -> Option<f64> {
    let mut best = 0.0f64;
    for j in i + 1..m.len() {
        best = best.max(m[i][j]?);
    }
    Some(best)
}

fn density_matrix(ws: &WindowedSpace, sets: &[Vec<usize>]) -> Vec<Vec<Option<f64>>> {
    let n = sets.len();
    let mut m = vec![vec![Some(0.0); n]; n];
    for i in 0..n {
        if sets[i].is_empty() {
            for j in i + 1..n {
                m[i][j] = sets[j].is_empty().then_some(0.0);
            }
            continue;
        }
        // distance from every point to X_{k_i}, then a max per later set
        let d: Vec<f64> = (0..ws.len()).map(|x| ws.space.dist_to_set(x, &sets[i])).collect();
        for j in i + 1..n {
            m[i][j] = Some(sets[j].iter().map(|&x| d[x]).fold(0.0, f64::max));
        }
    }
    m
}

/// Scan X^G_k over the given scales.
///
/// A scale k_i (not the last) is accepted as stable with constant
/// c = max_{j>i} density(i, j) when c ≤ density_cap and c does not grow
/// when the window is doubled, that is, c equals the same maximum computed
/// inside the half-radius window. The second condition is the finite
/// shadow of "bounded independently of where one looks": a fixed set that
/// only stabilizes because the window cuts it off shows a larger constant
/// in the larger window.
pub fn stabilization_scan(
    ws: &WindowedSpace,
    a: &IsometricAction,
    scales: &[f64],
    density_cap: Option<f64>,
) -> Result<StabilizationReport, FixedSetError> {
    if scales.is_empty() {
        return Err(FixedSetError::NoScales);
    }
    if scales[0] < 0.0 || scales.windows(2).any(|w| w[1] <= w[0]) {
        return Err(FixedSetError::BadScales);
    }
    let cap = density_cap.unwrap_or(ws.window_radius / 4.0);
    let sets: Vec<Vec<usize>> = scales.iter().map(|&k| fixed_set(ws, a, k)).collect();
    let sizes = sets.iter().map(Vec::len).collect();
    let matrix = density_matrix(ws, &sets);
    let inner_keep = |x: &usize| ws.depth[*x] >= ws.window_radius / 2.0 - 1e-9;
    let inner_sets: Vec<Vec<usize>> = sets.iter().map(|s| s.iter().copied().filter(inner_keep).collect()).collect();
    let inner = density_matrix(ws, &inner_sets);
    let tol = ws.space.default_tol().max(1e-9);

    let mut rejections = vec![None; scales.len()];
    let mut verdict = if sets.iter().all(Vec::is_empty) {
        Verdict::AllEmpty
    } else {
        Verdict::NotStableInWindow
    };
    if verdict != Verdict::AllEmpty {
        for i in 0..scales.len() {
            if i + 1 == scales.len() {
                rejections[i] = Some("no larger scale to compare with".into());
                continue;
            }
            if sets[i].is_empty() {
                rejections[i] = Some("empty".into());
                continue;
            }
            let Some(c) = row_max(&matrix, i) else {
                rejections[i] = Some("a larger fixed set is not dense".into());
                continue;
            };
            if c > cap + tol {
                rejections[i] = Some(format!("density {c} exceeds cap {cap}"));
                continue;
            }
            match row_max(&inner, i) {
                Some(ci) if c <= ci + tol => {
                    verdict = Verdict::Stable { k0: scales[i], c0: c };
                    break;
                }
                Some(ci) => rejections[i] = Some(format!("density grows with the window: {ci} -> {c}")),
                None => rejections[i] = Some("empty in the inner window".into()),
            }
        }
    }
    Ok(StabilizationReport {
        scales: scales.to_vec(),
        sizes,
        density_matrix: matrix,
        inner_density_matrix: inner,
        density_cap: cap,
        verdict,
        rejections,
    })
}

/// The representative X^G_{k0} of the bounded fixed set, if stable.
pub fn bounded_fixed_set(ws: &WindowedSpace, a: &IsometricAction, report: &StabilizationReport) -> Option<Vec<usize>> {
    match report.verdict {
        Verdict::Stable { k0, .. } => Some(fixed_set(ws, a, k0)),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SubgroupScan {
    pub subgroup: Vec<usize>,
    pub verdict: Verdict,
}

/// Per-subgroup stabilization. The action is tame when every subgroup's
/// fixed sets stabilize.
#[derive(Debug, Clone, Serialize)]
pub struct TamenessReport {
    pub subgroups: Vec<SubgroupScan>,
    pub tame: bool,
}

pub fn tameness(ws: &WindowedSpace, a: &IsometricAction, scales: &[f64]) -> Result<TamenessReport, FixedSetError> {
    let mut subgroups = Vec::new();
    for h in a.group.subgroups() {
        let r = stabilization_scan(ws, &a.restrict(&h), scales, None)?;
        subgroups.push(SubgroupScan {
            subgroup: h,
            verdict: r.verdict,
        });
    }
    let tame = subgroups.iter().all(|s| matches!(s.verdict, Verdict::Stable { .. } | Verdict::AllEmpty));
    Ok(TamenessReport { subgroups, tame })
}

/// Elements g ≠ e whose displacement sup_x d(x, g·x) is the same in the
/// full and the half-radius window (bounded displacement), i.e. the
/// witnesses that the action is coarsely ineffective.
pub fn coarsely_trivial_elements(ws: &WindowedSpace, a: &IsometricAction) -> Vec<usize> {
    let inner: Vec<usize> = (0..ws.len()).filter(|&x| ws.depth[x] >= ws.window_radius / 2.0 - 1e-9).collect();
    (0..a.order())
        .filter(|&g| g != a.group.identity)
        .filter(|&g| {
            let full = (0..ws.len()).map(|x| ws.space.dist(x, a.perm[g][x])).fold(0.0, f64::max);
            let half = inner.iter().map(|&x| ws.space.dist(x, a.perm[g][x])).fold(0.0, f64::max);
            full <= half + 1e-9
        })
        .collect()
}

/// Constants of the orbit-projection inequality when the bounded fixed
/// set is the whole window.
#[derive(Debug, Clone, Serialize)]
pub struct IneffectiveReport {
    pub k0: f64,
    pub c0: f64,
    /// max over pairs of d(x, y) − d*(p(x), p(y)).
    pub max_excess: f64,
    pub holds: bool,
}

/// When X^G_{k₀} is every point, check d(x, y) ≤ d*(p(x), p(y)) + 2c₀ + k₀
/// over all pairs, d* being the orbit distance. `None` when the bounded
/// fixed set is not the whole window.
pub fn coarsely_ineffective_check(
    ws: &WindowedSpace,
    a: &IsometricAction,
    report: &StabilizationReport,
) -> Option<IneffectiveReport> {
    let Verdict::Stable { k0, c0 } = report.verdict else {
        return None;
    };
    if fixed_set(ws, a, k0).len() != ws.len() {
        return None;
    }
    let n = ws.len();
    let mut max_excess = 0.0f64;
    for x in 0..n {
        for y in x + 1..n {
            let orbit = a.perm.iter().map(|p| ws.space.dist(x, p[y])).fold(f64::INFINITY, f64::min);
            max_excess = max_excess.max(ws.space.dist(x, y) - orbit);
        }
    }
    Some(IneffectiveReport {
        k0,
        c0,
        max_excess,
        holds: max_excess <= 2.0 * c0 + k0 + ws.space.default_tol(),
    })
}

/// Coarsely semifree: every nontrivial subgroup has the same bounded fixed
/// set as the whole group (up to the density cap).
pub fn is_coarsely_semifree(ws: &WindowedSpace, a: &IsometricAction, scales: &[f64]) -> Result<bool, FixedSetError> {
    let whole = stabilization_scan(ws, a, scales, None)?;
    let Some(xg) = bounded_fixed_set(ws, a, &whole) else {
        return Ok(false);
    };
    for h in a.group.subgroups() {
        if h.len() == 1 || h.len() == a.order() {
            continue;
        }
        let ah = a.restrict(&h);
        let r = stabilization_scan(ws, &ah, scales, None)?;
        let Some(xh) = bounded_fixed_set(ws, &ah, &r) else {
            return Ok(false);
        };
        if xg.is_empty() != xh.is_empty() {
            return Ok(false);
        }
        if !xg.is_empty() && coarse_density(&ws.space, &xg, &xh)?.required > whole.density_cap {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Centralizer of a finite subgroup H inside a Cayley window, compared with
/// the coarse fixed sets X^H_k.
#[derive(Debug, Clone, Serialize)]
pub struct CentralizerReport {
    pub centralizer: Vec<usize>,
    pub scales: Vec<f64>,
    /// Density of the centralizer in X^H_k per scale.
    pub densities: Vec<f64>,
    pub constant: f64,
    pub density_cap: f64,
    pub certified: bool,
}

pub fn centralizer_subspace<G: FgGroup>(
    g: &G,
    w: &CayleyWindow<G::Elem>,
    scales: &[f64],
) -> Result<CentralizerReport, FixedSetError> {
    if scales.is_empty() {
        return Err(FixedSetError::NoScales);
    }
    let centralizer: Vec<usize> = (0..w.elements.len())
        .filter(|&i| {
            let z = &w.elements[i];
            w.subgroup.iter().all(|h| g.mul(h, z) == g.mul(z, h))
        })
        .collect();
    let mut densities = Vec::with_capacity(scales.len());
    for &k in scales {
        let xk = fixed_set(&w.ws, &w.action, k);
        let c = if xk.is_empty() {
            0.0
        } else {
            coarse_density(&w.ws.space, &centralizer, &xk)?.required
        };
        densities.push(c);
    }
    let constant = densities.iter().copied().fold(0.0, f64::max);
    let density_cap = w.ws.window_radius / 4.0;
    Ok(CentralizerReport {
        centralizer,
        scales: scales.to_vec(),
        densities,
        constant,
        density_cap,
        certified: constant <= density_cap + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::GroupSpec;
    use crate::metric::{FiniteMetricSpace, LatticeNorm};
    use crate::models::{axis_reflection, lattice_window, linear_action, LatticeWindow};

    #[test]
    fn default_scales_are_powers_of_two() {
        assert_eq!(default_scales(16.0), vec![0.0, 1.0, 2.0, 4.0, 8.0]);
        assert_eq!(default_scales(1.0), vec![0.0]);
    }

    #[test]
    fn reflection_of_grid_stabilizes_at_zero() {
        let ws = lattice_window(&LatticeWindow::square(2, 8, LatticeNorm::Chebyshev, 1.0));
        let a = linear_action(&ws, &[axis_reflection(2)], &["s"]).unwrap();
        let r = stabilization_scan(&ws, &a, &default_scales(8.0), None).unwrap();
        // X_k is the band 2|x| ≤ k; density of the axis in X_4 is 2
        assert_eq!(r.verdict, Verdict::Stable { k0: 0.0, c0: 2.0 });
        assert_eq!(r.sizes[0], 17);
    }

    #[test]
    fn free_rotation_of_triangle_is_all_empty() {
        let s = 3.0;
        let d = vec![vec![0.0, s, s], vec![s, 0.0, s], vec![s, s, 0.0]];
        let m = FiniteMetricSpace::from_matrix("tri", vec!["a".into(), "b".into(), "c".into()], d).unwrap();
        let ws = WindowedSpace::compact(m);
        let a = IsometricAction {
            group: GroupSpec::cyclic(3),
            perm: vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
            tol_iso: 1e-9,
        };
        let r = stabilization_scan(&ws, &a, &[0.0, 1.0, 2.0], None).unwrap();
        assert_eq!(r.verdict, Verdict::AllEmpty);
    }

    #[test]
    fn bounded_displacement_gives_orbit_inequality() {
        let s = 3.0;
        let d = vec![vec![0.0, s, s], vec![s, 0.0, s], vec![s, s, 0.0]];
        let m = FiniteMetricSpace::from_matrix("tri", vec!["a".into(), "b".into(), "c".into()], d).unwrap();
        let ws = WindowedSpace::compact(m);
        let a = IsometricAction {
            group: GroupSpec::cyclic(3),
            perm: vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]],
            tol_iso: 1e-9,
        };
        let r = stabilization_scan(&ws, &a, &[0.0, 4.0, 5.0], Some(1.0)).unwrap();
        assert_eq!(r.verdict, Verdict::Stable { k0: 4.0, c0: 0.0 });
        let ie = coarsely_ineffective_check(&ws, &a, &r).unwrap();
        // one orbit: d* = 0 while d = 3
        assert_eq!(ie.max_excess, 3.0);
        assert!(ie.holds);
    }

    #[test]
    fn rejects_unsorted_scales() {
        let ws = lattice_window(&LatticeWindow::square(1, 4, LatticeNorm::Chebyshev, 1.0));
        let a = IsometricAction::trivial(ws.len());
        assert_eq!(stabilization_scan(&ws, &a, &[2.0, 1.0], None).unwrap_err(), FixedSetError::BadScales);
        assert_eq!(stabilization_scan(&ws, &a, &[], None).unwrap_err(), FixedSetError::NoScales);
    }

    #[test]
    fn trivial_action_is_stable_and_tame() {
        let ws = lattice_window(&LatticeWindow::square(1, 8, LatticeNorm::Chebyshev, 1.0));
        let a = IsometricAction::trivial(ws.len());
        let r = stabilization_scan(&ws, &a, &[0.0, 1.0], None).unwrap();
        assert_eq!(r.verdict, Verdict::Stable { k0: 0.0, c0: 0.0 });
        assert!(tameness(&ws, &a, &[0.0, 1.0]).unwrap().tame);
    }

    #[test]
    fn reflection_is_not_coarsely_trivial() {
        let ws = lattice_window(&LatticeWindow::square(1, 8, LatticeNorm::Chebyshev, 1.0));
        let a = linear_action(&ws, &[axis_reflection(1)], &["s"]).unwrap();
        assert!(coarsely_trivial_elements(&ws, &a).is_empty());
        assert!(is_coarsely_semifree(&ws, &a, &default_scales(8.0)).unwrap());
    }

    #[test]
    fn goalposts_do_not_stabilize() {
        let (ws, a) = crate::models::goalposts(24.0, 0.5);
        let scales: Vec<f64> = (1..=12).map(f64::from).collect();
        let r = stabilization_scan(&ws, &a, &scales, None).unwrap();
        // each row is non-decreasing in the larger scale
        for i in 0..scales.len() {
            for j in i + 2..scales.len() {
                assert!(r.density_matrix[i][j].unwrap() >= r.density_matrix[i][j - 1].unwrap());
            }
        }
        assert!(r.rejections.iter().all(Option::is_some));
        assert_eq!(r.verdict, Verdict::NotStableInWindow);
    }
}
