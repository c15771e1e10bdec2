use num_rational::Ratio;

use crate::action::IsometricAction;
use crate::coverings::{Covering, CoveringError, CoveringOrigin};
use crate::metric::WindowedSpace;

use super::{ComplexError, GComplex, SimplicialComplex};

/// Nerve of a covering: one vertex per set, a simplex for every family of
/// sets with a common point. `max_dim` caps the dimension and flags the
/// result as truncated when it bites.
pub fn nerve(c: &Covering, n_points: usize, max_dim: Option<usize>) -> SimplicialComplex {
    restrict_nerve(c, (0..n_points).collect::<Vec<_>>().as_slice(), n_points, max_dim)
}

/// K(𝒰|A): simplices whose intersection meets A.
pub fn restrict_nerve(c: &Covering, subset: &[usize], n_points: usize, max_dim: Option<usize>) -> SimplicialComplex {
    let m = c.membership(n_points);
    let mut gens: Vec<Vec<usize>> = subset.iter().map(|&x| m[x].clone()).filter(|s| !s.is_empty()).collect();
    gens.sort_unstable();
    gens.dedup();
    SimplicialComplex::from_generators(c.len(), gens, max_dim).expect("set ids in range")
}

/// The nerve with the action permuting set ids.
pub fn equivariant_nerve(
    c: &Covering,
    a: &IsometricAction,
    n_points: usize,
    max_dim: Option<usize>,
) -> Result<GComplex, ComplexError> {
    let act = c
        .index_action
        .clone()
        .ok_or_else(|| ComplexError::BadAction("covering carries no index action".into()))?;
    GComplex::new(nerve(c, n_points, max_dim), a.group.clone(), act)
}

/// φ_U(x) = d(x, X∖U) / Σ_V d(x, X∖V). A set equal to the whole window
/// uses the window diameter bound in place of the (infinite) distance.
#[derive(Debug, Clone)]
pub struct PartitionOfUnity {
    /// Per point: (set id, weight) over the sets containing the point.
    pub weights: Vec<Vec<(usize, f64)>>,
    /// The same weights as exact rationals when the metric is integral.
    pub exact: Option<Vec<Vec<(usize, Ratio<i64>)>>>,
}

fn complement_distance(c: &Covering, ws: &WindowedSpace, set: usize, x: usize) -> f64 {
    let n = ws.len();
    let members = &c.sets[set];
    if members.len() == n {
        return ws.diameter_bound();
    }
    (0..n)
        .filter(|y| members.binary_search(y).is_err())
        .map(|y| ws.space.dist(x, y))
        .fold(f64::INFINITY, f64::min)
}

pub fn partition_of_unity(c: &Covering, ws: &WindowedSpace) -> PartitionOfUnity {
    let m = c.membership(ws.len());
    let integral = ws.space.is_integral() && ws.diameter_bound().fract() == 0.0;
    let mut weights = Vec::with_capacity(ws.len());
    let mut exact = integral.then(Vec::new);
    for (x, sets) in m.iter().enumerate() {
        let raw: Vec<f64> = sets.iter().map(|&u| complement_distance(c, ws, u, x)).collect();
        let total: f64 = raw.iter().sum();
        weights.push(sets.iter().zip(&raw).map(|(&u, &r)| (u, r / total)).collect());
        if let Some(ex) = exact.as_mut() {
            let total = raw.iter().map(|&r| r.round() as i64).sum::<i64>();
            ex.push(
                sets.iter()
                    .zip(&raw)
                    .map(|(&u, &r)| (u, Ratio::new(r.round() as i64, total)))
                    .collect(),
            );
        }
    }
    PartitionOfUnity { weights, exact }
}

impl PartitionOfUnity {
    /// Weights sum to one, vanish off each set, and every point lands in
    /// the nerve simplex of its membership list. Returns the first failure.
    pub fn check(&self, c: &Covering, k: &SimplicialComplex) -> Result<(), String> {
        for (x, w) in self.weights.iter().enumerate() {
            let sum: f64 = w.iter().map(|p| p.1).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(format!("weights at point {x} sum to {sum}"));
            }
            if let Some(&(u, _)) = w.iter().find(|&&(u, v)| v <= 0.0 || !c.contains(u, x)) {
                return Err(format!("weight of set {u} at point {x} is off its support"));
            }
            let support: Vec<usize> = w.iter().map(|p| p.0).collect();
            if k.truncated_above().is_none() && !k.contains(&support) {
                return Err(format!("point {x} maps outside the nerve"));
            }
        }
        if let Some(ex) = &self.exact {
            for (x, w) in ex.iter().enumerate() {
                let sum: Ratio<i64> = w.iter().map(|p| p.1).sum();
                if sum != Ratio::from_integer(1) {
                    return Err(format!("exact weights at point {x} sum to {sum}"));
                }
            }
        }
        Ok(())
    }
}

/// Pull back the open stars of the nerve vertices: U_i ↦ {x : φ_i(x) > 0}.
pub fn star_pullback(p: &PartitionOfUnity, n_sets: usize, scale: f64) -> Result<Covering, CoveringError> {
    let mut sets = vec![Vec::new(); n_sets];
    for (x, w) in p.weights.iter().enumerate() {
        for &(u, v) in w {
            if v > 0.0 {
                sets[u].push(x);
            }
        }
    }
    let mut c = Covering::explicit(p.weights.len(), sets, scale)?;
    c.origin = CoveringOrigin::StarPullback;
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverings::{ball_covering, CenterStrategy};
    use crate::models::{lattice_window, LatticeWindow};
    use crate::metric::LatticeNorm;

    #[test]
    fn nerve_of_unit_balls_on_a_path() {
        let ws = lattice_window(&LatticeWindow::square(1, 4, LatticeNorm::Chebyshev, 1.0));
        let c = ball_covering(&ws, 1.0, CenterStrategy::All).unwrap();
        let k = nerve(&c, ws.len(), None);
        // balls B(i,1) and B(j,1) meet iff |i−j| ≤ 2; triples iff spread ≤ 2
        assert_eq!(k.f_vector(), vec![9, 15, 7]);
        let capped = nerve(&c, ws.len(), Some(1));
        assert_eq!(capped.truncated_above(), Some(1));
        let end = restrict_nerve(&c, &[0], ws.len(), None);
        assert_eq!(end.f_vector(), vec![2, 1]);
    }

    #[test]
    fn partition_is_exact_on_integral_metrics() {
        let ws = lattice_window(&LatticeWindow::square(2, 3, LatticeNorm::Chebyshev, 1.0));
        let c = ball_covering(&ws, 1.0, CenterStrategy::Greedy { separation: 1.0 }).unwrap();
        let k = nerve(&c, ws.len(), None);
        let p = partition_of_unity(&c, &ws);
        assert!(p.exact.is_some());
        p.check(&c, &k).unwrap();
        let back = star_pullback(&p, c.len(), c.scale).unwrap();
        assert_eq!(back.sets, c.sets);
    }
}
