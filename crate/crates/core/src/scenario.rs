//! Scenario specs, the builtin scenarios and the pipeline that turns a spec
//! into a versioned report.

use std::collections::BTreeMap;

use serde::{Deserialize, Deserializer, Serialize};

use crate::action::{validate_action, IsometricAction};
use crate::complexes::{GComplex, SimplicialComplex};
use crate::coverings::{build_coarsening_system, verify_system, StrategyKind, SystemOptions, TieBreak};
use crate::fixed_sets::{
    centralizer_subspace, coarsely_ineffective_check, coarsely_trivial_elements, default_scales, fixed_set,
    stabilization_scan, tameness, CentralizerReport, IneffectiveReport, StabilizationReport, TamenessReport, Verdict,
};
use crate::group::GroupSpec;
use crate::homology::oracle::dense_relative_ranks;
use crate::homology::{chain_complex, homology_ranks, FieldSpec};
use crate::limits::{
    bounded_fixed_homology, classify_sphere, direct_system, stabilized_ranks, theorem_a_check, BoundedFixedHomology,
    CoarseHomologyEstimate, Selector, SphereVerdict, TheoremAReport, Tower,
};
use crate::metric::{validate_metric, FiniteMetricSpace, LatticeNorm, ValidationReport, WindowedSpace};
use crate::models::{
    axis_reflection, cayley_ball, goalposts, hex_reflection, hex_rotation, lattice_window, linear_action, swap_semidirect_lattice,
    poincare_rings, FreeAbelian, LatticeWindow, SwapSemidirect, WindowShape,
};
use crate::smith::{
    euler_identity, smith_bundle, smith_inequalities, transfer_maps, EulerReport, GChains, InequalityRow, SmithBundle,
    TransferReport,
};
use crate::Error;

pub const REPORT_SCHEMA: &str = "coarsesmith-report/1";

/// Pairs with at most this many simplices get the dense cross-check when
/// the oracle is on.
pub const ORACLE_LIMIT: usize = 600;

/// A real number written either as a JSON number or as a decimal string.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(into = "String")]
pub struct Dec(pub f64);

impl From<Dec> for String {
    fn from(d: Dec) -> String {
        d.0.to_string()
    }
}

impl<'de> Deserialize<'de> for Dec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(f64),
            S(String),
        }
        match Raw::deserialize(d)? {
            Raw::N(x) => Ok(Dec(x)),
            Raw::S(s) => s.trim().parse().map(Dec).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CayleyGroup {
    FreeAbelian,
    SwapSemidirect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpaceSpec {
    EuclideanGrid {
        dim: usize,
        radius: i64,
        #[serde(default = "default_norm")]
        norm: LatticeNorm,
        /// Ball in the norm instead of the coordinate box.
        #[serde(default)]
        ball: bool,
    },
    Matrix {
        points: Vec<String>,
        dist: Vec<Vec<Dec>>,
        /// Distance to the window boundary per point; omitted = compact.
        #[serde(default)]
        depth: Option<Vec<Dec>>,
        #[serde(default)]
        window_radius: Option<Dec>,
    },
    Cayley {
        group: CayleyGroup,
        #[serde(default = "default_rank")]
        rank: usize,
        radius: u32,
    },
    Goalposts {
        window: Dec,
        spacing: Dec,
    },
    Poincare {
        rings: usize,
        step: Dec,
        order: usize,
    },
}

fn default_norm() -> LatticeNorm {
    LatticeNorm::Chebyshev
}

fn default_rank() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupTable {
    pub table: Vec<Vec<usize>>,
    pub names: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionSpec {
    #[default]
    None,
    /// Integer matrices acting on lattice coordinates; the group is their
    /// closure.
    Linear { matrices: Vec<Vec<Vec<i64>>> },
    /// One permutation per group element, keyed by element name.
    Perms { perms: BTreeMap<String, Vec<usize>> },
    /// The symmetry that comes with the model (goalposts swap, disk
    /// rotation, left multiplication by the swap on a Cayley ball).
    Model,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSpec {
    pub collar: Dec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FixedRoute {
    /// The three nerve systems on the equivariant tower.
    #[default]
    Tower,
    /// Coarse homology of X^G_{k₀} as a metric space in its own right.
    Subspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    pub prime: Option<u32>,
    /// Coefficient field for the transfer identities.
    pub field: Option<u32>,
    pub max_dim: Option<usize>,
    pub levels: usize,
    pub growth: f64,
    pub base_radius: Option<Dec>,
    pub scales: Option<Vec<Dec>>,
    pub density_cap: Option<Dec>,
    pub tie_break: TieBreak,
    pub seed: u64,
    pub oracle: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            prime: None,
            field: None,
            max_dim: None,
            levels: 2,
            growth: 2.0,
            base_radius: None,
            scales: None,
            density_cap: None,
            tie_break: TieBreak::Lowest,
            seed: 0,
            oracle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tasks {
    pub homology: bool,
    pub smith: bool,
    pub transfer: bool,
    pub theorem_a: bool,
    pub tameness: bool,
    pub centralizer: bool,
    pub fixed_route: FixedRoute,
}

impl Default for Tasks {
    fn default() -> Self {
        Self {
            homology: true,
            smith: true,
            transfer: true,
            theorem_a: true,
            tameness: true,
            centralizer: false,
            fixed_route: FixedRoute::Tower,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub space: SpaceSpec,
    #[serde(default)]
    pub group: Option<GroupTable>,
    #[serde(default)]
    pub action: ActionSpec,
    #[serde(default)]
    pub frontier: Option<FrontierSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tasks: Tasks,
}

impl ScenarioSpec {
    pub fn from_json(s: &str) -> Result<Self, Error> {
        serde_json::from_str(s).map_err(|e| Error::Scenario(format!("bad scenario json: {e}")))
    }

    /// Replace the window size of the model, where it has one.
    pub fn set_window(&mut self, n: i64) {
        match &mut self.space {
            SpaceSpec::EuclideanGrid { radius, .. } => *radius = n,
            SpaceSpec::Cayley { radius, .. } => *radius = n.max(1) as u32,
            SpaceSpec::Goalposts { window, .. } => window.0 = n as f64,
            SpaceSpec::Poincare { rings, .. } => *rings = n.max(1) as usize,
            SpaceSpec::Matrix { .. } => {}
        }
    }
}

pub const BUILTINS: [&str; 9] = [
    "euclidean_line",
    "euclidean_plane",
    "euclidean_space3",
    "reflection_plane",
    "rotation_plane",
    "goalposts",
    "semidirect_swap",
    "hyperbolic",
    "klein",
];

fn grid(name: &str, dim: usize, radius: i64, norm: LatticeNorm, ball: bool) -> ScenarioSpec {
    ScenarioSpec {
        name: name.into(),
        space: SpaceSpec::EuclideanGrid { dim, radius, norm, ball },
        group: None,
        action: ActionSpec::None,
        frontier: Some(FrontierSpec { collar: Dec(2.0) }),
        params: Params::default(),
        tasks: Tasks::default(),
    }
}

fn only_fixed_sets(tasks: &mut Tasks) {
    tasks.homology = false;
    tasks.smith = false;
    tasks.transfer = false;
    tasks.theorem_a = false;
}

pub fn builtin(name: &str) -> Option<ScenarioSpec> {
    let s = match name {
        "euclidean_line" => grid(name, 1, 8, LatticeNorm::Chebyshev, false),
        "euclidean_plane" => grid(name, 2, 8, LatticeNorm::Chebyshev, false),
        "euclidean_space3" => {
            let mut s = grid(name, 3, 8, LatticeNorm::Chebyshev, false);
            s.params.max_dim = Some(4);
            s
        }
        "reflection_plane" | "rotation_plane" => {
            let rot = name == "rotation_plane";
            let mut s = grid(name, 2, 16, LatticeNorm::Hex, true);
            s.action = ActionSpec::Linear {
                matrices: vec![if rot { hex_rotation() } else { hex_reflection() }],
            };
            s.params.prime = Some(if rot { 3 } else { 2 });
            s.params.field = Some(if rot { 2 } else { 3 });
            s
        }
        "klein" => {
            let mut s = grid(name, 2, 8, LatticeNorm::Chebyshev, false);
            s.action = ActionSpec::Linear {
                matrices: vec![axis_reflection(2), vec![vec![1, 0], vec![0, -1]]],
            };
            s.params.prime = Some(2);
            s.params.field = Some(3);
            s
        }
        "goalposts" => {
            let mut s = ScenarioSpec {
                name: name.into(),
                space: SpaceSpec::Goalposts {
                    window: Dec(24.0),
                    spacing: Dec(0.5),
                },
                group: None,
                action: ActionSpec::Model,
                frontier: None,
                params: Params {
                    prime: Some(2),
                    scales: Some((1..=12).map(|k| Dec(k as f64)).collect()),
                    ..Params::default()
                },
                tasks: Tasks::default(),
            };
            only_fixed_sets(&mut s.tasks);
            s
        }
        "semidirect_swap" => {
            let mut s = ScenarioSpec {
                name: name.into(),
                space: SpaceSpec::Cayley {
                    group: CayleyGroup::SwapSemidirect,
                    rank: 2,
                    radius: 16,
                },
                group: None,
                action: ActionSpec::Model,
                frontier: Some(FrontierSpec { collar: Dec(2.0) }),
                params: Params {
                    prime: Some(2),
                    field: Some(3),
                    scales: Some((1..=5).map(|k| Dec(k as f64)).collect()),
                    ..Params::default()
                },
                tasks: Tasks::default(),
            };
            s.tasks.centralizer = true;
            s
        }
        "hyperbolic" => {
            let mut s = ScenarioSpec {
                name: name.into(),
                space: SpaceSpec::Poincare {
                    rings: 5,
                    step: Dec(0.6),
                    order: 3,
                },
                group: None,
                action: ActionSpec::Model,
                frontier: None,
                params: Params {
                    prime: Some(3),
                    scales: Some([0.0, 0.5, 1.0, 2.0].map(Dec).to_vec()),
                    ..Params::default()
                },
                tasks: Tasks::default(),
            };
            only_fixed_sets(&mut s.tasks);
            s
        }
        _ => return None,
    };
    Some(s)
}

/// The model, its action and, for Cayley balls, a centralizer report.
struct Model {
    ws: WindowedSpace,
    action: IsometricAction,
    centralizer: Option<CentralizerReport>,
    strategy: StrategyKind,
}

fn build_model(spec: &ScenarioSpec, scales: &[f64]) -> Result<Model, Error> {
    let collar = spec.frontier.as_ref().map(|f| f.collar.0);
    let (ws, model_action, centralizer, strategy) = match &spec.space {
        SpaceSpec::EuclideanGrid { dim, radius, norm, ball } => {
            let w = LatticeWindow {
                shape: if *ball { WindowShape::Ball } else { WindowShape::Box },
                ..LatticeWindow::square(*dim, *radius, *norm, collar.unwrap_or(2.0))
            };
            (lattice_window(&w), None, None, if *norm == LatticeNorm::Euclidean { StrategyKind::Greedy } else { StrategyKind::Lattice })
        }
        SpaceSpec::Matrix {
            points,
            dist,
            depth,
            window_radius,
        } => {
            let d = dist.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
            let space = FiniteMetricSpace::from_matrix(spec.name.clone(), points.clone(), d)?;
            let ws = match depth {
                Some(depth) => {
                    let r = window_radius.map_or_else(
                        || depth.iter().map(|x| x.0).fold(0.0, f64::max),
                        |r| r.0,
                    );
                    WindowedSpace::new(space, depth.iter().map(|x| x.0).collect(), r, collar.unwrap_or(1.0), true)
                }
                None => WindowedSpace::compact(space),
            };
            (ws, None, None, StrategyKind::Greedy)
        }
        SpaceSpec::Cayley { group, rank, radius } => match group {
            CayleyGroup::FreeAbelian => {
                let g = FreeAbelian(*rank);
                let w = cayley_ball(&g, &g.standard_generators(), *radius, collar.unwrap_or(2.0), &[])?;
                let c = spec.tasks.centralizer.then(|| centralizer_subspace(&g, &w, scales)).transpose()?;
                (w.ws, Some(w.action), c, StrategyKind::Greedy)
            }
            CayleyGroup::SwapSemidirect => {
                let g = SwapSemidirect;
                let w = cayley_ball(&g, &g.standard_generators(), *radius, collar.unwrap_or(2.0), &[g.swap()])?;
                let c = spec.tasks.centralizer.then(|| centralizer_subspace(&g, &w, scales)).transpose()?;
                // sites in the ℤ² coordinates, whole ε-fibers
                (swap_semidirect_lattice(&w)?, Some(w.action), c, StrategyKind::Fibered(2))
            }
        },
        SpaceSpec::Goalposts { window, spacing } => {
            let (ws, a) = goalposts(window.0, spacing.0);
            (ws, Some(a), None, StrategyKind::Greedy)
        }
        SpaceSpec::Poincare { rings, step, order } => {
            let (ws, a) = poincare_rings(*rings, step.0, *order);
            (ws, Some(a), None, StrategyKind::Greedy)
        }
    };
    let action = match &spec.action {
        ActionSpec::None => IsometricAction::trivial(ws.len()),
        ActionSpec::Model => model_action.ok_or_else(|| Error::Scenario("this space has no model action".into()))?,
        ActionSpec::Linear { matrices } => {
            let names: Vec<String> = (0..matrices.len()).map(|i| format!("s{i}")).collect();
            let names: Vec<&str> = names.iter().map(String::as_str).collect();
            linear_action(&ws, matrices, &names)?
        }
        ActionSpec::Perms { perms } => {
            let t = spec
                .group
                .as_ref()
                .ok_or_else(|| Error::Scenario("permutation action needs a group table".into()))?;
            let group = GroupSpec::new(t.table.clone(), 0, t.names.clone())?;
            let perm = t
                .names
                .iter()
                .map(|n| {
                    perms
                        .get(n)
                        .cloned()
                        .ok_or_else(|| Error::Scenario(format!("no permutation for element {n}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            IsometricAction {
                group,
                perm,
                tol_iso: ws.space.default_tol(),
            }
        }
    };
    Ok(Model {
        ws,
        action,
        centralizer,
        strategy,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationSection {
    pub metric: ValidationReport,
    pub action: ValidationReport,
    pub frontier: ValidationReport,
    pub coarsening_system: Option<ValidationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FixedSetSection {
    pub scan: StabilizationReport,
    pub tameness: Option<TamenessReport>,
    pub coarsely_trivial: Vec<usize>,
    pub ineffective: Option<IneffectiveReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringSection {
    pub radii: Vec<f64>,
    pub sets: Vec<usize>,
    pub diameter_bounds: Vec<f64>,
    pub lebesgue: Vec<Option<f64>>,
    pub equivariant_projections: Vec<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelSection {
    pub nerve_f_vector: Vec<usize>,
    pub regularized_f_vector: Vec<usize>,
    pub subdivisions: usize,
    pub smith: Option<SmithBundle>,
    /// For non-cyclic p-groups: the Smith checks for each subgroup of
    /// order p.
    pub subgroup_smith: Vec<SubgroupSmith>,
    pub transfer: Option<TransferReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SubgroupSmith {
    pub subgroup: Vec<usize>,
    pub bundle: SmithBundle,
}

#[derive(Debug, Clone, Serialize)]
pub struct HomologySection {
    pub space: CoarseHomologyEstimate,
    pub sphere: Option<SphereVerdict>,
    pub quotient: Option<CoarseHomologyEstimate>,
    pub quotient_rel_fixed: Option<CoarseHomologyEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundedFixedSection {
    pub route: FixedRoute,
    pub k0: f64,
    pub table: Option<BTreeMap<usize, usize>>,
    pub sphere: Option<SphereVerdict>,
    pub rho_check: Option<bool>,
    pub tower: Option<BoundedFixedHomology>,
    pub subspace: Option<CoarseHomologyEstimate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoarseSmithSection {
    /// rk HC^ρ_n + Σ_{i≥n} rk HC_i(X^G_bd) ≤ Σ_{i≥n} rk HC_i(X), per operator.
    pub inequalities: BTreeMap<String, Vec<InequalityRow>>,
    pub euler: Option<EulerReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleSection {
    pub checked: usize,
    pub agreed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Outcome {
    /// Every mathematical identity that was checked held.
    pub identities_ok: bool,
    pub failures: Vec<String>,
    /// Honest negative outcomes (no stabilization, no bounded fixed set).
    pub negatives: Vec<String>,
    pub exit_code: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub scenario: String,
    pub seed: u64,
    pub points: usize,
    pub group_order: usize,
    pub prime: Option<u32>,
    pub validation: ValidationSection,
    pub fixed_sets: Option<FixedSetSection>,
    pub centralizer: Option<CentralizerReport>,
    pub coverings: Option<CoveringSection>,
    pub levels: Vec<LevelSection>,
    pub homology: Option<HomologySection>,
    pub bounded_fixed: Option<BoundedFixedSection>,
    pub theorem_a: Option<TheoremAReport>,
    pub coarse_smith: Option<CoarseSmithSection>,
    pub oracle: Option<OracleSection>,
    pub outcome: Outcome,
}

impl Report {
    /// JSON with every non-integral number written as a decimal string.
    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        decimals_as_strings(&mut v);
        serde_json::to_string_pretty(&v).expect("value serializes")
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |s: String| {
            out.push_str(&s);
            out.push('\n');
        };
        line(format!("scenario {} ({} points, |G| = {})", self.scenario, self.points, self.group_order));
        if let Some(f) = &self.fixed_sets {
            line(format!("fixed sets: {}", verdict_text(&f.scan.verdict)));
            if let Some(t) = &f.tameness {
                line(format!("tame in window: {}", t.tame));
            }
        }
        if let Some(c) = &self.centralizer {
            line(format!("centralizer density constant {} (cap {})", c.constant, c.density_cap));
        }
        if let Some(h) = &self.homology {
            line(format!("HC(X) = {} [{:?}]", table_text(&h.space.ranks), h.space.certificate));
            if let Some(q) = &h.quotient {
                line(format!("HC(X/G) = {}", table_text(&q.ranks)));
            }
        }
        if let Some(b) = &self.bounded_fixed {
            match &b.table {
                Some(t) => line(format!("HC(X^G_bd) = {}", table_text(t))),
                None => line("HC(X^G_bd) not certified".into()),
            }
        }
        if let Some(a) = &self.theorem_a {
            line(format!("fixed-set sphere: m = {}, r = {}, passed = {}", a.m, a.r, a.passed));
        }
        if let Some(e) = self.coarse_smith.as_ref().and_then(|c| c.euler.as_ref()) {
            line(format!("Euler residual {}", e.residual));
        }
        for f in &self.outcome.failures {
            line(format!("FAILED: {f}"));
        }
        for n in &self.outcome.negatives {
            line(format!("negative: {n}"));
        }
        line(format!("exit code {}", self.outcome.exit_code));
        out
    }
}

fn verdict_text(v: &Verdict) -> String {
    match v {
        Verdict::Stable { k0, c0 } => format!("stable from k0 = {k0} with density {c0}"),
        Verdict::NotStableInWindow => "not stable in window".into(),
        Verdict::AllEmpty => "all empty".into(),
    }
}

fn table_text(t: &BTreeMap<usize, usize>) -> String {
    let parts: Vec<String> = t.iter().map(|(d, r)| format!("{d}:{r}")).collect();
    format!("{{{}}}", parts.join(", "))
}

fn decimals_as_strings(v: &mut serde_json::Value) {
    use serde_json::Value;
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64");
            *v = Value::String(x.to_string());
        }
        Value::Array(a) => a.iter_mut().for_each(decimals_as_strings),
        Value::Object(o) => o.values_mut().for_each(decimals_as_strings),
        _ => {}
    }
}

fn euler_of(t: &CoarseHomologyEstimate) -> Option<i64> {
    t.truncated_above.is_none().then(|| {
        t.ranks
            .iter()
            .map(|(&d, &r)| if d % 2 == 0 { r as i64 } else { -(r as i64) })
            .sum()
    })
}

/// Dense cross-check of one pair.
fn oracle_pair(k: &SimplicialComplex, l: &SimplicialComplex, q: u32, o: &mut OracleSection) -> Result<(), Error> {
    if k.num_simplices() > ORACLE_LIMIT {
        return Ok(());
    }
    let c = chain_complex(k, l, FieldSpec::new(q)?)?;
    let sparse = homology_ranks(&c.chains);
    let dense = dense_relative_ranks(k, l, q);
    o.checked += 1;
    let top = if k.truncated_above().is_some() { dense.len().saturating_sub(1) } else { dense.len() };
    if (0..top).all(|d| dense[d] == sparse.rank(d)) {
        o.agreed += 1;
    }
    Ok(())
}

/// Runs the full pipeline.
pub fn run_scenario(spec: &ScenarioSpec) -> Result<Report, Error> {
    let params = &spec.params;
    let tasks = &spec.tasks;
    let mut failures: Vec<String> = Vec::new();
    let mut negatives: Vec<String> = Vec::new();

    let window_hint = match &spec.space {
        SpaceSpec::EuclideanGrid { radius, .. } => *radius as f64,
        SpaceSpec::Cayley { radius, .. } => *radius as f64,
        SpaceSpec::Goalposts { window, .. } => window.0,
        _ => 8.0,
    };
    let pre_scales: Vec<f64> = match &params.scales {
        Some(s) => s.iter().map(|x| x.0).collect(),
        None => default_scales(window_hint),
    };
    let model = build_model(spec, &pre_scales)?;
    let ws = &model.ws;
    let a = &model.action;
    let order = a.order();
    let scales = if params.scales.is_none() {
        default_scales(ws.window_radius)
    } else {
        pre_scales
    };
    let p = params.prime.or_else(|| a.group.p_group_prime());
    let field_p = FieldSpec::new(p.unwrap_or(2))?;

    // validation
    let metric = validate_metric(&ws.space, ws.space.default_tol());
    let action_rep = validate_action(a, &ws.space)?;
    let frontier = ws.check_frontier();
    for (what, r) in [("metric", &metric), ("action", &action_rep), ("frontier", &frontier)] {
        if !r.passed {
            failures.push(format!("{what} validation: {:?}", r.violations.first()));
        }
    }

    // fixed sets
    let cap = params.density_cap.map(|d| d.0);
    let fixed_sets = if order > 1 {
        let scan = stabilization_scan(ws, a, &scales, cap)?;
        match scan.verdict {
            Verdict::NotStableInWindow => negatives.push("bounded fixed set: not stable in window".into()),
            Verdict::AllEmpty => negatives.push("bounded fixed set: all approximate fixed sets empty".into()),
            Verdict::Stable { .. } => {}
        }
        let tame = tasks.tameness.then(|| tameness(ws, a, &scales)).transpose()?;
        let ineffective = coarsely_ineffective_check(ws, a, &scan);
        if ineffective.as_ref().is_some_and(|i| !i.holds) {
            failures.push("orbit projection inequality".into());
        }
        Some(FixedSetSection {
            coarsely_trivial: coarsely_trivial_elements(ws, a),
            scan,
            tameness: tame,
            ineffective,
        })
    } else {
        None
    };
    if let Some(c) = &model.centralizer {
        if !c.certified {
            negatives.push("centralizer density above cap".into());
        }
    }

    let mut report = Report {
        schema: REPORT_SCHEMA,
        scenario: spec.name.clone(),
        seed: params.seed,
        points: ws.len(),
        group_order: order,
        prime: p,
        validation: ValidationSection {
            metric,
            action: action_rep,
            frontier,
            coarsening_system: None,
        },
        fixed_sets,
        centralizer: model.centralizer.clone(),
        coverings: None,
        levels: Vec::new(),
        homology: None,
        bounded_fixed: None,
        theorem_a: None,
        coarse_smith: None,
        oracle: params.oracle.then_some(OracleSection { checked: 0, agreed: 0 }),
        outcome: Outcome {
            identities_ok: true,
            failures: Vec::new(),
            negatives: Vec::new(),
            exit_code: 0,
        },
    };

    let stable_scan = report
        .fixed_sets
        .as_ref()
        .filter(|f| matches!(f.scan.verdict, Verdict::Stable { .. }))
        .map(|f| f.scan.clone());

    if tasks.homology {
        let acting = (order > 1 && tasks.fixed_route == FixedRoute::Tower).then_some(a);
        let opts = SystemOptions {
            levels: params.levels,
            growth: params.growth,
            base_radius: params.base_radius.map(|d| d.0),
            strategy: model.strategy,
            tie_break: params.tie_break,
            ..SystemOptions::default()
        };
        let fixed_homology_only = order > 1 && tasks.fixed_route == FixedRoute::Subspace;
        if fixed_homology_only {
            // the space itself is not resolved; only X^G_{k₀}
            if let Some(scan) = &stable_scan {
                report.bounded_fixed = Some(subspace_fixed_homology(ws, a, scan, opts, params.max_dim, field_p)?);
            }
        } else {
            let sys = build_coarsening_system(ws, acting, opts)?;
            let vrep = verify_system(&sys, ws, acting);
            if !vrep.passed {
                failures.push(format!("coarsening system: {:?}", vrep.violations.first()));
            }
            report.validation.coarsening_system = Some(vrep);
            report.coverings = Some(CoveringSection {
                radii: sys.radii.clone(),
                sets: sys.levels.iter().map(|c| c.len()).collect(),
                diameter_bounds: sys.diameter_bounds.clone(),
                lebesgue: sys.lebesgue.clone(),
                equivariant_projections: sys.projections.iter().map(|p| p.equivariant).collect(),
            });
            let tower = Tower::build(ws, acting, sys, params.max_dim)?;
            run_tower(spec, &tower, stable_scan.as_ref(), &scales, field_p, &mut report, &mut failures)?;
        }
    }

    if let Some(b) = &report.bounded_fixed {
        if b.rho_check == Some(false) {
            failures.push("three routes to the bounded fixed homology disagree".into());
        }
        if b.table.is_none() && b.rho_check.is_none() {
            negatives.push("bounded fixed homology not stabilized".into());
        }
    }
    if report.homology.as_ref().is_some_and(|h| !h.space.is_stable()) {
        negatives.push("coarse homology of the space not stabilized".into());
    }
    if let Some(o) = &report.oracle {
        if o.agreed != o.checked {
            failures.push(format!("oracle disagreed on {} pairs", o.checked - o.agreed));
        }
    }
    let identities_ok = failures.is_empty();
    report.outcome = Outcome {
        identities_ok,
        exit_code: if !identities_ok {
            2
        } else if !negatives.is_empty() {
            3
        } else {
            0
        },
        failures,
        negatives,
    };
    Ok(report)
}

fn subspace_fixed_homology(
    ws: &WindowedSpace,
    a: &IsometricAction,
    scan: &StabilizationReport,
    opts: SystemOptions,
    max_dim: Option<usize>,
    field: FieldSpec,
) -> Result<BoundedFixedSection, Error> {
    let Verdict::Stable { k0, .. } = scan.verdict else {
        unreachable!("called with a stable scan")
    };
    let pts = fixed_set(ws, a, k0);
    let space = ws.space.restrict(&pts, "bounded fixed set");
    let depth = pts.iter().map(|&x| ws.depth[x]).collect();
    let sub = WindowedSpace::new(space, depth, ws.window_radius, ws.collar, ws.unbounded);
    let sys = build_coarsening_system(&sub, None, opts)?;
    let tower = Tower::build(&sub, None, sys, max_dim)?;
    let est = stabilized_ranks(&direct_system(&tower, &Selector::Full, field)?)?;
    let sphere = classify_sphere(&est).ok();
    Ok(BoundedFixedSection {
        route: FixedRoute::Subspace,
        k0,
        table: est.is_stable().then(|| est.ranks.clone()),
        sphere,
        rho_check: None,
        tower: None,
        subspace: Some(est),
    })
}

fn run_tower(
    spec: &ScenarioSpec,
    tower: &Tower,
    stable_scan: Option<&StabilizationReport>,
    scales: &[f64],
    field_p: FieldSpec,
    report: &mut Report,
    failures: &mut Vec<String>,
) -> Result<(), Error> {
    let params = &spec.params;
    let tasks = &spec.tasks;
    let a = &tower.action;
    let order = a.order();
    let all: Vec<usize> = (0..order).collect();

    let space = stabilized_ranks(&direct_system(tower, &Selector::Full, field_p)?)?;
    let sphere = classify_sphere(&space).ok();
    let (quotient, quotient_rel_fixed) = if order > 1 {
        (
            Some(stabilized_ranks(&direct_system(tower, &Selector::Quotient, field_p)?)?),
            Some(stabilized_ranks(&direct_system(tower, &Selector::QuotientFixed, field_p)?)?),
        )
    } else {
        (None, None)
    };

    if order > 1 {
        if let Some(scan) = stable_scan {
            let bf = bounded_fixed_homology(tower, &all, scan, field_p)?;
            report.bounded_fixed = Some(BoundedFixedSection {
                route: FixedRoute::Tower,
                k0: bf.k0,
                table: bf.table().cloned(),
                sphere: classify_sphere(bf.estimate()).ok(),
                rho_check: Some(bf.rho_check),
                tower: Some(bf),
                subspace: None,
            });
        }
    }

    // per-level Smith theory and transfer
    let cyclic_p = order > 1 && p_is_order(order, params.prime);
    // order-p subgroups of a non-cyclic p-group
    let p_subgroups: Vec<Vec<usize>> = match a.group.p_group_prime() {
        Some(q) if tasks.smith && order > 1 && !cyclic_p && q == field_p.q() => {
            a.group.subgroups().into_iter().filter(|s| s.len() == q as usize).collect()
        }
        _ => Vec::new(),
    };
    for (n, lv) in tower.levels.iter().enumerate() {
        let l = lv.frontier_lift();
        let smith = if tasks.smith && cyclic_p {
            Some(checked_bundle(lv.complex(), &l, field_p, &format!("level {n}"), failures)?)
        } else {
            None
        };
        let subgroup_smith = p_subgroups
            .iter()
            .map(|sub| {
                let gc = lv.complex().restrict_group(sub);
                let bundle = checked_bundle(&gc, &l, field_p, &format!("level {n}, subgroup {sub:?}"), failures)?;
                Ok(SubgroupSmith {
                    subgroup: sub.clone(),
                    bundle,
                })
            })
            .collect::<Result<Vec<_>, Error>>()?;
        let transfer = match params.field {
            Some(q) if tasks.transfer && order > 1 => {
                let g = GChains::new(lv.complex(), &l, FieldSpec::new(q)?)?;
                let t = transfer_maps(&g)?;
                if !t.holds() {
                    failures.push(format!("level {n}: transfer identities over F_{q}"));
                }
                Some(t)
            }
            _ => None,
        };
        if let Some(o) = report.oracle.as_mut() {
            oracle_pair(&lv.complex().complex, &l, field_p.q(), o)?;
            oracle_pair(&lv.nerve, &lv.frontier, field_p.q(), o)?;
        }
        report.levels.push(LevelSection {
            nerve_f_vector: lv.nerve.f_vector(),
            regularized_f_vector: lv.complex().complex.f_vector(),
            subdivisions: lv.reg.subdivisions(),
            smith,
            subgroup_smith,
            transfer,
        });
    }

    // coarse Smith inequalities and Euler identity from stabilized tables
    if let Some(bf) = report.bounded_fixed.as_ref().and_then(|b| b.table.clone()) {
        let mut inequalities = BTreeMap::new();
        if let Some(last) = report.levels.last().and_then(|l| l.smith.as_ref()) {
            for t in &last.triangles {
                let rows = smith_inequalities(&t.h_rho, &bf, &space.ranks);
                if rows.iter().any(|r| !r.holds) {
                    failures.push(format!("coarse Smith inequality for {:?}", t.operator));
                }
                inequalities.insert(format!("{:?}", t.operator), rows);
            }
        }
        let euler = match (report.prime, euler_of(&space), quotient.as_ref().and_then(euler_of)) {
            (Some(p), Some(cx), Some(cq)) if order == p as usize => {
                let fixed_chi = bf.iter().map(|(&d, &r)| if d % 2 == 0 { r as i64 } else { -(r as i64) }).sum();
                let e = euler_identity(p, cx, fixed_chi, cq);
                if e.residual != 0 || !e.congruence {
                    failures.push(format!("Euler identity residual {}", e.residual));
                }
                Some(e)
            }
            _ => None,
        };
        report.coarse_smith = Some(CoarseSmithSection { inequalities, euler });
    }

    if tasks.theorem_a && order > 1 && sphere.as_ref().is_some_and(|s| s.is_coarse_sphere) {
        if let Some(p) = a.group.p_group_prime() {
            if params.prime.is_none_or(|q| q == p) {
                let r = theorem_a_check(tower, scales, field_p)?;
                if !r.passed {
                    failures.push("fixed-set sphere induction stage".into());
                }
                report.theorem_a = Some(r);
            }
        }
    }

    report.homology = Some(HomologySection {
        space,
        sphere,
        quotient,
        quotient_rel_fixed,
    });
    Ok(())
}

/// Smith bundle of one level, with every failed check recorded.
fn checked_bundle(
    gc: &GComplex,
    l: &SimplicialComplex,
    field: FieldSpec,
    at: &str,
    failures: &mut Vec<String>,
) -> Result<SmithBundle, Error> {
    let g = GChains::new(gc, l, field)?;
    let b = smith_bundle(&g)?;
    for t in &b.triangles {
        if !t.exact() {
            failures.push(format!("{at}: Smith triangle for {:?} not exact", t.operator));
        }
    }
    if b.inequalities.values().flatten().any(|r| !r.holds) {
        failures.push(format!("{at}: Smith inequality"));
    }
    if !b.orbit_iso.equal {
        failures.push(format!("{at}: σ-homology differs from the quotient pair"));
    }
    if b.second_sequence.iter().any(|r| !r.holds) {
        failures.push(format!("{at}: second Smith sequence"));
    }
    Ok(b)
}

fn p_is_order(order: usize, prime: Option<u32>) -> bool {
    crate::homology::is_prime(order as u32) && prime.is_none_or(|p| p as usize == order)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_builtin_parses_back() {
        for name in BUILTINS {
            let s = builtin(name).unwrap();
            let json = serde_json::to_string(&s).unwrap();
            assert_eq!(ScenarioSpec::from_json(&json).unwrap(), s);
        }
        assert!(builtin("nope").is_none());
    }

    #[test]
    fn decimal_strings_are_accepted() {
        let s = r#"{"name":"pair","space":{"kind":"matrix","points":["a","b"],"dist":[["0","1.5"],["1.5","0"]]}}"#;
        let spec = ScenarioSpec::from_json(s).unwrap();
        let r = run_scenario(&spec).unwrap();
        // two points 1.5 apart: the second level swallows both
        assert_eq!(r.points, 2);
        assert_eq!(r.homology.unwrap().space.ranks, BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn line_report_is_deterministic() {
        let s = builtin("euclidean_line").unwrap();
        let a = run_scenario(&s).unwrap().to_json();
        let b = run_scenario(&s).unwrap().to_json();
        assert_eq!(a, b);
        assert!(a.contains("coarsesmith-report/1"));
    }
}
