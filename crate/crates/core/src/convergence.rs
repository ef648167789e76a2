//! Convergence analysis: assignments and the relations over them, network
//! freeness, dislodgement heights, dissimilarity functions, and the
//! brute-force contraction checks.
//!
//! An assignment pairs a router with a path-weight it may be using. One
//! assignment extends another when pushing its weight across the relevant
//! link yields exactly the other's weight, and threatens it when the pushed
//! weight is at least as preferred. A topology is free when no cycle of
//! assignments threatens its way around: freeness is decided as acyclicity
//! of the threatens digraph over non-invalid assignments, treating closed
//! walks as cycles.
//!
//! On free instances the union of the extends and strictly-prefers
//! relations is acyclic, so each assignment gets a height: the number of
//! assignments it can transitively dislodge. Heights induce a dissimilarity
//! between weights, lifted to tables and states by maxima. For path
//! algebras the same construction is applied to the finite set of weights
//! consistent with the topology, and inconsistent weights are ranked above
//! every consistent disagreement by how short their stored path still is:
//! each round of updates pushes inconsistency one hop further out until it
//! falls off the end of a simple path.

use std::collections::{BTreeSet, HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::{leq, lt, Algebra, CheckMode};
use crate::asyncsim::{participating_topology, NetworkOverEpochs};
use crate::protocol::{run_synchronous, step, AdjacencyMatrix, RoutingState, SyncOutcome};
use crate::topology::{NodeId, SimplePath};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment<W> {
    pub router: NodeId,
    pub weight: W,
}

impl<W> Assignment<W> {
    pub fn new(router: u32, weight: W) -> Self {
        Assignment {
            router: NodeId(router),
            weight,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum ConvergenceError {
    #[error("carrier is not enumerable")]
    NotEnumerable,
    #[error("instance is not free: {0}")]
    NotFree(String),
    #[error("algebra has no path extraction function")]
    NoPathFunction,
    #[error("carrier is not closed under the topology's extensions ({0})")]
    CarrierNotClosed(String),
    #[error("{states} states exceed the exhaustive check budget")]
    TooLarge { states: usize },
    #[error(transparent)]
    Schedule(#[from] crate::asyncsim::ScheduleError),
}

/// Same router, and the first weight is chosen over the second.
pub fn prefers<A: Algebra>(alg: &A, a: &Assignment<A::Weight>, b: &Assignment<A::Weight>) -> bool {
    a.router == b.router && leq(alg, &a.weight, &b.weight)
}

pub fn strictly_prefers<A: Algebra>(
    alg: &A,
    a: &Assignment<A::Weight>,
    b: &Assignment<A::Weight>,
) -> bool {
    a.router == b.router && lt(alg, &a.weight, &b.weight)
}

/// Pushing `a`'s non-invalid weight across the link into `b`'s router yields
/// exactly `b`'s weight.
pub fn extends<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    a: &Assignment<A::Weight>,
    b: &Assignment<A::Weight>,
) -> bool {
    a.weight != alg.invalid()
        && topo.apply(alg, b.router.0 as usize, a.router.0 as usize, &a.weight) == b.weight
}

/// Pushing `a`'s non-invalid weight across the link into `b`'s router yields
/// a weight at least as preferred as `b`'s.
pub fn threatens<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    a: &Assignment<A::Weight>,
    b: &Assignment<A::Weight>,
) -> bool {
    if a.weight == alg.invalid() {
        return false;
    }
    let pushed = topo.apply(alg, b.router.0 as usize, a.router.0 as usize, &a.weight);
    leq(alg, &pushed, &b.weight)
}

#[derive(Debug, Clone)]
pub struct FreeReport<W> {
    pub free: bool,
    /// On a non-free instance, a cycle of assignments in which each element
    /// threatens the next (cyclically).
    pub witness: Option<Vec<Assignment<W>>>,
}

impl<W> FreeReport<W> {
    pub fn render<A: Algebra<Weight = W>>(&self, alg: &A) -> String {
        match &self.witness {
            None => "free".to_string(),
            Some(cycle) => {
                let parts: Vec<String> = cycle
                    .iter()
                    .map(|a| format!("({}, {})", a.router, alg.render(&a.weight)))
                    .collect();
                format!("not free; threatening cycle {}", parts.join(" -> "))
            }
        }
    }
}

/// Decides freeness by searching the threatens digraph over non-invalid
/// assignments for a cycle.
pub fn is_free<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
) -> Result<FreeReport<A::Weight>, ConvergenceError> {
    let carrier = alg.enumerate().ok_or(ConvergenceError::NotEnumerable)?;
    let valid: Vec<A::Weight> = carrier
        .into_iter()
        .filter(|w| *w != alg.invalid())
        .collect();
    let n = topo.n();
    let m = valid.len();
    let vertex_count = n * m;

    // out-neighbours of (j, y): for each importer i, every (i, x) with
    // A_ij(y) at least as preferred as x
    let neighbours = |v: usize| -> Vec<usize> {
        let j = v / m;
        let y = &valid[v % m];
        let mut out = Vec::new();
        for i in 0..n {
            let pushed = topo.apply(alg, i, j, y);
            for (k, x) in valid.iter().enumerate() {
                if leq(alg, &pushed, x) {
                    out.push(i * m + k);
                }
            }
        }
        out
    };

    let mut color = vec![0u8; vertex_count];
    for root in 0..vertex_count {
        if color[root] != 0 {
            continue;
        }
        // iterative DFS keeping the gray path for witness extraction
        let mut stack: Vec<(usize, Vec<usize>, usize)> = vec![(root, neighbours(root), 0)];
        color[root] = 1;
        let mut path = vec![root];
        while let Some((v, ns, idx)) = stack.last_mut() {
            if *idx >= ns.len() {
                color[*v] = 2;
                path.pop();
                stack.pop();
                continue;
            }
            let w = ns[*idx];
            *idx += 1;
            match color[w] {
                0 => {
                    color[w] = 1;
                    path.push(w);
                    stack.push((w, neighbours(w), 0));
                }
                1 => {
                    let start = path.iter().position(|&p| p == w).unwrap();
                    let cycle = path[start..]
                        .iter()
                        .map(|&p| Assignment::new((p / m) as u32, valid[p % m].clone()))
                        .collect();
                    return Ok(FreeReport {
                        free: false,
                        witness: Some(cycle),
                    });
                }
                _ => {}
            }
        }
    }
    Ok(FreeReport {
        free: true,
        witness: None,
    })
}

/// A two-router instance that oscillates: a four-value min algebra with a
/// policy that swaps the two middle values. Router 0's self-loop feeds its
/// own entry back through the swap, so the entry for destination 1 flips
/// forever, and the two middle assignments threaten each other both across
/// the link pair and over the self-loop.
pub fn make_nonfree_gadget() -> (crate::algebra::TableAlgebra, AdjacencyMatrix) {
    use crate::algebra::{TableAlgebra, TableAlgebraSpec};
    let names = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();
    let spec = TableAlgebraSpec {
        carrier: names(&["0", "1", "2", "inf"]),
        trivial: "0".into(),
        invalid: "inf".into(),
        choose: vec![
            names(&["0", "0", "0", "0"]),
            names(&["0", "1", "1", "1"]),
            names(&["0", "1", "2", "2"]),
            names(&["0", "1", "2", "inf"]),
        ],
        policies: [
            ("flip".to_string(), names(&["2", "2", "1", "inf"])),
            ("reject".to_string(), names(&["inf", "inf", "inf", "inf"])),
        ]
        .into_iter()
        .collect(),
        invalid_policy: "reject".into(),
        edge_policies: Vec::new(),
    };
    let alg = TableAlgebra::from_spec(&spec).expect("gadget spec is well formed");
    let flip = crate::algebra::PolicyName::new("flip");
    let topo = AdjacencyMatrix::from_entries(
        &alg,
        2,
        &[(0, 0, flip.clone()), (0, 1, flip.clone()), (1, 0, flip)],
    )
    .expect("gadget topology is well formed");
    (alg, topo)
}

/// The start state from which the gadget's synchronous run oscillates with
/// period two.
pub fn gadget_start_state(
    alg: &crate::algebra::TableAlgebra,
) -> RoutingState<crate::algebra::TableWeight> {
    let w = |name: &str| alg.weight(name).unwrap();
    RoutingState::from_rows(vec![vec![w("0"), w("1")], vec![w("2"), w("0")]]).unwrap()
}

/// Heights of assignments over an explicit carrier: the number of
/// assignments each can transitively dislodge through extension and strict
/// preference.
#[derive(Debug, Clone)]
pub struct HeightTable<W> {
    carrier: Vec<W>,
    index: HashMap<W, usize>,
    n: usize,
    heights: Vec<usize>,
}

impl<W: Clone + Eq + std::hash::Hash> HeightTable<W> {
    pub fn height(&self, router: usize, w: &W) -> Option<usize> {
        let k = self.index.get(w)?;
        Some(self.heights[router * self.carrier.len() + k])
    }

    pub fn max_height(&self) -> usize {
        self.heights.iter().copied().max().unwrap_or(0)
    }

    pub fn carrier(&self) -> &[W] {
        &self.carrier
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Builds the dislodgement digraph over `carrier` and returns per-assignment
/// heights. Fails when the digraph has a cycle (the instance is not free)
/// or when an extension leaves the carrier.
pub fn heights_over<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    carrier: &[A::Weight],
) -> Result<HeightTable<A::Weight>, ConvergenceError> {
    let n = topo.n();
    let m = carrier.len();
    let index: HashMap<A::Weight, usize> = carrier
        .iter()
        .enumerate()
        .map(|(k, w)| (w.clone(), k))
        .collect();
    let vertex_count = n * m;

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
    for j in 0..n {
        for (ky, y) in carrier.iter().enumerate() {
            let v = j * m + ky;
            if *y != alg.invalid() {
                for i in 0..n {
                    let x = topo.apply(alg, i, j, y);
                    let kx = index
                        .get(&x)
                        .ok_or_else(|| ConvergenceError::CarrierNotClosed(alg.render(&x)))?;
                    adj[v].push(i * m + kx);
                }
            }
            for (kz, z) in carrier.iter().enumerate() {
                if lt(alg, y, z) {
                    adj[v].push(j * m + kz);
                }
            }
        }
    }

    // cycle check by three-colour DFS
    let mut color = vec![0u8; vertex_count];
    for root in 0..vertex_count {
        if color[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        color[root] = 1;
        while let Some(&mut (v, ref mut idx)) = stack.last_mut() {
            if *idx >= adj[v].len() {
                color[v] = 2;
                stack.pop();
                continue;
            }
            let w = adj[v][*idx];
            *idx += 1;
            match color[w] {
                0 => {
                    color[w] = 1;
                    stack.push((w, 0));
                }
                1 => {
                    let j = w / m;
                    return Err(ConvergenceError::NotFree(format!(
                        "assignment ({j}, {}) can dislodge itself",
                        alg.render(&carrier[w % m])
                    )));
                }
                _ => {}
            }
        }
    }

    // reachability count per vertex
    let mut heights = vec![0usize; vertex_count];
    let mut seen = vec![usize::MAX; vertex_count];
    for v in 0..vertex_count {
        let mut count = 0;
        let mut stack: Vec<usize> = adj[v].clone();
        while let Some(w) = stack.pop() {
            if seen[w] == v {
                continue;
            }
            seen[w] = v;
            count += 1;
            stack.extend(adj[w].iter().copied());
        }
        heights[v] = count;
    }

    Ok(HeightTable {
        carrier: carrier.to_vec(),
        index,
        n,
        heights,
    })
}

/// Heights over the full enumerated carrier.
pub fn dislodgement_height<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
) -> Result<HeightTable<A::Weight>, ConvergenceError> {
    let carrier = alg.enumerate().ok_or(ConvergenceError::NotEnumerable)?;
    heights_over(alg, topo, &carrier)
}

/// The weight of a path under the current topology: the invalid weight for
/// the invalid path, the trivial weight for the empty path, and otherwise
/// the front edge's policy applied to the weight of the rest.
pub fn weight_of_path<A: Algebra>(alg: &A, topo: &AdjacencyMatrix, p: &SimplePath) -> A::Weight {
    match p {
        SimplePath::Invalid => alg.invalid(),
        SimplePath::Valid { edges, .. } => {
            let mut w = alg.trivial();
            for e in edges.iter().rev() {
                w = topo.apply(alg, e.from.0 as usize, e.to.0 as usize, &w);
            }
            w
        }
    }
}

/// A weight is consistent when it equals the current weight of its own
/// stored path.
pub fn is_consistent<A: Algebra>(alg: &A, topo: &AdjacencyMatrix, x: &A::Weight) -> bool {
    let path = alg.path_of(x).expect("consistency needs a path algebra");
    weight_of_path(alg, topo, &path) == *x
}

/// The finite set of weights consistent with a topology over `n` routers:
/// the weights of all simple paths, the invalid weight included.
pub fn consistent_weights<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    n: usize,
) -> Vec<A::Weight> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut push = |w: A::Weight| {
        if seen.insert(w.clone()) {
            out.push(w);
        }
    };
    push(alg.invalid());
    for p in crate::pathalg::enumerate_simple_paths(n) {
        push(weight_of_path(alg, topo, &p));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OracleKind {
    DistanceVector,
    PathVector,
}

/// Dissimilarity functions between weights, tables and states, built from
/// dislodgement heights (and, for path algebras, inconsistent path lengths).
#[derive(Debug, Clone)]
pub struct DissimilarityOracle<W> {
    kind: OracleKind,
    participants: BTreeSet<u32>,
    n: usize,
    heights: HeightTable<W>,
    /// Path-vector only: membership in the consistent set and the largest
    /// consistent dissimilarity.
    consistent: Option<HashSet<W>>,
    consistent_bound: usize,
}

/// Distance-vector dissimilarity: requires an enumerable carrier closed
/// under the topology and a free instance.
pub fn dv_dissimilarity<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    participants: &BTreeSet<u32>,
) -> Result<DissimilarityOracle<A::Weight>, ConvergenceError> {
    let heights = dislodgement_height(alg, topo)?;
    Ok(DissimilarityOracle {
        kind: OracleKind::DistanceVector,
        participants: participants.clone(),
        n: topo.n(),
        heights,
        consistent: None,
        consistent_bound: 0,
    })
}

/// Path-vector dissimilarity: heights over the consistent sub-algebra, with
/// inconsistent weights ranked above every consistent disagreement.
pub fn pv_dissimilarity<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    n: usize,
    participants: &BTreeSet<u32>,
) -> Result<DissimilarityOracle<A::Weight>, ConvergenceError> {
    if !alg.is_path_algebra() {
        return Err(ConvergenceError::NoPathFunction);
    }
    let consistent = consistent_weights(alg, topo, n);
    let heights = heights_over(alg, topo, &consistent)?;
    let consistent_bound = 1 + heights.max_height();
    Ok(DissimilarityOracle {
        kind: OracleKind::PathVector,
        participants: participants.clone(),
        n,
        heights,
        consistent: Some(consistent.into_iter().collect()),
        consistent_bound,
    })
}

impl<W: Clone + Eq + std::hash::Hash> DissimilarityOracle<W> {
    pub fn participants(&self) -> &BTreeSet<u32> {
        &self.participants
    }

    /// Largest consistent dissimilarity (path-vector oracles only).
    pub fn consistent_bound(&self) -> usize {
        self.consistent_bound
    }

    /// Largest value the weight dissimilarity can take.
    pub fn bound(&self) -> usize {
        match self.kind {
            OracleKind::DistanceVector => 1 + self.heights.max_height(),
            OracleKind::PathVector => 1 + self.consistent_bound + self.inconsistent_max(),
        }
    }

    fn inconsistent_max(&self) -> usize {
        self.n + 1
    }

    /// Inconsistent height: zero for consistent weights, otherwise one plus
    /// the number of hops the stored path has left to grow.
    pub fn inconsistent_height<A: Algebra<Weight = W>>(&self, alg: &A, x: &W) -> usize {
        let consistent = self
            .consistent
            .as_ref()
            .expect("inconsistent heights exist only for path-vector oracles");
        if consistent.contains(x) {
            return 0;
        }
        let path = alg.path_of(x).expect("path algebra");
        let len = path
            .len()
            .expect("an inconsistent weight stores a valid path");
        1 + self.n.saturating_sub(len)
    }

    /// Dissimilarity between two weights as seen by router `i`.
    pub fn r<A: Algebra<Weight = W>>(&self, alg: &A, i: usize, x: &W, y: &W) -> usize {
        if x == y {
            return 0;
        }
        match self.kind {
            OracleKind::DistanceVector => {
                let hx = self.heights.height(i, x).expect("carrier weight");
                let hy = self.heights.height(i, y).expect("carrier weight");
                1 + hx.max(hy)
            }
            OracleKind::PathVector => {
                let consistent = self.consistent.as_ref().unwrap();
                if consistent.contains(x) && consistent.contains(y) {
                    let hx = self.heights.height(i, x).expect("consistent weight");
                    let hy = self.heights.height(i, y).expect("consistent weight");
                    1 + hx.max(hy)
                } else {
                    let ix = self.inconsistent_height(alg, x);
                    let iy = self.inconsistent_height(alg, y);
                    1 + self.consistent_bound + ix.max(iy)
                }
            }
        }
    }

    /// Dissimilarity between two routing tables of router `i`.
    pub fn d<A: Algebra<Weight = W>>(&self, alg: &A, i: usize, xs: &[W], ys: &[W]) -> usize {
        xs.iter()
            .zip(ys)
            .map(|(x, y)| self.r(alg, i, x, y))
            .max()
            .unwrap_or(0)
    }

    /// Dissimilarity between two states: the largest table dissimilarity
    /// over the participating routers.
    pub fn state_distance<A: Algebra<Weight = W>>(
        &self,
        alg: &A,
        x: &RoutingState<W>,
        y: &RoutingState<W>,
    ) -> usize {
        self.participants
            .iter()
            .map(|&i| self.d(alg, i as usize, x.row(i as usize), y.row(i as usize)))
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AmcoStatus {
    Holds,
    Sampled { cases: usize },
    Fails { detail: String },
    NotApplicable { reason: String },
}

impl AmcoStatus {
    pub fn passed(&self) -> bool {
        !matches!(self, AmcoStatus::Fails { .. })
    }
}

#[derive(Debug, Clone)]
pub struct AmcoReport {
    pub dissimilarity: &'static str,
    pub bound: usize,
    pub entries: Vec<(String, AmcoStatus)>,
}

impl AmcoReport {
    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|(_, s)| s.passed())
    }

    pub fn status(&self, name: &str) -> Option<&AmcoStatus> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "dissimilarity: {} (bound {})\n",
            self.dissimilarity, self.bound
        );
        for (name, status) in &self.entries {
            let line = match status {
                AmcoStatus::Holds => format!("{name}: holds"),
                AmcoStatus::Sampled { cases } => {
                    format!("{name}: sampled({cases} cases, no counterexample)")
                }
                AmcoStatus::Fails { detail } => format!("{name}: FAILS ({detail})"),
                AmcoStatus::NotApplicable { reason } => {
                    format!("{name}: not applicable ({reason})")
                }
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

const EXHAUSTIVE_STATE_BUDGET: usize = 250_000;

/// Verifies the five conditions that make the per-epoch iteration an
/// asynchronously metrically contracting operator: the dissimilarity is
/// indiscernible and bounded, the iteration contracts strictly on orbits
/// and towards the witnessed fixed point, and it forces accordancy. The
/// dissimilarity is the path-vector one when the algebra extracts paths,
/// and the distance-vector one otherwise.
pub fn check_amco<A: Algebra>(
    alg: &A,
    network: &NetworkOverEpochs,
    epoch: usize,
    participants: &BTreeSet<u32>,
    mode: CheckMode,
) -> Result<AmcoReport, ConvergenceError> {
    let n = network.n();
    let topo = participating_topology(alg, network, epoch, participants)?;
    let (oracle, kind_name) = if alg.is_path_algebra() {
        (pv_dissimilarity(alg, &topo, n, participants)?, "path-vector")
    } else {
        (dv_dissimilarity(alg, &topo, participants)?, "distance-vector")
    };
    let bound = oracle.bound();
    let identity = RoutingState::identity(alg, n);

    // the fixed point, when the synchronous run from the identity finds one
    let horizon = crate::protocol::default_horizon(alg, n).unwrap_or(10 * n * n + 50);
    let fixed_point = match run_synchronous(alg, &topo, &identity, horizon) {
        SyncOutcome::Converged { state, .. } => Some(state),
        _ => None,
    };

    let mut entries = Vec::new();
    match mode {
        CheckMode::Exhaustive => {
            let carrier = alg.enumerate().ok_or(ConvergenceError::NotEnumerable)?;

            // D1/D2 at the weight level; maxima lift them to tables intact
            let mut d1 = AmcoStatus::Holds;
            let mut d2 = AmcoStatus::Holds;
            'd12: for i in participants.iter().map(|&i| i as usize) {
                for x in &carrier {
                    for y in &carrier {
                        let r = oracle.r(alg, i, x, y);
                        if (r == 0) != (x == y) {
                            d1 = AmcoStatus::Fails {
                                detail: format!(
                                    "r_{i}({}, {}) = {r}",
                                    alg.render(x),
                                    alg.render(y)
                                ),
                            };
                            break 'd12;
                        }
                        if r > bound {
                            d2 = AmcoStatus::Fails {
                                detail: format!(
                                    "r_{i}({}, {}) = {r} exceeds bound {bound}",
                                    alg.render(x),
                                    alg.render(y)
                                ),
                            };
                            break 'd12;
                        }
                    }
                }
            }
            entries.push(("D1 indiscernible".to_string(), d1));
            entries.push(("D2 bounded".to_string(), d2));

            let accordant = enumerate_accordant_states(alg, &carrier, n, participants)?;
            let mut d3 = AmcoStatus::Holds;
            for x in &accordant {
                if let Some(detail) = d3_violation(alg, &topo, &oracle, x) {
                    d3 = AmcoStatus::Fails { detail };
                    break;
                }
            }
            entries.push(("D3 strictly contracting on orbits".to_string(), d3));

            let d4 = match &fixed_point {
                None => AmcoStatus::NotApplicable {
                    reason: "no fixed point witnessed within the horizon".to_string(),
                },
                Some(star) => {
                    let mut status = AmcoStatus::Holds;
                    for x in &accordant {
                        if let Some(detail) = d4_violation(alg, &topo, &oracle, star, x) {
                            status = AmcoStatus::Fails { detail };
                            break;
                        }
                    }
                    status
                }
            };
            entries.push(("D4 strictly contracting on the fixed point".to_string(), d4));

            let all_states = enumerate_states(alg, &carrier, n)?;
            let mut d5 = AmcoStatus::Holds;
            for x in &all_states {
                if let Some(detail) = d5_violation(alg, &topo, x, participants, &identity) {
                    d5 = AmcoStatus::Fails { detail };
                    break;
                }
            }
            entries.push(("D5 enforces accordancy".to_string(), d5));
        }
        CheckMode::Sampled { seed, cases } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pass = AmcoStatus::Sampled { cases };
            let mut d1 = pass.clone();
            let mut d2 = pass.clone();
            let mut d3 = pass.clone();
            let mut d4 = match fixed_point {
                Some(_) => pass.clone(),
                None => AmcoStatus::NotApplicable {
                    reason: "no fixed point witnessed within the horizon".to_string(),
                },
            };
            let mut d5 = pass;

            for _ in 0..cases {
                let i = *participants
                    .iter()
                    .nth(rng.gen_range(0..participants.len().max(1)))
                    .unwrap_or(&0) as usize;
                let x = alg.sample_weight(&mut rng);
                let y = if rng.gen_bool(0.2) {
                    x.clone()
                } else {
                    alg.sample_weight(&mut rng)
                };
                if d1.passed() {
                    let r = oracle.r(alg, i, &x, &y);
                    if (r == 0) != (x == y) {
                        d1 = AmcoStatus::Fails {
                            detail: format!(
                                "r_{i}({}, {}) = {r}",
                                alg.render(&x),
                                alg.render(&y)
                            ),
                        };
                    }
                }
                if d2.passed() {
                    let r = oracle.r(alg, i, &x, &y);
                    if r > bound {
                        d2 = AmcoStatus::Fails {
                            detail: format!("r exceeds bound: {r} > {bound}"),
                        };
                    }
                }

                let state = sample_accordant_state(alg, n, participants, &mut rng);
                if d3.passed() {
                    if let Some(detail) = d3_violation(alg, &topo, &oracle, &state) {
                        d3 = AmcoStatus::Fails { detail };
                    }
                }
                if d4.passed() && !matches!(d4, AmcoStatus::NotApplicable { .. }) {
                    if let Some(star) = &fixed_point {
                        if let Some(detail) = d4_violation(alg, &topo, &oracle, star, &state) {
                            d4 = AmcoStatus::Fails { detail };
                        }
                    }
                }
                if d5.passed() {
                    let arbitrary = sample_state(alg, n, &mut rng);
                    if let Some(detail) =
                        d5_violation(alg, &topo, &arbitrary, participants, &identity)
                    {
                        d5 = AmcoStatus::Fails { detail };
                    }
                }
            }
            entries.push(("D1 indiscernible".to_string(), d1));
            entries.push(("D2 bounded".to_string(), d2));
            entries.push(("D3 strictly contracting on orbits".to_string(), d3));
            entries.push(("D4 strictly contracting on the fixed point".to_string(), d4));
            entries.push(("D5 enforces accordancy".to_string(), d5));
        }
    }

    Ok(AmcoReport {
        dissimilarity: kind_name,
        bound,
        entries,
    })
}

fn d3_violation<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    oracle: &DissimilarityOracle<A::Weight>,
    x: &RoutingState<A::Weight>,
) -> Option<String> {
    let fx = step(alg, topo, x).ok()?;
    if fx == *x {
        return None;
    }
    let ffx = step(alg, topo, &fx).ok()?;
    let before = oracle.state_distance(alg, x, &fx);
    let after = oracle.state_distance(alg, &fx, &ffx);
    (after >= before).then(|| format!("D(X,F(X)) = {before} but D(F(X),F²(X)) = {after}"))
}

fn d4_violation<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    oracle: &DissimilarityOracle<A::Weight>,
    star: &RoutingState<A::Weight>,
    x: &RoutingState<A::Weight>,
) -> Option<String> {
    if x == star {
        return None;
    }
    let fx = step(alg, topo, x).ok()?;
    let before = oracle.state_distance(alg, star, x);
    let after = oracle.state_distance(alg, star, &fx);
    (after >= before).then(|| format!("D(X*,X) = {before} but D(X*,F(X)) = {after}"))
}

fn d5_violation<A: Algebra>(
    alg: &A,
    topo: &AdjacencyMatrix,
    x: &RoutingState<A::Weight>,
    participants: &BTreeSet<u32>,
    identity: &RoutingState<A::Weight>,
) -> Option<String> {
    let fx = step(alg, topo, x).ok()?;
    for i in 0..x.n() {
        if participants.contains(&(i as u32)) {
            continue;
        }
        if fx.row(i) != identity.row(i) {
            return Some(format!("non-participant {i} left the identity row"));
        }
    }
    None
}

/// Accordant states: participating rows range over the carrier, the rest
/// hold identity rows.
fn enumerate_accordant_states<A: Algebra>(
    alg: &A,
    carrier: &[A::Weight],
    n: usize,
    participants: &BTreeSet<u32>,
) -> Result<Vec<RoutingState<A::Weight>>, ConvergenceError> {
    let free_cells: Vec<(usize, usize)> = (0..n)
        .filter(|i| participants.contains(&(*i as u32)))
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .collect();
    enumerate_states_over(alg, carrier, n, &free_cells)
}

fn enumerate_states<A: Algebra>(
    alg: &A,
    carrier: &[A::Weight],
    n: usize,
) -> Result<Vec<RoutingState<A::Weight>>, ConvergenceError> {
    let cells: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    enumerate_states_over(alg, carrier, n, &cells)
}

fn enumerate_states_over<A: Algebra>(
    alg: &A,
    carrier: &[A::Weight],
    n: usize,
    free_cells: &[(usize, usize)],
) -> Result<Vec<RoutingState<A::Weight>>, ConvergenceError> {
    let total = carrier
        .len()
        .checked_pow(free_cells.len() as u32)
        .filter(|&t| t <= EXHAUSTIVE_STATE_BUDGET)
        .ok_or(ConvergenceError::TooLarge { states: usize::MAX })?;
    let mut out = Vec::with_capacity(total);
    let mut counters = vec![0usize; free_cells.len()];
    loop {
        let mut state = RoutingState::identity(alg, n);
        for (slot, &(i, j)) in free_cells.iter().enumerate() {
            state.set(i, j, carrier[counters[slot]].clone());
        }
        out.push(state);
        let mut slot = 0;
        loop {
            if slot == free_cells.len() {
                return Ok(out);
            }
            counters[slot] += 1;
            if counters[slot] < carrier.len() {
                break;
            }
            counters[slot] = 0;
            slot += 1;
        }
    }
}

pub fn sample_accordant_state<A: Algebra>(
    alg: &A,
    n: usize,
    participants: &BTreeSet<u32>,
    rng: &mut ChaCha8Rng,
) -> RoutingState<A::Weight> {
    let mut state = RoutingState::identity(alg, n);
    for i in 0..n {
        if !participants.contains(&(i as u32)) {
            continue;
        }
        for j in 0..n {
            state.set(i, j, alg.sample_weight(rng));
        }
    }
    state
}

fn sample_state<A: Algebra>(alg: &A, n: usize, rng: &mut ChaCha8Rng) -> RoutingState<A::Weight> {
    let mut state = RoutingState::filled(n, alg.invalid());
    for i in 0..n {
        for j in 0..n {
            state.set(i, j, alg.sample_weight(rng));
        }
    }
    state
}
