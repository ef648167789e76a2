//! Routing states, adjacency matrices and the synchronous protocol.
//!
//! A routing state is an `n x n` grid of path-weights: row `i` is router
//! `i`'s table and entry `(i, j)` its best current weight to `j`. An
//! adjacency matrix stores, per entry `(i, j)`, the name of the policy that
//! router `i` applies to routes advertised by `j`; absent links hold the
//! edge's constantly-invalid policy. One synchronous round extends every
//! neighbour's table across the corresponding link, folds the candidates
//! with choice, and then folds in the identity matrix.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use crate::algebra::{Algebra, PolicyName};
use crate::topology::{Edge, NodeId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RoutingState<W> {
    n: usize,
    cells: Vec<W>,
}

impl<W: Clone + Eq> RoutingState<W> {
    pub fn filled(n: usize, w: W) -> Self {
        RoutingState {
            n,
            cells: vec![w; n * n],
        }
    }

    /// The state with the trivial weight on the diagonal and the invalid
    /// weight elsewhere.
    pub fn identity<A: Algebra<Weight = W>>(alg: &A, n: usize) -> Self {
        let mut state = Self::filled(n, alg.invalid());
        for i in 0..n {
            state.set(i, i, alg.trivial());
        }
        state
    }

    pub fn from_rows(rows: Vec<Vec<W>>) -> Result<Self, ProtocolError> {
        let n = rows.len();
        let mut cells = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(ProtocolError::DimensionMismatch {
                    left: n,
                    right: row.len(),
                });
            }
            cells.extend(row);
        }
        Ok(RoutingState { n, cells })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &W {
        &self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, w: W) {
        self.cells[i * self.n + j] = w;
    }

    pub fn row(&self, i: usize) -> &[W] {
        &self.cells[i * self.n..(i + 1) * self.n]
    }

    pub fn set_row(&mut self, i: usize, row: Vec<W>) {
        assert_eq!(row.len(), self.n);
        self.cells[i * self.n..(i + 1) * self.n]
            .iter_mut()
            .zip(row)
            .for_each(|(slot, w)| *slot = w);
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &W)> {
        self.cells
            .iter()
            .enumerate()
            .map(move |(k, w)| (k / self.n, k % self.n, w))
    }

    pub fn render<A: Algebra<Weight = W>>(&self, alg: &A) -> Vec<Vec<String>> {
        (0..self.n)
            .map(|i| self.row(i).iter().map(|w| alg.render(w)).collect())
            .collect()
    }

    pub fn parse<A: Algebra<Weight = W>>(
        alg: &A,
        rows: &[Vec<String>],
    ) -> Result<Self, crate::algebra::AlgebraError> {
        let mut parsed = Vec::with_capacity(rows.len());
        for row in rows {
            let cells: Result<Vec<W>, _> = row.iter().map(|s| alg.parse_weight(s)).collect();
            parsed.push(cells?);
        }
        Self::from_rows(parsed).map_err(|e| crate::algebra::AlgebraError::BadWeight {
            text: String::new(),
            reason: e.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AdjacencyMatrix {
    n: usize,
    cells: Vec<PolicyName>,
}

impl AdjacencyMatrix {
    /// All links absent.
    pub fn empty<A: Algebra>(alg: &A, n: usize) -> Self {
        let cells = (0..n * n)
            .map(|k| alg.invalid_policy(Edge::new((k / n) as u32, (k % n) as u32)))
            .collect();
        AdjacencyMatrix { n, cells }
    }

    /// Builds a topology from `(i, j, policy)` entries, where router `i`
    /// applies `policy` to routes advertised by `j`. Every referenced policy
    /// must resolve in the algebra's catalog for that edge.
    pub fn from_entries<A: Algebra>(
        alg: &A,
        n: usize,
        entries: &[(u32, u32, PolicyName)],
    ) -> Result<Self, String> {
        let mut m = Self::empty(alg, n);
        for (i, j, name) in entries {
            if *i as usize >= n || *j as usize >= n {
                return Err(format!("edge ({i},{j}) out of range for {n} routers"));
            }
            let edge = Edge::new(*i, *j);
            if !alg.has_policy(edge, name) {
                return Err(format!("policy {name} does not resolve on edge {edge}"));
            }
            m.cells[*i as usize * n + *j as usize] = name.clone();
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &PolicyName {
        &self.cells[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, name: PolicyName) {
        self.cells[i * self.n + j] = name;
    }

    /// Applies entry `(i, j)` to a weight. Names are validated when the
    /// matrix is built, so resolution cannot fail here.
    pub fn apply<A: Algebra>(&self, alg: &A, i: usize, j: usize, x: &A::Weight) -> A::Weight {
        alg.extend(Edge::new(i as u32, j as u32), self.get(i, j), x)
            .expect("policy names are validated at matrix construction")
    }
}

/// Pointwise choice of two states.
pub fn state_choice<A: Algebra>(
    alg: &A,
    x: &RoutingState<A::Weight>,
    y: &RoutingState<A::Weight>,
) -> Result<RoutingState<A::Weight>, ProtocolError> {
    if x.n != y.n {
        return Err(ProtocolError::DimensionMismatch {
            left: x.n,
            right: y.n,
        });
    }
    let cells = x
        .cells
        .iter()
        .zip(&y.cells)
        .map(|(a, b)| alg.choose(a, b))
        .collect();
    Ok(RoutingState { n: x.n, cells })
}

/// Entry `(i, j)` of the application of a topology to a state: the fold of
/// `A_ik(X_kj)` over `k` ascending. The fold order is immaterial once
/// associativity and commutativity hold; fixing it keeps broken algebras
/// deterministic under test.
pub fn apply_topology<A: Algebra>(
    alg: &A,
    a: &AdjacencyMatrix,
    x: &RoutingState<A::Weight>,
) -> Result<RoutingState<A::Weight>, ProtocolError> {
    if a.n != x.n {
        return Err(ProtocolError::DimensionMismatch {
            left: a.n,
            right: x.n,
        });
    }
    let n = x.n;
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            out.push(fold_entry(alg, a, x, i, j));
        }
    }
    Ok(RoutingState { n, cells: out })
}

fn fold_entry<A: Algebra>(
    alg: &A,
    a: &AdjacencyMatrix,
    x: &RoutingState<A::Weight>,
    i: usize,
    j: usize,
) -> A::Weight {
    let mut acc = a.apply(alg, i, 0, x.get(0, j));
    for k in 1..x.n {
        let term = a.apply(alg, i, k, x.get(k, j));
        acc = alg.choose(&acc, &term);
    }
    acc
}

/// One synchronous round: apply the topology, then fold in the identity.
pub fn step<A: Algebra>(
    alg: &A,
    a: &AdjacencyMatrix,
    x: &RoutingState<A::Weight>,
) -> Result<RoutingState<A::Weight>, ProtocolError> {
    let applied = apply_topology(alg, a, x)?;
    let identity = RoutingState::identity(alg, x.n);
    let next = state_choice(alg, &applied, &identity)?;
    debug_assert_path_origins(alg, &next);
    Ok(next)
}

/// Row `i` of `step(A, X)` without materializing the whole next state. Used
/// by the asynchronous evaluator, where each router row is computed against
/// its own local view.
pub fn step_row<A: Algebra>(
    alg: &A,
    a: &AdjacencyMatrix,
    x: &RoutingState<A::Weight>,
    i: usize,
) -> Vec<A::Weight> {
    let n = x.n;
    let mut row = Vec::with_capacity(n);
    for j in 0..n {
        let folded = fold_entry(alg, a, x, i, j);
        let id = if i == j { alg.trivial() } else { alg.invalid() };
        row.push(alg.choose(&folded, &id));
    }
    debug_assert_row_origin(alg, &row, i);
    row
}

/// In a path algebra, every weight a router computes for itself either is
/// invalid, stores the trivial path, or stores a path originating at that
/// router. Checked in debug builds on every computed row.
fn debug_assert_row_origin<A: Algebra>(alg: &A, row: &[A::Weight], i: usize) {
    if cfg!(debug_assertions) && alg.is_path_algebra() {
        for w in row {
            if *w == alg.invalid() {
                continue;
            }
            let p = alg.path_of(w).expect("path algebra");
            assert!(
                p.is_trivial() || p.origin() == Some(NodeId(i as u32)),
                "row {i} holds a weight whose path starts elsewhere: {}",
                alg.render(w)
            );
        }
    }
}

fn debug_assert_path_origins<A: Algebra>(alg: &A, state: &RoutingState<A::Weight>) {
    if cfg!(debug_assertions) && alg.is_path_algebra() {
        for i in 0..state.n {
            debug_assert_row_origin(alg, state.row(i), i);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SyncOutcome<W> {
    /// `state` is the first fixed point reached, at iteration `t`.
    Converged { state: RoutingState<W>, t: usize },
    /// The orbit revisited `entry`, first seen at `entry_t`, with the given
    /// period.
    Oscillating {
        period: usize,
        entry_t: usize,
        entry: RoutingState<W>,
    },
    Exhausted { last: RoutingState<W>, max_t: usize },
}

impl<W> SyncOutcome<W> {
    pub fn fixed_point(&self) -> Option<&RoutingState<W>> {
        match self {
            SyncOutcome::Converged { state, .. } => Some(state),
            _ => None,
        }
    }
}

/// Iterates the synchronous protocol from `x0` for at most `max_t` rounds.
/// The orbit is deterministic, so the first repeated state proves a cycle;
/// period 1 is convergence, anything longer an oscillation.
pub fn run_synchronous<A: Algebra>(
    alg: &A,
    a: &AdjacencyMatrix,
    x0: &RoutingState<A::Weight>,
    max_t: usize,
) -> SyncOutcome<A::Weight>
where
    A::Weight: std::hash::Hash,
{
    let mut seen: HashMap<RoutingState<A::Weight>, usize> = HashMap::new();
    seen.insert(x0.clone(), 0);
    let mut cur = x0.clone();
    for t in 0..max_t {
        let next = step(alg, a, &cur).expect("dimensions fixed by construction");
        if next == cur {
            return SyncOutcome::Converged { state: cur, t };
        }
        if let Some(&entry_t) = seen.get(&next) {
            return SyncOutcome::Oscillating {
                period: t + 1 - entry_t,
                entry_t,
                entry: next,
            };
        }
        seen.insert(next.clone(), t + 1);
        cur = next;
    }
    SyncOutcome::Exhausted {
        last: cur,
        max_t,
    }
}

/// Crude safe horizon for finite algebras: carrier size times the number of
/// state entries.
pub fn default_horizon<A: Algebra>(alg: &A, n: usize) -> Option<usize> {
    alg.enumerate().map(|s| s.len() * n * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{NatInf, Table1Algebra};

    fn pn(s: &str) -> PolicyName {
        PolicyName::new(s)
    }

    fn shortest_state(n: usize, rows: &[&[NatInf]]) -> RoutingState<NatInf> {
        let mut st = RoutingState::filled(n, NatInf::Inf);
        for (i, row) in rows.iter().enumerate() {
            for (j, w) in row.iter().enumerate() {
                st.set(i, j, *w);
            }
        }
        st
    }

    const F0: NatInf = NatInf::Fin(0);
    const F1: NatInf = NatInf::Fin(1);
    const F2: NatInf = NatInf::Fin(2);
    const F3: NatInf = NatInf::Fin(3);
    const F5: NatInf = NatInf::Fin(5);
    const INF: NatInf = NatInf::Inf;

    #[test]
    fn state_choice_is_pointwise() {
        let alg = Table1Algebra::shortest(16);
        let x = shortest_state(2, &[&[F0, F3], &[INF, F0]]);
        let y = shortest_state(2, &[&[F0, F2], &[F5, F0]]);
        let expect = shortest_state(2, &[&[F0, F2], &[F5, F0]]);
        assert_eq!(state_choice(&alg, &x, &y).unwrap(), expect);

        // selectivity forces idempotence, the invalid state is an identity
        assert_eq!(state_choice(&alg, &x, &x).unwrap(), x);
        let all_inf = RoutingState::filled(2, INF);
        assert_eq!(state_choice(&alg, &x, &all_inf).unwrap(), x);
    }

    #[test]
    fn empty_topology_blocks_everything() {
        let alg = Table1Algebra::shortest(16);
        let a = AdjacencyMatrix::empty(&alg, 3);
        let x = RoutingState::identity(&alg, 3);
        let out = apply_topology(&alg, &a, &x).unwrap();
        assert!(out.entries().all(|(_, _, w)| *w == INF));
    }

    #[test]
    fn single_router_fold_has_one_term() {
        let alg = Table1Algebra::shortest(16);
        let mut a = AdjacencyMatrix::empty(&alg, 1);
        a.set(0, 0, pn("add:2"));
        let x = shortest_state(1, &[&[F3]]);
        let out = apply_topology(&alg, &a, &x).unwrap();
        assert_eq!(*out.get(0, 0), F5);
    }

    #[test]
    fn two_node_application_from_identity() {
        let alg = Table1Algebra::shortest(16);
        let a = AdjacencyMatrix::from_entries(&alg, 2, &[(0, 1, pn("add:1"))]).unwrap();
        let out = apply_topology(&alg, &a, &RoutingState::identity(&alg, 2)).unwrap();
        assert_eq!(*out.get(0, 1), F1);
        assert_eq!(*out.get(0, 0), INF);
        assert_eq!(*out.get(1, 0), INF);
        assert_eq!(*out.get(1, 1), INF);
    }

    #[test]
    fn step_pins_the_diagonal_and_matches_hand_result() {
        let alg = Table1Algebra::shortest(16);
        let a = AdjacencyMatrix::from_entries(&alg, 2, &[(0, 1, pn("add:1"))]).unwrap();
        let out = step(&alg, &a, &RoutingState::identity(&alg, 2)).unwrap();
        assert_eq!(out, shortest_state(2, &[&[F0, F1], &[INF, F0]]));
    }

    #[test]
    fn three_node_line_reaches_the_expected_fixed_point() {
        let alg = Table1Algebra::shortest(16);
        let a =
            AdjacencyMatrix::from_entries(&alg, 3, &[(1, 0, pn("add:1")), (2, 1, pn("add:1"))])
                .unwrap();
        let expect = shortest_state(3, &[&[F0, INF, INF], &[F1, F0, INF], &[F2, F1, F0]]);
        match run_synchronous(&alg, &a, &RoutingState::identity(&alg, 3), 16) {
            SyncOutcome::Converged { state, t } => {
                assert!(t <= 3);
                assert_eq!(state, expect);
                assert_eq!(state, bellman_ford_oracle(&alg, 3, &[(1, 0, 1), (2, 1, 1)]));
            }
            other => panic!("expected convergence, got {other:?}"),
        }
    }

    #[test]
    fn fixed_point_input_converges_at_zero() {
        let alg = Table1Algebra::shortest(16);
        let a = AdjacencyMatrix::from_entries(&alg, 2, &[(0, 1, pn("add:1"))]).unwrap();
        let fixed = shortest_state(2, &[&[F0, F1], &[INF, F0]]);
        match run_synchronous(&alg, &a, &fixed, 8) {
            SyncOutcome::Converged { state, t } => {
                assert_eq!(t, 0);
                assert_eq!(state, fixed);
            }
            other => panic!("expected immediate convergence, got {other:?}"),
        }
    }

    #[test]
    fn random_strictly_increasing_instances_converge() {
        use rand::{Rng, SeedableRng};
        let alg = Table1Algebra::shortest_with_min_weight(16, 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let n = 4;
            let mut entries = Vec::new();
            for i in 0..n as u32 {
                for j in 0..n as u32 {
                    if i != j && rng.gen_bool(0.5) {
                        entries.push((i, j, pn(&format!("add:{}", rng.gen_range(1..=16)))));
                    }
                }
            }
            let a = AdjacencyMatrix::from_entries(&alg, n, &entries).unwrap();
            let horizon = default_horizon(&alg, n).unwrap();
            let out = run_synchronous(&alg, &a, &RoutingState::identity(&alg, n), horizon);
            assert!(matches!(out, SyncOutcome::Converged { .. }));
        }
    }

    /// Independent all-pairs shortest paths by relaxation, mapped onto the
    /// capped carrier.
    fn bellman_ford_oracle(
        alg: &Table1Algebra,
        n: usize,
        arcs: &[(usize, usize, u64)],
    ) -> RoutingState<NatInf> {
        let big = u64::MAX / 4;
        let mut d = vec![vec![big; n]; n];
        for i in 0..n {
            d[i][i] = 0;
        }
        for _ in 0..n {
            for &(i, k, w) in arcs {
                for j in 0..n {
                    if d[k][j] < big && w + d[k][j] < d[i][j] {
                        d[i][j] = w + d[k][j];
                    }
                }
            }
        }
        let mut st = RoutingState::filled(n, NatInf::Inf);
        for i in 0..n {
            for j in 0..n {
                if d[i][j] <= alg.cap() as u64 {
                    st.set(i, j, NatInf::Fin(d[i][j] as u32));
                }
            }
        }
        st
    }
}
