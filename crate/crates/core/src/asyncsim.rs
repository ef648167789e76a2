//! Schedules, networks over epochs, the asynchronous state function, and
//! pseudocycle accounting.
//!
//! A schedule records, per discrete time step, which routers update their
//! tables (`alpha`), the send time of the route advertisement each router
//! uses from each neighbour (`beta`), the epoch (`eta`), and per epoch the
//! participant set (`pi`). The two well-formedness conditions are that
//! information only travels forward in time and that epochs never decrease.
//! Nothing else is assumed: the data-flow function is free to delay, lose,
//! reorder and duplicate messages.
//!
//! `beta` is 0 before the first delivery on a link, pairing with the rule
//! that time 0 holds the initial state: no news yet means a router still
//! works from initial knowledge.
//!
//! The asynchronous evaluator memoizes the full state sequence, since the
//! recursion reaches arbitrary past times through `beta`. It consults
//! `beta(t,i,k)` for every k uniformly, neighbour or not; the participating
//! topology's constantly-invalid entries neutralize the non-neighbours,
//! where a real router would simply not read them.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::algebra::Algebra;
use crate::protocol::{step_row, AdjacencyMatrix, RoutingState};
use crate::topology::Edge;

/// One adjacency matrix per epoch.
#[derive(Debug, Clone)]
pub struct NetworkOverEpochs {
    matrices: Vec<AdjacencyMatrix>,
}

impl NetworkOverEpochs {
    pub fn new(matrices: Vec<AdjacencyMatrix>) -> Self {
        assert!(!matrices.is_empty());
        let n = matrices[0].n();
        assert!(matrices.iter().all(|m| m.n() == n), "epoch dimensions differ");
        NetworkOverEpochs { matrices }
    }

    pub fn n(&self) -> usize {
        self.matrices[0].n()
    }

    pub fn epochs(&self) -> usize {
        self.matrices.len()
    }

    pub fn topology(&self, e: usize) -> Option<&AdjacencyMatrix> {
        self.matrices.get(e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("S1 violated at t={t}: beta({t},{i},{j}) = {beta} > {limit}")]
    DataFlowFromFuture {
        t: usize,
        i: u32,
        j: u32,
        beta: usize,
        limit: usize,
    },
    #[error("S2 violated at t={t}: epoch decreased from {prev} to {cur}")]
    EpochDecreased { t: usize, prev: usize, cur: usize },
}

#[derive(Debug, Clone, Error)]
pub enum ScheduleError {
    #[error("schedule violates well-formedness: {0:?}")]
    InvalidSchedule(Vec<Violation>),
    #[error("epoch {epoch} out of range ({epochs} epochs)")]
    EpochOutOfRange { epoch: usize, epochs: usize },
    #[error("dimension mismatch between schedule, network and state")]
    DimensionMismatch,
}

/// A finite-horizon schedule realization.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleTrace {
    n: usize,
    horizon: usize,
    /// Activating routers, indexed by t in `1..=horizon` (slot 0 unused).
    alpha: Vec<BTreeSet<u32>>,
    /// Send times, indexed by t in `1..=horizon`, flat `i * n + j`.
    beta: Vec<Vec<usize>>,
    /// Epoch index per time in `0..=horizon`.
    eta: Vec<usize>,
    /// Participants per epoch.
    pi: Vec<BTreeSet<u32>>,
}

impl ScheduleTrace {
    pub fn new(
        n: usize,
        horizon: usize,
        alpha: Vec<BTreeSet<u32>>,
        beta: Vec<Vec<usize>>,
        eta: Vec<usize>,
        pi: Vec<BTreeSet<u32>>,
    ) -> Self {
        assert_eq!(alpha.len(), horizon + 1);
        assert_eq!(beta.len(), horizon + 1);
        assert!(beta.iter().skip(1).all(|row| row.len() == n * n));
        assert_eq!(eta.len(), horizon + 1);
        ScheduleTrace {
            n,
            horizon,
            alpha,
            beta,
            eta,
            pi,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn alpha(&self, t: usize) -> &BTreeSet<u32> {
        &self.alpha[t]
    }

    pub fn beta(&self, t: usize, i: usize, j: usize) -> usize {
        self.beta[t][i * self.n + j]
    }

    pub fn set_beta(&mut self, t: usize, i: usize, j: usize, v: usize) {
        self.beta[t][i * self.n + j] = v;
    }

    pub fn eta(&self, t: usize) -> usize {
        self.eta[t]
    }

    pub fn epochs(&self) -> usize {
        self.pi.len()
    }

    pub fn participants(&self, epoch: usize) -> &BTreeSet<u32> {
        &self.pi[epoch]
    }

    /// Participants at time t.
    pub fn rho(&self, t: usize) -> &BTreeSet<u32> {
        &self.pi[self.eta[t]]
    }

    /// The fully synchronous schedule: everyone participates and activates
    /// every step, and every view is one step old.
    pub fn synchronous(n: usize, horizon: usize) -> Self {
        let everyone: BTreeSet<u32> = (0..n as u32).collect();
        let mut alpha = vec![BTreeSet::new()];
        let mut beta = vec![Vec::new()];
        for t in 1..=horizon {
            alpha.push(everyone.clone());
            beta.push(vec![t - 1; n * n]);
        }
        ScheduleTrace::new(n, horizon, alpha, beta, vec![0; horizon + 1], vec![everyone])
    }
}

/// Empty iff information only travels forward in time and epochs never
/// decrease.
pub fn validate_schedule(s: &ScheduleTrace) -> Vec<Violation> {
    let mut out = Vec::new();
    for t in 1..=s.horizon {
        for i in 0..s.n {
            for j in 0..s.n {
                let b = s.beta(t, i, j);
                if b + 1 > t {
                    out.push(Violation::DataFlowFromFuture {
                        t,
                        i: i as u32,
                        j: j as u32,
                        beta: b,
                        limit: t - 1,
                    });
                }
            }
        }
        if s.eta[t] < s.eta[t - 1] {
            out.push(Violation::EpochDecreased {
                t,
                prev: s.eta[t - 1],
                cur: s.eta[t],
            });
        }
    }
    out
}

/// The epoch's topology as seen by the participants: links between two
/// participants keep their policy, every other entry is the edge's
/// constantly-invalid policy.
pub fn participating_topology<A: Algebra>(
    alg: &A,
    network: &NetworkOverEpochs,
    epoch: usize,
    participants: &BTreeSet<u32>,
) -> Result<AdjacencyMatrix, ScheduleError> {
    let full = network.topology(epoch).ok_or(ScheduleError::EpochOutOfRange {
        epoch,
        epochs: network.epochs(),
    })?;
    let n = network.n();
    let mut out = AdjacencyMatrix::empty(alg, n);
    for i in 0..n {
        for j in 0..n {
            if participants.contains(&(i as u32)) && participants.contains(&(j as u32)) {
                out.set(i, j, full.get(i, j).clone());
            } else {
                out.set(i, j, alg.invalid_policy(Edge::new(i as u32, j as u32)));
            }
        }
    }
    Ok(out)
}

/// Evaluates the asynchronous protocol over the whole horizon, returning
/// the state at every time step.
///
/// At each time a router that is not participating holds its identity row;
/// one that just joined (or at time 0) holds its initial row; an inactive
/// continuing participant keeps its previous row; and an active one runs a
/// synchronous update against its local view, whose row `k` is row `k` of
/// the state at time `beta(t,i,k)`.
pub fn run_delta<A: Algebra>(
    alg: &A,
    network: &NetworkOverEpochs,
    s: &ScheduleTrace,
    x0: &RoutingState<A::Weight>,
) -> Result<Vec<RoutingState<A::Weight>>, ScheduleError> {
    let violations = validate_schedule(s);
    if !violations.is_empty() {
        return Err(ScheduleError::InvalidSchedule(violations));
    }
    let n = s.n();
    if network.n() != n || x0.n() != n || s.epochs() > network.epochs() {
        return Err(ScheduleError::DimensionMismatch);
    }
    for t in 0..=s.horizon() {
        if s.eta(t) >= network.epochs() {
            return Err(ScheduleError::EpochOutOfRange {
                epoch: s.eta(t),
                epochs: network.epochs(),
            });
        }
    }

    let identity = RoutingState::identity(alg, n);
    let mut topologies: Vec<Option<AdjacencyMatrix>> = vec![None; network.epochs()];
    let topology_at = |e: usize,
                       pi: &BTreeSet<u32>,
                       topologies: &mut Vec<Option<AdjacencyMatrix>>|
     -> AdjacencyMatrix {
        if topologies[e].is_none() {
            topologies[e] = Some(
                participating_topology(alg, network, e, pi).expect("epoch checked above"),
            );
        }
        topologies[e].clone().unwrap()
    };

    let mut states: Vec<RoutingState<A::Weight>> = Vec::with_capacity(s.horizon() + 1);
    let mut init = identity.clone();
    for i in 0..n {
        if s.rho(0).contains(&(i as u32)) {
            init.set_row(i, x0.row(i).to_vec());
        }
    }
    states.push(init);

    for t in 1..=s.horizon() {
        let epoch = s.eta(t);
        let a_t = topology_at(epoch, s.rho(t), &mut topologies);
        let mut next = states[t - 1].clone();
        for i in 0..n {
            let id = i as u32;
            if !s.rho(t).contains(&id) {
                next.set_row(i, identity.row(i).to_vec());
            } else if !s.rho(t - 1).contains(&id) {
                next.set_row(i, x0.row(i).to_vec());
            } else if !s.alpha(t).contains(&id) {
                // row already carried over from t-1
            } else {
                let mut local = RoutingState::filled(n, alg.invalid());
                for k in 0..n {
                    let seen_at = s.beta(t, i, k);
                    local.set_row(k, states[seen_at].row(k).to_vec());
                }
                next.set_row(i, step_row(alg, &a_t, &local, i));
            }
        }
        states.push(next);
    }
    Ok(states)
}

/// Greedy minimal decomposition of a schedule into pseudocycles.
///
/// Within each maximal constant-epoch segment, repeatedly finds the least
/// t2 such that every router participating at the cursor completes an
/// expiry period followed by an activation period inside `[cursor, t2]`,
/// emits the interval, and moves the cursor to t2. An expiry period for a
/// router ends once no later view in the segment uses data sent before the
/// cursor. Intervals share endpoints, as chained rounds do.
pub fn find_pseudocycles(s: &ScheduleTrace) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut seg_start = 0;
    while seg_start <= s.horizon() {
        let epoch = s.eta(seg_start);
        let mut seg_end = seg_start;
        while seg_end + 1 <= s.horizon() && s.eta(seg_end + 1) == epoch {
            seg_end += 1;
        }
        decompose_segment(s, seg_start, seg_end, &mut out);
        seg_start = seg_end + 1;
    }
    out
}

fn decompose_segment(
    s: &ScheduleTrace,
    seg_start: usize,
    seg_end: usize,
    out: &mut Vec<(usize, usize)>,
) {
    let participants: Vec<u32> = s.rho(seg_start).iter().copied().collect();
    if participants.is_empty() {
        return;
    }
    let n = s.n();

    // suffix_min[i][t]: least send time any view of router i uses at or
    // after t within the segment
    let lo = seg_start.max(1);
    let width = if seg_end >= lo { seg_end - lo + 1 } else { 0 };
    let mut suffix_min: Vec<Vec<usize>> = vec![vec![usize::MAX; width + 1]; n];
    for i in 0..n {
        for idx in (0..width).rev() {
            let t = lo + idx;
            let m = (0..n).map(|j| s.beta(t, i, j)).min().unwrap_or(usize::MAX);
            suffix_min[i][idx] = m.min(suffix_min[i][idx + 1]);
        }
    }
    let expiry_ok = |i: usize, cursor: usize, t: usize| -> bool {
        let from = t.max(lo);
        if from > seg_end {
            return true;
        }
        suffix_min[i][from - lo] >= cursor
    };

    let mut cursor = seg_start;
    'outer: loop {
        let mut t2 = cursor;
        for &id in &participants {
            let i = id as usize;
            let mut expiry_end = None;
            for t in cursor..=seg_end {
                if expiry_ok(i, cursor, t) {
                    expiry_end = Some(t);
                    break;
                }
            }
            let Some(e_i) = expiry_end else { break 'outer };
            let mut activation = None;
            for t in e_i.max(1)..=seg_end {
                if s.alpha(t).contains(&id) {
                    activation = Some(t);
                    break;
                }
            }
            let Some(a_i) = activation else { break 'outer };
            t2 = t2.max(a_i);
        }
        if t2 == cursor {
            // a zero-width interval cannot advance the decomposition
            break;
        }
        out.push((cursor, t2));
        cursor = t2;
    }
}

/// Parameters for the seeded schedule generator.
#[derive(Debug, Clone)]
pub struct ScheduleParams {
    pub seed: u64,
    /// Per-router, per-tick activation probability.
    pub activation_prob: f64,
    /// Maximum delivery delay in ticks; a message sent at s arrives in
    /// `s+1..=s+delay_bound`.
    pub delay_bound: usize,
    pub loss_prob: f64,
    pub dup_prob: f64,
    /// Start times of epochs 1.., strictly increasing.
    pub epoch_starts: Vec<usize>,
    /// Participants per epoch; length `epoch_starts.len() + 1`.
    pub participants: Vec<BTreeSet<u32>>,
}

impl ScheduleParams {
    pub fn reliable(n: usize, seed: u64) -> Self {
        ScheduleParams {
            seed,
            activation_prob: 1.0,
            delay_bound: 1,
            loss_prob: 0.0,
            dup_prob: 0.0,
            epoch_starts: Vec::new(),
            participants: vec![(0..n as u32).collect()],
        }
    }

    fn validate(&self) -> Result<(), String> {
        for p in [self.activation_prob, self.loss_prob, self.dup_prob] {
            if !(0.0..=1.0).contains(&p) {
                return Err(format!("probability {p} out of range"));
            }
        }
        if self.delay_bound < 1 {
            return Err("delay bound must be at least 1".into());
        }
        if self.participants.len() != self.epoch_starts.len() + 1 {
            return Err("need one participant set per epoch".into());
        }
        if self.epoch_starts.windows(2).any(|w| w[0] >= w[1]) {
            return Err("epoch starts must be strictly increasing".into());
        }
        Ok(())
    }
}

/// Generates a schedule by simulating per-link delivery queues.
///
/// Each tick, every participating router broadcasts its table on every
/// link (self-links included, so degenerate parameters reproduce the
/// synchronous schedule exactly). A message is lost with `loss_prob`,
/// otherwise delivered after a uniform delay in `1..=delay_bound`, and with
/// `dup_prob` a duplicate copy is sent with its own delay. `beta` follows
/// the latest arrival, so late-sent messages can be shadowed by
/// stragglers: that is reordering. Forward data flow holds by construction
/// since every delay is at least one tick.
pub fn generate_schedule(params: &ScheduleParams, n: usize, horizon: usize) -> ScheduleTrace {
    params.validate().expect("schedule parameters");
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut eta = Vec::with_capacity(horizon + 1);
    for t in 0..=horizon {
        eta.push(params.epoch_starts.iter().filter(|&&b| b <= t).count());
    }
    let pi = params.participants.clone();

    let mut alpha: Vec<BTreeSet<u32>> = vec![BTreeSet::new()];
    for t in 1..=horizon {
        let mut set = BTreeSet::new();
        for id in pi[eta[t]].iter() {
            if rng.gen_bool(params.activation_prob) {
                set.insert(*id);
            }
        }
        alpha.push(set);
    }

    // deliveries[i][j]: (arrival, send) pairs for the link from j to i
    let mut deliveries: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n * n];
    for send in 1..=horizon {
        for j in 0..n as u32 {
            if !pi[eta[send]].contains(&j) {
                continue;
            }
            for i in 0..n {
                if rng.gen_bool(params.loss_prob) {
                    continue;
                }
                let delay = rng.gen_range(1..=params.delay_bound);
                deliveries[i * n + j as usize].push((send + delay, send));
                if rng.gen_bool(params.dup_prob) {
                    let delay = rng.gen_range(1..=params.delay_bound);
                    deliveries[i * n + j as usize].push((send + delay, send));
                }
            }
        }
    }
    for queue in &mut deliveries {
        queue.sort_by_key(|&(arrival, _)| arrival);
    }

    let mut beta: Vec<Vec<usize>> = vec![Vec::new()];
    let mut cursors = vec![0usize; n * n];
    let mut latest = vec![0usize; n * n];
    for t in 1..=horizon {
        let mut row = Vec::with_capacity(n * n);
        for link in 0..n * n {
            let queue = &deliveries[link];
            while cursors[link] < queue.len() && queue[cursors[link]].0 <= t {
                latest[link] = queue[cursors[link]].1;
                cursors[link] += 1;
            }
            row.push(latest[link]);
        }
        beta.push(row);
    }

    ScheduleTrace::new(n, horizon, alpha, beta, eta, pi)
}

/// Columnar text form of a trace: header, per-epoch participants, the epoch
/// row, then per time step the activation set and the send-time table.
pub fn trace_to_text(s: &ScheduleTrace) -> String {
    let mut out = String::new();
    out.push_str("schedule-trace v1\n");
    out.push_str(&format!("n {}\n", s.n));
    out.push_str(&format!("horizon {}\n", s.horizon));
    for (e, set) in s.pi.iter().enumerate() {
        let ids: Vec<String> = set.iter().map(|i| i.to_string()).collect();
        out.push_str(&format!("pi {e}: {}\n", ids.join(" ")));
    }
    let etas: Vec<String> = s.eta.iter().map(|e| e.to_string()).collect();
    out.push_str(&format!("eta: {}\n", etas.join(" ")));
    for t in 1..=s.horizon {
        let ids: Vec<String> = s.alpha[t].iter().map(|i| i.to_string()).collect();
        out.push_str(&format!("t {t} alpha: {}\n", ids.join(" ")));
        for i in 0..s.n {
            let row: Vec<String> = (0..s.n).map(|j| s.beta(t, i, j).to_string()).collect();
            out.push_str(&format!("beta {i}: {}\n", row.join(" ")));
        }
    }
    out
}

pub fn trace_from_text(text: &str) -> Result<ScheduleTrace, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or("empty trace")?;
    if header.trim() != "schedule-trace v1" {
        return Err(format!("unknown trace header {header:?}"));
    }
    let mut n = None;
    let mut horizon = None;
    let mut pi: Vec<BTreeSet<u32>> = Vec::new();
    let mut eta: Option<Vec<usize>> = None;
    let mut alpha: Vec<BTreeSet<u32>> = vec![BTreeSet::new()];
    let mut beta: Vec<Vec<usize>> = vec![Vec::new()];
    let mut current_beta: Vec<usize> = Vec::new();

    let parse_ids = |rest: &str| -> Result<Vec<u32>, String> {
        rest.split_whitespace()
            .map(|w| w.parse::<u32>().map_err(|e| e.to_string()))
            .collect()
    };

    for line in lines {
        let line = line.trim();
        if let Some(rest) = line.strip_prefix("n ") {
            n = Some(rest.trim().parse::<usize>().map_err(|e| e.to_string())?);
        } else if let Some(rest) = line.strip_prefix("horizon ") {
            horizon = Some(rest.trim().parse::<usize>().map_err(|e| e.to_string())?);
        } else if let Some(rest) = line.strip_prefix("pi ") {
            let (idx, ids) = rest.split_once(':').ok_or("bad pi line")?;
            let e: usize = idx.trim().parse().map_err(|_| "bad epoch index")?;
            if e != pi.len() {
                return Err("participant sets out of order".into());
            }
            pi.push(parse_ids(ids)?.into_iter().collect());
        } else if let Some(rest) = line.strip_prefix("eta:") {
            let vals: Result<Vec<usize>, String> = rest
                .split_whitespace()
                .map(|w| w.parse::<usize>().map_err(|e| e.to_string()))
                .collect();
            eta = Some(vals?);
        } else if let Some(rest) = line.strip_prefix("t ") {
            if !current_beta.is_empty() {
                beta.push(std::mem::take(&mut current_beta));
            }
            let (t_str, alpha_part) = rest.split_once("alpha:").ok_or("bad t line")?;
            let t: usize = t_str.trim().parse().map_err(|_| "bad time")?;
            if t != alpha.len() {
                return Err(format!("time steps out of order at t={t}"));
            }
            alpha.push(parse_ids(alpha_part)?.into_iter().collect());
        } else if let Some(rest) = line.strip_prefix("beta ") {
            let (_, row) = rest.split_once(':').ok_or("bad beta line")?;
            let vals: Result<Vec<usize>, String> = row
                .split_whitespace()
                .map(|w| w.parse::<usize>().map_err(|e| e.to_string()))
                .collect();
            current_beta.extend(vals?);
        } else {
            return Err(format!("unrecognized trace line {line:?}"));
        }
    }
    if !current_beta.is_empty() {
        beta.push(current_beta);
    }
    let n = n.ok_or("missing n")?;
    let horizon = horizon.ok_or("missing horizon")?;
    let eta = eta.ok_or("missing eta row")?;
    if alpha.len() != horizon + 1 || beta.len() != horizon + 1 || eta.len() != horizon + 1 {
        return Err("trace length disagrees with the horizon".into());
    }
    if pi.is_empty() {
        return Err("missing participant sets".into());
    }
    Ok(ScheduleTrace::new(n, horizon, alpha, beta, eta, pi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{PolicyName, Table1Algebra};
    use crate::protocol::{run_synchronous, step, SyncOutcome};
    use proptest::prelude::*;

    fn line_network(alg: &Table1Algebra) -> NetworkOverEpochs {
        let a = AdjacencyMatrix::from_entries(
            alg,
            3,
            &[
                (1, 0, PolicyName::new("add:1")),
                (2, 1, PolicyName::new("add:1")),
            ],
        )
        .unwrap();
        NetworkOverEpochs::new(vec![a])
    }

    #[test]
    fn s1_and_s2_violations_are_located() {
        let mut s = ScheduleTrace::synchronous(2, 6);
        assert!(validate_schedule(&s).is_empty());
        s.set_beta(5, 0, 1, 7);
        let violations = validate_schedule(&s);
        assert_eq!(
            violations,
            vec![Violation::DataFlowFromFuture {
                t: 5,
                i: 0,
                j: 1,
                beta: 7,
                limit: 4
            }]
        );

        let everyone: BTreeSet<u32> = [0, 1].into();
        let s = ScheduleTrace::new(
            2,
            3,
            vec![BTreeSet::new(), everyone.clone(), everyone.clone(), everyone.clone()],
            vec![vec![], vec![0; 4], vec![1; 4], vec![2; 4]],
            vec![0, 0, 1, 0],
            vec![everyone.clone(), everyone],
        );
        assert!(validate_schedule(&s)
            .iter()
            .any(|v| matches!(v, Violation::EpochDecreased { t: 3, .. })));
    }

    #[test]
    fn participating_topology_masks_non_participants() {
        let alg = Table1Algebra::shortest(16);
        let net = line_network(&alg);
        let everyone: BTreeSet<u32> = [0, 1, 2].into();
        let full = participating_topology(&alg, &net, 0, &everyone).unwrap();
        assert_eq!(&full, net.topology(0).unwrap());

        let none = participating_topology(&alg, &net, 0, &BTreeSet::new()).unwrap();
        assert_eq!(none, AdjacencyMatrix::empty(&alg, 3));

        let pair: BTreeSet<u32> = [0, 1].into();
        let masked = participating_topology(&alg, &net, 0, &pair).unwrap();
        assert_eq!(masked.get(1, 0).as_str(), "add:1");
        assert_eq!(masked.get(2, 1).as_str(), "add:inf");

        assert!(matches!(
            participating_topology(&alg, &net, 7, &everyone),
            Err(ScheduleError::EpochOutOfRange { .. })
        ));
    }

    #[test]
    fn synchronous_schedule_recovers_the_synchronous_run() {
        let alg = Table1Algebra::shortest(16);
        let net = line_network(&alg);
        let x0 = RoutingState::identity(&alg, 3);
        let s = ScheduleTrace::synchronous(3, 8);
        let states = run_delta(&alg, &net, &s, &x0).unwrap();
        let mut expect = x0.clone();
        for t in 0..=8usize {
            assert_eq!(states[t], expect, "diverged at t={t}");
            expect = step(&alg, net.topology(0).unwrap(), &expect).unwrap();
        }
    }

    #[test]
    fn non_participants_hold_identity_rows() {
        let alg = Table1Algebra::shortest(16);
        let net = line_network(&alg);
        let pair: BTreeSet<u32> = [0, 1].into();
        let params = ScheduleParams {
            seed: 5,
            activation_prob: 0.7,
            delay_bound: 3,
            loss_prob: 0.2,
            dup_prob: 0.2,
            epoch_starts: Vec::new(),
            participants: vec![pair],
        };
        let s = generate_schedule(&params, 3, 20);
        let mut x0 = RoutingState::identity(&alg, 3);
        x0.set(2, 0, crate::algebra::NatInf::Fin(3));
        let states = run_delta(&alg, &net, &s, &x0).unwrap();
        let identity = RoutingState::identity(&alg, 3);
        for t in 1..=20usize {
            assert_eq!(states[t].row(2), identity.row(2));
        }
    }

    #[test]
    fn rejoining_router_resets_to_initial_state() {
        let alg = Table1Algebra::shortest(16);
        let net = NetworkOverEpochs::new(vec![
            line_network(&alg).topology(0).unwrap().clone(),
            line_network(&alg).topology(0).unwrap().clone(),
        ]);
        let pair: BTreeSet<u32> = [0, 1].into();
        let everyone: BTreeSet<u32> = [0, 1, 2].into();
        let params = ScheduleParams {
            seed: 9,
            activation_prob: 1.0,
            delay_bound: 1,
            loss_prob: 0.0,
            dup_prob: 0.0,
            epoch_starts: vec![5],
            participants: vec![pair, everyone],
        };
        let s = generate_schedule(&params, 3, 10);
        let mut x0 = RoutingState::identity(&alg, 3);
        x0.set(2, 0, crate::algebra::NatInf::Fin(9));
        let states = run_delta(&alg, &net, &s, &x0).unwrap();
        // router 2 is out during epoch 0, re-adopts its initial row at the
        // first step of epoch 1
        assert_eq!(states[4].row(2), RoutingState::identity(&alg, 3).row(2));
        assert_eq!(states[5].row(2), x0.row(2));
    }

    #[test]
    fn synchronous_pseudocycles_have_width_one() {
        let s = ScheduleTrace::synchronous(3, 10);
        let cycles = find_pseudocycles(&s);
        assert_eq!(cycles.len(), 10);
        for (k, (a, b)) in cycles.iter().enumerate() {
            assert_eq!((*a, *b), (k, k + 1));
        }
    }

    #[test]
    fn never_activating_router_blocks_pseudocycles() {
        let mut s = ScheduleTrace::synchronous(2, 10);
        for t in 1..=10 {
            s.alpha[t].remove(&0);
        }
        assert!(find_pseudocycles(&s).is_empty());
    }

    #[test]
    fn single_router_even_activations() {
        let horizon = 10;
        let mut alpha = vec![BTreeSet::new()];
        let mut beta = vec![Vec::new()];
        for t in 1..=horizon {
            let mut set = BTreeSet::new();
            if t % 2 == 0 {
                set.insert(0);
            }
            alpha.push(set);
            beta.push(vec![t - 1]);
        }
        let s = ScheduleTrace::new(
            1,
            horizon,
            alpha,
            beta,
            vec![0; horizon + 1],
            vec![[0].into()],
        );
        assert_eq!(
            find_pseudocycles(&s),
            vec![(0, 2), (2, 4), (4, 6), (6, 8), (8, 10)]
        );
    }

    #[test]
    fn degenerate_parameters_reproduce_the_synchronous_schedule() {
        let s = generate_schedule(&ScheduleParams::reliable(3, 42), 3, 12);
        assert_eq!(s, ScheduleTrace::synchronous(3, 12));
    }

    #[test]
    fn total_loss_keeps_beta_at_zero() {
        let params = ScheduleParams {
            loss_prob: 1.0,
            ..ScheduleParams::reliable(2, 3)
        };
        let s = generate_schedule(&params, 2, 10);
        for t in 1..=10 {
            for i in 0..2 {
                for j in 0..2 {
                    assert_eq!(s.beta(t, i, j), 0);
                }
            }
        }
        // Every view keeps reading the initial state, which is time-0
        // information, so exactly the opening interval qualifies as a
        // pseudocycle and nothing after it.
        assert_eq!(find_pseudocycles(&s), vec![(0, 1)]);
    }

    #[test]
    fn same_seed_same_trace() {
        let params = ScheduleParams {
            activation_prob: 0.6,
            delay_bound: 4,
            loss_prob: 0.3,
            dup_prob: 0.2,
            ..ScheduleParams::reliable(4, 77)
        };
        let a = generate_schedule(&params, 4, 30);
        let b = generate_schedule(&params, 4, 30);
        assert_eq!(a, b);
        let c = generate_schedule(
            &ScheduleParams {
                seed: 78,
                ..params
            },
            4,
            30,
        );
        assert_ne!(a, c);
    }

    #[test]
    fn trace_text_round_trips() {
        let params = ScheduleParams {
            activation_prob: 0.5,
            delay_bound: 3,
            loss_prob: 0.25,
            dup_prob: 0.25,
            epoch_starts: vec![6],
            participants: vec![[0, 1].into(), [0, 1, 2].into()],
            seed: 13,
        };
        let s = generate_schedule(&params, 3, 12);
        let text = trace_to_text(&s);
        assert_eq!(trace_from_text(&text).unwrap(), s);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn generated_traces_are_always_well_formed(
            seed in 0u64..1000,
            act in 0.0f64..=1.0,
            loss in 0.0f64..=1.0,
            dup in 0.0f64..=1.0,
            delay in 1usize..6,
        ) {
            let params = ScheduleParams {
                seed,
                activation_prob: act,
                loss_prob: loss,
                dup_prob: dup,
                delay_bound: delay,
                epoch_starts: vec![7],
                participants: vec![[0, 1].into(), [0, 1, 2].into()],
            };
            let s = generate_schedule(&params, 3, 15);
            prop_assert!(validate_schedule(&s).is_empty());
        }
    }
}
