//! A safe-by-design path-vector algebra with local preferences, communities,
//! conditional policies, route filtering and path inflation.
//!
//! A valid weight carries a local preference, a sorted set of community
//! tags, and the router sequence it was generated along. The sequence may
//! contain consecutive duplicates introduced by `inflate`; extraction
//! deflates it back to a simple path, so inflation lengthens the stored
//! path that choice compares without ever corrupting loop detection.
//!
//! Choice prefers the valid weight, then the higher local preference, then
//! the shorter stored sequence, then the lexicographically smaller stored
//! sequence, and finally the lexicographically smaller community set. The
//! last tie-break is not in the source policy language, which leaves weights
//! differing only in communities unordered; selecting on the communities as
//! well makes choice commutative under structural equality, which the
//! checkers require.
//!
//! The policy language can lower the local preference, edit communities,
//! inflate the path, reject, and compose conditionally; nothing in it can
//! raise a preference or shorten a path, so every expressible policy is
//! increasing.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, AlgebraError, PolicyName};
use crate::topology::{concat, strip_consecutive_duplicates, Edge, NodeId, SimplePath};

pub mod parser;

pub use parser::{parse_condition, parse_policy, ParseError};

pub type LocalPref = u32;
pub type Community = u32;

pub const MAX_LOCAL_PREF: LocalPref = u32::MAX;

/// A community set, stored sorted and duplicate-free so equality and
/// hashing are canonical.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Communities(Vec<Community>);

impl Communities {
    pub fn new() -> Self {
        Communities(Vec::new())
    }

    pub fn from_iter(iter: impl IntoIterator<Item = Community>) -> Self {
        let mut v: Vec<Community> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Communities(v)
    }

    pub fn contains(&self, c: Community) -> bool {
        self.0.binary_search(&c).is_ok()
    }

    pub fn insert(&mut self, c: Community) {
        if let Err(pos) = self.0.binary_search(&c) {
            self.0.insert(pos, c);
        }
    }

    pub fn remove(&mut self, c: Community) {
        if let Ok(pos) = self.0.binary_search(&c) {
            self.0.remove(pos);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Community> {
        self.0.iter()
    }

    pub fn render(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        format!("{{{}}}", parts.join(";"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BgpWeight {
    Invalid,
    Valid {
        lp: LocalPref,
        comms: Communities,
        /// Router sequence, origin first, possibly inflated.
        path: Vec<NodeId>,
    },
}

impl BgpWeight {
    pub fn valid(lp: LocalPref, comms: Communities, path: Vec<NodeId>) -> Self {
        BgpWeight::Valid { lp, comms, path }
    }

    pub fn trivial() -> Self {
        BgpWeight::Valid {
            lp: MAX_LOCAL_PREF,
            comms: Communities::new(),
            path: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    And(Box<Condition>, Box<Condition>),
    Or(Box<Condition>, Box<Condition>),
    Not(Box<Condition>),
    InPath(NodeId),
    InComm(Community),
    HasPref(LocalPref),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Policy {
    Reject,
    DecrPrefBy(u32),
    AddComm(Community),
    DelComm(Community),
    Inflate(u32),
    Seq(Box<Policy>, Box<Policy>),
    IfThen(Condition, Box<Policy>),
}

/// Every condition is false on the invalid weight.
pub fn eval(cond: &Condition, x: &BgpWeight) -> bool {
    let (lp, comms, path) = match x {
        BgpWeight::Invalid => return false,
        BgpWeight::Valid { lp, comms, path } => (lp, comms, path),
    };
    match cond {
        Condition::And(p, q) => eval(p, x) && eval(q, x),
        Condition::Or(p, q) => eval(p, x) || eval(q, x),
        Condition::Not(p) => !eval(p, x),
        Condition::InPath(i) => path.contains(i),
        Condition::InComm(c) => comms.contains(*c),
        Condition::HasPref(v) => lp == v,
    }
}

/// Applies a policy program. Preference decreases truncate at zero, and
/// inflation prepends copies of the path's source (a no-op on the empty
/// path, which has no source).
pub fn apply(pol: &Policy, x: &BgpWeight) -> BgpWeight {
    let (lp, comms, path) = match x {
        BgpWeight::Invalid => return BgpWeight::Invalid,
        BgpWeight::Valid { lp, comms, path } => (*lp, comms, path),
    };
    match pol {
        Policy::Reject => BgpWeight::Invalid,
        Policy::DecrPrefBy(v) => BgpWeight::valid(lp.saturating_sub(*v), comms.clone(), path.clone()),
        Policy::AddComm(c) => {
            let mut comms = comms.clone();
            comms.insert(*c);
            BgpWeight::valid(lp, comms, path.clone())
        }
        Policy::DelComm(c) => {
            let mut comms = comms.clone();
            comms.remove(*c);
            BgpWeight::valid(lp, comms, path.clone())
        }
        Policy::Inflate(k) => {
            let mut new_path = path.clone();
            if let Some(&src) = path.first() {
                for _ in 0..*k {
                    new_path.insert(0, src);
                }
            }
            BgpWeight::valid(lp, comms.clone(), new_path)
        }
        Policy::Seq(p, q) => apply(q, &apply(p, x)),
        Policy::IfThen(c, p) => {
            if eval(c, x) {
                apply(p, x)
            } else {
                x.clone()
            }
        }
    }
}

pub fn bgp_choose(x: &BgpWeight, y: &BgpWeight) -> BgpWeight {
    let (lx, cx, px) = match x {
        BgpWeight::Invalid => return y.clone(),
        BgpWeight::Valid { lp, comms, path } => (lp, comms, path),
    };
    let (ly, cy, py) = match y {
        BgpWeight::Invalid => return x.clone(),
        BgpWeight::Valid { lp, comms, path } => (lp, comms, path),
    };
    if lx > ly {
        return x.clone();
    }
    if ly > lx {
        return y.clone();
    }
    if px.len() < py.len() {
        return x.clone();
    }
    if py.len() < px.len() {
        return y.clone();
    }
    if px < py {
        return x.clone();
    }
    if py < px {
        return y.clone();
    }
    if cx <= cy {
        x.clone()
    } else {
        y.clone()
    }
}

/// The deflated stored sequence as a simple path; valid weights maintain the
/// invariant that deflation yields one.
fn deflated_path(path: &[NodeId]) -> SimplePath {
    let deflated = strip_consecutive_duplicates(path);
    SimplePath::from_node_seq(&deflated).expect("stored sequence deflates to a simple path")
}

/// Extends a weight across the edge `(i, j)`: the usual loop and alignment
/// elimination on the deflated path, then the policy applied to the weight
/// with `(i, j)` prepended to the stored sequence.
pub fn bgp_extend(i: NodeId, j: NodeId, pol: &Policy, x: &BgpWeight) -> BgpWeight {
    let (lp, comms, path) = match x {
        BgpWeight::Invalid => return BgpWeight::Invalid,
        BgpWeight::Valid { lp, comms, path } => (*lp, comms, path),
    };
    if concat(Edge { from: i, to: j }, &deflated_path(path)).is_err() {
        return BgpWeight::Invalid;
    }
    let mut new_path = Vec::with_capacity(path.len() + 2);
    new_path.push(i);
    if path.is_empty() {
        new_path.push(j);
    } else {
        new_path.extend_from_slice(path);
    }
    apply(pol, &BgpWeight::valid(lp, comms.clone(), new_path))
}

pub fn bgp_path(x: &BgpWeight) -> SimplePath {
    match x {
        BgpWeight::Invalid => SimplePath::Invalid,
        BgpWeight::Valid { path, .. } => deflated_path(path),
    }
}

#[derive(Debug, Clone)]
pub struct BgpLiteAlgebra {
    n: usize,
}

pub fn make_bgplite_algebra(n: usize) -> BgpLiteAlgebra {
    BgpLiteAlgebra::new(n)
}

impl BgpLiteAlgebra {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        BgpLiteAlgebra { n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn resolve(&self, policy: &PolicyName) -> Result<Policy, ParseError> {
        parse_policy(policy.as_str())
    }

    /// A finite sub-domain for exhaustive law checking: local preferences
    /// `0..=3`, community subsets of `{1, 2}`, and every simple router
    /// sequence over three routers, plus the trivial and invalid weights.
    pub fn micro_domain(&self) -> Vec<BgpWeight> {
        let routers = self.n.min(3);
        let mut out = vec![BgpWeight::Invalid, BgpWeight::trivial()];
        let comm_sets = [
            Communities::new(),
            Communities::from_iter([1]),
            Communities::from_iter([2]),
            Communities::from_iter([1, 2]),
        ];
        for path in crate::pathalg::enumerate_simple_paths(routers) {
            let seq = path.node_seq().unwrap();
            for lp in 0..=3u32 {
                for comms in &comm_sets {
                    out.push(BgpWeight::valid(lp, comms.clone(), seq.clone()));
                }
            }
        }
        out
    }

    /// A small structured policy set exercising every constructor, used for
    /// exhaustive micro-domain checks alongside the random sampler.
    pub fn micro_policies() -> Vec<PolicyName> {
        [
            "reject",
            "decr 1",
            "decr 3",
            "addc 1",
            "delc 1",
            "inflate 1",
            "decr 1 ; addc 2",
            "if incomm 1 then decr 2",
            "if inpath 0 then reject",
            "if not(incomm 2) then (addc 2 ; decr 1)",
        ]
        .into_iter()
        .map(PolicyName::new)
        .collect()
    }

    fn sample_condition(&self, rng: &mut ChaCha8Rng, depth: u32) -> Condition {
        let leaf = depth == 0 || rng.gen_bool(0.6);
        if leaf {
            match rng.gen_range(0..3) {
                0 => Condition::InPath(NodeId(rng.gen_range(0..self.n) as u32)),
                1 => Condition::InComm(rng.gen_range(1..=3)),
                _ => Condition::HasPref(rng.gen_range(0..=120)),
            }
        } else {
            match rng.gen_range(0..3) {
                0 => Condition::And(
                    Box::new(self.sample_condition(rng, depth - 1)),
                    Box::new(self.sample_condition(rng, depth - 1)),
                ),
                1 => Condition::Or(
                    Box::new(self.sample_condition(rng, depth - 1)),
                    Box::new(self.sample_condition(rng, depth - 1)),
                ),
                _ => Condition::Not(Box::new(self.sample_condition(rng, depth - 1))),
            }
        }
    }

    fn sample_policy_ast(&self, rng: &mut ChaCha8Rng, depth: u32) -> Policy {
        let leaf = depth == 0 || rng.gen_bool(0.5);
        if leaf {
            match rng.gen_range(0..6) {
                0 => Policy::Reject,
                1 => Policy::DecrPrefBy(rng.gen_range(0..=30)),
                2 => Policy::AddComm(rng.gen_range(1..=3)),
                3 => Policy::DelComm(rng.gen_range(1..=3)),
                _ => Policy::Inflate(rng.gen_range(1..=2)),
            }
        } else if rng.gen_bool(0.5) {
            Policy::Seq(
                Box::new(self.sample_policy_ast(rng, depth - 1)),
                Box::new(self.sample_policy_ast(rng, depth - 1)),
            )
        } else {
            Policy::IfThen(
                self.sample_condition(rng, depth.min(2)),
                Box::new(self.sample_policy_ast(rng, depth - 1)),
            )
        }
    }

    /// Random valid or invalid weight: banded local preferences, small
    /// community sets, a random simple sequence, sometimes inflated.
    pub fn sample_weight_with(&self, rng: &mut ChaCha8Rng) -> BgpWeight {
        if rng.gen_bool(0.1) {
            return BgpWeight::Invalid;
        }
        let lp = match rng.gen_range(0..4) {
            0 => MAX_LOCAL_PREF,
            1 => rng.gen_range(0..=3),
            _ => rng.gen_range(0..=120),
        };
        let mut comms = Communities::new();
        for c in 1..=3 {
            if rng.gen_bool(0.3) {
                comms.insert(c);
            }
        }
        let mut nodes: Vec<u32> = (0..self.n as u32).collect();
        let len = rng.gen_range(0..=self.n.min(4));
        for i in 0..len {
            let pick = rng.gen_range(i..nodes.len());
            nodes.swap(i, pick);
        }
        let mut seq: Vec<NodeId> = if len >= 2 {
            nodes[..len].iter().map(|&v| NodeId(v)).collect()
        } else {
            Vec::new()
        };
        if !seq.is_empty() && rng.gen_bool(0.3) {
            let src = seq[0];
            for _ in 0..rng.gen_range(1..=2) {
                seq.insert(0, src);
            }
        }
        BgpWeight::valid(lp, comms, seq)
    }
}

impl Algebra for BgpLiteAlgebra {
    type Weight = BgpWeight;

    fn trivial(&self) -> BgpWeight {
        BgpWeight::trivial()
    }

    fn invalid(&self) -> BgpWeight {
        BgpWeight::Invalid
    }

    fn choose(&self, x: &BgpWeight, y: &BgpWeight) -> BgpWeight {
        bgp_choose(x, y)
    }

    fn extend(&self, edge: Edge, policy: &PolicyName, x: &BgpWeight) -> Result<BgpWeight, AlgebraError> {
        let pol = self.resolve(policy).map_err(|_| AlgebraError::UnknownPolicy {
            edge,
            name: policy.clone(),
        })?;
        Ok(bgp_extend(edge.from, edge.to, &pol, x))
    }

    fn has_policy(&self, _edge: Edge, policy: &PolicyName) -> bool {
        self.resolve(policy).is_ok()
    }

    fn invalid_policy(&self, _edge: Edge) -> PolicyName {
        PolicyName::new("reject")
    }

    fn enumerate(&self) -> Option<Vec<BgpWeight>> {
        None
    }

    fn edges(&self) -> Vec<Edge> {
        let mut edges = Vec::new();
        for i in 0..self.n as u32 {
            for j in 0..self.n as u32 {
                edges.push(Edge::new(i, j));
            }
        }
        edges
    }

    fn enumerate_policies(&self, _edge: Edge) -> Option<Vec<PolicyName>> {
        None
    }

    fn sample_weight(&self, rng: &mut ChaCha8Rng) -> BgpWeight {
        self.sample_weight_with(rng)
    }

    fn sample_policy(&self, _edge: Edge, rng: &mut ChaCha8Rng) -> PolicyName {
        let ast = self.sample_policy_ast(rng, 3);
        PolicyName::new(parser::render_policy(&ast))
    }

    fn render(&self, w: &BgpWeight) -> String {
        match w {
            BgpWeight::Invalid => "invalid".to_string(),
            BgpWeight::Valid { lp, comms, path } => {
                let path_str = if path.is_empty() {
                    "[]".to_string()
                } else {
                    path.iter()
                        .map(|n| n.to_string())
                        .collect::<Vec<_>>()
                        .join("<")
                };
                format!("lp={lp},comms={},path={path_str}", comms.render())
            }
        }
    }

    fn parse_weight(&self, s: &str) -> Result<BgpWeight, AlgebraError> {
        parse_bgp_weight(s).map_err(|reason| AlgebraError::BadWeight {
            text: s.to_string(),
            reason,
        })
    }

    fn path_of(&self, w: &BgpWeight) -> Option<SimplePath> {
        Some(bgp_path(w))
    }
}

fn parse_bgp_weight(s: &str) -> Result<BgpWeight, String> {
    if s == "invalid" {
        return Ok(BgpWeight::Invalid);
    }
    let mut lp = None;
    let mut comms = None;
    let mut path = None;
    for part in s.split(',') {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got {part:?}"))?;
        match key {
            "lp" => lp = Some(value.parse::<u32>().map_err(|e| e.to_string())?),
            "comms" => {
                let inner = value
                    .strip_prefix('{')
                    .and_then(|v| v.strip_suffix('}'))
                    .ok_or("communities must be braced")?;
                let mut set = Communities::new();
                for c in inner.split(';') {
                    if !c.is_empty() {
                        set.insert(c.parse::<u32>().map_err(|e| e.to_string())?);
                    }
                }
                comms = Some(set);
            }
            "path" => {
                if value == "[]" {
                    path = Some(Vec::new());
                } else {
                    let seq: Result<Vec<NodeId>, String> = value
                        .split('<')
                        .map(|p| p.parse::<u32>().map(NodeId).map_err(|e| e.to_string()))
                        .collect();
                    path = Some(seq?);
                }
            }
            other => return Err(format!("unknown field {other:?}")),
        }
    }
    match (lp, comms, path) {
        (Some(lp), Some(comms), Some(path)) => {
            let deflated = strip_consecutive_duplicates(&path);
            SimplePath::from_node_seq(&deflated)
                .map_err(|e| format!("stored path is not simple after deflation: {e}"))?;
            Ok(BgpWeight::valid(lp, comms, path))
        }
        _ => Err("expected lp=..,comms={{..}},path=..".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(lp: u32, comms: &[u32], path: &[u32]) -> BgpWeight {
        BgpWeight::valid(
            lp,
            Communities::from_iter(comms.iter().copied()),
            path.iter().map(|&v| NodeId(v)).collect(),
        )
    }

    #[test]
    fn condition_evaluation() {
        assert!(eval(&Condition::InComm(17), &w(100, &[17], &[])));
        assert!(!eval(&Condition::InComm(17), &BgpWeight::Invalid));
        assert!(eval(
            &Condition::Not(Box::new(Condition::InPath(NodeId(3)))),
            &w(100, &[], &[0, 1])
        ));
    }

    #[test]
    fn policy_application() {
        assert_eq!(apply(&Policy::Reject, &w(100, &[], &[0, 1])), BgpWeight::Invalid);
        assert_eq!(
            apply(&Policy::DecrPrefBy(5), &w(100, &[], &[0, 1])),
            w(95, &[], &[0, 1])
        );
        // preference truncates at zero
        assert_eq!(
            apply(&Policy::DecrPrefBy(200), &w(100, &[], &[0, 1])),
            w(0, &[], &[0, 1])
        );
        assert_eq!(
            apply(&Policy::Inflate(2), &w(7, &[], &[0, 1])),
            w(7, &[], &[0, 0, 0, 1])
        );
        assert_eq!(apply(&Policy::Inflate(2), &w(7, &[], &[])), w(7, &[], &[]));
    }

    #[test]
    fn choice_ladder() {
        let valid = w(100, &[], &[0, 1]);
        assert_eq!(bgp_choose(&valid, &BgpWeight::Invalid), valid);
        assert_eq!(bgp_choose(&BgpWeight::Invalid, &valid), valid);
        assert_eq!(bgp_choose(&w(100, &[], &[0, 1]), &w(90, &[], &[0, 1])), w(100, &[], &[0, 1]));
        // equal preference: the shorter stored sequence wins
        assert_eq!(
            bgp_choose(&w(50, &[], &[0, 1]), &w(50, &[], &[0, 2, 1])),
            w(50, &[], &[0, 1])
        );
        // then the lexicographically smaller sequence
        assert_eq!(
            bgp_choose(&w(50, &[], &[0, 2]), &w(50, &[], &[0, 1])),
            w(50, &[], &[0, 1])
        );
    }

    #[test]
    fn extension_guards_and_prepending() {
        let pol = Policy::DecrPrefBy(0);
        assert_eq!(
            bgp_extend(NodeId(0), NodeId(1), &pol, &BgpWeight::Invalid),
            BgpWeight::Invalid
        );
        assert_eq!(
            bgp_extend(NodeId(0), NodeId(1), &Policy::Reject, &w(100, &[], &[1, 2])),
            BgpWeight::Invalid
        );
        assert_eq!(
            bgp_extend(NodeId(0), NodeId(1), &pol, &w(100, &[], &[1, 2])),
            w(100, &[], &[0, 1, 2])
        );
        // misaligned: the weight's path does not start at the exporter
        assert_eq!(
            bgp_extend(NodeId(0), NodeId(1), &pol, &w(100, &[], &[2, 1])),
            BgpWeight::Invalid
        );
        // loop: the importer already appears in the path
        assert_eq!(
            bgp_extend(NodeId(0), NodeId(1), &pol, &w(100, &[], &[1, 0])),
            BgpWeight::Invalid
        );
    }

    #[test]
    fn path_extraction_deflates() {
        assert_eq!(bgp_path(&BgpWeight::Invalid), SimplePath::Invalid);
        assert_eq!(
            bgp_path(&w(9, &[], &[0, 0, 0, 1, 2])),
            crate::topology::parse_path("0<1<2").unwrap()
        );
        assert_eq!(bgp_path(&BgpWeight::trivial()), SimplePath::trivial());
    }

    #[test]
    fn weight_text_round_trips() {
        let alg = BgpLiteAlgebra::new(3);
        for weight in [
            BgpWeight::Invalid,
            BgpWeight::trivial(),
            w(42, &[1, 2], &[0, 0, 1, 2]),
        ] {
            let text = alg.render(&weight);
            assert_eq!(alg.parse_weight(&text).unwrap(), weight);
        }
    }
}
