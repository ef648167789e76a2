//! Router identifiers, edges and simple paths.
//!
//! Node identity is a dense index in `[0, n)` for the instance at hand, so
//! routing states can be plain `n x n` grids. A [`SimplePath`] is either the
//! invalid path `⊥` or a contiguous, cycle-free edge list; the origin of a
//! non-trivial path is cached so alignment checks are O(1).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense router index, valid within a single instance of `n` routers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered pair of routers. Self-loops are representable but never occur
/// inside a [`SimplePath`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
}

impl Edge {
    pub fn new(from: u32, to: u32) -> Self {
        Edge {
            from: NodeId(from),
            to: NodeId(to),
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("edge is not aligned with the path")]
    MisalignedEdge,
    #[error("prepending the edge would repeat a router")]
    WouldFormCycle,
    #[error("the invalid path cannot be extended")]
    InvalidPath,
}

/// A simple path: `⊥`, the trivial path `[]`, or a contiguous cycle-free
/// list of edges read origin-first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SimplePath {
    Invalid,
    Valid {
        edges: Vec<Edge>,
        /// Origin of the first edge; `None` for the trivial path.
        origin: Option<NodeId>,
    },
}

impl SimplePath {
    pub fn invalid() -> Self {
        SimplePath::Invalid
    }

    pub fn trivial() -> Self {
        SimplePath::Valid {
            edges: Vec::new(),
            origin: None,
        }
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, SimplePath::Invalid)
    }

    pub fn is_trivial(&self) -> bool {
        matches!(
            self,
            SimplePath::Valid { edges, .. } if edges.is_empty()
        )
    }

    pub fn origin(&self) -> Option<NodeId> {
        match self {
            SimplePath::Invalid => None,
            SimplePath::Valid { origin, .. } => *origin,
        }
    }

    /// Number of edges; `None` for `⊥`.
    pub fn len(&self) -> Option<usize> {
        match self {
            SimplePath::Invalid => None,
            SimplePath::Valid { edges, .. } => Some(edges.len()),
        }
    }

    pub fn edges(&self) -> &[Edge] {
        match self {
            SimplePath::Invalid => &[],
            SimplePath::Valid { edges, .. } => edges,
        }
    }

    /// Node sequence origin-first; `None` for `⊥`, `Some([])` for `[]`.
    pub fn node_seq(&self) -> Option<Vec<NodeId>> {
        match self {
            SimplePath::Invalid => None,
            SimplePath::Valid { edges, origin } => {
                let mut seq = Vec::with_capacity(edges.len() + 1);
                if let Some(o) = origin {
                    seq.push(*o);
                }
                for e in edges {
                    seq.push(e.to);
                }
                Some(seq)
            }
        }
    }

    /// Builds a valid path from a node sequence. The empty sequence is the
    /// trivial path; sequences of length one have no edge representation and
    /// are rejected along with non-simple sequences.
    pub fn from_node_seq(seq: &[NodeId]) -> Result<SimplePath, PathError> {
        if seq.is_empty() {
            return Ok(SimplePath::trivial());
        }
        if seq.len() == 1 {
            return Err(PathError::WouldFormCycle);
        }
        let mut p = SimplePath::trivial();
        for pair in seq.windows(2).rev() {
            p = concat(
                Edge {
                    from: pair[0],
                    to: pair[1],
                },
                &p,
            )?;
        }
        Ok(p)
    }

    /// Checks contiguity and simplicity. Used by tests on constructor output.
    pub fn validate(&self) -> Result<(), String> {
        let (edges, origin) = match self {
            SimplePath::Invalid => return Ok(()),
            SimplePath::Valid { edges, origin } => (edges, origin),
        };
        match (edges.is_empty(), origin) {
            (true, None) => return Ok(()),
            (true, Some(_)) => return Err("trivial path must not cache an origin".into()),
            (false, None) => return Err("non-trivial path must cache its origin".into()),
            (false, Some(o)) if *o != edges[0].from => {
                return Err("cached origin differs from first edge".into())
            }
            _ => {}
        }
        for w in edges.windows(2) {
            if w[0].to != w[1].from {
                return Err(format!("edges {} and {} are not contiguous", w[0], w[1]));
            }
        }
        let seq = self.node_seq().unwrap();
        let mut sorted = seq.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != seq.len() {
            return Err("path repeats a router".into());
        }
        Ok(())
    }
}

impl fmt::Display for SimplePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimplePath::Invalid => write!(f, "⊥"),
            SimplePath::Valid { edges, .. } if edges.is_empty() => write!(f, "[]"),
            _ => {
                let seq = self.node_seq().unwrap();
                let parts: Vec<String> = seq.iter().map(|n| n.to_string()).collect();
                write!(f, "{}", parts.join("<"))
            }
        }
    }
}

/// Parses the textual forms produced by `Display`: `⊥` (or `bot`), `[]`,
/// `0<1<2`.
pub fn parse_path(s: &str) -> Result<SimplePath, String> {
    match s {
        "⊥" | "bot" => Ok(SimplePath::Invalid),
        "[]" => Ok(SimplePath::trivial()),
        _ => {
            let mut seq = Vec::new();
            for part in s.split('<') {
                let v: u32 = part
                    .parse()
                    .map_err(|_| format!("bad node id {part:?} in path {s:?}"))?;
                seq.push(NodeId(v));
            }
            SimplePath::from_node_seq(&seq).map_err(|e| format!("not a simple path: {e}"))
        }
    }
}

/// An edge aligns with a valid path when the path is trivial or the edge's
/// destination is the path's origin. Alignment with `⊥` is false.
pub fn is_aligned(e: Edge, p: &SimplePath) -> bool {
    match p {
        SimplePath::Invalid => false,
        SimplePath::Valid { edges, origin } => edges.is_empty() || *origin == Some(e.to),
    }
}

/// True when `i` is the origin or the destination of any edge of `p`.
/// `⊥` contains no nodes.
pub fn contains_node(p: &SimplePath, i: NodeId) -> bool {
    match p {
        SimplePath::Invalid => false,
        SimplePath::Valid { edges, origin } => {
            *origin == Some(i) || edges.iter().any(|e| e.to == i)
        }
    }
}

/// Prepends `e` to `p`, keeping the result simple.
pub fn concat(e: Edge, p: &SimplePath) -> Result<SimplePath, PathError> {
    match p {
        SimplePath::Invalid => Err(PathError::InvalidPath),
        SimplePath::Valid { edges, .. } => {
            if !is_aligned(e, p) {
                return Err(PathError::MisalignedEdge);
            }
            if contains_node(p, e.from) || (edges.is_empty() && e.from == e.to) {
                return Err(PathError::WouldFormCycle);
            }
            let mut new_edges = Vec::with_capacity(edges.len() + 1);
            new_edges.push(e);
            new_edges.extend_from_slice(edges);
            Ok(SimplePath::Valid {
                edges: new_edges,
                origin: Some(e.from),
            })
        }
    }
}

/// Collapses maximal runs of equal adjacent nodes to a single occurrence.
pub fn strip_consecutive_duplicates(raw: &[NodeId]) -> Vec<NodeId> {
    let mut out: Vec<NodeId> = raw.to_vec();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(seq: &[u32]) -> SimplePath {
        let ids: Vec<NodeId> = seq.iter().map(|&v| NodeId(v)).collect();
        SimplePath::from_node_seq(&ids).unwrap()
    }

    #[test]
    fn alignment() {
        assert!(is_aligned(Edge::new(0, 1), &SimplePath::trivial()));
        assert!(is_aligned(Edge::new(0, 1), &path(&[1, 2])));
        assert!(!is_aligned(Edge::new(0, 1), &path(&[2, 3])));
        assert!(!is_aligned(Edge::new(0, 1), &SimplePath::Invalid));
    }

    #[test]
    fn concat_cases() {
        let p = concat(Edge::new(0, 1), &SimplePath::trivial()).unwrap();
        assert_eq!(p, path(&[0, 1]));
        let q = concat(Edge::new(0, 1), &path(&[1, 2])).unwrap();
        assert_eq!(q, path(&[0, 1, 2]));
        assert_eq!(
            concat(Edge::new(2, 0), &path(&[0, 1, 2])),
            Err(PathError::WouldFormCycle)
        );
        assert_eq!(
            concat(Edge::new(0, 1), &path(&[2, 3])),
            Err(PathError::MisalignedEdge)
        );
        assert_eq!(
            concat(Edge::new(0, 1), &SimplePath::Invalid),
            Err(PathError::InvalidPath)
        );
        assert_eq!(
            concat(Edge::new(0, 0), &SimplePath::trivial()),
            Err(PathError::WouldFormCycle)
        );
    }

    #[test]
    fn node_membership() {
        assert!(!contains_node(&SimplePath::Invalid, NodeId(3)));
        assert!(contains_node(&path(&[0, 1, 2]), NodeId(1)));
        assert!(!contains_node(&path(&[0, 1, 2]), NodeId(3)));
    }

    #[test]
    fn dedup_runs() {
        let ids = |v: &[u32]| v.iter().map(|&x| NodeId(x)).collect::<Vec<_>>();
        assert_eq!(
            strip_consecutive_duplicates(&ids(&[0, 0, 0, 1, 2])),
            ids(&[0, 1, 2])
        );
        assert_eq!(strip_consecutive_duplicates(&[]), Vec::<NodeId>::new());
        assert_eq!(
            strip_consecutive_duplicates(&ids(&[0, 1, 1, 0])),
            ids(&[0, 1, 0])
        );
    }

    #[test]
    fn rendering() {
        assert_eq!(SimplePath::Invalid.to_string(), "⊥");
        assert_eq!(SimplePath::trivial().to_string(), "[]");
        assert_eq!(path(&[0, 1, 2]).to_string(), "0<1<2");
        for s in ["⊥", "[]", "0<1<2"] {
            assert_eq!(parse_path(s).unwrap().to_string(), s);
        }
    }

    proptest! {
        #[test]
        fn concat_preserves_invariants(seq in proptest::collection::vec(0u32..12, 0..8)) {
            // Build a path by repeated concat from a deduplicated suffix,
            // validating every intermediate result.
            let mut seen = std::collections::HashSet::new();
            let nodes: Vec<NodeId> = seq.into_iter().filter(|v| seen.insert(*v)).map(NodeId).collect();
            if nodes.len() == 1 {
                return Ok(());
            }
            let mut p = SimplePath::trivial();
            for pair in nodes.windows(2).rev() {
                let before = p.len().unwrap();
                p = concat(Edge { from: pair[0], to: pair[1] }, &p).unwrap();
                prop_assert_eq!(p.len().unwrap(), before + 1);
                prop_assert!(p.validate().is_ok());
            }
        }

        #[test]
        fn dedup_idempotent(raw in proptest::collection::vec(0u32..4, 0..16)) {
            let ids: Vec<NodeId> = raw.into_iter().map(NodeId).collect();
            let once = strip_consecutive_duplicates(&ids);
            let twice = strip_consecutive_duplicates(&once);
            prop_assert_eq!(once, twice);
        }
    }
}
