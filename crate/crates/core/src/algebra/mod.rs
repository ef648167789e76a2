//! The raw routing algebra abstraction and its checkers.
//!
//! An [`Algebra`] packages the six primitives of a raw routing algebra: a
//! carrier of path-weights with decidable equality, the choice operator `⊕`,
//! a per-edge catalog of named policy functions, the trivial and invalid
//! path-weights, and the distinguished constantly-invalid policy of each
//! edge. Adjacency matrices store [`PolicyName`]s, never closures, so
//! topologies serialize and replay bit-exactly.
//!
//! [`checks`] turns the routing-algebra axioms (selectivity, associativity,
//! commutativity, the roles of the trivial and invalid weights, and the two
//! invalid-policy laws) plus the distributive / increasing / strictly
//! increasing properties into executable checks, exhaustive on enumerable
//! carriers and seed-deterministic sampled otherwise.

use std::fmt;
use std::hash::Hash;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::topology::{Edge, SimplePath};

pub mod checks;
pub mod custom;
pub mod table1;

pub use checks::{
    check_properties, check_properties_over, check_routing_axioms, check_routing_axioms_over,
    AxiomReport, CheckMode, CheckStatus, Witness,
};
pub use custom::{EdgeCatalogSpec, TableAlgebra, TableAlgebraSpec, TableWeight};
pub use table1::{make_table1_algebra, NatInf, Table1Algebra, Table1Kind};

/// Token identifying one member of an edge's policy catalog, e.g. `add:3`,
/// `min:5`, `reject`, or a serialized policy program.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolicyName(pub String);

impl PolicyName {
    pub fn new(s: impl Into<String>) -> Self {
        PolicyName(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PolicyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A policy pinned to the edge it lives on; used in reports and witnesses.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PolicyId {
    pub edge: Edge,
    pub name: PolicyName,
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}@{}", self.name, self.edge)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("carrier is not enumerable; use sampled mode")]
    NotEnumerable,
    #[error("policy catalog is not enumerable; use sampled mode")]
    PoliciesNotEnumerable,
    #[error("unknown policy {name} on edge {edge}")]
    UnknownPolicy { edge: Edge, name: PolicyName },
    #[error("algebra has no path extraction function")]
    NoPathFunction,
    #[error("cannot parse path-weight {text:?}: {reason}")]
    BadWeight { text: String, reason: String },
}

/// A raw routing algebra behind one interface.
///
/// `extend` resolves a policy name against the edge's catalog and applies it;
/// unknown names are an error so that a mistyped topology fails loudly rather
/// than silently dropping routes. `path_of` returns `None` on every input for
/// algebras that do not claim to be path algebras.
pub trait Algebra {
    type Weight: Clone + Eq + Hash + fmt::Debug;

    fn trivial(&self) -> Self::Weight;
    fn invalid(&self) -> Self::Weight;

    fn choose(&self, x: &Self::Weight, y: &Self::Weight) -> Self::Weight;

    fn extend(
        &self,
        edge: Edge,
        policy: &PolicyName,
        x: &Self::Weight,
    ) -> Result<Self::Weight, AlgebraError>;

    fn has_policy(&self, edge: Edge, policy: &PolicyName) -> bool;

    /// The constantly-invalid policy of the edge; also the entry used for
    /// absent links.
    fn invalid_policy(&self, edge: Edge) -> PolicyName;

    /// Exhaustive carrier when it is finite, with the trivial and invalid
    /// weights included. Infinite carriers return `None`.
    fn enumerate(&self) -> Option<Vec<Self::Weight>>;

    /// The edges over which the policy catalog meaningfully varies. Algebras
    /// whose catalog ignores the edge return a single representative.
    fn edges(&self) -> Vec<Edge>;

    fn enumerate_policies(&self, edge: Edge) -> Option<Vec<PolicyName>>;

    fn sample_weight(&self, rng: &mut ChaCha8Rng) -> Self::Weight;

    fn sample_policy(&self, edge: Edge, rng: &mut ChaCha8Rng) -> PolicyName;

    fn render(&self, w: &Self::Weight) -> String;

    fn parse_weight(&self, s: &str) -> Result<Self::Weight, AlgebraError>;

    /// Path extraction; `None` when the algebra has no path function.
    fn path_of(&self, w: &Self::Weight) -> Option<SimplePath>;

    fn is_path_algebra(&self) -> bool {
        self.path_of(&self.trivial()).is_some()
    }
}

/// `x` is chosen over `y`.
pub fn leq<A: Algebra>(alg: &A, x: &A::Weight, y: &A::Weight) -> bool {
    alg.choose(x, y) == *x
}

/// `x` is chosen over `y` and differs from it.
pub fn lt<A: Algebra>(alg: &A, x: &A::Weight, y: &A::Weight) -> bool {
    x != y && leq(alg, x, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leq_on_shortest() {
        let alg = Table1Algebra::shortest(16);
        let three = NatInf::Fin(3);
        let five = NatInf::Fin(5);
        assert!(leq(&alg, &three, &five));
        assert!(!leq(&alg, &five, &three));
        assert!(lt(&alg, &three, &five));
        assert!(!lt(&alg, &three, &three));
    }

    #[test]
    fn trivial_and_invalid_bound_the_order() {
        // Under the trivial-annihilator and invalid-identity axioms the
        // trivial weight is below and the invalid weight above everything.
        let alg = Table1Algebra::shortest(8);
        let zero = alg.trivial();
        let inf = alg.invalid();
        for x in alg.enumerate().unwrap() {
            assert!(leq(&alg, &zero, &x));
            assert!(leq(&alg, &x, &inf));
        }
    }

    #[test]
    fn leq_is_a_total_order_when_choice_axioms_hold() {
        for alg in [Table1Algebra::shortest(8), Table1Algebra::widest(8)] {
            let all = alg.enumerate().unwrap();
            for x in &all {
                assert!(leq(&alg, x, x));
                for y in &all {
                    assert!(leq(&alg, x, y) || leq(&alg, y, x));
                    if leq(&alg, x, y) && leq(&alg, y, x) {
                        assert_eq!(x, y);
                    }
                    for z in &all {
                        if leq(&alg, x, y) && leq(&alg, y, z) {
                            assert!(leq(&alg, x, z));
                        }
                    }
                }
            }
        }
    }
}
