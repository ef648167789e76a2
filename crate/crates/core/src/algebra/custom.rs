//! Finite algebras given by explicit tables: a carrier listed by name, a
//! choice table, and per-edge policy tables. This is the ingestion format
//! for custom algebras in config files and the substrate for small
//! counterexample algebras in tests.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Algebra, AlgebraError, PolicyName};
use crate::topology::{Edge, SimplePath};

/// Serialized form: all values referenced by carrier name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableAlgebraSpec {
    pub carrier: Vec<String>,
    pub trivial: String,
    pub invalid: String,
    /// `choose[x][y]` is the name of `x ⊕ y`.
    pub choose: Vec<Vec<String>>,
    /// Default catalog applied on every edge: policy name to output column,
    /// one output per carrier value.
    pub policies: BTreeMap<String, Vec<String>>,
    pub invalid_policy: String,
    /// Catalog overrides for particular edges.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edge_policies: Vec<EdgeCatalogSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeCatalogSpec {
    pub from: u32,
    pub to: u32,
    pub policies: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub invalid_policy: Option<String>,
}

/// A carrier value, as an index into the carrier list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TableWeight(pub usize);

#[derive(Debug, Clone)]
struct Catalog {
    tables: BTreeMap<PolicyName, Vec<usize>>,
    invalid_policy: PolicyName,
}

#[derive(Debug, Clone)]
pub struct TableAlgebra {
    names: Vec<String>,
    index: HashMap<String, usize>,
    trivial: usize,
    invalid: usize,
    choose: Vec<usize>,
    default_catalog: Catalog,
    overrides: BTreeMap<(u32, u32), Catalog>,
}

impl TableAlgebra {
    pub fn from_spec(spec: &TableAlgebraSpec) -> Result<Self, String> {
        let n = spec.carrier.len();
        if n == 0 {
            return Err("carrier must not be empty".into());
        }
        let mut index = HashMap::new();
        for (i, name) in spec.carrier.iter().enumerate() {
            if index.insert(name.clone(), i).is_some() {
                return Err(format!("carrier value {name:?} listed twice"));
            }
        }
        let lookup = |name: &str| -> Result<usize, String> {
            index
                .get(name)
                .copied()
                .ok_or_else(|| format!("unknown carrier value {name:?}"))
        };
        let trivial = lookup(&spec.trivial)?;
        let invalid = lookup(&spec.invalid)?;
        if spec.choose.len() != n {
            return Err("choice table must have one row per carrier value".into());
        }
        let mut choose = Vec::with_capacity(n * n);
        for row in &spec.choose {
            if row.len() != n {
                return Err("choice table rows must match the carrier length".into());
            }
            for cell in row {
                choose.push(lookup(cell)?);
            }
        }
        let build_catalog = |policies: &BTreeMap<String, Vec<String>>,
                             invalid_policy: &str|
         -> Result<Catalog, String> {
            let mut tables = BTreeMap::new();
            for (name, outputs) in policies {
                if outputs.len() != n {
                    return Err(format!("policy {name:?} must map every carrier value"));
                }
                let table: Result<Vec<usize>, String> =
                    outputs.iter().map(|o| lookup(o)).collect();
                tables.insert(PolicyName::new(name.clone()), table?);
            }
            let invalid_policy = PolicyName::new(invalid_policy.to_string());
            if !tables.contains_key(&invalid_policy) {
                return Err(format!(
                    "invalid policy {:?} is not in the catalog",
                    invalid_policy.as_str()
                ));
            }
            Ok(Catalog {
                tables,
                invalid_policy,
            })
        };
        let default_catalog = build_catalog(&spec.policies, &spec.invalid_policy)?;
        let mut overrides = BTreeMap::new();
        for edge_spec in &spec.edge_policies {
            let inv = edge_spec
                .invalid_policy
                .as_deref()
                .unwrap_or(&spec.invalid_policy);
            overrides.insert(
                (edge_spec.from, edge_spec.to),
                build_catalog(&edge_spec.policies, inv)?,
            );
        }
        Ok(TableAlgebra {
            names: spec.carrier.clone(),
            index,
            trivial,
            invalid,
            choose,
            default_catalog,
            overrides,
        })
    }

    fn catalog(&self, edge: Edge) -> &Catalog {
        self.overrides
            .get(&(edge.from.0, edge.to.0))
            .unwrap_or(&self.default_catalog)
    }

    pub fn weight(&self, name: &str) -> Option<TableWeight> {
        self.index.get(name).map(|&i| TableWeight(i))
    }
}

impl Algebra for TableAlgebra {
    type Weight = TableWeight;

    fn trivial(&self) -> TableWeight {
        TableWeight(self.trivial)
    }

    fn invalid(&self) -> TableWeight {
        TableWeight(self.invalid)
    }

    fn choose(&self, x: &TableWeight, y: &TableWeight) -> TableWeight {
        TableWeight(self.choose[x.0 * self.names.len() + y.0])
    }

    fn extend(
        &self,
        edge: Edge,
        policy: &PolicyName,
        x: &TableWeight,
    ) -> Result<TableWeight, AlgebraError> {
        let table = self
            .catalog(edge)
            .tables
            .get(policy)
            .ok_or_else(|| AlgebraError::UnknownPolicy {
                edge,
                name: policy.clone(),
            })?;
        Ok(TableWeight(table[x.0]))
    }

    fn has_policy(&self, edge: Edge, policy: &PolicyName) -> bool {
        self.catalog(edge).tables.contains_key(policy)
    }

    fn invalid_policy(&self, edge: Edge) -> PolicyName {
        self.catalog(edge).invalid_policy.clone()
    }

    fn enumerate(&self) -> Option<Vec<TableWeight>> {
        Some((0..self.names.len()).map(TableWeight).collect())
    }

    fn edges(&self) -> Vec<Edge> {
        let mut edges = vec![Edge::new(0, 0)];
        for &(from, to) in self.overrides.keys() {
            let e = Edge::new(from, to);
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
        edges
    }

    fn enumerate_policies(&self, edge: Edge) -> Option<Vec<PolicyName>> {
        Some(self.catalog(edge).tables.keys().cloned().collect())
    }

    fn sample_weight(&self, rng: &mut ChaCha8Rng) -> TableWeight {
        TableWeight(rng.gen_range(0..self.names.len()))
    }

    fn sample_policy(&self, edge: Edge, rng: &mut ChaCha8Rng) -> PolicyName {
        let names = self.enumerate_policies(edge).unwrap();
        names[rng.gen_range(0..names.len())].clone()
    }

    fn render(&self, w: &TableWeight) -> String {
        self.names[w.0].clone()
    }

    fn parse_weight(&self, s: &str) -> Result<TableWeight, AlgebraError> {
        self.weight(s).ok_or_else(|| AlgebraError::BadWeight {
            text: s.to_string(),
            reason: "not a carrier value".to_string(),
        })
    }

    fn path_of(&self, _w: &TableWeight) -> Option<SimplePath> {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_spec() -> TableAlgebraSpec {
        TableAlgebraSpec {
            carrier: vec!["0".into(), "inf".into()],
            trivial: "0".into(),
            invalid: "inf".into(),
            choose: vec![
                vec!["0".into(), "0".into()],
                vec!["0".into(), "inf".into()],
            ],
            policies: [
                ("keep".to_string(), vec!["0".into(), "inf".into()]),
                ("reject".to_string(), vec!["inf".into(), "inf".into()]),
            ]
            .into_iter()
            .collect(),
            invalid_policy: "reject".into(),
            edge_policies: Vec::new(),
        }
    }

    #[test]
    fn spec_round_trip_and_lookup() {
        let alg = TableAlgebra::from_spec(&two_point_spec()).unwrap();
        let zero = alg.weight("0").unwrap();
        let inf = alg.weight("inf").unwrap();
        assert_eq!(alg.trivial(), zero);
        assert_eq!(alg.choose(&zero, &inf), zero);
        assert_eq!(
            alg.extend(Edge::new(0, 1), &PolicyName::new("keep"), &zero)
                .unwrap(),
            zero
        );
        assert_eq!(alg.render(&inf), "inf");
    }

    #[test]
    fn bad_specs_are_rejected() {
        let mut spec = two_point_spec();
        spec.invalid_policy = "missing".into();
        assert!(TableAlgebra::from_spec(&spec).is_err());

        let mut spec = two_point_spec();
        spec.choose[0][0] = "nope".into();
        assert!(TableAlgebra::from_spec(&spec).is_err());
    }

    #[test]
    fn edge_overrides_resolve() {
        let mut spec = two_point_spec();
        spec.edge_policies.push(EdgeCatalogSpec {
            from: 0,
            to: 1,
            policies: [("reject".to_string(), vec!["inf".into(), "inf".into()])]
                .into_iter()
                .collect(),
            invalid_policy: None,
        });
        let alg = TableAlgebra::from_spec(&spec).unwrap();
        assert!(alg.has_policy(Edge::new(1, 0), &PolicyName::new("keep")));
        assert!(!alg.has_policy(Edge::new(0, 1), &PolicyName::new("keep")));
    }
}
