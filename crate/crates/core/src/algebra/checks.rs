//! Executable checks for the routing-algebra axioms and the distributive,
//! increasing and strictly increasing properties.
//!
//! Exhaustive mode quantifies over the enumerated carrier and policy
//! catalogs and is its own oracle. Sampled mode draws value tuples and
//! policy picks from a seeded generator; the seed is recorded in the report
//! so every counterexample replays.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{leq, lt, Algebra, AlgebraError, PolicyId, PolicyName};
use crate::topology::Edge;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    Exhaustive,
    Sampled { seed: u64, cases: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Witness<W> {
    pub weights: Vec<W>,
    pub policy: Option<PolicyId>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum CheckStatus<W> {
    /// Verified over the whole (finite) domain.
    Holds,
    /// No counterexample in `cases` seeded draws.
    Sampled { cases: usize },
    Fails(Witness<W>),
}

impl<W> CheckStatus<W> {
    pub fn passed(&self) -> bool {
        !matches!(self, CheckStatus::Fails(_))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AxiomReport<W> {
    pub entries: Vec<(String, CheckStatus<W>)>,
    pub seed: Option<u64>,
}

impl<W> AxiomReport<W> {
    pub fn status(&self, name: &str) -> Option<&CheckStatus<W>> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, s)| s)
    }

    pub fn all_pass(&self) -> bool {
        self.entries.iter().all(|(_, s)| s.passed())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(seed) = self.seed {
            out.push_str(&format!("sampled with seed {seed}\n"));
        }
        for (name, status) in &self.entries {
            let line = match status {
                CheckStatus::Holds => format!("{name}: holds"),
                CheckStatus::Sampled { cases } => {
                    format!("{name}: sampled({cases} cases, no counterexample)")
                }
                CheckStatus::Fails(w) => format!("{name}: FAILS ({})", w.detail),
            };
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

struct EnumeratedDomain<A: Algebra> {
    weights: Vec<A::Weight>,
    /// Per edge, the full policy catalog.
    policies: Vec<(Edge, Vec<PolicyName>)>,
}

fn enumerated_domain<A: Algebra>(alg: &A) -> Result<EnumeratedDomain<A>, AlgebraError> {
    let weights = alg.enumerate().ok_or(AlgebraError::NotEnumerable)?;
    let mut policies = Vec::new();
    for edge in alg.edges() {
        let names = alg
            .enumerate_policies(edge)
            .ok_or(AlgebraError::PoliciesNotEnumerable)?;
        policies.push((edge, names));
    }
    Ok(EnumeratedDomain { weights, policies })
}

fn witness<A: Algebra>(
    alg: &A,
    weights: &[&A::Weight],
    policy: Option<PolicyId>,
    detail: String,
) -> Witness<A::Weight> {
    let rendered: Vec<String> = weights.iter().map(|w| alg.render(w)).collect();
    Witness {
        weights: weights.iter().map(|w| (*w).clone()).collect(),
        policy,
        detail: format!("{detail}; values [{}]", rendered.join(", ")),
    }
}

/// Checks selectivity, associativity, commutativity, the annihilator and
/// identity roles of the trivial and invalid weights, that every policy
/// fixes the invalid weight, and that each edge's distinguished invalid
/// policy is constantly invalid.
pub fn check_routing_axioms<A: Algebra>(
    alg: &A,
    mode: CheckMode,
) -> Result<AxiomReport<A::Weight>, AlgebraError> {
    match mode {
        CheckMode::Exhaustive => {
            let dom = enumerated_domain(alg)?;
            Ok(check_routing_axioms_over(alg, &dom.weights, &dom.policies))
        }
        CheckMode::Sampled { seed, cases } => Ok(sampled_routing_axioms(alg, seed, cases)),
    }
}

/// Exhaustive axiom check over an explicit value set and policy catalogs.
/// Useful for algebras whose full carrier is infinite but which come with a
/// finite micro-domain.
pub fn check_routing_axioms_over<A: Algebra>(
    alg: &A,
    weights: &[A::Weight],
    policies: &[(Edge, Vec<PolicyName>)],
) -> AxiomReport<A::Weight> {
    let zero = alg.trivial();
    let inf = alg.invalid();

    let mut r1 = CheckStatus::Holds;
    let mut r2 = CheckStatus::Holds;
    let mut r3 = CheckStatus::Holds;
    let mut r4 = CheckStatus::Holds;
    let mut r5 = CheckStatus::Holds;

    for x in weights {
        if r4.passed() {
            let a = alg.choose(x, &zero);
            let b = alg.choose(&zero, x);
            if a != zero || b != zero {
                r4 = CheckStatus::Fails(witness(
                    alg,
                    &[x],
                    None,
                    "trivial weight is not an annihilator for choice".into(),
                ));
            }
        }
        if r5.passed() {
            let a = alg.choose(x, &inf);
            let b = alg.choose(&inf, x);
            if &a != x || &b != x {
                r5 = CheckStatus::Fails(witness(
                    alg,
                    &[x],
                    None,
                    "invalid weight is not an identity for choice".into(),
                ));
            }
        }
        for y in weights {
            if r1.passed() {
                let c = alg.choose(x, y);
                if &c != x && &c != y {
                    r1 = CheckStatus::Fails(witness(
                        alg,
                        &[x, y],
                        None,
                        "choice returned neither operand".into(),
                    ));
                }
            }
            if r3.passed() && alg.choose(x, y) != alg.choose(y, x) {
                r3 = CheckStatus::Fails(witness(
                    alg,
                    &[x, y],
                    None,
                    "choice is not commutative".into(),
                ));
            }
            if r2.passed() {
                for z in weights {
                    let lhs = alg.choose(x, &alg.choose(y, z));
                    let rhs = alg.choose(&alg.choose(x, y), z);
                    if lhs != rhs {
                        r2 = CheckStatus::Fails(witness(
                            alg,
                            &[x, y, z],
                            None,
                            "choice is not associative".into(),
                        ));
                        break;
                    }
                }
            }
        }
    }

    let mut r6 = CheckStatus::Holds;
    let mut r7 = CheckStatus::Holds;
    for (edge, names) in policies {
        for name in names {
            if r6.passed() {
                let out = alg.extend(*edge, name, &inf).expect("cataloged policy");
                if out != inf {
                    r6 = CheckStatus::Fails(witness(
                        alg,
                        &[&inf, &out],
                        Some(PolicyId {
                            edge: *edge,
                            name: name.clone(),
                        }),
                        "policy does not fix the invalid weight".into(),
                    ));
                }
            }
        }
        if r7.passed() {
            let f_inf = alg.invalid_policy(*edge);
            for x in weights {
                let out = alg.extend(*edge, &f_inf, x).expect("invalid policy");
                if out != inf {
                    r7 = CheckStatus::Fails(witness(
                        alg,
                        &[x, &out],
                        Some(PolicyId {
                            edge: *edge,
                            name: f_inf.clone(),
                        }),
                        "distinguished invalid policy is not constantly invalid".into(),
                    ));
                    break;
                }
            }
        }
    }

    AxiomReport {
        entries: vec![
            ("R1 selectivity".into(), r1),
            ("R2 associativity".into(), r2),
            ("R3 commutativity".into(), r3),
            ("R4 trivial-annihilator".into(), r4),
            ("R5 invalid-identity".into(), r5),
            ("R6 invalid-fixed-point".into(), r6),
            ("R7 invalid-policy".into(), r7),
        ],
        seed: None,
    }
}

fn sampled_routing_axioms<A: Algebra>(alg: &A, seed: u64, cases: usize) -> AxiomReport<A::Weight> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero = alg.trivial();
    let inf = alg.invalid();
    let edges = alg.edges();

    let pass = CheckStatus::Sampled { cases };
    let mut st: Vec<CheckStatus<A::Weight>> = vec![pass; 7];

    for _ in 0..cases {
        let x = alg.sample_weight(&mut rng);
        let y = alg.sample_weight(&mut rng);
        let z = alg.sample_weight(&mut rng);
        let edge = edges[rng.gen_range(0..edges.len())];
        let f = alg.sample_policy(edge, &mut rng);
        let pid = PolicyId {
            edge,
            name: f.clone(),
        };

        if st[0].passed() {
            let c = alg.choose(&x, &y);
            if c != x && c != y {
                st[0] = CheckStatus::Fails(witness(
                    alg,
                    &[&x, &y],
                    None,
                    "choice returned neither operand".into(),
                ));
            }
        }
        if st[1].passed()
            && alg.choose(&x, &alg.choose(&y, &z)) != alg.choose(&alg.choose(&x, &y), &z)
        {
            st[1] = CheckStatus::Fails(witness(
                alg,
                &[&x, &y, &z],
                None,
                "choice is not associative".into(),
            ));
        }
        if st[2].passed() && alg.choose(&x, &y) != alg.choose(&y, &x) {
            st[2] = CheckStatus::Fails(witness(
                alg,
                &[&x, &y],
                None,
                "choice is not commutative".into(),
            ));
        }
        if st[3].passed() && (alg.choose(&x, &zero) != zero || alg.choose(&zero, &x) != zero) {
            st[3] = CheckStatus::Fails(witness(
                alg,
                &[&x],
                None,
                "trivial weight is not an annihilator for choice".into(),
            ));
        }
        if st[4].passed() && (alg.choose(&x, &inf) != x || alg.choose(&inf, &x) != x) {
            st[4] = CheckStatus::Fails(witness(
                alg,
                &[&x],
                None,
                "invalid weight is not an identity for choice".into(),
            ));
        }
        if st[5].passed() {
            let out = alg.extend(edge, &f, &inf).expect("sampled policy");
            if out != inf {
                st[5] = CheckStatus::Fails(witness(
                    alg,
                    &[&inf, &out],
                    Some(pid.clone()),
                    "policy does not fix the invalid weight".into(),
                ));
            }
        }
        if st[6].passed() {
            let f_inf = alg.invalid_policy(edge);
            let out = alg.extend(edge, &f_inf, &x).expect("invalid policy");
            if out != inf {
                st[6] = CheckStatus::Fails(witness(
                    alg,
                    &[&x, &out],
                    Some(PolicyId { edge, name: f_inf }),
                    "distinguished invalid policy is not constantly invalid".into(),
                ));
            }
        }
    }

    let names = [
        "R1 selectivity",
        "R2 associativity",
        "R3 commutativity",
        "R4 trivial-annihilator",
        "R5 invalid-identity",
        "R6 invalid-fixed-point",
        "R7 invalid-policy",
    ];
    AxiomReport {
        entries: names
            .iter()
            .map(|n| n.to_string())
            .zip(st.into_iter())
            .collect(),
        seed: Some(seed),
    }
}

/// Checks distributivity, increasingness and strict increasingness of the
/// policy catalog over choice.
///
/// Strict increasingness is evaluated as increasingness plus the strict
/// inequality on non-invalid weights, so the report can never claim the
/// strict property while denying the plain one.
pub fn check_properties<A: Algebra>(
    alg: &A,
    mode: CheckMode,
) -> Result<AxiomReport<A::Weight>, AlgebraError> {
    match mode {
        CheckMode::Exhaustive => {
            let dom = enumerated_domain(alg)?;
            Ok(check_properties_over(alg, &dom.weights, &dom.policies))
        }
        CheckMode::Sampled { seed, cases } => Ok(sampled_properties(alg, seed, cases)),
    }
}

pub fn check_properties_over<A: Algebra>(
    alg: &A,
    weights: &[A::Weight],
    policies: &[(Edge, Vec<PolicyName>)],
) -> AxiomReport<A::Weight> {
    let inf = alg.invalid();
    let mut distributive = CheckStatus::Holds;
    let mut increasing = CheckStatus::Holds;
    let mut strict_extra: Option<Witness<A::Weight>> = None;

    for (edge, names) in policies {
        for name in names {
            let pid = PolicyId {
                edge: *edge,
                name: name.clone(),
            };
            for x in weights {
                let fx = alg.extend(*edge, name, x).expect("cataloged policy");
                if increasing.passed() && !leq(alg, x, &fx) {
                    increasing = CheckStatus::Fails(witness(
                        alg,
                        &[x, &fx],
                        Some(pid.clone()),
                        "policy produced a strictly preferred weight".into(),
                    ));
                }
                if strict_extra.is_none() && *x != inf && !lt(alg, x, &fx) {
                    strict_extra = Some(witness(
                        alg,
                        &[x, &fx],
                        Some(pid.clone()),
                        "policy does not strictly worsen a valid weight".into(),
                    ));
                }
                if distributive.passed() {
                    for y in weights {
                        let fy = alg.extend(*edge, name, y).expect("cataloged policy");
                        let lhs = alg
                            .extend(*edge, name, &alg.choose(x, y))
                            .expect("cataloged policy");
                        let rhs = alg.choose(&fx, &fy);
                        if lhs != rhs {
                            distributive = CheckStatus::Fails(witness(
                                alg,
                                &[x, y, &lhs, &rhs],
                                Some(pid.clone()),
                                "policy does not distribute over choice".into(),
                            ));
                            break;
                        }
                    }
                }
            }
        }
    }

    let strictly = combine_strict(&increasing, strict_extra, CheckStatus::Holds);
    AxiomReport {
        entries: vec![
            ("distributive".into(), distributive),
            ("increasing".into(), increasing),
            ("strictly-increasing".into(), strictly),
        ],
        seed: None,
    }
}

fn combine_strict<W: Clone>(
    increasing: &CheckStatus<W>,
    strict_extra: Option<Witness<W>>,
    pass: CheckStatus<W>,
) -> CheckStatus<W> {
    match (increasing, strict_extra) {
        (CheckStatus::Fails(w), _) => CheckStatus::Fails(w.clone()),
        (_, Some(w)) => CheckStatus::Fails(w),
        (_, None) => pass,
    }
}

fn sampled_properties<A: Algebra>(alg: &A, seed: u64, cases: usize) -> AxiomReport<A::Weight> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inf = alg.invalid();
    let edges = alg.edges();

    let mut distributive = CheckStatus::Sampled { cases };
    let mut increasing = CheckStatus::Sampled { cases };
    let mut strict_extra: Option<Witness<A::Weight>> = None;

    for _ in 0..cases {
        let x = alg.sample_weight(&mut rng);
        let y = alg.sample_weight(&mut rng);
        let edge = edges[rng.gen_range(0..edges.len())];
        let name = alg.sample_policy(edge, &mut rng);
        let pid = PolicyId {
            edge,
            name: name.clone(),
        };
        let fx = alg.extend(edge, &name, &x).expect("sampled policy");

        if increasing.passed() && !leq(alg, &x, &fx) {
            increasing = CheckStatus::Fails(witness(
                alg,
                &[&x, &fx],
                Some(pid.clone()),
                "policy produced a strictly preferred weight".into(),
            ));
        }
        if strict_extra.is_none() && x != inf && !lt(alg, &x, &fx) {
            strict_extra = Some(witness(
                alg,
                &[&x, &fx],
                Some(pid.clone()),
                "policy does not strictly worsen a valid weight".into(),
            ));
        }
        if distributive.passed() {
            let fy = alg.extend(edge, &name, &y).expect("sampled policy");
            let lhs = alg
                .extend(edge, &name, &alg.choose(&x, &y))
                .expect("sampled policy");
            let rhs = alg.choose(&fx, &fy);
            if lhs != rhs {
                distributive = CheckStatus::Fails(witness(
                    alg,
                    &[&x, &y, &lhs, &rhs],
                    Some(pid),
                    "policy does not distribute over choice".into(),
                ));
            }
        }
    }

    let strictly = combine_strict(&increasing, strict_extra, CheckStatus::Sampled { cases });
    AxiomReport {
        entries: vec![
            ("distributive".into(), distributive),
            ("increasing".into(), increasing),
            ("strictly-increasing".into(), strictly),
        ],
        seed: Some(seed),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Table1Algebra, TableAlgebra, TableAlgebraSpec};

    #[test]
    fn shortest_and_widest_pass_all_axioms() {
        for report in [
            check_routing_axioms(&Table1Algebra::shortest(16), CheckMode::Exhaustive).unwrap(),
            check_routing_axioms(&Table1Algebra::widest(16), CheckMode::Exhaustive).unwrap(),
        ] {
            assert!(report.all_pass(), "{}", report.render());
        }
    }

    #[test]
    fn broken_choice_fails_selectivity_with_witness() {
        // choose(a, b) = trivial for a pair of non-trivial values.
        let spec = TableAlgebraSpec {
            carrier: vec!["0".into(), "a".into(), "b".into(), "inf".into()],
            trivial: "0".into(),
            invalid: "inf".into(),
            choose: vec![
                vec!["0".into(), "0".into(), "0".into(), "0".into()],
                vec!["0".into(), "a".into(), "0".into(), "a".into()],
                vec!["0".into(), "0".into(), "b".into(), "b".into()],
                vec!["0".into(), "a".into(), "b".into(), "inf".into()],
            ],
            policies: [(
                "reject".to_string(),
                vec!["inf".into(), "inf".into(), "inf".into(), "inf".into()],
            )]
            .into_iter()
            .collect(),
            invalid_policy: "reject".into(),
            edge_policies: Vec::new(),
        };
        let alg = TableAlgebra::from_spec(&spec).unwrap();
        let report = check_routing_axioms(&alg, CheckMode::Exhaustive).unwrap();
        match report.status("R1 selectivity").unwrap() {
            CheckStatus::Fails(w) => assert_eq!(w.weights.len(), 2),
            other => panic!("expected R1 failure, got {other:?}"),
        }
    }

    #[test]
    fn shortest_properties_with_zero_weight_policies() {
        let alg = Table1Algebra::shortest(16);
        let report = check_properties(&alg, CheckMode::Exhaustive).unwrap();
        assert!(report.status("distributive").unwrap().passed());
        assert!(report.status("increasing").unwrap().passed());
        match report.status("strictly-increasing").unwrap() {
            CheckStatus::Fails(w) => {
                let policy = w.policy.as_ref().unwrap();
                assert_eq!(policy.name.as_str(), "add:0");
            }
            other => panic!("expected strict-increase failure, got {other:?}"),
        }
    }

    #[test]
    fn shortest_with_positive_weights_is_strictly_increasing() {
        let alg = Table1Algebra::shortest_with_min_weight(16, 1);
        let report = check_properties(&alg, CheckMode::Exhaustive).unwrap();
        assert!(report.all_pass(), "{}", report.render());
    }

    #[test]
    fn exhaustive_mode_requires_enumerable_carrier() {
        let alg = crate::bgplite::BgpLiteAlgebra::new(3);
        let err = check_routing_axioms(&alg, CheckMode::Exhaustive).unwrap_err();
        assert_eq!(err, AlgebraError::NotEnumerable);
    }
}
