//! Path-algebra axioms as executable checks, plus the shortest-paths
//! path-vector algebra.
//!
//! A path algebra is a routing algebra whose weights carry an extractable
//! simple path. The checks verify that extraction is faithful: only the
//! invalid weight stores the invalid path, the trivial weight stores the
//! empty path, and extending a weight across an edge either prepends that
//! edge to the stored path or invalidates the weight. A policy is free to
//! reject (every catalog contains the constantly-invalid policy, and route
//! filters do the same), so the extension case accepts an invalid result in
//! place of the prepended path; what it forbids is any other path.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{
    checks::Witness, Algebra, AlgebraError, AxiomReport, CheckMode, CheckStatus, PolicyId,
    PolicyName,
};
use crate::topology::{concat, parse_path, Edge, NodeId, SimplePath};

pub type PathAlgebraReport<W> = AxiomReport<W>;

/// Checks the three path-extraction axioms over every weight, edge over `n`
/// routers, and cataloged policy (or a seeded sample of such triples).
pub fn check_path_axioms<A: Algebra>(
    alg: &A,
    n: usize,
    mode: CheckMode,
) -> Result<PathAlgebraReport<A::Weight>, AlgebraError> {
    if !alg.is_path_algebra() {
        return Err(AlgebraError::NoPathFunction);
    }
    match mode {
        CheckMode::Exhaustive => {
            let weights = alg.enumerate().ok_or(AlgebraError::NotEnumerable)?;
            let mut policies = Vec::new();
            for i in 0..n as u32 {
                for j in 0..n as u32 {
                    let edge = Edge::new(i, j);
                    let names = alg
                        .enumerate_policies(edge)
                        .ok_or(AlgebraError::PoliciesNotEnumerable)?;
                    policies.push((edge, names));
                }
            }
            Ok(check_path_axioms_over(alg, &weights, &policies, None))
        }
        CheckMode::Sampled { seed, cases } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut report = sampled_path_axioms(alg, n, &mut rng, cases);
            report.seed = Some(seed);
            Ok(report)
        }
    }
}

/// Exhaustive path-axiom check over an explicit value set and policy
/// catalogs (for algebras with a finite micro-domain but infinite carrier).
pub fn check_path_axioms_over<A: Algebra>(
    alg: &A,
    weights: &[A::Weight],
    policies: &[(Edge, Vec<PolicyName>)],
    seed: Option<u64>,
) -> PathAlgebraReport<A::Weight> {
    let mut p1 = CheckStatus::Holds;
    let mut p2 = CheckStatus::Holds;
    let mut p3 = CheckStatus::Holds;

    for x in weights {
        if p1.passed() {
            if let Some(w) = p1_violation(alg, x) {
                p1 = CheckStatus::Fails(w);
            }
        }
        if p2.passed() {
            if let Some(w) = p2_violation(alg, x) {
                p2 = CheckStatus::Fails(w);
            }
        }
        if p3.passed() {
            'outer: for (edge, names) in policies {
                for name in names {
                    if let Some(w) = p3_violation(alg, *edge, name, x) {
                        p3 = CheckStatus::Fails(w);
                        break 'outer;
                    }
                }
            }
        }
    }

    AxiomReport {
        entries: vec![
            ("P1 invalid-path".into(), p1),
            ("P2 trivial-path".into(), p2),
            ("P3 extension".into(), p3),
        ],
        seed,
    }
}

fn sampled_path_axioms<A: Algebra>(
    alg: &A,
    n: usize,
    rng: &mut ChaCha8Rng,
    cases: usize,
) -> PathAlgebraReport<A::Weight> {
    let pass = CheckStatus::Sampled { cases };
    let mut p1 = pass.clone();
    let mut p2 = pass.clone();
    let mut p3 = pass;

    for _ in 0..cases {
        let x = alg.sample_weight(rng);
        let edge = Edge::new(rng.gen_range(0..n) as u32, rng.gen_range(0..n) as u32);
        let name = alg.sample_policy(edge, rng);
        if p1.passed() {
            if let Some(w) = p1_violation(alg, &x) {
                p1 = CheckStatus::Fails(w);
            }
        }
        if p2.passed() {
            if let Some(w) = p2_violation(alg, &x) {
                p2 = CheckStatus::Fails(w);
            }
        }
        if p3.passed() {
            if let Some(w) = p3_violation(alg, edge, &name, &x) {
                p3 = CheckStatus::Fails(w);
            }
        }
    }

    AxiomReport {
        entries: vec![
            ("P1 invalid-path".into(), p1),
            ("P2 trivial-path".into(), p2),
            ("P3 extension".into(), p3),
        ],
        seed: None,
    }
}

fn p1_violation<A: Algebra>(alg: &A, x: &A::Weight) -> Option<Witness<A::Weight>> {
    let is_invalid = *x == alg.invalid();
    let stores_bot = alg.path_of(x).expect("path algebra").is_invalid();
    (is_invalid != stores_bot).then(|| Witness {
        weights: vec![x.clone()],
        policy: None,
        detail: format!(
            "weight {} {} the invalid weight but stores path {}",
            alg.render(x),
            if is_invalid { "is" } else { "is not" },
            alg.path_of(x).unwrap()
        ),
    })
}

fn p2_violation<A: Algebra>(alg: &A, x: &A::Weight) -> Option<Witness<A::Weight>> {
    if *x != alg.trivial() {
        return None;
    }
    let p = alg.path_of(x).expect("path algebra");
    (!p.is_trivial()).then(|| Witness {
        weights: vec![x.clone()],
        policy: None,
        detail: format!("trivial weight stores path {p} instead of []"),
    })
}

fn p3_violation<A: Algebra>(
    alg: &A,
    edge: Edge,
    name: &PolicyName,
    x: &A::Weight,
) -> Option<Witness<A::Weight>> {
    let px = alg.path_of(x).expect("path algebra");
    let y = alg.extend(edge, name, x).expect("cataloged policy");
    let py = alg.path_of(&y).expect("path algebra");
    let pid = PolicyId {
        edge,
        name: name.clone(),
    };
    match concat(edge, &px) {
        Err(_) => (!py.is_invalid()).then(|| Witness {
            weights: vec![x.clone(), y.clone()],
            policy: Some(pid),
            detail: format!(
                "extension across {edge} of a weight with path {px} must invalidate, got {py}"
            ),
        }),
        Ok(ext) => {
            let ok = y == alg.invalid() || py == ext;
            (!ok).then(|| Witness {
                weights: vec![x.clone(), y.clone()],
                policy: Some(pid),
                detail: format!("extension across {edge} stored {py}, expected {ext}"),
            })
        }
    }
}

/// All simple paths over `n` routers: the trivial path and every injective
/// node sequence of two or more routers.
pub fn enumerate_simple_paths(n: usize) -> Vec<SimplePath> {
    let mut out = vec![SimplePath::trivial()];
    let mut seq: Vec<NodeId> = Vec::new();
    let mut used = vec![false; n];
    fn rec(
        n: usize,
        seq: &mut Vec<NodeId>,
        used: &mut Vec<bool>,
        out: &mut Vec<SimplePath>,
    ) {
        if seq.len() >= 2 {
            out.push(SimplePath::from_node_seq(seq).expect("injective sequence"));
        }
        if seq.len() == n {
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                seq.push(NodeId(v as u32));
                rec(n, seq, used, out);
                seq.pop();
                used[v] = false;
            }
        }
    }
    rec(n, &mut seq, &mut used, &mut out);
    out
}

/// Shortest paths with explicit route tracking. A weight is either invalid
/// or a pair of a length and the simple path it was generated along; choice
/// compares lengths and breaks ties lexicographically on origin-first node
/// sequences (a strict prefix precedes its extensions). Policies add an edge
/// length after the usual loop and alignment elimination.
#[derive(Debug, Clone)]
pub struct SpPathVector {
    n: usize,
    cap: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum PvWeight {
    Inf,
    Route { dist: u64, path: SimplePath },
}

pub fn make_shortest_paths_pv_algebra(n: usize, cap: u32) -> SpPathVector {
    assert!(n >= 1);
    SpPathVector { n, cap }
}

impl SpPathVector {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    fn resolve(&self, policy: &PolicyName) -> Option<Option<u32>> {
        // Some(None) is the constantly-invalid policy.
        let arg = policy.as_str().strip_prefix("add:")?;
        if arg == "inf" {
            return Some(None);
        }
        let l: u32 = arg.parse().ok()?;
        (l <= self.cap).then_some(Some(l))
    }

    fn lex_leq(p: &SimplePath, q: &SimplePath) -> bool {
        p.node_seq().expect("valid path") <= q.node_seq().expect("valid path")
    }
}

impl Algebra for SpPathVector {
    type Weight = PvWeight;

    fn trivial(&self) -> PvWeight {
        PvWeight::Route {
            dist: 0,
            path: SimplePath::trivial(),
        }
    }

    fn invalid(&self) -> PvWeight {
        PvWeight::Inf
    }

    fn choose(&self, x: &PvWeight, y: &PvWeight) -> PvWeight {
        match (x, y) {
            (_, PvWeight::Inf) => x.clone(),
            (PvWeight::Inf, _) => y.clone(),
            (
                PvWeight::Route { dist: m, path: p },
                PvWeight::Route { dist: k, path: q },
            ) => {
                if m < k {
                    x.clone()
                } else if k < m {
                    y.clone()
                } else if Self::lex_leq(p, q) {
                    x.clone()
                } else {
                    y.clone()
                }
            }
        }
    }

    fn extend(&self, edge: Edge, policy: &PolicyName, x: &PvWeight) -> Result<PvWeight, AlgebraError> {
        let resolved = self.resolve(policy).ok_or_else(|| AlgebraError::UnknownPolicy {
            edge,
            name: policy.clone(),
        })?;
        let (dist, path) = match x {
            PvWeight::Inf => return Ok(PvWeight::Inf),
            PvWeight::Route { dist, path } => (dist, path),
        };
        let l = match resolved {
            None => return Ok(PvWeight::Inf),
            Some(l) => l,
        };
        match concat(edge, path) {
            Err(_) => Ok(PvWeight::Inf),
            Ok(ext) => Ok(PvWeight::Route {
                dist: dist.saturating_add(l as u64),
                path: ext,
            }),
        }
    }

    fn has_policy(&self, _edge: Edge, policy: &PolicyName) -> bool {
        self.resolve(policy).is_some()
    }

    fn invalid_policy(&self, _edge: Edge) -> PolicyName {
        PolicyName::new("add:inf")
    }

    /// Bounded carrier for exhaustive checks: lengths up to the cap, paths
    /// over the instance's routers.
    fn enumerate(&self) -> Option<Vec<PvWeight>> {
        let mut out = vec![PvWeight::Inf];
        for path in enumerate_simple_paths(self.n) {
            for dist in 0..=self.cap as u64 {
                out.push(PvWeight::Route {
                    dist,
                    path: path.clone(),
                });
            }
        }
        Some(out)
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
        let mut names: Vec<PolicyName> = (0..=self.cap)
            .map(|l| PolicyName(format!("add:{l}")))
            .collect();
        names.push(PolicyName::new("add:inf"));
        Some(names)
    }

    fn sample_weight(&self, rng: &mut ChaCha8Rng) -> PvWeight {
        if rng.gen_bool(0.1) {
            return PvWeight::Inf;
        }
        let paths = enumerate_simple_paths(self.n);
        PvWeight::Route {
            dist: rng.gen_range(0..=self.cap as u64),
            path: paths[rng.gen_range(0..paths.len())].clone(),
        }
    }

    fn sample_policy(&self, edge: Edge, rng: &mut ChaCha8Rng) -> PolicyName {
        let names = self.enumerate_policies(edge).unwrap();
        names[rng.gen_range(0..names.len())].clone()
    }

    fn render(&self, w: &PvWeight) -> String {
        match w {
            PvWeight::Inf => "inf".to_string(),
            PvWeight::Route { dist, path } => format!("{dist}:{path}"),
        }
    }

    fn parse_weight(&self, s: &str) -> Result<PvWeight, AlgebraError> {
        if s == "inf" {
            return Ok(PvWeight::Inf);
        }
        let bad = |reason: String| AlgebraError::BadWeight {
            text: s.to_string(),
            reason,
        };
        let (dist, path) = s
            .split_once(':')
            .ok_or_else(|| bad("expected `inf` or `<dist>:<path>`".into()))?;
        let dist: u64 = dist.parse().map_err(|_| bad("bad length".into()))?;
        let path = parse_path(path).map_err(bad)?;
        if path.is_invalid() {
            return Err(bad("a valid weight cannot store the invalid path".into()));
        }
        Ok(PvWeight::Route { dist, path })
    }

    fn path_of(&self, w: &PvWeight) -> Option<SimplePath> {
        Some(match w {
            PvWeight::Inf => SimplePath::Invalid,
            PvWeight::Route { path, .. } => path.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(alg: &SpPathVector, s: &str) -> PvWeight {
        alg.parse_weight(s).unwrap()
    }

    #[test]
    fn extension_examples() {
        let alg = make_shortest_paths_pv_algebra(3, 4);
        let e01 = Edge::new(0, 1);
        let add1 = PolicyName::new("add:1");
        assert_eq!(
            alg.extend(e01, &add1, &alg.trivial()).unwrap(),
            pv(&alg, "1:0<1")
        );
        assert_eq!(
            alg.extend(e01, &add1, &pv(&alg, "2:1<0")).unwrap(),
            PvWeight::Inf
        );
        assert_eq!(
            alg.extend(e01, &PolicyName::new("add:inf"), &alg.trivial())
                .unwrap(),
            PvWeight::Inf
        );
    }

    #[test]
    fn choice_compares_length_then_lexicographic() {
        let alg = make_shortest_paths_pv_algebra(3, 4);
        let shorter = pv(&alg, "1:0<1");
        let longer = pv(&alg, "2:0<2<1");
        assert_eq!(alg.choose(&shorter, &longer), shorter);
        assert_eq!(alg.choose(&longer, &PvWeight::Inf), longer);

        // Equal lengths fall back to the origin-first lexicographic order,
        // under which 0<1<2 precedes 0<2.
        let via_one = pv(&alg, "2:0<1<2");
        let direct = pv(&alg, "2:0<2");
        assert_eq!(alg.choose(&via_one, &direct), via_one);
        assert_eq!(alg.choose(&direct, &via_one), via_one);
    }

    #[test]
    fn path_axioms_hold_exhaustively() {
        let alg = make_shortest_paths_pv_algebra(3, 4);
        let report = check_path_axioms(&alg, 3, CheckMode::Exhaustive).unwrap();
        assert!(report.all_pass(), "{}", report.render());
    }

    #[test]
    fn no_path_function_is_an_error() {
        let alg = crate::algebra::Table1Algebra::shortest(4);
        let err = check_path_axioms(&alg, 2, CheckMode::Exhaustive).unwrap_err();
        assert_eq!(err, AlgebraError::NoPathFunction);
    }

    /// A wrapper that corrupts path extraction: the invalid weight claims to
    /// store the empty path.
    #[derive(Debug, Clone)]
    struct BrokenPath(SpPathVector);

    impl Algebra for BrokenPath {
        type Weight = PvWeight;

        fn trivial(&self) -> PvWeight {
            self.0.trivial()
        }
        fn invalid(&self) -> PvWeight {
            self.0.invalid()
        }
        fn choose(&self, x: &PvWeight, y: &PvWeight) -> PvWeight {
            self.0.choose(x, y)
        }
        fn extend(
            &self,
            edge: Edge,
            policy: &PolicyName,
            x: &PvWeight,
        ) -> Result<PvWeight, AlgebraError> {
            self.0.extend(edge, policy, x)
        }
        fn has_policy(&self, edge: Edge, policy: &PolicyName) -> bool {
            self.0.has_policy(edge, policy)
        }
        fn invalid_policy(&self, edge: Edge) -> PolicyName {
            self.0.invalid_policy(edge)
        }
        fn enumerate(&self) -> Option<Vec<PvWeight>> {
            self.0.enumerate()
        }
        fn edges(&self) -> Vec<Edge> {
            self.0.edges()
        }
        fn enumerate_policies(&self, edge: Edge) -> Option<Vec<PolicyName>> {
            self.0.enumerate_policies(edge)
        }
        fn sample_weight(&self, rng: &mut ChaCha8Rng) -> PvWeight {
            self.0.sample_weight(rng)
        }
        fn sample_policy(&self, edge: Edge, rng: &mut ChaCha8Rng) -> PolicyName {
            self.0.sample_policy(edge, rng)
        }
        fn render(&self, w: &PvWeight) -> String {
            self.0.render(w)
        }
        fn parse_weight(&self, s: &str) -> Result<PvWeight, AlgebraError> {
            self.0.parse_weight(s)
        }
        fn path_of(&self, w: &PvWeight) -> Option<SimplePath> {
            match w {
                PvWeight::Inf => Some(SimplePath::trivial()),
                _ => self.0.path_of(w),
            }
        }
    }

    #[test]
    fn corrupted_extraction_fails_p1_with_the_invalid_witness() {
        let alg = BrokenPath(make_shortest_paths_pv_algebra(2, 2));
        let report = check_path_axioms(&alg, 2, CheckMode::Exhaustive).unwrap();
        match report.status("P1 invalid-path").unwrap() {
            CheckStatus::Fails(w) => assert_eq!(w.weights[0], PvWeight::Inf),
            other => panic!("expected P1 failure, got {other:?}"),
        }
    }

    #[test]
    fn simple_path_enumeration_counts() {
        // n = 3: trivial, 6 two-node and 6 three-node sequences.
        assert_eq!(enumerate_simple_paths(3).len(), 13);
        for p in enumerate_simple_paths(4) {
            assert!(p.validate().is_ok());
        }
    }
}
