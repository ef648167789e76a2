//! The four library algebras: shortest paths, longest paths, widest paths
//! and most-reliable paths, in capped finite form.
//!
//! Shortest and longest paths use the naturals up to `cap` plus a distinct
//! `inf` value. Shortest-path extensions that would exceed the cap overflow
//! to the invalid weight, the way a hop-count limit turns "too far" into
//! "unreachable"; longest-path extensions clamp at the cap. Most-reliable
//! paths live on the exact rational grid `{0, 1/cap, ..., 1}`, multiplying
//! and rounding down to the grid, so equality stays decidable.
//!
//! Every policy fixes the invalid weight, including the rows where the
//! published table leaves that case implicit (for longest paths a genuine
//! constantly-invalid `reject` policy is supplied, since no additive policy
//! is constantly invalid there).

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Algebra, AlgebraError, PolicyName};
use crate::topology::{Edge, SimplePath};

/// Natural number saturating at an instance cap, plus infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NatInf {
    Fin(u32),
    Inf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Table1Kind {
    Shortest,
    Longest,
    Widest,
    MostReliable,
}

#[derive(Debug, Clone)]
pub struct Table1Algebra {
    kind: Table1Kind,
    cap: u32,
    /// Least additive policy weight (shortest/longest only); the catalog is
    /// `{lo..=cap}` plus the constantly-invalid policy.
    lo: u32,
}

pub fn make_table1_algebra(kind: Table1Kind, cap: u32) -> Table1Algebra {
    Table1Algebra::new(kind, cap, 0)
}

enum Resolved {
    Add(u32),
    AddInf,
    Min(u32),
    /// Multiplier numerator over the grid denominator `cap`.
    Mul(u32),
    Reject,
}

impl Table1Algebra {
    pub fn new(kind: Table1Kind, cap: u32, lo: u32) -> Self {
        assert!(cap >= 1, "cap must be at least 1");
        assert!(lo <= cap, "least policy weight must not exceed the cap");
        Table1Algebra { kind, cap, lo }
    }

    pub fn shortest(cap: u32) -> Self {
        Self::new(Table1Kind::Shortest, cap, 0)
    }

    /// Shortest paths whose policy weights start at `lo` instead of 0.
    /// With `lo >= 1` every policy strictly worsens valid weights.
    pub fn shortest_with_min_weight(cap: u32, lo: u32) -> Self {
        Self::new(Table1Kind::Shortest, cap, lo)
    }

    pub fn longest(cap: u32) -> Self {
        Self::new(Table1Kind::Longest, cap, 0)
    }

    pub fn widest(cap: u32) -> Self {
        Self::new(Table1Kind::Widest, cap, 0)
    }

    pub fn most_reliable(cap: u32) -> Self {
        Self::new(Table1Kind::MostReliable, cap, 0)
    }

    pub fn kind(&self) -> Table1Kind {
        self.kind
    }

    pub fn cap(&self) -> u32 {
        self.cap
    }

    fn grid_ratio(&self, numer: u32) -> Ratio<u64> {
        Ratio::new(numer as u64, self.cap as u64)
    }

    fn resolve(&self, name: &PolicyName) -> Option<Resolved> {
        let s = name.as_str();
        match self.kind {
            Table1Kind::Shortest => {
                let arg = s.strip_prefix("add:")?;
                if arg == "inf" {
                    return Some(Resolved::AddInf);
                }
                let w: u32 = arg.parse().ok()?;
                (self.lo..=self.cap).contains(&w).then_some(Resolved::Add(w))
            }
            Table1Kind::Longest => {
                if s == "reject" {
                    return Some(Resolved::Reject);
                }
                let w: u32 = s.strip_prefix("add:")?.parse().ok()?;
                (self.lo..=self.cap).contains(&w).then_some(Resolved::Add(w))
            }
            Table1Kind::Widest => {
                let w: u32 = s.strip_prefix("min:")?.parse().ok()?;
                (w <= self.cap).then_some(Resolved::Min(w))
            }
            Table1Kind::MostReliable => {
                let r: Ratio<u64> = s.strip_prefix("mul:")?.parse().ok()?;
                let scaled = r * Ratio::from_integer(self.cap as u64);
                if !scaled.is_integer() {
                    return None;
                }
                let k = scaled.to_integer();
                (k <= self.cap as u64).then_some(Resolved::Mul(k as u32))
            }
        }
    }
}

impl Algebra for Table1Algebra {
    type Weight = NatInf;

    fn trivial(&self) -> NatInf {
        match self.kind {
            Table1Kind::Shortest => NatInf::Fin(0),
            Table1Kind::Longest => NatInf::Inf,
            Table1Kind::Widest | Table1Kind::MostReliable => NatInf::Fin(self.cap),
        }
    }

    fn invalid(&self) -> NatInf {
        match self.kind {
            Table1Kind::Shortest => NatInf::Inf,
            _ => NatInf::Fin(0),
        }
    }

    fn choose(&self, x: &NatInf, y: &NatInf) -> NatInf {
        match self.kind {
            // min, with inf above every natural
            Table1Kind::Shortest => match (x, y) {
                (NatInf::Inf, _) => *y,
                (_, NatInf::Inf) => *x,
                (NatInf::Fin(a), NatInf::Fin(b)) => {
                    if a <= b {
                        *x
                    } else {
                        *y
                    }
                }
            },
            // max, with inf above every natural
            _ => match (x, y) {
                (NatInf::Inf, _) => *x,
                (_, NatInf::Inf) => *y,
                (NatInf::Fin(a), NatInf::Fin(b)) => {
                    if a >= b {
                        *x
                    } else {
                        *y
                    }
                }
            },
        }
    }

    fn extend(&self, edge: Edge, policy: &PolicyName, x: &NatInf) -> Result<NatInf, AlgebraError> {
        let resolved = self.resolve(policy).ok_or_else(|| AlgebraError::UnknownPolicy {
            edge,
            name: policy.clone(),
        })?;
        let inf = self.invalid();
        if *x == inf {
            return Ok(inf);
        }
        Ok(match (resolved, *x) {
            (Resolved::AddInf | Resolved::Reject, _) => inf,
            (Resolved::Add(w), NatInf::Fin(v)) => match self.kind {
                Table1Kind::Shortest => {
                    if w + v > self.cap {
                        NatInf::Inf
                    } else {
                        NatInf::Fin(w + v)
                    }
                }
                _ => NatInf::Fin((w + v).min(self.cap)),
            },
            // adding to an already infinite length keeps it infinite
            (Resolved::Add(_), NatInf::Inf) => NatInf::Inf,
            (Resolved::Min(w), NatInf::Fin(v)) => NatInf::Fin(w.min(v)),
            (Resolved::Min(_), NatInf::Inf) => NatInf::Inf,
            (Resolved::Mul(k), NatInf::Fin(v)) => {
                NatInf::Fin((k as u64 * v as u64 / self.cap as u64) as u32)
            }
            (Resolved::Mul(_), NatInf::Inf) => NatInf::Inf,
        })
    }

    fn has_policy(&self, _edge: Edge, policy: &PolicyName) -> bool {
        self.resolve(policy).is_some()
    }

    fn invalid_policy(&self, _edge: Edge) -> PolicyName {
        PolicyName::new(match self.kind {
            Table1Kind::Shortest => "add:inf".to_string(),
            Table1Kind::Longest => "reject".to_string(),
            Table1Kind::Widest => "min:0".to_string(),
            Table1Kind::MostReliable => "mul:0".to_string(),
        })
    }

    fn enumerate(&self) -> Option<Vec<NatInf>> {
        let mut all: Vec<NatInf> = (0..=self.cap).map(NatInf::Fin).collect();
        if matches!(self.kind, Table1Kind::Shortest | Table1Kind::Longest) {
            all.push(NatInf::Inf);
        }
        Some(all)
    }

    fn edges(&self) -> Vec<Edge> {
        // Every edge carries the same catalog; one representative suffices.
        vec![Edge::new(0, 0)]
    }

    fn enumerate_policies(&self, _edge: Edge) -> Option<Vec<PolicyName>> {
        let mut names = Vec::new();
        match self.kind {
            Table1Kind::Shortest => {
                names.extend((self.lo..=self.cap).map(|w| PolicyName(format!("add:{w}"))));
                names.push(PolicyName::new("add:inf"));
            }
            Table1Kind::Longest => {
                names.extend((self.lo..=self.cap).map(|w| PolicyName(format!("add:{w}"))));
                names.push(PolicyName::new("reject"));
            }
            Table1Kind::Widest => {
                names.extend((0..=self.cap).map(|w| PolicyName(format!("min:{w}"))));
            }
            Table1Kind::MostReliable => {
                names.extend((0..=self.cap).map(|k| PolicyName(format!("mul:{}", self.grid_ratio(k)))));
            }
        }
        Some(names)
    }

    fn sample_weight(&self, rng: &mut ChaCha8Rng) -> NatInf {
        let all = self.enumerate().unwrap();
        all[rng.gen_range(0..all.len())]
    }

    fn sample_policy(&self, edge: Edge, rng: &mut ChaCha8Rng) -> PolicyName {
        let names = self.enumerate_policies(edge).unwrap();
        names[rng.gen_range(0..names.len())].clone()
    }

    fn render(&self, w: &NatInf) -> String {
        match (self.kind, w) {
            (Table1Kind::MostReliable, NatInf::Fin(k)) => self.grid_ratio(*k).to_string(),
            (_, NatInf::Fin(v)) => v.to_string(),
            (_, NatInf::Inf) => "inf".to_string(),
        }
    }

    fn parse_weight(&self, s: &str) -> Result<NatInf, AlgebraError> {
        let bad = |reason: &str| AlgebraError::BadWeight {
            text: s.to_string(),
            reason: reason.to_string(),
        };
        match self.kind {
            Table1Kind::Shortest | Table1Kind::Longest => {
                if s == "inf" {
                    return Ok(NatInf::Inf);
                }
                let v: u32 = s.parse().map_err(|_| bad("expected a natural or `inf`"))?;
                if v > self.cap {
                    return Err(bad("value exceeds the cap"));
                }
                Ok(NatInf::Fin(v))
            }
            Table1Kind::Widest => {
                let v: u32 = s.parse().map_err(|_| bad("expected a natural"))?;
                if v > self.cap {
                    return Err(bad("value exceeds the cap"));
                }
                Ok(NatInf::Fin(v))
            }
            Table1Kind::MostReliable => {
                let r: Ratio<u64> = s.parse().map_err(|_| bad("expected a rational"))?;
                let scaled = r * Ratio::from_integer(self.cap as u64);
                if !scaled.is_integer() || scaled.to_integer() > self.cap as u64 {
                    return Err(bad("value is not on the reliability grid"));
                }
                Ok(NatInf::Fin(scaled.to_integer() as u32))
            }
        }
    }

    fn path_of(&self, _w: &NatInf) -> Option<SimplePath> {
        None
    }
}

/// Seeded generator helpers shared by tests and experiment drivers.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{check_routing_axioms, CheckMode};

    fn ext(alg: &Table1Algebra, name: &str, x: NatInf) -> NatInf {
        alg.extend(Edge::new(0, 1), &PolicyName::new(name), &x)
            .unwrap()
    }

    #[test]
    fn shortest_row() {
        let alg = Table1Algebra::shortest(16);
        assert_eq!(alg.trivial(), NatInf::Fin(0));
        assert_eq!(alg.invalid(), NatInf::Inf);
        assert_eq!(alg.choose(&NatInf::Fin(3), &NatInf::Fin(5)), NatInf::Fin(3));
        assert_eq!(ext(&alg, "add:3", NatInf::Fin(2)), NatInf::Fin(5));
        assert_eq!(ext(&alg, "add:1", NatInf::Fin(16)), NatInf::Inf);
        assert_eq!(ext(&alg, "add:inf", NatInf::Fin(2)), NatInf::Inf);
    }

    #[test]
    fn widest_row() {
        let alg = Table1Algebra::widest(16);
        assert_eq!(alg.trivial(), NatInf::Fin(16));
        assert_eq!(alg.invalid(), NatInf::Fin(0));
        assert_eq!(alg.choose(&NatInf::Fin(3), &NatInf::Fin(5)), NatInf::Fin(5));
        assert_eq!(ext(&alg, "min:5", NatInf::Fin(9)), NatInf::Fin(5));
        assert_eq!(ext(&alg, "min:9", NatInf::Fin(5)), NatInf::Fin(5));
    }

    #[test]
    fn most_reliable_row() {
        let alg = Table1Algebra::most_reliable(4);
        assert_eq!(alg.render(&alg.trivial()), "1");
        assert_eq!(alg.render(&alg.invalid()), "0");
        let half = alg.parse_weight("1/2").unwrap();
        let quarter = alg.parse_weight("1/4").unwrap();
        assert_eq!(alg.choose(&half, &quarter), half);
        assert_eq!(ext(&alg, "mul:1/2", half), quarter);
        // products fall back to the grid point below
        assert_eq!(ext(&alg, "mul:1/4", quarter), NatInf::Fin(0));
        assert!(alg.parse_weight("2/3").is_err());
    }

    #[test]
    fn longest_row_passes_axioms() {
        let alg = Table1Algebra::longest(16);
        assert_eq!(alg.trivial(), NatInf::Inf);
        assert_eq!(alg.invalid(), NatInf::Fin(0));
        assert_eq!(ext(&alg, "add:3", NatInf::Fin(15)), NatInf::Fin(16));
        assert_eq!(ext(&alg, "add:3", NatInf::Fin(0)), NatInf::Fin(0));
        let report = check_routing_axioms(&alg, CheckMode::Exhaustive).unwrap();
        assert!(report.all_pass(), "{}", report.render());
    }

    #[test]
    fn unknown_policy_is_an_error() {
        let alg = Table1Algebra::shortest(4);
        let err = alg
            .extend(Edge::new(0, 1), &PolicyName::new("add:9"), &NatInf::Fin(0))
            .unwrap_err();
        assert!(matches!(err, AlgebraError::UnknownPolicy { .. }));
    }
}
