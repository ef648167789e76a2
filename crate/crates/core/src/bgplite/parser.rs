//! Text syntax for policies and conditions.
//!
//! Policies: `reject`, `decr <n>`, `addc <c>`, `delc <c>`, `inflate <n>`,
//! `p ; q`, `if <cond> then <policy>`, with parentheses for grouping; `;`
//! binds loosest and associates to the right, and an `if` body is a single
//! unit unless parenthesized. Conditions: `and(c,c)`, `or(c,c)`, `not(c)`,
//! `inpath <i>`, `incomm <c>`, `haspref <v>`.
//!
//! `render_policy` emits the canonical form of this same grammar, used as
//! the policy's catalog name, and parses back to the identical tree.

use std::fmt;

use thiserror::Error;

use super::{Condition, Policy};
use crate::topology::NodeId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at offset {pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub pos: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Word(String),
    Num(u32),
    Semi,
    LParen,
    RParen,
    Comma,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Word(w) => write!(f, "`{w}`"),
            Tok::Num(n) => write!(f, "`{n}`"),
            Tok::Semi => write!(f, "`;`"),
            Tok::LParen => write!(f, "`(`"),
            Tok::RParen => write!(f, "`)`"),
            Tok::Comma => write!(f, "`,`"),
        }
    }
}

struct Lexer {
    toks: Vec<(usize, Tok)>,
    end: usize,
    cursor: usize,
}

impl Lexer {
    fn new(input: &str) -> Result<Self, ParseError> {
        let bytes = input.as_bytes();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' => i += 1,
                ';' => {
                    toks.push((i, Tok::Semi));
                    i += 1;
                }
                '(' => {
                    toks.push((i, Tok::LParen));
                    i += 1;
                }
                ')' => {
                    toks.push((i, Tok::RParen));
                    i += 1;
                }
                ',' => {
                    toks.push((i, Tok::Comma));
                    i += 1;
                }
                '0'..='9' => {
                    let start = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let text = &input[start..i];
                    let n = text.parse::<u32>().map_err(|_| ParseError {
                        pos: start,
                        expected: "a number that fits in 32 bits".into(),
                        found: format!("`{text}`"),
                    })?;
                    toks.push((start, Tok::Num(n)));
                }
                'a'..='z' | 'A'..='Z' => {
                    let start = i;
                    while i < bytes.len() && (bytes[i] as char).is_ascii_alphanumeric() {
                        i += 1;
                    }
                    toks.push((start, Tok::Word(input[start..i].to_string())));
                }
                other => {
                    return Err(ParseError {
                        pos: i,
                        expected: "a policy or condition token".into(),
                        found: format!("`{other}`"),
                    })
                }
            }
        }
        Ok(Lexer {
            toks,
            end: input.len(),
            cursor: 0,
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.cursor).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks
            .get(self.cursor)
            .map(|(p, _)| *p)
            .unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.cursor).map(|(_, t)| t.clone());
        if t.is_some() {
            self.cursor += 1;
        }
        t
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError {
            pos: self.pos(),
            expected: expected.into(),
            found: self
                .peek()
                .map(|t| t.to_string())
                .unwrap_or_else(|| "end of input".into()),
        }
    }

    fn expect(&mut self, want: Tok, expected: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&want) {
            self.cursor += 1;
            Ok(())
        } else {
            Err(self.err(expected))
        }
    }

    fn number(&mut self, expected: &str) -> Result<u32, ParseError> {
        match self.peek() {
            Some(Tok::Num(n)) => {
                let n = *n;
                self.cursor += 1;
                Ok(n)
            }
            _ => Err(self.err(expected)),
        }
    }
}

pub fn parse_policy(input: &str) -> Result<Policy, ParseError> {
    let mut lx = Lexer::new(input)?;
    let pol = policy_seq(&mut lx)?;
    if lx.peek().is_some() {
        return Err(lx.err("end of policy"));
    }
    Ok(pol)
}

pub fn parse_condition(input: &str) -> Result<Condition, ParseError> {
    let mut lx = Lexer::new(input)?;
    let cond = condition(&mut lx)?;
    if lx.peek().is_some() {
        return Err(lx.err("end of condition"));
    }
    Ok(cond)
}

fn policy_seq(lx: &mut Lexer) -> Result<Policy, ParseError> {
    let first = policy_atom(lx)?;
    if lx.peek() == Some(&Tok::Semi) {
        lx.next();
        let rest = policy_seq(lx)?;
        Ok(Policy::Seq(Box::new(first), Box::new(rest)))
    } else {
        Ok(first)
    }
}

fn policy_atom(lx: &mut Lexer) -> Result<Policy, ParseError> {
    match lx.next() {
        Some(Tok::LParen) => {
            let inner = policy_seq(lx)?;
            lx.expect(Tok::RParen, "`)` closing the policy group")?;
            Ok(inner)
        }
        Some(Tok::Word(w)) => match w.as_str() {
            "reject" => Ok(Policy::Reject),
            "decr" => Ok(Policy::DecrPrefBy(lx.number("a decrement after `decr`")?)),
            "addc" => Ok(Policy::AddComm(lx.number("a community after `addc`")?)),
            "delc" => Ok(Policy::DelComm(lx.number("a community after `delc`")?)),
            "inflate" => Ok(Policy::Inflate(lx.number("a count after `inflate`")?)),
            "if" => {
                let cond = condition(lx)?;
                match lx.next() {
                    Some(Tok::Word(t)) if t == "then" => {}
                    _ => {
                        lx.cursor = lx.cursor.saturating_sub(1);
                        return Err(lx.err("`then`"));
                    }
                }
                let body = policy_atom(lx)?;
                Ok(Policy::IfThen(cond, Box::new(body)))
            }
            other => Err(ParseError {
                pos: lx.toks[lx.cursor - 1].0,
                expected: "`reject`, `decr`, `addc`, `delc`, `inflate`, `if` or `(`".into(),
                found: format!("`{other}`"),
            }),
        },
        _ => {
            lx.cursor = lx.cursor.saturating_sub(1);
            Err(lx.err("a policy"))
        }
    }
}

fn condition(lx: &mut Lexer) -> Result<Condition, ParseError> {
    match lx.next() {
        Some(Tok::Word(w)) => match w.as_str() {
            "and" | "or" => {
                lx.expect(Tok::LParen, &format!("`(` after `{w}`"))?;
                let left = condition(lx)?;
                lx.expect(Tok::Comma, "`,` between the two conditions")?;
                let right = condition(lx)?;
                lx.expect(Tok::RParen, "`)` closing the condition")?;
                Ok(if w == "and" {
                    Condition::And(Box::new(left), Box::new(right))
                } else {
                    Condition::Or(Box::new(left), Box::new(right))
                })
            }
            "not" => {
                lx.expect(Tok::LParen, "`(` after `not`")?;
                let inner = condition(lx)?;
                lx.expect(Tok::RParen, "`)` closing `not`")?;
                Ok(Condition::Not(Box::new(inner)))
            }
            "inpath" => Ok(Condition::InPath(NodeId(
                lx.number("a router after `inpath`")?,
            ))),
            "incomm" => Ok(Condition::InComm(lx.number("a community after `incomm`")?)),
            "haspref" => Ok(Condition::HasPref(
                lx.number("a preference after `haspref`")?,
            )),
            other => Err(ParseError {
                pos: lx.toks[lx.cursor - 1].0,
                expected: "`and`, `or`, `not`, `inpath`, `incomm` or `haspref`".into(),
                found: format!("`{other}`"),
            }),
        },
        _ => {
            lx.cursor = lx.cursor.saturating_sub(1);
            Err(lx.err("a condition"))
        }
    }
}

/// Canonical text of a policy tree; parses back to the identical tree.
pub fn render_policy(pol: &Policy) -> String {
    match pol {
        Policy::Seq(p, q) => format!("{} ; {}", render_atom(p), render_policy(q)),
        other => render_atom(other),
    }
}

fn render_atom(pol: &Policy) -> String {
    match pol {
        Policy::Reject => "reject".to_string(),
        Policy::DecrPrefBy(v) => format!("decr {v}"),
        Policy::AddComm(c) => format!("addc {c}"),
        Policy::DelComm(c) => format!("delc {c}"),
        Policy::Inflate(n) => format!("inflate {n}"),
        Policy::IfThen(c, p) => format!("if {} then {}", render_condition(c), render_atom(p)),
        Policy::Seq(_, _) => format!("({})", render_policy(pol)),
    }
}

pub fn render_condition(cond: &Condition) -> String {
    match cond {
        Condition::And(p, q) => format!("and({},{})", render_condition(p), render_condition(q)),
        Condition::Or(p, q) => format!("or({},{})", render_condition(p), render_condition(q)),
        Condition::Not(p) => format!("not({})", render_condition(p)),
        Condition::InPath(i) => format!("inpath {i}"),
        Condition::InComm(c) => format!("incomm {c}"),
        Condition::HasPref(v) => format!("haspref {v}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Algebra;
    use rand::SeedableRng;

    #[test]
    fn grammar_examples() {
        let pol = parse_policy("if incomm 17 then (decr 5 ; addc 17) ; inflate 2").unwrap();
        assert_eq!(
            pol,
            Policy::Seq(
                Box::new(Policy::IfThen(
                    Condition::InComm(17),
                    Box::new(Policy::Seq(
                        Box::new(Policy::DecrPrefBy(5)),
                        Box::new(Policy::AddComm(17)),
                    )),
                )),
                Box::new(Policy::Inflate(2)),
            )
        );
        assert_eq!(
            parse_condition("and(not(inpath 3),or(incomm 1,haspref 100))").unwrap(),
            Condition::And(
                Box::new(Condition::Not(Box::new(Condition::InPath(NodeId(3))))),
                Box::new(Condition::Or(
                    Box::new(Condition::InComm(1)),
                    Box::new(Condition::HasPref(100)),
                )),
            )
        );
    }

    #[test]
    fn errors_carry_position_and_expectation() {
        let err = parse_policy("decr").unwrap_err();
        assert_eq!(err.pos, 4);
        assert!(err.expected.contains("decrement"));

        let err = parse_policy("decr 5 ; bogus 3").unwrap_err();
        assert_eq!(err.pos, 9);
        assert_eq!(err.found, "`bogus`");

        let err = parse_condition("and(incomm 1 incomm 2)").unwrap_err();
        assert_eq!(err.pos, 13);
        assert!(err.expected.contains("`,`"));
    }

    #[test]
    fn canonical_form_round_trips() {
        let alg = crate::bgplite::BgpLiteAlgebra::new(4);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let name = alg.sample_policy(crate::topology::Edge::new(0, 1), &mut rng);
            let ast = parse_policy(name.as_str()).unwrap();
            assert_eq!(render_policy(&ast), name.as_str());
        }
    }

    #[test]
    fn sequence_is_right_associative_and_groups_round_trip() {
        let flat = parse_policy("decr 1 ; decr 2 ; decr 3").unwrap();
        assert_eq!(
            flat,
            Policy::Seq(
                Box::new(Policy::DecrPrefBy(1)),
                Box::new(Policy::Seq(
                    Box::new(Policy::DecrPrefBy(2)),
                    Box::new(Policy::DecrPrefBy(3)),
                )),
            )
        );
        let grouped = parse_policy("(decr 1 ; decr 2) ; decr 3").unwrap();
        assert_ne!(flat, grouped);
        assert_eq!(parse_policy(&render_policy(&grouped)).unwrap(), grouped);
    }
}
