use std::collections::BTreeMap;

use super::{is_inductive, ClassifyError, InductiveWitness};
use crate::signature::{Inequality, Role, Signature, Term};

const BUDGET: usize = 100_000;
const PER_TERM: usize = 64;

/// Matches `pat` (in variable `x`) against `t`, binding every occurrence of
/// `x` to the same subterm.
fn matches<'a>(pat: &Term, x: &str, t: &'a Term, bound: &mut Option<&'a Term>) -> bool {
    match pat {
        Term::Var(v) if v == x => match bound {
            Some(b) => *b == t,
            None => {
                *bound = Some(t);
                true
            }
        },
        _ => {
            let (pc, tc) = (pat.children(), t.children());
            let same_head = std::mem::discriminant(pat) == std::mem::discriminant(t)
                && match (pat, t) {
                    (Term::App(f, _), Term::App(g, _)) => f == g,
                    (Term::Var(a), Term::Var(b)) => a == b,
                    _ => true,
                };
            same_head && pc.len() == tc.len() && pc.iter().zip(tc).all(|(p, c)| matches(p, x, c, bound))
        }
    }
}

struct Search<'a> {
    sig: &'a Signature,
    spent: usize,
}

impl Search<'_> {
    fn candidates(&mut self, t: &Term) -> Vec<Term> {
        self.spent += 1;
        let mut out = Vec::new();
        if self.spent < BUDGET {
            for (r, rt) in &self.sig.registered {
                if matches!(rt.body, Term::Var(_)) {
                    continue;
                }
                let mut bound = None;
                if matches(&rt.body, &rt.var, t, &mut bound) {
                    let arg = bound.expect("registered term mentions its variable").clone();
                    for c in self.candidates(&arg) {
                        out.push(Term::Dot(r.dot(), Box::new(c)));
                        if out.len() >= PER_TERM {
                            return out;
                        }
                    }
                }
            }
        }
        let kids: Vec<Vec<Term>> = t.children().into_iter().map(|c| self.candidates(c)).collect();
        let mut idx = vec![0usize; kids.len()];
        loop {
            let mut k = 0;
            let node = t.map_children(|_| {
                let c = kids[k][idx[k]].clone();
                k += 1;
                c
            });
            out.push(node);
            if out.len() >= PER_TERM {
                return out;
            }
            // odometer over the children's candidate lists, last child fastest
            let mut pos = kids.len();
            loop {
                if pos == 0 {
                    return out;
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < kids[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

/// DLE* preimages of `t` under Φ, role matches before the identity.
pub fn anti_substitute_candidates(t: &Term, sig: &Signature) -> Vec<Term> {
    let t = sig.expand_roles(t);
    Search { sig, spent: 0 }.candidates(&t)
}

/// Finds a DLE* inequality whose Φ-image is `ineq` and which is inductive.
pub fn is_meta_inductive(
    ineq: &Inequality,
    sig: &Signature,
) -> Result<Option<(Inequality, InductiveWitness)>, ClassifyError> {
    let ls = anti_substitute_candidates(&ineq.lhs, sig);
    let rs = anti_substitute_candidates(&ineq.rhs, sig);
    let mut tried = 0usize;
    for l in &ls {
        for r in &rs {
            tried += 1;
            if tried > BUDGET {
                return Ok(None);
            }
            let cand = Inequality::new(l.clone(), r.clone());
            if let Some(w) = is_inductive(&cand, sig)? {
                return Ok(Some((cand, w)));
            }
        }
    }
    Ok(None)
}

/// Roles whose dotted connectives occur in a DLE* term.
pub fn dotted_roles(t: &Term) -> Vec<Role> {
    let mut seen = BTreeMap::new();
    t.walk(&mut |n| {
        if let Term::Dot(op, _) = n {
            if let Some(r) = op.role() {
                seen.insert(r, ());
            }
        }
    });
    seen.into_keys().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{parse_inequality, parse_signature, print_inequality, Layer};

    fn sig() -> Signature {
        parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = dia(box(dia(p)))\nterm sigma = box(p)").unwrap()
    }

    #[test]
    fn mckinsey_is_meta_inductive() {
        let s = sig();
        let i = parse_inequality("dia(box(dia(box(p)))) <= box(dia(box(dia(p))))", &s, Layer::Dle).unwrap();
        let (pre, _) = is_meta_inductive(&i, &s).unwrap().unwrap();
        assert_eq!(print_inequality(&pre), ".dia(.box(p)) <= .box(.dia(p))");
        let back = pre.map(|t| s.phi_substitute(t));
        assert_eq!(back, i);
    }

    #[test]
    fn additivity_preimage() {
        let s = sig();
        let i = parse_inequality("pi(p | q) <= pi(p) | pi(q)", &s, Layer::Dle).unwrap();
        let (pre, _) = is_meta_inductive(&i, &s).unwrap().unwrap();
        assert_eq!(print_inequality(&pre), ".dia(p | q) <= .dia(p) | .dia(q)");
    }

    #[test]
    fn no_registered_occurrence() {
        let s = sig();
        let i = parse_inequality("p & q <= p", &s, Layer::Dle).unwrap();
        let (pre, _) = is_meta_inductive(&i, &s).unwrap().unwrap();
        assert_eq!(pre, i);
    }
}
