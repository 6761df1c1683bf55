use std::collections::{BTreeMap, BTreeSet};

use super::{analyze_branches, is_critical, BranchAnalysis, ClassifyError};
use crate::signature::{Eps, Inequality, OrderType, Signature};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductiveWitness {
    /// variables in name order; `epsilon` is indexed alongside
    pub vars: Vec<String>,
    pub epsilon: OrderType,
    /// pairs `(a, b)` meaning `a <Ω b`, transitively closed
    pub omega: BTreeSet<(String, String)>,
}

impl InductiveWitness {
    pub fn eps_of(&self, v: &str) -> Eps {
        let k = self.vars.iter().position(|x| x == v).expect("variable of the witness");
        self.epsilon.0[k]
    }

    pub fn eps_map(&self) -> BTreeMap<String, Eps> {
        self.vars.iter().cloned().zip(self.epsilon.0.iter().copied()).collect()
    }

    /// A linear extension of Ω, ties broken by name.
    pub fn linear_order(&self) -> Vec<String> {
        let mut left: Vec<String> = self.vars.clone();
        let mut out = Vec::new();
        while !left.is_empty() {
            let k = left
                .iter()
                .position(|v| !left.iter().any(|u| self.omega.contains(&(u.clone(), v.clone()))))
                .expect("omega is acyclic");
            out.push(left.remove(k));
        }
        out
    }

    pub fn omega_text(&self) -> String {
        let e: Vec<String> = self.omega.iter().map(|(a, b)| format!("{}<{}", a, b)).collect();
        format!("{{{}}}", e.join(", "))
    }
}

const VAR_CAP: usize = 12;

fn epsilons(n: usize) -> impl Iterator<Item = Vec<Eps>> {
    (0..1u32 << n).map(move |mask| {
        (0..n).map(|k| if mask >> (n - 1 - k) & 1 == 1 { Eps::Partial } else { Eps::One }).collect()
    })
}

fn closure(edges: &BTreeSet<(usize, usize)>, n: usize) -> Option<Vec<Vec<bool>>> {
    let mut r = vec![vec![false; n]; n];
    for &(a, b) in edges {
        r[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if r[i][k] {
                for j in 0..n {
                    if r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
    }
    if (0..n).any(|i| r[i][i]) {
        None
    } else {
        Some(r)
    }
}

/// Checks one order-type against the branch analyses and returns the
/// minimal Ω when all conditions hold.
fn check_eps(
    vars: &[String],
    eps: &[Eps],
    branches: &[BranchAnalysis],
    excellent: bool,
) -> Option<BTreeSet<(String, String)>> {
    let idx = |v: &str| vars.iter().position(|x| x == v).unwrap();
    let mut edges = BTreeSet::new();
    for b in branches {
        let i = idx(&b.var);
        if !is_critical(b.leaf_sign, eps[i]) {
            continue;
        }
        if !b.is_good || (excellent && !b.is_excellent) {
            return None;
        }
        for o in &b.srr_obligations {
            for (q, s) in &o.sibling_leaves {
                let k = idx(q);
                if is_critical(*s, eps[k]) {
                    return None;
                }
                edges.insert((k, i));
            }
        }
    }
    let r = closure(&edges, vars.len())?;
    let mut omega = BTreeSet::new();
    for (a, row) in r.iter().enumerate() {
        for (b, &x) in row.iter().enumerate() {
            if x {
                omega.insert((vars[a].clone(), vars[b].clone()));
            }
        }
    }
    Some(omega)
}

fn search(ineq: &Inequality, sig: &Signature, excellent: bool) -> Result<Option<InductiveWitness>, ClassifyError> {
    let vars: Vec<String> = ineq.vars().into_iter().collect();
    if vars.len() > VAR_CAP {
        return Err(ClassifyError::TooManyVariables(vars.len()));
    }
    let branches = analyze_branches(ineq, sig)?;
    for eps in epsilons(vars.len()) {
        if let Some(omega) = check_eps(&vars, &eps, &branches, excellent) {
            if excellent && !omega.is_empty() {
                continue;
            }
            return Ok(Some(InductiveWitness { vars, epsilon: OrderType(eps), omega }));
        }
    }
    Ok(None)
}

/// Smallest ε (1 before d, variables in name order) for which every
/// ε-critical branch is excellent.
pub fn is_sahlqvist(ineq: &Inequality, sig: &Signature) -> Result<Option<OrderType>, ClassifyError> {
    Ok(search(ineq, sig, true)?.map(|w| w.epsilon))
}

/// Smallest ε with a consistent dependency order; Ω is the transitive
/// closure of the forced edges.
pub fn is_inductive(ineq: &Inequality, sig: &Signature) -> Result<Option<InductiveWitness>, ClassifyError> {
    search(ineq, sig, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{parse_inequality, parse_signature, Layer};

    fn ineq(s: &str, sig: &Signature) -> Inequality {
        parse_inequality(s, sig, Layer::DleStar).unwrap()
    }

    #[test]
    fn church_rosser_is_sahlqvist() {
        let s = Signature::modal();
        let i = ineq("dia(box(p)) <= box(dia(p))", &s);
        assert_eq!(is_sahlqvist(&i, &s).unwrap(), Some(OrderType(vec![Eps::One])));
        let w = is_inductive(&i, &s).unwrap().unwrap();
        assert!(w.omega.is_empty());
    }

    #[test]
    fn dotted_geach_is_sahlqvist() {
        let s = Signature::new();
        let i = ineq(".dia(.box(p)) <= .box(.dia(p))", &s);
        assert!(is_sahlqvist(&i, &s).unwrap().is_some());
    }

    #[test]
    fn mckinsey_shape_rejected() {
        let s = Signature::modal();
        let i = ineq("dia(box(dia(box(p)))) <= box(dia(box(dia(p))))", &s);
        assert_eq!(is_sahlqvist(&i, &s).unwrap(), None);
        assert_eq!(is_inductive(&i, &s).unwrap(), None);
    }

    #[test]
    fn trivial_ones() {
        let s = Signature::new();
        let w = is_inductive(&ineq("p <= p", &s), &s).unwrap().unwrap();
        assert_eq!(w.epsilon, OrderType(vec![Eps::One]));
        assert!(w.omega.is_empty());
        assert!(is_inductive(&ineq("top <= bot", &s), &s).unwrap().is_some());
    }

    #[test]
    fn binary_srr_forces_an_edge() {
        let s = parse_signature("g h 2 (1,1)").unwrap();
        let i = ineq("h(p, q) <= q", &s);
        let w = is_inductive(&i, &s).unwrap().unwrap();
        assert_eq!(w.epsilon, OrderType(vec![Eps::One, Eps::Partial]));
        assert_eq!(w.omega_text(), "{q<p}");
        assert_eq!(w.linear_order(), vec!["q".to_string(), "p".to_string()]);
        let e = is_sahlqvist(&i, &s).unwrap().unwrap();
        assert_eq!(e, OrderType(vec![Eps::Partial, Eps::Partial]));
    }

    #[test]
    fn too_many_variables() {
        let s = Signature::new();
        let lhs: Vec<String> = (0..13).map(|k| format!("p{}", k)).collect();
        let i = ineq(&format!("{} <= top", lhs.join(" & ")), &s);
        assert_eq!(is_inductive(&i, &s), Err(ClassifyError::TooManyVariables(13)));
    }
}
