use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use super::{FiniteDLE, Lattice, OpTable};
use crate::signature::{print_term, DotOp, Eps, Family, Role, Signature, Term};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("`{0}` is not bound by the valuation")]
    Unbound(String),
    #[error("role `{0}` has no registered term")]
    Unregistered(String),
    #[error("the algebra has no table for `{0}`")]
    UnknownOp(String),
    #[error("`{0}` is not a pure quasi-inequality")]
    NotPure(String),
}

/// Values of variables, nominals and conominals as element indices.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Valuation {
    pub vars: BTreeMap<String, usize>,
    pub noms: BTreeMap<String, usize>,
    pub conoms: BTreeMap<String, usize>,
}

impl Valuation {
    pub fn get(&self, t: &Term) -> Option<usize> {
        match t {
            Term::Var(x) => self.vars.get(x).copied(),
            Term::Nom(x) => self.noms.get(x).copied(),
            Term::Conom(x) => self.conoms.get(x).copied(),
            _ => None,
        }
    }

    pub fn set(&mut self, t: &Term, v: usize) {
        match t {
            Term::Var(x) => self.vars.insert(x.clone(), v),
            Term::Nom(x) => self.noms.insert(x.clone(), v),
            Term::Conom(x) => self.conoms.insert(x.clone(), v),
            _ => None,
        };
    }

    /// `p={0,1} #i={1}` with elements printed as point sets.
    pub fn show(&self, lat: &Lattice) -> String {
        let mut parts = Vec::new();
        for (k, v) in &self.vars {
            parts.push(format!("{}={}", k, lat.show(*v)));
        }
        for (k, v) in &self.noms {
            parts.push(format!("#{}={}", k, lat.show(*v)));
        }
        for (k, v) in &self.conoms {
            parts.push(format!("@{}={}", k, lat.show(*v)));
        }
        parts.join(" ")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Unary {
    Role(Role),
    Def(Role),
    Adj(Role),
    Dot(DotOp),
}

#[derive(Clone, Debug)]
pub(crate) enum Node {
    Slot(usize),
    Const(usize),
    Meet(Box<Node>, Box<Node>),
    Join(Box<Node>, Box<Node>),
    Imp(Box<Node>, Box<Node>),
    Coimp(Box<Node>, Box<Node>),
    Unary(Rc<Vec<usize>>, Box<Node>),
    Op(Rc<OpTable>, Vec<Node>),
    Res(Rc<OpTable>, usize, Vec<Node>),
}

/// Evaluation context with memoised tables for the derived unary maps.
pub struct Evaluator<'a> {
    pub m: &'a FiniteDLE,
    pub sig: &'a Signature,
    cache: RefCell<HashMap<Unary, Rc<Vec<usize>>>>,
}

/// `w ↦ ⋁{u : f(u) ≤ w}`
fn upper_adjoint(l: &Lattice, f: &[usize]) -> Vec<usize> {
    (0..l.size()).map(|w| l.big_join((0..l.size()).filter(|&u| l.leq(f[u], w)))).collect()
}

/// `u ↦ ⋀{w : u ≤ g(w)}`
fn lower_adjoint(l: &Lattice, g: &[usize]) -> Vec<usize> {
    (0..l.size()).map(|u| l.big_meet((0..l.size()).filter(|&w| l.leq(u, g[w])))).collect()
}

/// Galois adjoint of an antitone f-like map: `w ↦ ⋀{u : f(u) ≤ w}`.
fn lower_galois(l: &Lattice, f: &[usize]) -> Vec<usize> {
    (0..l.size()).map(|w| l.big_meet((0..l.size()).filter(|&u| l.leq(f[u], w)))).collect()
}

/// Galois adjoint of an antitone g-like map: `u ↦ ⋁{v : u ≤ g(v)}`.
fn upper_galois(l: &Lattice, g: &[usize]) -> Vec<usize> {
    (0..l.size()).map(|u| l.big_join((0..l.size()).filter(|&v| l.leq(u, g[v])))).collect()
}

impl<'a> Evaluator<'a> {
    pub fn new(m: &'a FiniteDLE, sig: &'a Signature) -> Self {
        Evaluator { m, sig, cache: RefCell::new(HashMap::new()) }
    }

    fn lat(&self) -> &Lattice {
        &self.m.lat
    }

    fn unary(&self, k: Unary) -> Result<Rc<Vec<usize>>, EvalError> {
        if let Some(t) = self.cache.borrow().get(&k) {
            return Ok(t.clone());
        }
        let l = self.lat();
        let n = l.size();
        let table: Vec<usize> = match k {
            Unary::Role(r) => {
                let rt = self.sig.role_term(r).ok_or_else(|| EvalError::Unregistered(r.name().into()))?;
                let x = Term::Var(rt.var.clone());
                let node = self.compile(&rt.body, std::slice::from_ref(&x))?;
                (0..n).map(|u| self.run(&node, &[u])).collect()
            }
            Unary::Dot(op) if op.is_primitive() => match self.m.dots.get(&op) {
                Some(t) => t.table.clone(),
                None => self.unary(Unary::Role(op.role().unwrap()))?.to_vec(),
            },
            Unary::Dot(op) => {
                let prim = |d| self.unary(Unary::Dot(d));
                match op {
                    DotOp::BlackBox => upper_adjoint(l, &prim(DotOp::Dia)?),
                    DotOp::BlackDia => lower_adjoint(l, &prim(DotOp::Box)?),
                    DotOp::BlackLhd => lower_galois(l, &prim(DotOp::Lhd)?),
                    DotOp::BlackRhd => upper_galois(l, &prim(DotOp::Rhd)?),
                    _ => unreachable!(),
                }
            }
            Unary::Def(r) => {
                let f = self.unary(Unary::Role(r))?;
                let (js, ms) = (&l.jinf, &l.minf);
                (0..n)
                    .map(|u| match r {
                        Role::Pi => l.big_join(js.iter().filter(|&&j| l.leq(j, u)).map(|&j| f[j])),
                        Role::Sigma => l.big_meet(ms.iter().filter(|&&m| l.leq(u, m)).map(|&m| f[m])),
                        Role::Lambda => l.big_join(ms.iter().filter(|&&m| l.leq(u, m)).map(|&m| f[m])),
                        Role::Rho => l.big_meet(js.iter().filter(|&&j| l.leq(j, u)).map(|&j| f[j])),
                    })
                    .collect()
            }
            Unary::Adj(r) => {
                let d = self.unary(Unary::Def(r))?;
                match r {
                    Role::Pi => upper_adjoint(l, &d),
                    Role::Sigma => lower_adjoint(l, &d),
                    Role::Lambda => lower_galois(l, &d),
                    Role::Rho => upper_galois(l, &d),
                }
            }
        };
        let t = Rc::new(table);
        self.cache.borrow_mut().insert(k, t.clone());
        Ok(t)
    }

    /// Resolves every connective of `t` to a table; leaves listed in
    /// `slots` become positions in the value vector.
    pub(crate) fn compile(&self, t: &Term, slots: &[Term]) -> Result<Node, EvalError> {
        let sub = |c: &Term| self.compile(c, slots).map(Box::new);
        Ok(match t {
            Term::Var(_) | Term::Nom(_) | Term::Conom(_) => {
                let k = slots.iter().position(|s| s == t).ok_or_else(|| EvalError::Unbound(print_term(t)))?;
                Node::Slot(k)
            }
            Term::Top => Node::Const(self.lat().top()),
            Term::Bot => Node::Const(self.lat().bot()),
            Term::Meet(a, b) => Node::Meet(sub(a)?, sub(b)?),
            Term::Join(a, b) => Node::Join(sub(a)?, sub(b)?),
            Term::Imp(a, b) => Node::Imp(sub(a)?, sub(b)?),
            Term::Coimp(a, b) => Node::Coimp(sub(a)?, sub(b)?),
            Term::App(f, args) => {
                let op = self.m.ops.get(f).ok_or_else(|| EvalError::UnknownOp(f.clone()))?.clone();
                Node::Op(op, args.iter().map(|a| self.compile(a, slots)).collect::<Result<_, _>>()?)
            }
            Term::Res(f, h, args) => {
                let op = self.m.ops.get(f).ok_or_else(|| EvalError::UnknownOp(f.clone()))?.clone();
                Node::Res(op, *h, args.iter().map(|a| self.compile(a, slots)).collect::<Result<_, _>>()?)
            }
            Term::Dot(op, a) => Node::Unary(self.unary(Unary::Dot(*op))?, sub(a)?),
            Term::Role(r, a) => Node::Unary(self.unary(Unary::Role(*r))?, sub(a)?),
            Term::Def(r, a) => Node::Unary(self.unary(Unary::Def(*r))?, sub(a)?),
            Term::Adj(r, a) => Node::Unary(self.unary(Unary::Adj(*r))?, sub(a)?),
        })
    }

    pub(crate) fn run(&self, node: &Node, vals: &[usize]) -> usize {
        let l = self.lat();
        match node {
            Node::Slot(k) => vals[*k],
            Node::Const(c) => *c,
            Node::Meet(a, b) => l.meet(self.run(a, vals), self.run(b, vals)),
            Node::Join(a, b) => l.join(self.run(a, vals), self.run(b, vals)),
            Node::Imp(a, b) => {
                let (a, b) = (self.run(a, vals), self.run(b, vals));
                l.big_join((0..l.size()).filter(|&x| l.leq(l.meet(a, x), b)))
            }
            Node::Coimp(a, b) => {
                let (a, b) = (self.run(a, vals), self.run(b, vals));
                l.big_meet((0..l.size()).filter(|&x| l.leq(a, l.join(b, x))))
            }
            Node::Unary(t, a) => t[self.run(a, vals)],
            Node::Op(op, args) => {
                let v: Vec<usize> = args.iter().map(|a| self.run(a, vals)).collect();
                op.apply(&v)
            }
            Node::Res(op, h, args) => {
                let mut v: Vec<usize> = args.iter().map(|a| self.run(a, vals)).collect();
                let chi = v[h - 1];
                let mut at = |x: usize| {
                    v[h - 1] = x;
                    op.apply(&v)
                };
                let xs: Vec<(usize, usize)> = (0..l.size()).map(|x| (x, at(x))).collect();
                match (op.family, op.eps[h - 1]) {
                    (Family::F, Eps::One) => l.big_join(xs.iter().filter(|(_, y)| l.leq(*y, chi)).map(|p| p.0)),
                    (Family::F, Eps::Partial) => l.big_meet(xs.iter().filter(|(_, y)| l.leq(*y, chi)).map(|p| p.0)),
                    (Family::G, Eps::One) => l.big_meet(xs.iter().filter(|(_, y)| l.leq(chi, *y)).map(|p| p.0)),
                    (Family::G, Eps::Partial) => l.big_join(xs.iter().filter(|(_, y)| l.leq(chi, *y)).map(|p| p.0)),
                }
            }
        }
    }

    pub fn eval(&self, t: &Term, v: &Valuation) -> Result<usize, EvalError> {
        let mut slots = Vec::new();
        t.walk(&mut |n| {
            if matches!(n, Term::Var(_) | Term::Nom(_) | Term::Conom(_)) && !slots.contains(n) {
                slots.push(n.clone());
            }
        });
        let vals = slots.iter().map(|s| v.get(s).ok_or_else(|| EvalError::Unbound(print_term(s)))).collect::<Result<Vec<_>, _>>()?;
        let node = self.compile(t, &slots)?;
        Ok(self.run(&node, &vals))
    }

    /// The map `u ↦ t[x := u]` as a table.
    pub fn table_of(&self, t: &Term, x: &Term) -> Result<Vec<usize>, EvalError> {
        let node = self.compile(t, std::slice::from_ref(x))?;
        Ok((0..self.lat().size()).map(|u| self.run(&node, &[u])).collect())
    }

    pub fn role_table(&self, r: Role) -> Result<Rc<Vec<usize>>, EvalError> {
        self.unary(Unary::Role(r))
    }

    pub fn def_table(&self, r: Role) -> Result<Rc<Vec<usize>>, EvalError> {
        self.unary(Unary::Def(r))
    }

    pub fn adj_table(&self, r: Role) -> Result<Rc<Vec<usize>>, EvalError> {
        self.unary(Unary::Adj(r))
    }
}

/// One-shot evaluation.
pub fn eval(t: &Term, m: &FiniteDLE, sig: &Signature, v: &Valuation) -> Result<usize, EvalError> {
    Evaluator::new(m, sig).eval(t, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{relational_modal, Poset};
    use crate::signature::{parse_signature, parse_term, Layer};

    fn geach() -> Signature {
        parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = dia(box(dia(p)))\nterm sigma = box(p)").unwrap()
    }

    #[test]
    fn defined_maps_at_the_bounds() {
        let s = geach();
        let m = relational_modal(&Poset::from_pairs(3, &[(1, 2)]).unwrap(), &[(0, 1), (1, 2), (2, 0)]);
        let v = Valuation::default();
        let t = |src: &str| parse_term(src, &s, Layer::DlePP).unwrap();
        assert_eq!(eval(&t("Dia[pi](bot)"), &m, &s, &v), Ok(m.lat.bot()));
        assert_eq!(eval(&t("Box[sigma](top)"), &m, &s, &v), Ok(m.lat.top()));
        assert_eq!(eval(&t("p"), &m, &s, &v), Err(EvalError::Unbound("p".into())));
    }

    #[test]
    fn role_decomposes_over_its_defined_map() {
        let s = geach();
        let e = |src: &str| parse_term(src, &s, Layer::DlePP).unwrap();
        let (lhs, rhs) = (e("pi(p)"), e("pi(bot) | Dia[pi](p)"));
        for rel in [vec![(0, 0)], vec![(0, 1), (1, 0)], vec![(0, 1), (1, 2), (2, 2)]] {
            let m = relational_modal(&Poset::from_pairs(3, &[(0, 2)]).unwrap(), &rel);
            let ev = Evaluator::new(&m, &s);
            if !crate::models::role_axiom_holds(&ev, Role::Pi).unwrap() {
                continue;
            }
            let x = Term::Var("p".into());
            assert_eq!(ev.table_of(&lhs, &x).unwrap(), ev.table_of(&rhs, &x).unwrap());
        }
    }

    #[test]
    fn black_dots_are_adjoints() {
        let s = geach();
        let m = relational_modal(&Poset::antichain(3), &[(0, 1), (1, 1), (2, 0)]);
        let ev = Evaluator::new(&m, &s);
        let x = Term::Var("p".into());
        let tab = |src: &str| ev.table_of(&parse_term(src, &s, Layer::DlePP).unwrap(), &x).unwrap();
        let (d, b) = (tab(".dia(p)"), tab(".bbox(p)"));
        let l = &m.lat;
        for u in 0..l.size() {
            for w in 0..l.size() {
                assert_eq!(l.leq(d[u], w), l.leq(u, b[w]));
            }
        }
    }
}
