use std::collections::BTreeSet;

use super::elim::{self, Atom, Sat};
use super::eval::{EvalError, Evaluator, Node, Valuation};
use super::FiniteDLE;
use crate::engine::{Derivation, Mode, Stage, Status, System};
use crate::signature::{Inequality, Role, Signature, Term};

pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    /// first counterexample in enumeration order
    Fails(Valuation),
    BudgetExceeded,
}

impl Verdict {
    pub fn holds(&self) -> Option<bool> {
        match self {
            Verdict::Holds => Some(true),
            Verdict::Fails(_) => Some(false),
            Verdict::BudgetExceeded => None,
        }
    }
}

struct Compiled {
    lhs: Node,
    rhs: Node,
    /// deepest slot the inequality mentions, `None` when closed
    ready: Option<usize>,
    scope: Vec<usize>,
}

struct Search<'a, 'e> {
    ev: &'a Evaluator<'e>,
    domains: Vec<Vec<usize>>,
    ante: Vec<Compiled>,
    goal: Compiled,
    vals: Vec<usize>,
    spent: u64,
    budget: u64,
}

enum Step {
    Done,
    Found,
    Out,
}

impl Search<'_, '_> {
    fn holds(&mut self, c: &Compiled) -> Option<bool> {
        self.spent += 1;
        if self.spent > self.budget {
            return None;
        }
        let (a, b) = (self.ev.run(&c.lhs, &self.vals), self.ev.run(&c.rhs, &self.vals));
        Some(self.ev.m.lat.leq(a, b))
    }

    /// Checks what became decidable at `level`; `Some(true)` prunes.
    fn prune(&mut self, level: Option<usize>) -> Option<bool> {
        let ante = std::mem::take(&mut self.ante);
        let mut cut = false;
        for c in ante.iter().filter(|c| c.ready == level) {
            match self.holds(c) {
                None => {
                    self.ante = ante;
                    return None;
                }
                Some(false) => {
                    cut = true;
                    break;
                }
                Some(true) => {}
            }
        }
        self.ante = ante;
        if !cut && self.goal.ready == level {
            let goal = std::mem::replace(&mut self.goal, Compiled { lhs: Node::Const(0), rhs: Node::Const(0), ready: None, scope: vec![] });
            let r = self.holds(&goal);
            self.goal = goal;
            cut = r?;
        }
        Some(cut)
    }

    fn go(&mut self, level: usize) -> Step {
        if level == self.domains.len() {
            return Step::Found;
        }
        for k in 0..self.domains[level].len() {
            self.vals[level] = self.domains[level][k];
            match self.prune(Some(level)) {
                None => return Step::Out,
                Some(true) => continue,
                Some(false) => {}
            }
            match self.go(level + 1) {
                Step::Done => {}
                other => return other,
            }
        }
        Step::Done
    }
}

/// Orders symbols so that the goal and then the antecedents become
/// decidable early.
fn symbols(i: &Inequality) -> BTreeSet<Term> {
    let mut s = BTreeSet::new();
    for t in [&i.lhs, &i.rhs] {
        t.walk(&mut |n| {
            if matches!(n, Term::Var(_) | Term::Nom(_) | Term::Conom(_)) {
                s.insert(n.clone());
            }
        });
    }
    s
}

fn order_symbols(ante: &[Inequality], goal: &Inequality) -> Vec<Term> {
    let syms = symbols;
    // the goal is usually true, so binding it first prunes the most
    let mut order: Vec<Term> = if ante.is_empty() { Vec::new() } else { syms(goal).into_iter().collect() };
    let mut left: Vec<BTreeSet<Term>> = ante.iter().map(syms).collect();
    loop {
        left.retain(|s| s.iter().any(|x| !order.contains(x)));
        let Some(best) = left.iter().min_by_key(|s| s.iter().filter(|x| !order.contains(x)).count()) else {
            break;
        };
        let add: Vec<Term> = best.iter().filter(|x| !order.contains(x)).cloned().collect();
        order.extend(add);
    }
    for x in syms(goal) {
        if !order.contains(&x) {
            order.push(x);
        }
    }
    order
}

/// Decides `∀ symbols: ⋀ ante ⇒ goal`; variables range over all elements,
/// nominals over J∞ and conominals over M∞. Backtracking first; when that
/// spends `budget` evaluations, variable elimination with the same budget.
pub fn check_implication(ev: &Evaluator, ante: &[Inequality], goal: &Inequality, budget: u64) -> Result<Verdict, EvalError> {
    decide(ev, ante, goal, budget, false)
}

fn decide(ev: &Evaluator, ante: &[Inequality], goal: &Inequality, budget: u64, elim_only: bool) -> Result<Verdict, EvalError> {
    let order = order_symbols(ante, goal);
    let l = &ev.m.lat;
    let domains = order
        .iter()
        .map(|s| match s {
            Term::Nom(_) => l.jinf.clone(),
            Term::Conom(_) => l.minf.clone(),
            _ => (0..l.size()).collect(),
        })
        .collect();
    let compile = |i: &Inequality| -> Result<Compiled, EvalError> {
        let own = symbols(i);
        let scope: Vec<usize> = (0..order.len()).filter(|&k| own.contains(&order[k])).collect();
        Ok(Compiled { lhs: ev.compile(&i.lhs, &order)?, rhs: ev.compile(&i.rhs, &order)?, ready: scope.last().copied(), scope })
    };
    let mut s = Search {
        ev,
        domains,
        ante: ante.iter().map(compile).collect::<Result<_, _>>()?,
        goal: compile(goal)?,
        vals: vec![0; order.len()],
        spent: 0,
        budget,
    };
    match s.prune(None) {
        None => return Ok(Verdict::BudgetExceeded),
        Some(true) => return Ok(Verdict::Holds),
        Some(false) => {}
    }
    let step = if elim_only { Step::Out } else { s.go(0) };
    let found = match step {
        Step::Done => return Ok(Verdict::Holds),
        Step::Found => s.vals.clone(),
        Step::Out => {
            let atoms: Vec<Atom> = s
                .ante
                .iter()
                .map(|c| (c, false))
                .chain([(&s.goal, true)])
                .map(|(c, negated)| Atom { lhs: &c.lhs, rhs: &c.rhs, scope: c.scope.clone(), negated })
                .collect();
            match elim::solve(ev, &s.domains, &atoms, budget) {
                Sat::Unsat => return Ok(Verdict::Holds),
                Sat::Out => return Ok(Verdict::BudgetExceeded),
                Sat::Model(pos) => pos.iter().enumerate().map(|(k, &p)| s.domains[k][p]).collect(),
            }
        }
    };
    let mut v = Valuation::default();
    for (sym, &x) in order.iter().zip(&found) {
        v.set(sym, x);
    }
    Ok(Verdict::Fails(v))
}

pub fn check_validity(ineq: &Inequality, m: &FiniteDLE, sig: &Signature) -> Result<Verdict, EvalError> {
    check_implication(&Evaluator::new(m, sig), &[], ineq, DEFAULT_BUDGET)
}

/// A pure quasi-inequality `⋀ ante ⇒ goal`.
pub fn check_quasi(ante: &[Inequality], goal: &Inequality, m: &FiniteDLE, sig: &Signature) -> Result<Verdict, EvalError> {
    if let Some(i) = ante.iter().chain([goal]).find(|i| !i.is_pure()) {
        return Err(EvalError::NotPure(crate::signature::print_inequality(i)));
    }
    check_implication(&Evaluator::new(m, sig), ante, goal, DEFAULT_BUDGET)
}

pub fn system_verdict(ev: &Evaluator, s: &System, budget: u64) -> Result<Verdict, EvalError> {
    check_implication(ev, &s.ineqs, &s.goal, budget)
}

/// Validity of a derivation stage: every inequality before first
/// approximation, the quasi-inequality afterwards.
pub fn stage_verdict(ev: &Evaluator, st: &Stage, budget: u64) -> Result<Verdict, EvalError> {
    match st {
        Stage::Pre(list) => {
            for i in list {
                let v = check_implication(ev, &[], i, budget)?;
                if v != Verdict::Holds {
                    return Ok(v);
                }
            }
            Ok(Verdict::Holds)
        }
        Stage::Sys(s) => system_verdict(ev, s, budget),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Agreement {
    Agree(bool),
    Diverge { parent: bool, children: bool },
    BudgetExceeded,
}

/// Parent stage valid iff all children valid. `admissible_only` has no
/// effect on finite algebras, which are their own canonical extensions.
pub fn verify_rule_step(
    parent: &Stage,
    children: &[Stage],
    m: &FiniteDLE,
    sig: &Signature,
    _admissible_only: bool,
) -> Result<Agreement, EvalError> {
    let ev = Evaluator::new(m, sig);
    let Some(p) = stage_verdict(&ev, parent, DEFAULT_BUDGET)?.holds() else {
        return Ok(Agreement::BudgetExceeded);
    };
    let mut c = true;
    for st in children {
        match stage_verdict(&ev, st, DEFAULT_BUDGET)?.holds() {
            None => return Ok(Agreement::BudgetExceeded),
            Some(false) => {
                c = false;
                break;
            }
            Some(true) => {}
        }
    }
    Ok(if p == c { Agreement::Agree(p) } else { Agreement::Diverge { parent: p, children: c } })
}

/// Every rule application of a derivation checked on one algebra, as
/// `(parent node, agreement)`.
pub fn verify_steps(d: &Derivation, m: &FiniteDLE, sig: &Signature) -> Result<Vec<(usize, Agreement)>, EvalError> {
    let mut out = Vec::new();
    for node in d.nodes.iter().filter(|n| !n.children.is_empty()) {
        let children: Vec<Stage> = node.children.iter().map(|&k| d.nodes[k].stage.clone()).collect();
        out.push((node.id, verify_rule_step(&node.stage, &children, m, sig, false)?));
    }
    Ok(out)
}

/// The axiom a role must satisfy for the ALBA^e rules to be sound:
/// additivity of π and λ (the latter meet-to-join), multiplicativity of σ
/// and ρ (the latter join-to-meet).
pub fn role_axiom_holds(ev: &Evaluator, r: Role) -> Result<bool, EvalError> {
    let t = ev.role_table(r)?;
    let l = &ev.m.lat;
    let n = l.size();
    for a in 0..n {
        for b in 0..n {
            let ok = match r {
                Role::Pi => l.leq(t[l.join(a, b)], l.join(t[a], t[b])),
                Role::Sigma => l.leq(l.meet(t[a], t[b]), t[l.meet(a, b)]),
                Role::Lambda => l.leq(t[l.meet(a, b)], l.join(t[a], t[b])),
                Role::Rho => l.leq(l.meet(t[a], t[b]), t[l.join(a, b)]),
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub fn role_axioms_hold(m: &FiniteDLE, sig: &Signature) -> Result<bool, EvalError> {
    let ev = Evaluator::new(m, sig);
    for r in sig.registered.keys() {
        if !role_axiom_holds(&ev, *r)? {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub lattice: usize,
    pub input_valid: bool,
    pub output_valid: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CorrespondenceReport {
    pub checked: usize,
    /// algebras whose roles violate their axioms (ALBA^e only)
    pub skipped: usize,
    pub budget_exceeded: usize,
    pub divergences: Vec<Divergence>,
}

impl CorrespondenceReport {
    pub fn ok(&self) -> bool {
        self.divergences.is_empty() && self.budget_exceeded == 0
    }
}

/// Input validity against validity of every output system, per algebra.
pub fn verify_correspondence(
    ineq: &Inequality,
    d: &Derivation,
    sig: &Signature,
    lattices: impl IntoIterator<Item = FiniteDLE>,
) -> Result<CorrespondenceReport, EvalError> {
    let outputs = match &d.status {
        Status::Success(v) => v.clone(),
        _ => return Ok(CorrespondenceReport::default()),
    };
    let mut rep = CorrespondenceReport::default();
    for (k, m) in lattices.into_iter().enumerate() {
        let ev = Evaluator::new(&m, sig);
        if d.mode == Mode::AlbaE && !role_axioms_hold(&m, sig)? {
            rep.skipped += 1;
            continue;
        }
        let Some(input) = check_implication(&ev, &[], ineq, DEFAULT_BUDGET)?.holds() else {
            rep.budget_exceeded += 1;
            continue;
        };
        let mut output = Some(true);
        for s in &outputs {
            match system_verdict(&ev, s, DEFAULT_BUDGET)?.holds() {
                Some(true) => {}
                other => {
                    output = other;
                    break;
                }
            }
        }
        let Some(output) = output else {
            rep.budget_exceeded += 1;
            continue;
        };
        rep.checked += 1;
        if input != output {
            rep.divergences.push(Divergence { lattice: k, input_valid: input, output_valid: output });
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{run_alba, Strategy};
    use crate::models::{relational_modal, relational_modal_algebras, relational_op, Lattice, Poset};
    use crate::signature::{parse_inequality, parse_signature, Eps, Family, Layer};

    fn ineq(s: &str, sig: &Signature) -> Inequality {
        parse_inequality(s, sig, Layer::DlePP).unwrap()
    }

    /// Non-additive π(p) = h(p, p) on the four-element Boolean algebra.
    pub(crate) fn non_additive() -> (FiniteDLE, Signature) {
        let sig = parse_signature("f h 2 (1,1)\nterm pi = h(p, p)").unwrap();
        let lat = Lattice::new(Poset::antichain(2));
        let h = relational_op(&lat, "h", Family::F, &[Eps::One, Eps::One], &[vec![0, 0, 1]]);
        (FiniteDLE::new_unchecked(lat, vec![h], vec![]), sig)
    }

    #[test]
    fn trivial_validities() {
        let s = Signature::modal();
        let m = relational_modal(&Poset::chain(2), &[(0, 1)]);
        assert_eq!(check_validity(&ineq("bot <= top", &s), &m, &s), Ok(Verdict::Holds));
        let q = check_quasi(&[ineq("top <= bot", &s)], &ineq("#i <= @m", &s), &m, &s);
        assert_eq!(q, Ok(Verdict::Holds));
        assert!(matches!(check_quasi(&[], &ineq("p <= top", &s), &m, &s), Err(EvalError::NotPure(_))));
    }

    #[test]
    fn church_rosser_fails_on_a_fork() {
        let s = Signature::modal();
        let m = relational_modal(&Poset::antichain(3), &[(0, 1), (0, 2)]);
        let v = check_validity(&ineq("dia(box(p)) <= box(dia(p))", &s), &m, &s).unwrap();
        let Verdict::Fails(w) = v else { panic!("{:?}", v) };
        // the witness must actually refute the inequality
        let e = Evaluator::new(&m, &s);
        let (a, b) = (e.eval(&ineq("dia(box(p)) <= top", &s).lhs, &w).unwrap(), e.eval(&ineq("box(dia(p)) <= top", &s).lhs, &w).unwrap());
        assert!(!m.lat.leq(a, b));
        let confluent = relational_modal(&Poset::antichain(3), &[(0, 1), (0, 2), (1, 1), (2, 1)]);
        assert_eq!(check_validity(&ineq("dia(box(p)) <= box(dia(p))", &s), &confluent, &s), Ok(Verdict::Holds));
    }

    #[test]
    fn church_rosser_correspondence_small() {
        let s = Signature::modal();
        let i = ineq("dia(box(p)) <= box(dia(p))", &s);
        let d = run_alba(&i, &s, Mode::Alba, &Strategy::Auto).unwrap();
        let rep = verify_correspondence(&i, &d, &s, relational_modal_algebras(3, None)).unwrap();
        assert!(rep.ok(), "{:?}", rep);
        assert!(rep.checked > 100);
        for m in relational_modal_algebras(2, None) {
            assert!(verify_steps(&d, &m, &s).unwrap().iter().all(|(_, a)| matches!(a, Agreement::Agree(_))));
        }
    }

    #[test]
    fn additivity_valid_where_built_in() {
        let s = parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = dia(p)").unwrap();
        let m = relational_modal(&Poset::from_pairs(3, &[(0, 2)]).unwrap(), &[(0, 1), (2, 0), (1, 1)]);
        assert_eq!(check_validity(&ineq("pi(p | q) <= pi(p) | pi(q)", &s), &m, &s), Ok(Verdict::Holds));
        let (bad, s2) = non_additive();
        assert!(matches!(check_validity(&ineq("pi(p | q) <= pi(p) | pi(q)", &s2), &bad, &s2), Ok(Verdict::Fails(_))));
    }

    #[test]
    fn adj_pi_step_can_fail_without_additivity() {
        let (m, s) = non_additive();
        let i = ineq("pi(p | q) <= pi(p) | pi(q)", &s);
        let d = run_alba(&i, &s, Mode::AlbaE, &Strategy::Auto).unwrap();
        let steps = verify_steps(&d, &m, &s).unwrap();
        let bad: Vec<_> = steps.iter().filter(|(_, a)| matches!(a, Agreement::Diverge { .. })).collect();
        assert!(!bad.is_empty(), "{:?}", steps);
        let rule = |n: usize| d.nodes[d.nodes[n].children[0]].rule.as_ref().unwrap().rule;
        assert!(bad.iter().any(|(n, _)| rule(*n).role() == Some(Role::Pi)), "{:?}", bad);
        assert!(!role_axioms_hold(&m, &s).unwrap());
    }

    #[test]
    fn elimination_agrees_with_backtracking() {
        let s = parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = dia(box(dia(p)))\nterm sigma = box(p)").unwrap();
        let mut systems = Vec::new();
        for src in ["dia(box(p)) <= box(dia(p))", "pi(sigma(p)) <= sigma(pi(p))", "dia(p & box(q)) <= box(p | dia(q))"] {
            let i = ineq(src, &s);
            let d = run_alba(&i, &s, Mode::AlbaE, &Strategy::Auto).unwrap();
            systems.extend(d.nodes.iter().filter_map(|n| match &n.stage {
                Stage::Sys(x) => Some(x.clone()),
                _ => None,
            }));
        }
        let mut fails = 0;
        for m in relational_modal_algebras(2, None).into_iter().take(40) {
            let e = Evaluator::new(&m, &s);
            for x in &systems {
                let a = decide(&e, &x.ineqs, &x.goal, DEFAULT_BUDGET, false).unwrap();
                let b = decide(&e, &x.ineqs, &x.goal, DEFAULT_BUDGET, true).unwrap();
                assert_eq!(a.holds(), b.holds(), "{}", x.quasi_text());
                if let Verdict::Fails(v) = b {
                    fails += 1;
                    // the model really is a counterexample
                    let val = |t: &Term| e.eval(t, &v).unwrap();
                    assert!(x.ineqs.iter().all(|i| m.lat.leq(val(&i.lhs), val(&i.rhs))));
                    assert!(!m.lat.leq(val(&x.goal.lhs), val(&x.goal.rhs)));
                }
            }
        }
        assert!(fails > 0);
    }

    #[test]
    fn budget_is_reported() {
        let s = Signature::modal();
        let m = relational_modal(&Poset::antichain(3), &[(0, 1)]);
        let e = Evaluator::new(&m, &s);
        let v = check_implication(&e, &[], &ineq("p & q & r <= dia(p)", &s), 10).unwrap();
        assert_eq!(v, Verdict::BudgetExceeded);
    }
}
