//! The ALBA and ALBA^e reduction engine.
//!
//! A [`Derivation`] is an append-only tree. The root holds the input in the
//! preprocessing stage; `FirstApprox` turns each preprocessed inequality into
//! a system with goal `#i0 <= @m0`, and the reduction rules then rewrite
//! systems until no propositional variable is left.

mod audit;
mod rules;
mod strategy;
mod trace;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::rc::Rc;

pub use audit::{
    check_compact_appropriate, check_topological_adequacy, is_safe, is_syntactically_closed,
    is_syntactically_open,
};
pub use strategy::{first_approximation, parse_script, preprocess, run_alba, Strategy};
pub use trace::{trace_jsonl, TraceRecord};

use crate::classify::InductiveWitness;
use crate::signature::{print_inequality, DotOp, Inequality, Role, Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Alba,
    AlbaE,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleId {
    Split,
    DistributePre,
    MonotoneElim,
    FirstApprox,
    ResidF(usize),
    ResidG(usize),
    /// `χ <= a | b` to `χ -. b <= a`
    ResidJoin,
    /// `a & b <= χ` to `a <= b -> χ`
    ResidMeet,
    AdjDot(DotOp),
    ApproxDot(DotOp),
    ApproxF,
    ApproxG,
    AckermannRight,
    AckermannLeft,
    Dist(Role),
    Adj(Role),
    Approx(Role),
    Rewrite(Role),
}

fn cap(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleId::ResidF(i) => write!(f, "ResidF({})", i),
            RuleId::ResidG(i) => write!(f, "ResidG({})", i),
            RuleId::AdjDot(op) => write!(f, "AdjDot{}", cap(op.name())),
            RuleId::ApproxDot(op) => write!(f, "ApproxDot{}", cap(op.name())),
            RuleId::Dist(r) => write!(f, "Dist{}", cap(r.name())),
            RuleId::Adj(r) => write!(f, "Adj{}", cap(r.name())),
            RuleId::Approx(r) => write!(f, "Approx{}", cap(r.name())),
            RuleId::Rewrite(r) => write!(f, "Rewrite{}", cap(r.name())),
            other => write!(f, "{:?}", other),
        }
    }
}

impl std::str::FromStr for RuleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim();
        let coord = |p: &str| -> Option<usize> { s.strip_prefix(p)?.strip_suffix(')')?.trim().parse().ok() };
        if let Some(i) = coord("ResidF(") {
            return Ok(RuleId::ResidF(i));
        }
        if let Some(i) = coord("ResidG(") {
            return Ok(RuleId::ResidG(i));
        }
        let simple = [
            RuleId::Split,
            RuleId::DistributePre,
            RuleId::MonotoneElim,
            RuleId::FirstApprox,
            RuleId::ResidJoin,
            RuleId::ResidMeet,
            RuleId::ApproxF,
            RuleId::ApproxG,
            RuleId::AckermannRight,
            RuleId::AckermannLeft,
        ];
        let dotted = DotOp::ALL.into_iter().filter(|d| d.is_primitive());
        let all = simple
            .into_iter()
            .chain(dotted.clone().map(RuleId::AdjDot))
            .chain(dotted.map(RuleId::ApproxDot))
            .chain(Role::ALL.into_iter().flat_map(|r| {
                [RuleId::Dist(r), RuleId::Adj(r), RuleId::Approx(r), RuleId::Rewrite(r)]
            }));
        for r in all {
            if r.to_string() == s {
                return Ok(r);
            }
        }
        Err(format!("unknown rule `{}`", s))
    }
}

impl RuleId {
    pub fn is_ackermann(self) -> bool {
        matches!(self, RuleId::AckermannLeft | RuleId::AckermannRight)
    }

    /// Rules whose soundness needs the role axioms on the lattice.
    pub fn role(self) -> Option<Role> {
        match self {
            RuleId::Dist(r) | RuleId::Adj(r) | RuleId::Approx(r) | RuleId::Rewrite(r) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    L,
    R,
}

/// Inequality index, side and child-index path inside that side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Target {
    pub ineq: usize,
    pub side: Option<Side>,
    pub path: Vec<usize>,
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} / ", self.ineq)?;
        match self.side {
            None => write!(f, "-"),
            Some(s) => {
                write!(f, "{}", if s == Side::L { "l" } else { "r" })?;
                for k in &self.path {
                    write!(f, ".{}", k)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RuleApplication {
    pub rule: RuleId,
    pub target: Target,
    /// node to rewrite; the leftmost open leaf when absent
    pub node: Option<usize>,
}

impl RuleApplication {
    pub fn new(rule: RuleId, ineq: usize, side: Option<Side>, path: Vec<usize>) -> Self {
        RuleApplication { rule, target: Target { ineq, side, path }, node: None }
    }
}

impl fmt::Display for RuleApplication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @ {}", self.rule, self.target)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct System {
    pub ineqs: Vec<Inequality>,
    /// side-condition flags, parallel to `ineqs`
    pub side: Vec<bool>,
    pub goal: Inequality,
}

impl System {
    pub fn is_pure(&self) -> bool {
        self.ineqs.iter().all(|i| i.is_pure())
    }

    pub fn vars(&self) -> BTreeSet<String> {
        self.ineqs.iter().flat_map(|i| i.vars()).collect()
    }

    pub fn names(&self) -> BTreeSet<Term> {
        let mut n: BTreeSet<Term> = self.ineqs.iter().flat_map(|i| i.names()).collect();
        n.extend(self.goal.names());
        n
    }

    /// `a1 & ... & an => goal`, the universally read quasi-inequality.
    pub fn quasi_text(&self) -> String {
        let ante: Vec<String> = self.ineqs.iter().map(print_inequality).collect();
        format!("{} => {}", ante.join(" & "), print_inequality(&self.goal))
    }

    /// Drops repeated inequalities, keeping the first and merging flags.
    pub fn dedup(&mut self) {
        let mut ineqs = Vec::new();
        let mut side: Vec<bool> = Vec::new();
        for (i, s) in self.ineqs.drain(..).zip(self.side.drain(..)) {
            match ineqs.iter().position(|x| *x == i) {
                Some(k) => side[k] |= s,
                None => {
                    ineqs.push(i);
                    side.push(s);
                }
            }
        }
        self.ineqs = ineqs;
        self.side = side;
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stage {
    /// before first approximation
    Pre(Vec<Inequality>),
    Sys(System),
}

impl Stage {
    pub fn ineqs(&self) -> &[Inequality] {
        match self {
            Stage::Pre(v) => v,
            Stage::Sys(s) => &s.ineqs,
        }
    }

    pub fn flags(&self) -> Vec<bool> {
        match self {
            Stage::Pre(v) => vec![false; v.len()],
            Stage::Sys(s) => s.side.clone(),
        }
    }

    pub fn is_open(&self) -> bool {
        match self {
            Stage::Pre(_) => true,
            Stage::Sys(s) => !s.is_pure(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Node {
    pub id: usize,
    pub parent: Option<usize>,
    pub rule: Option<RuleApplication>,
    /// the targeted inequality of the parent, printed
    pub principal: String,
    pub stage: Stage,
    /// nominals and conominals introduced by the rule
    pub fresh: Vec<Term>,
    pub children: Vec<usize>,
    /// ε/Ω used by the automatic strategy on this branch
    pub witness: Option<Rc<InductiveWitness>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StuckReport {
    pub node: usize,
    pub variables: Vec<String>,
    pub blocking: Vec<String>,
    pub reason: String,
}

impl fmt::Display for StuckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "stuck at node {}: {}", self.node, self.reason)?;
        writeln!(f, "uneliminated: {}", self.variables.join(", "))?;
        for b in &self.blocking {
            writeln!(f, "  {}", b)?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Status {
    Running,
    Success(Vec<System>),
    Failure(StuckReport),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("rule {rule} does not match: {why}")]
    Mismatch { rule: String, why: String },
    #[error("no such target: {0}")]
    BadTarget(String),
    #[error("no open leaf to rewrite")]
    NoOpenLeaf,
    #[error("node {0} is not an open leaf")]
    NotLeaf(usize),
    #[error("fresh name `{0}` already occurs on the branch")]
    Freshness(String),
    #[error("Ackermann shape violated: {0}")]
    AckermannShape(String),
    #[error("role `{0}` has no registered term")]
    Unregistered(String),
    #[error("script line {line}: {msg}")]
    Script { line: usize, msg: String },
}

#[derive(Clone, Debug)]
pub struct Derivation {
    pub input: Inequality,
    pub mode: Mode,
    pub nodes: Vec<Node>,
    pub counter: usize,
    pub status: Status,
}

impl Derivation {
    pub fn new(input: Inequality, mode: Mode) -> Self {
        let root = Node {
            id: 0,
            parent: None,
            rule: None,
            principal: String::new(),
            stage: Stage::Pre(vec![input.clone()]),
            fresh: vec![],
            children: vec![],
            witness: None,
        };
        Derivation { input, mode, nodes: vec![root], counter: 1, status: Status::Running }
    }

    /// Leaves in depth-first, left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![0];
        while let Some(n) = stack.pop() {
            let node = &self.nodes[n];
            if node.children.is_empty() {
                out.push(n);
            }
            stack.extend(node.children.iter().rev());
        }
        out
    }

    pub fn open_leaves(&self) -> Vec<usize> {
        self.leaves().into_iter().filter(|&n| self.nodes[n].stage.is_open()).collect()
    }

    /// Applies one rule and returns the ids of the new nodes.
    pub fn apply(&mut self, sig: &Signature, app: &RuleApplication) -> Result<Vec<usize>, EngineError> {
        let n = match app.node {
            Some(n) => n,
            None => *self.open_leaves().first().ok_or(EngineError::NoOpenLeaf)?,
        };
        if n >= self.nodes.len() || !self.nodes[n].children.is_empty() || !self.nodes[n].stage.is_open() {
            return Err(EngineError::NotLeaf(n));
        }
        let stage = self.nodes[n].stage.clone();
        let mut fresh = rules::Fresh { counter: self.counter };
        let out = rules::apply_stage(&stage, app, sig, &mut fresh)?;
        self.counter = fresh.counter;
        let witness = self.nodes[n].witness.clone();
        let mut ids = Vec::new();
        for st in out.children {
            let id = self.nodes.len();
            self.nodes.push(Node {
                id,
                parent: Some(n),
                rule: Some(RuleApplication { node: Some(n), ..app.clone() }),
                principal: out.principal.clone(),
                stage: st,
                fresh: out.fresh.clone(),
                children: vec![],
                witness: witness.clone(),
            });
            ids.push(id);
        }
        self.nodes[n].children = ids.clone();
        Ok(ids)
    }

    /// Sets the status from the leaves: success when every leaf is pure.
    pub fn conclude(&mut self, stuck: Option<StuckReport>) {
        self.status = match stuck {
            Some(s) => Status::Failure(s),
            None => {
                let open = self.open_leaves();
                if let Some(&n) = open.first() {
                    let node = &self.nodes[n];
                    Status::Failure(StuckReport {
                        node: n,
                        variables: node.stage.ineqs().iter().flat_map(|i| i.vars()).collect::<BTreeSet<_>>().into_iter().collect(),
                        blocking: node.stage.ineqs().iter().filter(|i| !i.is_pure()).map(print_inequality).collect(),
                        reason: "derivation ended with propositional variables left".into(),
                    })
                } else {
                    Status::Success(self.outputs())
                }
            }
        };
    }

    /// Pure systems at the leaves, in leaf order.
    pub fn outputs(&self) -> Vec<System> {
        self.leaves()
            .into_iter()
            .filter_map(|n| match &self.nodes[n].stage {
                Stage::Sys(s) if s.is_pure() => Some(s.clone()),
                _ => None,
            })
            .collect()
    }

    pub fn is_success(&self) -> bool {
        matches!(self.status, Status::Success(_))
    }

    /// Parent stage, rule and child stages of every non-root node group.
    pub fn steps(&self) -> Vec<(usize, RuleApplication, Vec<usize>)> {
        self.nodes
            .iter()
            .filter(|n| !n.children.is_empty())
            .map(|n| {
                let app = self.nodes[n.children[0]].rule.clone().expect("child carries its rule");
                (n.id, app, n.children.clone())
            })
            .collect()
    }
}

/// Functional form of [`Derivation::apply`].
pub fn apply_rule(d: &Derivation, sig: &Signature, app: &RuleApplication) -> Result<Derivation, EngineError> {
    let mut out = d.clone();
    out.apply(sig, app)?;
    Ok(out)
}

fn rename(t: &Term, map: &BTreeMap<Term, Term>) -> Term {
    match map.get(t) {
        Some(u) => u.clone(),
        None => t.map_children(|c| rename(c, map)),
    }
}

/// Equality of inequality sets up to a bijective renaming of nominals and
/// conominals (goal names included).
pub fn same_up_to_renaming(a: &[Inequality], b: &[Inequality]) -> bool {
    let set = |v: &[Inequality]| v.iter().cloned().collect::<BTreeSet<_>>();
    let (sa, sb) = (set(a), set(b));
    if sa.len() != sb.len() {
        return false;
    }
    let names = |s: &BTreeSet<Inequality>| s.iter().flat_map(|i| i.names()).collect::<BTreeSet<_>>();
    let (na, nb): (Vec<Term>, Vec<Term>) = (names(&sa).into_iter().collect(), names(&sb).into_iter().collect());
    if na.len() != nb.len() {
        return false;
    }
    let mut perm: Vec<usize> = (0..nb.len()).collect();
    loop {
        let ok_kinds = na.iter().zip(&perm).all(|(x, &k)| std::mem::discriminant(x) == std::mem::discriminant(&nb[k]));
        if ok_kinds {
            let map: BTreeMap<Term, Term> = na.iter().cloned().zip(perm.iter().map(|&k| nb[k].clone())).collect();
            if sa.iter().map(|i| i.map(|t| rename(t, &map))).collect::<BTreeSet<_>>() == sb {
                return true;
            }
        }
        if !next_permutation(&mut perm) {
            return false;
        }
    }
}

fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::{parse_inequality, parse_signature, Layer};

    fn geach_sig() -> Signature {
        parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = dia(box(dia(p)))\nterm sigma = box(p)").unwrap()
    }

    fn ineqs(src: &[&str], sig: &Signature) -> Vec<Inequality> {
        src.iter().map(|s| parse_inequality(s, sig, Layer::DlePP).unwrap()).collect()
    }

    fn outputs(d: &Derivation) -> Vec<Vec<Inequality>> {
        match &d.status {
            Status::Success(v) => v.iter().map(|s| s.ineqs.clone()).collect(),
            other => panic!("derivation failed: {:?}", other),
        }
    }

    #[test]
    fn rule_ids_round_trip() {
        let ids = [
            RuleId::ResidF(2),
            RuleId::AdjDot(DotOp::Box),
            RuleId::ApproxDot(DotOp::Rhd),
            RuleId::Adj(Role::Pi),
            RuleId::Rewrite(Role::Lambda),
            RuleId::AckermannLeft,
            RuleId::DistributePre,
        ];
        for r in ids {
            assert_eq!(r.to_string().parse::<RuleId>().unwrap(), r);
        }
        assert_eq!(RuleId::Adj(Role::Sigma).to_string(), "AdjSigma");
        assert_eq!(RuleId::ApproxDot(DotOp::Dia).to_string(), "ApproxDotDia");
        assert!("Frobnicate".parse::<RuleId>().is_err());
    }

    #[test]
    fn church_rosser_auto() {
        let s = Signature::modal();
        let i = parse_inequality("dia(box(p)) <= box(dia(p))", &s, Layer::Dle).unwrap();
        let d = run_alba(&i, &s, Mode::Alba, &Strategy::Auto).unwrap();
        let out = outputs(&d);
        assert_eq!(out.len(), 1);
        let want = ineqs(&["#i0 <= dia(#j1)", "box(dia(res(box,1)(#j1))) <= @m0"], &s);
        assert!(same_up_to_renaming(&out[0], &want), "{:?}", out);
        assert!(is_safe(&d));
    }

    #[test]
    fn geach_albae_auto() {
        let s = geach_sig();
        let i = parse_inequality("pi(sigma(p)) <= sigma(pi(p))", &s, Layer::DlePlus).unwrap();
        let d = run_alba(&i, &s, Mode::AlbaE, &Strategy::Auto).unwrap();
        let out = outputs(&d);
        assert_eq!(out.len(), 2);
        let a = ineqs(&["#i0 <= pi(bot)", "sigma(pi(bot)) <= @m0"], &s);
        let b = ineqs(
            &["#i0 <= Dia[pi](#j1)", "sigma(pi(bdia[sigma](#j1))) <= @m0", "#j1 <= sigma(top)"],
            &s,
        );
        assert!(same_up_to_renaming(&out[0], &a), "{:?}", out[0]);
        assert!(same_up_to_renaming(&out[1], &b), "{:?}", out[1]);
        assert!(is_safe(&d));
        for n in &d.nodes {
            if let Stage::Sys(sys) = &n.stage {
                assert!(check_topological_adequacy(sys));
                assert!(check_compact_appropriate(sys, &s));
            }
        }
    }

    #[test]
    fn additivity_scripted() {
        let s = geach_sig();
        let i = parse_inequality("pi(p | q) <= pi(p) | pi(q)", &s, Layer::DlePlus).unwrap();
        let script = parse_script(
            "FirstApprox\nSplit @ 1 / l\nAdjPi @ 1 / l\nAdjPi @ 2 / l\nAckermannLeft @ 1 / l\nAckermannLeft @ 1 / l\n",
        )
        .unwrap();
        let d = run_alba(&i, &s, Mode::AlbaE, &Strategy::Scripted(script)).unwrap();
        let out = outputs(&d);
        let want = ineqs(&["#i0 <= pi(bsq[pi](@m0) | bsq[pi](@m0))", "pi(bot) <= @m0"], &s);
        assert_eq!(out, vec![want]);
        assert!(is_safe(&d));
    }

    #[test]
    fn additivity_auto_succeeds() {
        let s = geach_sig();
        let i = parse_inequality("pi(p | q) <= pi(p) | pi(q)", &s, Layer::DlePlus).unwrap();
        let d = run_alba(&i, &s, Mode::AlbaE, &Strategy::Auto).unwrap();
        assert!(d.is_success(), "{:?}", d.status);
        assert!(is_safe(&d));
    }

    #[test]
    fn first_approximation_shapes() {
        let s = Signature::modal();
        let e = parse_inequality("dia(box(p)) <= box(dia(p))", &s, Layer::Dle).unwrap();
        let sys = first_approximation(&[e]);
        assert_eq!(sys[0].ineqs, ineqs(&["#i0 <= dia(box(p))", "box(dia(p)) <= @m0"], &s));
        assert_eq!(sys[0].goal, ineqs(&["#i0 <= @m0"], &s)[0]);
        let t = first_approximation(&ineqs(&["top <= top"], &s));
        assert_eq!(t[0].ineqs, ineqs(&["#i0 <= top", "top <= @m0"], &s));
    }

    #[test]
    fn preprocess_examples() {
        let s = Signature::modal();
        let e = parse_inequality("dia(p | q) <= box(p) & box(q)", &s, Layer::Dle).unwrap();
        let out = preprocess(&e, &s);
        let want = ineqs(&["dia(p) <= box(p)", "dia(top) <= box(bot)", "dia(q) <= box(q)"], &s);
        assert_eq!(out, want);
        let g = geach_sig();
        let abstract_pi = parse_inequality("pi(p | q) <= pi(p) | pi(q)", &g, Layer::DlePlus).unwrap();
        assert_eq!(preprocess(&abstract_pi, &Signature::new()), vec![abstract_pi.clone()]);
    }

    #[test]
    fn split_on_side_condition_is_unsafe() {
        let s = geach_sig();
        let i = parse_inequality("q <= pi(p)", &s, Layer::DlePlus).unwrap();
        let run = |src: &str| run_alba(&i, &s, Mode::AlbaE, &Strategy::Scripted(parse_script(src).unwrap())).unwrap();
        let safe = run("FirstApprox\nAdjPi @ 1 / l");
        assert!(is_safe(&safe));
        let d = run("FirstApprox\nAdjPi @ 1 / l\nRewritePi @ 2 / l\nSplit @ 2 / l");
        assert!(!is_safe(&d));
    }

    #[test]
    fn adequacy_and_closedness() {
        let s = geach_sig();
        let sys = |v: &[&str]| System {
            ineqs: ineqs(v, &s),
            side: vec![false; v.len()],
            goal: ineqs(&["#i0 <= @m0"], &s)[0].clone(),
        };
        assert!(!check_topological_adequacy(&sys(&["p <= bsq[pi](@m0)"])));
        assert!(check_topological_adequacy(&sys(&["p <= bsq[pi](@m0)", "pi(bot) <= @m0"])));
        assert!(check_topological_adequacy(&sys(&[])));
        assert!(check_compact_appropriate(&sys(&[]), &s));
        let t = |x: &str| crate::signature::parse_term(x, &s, Layer::DlePP).unwrap();
        assert!(is_syntactically_closed(&t("#i0"), &s));
        assert!(!is_syntactically_open(&t("#i0"), &s));
        assert!(is_syntactically_open(&t("bsq[pi](@m0)"), &s));
        assert!(!is_syntactically_closed(&t("pi(bsq[pi](@m0))"), &s));
    }
}
