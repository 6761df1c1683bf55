use std::rc::Rc;

use super::rules::distribute_at;
use super::{Derivation, EngineError, Mode, RuleApplication, RuleId, Side, Stage, StuckReport, System};
use crate::classify::{
    child_eps, is_critical, is_inductive, is_meta_inductive, is_skeleton, node_classes, polarity, InductiveWitness,
    Polarity, Sign,
};
use crate::signature::{dots_to_roles, print_inequality, DotOp, Eps, Family, Inequality, Role, Signature, Term};

const MAX_STEPS: usize = 20_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Strategy {
    Auto,
    Scripted(Vec<RuleApplication>),
}

/// Parses one rule application per line: `Rule @ k / l.0.1`, `Rule @ k / -`
/// or a bare `Rule` (whole first inequality). `#` starts a comment.
pub fn parse_script(text: &str) -> Result<Vec<RuleApplication>, EngineError> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| EngineError::Script { line: n + 1, msg };
        let (rule, target) = match line.split_once('@') {
            Some((r, t)) => (r.trim(), Some(t.trim())),
            None => (line, None),
        };
        let rule: RuleId = rule.parse().map_err(err)?;
        let app = match target {
            None => RuleApplication::new(rule, 0, None, vec![]),
            Some(t) => {
                let (k, loc) = t.split_once('/').ok_or_else(|| err("expected `index / location`".into()))?;
                let k: usize = k.trim().parse().map_err(|_| err(format!("bad index `{}`", k.trim())))?;
                let loc = loc.trim();
                if loc == "-" {
                    RuleApplication::new(rule, k, None, vec![])
                } else {
                    let mut parts = loc.split('.');
                    let side = match parts.next() {
                        Some("l") => Side::L,
                        Some("r") => Side::R,
                        _ => return Err(err(format!("bad location `{}`", loc))),
                    };
                    let path = parts
                        .map(|p| p.parse::<usize>().map_err(|_| err(format!("bad path step `{}`", p))))
                        .collect::<Result<Vec<_>, _>>()?;
                    RuleApplication::new(rule, k, Some(side), path)
                }
            }
        };
        out.push(app);
    }
    Ok(out)
}

fn stuck(node: usize, vars: Vec<String>, blocking: Vec<String>, reason: impl Into<String>) -> StuckReport {
    StuckReport { node, variables: vars, blocking, reason: reason.into() }
}

/// Signed variable occurrences with their paths.
fn occurrences(t: &Term, sign: Sign, sig: &Signature, path: &mut Vec<usize>, out: &mut Vec<(String, Sign, Vec<usize>)>) {
    if let Term::Var(v) = t {
        out.push((v.clone(), sign, path.clone()));
        return;
    }
    for (k, (c, e)) in t.children().into_iter().zip(child_eps(t, sig)).enumerate() {
        path.push(k);
        occurrences(c, sign.by(e), sig, path, out);
        path.pop();
    }
}

fn side_occurrences(t: &Term, sign: Sign, sig: &Signature) -> Vec<(String, Sign, Vec<usize>)> {
    let mut out = Vec::new();
    occurrences(t, sign, sig, &mut Vec::new(), &mut out);
    out
}

/// Whether `t` (signed `sign`) has a leaf that is critical under `w`.
fn has_critical(t: &Term, sign: Sign, sig: &Signature, w: &InductiveWitness, only: Option<&str>) -> bool {
    side_occurrences(t, sign, sig).iter().any(|(v, s, _)| {
        only.map_or(true, |o| o == v) && w.vars.contains(v) && is_critical(*s, w.eps_of(v))
    })
}

/// A `+join` / `-meet` below skeleton nodes only, with a distributing parent.
fn find_distribution(t: &Term, sign: Sign, sig: &Signature, roles: bool) -> Option<(Vec<usize>, Option<Role>)> {
    type Hit = Option<(Vec<usize>, Option<Role>)>;
    fn go(t: &Term, sign: Sign, sig: &Signature, path: &mut Vec<usize>, root: &Term, top: Sign, roles: bool) -> Hit {
        if !is_skeleton(&node_classes(t, sign, sig).unwrap_or_default()) {
            return None;
        }
        for (k, (c, e)) in t.children().into_iter().zip(child_eps(t, sig)).enumerate() {
            path.push(k);
            let cs = sign.by(e);
            let junction = matches!((c, cs), (Term::Join(..), Sign::Plus) | (Term::Meet(..), Sign::Minus));
            let allowed = roles || !matches!(t, Term::Role(..));
            if junction && allowed && distribute_at(root, path, top, sig).is_ok() {
                let role = match t {
                    Term::Role(r, _) => Some(*r),
                    _ => None,
                };
                return Some((path.clone(), role));
            }
            if let Some(hit) = go(c, cs, sig, path, root, top, roles) {
                return Some(hit);
            }
            path.pop();
        }
        None
    }
    go(t, sign, sig, &mut Vec::new(), t, sign, roles)
}

fn first_path(t: &Term, v: &str, path: &mut Vec<usize>) -> bool {
    if matches!(t, Term::Var(x) if x == v) {
        return true;
    }
    for (k, c) in t.children().into_iter().enumerate() {
        path.push(k);
        if first_path(c, v, path) {
            return true;
        }
        path.pop();
    }
    false
}

/// Next preprocessing step: distribution, then splitting, then elimination
/// of variables occurring with one polarity. Role nodes distribute only
/// when `roles` is set.
fn next_pre(list: &[Inequality], sig: &Signature, roles: bool) -> Option<RuleApplication> {
    for (k, e) in list.iter().enumerate() {
        for (side, t, s) in [(Side::L, &e.lhs, Sign::Plus), (Side::R, &e.rhs, Sign::Minus)] {
            if let Some((path, role)) = find_distribution(t, s, sig, roles) {
                let rule = role.map_or(RuleId::DistributePre, RuleId::Dist);
                return Some(RuleApplication::new(rule, k, Some(side), path));
            }
        }
    }
    for (k, e) in list.iter().enumerate() {
        if matches!(e.lhs, Term::Join(..)) {
            return Some(RuleApplication::new(RuleId::Split, k, Some(Side::L), vec![]));
        }
        if matches!(e.rhs, Term::Meet(..)) {
            return Some(RuleApplication::new(RuleId::Split, k, Some(Side::R), vec![]));
        }
    }
    for (k, e) in list.iter().enumerate() {
        for v in e.vars() {
            use Polarity::*;
            let (pl, pr) = (polarity(&e.lhs, &v, sig), polarity(&e.rhs, &v, sig));
            let uniform = matches!((pl, pr), (Negative | Absent, Positive | Absent) | (Positive | Absent, Negative | Absent));
            if uniform {
                let mut path = Vec::new();
                let side = if first_path(&e.lhs, &v, &mut path) {
                    Side::L
                } else {
                    path.clear();
                    first_path(&e.rhs, &v, &mut path);
                    Side::R
                };
                return Some(RuleApplication::new(RuleId::MonotoneElim, k, Some(side), path));
            }
        }
    }
    None
}

/// Standalone preprocessing of one inequality; roles are treated as
/// abstract connectives and never distributed.
pub fn preprocess(ineq: &Inequality, sig: &Signature) -> Vec<Inequality> {
    let mut d = Derivation::new(ineq.clone(), Mode::Alba);
    let mut leaf = 0;
    while let Some(app) = next_pre(d.nodes[leaf].stage.ineqs(), sig, false) {
        match d.apply(sig, &RuleApplication { node: Some(leaf), ..app }) {
            Ok(ids) => leaf = ids[0],
            Err(_) => break,
        }
    }
    d.nodes[leaf].stage.ineqs().to_vec()
}

/// One system `#i0 <= lhs, rhs <= @m0` per preprocessed inequality.
pub fn first_approximation(list: &[Inequality]) -> Vec<System> {
    let mut d = Derivation::new(Inequality::new(Term::Top, Term::Top), Mode::Alba);
    d.nodes[0].stage = Stage::Pre(list.to_vec());
    let ids = d
        .apply(&Signature::new(), &RuleApplication::new(RuleId::FirstApprox, 0, None, vec![]))
        .expect("first approximation applies to any list");
    ids.into_iter()
        .map(|n| match &d.nodes[n].stage {
            Stage::Sys(s) => s.clone(),
            Stage::Pre(_) => unreachable!(),
        })
        .collect()
}

fn is_f_like(t: &Term, sig: &Signature) -> bool {
    match t {
        Term::App(f, a) => !a.is_empty() && sig.get(f).is_some_and(|d| d.family == Family::F),
        Term::Dot(op, _) => matches!(op, DotOp::Dia | DotOp::Lhd),
        Term::Role(r, _) => r.family() == Family::F,
        _ => false,
    }
}

fn is_g_like(t: &Term, sig: &Signature) -> bool {
    match t {
        Term::App(f, a) => !a.is_empty() && sig.get(f).is_some_and(|d| d.family == Family::G),
        Term::Dot(op, _) => matches!(op, DotOp::Box | DotOp::Rhd),
        Term::Role(r, _) => r.family() == Family::G,
        _ => false,
    }
}

fn approx_rule(t: &Term) -> RuleId {
    match t {
        Term::App(..) => RuleId::ApproxF,
        Term::Dot(op, _) => RuleId::ApproxDot(*op),
        Term::Role(r, _) => RuleId::Approx(*r),
        _ => unreachable!(),
    }
}

/// Approximation and splitting on the skeleton side of `Nom <= R` and
/// `L <= Conom` while they still hold critical occurrences.
fn phase_a(sys: &System, sig: &Signature, w: &InductiveWitness) -> Option<RuleApplication> {
    for (k, e) in sys.ineqs.iter().enumerate() {
        if matches!(e.lhs, Term::Nom(_)) && has_critical(&e.rhs, Sign::Plus, sig, w, None) {
            if matches!(e.rhs, Term::Meet(..)) {
                return Some(RuleApplication::new(RuleId::Split, k, Some(Side::R), vec![]));
            }
            if is_f_like(&e.rhs, sig) {
                return Some(RuleApplication::new(approx_rule(&e.rhs), k, Some(Side::R), vec![]));
            }
        }
        if matches!(e.rhs, Term::Conom(_)) && has_critical(&e.lhs, Sign::Minus, sig, w, None) {
            if matches!(e.lhs, Term::Join(..)) {
                return Some(RuleApplication::new(RuleId::Split, k, Some(Side::L), vec![]));
            }
            if is_g_like(&e.lhs, sig) {
                let rule = match approx_rule(&e.lhs) {
                    RuleId::ApproxF => RuleId::ApproxG,
                    r => r,
                };
                return Some(RuleApplication::new(rule, k, Some(Side::L), vec![]));
            }
        }
    }
    None
}

/// One step that moves a critical occurrence of `v` towards the root of its
/// side, or `Err` with the reason it cannot.
fn peel(k: usize, e: &Inequality, side: Side, path: &[usize], sig: &Signature) -> Result<RuleApplication, String> {
    let c = path[0];
    let at = |rule, p: Vec<usize>| RuleApplication::new(rule, k, Some(side), p);
    let t = match side {
        Side::L => &e.lhs,
        Side::R => &e.rhs,
    };
    let family = |f: &str| sig.get(f).map(|d| d.family);
    Ok(match (side, t) {
        (Side::R, Term::Meet(..)) | (Side::L, Term::Join(..)) => at(RuleId::Split, vec![]),
        (Side::R, Term::Join(..)) => at(RuleId::ResidJoin, vec![c]),
        (Side::L, Term::Meet(..)) => at(RuleId::ResidMeet, vec![c]),
        (Side::R, Term::App(f, _)) if family(f) == Some(Family::G) => at(RuleId::ResidG(c + 1), vec![]),
        (Side::L, Term::App(f, _)) if family(f) == Some(Family::F) => at(RuleId::ResidF(c + 1), vec![]),
        (Side::R, Term::Dot(op @ (DotOp::Box | DotOp::Rhd), _)) | (Side::L, Term::Dot(op @ (DotOp::Dia | DotOp::Lhd), _)) => {
            at(RuleId::AdjDot(*op), vec![])
        }
        (Side::R, Term::Role(r @ (Role::Sigma | Role::Rho), _)) | (Side::L, Term::Role(r @ (Role::Pi | Role::Lambda), _)) => {
            at(RuleId::Adj(*r), vec![])
        }
        _ => {
            return Err(format!(
                "no rule moves the critical occurrence out of `{}`",
                crate::classify::node_label(t)
            ))
        }
    })
}

/// Phase B: isolate the critical occurrences of the first remaining variable
/// in Ω order, then eliminate it.
fn phase_b(sys: &System, sig: &Signature, w: &InductiveWitness) -> Result<RuleApplication, String> {
    let present = sys.vars();
    let v = w
        .linear_order()
        .into_iter()
        .find(|v| present.contains(v))
        .ok_or_else(|| "a variable outside the witness remains".to_string())?;
    let eps = w.eps_of(&v);
    let in_s2 = |e: &Inequality| match eps {
        Eps::One => matches!(&e.rhs, Term::Var(x) if *x == v) && !e.lhs.has_var(&v),
        Eps::Partial => matches!(&e.lhs, Term::Var(x) if *x == v) && !e.rhs.has_var(&v),
    };
    let mut s2 = None;
    for (k, e) in sys.ineqs.iter().enumerate() {
        if in_s2(e) {
            s2.get_or_insert(k);
            continue;
        }
        for (side, t, s) in [(Side::L, &e.lhs, Sign::Minus), (Side::R, &e.rhs, Sign::Plus)] {
            let hit = side_occurrences(t, s, sig).into_iter().find(|(x, s, _)| *x == v && is_critical(*s, eps));
            if let Some((_, _, path)) = hit {
                if path.is_empty() {
                    return Err(format!("`{}` occurs critically on both sides of {}", v, print_inequality(e)));
                }
                return peel(k, e, side, &path, sig);
            }
        }
    }
    let (rule, side) = match eps {
        Eps::One => (RuleId::AckermannRight, Side::R),
        Eps::Partial => (RuleId::AckermannLeft, Side::L),
    };
    let (k, side, path) = match s2 {
        Some(k) => (k, side, vec![]),
        None => {
            // no critical occurrence: eliminate through any occurrence
            let k = sys.ineqs.iter().position(|e| e.has_var(&v)).unwrap();
            let e = &sys.ineqs[k];
            let mut path = Vec::new();
            if first_path(&e.lhs, &v, &mut path) {
                (k, Side::L, path)
            } else {
                path.clear();
                first_path(&e.rhs, &v, &mut path);
                (k, Side::R, path)
            }
        }
    };
    Ok(RuleApplication::new(rule, k, Some(side), path))
}

/// The input the automatic strategy reduces, with its witness.
fn working_input(ineq: &Inequality, sig: &Signature, mode: Mode) -> Result<(Inequality, InductiveWitness), String> {
    match mode {
        Mode::Alba => {
            let e = sig.expand_inequality(ineq);
            match is_inductive(&e, sig) {
                Ok(Some(w)) => Ok((e, w)),
                Ok(None) => Err("the input is not inductive".into()),
                Err(x) => Err(x.to_string()),
            }
        }
        Mode::AlbaE => {
            if let Ok(Some(w)) = is_inductive(ineq, sig) {
                return Ok((ineq.clone(), w));
            }
            let e = sig.expand_inequality(ineq);
            match is_meta_inductive(&e, sig) {
                Ok(Some((pre, w))) => Ok((pre.map(dots_to_roles), w)),
                Ok(None) => Err("the input is neither inductive nor meta-inductive".into()),
                Err(x) => Err(x.to_string()),
            }
        }
    }
}

fn run_auto(d: &mut Derivation, sig: &Signature) {
    let (input, w) = match working_input(&d.input, sig, d.mode) {
        Ok(x) => x,
        Err(reason) => {
            let vars = d.input.vars().into_iter().collect();
            d.conclude(Some(stuck(0, vars, vec![print_inequality(&d.input)], reason)));
            return;
        }
    };
    d.nodes[0].stage = Stage::Pre(vec![input]);
    d.nodes[0].witness = Some(Rc::new(w));

    let mut leaf = 0;
    let roles = d.mode == Mode::AlbaE;
    while let Some(app) = next_pre(d.nodes[leaf].stage.ineqs(), sig, roles) {
        match d.apply(sig, &RuleApplication { node: Some(leaf), ..app }) {
            Ok(ids) => leaf = ids[0],
            Err(e) => {
                d.conclude(Some(stuck(leaf, vec![], vec![], e.to_string())));
                return;
            }
        }
    }
    let pre = d.nodes[leaf].stage.ineqs().to_vec();
    let mut first = RuleApplication::new(RuleId::FirstApprox, 0, None, vec![]);
    first.node = Some(leaf);
    let ids = match d.apply(sig, &first) {
        Ok(ids) => ids,
        Err(e) => {
            d.conclude(Some(stuck(leaf, vec![], vec![], e.to_string())));
            return;
        }
    };
    for (id, e) in ids.iter().zip(&pre) {
        match is_inductive(e, sig) {
            Ok(Some(w)) => d.nodes[*id].witness = Some(Rc::new(w)),
            _ if e.is_pure() => {}
            _ => {
                let vars = e.vars().into_iter().collect();
                d.conclude(Some(stuck(*id, vars, vec![print_inequality(e)], "preprocessing lost inductiveness")));
                return;
            }
        }
    }

    for _ in 0..MAX_STEPS {
        let Some(&n) = d.open_leaves().first() else {
            d.conclude(None);
            return;
        };
        let Stage::Sys(sys) = d.nodes[n].stage.clone() else { unreachable!() };
        let w = d.nodes[n].witness.clone().expect("open systems carry a witness");
        let vars: Vec<String> = sys.vars().into_iter().collect();
        let blocking = || sys.ineqs.iter().filter(|i| !i.is_pure()).map(print_inequality).collect::<Vec<_>>();
        let next = match phase_a(&sys, sig, &w) {
            Some(a) => Ok(a),
            None => phase_b(&sys, sig, &w),
        };
        let app = match next {
            Ok(a) => RuleApplication { node: Some(n), ..a },
            Err(reason) => {
                d.conclude(Some(stuck(n, vars, blocking(), reason)));
                return;
            }
        };
        if let Err(e) = d.apply(sig, &app) {
            d.conclude(Some(stuck(n, vars, blocking(), e.to_string())));
            return;
        }
    }
    let n = d.open_leaves()[0];
    d.conclude(Some(stuck(n, vec![], vec![], format!("no result within {} steps", MAX_STEPS))));
}

/// Runs a derivation. Scripted steps apply to the leftmost open leaf; a
/// step that does not match is an error, whereas the automatic strategy
/// reports failure through the derivation status.
pub fn run_alba(ineq: &Inequality, sig: &Signature, mode: Mode, strategy: &Strategy) -> Result<Derivation, EngineError> {
    let mut d = Derivation::new(ineq.clone(), mode);
    match strategy {
        Strategy::Auto => run_auto(&mut d, sig),
        Strategy::Scripted(steps) => {
            if mode == Mode::Alba {
                d.nodes[0].stage = Stage::Pre(vec![sig.expand_inequality(ineq)]);
            }
            for s in steps {
                d.apply(sig, s)?;
            }
            d.conclude(None);
        }
    }
    Ok(d)
}
