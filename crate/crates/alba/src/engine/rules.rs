//! One function per rule family. Each rewrites a single stage into the
//! stages of the new child nodes.

use std::collections::BTreeSet;

use super::{EngineError, RuleApplication, RuleId, Side, Stage, System};
use crate::classify::{child_eps, polarity, Polarity, Sign};
use crate::signature::{
    big_join, big_meet, conom, dot, join, meet, nom, print_inequality, role, substitute_one, DotOp, Eps,
    Family, Inequality, Role, Signature, Term,
};

pub(crate) struct Fresh {
    pub counter: usize,
}

impl Fresh {
    fn next(&mut self, nominal: bool, avoid: &BTreeSet<Term>) -> Term {
        loop {
            let k = self.counter;
            self.counter += 1;
            let t = if nominal { nom(&format!("j{}", k)) } else { conom(&format!("n{}", k)) };
            if !avoid.contains(&t) {
                return t;
            }
        }
    }
}

pub(crate) struct Outcome {
    pub children: Vec<Stage>,
    pub principal: String,
    pub fresh: Vec<Term>,
}

fn mismatch(rule: RuleId, why: impl Into<String>) -> EngineError {
    EngineError::Mismatch { rule: rule.to_string(), why: why.into() }
}

fn side_of(e: &Inequality, s: Side) -> &Term {
    match s {
        Side::L => &e.lhs,
        Side::R => &e.rhs,
    }
}

/// Sign of the side root: in the preprocessing stage `s <= t` reads as
/// `+s`, `-t`; inside a system the left side is negative, the right positive.
fn root_sign(pre: bool, s: Side) -> Sign {
    match (pre, s) {
        (true, Side::L) | (false, Side::R) => Sign::Plus,
        _ => Sign::Minus,
    }
}

fn sign_at(t: &Term, path: &[usize], s: Sign, sig: &Signature) -> Sign {
    match path.split_first() {
        None => s,
        Some((&k, rest)) => {
            let e = child_eps(t, sig)[k];
            sign_at(t.children()[k], rest, s.by(e), sig)
        }
    }
}

/// Replaces inequality `k` with `first` in place and appends `extra`
/// (skipping ones already present).
fn rewrite_sys(sys: &System, k: usize, first: Vec<(Inequality, bool)>, extra: Vec<(Inequality, bool)>) -> System {
    let mut ineqs = Vec::new();
    let mut side = Vec::new();
    for (j, (i, f)) in sys.ineqs.iter().zip(&sys.side).enumerate() {
        if j == k {
            for (a, b) in &first {
                ineqs.push(a.clone());
                side.push(*b);
            }
        } else {
            ineqs.push(i.clone());
            side.push(*f);
        }
    }
    for (a, b) in extra {
        ineqs.push(a);
        side.push(b);
    }
    let mut out = System { ineqs, side, goal: sys.goal.clone() };
    out.dedup();
    out
}

fn rewrite_pre(list: &[Inequality], k: usize, first: Vec<Inequality>) -> Vec<Inequality> {
    let mut out = Vec::new();
    for (j, i) in list.iter().enumerate() {
        if j == k {
            for f in &first {
                if !out.contains(f) {
                    out.push(f.clone());
                }
            }
        } else if !out.contains(i) {
            out.push(i.clone());
        }
    }
    out
}

/// How a parent node maps a join or meet at child `c`: `Some(true)` when the
/// result is a join, `Some(false)` a meet, `None` when it does not distribute.
fn distributes(parent: &Term, c: usize, child_is_join: bool, sig: &Signature) -> Option<bool> {
    let fam_eps = match parent {
        Term::Meet(..) => return if child_is_join { Some(true) } else { None },
        Term::Join(..) => return if child_is_join { None } else { Some(false) },
        Term::App(f, _) => (sig.get(f)?.family, child_eps(parent, sig)[c]),
        Term::Dot(op, _) if op.is_primitive() => (op.role()?.family(), op.eps()),
        Term::Role(r, _) => (r.family(), r.eps()),
        _ => return None,
    };
    match (fam_eps, child_is_join) {
        ((Family::F, Eps::One), true) | ((Family::F, Eps::Partial), false) => Some(true),
        ((Family::G, Eps::One), false) | ((Family::G, Eps::Partial), true) => Some(false),
        _ => None,
    }
}

/// Rewrites `parent(.., a op b, ..)` at `path` (pointing at the junction).
pub(crate) fn distribute_at(
    t: &Term,
    path: &[usize],
    top_sign: Sign,
    sig: &Signature,
) -> Result<(Term, Term), String> {
    let (c, ppath) = path.split_last().ok_or("the target must be below a distributing node")?;
    let parent = t.at(ppath).ok_or("bad path")?;
    let junction = parent.children().get(*c).copied().ok_or("bad path")?.clone();
    let js = sign_at(t, path, top_sign, sig);
    let (a, b, is_join) = match (&junction, js) {
        (Term::Join(a, b), Sign::Plus) => (a, b, true),
        (Term::Meet(a, b), Sign::Minus) => (a, b, false),
        _ => return Err("the target is not a +join or a -meet".into()),
    };
    let to_join = distributes(parent, *c, is_join, sig).ok_or("the parent does not distribute over the target")?;
    let pa = parent.replace_at(&[*c], (**a).clone()).unwrap();
    let pb = parent.replace_at(&[*c], (**b).clone()).unwrap();
    let new = if to_join { join(pa, pb) } else { meet(pa, pb) };
    Ok((parent.clone(), t.replace_at(ppath, new).unwrap()))
}

fn pivot(e: &Inequality, app: &RuleApplication) -> Result<String, EngineError> {
    let s = app.target.side.ok_or_else(|| mismatch(app.rule, "a side is required"))?;
    match side_of(e, s).at(&app.target.path) {
        Some(Term::Var(v)) => Ok(v.clone()),
        _ => Err(mismatch(app.rule, "the target is not a variable occurrence")),
    }
}

pub(crate) fn apply_stage(
    stage: &Stage,
    app: &RuleApplication,
    sig: &Signature,
    fresh: &mut Fresh,
) -> Result<Outcome, EngineError> {
    let rule = app.rule;
    let ineqs = stage.ineqs();
    if rule == RuleId::FirstApprox {
        let Stage::Pre(list) = stage else {
            return Err(mismatch(rule, "first approximation is applied once, before reduction"));
        };
        let goal = Inequality::new(nom("i0"), conom("m0"));
        let children = list
            .iter()
            .map(|e| {
                Stage::Sys(System {
                    ineqs: vec![Inequality::new(nom("i0"), e.lhs.clone()), Inequality::new(e.rhs.clone(), conom("m0"))],
                    side: vec![false, false],
                    goal: goal.clone(),
                })
            })
            .collect();
        let principal = list.iter().map(print_inequality).collect::<Vec<_>>().join("; ");
        return Ok(Outcome { children, principal, fresh: vec![] });
    }
    let k = app.target.ineq;
    let e = ineqs.get(k).ok_or_else(|| EngineError::BadTarget(format!("inequality {}", k)))?.clone();
    let principal = print_inequality(&e);
    let done = |children: Vec<Stage>, fresh: Vec<Term>| Ok(Outcome { children, principal: principal.clone(), fresh });
    let pre = matches!(stage, Stage::Pre(_));

    match rule {
        RuleId::Split => {
            let parts = match (app.target.side, &e.lhs, &e.rhs) {
                (Some(Side::L), Term::Join(a, b), r) => {
                    vec![Inequality::new((**a).clone(), r.clone()), Inequality::new((**b).clone(), r.clone())]
                }
                (Some(Side::R), l, Term::Meet(a, b)) => {
                    vec![Inequality::new(l.clone(), (**a).clone()), Inequality::new(l.clone(), (**b).clone())]
                }
                _ => return Err(mismatch(rule, "expected a join on the left or a meet on the right")),
            };
            return done(vec![replace(stage, k, parts)], vec![]);
        }
        RuleId::DistributePre | RuleId::Dist(_) => {
            let s = app.target.side.ok_or_else(|| mismatch(rule, "a side is required"))?;
            let t = side_of(&e, s);
            let (parent, new) =
                distribute_at(t, &app.target.path, root_sign(pre, s), sig).map_err(|w| mismatch(rule, w))?;
            let ok = match (rule, &parent) {
                (RuleId::Dist(r), Term::Role(q, _)) => r == *q,
                (RuleId::Dist(_), _) => false,
                (_, Term::Role(..)) => false,
                _ => true,
            };
            if !ok {
                return Err(mismatch(rule, "the distributing node has the wrong kind"));
            }
            let ne = match s {
                Side::L => Inequality::new(new, e.rhs.clone()),
                Side::R => Inequality::new(e.lhs.clone(), new),
            };
            return done(vec![replace(stage, k, vec![ne])], vec![]);
        }
        RuleId::MonotoneElim => {
            if !pre {
                return Err(mismatch(rule, "only applied during preprocessing"));
            }
            let v = pivot(&e, app)?;
            let (pl, pr) = (polarity(&e.lhs, &v, sig), polarity(&e.rhs, &v, sig));
            use Polarity::*;
            let by = match (pl, pr) {
                (Negative | Absent, Positive | Absent) => Term::Bot,
                (Positive | Absent, Negative | Absent) => Term::Top,
                _ => return Err(mismatch(rule, format!("`{}` occurs with both polarities", v))),
            };
            let ne = e.map(|t| substitute_one(t, &v, &by));
            return done(vec![replace(stage, k, vec![ne])], vec![]);
        }
        RuleId::Rewrite(r) => {
            let s = app.target.side.ok_or_else(|| mismatch(rule, "a side is required"))?;
            let t = side_of(&e, s);
            let arg = match t.at(&app.target.path) {
                Some(Term::Role(q, a)) if *q == r => (**a).clone(),
                _ => return Err(mismatch(rule, format!("expected {}(..) at the target", r.name()))),
            };
            let def = |a: Term| Term::Def(r, Box::new(a));
            let new = match r {
                Role::Pi => join(role(r, Term::Bot), def(arg)),
                Role::Sigma => meet(role(r, Term::Top), def(arg)),
                Role::Lambda => join(role(r, Term::Top), def(arg)),
                Role::Rho => meet(role(r, Term::Bot), def(arg)),
            };
            let nt = t.replace_at(&app.target.path, new).unwrap();
            let ne = match s {
                Side::L => Inequality::new(nt, e.rhs.clone()),
                Side::R => Inequality::new(e.lhs.clone(), nt),
            };
            return done(vec![replace(stage, k, vec![ne])], vec![]);
        }
        _ => {}
    }

    let Stage::Sys(sys) = stage else {
        return Err(mismatch(rule, "reduction rules apply after first approximation"));
    };
    let flag = sys.side[k];
    let (l, r) = (&e.lhs, &e.rhs);
    let ineq = |a: Term, b: Term| Inequality::new(a, b);
    let root_only = || -> Result<(), EngineError> {
        if app.target.path.is_empty() && app.target.side.is_some() {
            Ok(())
        } else {
            Err(mismatch(rule, "the target must be the root of a side"))
        }
    };
    let avoid = sys.names();
    let one = |x: Inequality| (x, flag);

    let sys_out = |first: Vec<(Inequality, bool)>, extra: Vec<(Inequality, bool)>| Stage::Sys(rewrite_sys(sys, k, first, extra));

    match rule {
        RuleId::ResidF(h) | RuleId::ResidG(h) => {
            root_only()?;
            let is_f = matches!(rule, RuleId::ResidF(_));
            let (want, t, chi) = if is_f { (Side::L, l, r) } else { (Side::R, r, l) };
            if app.target.side != Some(want) {
                return Err(mismatch(rule, "wrong side"));
            }
            let Term::App(f, args) = t else {
                return Err(mismatch(rule, "expected a connective application"));
            };
            let d = sig.get(f).ok_or_else(|| mismatch(rule, format!("unknown connective {}", f)))?;
            let fam_ok = (d.family == Family::F) == is_f;
            if !fam_ok || h == 0 || h > d.arity() {
                return Err(mismatch(rule, "family or coordinate does not match"));
            }
            let mut rargs = args.clone();
            rargs[h - 1] = chi.clone();
            let res = Term::Res(f.clone(), h, rargs);
            let psi = args[h - 1].clone();
            let eh = d.order_type.0[h - 1];
            let new = match (is_f, eh) {
                (true, Eps::One) | (false, Eps::Partial) => ineq(psi, res),
                _ => ineq(res, psi),
            };
            done(vec![sys_out(vec![one(new)], vec![])], vec![])
        }
        RuleId::ResidJoin | RuleId::ResidMeet => {
            let want = if rule == RuleId::ResidJoin { Side::R } else { Side::L };
            let c = match app.target.path.as_slice() {
                [c] if *c < 2 && app.target.side == Some(want) => *c,
                _ => return Err(mismatch(rule, "the target must be a child of the root")),
            };
            let new = match (rule, l, r) {
                (RuleId::ResidJoin, chi, Term::Join(a, b)) => {
                    let (d, o) = if c == 0 { (a, b) } else { (b, a) };
                    ineq(Term::Coimp(Box::new(chi.clone()), o.clone()), (**d).clone())
                }
                (RuleId::ResidMeet, Term::Meet(a, b), chi) => {
                    let (d, o) = if c == 0 { (a, b) } else { (b, a) };
                    ineq((**d).clone(), Term::Imp(o.clone(), Box::new(chi.clone())))
                }
                _ => return Err(mismatch(rule, "expected a join on the right or a meet on the left")),
            };
            done(vec![sys_out(vec![one(new)], vec![])], vec![])
        }
        RuleId::AdjDot(op) => {
            root_only()?;
            let new = match (op, app.target.side, l, r) {
                (DotOp::Dia, Some(Side::L), Term::Dot(DotOp::Dia, phi), psi) => ineq((**phi).clone(), dot(DotOp::BlackBox, psi.clone())),
                (DotOp::Box, Some(Side::R), phi, Term::Dot(DotOp::Box, psi)) => ineq(dot(DotOp::BlackDia, phi.clone()), (**psi).clone()),
                (DotOp::Lhd, Some(Side::L), Term::Dot(DotOp::Lhd, phi), psi) => ineq(dot(DotOp::BlackLhd, psi.clone()), (**phi).clone()),
                (DotOp::Rhd, Some(Side::R), phi, Term::Dot(DotOp::Rhd, psi)) => ineq((**psi).clone(), dot(DotOp::BlackRhd, phi.clone())),
                _ => return Err(mismatch(rule, "connective or side does not match")),
            };
            done(vec![sys_out(vec![one(new)], vec![])], vec![])
        }
        RuleId::Adj(ro) => {
            root_only()?;
            let adj = |t: Term| Term::Adj(ro, Box::new(t));
            let (side_c, main) = match (ro, app.target.side, l, r) {
                (Role::Pi, Some(Side::L), Term::Role(Role::Pi, phi), psi) => {
                    (ineq(role(ro, Term::Bot), psi.clone()), ineq((**phi).clone(), adj(psi.clone())))
                }
                (Role::Sigma, Some(Side::R), phi, Term::Role(Role::Sigma, psi)) => {
                    (ineq(phi.clone(), role(ro, Term::Top)), ineq(adj(phi.clone()), (**psi).clone()))
                }
                (Role::Lambda, Some(Side::L), Term::Role(Role::Lambda, phi), psi) => {
                    (ineq(role(ro, Term::Top), psi.clone()), ineq(adj(psi.clone()), (**phi).clone()))
                }
                (Role::Rho, Some(Side::R), phi, Term::Role(Role::Rho, psi)) => {
                    (ineq(phi.clone(), role(ro, Term::Bot)), ineq((**psi).clone(), adj(phi.clone())))
                }
                _ => return Err(mismatch(rule, "role or side does not match")),
            };
            done(vec![sys_out(vec![one(main)], vec![(side_c, true)])], vec![])
        }
        RuleId::ApproxF | RuleId::ApproxG => {
            root_only()?;
            let is_f = rule == RuleId::ApproxF;
            let (want, t, outer) = if is_f { (Side::R, r, l) } else { (Side::L, l, r) };
            let outer_ok = if is_f { matches!(outer, Term::Nom(_)) } else { matches!(outer, Term::Conom(_)) };
            if app.target.side != Some(want) || !outer_ok {
                return Err(mismatch(rule, "expected i <= f(..) or g(..) <= m"));
            }
            let Term::App(f, args) = t else {
                return Err(mismatch(rule, "expected a connective application"));
            };
            let d = sig.get(f).ok_or_else(|| mismatch(rule, format!("unknown connective {}", f)))?;
            if (d.family == Family::F) != is_f || d.arity() == 0 {
                return Err(mismatch(rule, "wrong family, or a constant"));
            }
            let mut avoid = avoid.clone();
            let mut new_args = Vec::new();
            let mut extra = Vec::new();
            let mut made = Vec::new();
            for (psi, &ek) in args.iter().zip(&d.order_type.0) {
                // f: 1-coordinates get nominals; g: 1-coordinates get conominals
                let nominal = (ek == Eps::One) == is_f;
                let x = fresh.next(nominal, &avoid);
                avoid.insert(x.clone());
                made.push(x.clone());
                new_args.push(x.clone());
                extra.push((if nominal { ineq(x, psi.clone()) } else { ineq(psi.clone(), x) }, false));
            }
            let app_t = Term::App(f.clone(), new_args);
            let first = if is_f { ineq(outer.clone(), app_t) } else { ineq(app_t, outer.clone()) };
            done(vec![sys_out(vec![one(first)], extra)], made)
        }
        RuleId::ApproxDot(op) => {
            root_only()?;
            let new = match (op, app.target.side, l, r) {
                (DotOp::Dia, Some(Side::R), Term::Nom(_), Term::Dot(DotOp::Dia, phi)) => {
                    let j = fresh.next(true, &avoid);
                    (ineq(l.clone(), dot(op, j.clone())), ineq(j.clone(), (**phi).clone()), j)
                }
                (DotOp::Box, Some(Side::L), Term::Dot(DotOp::Box, phi), Term::Conom(_)) => {
                    let n = fresh.next(false, &avoid);
                    (ineq(dot(op, n.clone()), r.clone()), ineq((**phi).clone(), n.clone()), n)
                }
                (DotOp::Lhd, Some(Side::R), Term::Nom(_), Term::Dot(DotOp::Lhd, phi)) => {
                    let n = fresh.next(false, &avoid);
                    (ineq(l.clone(), dot(op, n.clone())), ineq((**phi).clone(), n.clone()), n)
                }
                (DotOp::Rhd, Some(Side::L), Term::Dot(DotOp::Rhd, phi), Term::Conom(_)) => {
                    let j = fresh.next(true, &avoid);
                    (ineq(dot(op, j.clone()), r.clone()), ineq(j.clone(), (**phi).clone()), j)
                }
                _ => return Err(mismatch(rule, "connective, side or outer (co)nominal does not match")),
            };
            done(vec![sys_out(vec![one(new.0)], vec![(new.1, false)])], vec![new.2])
        }
        RuleId::Approx(ro) => {
            root_only()?;
            let def = |t: Term| Term::Def(ro, Box::new(t));
            let (a, b, extra, x) = match (ro, app.target.side, l, r) {
                (Role::Pi, Some(Side::R), Term::Nom(_), Term::Role(Role::Pi, psi)) => {
                    let j = fresh.next(true, &avoid);
                    (ineq(l.clone(), role(ro, Term::Bot)), ineq(l.clone(), def(j.clone())), ineq(j.clone(), (**psi).clone()), j)
                }
                (Role::Sigma, Some(Side::L), Term::Role(Role::Sigma, psi), Term::Conom(_)) => {
                    let n = fresh.next(false, &avoid);
                    (ineq(role(ro, Term::Top), r.clone()), ineq(def(n.clone()), r.clone()), ineq((**psi).clone(), n.clone()), n)
                }
                (Role::Lambda, Some(Side::R), Term::Nom(_), Term::Role(Role::Lambda, psi)) => {
                    let n = fresh.next(false, &avoid);
                    (ineq(l.clone(), role(ro, Term::Top)), ineq(l.clone(), def(n.clone())), ineq((**psi).clone(), n.clone()), n)
                }
                (Role::Rho, Some(Side::L), Term::Role(Role::Rho, psi), Term::Conom(_)) => {
                    let j = fresh.next(true, &avoid);
                    (ineq(role(ro, Term::Bot), r.clone()), ineq(def(j.clone()), r.clone()), ineq(j.clone(), (**psi).clone()), j)
                }
                _ => return Err(mismatch(rule, "role, side or outer (co)nominal does not match")),
            };
            let ca = sys_out(vec![(a, true)], vec![]);
            let cb = sys_out(vec![one(b)], vec![(extra, false)]);
            done(vec![ca, cb], vec![x])
        }
        RuleId::AckermannRight | RuleId::AckermannLeft => {
            let v = pivot(&e, app)?;
            let right = rule == RuleId::AckermannRight;
            let mut alphas = Vec::new();
            let mut rest = Vec::new();
            for (i, f) in sys.ineqs.iter().zip(&sys.side) {
                let s2 = if right {
                    matches!(&i.rhs, Term::Var(x) if *x == v) && !i.lhs.has_var(&v)
                } else {
                    matches!(&i.lhs, Term::Var(x) if *x == v) && !i.rhs.has_var(&v)
                };
                if s2 {
                    alphas.push(if right { i.lhs.clone() } else { i.rhs.clone() });
                    continue;
                }
                if i.has_var(&v) {
                    let (pl, pr) = (polarity(&i.lhs, &v, sig), polarity(&i.rhs, &v, sig));
                    use Polarity::*;
                    let ok = if right {
                        matches!(pl, Positive | Absent) && matches!(pr, Negative | Absent)
                    } else {
                        matches!(pl, Negative | Absent) && matches!(pr, Positive | Absent)
                    };
                    if !ok {
                        return Err(EngineError::AckermannShape(format!(
                            "`{}` occurs with the wrong polarity in {}",
                            v,
                            print_inequality(i)
                        )));
                    }
                }
                rest.push((i.clone(), *f));
            }
            let by = if right { big_join(alphas) } else { big_meet(alphas) };
            let mut out = System { ineqs: vec![], side: vec![], goal: sys.goal.clone() };
            for (i, f) in rest {
                out.ineqs.push(i.map(|t| substitute_one(t, &v, &by)));
                out.side.push(f);
            }
            out.dedup();
            done(vec![Stage::Sys(out)], vec![])
        }
        _ => Err(mismatch(rule, "not applicable here")),
    }
}

fn replace(stage: &Stage, k: usize, parts: Vec<Inequality>) -> Stage {
    match stage {
        Stage::Pre(list) => Stage::Pre(rewrite_pre(list, k, parts)),
        Stage::Sys(sys) => {
            let f = sys.side[k];
            Stage::Sys(rewrite_sys(sys, k, parts.into_iter().map(|p| (p, f)).collect(), vec![]))
        }
    }
}
