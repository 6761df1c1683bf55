use super::{Derivation, System};
use crate::classify::{child_eps, Sign};
use crate::signature::{DotOp, Eps, Family, Inequality, Role, Signature, Term};

/// +1 when a closed term needs this node positive, -1 when negative.
fn demand(t: &Term, sig: &Signature) -> i8 {
    match t {
        Term::Nom(_) | Term::Coimp(..) => 1,
        Term::Conom(_) | Term::Imp(..) => -1,
        Term::Res(f, i, _) => match sig.get(f) {
            Some(d) => match (d.family, d.order_type.0[*i - 1]) {
                (Family::F, Eps::Partial) | (Family::G, Eps::One) => 1,
                _ => -1,
            },
            None => 0,
        },
        Term::Adj(Role::Lambda | Role::Sigma, _) => 1,
        Term::Adj(Role::Rho | Role::Pi, _) => -1,
        Term::Dot(DotOp::BlackDia | DotOp::BlackLhd, _) => 1,
        Term::Dot(DotOp::BlackBox | DotOp::BlackRhd, _) => -1,
        _ => 0,
    }
}

fn audit(t: &Term, sign: Sign, want: Sign, sig: &Signature) -> bool {
    let ok = match demand(t, sig) {
        1 => sign == want,
        -1 => sign != want,
        _ => true,
    };
    ok && t.children().into_iter().zip(child_eps(t, sig)).all(|(c, e)| audit(c, sign.by(e), want, sig))
}

pub fn is_syntactically_closed(t: &Term, sig: &Signature) -> bool {
    audit(t, Sign::Plus, Sign::Plus, sig)
}

pub fn is_syntactically_open(t: &Term, sig: &Signature) -> bool {
    audit(t, Sign::Plus, Sign::Minus, sig)
}

/// Every adjoint occurrence has its paired side condition in the system.
pub fn check_topological_adequacy(s: &System) -> bool {
    let has = |i: Inequality| s.ineqs.contains(&i);
    let mut ok = true;
    for e in &s.ineqs {
        for t in [&e.lhs, &e.rhs] {
            t.walk(&mut |n| {
                if let Term::Adj(r, a) = n {
                    let a = (**a).clone();
                    let need = match r {
                        Role::Pi => Inequality::new(Term::Role(*r, Box::new(Term::Bot)), a),
                        Role::Sigma => Inequality::new(a, Term::Role(*r, Box::new(Term::Top))),
                        Role::Rho => Inequality::new(a, Term::Role(*r, Box::new(Term::Bot))),
                        Role::Lambda => Inequality::new(Term::Role(*r, Box::new(Term::Top)), a),
                    };
                    ok &= has(need);
                }
            });
        }
    }
    ok
}

/// Left sides closed and right sides open, on the inequalities that still
/// contain propositional variables.
pub fn check_compact_appropriate(s: &System, sig: &Signature) -> bool {
    s.ineqs
        .iter()
        .filter(|e| !e.is_pure())
        .all(|e| is_syntactically_closed(&e.lhs, sig) && is_syntactically_open(&e.rhs, sig))
}

/// No rule other than Ackermann rewrites a flagged side condition.
pub fn is_safe(d: &Derivation) -> bool {
    d.steps().into_iter().all(|(parent, app, _)| {
        if app.rule.is_ackermann() {
            return true;
        }
        let flags = d.nodes[parent].stage.flags();
        !flags.get(app.target.ineq).copied().unwrap_or(false)
    })
}
