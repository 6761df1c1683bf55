//! Random inequality generators shared by the integration tests.

#![allow(dead_code)]

use alba::signature::{ConnectiveDecl, DotOp, Eps, Family, Inequality, Signature, Term};
use rand::seq::SliceRandom;
use rand::Rng;

pub const VARS: [&str; 3] = ["p", "q", "r"];

/// Two connectives `h1`, `h2` with random family, arity 1 or 2 and
/// order-type.
pub fn random_signature<R: Rng>(rng: &mut R) -> Signature {
    let mut s = Signature::new();
    for name in ["h1", "h2"] {
        let family = if rng.gen_bool(0.5) { Family::F } else { Family::G };
        let arity = rng.gen_range(1..=2);
        let eps: Vec<Eps> = (0..arity).map(|_| if rng.gen_bool(0.7) { Eps::One } else { Eps::Partial }).collect();
        s.declare(ConnectiveDecl::new(name, family, &eps)).unwrap();
    }
    s
}

/// Random term of depth at most `depth` over the declared connectives of
/// `sig`, the lattice operations and, when `dots` is set, `.dia`/`.box`.
pub fn random_term<R: Rng>(sig: &Signature, depth: usize, dots: bool, rng: &mut R) -> Term {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..10) {
            0 => Term::Top,
            1 => Term::Bot,
            _ => Term::Var(VARS.choose(rng).unwrap().to_string()),
        };
    }
    let sub = |rng: &mut R| random_term(sig, depth - 1, dots, rng);
    let pick = rng.gen_range(0..10);
    match pick {
        0 => Term::Meet(Box::new(sub(rng)), Box::new(sub(rng))),
        1 => Term::Join(Box::new(sub(rng)), Box::new(sub(rng))),
        2 | 3 if dots => {
            let op = if pick == 2 { DotOp::Dia } else { DotOp::Box };
            Term::Dot(op, Box::new(sub(rng)))
        }
        _ => {
            let c = sig.connectives.choose(rng).unwrap();
            let args = (0..c.arity()).map(|_| sub(rng)).collect();
            Term::App(c.name.clone(), args)
        }
    }
}

/// Random inequality with at least one variable; each side has depth at
/// most `depth`.
pub fn random_inequality<R: Rng>(sig: &Signature, depth: usize, dots: bool, rng: &mut R) -> Inequality {
    loop {
        let i = Inequality::new(random_term(sig, depth, dots, rng), random_term(sig, depth, dots, rng));
        if !i.vars().is_empty() {
            return i;
        }
    }
}
