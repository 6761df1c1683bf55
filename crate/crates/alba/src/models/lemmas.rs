use std::fmt;

use super::eval::{EvalError, Evaluator};
use super::check::role_axiom_holds;
use super::{FiniteDLE, Lattice};
use crate::signature::{Role, Signature};

/// Raw outcomes of the identities about one role and its defined map.
/// `None` means the clause holds; otherwise a witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoleLemmas {
    pub role: Role,
    /// the role's axiom (additivity for π)
    pub axiom: bool,
    /// defined map preserves the empty and binary joins (meets for σ, ρ)
    pub complete: Option<String>,
    /// defined map below π (above σ, ...)
    pub bounded: Option<String>,
    /// defined map agrees with the role on the irreducibles it ranges over
    pub irreducible: Option<String>,
    /// defined map equals its relational description
    pub relational: Option<String>,
    /// `π(u) = π(⊥) ∨ Dia(u)` and duals, for all u
    pub identity: Option<String>,
    /// the pure condition C, e.g. `∀m: π(⊥) ≤ m ⇒ π(bsq m) ≤ m`
    pub pseudo: Option<String>,
    pub adjunction: Option<String>,
}

impl RoleLemmas {
    /// Names of the clauses that are violated. The identity is only
    /// required under the axiom; C must agree with the axiom.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let always = [
            ("complete", &self.complete),
            ("bounded", &self.bounded),
            ("irreducible", &self.irreducible),
            ("relational", &self.relational),
            ("adjunction", &self.adjunction),
        ];
        for (name, w) in always {
            if w.is_some() {
                out.push(name);
            }
        }
        if self.axiom && self.identity.is_some() {
            out.push("identity");
        }
        if self.axiom != self.pseudo.is_none() {
            out.push("pseudo");
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LemmaReport {
    /// every element is the join of J∞ below it and the meet of M∞ above it
    pub dense: bool,
    pub roles: Vec<RoleLemmas>,
}

impl LemmaReport {
    pub fn ok(&self) -> bool {
        self.dense && self.roles.iter().all(|r| r.failures().is_empty())
    }
}

impl fmt::Display for LemmaReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dense: {}", if self.dense { "ok" } else { "FAIL" })?;
        for r in &self.roles {
            writeln!(f, "{}: axiom={}", r.role.name(), r.axiom)?;
            let rows = [
                ("complete", &r.complete),
                ("bounded", &r.bounded),
                ("irreducible", &r.irreducible),
                ("relational", &r.relational),
                ("identity", &r.identity),
                ("pseudo", &r.pseudo),
                ("adjunction", &r.adjunction),
            ];
            let bad = r.failures();
            for (name, w) in rows {
                let status = if bad.contains(&name) { "FAIL" } else { "ok" };
                match w {
                    None => writeln!(f, "  {name}: holds ({status})")?,
                    Some(w) => writeln!(f, "  {name}: fails at {w} ({status})")?,
                }
            }
        }
        Ok(())
    }
}

fn first<I: IntoIterator<Item = usize>>(it: I, mut bad: impl FnMut(usize) -> bool) -> Option<usize> {
    it.into_iter().find(|&x| bad(x))
}

fn role_lemmas(ev: &Evaluator, r: Role) -> Result<RoleLemmas, EvalError> {
    let l: &Lattice = &ev.m.lat;
    let (f, d, a) = (ev.role_table(r)?, ev.def_table(r)?, ev.adj_table(r)?);
    let join_out = matches!(r, Role::Pi | Role::Lambda);
    let n = l.size();
    let sh = |u: usize| l.show(u);
    // input side: joins for π and ρ, meets for σ and λ
    let join_in = matches!(r, Role::Pi | Role::Rho);
    let (in_unit, in_op): (usize, fn(&Lattice, usize, usize) -> usize) =
        if join_in { (l.bot(), Lattice::join) } else { (l.top(), Lattice::meet) };
    let (out_unit, out_op): (usize, fn(&Lattice, usize, usize) -> usize) =
        if join_out { (l.bot(), Lattice::join) } else { (l.top(), Lattice::meet) };
    // `x ≤ y` read in the output's direction
    let below = |x: usize, y: usize| if join_out { l.leq(x, y) } else { l.leq(y, x) };
    // irreducibles the defined map ranges over, with the matching order test
    let ranges: &[usize] = if join_in { &l.jinf } else { &l.minf };
    let covers = |k: usize, u: usize| if join_in { l.leq(k, u) } else { l.leq(u, k) };

    let complete = if d[in_unit] != out_unit {
        Some(format!("unit {} maps to {}", sh(in_unit), sh(d[in_unit])))
    } else {
        (0..n)
            .flat_map(|x| (0..n).map(move |y| (x, y)))
            .find(|&(x, y)| d[in_op(l, x, y)] != out_op(l, d[x], d[y]))
            .map(|(x, y)| format!("{} and {}", sh(x), sh(y)))
    };
    let bounded = first(0..n, |u| !below(d[u], f[u])).map(sh);
    let irreducible = first(ranges.iter().copied(), |k| d[k] != f[k]).map(sh);
    let out_irr: &[usize] = if join_out { &l.jinf } else { &l.minf };
    let relational = first(0..n, |u| {
        let ks = out_irr.iter().copied().filter(|&k| ranges.iter().any(|&i| covers(i, u) && below(k, f[i])));
        let v = if join_out { l.big_join(ks) } else { l.big_meet(ks) };
        v != d[u]
    })
    .map(sh);
    let identity = first(0..n, |u| f[u] != out_op(l, f[in_unit], d[u])).map(sh);
    // C ranges over the irreducibles on the output side's other end
    let c_range: &[usize] = if join_out { &l.minf } else { &l.jinf };
    let pseudo = first(c_range.iter().copied(), |k| below(f[in_unit], k) && !below(f[a[k]], k)).map(sh);
    let adjunction = (0..n)
        .flat_map(|u| (0..n).map(move |w| (u, w)))
        .find(|&(u, w)| {
            let (lhs, rhs) = match r {
                Role::Pi => (l.leq(d[u], w), l.leq(u, a[w])),
                Role::Sigma => (l.leq(a[u], w), l.leq(u, d[w])),
                Role::Lambda => (l.leq(d[u], w), l.leq(a[w], u)),
                Role::Rho => (l.leq(u, d[w]), l.leq(w, a[u])),
            };
            lhs != rhs
        })
        .map(|(u, w)| format!("{} and {}", sh(u), sh(w)));
    Ok(RoleLemmas {
        role: r,
        axiom: role_axiom_holds(ev, r)?,
        complete,
        bounded,
        irreducible,
        relational,
        identity,
        pseudo,
        adjunction,
    })
}

/// Runs every identity for each registered role of `sig` on `m`.
pub fn check_lemma_suite(m: &FiniteDLE, sig: &Signature) -> Result<LemmaReport, EvalError> {
    let ev = Evaluator::new(m, sig);
    let l = &m.lat;
    let dense = (0..l.size()).all(|u| {
        l.big_join(l.jinf.iter().copied().filter(|&j| l.leq(j, u))) == u
            && l.big_meet(l.minf.iter().copied().filter(|&k| l.leq(u, k))) == u
    });
    let mut roles = Vec::new();
    for r in sig.registered.keys() {
        roles.push(role_lemmas(&ev, *r)?);
    }
    Ok(LemmaReport { dense, roles })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{relational_modal, relational_op, Poset};
    use crate::signature::{parse_signature, Eps, Family};

    #[test]
    fn identity_role_satisfies_everything() {
        let s = parse_signature("f dia 1 (1); g box 1 (1)\nterm pi = p\nterm sigma = p").unwrap();
        for p in [Poset::chain(3), Poset::antichain(2), Poset::from_pairs(3, &[(0, 1), (0, 2)]).unwrap()] {
            let m = relational_modal(&p, &[]);
            let r = check_lemma_suite(&m, &s).unwrap();
            assert!(r.ok(), "{}", r);
            assert!(r.roles.iter().all(|x| x.axiom && x.identity.is_none() && x.pseudo.is_none()));
        }
    }

    #[test]
    fn non_additive_pi_breaks_identity_and_pseudo() {
        let s = parse_signature("f h 2 (1,1)\nterm pi = h(p, p)").unwrap();
        let lat = Lattice::new(Poset::antichain(2));
        let h = relational_op(&lat, "h", Family::F, &[Eps::One, Eps::One], &[vec![0, 0, 1]]);
        let m = FiniteDLE::new_unchecked(lat, vec![h], vec![]);
        let r = check_lemma_suite(&m, &s).unwrap();
        let pi = &r.roles[0];
        assert!(!pi.axiom);
        assert!(pi.identity.is_some() && pi.pseudo.is_some());
        assert!(r.ok(), "{}", r);
    }

    #[test]
    fn antitone_roles() {
        let s = parse_signature("f dia 1 (1); g box 1 (1); f l 1 (d); g r 1 (d)\nterm lambda = l(box(p))\nterm rho = r(dia(p))").unwrap();
        let p = Poset::from_pairs(3, &[(0, 1)]).unwrap();
        let lat = Lattice::new(p.clone());
        let rel = [(0, 1), (1, 2), (2, 2)];
        let ops = vec![
            crate::models::diamond(&lat, "dia", &rel),
            crate::models::boxop(&lat, "box", &rel),
            relational_op(&lat, "l", Family::F, &[Eps::Partial], &[vec![0, 1], vec![2, 0]]),
            relational_op(&lat, "r", Family::G, &[Eps::Partial], &[vec![1, 2], vec![2, 2]]),
        ];
        let m = FiniteDLE::new_unchecked(lat, ops, vec![]);
        let r = check_lemma_suite(&m, &s).unwrap();
        assert!(r.ok(), "{}", r);
    }
}
