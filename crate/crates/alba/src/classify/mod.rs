//! Signed generation trees, Table-1 node classes and the Sahlqvist,
//! inductive and meta-inductive recognisers.

mod inductive;
mod meta;

pub use inductive::{is_inductive, is_sahlqvist, InductiveWitness};
pub use meta::{anti_substitute_candidates, dotted_roles, is_meta_inductive};

use crate::signature::{Eps, Family, Inequality, Layer, Role, Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn by(self, e: Eps) -> Sign {
        match e {
            Eps::One => self,
            Eps::Partial => self.flip(),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Positive,
    Negative,
    Both,
    Absent,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("`{0}` cannot occur in a DLE or DLE* inequality")]
    Layer(String),
    #[error("{0} variables exceed the search cap of 12")]
    TooManyVariables(usize),
}

/// Order-type of a connective or residual, or `None` for an undeclared name.
pub fn residual_order_type(sig: &Signature, f: &str, i: usize) -> Option<Vec<Eps>> {
    let d = sig.get(f)?;
    let e = &d.order_type.0;
    let ei = e[i - 1];
    Some(
        e.iter()
            .enumerate()
            .map(|(k, &ek)| match (k + 1 == i, ei) {
                (true, _) => ei,
                (false, Eps::One) => ek.flip(),
                (false, Eps::Partial) => ek,
            })
            .collect(),
    )
}

/// How each child inherits the sign of its parent.
pub fn child_eps(t: &Term, sig: &Signature) -> Vec<Eps> {
    use Eps::*;
    match t {
        Term::Var(_) | Term::Nom(_) | Term::Conom(_) | Term::Top | Term::Bot => vec![],
        Term::Meet(..) | Term::Join(..) => vec![One, One],
        Term::Imp(..) => vec![Partial, One],
        Term::Coimp(..) => vec![One, Partial],
        Term::App(f, args) => match sig.get(f) {
            Some(d) => d.order_type.0.clone(),
            None => vec![One; args.len()],
        },
        Term::Res(f, i, args) => residual_order_type(sig, f, *i).unwrap_or(vec![One; args.len()]),
        Term::Dot(op, _) => vec![op.eps()],
        Term::Role(r, _) | Term::Def(r, _) | Term::Adj(r, _) => vec![r.eps()],
    }
}

fn signs_of(t: &Term, v: &str, sign: Sign, sig: &Signature, pos: &mut bool, neg: &mut bool) {
    if let Term::Var(x) = t {
        if x == v {
            match sign {
                Sign::Plus => *pos = true,
                Sign::Minus => *neg = true,
            }
        }
        return;
    }
    for (c, e) in t.children().into_iter().zip(child_eps(t, sig)) {
        signs_of(c, v, sign.by(e), sig, pos, neg);
    }
}

/// Polarity of `v` in the positive signed tree of `t`.
pub fn polarity(t: &Term, v: &str, sig: &Signature) -> Polarity {
    let (mut pos, mut neg) = (false, false);
    signs_of(t, v, Sign::Plus, sig, &mut pos, &mut neg);
    match (pos, neg) {
        (true, false) => Polarity::Positive,
        (false, true) => Polarity::Negative,
        (true, true) => Polarity::Both,
        (false, false) => Polarity::Absent,
    }
}

/// Signed occurrences of every variable in `t` under sign `s`.
pub fn signed_leaves(t: &Term, s: Sign, sig: &Signature, out: &mut Vec<(String, Sign)>) {
    if let Term::Var(x) = t {
        out.push((x.clone(), s));
        return;
    }
    for (c, e) in t.children().into_iter().zip(child_eps(t, sig)) {
        signed_leaves(c, s.by(e), sig, out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeClass {
    DeltaAdjoint,
    Slr,
    Sra,
    Srr,
    Leaf,
    Constant,
}

/// Eligibility set of a node under Table 1. Role nodes are classified like
/// the dotted connective they stand for.
pub fn node_classes(t: &Term, sign: Sign, sig: &Signature) -> Result<Vec<NodeClass>, ClassifyError> {
    use NodeClass::*;
    use Sign::*;
    let unary_like = |fam: Family, s: Sign, n: usize| -> Vec<NodeClass> {
        match (fam, s) {
            (Family::F, Plus) | (Family::G, Minus) => vec![Slr],
            _ if n == 1 => vec![Sra],
            _ => vec![Srr],
        }
    };
    Ok(match t {
        Term::Var(_) => vec![Leaf],
        Term::Top | Term::Bot => vec![Constant],
        Term::Meet(..) => match sign {
            Plus => vec![DeltaAdjoint, Slr, Sra],
            Minus => vec![DeltaAdjoint, Srr],
        },
        Term::Join(..) => match sign {
            Plus => vec![DeltaAdjoint, Srr],
            Minus => vec![DeltaAdjoint, Slr, Sra],
        },
        Term::App(f, args) => {
            if args.is_empty() {
                vec![Constant]
            } else {
                let fam = sig.get(f).map(|d| d.family).ok_or_else(|| ClassifyError::Layer(f.clone()))?;
                unary_like(fam, sign, args.len())
            }
        }
        Term::Dot(op, _) if op.is_primitive() => unary_like(op.role().unwrap().family(), sign, 1),
        Term::Role(r, _) => unary_like(r.family(), sign, 1),
        other => return Err(ClassifyError::Layer(crate::signature::print_term(other))),
    })
}

pub fn is_skeleton(cs: &[NodeClass]) -> bool {
    cs.iter().any(|c| matches!(c, NodeClass::DeltaAdjoint | NodeClass::Slr))
}

pub fn is_pia(cs: &[NodeClass]) -> bool {
    cs.iter().any(|c| matches!(c, NodeClass::Sra | NodeClass::Srr))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedNode {
    pub term: Term,
    pub sign: Sign,
    pub classes: Vec<NodeClass>,
    pub children: Vec<SignedNode>,
}

pub fn signed_tree(t: &Term, sign: Sign, sig: &Signature) -> Result<SignedNode, ClassifyError> {
    if t.layer() > Layer::DleStar {
        return Err(ClassifyError::Layer(crate::signature::print_term(t)));
    }
    let classes = node_classes(t, sign, sig)?;
    let children = t
        .children()
        .into_iter()
        .zip(child_eps(t, sig))
        .map(|(c, e)| signed_tree(c, sign.by(e), sig))
        .collect::<Result<_, _>>()?;
    Ok(SignedNode { term: t.clone(), sign, classes, children })
}

/// Per-occurrence analysis of a branch from a variable leaf to the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchAnalysis {
    pub var: String,
    pub leaf_sign: Sign,
    /// 0 for the lhs tree `+s`, 1 for the rhs tree `-t`
    pub side: usize,
    /// child indices from the root of the side to the leaf
    pub path: Vec<usize>,
    /// labels of the inner nodes, leaf to root, with their signs
    pub nodes: Vec<(String, Sign)>,
    /// number of inner nodes (from the leaf) in P1
    pub p1_len: usize,
    pub is_good: bool,
    pub is_excellent: bool,
    pub is_skeleton: bool,
    pub is_definite: bool,
    pub srr_obligations: Vec<SrrObligation>,
}

/// An SRR node in P1 and the signed leaves of its off-branch arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SrrObligation {
    pub node: String,
    pub sibling_leaves: Vec<(String, Sign)>,
}

pub fn node_label(t: &Term) -> String {
    match t {
        Term::Meet(..) => "&".into(),
        Term::Join(..) => "|".into(),
        Term::App(f, _) => f.clone(),
        Term::Dot(op, _) => format!(".{}", op.name()),
        Term::Role(r, _) => r.name().into(),
        other => crate::signature::print_term(other),
    }
}

fn walk_branches(
    t: &Term,
    sign: Sign,
    side: usize,
    sig: &Signature,
    stack: &mut Vec<(Term, Sign, usize)>,
    out: &mut Vec<BranchAnalysis>,
) -> Result<(), ClassifyError> {
    if let Term::Var(v) = t {
        out.push(analyse(v, sign, side, stack, sig)?);
        return Ok(());
    }
    node_classes(t, sign, sig)?;
    for (k, (c, e)) in t.children().into_iter().zip(child_eps(t, sig)).enumerate() {
        stack.push((t.clone(), sign, k));
        walk_branches(c, sign.by(e), side, sig, stack, out)?;
        stack.pop();
    }
    Ok(())
}

fn analyse(
    v: &str,
    leaf_sign: Sign,
    side: usize,
    stack: &[(Term, Sign, usize)],
    sig: &Signature,
) -> Result<BranchAnalysis, ClassifyError> {
    let up: Vec<&(Term, Sign, usize)> = stack.iter().rev().collect();
    let classes: Vec<Vec<NodeClass>> =
        up.iter().map(|(t, s, _)| node_classes(t, *s, sig)).collect::<Result<_, _>>()?;
    let p1_len = classes.iter().rposition(|c| !is_skeleton(c)).map(|h| h + 1).unwrap_or(0);
    let is_good = classes[..p1_len].iter().all(|c| is_pia(c));
    let srr = |c: &Vec<NodeClass>| !c.contains(&NodeClass::Sra);
    let is_excellent = is_good && !classes[..p1_len].iter().any(srr);
    let is_definite = classes[p1_len..].iter().all(|c| c.contains(&NodeClass::Slr));
    let mut srr_obligations = Vec::new();
    if is_good {
        for (k, (t, s, taken)) in up[..p1_len].iter().enumerate() {
            if !srr(&classes[k]) {
                continue;
            }
            let mut leaves = Vec::new();
            for (j, (c, e)) in t.children().into_iter().zip(child_eps(t, sig)).enumerate() {
                if j != *taken {
                    signed_leaves(c, s.by(e), sig, &mut leaves);
                }
            }
            srr_obligations.push(SrrObligation { node: node_label(t), sibling_leaves: leaves });
        }
    }
    Ok(BranchAnalysis {
        var: v.to_string(),
        leaf_sign,
        side,
        path: stack.iter().map(|x| x.2).collect(),
        nodes: up.iter().map(|(t, s, _)| (node_label(t), *s)).collect(),
        p1_len,
        is_good,
        is_excellent,
        is_skeleton: p1_len == 0,
        is_definite,
        srr_obligations,
    })
}

/// Every branch of `+lhs` and `-rhs`.
pub fn analyze_branches(ineq: &Inequality, sig: &Signature) -> Result<Vec<BranchAnalysis>, ClassifyError> {
    let mut out = Vec::new();
    for (side, (t, s)) in [(&ineq.lhs, Sign::Plus), (&ineq.rhs, Sign::Minus)].into_iter().enumerate() {
        if t.layer() > Layer::DleStar {
            return Err(ClassifyError::Layer(crate::signature::print_term(t)));
        }
        walk_branches(t, s, side, sig, &mut Vec::new(), &mut out)?;
    }
    Ok(out)
}

/// Whether a signed leaf is critical for `eps` (given per variable).
pub fn is_critical(sign: Sign, e: Eps) -> bool {
    matches!((sign, e), (Sign::Plus, Eps::One) | (Sign::Minus, Eps::Partial))
}

/// The dotted connective or role a node stands for, if any.
pub fn as_role(t: &Term) -> Option<(Role, &Term)> {
    match t {
        Term::Role(r, a) => Some((*r, a)),
        Term::Dot(op, a) if op.is_primitive() => Some((op.role().unwrap(), a)),
        _ => None,
    }
}
