//! Signatures, the layered term language and inequalities.

mod parse;
mod print;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

pub use parse::{parse_inequality, parse_signature, parse_term, ParseError};
pub use print::{print_inequality, print_term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Eps {
    One,
    Partial,
}

impl Eps {
    pub fn flip(self) -> Eps {
        match self {
            Eps::One => Eps::Partial,
            Eps::Partial => Eps::One,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Eps::One => "1",
            Eps::Partial => "d",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OrderType(pub Vec<Eps>);

impl OrderType {
    pub fn opposite(&self) -> OrderType {
        OrderType(self.0.iter().map(|e| e.flip()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for OrderType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = self.0.iter().map(|e| e.symbol()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    F,
    G,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectiveDecl {
    pub name: String,
    pub family: Family,
    pub order_type: OrderType,
}

impl ConnectiveDecl {
    pub fn new(name: &str, family: Family, eps: &[Eps]) -> Self {
        ConnectiveDecl { name: name.to_string(), family, order_type: OrderType(eps.to_vec()) }
    }

    pub fn arity(&self) -> usize {
        self.order_type.len()
    }
}

/// Roles of the registered unary terms. Each role fixes its defined
/// modality and that modality's adjoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Pi,
    Sigma,
    Lambda,
    Rho,
}

impl Role {
    pub const ALL: [Role; 4] = [Role::Pi, Role::Sigma, Role::Lambda, Role::Rho];

    pub fn name(self) -> &'static str {
        match self {
            Role::Pi => "pi",
            Role::Sigma => "sigma",
            Role::Lambda => "lambda",
            Role::Rho => "rho",
        }
    }

    pub fn from_name(s: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == s)
    }

    /// Name of the defined modality: `Dia`, `Box`, `Lhd`, `Rhd`.
    pub fn def_name(self) -> &'static str {
        match self {
            Role::Pi => "Dia",
            Role::Sigma => "Box",
            Role::Lambda => "Lhd",
            Role::Rho => "Rhd",
        }
    }

    /// Name of the adjoint of the defined modality.
    pub fn adj_name(self) -> &'static str {
        match self {
            Role::Pi => "bsq",
            Role::Sigma => "bdia",
            Role::Lambda => "blhd",
            Role::Rho => "brhd",
        }
    }

    /// The dotted DLE* connective this role stands in for.
    pub fn dot(self) -> DotOp {
        match self {
            Role::Pi => DotOp::Dia,
            Role::Sigma => DotOp::Box,
            Role::Lambda => DotOp::Lhd,
            Role::Rho => DotOp::Rhd,
        }
    }

    /// pi and sigma are monotone, lambda and rho antitone.
    pub fn eps(self) -> Eps {
        match self {
            Role::Pi | Role::Sigma => Eps::One,
            Role::Lambda | Role::Rho => Eps::Partial,
        }
    }

    /// pi and lambda behave like f-connectives, sigma and rho like g-connectives.
    pub fn family(self) -> Family {
        match self {
            Role::Pi | Role::Lambda => Family::F,
            Role::Sigma | Role::Rho => Family::G,
        }
    }
}

/// DLE* connectives and their adjoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DotOp {
    Dia,
    Box,
    Lhd,
    Rhd,
    /// right adjoint of `Dia`
    BlackBox,
    /// left adjoint of `Box`
    BlackDia,
    /// Galois adjoint of `Lhd`
    BlackLhd,
    /// Galois adjoint of `Rhd`
    BlackRhd,
}

impl DotOp {
    pub const ALL: [DotOp; 8] = [
        DotOp::Dia,
        DotOp::Box,
        DotOp::Lhd,
        DotOp::Rhd,
        DotOp::BlackBox,
        DotOp::BlackDia,
        DotOp::BlackLhd,
        DotOp::BlackRhd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DotOp::Dia => "dia",
            DotOp::Box => "box",
            DotOp::Lhd => "lhd",
            DotOp::Rhd => "rhd",
            DotOp::BlackBox => "bbox",
            DotOp::BlackDia => "bdia",
            DotOp::BlackLhd => "blhd",
            DotOp::BlackRhd => "brhd",
        }
    }

    pub fn from_name(s: &str) -> Option<DotOp> {
        DotOp::ALL.into_iter().find(|d| d.name() == s)
    }

    pub fn is_primitive(self) -> bool {
        matches!(self, DotOp::Dia | DotOp::Box | DotOp::Lhd | DotOp::Rhd)
    }

    pub fn eps(self) -> Eps {
        match self {
            DotOp::Dia | DotOp::Box | DotOp::BlackBox | DotOp::BlackDia => Eps::One,
            _ => Eps::Partial,
        }
    }

    pub fn role(self) -> Option<Role> {
        match self {
            DotOp::Dia => Some(Role::Pi),
            DotOp::Box => Some(Role::Sigma),
            DotOp::Lhd => Some(Role::Lambda),
            DotOp::Rhd => Some(Role::Rho),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Layer {
    Dle,
    DleStar,
    DlePlus,
    DlePP,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    Nom(String),
    Conom(String),
    Top,
    Bot,
    Meet(Box<Term>, Box<Term>),
    Join(Box<Term>, Box<Term>),
    /// residual of meet: `a -> b`
    Imp(Box<Term>, Box<Term>),
    /// residual of join: `a -. b`
    Coimp(Box<Term>, Box<Term>),
    App(String, Vec<Term>),
    /// `res(f,i)(args)`, coordinate `i` is 1-based
    Res(String, usize, Vec<Term>),
    Dot(DotOp, Box<Term>),
    /// abbreviation of the registered term of the role applied to the argument
    Role(Role, Box<Term>),
    Def(Role, Box<Term>),
    Adj(Role, Box<Term>),
}

pub fn var(s: &str) -> Term {
    Term::Var(s.to_string())
}

pub fn nom(s: &str) -> Term {
    Term::Nom(s.to_string())
}

pub fn conom(s: &str) -> Term {
    Term::Conom(s.to_string())
}

pub fn app(f: &str, args: Vec<Term>) -> Term {
    Term::App(f.to_string(), args)
}

pub fn meet(a: Term, b: Term) -> Term {
    Term::Meet(Box::new(a), Box::new(b))
}

pub fn join(a: Term, b: Term) -> Term {
    Term::Join(Box::new(a), Box::new(b))
}

pub fn dot(op: DotOp, t: Term) -> Term {
    Term::Dot(op, Box::new(t))
}

pub fn role(r: Role, t: Term) -> Term {
    Term::Role(r, Box::new(t))
}

/// Join of a list; the empty join is bot and singletons are not wrapped.
pub fn big_join(mut ts: Vec<Term>) -> Term {
    match ts.len() {
        0 => Term::Bot,
        _ => {
            let first = ts.remove(0);
            ts.into_iter().fold(first, join)
        }
    }
}

pub fn big_meet(mut ts: Vec<Term>) -> Term {
    match ts.len() {
        0 => Term::Top,
        _ => {
            let first = ts.remove(0);
            ts.into_iter().fold(first, meet)
        }
    }
}

impl Term {
    pub fn children(&self) -> Vec<&Term> {
        match self {
            Term::Var(_) | Term::Nom(_) | Term::Conom(_) | Term::Top | Term::Bot => vec![],
            Term::Meet(a, b) | Term::Join(a, b) | Term::Imp(a, b) | Term::Coimp(a, b) => {
                vec![a, b]
            }
            Term::App(_, args) | Term::Res(_, _, args) => args.iter().collect(),
            Term::Dot(_, t) | Term::Role(_, t) | Term::Def(_, t) | Term::Adj(_, t) => vec![t],
        }
    }

    pub fn children_mut(&mut self) -> Vec<&mut Term> {
        match self {
            Term::Var(_) | Term::Nom(_) | Term::Conom(_) | Term::Top | Term::Bot => vec![],
            Term::Meet(a, b) | Term::Join(a, b) | Term::Imp(a, b) | Term::Coimp(a, b) => {
                vec![a, b]
            }
            Term::App(_, args) | Term::Res(_, _, args) => args.iter_mut().collect(),
            Term::Dot(_, t) | Term::Role(_, t) | Term::Def(_, t) | Term::Adj(_, t) => vec![t],
        }
    }

    /// Rebuilds the node with its children mapped by `f`.
    pub fn map_children(&self, mut f: impl FnMut(&Term) -> Term) -> Term {
        let mut out = self.clone();
        for c in out.children_mut() {
            *c = f(c);
        }
        out
    }

    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children().get(i).and_then(|c| c.at(rest)),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => {
                let mut cs = self.children_mut();
                if i < cs.len() {
                    cs.swap_remove(i).at_mut(rest)
                } else {
                    None
                }
            }
        }
    }

    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        let mut out = self.clone();
        *out.at_mut(path)? = new;
        Some(out)
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(|c| c.size()).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children().iter().map(|c| c.depth()).max().unwrap_or(0)
    }

    fn collect(&self, out: &mut BTreeSet<Term>, pick: &dyn Fn(&Term) -> bool) {
        if pick(self) {
            out.insert(self.clone());
        }
        for c in self.children() {
            c.collect(out, pick);
        }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        self.collect(&mut s, &|t| matches!(t, Term::Var(_)));
        s.into_iter()
            .map(|t| match t {
                Term::Var(v) => v,
                _ => unreachable!(),
            })
            .collect()
    }

    pub fn has_var(&self, v: &str) -> bool {
        match self {
            Term::Var(x) => x == v,
            _ => self.children().iter().any(|c| c.has_var(v)),
        }
    }

    pub fn is_pure(&self) -> bool {
        match self {
            Term::Var(_) => false,
            _ => self.children().iter().all(|c| c.is_pure()),
        }
    }

    /// Nominals and conominals occurring in the term.
    pub fn names(&self) -> BTreeSet<Term> {
        let mut s = BTreeSet::new();
        self.collect(&mut s, &|t| matches!(t, Term::Nom(_) | Term::Conom(_)));
        s
    }

    pub fn roles(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.walk(&mut |t| match t {
            Term::Role(r, _) | Term::Def(r, _) | Term::Adj(r, _) => {
                out.insert(*r);
            }
            _ => {}
        });
        out
    }

    pub fn walk(&self, f: &mut dyn FnMut(&Term)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }

    /// Smallest layer admitting every node of the term.
    pub fn layer(&self) -> Layer {
        let own = match self {
            Term::Var(_) | Term::Top | Term::Bot | Term::Meet(..) | Term::Join(..) => Layer::Dle,
            Term::App(..) | Term::Role(..) => Layer::Dle,
            Term::Dot(op, _) if op.is_primitive() => Layer::DleStar,
            Term::Dot(..) | Term::Nom(_) | Term::Conom(_) | Term::Res(..) => Layer::DlePlus,
            Term::Imp(..) | Term::Coimp(..) => Layer::DlePlus,
            Term::Def(..) | Term::Adj(..) => Layer::DlePP,
        };
        self.children().iter().map(|c| c.layer()).fold(own, Ord::max)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_term(self))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Inequality {
    pub lhs: Term,
    pub rhs: Term,
}

impl Inequality {
    pub fn new(lhs: Term, rhs: Term) -> Self {
        Inequality { lhs, rhs }
    }

    pub fn vars(&self) -> BTreeSet<String> {
        let mut v = self.lhs.vars();
        v.extend(self.rhs.vars());
        v
    }

    pub fn is_pure(&self) -> bool {
        self.lhs.is_pure() && self.rhs.is_pure()
    }

    pub fn has_var(&self, v: &str) -> bool {
        self.lhs.has_var(v) || self.rhs.has_var(v)
    }

    pub fn names(&self) -> BTreeSet<Term> {
        let mut n = self.lhs.names();
        n.extend(self.rhs.names());
        n
    }

    pub fn layer(&self) -> Layer {
        self.lhs.layer().max(self.rhs.layer())
    }

    pub fn map(&self, f: impl Fn(&Term) -> Term) -> Inequality {
        Inequality::new(f(&self.lhs), f(&self.rhs))
    }
}

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_inequality(self))
    }
}

/// Simultaneous substitution of variables.
pub fn substitute(t: &Term, map: &BTreeMap<String, Term>) -> Term {
    match t {
        Term::Var(v) => map.get(v).cloned().unwrap_or_else(|| t.clone()),
        _ => t.map_children(|c| substitute(c, map)),
    }
}

pub fn substitute_one(t: &Term, v: &str, by: &Term) -> Term {
    let mut m = BTreeMap::new();
    m.insert(v.to_string(), by.clone());
    substitute(t, &m)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisteredTerm {
    pub var: String,
    pub body: Term,
}

impl RegisteredTerm {
    pub fn apply(&self, arg: &Term) -> Term {
        substitute_one(&self.body, &self.var, arg)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Signature {
    pub connectives: Vec<ConnectiveDecl>,
    pub registered: BTreeMap<Role, RegisteredTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SignatureError {
    #[error("duplicate connective `{0}`")]
    Duplicate(String),
    #[error("`{0}` is a reserved word")]
    Reserved(String),
    #[error("connective `{name}` declared with arity {arity} but order-type of length {len}")]
    ArityMismatch { name: String, arity: usize, len: usize },
    #[error("registered term for {role} must be {expected} in its variable")]
    Polarity { role: String, expected: &'static str },
    #[error("registered term for {0} must be a DLE term in exactly one variable")]
    NotUnary(String),
}

pub const RESERVED: &[&str] = &[
    "top", "bot", "res", "conn", "term", "pi", "sigma", "lambda", "rho", "Dia", "Box", "Lhd",
    "Rhd", "bsq", "bdia", "blhd", "brhd",
];

impl Signature {
    pub fn new() -> Self {
        Signature::default()
    }

    /// The unary classical signature `f dia 1 (1); g box 1 (1)`.
    pub fn modal() -> Self {
        let mut s = Signature::new();
        s.declare(ConnectiveDecl::new("dia", Family::F, &[Eps::One])).unwrap();
        s.declare(ConnectiveDecl::new("box", Family::G, &[Eps::One])).unwrap();
        s
    }

    pub fn declare(&mut self, d: ConnectiveDecl) -> Result<(), SignatureError> {
        if RESERVED.contains(&d.name.as_str()) {
            return Err(SignatureError::Reserved(d.name));
        }
        if self.get(&d.name).is_some() {
            return Err(SignatureError::Duplicate(d.name));
        }
        self.connectives.push(d);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ConnectiveDecl> {
        self.connectives.iter().find(|c| c.name == name)
    }

    pub fn register(&mut self, r: Role, var: &str, body: Term) -> Result<(), SignatureError> {
        let vs = body.vars();
        if vs.len() != 1 || !vs.contains(var) || body.layer() != Layer::Dle || !body.roles().is_empty() {
            return Err(SignatureError::NotUnary(r.name().to_string()));
        }
        let pol = crate::classify::polarity(&body, var, self);
        let ok = match r.eps() {
            Eps::One => pol == crate::classify::Polarity::Positive,
            Eps::Partial => pol == crate::classify::Polarity::Negative,
        };
        if !ok {
            let expected = if r.eps() == Eps::One { "positive" } else { "negative" };
            return Err(SignatureError::Polarity { role: r.name().to_string(), expected });
        }
        self.registered.insert(r, RegisteredTerm { var: var.to_string(), body });
        Ok(())
    }

    pub fn role_term(&self, r: Role) -> Option<&RegisteredTerm> {
        self.registered.get(&r)
    }

    /// Replaces every `Role` node by the registered term it abbreviates.
    pub fn expand_roles(&self, t: &Term) -> Term {
        match t {
            Term::Role(r, a) => {
                let a = self.expand_roles(a);
                match self.role_term(*r) {
                    Some(rt) => rt.apply(&a),
                    None => Term::Role(*r, Box::new(a)),
                }
            }
            _ => t.map_children(|c| self.expand_roles(c)),
        }
    }

    /// Phi-substitution: dotted connectives become the registered terms.
    pub fn phi_substitute(&self, t: &Term) -> Term {
        self.expand_roles(&dots_to_roles(t))
    }

    pub fn expand_inequality(&self, i: &Inequality) -> Inequality {
        i.map(|t| self.expand_roles(t))
    }
}

/// `.dia(t)` becomes `pi(t)` and so on; other nodes are kept.
pub fn dots_to_roles(t: &Term) -> Term {
    match t {
        Term::Dot(op, a) if op.is_primitive() => {
            Term::Role(op.role().unwrap(), Box::new(dots_to_roles(a)))
        }
        _ => t.map_children(dots_to_roles),
    }
}

/// Inverse of [`dots_to_roles`].
pub fn roles_to_dots(t: &Term) -> Term {
    match t {
        Term::Role(r, a) => Term::Dot(r.dot(), Box::new(roles_to_dots(a))),
        _ => t.map_children(roles_to_dots),
    }
}
