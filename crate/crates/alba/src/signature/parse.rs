use super::{ConnectiveDecl, DotOp, Eps, Family, Inequality, Layer, Role, Signature, Term, RESERVED};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Nom(String),
    Conom(String),
    Dotted(String),
    Int(usize),
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Amp,
    Bar,
    Leq,
    Imp,
    Coimp,
    Eq,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, (usize, String)> {
    let cs: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut k = 0;
    let ident = |k: &mut usize| -> String {
        let mut s = String::new();
        while *k < cs.len() && is_ident_char(cs[*k].1) {
            s.push(cs[*k].1);
            *k += 1;
        }
        s
    };
    while k < cs.len() {
        let (pos, c) = cs[k];
        if c.is_whitespace() {
            k += 1;
            continue;
        }
        let next = cs.get(k + 1).map(|x| x.1);
        let tok = match c {
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '[' => Tok::LBrack,
            ']' => Tok::RBrack,
            ',' => Tok::Comma,
            '&' => Tok::Amp,
            '|' => Tok::Bar,
            '=' => Tok::Eq,
            '<' if next == Some('=') => {
                k += 1;
                Tok::Leq
            }
            '-' if next == Some('>') => {
                k += 1;
                Tok::Imp
            }
            '-' if next == Some('.') => {
                k += 1;
                Tok::Coimp
            }
            '#' | '@' | '.' => {
                k += 1;
                if k >= cs.len() || !is_ident_start(cs[k].1) {
                    return Err((pos, format!("expected a name after `{}`", c)));
                }
                let s = ident(&mut k);
                out.push((
                    match c {
                        '#' => Tok::Nom(s),
                        '@' => Tok::Conom(s),
                        _ => Tok::Dotted(s),
                    },
                    pos,
                ));
                continue;
            }
            c if c.is_ascii_digit() => {
                let mut n = 0usize;
                while k < cs.len() && cs[k].1.is_ascii_digit() {
                    n = n.saturating_mul(10).saturating_add(cs[k].1 as usize - '0' as usize);
                    k += 1;
                }
                out.push((Tok::Int(n), pos));
                continue;
            }
            c if is_ident_start(c) => {
                let s = ident(&mut k);
                out.push((Tok::Ident(s), pos));
                continue;
            }
            _ => return Err((pos, format!("unexpected character `{}`", c))),
        };
        out.push((tok, pos));
        k += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    k: usize,
    end: usize,
    sig: &'a Signature,
    layer: Layer,
}

type PResult<T> = Result<T, (usize, String)>;

impl<'a> Parser<'a> {
    fn pos(&self) -> usize {
        self.toks.get(self.k).map(|t| t.1).unwrap_or(self.end)
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.k).map(|t| &t.0)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.k).map(|t| t.0.clone());
        self.k += 1;
        t
    }

    fn expect(&mut self, t: Tok, what: &str) -> PResult<()> {
        let pos = self.pos();
        match self.bump() {
            Some(ref x) if *x == t => Ok(()),
            Some(x) => Err((pos, format!("expected {}, found {:?}", what, x))),
            None => Err((pos, format!("expected {}, found end of input", what))),
        }
    }

    fn admit(&self, pos: usize, needed: Layer, what: &str) -> PResult<()> {
        if needed > self.layer {
            Err((pos, format!("{} is not admitted at layer {:?}", what, self.layer)))
        } else {
            Ok(())
        }
    }

    fn inequality(&mut self) -> PResult<Inequality> {
        let lhs = self.term()?;
        self.expect(Tok::Leq, "`<=`")?;
        let rhs = self.term()?;
        Ok(Inequality::new(lhs, rhs))
    }

    fn term(&mut self) -> PResult<Term> {
        let a = self.join()?;
        let pos = self.pos();
        match self.peek() {
            Some(Tok::Imp) | Some(Tok::Coimp) => {
                let imp = self.bump() == Some(Tok::Imp);
                self.admit(pos, Layer::DlePlus, "`->`/`-.`")?;
                let b = self.join()?;
                if matches!(self.peek(), Some(Tok::Imp) | Some(Tok::Coimp)) {
                    return Err((self.pos(), "`->` and `-.` do not associate; add parentheses".into()));
                }
                Ok(if imp {
                    Term::Imp(Box::new(a), Box::new(b))
                } else {
                    Term::Coimp(Box::new(a), Box::new(b))
                })
            }
            _ => Ok(a),
        }
    }

    fn join(&mut self) -> PResult<Term> {
        let mut a = self.meet()?;
        while self.peek() == Some(&Tok::Bar) {
            self.bump();
            let b = self.meet()?;
            a = Term::Join(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn meet(&mut self) -> PResult<Term> {
        let mut a = self.atom()?;
        while self.peek() == Some(&Tok::Amp) {
            self.bump();
            let b = self.atom()?;
            a = Term::Meet(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn args(&mut self) -> PResult<Vec<Term>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut out = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.bump();
            return Ok(out);
        }
        loop {
            out.push(self.term()?);
            let pos = self.pos();
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => return Ok(out),
                _ => return Err((pos, "expected `,` or `)`".into())),
            }
        }
    }

    fn one_arg(&mut self, name: &str) -> PResult<Term> {
        let pos = self.pos();
        let mut a = self.args()?;
        if a.len() != 1 {
            return Err((pos, format!("`{}` takes exactly one argument", name)));
        }
        Ok(a.remove(0))
    }

    fn atom(&mut self) -> PResult<Term> {
        let pos = self.pos();
        let tok = self.bump().ok_or((pos, "unexpected end of input".to_string()))?;
        match tok {
            Tok::LParen => {
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            Tok::Nom(n) => {
                self.admit(pos, Layer::DlePlus, "a nominal")?;
                Ok(Term::Nom(n))
            }
            Tok::Conom(n) => {
                self.admit(pos, Layer::DlePlus, "a conominal")?;
                Ok(Term::Conom(n))
            }
            Tok::Dotted(n) => {
                let op = DotOp::from_name(&n).ok_or((pos, format!("unknown dotted connective `.{}`", n)))?;
                let need = if op.is_primitive() { Layer::DleStar } else { Layer::DlePlus };
                self.admit(pos, need, &format!("`.{}`", n))?;
                let a = self.one_arg(&n)?;
                Ok(Term::Dot(op, Box::new(a)))
            }
            Tok::Ident(id) => self.ident(id, pos),
            other => Err((pos, format!("unexpected token {:?}", other))),
        }
    }

    fn ident(&mut self, id: String, pos: usize) -> PResult<Term> {
        match id.as_str() {
            "top" => return Ok(Term::Top),
            "bot" => return Ok(Term::Bot),
            "res" => {
                self.admit(pos, Layer::DlePlus, "a residual")?;
                self.expect(Tok::LParen, "`(`")?;
                let npos = self.pos();
                let name = match self.bump() {
                    Some(Tok::Ident(s)) => s,
                    _ => return Err((npos, "expected a connective name".into())),
                };
                self.expect(Tok::Comma, "`,`")?;
                let ipos = self.pos();
                let i = match self.bump() {
                    Some(Tok::Int(i)) => i,
                    _ => return Err((ipos, "expected a coordinate".into())),
                };
                self.expect(Tok::RParen, "`)`")?;
                let decl = self.sig.get(&name).ok_or((npos, format!("unknown connective `{}`", name)))?;
                if i == 0 || i > decl.arity() {
                    return Err((ipos, format!("coordinate {} out of range for `{}`", i, name)));
                }
                let apos = self.pos();
                let args = self.args()?;
                if args.len() != decl.arity() {
                    return Err((apos, format!("`res({},{})` expects {} arguments", name, i, decl.arity())));
                }
                return Ok(Term::Res(name, i, args));
            }
            _ => {}
        }
        if self.peek() == Some(&Tok::LBrack) {
            self.bump();
            let rpos = self.pos();
            let r = match self.bump() {
                Some(Tok::Ident(s)) => Role::from_name(&s).ok_or((rpos, format!("unknown role `{}`", s)))?,
                _ => return Err((rpos, "expected a role name".into())),
            };
            self.expect(Tok::RBrack, "`]`")?;
            let is_def = id == r.def_name();
            let is_adj = id == r.adj_name();
            if !is_def && !is_adj {
                return Err((pos, format!("`{}` cannot be indexed by role `{}`", id, r.name())));
            }
            self.admit(pos, Layer::DlePP, &format!("`{}[{}]`", id, r.name()))?;
            let a = self.one_arg(&id)?;
            return Ok(if is_def { Term::Def(r, Box::new(a)) } else { Term::Adj(r, Box::new(a)) });
        }
        if let Some(decl) = self.sig.get(&id) {
            let arity = decl.arity();
            let args = if self.peek() == Some(&Tok::LParen) {
                self.args()?
            } else {
                vec![]
            };
            if args.len() != arity {
                return Err((pos, format!("`{}` expects {} arguments, got {}", id, arity, args.len())));
            }
            return Ok(Term::App(id, args));
        }
        if let Some(r) = Role::from_name(&id) {
            let a = self.one_arg(&id)?;
            return Ok(Term::Role(r, Box::new(a)));
        }
        if let Some(op) = DotOp::from_name(&id).filter(|o| o.is_primitive()) {
            if self.peek() == Some(&Tok::LParen) {
                self.admit(pos, Layer::DleStar, &format!("`{}`", id))?;
                let a = self.one_arg(&id)?;
                return Ok(Term::Dot(op, Box::new(a)));
            }
        }
        if self.peek() == Some(&Tok::LParen) {
            return Err((pos, format!("unknown connective `{}`", id)));
        }
        if RESERVED.contains(&id.as_str()) {
            return Err((pos, format!("`{}` is reserved", id)));
        }
        Ok(Term::Var(id))
    }
}

fn line_col(src: &str, pos: usize, line0: usize) -> (usize, usize) {
    let before = &src[..pos.min(src.len())];
    let line = before.matches('\n').count();
    let col = before.rsplit('\n').next().map(|s| s.chars().count()).unwrap_or(0);
    (line0 + line, col + 1)
}

fn run<T>(src: &str, sig: &Signature, layer: Layer, f: impl FnOnce(&mut Parser) -> PResult<T>) -> Result<T, ParseError> {
    let err = |(pos, msg): (usize, String)| {
        let (line, col) = line_col(src, pos, 1);
        ParseError { line, col, msg }
    };
    let toks = lex(src).map_err(err)?;
    let mut p = Parser { toks, k: 0, end: src.len(), sig, layer };
    let out = f(&mut p).map_err(err)?;
    if p.k < p.toks.len() {
        return Err(err((p.pos(), "trailing input".into())));
    }
    Ok(out)
}

pub fn parse_term(src: &str, sig: &Signature, layer: Layer) -> Result<Term, ParseError> {
    run(src, sig, layer, |p| p.term())
}

pub fn parse_inequality(src: &str, sig: &Signature, layer: Layer) -> Result<Inequality, ParseError> {
    run(src, sig, layer, |p| p.inequality())
}

fn parse_eps(s: &str) -> Option<Vec<Eps>> {
    let inner = s.trim().strip_prefix('(')?.strip_suffix(')')?;
    if inner.trim().is_empty() {
        return Some(vec![]);
    }
    inner
        .split(',')
        .map(|e| match e.trim() {
            "1" => Some(Eps::One),
            "d" | "∂" => Some(Eps::Partial),
            _ => None,
        })
        .collect()
}

/// Reads a signature file. Each line (or `;`-separated clause) is one of
/// `conn NAME F|G ARITY (EPS,...)`, `f NAME ARITY (EPS,...)`,
/// `g NAME ARITY (EPS,...)` or `term ROLE = FORMULA`. `#` starts a comment.
pub fn parse_signature(text: &str) -> Result<Signature, ParseError> {
    let mut sig = Signature::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let mut offset = 0;
        for clause in line.split(';') {
            let col0 = offset + clause.len() - clause.trim_start().len();
            offset += clause.len() + 1;
            let clause = clause.trim();
            if clause.is_empty() {
                continue;
            }
            let err = |msg: String| ParseError { line: ln + 1, col: col0 + 1, msg };
            parse_clause(&mut sig, clause).map_err(|e| match e {
                ClauseError::Msg(m) => err(m),
                ClauseError::Term(pe) => ParseError { line: ln + 1, col: pe.col, msg: pe.msg },
            })?;
        }
    }
    Ok(sig)
}

enum ClauseError {
    Msg(String),
    Term(ParseError),
}

fn parse_clause(sig: &mut Signature, clause: &str) -> Result<(), ClauseError> {
    let msg = |s: String| ClauseError::Msg(s);
    if let Some(rest) = clause.strip_prefix("term ") {
        let (lhs, formula) = rest.split_once('=').ok_or_else(|| msg("expected `term ROLE = FORMULA`".into()))?;
        let r = Role::from_name(lhs.trim()).ok_or_else(|| msg(format!("unknown role `{}`", lhs.trim())))?;
        let body = parse_term(formula, sig, Layer::Dle).map_err(ClauseError::Term)?;
        let vs = body.vars();
        let v = match vs.len() {
            1 => vs.into_iter().next().unwrap(),
            _ => return Err(msg(format!("registered term for {} must have exactly one variable", r.name()))),
        };
        return sig.register(r, &v, body).map_err(|e| msg(e.to_string()));
    }
    let words: Vec<&str> = clause.splitn(2, '(').next().unwrap().split_whitespace().collect();
    let eps_text = clause.find('(').map(|k| &clause[k..]).unwrap_or("");
    let (name, family, arity) = match words.as_slice() {
        ["conn", name, fam, arity] => {
            let family = match *fam {
                "F" | "f" => Family::F,
                "G" | "g" => Family::G,
                _ => return Err(msg(format!("unknown family `{}`", fam))),
            };
            (*name, family, *arity)
        }
        ["f", name, arity] => (*name, Family::F, *arity),
        ["g", name, arity] => (*name, Family::G, *arity),
        _ => return Err(msg(format!("cannot read declaration `{}`", clause))),
    };
    let arity: usize = arity.parse().map_err(|_| msg(format!("bad arity `{}`", arity)))?;
    if !name.chars().next().is_some_and(is_ident_start) || !name.chars().all(is_ident_char) {
        return Err(msg(format!("bad connective name `{}`", name)));
    }
    let eps = parse_eps(eps_text).ok_or_else(|| msg(format!("bad order-type `{}`", eps_text)))?;
    if eps.len() != arity {
        return Err(msg(
            super::SignatureError::ArityMismatch { name: name.to_string(), arity, len: eps.len() }.to_string(),
        ));
    }
    sig.declare(ConnectiveDecl::new(name, family, &eps)).map_err(|e| msg(e.to_string()))
}
