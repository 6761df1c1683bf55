//! Text format for finite algebras:
//!
//! ```text
//! points 3
//! order (0,1) (1,2)
//! table dia : 0 1 2 3
//! rel box : (0,1) (2,2)
//! rel .dia : (0,1)
//! ```
//!
//! `order` pairs are closed reflexively and transitively. A `table` lists
//! the operation values row-major over element indices, with elements
//! ordered by (size, bitmask) of their point sets. A `rel` line generates
//! the operation from a relation of arity n+1. Dotted names give tables
//! for the DLE* connectives.

use super::lattice::{build_dle, relational_op, OpTable};
use super::{FiniteDLE, Lattice, Poset};
use crate::signature::{DotOp, Eps, Family, Signature};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {msg}")]
pub struct ImportError {
    pub line: usize,
    pub msg: String,
}

fn tuples_of(s: &str) -> Result<Vec<Vec<usize>>, String> {
    let mut out = Vec::new();
    let mut rest = s.trim();
    while !rest.is_empty() {
        let body = rest.strip_prefix('(').ok_or_else(|| format!("expected `(` at `{rest}`"))?;
        let end = body.find(')').ok_or("unclosed `(`")?;
        let t = body[..end]
            .split(',')
            .map(|x| x.trim().parse::<usize>().map_err(|_| format!("bad point `{}`", x.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        out.push(t);
        rest = body[end + 1..].trim_start();
    }
    Ok(out)
}

enum Source {
    Table(Vec<usize>),
    Rel(Vec<Vec<usize>>),
}

pub fn parse_lattice(text: &str, sig: &Signature) -> Result<FiniteDLE, ImportError> {
    let mut points = None;
    let mut order = Vec::new();
    let mut sources: Vec<(usize, String, Source)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let err = |msg: String| ImportError { line, msg };
        let l = raw.split('#').next().unwrap().trim();
        if l.is_empty() {
            continue;
        }
        let (kw, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
        match kw {
            "points" => points = Some(rest.trim().parse::<usize>().map_err(|_| err(format!("bad point count `{}`", rest.trim())))?),
            "order" => {
                for t in tuples_of(rest).map_err(err)? {
                    match t[..] {
                        [x, y] => order.push((x, y)),
                        _ => return Err(err("order pairs have two points".into())),
                    }
                }
            }
            "table" | "rel" => {
                let (name, body) = rest.split_once(':').ok_or_else(|| err(format!("expected `{kw} <name> : ...`")))?;
                let source = if kw == "table" {
                    let v = body
                        .split_whitespace()
                        .map(|x| x.parse::<usize>().map_err(|_| err(format!("bad element index `{x}`"))))
                        .collect::<Result<Vec<_>, _>>()?;
                    Source::Table(v)
                } else {
                    Source::Rel(tuples_of(body).map_err(err)?)
                };
                sources.push((line, name.trim().to_string(), source));
            }
            _ => return Err(err(format!("unknown directive `{kw}`"))),
        }
    }
    let n = points.ok_or(ImportError { line: 0, msg: "missing `points`".into() })?;
    let poset = Poset::from_pairs(n, &order).map_err(|e| ImportError { line: 0, msg: e.to_string() })?;
    let lat = Lattice::new(poset);
    let mut ops = Vec::new();
    let mut dots = Vec::new();
    for (line, name, source) in sources {
        let err = |msg: String| ImportError { line, msg };
        let (dot, family, eps): (Option<DotOp>, Family, Vec<Eps>) = match name.strip_prefix('.') {
            Some(d) => {
                let op = DotOp::from_name(d).filter(|o| o.is_primitive()).ok_or_else(|| err(format!("`.{d}` is not a primitive dotted connective")))?;
                let role = op.role().expect("primitive dots have roles");
                (Some(op), role.family(), vec![op.eps()])
            }
            None => {
                let d = sig.get(&name).ok_or_else(|| err(format!("`{name}` is not declared in the signature")))?;
                (None, d.family, d.order_type.0.clone())
            }
        };
        let table = match source {
            Source::Table(v) => {
                let want = lat.size().pow(eps.len() as u32);
                if v.len() != want {
                    return Err(err(format!("`{name}` needs {want} entries, got {}", v.len())));
                }
                if let Some(x) = v.iter().find(|&&x| x >= lat.size()) {
                    return Err(err(format!("element index {x} out of range")));
                }
                OpTable { name: name.clone(), family, eps, size: lat.size(), table: v }
            }
            Source::Rel(r) => {
                if let Some(t) = r.iter().find(|t| t.len() != eps.len() + 1 || t.iter().any(|&x| x >= n)) {
                    return Err(err(format!("bad tuple {t:?} for `{name}`")));
                }
                relational_op(&lat, &name, family, &eps, &r)
            }
        };
        match dot {
            Some(d) => dots.push((d, table)),
            None => ops.push(table),
        }
    }
    build_dle(lat, ops, dots).map_err(|e| ImportError { line: 0, msg: e.to_string() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_tables_and_relations() {
        let sig = Signature::modal();
        let m = parse_lattice("points 2\norder (0,1)\ntable dia : 0 1 2\nrel box : (0,1) (1,1)\n", &sig).unwrap();
        assert_eq!(m.lat.size(), 3);
        assert_eq!(m.ops["dia"].table, vec![0, 1, 2]);
        assert_eq!(m.ops["box"].table.len(), 3);
    }

    #[test]
    fn rejects_non_normal_tables() {
        let sig = Signature::modal();
        let e = parse_lattice("points 1\ntable dia : 1 1\n", &sig).unwrap_err();
        assert!(e.msg.contains("not normal"), "{}", e.msg);
        let e = parse_lattice("points 1\ntable foo : 0 1\n", &sig).unwrap_err();
        assert_eq!(e.line, 2);
    }
}
