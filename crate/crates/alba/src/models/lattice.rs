use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;

use super::Poset;
use crate::signature::{DotOp, Eps, Family};

/// The upsets of a poset ordered by inclusion, indexed by (size, mask).
#[derive(Clone, Debug)]
pub struct Lattice {
    pub poset: Poset,
    pub elems: Vec<u32>,
    index: Vec<usize>,
    /// principal upsets `↑x`, indexed by point
    pub jinf: Vec<usize>,
    /// complements of principal downsets, indexed by point
    pub minf: Vec<usize>,
}

impl Lattice {
    pub fn new(poset: Poset) -> Lattice {
        let n = poset.n;
        let mut elems: Vec<u32> = (0..1u32 << n).filter(|&s| poset.is_upset(s)).collect();
        elems.sort_by_key(|&s| (s.count_ones(), s));
        let mut index = vec![usize::MAX; 1 << n];
        for (k, &s) in elems.iter().enumerate() {
            index[s as usize] = k;
        }
        let jinf = (0..n).map(|x| index[poset.up[x] as usize]).collect();
        let minf = (0..n).map(|x| index[(poset.full() & !poset.down[x]) as usize]).collect();
        Lattice { poset, elems, index, jinf, minf }
    }

    pub fn size(&self) -> usize {
        self.elems.len()
    }

    pub fn bot(&self) -> usize {
        0
    }

    pub fn top(&self) -> usize {
        self.elems.len() - 1
    }

    pub fn index_of(&self, mask: u32) -> Option<usize> {
        self.index.get(mask as usize).copied().filter(|&k| k != usize::MAX)
    }

    pub fn join(&self, a: usize, b: usize) -> usize {
        self.index[(self.elems[a] | self.elems[b]) as usize]
    }

    pub fn meet(&self, a: usize, b: usize) -> usize {
        self.index[(self.elems[a] & self.elems[b]) as usize]
    }

    pub fn leq(&self, a: usize, b: usize) -> bool {
        self.elems[a] & !self.elems[b] == 0
    }

    pub fn big_join(&self, it: impl IntoIterator<Item = usize>) -> usize {
        it.into_iter().fold(self.bot(), |a, b| self.join(a, b))
    }

    pub fn big_meet(&self, it: impl IntoIterator<Item = usize>) -> usize {
        it.into_iter().fold(self.top(), |a, b| self.meet(a, b))
    }

    /// Largest upset inside an arbitrary point set.
    pub fn interior(&self, s: u32) -> usize {
        let p = &self.poset;
        let m = (0..p.n).filter(|&x| p.up[x] & !s == 0).fold(0, |m, x| m | 1 << x);
        self.index[m as usize]
    }

    pub fn closure(&self, s: u32) -> usize {
        self.index[self.poset.up_closure(s) as usize]
    }

    /// The element as its point set, e.g. `{0,2}`.
    pub fn show(&self, a: usize) -> String {
        let pts: Vec<String> = (0..self.poset.n).filter(|&x| self.elems[a] >> x & 1 == 1).map(|x| x.to_string()).collect();
        format!("{{{}}}", pts.join(","))
    }
}

/// Operation table over element indices, row-major in the arguments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpTable {
    pub name: String,
    pub family: Family,
    pub eps: Vec<Eps>,
    pub size: usize,
    pub table: Vec<usize>,
}

impl OpTable {
    pub fn arity(&self) -> usize {
        self.eps.len()
    }

    pub fn apply(&self, args: &[usize]) -> usize {
        let k = args.iter().fold(0, |k, &a| k * self.size + a);
        self.table[k]
    }

    pub fn apply1(&self, a: usize) -> usize {
        self.table[a]
    }
}

/// Row-major enumeration of all argument tuples.
pub(crate) fn tuples(size: usize, arity: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = size.pow(arity as u32);
    (0..total).map(move |mut k| {
        let mut v = vec![0; arity];
        for slot in v.iter_mut().rev() {
            *slot = k % size;
            k /= size;
        }
        v
    })
}

/// Operation generated by a relation of arity `n+1`: for f, the upward
/// closure of `{x : ∃(x,ȳ)∈R. ∀h. y_h ⊨ X_h}`; for g, the interior of
/// `{x : ∀(x,ȳ)∈R. ∃h. y_h ⊨ X_h}`. A 1-coordinate tests membership,
/// a ∂-coordinate non-membership.
pub fn relational_op(lat: &Lattice, name: &str, family: Family, eps: &[Eps], rel: &[Vec<usize>]) -> OpTable {
    let holds = |y: usize, e: Eps, x: usize| (lat.elems[x] >> y & 1 == 1) == (e == Eps::One);
    let table = tuples(lat.size(), eps.len())
        .map(|args| {
            let mut s = 0u32;
            for t in rel {
                let ok = match family {
                    Family::F => (0..eps.len()).all(|h| holds(t[h + 1], eps[h], args[h])),
                    Family::G => (0..eps.len()).any(|h| holds(t[h + 1], eps[h], args[h])),
                };
                if ok == (family == Family::F) {
                    s |= 1 << t[0];
                }
            }
            match family {
                Family::F => lat.closure(s),
                // points with a failing tuple are excluded
                Family::G => lat.interior(lat.poset.full() & !s),
            }
        })
        .collect();
    OpTable { name: name.to_string(), family, eps: eps.to_vec(), size: lat.size(), table }
}

pub fn diamond(lat: &Lattice, name: &str, rel: &[(usize, usize)]) -> OpTable {
    let r: Vec<Vec<usize>> = rel.iter().map(|&(x, y)| vec![x, y]).collect();
    relational_op(lat, name, Family::F, &[Eps::One], &r)
}

pub fn boxop(lat: &Lattice, name: &str, rel: &[(usize, usize)]) -> OpTable {
    let r: Vec<Vec<usize>> = rel.iter().map(|&(x, y)| vec![x, y]).collect();
    relational_op(lat, name, Family::G, &[Eps::One], &r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalityError {
    pub op: String,
    pub coordinate: usize,
    pub witness: String,
}

impl fmt::Display for NormalityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}` is not normal in coordinate {}: {}", self.op, self.coordinate + 1, self.witness)
    }
}

/// Checks preservation of the empty and binary joins/meets per coordinate.
pub fn check_normal(lat: &Lattice, op: &OpTable) -> Result<(), NormalityError> {
    let n = lat.size();
    if op.table.len() != n.pow(op.arity() as u32) || op.table.iter().any(|&v| v >= n) {
        return Err(NormalityError { op: op.name.clone(), coordinate: 0, witness: "table has the wrong shape".into() });
    }
    for args in tuples(n, op.arity()) {
        for h in 0..op.arity() {
            let at = |x: usize| {
                let mut a = args.clone();
                a[h] = x;
                op.apply(&a)
            };
            // (unit argument, expected value, argument combine, value combine)
            let (unit, target, comb_arg, comb_val): (usize, usize, fn(&Lattice, usize, usize) -> usize, fn(&Lattice, usize, usize) -> usize) =
                match (op.family, op.eps[h]) {
                    (Family::F, Eps::One) => (lat.bot(), lat.bot(), Lattice::join, Lattice::join),
                    (Family::F, Eps::Partial) => (lat.top(), lat.bot(), Lattice::meet, Lattice::join),
                    (Family::G, Eps::One) => (lat.top(), lat.top(), Lattice::meet, Lattice::meet),
                    (Family::G, Eps::Partial) => (lat.bot(), lat.top(), Lattice::join, Lattice::meet),
                };
            let err = |w: String| NormalityError { op: op.name.clone(), coordinate: h, witness: w };
            if at(unit) != target {
                return Err(err(format!("at {} the unit {} maps to {}", show_args(lat, &args), lat.show(unit), lat.show(at(unit)))));
            }
            let a = args[h];
            for b in 0..n {
                if at(comb_arg(lat, a, b)) != comb_val(lat, at(a), at(b)) {
                    return Err(err(format!("arguments {} and {} at {}", lat.show(a), lat.show(b), show_args(lat, &args))));
                }
            }
        }
    }
    Ok(())
}

fn show_args(lat: &Lattice, args: &[usize]) -> String {
    let v: Vec<String> = args.iter().map(|&a| lat.show(a)).collect();
    format!("({})", v.join(", "))
}

/// A finite perfect DLE: an upset lattice with operation tables.
#[derive(Clone, Debug)]
pub struct FiniteDLE {
    pub lat: Lattice,
    pub ops: BTreeMap<String, Rc<OpTable>>,
    /// tables for the DLE* dotted connectives, when given
    pub dots: BTreeMap<DotOp, Rc<OpTable>>,
}

impl FiniteDLE {
    /// Builds the algebra without re-validating; for generators that are
    /// normal by construction.
    pub fn new_unchecked(lat: Lattice, ops: Vec<OpTable>, dots: Vec<(DotOp, OpTable)>) -> FiniteDLE {
        FiniteDLE {
            lat,
            ops: ops.into_iter().map(|o| (o.name.clone(), Rc::new(o))).collect(),
            dots: dots.into_iter().map(|(d, o)| (d, Rc::new(o))).collect(),
        }
    }
}

/// Validates normality of every table and assembles the algebra.
pub fn build_dle(lat: Lattice, ops: Vec<OpTable>, dots: Vec<(DotOp, OpTable)>) -> Result<FiniteDLE, NormalityError> {
    for o in ops.iter().chain(dots.iter().map(|(_, o)| o)) {
        check_normal(&lat, o)?;
    }
    Ok(FiniteDLE::new_unchecked(lat, ops, dots))
}
