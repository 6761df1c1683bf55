//! Satisfiability of a conjunction of inequalities by variable elimination.
//! Used when backtracking runs out of budget: approximation rules produce
//! tree-shaped systems whose fresh symbols each touch few constraints, so
//! the intermediate tables stay small.

use super::eval::{Evaluator, Node};

/// A constraint over a set of symbol slots, as a truth table indexed
/// mixed-radix by positions in the slots' domains.
struct Table {
    scope: Vec<usize>,
    rows: Vec<bool>,
}

impl Table {
    fn index(&self, pos: &[usize], dims: &[usize]) -> usize {
        self.scope.iter().fold(0, |k, &s| k * dims[s] + pos[s])
    }

    fn holds(&self, pos: &[usize], dims: &[usize]) -> bool {
        self.rows[self.index(pos, dims)]
    }
}

/// One atom `lhs <= rhs`, negated for the goal.
pub(crate) struct Atom<'a> {
    pub lhs: &'a Node,
    pub rhs: &'a Node,
    pub scope: Vec<usize>,
    pub negated: bool,
}

pub(crate) enum Sat {
    /// positions in each slot's domain
    Model(Vec<usize>),
    Unsat,
    Out,
}

/// Calls `f` on every assignment of positions to `scope`, in row order.
fn for_rows(scope: &[usize], dims: &[usize], pos: &mut [usize], f: &mut dyn FnMut(&[usize])) {
    fn go(k: usize, scope: &[usize], dims: &[usize], pos: &mut [usize], f: &mut dyn FnMut(&[usize])) {
        if k == scope.len() {
            f(pos);
            return;
        }
        for v in 0..dims[scope[k]] {
            pos[scope[k]] = v;
            go(k + 1, scope, dims, pos, f);
        }
    }
    go(0, scope, dims, pos, f)
}

pub(crate) fn solve(ev: &Evaluator, domains: &[Vec<usize>], atoms: &[Atom], budget: u64) -> Sat {
    let dims: Vec<usize> = domains.iter().map(|d| d.len()).collect();
    let n = dims.len();
    let mut spent = 0u64;
    let mut pos = vec![0; n];
    let mut vals = vec![0; n];
    let mut tables = Vec::new();
    for a in atoms {
        let size: u64 = a.scope.iter().map(|&s| dims[s] as u64).product();
        spent += size;
        if spent > budget {
            return Sat::Out;
        }
        let mut rows = Vec::with_capacity(size as usize);
        for_rows(&a.scope, &dims, &mut pos, &mut |p| {
            for &s in &a.scope {
                vals[s] = domains[s][p[s]];
            }
            let ok = ev.m.lat.leq(ev.run(a.lhs, &vals), ev.run(a.rhs, &vals));
            rows.push(ok != a.negated);
        });
        tables.push(Table { scope: a.scope.clone(), rows });
    }
    // (eliminated slot, the tables that mentioned it)
    let mut buckets: Vec<(usize, Vec<Table>)> = Vec::new();
    let mut alive: Vec<bool> = vec![true; n];
    for _ in 0..n {
        let joined_scope = |x: usize, tables: &[Table]| {
            let mut sc: Vec<usize> = tables.iter().filter(|t| t.scope.contains(&x)).flat_map(|t| t.scope.iter().copied()).filter(|&s| s != x).collect();
            sc.sort_unstable();
            sc.dedup();
            sc
        };
        let cost = |sc: &[usize]| sc.iter().map(|&s| dims[s] as u64).product::<u64>();
        let Some(x) = (0..n).filter(|&x| alive[x]).min_by_key(|&x| (cost(&joined_scope(x, &tables)), x)) else {
            break;
        };
        let scope = joined_scope(x, &tables);
        let (bucket, rest): (Vec<Table>, Vec<Table>) = tables.into_iter().partition(|t| t.scope.contains(&x));
        tables = rest;
        alive[x] = false;
        spent += cost(&scope) * dims[x] as u64;
        if spent > budget {
            return Sat::Out;
        }
        let mut rows = Vec::new();
        for_rows(&scope, &dims, &mut pos, &mut |p| {
            let mut q = p.to_vec();
            rows.push((0..dims[x]).any(|v| {
                q[x] = v;
                bucket.iter().all(|t| t.holds(&q, &dims))
            }));
        });
        let t = Table { scope, rows };
        if t.rows.iter().all(|r| !r) {
            return Sat::Unsat;
        }
        tables.push(t);
        buckets.push((x, bucket));
    }
    if tables.iter().any(|t| !t.rows[0]) {
        return Sat::Unsat;
    }
    // later eliminations only depend on slots eliminated after them
    let mut model = vec![0; n];
    for (x, bucket) in buckets.iter().rev() {
        let v = (0..dims[*x])
            .find(|&v| {
                model[*x] = v;
                bucket.iter().all(|t| t.holds(&model, &dims))
            })
            .expect("a value survives elimination");
        model[*x] = v;
    }
    Sat::Model(model)
}
