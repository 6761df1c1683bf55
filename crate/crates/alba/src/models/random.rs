use std::collections::HashSet;

use rand::Rng;

use super::lattice::relational_op;
use super::poset::{enumerate_posets, random_poset};
use super::{boxop, diamond, FiniteDLE, Lattice, Poset};
use crate::signature::{Family, Signature};

/// Order automorphisms of `p` that map the first `points` points onto
/// themselves.
pub fn automorphisms(p: &Poset, points: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..p.n).collect();
    loop {
        let keeps = (0..points).all(|x| perm[x] < points);
        if keeps && (0..p.n).all(|x| (0..p.n).all(|y| p.leq(x, y) == p.leq(perm[x], perm[y]))) {
            out.push(perm.clone());
        }
        let Some(i) = (1..perm.len()).rev().find(|&i| perm[i - 1] < perm[i]) else {
            break;
        };
        let j = (i..perm.len()).rev().find(|&j| perm[j] > perm[i - 1]).unwrap();
        perm.swap(i - 1, j);
        perm[i..].reverse();
    }
    out
}

/// Binary relations on the first `points` points of `p`, one per orbit
/// under the automorphisms of `p`.
pub fn relations_up_to_symmetry(p: &Poset, points: usize) -> Vec<Vec<(usize, usize)>> {
    let auts = automorphisms(p, points);
    let cells: Vec<(usize, usize)> = (0..points).flat_map(|x| (0..points).map(move |y| (x, y))).collect();
    let code = |x: usize, y: usize| x * points + y;
    let mut out = Vec::new();
    for mask in 0u64..1 << cells.len() {
        let least = auts.iter().all(|g| {
            let img = cells
                .iter()
                .enumerate()
                .filter(|(k, _)| mask >> k & 1 == 1)
                .fold(0u64, |m, (_, &(x, y))| m | 1 << code(g[x], g[y]));
            img >= mask
        });
        if least {
            out.push(cells.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &c)| c).collect());
        }
    }
    out
}

/// The complex algebra of a relation over a poset: `dia` and `box` from
/// the same relation.
pub fn relational_modal(p: &Poset, rel: &[(usize, usize)]) -> FiniteDLE {
    let lat = Lattice::new(p.clone());
    let ops = vec![diamond(&lat, "dia", rel), boxop(&lat, "box", rel)];
    FiniteDLE::new_unchecked(lat, ops, vec![])
}

/// Every modal complex algebra over posets with at most `max_n` points,
/// up to isomorphism, with relations on the first `cap` points (all points
/// when `None`). Algebras with identical tables are listed once.
pub fn relational_modal_algebras(max_n: usize, cap: Option<usize>) -> Vec<FiniteDLE> {
    let mut out = Vec::new();
    for n in 1..=max_n {
        for p in enumerate_posets(n, true) {
            let points = cap.map_or(n, |c| c.min(n));
            let mut seen = HashSet::new();
            for rel in relations_up_to_symmetry(&p, points) {
                let m = relational_modal(&p, &rel);
                if seen.insert((m.ops["dia"].table.clone(), m.ops["box"].table.clone())) {
                    out.push(m);
                }
            }
        }
    }
    out
}

/// Random relation of the given arity on `n` points; each tuple is kept
/// with probability `density`.
pub fn random_relation<R: Rng>(n: usize, arity: usize, density: f64, rng: &mut R) -> Vec<Vec<usize>> {
    super::lattice::tuples(n, arity).filter(|_| rng.gen_bool(density)).collect()
}

/// Random binary relation in which every point has at most one successor.
pub fn random_partial_function<R: Rng>(n: usize, rng: &mut R) -> Vec<Vec<usize>> {
    (0..n).filter_map(|x| rng.gen_bool(0.7).then(|| vec![x, rng.gen_range(0..n)])).collect()
}

/// A random algebra for `sig` on a random poset of `n` points, each
/// connective generated by a random relation. Half of the unary
/// g-connectives come from partial functions, whose boxes preserve joins.
pub fn random_dle<R: Rng>(sig: &Signature, n: usize, rng: &mut R) -> FiniteDLE {
    let p = random_poset(n, 0.4, rng);
    let lat = Lattice::new(p);
    let ops = sig
        .connectives
        .iter()
        .map(|c| {
            let k = c.arity();
            let rel = if c.family == Family::G && k == 1 && rng.gen_bool(0.5) {
                random_partial_function(n, rng)
            } else {
                random_relation(n, k + 1, 0.35, rng)
            };
            relational_op(&lat, &c.name, c.family, &c.order_type.0, &rel)
        })
        .collect();
    FiniteDLE::new_unchecked(lat, ops, vec![])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::check_normal;
    use rand::SeedableRng;

    #[test]
    fn orbit_representatives() {
        // 2-antichain: 16 relations, swap symmetry leaves 10 orbits
        assert_eq!(relations_up_to_symmetry(&Poset::antichain(2), 2).len(), 10);
        assert_eq!(relations_up_to_symmetry(&Poset::chain(2), 2).len(), 16);
        assert_eq!(automorphisms(&Poset::antichain(3), 2).len(), 2);
    }

    #[test]
    fn random_algebras_are_normal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let sig = crate::signature::parse_signature("f h 2 (1,d)\ng k 1 (d)\ng box 1 (1)\n").unwrap();
        for _ in 0..20 {
            let n = rng.gen_range(1..=4);
            let m = random_dle(&sig, n, &mut rng);
            for op in m.ops.values() {
                check_normal(&m.lat, op).unwrap();
            }
        }
    }
}
