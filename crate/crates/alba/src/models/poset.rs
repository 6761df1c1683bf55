use rand::Rng;

/// A finite poset on points `0..n`, stored as principal up- and down-sets.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Poset {
    pub n: usize,
    /// `up[x]` has bit `y` set iff `x <= y`
    pub up: Vec<u32>,
    pub down: Vec<u32>,
}

pub const MAX_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PosetError {
    #[error("posets have at most {MAX_POINTS} points, got {0}")]
    TooLarge(usize),
    #[error("point {0} out of range")]
    Point(usize),
    #[error("the order is not antisymmetric at ({0}, {1})")]
    Antisymmetry(usize, usize),
}

impl Poset {
    pub fn antichain(n: usize) -> Poset {
        Poset::from_pairs(n, &[]).expect("discrete orders are posets")
    }

    pub fn chain(n: usize) -> Poset {
        let pairs: Vec<(usize, usize)> = (1..n).map(|k| (k - 1, k)).collect();
        Poset::from_pairs(n, &pairs).expect("chains are posets")
    }

    /// Reflexive-transitive closure of the given pairs `x <= y`.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<Poset, PosetError> {
        if n > MAX_POINTS {
            return Err(PosetError::TooLarge(n));
        }
        let mut up: Vec<u32> = (0..n).map(|x| 1 << x).collect();
        for &(x, y) in pairs {
            if x >= n || y >= n {
                return Err(PosetError::Point(x.max(y)));
            }
            up[x] |= 1 << y;
        }
        loop {
            let mut changed = false;
            for x in 0..n {
                let mut m = up[x];
                for y in 0..n {
                    if up[x] >> y & 1 == 1 {
                        m |= up[y];
                    }
                }
                if m != up[x] {
                    up[x] = m;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        for x in 0..n {
            for y in 0..n {
                if x != y && up[x] >> y & 1 == 1 && up[y] >> x & 1 == 1 {
                    return Err(PosetError::Antisymmetry(x, y));
                }
            }
        }
        Ok(Poset::from_up(n, up))
    }

    fn from_up(n: usize, up: Vec<u32>) -> Poset {
        let down = (0..n).map(|y| (0..n).filter(|&x| up[x] >> y & 1 == 1).fold(0, |m, x| m | 1 << x)).collect();
        Poset { n, up, down }
    }

    pub fn leq(&self, x: usize, y: usize) -> bool {
        self.up[x] >> y & 1 == 1
    }

    pub fn full(&self) -> u32 {
        (1u32 << self.n) - 1
    }

    pub fn is_upset(&self, s: u32) -> bool {
        (0..self.n).all(|x| s >> x & 1 == 0 || self.up[x] & !s == 0)
    }

    /// Smallest upset containing `s`.
    pub fn up_closure(&self, s: u32) -> u32 {
        (0..self.n).filter(|&x| s >> x & 1 == 1).fold(0, |m, x| m | self.up[x])
    }

    /// Strict order pairs `x < y`.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for x in 0..self.n {
            for y in 0..self.n {
                if x != y && self.leq(x, y) {
                    v.push((x, y));
                }
            }
        }
        v
    }

    fn relabel(&self, perm: &[usize]) -> Vec<u32> {
        let mut up = vec![0u32; self.n];
        for x in 0..self.n {
            for y in 0..self.n {
                if self.leq(x, y) {
                    up[perm[x]] |= 1 << perm[y];
                }
            }
        }
        up
    }

    /// Lexicographically least relabelling, used to pick one poset per
    /// isomorphism class.
    fn canonical(&self) -> Vec<u32> {
        let mut perm: Vec<usize> = (0..self.n).collect();
        let mut best = self.relabel(&perm);
        while next_perm(&mut perm) {
            let r = self.relabel(&perm);
            if r < best {
                best = r;
            }
        }
        best
    }
}

fn next_perm(p: &mut [usize]) -> bool {
    let Some(i) = (1..p.len()).rev().find(|&i| p[i - 1] < p[i]) else {
        return false;
    };
    let j = (i..p.len()).rev().find(|&j| p[j] > p[i - 1]).unwrap();
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// All posets on `n` labelled points, or one per isomorphism class when
/// `unlabelled` is set. Deterministic order.
pub fn enumerate_posets(n: usize, unlabelled: bool) -> Vec<Poset> {
    assert!((1..=5).contains(&n), "enumerate_posets supports 1 <= n <= 5");
    let off: Vec<(usize, usize)> = (0..n).flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y))).collect();
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for mask in 0u64..1 << off.len() {
        let mut up: Vec<u32> = (0..n).map(|x| 1 << x).collect();
        for (k, &(x, y)) in off.iter().enumerate() {
            if mask >> k & 1 == 1 {
                up[x] |= 1 << y;
            }
        }
        let antisym = off.iter().all(|&(x, y)| !(up[x] >> y & 1 == 1 && up[y] >> x & 1 == 1));
        let trans = (0..n).all(|x| (0..n).filter(|&y| up[x] >> y & 1 == 1).all(|y| up[y] & !up[x] == 0));
        if !(antisym && trans) {
            continue;
        }
        let p = Poset::from_up(n, up);
        if unlabelled && !seen.insert(p.canonical()) {
            continue;
        }
        out.push(p);
    }
    out
}

/// A random poset: random pairs along a random linear order, closed.
pub fn random_poset<R: Rng>(n: usize, density: f64, rng: &mut R) -> Poset {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.gen_range(0..=i));
    }
    let mut pairs = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(density) {
                pairs.push((order[a], order[b]));
            }
        }
    }
    Poset::from_pairs(n, &pairs).expect("pairs follow a linear order")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labelled_counts() {
        let c: Vec<usize> = (1..=4).map(|n| enumerate_posets(n, false).len()).collect();
        assert_eq!(c, vec![1, 3, 19, 219]);
    }

    #[test]
    fn unlabelled_counts() {
        let c: Vec<usize> = (1..=4).map(|n| enumerate_posets(n, true).len()).collect();
        assert_eq!(c, vec![1, 2, 5, 16]);
    }

    #[test]
    fn closure_and_cycles() {
        let p = Poset::from_pairs(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(p.leq(0, 2));
        assert_eq!(p, Poset::chain(3));
        assert_eq!(Poset::from_pairs(2, &[(0, 1), (1, 0)]), Err(PosetError::Antisymmetry(0, 1)));
        assert!(p.is_upset(0b110));
        assert!(!p.is_upset(0b011));
        assert_eq!(p.up_closure(0b010), 0b110);
    }
}
