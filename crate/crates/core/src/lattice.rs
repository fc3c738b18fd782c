//! Regular lattices `{0..side-1}^d` and their king graphs. Under the ℓ∞
//! metric the distance between lattice points is the king-move path length,
//! so transport on a lattice is a min-cost flow with unit arc costs.

use crate::error::{invalid, Result};
use crate::lp::{MinCostFlow, TreeHint, TreeLink};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Lattice {
    pub dim: usize,
    pub side: u64,
}

impl Lattice {
    pub fn new(dim: usize, side: u64, node_limit: u64) -> Result<Self> {
        let mut nodes: u64 = 1;
        for _ in 0..dim {
            nodes = nodes
                .checked_mul(side)
                .filter(|&n| n <= node_limit)
                .ok_or_else(|| invalid(format!("lattice {side}^{dim} exceeds {node_limit} nodes")))?;
        }
        Ok(Self { dim, side })
    }

    pub fn nodes(&self) -> usize {
        (self.side as usize).pow(self.dim as u32)
    }

    /// Row-major id, axis 0 most significant.
    pub fn id(&self, coords: &[u64]) -> usize {
        coords.iter().fold(0u64, |acc, &c| acc * self.side + c) as usize
    }

    pub fn coords(&self, mut id: usize, out: &mut [u64]) {
        for a in (0..self.dim).rev() {
            out[a] = id as u64 % self.side;
            id /= self.side as usize;
        }
    }

    /// ℓ∞ distance in lattice steps.
    pub fn steps(&self, a: usize, b: usize) -> u64 {
        let mut ca = vec![0; self.dim];
        let mut cb = vec![0; self.dim];
        self.coords(a, &mut ca);
        self.coords(b, &mut cb);
        ca.iter().zip(&cb).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
    }

    /// Flow network over the lattice with a unit-cost arc to each of the
    /// `3^d - 1` neighbours, plus `extra` further nodes with no arcs.
    #[cfg(test)]
    pub fn king_graph(&self, extra: usize) -> MinCostFlow {
        self.king_graph_with_hint(extra).0
    }

    /// As [`Lattice::king_graph`], together with a starting tree: every
    /// lattice node hangs off its king-move neighbour one step closer to the
    /// centre. Links of the `extra` nodes are left for the caller.
    pub fn king_graph_with_hint(&self, extra: usize) -> (MinCostFlow, TreeHint) {
        let n = self.nodes();
        let d = self.dim;
        let noff = 3usize.pow(d as u32);
        // Offset k encodes (o_0, .., o_{d-1}) with o_a = digit_a - 1, axis 0 least significant.
        let offset = |k: usize, a: usize| (k / 3usize.pow(a as u32) % 3) as i64 - 1;
        let centre = noff / 2;
        let mut g = MinCostFlow::with_capacity(n + extra, n * (noff - 1));
        g.set_block_factor(0.1);
        let mut arc_at = vec![u32::MAX; n * noff];
        let mut c = vec![0u64; d];
        let side = self.side as i64;
        for u in 0..n {
            self.coords(u, &mut c);
            'offset: for k in (0..noff).filter(|&k| k != centre) {
                let mut v = 0i64;
                for (a, &ca) in c.iter().enumerate() {
                    let x = ca as i64 + offset(k, a);
                    if x < 0 || x >= side {
                        continue 'offset;
                    }
                    v = v * side + x;
                }
                arc_at[u * noff + k] = g.add_arc(u, v as usize, 1.0) as u32;
            }
        }
        let mid = (self.side - 1) / 2;
        let root = self.id(&vec![mid; d]);
        let mut links = vec![None; n + extra];
        for u in 0..n {
            if u == root {
                continue;
            }
            self.coords(u, &mut c);
            // Step toward the centre on every axis that differs.
            let mut k = 0usize;
            let mut parent = c.clone();
            for a in (0..d).rev() {
                let o = (mid as i64 - c[a] as i64).signum();
                parent[a] = (c[a] as i64 + o) as u64;
                k = k * 3 + (o + 1) as usize;
            }
            let p = self.id(&parent);
            let back = noff - 1 - k;
            links[u] = Some(TreeLink {
                parent: p,
                up: Some(arc_at[u * noff + k] as usize),
                down: Some(arc_at[p * noff + back] as usize),
            });
        }
        (g, TreeHint { root, links })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::LpStatus;

    #[test]
    fn hinted_start_matches_plain_start() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(8);
        for dim in 1..=3 {
            for side in [2u64, 3, 5, 6] {
                let l = Lattice::new(dim, side, 1 << 12).unwrap();
                let (mut g, hint) = l.king_graph_with_hint(0);
                let n = l.nodes();
                let mut total = 0.0;
                for u in 0..n - 1 {
                    let s = rng.random_range(-3i32..=3) as f64;
                    g.set_supply(u, s);
                    total += s;
                }
                g.set_supply(n - 1, -total);
                let a = g.solve().unwrap();
                let b = g.solve_with_hint(&hint).unwrap();
                assert_eq!(b.status, LpStatus::Optimal);
                assert_eq!(a.cost, b.cost);
            }
        }
    }

    #[test]
    fn ids_round_trip() {
        let l = Lattice::new(3, 5, 1000).unwrap();
        let mut c = [0u64; 3];
        for id in 0..l.nodes() {
            l.coords(id, &mut c);
            assert_eq!(l.id(&c), id);
        }
        assert!(Lattice::new(3, 11, 1000).is_err());
    }

    #[test]
    fn king_graph_distances_are_linf() {
        for dim in 1..=3 {
            let l = Lattice::new(dim, 4, 1 << 10).unwrap();
            let n = l.nodes();
            for (a, b) in [(0, n - 1), (1, n / 2), (n / 3, 2 * n / 3)] {
                let mut g = l.king_graph(0);
                g.set_supply(a, 1.0);
                g.add_supply(b, -1.0);
                let s = g.solve().unwrap();
                assert_eq!(s.status, LpStatus::Optimal);
                assert_eq!(s.cost, l.steps(a, b) as f64);
                let (mut h, hint) = l.king_graph_with_hint(0);
                h.set_supply(a, 1.0);
                h.add_supply(b, -1.0);
                assert_eq!(h.solve_with_hint(&hint).unwrap().cost, s.cost);
            }
        }
    }
}
