//! Seeded fixtures shared by the benchmarks.

use privsynth::lp::MinCostFlow;
use privsynth::pmm::{add_noise, run_pmm, true_counts, NoisyCounts, PmmConfig};
use privsynth::psmm::{build_grid, perturb_counts, CellGrid};
use privsynth::{Dataset, DiscreteSignedMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const SEED: u64 = 0x5eed;

pub fn rng(stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(SEED);
    rng.set_stream(stream);
    rng
}

pub fn uniform(dim: usize, n: usize) -> Dataset {
    Dataset::uniform(dim, n, &mut rng(n as u64)).expect("valid dimension")
}

/// Noisy counts of `n` uniform points on a depth-`depth` partition.
pub fn noisy_tree(dim: usize, n: usize, depth: u32, epsilon: f64) -> NoisyCounts {
    let (partition, schedule) = PmmConfig::new(epsilon).with_depth(depth).resolve(n, dim).expect("config");
    let truth = true_counts(&uniform(dim, n), &partition).expect("counts");
    add_noise(&truth, &schedule, &mut rng(1)).expect("noise")
}

/// Uniform data, its PMM output, and the lattice the rate sweeps evaluate on.
pub fn pmm_pair(dim: usize, n: usize) -> (Dataset, Dataset, u64) {
    let data = uniform(dim, n);
    let run = run_pmm(&data, &PmmConfig::new(1.0), &mut rng(4)).expect("pmm run");
    let lattice = 1u64 << (run.partition.depth() as usize + 4).div_ceil(dim);
    (data, run.synthetic, lattice)
}

/// A perturbed PSMM measure on about `cells` cells.
pub fn signed_grid(dim: usize, n: usize, cells: u64, epsilon: f64) -> (CellGrid, DiscreteSignedMeasure) {
    let grid = build_grid(dim, cells).expect("grid");
    let nu = perturb_counts(&uniform(dim, n), &grid, epsilon, &mut rng(2)).expect("perturb");
    (grid, nu)
}

/// Balanced transport between random supplies on a `side x side` king graph.
pub fn king_transport(side: usize) -> MinCostFlow {
    let nodes = side * side;
    let mut net = MinCostFlow::with_capacity(nodes, 8 * nodes);
    for r in 0..side {
        for c in 0..side {
            let u = r * side + c;
            for (dr, dc) in [(0, 1), (1, -1), (1, 0), (1, 1)] {
                let (r2, c2) = (r as isize + dr, c as isize + dc);
                if r2 < side as isize && (0..side as isize).contains(&c2) {
                    let v = r2 as usize * side + c2 as usize;
                    net.add_arc(u, v, 1.0);
                    net.add_arc(v, u, 1.0);
                }
            }
        }
    }
    net.set_block_factor(0.1);
    let mut rng = rng(3);
    let mut total = 0.0;
    for u in 0..nodes - 1 {
        let s = rng.random_range(-4..=4) as f64;
        net.set_supply(u, s);
        total += s;
    }
    net.set_supply(nodes - 1, -total);
    net
}
