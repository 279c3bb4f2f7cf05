#![allow(dead_code)]

use infocost::and::flip_tree;
use infocost::protocol::{FunctionTable, Owner, ProtocolTree, TreeBuilder};
use infocost::{Decomposition, JointDistribution, ProductDistribution};
use rand::Rng;

/// Random distribution; `full` keeps every cell at least 1e-3 before normalising.
pub fn dist<R: Rng>(rng: &mut R, nx: usize, ny: usize, full: bool) -> JointDistribution {
    let w = (0..nx * ny)
        .map(|_| {
            if !full && rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(1e-3..1.0)
            }
        })
        .collect::<Vec<f64>>();
    if w.iter().all(|&v| v == 0.0) {
        return JointDistribution::uniform(nx, ny);
    }
    JointDistribution::from_weights(nx, ny, w).unwrap()
}

fn prob<R: Rng>(rng: &mut R) -> f64 {
    match rng.gen_range(0..6) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.gen_range(0.0..1.0),
    }
}

fn grow<R: Rng>(rng: &mut R, b: &mut TreeBuilder, nx: usize, ny: usize, depth: usize, max: usize) -> usize {
    if depth == max || (depth > 0 && rng.gen_bool(0.3)) {
        return b.leaf(rng.gen_range(0..2));
    }
    let owner = if rng.gen_bool(0.5) { Owner::Alice } else { Owner::Bob };
    let n = if owner == Owner::Alice { nx } else { ny };
    let table = (0..n).map(|_| prob(rng)).collect();
    let c0 = grow(rng, b, nx, ny, depth + 1, max);
    let c1 = grow(rng, b, nx, ny, depth + 1, max);
    b.signal(owner, table, c0, c1)
}

/// Random tree of depth at most `max_depth` with outputs in {0, 1}.
pub fn tree<R: Rng>(rng: &mut R, nx: usize, ny: usize, max_depth: usize) -> ProtocolTree {
    let mut b = TreeBuilder::new(nx, ny, vec![0, 1]);
    let root = grow(rng, &mut b, nx, ny, 0, max_depth);
    b.build(root).unwrap()
}

/// Symmetric reference on {0,1}² and a pretend product, both interior.
pub fn decomposition<R: Rng>(rng: &mut R) -> Decomposition {
    let (a, b, c) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
    let nu = JointDistribution::from_weights(2, 2, vec![a, b, b, c]).unwrap();
    let pretend = ProductDistribution::new(rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)).unwrap();
    Decomposition::new(nu, pretend).unwrap()
}

/// Random function with values in `0..k`.
pub fn function<R: Rng>(rng: &mut R, nx: usize, ny: usize, k: u32) -> FunctionTable {
    let values: Vec<u32> = (0..nx * ny).map(|_| rng.gen_range(0..k)).collect();
    FunctionTable::from_fn(nx, ny, |x, y| values[x * ny + y])
}

fn prefix<R: Rng>(rng: &mut R, b: &mut TreeBuilder, exact: &ProtocolTree, nx: usize, ny: usize, d: usize) -> usize {
    if d == 0 || rng.gen_bool(0.4) {
        return b.graft(exact);
    }
    let owner = if rng.gen_bool(0.5) { Owner::Alice } else { Owner::Bob };
    let n = if owner == Owner::Alice { nx } else { ny };
    let table = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
    let c0 = prefix(rng, b, exact, nx, ny, d - 1);
    let c1 = prefix(rng, b, exact, nx, ny, d - 1);
    b.signal(owner, table, c0, c1)
}

/// A protocol with pointwise error at most `eps` for `f`: an input-independent
/// coin of weight `abort ≤ eps/2` leads to a constant leaf; otherwise a random
/// prefix is followed by exchanging inputs, and Alice's row `x1` is then
/// flipped to `x0` with probability at most `eps/2`.
pub fn eps_protocol<R: Rng>(rng: &mut R, f: &FunctionTable, eps: f64) -> ProtocolTree {
    let exact = ProtocolTree::exchange_inputs(f);
    let mut outputs = f.alphabet();
    outputs.sort_unstable();
    let mut b = TreeBuilder::new(f.nx, f.ny, outputs.clone()).depth_cap(64);
    let body = prefix(rng, &mut b, &exact, f.nx, f.ny, 2);
    let abort = rng.gen_range(0.0..=eps / 2.0);
    let stop = b.leaf(outputs[rng.gen_range(0..outputs.len())]);
    let root = b.signal(Owner::Alice, vec![abort; f.nx], body, stop);
    let t = b.build(root).unwrap();
    let x0 = rng.gen_range(0..f.nx);
    let x1 = (x0 + 1 + rng.gen_range(0..f.nx - 1)) % f.nx;
    flip_tree(&t, x0, x1, rng.gen_range(0.0..=eps / 2.0)).unwrap()
}
