//! Measures on which a function costs no information, and protocols that
//! witness it.
//!
//! Two support cells are adjacent when they share a row or a column. `μ` is
//! internal-trivial for `f` iff `f` is constant on `C_A × C_B` for every
//! connected component `C` of that graph, and external-trivial iff `f` is
//! constant on `S_A × S_B`.

use petgraph::unionfind::UnionFind;
use serde::Serialize;

use crate::distributions::{entropy_profile, JointDistribution};
use crate::protocol::{FunctionTable, Owner, ProtocolTree, TreeBuilder};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TrivialKind {
    Internal,
    External,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Component {
    pub cells: Vec<(usize, usize)>,
    /// `C_A`, sorted.
    pub rows: Vec<usize>,
    /// `C_B`, sorted.
    pub cols: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportGraph {
    pub nx: usize,
    pub ny: usize,
    pub vertices: Vec<(usize, usize)>,
    /// Index pairs into `vertices`, `i < j`.
    pub edges: Vec<(usize, usize)>,
    pub components: Vec<Component>,
}

pub fn build_support_graph(mu: &JointDistribution) -> SupportGraph {
    let vertices = mu.support();
    let mut edges = Vec::new();
    let mut uf = UnionFind::<usize>::new(vertices.len());
    for (i, &(xi, yi)) in vertices.iter().enumerate() {
        for (j, &(xj, yj)) in vertices.iter().enumerate().skip(i + 1) {
            if xi == xj || yi == yj {
                edges.push((i, j));
                uf.union(i, j);
            }
        }
    }
    let labels = uf.into_labeling();
    let mut roots: Vec<usize> = Vec::new();
    let mut components: Vec<Component> = Vec::new();
    for (i, &cell) in vertices.iter().enumerate() {
        let k = match roots.iter().position(|&r| r == labels[i]) {
            Some(k) => k,
            None => {
                roots.push(labels[i]);
                components.push(Component {
                    cells: Vec::new(),
                    rows: Vec::new(),
                    cols: Vec::new(),
                });
                roots.len() - 1
            }
        };
        components[k].cells.push(cell);
    }
    for c in &mut components {
        c.rows = c.cells.iter().map(|&(x, _)| x).collect();
        c.cols = c.cells.iter().map(|&(_, y)| y).collect();
        c.rows.sort_unstable();
        c.rows.dedup();
        c.cols.sort_unstable();
        c.cols.dedup();
    }
    SupportGraph {
        nx: mu.nx(),
        ny: mu.ny(),
        vertices,
        edges,
        components,
    }
}

/// Partitions of `S_A` and `S_B` into paired blocks with `f` constant on
/// each `X_i × Y_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub value: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrivialVerdict {
    pub kind: TrivialKind,
    pub trivial: bool,
    pub witness: Option<BlockPartition>,
    /// A component (internal) or the marginal rectangle (external) on
    /// which `f` is not constant.
    pub obstruction: Option<Component>,
}

fn check_shapes(f: &FunctionTable, mu: &JointDistribution) -> Result<()> {
    if (f.nx, f.ny) != mu.shape() {
        return Err(Error::ShapeMismatch {
            expected: mu.shape(),
            got: (f.nx, f.ny),
        });
    }
    Ok(())
}

fn constant_on(f: &FunctionTable, rows: &[usize], cols: &[usize]) -> Option<u32> {
    let first = f.get(*rows.first()?, *cols.first()?);
    rows.iter()
        .all(|&x| cols.iter().all(|&y| f.get(x, y) == first))
        .then_some(first)
}

pub fn is_structurally_internal_trivial(f: &FunctionTable, mu: &JointDistribution) -> Result<TrivialVerdict> {
    check_shapes(f, mu)?;
    let graph = build_support_graph(mu);
    let mut blocks = Vec::with_capacity(graph.components.len());
    for c in graph.components {
        match constant_on(f, &c.rows, &c.cols) {
            Some(value) => blocks.push(Block {
                rows: c.rows,
                cols: c.cols,
                value,
            }),
            None => {
                return Ok(TrivialVerdict {
                    kind: TrivialKind::Internal,
                    trivial: false,
                    witness: None,
                    obstruction: Some(c),
                })
            }
        }
    }
    Ok(TrivialVerdict {
        kind: TrivialKind::Internal,
        trivial: true,
        witness: Some(BlockPartition { blocks }),
        obstruction: None,
    })
}

fn marginal_supports(mu: &JointDistribution) -> (Vec<usize>, Vec<usize>) {
    let rows = (0..mu.nx()).filter(|&x| (0..mu.ny()).any(|y| mu.in_support(x, y))).collect();
    let cols = (0..mu.ny()).filter(|&y| (0..mu.nx()).any(|x| mu.in_support(x, y))).collect();
    (rows, cols)
}

pub fn is_structurally_external_trivial(f: &FunctionTable, mu: &JointDistribution) -> Result<TrivialVerdict> {
    check_shapes(f, mu)?;
    let (rows, cols) = marginal_supports(mu);
    let verdict = match constant_on(f, &rows, &cols) {
        Some(value) => TrivialVerdict {
            kind: TrivialKind::External,
            trivial: true,
            witness: Some(BlockPartition {
                blocks: vec![Block { rows, cols, value }],
            }),
            obstruction: None,
        },
        None => TrivialVerdict {
            kind: TrivialKind::External,
            trivial: false,
            witness: None,
            obstruction: Some(Component {
                cells: mu.support(),
                rows,
                cols,
            }),
        },
    };
    Ok(verdict)
}

pub fn is_structurally_trivial(f: &FunctionTable, mu: &JointDistribution, kind: TrivialKind) -> Result<TrivialVerdict> {
    match kind {
        TrivialKind::Internal => is_structurally_internal_trivial(f, mu),
        TrivialKind::External => is_structurally_external_trivial(f, mu),
    }
}

/// Exhaustive search for paired block partitions of `S_A` and `S_B`,
/// independent of the support graph.
pub fn brute_force_internal_trivial(f: &FunctionTable, mu: &JointDistribution) -> Result<bool> {
    check_shapes(f, mu)?;
    let (rows, cols) = marginal_supports(mu);
    if rows.len() > 6 || cols.len() > 6 {
        return Err(Error::SizeCap(format!(
            "brute-force search over {}×{} marginal supports",
            rows.len(),
            cols.len()
        )));
    }
    let mut found = false;
    for_each_partition(rows.len(), &mut |labels, blocks| {
        if found {
            return;
        }
        let mut col_labels = vec![0usize; cols.len()];
        loop {
            let ok = mu.support().iter().all(|&(x, y)| {
                let i = rows.iter().position(|&r| r == x).unwrap();
                let j = cols.iter().position(|&c| c == y).unwrap();
                labels[i] == col_labels[j]
            }) && (0..blocks).all(|b| {
                let xs: Vec<usize> = (0..rows.len()).filter(|&i| labels[i] == b).map(|i| rows[i]).collect();
                let ys: Vec<usize> = (0..cols.len()).filter(|&j| col_labels[j] == b).map(|j| cols[j]).collect();
                ys.is_empty() || constant_on(f, &xs, &ys).is_some()
            });
            if ok {
                found = true;
                return;
            }
            // Next column labelling in base `blocks`.
            let mut k = 0;
            while k < col_labels.len() {
                col_labels[k] += 1;
                if col_labels[k] < blocks {
                    break;
                }
                col_labels[k] = 0;
                k += 1;
            }
            if k == col_labels.len() {
                return;
            }
        }
    });
    Ok(found)
}

/// Calls `visit(labels, blocks)` once per set partition of `0..n`, as
/// restricted growth strings.
fn for_each_partition(n: usize, visit: &mut dyn FnMut(&[usize], usize)) {
    fn go(labels: &mut Vec<usize>, n: usize, blocks: usize, visit: &mut dyn FnMut(&[usize], usize)) {
        if labels.len() == n {
            visit(labels, blocks);
            return;
        }
        for b in 0..=blocks {
            labels.push(b);
            go(labels, n, blocks.max(b + 1), visit);
            labels.pop();
        }
    }
    go(&mut Vec::new(), n, 0, visit);
}

/// The zero-cost protocol certified by a structural verdict.
///
/// Internal: Alice announces the block of her row in binary and the leaf
/// outputs that block's value. On the support the block is also a function
/// of Bob's column, so neither player learns anything. External: a single
/// leaf.
pub fn trivial_witness_protocol(f: &FunctionTable, mu: &JointDistribution, kind: TrivialKind) -> Result<ProtocolTree> {
    let verdict = is_structurally_trivial(f, mu, kind)?;
    let Some(partition) = verdict.witness.filter(|_| verdict.trivial) else {
        return Err(Error::Precondition(format!(
            "measure is not structurally {} trivial for f",
            match kind {
                TrivialKind::Internal => "internal",
                TrivialKind::External => "external",
            }
        )));
    };
    let blocks = &partition.blocks;
    if blocks.is_empty() {
        return Ok(ProtocolTree::constant(f.nx, f.ny, f.get(0, 0)));
    }
    let mut row_block = vec![0usize; f.nx];
    for (b, block) in blocks.iter().enumerate() {
        for &x in &block.rows {
            row_block[x] = b;
        }
    }
    let mut outputs: Vec<u32> = blocks.iter().map(|b| b.value).collect();
    outputs.sort_unstable();
    outputs.dedup();
    let mut builder = TreeBuilder::new(f.nx, f.ny, outputs);
    let root = announce(&mut builder, blocks, &row_block, 0, blocks.len());
    builder.build(root)
}

fn announce(b: &mut TreeBuilder, blocks: &[Block], row_block: &[usize], lo: usize, hi: usize) -> usize {
    if hi - lo == 1 {
        return b.leaf(blocks[lo].value);
    }
    let mid = lo + (hi - lo) / 2;
    let c0 = announce(b, blocks, row_block, lo, mid);
    let c1 = announce(b, blocks, row_block, mid, hi);
    let table = row_block
        .iter()
        .map(|&k| if k >= mid && k < hi { 1.0 } else { 0.0 })
        .collect();
    b.signal(Owner::Alice, table, c0, c1)
}

/// Smallest internal IC over deterministic zero-error protocols of depth at
/// most `depth` whose every message splits the sender's remaining inputs.
/// A diagnostic for non-trivial measures, not a certified lower bound.
/// `None` when no such protocol fits in `depth`.
pub fn deterministic_ic_floor(f: &FunctionTable, mu: &JointDistribution, depth: usize) -> Result<Option<f64>> {
    check_shapes(f, mu)?;
    if f.nx > 8 || f.ny > 8 {
        return Err(Error::SizeCap(format!("{}×{} alphabet", f.nx, f.ny)));
    }
    Ok(floor_rec(f, mu, (1u32 << f.nx) - 1, (1u32 << f.ny) - 1, depth))
}

fn members(set: u32) -> Vec<usize> {
    (0..32).filter(|&i| set >> i & 1 == 1).collect()
}

fn floor_rec(f: &FunctionTable, mu: &JointDistribution, rows: u32, cols: u32, depth: usize) -> Option<f64> {
    let (xs, ys) = (members(rows), members(cols));
    if constant_on(f, &xs, &ys).is_some() {
        return Some(0.0);
    }
    if depth == 0 {
        return None;
    }
    let mass: f64 = xs.iter().flat_map(|&x| ys.iter().map(move |&y| (x, y))).map(|(x, y)| mu.get(x, y)).sum();
    let mut best: Option<f64> = None;
    for (owner, set) in [(Owner::Alice, rows), (Owner::Bob, cols)] {
        // Each unordered split once: the lowest member stays on side 0.
        let rest = set & (set - 1);
        let mut one = rest;
        while one != 0 {
            let zero = set & !one;
            let (r0, c0, r1, c1) = match owner {
                Owner::Alice => (zero, cols, one, cols),
                Owner::Bob => (rows, zero, rows, one),
            };
            let children = floor_rec(f, mu, r0, c0, depth - 1).zip(floor_rec(f, mu, r1, c1, depth - 1));
            if let Some((a, b)) = children {
                let v = if mass > 0.0 {
                    split_cost(mu, rows, cols, owner, one)
                        + (rect_mass(mu, r0, c0) * a + rect_mass(mu, r1, c1) * b) / mass
                } else {
                    0.0
                };
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
            one = (one - 1) & rest;
        }
    }
    best
}

fn rect_mass(mu: &JointDistribution, rows: u32, cols: u32) -> f64 {
    members(rows)
        .into_iter()
        .flat_map(|x| members(cols).into_iter().map(move |y| (x, y)))
        .map(|(x, y)| mu.get(x, y))
        .sum()
}

/// Internal information of one deterministic message at the posterior
/// `μ | rows × cols`: the entropy of the message given the other input.
fn split_cost(mu: &JointDistribution, rows: u32, cols: u32, owner: Owner, one: u32) -> f64 {
    let (nx, ny) = mu.shape();
    let mass: Vec<f64> = (0..nx * ny)
        .map(|i| {
            let (x, y) = (i / ny, i % ny);
            if rows >> x & 1 == 1 && cols >> y & 1 == 1 {
                mu.get(x, y)
            } else {
                0.0
            }
        })
        .collect();
    let post = JointDistribution::from_weights(nx, ny, mass).expect("positive rectangle mass");
    // Collapse the sender's input to the message bit; what remains is
    // H(M | other input).
    let collapsed = match owner {
        Owner::Alice => {
            let mut w = vec![0.0; 2 * ny];
            for x in 0..nx {
                for y in 0..ny {
                    w[usize::from(one >> x & 1 == 1) * ny + y] += post.get(x, y);
                }
            }
            JointDistribution::from_weights(2, ny, w).expect("mass preserved")
        }
        Owner::Bob => {
            let mut w = vec![0.0; nx * 2];
            for x in 0..nx {
                for y in 0..ny {
                    w[x * 2 + usize::from(one >> y & 1 == 1)] += post.get(x, y);
                }
            }
            JointDistribution::from_weights(nx, 2, w).expect("mass preserved")
        }
    };
    let p = entropy_profile(&collapsed);
    match owner {
        Owner::Alice => p.h_x_given_y,
        Owner::Bob => p.h_y_given_x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::{external_ic, internal_ic, law_of};
    use crate::protocol::{evaluate_error, ErrorKind, Task};

    fn rows(r: &[&[f64]]) -> JointDistribution {
        JointDistribution::from_rows(r).unwrap()
    }

    #[test]
    fn graph_examples() {
        let g = build_support_graph(&JointDistribution::uniform(3, 2));
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.components[0].rows, vec![0, 1, 2]);
        let g = build_support_graph(&rows(&[&[0.5, 0.0], &[0.0, 0.5]]));
        assert_eq!(g.components.len(), 2);
        assert!(g.edges.is_empty());
        let g = build_support_graph(&rows(&[&[0.3, 0.3], &[0.0, 0.4]]));
        assert_eq!(g.components.len(), 1);
        assert_eq!(g.edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn verdicts() {
        let and = FunctionTable::and();
        let xor = FunctionTable::xor();
        let delta = rows(&[&[1.0 / 3.0, 1.0 / 3.0], &[1.0 / 3.0, 0.0]]);
        let diag = rows(&[&[0.5, 0.0], &[0.0, 0.5]]);
        assert!(!is_structurally_internal_trivial(&and, &delta).unwrap().trivial);
        assert!(is_structurally_internal_trivial(&xor, &diag).unwrap().trivial);
        assert!(!is_structurally_external_trivial(&xor, &diag).unwrap().trivial);
        let zero = FunctionTable::from_fn(2, 2, |_, _| 0);
        assert!(is_structurally_external_trivial(&zero, &delta).unwrap().trivial);
        // AND is 0 on the support rectangle {0} × {0,1}.
        let top = rows(&[&[0.5, 0.5], &[0.0, 0.0]]);
        assert!(is_structurally_external_trivial(&and, &top).unwrap().trivial);
        for mu in [&delta, &diag, &top] {
            for f in [&and, &xor] {
                assert_eq!(
                    is_structurally_internal_trivial(f, mu).unwrap().trivial,
                    brute_force_internal_trivial(f, mu).unwrap()
                );
            }
        }
    }

    #[test]
    fn xor_block_witness() {
        let xor = FunctionTable::xor();
        let diag = rows(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let t = trivial_witness_protocol(&xor, &diag, TrivialKind::Internal).unwrap();
        assert!(internal_ic(&law_of(&t, &diag).unwrap()) <= 1e-12);
        let task = Task::new(xor.clone(), ErrorKind::Distributional(diag.clone()), 0.0, None).unwrap();
        assert_eq!(evaluate_error(&t, &task).unwrap().distributional, Some(0.0));
        // The block is revealed, so an outside observer learns one bit.
        assert!((external_ic(&law_of(&t, &diag).unwrap()) - 1.0).abs() < 1e-12);
        assert!(trivial_witness_protocol(&xor, &diag, TrivialKind::External).is_err());
    }

    #[test]
    fn partitions_counted_by_bell_numbers() {
        for (n, bell) in [(1, 1), (2, 2), (3, 5), (4, 15)] {
            let mut count = 0;
            for_each_partition(n, &mut |_, _| count += 1);
            assert_eq!(count, bell);
        }
    }

    #[test]
    fn deterministic_floor() {
        let and = FunctionTable::and();
        let u = JointDistribution::uniform(2, 2);
        // Alice reveals x (1 bit), Bob reveals y when x = 1 (half a bit).
        let v = deterministic_ic_floor(&and, &u, 4).unwrap().unwrap();
        assert!((v - 1.5).abs() < 1e-12);
        let diag = rows(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let v = deterministic_ic_floor(&FunctionTable::xor(), &diag, 4).unwrap().unwrap();
        assert!(v.abs() < 1e-12);
    }
}
