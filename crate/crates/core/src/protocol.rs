//! Protocol trees and their random-walk semantics.
//!
//! A signal sent by Alice multiplies the current distribution row-wise by
//! `Pr[bit | x]`; a Bob signal does the same column-wise. Walking a tree from
//! a prior therefore visits a martingale of distributions whose terminal
//! values are the leaf posteriors.

use serde::{Deserialize, Serialize};

use crate::distributions::JointDistribution;
use crate::cost::{LawEntry, TranscriptLaw};
use crate::numeric::csum;
use crate::{Error, Result};

/// Depth limit used unless a tree is built with an explicit cap.
pub const DEFAULT_DEPTH_CAP: usize = 64;

/// Slack allowed on signal probabilities outside `[0, 1]`.
const PROB_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Owner {
    Alice,
    Bob,
}

impl Owner {
    pub fn axis(self) -> Axis {
        match self {
            Owner::Alice => Axis::Rows,
            Owner::Bob => Axis::Columns,
        }
    }
}

/// Which coordinate a signal scales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Rows,
    Columns,
}

impl Axis {
    pub fn owner(self) -> Owner {
        match self {
            Axis::Rows => Owner::Alice,
            Axis::Columns => Owner::Bob,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Internal {
        owner: Owner,
        /// `Pr[send 1 | owner's input]`, indexed by the owner's input.
        send_one: Vec<f64>,
        child0: usize,
        child1: usize,
    },
    Leaf {
        output: u32,
    },
}

#[derive(Debug, Clone, Deserialize)]
struct RawTree {
    nx: usize,
    ny: usize,
    outputs: Vec<u32>,
    root: usize,
    nodes: Vec<Node>,
    #[serde(default = "default_cap")]
    depth_cap: usize,
}

fn default_cap() -> usize {
    DEFAULT_DEPTH_CAP
}

/// A finite protocol tree over inputs `{0..nx} × {0..ny}`.
///
/// Nodes are addressed by index; leaf indices double as transcript
/// identifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTree")]
pub struct ProtocolTree {
    nx: usize,
    ny: usize,
    outputs: Vec<u32>,
    root: usize,
    nodes: Vec<Node>,
    depth_cap: usize,
}

impl TryFrom<RawTree> for ProtocolTree {
    type Error = Error;

    fn try_from(raw: RawTree) -> Result<Self> {
        let tree = ProtocolTree {
            nx: raw.nx,
            ny: raw.ny,
            outputs: raw.outputs,
            root: raw.root,
            nodes: raw.nodes,
            depth_cap: raw.depth_cap,
        };
        tree.validate()?;
        Ok(tree)
    }
}

/// One leaf reached by [`ProtocolTree::walk`].
#[derive(Debug, Clone, PartialEq)]
pub struct WalkLeaf {
    pub leaf: usize,
    pub output: u32,
    pub posterior: JointDistribution,
    pub reach: f64,
}

/// A subtree that the prior reaches with probability zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrunedBranch {
    pub node: usize,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Walk {
    pub leaves: Vec<WalkLeaf>,
    pub pruned: Vec<PrunedBranch>,
}

/// Per-leaf path factors: `Pr[t | x, y] = alice[x] · bob[y]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafTable {
    pub leaf: usize,
    pub output: u32,
    pub alice: Vec<f64>,
    pub bob: Vec<f64>,
}

/// Posterior and reach probability of one node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeState {
    pub posterior: JointDistribution,
    pub reach: f64,
    pub depth: usize,
}

impl ProtocolTree {
    pub fn new(
        nx: usize,
        ny: usize,
        outputs: Vec<u32>,
        root: usize,
        nodes: Vec<Node>,
    ) -> Result<Self> {
        Self::with_depth_cap(nx, ny, outputs, root, nodes, DEFAULT_DEPTH_CAP)
    }

    pub fn with_depth_cap(
        nx: usize,
        ny: usize,
        outputs: Vec<u32>,
        root: usize,
        nodes: Vec<Node>,
        depth_cap: usize,
    ) -> Result<Self> {
        RawTree {
            nx,
            ny,
            outputs,
            root,
            nodes,
            depth_cap,
        }
        .try_into()
    }

    /// Tree with a single leaf.
    pub fn constant(nx: usize, ny: usize, output: u32) -> Self {
        Self {
            nx,
            ny,
            outputs: vec![output],
            root: 0,
            nodes: vec![Node::Leaf { output }],
            depth_cap: DEFAULT_DEPTH_CAP,
        }
    }

    /// Alice announces `x`, then Bob announces `y`, and the leaf outputs `f(x, y)`.
    pub fn exchange_inputs(f: &FunctionTable) -> Self {
        let mut b = TreeBuilder::new(f.nx, f.ny, f.alphabet());
        let root = b.reveal_chain(Owner::Alice, f.nx, &mut |b, x| {
            b.reveal_chain(Owner::Bob, f.ny, &mut |b, y| b.leaf(f.get(x, y)))
        });
        b.build(root).expect("well-formed by construction")
    }

    /// Alice announces `x`; every leaf outputs `output`.
    pub fn alice_reveals(nx: usize, ny: usize, output: u32) -> Self {
        let mut b = TreeBuilder::new(nx, ny, vec![output]);
        let root = b.reveal_chain(Owner::Alice, nx, &mut |b, _| b.leaf(output));
        b.build(root).expect("well-formed by construction")
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidProtocol(msg));
        if self.nx == 0 || self.ny == 0 {
            return bad("empty input alphabet".into());
        }
        if self.root >= self.nodes.len() {
            return bad(format!("root {} out of range", self.root));
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            if seen[id] {
                return bad(format!("node {id} has more than one parent"));
            }
            seen[id] = true;
            match &self.nodes[id] {
                Node::Leaf { output } => {
                    if !self.outputs.contains(output) {
                        return bad(format!("leaf {id} outputs {output}, not in the alphabet"));
                    }
                }
                Node::Internal {
                    owner,
                    send_one,
                    child0,
                    child1,
                } => {
                    if depth >= self.depth_cap {
                        return Err(Error::DepthCap {
                            depth: depth + 1,
                            cap: self.depth_cap,
                        });
                    }
                    let width = self.width(*owner);
                    if send_one.len() != width {
                        return bad(format!(
                            "node {id}: {} send probabilities for {width} inputs",
                            send_one.len()
                        ));
                    }
                    if let Some(p) = send_one
                        .iter()
                        .find(|p| !p.is_finite() || **p < -PROB_SLACK || **p > 1.0 + PROB_SLACK)
                    {
                        return bad(format!("node {id}: send probability {p} outside [0, 1]"));
                    }
                    for c in [*child0, *child1] {
                        if c >= self.nodes.len() {
                            return bad(format!("node {id}: child {c} out of range"));
                        }
                        stack.push((c, depth + 1));
                    }
                }
            }
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return bad(format!("node {id} is unreachable from the root"));
        }
        Ok(())
    }

    fn width(&self, owner: Owner) -> usize {
        match owner {
            Owner::Alice => self.nx,
            Owner::Bob => self.ny,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn outputs(&self) -> &[u32] {
        &self.outputs
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &Node {
        &self.nodes[id]
    }

    pub fn depth_cap(&self) -> usize {
        self.depth_cap
    }

    /// Length of the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, d)) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf { .. } => best = best.max(d),
                Node::Internal { child0, child1, .. } => {
                    stack.push((*child1, d + 1));
                    stack.push((*child0, d + 1));
                }
            }
        }
        best
    }

    /// Leaf ids in depth-first order, child 0 first.
    pub fn leaves(&self) -> Vec<usize> {
        self.transcript_table().into_iter().map(|t| t.leaf).collect()
    }

    /// The subtree rooted at `node`, renumbered, as a standalone protocol.
    pub fn subtree(&self, node: usize) -> ProtocolTree {
        let mut map = vec![usize::MAX; self.nodes.len()];
        let mut order = Vec::new();
        let mut stack = vec![node];
        while let Some(id) = stack.pop() {
            map[id] = order.len();
            order.push(id);
            if let Node::Internal { child0, child1, .. } = &self.nodes[id] {
                stack.push(*child1);
                stack.push(*child0);
            }
        }
        let nodes = order
            .iter()
            .map(|&id| match &self.nodes[id] {
                Node::Leaf { output } => Node::Leaf { output: *output },
                Node::Internal {
                    owner,
                    send_one,
                    child0,
                    child1,
                } => Node::Internal {
                    owner: *owner,
                    send_one: send_one.clone(),
                    child0: map[*child0],
                    child1: map[*child1],
                },
            })
            .collect();
        ProtocolTree {
            nx: self.nx,
            ny: self.ny,
            outputs: self.outputs.clone(),
            root: 0,
            nodes,
            depth_cap: self.depth_cap,
        }
    }

    /// Prior-free transcript table: each leaf's path probability factors.
    pub fn transcript_table(&self) -> Vec<LeafTable> {
        let mut out = Vec::new();
        let mut stack = vec![(self.root, vec![1.0; self.nx], vec![1.0; self.ny])];
        while let Some((id, a, b)) = stack.pop() {
            match &self.nodes[id] {
                Node::Leaf { output } => out.push(LeafTable {
                    leaf: id,
                    output: *output,
                    alice: a,
                    bob: b,
                }),
                Node::Internal {
                    owner,
                    send_one,
                    child0,
                    child1,
                } => {
                    let split = |bit: bool, v: &[f64]| -> Vec<f64> {
                        v.iter()
                            .zip(send_one)
                            .map(|(f, p)| f * branch_prob(*p, bit))
                            .collect()
                    };
                    let (c0, c1) = match owner {
                        Owner::Alice => ((split(false, &a), b.clone()), (split(true, &a), b)),
                        Owner::Bob => ((a.clone(), split(false, &b)), (a, split(true, &b))),
                    };
                    stack.push((*child1, c1.0, c1.1));
                    stack.push((*child0, c0.0, c0.1));
                }
            }
        }
        out
    }

    /// Runs the random walk from `prior`, returning every reachable leaf
    /// with its posterior and reach probability. Branches of probability
    /// zero are pruned and logged.
    pub fn walk(&self, prior: &JointDistribution) -> Result<Walk> {
        self.check_prior(prior)?;
        let mut leaves = Vec::new();
        let mut pruned = Vec::new();
        self.visit(prior, |id, depth, state| {
            if let (Node::Leaf { output }, Some(s)) = (&self.nodes[id], state) {
                leaves.push(WalkLeaf {
                    leaf: id,
                    output: *output,
                    posterior: s.posterior.clone(),
                    reach: s.reach,
                });
            } else if state.is_none() {
                pruned.push(PrunedBranch { node: id, depth });
            }
        })?;
        Ok(Walk { leaves, pruned })
    }

    /// Posterior and reach probability of every node, `None` for nodes the
    /// prior reaches with probability zero.
    pub fn node_states(&self, prior: &JointDistribution) -> Result<Vec<Option<NodeState>>> {
        self.check_prior(prior)?;
        let mut states = vec![None; self.nodes.len()];
        self.visit(prior, |id, _, state| states[id] = state.cloned())?;
        Ok(states)
    }

    fn check_prior(&self, prior: &JointDistribution) -> Result<()> {
        if prior.shape() != (self.nx, self.ny) {
            return Err(Error::ShapeMismatch {
                expected: (self.nx, self.ny),
                got: prior.shape(),
            });
        }
        Ok(())
    }

    /// Preorder traversal carrying unnormalised masses. Pruned subtrees are
    /// reported once, at their root, with `None`.
    fn visit<F: FnMut(usize, usize, Option<&NodeState>)>(
        &self,
        prior: &JointDistribution,
        mut f: F,
    ) -> Result<()> {
        let mut stack = vec![(self.root, prior.mass().to_vec(), 1.0f64, 0usize)];
        while let Some((id, masses, reach, depth)) = stack.pop() {
            if reach <= 0.0 {
                f(id, depth, None);
                continue;
            }
            let posterior = JointDistribution::from_weights(self.nx, self.ny, masses.clone())?;
            f(
                id,
                depth,
                Some(&NodeState {
                    posterior,
                    reach,
                    depth,
                }),
            );
            if let Node::Internal {
                owner,
                send_one,
                child0,
                child1,
            } = &self.nodes[id]
            {
                let ny = self.ny;
                let scale = |bit: bool| -> Vec<f64> {
                    masses
                        .iter()
                        .enumerate()
                        .map(|(i, m)| {
                            let v = match owner {
                                Owner::Alice => i / ny,
                                Owner::Bob => i % ny,
                            };
                            m * branch_prob(send_one[v], bit)
                        })
                        .collect()
                };
                for (child, bit) in [(*child1, true), (*child0, false)] {
                    let m = scale(bit);
                    let r = csum(m.iter().copied());
                    stack.push((child, m, r, depth + 1));
                }
            }
        }
        Ok(())
    }
}

#[inline]
fn branch_prob(send_one: f64, bit: bool) -> f64 {
    let p = send_one.clamp(0.0, 1.0);
    if bit {
        p
    } else {
        1.0 - p
    }
}

/// Bottom-up tree construction: children are created before their parent.
#[derive(Debug, Clone)]
pub struct TreeBuilder {
    nx: usize,
    ny: usize,
    outputs: Vec<u32>,
    nodes: Vec<Node>,
    depth_cap: usize,
}

impl TreeBuilder {
    pub fn new(nx: usize, ny: usize, outputs: Vec<u32>) -> Self {
        Self {
            nx,
            ny,
            outputs,
            nodes: Vec::new(),
            depth_cap: DEFAULT_DEPTH_CAP,
        }
    }

    pub fn depth_cap(mut self, cap: usize) -> Self {
        self.depth_cap = cap;
        self
    }

    pub fn leaf(&mut self, output: u32) -> usize {
        self.nodes.push(Node::Leaf { output });
        self.nodes.len() - 1
    }

    pub fn signal(&mut self, owner: Owner, send_one: Vec<f64>, child0: usize, child1: usize) -> usize {
        self.nodes.push(Node::Internal {
            owner,
            send_one,
            child0,
            child1,
        });
        self.nodes.len() - 1
    }

    pub fn alice(&mut self, send_one: Vec<f64>, child0: usize, child1: usize) -> usize {
        self.signal(Owner::Alice, send_one, child0, child1)
    }

    pub fn bob(&mut self, send_one: Vec<f64>, child0: usize, child1: usize) -> usize {
        self.signal(Owner::Bob, send_one, child0, child1)
    }

    /// Copies `tree` into the builder and returns the id of its root.
    pub fn graft(&mut self, tree: &ProtocolTree) -> usize {
        let offset = self.nodes.len();
        self.nodes.extend(tree.nodes().iter().map(|n| match n {
            Node::Leaf { output } => Node::Leaf { output: *output },
            Node::Internal {
                owner,
                send_one,
                child0,
                child1,
            } => Node::Internal {
                owner: *owner,
                send_one: send_one.clone(),
                child0: child0 + offset,
                child1: child1 + offset,
            },
        }));
        tree.root() + offset
    }

    /// A caterpillar in which `owner` answers "is my input `v`?" for
    /// `v = 0, 1, …` until the value is pinned down. `on_value` builds the
    /// continuation once the value is known.
    pub fn reveal_chain(
        &mut self,
        owner: Owner,
        n: usize,
        on_value: &mut dyn FnMut(&mut Self, usize) -> usize,
    ) -> usize {
        let mut node = on_value(self, n - 1);
        for v in (0..n - 1).rev() {
            let hit = on_value(self, v);
            let send_one = (0..n).map(|u| if u == v { 1.0 } else { 0.0 }).collect();
            node = self.signal(owner, send_one, node, hit);
        }
        node
    }

    pub fn build(self, root: usize) -> Result<ProtocolTree> {
        ProtocolTree::with_depth_cap(self.nx, self.ny, self.outputs, root, self.nodes, self.depth_cap)
    }
}

/// One step of the walk: `μ = λ₀μ₀ + λ₁μ₁`, with `μ_b` a rescaling of `μ`
/// along `axis`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkStep {
    pub lambda0: f64,
    pub lambda1: f64,
    pub mu0: Option<JointDistribution>,
    pub mu1: Option<JointDistribution>,
    pub axis: Axis,
    /// `Pr[send 1 | owner's input]` realising the step.
    pub send_one: Vec<f64>,
}

/// Applies a signal to `mu`. A child reached with probability zero has no
/// posterior.
pub fn apply_signal(mu: &JointDistribution, owner: Owner, send_one: &[f64]) -> Result<WalkStep> {
    let (nx, ny) = mu.shape();
    let width = if owner == Owner::Alice { nx } else { ny };
    if send_one.len() != width {
        return Err(Error::InvalidProtocol(format!(
            "{} send probabilities for {width} inputs",
            send_one.len()
        )));
    }
    let child = |bit: bool| -> Result<(f64, Option<JointDistribution>)> {
        let w: Vec<f64> = (0..nx * ny)
            .map(|i| {
                let v = if owner == Owner::Alice { i / ny } else { i % ny };
                mu.mass()[i] * branch_prob(send_one[v], bit)
            })
            .collect();
        let lambda = csum(w.iter().copied());
        if lambda <= 0.0 {
            Ok((0.0, None))
        } else {
            Ok((lambda, Some(JointDistribution::from_weights(nx, ny, w)?)))
        }
    };
    let (lambda0, mu0) = child(false)?;
    let (lambda1, mu1) = child(true)?;
    Ok(WalkStep {
        lambda0,
        lambda1,
        mu0,
        mu1,
        axis: owner.axis(),
        send_one: send_one.to_vec(),
    })
}

/// Recovers the signal behind a split of `mu` into `lambda0·mu0 + (1−lambda0)·mu1`.
///
/// Fails with the name of the violated condition: `"mixture"` when the split
/// does not average back to `mu`, `"scaling"` when a child is not a rescaling
/// of `mu` along `axis`.
pub fn step_from_split(
    mu: &JointDistribution,
    mu0: &JointDistribution,
    mu1: &JointDistribution,
    lambda0: f64,
    axis: Axis,
) -> Result<WalkStep> {
    const TOL: f64 = 1e-9;
    mu.check_shape(mu0)?;
    mu.check_shape(mu1)?;
    if !(0.0..=1.0).contains(&lambda0) {
        return Err(Error::Domain {
            value: lambda0,
            domain: "[0, 1]",
        });
    }
    let lambda1 = 1.0 - lambda0;
    let (nx, ny) = mu.shape();
    let mixture_gap = (0..nx * ny)
        .map(|i| (lambda0 * mu0.mass()[i] + lambda1 * mu1.mass()[i] - mu.mass()[i]).abs())
        .fold(0.0, f64::max);
    if mixture_gap > TOL {
        return Err(Error::InfeasibleSplit {
            condition: "mixture",
            detail: format!("λ₀μ₀ + λ₁μ₁ misses μ by {mixture_gap:e}"),
        });
    }
    let (width, cells): (usize, Box<dyn Fn(usize) -> Vec<usize>>) = match axis {
        Axis::Rows => (nx, Box::new(move |x| (0..ny).map(|y| x * ny + y).collect())),
        Axis::Columns => (ny, Box::new(move |y| (0..nx).map(|x| x * ny + y).collect())),
    };
    let mut send_one = Vec::with_capacity(width);
    for v in 0..width {
        let idx = cells(v);
        let base = csum(idx.iter().map(|&i| mu.mass()[i]));
        let p = if base > 0.0 {
            (lambda1 * csum(idx.iter().map(|&i| mu1.mass()[i])) / base).clamp(0.0, 1.0)
        } else {
            0.5
        };
        for &i in &idx {
            let gap = (lambda1 * mu1.mass()[i] - p * mu.mass()[i]).abs();
            if gap > TOL {
                return Err(Error::InfeasibleSplit {
                    condition: "scaling",
                    detail: format!("cell {i} is not a rescaling of μ along {axis:?} (gap {gap:e})"),
                });
            }
        }
        send_one.push(p);
    }
    Ok(WalkStep {
        lambda0,
        lambda1,
        mu0: (lambda0 > 0.0).then(|| mu0.clone()),
        mu1: (lambda1 > 0.0).then(|| mu1.clone()),
        axis,
        send_one,
    })
}

/// A function `f: X × Y → Z` given by its table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionTable {
    pub nx: usize,
    pub ny: usize,
    /// Row-major values.
    pub values: Vec<u32>,
}

impl FunctionTable {
    pub fn new(nx: usize, ny: usize, values: Vec<u32>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::ShapeMismatch {
                expected: (nx, ny),
                got: (values.len(), 1),
            });
        }
        Ok(Self { nx, ny, values })
    }

    pub fn from_fn(nx: usize, ny: usize, f: impl Fn(usize, usize) -> u32) -> Self {
        let values = (0..nx).flat_map(|x| (0..ny).map(move |y| (x, y))).map(|(x, y)| f(x, y)).collect();
        Self { nx, ny, values }
    }

    pub fn and() -> Self {
        Self::from_fn(2, 2, |x, y| (x & y) as u32)
    }

    pub fn xor() -> Self {
        Self::from_fn(2, 2, |x, y| (x ^ y) as u32)
    }

    pub fn get(&self, x: usize, y: usize) -> u32 {
        self.values[x * self.ny + y]
    }

    /// Distinct values, sorted.
    pub fn alphabet(&self) -> Vec<u32> {
        let mut v = self.values.clone();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    Pointwise,
    Distributional(JointDistribution),
}

/// A computational task `[f, ε]`, `[f, ν, ε]` or `[f, ε, z₁ → z₀]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub f: FunctionTable,
    pub error_kind: ErrorKind,
    pub epsilon: f64,
    /// `(z1, z0)`: the only error allowed is outputting `z0` when `f = z1`.
    pub one_sided: Option<(u32, u32)>,
}

impl Task {
    pub fn pointwise(f: FunctionTable, epsilon: f64) -> Result<Self> {
        Self::new(f, ErrorKind::Pointwise, epsilon, None)
    }

    pub fn new(
        f: FunctionTable,
        error_kind: ErrorKind,
        epsilon: f64,
        one_sided: Option<(u32, u32)>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Domain {
                value: epsilon,
                domain: "[0, 1]",
            });
        }
        if let ErrorKind::Distributional(nu) = &error_kind {
            if nu.shape() != (f.nx, f.ny) {
                return Err(Error::ShapeMismatch {
                    expected: (f.nx, f.ny),
                    got: nu.shape(),
                });
            }
        }
        Ok(Self {
            f,
            error_kind,
            epsilon,
            one_sided,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub max_pointwise: f64,
    /// `Σ ν(x,y)·err(x,y)` when the task is distributional.
    pub distributional: Option<f64>,
    /// Largest per-input probability of an error other than `z1 → z0`; zero
    /// when the task is two-sided.
    pub one_sided_violation: f64,
    /// Row-major `Pr[output ≠ f(x,y)]`.
    pub per_input: Vec<f64>,
}

impl ErrorReport {
    /// Whether the protocol solves the task.
    pub fn meets(&self, task: &Task, tol: f64) -> bool {
        let main = match task.error_kind {
            ErrorKind::Pointwise => self.max_pointwise,
            ErrorKind::Distributional(_) => self.distributional.unwrap_or(f64::INFINITY),
        };
        main <= task.epsilon + tol && self.one_sided_violation <= tol
    }
}

/// Exact error of `tree` on `task`, enumerating all inputs and leaves.
pub fn evaluate_error(tree: &ProtocolTree, task: &Task) -> Result<ErrorReport> {
    if (tree.nx(), tree.ny()) != (task.f.nx, task.f.ny) {
        return Err(Error::ShapeMismatch {
            expected: (task.f.nx, task.f.ny),
            got: (tree.nx(), tree.ny()),
        });
    }
    let ny = tree.ny();
    let entries: Vec<(u32, Vec<f64>)> = tree
        .transcript_table()
        .into_iter()
        .map(|t| {
            let cond = (0..tree.nx() * ny).map(|i| t.alice[i / ny] * t.bob[i % ny]).collect();
            (t.output, cond)
        })
        .collect();
    Ok(error_from_entries(&entries, task))
}

/// Exact error of a transcript law on `task`.
pub fn evaluate_law_error(law: &TranscriptLaw, task: &Task) -> Result<ErrorReport> {
    let (nx, ny) = law.prior().shape();
    if (nx, ny) != (task.f.nx, task.f.ny) {
        return Err(Error::ShapeMismatch {
            expected: (task.f.nx, task.f.ny),
            got: (nx, ny),
        });
    }
    let entries: Vec<(u32, Vec<f64>)> = law
        .entries()
        .iter()
        .map(|e| (e.output, e.cond.clone()))
        .collect();
    Ok(error_from_entries(&entries, task))
}

fn error_from_entries(entries: &[(u32, Vec<f64>)], task: &Task) -> ErrorReport {
    let f = &task.f;
    let mut per_input = Vec::with_capacity(f.nx * f.ny);
    let mut one_sided_violation = 0.0f64;
    for x in 0..f.nx {
        for y in 0..f.ny {
            let i = x * f.ny + y;
            let truth = f.get(x, y);
            let wrong = csum(entries.iter().filter(|(o, _)| *o != truth).map(|(_, c)| c[i]));
            per_input.push(wrong);
            if let Some((z1, z0)) = task.one_sided {
                let bad = csum(
                    entries
                        .iter()
                        .filter(|(o, _)| *o != truth && !(truth == z1 && *o == z0))
                        .map(|(_, c)| c[i]),
                );
                one_sided_violation = one_sided_violation.max(bad);
            }
        }
    }
    let max_pointwise = per_input.iter().copied().fold(0.0, f64::max);
    let distributional = match &task.error_kind {
        ErrorKind::Pointwise => None,
        ErrorKind::Distributional(nu) => Some(csum(
            nu.mass().iter().zip(&per_input).map(|(m, e)| m * e),
        )),
    };
    ErrorReport {
        max_pointwise,
        distributional,
        one_sided_violation,
        per_input,
    }
}

fn fresh_leaf_id(law: &TranscriptLaw) -> usize {
    law.entries().iter().map(|e| e.leaf + 1).max().unwrap_or(0)
}

/// With probability `epsilon` (a public coin) stop at once and output the
/// first entry's output; otherwise run the original protocol.
pub fn mix_with_abort(law: &TranscriptLaw, epsilon: f64) -> Result<TranscriptLaw> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain {
            value: epsilon,
            domain: "[0, 1]",
        });
    }
    let (nx, ny) = law.prior().shape();
    let abort_output = law.entries().first().map_or(0, |e| e.output);
    let mut entries: Vec<LawEntry> = law
        .entries()
        .iter()
        .map(|e| LawEntry {
            leaf: e.leaf,
            output: e.output,
            cond: e.cond.iter().map(|c| (1.0 - epsilon) * c).collect(),
        })
        .collect();
    entries.push(LawEntry {
        leaf: fresh_leaf_id(law),
        output: abort_output,
        cond: vec![epsilon; nx * ny],
    });
    TranscriptLaw::new(law.prior().clone(), entries)
}

/// With probability `delta` (a public coin) the players exchange inputs and
/// output `f` exactly; otherwise they run the original protocol.
pub fn mix_with_exchange(law: &TranscriptLaw, delta: f64, f: &FunctionTable) -> Result<TranscriptLaw> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::Domain {
            value: delta,
            domain: "[0, 1]",
        });
    }
    let (nx, ny) = law.prior().shape();
    if (nx, ny) != (f.nx, f.ny) {
        return Err(Error::ShapeMismatch {
            expected: (nx, ny),
            got: (f.nx, f.ny),
        });
    }
    let base = fresh_leaf_id(law);
    let mut entries: Vec<LawEntry> = law
        .entries()
        .iter()
        .map(|e| LawEntry {
            leaf: e.leaf,
            output: e.output,
            cond: e.cond.iter().map(|c| (1.0 - delta) * c).collect(),
        })
        .collect();
    for i in 0..nx * ny {
        let mut cond = vec![0.0; nx * ny];
        cond[i] = delta;
        entries.push(LawEntry {
            leaf: base + i,
            output: f.get(i / ny, i % ny),
            cond,
        });
    }
    TranscriptLaw::new(law.prior().clone(), entries)
}
