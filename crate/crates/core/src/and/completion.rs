//! Turning an erring protocol into a zero-error one by verifying, below
//! each leaf, every input on which the leaf's output would be wrong.

use crate::distributions::{truncated_entropy, JointDistribution};
use crate::cost::{LawEntry, TranscriptLaw};
use crate::protocol::{FunctionTable, Node, Owner, ProtocolTree, TreeBuilder};
use crate::{Error, Result};

/// `4|X||Y|·h̄(√ε)`: the information a completion may add.
pub fn completion_bound(nx: usize, ny: usize, epsilon: f64) -> f64 {
    4.0 * (nx * ny) as f64 * truncated_entropy(epsilon.max(0.0).sqrt())
}

/// Deterministic verification appended below one leaf.
#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Done(u32),
    /// `owner` announces whether its input equals `value`.
    Ask {
        owner: Owner,
        value: usize,
        yes: Box<Plan>,
        no: Box<Plan>,
    },
}

struct Verifier<'a> {
    f: &'a FunctionTable,
    output: u32,
    omega: Vec<(usize, usize)>,
    /// Leaf posterior marginals; `None` when the leaf is unreachable.
    marginals: Option<(Vec<f64>, Vec<f64>)>,
}

impl Verifier<'_> {
    fn alice_first(&self, x: usize, y: usize) -> bool {
        self.marginals.as_ref().is_none_or(|(rows, cols)| rows[x] <= cols[y])
    }

    fn plan(&self, k: usize, alice: &[bool], bob: &[bool]) -> Plan {
        let Some(pos) = self.omega[k..].iter().position(|&(x, y)| alice[x] && bob[y]) else {
            return Plan::Done(self.output);
        };
        let k = k + pos;
        let (x, y) = self.omega[k];
        let single = |s: &[bool]| s.iter().filter(|&&b| b).count() == 1;
        let without = |s: &[bool], v: usize| {
            let mut s = s.to_vec();
            s[v] = false;
            s
        };
        let only = |len: usize, v: usize| (0..len).map(|u| u == v).collect::<Vec<_>>();
        let hit = Plan::Done(self.f.get(x, y));
        if self.alice_first(x, y) {
            let second = if single(bob) {
                hit
            } else {
                Plan::Ask {
                    owner: Owner::Bob,
                    value: y,
                    yes: Box::new(hit),
                    no: Box::new(self.plan(k + 1, &only(alice.len(), x), &without(bob, y))),
                }
            };
            if single(alice) {
                second
            } else {
                Plan::Ask {
                    owner: Owner::Alice,
                    value: x,
                    yes: Box::new(second),
                    no: Box::new(self.plan(k + 1, &without(alice, x), bob)),
                }
            }
        } else {
            let second = if single(alice) {
                hit
            } else {
                Plan::Ask {
                    owner: Owner::Alice,
                    value: x,
                    yes: Box::new(hit),
                    no: Box::new(self.plan(k + 1, &without(alice, x), &only(bob.len(), y))),
                }
            };
            if single(bob) {
                second
            } else {
                Plan::Ask {
                    owner: Owner::Bob,
                    value: y,
                    yes: Box::new(second),
                    no: Box::new(self.plan(k + 1, alice, &without(bob, y))),
                }
            }
        }
    }
}

fn verifier<'a>(
    f: &'a FunctionTable,
    output: u32,
    alice: &[bool],
    bob: &[bool],
    posterior: Option<&JointDistribution>,
) -> Verifier<'a> {
    let omega = (0..f.nx)
        .flat_map(|x| (0..f.ny).map(move |y| (x, y)))
        .filter(|&(x, y)| alice[x] && bob[y] && f.get(x, y) != output)
        .collect();
    Verifier {
        f,
        output,
        omega,
        marginals: posterior.map(|d| (d.row_marginal(), d.col_marginal())),
    }
}

fn plan_depth(plan: &Plan) -> usize {
    match plan {
        Plan::Done(_) => 0,
        Plan::Ask { yes, no, .. } => 1 + plan_depth(yes).max(plan_depth(no)),
    }
}

fn emit(plan: &Plan, b: &mut TreeBuilder, nx: usize, ny: usize) -> usize {
    match plan {
        Plan::Done(z) => b.leaf(*z),
        Plan::Ask {
            owner,
            value,
            yes,
            no,
        } => {
            let n = if *owner == Owner::Alice { nx } else { ny };
            let c0 = emit(no, b, nx, ny);
            let c1 = emit(yes, b, nx, ny);
            let table = (0..n).map(|v| if v == *value { 1.0 } else { 0.0 }).collect();
            b.signal(*owner, table, c0, c1)
        }
    }
}

/// Appends verification rounds below every leaf of `tree`. Each leaf with
/// output `z` checks, in row-major order, the inputs `(x, y)` it can still
/// be at with `f(x, y) ≠ z`. The player whose candidate value has the
/// smaller posterior marginal at the leaf answers first, Alice on ties and
/// on leaves the prior never reaches. Questions whose answer is already
/// determined are skipped.
pub fn complete_to_zero_error(tree: &ProtocolTree, f: &FunctionTable, prior: &JointDistribution) -> Result<ProtocolTree> {
    if (tree.nx(), tree.ny()) != (f.nx, f.ny) {
        return Err(Error::ShapeMismatch {
            expected: (tree.nx(), tree.ny()),
            got: (f.nx, f.ny),
        });
    }
    let states = tree.node_states(prior)?;
    let tables = tree.transcript_table();
    let mut plans = vec![None; tree.nodes().len()];
    let mut extra = 0;
    for t in &tables {
        let alice: Vec<bool> = t.alice.iter().map(|&a| a > 0.0).collect();
        let bob: Vec<bool> = t.bob.iter().map(|&b| b > 0.0).collect();
        let posterior = states[t.leaf].as_ref().map(|s| &s.posterior);
        let plan = verifier(f, t.output, &alice, &bob, posterior).plan(0, &alice, &bob);
        extra = extra.max(plan_depth(&plan));
        plans[t.leaf] = Some(plan);
    }
    let mut outputs = tree.outputs().to_vec();
    outputs.extend(f.alphabet());
    outputs.sort_unstable();
    outputs.dedup();
    let mut b = TreeBuilder::new(tree.nx(), tree.ny(), outputs).depth_cap(tree.depth_cap() + extra);
    // Post-order copy with leaves replaced by their plans.
    let mut new_id = vec![usize::MAX; tree.nodes().len()];
    let mut stack = vec![(tree.root(), false)];
    while let Some((id, expanded)) = stack.pop() {
        match &tree.nodes()[id] {
            Node::Leaf { .. } => {
                let plan = plans[id].as_ref().expect("every leaf has a plan");
                new_id[id] = emit(plan, &mut b, tree.nx(), tree.ny());
            }
            Node::Internal {
                owner,
                send_one,
                child0,
                child1,
            } => {
                if expanded {
                    new_id[id] = b.signal(*owner, send_one.clone(), new_id[*child0], new_id[*child1]);
                } else {
                    stack.push((id, true));
                    stack.push((*child1, false));
                    stack.push((*child0, false));
                }
            }
        }
    }
    b.build(new_id[tree.root()])
}

fn regions(plan: &Plan, alice: Vec<bool>, bob: Vec<bool>, out: &mut Vec<(u32, Vec<bool>, Vec<bool>)>) {
    match plan {
        Plan::Done(z) => out.push((*z, alice, bob)),
        Plan::Ask {
            owner,
            value,
            yes,
            no,
        } => {
            let split = |s: &[bool]| {
                let yes: Vec<bool> = s.iter().enumerate().map(|(v, &b)| b && v == *value).collect();
                let no: Vec<bool> = s.iter().enumerate().map(|(v, &b)| b && v != *value).collect();
                (yes, no)
            };
            match owner {
                Owner::Alice => {
                    let (ya, na) = split(&alice);
                    regions(yes, ya, bob.clone(), out);
                    regions(no, na, bob, out);
                }
                Owner::Bob => {
                    let (yb, nb) = split(&bob);
                    regions(yes, alice.clone(), yb, out);
                    regions(no, alice, nb, out);
                }
            }
        }
    }
}

/// [`complete_to_zero_error`] on a transcript law. Each transcript is split
/// by the deterministic verification below it; the possible inputs of a
/// transcript are taken to be the rectangle spanned by its support.
pub fn complete_law(law: &TranscriptLaw, f: &FunctionTable) -> Result<TranscriptLaw> {
    let (nx, ny) = law.prior().shape();
    if (nx, ny) != (f.nx, f.ny) {
        return Err(Error::ShapeMismatch {
            expected: (nx, ny),
            got: (f.nx, f.ny),
        });
    }
    let posteriors: Vec<Option<JointDistribution>> = {
        let mut v = vec![None; law.entries().len()];
        for (k, d, _) in law.leaf_posteriors() {
            v[k] = Some(d);
        }
        v
    };
    let mut entries = Vec::new();
    let mut next_leaf = 0;
    for (k, e) in law.entries().iter().enumerate() {
        let alice: Vec<bool> = (0..nx).map(|x| (0..ny).any(|y| e.cond[x * ny + y] > 0.0)).collect();
        let bob: Vec<bool> = (0..ny).map(|y| (0..nx).any(|x| e.cond[x * ny + y] > 0.0)).collect();
        let plan = verifier(f, e.output, &alice, &bob, posteriors[k].as_ref()).plan(0, &alice, &bob);
        let mut parts = Vec::new();
        regions(&plan, vec![true; nx], vec![true; ny], &mut parts);
        for (z, a, b) in parts {
            let cond: Vec<f64> = (0..nx * ny)
                .map(|i| if a[i / ny] && b[i % ny] { e.cond[i] } else { 0.0 })
                .collect();
            if cond.iter().any(|&c| c > 0.0) {
                entries.push(LawEntry {
                    leaf: next_leaf,
                    output: z,
                    cond,
                });
                next_leaf += 1;
            }
        }
    }
    TranscriptLaw::new(law.prior().clone(), entries)
}
