//! The ε-flip: with probability ε, an input `x1` behaves as `x0`.

use crate::and::buzzer::{grid_tree, Detour, GridWalkSpec};
use crate::distributions::{symmetric_decomposition, JointDistribution};
use crate::cost::{law_of, LawEntry, TranscriptLaw};
use crate::protocol::{Node, ProtocolTree};
use crate::{Error, Result};

fn check_rows(nx: usize, x0: usize, x1: usize, epsilon: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain {
            value: epsilon,
            domain: "[0, 1]",
        });
    }
    if x0 == x1 || x0 >= nx || x1 >= nx {
        return Err(Error::Precondition(format!(
            "flip needs two distinct rows below {nx}, got {x0} and {x1}"
        )));
    }
    Ok(())
}

/// `Pr'[t | x1, y] = ε·Pr[t | x0, y] + (1 − ε)·Pr[t | x1, y]`; other rows and
/// the prior are unchanged.
pub fn flip_transform(law: &TranscriptLaw, x0: usize, x1: usize, epsilon: f64) -> Result<TranscriptLaw> {
    let (nx, ny) = law.prior().shape();
    check_rows(nx, x0, x1, epsilon)?;
    let entries = law
        .entries()
        .iter()
        .map(|e| {
            let mut cond = e.cond.clone();
            for y in 0..ny {
                cond[x1 * ny + y] = epsilon * e.cond[x0 * ny + y] + (1.0 - epsilon) * e.cond[x1 * ny + y];
            }
            LawEntry {
                leaf: e.leaf,
                output: e.output,
                cond,
            }
        })
        .filter(|e| e.cond.iter().any(|&c| c > 0.0))
        .collect();
    TranscriptLaw::new(law.prior().clone(), entries)
}

/// The flip realised on a tree: Alice's send probabilities for `x1` are
/// replaced by those of the mixture `ε·x0 + (1 − ε)·x1`, node by node.
pub fn flip_tree(tree: &ProtocolTree, x0: usize, x1: usize, epsilon: f64) -> Result<ProtocolTree> {
    check_rows(tree.nx(), x0, x1, epsilon)?;
    let mut nodes = tree.nodes().to_vec();
    // (node, Pr[Alice's bits so far | x0], Pr[… | x1])
    let mut stack = vec![(tree.root(), 1.0f64, 1.0f64)];
    while let Some((id, r0, r1)) = stack.pop() {
        let Node::Internal {
            owner,
            send_one,
            child0,
            child1,
        } = &tree.nodes()[id]
        else {
            continue;
        };
        let (c0, c1) = (*child0, *child1);
        if *owner == crate::protocol::Owner::Alice {
            let (s0, s1) = (send_one[x0], send_one[x1]);
            let mixed = epsilon * r0 + (1.0 - epsilon) * r1;
            let mixed_one = epsilon * r0 * s0 + (1.0 - epsilon) * r1 * s1;
            if let Node::Internal { send_one, .. } = &mut nodes[id] {
                if mixed > 0.0 {
                    send_one[x1] = (mixed_one / mixed).clamp(0.0, 1.0);
                }
            }
            stack.push((c0, r0 * (1.0 - s0), r1 * (1.0 - s1)));
            stack.push((c1, r0 * s0, r1 * s1));
        } else {
            stack.push((c0, r0, r1));
            stack.push((c1, r0, r1));
        }
    }
    ProtocolTree::with_depth_cap(
        tree.nx(),
        tree.ny(),
        tree.outputs().to_vec(),
        tree.root(),
        nodes,
        tree.depth_cap(),
    )
}

/// AND with one-sided error: the grid-walk buzzer law for `w` with input
/// `x = 1` flipped to `x = 0` with probability `epsilon`. Errors can only
/// output 0 on `(1, 1)`.
pub fn one_sided_and(epsilon: f64, w: &JointDistribution, n: usize) -> Result<TranscriptLaw> {
    let pretend = symmetric_decomposition(w)?.pretend();
    let (spec, _) = GridWalkSpec::snap(n, pretend.p(), pretend.q())?;
    let law = law_of(&grid_tree(spec, Detour::default())?, w)?;
    flip_transform(&law, 0, 1, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{evaluate_error, evaluate_law_error, ErrorKind, FunctionTable, Task};

    #[test]
    fn zero_flip_is_identity() {
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let law = law_of(&ProtocolTree::exchange_inputs(&FunctionTable::and()), &w).unwrap();
        assert_eq!(flip_transform(&law, 0, 1, 0.0).unwrap(), law);
    }

    #[test]
    fn full_flip_copies_the_row() {
        let and = FunctionTable::and();
        let w = JointDistribution::uniform(2, 2);
        let law = law_of(&ProtocolTree::exchange_inputs(&and), &w).unwrap();
        let flipped = flip_transform(&law, 0, 1, 1.0).unwrap();
        let r = evaluate_law_error(&flipped, &Task::pointwise(and.clone(), 1.0).unwrap()).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                let expected = if and.get(0, y) != and.get(x, y) { 1.0 } else { 0.0 };
                assert_eq!(r.per_input[x * 2 + y], expected);
            }
        }
    }

    #[test]
    fn tree_flip_matches_law_flip() {
        let and = FunctionTable::and();
        let t = ProtocolTree::exchange_inputs(&and);
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let by_law = flip_transform(&law_of(&t, &w).unwrap(), 0, 1, 0.1).unwrap();
        let by_tree = law_of(&flip_tree(&t, 0, 1, 0.1).unwrap(), &w).unwrap();
        let by_law: Vec<_> = by_law.entries().iter().map(|e| (e.leaf, e.cond.clone())).collect();
        for e in by_tree.entries() {
            let (_, cond) = by_law.iter().find(|(l, _)| *l == e.leaf).unwrap();
            for (a, b) in cond.iter().zip(&e.cond) {
                assert!((a - b).abs() < 1e-15);
            }
        }
        let task = Task::new(and, ErrorKind::Pointwise, 0.1, Some((1, 0))).unwrap();
        let r = evaluate_error(&flip_tree(&t, 0, 1, 0.1).unwrap(), &task).unwrap();
        assert!((r.max_pointwise - 0.1).abs() < 1e-15);
        assert_eq!(r.one_sided_violation, 0.0);
        assert!(r.per_input[..2].iter().all(|&e| e == 0.0));
    }

    #[test]
    fn one_sided_and_errors_only_on_corner() {
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let task = Task::new(FunctionTable::and(), ErrorKind::Pointwise, 0.05, Some((1, 0))).unwrap();
        let law = one_sided_and(0.05, &w, 64).unwrap();
        let r = evaluate_law_error(&law, &task).unwrap();
        assert!((r.per_input[3] - 0.05).abs() < 1e-12);
        assert!(r.per_input[..3].iter().all(|&e| e < 1e-15));
        assert_eq!(r.one_sided_violation, 0.0);
        let r = evaluate_law_error(&one_sided_and(1.0, &w, 64).unwrap(), &task).unwrap();
        assert!((r.per_input[3] - 1.0).abs() < 1e-12);
        let r = evaluate_law_error(&one_sided_and(0.0, &w, 64).unwrap(), &task).unwrap();
        assert!(r.max_pointwise < 1e-15);
    }
}
