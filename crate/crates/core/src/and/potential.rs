//! The stability potential `E[((c − ℓ)₊)²]` over pretend leaf laws.

use crate::and::buzzer::LeafPoint;
use crate::distributions::{Decomposition, ProductDistribution};
use crate::protocol::ProtocolTree;
use crate::{Error, Result};

const PRODUCT_TOLERANCE: f64 = 1e-9;

/// Potential of the buzzer protocol started at `(p, q)`, in closed form.
///
/// Zero when `max(p, q) ≥ c`. Otherwise, with `p ≥ q`,
/// `(1 − q/p)(c − p)² + pq[c²(1/p² − 1/c²) − 4c(1/p − 1/c) + 2 ln(c/p)]`.
pub fn potential_phi_closed(c: f64, p: f64, q: f64) -> Result<f64> {
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::Domain {
            value: c,
            domain: "(0, 1)",
        });
    }
    let (p, q) = if p >= q { (p, q) } else { (q, p) };
    if p >= c {
        return Ok(0.0);
    }
    if p <= 0.0 {
        // Both coordinates are zero: the walk never moves and ℓ = 0.
        return Ok(c * c);
    }
    let atom = (1.0 - q / p) * (c - p).powi(2);
    let spread = p * q * (c * c * (1.0 / (p * p) - 1.0 / (c * c)) - 4.0 * c * (1.0 / p - 1.0 / c) + 2.0 * (c / p).ln());
    Ok(atom + spread)
}

/// Pretend leaf law of `tree`: each reachable leaf's product posterior
/// under the pretend prior of `dec`.
pub fn pretend_leaf_law(tree: &ProtocolTree, dec: &Decomposition) -> Result<Vec<LeafPoint>> {
    tree.walk(&dec.pretend().to_joint())?
        .leaves
        .into_iter()
        .map(|l| {
            let prod = ProductDistribution::from_joint(&l.posterior, PRODUCT_TOLERANCE)?;
            Ok(LeafPoint {
                p: prod.p(),
                q: prod.q(),
                mass: l.reach,
            })
        })
        .collect()
}

/// `E[((c − ℓ)₊)²]` with `ℓ = max(ℓp, ℓq)` over the pretend leaf law.
pub fn potential_of_tree(tree: &ProtocolTree, c: f64, dec: &Decomposition) -> Result<f64> {
    Ok(pretend_leaf_law(tree, dec)?
        .iter()
        .map(|l| l.mass * (c - l.ell()).max(0.0).powi(2))
        .sum())
}

/// Pretend probability that `max(ℓp, ℓq) ≤ threshold`.
pub fn leaf_mass_below(tree: &ProtocolTree, dec: &Decomposition, threshold: f64) -> Result<f64> {
    Ok(pretend_leaf_law(tree, dec)?
        .iter()
        .filter(|l| l.ell() <= threshold)
        .map(|l| l.mass)
        .sum())
}
