//! Information costs of transcript laws.
//!
//! Everything here is computed from the joint law of `(X, Y, Π)` by direct
//! summation. Concealed information is computed independently of the
//! information cost, from leaf posteriors, so that the identity linking the
//! two is a genuine check.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{entropy_profile, odot, Decomposition, EntropyProfile, JointDistribution};
use crate::numeric::csum;
use crate::protocol::{Node, ProtocolTree};
use crate::{Error, Result};

/// Tolerance on `Σ_t Pr[t | x, y] = 1`.
const LAW_TOLERANCE: f64 = 1e-10;

/// One transcript with its conditional probabilities `Pr[Π = t | x, y]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LawEntry {
    pub leaf: usize,
    pub output: u32,
    /// Row-major over inputs.
    pub cond: Vec<f64>,
}

/// The joint law of inputs and transcript: a prior together with a
/// prior-free channel from inputs to transcripts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLaw {
    prior: JointDistribution,
    entries: Vec<LawEntry>,
}

impl TranscriptLaw {
    pub fn new(prior: JointDistribution, entries: Vec<LawEntry>) -> Result<Self> {
        let n = prior.nx() * prior.ny();
        for e in &entries {
            if e.cond.len() != n {
                return Err(Error::InvalidDistribution(format!(
                    "transcript {} has {} conditionals for {n} inputs",
                    e.leaf,
                    e.cond.len()
                )));
            }
            if e.cond.iter().any(|c| !(-1e-12..=1.0 + 1e-12).contains(c)) {
                return Err(Error::InvalidDistribution(format!(
                    "transcript {} has a conditional probability outside [0, 1]",
                    e.leaf
                )));
            }
        }
        for i in 0..n {
            if prior.mass()[i] > 0.0 {
                let total = csum(entries.iter().map(|e| e.cond[i]));
                if (total - 1.0).abs() > LAW_TOLERANCE {
                    return Err(Error::InvalidDistribution(format!(
                        "transcript probabilities at input {i} sum to {total}"
                    )));
                }
            }
        }
        Ok(Self { prior, entries })
    }

    pub fn prior(&self) -> &JointDistribution {
        &self.prior
    }

    pub fn entries(&self) -> &[LawEntry] {
        &self.entries
    }

    /// The same channel under a different prior.
    pub fn with_prior(&self, prior: JointDistribution) -> Result<Self> {
        self.prior.check_shape(&prior)?;
        Self::new(prior, self.entries.clone())
    }

    /// `Pr[Π = t]` for each entry.
    pub fn reach(&self) -> Vec<f64> {
        self.entries.iter().map(|e| self.entry_reach(e)).collect()
    }

    fn entry_reach(&self, e: &LawEntry) -> f64 {
        csum(self.prior.mass().iter().zip(&e.cond).map(|(m, c)| m * c))
    }

    /// `(entry index, posterior, reach)` for every transcript of positive
    /// probability.
    pub fn leaf_posteriors(&self) -> Vec<(usize, JointDistribution, f64)> {
        let (nx, ny) = self.prior.shape();
        self.entries
            .iter()
            .enumerate()
            .filter_map(|(k, e)| {
                let w: Vec<f64> = self.prior.mass().iter().zip(&e.cond).map(|(m, c)| m * c).collect();
                let r = csum(w.iter().copied());
                (r > 0.0).then(|| (k, JointDistribution::from_weights(nx, ny, w).expect("positive"), r))
            })
            .collect()
    }
}

/// The transcript law of `tree` run on `prior`. Transcripts that have
/// probability zero on every input are dropped.
pub fn law_of(tree: &ProtocolTree, prior: &JointDistribution) -> Result<TranscriptLaw> {
    if prior.shape() != (tree.nx(), tree.ny()) {
        return Err(Error::ShapeMismatch {
            expected: (tree.nx(), tree.ny()),
            got: prior.shape(),
        });
    }
    let ny = tree.ny();
    let entries = tree
        .transcript_table()
        .into_iter()
        .map(|t| LawEntry {
            leaf: t.leaf,
            output: t.output,
            cond: (0..tree.nx() * ny).map(|i| t.alice[i / ny] * t.bob[i % ny]).collect(),
        })
        .filter(|e| e.cond.iter().any(|&c| c > 0.0))
        .collect();
    TranscriptLaw::new(prior.clone(), entries)
}

/// `Σ m·log2(c / c̄)` where `c̄` is the conditional averaged over the cells
/// in the same group; the sum of `I(Π; ·)` over groups.
fn grouped_information(law: &TranscriptLaw, group: impl Fn(usize) -> usize + Sync, groups: usize) -> f64 {
    let prior = law.prior.mass();
    let mut group_mass = vec![0.0; groups];
    for (i, m) in prior.iter().enumerate() {
        group_mass[group(i)] += m;
    }
    let terms: Vec<f64> = law
        .entries
        .par_iter()
        .map(|e| {
            let mut avg = vec![0.0; groups];
            for (i, (m, c)) in prior.iter().zip(&e.cond).enumerate() {
                avg[group(i)] += m * c;
            }
            for (a, g) in avg.iter_mut().zip(&group_mass) {
                if *g > 0.0 {
                    *a /= g;
                }
            }
            csum(prior.iter().zip(&e.cond).enumerate().map(|(i, (m, c))| {
                let a = avg[group(i)];
                if *m > 0.0 && *c > 0.0 && a > 0.0 {
                    m * c * (c / a).log2()
                } else {
                    0.0
                }
            }))
        })
        .collect();
    csum(terms).max(0.0)
}

/// `I(Π; X | Y)`.
pub fn info_about_x(law: &TranscriptLaw) -> f64 {
    let ny = law.prior.ny();
    grouped_information(law, move |i| i % ny, ny)
}

/// `I(Π; Y | X)`.
pub fn info_about_y(law: &TranscriptLaw) -> f64 {
    let ny = law.prior.ny();
    grouped_information(law, move |i| i / ny, law.prior.nx())
}

/// Internal information cost `I(Π; X | Y) + I(Π; Y | X)`.
pub fn internal_ic(law: &TranscriptLaw) -> f64 {
    info_about_x(law) + info_about_y(law)
}

/// External information cost `I(Π; XY)`.
pub fn external_ic(law: &TranscriptLaw) -> f64 {
    grouped_information(law, |_| 0, 1)
}

/// `E_t[H(X|Y) + H(Y|X)]` over leaf posteriors.
pub fn concealed_internal(law: &TranscriptLaw) -> f64 {
    csum(law.leaf_posteriors().iter().map(|(_, d, r)| r * entropy_profile(d).conditional_sum()))
}

/// `E_t[H(XY)]` over leaf posteriors.
pub fn concealed_external(law: &TranscriptLaw) -> f64 {
    csum(law.leaf_posteriors().iter().map(|(_, d, r)| r * entropy_profile(d).h_xy))
}

/// All four costs of a law, plus the prior's entropy profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostReport {
    pub ic_internal: f64,
    pub ic_external: f64,
    pub ci_internal: f64,
    pub ci_external: f64,
    pub prior_entropy: EntropyProfile,
}

impl CostReport {
    pub fn of(law: &TranscriptLaw) -> Self {
        Self {
            ic_internal: internal_ic(law),
            ic_external: external_ic(law),
            ci_internal: concealed_internal(law),
            ci_external: concealed_external(law),
            prior_entropy: entropy_profile(law.prior()),
        }
    }

    /// Largest violation of `IC + CI = H(X|Y) + H(Y|X)` and `IC_ext + CI_ext = H(XY)`.
    pub fn conservation_gap(&self) -> f64 {
        let internal = self.ic_internal + self.ci_internal - self.prior_entropy.conditional_sum();
        let external = self.ic_external + self.ci_external - self.prior_entropy.h_xy;
        internal.abs().max(external.abs())
    }
}

fn check_same_reference(a: &Decomposition, b: &Decomposition) -> Result<()> {
    let gap = a.reference().max_abs_diff(b.reference());
    if gap > 1e-12 {
        return Err(Error::Precondition(format!(
            "decompositions use different reference distributions (gap {gap:e})"
        )));
    }
    Ok(())
}

/// Converts a real-world probability of moving from `parent` to `child` into
/// the pretend-world one: `λ̄ = λ·⟨ν,μ_parent⟩/⟨ν,μ_child⟩`.
pub fn pretend_prob(lambda_real: f64, parent: &Decomposition, child: &Decomposition) -> Result<f64> {
    check_same_reference(parent, child)?;
    Ok(lambda_real * parent.inner() / child.inner())
}

/// Inverse of [`pretend_prob`].
pub fn real_prob(lambda_pretend: f64, parent: &Decomposition, child: &Decomposition) -> Result<f64> {
    check_same_reference(parent, child)?;
    Ok(lambda_pretend * child.inner() / parent.inner())
}

/// Pretend-world leaves: the law run on the product prior `μ`, as
/// `(entry index, pretend posterior, pretend reach)`.
pub fn pretend_leaves(law: &TranscriptLaw, dec: &Decomposition) -> Result<Vec<(usize, JointDistribution, f64)>> {
    Ok(law.with_prior(dec.pretend().to_joint())?.leaf_posteriors())
}

fn check_decomposition(prior: &JointDistribution, dec: &Decomposition) -> Result<()> {
    prior.check_shape(dec.reference())?;
    let gap = prior.max_abs_diff(&dec.real());
    if gap > 1e-9 {
        return Err(Error::DecompositionMismatch(gap));
    }
    Ok(())
}

/// Scaled information `⟨ν,μ⟩·CI_{ν⊙μ}`, summed over pretend-world leaves:
/// `Σ_t Pr_μ[t]·⟨ν,μ_t⟩·CI(ν⊙μ_t)`.
pub fn sim(law: &TranscriptLaw, dec: &Decomposition) -> Result<f64> {
    check_decomposition(law.prior(), dec)?;
    let nu = dec.reference();
    let terms = pretend_leaves(law, dec)?.into_iter().map(|(_, mu_t, r)| {
        let ip = nu.inner(&mu_t).expect("same shape");
        if ip <= 0.0 {
            return 0.0;
        }
        let real = odot(nu, &mu_t).expect("positive inner product");
        r * ip * entropy_profile(&real).conditional_sum()
    });
    Ok(csum(terms))
}

/// Conservation data at one internal node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NodeAudit {
    pub node: usize,
    /// `CI` of the subtree at this node's posterior.
    pub ci: f64,
    /// `Σ_b λ_b·CI_b` over the children.
    pub ci_children: f64,
    /// Largest entrywise gap between the posterior and `Σ_b λ_b μ_b`.
    pub drift: f64,
    /// `SIM` at this node, when a decomposition was supplied.
    pub sim: Option<f64>,
    /// `Σ_b λ̄_b·SIM_b` with pretend-world transition probabilities.
    pub sim_children: Option<f64>,
}

impl NodeAudit {
    pub fn max_gap(&self) -> f64 {
        let sim_gap = match (self.sim, self.sim_children) {
            (Some(a), Some(b)) => (a - b).abs(),
            _ => 0.0,
        };
        (self.ci - self.ci_children).abs().max(self.drift).max(sim_gap)
    }
}

/// Checks the no-drift, CI-conservation and (given a decomposition of the
/// prior) SIM-martingale identities at every reachable internal node.
///
/// The CI of each subtree is obtained as `H(X|Y) + H(Y|X) − IC` of the
/// subtree's own law at the node posterior, so the comparison with the
/// children is not a tautology of the aggregation.
pub fn node_audit(tree: &ProtocolTree, prior: &JointDistribution, dec: Option<&Decomposition>) -> Result<Vec<NodeAudit>> {
    if let Some(dec) = dec {
        check_decomposition(prior, dec)?;
    }
    let real = tree.node_states(prior)?;
    let pretend = match dec {
        Some(d) => Some(tree.node_states(&d.pretend().to_joint())?),
        None => None,
    };
    let ci_at = |node: usize, post: &JointDistribution| -> Result<f64> {
        let law = law_of(&tree.subtree(node), post)?;
        Ok(entropy_profile(post).conditional_sum() - internal_ic(&law))
    };
    let sim_at = |node: usize, mu: &JointDistribution, d: &Decomposition| -> Result<f64> {
        let nu = d.reference();
        let ip = nu.inner(mu)?;
        let real = odot(nu, mu)?;
        Ok(ip * ci_at(node, &real)?)
    };
    let mut out = Vec::new();
    for (id, node) in tree.nodes().iter().enumerate() {
        let (Node::Internal { child0, child1, .. }, Some(state)) = (node, &real[id]) else {
            continue;
        };
        let ci = ci_at(id, &state.posterior)?;
        let mut ci_children = 0.0;
        let mut mix = vec![0.0; state.posterior.mass().len()];
        for c in [*child0, *child1] {
            if let Some(cs) = &real[c] {
                let lambda = cs.reach / state.reach;
                ci_children += lambda * ci_at(c, &cs.posterior)?;
                for (m, p) in mix.iter_mut().zip(cs.posterior.mass()) {
                    *m += lambda * p;
                }
            }
        }
        let drift = mix
            .iter()
            .zip(state.posterior.mass())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let (mut sim, mut sim_children) = (None, None);
        if let (Some(d), Some(ps)) = (dec, &pretend) {
            if let Some(pn) = &ps[id] {
                sim = Some(sim_at(id, &pn.posterior, d)?);
                let mut acc = 0.0;
                for c in [*child0, *child1] {
                    if let Some(pc) = &ps[c] {
                        acc += pc.reach / pn.reach * sim_at(c, &pc.posterior, d)?;
                    }
                }
                sim_children = Some(acc);
            }
        }
        out.push(NodeAudit {
            node: id,
            ci,
            ci_children,
            drift,
            sim,
            sim_children,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{symmetric_decomposition, ProductDistribution};
    use crate::protocol::{FunctionTable, TreeBuilder};

    fn diag() -> JointDistribution {
        JointDistribution::from_rows(&[&[0.5, 0.0], &[0.0, 0.5]]).unwrap()
    }

    fn fair_coin() -> ProtocolTree {
        let mut b = TreeBuilder::new(2, 2, vec![0]);
        let (l0, l1) = (b.leaf(0), b.leaf(0));
        let r = b.alice(vec![0.5, 0.5], l0, l1);
        b.build(r).unwrap()
    }

    #[test]
    fn law_examples() {
        let prior = JointDistribution::uniform(2, 2);
        let law = law_of(&ProtocolTree::constant(2, 2, 0), &prior).unwrap();
        assert_eq!(law.entries()[0].cond, vec![1.0; 4]);
        let law = law_of(&ProtocolTree::alice_reveals(2, 2, 0), &prior).unwrap();
        for e in law.entries() {
            let x = if e.cond[0] == 1.0 { 0 } else { 1 };
            for i in 0..4 {
                assert_eq!(e.cond[i], if i / 2 == x { 1.0 } else { 0.0 });
            }
        }
        let law = law_of(&fair_coin(), &prior).unwrap();
        assert!(law.entries().iter().all(|e| e.cond.iter().all(|&c| c == 0.5)));
    }

    #[test]
    fn internal_ic_examples() {
        let u = JointDistribution::uniform(2, 2);
        assert_eq!(internal_ic(&law_of(&ProtocolTree::constant(2, 2, 0), &u).unwrap()), 0.0);
        let ex = ProtocolTree::exchange_inputs(&FunctionTable::and());
        assert!(internal_ic(&law_of(&ex, &diag()).unwrap()).abs() < 1e-15);
        let reveal = law_of(&ProtocolTree::alice_reveals(2, 2, 0), &u).unwrap();
        assert!((internal_ic(&reveal) - 1.0).abs() < 1e-15);
        assert!((info_about_x(&reveal) - 1.0).abs() < 1e-15);
        assert_eq!(info_about_y(&reveal), 0.0);
    }

    #[test]
    fn external_ic_examples() {
        let u = JointDistribution::uniform(2, 2);
        assert_eq!(external_ic(&law_of(&ProtocolTree::constant(2, 2, 0), &u).unwrap()), 0.0);
        let reveal = law_of(&ProtocolTree::alice_reveals(2, 2, 0), &u).unwrap();
        assert!((external_ic(&reveal) - 1.0).abs() < 1e-15);
        let ex = ProtocolTree::exchange_inputs(&FunctionTable::and());
        assert!((external_ic(&law_of(&ex, &diag()).unwrap()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn cost_report_conserves() {
        let prior = JointDistribution::from_rows(&[&[0.1, 0.2], &[0.3, 0.4]]).unwrap();
        let ex = ProtocolTree::exchange_inputs(&FunctionTable::and());
        let report = CostReport::of(&law_of(&ex, &prior).unwrap());
        assert!(report.conservation_gap() < 1e-12);
        assert!(report.ci_internal.abs() < 1e-15);
        let json = serde_json::to_value(report).unwrap();
        assert!(json.get("prior_entropy").is_some());
    }

    #[test]
    fn sim_examples() {
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let dec = symmetric_decomposition(&w).unwrap();
        let constant = law_of(&ProtocolTree::constant(2, 2, 0), &w).unwrap();
        let expected = dec.inner() * entropy_profile(&w).conditional_sum();
        assert!((sim(&constant, &dec).unwrap() - expected).abs() < 1e-12);

        let ex = law_of(&ProtocolTree::exchange_inputs(&FunctionTable::and()), &w).unwrap();
        assert!(sim(&ex, &dec).unwrap().abs() < 1e-15);

        let u = JointDistribution::uniform(2, 2);
        let dec = Decomposition::new(u.clone(), ProductDistribution::new(0.5, 0.5).unwrap()).unwrap();
        let mut b = TreeBuilder::new(2, 2, vec![0]);
        let (l0, l1) = (b.leaf(0), b.leaf(0));
        let r = b.alice(vec![0.3, 0.8], l0, l1);
        let law = law_of(&b.build(r).unwrap(), &u).unwrap();
        let ci = concealed_internal(&law);
        assert!((sim(&law, &dec).unwrap() - dec.inner() * ci).abs() < 1e-9);
    }

    #[test]
    fn sim_rejects_mismatched_decomposition() {
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let dec = symmetric_decomposition(&JointDistribution::uniform(2, 2)).unwrap();
        let law = law_of(&ProtocolTree::constant(2, 2, 0), &w).unwrap();
        assert!(matches!(sim(&law, &dec), Err(Error::DecompositionMismatch(_))));
    }

    #[test]
    fn pretend_prob_examples() {
        let nu = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.2, 0.2]]).unwrap();
        let parent = Decomposition::new(nu.clone(), ProductDistribution::new(0.5, 0.4).unwrap()).unwrap();
        assert_eq!(pretend_prob(0.3, &parent, &parent).unwrap(), 0.3);
        // Alice signal with Pr[1|x] = (0.2, 0.9) from pretend p = 0.5.
        let lam1 = 0.5 * 0.2 + 0.5 * 0.9;
        let p1 = 0.5 * 0.9 / lam1;
        let p0 = 0.5 * 0.1 / (1.0 - lam1);
        let c0 = parent.with_pretend(ProductDistribution::new(p0, 0.4).unwrap()).unwrap();
        let c1 = parent.with_pretend(ProductDistribution::new(p1, 0.4).unwrap()).unwrap();
        let r0 = real_prob(1.0 - lam1, &parent, &c0).unwrap();
        let r1 = real_prob(lam1, &parent, &c1).unwrap();
        assert!((r0 + r1 - 1.0).abs() < 1e-12);
        assert!((pretend_prob(r0, &parent, &c0).unwrap() + pretend_prob(r1, &parent, &c1).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn node_audit_on_exchange() {
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let dec = symmetric_decomposition(&w).unwrap();
        let ex = ProtocolTree::exchange_inputs(&FunctionTable::and());
        let audit = node_audit(&ex, &w, Some(&dec)).unwrap();
        assert_eq!(audit.len(), 3);
        assert!(audit.iter().all(|a| a.max_gap() < 1e-12));
    }
}
