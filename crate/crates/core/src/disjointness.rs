//! Set disjointness from one-sided AND protocols run on coordinates in a
//! random order.
//!
//! `DISJ(x, y) = 1` iff some coordinate has `x_i = y_i = 1`. Inputs over `n`
//! coordinates are bitmasks, bit `i` holding coordinate `i`. The input law is
//! a product over coordinates, so the prior of each round's coordinate is
//! its own coordinate prior whatever happened in earlier rounds.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::and::{flip_transform, one_sided_and};
use crate::cost::{internal_ic, law_of, LawEntry, TranscriptLaw};
use crate::distributions::{truncated_entropy, JointDistribution};
use crate::numeric::{bisect, csum, linear_fit};
use crate::optimize::{maximize_ic_and, Constraint};
use crate::protocol::{FunctionTable, ProtocolTree};
use crate::{Error, Result};

/// Largest `n` for exact enumeration.
pub const EXACT_MAX_N: usize = 4;

/// Largest `n` for building the full composite transcript law.
pub const LAW_MAX_N: usize = 3;

/// Default grid resolution of the per-round AND protocol.
pub const DEFAULT_AND_GRID: usize = 256;

/// Cap on `entries × cells` of a composite law.
const LAW_SIZE_CAP: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjInstance {
    n: usize,
    coord_priors: Vec<JointDistribution>,
    p_one: f64,
}

impl DisjInstance {
    pub fn new(coord_priors: Vec<JointDistribution>) -> Result<Self> {
        if coord_priors.is_empty() {
            return Err(Error::Precondition("at least one coordinate is needed".into()));
        }
        if coord_priors.len() > 31 {
            return Err(Error::SizeCap(format!("{} coordinates", coord_priors.len())));
        }
        for w in &coord_priors {
            if w.shape() != (2, 2) {
                return Err(Error::ShapeMismatch {
                    expected: (2, 2),
                    got: w.shape(),
                });
            }
        }
        let p_one = 1.0 - coord_priors.iter().map(|w| 1.0 - w.get(1, 1)).product::<f64>();
        Ok(Self {
            n: coord_priors.len(),
            coord_priors,
            p_one,
        })
    }

    /// `n` independent copies of `w`.
    pub fn iid(n: usize, w: JointDistribution) -> Result<Self> {
        Self::new(vec![w; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coord_priors(&self) -> &[JointDistribution] {
        &self.coord_priors
    }

    /// `Pr[DISJ = 1]` under the product law.
    pub fn p_one(&self) -> f64 {
        self.p_one
    }

    /// Probability of the input pair `(x, y)`.
    pub fn prob(&self, x: u32, y: u32) -> f64 {
        self.coord_priors
            .iter()
            .enumerate()
            .map(|(i, w)| w.get(bit(x, i), bit(y, i)))
            .product()
    }

    /// The same instance with coordinates reordered: coordinate `i` of the
    /// result is coordinate `order[i]` of `self`.
    pub fn relabel(&self, order: &[usize]) -> Result<Self> {
        Self::new(order.iter().map(|&i| self.coord_priors[i].clone()).collect())
    }
}

fn bit(v: u32, i: usize) -> usize {
    ((v >> i) & 1) as usize
}

pub fn disj_value(x: u32, y: u32) -> u32 {
    u32::from(x & y != 0)
}

/// Builds the per-round protocol for `[AND, ε', 1 → 0]` at a coordinate prior.
pub trait AndFactory: Sync {
    fn and_law(&self, prior: &JointDistribution, epsilon: f64) -> Result<TranscriptLaw>;
}

/// The grid-walk buzzer law with its `x = 1` row flipped. Priors without a
/// symmetric decomposition (some of `w(0,0)`, `w(0,1)`, `w(1,0)` zero) fall
/// back to exchanging inputs, flipped the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridAndFactory {
    pub grid: usize,
}

impl Default for GridAndFactory {
    fn default() -> Self {
        Self {
            grid: DEFAULT_AND_GRID,
        }
    }
}

impl AndFactory for GridAndFactory {
    fn and_law(&self, prior: &JointDistribution, epsilon: f64) -> Result<TranscriptLaw> {
        match one_sided_and(epsilon, prior, self.grid) {
            Err(Error::Infeasible(_)) => {
                let exact = law_of(&ProtocolTree::exchange_inputs(&FunctionTable::and()), prior)?;
                flip_transform(&exact, 0, 1, epsilon)
            }
            other => other,
        }
    }
}

/// The per-round protocols of an instance, one per coordinate.
#[derive(Debug, Clone)]
pub struct DisjProtocol {
    inst: DisjInstance,
    epsilon: f64,
    /// `ε / (2·p_one)`; `None` when `p_one < ε` and the protocol always outputs 0.
    round_epsilon: Option<f64>,
    rounds: Vec<TranscriptLaw>,
    /// `Pr[round outputs 1 | x_i, y_i]`, indexed `2·x_i + y_i`.
    says_one: Vec<[f64; 4]>,
}

pub fn disj_protocol(inst: &DisjInstance, epsilon: f64, factory: &dyn AndFactory) -> Result<DisjProtocol> {
    if !(0.0..=1.0).contains(&epsilon) {
        return Err(Error::Domain {
            value: epsilon,
            domain: "[0, 1]",
        });
    }
    if inst.p_one < epsilon {
        return Ok(DisjProtocol {
            inst: inst.clone(),
            epsilon,
            round_epsilon: None,
            rounds: Vec::new(),
            says_one: Vec::new(),
        });
    }
    let round_epsilon = (epsilon / (2.0 * inst.p_one)).min(1.0);
    let rounds = inst
        .coord_priors
        .iter()
        .map(|w| factory.and_law(w, round_epsilon))
        .collect::<Result<Vec<_>>>()?;
    let says_one = rounds
        .iter()
        .map(|law| {
            let mut o = [0.0; 4];
            for (cell, v) in o.iter_mut().enumerate() {
                *v = csum(law.entries().iter().filter(|e| e.output == 1).map(|e| e.cond[cell]));
            }
            o
        })
        .collect();
    Ok(DisjProtocol {
        inst: inst.clone(),
        epsilon,
        round_epsilon: Some(round_epsilon),
        rounds,
        says_one,
    })
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

impl DisjProtocol {
    pub fn instance(&self) -> &DisjInstance {
        &self.inst
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn round_epsilon(&self) -> Option<f64> {
        self.round_epsilon
    }

    pub fn is_trivial(&self) -> bool {
        self.round_epsilon.is_none()
    }

    /// Per-coordinate round protocols.
    pub fn rounds(&self) -> &[TranscriptLaw] {
        &self.rounds
    }

    fn says_one(&self, coord: usize, x: u32, y: u32) -> f64 {
        self.says_one[coord][2 * bit(x, coord) + bit(y, coord)]
    }

    /// `Pr[output 1 | x, y]`. The order of rounds does not matter for it.
    pub fn prob_one(&self, x: u32, y: u32) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        1.0 - (0..self.inst.n).map(|i| 1.0 - self.says_one(i, x, y)).product::<f64>()
    }

    /// `E[T | x, y, σ]`: rounds executed under the order `perm`.
    pub fn expected_rounds_for(&self, x: u32, y: u32, perm: &[usize]) -> f64 {
        if self.is_trivial() {
            return 0.0;
        }
        let mut alive = 1.0;
        let mut total = 0.0;
        for &c in perm {
            total += alive;
            alive *= 1.0 - self.says_one(c, x, y);
        }
        total
    }

    /// `E[T | x, y]` averaged over uniformly random orders.
    pub fn expected_rounds(&self, x: u32, y: u32) -> Result<f64> {
        if self.inst.n > EXACT_MAX_N {
            return Err(Error::SizeCap(format!(
                "exact expectation needs n ≤ {EXACT_MAX_N}, got {}",
                self.inst.n
            )));
        }
        let perms = permutations(self.inst.n);
        Ok(csum(perms.iter().map(|p| self.expected_rounds_for(x, y, p))) / perms.len() as f64)
    }

    /// One run on `(x, y)` with public coins drawn from `rng`.
    pub fn sample<R: Rng>(&self, x: u32, y: u32, rng: &mut R) -> (u32, usize) {
        if self.is_trivial() {
            return (0, 0);
        }
        let mut order: Vec<usize> = (0..self.inst.n).collect();
        order.shuffle(rng);
        for (i, &c) in order.iter().enumerate() {
            if rng.gen::<f64>() < self.says_one(c, x, y) {
                return (1, i + 1);
            }
        }
        (0, self.inst.n)
    }

    /// The composite transcript law over all `2ⁿ × 2ⁿ` inputs, with the
    /// public order `σ` part of the transcript. `perm` restricts to one order.
    pub fn composite_law(&self, perm: Option<&[usize]>) -> Result<TranscriptLaw> {
        let n = self.inst.n;
        if n > LAW_MAX_N {
            return Err(Error::SizeCap(format!(
                "composite law needs n ≤ {LAW_MAX_N}, got {n}"
            )));
        }
        let side = 1usize << n;
        let cells = side * side;
        let prior = JointDistribution::new(
            side,
            side,
            (0..cells)
                .map(|i| self.inst.prob((i / side) as u32, (i % side) as u32))
                .collect(),
        )?;
        if self.is_trivial() {
            let entries = vec![LawEntry {
                leaf: 0,
                output: 0,
                cond: vec![1.0; cells],
            }];
            return TranscriptLaw::new(prior, entries);
        }
        let perms = match perm {
            Some(p) => vec![p.to_vec()],
            None => permutations(n),
        };
        let weight = 1.0 / perms.len() as f64;
        let mut entries = Vec::new();
        for p in &perms {
            self.extend(p, 0, vec![weight; cells], side, &mut entries)?;
        }
        TranscriptLaw::new(prior, entries)
    }

    fn extend(
        &self,
        perm: &[usize],
        round: usize,
        cond: Vec<f64>,
        side: usize,
        out: &mut Vec<LawEntry>,
    ) -> Result<()> {
        if round == perm.len() {
            return self.push(cond, 0, out);
        }
        let c = perm[round];
        for e in self.rounds[c].entries() {
            let next: Vec<f64> = cond
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let (x, y) = ((i / side) as u32, (i % side) as u32);
                    v * e.cond[2 * bit(x, c) + bit(y, c)]
                })
                .collect();
            if next.iter().all(|&v| v == 0.0) {
                continue;
            }
            if e.output == 1 {
                self.push(next, 1, out)?;
            } else {
                self.extend(perm, round + 1, next, side, out)?;
            }
        }
        Ok(())
    }

    fn push(&self, cond: Vec<f64>, output: u32, out: &mut Vec<LawEntry>) -> Result<()> {
        if (out.len() + 1) * cond.len() > LAW_SIZE_CAP {
            return Err(Error::SizeCap(format!(
                "composite law exceeds {LAW_SIZE_CAP} transcript-input cells"
            )));
        }
        out.push(LawEntry {
            leaf: out.len(),
            output,
            cond,
        });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InputAudit {
    pub x: u32,
    pub y: u32,
    /// Coordinates with `x_i = y_i = 1`.
    pub intersections: u32,
    pub prob: f64,
    pub error: f64,
    /// `(ε/2p)^t` for `t ≥ 1` intersections, zero otherwise.
    pub error_bound: f64,
    pub expected_rounds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DisjAudit {
    pub n: usize,
    pub epsilon: f64,
    pub p_one: f64,
    pub round_epsilon: Option<f64>,
    pub distributional_error: f64,
    /// Largest error on an input with `DISJ = 0`.
    pub max_disjoint_error: f64,
    /// Largest `error − (ε/2p)^t` over intersecting inputs.
    pub max_bound_excess: f64,
    pub expected_rounds: f64,
    /// `p·(n+1)/2 + ε·n/4 + (1 − p)·n`.
    pub expected_rounds_bound: f64,
    /// `(1 − p/3 + ε/4)·n`; below the previous bound only for `n ≥ 3`.
    pub expected_rounds_simplified: f64,
    pub per_input: Vec<InputAudit>,
}

/// Exact error and round-count audit by enumeration over inputs and orders.
pub fn disj_error_audit(inst: &DisjInstance, epsilon: f64, factory: &dyn AndFactory) -> Result<DisjAudit> {
    let n = inst.n;
    if n > EXACT_MAX_N {
        return Err(Error::SizeCap(format!("exact audit needs n ≤ {EXACT_MAX_N}, got {n}")));
    }
    let proto = disj_protocol(inst, epsilon, factory)?;
    let ratio = proto.round_epsilon.unwrap_or(0.0);
    let side = 1u32 << n;
    let mut per_input = Vec::with_capacity((side * side) as usize);
    for x in 0..side {
        for y in 0..side {
            let t = (x & y).count_ones();
            let p1 = proto.prob_one(x, y);
            let error = if t > 0 { 1.0 - p1 } else { p1 };
            per_input.push(InputAudit {
                x,
                y,
                intersections: t,
                prob: inst.prob(x, y),
                error,
                error_bound: if t > 0 { ratio.powi(t as i32) } else { 0.0 },
                expected_rounds: proto.expected_rounds(x, y)?,
            });
        }
    }
    let distributional_error = csum(per_input.iter().map(|a| a.prob * a.error));
    let max_disjoint_error = per_input
        .iter()
        .filter(|a| a.intersections == 0)
        .map(|a| a.error)
        .fold(0.0, f64::max);
    let max_bound_excess = if proto.is_trivial() {
        0.0
    } else {
        per_input
            .iter()
            .filter(|a| a.intersections > 0)
            .map(|a| a.error - a.error_bound)
            .fold(f64::NEG_INFINITY, f64::max)
            .max(0.0)
    };
    let expected_rounds = csum(per_input.iter().map(|a| a.prob * a.expected_rounds));
    Ok(DisjAudit {
        n,
        epsilon,
        p_one: inst.p_one,
        round_epsilon: proto.round_epsilon,
        distributional_error,
        max_disjoint_error,
        max_bound_excess,
        expected_rounds,
        expected_rounds_bound: {
            let (p, n) = (inst.p_one, n as f64);
            p * (n + 1.0) / 2.0 + epsilon * n / 4.0 + (1.0 - p) * n
        },
        expected_rounds_simplified: (1.0 - inst.p_one / 3.0 + epsilon / 4.0) * n as f64,
        per_input,
    })
}

/// Result of one sampled run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DisjRunResult {
    pub output: u32,
    pub rounds_executed: usize,
    pub seed: u64,
}

/// Runs the protocol once on `(x, y)` with coins from `seed`.
pub fn disj_run(proto: &DisjProtocol, x: u32, y: u32, seed: u64) -> DisjRunResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (output, rounds_executed) = proto.sample(x, y, &mut rng);
    DisjRunResult {
        output,
        rounds_executed,
        seed,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloAudit {
    pub samples: usize,
    pub seed: u64,
    pub error_rate: f64,
    pub error_std_err: f64,
    pub mean_rounds: f64,
    /// Runs that output 1 on disjoint inputs.
    pub disjoint_errors: usize,
}

/// Seeded Monte-Carlo audit: inputs from the product law, one independent
/// stream per chunk of runs.
pub fn disj_monte_carlo(proto: &DisjProtocol, samples: usize, seed: u64) -> MonteCarloAudit {
    const CHUNK: usize = 4096;
    let inst = &proto.inst;
    let chunks = samples.div_ceil(CHUNK);
    let partial: Vec<(usize, usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let runs = CHUNK.min(samples - k * CHUNK);
            let (mut errors, mut rounds, mut disjoint_errors) = (0, 0, 0);
            for _ in 0..runs {
                let (mut x, mut y) = (0u32, 0u32);
                for (i, w) in inst.coord_priors.iter().enumerate() {
                    let u: f64 = rng.gen();
                    let cell = pick(w.mass(), u);
                    x |= ((cell / 2) as u32) << i;
                    y |= ((cell % 2) as u32) << i;
                }
                let (out, t) = proto.sample(x, y, &mut rng);
                rounds += t;
                if out != disj_value(x, y) {
                    errors += 1;
                    if disj_value(x, y) == 0 {
                        disjoint_errors += 1;
                    }
                }
            }
            (errors, rounds, disjoint_errors)
        })
        .collect();
    let errors: usize = partial.iter().map(|p| p.0).sum();
    let rounds: usize = partial.iter().map(|p| p.1).sum();
    let disjoint_errors = partial.iter().map(|p| p.2).sum();
    let rate = errors as f64 / samples.max(1) as f64;
    MonteCarloAudit {
        samples,
        seed,
        error_rate: rate,
        error_std_err: (rate * (1.0 - rate) / samples.max(1) as f64).sqrt(),
        mean_rounds: rounds as f64 / samples.max(1) as f64,
        disjoint_errors,
    }
}

fn pick(mass: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    for (i, m) in mass.iter().enumerate() {
        acc += m;
        if u < acc {
            return i;
        }
    }
    mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

/// Exact internal IC of the composite protocol, the order included in the
/// transcript.
pub fn disj_ic_exact(inst: &DisjInstance, epsilon: f64, factory: &dyn AndFactory) -> Result<f64> {
    let proto = disj_protocol(inst, epsilon, factory)?;
    Ok(internal_ic(&proto.composite_law(None)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundPoint {
    pub epsilon: f64,
    /// Optimising `p`, or the supplied one.
    pub p: f64,
    /// `p + h̄(ε/p)`: the per-coordinate saving.
    pub gain: f64,
    /// `IC⁰(AND, 0) − gain`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub ic0: f64,
    pub points: Vec<BoundPoint>,
    /// Slope of `log gain` against `log h(ε)`.
    pub exponent: f64,
}

/// Solves `p = h̄(ε/p)` on `[ε, 1]`.
pub fn balanced_p(epsilon: f64) -> f64 {
    bisect(|p| p - truncated_entropy(epsilon / p), epsilon, 1.0, 1e-15)
}

/// The per-coordinate upper bound `IC⁰(AND,0) − (p + h̄(ε/p))`, the hidden
/// constants set to one and the `n·h̄(p/n)` term dropped (it vanishes per
/// coordinate as `n` grows). `p` balances the two terms unless given.
pub fn disj_bound_curve(epsilons: &[f64], opt_p: Option<f64>) -> Result<BoundCurve> {
    let ic0 = maximize_ic_and(Constraint::ZeroAt11, Default::default())?.value;
    disj_bound_curve_with(epsilons, opt_p, ic0)
}

/// [`disj_bound_curve`] with a known `IC⁰(AND, 0)`.
pub fn disj_bound_curve_with(epsilons: &[f64], opt_p: Option<f64>, ic0: f64) -> Result<BoundCurve> {
    let mut points = Vec::with_capacity(epsilons.len());
    for &eps in epsilons {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::Domain {
                value: eps,
                domain: "(0, 1/2)",
            });
        }
        let p = opt_p.unwrap_or_else(|| balanced_p(eps));
        let gain = p + truncated_entropy(eps / p);
        points.push(BoundPoint {
            epsilon: eps,
            p,
            gain,
            bound: ic0 - gain,
        });
    }
    let exponent = if points.len() >= 2 {
        let xs: Vec<f64> = points.iter().map(|b| truncated_entropy(b.epsilon).ln()).collect();
        let ys: Vec<f64> = points.iter().map(|b| b.gain.ln()).collect();
        linear_fit(&xs, &ys).0
    } else {
        f64::NAN
    };
    Ok(BoundCurve { ic0, points, exponent })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> GridAndFactory {
        GridAndFactory { grid: 8 }
    }

    #[test]
    fn p_one_of_product_law() {
        let w = JointDistribution::uniform(2, 2);
        let inst = DisjInstance::iid(2, w).unwrap();
        assert!((inst.p_one() - (1.0 - 0.75 * 0.75)).abs() < 1e-15);
        let total: f64 = (0..4).flat_map(|x| (0..4).map(move |y| (x, y))).map(|(x, y)| inst.prob(x, y)).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_zero_coordinates_never_err() {
        let inst = DisjInstance::iid(3, JointDistribution::point_mass(2, 2, 0, 0)).unwrap();
        let audit = disj_error_audit(&inst, 0.1, &coarse()).unwrap();
        assert!(audit.round_epsilon.is_none());
        assert_eq!(audit.distributional_error, 0.0);
        let proto = disj_protocol(&inst, 0.1, &coarse()).unwrap();
        assert_eq!(disj_run(&proto, 0, 0, 7).output, 0);
    }

    #[test]
    fn single_coordinate_is_the_and_protocol() {
        let w = JointDistribution::from_rows(&[&[0.4, 0.2], &[0.3, 0.1]]).unwrap();
        let inst = DisjInstance::iid(1, w.clone()).unwrap();
        let proto = disj_protocol(&inst, 0.05, &coarse()).unwrap();
        let sub = coarse().and_law(&w, 0.05 / (2.0 * 0.1)).unwrap();
        let a = internal_ic(&proto.composite_law(None).unwrap());
        assert!((a - internal_ic(&sub)).abs() < 1e-12);
    }

    #[test]
    fn permutations_are_all_distinct() {
        let p = permutations(4);
        assert_eq!(p.len(), 24);
        let mut sorted = p.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 24);
    }

    #[test]
    fn composite_law_size_cap() {
        let inst = DisjInstance::iid(4, JointDistribution::uniform(2, 2)).unwrap();
        let proto = disj_protocol(&inst, 0.1, &coarse()).unwrap();
        assert!(matches!(proto.composite_law(None), Err(Error::SizeCap(_))));
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let inst = DisjInstance::iid(3, JointDistribution::uniform(2, 2)).unwrap();
        let proto = disj_protocol(&inst, 0.1, &coarse()).unwrap();
        let a = disj_monte_carlo(&proto, 10_000, 3);
        let b = disj_monte_carlo(&proto, 10_000, 3);
        assert_eq!(a, b);
        assert_eq!(a.disjoint_errors, 0);
    }

    #[test]
    fn balanced_p_balances() {
        for eps in [1e-6, 1e-4, 1e-2] {
            let p = balanced_p(eps);
            assert!((p - truncated_entropy(eps / p)).abs() < 1e-12);
        }
    }
}
