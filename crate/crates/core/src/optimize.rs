//! Maximising the zero-error AND cost over priors, the AND error tradeoff,
//! and the XOR external-cost experiment.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::and::{complete_law, ic_and_zero, one_sided_and, DEFAULT_GRID};
use crate::cost::{external_ic, internal_ic, law_of};
use crate::distributions::{h, JointDistribution};
use crate::protocol::{
    evaluate_error, evaluate_law_error, mix_with_abort, FunctionTable, Owner, ProtocolTree, Task, TreeBuilder,
};
use crate::trivial::is_structurally_internal_trivial;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constraint {
    /// All four cells positive.
    FullSupport,
    /// `μ(1,1) = 0`.
    ZeroAt11,
    /// Support inside `{(0,0), (0,1)}`.
    TwoPoint,
}

impl Constraint {
    fn dims(self) -> usize {
        match self {
            Constraint::FullSupport => 3,
            Constraint::ZeroAt11 => 2,
            Constraint::TwoPoint => 1,
        }
    }

    /// Cells `[w00, w01, w10, w11]` at free coordinates `c`, or `None`
    /// outside the feasible set.
    fn cells(self, c: &[f64]) -> Option<[f64; 4]> {
        let w = match self {
            Constraint::FullSupport => [1.0 - c[0] - c[1] - c[2], c[0], c[1], c[2]],
            Constraint::ZeroAt11 => [1.0 - c[0] - c[1], c[0], c[1], 0.0],
            Constraint::TwoPoint => [1.0 - c[0], c[0], 0.0, 0.0],
        };
        let ok = match self {
            Constraint::FullSupport => w.iter().all(|&v| v > 0.0),
            _ => w.iter().all(|&v| v >= 0.0),
        };
        ok.then_some(w)
    }
}

/// `IC⁰(AND, 0)` at `w`, including priors with no symmetric decomposition
/// as long as they are internal-trivial (cost 0).
pub fn and_zero_error_ic(w: &JointDistribution) -> Result<f64> {
    if w.get(0, 0) > 0.0 && w.get(0, 1) > 0.0 && w.get(1, 0) > 0.0 {
        return ic_and_zero(w);
    }
    if is_structurally_internal_trivial(&FunctionTable::and(), w)?.trivial {
        Ok(0.0)
    } else {
        Err(Error::Precondition(
            "no closed form for a non-trivial prior with a zero in w00, w01 or w10".into(),
        ))
    }
}

/// Nested grid refinement: `points` per axis, box shrunk by `shrink`
/// around the incumbent after every level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Refinement {
    pub levels: usize,
    pub points: usize,
    pub shrink: f64,
}

impl Default for Refinement {
    fn default() -> Self {
        Self {
            levels: 6,
            points: 17,
            shrink: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelTrace {
    pub level: usize,
    pub value: f64,
    pub spacing: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub argmax: JointDistribution,
    pub value: f64,
    pub constraint: Constraint,
    pub trace: Vec<LevelTrace>,
}

fn grid_points(lo: &[f64], hi: &[f64], points: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = lo
        .iter()
        .zip(hi)
        .map(|(&a, &b)| (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect())
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

fn to_joint(w: [f64; 4]) -> Result<JointDistribution> {
    JointDistribution::from_weights(2, 2, w.to_vec())
}

pub fn maximize_ic_and(constraint: Constraint, refine: Refinement) -> Result<OptResult> {
    if refine.points < 3 || refine.levels == 0 || refine.shrink <= 1.0 {
        return Err(Error::Precondition(
            "refinement needs at least 3 points, 1 level and a shrink factor above 1".into(),
        ));
    }
    let d = constraint.dims();
    let (mut lo, mut hi) = (vec![0.0; d], vec![1.0; d]);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut trace = Vec::with_capacity(refine.levels);
    for level in 0..refine.levels {
        let pts = grid_points(&lo, &hi, refine.points);
        let evaluated: Vec<(f64, Vec<f64>)> = pts
            .into_par_iter()
            .filter_map(|c| {
                let w = constraint.cells(&c)?;
                let v = to_joint(w).and_then(|w| and_zero_error_ic(&w));
                Some(v.map(|v| (v, c)))
            })
            .collect::<Result<_>>()?;
        let evaluations = evaluated.len();
        for (v, c) in evaluated {
            if best.as_ref().is_none_or(|(b, _)| v > *b) {
                best = Some((v, c));
            }
        }
        let Some((value, center)) = &best else {
            return Err(Error::Infeasible("no feasible grid point".into()));
        };
        trace.push(LevelTrace {
            level,
            value: *value,
            spacing: (hi[0] - lo[0]) / (refine.points - 1) as f64,
            evaluations,
        });
        for k in 0..d {
            let half = (hi[k] - lo[k]) / (2.0 * refine.shrink);
            lo[k] = (center[k] - half).max(0.0);
            hi[k] = (center[k] + half).min(1.0);
        }
    }
    let (value, c) = best.expect("at least one level ran");
    let argmax = to_joint(constraint.cells(&c).expect("incumbent is feasible"))?;
    Ok(OptResult {
        argmax,
        value,
        constraint,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffRow {
    pub epsilon: f64,
    /// Internal IC of the flipped grid protocol.
    pub flip_ic: f64,
    /// Internal IC after completing the flipped protocol to zero error.
    pub completed_ic: f64,
    /// Grid protocol IC at `ε = 0` minus `flip_ic`.
    pub gain: f64,
    pub gain_over_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TradeoffCurve {
    pub constraint: Constraint,
    pub prior: JointDistribution,
    /// Closed-form `IC⁰(AND, 0)` at the prior.
    pub ic_zero: f64,
    /// Internal IC of the unflipped grid protocol.
    pub grid_ic: f64,
    pub grid: usize,
    /// `μ(0,0)²·min(μ(0,1), μ(1,0)) / 128`.
    pub floor_coefficient: f64,
    pub rows: Vec<TradeoffRow>,
}

/// The flip tradeoff at the constraint's maximiser.
pub fn and_tradeoff_curve(epsilons: &[f64], constraint: Constraint, grid: usize) -> Result<TradeoffCurve> {
    let opt = maximize_ic_and(constraint, Refinement::default())?;
    and_tradeoff_at(epsilons, &opt.argmax, constraint, grid)
}

/// The flip tradeoff at a given prior. Gains are measured against the same
/// grid protocol unflipped, so the grid's discretisation error cancels.
pub fn and_tradeoff_at(
    epsilons: &[f64],
    prior: &JointDistribution,
    constraint: Constraint,
    grid: usize,
) -> Result<TradeoffCurve> {
    let and = FunctionTable::and();
    let grid_ic = internal_ic(&one_sided_and(0.0, prior, grid)?);
    let rows = epsilons
        .par_iter()
        .map(|&eps| {
            if !(eps > 0.0 && eps <= 0.2) {
                return Err(Error::Domain {
                    value: eps,
                    domain: "(0, 0.2]",
                });
            }
            let law = one_sided_and(eps, prior, grid)?;
            let flip_ic = internal_ic(&law);
            let completed_ic = internal_ic(&complete_law(&law, &and)?);
            let gain = grid_ic - flip_ic;
            Ok(TradeoffRow {
                epsilon: eps,
                flip_ic,
                completed_ic,
                gain,
                gain_over_h: gain / h(eps),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TradeoffCurve {
        constraint,
        prior: prior.clone(),
        ic_zero: and_zero_error_ic(prior)?,
        grid_ic,
        grid,
        floor_coefficient: prior.get(0, 0).powi(2) * prior.get(0, 1).min(prior.get(1, 0)) / 128.0,
        rows,
    })
}

/// The prior on which XOR external cost is examined.
pub fn xor_prior() -> JointDistribution {
    JointDistribution::from_rows(&[&[0.5, 0.0], &[0.0, 0.5]]).expect("valid")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XorRow {
    pub epsilon: f64,
    pub constructed_ic_ext: f64,
    pub max_pointwise_error: f64,
    /// `1 − 3ε`.
    pub floor: f64,
}

/// With probability `ε` output 0 at once, otherwise exchange inputs.
pub fn xor_abort_law(epsilon: f64) -> Result<crate::cost::TranscriptLaw> {
    let exact = law_of(&ProtocolTree::exchange_inputs(&FunctionTable::xor()), &xor_prior())?;
    let law = mix_with_abort(&exact, epsilon)?;
    let abort = law.entries().last().expect("abort entry");
    if abort.output != 0 {
        return Err(Error::Precondition("abort branch must output 0".into()));
    }
    Ok(law)
}

pub fn xor_external_experiment(epsilons: &[f64]) -> Result<Vec<XorRow>> {
    let task = Task::pointwise(FunctionTable::xor(), 1.0)?;
    epsilons
        .iter()
        .map(|&eps| {
            if !(0.0..=1.0 / 3.0 + 1e-12).contains(&eps) {
                return Err(Error::Domain {
                    value: eps,
                    domain: "[0, 1/3]",
                });
            }
            let law = xor_abort_law(eps)?;
            Ok(XorRow {
                epsilon: eps,
                constructed_ic_ext: external_ic(&law),
                max_pointwise_error: evaluate_law_error(&law, &task)?.max_pointwise,
                floor: 1.0 - 3.0 * eps,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct XorSearchRow {
    pub epsilon: f64,
    /// Protocols drawn to find the accepted ones.
    pub drawn: usize,
    /// Drawn protocols with pointwise error at most `ε`.
    pub accepted: usize,
    pub min_ic_ext: f64,
    /// Accepted protocols with `IC^ext < 1 − 3ε`.
    pub below_floor: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XorSearch {
    pub target: usize,
    pub seed: u64,
    pub rows: Vec<XorSearchRow>,
}

enum Shape {
    Leaf,
    Signal(Owner, [f64; 2], Box<Shape>, Box<Shape>),
}

fn random_shape<R: Rng>(rng: &mut R, depth: usize) -> Shape {
    if depth == 3 || (depth > 0 && rng.gen_bool(0.25)) {
        return Shape::Leaf;
    }
    let owner = if rng.gen_bool(0.5) { Owner::Alice } else { Owner::Bob };
    let mut k = || -> f64 {
        let r: f64 = rng.gen();
        let k = if r < 0.4 {
            0
        } else if r < 0.8 {
            16
        } else {
            rng.gen_range(0..=16)
        };
        k as f64 / 16.0
    };
    let table = [k(), k()];
    Shape::Signal(
        owner,
        table,
        Box::new(random_shape(rng, depth + 1)),
        Box::new(random_shape(rng, depth + 1)),
    )
}

/// `Pr[leaf | x, y]` for each leaf, in depth-first order.
fn leaf_tables(shape: &Shape, reach: [f64; 4], out: &mut Vec<[f64; 4]>) {
    match shape {
        Shape::Leaf => out.push(reach),
        Shape::Signal(owner, table, c0, c1) => {
            let mut r0 = reach;
            let mut r1 = reach;
            for i in 0..4 {
                let v = if *owner == Owner::Alice { i / 2 } else { i % 2 };
                r1[i] *= table[v];
                r0[i] *= 1.0 - table[v];
            }
            leaf_tables(c0, r0, out);
            leaf_tables(c1, r1, out);
        }
    }
}

fn emit(shape: &Shape, outputs: &mut std::slice::Iter<u32>, b: &mut TreeBuilder) -> usize {
    match shape {
        Shape::Leaf => b.leaf(*outputs.next().expect("one output per leaf")),
        Shape::Signal(owner, table, c0, c1) => {
            let c0 = emit(c0, outputs, b);
            let c1 = emit(c1, outputs, b);
            b.signal(*owner, table.to_vec(), c0, c1)
        }
    }
}

/// A random depth-≤3 protocol with signal probabilities in `{k/16}`. Each
/// leaf outputs the XOR value most likely to be right summed over inputs.
pub fn random_xor_protocol<R: Rng>(rng: &mut R) -> Result<ProtocolTree> {
    let xor = FunctionTable::xor();
    let shape = random_shape(rng, 0);
    let mut tables = Vec::new();
    leaf_tables(&shape, [1.0; 4], &mut tables);
    let outputs: Vec<u32> = tables
        .iter()
        .map(|t| {
            let right = |z: u32| (0..4).filter(|&i| xor.get(i / 2, i % 2) == z).map(|i| t[i]).sum::<f64>();
            u32::from(right(1) > right(0))
        })
        .collect();
    let mut b = TreeBuilder::new(2, 2, vec![0, 1]).depth_cap(3);
    let root = emit(&shape, &mut outputs.iter(), &mut b);
    b.build(root)
}

/// Sampled attempt to beat `1 − 3ε` with small protocols: for each `ε`,
/// draws until `target` protocols with pointwise error at most `ε` are
/// found, giving up after `1000·target` draws.
pub fn xor_floor_search(epsilons: &[f64], target: usize, seed: u64) -> Result<XorSearch> {
    let task = Task::pointwise(FunctionTable::xor(), 1.0)?;
    let prior = xor_prior();
    let rows = epsilons
        .par_iter()
        .enumerate()
        .map(|(k, &eps)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k as u64);
            let mut row = XorSearchRow {
                epsilon: eps,
                drawn: 0,
                accepted: 0,
                min_ic_ext: f64::INFINITY,
                below_floor: 0,
            };
            while row.accepted < target && row.drawn < 1000 * target {
                let t = random_xor_protocol(&mut rng)?;
                row.drawn += 1;
                if evaluate_error(&t, &task)?.max_pointwise > eps + 1e-12 {
                    continue;
                }
                let ic = external_ic(&law_of(&t, &prior)?);
                row.accepted += 1;
                row.min_ic_ext = row.min_ic_ext.min(ic);
                if ic < 1.0 - 3.0 * eps - 1e-12 {
                    row.below_floor += 1;
                }
            }
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(XorSearch { target, seed, rows })
}

/// Default grid for tradeoff tables.
pub const TRADEOFF_GRID: usize = DEFAULT_GRID;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_is_trivial() {
        let r = maximize_ic_and(Constraint::TwoPoint, Refinement::default()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn refinement_is_monotone() {
        let r = maximize_ic_and(Constraint::ZeroAt11, Refinement::default()).unwrap();
        for w in r.trace.windows(2) {
            assert!(w[1].value >= w[0].value);
        }
        assert!((r.value - ic_and_zero(&r.argmax).unwrap()).abs() < 1e-9);
        assert!(r.argmax.get(1, 1) == 0.0);
    }

    #[test]
    fn xor_construction() {
        let rows = xor_external_experiment(&[0.0, 0.1, 1.0 / 3.0]).unwrap();
        for r in rows {
            assert!((r.constructed_ic_ext - (1.0 - r.epsilon)).abs() < 1e-12);
            assert!((r.max_pointwise_error - r.epsilon).abs() < 1e-15);
        }
    }

    #[test]
    fn random_protocols_are_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            assert!(random_xor_protocol(&mut rng).unwrap().depth() <= 3);
        }
    }
}
