//! The buzzer leaf law and its discretised grid-walk approximants.

use serde::Serialize;

use crate::distributions::{Decomposition, ProductDistribution};
use crate::protocol::{Owner, ProtocolTree, TreeBuilder};
use crate::{Error, Result};

/// Default grid resolution.
pub const DEFAULT_GRID: usize = 1024;

/// Where the buzzer walk from `(p, q)` stops, as a law over pretend leaf
/// distributions.
///
/// With `p ≥ q`: an atom of mass `1 − q/p` at `(p, 0)`, an atom of mass `pq`
/// at `(1, 1)`, and density `pq/ℓ³` on each of the segments `(ℓ, 0)` and
/// `(0, ℓ)` for `p < ℓ < 1`. The case `p < q` is the mirror image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BuzzerLeafLaw {
    start: ProductDistribution,
}

impl BuzzerLeafLaw {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for v in [p, q] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain {
                    value: v,
                    domain: "(0, 1)",
                });
            }
        }
        Ok(Self {
            start: ProductDistribution::new(p, q)?,
        })
    }

    pub fn start(&self) -> ProductDistribution {
        self.start
    }

    /// `max(p, q)`: no leaf has `ℓ` below this.
    pub fn floor(&self) -> f64 {
        self.start.ell()
    }

    /// Position of the axis atom.
    pub fn axis_atom_at(&self) -> (f64, f64) {
        let (p, q) = (self.start.p(), self.start.q());
        if p >= q {
            (p, 0.0)
        } else {
            (0.0, q)
        }
    }

    /// `1 − min(p,q)/max(p,q)`.
    pub fn axis_atom(&self) -> f64 {
        let (p, q) = (self.start.p(), self.start.q());
        1.0 - p.min(q) / p.max(q)
    }

    /// `pq`, the probability of ending at `(1, 1)`.
    pub fn atom_11(&self) -> f64 {
        self.start.p() * self.start.q()
    }

    /// Density of `ℓ` on one axis.
    pub fn density(&self, ell: f64) -> f64 {
        if ell > self.floor() && ell < 1.0 {
            self.atom_11() / ell.powi(3)
        } else {
            0.0
        }
    }

    /// Total mass of the two continuous parts.
    pub fn continuous_mass(&self) -> f64 {
        let l = self.floor();
        self.atom_11() * (1.0 / (l * l) - 1.0)
    }

    pub fn total_mass(&self) -> f64 {
        self.axis_atom() + self.atom_11() + self.continuous_mass()
    }

    /// `Pr[ℓ ≤ t]` where `ℓ = max` of the leaf coordinates.
    pub fn ell_cdf(&self, t: f64) -> f64 {
        if t < self.floor() {
            0.0
        } else if t >= 1.0 {
            1.0
        } else {
            1.0 - self.atom_11() / (t * t)
        }
    }

    /// `Pr[ℓ < t]`.
    pub fn ell_cdf_left(&self, t: f64) -> f64 {
        if t <= self.floor() {
            0.0
        } else if t > 1.0 {
            1.0
        } else {
            1.0 - self.atom_11() / (t * t)
        }
    }
}

pub fn buzzer_leaf_law(p: f64, q: f64) -> Result<BuzzerLeafLaw> {
    BuzzerLeafLaw::new(p, q)
}

/// A lattice start `(a/n, b/n)` for the grid walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridWalkSpec {
    pub n: usize,
    pub a: usize,
    pub b: usize,
}

impl GridWalkSpec {
    pub fn new(n: usize, a: usize, b: usize) -> Result<Self> {
        if n == 0 || a > n || b > n {
            return Err(Error::Precondition(format!(
                "grid point ({a}, {b}) outside 0..={n}"
            )));
        }
        Ok(Self { n, a, b })
    }

    /// Nearest lattice point to `(p, q)` and the distance moved (max norm).
    pub fn snap(n: usize, p: f64, q: f64) -> Result<(Self, f64)> {
        for v in [p, q] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain {
                    value: v,
                    domain: "[0, 1]",
                });
            }
        }
        let a = (p * n as f64).round() as usize;
        let b = (q * n as f64).round() as usize;
        let spec = Self::new(n, a, b)?;
        let start = spec.start();
        Ok((spec, (start.p() - p).abs().max((start.q() - q).abs())))
    }

    pub fn start(&self) -> ProductDistribution {
        let n = self.n as f64;
        ProductDistribution::new(self.a as f64 / n, self.b as f64 / n).expect("on the lattice")
    }
}

/// Moves against the buzzer's preferred direction, inserted before the
/// grid walk proper.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Detour {
    /// Number of wrong-direction steps.
    pub steps: usize,
    /// Step length in grid units.
    pub size: usize,
}

/// Grid-walk protocol tree for zero-error AND, starting from the pretend
/// distribution of `dec`.
///
/// In pretend coordinates `(a/n, b/n)` the walk moves in `y` while `a ≥ b`
/// and in `x` otherwise. Each balanced segment of that walk is one signal:
/// from `(a, b)` with `a ≥ b`, Bob's bit either ends at `(a, 0)` or moves to
/// `(a, min(a+1, n))`, the latter with pretend probability `b / min(a+1, n)`.
/// Signal tables coincide in the pretend and real worlds, so the tree does
/// not depend on the reference distribution.
pub fn buzzer_grid_tree(spec: GridWalkSpec, dec: &Decomposition) -> Result<ProtocolTree> {
    buzzer_grid_tree_with_detour(spec, dec, Detour::default())
}

pub fn buzzer_grid_tree_with_detour(
    spec: GridWalkSpec,
    dec: &Decomposition,
    detour: Detour,
) -> Result<ProtocolTree> {
    let start = spec.start();
    let pretend = dec.pretend();
    let gap = (start.p() - pretend.p()).abs().max((start.q() - pretend.q()).abs());
    if gap > 1e-9 {
        return Err(Error::Precondition(format!(
            "grid start off-lattice: pretend ({}, {}) is {gap:e} from ({}/{n}, {}/{n})",
            pretend.p(),
            pretend.q(),
            spec.a,
            spec.b,
            n = spec.n
        )));
    }
    grid_tree(spec, detour)
}

/// The grid-walk tree without a reference distribution.
pub fn grid_tree(spec: GridWalkSpec, detour: Detour) -> Result<ProtocolTree> {
    let cap = 2 * spec.n + 2 * detour.steps + 8;
    let mut b = TreeBuilder::new(2, 2, vec![0, 1]).depth_cap(cap);
    let root = build_from(&mut b, spec.n, spec.a, spec.b, detour.steps, detour.size);
    b.build(root)
}

fn is_absorbing(n: usize, a: usize, b: usize) -> bool {
    a == 0 || b == 0 || (a == n && b == n)
}

fn absorbing_leaf(b: &mut TreeBuilder, n: usize, x: usize, y: usize) -> usize {
    b.leaf(u32::from(x == n && y == n))
}

/// Signal table moving one coordinate from `k/n` to `lo/n` or `hi/n`,
/// reaching `hi` with probability `up`. Indexed by the owner's bit.
fn split_table(n: usize, k: usize, lo: usize, hi: usize) -> (Vec<f64>, f64) {
    let n = n as f64;
    let (from, lo, hi) = (k as f64 / n, lo as f64 / n, hi as f64 / n);
    let up = (from - lo) / (hi - lo);
    // Pr[up | bit] = up · Pr_hi[bit] / Pr_from[bit]
    let table = vec![up * (1.0 - hi) / (1.0 - from), up * hi / from];
    (table.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(), up)
}

fn build_from(b: &mut TreeBuilder, n: usize, x: usize, y: usize, detours: usize, size: usize) -> usize {
    if is_absorbing(n, x, y) {
        return absorbing_leaf(b, n, x, y);
    }
    if detours > 0 {
        // The wrong direction moves x when x ≥ y.
        let (owner, k) = if x >= y { (Owner::Alice, x) } else { (Owner::Bob, y) };
        let d = size.min(k).min(n - k);
        if d > 0 {
            let (table, _) = split_table(n, k, k - d, k + d);
            let (lo, hi) = match owner {
                Owner::Alice => ((x - d, y), (x + d, y)),
                Owner::Bob => ((x, y - d), (x, y + d)),
            };
            let c0 = build_from(b, n, lo.0, lo.1, detours - 1, size);
            let c1 = build_from(b, n, hi.0, hi.1, detours - 1, size);
            return b.signal(owner, table, c0, c1);
        }
    }
    // Collect the caterpillar of segments, then build it bottom-up.
    let mut segments = Vec::new();
    let (mut x, mut y) = (x, y);
    while !is_absorbing(n, x, y) {
        if x >= y {
            let top = (x + 1).min(n);
            segments.push((Owner::Bob, split_table(n, y, 0, top).0, (x, 0)));
            y = top;
        } else {
            let top = y;
            segments.push((Owner::Alice, split_table(n, x, 0, top).0, (0, y)));
            x = top;
        }
    }
    let mut node = absorbing_leaf(b, n, x, y);
    for (owner, table, stop) in segments.into_iter().rev() {
        let leaf = absorbing_leaf(b, n, stop.0, stop.1);
        node = b.signal(owner, table, leaf, node);
    }
    node
}

/// One atom of a pretend leaf law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafPoint {
    pub p: f64,
    pub q: f64,
    pub mass: f64,
}

impl LeafPoint {
    pub fn ell(&self) -> f64 {
        self.p.max(self.q)
    }

    /// `"x"` for leaves on `(ℓ, 0)`, `"y"` for `(0, ℓ)`, `"corner"` at `(1, 1)`
    /// and `"interior"` otherwise.
    pub fn axis(&self) -> &'static str {
        if self.q == 0.0 && self.p > 0.0 {
            "x"
        } else if self.p == 0.0 && self.q > 0.0 {
            "y"
        } else if self.p == 1.0 && self.q == 1.0 {
            "corner"
        } else if self.p == 0.0 && self.q == 0.0 {
            "origin"
        } else {
            "interior"
        }
    }
}

/// Leaf law of the pretend grid walk, computed from the walk directly
/// rather than from a tree.
pub fn grid_leaf_law(spec: GridWalkSpec) -> Vec<LeafPoint> {
    let n = spec.n;
    let nf = n as f64;
    let mut out = Vec::new();
    let (mut x, mut y, mut mass) = (spec.a, spec.b, 1.0f64);
    let point = |x: usize, y: usize, mass: f64| LeafPoint {
        p: x as f64 / nf,
        q: y as f64 / nf,
        mass,
    };
    while !is_absorbing(n, x, y) {
        if x >= y {
            let top = (x + 1).min(n);
            let up = y as f64 / top as f64;
            out.push(point(x, 0, mass * (1.0 - up)));
            mass *= up;
            y = top;
        } else {
            let up = x as f64 / y as f64;
            out.push(point(0, y, mass * (1.0 - up)));
            mass *= up;
            x = y;
        }
    }
    out.push(point(x, y, mass));
    out.retain(|p| p.mass > 0.0);
    out
}

/// Kolmogorov distance between a discrete law of `ℓ` and the buzzer law.
pub fn kolmogorov_distance(points: &[LeafPoint], law: &BuzzerLeafLaw) -> f64 {
    let mut atoms: Vec<(f64, f64)> = points.iter().map(|p| (p.ell(), p.mass)).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = atoms.iter().map(|a| a.1).sum();
    let mut checkpoints: Vec<f64> = atoms.iter().map(|a| a.0).collect();
    checkpoints.extend([law.floor(), 1.0]);
    let mut worst = 0.0f64;
    for t in checkpoints {
        let below: f64 = atoms.iter().filter(|a| a.0 < t).map(|a| a.1).sum::<f64>() / total;
        let upto: f64 = atoms.iter().filter(|a| a.0 <= t).map(|a| a.1).sum::<f64>() / total;
        worst = worst
            .max((below - law.ell_cdf_left(t)).abs())
            .max((upto - law.ell_cdf(t)).abs());
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{JointDistribution, symmetric_decomposition};
    use crate::protocol::{evaluate_error, FunctionTable, Task};

    #[test]
    fn leaf_law_examples() {
        let law = buzzer_leaf_law(0.5, 0.25).unwrap();
        assert_eq!(law.axis_atom(), 0.5);
        assert_eq!(law.atom_11(), 0.125);
        assert_eq!(law.axis_atom_at(), (0.5, 0.0));
        // 2·∫_{1/2}^1 (1/8)ℓ⁻³ dℓ = (1/8)(4 − 1)
        assert!((law.continuous_mass() - 0.375).abs() < 1e-15);
        assert_eq!(buzzer_leaf_law(0.3, 0.3).unwrap().axis_atom(), 0.0);
        assert!(buzzer_leaf_law(0.0, 0.3).is_err());
        assert!(buzzer_leaf_law(0.3, 1.0).is_err());
    }

    #[test]
    fn leaf_law_mirror() {
        let a = buzzer_leaf_law(0.6, 0.2).unwrap();
        let b = buzzer_leaf_law(0.2, 0.6).unwrap();
        assert_eq!(a.axis_atom(), b.axis_atom());
        assert_eq!(b.axis_atom_at(), (0.0, 0.6));
        for t in [0.1, 0.6, 0.7, 0.99, 1.0] {
            assert_eq!(a.ell_cdf(t), b.ell_cdf(t));
        }
    }

    fn uniform_dec() -> Decomposition {
        symmetric_decomposition(&JointDistribution::uniform(2, 2)).unwrap()
    }

    #[test]
    fn absorbing_starts_are_leaves() {
        let nu = JointDistribution::uniform(2, 2);
        let dec = Decomposition::new(nu.clone(), ProductDistribution::new(0.0, 0.25).unwrap()).unwrap();
        let t = buzzer_grid_tree(GridWalkSpec::new(4, 0, 1).unwrap(), &dec).unwrap();
        assert_eq!(t.nodes().len(), 1);
        assert_eq!(t.leaves().len(), 1);
        assert!(matches!(t.node(t.root()), crate::protocol::Node::Leaf { output: 0 }));
        let dec = Decomposition::new(nu, ProductDistribution::new(1.0, 1.0).unwrap()).unwrap();
        let t = buzzer_grid_tree(GridWalkSpec::new(4, 4, 4).unwrap(), &dec).unwrap();
        assert!(matches!(t.node(t.root()), crate::protocol::Node::Leaf { output: 1 }));
    }

    #[test]
    fn off_lattice_start_is_rejected() {
        let err = buzzer_grid_tree(GridWalkSpec::new(8, 3, 4).unwrap(), &uniform_dec());
        assert!(matches!(err, Err(Error::Precondition(_))));
    }

    #[test]
    fn grid_tree_is_zero_error() {
        let t = buzzer_grid_tree(GridWalkSpec::new(16, 8, 8).unwrap(), &uniform_dec()).unwrap();
        let r = evaluate_error(&t, &Task::pointwise(FunctionTable::and(), 0.0).unwrap()).unwrap();
        assert!(r.max_pointwise < 1e-15);
    }

    #[test]
    fn snapping_reports_distance() {
        let (spec, d) = GridWalkSpec::snap(10, 0.5, 0.33).unwrap();
        assert_eq!((spec.a, spec.b), (5, 3));
        assert!((d - 0.03).abs() < 1e-12);
    }

    #[test]
    fn grid_leaf_law_sums_to_one() {
        let law = grid_leaf_law(GridWalkSpec::new(64, 32, 16).unwrap());
        let total: f64 = law.iter().map(|p| p.mass).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // First segment stops at (a, 0) with probability 1 − b/(a+1).
        assert!((law[0].mass - (1.0 - 16.0 / 33.0)).abs() < 1e-15);
    }
}
