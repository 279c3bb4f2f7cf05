//! Distributions on finite rectangles `X × Y` and the entropy functionals
//! built on them.
//!
//! Cells are stored row-major: `mass[x * ny + y]`. Entries below
//! [`SNAP_THRESHOLD`] are snapped to exactly zero on construction so that
//! support computations are deterministic.

use serde::{Deserialize, Serialize};

use crate::numeric::{csum, entropy_of, neg_xlog2x};
use crate::{Error, Result};

/// Cells with mass below this are treated as outside the support.
pub const SNAP_THRESHOLD: f64 = 1e-15;

/// Allowed deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// Slack around `[0, 1]` accepted by [`binary_entropy`].
const DOMAIN_SLACK: f64 = 1e-12;

/// Binary entropy `h(x)` in bits.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if x.is_nan() || !(-DOMAIN_SLACK..=1.0 + DOMAIN_SLACK).contains(&x) {
        return Err(Error::Domain {
            value: x,
            domain: "[0, 1]",
        });
    }
    Ok(h(x.clamp(0.0, 1.0)))
}

/// Binary entropy without the domain check; arguments are clamped into `[0, 1]`.
#[inline]
pub fn h(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    if x == 0.0 || x == 1.0 {
        0.0
    } else {
        neg_xlog2x(x) + neg_xlog2x(1.0 - x)
    }
}

/// `h(min(x, 1/2))`: the concave, nondecreasing envelope of the binary
/// entropy on `[0, ∞)`. Negative input is treated as zero.
pub fn truncated_entropy(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        h(x.min(0.5))
    }
}

/// A probability distribution on `{0..nx} × {0..ny}`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    nx: usize,
    ny: usize,
    mass: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct DistributionFile {
    nx: usize,
    ny: usize,
    mass: Vec<Vec<f64>>,
}

impl JointDistribution {
    /// Builds a distribution from row-major masses. Masses must be finite,
    /// nonnegative and sum to one within [`MASS_TOLERANCE`].
    pub fn new(nx: usize, ny: usize, mass: Vec<f64>) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidDistribution("empty alphabet".into()));
        }
        if mass.len() != nx * ny {
            return Err(Error::InvalidDistribution(format!(
                "expected {} cells, got {}",
                nx * ny,
                mass.len()
            )));
        }
        let mut mass = mass;
        for m in mass.iter_mut() {
            if !m.is_finite() {
                return Err(Error::InvalidDistribution("non-finite mass".into()));
            }
            if *m < -SNAP_THRESHOLD {
                return Err(Error::InvalidDistribution(format!("negative mass {m}")));
            }
            if *m < SNAP_THRESHOLD {
                *m = 0.0;
            }
        }
        let total = csum(mass.iter().copied());
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(Self { nx, ny, mass })
    }

    /// Normalises arbitrary nonnegative weights.
    pub fn from_weights(nx: usize, ny: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidDistribution(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total = csum(weights.iter().copied());
        if total <= 0.0 {
            return Err(Error::InvalidDistribution("zero total weight".into()));
        }
        let mut mass: Vec<f64> = weights.iter().map(|w| w / total).collect();
        for m in mass.iter_mut() {
            if *m < SNAP_THRESHOLD {
                *m = 0.0;
            }
        }
        let total = csum(mass.iter().copied());
        mass.iter_mut().for_each(|m| *m /= total);
        Self::new(nx, ny, mass)
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let nx = rows.len();
        let ny = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != ny) {
            return Err(Error::InvalidDistribution("ragged rows".into()));
        }
        Self::new(nx, ny, rows.iter().flat_map(|r| r.iter().copied()).collect())
    }

    pub fn uniform(nx: usize, ny: usize) -> Self {
        let m = 1.0 / (nx * ny) as f64;
        Self {
            nx,
            ny,
            mass: vec![m; nx * ny],
        }
    }

    pub fn point_mass(nx: usize, ny: usize, x: usize, y: usize) -> Self {
        let mut mass = vec![0.0; nx * ny];
        mass[x * ny + y] = 1.0;
        Self { nx, ny, mass }
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.mass[x * self.ny + y]
    }

    /// Row-major cell masses.
    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// Marginal of Alice's input.
    pub fn row_marginal(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| csum((0..self.ny).map(|y| self.get(x, y))))
            .collect()
    }

    /// Marginal of Bob's input.
    pub fn col_marginal(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|y| csum((0..self.nx).map(|x| self.get(x, y))))
            .collect()
    }

    pub fn in_support(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }

    pub fn support(&self) -> Vec<(usize, usize)> {
        (0..self.nx)
            .flat_map(|x| (0..self.ny).map(move |y| (x, y)))
            .filter(|&(x, y)| self.in_support(x, y))
            .collect()
    }

    pub fn is_full_support(&self) -> bool {
        self.mass.iter().all(|&m| m > 0.0)
    }

    /// `⟨self, other⟩ = Σ self(x,y)·other(x,y)`.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_shape(other)?;
        Ok(csum(self.mass.iter().zip(&other.mass).map(|(a, b)| a * b)))
    }

    pub fn check_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::ShapeMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(())
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mass
            .iter()
            .zip(&other.mass)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.nx == self.ny
            && (0..self.nx).all(|x| (0..x).all(|y| (self.get(x, y) - self.get(y, x)).abs() <= tol))
    }

    /// Parses the `{"nx", "ny", "mass": [[..]]}` JSON format.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: DistributionFile = serde_json::from_str(text)?;
        if file.mass.len() != file.nx || file.mass.iter().any(|r| r.len() != file.ny) {
            return Err(Error::InvalidDistribution(
                "mass matrix does not match nx/ny".into(),
            ));
        }
        Self::new(file.nx, file.ny, file.mass.into_iter().flatten().collect())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("plain data serialises")
    }

    fn to_file(&self) -> DistributionFile {
        DistributionFile {
            nx: self.nx,
            ny: self.ny,
            mass: self.mass.chunks(self.ny).map(|r| r.to_vec()).collect(),
        }
    }
}

impl Serialize for JointDistribution {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_file().serialize(s)
    }
}

impl<'de> Deserialize<'de> for JointDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = DistributionFile::deserialize(d)?;
        if file.mass.len() != file.nx || file.mass.iter().any(|r| r.len() != file.ny) {
            return Err(serde::de::Error::custom("mass matrix does not match nx/ny"));
        }
        Self::new(file.nx, file.ny, file.mass.into_iter().flatten().collect())
            .map_err(serde::de::Error::custom)
    }
}

/// `a ⊙ b = a·b / ⟨a, b⟩`.
pub fn odot(a: &JointDistribution, b: &JointDistribution) -> Result<JointDistribution> {
    let ip = a.inner(b)?;
    if ip <= 0.0 {
        return Err(Error::UndefinedProduct);
    }
    let weights = a.mass.iter().zip(&b.mass).map(|(x, y)| x * y).collect();
    JointDistribution::from_weights(a.nx, a.ny, weights)
}

/// Total variation distance `½ Σ |a − b|`.
pub fn total_variation(a: &JointDistribution, b: &JointDistribution) -> Result<f64> {
    a.check_shape(b)?;
    Ok(0.5 * csum(a.mass.iter().zip(&b.mass).map(|(x, y)| (x - y).abs())))
}

/// Shannon quantities of a joint distribution, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntropyProfile {
    pub h_x_given_y: f64,
    pub h_y_given_x: f64,
    pub h_xy: f64,
    pub h_x: f64,
    pub h_y: f64,
}

impl EntropyProfile {
    /// `H(X|Y) + H(Y|X)`, the most any zero-error protocol can conceal.
    pub fn conditional_sum(&self) -> f64 {
        self.h_x_given_y + self.h_y_given_x
    }
}

/// Entropy profile, each conditional entropy summed directly from the
/// conditional laws rather than by differencing.
pub fn entropy_profile(d: &JointDistribution) -> EntropyProfile {
    let rows = d.row_marginal();
    let cols = d.col_marginal();
    let h_xy = entropy_of(&d.mass, 1.0);
    let h_x = entropy_of(&rows, 1.0);
    let h_y = entropy_of(&cols, 1.0);
    let h_x_given_y = csum((0..d.ny).map(|y| {
        let column: Vec<f64> = (0..d.nx).map(|x| d.get(x, y)).collect();
        cols[y] * entropy_of(&column, cols[y])
    }));
    let h_y_given_x = csum((0..d.nx).map(|x| {
        let row = &d.mass[x * d.ny..(x + 1) * d.ny];
        rows[x] * entropy_of(row, rows[x])
    }));
    EntropyProfile {
        h_x_given_y,
        h_y_given_x,
        h_xy,
        h_x,
        h_y,
    }
}

/// A product distribution on `{0,1}²` given by `p = Pr[X=1]`, `q = Pr[Y=1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductDistribution {
    p: f64,
    q: f64,
}

impl ProductDistribution {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        for v in [p, q] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain {
                    value: v,
                    domain: "[0, 1]",
                });
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `max(p, q)`: the quantity the stability potential is written in.
    pub fn ell(&self) -> f64 {
        self.p.max(self.q)
    }

    pub fn to_joint(&self) -> JointDistribution {
        let (p, q) = (self.p, self.q);
        JointDistribution {
            nx: 2,
            ny: 2,
            mass: vec![(1.0 - p) * (1.0 - q), (1.0 - p) * q, p * (1.0 - q), p * q],
        }
    }

    /// Reads `(p, q)` off a 2×2 distribution, failing when it is not a
    /// product within `tol`.
    pub fn from_joint(d: &JointDistribution, tol: f64) -> Result<Self> {
        if d.shape() != (2, 2) {
            return Err(Error::ShapeMismatch {
                expected: (2, 2),
                got: d.shape(),
            });
        }
        let rows = d.row_marginal();
        let cols = d.col_marginal();
        let dev = (0..2)
            .flat_map(|x| (0..2).map(move |y| (x, y)))
            .map(|(x, y)| (d.get(x, y) - rows[x] * cols[y]).abs())
            .fold(0.0, f64::max);
        if dev > tol {
            return Err(Error::NonProductLeaf(dev));
        }
        Ok(Self {
            p: rows[1].clamp(0.0, 1.0),
            q: cols[1].clamp(0.0, 1.0),
        })
    }
}

/// A reference/pretend pair `(ν, μ)` with `ν` symmetric on `{0,1}²` and `μ`
/// a product; it stands for the real distribution `ν ⊙ μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    reference: JointDistribution,
    pretend: ProductDistribution,
}

impl Decomposition {
    pub fn new(reference: JointDistribution, pretend: ProductDistribution) -> Result<Self> {
        if reference.shape() != (2, 2) {
            return Err(Error::ShapeMismatch {
                expected: (2, 2),
                got: reference.shape(),
            });
        }
        if !reference.is_symmetric(1e-12) {
            return Err(Error::Precondition(
                "reference distribution must satisfy ν(0,1) = ν(1,0)".into(),
            ));
        }
        if reference.inner(&pretend.to_joint())? <= 0.0 {
            return Err(Error::UndefinedProduct);
        }
        Ok(Self { reference, pretend })
    }

    pub fn reference(&self) -> &JointDistribution {
        &self.reference
    }

    pub fn pretend(&self) -> ProductDistribution {
        self.pretend
    }

    /// Same reference with a different pretend distribution.
    pub fn with_pretend(&self, pretend: ProductDistribution) -> Result<Self> {
        Self::new(self.reference.clone(), pretend)
    }

    /// `⟨ν, μ⟩`.
    pub fn inner(&self) -> f64 {
        self.inner_with(&self.pretend)
    }

    /// `⟨ν, μ'⟩` for another pretend distribution `μ'`.
    pub fn inner_with(&self, pretend: &ProductDistribution) -> f64 {
        self.reference
            .inner(&pretend.to_joint())
            .expect("both are 2x2")
    }

    /// The real distribution `ν ⊙ μ`.
    pub fn real(&self) -> JointDistribution {
        odot(&self.reference, &self.pretend.to_joint()).expect("checked on construction")
    }

    /// `(x, y, z) = (ν(0,0), ν(0,1), ν(1,1))`.
    pub fn reference_xyz(&self) -> (f64, f64, f64) {
        let r = &self.reference;
        (r.get(0, 0), r.get(0, 1), r.get(1, 1))
    }
}

/// Writes `w = ν ⊙ (1/2, q)` with `ν` symmetric. The pretend marginal of
/// Alice is fixed to one half; `q = w(0,1) / (w(0,1) + w(1,0))` is the unique
/// value that balances the off-diagonal of `ν`.
pub fn symmetric_decomposition(w: &JointDistribution) -> Result<Decomposition> {
    if w.shape() != (2, 2) {
        return Err(Error::ShapeMismatch {
            expected: (2, 2),
            got: w.shape(),
        });
    }
    let (w00, w01, w10) = (w.get(0, 0), w.get(0, 1), w.get(1, 0));
    if w00 <= 0.0 || w01 <= 0.0 || w10 <= 0.0 {
        return Err(Error::Infeasible(
            "symmetric decomposition needs w(0,0), w(0,1), w(1,0) > 0".into(),
        ));
    }
    let q = w01 / (w01 + w10);
    let pretend = ProductDistribution::new(0.5, q)?;
    let mu = pretend.to_joint();
    let weights: Vec<f64> = w.mass.iter().zip(&mu.mass).map(|(a, b)| a / b).collect();
    let mut reference = JointDistribution::from_weights(2, 2, weights)?;
    // Equal in exact arithmetic; make it bitwise so the symmetry check is exact.
    let off = 0.5 * (reference.get(0, 1) + reference.get(1, 0));
    reference.mass[1] = off;
    reference.mass[2] = off;
    Decomposition::new(reference, pretend)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(rows: &[&[f64]]) -> JointDistribution {
        JointDistribution::from_rows(rows).unwrap()
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // -(1/4)log2(1/4) - (3/4)log2(3/4) = 1/2 + (3/4)(2 - log2 3)
        let expected = 0.5 + 0.75 * (2.0 - 3f64.log2());
        assert!((binary_entropy(0.25).unwrap() - expected).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.811278).abs() < 1e-6);
    }

    #[test]
    fn binary_entropy_domain() {
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.5).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
        assert_eq!(binary_entropy(-1e-13).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0 + 1e-13).unwrap(), 0.0);
    }

    #[test]
    fn truncated_entropy_examples() {
        assert_eq!(truncated_entropy(0.0), 0.0);
        assert_eq!(truncated_entropy(0.75), 1.0);
        assert!((truncated_entropy(0.1) - 0.468996).abs() < 1e-6);
        assert_eq!(truncated_entropy(0.1), h(0.1));
    }

    #[test]
    fn odot_examples() {
        let nu = d(&[&[0.4, 0.1], &[0.2, 0.3]]);
        let u = JointDistribution::uniform(2, 2);
        assert!(odot(&u, &nu).unwrap().max_abs_diff(&nu) < 1e-15);

        let point = JointDistribution::point_mass(2, 2, 0, 0);
        let full = d(&[&[0.1, 0.2], &[0.3, 0.4]]);
        assert_eq!(odot(&point, &full).unwrap(), point);

        let sym = d(&[&[0.4, 0.1], &[0.1, 0.4]]);
        let prod = ProductDistribution::new(0.5, 0.5).unwrap().to_joint();
        assert!(odot(&sym, &prod).unwrap().max_abs_diff(&sym) < 1e-15);
    }

    #[test]
    fn odot_disjoint_is_undefined() {
        let a = JointDistribution::point_mass(2, 2, 0, 0);
        let b = JointDistribution::point_mass(2, 2, 1, 1);
        assert!(matches!(odot(&a, &b), Err(Error::UndefinedProduct)));
    }

    #[test]
    fn entropy_profile_examples() {
        let diag = d(&[&[0.5, 0.0], &[0.0, 0.5]]);
        let e = entropy_profile(&diag);
        assert_eq!(e.h_x_given_y, 0.0);
        assert!((e.h_xy - 1.0).abs() < 1e-15);

        let e = entropy_profile(&JointDistribution::uniform(2, 2));
        assert!((e.h_x_given_y - 1.0).abs() < 1e-15);
        assert!((e.h_xy - 2.0).abs() < 1e-15);

        let third = 1.0 / 3.0;
        let e = entropy_profile(&d(&[&[third, third], &[third, 0.0]]));
        assert!((e.h_xy - 3f64.log2()).abs() < 1e-14);
    }

    #[test]
    fn total_variation_examples() {
        let a = d(&[&[0.1, 0.2], &[0.3, 0.4]]);
        assert_eq!(total_variation(&a, &a).unwrap(), 0.0);
        let p00 = JointDistribution::point_mass(2, 2, 0, 0);
        let p11 = JointDistribution::point_mass(2, 2, 1, 1);
        assert_eq!(total_variation(&p00, &p11).unwrap(), 1.0);
        let half = d(&[&[0.5, 0.5], &[0.0, 0.0]]);
        assert!((total_variation(&p00, &half).unwrap() - 0.5).abs() < 1e-15);
        assert!(total_variation(&p00, &JointDistribution::uniform(3, 2)).is_err());
    }

    #[test]
    fn symmetric_decomposition_examples() {
        let dec = symmetric_decomposition(&JointDistribution::uniform(2, 2)).unwrap();
        assert_eq!(dec.pretend().q(), 0.5);
        assert!(dec.reference().is_symmetric(0.0));

        let w = d(&[&[0.3, 0.25], &[0.25, 0.2]]);
        let dec = symmetric_decomposition(&w).unwrap();
        assert_eq!(dec.pretend().q(), 0.5);
        assert!(dec.reference().max_abs_diff(&w) < 1e-15);

        let w = d(&[&[0.4, 0.2], &[0.3, 0.1]]);
        let dec = symmetric_decomposition(&w).unwrap();
        let back = odot(dec.reference(), &dec.pretend().to_joint()).unwrap();
        assert!(total_variation(&back, &w).unwrap() < 1e-10);
    }

    #[test]
    fn symmetric_decomposition_infeasible() {
        let w = d(&[&[0.5, 0.0], &[0.3, 0.2]]);
        assert!(matches!(symmetric_decomposition(&w), Err(Error::Infeasible(_))));
    }

    #[test]
    fn json_rejects_bad_entries() {
        assert!(JointDistribution::from_json(r#"{"nx":1,"ny":2,"mass":[[1.5,-0.5]]}"#).is_err());
        assert!(JointDistribution::from_json(r#"{"nx":1,"ny":2,"mass":[[0.5]]}"#).is_err());
        let ok = JointDistribution::from_json(r#"{"nx":1,"ny":2,"mass":[[0.25,0.75]]}"#).unwrap();
        assert_eq!(JointDistribution::from_json(&ok.to_json()).unwrap(), ok);
    }

    #[test]
    fn tiny_masses_snap_to_zero() {
        let w = JointDistribution::new(1, 2, vec![1.0 - 1e-16, 1e-16]).unwrap();
        assert_eq!(w.support(), vec![(0, 0)]);
    }
}
