//! Closed forms for the optimal zero-error AND protocol.

use std::f64::consts::LN_2;

use crate::distributions::{entropy_profile, symmetric_decomposition, Decomposition, JointDistribution};
use crate::{Error, Result};

fn reference_xy(dec: &Decomposition) -> Result<(f64, f64)> {
    let (x, y, _) = dec.reference_xyz();
    if x <= 0.0 || y <= 0.0 {
        return Err(Error::Precondition(format!(
            "reference needs ν(0,0) > 0 and ν(0,1) > 0, got {x} and {y}"
        )));
    }
    Ok((x, y))
}

fn open_unit(v: f64) -> Result<f64> {
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(Error::Domain {
            value: v,
            domain: "(0, 1)",
        })
    }
}

/// Scaled information of the buzzer protocol at pretend `(p, q)`, in bits.
///
/// With `p ≥ q`, `A = (1−p)x + py`, `x = ν(0,0)`, `y = ν(0,1)`:
///
/// `−[ q(1−p)y/ln 2 + (1−p)(1−q)x·log₂((1−p)x/A) + (pqy²/x + (p+q−2pq)y)·log₂(py/A) ]`
///
/// The linear term comes from integrating `1/ℓ` and so carries a natural
/// logarithm; the `1/ln 2` puts it in bits.
pub fn sim_and_zero(p: f64, q: f64, dec: &Decomposition) -> Result<f64> {
    let (x, y) = reference_xy(dec)?;
    let (p, q) = (open_unit(p)?, open_unit(q)?);
    let (p, q) = if p >= q { (p, q) } else { (q, p) };
    let a = (1.0 - p) * x + p * y;
    let linear = q * (1.0 - p) * y / LN_2;
    let stay = (1.0 - p) * (1.0 - q) * x * ((1.0 - p) * x / a).log2();
    let reveal = (p * q * y * y / x + (p + q - 2.0 * p * q) * y) * (p * y / a).log2();
    Ok(-(linear + stay + reveal))
}

/// `IC⁰(AND, 0)` at `w`: the conditional entropies of `w` minus the
/// concealed information of the buzzer protocol.
pub fn ic_and_zero(w: &JointDistribution) -> Result<f64> {
    let dec = symmetric_decomposition(w)?;
    let pretend = dec.pretend();
    let sim = sim_and_zero(pretend.p(), pretend.q(), &dec)?;
    Ok(entropy_profile(w).conditional_sum() - sim / dec.inner())
}

/// `∂²SIM/∂p²` for `p > q` as the closed-form display gives it:
/// `−2(1−q/p)·xy / (2(1−p)p²A)`.
pub fn sim_p_curvature_printed(p: f64, q: f64, dec: &Decomposition) -> Result<f64> {
    let (x, y) = reference_xy(dec)?;
    let a = (1.0 - p) * x + p * y;
    Ok(-2.0 * (1.0 - q / p) * x * y / (2.0 * (1.0 - p) * p * p * a))
}

/// `∂²SIM/∂p²` for `p > q` obtained by differentiating [`sim_and_zero`]:
/// `−(1−q/p)·xy / (p(1−p)A·ln 2)`.
pub fn sim_p_curvature(p: f64, q: f64, dec: &Decomposition) -> Result<f64> {
    let (x, y) = reference_xy(dec)?;
    let a = (1.0 - p) * x + p * y;
    Ok(-(1.0 - q / p) * x * y / (p * (1.0 - p) * a * LN_2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ProductDistribution;

    fn dec(nu: [[f64; 2]; 2]) -> Decomposition {
        let nu = JointDistribution::from_rows(&[&nu[0], &nu[1]]).unwrap();
        Decomposition::new(nu, ProductDistribution::new(0.5, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn symmetric_in_p_and_q() {
        let d = dec([[0.4, 0.2], [0.2, 0.2]]);
        for (p, q) in [(0.3, 0.7), (0.1, 0.9), (0.45, 0.55)] {
            assert_eq!(sim_and_zero(p, q, &d).unwrap(), sim_and_zero(q, p, &d).unwrap());
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let d = dec([[0.4, 0.2], [0.2, 0.2]]);
        assert!(sim_and_zero(0.0, 0.3, &d).is_err());
        assert!(sim_and_zero(0.5, 1.0, &d).is_err());
        let flat = dec([[0.0, 0.25], [0.25, 0.5]]);
        assert!(matches!(sim_and_zero(0.5, 0.5, &flat), Err(Error::Precondition(_))));
    }

    #[test]
    fn curvature_forms_differ_by_p_over_ln2() {
        let d = dec([[0.4, 0.2], [0.2, 0.2]]);
        let (p, q) = (0.6, 0.3);
        let ratio = sim_p_curvature(p, q, &d).unwrap() / sim_p_curvature_printed(p, q, &d).unwrap();
        assert!((ratio - p / LN_2).abs() < 1e-12);
    }

    #[test]
    fn near_trivial_measure_has_small_cost() {
        let w = JointDistribution::from_rows(&[&[0.49, 0.49], &[0.01, 0.01]]).unwrap();
        let v = ic_and_zero(&w).unwrap();
        assert!(v >= 0.0);
        assert!(v <= 2.0 * crate::truncated_entropy(0.02));
    }
}
