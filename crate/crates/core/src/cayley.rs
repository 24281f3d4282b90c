//! Cayley transforms between the unit sphere `S⁷ ⊂ H×H` and the group, the
//! inversion `σ`, and the Kelvin transform.
//!
//! A group point `(q, ω)` corresponds to the point `(q, p′)` of the
//! paraboloid `Σ = {Re p′ = |q|²}` with `p′ = |q|² − ω`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::field::{Field, ScalarField};
use crate::jet::{Jet2, DIM};
use crate::quat::{GroupPoint, ImQuaternion, Quaternion};
use crate::real::Real;

/// Below this squared norm a quaternion is treated as non-invertible.
const SINGULAR_NORM_SQR: f64 = 1e-300;

/// A point `(q, p)` with `|q|² + |p|² = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    q: Quaternion,
    p: Quaternion,
}

impl SpherePoint {
    /// Projects `(q, p)` radially onto the sphere.
    pub fn new(q: Quaternion, p: Quaternion) -> Result<Self> {
        let n = (q.norm_sqr() + p.norm_sqr()).sqrt();
        if !(n > 0.0 && n.is_finite()) {
            return Err(QcError::Domain("cannot normalise the zero vector of H×H".into()));
        }
        Ok(Self {
            q: q.scale(1.0 / n),
            p: p.scale(1.0 / n),
        })
    }

    pub fn q(&self) -> Quaternion {
        self.q
    }

    pub fn p(&self) -> Quaternion {
        self.p
    }

    /// The pole `(q, p) = (0, −1)` where the Cayley transform is singular.
    pub fn pole() -> Self {
        Self {
            q: Quaternion::ZERO,
            p: -Quaternion::ONE,
        }
    }

    pub fn max_abs_diff(&self, other: &SpherePoint) -> f64 {
        self.q.max_abs_diff(other.q).max(self.p.max_abs_diff(other.p))
    }
}

/// `(q, ω) ↦ (q, |q|² − ω)`.
pub fn to_sigma(g: &GroupPoint) -> (Quaternion, Quaternion) {
    let pp = Quaternion::new(g.q.norm_sqr(), -g.omega.x, -g.omega.y, -g.omega.z);
    (g.q, pp)
}

/// `(q, p′) ↦ (q, −Im p′)`; the real part of `p′` is discarded.
pub fn from_sigma(q: Quaternion, p: Quaternion) -> GroupPoint {
    GroupPoint::new(q, -p.im())
}

fn checked_inv(a: Quaternion, what: &str) -> Result<Quaternion> {
    if a.norm_sqr() <= SINGULAR_NORM_SQR || !a.norm_sqr().is_finite() {
        return Err(QcError::Singularity(format!("{what} is not invertible")));
    }
    Ok(a.inv_unchecked())
}

/// `(q, p) ↦ ((1+p)⁻¹q, (1+p)⁻¹(1−p))` as a point of `Σ`.
pub fn cayley_forward_sigma(s: &SpherePoint) -> Result<(Quaternion, Quaternion)> {
    let one = Quaternion::ONE;
    let inv = checked_inv(one + s.p, "1 + p (Cayley pole)")?;
    Ok((inv * s.q, inv * (one - s.p)))
}

pub fn cayley_forward(s: &SpherePoint) -> Result<GroupPoint> {
    let (q1, p1) = cayley_forward_sigma(s)?;
    Ok(from_sigma(q1, p1))
}

/// `(q′, p′) ↦ (2(1+p′)⁻¹q′, (1−p′)(1+p′)⁻¹)`.
pub fn cayley_inverse_sigma(q1: Quaternion, p1: Quaternion) -> Result<SpherePoint> {
    let one = Quaternion::ONE;
    let inv = checked_inv(one + p1, "1 + p′")?;
    let q = (inv * q1).scale(2.0);
    let p = (one - p1) * inv;
    SpherePoint::new(q, p)
}

pub fn cayley_inverse(g: &GroupPoint) -> Result<SpherePoint> {
    let (q1, p1) = to_sigma(g);
    cayley_inverse_sigma(q1, p1)
}

/// Second Cayley transform `(q, p) ↦ (−(1−p)⁻¹q, (1−p)⁻¹(1+p))`, singular at `p = 1`.
pub fn cayley_second_sigma(s: &SpherePoint) -> Result<(Quaternion, Quaternion)> {
    let one = Quaternion::ONE;
    let inv = checked_inv(one - s.p, "1 − p (second Cayley pole)")?;
    Ok((-(inv * s.q), inv * (one + s.p)))
}

/// Conformal factor `8 / |1 + p′|²` relating the pulled-back sphere form to the flat one.
pub fn cayley_conformal_factor(g: &GroupPoint) -> f64 {
    let (_, p1) = to_sigma(g);
    8.0 / (Quaternion::ONE + p1).norm_sqr()
}

/// `σ` on coordinates of any scalar type; no singularity check.
pub fn sigma_generic<T: Real>(q: Quaternion<T>, w: ImQuaternion<T>) -> (Quaternion<T>, ImQuaternion<T>) {
    let r2 = q.norm_sqr();
    let pp = Quaternion::new(r2, -w.x, -w.y, -w.z);
    let q2 = -(pp.inv_unchecked() * q);
    let denom = r2 * r2 + w.norm_sqr();
    let w2 = -w.scale(denom.recip());
    (q2, w2)
}

/// The involution `(q, ω) ↦ (−(|q|²−ω)⁻¹q, −ω/(|q|⁴+|ω|²))`.
pub fn sigma(g: &GroupPoint) -> Result<GroupPoint> {
    let (_, pp) = to_sigma(g);
    if pp.norm_sqr() <= SINGULAR_NORM_SQR {
        return Err(QcError::Singularity("σ is undefined at the identity".into()));
    }
    let (q, w) = sigma_generic(g.q, g.omega);
    Ok(GroupPoint::new(q, w))
}

/// `(Ku)(g) = |p′|^{−4} u(σ(g))` with `|p′|² = |q|⁴ + |ω|²`.
pub struct Kelvin {
    pub inner: Field,
}

pub fn kelvin(u: Field) -> Field {
    Arc::new(Kelvin { inner: u })
}

impl ScalarField for Kelvin {
    fn tag(&self) -> String {
        format!("K({})", self.inner.tag())
    }

    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        let image = sigma(p)?;
        let x = Jet2::seed(&p.coords());
        let (q2, w2) = sigma_generic(
            Quaternion::new(x[0], x[1], x[2], x[3]),
            ImQuaternion::new(x[4], x[5], x[6]),
        );
        let map: [Jet2; DIM] = [q2.w, q2.x, q2.y, q2.z, w2.x, w2.y, w2.z];
        let pulled = Jet2::compose(&self.inner.jet(&image)?, &map);
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        let weight = (r2 * r2 + x[4] * x[4] + x[5] * x[5] + x[6] * x[6]).powi(-2);
        Ok(weight * pulled)
    }

    fn value(&self, p: &GroupPoint) -> Result<f64> {
        let image = sigma(p)?;
        let (_, pp) = to_sigma(p);
        Ok(pp.norm_sqr().powi(-2) * self.inner.value(&image)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extremal::ubar_field;

    fn gp(c: [f64; 7]) -> GroupPoint {
        GroupPoint::from_coords(c)
    }

    #[test]
    fn north_pole_maps_to_identity() {
        let s = SpherePoint::new(Quaternion::ZERO, Quaternion::ONE).unwrap();
        assert_eq!(cayley_forward(&s).unwrap(), GroupPoint::IDENTITY);
    }

    #[test]
    fn pole_is_singular() {
        assert!(matches!(cayley_forward(&SpherePoint::pole()), Err(QcError::Singularity(_))));
    }

    #[test]
    fn sigma_examples() {
        let g = sigma(&gp([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
        assert!(g.max_abs_diff(&gp([-1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])) < 1e-15);
        let g = sigma(&gp([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0])).unwrap();
        assert!(g.max_abs_diff(&gp([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0])) < 1e-15);
        assert!(matches!(sigma(&GroupPoint::IDENTITY), Err(QcError::Singularity(_))));
    }

    #[test]
    fn sigma_is_second_cayley_after_inverse_first() {
        let g = gp([0.4, -0.3, 1.1, 0.2, 0.7, -0.5, 0.9]);
        let s = cayley_inverse(&g).unwrap();
        let (q2, p2) = cayley_second_sigma(&s).unwrap();
        assert!((p2.w - q2.norm_sqr()).abs() < 1e-12);
        assert!(from_sigma(q2, p2).max_abs_diff(&sigma(&g).unwrap()) < 1e-12);
    }

    #[test]
    fn kelvin_of_ubar_at_unit_point() {
        let k = kelvin(ubar_field());
        let p = gp([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!((k.value(&p).unwrap() - 64.0).abs() < 1e-12);
        assert!((k.jet(&p).unwrap().value - 64.0).abs() < 1e-12);
        assert!(matches!(k.jet(&GroupPoint::IDENTITY), Err(QcError::Singularity(_))));
    }

    #[test]
    fn conformal_factor_at_identity() {
        assert_eq!(cayley_conformal_factor(&GroupPoint::IDENTITY), 8.0);
    }
}
