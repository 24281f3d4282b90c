//! Quaternions and the quaternionic Heisenberg group `G(H) = H x Im H`.
//!
//! Coordinates on the group are ordered `(t1, x1, y1, z1, x, y, z)` with
//! `q = t1 + i x1 + j y1 + k z1` and `ω = i x + j y + k z`. The group law is
//!
//! ```text
//! (q0, ω0) ∘ (q, ω) = (q0 + q, ω + ω0 + 2 Im(q0 q̄))
//! ```
//!
//! and the parabolic dilations are `δ_λ(q, ω) = (λ q, λ² ω)`.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::real::Real;

/// A quaternion `w + x i + y j + z k` with Hamilton's convention `ij = k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quaternion<T = f64> {
    pub w: T,
    pub x: T,
    pub y: T,
    pub z: T,
}

/// A purely imaginary quaternion `x i + y j + z k`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImQuaternion<T = f64> {
    pub x: T,
    pub y: T,
    pub z: T,
}

impl<T: Real> Quaternion<T> {
    pub const fn new(w: T, x: T, y: T, z: T) -> Self {
        Self { w, x, y, z }
    }

    pub fn from_real(w: T) -> Self {
        Self::new(w, T::zero(), T::zero(), T::zero())
    }

    pub fn zero() -> Self {
        Self::from_real(T::zero())
    }

    pub fn one() -> Self {
        Self::from_real(T::one())
    }

    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    pub fn norm_sqr(self) -> T {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn norm(self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn im(self) -> ImQuaternion<T> {
        ImQuaternion::new(self.x, self.y, self.z)
    }

    /// `conj(a) / |a|²`, without a zero check. Prefer [`Quaternion::inv`] on plain numbers.
    pub fn inv_unchecked(self) -> Self {
        self.conj().scale(self.norm_sqr().recip())
    }

    pub fn to_array(self) -> [T; 4] {
        [self.w, self.x, self.y, self.z]
    }
}

impl Quaternion<f64> {
    pub const I: Quaternion = Quaternion::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Quaternion = Quaternion::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 1.0);
    pub const ONE: Quaternion = Quaternion::new(1.0, 0.0, 0.0, 0.0);
    pub const ZERO: Quaternion = Quaternion::new(0.0, 0.0, 0.0, 0.0);

    /// Multiplicative inverse; the zero quaternion has none.
    pub fn inv(self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return Err(QcError::Domain(format!("quaternion {self:?} is not invertible")));
        }
        Ok(self.conj().scale(1.0 / n2))
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn max_abs_diff(self, other: Self) -> f64 {
        (self - other).to_array().iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl<T: Real> Add for Quaternion<T> {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.w + r.w, self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl<T: Real> Sub for Quaternion<T> {
    type Output = Self;
    fn sub(self, r: Self) -> Self {
        Self::new(self.w - r.w, self.x - r.x, self.y - r.y, self.z - r.z)
    }
}

impl<T: Real> Neg for Quaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Hamilton product.
impl<T: Real> Mul for Quaternion<T> {
    type Output = Self;
    fn mul(self, b: Self) -> Self {
        let a = self;
        Self::new(
            a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w,
        )
    }
}

impl<T: Real> ImQuaternion<T> {
    pub const fn new(x: T, y: T, z: T) -> Self {
        Self { x, y, z }
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero(), T::zero())
    }

    pub fn to_quaternion(self) -> Quaternion<T> {
        Quaternion::new(T::zero(), self.x, self.y, self.z)
    }

    pub fn norm_sqr(self) -> T {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn scale(self, s: T) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl<T: Real> Add for ImQuaternion<T> {
    type Output = Self;
    fn add(self, r: Self) -> Self {
        Self::new(self.x + r.x, self.y + r.y, self.z + r.z)
    }
}

impl<T: Real> Neg for ImQuaternion<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// Hamilton product (free-function form).
pub fn quat_mul<T: Real>(a: Quaternion<T>, b: Quaternion<T>) -> Quaternion<T> {
    a * b
}

/// Inverse of a nonzero quaternion.
pub fn quat_inv(a: Quaternion) -> Result<Quaternion> {
    a.inv()
}

/// `(q0, ω0) ∘ (q, ω)`, generic over the scalar so that it also propagates jets.
pub fn twisted_product<T: Real>(
    q0: Quaternion<T>,
    w0: ImQuaternion<T>,
    q: Quaternion<T>,
    w: ImQuaternion<T>,
) -> (Quaternion<T>, ImQuaternion<T>) {
    let twist = (q0 * q.conj()).im().scale(T::cst(2.0));
    (q0 + q, w + w0 + twist)
}

/// A point of `G(H)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub q: Quaternion,
    pub omega: ImQuaternion,
}

impl GroupPoint {
    pub const IDENTITY: GroupPoint = GroupPoint {
        q: Quaternion::ZERO,
        omega: ImQuaternion::new(0.0, 0.0, 0.0),
    };

    pub const fn new(q: Quaternion, omega: ImQuaternion) -> Self {
        Self { q, omega }
    }

    pub fn from_coords(c: [f64; 7]) -> Self {
        Self::new(
            Quaternion::new(c[0], c[1], c[2], c[3]),
            ImQuaternion::new(c[4], c[5], c[6]),
        )
    }

    pub fn coords(&self) -> [f64; 7] {
        [
            self.q.w, self.q.x, self.q.y, self.q.z, self.omega.x, self.omega.y, self.omega.z,
        ]
    }

    /// Max-norm distance between coordinate vectors.
    pub fn max_abs_diff(&self, other: &GroupPoint) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `|q|`.
    pub fn r(&self) -> f64 {
        self.q.norm()
    }

    /// `|ω|`.
    pub fn rho(&self) -> f64 {
        self.omega.norm_sqr().sqrt()
    }

    pub fn mul(&self, g: &GroupPoint) -> GroupPoint {
        group_mul(self, g)
    }

    pub fn inverse(&self) -> GroupPoint {
        group_inv(self)
    }
}

/// Group law `g0 ∘ g`.
pub fn group_mul(g0: &GroupPoint, g: &GroupPoint) -> GroupPoint {
    let (q, w) = twisted_product(g0.q, g0.omega, g.q, g.omega);
    GroupPoint::new(q, w)
}

/// Two-sided inverse `(-q, -ω)`; the twist `2 Im(q q̄)` vanishes.
pub fn group_inv(g: &GroupPoint) -> GroupPoint {
    GroupPoint::new(-g.q, -g.omega)
}

/// Parabolic dilation `(λ q, λ² ω)`.
pub fn dilation(lambda: f64, g: &GroupPoint) -> Result<GroupPoint> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(QcError::Domain(format!("dilation factor must be positive, got {lambda}")));
    }
    Ok(GroupPoint::new(g.q.scale(lambda), g.omega.scale(lambda * lambda)))
}
