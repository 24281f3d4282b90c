//! Left-invariant frame of `G(H)`, the quaternionic structure it induces, and
//! the horizontal differential operators.
//!
//! The horizontal fields `e_a ∈ {T1, X1, Y1, Z1}` are the left translates of
//! the coordinate directions of `q`:
//!
//! ```text
//! e_a(p) = ∂_a + Σ_v 2 Im(q ē_a)_v ∂_{ω_v}
//! ```
//!
//! and the vertical fields are `ξ_s = 2 ∂_{ω_s}`. The fundamental forms are
//! read off the brackets, `[e_a, e_b] = -2 Σ_s ω_s(e_a, e_b) ξ_s`, and the
//! almost complex structures are defined by `g(I_s X, Y) = ω_s(X, Y)`. With
//! these conventions `I_1 T1 = X1`, `I_2 T1 = Y1`, `I_3 T1 = Z1` and
//! `I_1 I_2 = I_3`.
//!
//! The connection is flat in this frame, so `∇dh(e_a, e_b) = e_a(e_b h)`; its
//! antisymmetric part is `-Σ_s ω_s(e_a, e_b) ξ_s h`.

use std::sync::LazyLock;

use nalgebra::{Matrix4,Matrix4x3, Vector3, Vector4};

use crate::error::Result;
use crate::field::ScalarField;
use crate::jet::{Jet2, DIM};
use crate::quat::{GroupPoint, ImQuaternion, Quaternion};
use crate::real::Real;

/// Horizontal frame indices.
pub const T1: usize = 0;
pub const X1: usize = 1;
pub const Y1: usize = 2;
pub const Z1: usize = 3;

/// Coefficients of the frame in coordinate directions at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameCoeffs {
    /// Row `a` holds the coefficients of `e_a`.
    pub horizontal: [[f64; DIM]; 4],
    /// Row `s` holds the coefficients of `ξ_{s+1}`.
    pub vertical: [[f64; DIM]; 3],
}

fn unit<T: Real>(a: usize) -> Quaternion<T> {
    let mut c = [T::zero(); 4];
    c[a] = T::one();
    Quaternion::new(c[0], c[1], c[2], c[3])
}

/// Frame coefficient rows as functions of `q`; generic so that the rows can be differentiated.
pub fn horizontal_rows<T: Real>(q: Quaternion<T>) -> [[T; DIM]; 4] {
    std::array::from_fn(|a| {
        let twist: ImQuaternion<T> = (q * unit::<T>(a).conj()).im().scale(T::cst(2.0));
        let mut row = [T::zero(); DIM];
        row[a] = T::one();
        row[4] = twist.x;
        row[5] = twist.y;
        row[6] = twist.z;
        row
    })
}

pub fn frame_at(p: &GroupPoint) -> FrameCoeffs {
    let mut vertical = [[0.0; DIM]; 3];
    for (s, row) in vertical.iter_mut().enumerate() {
        row[4 + s] = 2.0;
    }
    FrameCoeffs {
        horizontal: horizontal_rows(p.q),
        vertical,
    }
}

/// `∂_b` of the `ω_v` coefficient of `e_a`; constant because the rows are linear in `q`.
/// Indexed `[a][b][v]`.
fn coefficient_slopes() -> [[[f64; 3]; 4]; 4] {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let tw = (unit::<f64>(b) * unit::<f64>(a).conj()).im().scale(2.0);
            [tw.x, tw.y, tw.z]
        })
    })
}

/// Almost complex structures `I_s` and fundamental forms `ω_s` in frame coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexStructures {
    /// `I_s` acting on column vectors of frame components.
    pub i: [Matrix4<f64>; 3],
    /// `ω_s(e_a, e_b)` at entry `(a, b)`.
    pub omega: [Matrix4<f64>; 3],
}

impl ComplexStructures {
    fn from_brackets() -> Self {
        let slopes = coefficient_slopes();
        let omega: [Matrix4<f64>; 3] = std::array::from_fn(|s| {
            // [e_a, e_b] = Σ_v (∂_a c_{b,v} - ∂_b c_{a,v}) ∂_{ω_v} = -2 Σ_s ω_s(a,b) 2∂_{ω_s}
            Matrix4::from_fn(|a, b| -0.25 * (slopes[b][a][s] - slopes[a][b][s]))
        });
        let i = std::array::from_fn(|s| omega[s].transpose());
        Self { i, omega }
    }

    /// Largest deviation from `I_s² = -1`, `I_1 I_2 = I_3` (and cyclic), orthogonality and skewness.
    pub fn defect(&self) -> f64 {
        let id = Matrix4::<f64>::identity();
        let mut worst: f64 = 0.0;
        for s in 0..3 {
            let m = &self.i[s];
            worst = worst.max((m * m + id).amax());
            worst = worst.max((m.transpose() * m - id).amax());
            worst = worst.max((m + m.transpose()).amax());
            let (j, k) = ((s + 1) % 3, (s + 2) % 3);
            worst = worst.max((self.i[s] * self.i[j] - self.i[k]).amax());
        }
        worst
    }
}

static STRUCTURES: LazyLock<ComplexStructures> = LazyLock::new(|| {
    let cs = ComplexStructures::from_brackets();
    assert!(
        cs.defect() <= 1e-15,
        "quaternionic relations fail for the bracket-derived structures: {}",
        cs.defect()
    );
    cs
});

/// The structures derived from the frame brackets (verified once on first use).
pub fn complex_structures() -> &'static ComplexStructures {
    &STRUCTURES
}

/// Horizontal and vertical derivatives of a field at a point, all from one jet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameJet {
    pub value: f64,
    /// `e_a f`.
    pub horizontal: Vector4<f64>,
    /// `ξ_s f`.
    pub vertical: Vector3<f64>,
    /// `e_a(e_b f)` at `(a, b)`.
    pub hessian: Matrix4<f64>,
    /// `e_a(ξ_s f)` at `(a, s)`.
    pub mixed: Matrix4x3<f64>,
}

impl FrameJet {
    pub fn from_jet(jet: &Jet2, p: &GroupPoint) -> Self {
        let c = horizontal_rows(p.q);
        let slopes = coefficient_slopes();
        let g = &jet.grad;
        let horizontal = Vector4::from_fn(|a, _| (0..DIM).map(|k| c[a][k] * g[k]).sum());
        let vertical = Vector3::from_fn(|s, _| 2.0 * g[4 + s]);
        let hessian = Matrix4::from_fn(|a, b| {
            let mut acc = 0.0;
            for j in 0..DIM {
                if c[a][j] == 0.0 {
                    continue;
                }
                let mut inner = 0.0;
                for k in 0..DIM {
                    inner += c[b][k] * jet.h(j, k);
                }
                acc += c[a][j] * inner;
            }
            // e_a applied to the coefficients of e_b
            for v in 0..3 {
                acc += slopes[b][a][v] * g[4 + v];
            }
            acc
        });
        let mixed = Matrix4x3::from_fn(|a, s| 2.0 * (0..DIM).map(|j| c[a][j] * jet.h(j, 4 + s)).sum::<f64>());
        Self {
            value: jet.value,
            horizontal,
            vertical,
            hessian,
            mixed,
        }
    }

    pub fn eval(f: &dyn ScalarField, p: &GroupPoint) -> Result<Self> {
        Ok(Self::from_jet(&f.jet(p)?, p))
    }

    pub fn sub_laplacian(&self) -> f64 {
        self.hessian.trace()
    }

    /// `|∇f|² = Σ_a (e_a f)²`.
    pub fn grad_norm_sqr(&self) -> f64 {
        self.horizontal.norm_squared()
    }
}

pub fn horizontal_gradient(f: &dyn ScalarField, p: &GroupPoint) -> Result<Vector4<f64>> {
    Ok(FrameJet::eval(f, p)?.horizontal)
}

pub fn vertical_derivatives(f: &dyn ScalarField, p: &GroupPoint) -> Result<Vector3<f64>> {
    Ok(FrameJet::eval(f, p)?.vertical)
}

pub fn horizontal_hessian(f: &dyn ScalarField, p: &GroupPoint) -> Result<Matrix4<f64>> {
    Ok(FrameJet::eval(f, p)?.hessian)
}

/// `T1² + X1² + Y1² + Z1²` applied to `f`.
pub fn sub_laplacian(f: &dyn ScalarField, p: &GroupPoint) -> Result<f64> {
    Ok(FrameJet::eval(f, p)?.sub_laplacian())
}

/// Max-norm of `[e_a, e_b](p) + 2 Σ_s ω_s(e_a, e_b) ξ_s`.
///
/// The bracket is computed from jets of the frame coefficient functions at
/// `p`, independently of the constant slopes used to build `ω_s`.
pub fn commutator_audit(a: usize, b: usize, p: &GroupPoint) -> f64 {
    assert!(a < 4 && b < 4, "horizontal frame indices are 0..4");
    let x = Jet2::seed(&p.coords());
    let rows = horizontal_rows(Quaternion::new(x[0], x[1], x[2], x[3]));
    let mut bracket = [0.0; DIM];
    for (k, slot) in bracket.iter_mut().enumerate() {
        let mut acc = 0.0;
        for j in 0..DIM {
            acc += rows[a][j].value * rows[b][k].grad[j] - rows[b][j].value * rows[a][k].grad[j];
        }
        *slot = acc;
    }
    let cs = complex_structures();
    let vertical = frame_at(p).vertical;
    let mut worst: f64 = 0.0;
    for k in 0..DIM {
        let mut v = bracket[k];
        for s in 0..3 {
            v += 2.0 * cs.omega[s][(a, b)] * vertical[s][k];
        }
        worst = worst.max(v.abs());
    }
    worst
}

/// `ω_s(X, Y)` for horizontal frame vectors.
pub fn omega(s: usize, x: &Vector4<f64>, y: &Vector4<f64>) -> f64 {
    x.dot(&(complex_structures().omega[s] * y))
}
