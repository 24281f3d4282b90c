//! Conformal deformations `η̄ = (2h)⁻¹ η` of the flat structure in dimension seven.
//!
//! Every quantity is evaluated from one second-order jet of `h` through
//! [`ConformalPoint`]. Bilinear forms are 4x4 matrices in the horizontal frame
//! with `m(X, Y) = Xᵀ m Y`; covectors are their values on `T1, X1, Y1, Z1`.
//! Only the `n = 1` coefficients are implemented.

use nalgebra::{Matrix4, Vector4};

use crate::error::{QcError, Result};
use crate::field::ScalarField;
use crate::frame::{complex_structures, FrameJet};
use crate::quat::GroupPoint;

/// Relative tolerance on the antisymmetric part left after the `[sym]` correction.
pub const SYM_TOLERANCE: f64 = 1e-9;

/// A symmetric bilinear form on the horizontal space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymMatrix4(Matrix4<f64>);

impl SymMatrix4 {
    /// Symmetric part `(m + mᵀ)/2`.
    pub fn symmetrize(m: &Matrix4<f64>) -> Self {
        Self((m + m.transpose()) * 0.5)
    }

    pub fn zeros() -> Self {
        Self(Matrix4::zeros())
    }

    pub fn identity() -> Self {
        Self(Matrix4::identity())
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn frobenius(&self) -> f64 {
        self.0.norm()
    }

    pub fn apply(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> f64 {
        x.dot(&(self.0 * y))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0 * s)
    }

    pub fn max_abs_diff(&self, other: &SymMatrix4) -> f64 {
        (self.0 - other.0).amax()
    }
}

/// A horizontal 1-form by its values on the frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HorizontalCovector(pub Vector4<f64>);

impl HorizontalCovector {
    pub fn zeros() -> Self {
        Self(Vector4::zeros())
    }

    /// The dual of frame vector `a`.
    pub fn dual(a: usize) -> Self {
        let mut v = Vector4::zeros();
        v[a] = 1.0;
        Self(v)
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        self.0.dot(x)
    }

    /// The covector `X ↦ self(I_s X)`.
    pub fn after_structure(&self, s: usize) -> Self {
        Self(complex_structures().i[s].transpose() * self.0)
    }

    pub fn max_abs_diff(&self, other: &HorizontalCovector) -> f64 {
        (self.0 - other.0).amax()
    }
}

impl std::ops::Add for HorizontalCovector {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self(self.0 + rhs.0)
    }
}

impl std::ops::Sub for HorizontalCovector {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self(self.0 - rhs.0)
    }
}

impl std::ops::Neg for HorizontalCovector {
    type Output = Self;
    fn neg(self) -> Self {
        Self(-self.0)
    }
}

impl std::ops::Mul<HorizontalCovector> for f64 {
    type Output = HorizontalCovector;
    fn mul(self, rhs: HorizontalCovector) -> HorizontalCovector {
        HorizontalCovector(rhs.0 * self)
    }
}

/// Eigenspaces of the Casimir operator `† = Σ_s I_s ⊗ I_s` on symmetric forms.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CasimirPart {
    /// Eigenvalue 3.
    Three,
    /// Eigenvalue −1.
    MinusOne,
}

/// `(†m)(X, Y) = Σ_s m(I_s X, I_s Y)`.
pub fn dagger(m: &SymMatrix4) -> SymMatrix4 {
    let cs = complex_structures();
    let mut out = Matrix4::zeros();
    for i in &cs.i {
        out += i.transpose() * m.0 * i;
    }
    SymMatrix4::symmetrize(&out)
}

/// `P[3] = († + 1)/4`, `P[−1] = (3 − †)/4`.
pub fn casimir_project(m: &SymMatrix4, part: CasimirPart) -> SymMatrix4 {
    let d = dagger(m).0;
    match part {
        CasimirPart::Three => SymMatrix4((d + m.0) * 0.25),
        CasimirPart::MinusOne => SymMatrix4((m.0 * 3.0 - d) * 0.25),
    }
}

/// The jet of `h` at a point, read in the horizontal frame, with `h > 0` checked.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConformalPoint {
    pub frame: FrameJet,
}

impl ConformalPoint {
    pub fn eval(h: &dyn ScalarField, p: &GroupPoint) -> Result<Self> {
        let frame = FrameJet::eval(h, p)?;
        if frame.value <= 0.0 || !frame.value.is_finite() {
            return Err(QcError::Domain(format!(
                "conformal factor {} must be positive, got {} at {:?}",
                h.tag(),
                frame.value,
                p.coords()
            )));
        }
        Ok(Self { frame })
    }

    pub fn h(&self) -> f64 {
        self.frame.value
    }

    /// `∇h` in frame components.
    pub fn grad(&self) -> Vector4<f64> {
        self.frame.horizontal
    }

    pub fn grad_norm_sqr(&self) -> f64 {
        self.frame.grad_norm_sqr()
    }

    /// `dh(ξ_s)`.
    pub fn vertical(&self, s: usize) -> f64 {
        self.frame.vertical[s]
    }

    /// `∇dh(X, Y) = Xᵀ M Y`.
    pub fn hessian(&self) -> &Matrix4<f64> {
        &self.frame.hessian
    }

    pub fn sub_laplacian(&self) -> f64 {
        self.frame.sub_laplacian()
    }

    /// `2 − 4h + 3h⁻¹|∇h|²`, the right-hand side of the sphere-normalised Yamabe equation.
    pub fn yamabe_rhs(&self) -> f64 {
        2.0 - 4.0 * self.h() + 3.0 * self.grad_norm_sqr() / self.h()
    }

    /// `[∇dh]_[sym] = ∇dh + Σ_s dh(ξ_s) ω_s`, checked for symmetry.
    pub fn sym_part(&self) -> Result<SymMatrix4> {
        let cs = complex_structures();
        let mut m = self.frame.hessian;
        for s in 0..3 {
            m += cs.omega[s] * self.vertical(s);
        }
        let asym = (m - m.transpose()).amax() * 0.5;
        let scale = self.frame.hessian.amax().max(1.0);
        if asym > SYM_TOLERANCE * scale {
            return Err(QcError::Consistency(format!(
                "corrected Hessian has antisymmetric part {asym:e}"
            )));
        }
        Ok(SymMatrix4::symmetrize(&m))
    }

    /// Covector `X ↦ ∇dh(X, ∇h)`.
    pub fn hess_grad(&self) -> HorizontalCovector {
        HorizontalCovector(self.frame.hessian * self.grad())
    }

    /// Covector `X ↦ ∇dh(I_s X, I_s ∇h)`.
    pub fn hess_twisted(&self, s: usize) -> HorizontalCovector {
        let i = &complex_structures().i[s];
        HorizontalCovector(i.transpose() * self.frame.hessian * i * self.grad())
    }

    /// Covector `X ↦ ∇dh(I_s X, ξ_s)`.
    pub fn hess_vertical_twisted(&self, s: usize) -> HorizontalCovector {
        let i = &complex_structures().i[s];
        HorizontalCovector(i.transpose() * self.frame.mixed.column(s))
    }

    /// Covector `dh`.
    pub fn dh(&self) -> HorizontalCovector {
        HorizontalCovector(self.grad())
    }

    /// Covector `X ↦ dh(I_s X)`.
    pub fn dh_twisted(&self, s: usize) -> HorizontalCovector {
        self.dh().after_structure(s)
    }

    /// Covector `X ↦ ∇dh(X,∇h) + Σ_s ∇dh(I_sX, I_s∇h) − (2−4h+3h⁻¹|∇h|²) dh(X)`.
    pub fn identity_e1(&self) -> HorizontalCovector {
        let mut acc = self.hess_grad();
        for s in 0..3 {
            acc = acc + self.hess_twisted(s);
        }
        acc - self.yamabe_rhs() * self.dh()
    }

    /// `D_i` with the Yamabe equation already substituted.
    pub fn vector_d_parts(&self) -> [HorizontalCovector; 3] {
        let h2 = self.h().powi(-2);
        std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            (0.25 * h2 * self.yamabe_rhs()) * self.dh()
                + (h2 * self.vertical(i)) * self.dh_twisted(i)
                - (0.5 * h2) * (self.hess_twisted(j) + self.hess_twisted(k))
        })
    }

    /// `D_i` before the Yamabe substitution.
    pub fn vector_d_parts_unsubstituted(&self) -> [HorizontalCovector; 3] {
        let h2 = self.h().powi(-2);
        std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            (h2 * self.vertical(i)) * self.dh_twisted(i)
                + (0.25 * h2)
                    * (self.hess_grad() + self.hess_twisted(i) - self.hess_twisted(j) - self.hess_twisted(k))
        })
    }

    /// Closed form `D(X) = ¼h⁻²(3∇dh(X,∇h) − Σ_s ∇dh(I_sX,I_s∇h)) + h⁻² Σ_s dh(ξ_s) dh(I_sX)`.
    pub fn vector_d_closed_form(&self) -> HorizontalCovector {
        let h2 = self.h().powi(-2);
        let mut twisted = HorizontalCovector::zeros();
        let mut vert = HorizontalCovector::zeros();
        for s in 0..3 {
            twisted = twisted + self.hess_twisted(s);
            vert = vert + self.vertical(s) * self.dh_twisted(s);
        }
        (0.25 * h2) * (3.0 * self.hess_grad() - twisted) + h2 * vert
    }

    /// `A_1, A_2, A_3` as given for a 3-Sasakian deformation.
    pub fn a_vector_parts(&self) -> [HorizontalCovector; 3] {
        let h = self.h();
        let (h1, h2, h3) = (h.recip(), h.powi(-2), h.powi(-3));
        let dh = self.dh();
        let radial = (-0.5 * h2 - 0.5 * h3 * self.grad_norm_sqr()) * dh;
        std::array::from_fn(|i| {
            let (j, k) = ((i + 1) % 3, (i + 2) % 3);
            radial - (0.5 * h1) * (self.hess_vertical_twisted(j) + self.hess_vertical_twisted(k))
                + (0.5 * h2)
                    * (self.vertical(j) * self.dh_twisted(j) + self.vertical(k) * self.dh_twisted(k))
                + (0.25 * h2) * (self.hess_twisted(j) + self.hess_twisted(k))
        })
    }

    /// The aggregate `A = A_1 + A_2 + A_3`, evaluated from its own display.
    pub fn a_vector_aggregate(&self) -> HorizontalCovector {
        let h = self.h();
        let (h1, h2, h3) = (h.recip(), h.powi(-2), h.powi(-3));
        let mut acc = (-1.5 * h2 - 1.5 * h3 * self.grad_norm_sqr()) * self.dh();
        for s in 0..3 {
            acc = acc - h1 * self.hess_vertical_twisted(s)
                + (h2 * self.vertical(s)) * self.dh_twisted(s)
                + (0.5 * h2) * self.hess_twisted(s);
        }
        acc
    }
}

/// `[∇dh]_[sym]` at `p`.
pub fn sym_part(h: &dyn ScalarField, p: &GroupPoint) -> Result<SymMatrix4> {
    let frame = FrameJet::eval(h, p)?;
    ConformalPoint { frame }.sym_part()
}

/// `T̄⁰ = h⁻¹ [∇dh]_[sym][−1]` over the flat base.
pub fn torsion_t0_deformed(h: &dyn ScalarField, p: &GroupPoint) -> Result<SymMatrix4> {
    let c = ConformalPoint::eval(h, p)?;
    Ok(casimir_project(&c.sym_part()?, CasimirPart::MinusOne).scale(c.h().recip()))
}

/// `Ū = (2h)⁻¹ [∇dh − 2h⁻¹ dh⊗dh]_[3][0]`; identically zero in dimension seven.
pub fn u_deformed(h: &dyn ScalarField, p: &GroupPoint) -> Result<SymMatrix4> {
    let c = ConformalPoint::eval(h, p)?;
    let g = c.grad();
    let b = SymMatrix4(c.sym_part()?.0 - g * g.transpose() * (2.0 / c.h()));
    let p3 = casimir_project(&b, CasimirPart::Three).0;
    let traceless = p3 - Matrix4::identity() * (b.trace() / 4.0);
    Ok(SymMatrix4::symmetrize(&traceless).scale(0.5 / c.h()))
}

/// `Scal̄ = 2h·Scal − 72 h⁻¹|∇h|² + 24 △h`.
pub fn scal_deformed(h: &dyn ScalarField, p: &GroupPoint, base_scal: f64) -> Result<f64> {
    let c = ConformalPoint::eval(h, p)?;
    Ok(2.0 * c.h() * base_scal - 72.0 * c.grad_norm_sqr() / c.h() + 24.0 * c.sub_laplacian())
}

/// `△h − (2 − 4h + 3h⁻¹|∇h|²)`.
pub fn yamabe_residual_sphere_norm(h: &dyn ScalarField, p: &GroupPoint) -> Result<f64> {
    let c = ConformalPoint::eval(h, p)?;
    Ok(c.sub_laplacian() - c.yamabe_rhs())
}

/// `∇dh(X,∇h) + Σ_s ∇dh(I_sX, I_s∇h) − (2 − 4h + 3h⁻¹|∇h|²) dh(X)`.
pub fn identity_e1_residual(h: &dyn ScalarField, x: &Vector4<f64>, p: &GroupPoint) -> Result<f64> {
    Ok(ConformalPoint::eval(h, p)?.identity_e1().eval(x))
}

/// The parts `D_1, D_2, D_3` and their sum `D`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DVectors {
    pub parts: [HorizontalCovector; 3],
    pub sum: HorizontalCovector,
}

pub fn vector_d(h: &dyn ScalarField, p: &GroupPoint) -> Result<DVectors> {
    let parts = ConformalPoint::eval(h, p)?.vector_d_parts();
    Ok(DVectors {
        parts,
        sum: parts[0] + parts[1] + parts[2],
    })
}

/// `F_1(X) = −D_1(I_1X) + D_2(I_1X) + D_3(I_1X)` and cyclic.
pub fn vector_f(d: &[HorizontalCovector; 3]) -> [HorizontalCovector; 3] {
    std::array::from_fn(|s| {
        let mut signed = d[0] + d[1] + d[2];
        signed = signed - 2.0 * d[s];
        signed.after_structure(s)
    })
}

/// `f = ½ + h + ¼h⁻¹|∇h|²`.
pub fn scalar_f(h: &dyn ScalarField, p: &GroupPoint) -> Result<f64> {
    let c = ConformalPoint::eval(h, p)?;
    Ok(0.5 + c.h() + 0.25 * c.grad_norm_sqr() / c.h())
}

pub fn a_vectors(h: &dyn ScalarField, p: &GroupPoint) -> Result<[HorizontalCovector; 3]> {
    Ok(ConformalPoint::eval(h, p)?.a_vector_parts())
}

/// `A_s = I_s[ξ_j, ξ_k]` on the flat group, where the centre is abelian.
pub fn flat_model_a() -> [HorizontalCovector; 3] {
    [HorizontalCovector::zeros(); 3]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{ConstantField, FnField};
    use crate::frame::{T1, X1};

    fn q_norm4_plus_one() -> FnField {
        FnField::new("1+|q|^4", |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            r2 * r2 + 1.0
        })
    }

    fn origin() -> GroupPoint {
        GroupPoint::IDENTITY
    }

    #[test]
    fn constant_factor_examples() {
        let p = GroupPoint::from_coords([0.3, 0.1, -0.4, 0.9, 0.2, -0.7, 0.5]);
        let half = ConstantField(0.5);
        assert_eq!(sym_part(&half, &p).unwrap(), SymMatrix4::zeros());
        assert_eq!(torsion_t0_deformed(&half, &p).unwrap().frobenius(), 0.0);
        assert_eq!(u_deformed(&half, &p).unwrap().frobenius(), 0.0);
        assert_eq!(scal_deformed(&half, &p, 3.5).unwrap(), 3.5);
        assert_eq!(yamabe_residual_sphere_norm(&half, &p).unwrap(), 0.0);
        assert_eq!(yamabe_residual_sphere_norm(&ConstantField(1.0), &p).unwrap(), 2.0);
        assert_eq!(scalar_f(&half, &p).unwrap(), 1.0);
        assert_eq!(scalar_f(&ConstantField(1.0), &p).unwrap(), 1.5);
        assert_eq!(identity_e1_residual(&half, &Vector4::new(1.0, 2.0, 3.0, 4.0), &p).unwrap(), 0.0);
        let d = vector_d(&half, &p).unwrap();
        assert_eq!(d.sum, HorizontalCovector::zeros());
        for a in a_vectors(&half, &p).unwrap() {
            assert_eq!(a, HorizontalCovector::zeros());
        }
    }

    #[test]
    fn nonpositive_factor_is_rejected() {
        let p = origin();
        assert!(matches!(torsion_t0_deformed(&ConstantField(0.0), &p), Err(QcError::Domain(_))));
        assert!(matches!(scalar_f(&ConstantField(-1.0), &p), Err(QcError::Domain(_))));
    }

    #[test]
    fn sym_part_of_vertical_coordinate_is_zero() {
        let x = FnField::new("x", |x| x[4]);
        let p = GroupPoint::from_coords([0.7, -0.2, 1.3, 0.4, 0.0, 0.1, 0.0]);
        let raw = FrameJet::eval(&x, &p).unwrap().hessian;
        assert!((raw - raw.transpose()).amax() > 1.0);
        assert!(sym_part(&x, &p).unwrap().frobenius() < 1e-15);
    }

    #[test]
    fn sym_part_of_q_norm_is_raw_hessian() {
        let q2 = FnField::new("|q|^2", |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3]);
        let p = GroupPoint::from_coords([0.7, -0.2, 1.3, 0.4, 0.5, 0.1, 0.3]);
        let raw = FrameJet::eval(&q2, &p).unwrap().hessian;
        assert!(sym_part(&q2, &p).unwrap().matrix().relative_eq(&raw, 1e-14, 1e-14));
    }

    #[test]
    fn identity_projects_to_three() {
        let id = SymMatrix4::identity();
        assert!(casimir_project(&id, CasimirPart::Three).max_abs_diff(&id) < 1e-15);
        assert!(casimir_project(&id, CasimirPart::MinusOne).frobenius() < 1e-15);
    }

    #[test]
    fn yamabe_residual_of_shifted_q_norm() {
        let h = FnField::new("|q|^2+1/2", |x| x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3] + 0.5);
        assert!((yamabe_residual_sphere_norm(&h, &origin()).unwrap() - 8.0).abs() < 1e-14);
    }

    #[test]
    fn negative_control_has_torsion() {
        let p = GroupPoint::from_coords([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let t = torsion_t0_deformed(&q_norm4_plus_one(), &p).unwrap();
        assert!(t.frobenius() > 1e-3);
        assert!(u_deformed(&q_norm4_plus_one(), &p).unwrap().frobenius() < 1e-12);
    }

    #[test]
    fn vertical_only_factor_at_origin_has_zero_d() {
        let h = FnField::new("1+0.1x", |x| x[4] * 0.1 + 1.0);
        let d = vector_d(&h, &origin()).unwrap();
        for part in d.parts {
            assert!(part.0.amax() < 1e-15);
        }
    }

    #[test]
    fn f_single_term() {
        let d = [HorizontalCovector::dual(T1), HorizontalCovector::zeros(), HorizontalCovector::zeros()];
        let f = vector_f(&d);
        // D_1(I_1 X) = ⟨e_1, I_1 X⟩, and I_1 X1 = -T1
        assert_eq!(f[0], HorizontalCovector(-(complex_structures().i[0].transpose() * Vector4::new(1.0, 0.0, 0.0, 0.0))));
        assert_eq!(f[0].0[X1], 1.0);
        assert_eq!(vector_f(&[HorizontalCovector::zeros(); 3]), [HorizontalCovector::zeros(); 3]);
    }
}
