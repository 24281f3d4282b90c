//! Explicit solution families: the qc-Einstein conformal factors `h_{c,ν}`,
//! the Yamabe extremal `ū` and the normalised extremal `v`, together with
//! translations, dilations and the flat Yamabe residual.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::field::{BiRadialChart, Dilated, Field, ScalarField, Translated};
use crate::frame::FrameJet;
use crate::jet::{hidx, Jet2, DIM};
use crate::quat::GroupPoint;

/// Amplitude of `ū = 2¹⁰ [(1+|q|²)² + |ω|²]⁻²`.
pub const UBAR_AMPLITUDE: f64 = 1024.0;

/// Amplitude `2¹¹√3 / π^{3/5}` of the normalised extremal `v`.
pub fn v_amplitude() -> f64 {
    2048.0 * 3f64.sqrt() / PI.powf(0.6)
}

/// Parameters of `h_{c,ν}(p) = c[(1+ν|q|²)² + ν²|ω|²]` evaluated at `center ∘ p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub c: f64,
    pub nu: f64,
    pub center: GroupPoint,
}

impl FamilyParams {
    pub fn new(c: f64, nu: f64, center: GroupPoint) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(nu > 0.0 && nu.is_finite()) {
            return Err(QcError::Domain(format!("family needs c > 0 and ν > 0, got c={c}, ν={nu}")));
        }
        Ok(Self { c, nu, center })
    }
}

/// `amplitude · (c[(1+ν|q|²)² + ν²|ω|²])^exponent` with hand-differentiated jets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FamilyPower {
    pub c: f64,
    pub nu: f64,
    pub amplitude: f64,
    pub exponent: i32,
}

impl FamilyPower {
    /// Jet of `c[(1+ν|q|²)² + ν²|ω|²]`.
    pub fn base_jet(&self, p: &GroupPoint) -> Jet2 {
        let (c, nu) = (self.c, self.nu);
        let x = p.coords();
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        let rho2 = x[4] * x[4] + x[5] * x[5] + x[6] * x[6];
        let s = 1.0 + nu * r2;
        let mut j = Jet2::constant(c * (s * s + nu * nu * rho2));
        for i in 0..4 {
            j.grad[i] = 4.0 * c * nu * s * x[i];
            for k in i..4 {
                let delta = if i == k { s } else { 0.0 };
                j.hess[hidx(i, k)] = 4.0 * c * nu * (delta + 2.0 * nu * x[i] * x[k]);
            }
        }
        for i in 4..DIM {
            j.grad[i] = 2.0 * c * nu * nu * x[i];
            j.hess[hidx(i, i)] = 2.0 * c * nu * nu;
        }
        j
    }
}

impl ScalarField for FamilyPower {
    fn tag(&self) -> String {
        format!(
            "{}·({}[(1+{}|q|²)²+{}²|ω|²])^{}",
            self.amplitude, self.c, self.nu, self.nu, self.exponent
        )
    }

    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        let b = self.base_jet(p);
        if self.exponent == 1 {
            return Ok(b.scale(self.amplitude));
        }
        let (v, n) = (b.value, self.exponent);
        let nf = n as f64;
        let a = self.amplitude;
        Ok(b.chain(
            a * v.powi(n),
            a * nf * v.powi(n - 1),
            a * nf * (nf - 1.0) * v.powi(n - 2),
        ))
    }

    fn value(&self, p: &GroupPoint) -> Result<f64> {
        Ok(self.amplitude * self.base_jet(p).value.powi(self.exponent))
    }

    fn chart(&self) -> Option<BiRadialChart> {
        Some(BiRadialChart {
            center: GroupPoint::IDENTITY,
            scale: self.nu.sqrt(),
        })
    }
}

/// `h_{c,ν}` precomposed with left translation by the centre.
pub fn h_family(params: FamilyParams) -> Field {
    let core: Field = Arc::new(FamilyPower {
        c: params.c,
        nu: params.nu,
        amplitude: 1.0,
        exponent: 1,
    });
    if params.center == GroupPoint::IDENTITY {
        core
    } else {
        translate_field(core, params.center)
    }
}

/// `ū = 2¹⁰ h_{1,1}⁻²`.
pub fn ubar_field() -> Field {
    Arc::new(FamilyPower {
        c: 1.0,
        nu: 1.0,
        amplitude: UBAR_AMPLITUDE,
        exponent: -2,
    })
}

/// `v = 2¹¹√3 π^{−3/5} h_{1,1}⁻²`.
pub fn v_field() -> Field {
    Arc::new(FamilyPower {
        c: 1.0,
        nu: 1.0,
        amplitude: v_amplitude(),
        exponent: -2,
    })
}

/// `p ↦ u(g0 ∘ p)`.
pub fn translate_field(u: Field, g0: GroupPoint) -> Field {
    Arc::new(Translated { inner: u, by: g0 })
}

/// `p ↦ λ⁴ u(λq, λ²ω)`.
pub fn dilate_field(u: Field, lambda: f64) -> Result<Field> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(QcError::Domain(format!("dilation factor must be positive, got {lambda}")));
    }
    Ok(Arc::new(Dilated { inner: u, lambda }))
}

/// `△u + u^{3/2}` at `p`.
pub fn pde_residual(u: &dyn ScalarField, p: &GroupPoint) -> Result<f64> {
    let j = FrameJet::eval(u, p)?;
    if j.value < 0.0 {
        return Err(QcError::Domain(format!(
            "{} is negative ({}) at {:?}",
            u.tag(),
            j.value,
            p.coords()
        )));
    }
    Ok(j.sub_laplacian() + j.value.powf(1.5))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{autodiff_lift, Formula};
    use crate::real::Real;

    struct FamilyFormula {
        c: f64,
        nu: f64,
        amplitude: f64,
        exponent: i32,
    }

    impl Formula for FamilyFormula {
        fn eval<T: Real>(&self, x: &[T; DIM]) -> T {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            let rho2 = x[4] * x[4] + x[5] * x[5] + x[6] * x[6];
            let s = r2 * self.nu + 1.0;
            ((s * s + rho2 * (self.nu * self.nu)) * self.c).powi(self.exponent) * self.amplitude
        }
        fn tag(&self) -> String {
            "family (autodiff)".into()
        }
    }

    fn sample_points() -> Vec<GroupPoint> {
        vec![
            GroupPoint::IDENTITY,
            GroupPoint::from_coords([0.3, -1.2, 0.8, 0.1, 0.5, -0.4, 1.1]),
            GroupPoint::from_coords([-2.0, 0.7, 0.0, 1.5, -1.3, 0.2, 0.0]),
        ]
    }

    #[test]
    fn closed_form_jets_match_autodiff() {
        for (c, nu, amp, e) in [(1.0, 1.0, 1.0, 1), (2.5, 0.3, 1.0, 1), (1.0, 1.0, 1024.0, -2), (0.7, 4.0, 3.0, -2)] {
            let closed = FamilyPower {
                c,
                nu,
                amplitude: amp,
                exponent: e,
            };
            let auto = autodiff_lift(FamilyFormula {
                c,
                nu,
                amplitude: amp,
                exponent: e,
            });
            for p in sample_points() {
                let a = closed.jet(&p).unwrap();
                let b = auto.jet(&p).unwrap();
                let scale = a.value.abs().max(1.0);
                assert!((a.value - b.value).abs() <= 1e-13 * scale);
                for k in 0..DIM {
                    assert!((a.grad[k] - b.grad[k]).abs() <= 1e-12 * scale);
                }
                for k in 0..a.hess.len() {
                    assert!((a.hess[k] - b.hess[k]).abs() <= 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn family_values() {
        let h = h_family(FamilyParams::new(1.0, 1.0, GroupPoint::IDENTITY).unwrap());
        assert_eq!(h.value(&GroupPoint::IDENTITY).unwrap(), 1.0);
        let h = h_family(FamilyParams::new(2.0, 3.0, GroupPoint::IDENTITY).unwrap());
        let i = GroupPoint::from_coords([0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(h.value(&i).unwrap(), 32.0);
        assert!(FamilyParams::new(0.0, 1.0, GroupPoint::IDENTITY).is_err());
    }

    #[test]
    fn extremal_values() {
        let u = ubar_field();
        assert_eq!(u.value(&GroupPoint::IDENTITY).unwrap(), 1024.0);
        let i = GroupPoint::from_coords([0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(u.value(&i).unwrap(), 64.0);
        let v0 = v_field().value(&GroupPoint::IDENTITY).unwrap();
        assert!((v0 - 2048.0 * 3f64.sqrt() * PI.powf(-0.6)).abs() < 1e-12);
        assert!((v0 - 1784.8).abs() < 0.1);
    }

    #[test]
    fn residual_at_origin_cancels_exactly() {
        let j = FrameJet::eval(ubar_field().as_ref(), &GroupPoint::IDENTITY).unwrap();
        assert_eq!(j.sub_laplacian(), -32768.0);
        assert_eq!(pde_residual(ubar_field().as_ref(), &GroupPoint::IDENTITY).unwrap(), 0.0);
    }

    #[test]
    fn dilation_amplitude() {
        let u = dilate_field(ubar_field(), 2.0).unwrap();
        assert_eq!(u.value(&GroupPoint::IDENTITY).unwrap(), 16384.0);
        assert!(dilate_field(ubar_field(), 0.0).is_err());
        assert!(dilate_field(ubar_field(), -1.0).is_err());
    }

    #[test]
    fn trivial_translation_and_dilation() {
        for p in sample_points() {
            let u = ubar_field();
            let t = translate_field(u.clone(), GroupPoint::IDENTITY);
            let d = dilate_field(u.clone(), 1.0).unwrap();
            assert_eq!(t.value(&p).unwrap(), u.value(&p).unwrap());
            assert_eq!(d.jet(&p).unwrap(), u.jet(&p).unwrap());
        }
    }

    #[test]
    fn negative_field_is_a_domain_error() {
        let neg: Field = Arc::new(crate::field::ConstantField(-1.0));
        assert!(matches!(pde_residual(neg.as_ref(), &GroupPoint::IDENTITY), Err(QcError::Domain(_))));
    }
}
