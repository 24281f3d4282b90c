//! Scalar fields on the group carrying exact Euclidean jets.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::jet::{Jet2, DIM};
use crate::quat::{dilation, group_inv, group_mul, twisted_product, GroupPoint, ImQuaternion, Quaternion};
use crate::real::Real;

/// Coordinates in which a field is bi-radial: `u(center ∘ h)` depends only on
/// `(|q(h)|, |ω(h)|)`, with its mass concentrated at `|q| ~ 1/scale`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiRadialChart {
    pub center: GroupPoint,
    pub scale: f64,
}

impl BiRadialChart {
    pub const STANDARD: BiRadialChart = BiRadialChart {
        center: GroupPoint::IDENTITY,
        scale: 1.0,
    };

    /// The group point with chart coordinates `h`.
    pub fn point(&self, h: &GroupPoint) -> GroupPoint {
        group_mul(&self.center, h)
    }
}

/// A scalar field on `R⁷` evaluated through its second-order jet.
///
/// Implementations must be pure: equal points give bitwise-equal jets, and
/// evaluation may happen concurrently from many threads.
pub trait ScalarField: Send + Sync {
    /// Human-readable formula tag.
    fn tag(&self) -> String;

    fn jet(&self, p: &GroupPoint) -> Result<Jet2>;

    fn value(&self, p: &GroupPoint) -> Result<f64> {
        Ok(self.jet(p)?.value)
    }

    /// Bi-radial chart if the field is known to be bi-radial about some point.
    fn chart(&self) -> Option<BiRadialChart> {
        None
    }
}

pub type Field = Arc<dyn ScalarField>;

impl fmt::Debug for dyn ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.tag())
    }
}

/// Value, gradient and Hessian of `f` at `p`.
pub fn eval_jet(f: &dyn ScalarField, p: &GroupPoint) -> Result<Jet2> {
    f.jet(p)
}

fn finite_or_domain(j: Jet2, tag: &str, p: &GroupPoint) -> Result<Jet2> {
    if j.is_finite() {
        Ok(j)
    } else {
        Err(QcError::Domain(format!("{tag} is not twice differentiable at {:?}", p.coords())))
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ConstantField(pub f64);

impl ScalarField for ConstantField {
    fn tag(&self) -> String {
        format!("{}", self.0)
    }
    fn jet(&self, _p: &GroupPoint) -> Result<Jet2> {
        Ok(Jet2::constant(self.0))
    }
    fn chart(&self) -> Option<BiRadialChart> {
        Some(BiRadialChart::STANDARD)
    }
}

/// A formula in the seven coordinates written once against [`Real`].
pub trait Formula: Send + Sync {
    fn eval<T: Real>(&self, x: &[T; DIM]) -> T;
    fn tag(&self) -> String;
}

/// Field obtained by running a [`Formula`] on seeded jets.
#[derive(Clone, Debug)]
pub struct AutodiffField<F> {
    formula: F,
}

/// Lifts a plain formula to a field whose jets come from forward-mode propagation.
pub fn autodiff_lift<F: Formula>(formula: F) -> AutodiffField<F> {
    AutodiffField { formula }
}

impl<F: Formula> ScalarField for AutodiffField<F> {
    fn tag(&self) -> String {
        self.formula.tag()
    }
    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        let x = Jet2::seed(&p.coords());
        finite_or_domain(self.formula.eval(&x), &self.tag(), p)
    }
    fn value(&self, p: &GroupPoint) -> Result<f64> {
        let v = self.formula.eval(&p.coords());
        if v.is_finite() {
            Ok(v)
        } else {
            Err(QcError::Domain(format!("{} undefined at {:?}", self.tag(), p.coords())))
        }
    }
}

type JetFn = dyn Fn(&[Jet2; DIM]) -> Jet2 + Send + Sync;

/// Field defined by a closure on seeded jets; handy for ad-hoc test fields.
#[derive(Clone)]
pub struct FnField {
    tag: String,
    f: Arc<JetFn>,
}

impl FnField {
    pub fn new(tag: impl Into<String>, f: impl Fn(&[Jet2; DIM]) -> Jet2 + Send + Sync + 'static) -> Self {
        Self {
            tag: tag.into(),
            f: Arc::new(f),
        }
    }
}

impl ScalarField for FnField {
    fn tag(&self) -> String {
        self.tag.clone()
    }
    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        let x = Jet2::seed(&p.coords());
        finite_or_domain((self.f)(&x), &self.tag, p)
    }
}

/// Jets of the coordinates of `g0 ∘ p` as functions of `p`.
pub fn left_translation_jets(g0: &GroupPoint, p: &GroupPoint) -> [Jet2; DIM] {
    let x = Jet2::seed(&p.coords());
    let q0 = Quaternion::new(
        Jet2::constant(g0.q.w),
        Jet2::constant(g0.q.x),
        Jet2::constant(g0.q.y),
        Jet2::constant(g0.q.z),
    );
    let w0 = ImQuaternion::new(
        Jet2::constant(g0.omega.x),
        Jet2::constant(g0.omega.y),
        Jet2::constant(g0.omega.z),
    );
    let q = Quaternion::new(x[0], x[1], x[2], x[3]);
    let w = ImQuaternion::new(x[4], x[5], x[6]);
    let (q1, w1) = twisted_product(q0, w0, q, w);
    [q1.w, q1.x, q1.y, q1.z, w1.x, w1.y, w1.z]
}

/// `p ↦ u(g0 ∘ p)`.
pub struct Translated {
    pub inner: Field,
    pub by: GroupPoint,
}

impl ScalarField for Translated {
    fn tag(&self) -> String {
        format!("τ[{:?}]({})", self.by.coords(), self.inner.tag())
    }
    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        let image = group_mul(&self.by, p);
        let outer = self.inner.jet(&image)?;
        Ok(Jet2::compose(&outer, &left_translation_jets(&self.by, p)))
    }
    fn value(&self, p: &GroupPoint) -> Result<f64> {
        self.inner.value(&group_mul(&self.by, p))
    }
    fn chart(&self) -> Option<BiRadialChart> {
        // u(g0⁻¹ ∘ c ∘ h) = inner(c ∘ h)
        self.inner.chart().map(|c| BiRadialChart {
            center: group_mul(&group_inv(&self.by), &c.center),
            scale: c.scale,
        })
    }
}

/// `p ↦ λ⁴ u(λ q, λ² ω)`.
pub struct Dilated {
    pub inner: Field,
    pub lambda: f64,
}

impl ScalarField for Dilated {
    fn tag(&self) -> String {
        format!("δ[{}]({})", self.lambda, self.inner.tag())
    }
    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        let l = self.lambda;
        let image = dilation(l, p)?;
        let j = self.inner.jet(&image)?;
        // diagonal Jacobian: λ on q, λ² on ω
        let s: [f64; DIM] = [l, l, l, l, l * l, l * l, l * l];
        let amp = l.powi(4);
        let mut out = Jet2::constant(amp * j.value);
        for i in 0..DIM {
            out.grad[i] = amp * s[i] * j.grad[i];
            for k in i..DIM {
                out.hess[crate::jet::hidx(i, k)] = amp * s[i] * s[k] * j.h(i, k);
            }
        }
        Ok(out)
    }
    fn value(&self, p: &GroupPoint) -> Result<f64> {
        Ok(self.lambda.powi(4) * self.inner.value(&dilation(self.lambda, p)?)?)
    }
    fn chart(&self) -> Option<BiRadialChart> {
        let l = self.lambda;
        self.inner.chart().map(|c| BiRadialChart {
            center: dilation(1.0 / l, &c.center).expect("positive factor"),
            scale: c.scale * l,
        })
    }
}

/// `p ↦ a · u(p)`.
pub struct Scaled {
    pub inner: Field,
    pub factor: f64,
}

impl ScalarField for Scaled {
    fn tag(&self) -> String {
        format!("{}·({})", self.factor, self.inner.tag())
    }
    fn jet(&self, p: &GroupPoint) -> Result<Jet2> {
        Ok(self.inner.jet(p)?.scale(self.factor))
    }
    fn value(&self, p: &GroupPoint) -> Result<f64> {
        Ok(self.factor * self.inner.value(p)?)
    }
    fn chart(&self) -> Option<BiRadialChart> {
        self.inner.chart()
    }
}

/// Largest absolute discrepancy between the jet of `f` at `p` and central
/// finite differences of its values with the given step.
pub fn finite_diff_audit(f: &dyn ScalarField, p: &GroupPoint, step: f64) -> Result<f64> {
    if !(step > 0.0) {
        return Err(QcError::Domain(format!("finite-difference step must be positive, got {step}")));
    }
    let jet = f.jet(p)?;
    let base = p.coords();
    let at = |d: &[(usize, f64)]| -> Result<f64> {
        let mut c = base;
        for &(k, s) in d {
            c[k] += s;
        }
        f.value(&GroupPoint::from_coords(c))
    };
    let h = step;
    let f0 = f.value(p)?;
    let mut worst: f64 = 0.0;
    for i in 0..DIM {
        let fp = at(&[(i, h)])?;
        let fm = at(&[(i, -h)])?;
        worst = worst.max(((fp - fm) / (2.0 * h) - jet.grad[i]).abs());
        worst = worst.max(((fp - 2.0 * f0 + fm) / (h * h) - jet.h(i, i)).abs());
        for k in i + 1..DIM {
            let fpp = at(&[(i, h), (k, h)])?;
            let fpm = at(&[(i, h), (k, -h)])?;
            let fmp = at(&[(i, -h), (k, h)])?;
            let fmm = at(&[(i, -h), (k, -h)])?;
            let fd = (fpp - fpm - fmp + fmm) / (4.0 * h * h);
            worst = worst.max((fd - jet.h(i, k)).abs());
        }
    }
    Ok(worst)
}
