//! Seeded verification suites producing pass/fail reports.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::best_constant::{best_constant_report, normalised_scalar_curvature, printed_gamma_expression, BestConstantReport};
use crate::cayley::{
    cayley_forward, cayley_forward_sigma, cayley_inverse, cayley_second_sigma, from_sigma, kelvin, sigma, SpherePoint,
};
use crate::conformal::{
    casimir_project, scal_deformed, torsion_t0_deformed, u_deformed, vector_f, CasimirPart, ConformalPoint,
    HorizontalCovector, SymMatrix4,
};
use crate::error::{QcError, Result};
use crate::exec::{map_slice, Exec};
use crate::extremal::{dilate_field, h_family, pde_residual, translate_field, ubar_field, v_field, FamilyParams, FamilyPower};
use crate::field::{autodiff_lift, finite_diff_audit, ConstantField, Field, FnField, Formula, ScalarField};
use crate::frame::{commutator_audit, complex_structures, FrameJet};
use crate::jet::DIM;
use crate::qmatrix::{eigen_residual, expected_spectrum, kernel_dimension, q_spectrum, quadratic_form_audit, BlockVector};
use crate::quadrature::{
    extremal_power_integral_closed_form, integrate_biradial, integrate_mc, BiRadialIntegrand, ConvergenceRow, McConfig,
};
use crate::quat::{GroupPoint, Quaternion};
use crate::quotient::{fs_quotient, minimize_quotient, MinimizeConfig, SearchPoint};
use crate::real::Real;

/// Where the expected value of a check comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// A claim of the source being verified.
    Published,
    /// An independently derived oracle.
    Derived,
    /// Holds by construction.
    Trivial,
}

/// Outcome of one check. `pass` holds exactly when `max_residual ≤ tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub samples: usize,
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub provenance: Provenance,
    pub seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Report {
    /// The report with its timing zeroed, for reproducibility comparisons.
    pub fn untimed(&self) -> Report {
        Report {
            seconds: 0.0,
            ..self.clone()
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteOutput {
    pub suite: String,
    pub seed: u64,
    pub reports: Vec<Report>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reconciliation: Option<BestConstantReport>,
    /// Refinement history of the best-constant integral.
    #[serde(skip)]
    pub convergence: Vec<ConvergenceRow>,
}

impl SuiteOutput {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.pass)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Frames,
    Conformal,
    Extremal,
    Cayley,
    Quadrature,
    Qmatrix,
    Quotient,
    All,
}

impl Suite {
    pub const INDIVIDUAL: [Suite; 7] = [
        Suite::Frames,
        Suite::Conformal,
        Suite::Extremal,
        Suite::Cayley,
        Suite::Quadrature,
        Suite::Qmatrix,
        Suite::Quotient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Frames => "frames",
            Suite::Conformal => "conformal",
            Suite::Extremal => "extremal",
            Suite::Cayley => "cayley",
            Suite::Quadrature => "quadrature",
            Suite::Qmatrix => "qmatrix",
            Suite::Quotient => "quotient",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        Suite::INDIVIDUAL
            .into_iter()
            .chain([Suite::All])
            .find(|k| k.name() == s)
            .ok_or_else(|| QcError::Usage(format!("unknown suite `{s}`")))
    }
}

/// Settings shared by all suites.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Overrides the number of sampled points of every sampled check.
    pub samples: Option<usize>,
    /// Overrides the tolerance of every accuracy check (controls keep theirs).
    pub tol: Option<f64>,
    /// Run the suites of `all` concurrently.
    pub parallel: bool,
    /// Execution mode of the data-parallel kernels.
    pub exec: Exec,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            samples: None,
            tol: None,
            parallel: false,
            exec: Exec::Auto,
        }
    }
}

struct Runner {
    cfg: SuiteConfig,
    suite: &'static str,
    reports: Vec<Report>,
}

enum Tolerance {
    /// May be overridden by `--tol`.
    Accuracy(f64),
    /// Fixed threshold of a control or a count.
    Fixed(f64),
}

impl Runner {
    fn new(suite: Suite, cfg: SuiteConfig) -> Self {
        Self {
            cfg,
            suite: suite.name(),
            reports: Vec::new(),
        }
    }

    fn n(&self, default: usize) -> usize {
        self.cfg.samples.unwrap_or(default).max(1)
    }

    /// A generator private to the named check.
    fn rng(&self, check: &str) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        let stream = format!("{}/{check}", self.suite)
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3));
        rng.set_stream(stream);
        rng
    }

    fn check(
        &mut self,
        name: &str,
        provenance: Provenance,
        samples: usize,
        tolerance: Tolerance,
        f: impl FnOnce(&mut ChaCha8Rng) -> Result<f64>,
    ) {
        let tol = match tolerance {
            Tolerance::Accuracy(t) => self.cfg.tol.unwrap_or(t),
            Tolerance::Fixed(t) => t,
        };
        let mut rng = self.rng(name);
        let start = Instant::now();
        let outcome = f(&mut rng);
        let seconds = start.elapsed().as_secs_f64();
        let (max_residual, error) = match outcome {
            Ok(r) if r.is_nan() => (f64::MAX, Some("residual is NaN".to_string())),
            Ok(r) => (r, None),
            Err(e) => (f64::MAX, Some(e.to_string())),
        };
        self.reports.push(Report {
            check: name.to_string(),
            samples,
            max_residual,
            tolerance: tol,
            pass: error.is_none() && max_residual <= tol,
            provenance,
            seconds,
            error,
        });
    }
}

fn uniform_point(rng: &mut ChaCha8Rng, bound: f64) -> GroupPoint {
    GroupPoint::from_coords(std::array::from_fn(|_| rng.random_range(-bound..bound)))
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut m: f64 = 0.0;
    for v in values {
        let v = v?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        m = m.max(v);
    }
    Ok(m)
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

struct Wavy;
impl Formula for Wavy {
    fn eval<T: Real>(&self, x: &[T; DIM]) -> T {
        x[0].sin() * x[2].cos() + x[1] * x[1] * x[4] * x[4] * 0.3 + 2.0
    }
    fn tag(&self) -> String {
        "2 + sin t1 cos y1 + 0.3 x1² x²".into()
    }
}

struct Exponential;
impl Formula for Exponential {
    fn eval<T: Real>(&self, x: &[T; DIM]) -> T {
        (x[0] * 0.3 - x[3] * 0.2 + x[4] * x[2] * 0.1 + x[6] * 0.25 + x[5] * x[1] * 0.15).exp()
    }
    fn tag(&self) -> String {
        "exp(0.3t1 − 0.2z1 + 0.1x y1 + 0.25z + 0.15y x1)".into()
    }
}

fn quartic_control() -> Field {
    Arc::new(FnField::new("1+|q|⁴", |x| {
        let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
        r2 * r2 + 1.0
    }))
}

/// Fields exercised by the generic identities: positive, with vertical dependence.
fn generic_factors() -> Vec<Field> {
    vec![
        Arc::new(autodiff_lift(Wavy)),
        Arc::new(autodiff_lift(Exponential)),
        quartic_control(),
        h_family(FamilyParams::new(0.7, 2.3, GroupPoint::from_coords([0.3, -0.5, 0.2, 0.9, -0.4, 0.1, 0.6])).expect("valid")),
    ]
}

/// Every field the crate ships, for the frame identities.
fn shipped_fields() -> Vec<Field> {
    let g0 = GroupPoint::from_coords([0.4, -0.3, 0.2, 0.1, 0.5, -0.2, 0.3]);
    let mut v = vec![
        ubar_field(),
        v_field(),
        h_family(FamilyParams::new(1.0, 1.0, GroupPoint::IDENTITY).expect("valid")),
        h_family(FamilyParams::new(2.0, 3.0, g0).expect("valid")),
        translate_field(dilate_field(ubar_field(), 1.7).expect("positive"), g0),
        kelvin(ubar_field()),
        Arc::new(ConstantField(0.5)) as Field,
    ];
    v.extend(generic_factors());
    v
}

fn random_sym(rng: &mut ChaCha8Rng) -> SymMatrix4 {
    let m = Matrix4::from_fn(|_, _| rng.random_range(-1.0..1.0));
    SymMatrix4::symmetrize(&m)
}

fn random_covector(rng: &mut ChaCha8Rng) -> HorizontalCovector {
    HorizontalCovector(Vector4::from_fn(|_, _| rng.random_range(-1.0..1.0)))
}

fn frames(r: &mut Runner) {
    let n = r.n(100);
    r.check("complex_structures_quaternionic", Provenance::Trivial, 1, Tolerance::Accuracy(1e-15), |_| {
        Ok(complex_structures().defect())
    });
    r.check("commutator_audit", Provenance::Derived, n, Tolerance::Accuracy(1e-13), |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..n {
            let p = uniform_point(rng, 3.0);
            for a in 0..4 {
                for b in 0..4 {
                    worst = worst.max(commutator_audit(a, b, &p));
                }
            }
        }
        Ok(worst)
    });
    let fields = shipped_fields();
    r.check(
        "hessian_antisymmetry_identity",
        Provenance::Published,
        n * fields.len(),
        Tolerance::Accuracy(1e-10),
        |rng| {
            let cs = complex_structures();
            let pts: Vec<GroupPoint> = (0..n).map(|_| uniform_point(rng, 2.0)).collect();
            max_of(fields.iter().flat_map(|f| {
                pts.iter().map(move |p| {
                    let j = FrameJet::eval(f.as_ref(), p)?;
                    let mut d = (j.hessian - j.hessian.transpose()) * 0.5;
                    for s in 0..3 {
                        d += cs.omega[s] * j.vertical[s];
                    }
                    Ok(d.amax() / j.hessian.amax().max(1.0))
                })
            }))
        },
    );
    r.check(
        "jet_vs_finite_differences",
        Provenance::Derived,
        n * fields.len(),
        Tolerance::Accuracy(1.0),
        |rng| {
            // discrepancy divided by the bound max(1e-6, 1e-5 |value|)
            let pts: Vec<GroupPoint> = (0..n).map(|_| uniform_point(rng, 1.0)).collect();
            max_of(fields.iter().flat_map(|f| {
                pts.iter().map(move |p| {
                    let d = finite_diff_audit(f.as_ref(), p, 1e-4)?;
                    Ok(d / (1e-5 * f.value(p)?.abs()).max(1e-6))
                })
            }))
        },
    );
    r.check("ubar_hessian_at_origin", Provenance::Derived, 1, Tolerance::Accuracy(0.0), |_| {
        let m = FrameJet::eval(ubar_field().as_ref(), &GroupPoint::IDENTITY)?.hessian;
        Ok((m + Matrix4::identity() * 8192.0).amax())
    });
}

fn conformal(r: &mut Runner) {
    let n = r.n(100);
    r.check("casimir_three_part_is_trace", Provenance::Published, n, Tolerance::Accuracy(1e-13), |rng| {
        max_of((0..n).map(|_| {
            let m = random_sym(rng);
            let p3 = casimir_project(&m, CasimirPart::Three);
            Ok(p3.max_abs_diff(&SymMatrix4::identity().scale(m.trace() / 4.0)))
        }))
    });
    r.check("casimir_projections_complementary", Provenance::Trivial, n, Tolerance::Accuracy(1e-13), |rng| {
        max_of((0..n).map(|_| {
            let m = random_sym(rng);
            let p3 = casimir_project(&m, CasimirPart::Three);
            let pm = casimir_project(&m, CasimirPart::MinusOne);
            let sum = SymMatrix4::symmetrize(&(p3.matrix() + pm.matrix()));
            let idem3 = casimir_project(&p3, CasimirPart::Three).max_abs_diff(&p3);
            let idemm = casimir_project(&pm, CasimirPart::MinusOne).max_abs_diff(&pm);
            Ok(sum.max_abs_diff(&m).max(idem3).max(idemm).max(pm.trace().abs()))
        }))
    });
    r.check("minus_one_part_characterisation", Provenance::Published, n, Tolerance::Accuracy(1e-12), |rng| {
        let cs = complex_structures();
        max_of((0..n).map(|_| {
            let pm = *casimir_project(&random_sym(rng), CasimirPart::MinusOne).matrix();
            let mut acc = pm;
            for i in &cs.i {
                acc += i.transpose() * pm * i;
            }
            Ok(acc.amax())
        }))
    });
    let factors = generic_factors();
    let np = r.n(50);
    r.check("u_tensor_vanishes", Provenance::Published, np * (factors.len() + 1), Tolerance::Accuracy(1e-12), |rng| {
        let mut fields = factors.clone();
        fields.push(Arc::new(crate::field::Scaled {
            inner: ubar_field(),
            factor: 1.0 / 1024.0,
        }));
        let pts: Vec<GroupPoint> = (0..np).map(|_| uniform_point(rng, 2.0)).collect();
        max_of(fields.iter().flat_map(|f| pts.iter().map(move |p| Ok(u_deformed(f.as_ref(), p)?.frobenius()))))
    });
    let (nfam, nper) = (20, r.n(20));
    r.check("family_is_qc_einstein", Provenance::Published, nfam * nper, Tolerance::Accuracy(1e-8), |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..nfam {
            let c = rng.random_range(0.1..10.0);
            let nu = rng.random_range(0.1..10.0);
            let center = uniform_point(rng, 2.0);
            let h = h_family(FamilyParams::new(c, nu, center)?);
            for _ in 0..nper {
                let p = uniform_point(rng, 2.0);
                worst = worst.max(torsion_t0_deformed(h.as_ref(), &p)?.frobenius());
            }
        }
        Ok(worst)
    });
    r.check("torsion_negative_control", Provenance::Derived, 1, Tolerance::Fixed(0.0), |_| {
        // shortfall below the required minimum norm 1e-3
        let p = GroupPoint::from_coords([1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let norm = torsion_t0_deformed(quartic_control().as_ref(), &p)?.frobenius();
        Ok((1e-3 - norm).max(0.0))
    });
    let ns = r.n(50);
    r.check("deformed_scalar_curvature_is_six", Provenance::Derived, ns, Tolerance::Accuracy(1e-8), |rng| {
        let h = FamilyPower {
            c: 2f64.powi(-6),
            nu: 1.0,
            amplitude: 1.0,
            exponent: 1,
        };
        let target = normalised_scalar_curvature();
        max_of((0..ns).map(|_| Ok(rel(scal_deformed(&h, &uniform_point(rng, 2.0), 0.0)?, target))))
    });
    r.check("family_scalar_curvature_constant", Provenance::Derived, 10 * ns, Tolerance::Accuracy(1e-8), |rng| {
        let mut worst: f64 = 0.0;
        for _ in 0..10 {
            let (c, nu) = (rng.random_range(0.1..10.0), rng.random_range(0.1..10.0));
            let h = h_family(FamilyParams::new(c, nu, uniform_point(rng, 2.0))?);
            for _ in 0..ns {
                let s = scal_deformed(h.as_ref(), &uniform_point(rng, 2.0), 0.0)?;
                worst = worst.max(rel(s, 384.0 * c * nu));
            }
        }
        Ok(worst)
    });
    r.check("scalar_curvature_normalisation", Provenance::Trivial, 1, Tolerance::Accuracy(1e-15), |_| {
        Ok((normalised_scalar_curvature() - 6.0).abs())
    });
    r.check("extremal_matches_conformal_factor", Provenance::Derived, ns, Tolerance::Accuracy(1e-10), |rng| {
        let h = FamilyPower {
            c: 2f64.powi(-6),
            nu: 1.0,
            amplitude: 1.0,
            exponent: 1,
        };
        let u = ubar_field();
        max_of((0..ns).map(|_| {
            let p = uniform_point(rng, 2.0);
            Ok(rel((2.0 * h.value(&p)?).powi(-2), u.value(&p)?))
        }))
    });
    r.check("identity_e1_casimir_route", Provenance::Derived, np * factors.len(), Tolerance::Accuracy(1e-10), |rng| {
        let pts: Vec<GroupPoint> = (0..np).map(|_| uniform_point(rng, 1.5)).collect();
        max_of(factors.iter().flat_map(|f| {
            pts.iter().map(move |p| {
                let c = ConformalPoint::eval(f.as_ref(), p)?;
                let p3 = casimir_project(&c.sym_part()?, CasimirPart::Three);
                let g = c.grad();
                let other = HorizontalCovector(p3.matrix() * g * 4.0) - c.yamabe_rhs() * c.dh();
                let e1 = c.identity_e1();
                let scale = c.hess_grad().0.amax().max(g.amax()).max(1.0);
                Ok(e1.max_abs_diff(&other) / scale)
            })
        }))
    });
    r.check("d_vector_routes", Provenance::Derived, np * factors.len(), Tolerance::Accuracy(1e-10), |rng| {
        let pts: Vec<GroupPoint> = (0..np).map(|_| uniform_point(rng, 1.5)).collect();
        max_of(factors.iter().flat_map(|f| {
            pts.iter().map(move |p| {
                let c = ConformalPoint::eval(f.as_ref(), p)?;
                let e1 = c.identity_e1();
                let h2 = c.h().powi(-2);
                let sub = c.vector_d_parts();
                let unsub = c.vector_d_parts_unsubstituted();
                let sum = sub[0] + sub[1] + sub[2];
                let closed = c.vector_d_closed_form();
                let scale = closed.0.amax().max(sum.0.amax()).max(h2 * e1.0.amax()).max(1.0);
                let mut worst = closed.max_abs_diff(&(sum + (0.75 * h2) * e1));
                worst = worst.max(closed.max_abs_diff(&(unsub[0] + unsub[1] + unsub[2])));
                for i in 0..3 {
                    worst = worst.max(unsub[i].max_abs_diff(&(sub[i] + (0.25 * h2) * e1)));
                }
                Ok(worst / scale)
            })
        }))
    });
    r.check("f_vectors_from_d", Provenance::Published, n, Tolerance::Accuracy(1e-14), |rng| {
        let cs = complex_structures();
        max_of((0..n).map(|_| {
            let d = [random_covector(rng), random_covector(rng), random_covector(rng)];
            let f = vector_f(&d);
            let mut worst: f64 = 0.0;
            let signs = [[-1.0, 1.0, 1.0], [1.0, -1.0, 1.0], [1.0, 1.0, -1.0]];
            for s in 0..3 {
                for a in 0..4 {
                    let x = Vector4::from_fn(|i, _| if i == a { 1.0 } else { 0.0 });
                    let ix = cs.i[s] * x;
                    let want: f64 = (0..3).map(|k| signs[s][k] * d[k].eval(&ix)).sum();
                    worst = worst.max((f[s].eval(&x) - want).abs());
                }
            }
            Ok(worst)
        }))
    });
    r.check("a_vector_aggregate", Provenance::Published, np * factors.len(), Tolerance::Accuracy(1e-12), |rng| {
        let pts: Vec<GroupPoint> = (0..np).map(|_| uniform_point(rng, 1.5)).collect();
        max_of(factors.iter().flat_map(|f| {
            pts.iter().map(move |p| {
                let c = ConformalPoint::eval(f.as_ref(), p)?;
                let a = c.a_vector_parts();
                let agg = c.a_vector_aggregate();
                Ok(agg.max_abs_diff(&(a[0] + a[1] + a[2])) / agg.0.amax().max(1.0))
            })
        }))
    });
}

fn extremal(r: &mut Runner) {
    let n = r.n(1000);
    let u = ubar_field();
    r.check("ubar_pde_residual", Provenance::Published, n, Tolerance::Accuracy(1e-9), |rng| {
        max_of((0..n).map(|_| {
            let p = uniform_point(rng, 3.0);
            Ok(pde_residual(u.as_ref(), &p)?.abs() / u.value(&p)?.powf(1.5))
        }))
    });
    r.check("transformed_ubar_pde_residual", Provenance::Published, n, Tolerance::Accuracy(1e-9), |rng| {
        max_of((0..n).map(|_| {
            let g0 = uniform_point(rng, 3.0);
            let lambda = rng.random_range(0.3..3.0);
            let w = translate_field(dilate_field(u.clone(), lambda)?, g0);
            let p = uniform_point(rng, 3.0);
            Ok(pde_residual(w.as_ref(), &p)?.abs() / w.value(&p)?.powf(1.5))
        }))
    });
    r.check("v_pde_scaling", Provenance::Derived, n, Tolerance::Accuracy(1e-9), |rng| {
        // v = a ū solves △v = −a^{-1/2} v^{3/2}
        let v = v_field();
        let a = crate::extremal::v_amplitude() / crate::extremal::UBAR_AMPLITUDE;
        max_of((0..n).map(|_| {
            let p = uniform_point(rng, 3.0);
            let j = FrameJet::eval(v.as_ref(), &p)?;
            Ok((j.sub_laplacian() + j.value.powf(1.5) / a.sqrt()).abs() / (j.value.powf(1.5) / a.sqrt()))
        }))
    });
    r.check("family_jets_match_autodiff", Provenance::Derived, r.n(100), Tolerance::Accuracy(1e-12), |rng| {
        let auto = FnField::new("(1+|q|²)²+|ω|²", |x| {
            let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
            (r2 + 1.0) * (r2 + 1.0) + x[4] * x[4] + x[5] * x[5] + x[6] * x[6]
        });
        let closed = h_family(FamilyParams::new(1.0, 1.0, GroupPoint::IDENTITY)?);
        max_of((0..r_n(n, 100)).map(|_| {
            let p = uniform_point(rng, 3.0);
            let (a, b) = (auto.jet(&p)?, closed.jet(&p)?);
            let scale = a.value.abs().max(1.0);
            let mut worst = (a.value - b.value).abs();
            for k in 0..DIM {
                worst = worst.max((a.grad[k] - b.grad[k]).abs());
            }
            for k in 0..a.hess.len() {
                worst = worst.max((a.hess[k] - b.hess[k]).abs());
            }
            Ok(worst / scale)
        }))
    });
    r.check("family_translation_oracle", Provenance::Derived, r.n(100), Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..r_n(n, 100)).map(|_| {
            let g0 = uniform_point(rng, 2.0);
            let params = FamilyParams::new(rng.random_range(0.1..10.0), rng.random_range(0.1..10.0), g0)?;
            let centred = h_family(params);
            let plain = h_family(FamilyParams { center: GroupPoint::IDENTITY, ..params });
            let p = uniform_point(rng, 2.0);
            let want = plain.value(&g0.mul(&p))?;
            Ok(rel(centred.value(&p)?, want))
        }))
    });
}

fn r_n(n: usize, default: usize) -> usize {
    n.min(default).max(1)
}

fn cayley(r: &mut Runner) {
    let n = r.n(1000);
    r.check("cayley_roundtrip", Provenance::Trivial, n, Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..n).map(|_| {
            let s = SpherePoint::new(
                Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Quaternion::new(rng.random_range(-0.5..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )?;
            let back = cayley_inverse(&cayley_forward(&s)?)?;
            Ok(back.max_abs_diff(&s))
        }))
    });
    r.check("cayley_image_on_paraboloid", Provenance::Published, n, Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..n).map(|_| {
            let s = SpherePoint::new(
                Quaternion::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                Quaternion::new(rng.random_range(-0.5..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            )?;
            let (q1, p1) = cayley_forward_sigma(&s)?;
            Ok((p1.w - q1.norm_sqr()).abs() / q1.norm_sqr().max(1.0))
        }))
    });
    r.check("group_roundtrip_through_sphere", Provenance::Trivial, n, Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..n).map(|_| {
            let g = uniform_point(rng, 3.0);
            let back = cayley_forward(&cayley_inverse(&g)?)?;
            Ok(back.max_abs_diff(&g) / g.coords().iter().fold(1.0f64, |m, c| m.max(c.abs())))
        }))
    });
    r.check("sigma_involution", Provenance::Published, n, Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..n).map(|_| {
            let g = away_from_origin(rng);
            let back = sigma(&sigma(&g)?)?;
            Ok(back.max_abs_diff(&g) / g.coords().iter().fold(1.0f64, |m, c| m.max(c.abs())))
        }))
    });
    r.check("sigma_is_second_cayley_of_inverse", Provenance::Derived, n, Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..n).map(|_| {
            let g = away_from_origin(rng);
            let (q2, p2) = cayley_second_sigma(&cayley_inverse(&g)?)?;
            let s = sigma(&g)?;
            Ok(from_sigma(q2, p2).max_abs_diff(&s) / s.coords().iter().fold(1.0f64, |m, c| m.max(c.abs())))
        }))
    });
    let k = kelvin(ubar_field());
    r.check("kelvin_pde_residual", Provenance::Published, n, Tolerance::Accuracy(1e-8), |rng| {
        max_of((0..n).map(|_| {
            let p = away_from_origin(rng);
            Ok(pde_residual(k.as_ref(), &p)?.abs() / k.value(&p)?.powf(1.5))
        }))
    });
    r.check("kelvin_twice_is_identity", Provenance::Derived, n, Tolerance::Accuracy(1e-10), |rng| {
        let kk = kelvin(kelvin(ubar_field()));
        let u = ubar_field();
        max_of((0..n).map(|_| {
            let p = away_from_origin(rng);
            Ok(rel(kk.value(&p)?, u.value(&p)?))
        }))
    });
}

/// Uniform in the box `|coords| ≤ 3` with `|q|⁴ + |ω|² ≥ 0.01`.
fn away_from_origin(rng: &mut ChaCha8Rng) -> GroupPoint {
    loop {
        let g = uniform_point(rng, 3.0);
        if g.q.norm_sqr().powi(2) + g.omega.norm_sqr() >= 0.01 {
            return g;
        }
    }
}

fn quadrature(r: &mut Runner, out: &mut Vec<ConvergenceRow>) {
    let base = BiRadialIntegrand::new(20.0, 10.0, |r, rho| ((1.0 + r * r).powi(2) + rho * rho).powi(-5));
    let quad = integrate_biradial(&base, 1e-12);
    if let Ok(q) = &quad {
        out.clone_from(&q.history);
    }
    let quad_value = quad.as_ref().map(|q| q.value).map_err(|e| e.clone());
    r.check("extremal_power_integral", Provenance::Derived, 1, Tolerance::Accuracy(1e-8), |_| {
        Ok(rel(quad_value.clone()?, extremal_power_integral_closed_form()))
    });
    r.check("gaussian_integral", Provenance::Derived, 1, Tolerance::Accuracy(1e-8), |_| {
        let g = BiRadialIntegrand::new(f64::INFINITY, f64::INFINITY, |r, rho| (-r * r - rho * rho).exp());
        Ok(rel(integrate_biradial(&g, 1e-12)?.value, PI.powf(3.5)))
    });
    r.check("gamma_expression_matches_integral", Provenance::Published, 1, Tolerance::Accuracy(1e-8), |_| {
        Ok(rel(2f64.powi(25) * quad_value.clone()?, printed_gamma_expression()))
    });
    let exec = r.cfg.exec;
    let seed = r.cfg.seed;
    r.check("monte_carlo_agreement", Provenance::Derived, 1_000_000, Tolerance::Fixed(3.0), |_| {
        // |MC − cubature| in standard errors
        let mc = integrate_mc(
            |p| Ok(((1.0 + p.q.norm_sqr()).powi(2) + p.omega.norm_sqr()).powi(-5)),
            &McConfig {
                samples: 1_000_000,
                seed,
                exec,
                ..McConfig::default()
            },
        )?;
        Ok((mc.value - quad_value.clone()?).abs() / mc.stderr)
    });
    r.check("monte_carlo_translated_extremal", Provenance::Trivial, 1_000_000, Tolerance::Fixed(3.0), |rng| {
        let g0 = uniform_point(rng, 1.0);
        let u = translate_field(ubar_field(), g0);
        let mc = integrate_mc(
            |p| Ok(u.value(p)?.powf(2.5)),
            &McConfig {
                samples: 1_000_000,
                seed,
                exec,
                center: g0.inverse(),
                ..McConfig::default()
            },
        )?;
        Ok((mc.value - 2f64.powi(25) * quad_value.clone()?).abs() / mc.stderr)
    });
}

fn qmatrix(r: &mut Runner) {
    r.check("q_spectrum", Provenance::Published, 6, Tolerance::Accuracy(1e-12), |_| {
        // covers the eigenpair residual and semi-definiteness as well
        let got = q_spectrum();
        let dim = kernel_dimension(1e-10);
        if dim != 2 {
            return Err(QcError::Consistency(format!("kernel of Q has dimension {dim}, expected 2")));
        }
        let worst = got.iter().zip(expected_spectrum()).map(|(a, b)| (a - b).abs()).fold(eigen_residual(), f64::max);
        Ok(worst.max(-got[0]))
    });
    let n = r.n(100);
    r.check("q_quadratic_form", Provenance::Published, n, Tolerance::Accuracy(1e-12), |rng| {
        max_of((0..n).map(|_| {
            let v: BlockVector = std::array::from_fn(|_| random_covector(rng));
            Ok(quadratic_form_audit(&v))
        }))
    });
}

fn quotient(r: &mut Runner) {
    let u = ubar_field();
    let base = fs_quotient(&u);
    let q0 = base.as_ref().map(|b| b.quotient).map_err(|e| e.clone());
    r.check("quotient_closed_form", Provenance::Derived, 1, Tolerance::Accuracy(1e-8), |_| {
        Ok(rel(q0.clone()?, (2f64.powi(18) * PI.powi(4) / 3.0).powf(0.2)))
    });
    r.check("gradient_power_identity", Provenance::Derived, 1, Tolerance::Accuracy(1e-4), |_| {
        let b = base.as_ref().map_err(|e| e.clone())?;
        Ok(rel(b.numerator, b.power_integral))
    });
    r.check("quotient_amplitude_invariance", Provenance::Trivial, 1, Tolerance::Accuracy(1e-5), |_| {
        let w: Field = Arc::new(crate::field::Scaled {
            inner: u.clone(),
            factor: 7.3,
        });
        Ok(rel(fs_quotient(&w)?.quotient, q0.clone()?))
    });
    r.check("quotient_translation_invariance", Provenance::Trivial, 1, Tolerance::Accuracy(1e-5), |rng| {
        let w = translate_field(u.clone(), uniform_point(rng, 2.0));
        Ok(rel(fs_quotient(&w)?.quotient, q0.clone()?))
    });
    r.check("quotient_dilation_invariance", Provenance::Published, 1, Tolerance::Accuracy(1e-5), |_| {
        let w = dilate_field(u.clone(), 1.7)?;
        Ok(rel(fs_quotient(&w)?.quotient, q0.clone()?))
    });
    let starts = r.n(10);
    let exec = r.cfg.exec;
    let seed = r.cfg.seed;
    let mut rng = r.rng("planted_targets");
    let setups: Vec<(SearchPoint, SearchPoint)> = (0..starts)
        .map(|_| {
            let truth = SearchPoint {
                log_nu: rng.random_range(-0.5..0.5),
                center: uniform_point(&mut rng, 1.0),
            };
            let offset: [f64; 7] = std::array::from_fn(|_| rng.random_range(-0.3..0.3));
            let init = SearchPoint {
                log_nu: truth.log_nu + rng.random_range(-0.5..0.5),
                center: GroupPoint::from_coords(std::array::from_fn(|i| truth.center.coords()[i] + offset[i])),
            };
            (truth, init)
        })
        .collect();
    let mut runs = Vec::new();
    let q = q0.clone();
    r.check("minimized_quotient_value", Provenance::Derived, starts, Tolerance::Accuracy(1e-4), |_| {
        let indexed: Vec<(usize, &(SearchPoint, SearchPoint))> = setups.iter().enumerate().collect();
        runs = map_slice(exec, &indexed, |(k, (truth, init))| {
            let cfg = MinimizeConfig {
                target: Some(truth.field()),
                seed: seed.wrapping_add(*k as u64),
                exec,
                ..MinimizeConfig::default()
            };
            (*truth, minimize_quotient(*init, &cfg))
        });
        let q = q.clone()?;
        max_of(runs.iter().map(|(_, o)| {
            let o = o.as_ref().map_err(|e| e.clone())?;
            if !o.converged {
                return Err(QcError::Accuracy {
                    estimate: o.value,
                    error: o.objective - o.value,
                    cells: o.evaluations,
                });
            }
            Ok(rel(o.value, q))
        }))
    });
    r.check("minimized_quotient_lower_bound", Provenance::Published, starts, Tolerance::Fixed(0.0), |_| {
        let q = q.clone()?;
        max_of(runs.iter().map(|(_, o)| {
            let o = o.as_ref().map_err(|e| e.clone())?;
            Ok((q * (1.0 - 5e-4) - o.value).max(0.0))
        }))
    });
    r.check("planted_center_recovery", Provenance::Derived, starts, Tolerance::Accuracy(1e-3), |_| {
        max_of(runs.iter().map(|(truth, o)| {
            let o = o.as_ref().map_err(|e| e.clone())?;
            Ok(o.params.center.max_abs_diff(&truth.center).max((o.params.log_nu - truth.log_nu).abs()))
        }))
    });
}

/// Runs one suite (or all of them) with the given settings.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutput> {
    if suite == Suite::All {
        let exec = if cfg.parallel { Exec::Auto } else { Exec::Sequential };
        let parts = map_slice(exec, &Suite::INDIVIDUAL, |s| run_suite(*s, cfg));
        let mut reports = Vec::new();
        let mut convergence = Vec::new();
        for part in parts {
            let part = part?;
            reports.extend(part.reports);
            if !part.convergence.is_empty() {
                convergence = part.convergence;
            }
        }
        return Ok(SuiteOutput {
            suite: suite.name().into(),
            seed: cfg.seed,
            reports,
            reconciliation: None,
            convergence,
        });
    }
    let mut r = Runner::new(suite, *cfg);
    let mut convergence = Vec::new();
    let mut reconciliation = None;
    match suite {
        Suite::Frames => frames(&mut r),
        Suite::Conformal => conformal(&mut r),
        Suite::Extremal => extremal(&mut r),
        Suite::Cayley => cayley(&mut r),
        Suite::Quadrature => {
            quadrature(&mut r, &mut convergence);
            reconciliation = Some(best_constant_report(1e-12)?);
        }
        Suite::Qmatrix => qmatrix(&mut r),
        Suite::Quotient => quotient(&mut r),
        Suite::All => unreachable!("handled above"),
    }
    Ok(SuiteOutput {
        suite: suite.name().into(),
        seed: cfg.seed,
        reports: r.reports,
        reconciliation,
        convergence,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
    Text,
}

impl FromStr for Format {
    type Err = QcError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "text" => Ok(Format::Text),
            other => Err(QcError::Usage(format!("unknown format `{other}`"))),
        }
    }
}

/// Renders a suite output.
pub fn emit(out: &SuiteOutput, format: Format) -> Result<String> {
    match format {
        Format::Json => serde_json::to_string_pretty(out).map_err(|e| QcError::Usage(e.to_string())),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| QcError::Usage(e.to_string());
            w.write_record(["suite", "seed", "check", "samples", "max_residual", "tolerance", "pass", "provenance", "seconds"])
                .map_err(err)?;
            for r in &out.reports {
                w.write_record([
                    out.suite.clone(),
                    out.seed.to_string(),
                    r.check.clone(),
                    r.samples.to_string(),
                    format!("{:e}", r.max_residual),
                    format!("{:e}", r.tolerance),
                    r.pass.to_string(),
                    serde_json::to_value(r.provenance)
                        .ok()
                        .and_then(|v| v.as_str().map(String::from))
                        .unwrap_or_default(),
                    format!("{:.6}", r.seconds),
                ])
                .map_err(err)?;
            }
            let bytes = w.into_inner().map_err(|e| QcError::Usage(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| QcError::Usage(e.to_string()))
        }
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "suite {} (seed {})", out.suite, out.seed);
            for r in &out.reports {
                let _ = writeln!(
                    s,
                    "{:4} {:<40} residual {:>11.3e}  tol {:>9.1e}  n={:<8} {:>8.3}s{}",
                    if r.pass { "PASS" } else { "FAIL" },
                    r.check,
                    r.max_residual,
                    r.tolerance,
                    r.samples,
                    r.seconds,
                    r.error.as_deref().map(|e| format!("  ({e})")).unwrap_or_default()
                );
            }
            if let Some(rec) = &out.reconciliation {
                let _ = writeln!(s, "\nbest-constant reconciliation");
                for e in &rec.entries {
                    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.10e}")).unwrap_or_else(|| "-".into());
                    let _ = writeln!(
                        s,
                        "{} {:<58} computed {:>18} printed {:>18} ratio {:>18}",
                        if e.flagged { "!" } else { " " },
                        e.name,
                        fmt(e.computed),
                        fmt(e.printed),
                        fmt(e.ratio)
                    );
                }
            }
            let failed = out.reports.iter().filter(|r| !r.pass).count();
            let _ = writeln!(s, "{} checks, {} failed", out.reports.len(), failed);
            Ok(s)
        }
    }
}
