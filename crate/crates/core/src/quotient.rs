//! The Folland–Stein quotient `∫|∇u|² dH / (∫|u|^{5/2} dH)^{4/5}` and its
//! minimisation over translates and dilates of the extremal.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QcError, Result};
use crate::exec::{map_indexed, pairwise_sum, Exec};
use crate::extremal::{dilate_field, translate_field, ubar_field};
use crate::field::{BiRadialChart, Field, ScalarField};
use crate::frame::FrameJet;
use crate::optimize::{nelder_mead, NelderMeadConfig};
use crate::quadrature::{
    integrate_biradial_fixed, integrate_biradial_with, BiRadialIntegrand, ConvergenceRow, QuadConfig, QuadEstimate,
};
use crate::quat::{GroupPoint, ImQuaternion, Quaternion};

/// Relative agreement required between a field at the representative point
/// `(r, 0, 0, 0; ρ, 0, 0)` of a chart and at rotated points with the same radii.
pub const BIRADIAL_TOLERANCE: f64 = 1e-9;

/// How the two reduced integrals are computed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum QuotientRule {
    Adaptive(QuadConfig),
    /// Tensor Gauss–Legendre with `n²` nodes; no error estimate.
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuotientConfig {
    pub rule: QuotientRule,
    /// Decay exponents `(r, ρ)` of `|∇u|²`.
    pub gradient_decay: (f64, f64),
    /// Decay exponents `(r, ρ)` of `|u|^{5/2}`.
    pub power_decay: (f64, f64),
    /// Probe radii pairs used to confirm bi-radiality.
    pub probes: usize,
}

impl Default for QuotientConfig {
    fn default() -> Self {
        Self {
            rule: QuotientRule::Adaptive(QuadConfig::default()),
            // for u ~ [(1+r²)²+ρ²]⁻²
            gradient_decay: (18.0, 10.0),
            power_decay: (20.0, 10.0),
            probes: 6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    /// `∫|∇u|² dH`.
    pub numerator: f64,
    pub numerator_error: f64,
    /// `∫|u|^{5/2} dH`.
    pub power_integral: f64,
    pub power_error: f64,
    /// `(∫|u|^{5/2} dH)^{4/5}`.
    pub denominator: f64,
    pub quotient: f64,
    /// Propagated absolute error of the quotient.
    pub error: f64,
    /// Refinement history of `∫|u|^{5/2}` (empty for fixed rules).
    pub power_history: Vec<ConvergenceRow>,
}

fn representative(chart: &BiRadialChart, r: f64, rho: f64) -> GroupPoint {
    chart.point(&GroupPoint::new(
        Quaternion::new(r, 0.0, 0.0, 0.0),
        ImQuaternion::new(rho, 0.0, 0.0),
    ))
}

fn unit<const N: usize>(rng: &mut ChaCha8Rng) -> [f64; N] {
    loop {
        let v: [f64; N] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return v.map(|x| x / n);
        }
    }
}

/// Checks that `u` and `|∇u|²` at rotated points match the representative point.
pub fn check_biradial(u: &dyn ScalarField, chart: &BiRadialChart, probes: usize) -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for k in 0..probes {
        let r = (0.25 + 0.5 * k as f64) / chart.scale;
        let rho = (0.3 + 0.7 * k as f64) / (chart.scale * chart.scale);
        let a = FrameJet::eval(u, &representative(chart, r, rho))?;
        let dq = unit::<4>(&mut rng);
        let dw = unit::<3>(&mut rng);
        let h = GroupPoint::new(
            Quaternion::new(r * dq[0], r * dq[1], r * dq[2], r * dq[3]),
            ImQuaternion::new(rho * dw[0], rho * dw[1], rho * dw[2]),
        );
        let b = FrameJet::eval(u, &chart.point(&h))?;
        let close = |x: f64, y: f64| (x - y).abs() <= BIRADIAL_TOLERANCE * x.abs().max(y.abs()).max(1e-300);
        if !close(a.value, b.value) || !close(a.grad_norm_sqr(), b.grad_norm_sqr()) {
            return Err(QcError::NotBiRadial(format!(
                "{} differs between directions at r={r}, ρ={rho}: {} vs {}",
                u.tag(),
                a.value,
                b.value
            )));
        }
    }
    Ok(())
}

/// The Folland–Stein quotient of a bi-radial field, integrated in its chart.
pub fn fs_quotient(u: &Field) -> Result<QuotientReport> {
    fs_quotient_with(u, &QuotientConfig::default())
}

pub fn fs_quotient_with(u: &Field, cfg: &QuotientConfig) -> Result<QuotientReport> {
    let chart = u.chart().ok_or_else(|| {
        QcError::NotBiRadial(format!("{} declares no bi-radial chart", u.tag()))
    })?;
    check_biradial(u.as_ref(), &chart, cfg.probes)?;
    let ug = u.clone();
    let grad = BiRadialIntegrand::new(cfg.gradient_decay.0, cfg.gradient_decay.1, move |r, rho| {
        FrameJet::eval(ug.as_ref(), &representative(&chart, r, rho))
            .map(|j| j.grad_norm_sqr())
            .unwrap_or(f64::NAN)
    })
    .with_scale(chart.scale);
    let up = u.clone();
    let power = BiRadialIntegrand::new(cfg.power_decay.0, cfg.power_decay.1, move |r, rho| {
        up.value(&representative(&chart, r, rho))
            .map(|v| v.abs().powf(2.5))
            .unwrap_or(f64::NAN)
    })
    .with_scale(chart.scale);
    let (num, pow) = match cfg.rule {
        QuotientRule::Adaptive(q) => (integrate_biradial_with(&grad, &q)?, integrate_biradial_with(&power, &q)?),
        QuotientRule::Fixed(n) => {
            let est = |v: f64| QuadEstimate {
                value: v,
                error: 0.0,
                cells: 1,
                history: Vec::new(),
            };
            (est(integrate_biradial_fixed(&grad, n)?), est(integrate_biradial_fixed(&power, n)?))
        }
    };
    if !(num.value.is_finite() && pow.value.is_finite()) {
        return Err(QcError::NotIntegrable(format!("quotient integrals of {} are not finite", u.tag())));
    }
    if pow.value <= 0.0 {
        return Err(QcError::Domain(format!("{} vanishes identically", u.tag())));
    }
    let denominator = pow.value.powf(0.8);
    let quotient = num.value / denominator;
    let error = quotient * (num.relative_error() + 0.8 * pow.relative_error());
    Ok(QuotientReport {
        numerator: num.value,
        numerator_error: num.error,
        power_integral: pow.value,
        power_error: pow.error,
        denominator,
        quotient,
        error,
        power_history: pow.history,
    })
}

/// A point of the search space: `translate(dilate(ū, ν^{1/2}), center)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchPoint {
    pub log_nu: f64,
    pub center: GroupPoint,
}

impl SearchPoint {
    pub const TRUTH: SearchPoint = SearchPoint {
        log_nu: 0.0,
        center: GroupPoint::IDENTITY,
    };

    pub const LOG_NU_BOUND: f64 = 4.0;
    pub const CENTER_BOUND: f64 = 5.0;

    fn to_vec(self) -> Vec<f64> {
        let mut v = vec![self.log_nu];
        v.extend(self.center.coords());
        v
    }

    fn from_slice(x: &[f64]) -> Self {
        let c: [f64; 7] = std::array::from_fn(|i| x[i + 1]);
        Self {
            log_nu: x[0],
            center: GroupPoint::from_coords(c),
        }
    }

    pub fn in_bounds(&self) -> bool {
        self.log_nu.abs() <= Self::LOG_NU_BOUND && self.center.coords().iter().all(|c| c.abs() <= Self::CENTER_BOUND)
    }

    /// The candidate field.
    pub fn field(&self) -> Field {
        let lambda = (0.5 * self.log_nu).exp();
        let d = dilate_field(ubar_field(), lambda).expect("exp is positive");
        translate_field(d, self.center)
    }
}

#[derive(Clone, Debug)]
pub struct MinimizeConfig {
    /// When set, candidates are also scored against this field (see [`minimize_quotient`]).
    pub target: Option<Field>,
    /// Number of jittered restarts after the first run.
    pub restarts: usize,
    pub max_evals: usize,
    pub ftol: f64,
    pub initial_step: f64,
    pub seed: u64,
    /// Gauss–Legendre order for the quotient inside the search loop.
    pub loop_nodes: usize,
    /// Sample count of the overlap functional.
    pub overlap_samples: usize,
    pub exec: Exec,
    /// Accuracy for the reported quotient at the optimum.
    pub final_rule: QuotientRule,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        Self {
            target: None,
            restarts: 3,
            max_evals: 6000,
            ftol: 1e-13,
            initial_step: 0.25,
            seed: 0,
            loop_nodes: 16,
            overlap_samples: 2048,
            exec: Exec::Auto,
            final_rule: QuotientRule::Adaptive(QuadConfig::default()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimizeOutcome {
    pub params: SearchPoint,
    /// Accurate quotient of the optimal candidate.
    pub value: f64,
    pub value_error: f64,
    /// Objective value at the optimum.
    pub objective: f64,
    /// Hölder overlap with the target (1 without a target).
    pub overlap: f64,
    pub evaluations: usize,
    /// False when the evaluation budget ran out; the other fields then hold the best point seen.
    pub converged: bool,
}

/// Fixed importance samples for the overlap functional
/// `H(u) = ∫ u w^{3/2} / (‖u‖_{5/2} ‖w‖_{5/2}^{3/2})`, which is at most 1 and
/// equals 1 exactly when `u` is a multiple of `w` on the samples.
struct Overlap {
    points: Vec<GroupPoint>,
    /// `w^{3/2} / π` at each sample.
    w32: Vec<f64>,
    inv_density: Vec<f64>,
    w_norm: f64,
    exec: Exec,
}

impl Overlap {
    fn new(target: &Field, samples: usize, seed: u64, exec: Exec) -> Result<Self> {
        let chart = target.chart().unwrap_or(BiRadialChart::STANDARD);
        let dof = 3.0;
        let sq = 1.0 / chart.scale;
        let sw = sq * sq;
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(0x9e37_79b9));
        let normal = rand_distr::StandardNormal;
        let chi = rand_distr::ChiSquared::new(dof).map_err(|e| QcError::Domain(e.to_string()))?;
        use rand_distr::Distribution;
        let mut points = Vec::with_capacity(samples);
        let mut inv_density = Vec::with_capacity(samples);
        // unnormalised densities suffice: the overlap is invariant under a common factor
        for _ in 0..samples {
            let z: [f64; 7] = std::array::from_fn(|_| normal.sample(&mut rng));
            let (wq, ww): (f64, f64) = (chi.sample(&mut rng), chi.sample(&mut rng));
            let (kq, kw) = (sq / (wq / dof).sqrt(), sw / (ww / dof).sqrt());
            let h = GroupPoint::from_coords([
                kq * z[0],
                kq * z[1],
                kq * z[2],
                kq * z[3],
                kw * z[4],
                kw * z[5],
                kw * z[6],
            ]);
            let dq = (1.0 + h.q.norm_sqr() / (dof * sq * sq)).powf(-(dof + 4.0) / 2.0);
            let dw = (1.0 + h.omega.norm_sqr() / (dof * sw * sw)).powf(-(dof + 3.0) / 2.0);
            points.push(chart.point(&h));
            inv_density.push(1.0 / (dq * dw));
        }
        let w: Vec<f64> = map_indexed(exec, samples, |i| target.value(&points[i]))
            .into_iter()
            .collect::<Result<_>>()?;
        let w32: Vec<f64> = w.iter().zip(&inv_density).map(|(w, d)| w.abs().powf(1.5) * d).collect();
        let w52: Vec<f64> = w.iter().zip(&inv_density).map(|(w, d)| w.abs().powf(2.5) * d).collect();
        Ok(Self {
            points,
            w32,
            inv_density,
            w_norm: pairwise_sum(&w52).powf(0.6),
            exec,
        })
    }

    fn eval(&self, u: &Field) -> Result<f64> {
        let vals: Vec<(f64, f64)> = map_indexed(self.exec, self.points.len(), |i| {
            u.value(&self.points[i]).map(|v| (v * self.w32[i], v.abs().powf(2.5) * self.inv_density[i]))
        })
        .into_iter()
        .collect::<Result<_>>()?;
        let cross = pairwise_sum(&vals.iter().map(|v| v.0).collect::<Vec<_>>());
        let u52 = pairwise_sum(&vals.iter().map(|v| v.1).collect::<Vec<_>>());
        Ok(cross / (u52.powf(0.4) * self.w_norm))
    }
}

/// Nelder–Mead over `(log ν, centre)` of the quotient of `translate(dilate(ū, ν^{1/2}), centre)`.
///
/// The quotient is invariant along the whole family, so without a target
/// every point is optimal and the search stops on the initial simplex. With a
/// target `w` the objective is `quotient / H²`, where `H ≤ 1` is the sampled
/// Hölder overlap with `w`; its minimum is the quotient of `ū` and is attained
/// exactly at the parameters reproducing `w`.
pub fn minimize_quotient(init: SearchPoint, cfg: &MinimizeConfig) -> Result<MinimizeOutcome> {
    if !init.in_bounds() {
        return Err(QcError::Domain(format!(
            "start point outside |log ν| ≤ {} and |coords| ≤ {}",
            SearchPoint::LOG_NU_BOUND,
            SearchPoint::CENTER_BOUND
        )));
    }
    let overlap = match &cfg.target {
        Some(t) => Some(Overlap::new(t, cfg.overlap_samples, cfg.seed, cfg.exec)?),
        None => None,
    };
    let loop_cfg = QuotientConfig {
        rule: QuotientRule::Fixed(cfg.loop_nodes),
        probes: 0,
        ..QuotientConfig::default()
    };
    let objective = |x: &[f64]| -> f64 {
        let u = SearchPoint::from_slice(x).field();
        let q = match fs_quotient_with(&u, &loop_cfg) {
            Ok(r) => r.quotient,
            Err(_) => return f64::INFINITY,
        };
        match &overlap {
            Some(o) => match o.eval(&u) {
                Ok(h) if h > 0.0 => q / (h * h),
                _ => f64::INFINITY,
            },
            None => q,
        }
    };
    let mut nm = NelderMeadConfig {
        max_evals: cfg.max_evals,
        ftol: cfg.ftol,
        xtol: f64::INFINITY,
        initial_step: vec![cfg.initial_step; 8],
        lower: std::iter::once(-SearchPoint::LOG_NU_BOUND)
            .chain(std::iter::repeat_n(-SearchPoint::CENTER_BOUND, 7))
            .collect(),
        upper: std::iter::once(SearchPoint::LOG_NU_BOUND)
            .chain(std::iter::repeat_n(SearchPoint::CENTER_BOUND, 7))
            .collect(),
    };
    let mut best = nelder_mead(objective, &init.to_vec(), &nm);
    let mut evaluations = best.evals;
    let mut converged = best.converged;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..cfg.restarts {
        nm.initial_step = (0..8)
            .map(|_| {
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                sign * cfg.initial_step * rng.random_range(0.2..1.0)
            })
            .collect();
        let run = nelder_mead(objective, &best.x, &nm);
        evaluations += run.evals;
        converged = run.converged;
        if run.f <= best.f {
            best = run;
        }
    }
    let params = SearchPoint::from_slice(&best.x);
    let u = params.field();
    let report = fs_quotient_with(
        &u,
        &QuotientConfig {
            rule: cfg.final_rule,
            ..QuotientConfig::default()
        },
    )?;
    let overlap_value = match &overlap {
        Some(o) => o.eval(&u)?,
        None => 1.0,
    };
    Ok(MinimizeOutcome {
        params,
        value: report.quotient,
        value_error: report.error,
        objective: best.f,
        overlap: overlap_value,
        evaluations,
        converged,
    })
}
