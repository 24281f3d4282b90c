//! Integration over `G(H)` with respect to the Haar (= Lebesgue) measure `dH`.
//!
//! Bi-radial integrands `f(|q|, |ω|)` reduce to two dimensions through
//! `dH = (2π² r³ dr)(4π ρ² dρ)`. The reduced integral is computed by adaptive
//! tensor Gauss–Kronrod (7/15) cubature after compactifying both half-lines,
//! `r = t / (a(1−t))`, `ρ = s / (a²(1−s))`. General integrands are handled by
//! importance-sampled Monte Carlo with Student-t proposals.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{QcError, Result};
use crate::exec::{map_indexed, map_slice, pairwise_sum, Exec};
use crate::quat::{group_mul, GroupPoint, ImQuaternion, Quaternion};

/// Kronrod abscissae on [-1, 1] (non-negative half, descending).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
/// Gauss weights for the abscissae `XGK[1], XGK[3], XGK[5], XGK[7]`.
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// The 15 Kronrod nodes on [-1, 1] in ascending order with their Kronrod and Gauss weights.
fn kronrod_rule() -> [(f64, f64, f64); 15] {
    std::array::from_fn(|n| {
        // n = 0..7 negative side, 7 centre, 8..15 positive side
        let (k, sign) = if n < 7 { (n, -1.0) } else { (14 - n, 1.0) };
        let wg = if k % 2 == 1 { WG[k / 2] } else { 0.0 };
        (sign * XGK[k], WGK[k], wg)
    })
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "need at least one node");
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

type RadialFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// A function of `(r, ρ) = (|q|, |ω|)` with declared power decay at infinity.
#[derive(Clone)]
pub struct BiRadialIntegrand {
    f: Arc<RadialFn>,
    /// `f = O(r^{-decay_r})` as `r → ∞`, uniformly in `ρ`.
    pub decay_r: f64,
    /// `f = O(ρ^{-decay_rho})` as `ρ → ∞`, uniformly in `r`.
    pub decay_rho: f64,
    /// Mass concentrates near `r ~ 1/scale`, `ρ ~ 1/scale²`.
    pub scale: f64,
}

impl BiRadialIntegrand {
    pub fn new(decay_r: f64, decay_rho: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            f: Arc::new(f),
            decay_r,
            decay_rho,
            scale: 1.0,
        }
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn eval(&self, r: f64, rho: f64) -> f64 {
        (self.f)(r, rho)
    }

    fn check(&self) -> Result<()> {
        // integrability of f r³ dr and f ρ² dρ at infinity
        if !(self.decay_r > 4.0) || !(self.decay_rho > 3.0) {
            return Err(QcError::NotIntegrable(format!(
                "decay exponents (r: {}, ρ: {}) need r > 4 and ρ > 3",
                self.decay_r, self.decay_rho
            )));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(QcError::Domain(format!("chart scale must be positive, got {}", self.scale)));
        }
        Ok(())
    }

    /// Reduced integrand on the unit square, including measure and Jacobians.
    fn compact(&self, t: f64, s: f64) -> f64 {
        let a = self.scale;
        let b = a * a;
        let (ut, us) = (1.0 - t, 1.0 - s);
        let r = t / (a * ut);
        let rho = s / (b * us);
        let jac = 1.0 / (a * ut * ut) / (b * us * us);
        let v = self.eval(r, rho);
        if v == 0.0 {
            return 0.0;
        }
        8.0 * PI * PI * PI * r * r * r * rho * rho * jac * v
    }
}

/// One row of the refinement history.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub level: usize,
    pub estimate: f64,
    pub error: f64,
    pub cells: usize,
}

/// Result of an adaptive cubature.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadEstimate {
    pub value: f64,
    pub error: f64,
    pub cells: usize,
    pub history: Vec<ConvergenceRow>,
}

impl QuadEstimate {
    pub fn relative_error(&self) -> f64 {
        if self.value == 0.0 {
            self.error
        } else {
            self.error / self.value.abs()
        }
    }
}

/// Limits for [`integrate_biradial_with`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig {
    /// Relative tolerance on the total error estimate.
    pub tol: f64,
    /// Absolute floor below which the error is accepted regardless of `tol`.
    pub abs_tol: f64,
    pub max_cells: usize,
    pub max_levels: usize,
    pub exec: Exec,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            abs_tol: 1e-300,
            max_cells: 200_000,
            max_levels: 60,
            exec: Exec::Auto,
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    t0: f64,
    t1: f64,
    s0: f64,
    s1: f64,
    estimate: f64,
    error: f64,
}

impl Cell {
    fn new(t0: f64, t1: f64, s0: f64, s1: f64) -> Self {
        Self {
            t0,
            t1,
            s0,
            s1,
            estimate: 0.0,
            error: 0.0,
        }
    }

    fn evaluate(mut self, f: &BiRadialIntegrand, rule: &[(f64, f64, f64); 15]) -> Self {
        let (ht, hs) = (0.5 * (self.t1 - self.t0), 0.5 * (self.s1 - self.s0));
        let (ct, cs) = (0.5 * (self.t1 + self.t0), 0.5 * (self.s1 + self.s0));
        let (mut k, mut g) = (0.0, 0.0);
        for &(xs, wks, wgs) in rule {
            let s = cs + hs * xs;
            let (mut krow, mut grow) = (0.0, 0.0);
            for &(xt, wkt, wgt) in rule {
                let v = f.compact(ct + ht * xt, s);
                krow += wkt * v;
                grow += wgt * v;
            }
            k += wks * krow;
            g += wgs * grow;
        }
        let area = ht * hs;
        self.estimate = k * area;
        self.error = ((k - g) * area).abs();
        self
    }

    fn split(&self) -> [Cell; 4] {
        let tm = 0.5 * (self.t0 + self.t1);
        let sm = 0.5 * (self.s0 + self.s1);
        [
            Cell::new(self.t0, tm, self.s0, sm),
            Cell::new(tm, self.t1, self.s0, sm),
            Cell::new(self.t0, tm, sm, self.s1),
            Cell::new(tm, self.t1, sm, self.s1),
        ]
    }
}

/// `∫ f(|q|, |ω|) dH` to relative tolerance `tol`.
pub fn integrate_biradial(f: &BiRadialIntegrand, tol: f64) -> Result<QuadEstimate> {
    integrate_biradial_with(
        f,
        &QuadConfig {
            tol,
            ..QuadConfig::default()
        },
    )
}

/// Adaptive cubature: at every level, all cells whose error exceeds their
/// share of the error budget are quartered.
pub fn integrate_biradial_with(f: &BiRadialIntegrand, cfg: &QuadConfig) -> Result<QuadEstimate> {
    f.check()?;
    let rule = kronrod_rule();
    let start: Vec<Cell> = {
        let n = 4;
        let mut v = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
                let (c, d) = (j as f64 / n as f64, (j + 1) as f64 / n as f64);
                v.push(Cell::new(a, b, c, d));
            }
        }
        v
    };
    let mut cells = map_slice(cfg.exec, &start, |c| c.evaluate(f, &rule));
    let mut history = Vec::new();
    for level in 0..=cfg.max_levels {
        let est = pairwise_sum(&cells.iter().map(|c| c.estimate).collect::<Vec<_>>());
        let err = pairwise_sum(&cells.iter().map(|c| c.error).collect::<Vec<_>>());
        if !est.is_finite() || !err.is_finite() {
            return Err(QcError::NotIntegrable(format!(
                "integrand produced a non-finite value at refinement level {level}"
            )));
        }
        history.push(ConvergenceRow {
            level,
            estimate: est,
            error: err,
            cells: cells.len(),
        });
        let budget = (cfg.tol * est.abs()).max(cfg.abs_tol);
        if err <= budget {
            return Ok(QuadEstimate {
                value: est,
                error: err,
                cells: cells.len(),
                history,
            });
        }
        let threshold = budget / cells.len() as f64;
        let (bad, good): (Vec<Cell>, Vec<Cell>) = cells.into_iter().partition(|c| c.error > threshold);
        if good.len() + 4 * bad.len() > cfg.max_cells || level == cfg.max_levels {
            return Err(QcError::Accuracy {
                estimate: est,
                error: err,
                cells: good.len() + bad.len(),
            });
        }
        let children: Vec<Cell> = bad.iter().flat_map(|c| c.split()).collect();
        let refined = map_slice(cfg.exec, &children, |c| c.evaluate(f, &rule));
        cells = good;
        cells.extend(refined);
    }
    unreachable!("loop returns on the last level")
}

/// Non-adaptive tensor Gauss–Legendre rule with `n²` nodes on the compactified square.
pub fn integrate_biradial_fixed(f: &BiRadialIntegrand, n: usize) -> Result<f64> {
    f.check()?;
    let nodes = gauss_legendre(n);
    let rows = map_slice(Exec::Sequential, &nodes, |&(xs, ws)| {
        let s = 0.5 * (xs + 1.0);
        let vals: Vec<f64> = nodes
            .iter()
            .map(|&(xt, wt)| wt * f.compact(0.5 * (xt + 1.0), s))
            .collect();
        ws * pairwise_sum(&vals)
    });
    Ok(0.25 * pairwise_sum(&rows))
}

/// Writes the refinement history as CSV with a header row.
pub fn write_convergence_csv<W: std::io::Write>(rows: &[ConvergenceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| QcError::Usage(format!("cannot write convergence table: {e}"));
    w.write_record(["level", "estimate", "error", "cells"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.level.to_string(),
            format!("{:.17e}", r.estimate),
            format!("{:.3e}", r.error),
            r.cells.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()
        .map_err(|e| QcError::Usage(format!("cannot write convergence table: {e}")))?;
    Ok(())
}

/// Settings for [`integrate_mc`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub exec: Exec,
    /// Proposal is centred at `center ∘ h` with `h` drawn at the given scale.
    pub center: GroupPoint,
    pub scale: f64,
    /// Degrees of freedom of the Student-t proposals.
    pub dof: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            seed: 0,
            exec: Exec::Auto,
            center: GroupPoint::IDENTITY,
            scale: 1.0,
            dof: 3.0,
        }
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: usize,
    /// Set when the standard error does not shrink with the sample size.
    pub warning: Option<String>,
}

/// Samples per independently seeded stream.
pub const MC_CHUNK: usize = 4096;

/// Independent `d`-dimensional Student-t proposal with `dof` degrees of freedom.
#[derive(Clone, Copy, Debug)]
struct StudentT {
    dim: usize,
    dof: f64,
    sigma: f64,
    log_norm: f64,
}

impl StudentT {
    fn new(dim: usize, dof: f64, sigma: f64) -> Self {
        let d = dim as f64;
        let log_norm = ln_gamma((dof + d) / 2.0)
            - ln_gamma(dof / 2.0)
            - 0.5 * d * (dof * PI).ln()
            - d * sigma.ln();
        Self {
            dim,
            dof,
            sigma,
            log_norm,
        }
    }

    fn sample<R: Rng>(&self, rng: &mut R, chi: &ChiSquared<f64>) -> [f64; 4] {
        let mut z = [0.0; 4];
        for v in z.iter_mut().take(self.dim) {
            *v = StandardNormal.sample(rng);
        }
        let w: f64 = chi.sample(rng);
        let k = self.sigma / (w / self.dof).sqrt();
        z.map(|v| v * k)
    }

    fn log_density(&self, norm_sqr: f64) -> f64 {
        let d = self.dim as f64;
        self.log_norm - 0.5 * (self.dof + d) * (1.0 + norm_sqr / (self.dof * self.sigma * self.sigma)).ln()
    }
}

/// Importance-sampled `∫ f dH`.
///
/// Each block of [`MC_CHUNK`] samples uses its own ChaCha stream derived from
/// the seed, and block sums are reduced pairwise in block order, so the result
/// does not depend on the execution mode.
pub fn integrate_mc<F>(f: F, cfg: &McConfig) -> Result<McEstimate>
where
    F: Fn(&GroupPoint) -> Result<f64> + Sync + Send,
{
    if cfg.samples < 1000 {
        return Err(QcError::Domain(format!("Monte Carlo needs at least 1000 samples, got {}", cfg.samples)));
    }
    if !(cfg.scale > 0.0) || !(cfg.dof > 2.0) {
        return Err(QcError::Domain("proposal needs positive scale and more than 2 degrees of freedom".into()));
    }
    let tq = StudentT::new(4, cfg.dof, 1.0 / cfg.scale);
    let tw = StudentT::new(3, cfg.dof, 1.0 / (cfg.scale * cfg.scale));
    let chi = ChiSquared::new(cfg.dof).map_err(|e| QcError::Domain(e.to_string()))?;
    let chunks = cfg.samples.div_ceil(MC_CHUNK);
    let sums = map_indexed(cfg.exec, chunks, |c| -> Result<(f64, f64, usize)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(c as u64);
        let n = MC_CHUNK.min(cfg.samples - c * MC_CHUNK);
        let mut vals = Vec::with_capacity(n);
        for _ in 0..n {
            let a = tq.sample(&mut rng, &chi);
            let b = tw.sample(&mut rng, &chi);
            let h = GroupPoint::new(Quaternion::new(a[0], a[1], a[2], a[3]), ImQuaternion::new(b[0], b[1], b[2]));
            let log_pi = tq.log_density(h.q.norm_sqr()) + tw.log_density(h.omega.norm_sqr());
            let v = f(&group_mul(&cfg.center, &h))?;
            vals.push(v * (-log_pi).exp());
        }
        let s = pairwise_sum(&vals);
        let sq: Vec<f64> = vals.iter().map(|v| v * v).collect();
        Ok((s, pairwise_sum(&sq), n))
    });
    let sums: Vec<(f64, f64, usize)> = sums.into_iter().collect::<Result<_>>()?;
    let stats = |part: &[(f64, f64, usize)]| -> (f64, f64, usize) {
        let n: usize = part.iter().map(|s| s.2).sum();
        let s = pairwise_sum(&part.iter().map(|s| s.0).collect::<Vec<_>>());
        let sq = pairwise_sum(&part.iter().map(|s| s.1).collect::<Vec<_>>());
        let nf = n as f64;
        let mean = s / nf;
        let var = ((sq / nf - mean * mean) * nf / (nf - 1.0)).max(0.0);
        (mean, (var / nf).sqrt(), n)
    };
    let (value, stderr, n) = stats(&sums);
    let mut warning = None;
    if sums.len() >= 4 {
        let (_, half_err, _) = stats(&sums[..sums.len() / 2]);
        // a finite variance shrinks the error by about √2 when the sample doubles
        if stderr > 0.0 && stderr > half_err / 1.2 {
            warning = Some(format!(
                "standard error did not shrink ({half_err:.3e} on half the samples, {stderr:.3e} on all): variance may be infinite"
            ));
        }
    }
    Ok(McEstimate {
        value,
        stderr,
        samples: n,
        warning,
    })
}

/// `π⁴/384`, the closed form of `∫ [(1+|q|²)² + |ω|²]⁻⁵ dH`.
pub fn extremal_power_integral_closed_form() -> f64 {
    PI.powi(4) / 384.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kronrod_rule_is_exact_for_degree_22() {
        let rule = kronrod_rule();
        for deg in 0..=22 {
            let k: f64 = rule.iter().map(|&(x, w, _)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((k - exact).abs() < 1e-14, "Kronrod degree {deg}");
        }
        for deg in 0..=13 {
            let g: f64 = rule.iter().map(|&(x, _, w)| w * x.powi(deg)).sum();
            let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
            assert!((g - exact).abs() < 1e-14, "Gauss degree {deg}");
        }
    }

    #[test]
    fn gauss_legendre_is_exact() {
        for n in [1, 2, 5, 12, 30] {
            let nodes = gauss_legendre(n);
            for deg in 0..2 * n {
                let v: f64 = nodes.iter().map(|&(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((v - exact).abs() < 1e-13, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn zero_integrand() {
        let f = BiRadialIntegrand::new(f64::INFINITY, f64::INFINITY, |_, _| 0.0);
        let e = integrate_biradial(&f, 1e-10).unwrap();
        assert_eq!((e.value, e.error), (0.0, 0.0));
        let mc = integrate_mc(|_| Ok(0.0), &McConfig { samples: 5000, ..McConfig::default() }).unwrap();
        assert_eq!((mc.value, mc.stderr), (0.0, 0.0));
    }

    #[test]
    fn slow_decay_is_rejected() {
        let f = BiRadialIntegrand::new(4.0, 10.0, |r, _| (1.0 + r * r).powi(-2));
        assert!(matches!(integrate_biradial(&f, 1e-8), Err(QcError::NotIntegrable(_))));
    }

    #[test]
    fn too_few_samples_is_rejected() {
        assert!(integrate_mc(|_| Ok(1.0), &McConfig { samples: 10, ..McConfig::default() }).is_err());
    }

    #[test]
    fn mc_is_reproducible_across_modes() {
        let f = |p: &GroupPoint| Ok((-p.q.norm_sqr() - p.omega.norm_sqr()).exp());
        let base = McConfig {
            samples: 20_000,
            seed: 7,
            ..McConfig::default()
        };
        let a = integrate_mc(f, &base).unwrap();
        let b = integrate_mc(f, &McConfig { exec: Exec::Sequential, ..base }).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn csv_has_header_and_rows() {
        let rows = [ConvergenceRow {
            level: 0,
            estimate: 1.5,
            error: 0.1,
            cells: 16,
        }];
        let mut buf = Vec::new();
        write_convergence_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,estimate,error,cells\n0,"));
    }
}
