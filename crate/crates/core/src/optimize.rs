//! Bounded Nelder–Mead simplex search.
//!
//! Uses the dimension-adaptive coefficients of Gao and Han; trial points are
//! projected onto the box. Non-finite objective values count as `+∞`.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    /// Stop when `f_max − f_min ≤ ftol·max(|f_min|, 1e-300)` ...
    pub ftol: f64,
    /// ... and every vertex lies within `xtol` (max-norm) of the best one.
    pub xtol: f64,
    /// Offsets of the initial simplex along each axis.
    pub initial_step: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

pub fn nelder_mead<F>(mut f: F, x0: &[f64], cfg: &NelderMeadConfig) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = x0.len();
    assert!(n >= 1, "empty search space");
    assert!(
        cfg.initial_step.len() == n && cfg.lower.len() == n && cfg.upper.len() == n,
        "configuration dimensions must match the start point"
    );
    let nf = n as f64;
    let (alpha, gamma, rho, shrink) = (1.0, 1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut start = x0.to_vec();
    project(&mut start, &cfg.lower, &cfg.upper);
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let f0 = eval(&start, &mut evals);
    simplex.push((start.clone(), f0));
    for i in 0..n {
        let mut x = start.clone();
        x[i] += cfg.initial_step[i];
        if x[i] > cfg.upper[i] {
            x[i] = start[i] - cfg.initial_step[i];
        }
        project(&mut x, &cfg.lower, &cfg.upper);
        let v = eval(&x, &mut evals);
        simplex.push((x, v));
    }

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, worst) = (simplex[0].1, simplex[n].1);
        let spread = worst - best;
        let diameter = simplex[1..]
            .iter()
            .map(|(x, _)| x.iter().zip(&simplex[0].0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
            .fold(0.0, f64::max);
        if spread <= cfg.ftol * best.abs().max(1e-300) && diameter <= cfg.xtol {
            return NelderMeadResult {
                x: simplex[0].0.clone(),
                f: best,
                evals,
                converged: true,
            };
        }
        if evals >= cfg.max_evals {
            return NelderMeadResult {
                x: simplex[0].0.clone(),
                f: best,
                evals,
                converged: false,
            };
        }

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / nf;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            project(&mut x, &cfg.lower, &cfg.upper);
            x
        };

        let xr = along(alpha);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].1 {
            let xe = along(alpha * gamma);
            let fe = eval(&xe, &mut evals);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(alpha * rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        } else {
            let xc = along(-rho);
            let fc = eval(&xc, &mut evals);
            (xc, fc)
        };
        if fc < fr.min(simplex[n].1) {
            simplex[n] = (xc, fc);
            continue;
        }
        let x_best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = x_best.iter().zip(&v.0).map(|(b, p)| b + shrink * (p - b)).collect();
            project(&mut x, &cfg.lower, &cfg.upper);
            let fx = eval(&x, &mut evals);
            *v = (x, fx);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> NelderMeadConfig {
        NelderMeadConfig {
            max_evals: 20_000,
            ftol: 1e-14,
            xtol: 1e-8,
            initial_step: vec![0.5; n],
            lower: vec![-10.0; n],
            upper: vec![10.0; n],
        }
    }

    #[test]
    fn rosenbrock_minimum() {
        let r = nelder_mead(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
            &cfg(2),
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-6 && (r.x[1] - 1.0).abs() < 1e-6);
    }

    #[test]
    fn shifted_quadratic_in_eight_dimensions() {
        let target: Vec<f64> = (0..8).map(|i| 0.1 * i as f64 - 0.3).collect();
        let t = target.clone();
        let r = nelder_mead(
            move |x| 1.0 + x.iter().zip(&t).enumerate().map(|(i, (a, b))| (1.0 + i as f64) * (a - b).powi(2)).sum::<f64>(),
            &[0.0; 8],
            &cfg(8),
        );
        assert!(r.converged);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn bounds_are_respected() {
        let mut c = cfg(1);
        c.lower = vec![2.0];
        let r = nelder_mead(|x| x[0] * x[0], &[5.0], &c);
        assert!((r.x[0] - 2.0).abs() < 1e-8);
    }

    #[test]
    fn budget_exhaustion_reports_best_so_far() {
        let mut c = cfg(2);
        c.max_evals = 10;
        let r = nelder_mead(|x| (x[0] - 3.0).powi(2) + x[1] * x[1], &[0.0, 0.0], &c);
        assert!(!r.converged);
        assert!(r.f < 9.0);
    }
}
