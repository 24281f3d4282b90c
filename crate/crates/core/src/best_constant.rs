//! Best constant of the `L²` Folland–Stein inequality: computed integrals next
//! to the published closed forms, with the ratios between them.
//!
//! With `u = ū` solving `△u = −u^{3/2}` one has `∫|∇ū|² = ∫ū^{5/2} = I` and
//! the quotient equals `I^{1/5}`. The published chain states
//! `Λ⁵ = I = 2²⁵π^{7/2}Γ(7/2)/Γ(7) = π^{6/5}/12` and `S₂ = Λ^{−1/2} = 2√3/π^{3/5}`;
//! its links are evaluated separately so that every mismatch is visible.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::Result;
use crate::extremal::{ubar_field, v_amplitude, UBAR_AMPLITUDE};
use crate::quadrature::{extremal_power_integral_closed_form, integrate_biradial, BiRadialIntegrand, QuadEstimate};
use crate::quotient::{fs_quotient, QuotientReport};

/// Entries whose computed/printed ratio differs from 1 by more than this are flagged.
pub const RATIO_FLAG_TOLERANCE: f64 = 1e-3;

/// Homogeneous dimension of the group.
pub const HOMOGENEOUS_DIMENSION: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub name: String,
    pub computed: Option<f64>,
    pub printed: Option<f64>,
    pub ratio: Option<f64>,
    pub flagged: bool,
    pub note: String,
}

impl ConstantEntry {
    fn compare(name: &str, computed: f64, printed: f64, note: &str) -> Self {
        let ratio = computed / printed;
        Self {
            name: name.into(),
            computed: Some(computed),
            printed: Some(printed),
            ratio: Some(ratio),
            flagged: (ratio - 1.0).abs() > RATIO_FLAG_TOLERANCE,
            note: note.into(),
        }
    }

    fn printed_only(name: &str, printed: f64, note: &str) -> Self {
        Self {
            name: name.into(),
            computed: None,
            printed: Some(printed),
            ratio: None,
            flagged: false,
            note: note.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BestConstantReport {
    /// `∫[(1+|q|²)² + |ω|²]⁻⁵ dH` by reduced cubature.
    pub base_integral: QuadEstimate,
    /// `∫ū^{5/2} dH = 2²⁵ × base_integral`.
    pub ubar_power_integral: f64,
    pub quotient: QuotientReport,
    pub entries: Vec<ConstantEntry>,
}

impl BestConstantReport {
    pub fn flagged(&self) -> impl Iterator<Item = &ConstantEntry> {
        self.entries.iter().filter(|e| e.flagged)
    }
}

/// Printed `S₂ = 2√3/π^{3/5}`.
pub fn printed_s2() -> f64 {
    2.0 * 3f64.sqrt() / PI.powf(0.6)
}

/// Printed right end of the chain, `π^{12/10}/12`.
pub fn printed_lambda5() -> f64 {
    PI.powf(1.2) / 12.0
}

/// Middle expression of the chain, `2²⁵π^{7/2}Γ(7/2)/Γ(7)`.
pub fn printed_gamma_expression() -> f64 {
    2f64.powi(25) * PI.powf(3.5) * gamma(3.5) / gamma(7.0)
}

/// `λ(S⁷) = 48(4π)^{1/5}`.
pub fn printed_sphere_yamabe_constant() -> f64 {
    48.0 * (4.0 * PI).powf(0.2)
}

/// `S₂` for the Heisenberg-type normalisation, `15^{1/10}/(π^{2/5}·2√2)`.
pub fn printed_s2_heisenberg_type() -> f64 {
    15f64.powf(0.1) / (PI.powf(0.4) * 2.0 * 2f64.sqrt())
}

/// Amplitude `γ = 32 π^{−17/50} 2^{1/5} 15^{2/5}` of the Heisenberg-type extremal.
pub fn printed_gamma_heisenberg_type() -> f64 {
    32.0 * PI.powf(-17.0 / 50.0) * 2f64.powf(0.2) * 15f64.powf(0.4)
}

/// `4(Q+2)/(Q−2)`.
pub fn normalised_scalar_curvature() -> f64 {
    4.0 * (HOMOGENEOUS_DIMENSION + 2.0) / (HOMOGENEOUS_DIMENSION - 2.0)
}

pub fn best_constant_report(tol: f64) -> Result<BestConstantReport> {
    let f = BiRadialIntegrand::new(20.0, 10.0, |r, rho| ((1.0 + r * r).powi(2) + rho * rho).powi(-5));
    let base = integrate_biradial(&f, tol)?;
    let ubar_power = 2f64.powi(25) * base.value;
    let quotient = fs_quotient(&ubar_field())?;
    let q = quotient.quotient;
    // reading A: Λ is the quotient; reading B: Λ⁵ is the quotient to the fifth
    let lambda_a = q;
    let lambda5_b = q.powi(5);
    let entries = vec![
        ConstantEntry::compare(
            "base integral vs π⁴/384",
            base.value,
            extremal_power_integral_closed_form(),
            "Beta-function reduction",
        ),
        ConstantEntry::compare(
            "base integral vs π⁴/512",
            base.value,
            PI.powi(4) / 512.0,
            "alternative closed form in circulation; off by 4/3",
        ),
        ConstantEntry::compare(
            "∫ū^{5/2} vs 2²⁵π^{7/2}Γ(7/2)/Γ(7)",
            ubar_power,
            printed_gamma_expression(),
            "middle expression of the printed chain",
        ),
        ConstantEntry::compare(
            "∫ū^{5/2} vs π^{6/5}/12",
            ubar_power,
            printed_lambda5(),
            "right end of the printed chain",
        ),
        ConstantEntry::compare(
            "2²⁵π^{7/2}Γ(7/2)/Γ(7) vs π^{6/5}/12",
            printed_gamma_expression(),
            printed_lambda5(),
            "internal consistency of the printed chain",
        ),
        ConstantEntry::compare(
            "∫|∇ū|² vs ∫ū^{5/2}",
            quotient.numerator,
            quotient.power_integral,
            "integration by parts against the Yamabe equation",
        ),
        ConstantEntry::compare(
            "Λ (reading Λ = quotient) vs (π^{6/5}/12)^{1/5}",
            lambda_a,
            printed_lambda5().powf(0.2),
            "",
        ),
        ConstantEntry::compare(
            "Λ⁵ (reading Λ⁵ = quotient⁵) vs π^{6/5}/12",
            lambda5_b,
            printed_lambda5(),
            "",
        ),
        ConstantEntry::compare(
            "S₂ = quotient^{−1/2} vs 2√3/π^{3/5}",
            lambda_a.powf(-0.5),
            printed_s2(),
            "",
        ),
        ConstantEntry::compare(
            "(π^{6/5}/12)^{−1/10} vs 2√3/π^{3/5}",
            printed_lambda5().powf(-0.1),
            printed_s2(),
            "S₂ = Λ^{−1/2} applied to the printed Λ⁵",
        ),
        ConstantEntry::compare(
            "extremal amplitude 2¹⁰·quotient^{−2} vs 2¹¹√3/π^{3/5}",
            UBAR_AMPLITUDE * lambda_a.powi(-2),
            v_amplitude(),
            "v = Λ^{−2} ū with ∫v^{5/2} = 1",
        ),
        ConstantEntry::compare(
            "4(Q+2)/(Q−2) vs 6",
            normalised_scalar_curvature(),
            6.0,
            "scalar curvature of η̄ for h = 2⁻⁶[(1+|q|²)²+|ω|²]",
        ),
        ConstantEntry::printed_only("S₂ = 2√3/π^{3/5}", printed_s2(), ""),
        ConstantEntry::printed_only("Λ⁵ = π^{6/5}/12", printed_lambda5(), ""),
        ConstantEntry::printed_only("λ(S⁷) = 48(4π)^{1/5}", printed_sphere_yamabe_constant(), "sphere side not integrated"),
        ConstantEntry::printed_only(
            "S₂ (Heisenberg type) = 15^{1/10}/(π^{2/5}2√2)",
            printed_s2_heisenberg_type(),
            "",
        ),
        ConstantEntry::printed_only(
            "γ (Heisenberg type) = 32π^{−17/50}2^{1/5}15^{2/5}",
            printed_gamma_heisenberg_type(),
            "",
        ),
    ];
    Ok(BestConstantReport {
        base_integral: base,
        ubar_power_integral: ubar_power,
        quotient,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printed_values() {
        assert!((printed_s2() - 1.74301).abs() < 1e-4);
        assert!((printed_lambda5() - 0.32915).abs() < 1e-4);
        assert!((printed_sphere_yamabe_constant() - 79.631).abs() < 1e-3);
        assert_eq!(normalised_scalar_curvature(), 6.0);
    }

    #[test]
    fn gamma_expression_equals_closed_form() {
        let closed = 2f64.powi(25) * extremal_power_integral_closed_form();
        assert!((printed_gamma_expression() / closed - 1.0).abs() < 1e-13);
    }
}
