//! The basic Leggett bounds `1 − |Ā − B̄| ≥ ĀB̄ ≥ −1 + |Ā + B̄|` and their
//! probability form for the state `sqrt(1-c^2) uu + c vv`.
//!
//! For that family the bound is equivalent to `S ≤ 1`, with
//!
//! ```text
//! S = |1−2c²| |cos²α − cos²β| + cos²α cos²β + sin²α sin²β + c sqrt(1−c²) sin2α sin2β
//! ```
//!
//! On the one-parameter path `α = √ε`, `β = π/2 − √ε` the first-order
//! truncation in `ε` is `S₁ = |1−2c²|(1−2ε) + 2ε + 4c sqrt(1−c²) ε`, which for
//! `1 > 2c²` reduces to the condition `c ≥ 2cε + 2 sqrt(1−c²) ε`. Both the
//! truncated and the exact values are reported; neither is preferred.

use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{finite, Error, Result};
use crate::quantum::{joint_distribution, marginals, MeasurementSettings, PaperStateParam, PureTwoPhotonState};
use crate::PROB_TOL;

/// `(Ā, B̄, ĀB̄)` at one settings pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTriple {
    pub a_bar: f64,
    pub b_bar: f64,
    pub ab_bar: f64,
}

impl CorrelationTriple {
    pub fn new(a_bar: f64, b_bar: f64, ab_bar: f64) -> Result<Self> {
        let t = Self { a_bar, b_bar, ab_bar };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("a_bar", self.a_bar), ("b_bar", self.b_bar), ("ab_bar", self.ab_bar)] {
            finite(name, x)?;
            if x.abs() > 1.0 + PROB_TOL {
                return Err(Error::OutOfRange {
                    name,
                    value: x,
                    constraint: "-1 <= x <= 1",
                });
            }
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.a_bar, self.b_bar, self.ab_bar]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeggettBounds {
    pub lower: f64,
    pub upper: f64,
    pub satisfied: bool,
    /// Distance of `ĀB̄` to the nearer bound; negative when a bound is broken.
    pub margin: f64,
}

/// Evaluates both sides of the two-sided bound on `ĀB̄`.
///
/// A bound counts as broken only when exceeded by more than `1e-12`.
pub fn leggett_bounds(corr: &CorrelationTriple) -> Result<LeggettBounds> {
    corr.validate()?;
    let upper = 1.0 - (corr.a_bar - corr.b_bar).abs();
    let lower = -1.0 + (corr.a_bar + corr.b_bar).abs();
    let margin = (upper - corr.ab_bar).min(corr.ab_bar - lower);
    Ok(LeggettBounds {
        lower,
        upper,
        satisfied: margin >= -PROB_TOL,
        margin,
    })
}

fn param(c: f64) -> Result<PaperStateParam> {
    PaperStateParam::new(c)
}

fn positive_eps(eps: f64) -> Result<f64> {
    let eps = finite("eps", eps)?;
    if eps <= 0.0 {
        return Err(Error::OutOfRange {
            name: "eps",
            value: eps,
            constraint: "eps > 0",
        });
    }
    Ok(eps)
}

/// Exact reduced left-hand side `S`; the bound holds iff `S ≤ 1`.
pub fn reduced_lhs_exact(c: f64, settings: MeasurementSettings) -> Result<f64> {
    let c = param(c)?;
    Ok(reduced_lhs_unchecked(c.value(), c.uu_amplitude(), settings.alpha, settings.beta))
}

#[inline]
pub(crate) fn reduced_lhs_unchecked(c: f64, uu: f64, alpha: f64, beta: f64) -> f64 {
    let (sa, ca) = alpha.sin_cos();
    let (sb, cb) = beta.sin_cos();
    let (ca2, cb2) = (ca * ca, cb * cb);
    let (sa2, sb2) = (sa * sa, sb * sb);
    (1.0 - 2.0 * c * c).abs() * (ca2 - cb2).abs()
        + ca2 * cb2
        + sa2 * sb2
        + c * uu * (2.0 * alpha).sin() * (2.0 * beta).sin()
}

/// `|P_A(a,+) − P_B(b,+)| + P_{++} + P_{−−}` assembled from state
/// probabilities. Works for any pure state.
pub fn probability_form_lhs(state: &PureTwoPhotonState, settings: MeasurementSettings) -> f64 {
    let (pa, pb) = marginals(state, settings);
    let d = joint_distribution(state, settings);
    (pa - pb).abs() + d.p_pp + d.p_mm
}

/// Both sides of `|P_A − P_B| + P_{++} + P_{−−} = 1 − 2 min(P_{+−}, P_{−+})`.
///
/// The left side uses partial-projection marginals, the right side only the
/// off-diagonal joint probabilities.
pub fn cross_term_identity(c: f64, settings: MeasurementSettings) -> Result<(f64, f64)> {
    let state = PureTwoPhotonState::paper(param(c)?);
    Ok(cross_term_identity_for(&state, settings))
}

pub fn cross_term_identity_for(state: &PureTwoPhotonState, settings: MeasurementSettings) -> (f64, f64) {
    let lhs = probability_form_lhs(state, settings);
    let d = joint_distribution(state, settings);
    (lhs, 1.0 - 2.0 * d.p_pm.min(d.p_mp))
}

/// Settings `α = √ε`, `β = π/2 − √ε`.
pub fn eps_preset_settings(eps: f64) -> Result<MeasurementSettings> {
    let r = positive_eps(eps)?.sqrt();
    MeasurementSettings::new(r, FRAC_PI_2 - r)
}

/// `S₁ = |1−2c²|(1−2ε) + 2ε + 4c sqrt(1−c²) ε`, with no further terms.
pub fn first_order_lhs(c: f64, eps: f64) -> Result<f64> {
    let c = param(c)?;
    let eps = positive_eps(eps)?;
    let cv = c.value();
    Ok((1.0 - 2.0 * cv * cv).abs() * (1.0 - 2.0 * eps) + 2.0 * eps + 4.0 * cv * c.uu_amplitude() * eps)
}

/// `c ≥ 2cε + 2 sqrt(1−c²) ε`: `true` when the truncated condition holds,
/// `false` when it predicts a violation. Only defined for `1 > 2c²`.
pub fn eq20_predicate(c: f64, eps: f64) -> Result<bool> {
    let c = param(c)?;
    let eps = positive_eps(eps)?;
    let cv = c.value();
    if 2.0 * cv * cv >= 1.0 {
        return Err(Error::OutOfRange {
            name: "c",
            value: cv,
            constraint: "1 > 2c² (the assumption under which the first-order condition is derived)",
        });
    }
    Ok(cv >= 2.0 * cv * eps + 2.0 * c.uu_amplitude() * eps)
}

/// Exact and truncated evaluation on the `α = √ε`, `β = π/2 − √ε` path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedEvaluation {
    pub c: f64,
    pub eps: f64,
    /// Closed-form `S`.
    pub lhs_exact: f64,
    /// `S` assembled from state probabilities (independent route).
    pub lhs_probability_form: f64,
    pub lhs_first_order: f64,
    /// `None` when `1 > 2c²` does not hold.
    pub eq20_predicate: Option<bool>,
    /// `1 − S`.
    pub cross_gap: f64,
}

impl ReducedEvaluation {
    /// Truncation predicts `S₁ > 1` while the exact value stays `≤ 1`.
    pub fn discrepancy(&self, tolerance: f64) -> bool {
        self.lhs_first_order > 1.0 + tolerance && self.lhs_exact <= 1.0 + tolerance
    }
}

pub fn reduced_evaluation(c: f64, eps: f64) -> Result<ReducedEvaluation> {
    let settings = eps_preset_settings(eps)?;
    let lhs_exact = reduced_lhs_exact(c, settings)?;
    let state = PureTwoPhotonState::paper(param(c)?);
    let eq20 = match eq20_predicate(c, eps) {
        Ok(b) => Some(b),
        Err(Error::OutOfRange { name: "c", .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ReducedEvaluation {
        c,
        eps,
        lhs_exact,
        lhs_probability_form: probability_form_lhs(&state, settings),
        lhs_first_order: first_order_lhs(c, eps)?,
        eq20_predicate: eq20,
        cross_gap: 1.0 - lhs_exact,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuditRow {
    #[serde(flatten)]
    pub eval: ReducedEvaluation,
    /// `S_exact − S₁`.
    pub difference: f64,
    /// `|diff(previous ε)| / |diff(this ε)|`; absent on the first row.
    pub ratio: Option<f64>,
    /// `log(ratio) / log(ε_prev / ε)`; absent on the first row.
    pub empirical_order: Option<f64>,
    pub discrepancy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionAudit {
    pub c: f64,
    pub rows: Vec<AuditRow>,
    /// Any row where `S₁ > 1` but the exact `S ≤ 1`.
    pub discrepancy_flagged: bool,
}

/// Tolerance used to flag `S₁ > 1` against `S_exact ≤ 1`.
pub const DISCREPANCY_TOL: f64 = 1e-12;

/// Compares `S` with `S₁` along a strictly decreasing ladder of `ε`.
pub fn expansion_audit(c: f64, eps_ladder: &[f64]) -> Result<ExpansionAudit> {
    param(c)?;
    if eps_ladder.is_empty() {
        return Err(Error::Invalid("eps ladder is empty".into()));
    }
    for &e in eps_ladder {
        positive_eps(e)?;
    }
    if eps_ladder.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Invalid("eps ladder must be strictly decreasing".into()));
    }
    let mut rows: Vec<AuditRow> = Vec::with_capacity(eps_ladder.len());
    for &eps in eps_ladder {
        let eval = reduced_evaluation(c, eps)?;
        let difference = eval.lhs_exact - eval.lhs_first_order;
        let (ratio, empirical_order) = match rows.last() {
            Some(prev) => {
                let r = prev.difference.abs() / difference.abs();
                (Some(r), Some(r.ln() / (prev.eval.eps / eps).ln()))
            }
            None => (None, None),
        };
        rows.push(AuditRow {
            eval,
            difference,
            ratio,
            empirical_order,
            discrepancy: eval.discrepancy(DISCREPANCY_TOL),
        });
    }
    let discrepancy_flagged = rows.iter().any(|r| r.discrepancy);
    Ok(ExpansionAudit {
        c,
        rows,
        discrepancy_flagged,
    })
}

/// `ε_max, ε_max/2, ε_max/4, …` down to the last value `≥ ε_min`.
pub fn halving_ladder(eps_max: f64, eps_min: f64) -> Result<Vec<f64>> {
    let eps_max = positive_eps(eps_max)?;
    let eps_min = positive_eps(eps_min)?;
    if eps_min > eps_max {
        return Err(Error::Invalid(format!(
            "eps ladder bounds reversed: {eps_max} < {eps_min}"
        )));
    }
    let mut out = vec![eps_max];
    loop {
        let next = out[out.len() - 1] / 2.0;
        if next < eps_min * (1.0 - 1e-12) {
            break;
        }
        out.push(next);
    }
    Ok(out)
}
