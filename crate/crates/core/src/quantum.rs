//! Pure two-photon polarization states and the probabilities of joint
//! analyzer outcomes.
//!
//! Analyzer kets live in the real `{u, v}` basis: an analyzer at angle `θ`
//! from `û` projects onto `cos θ·u + sin θ·v` for outcome `+1` and onto the
//! orthogonal ket `−sin θ·u + cos θ·v` for outcome `−1`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{finite, Error, Result};
use crate::leggett::CorrelationTriple;
use crate::PROB_TOL;

/// Real two-component ket in the `{u, v}` basis.
pub type Ket = [f64; 2];

/// Ket of the `+1` outcome for an analyzer at `angle` radians from `û`.
pub fn measurement_ket(angle: f64) -> Result<Ket> {
    let angle = finite("angle", angle)?;
    let (s, c) = angle.sin_cos();
    Ok([c, s])
}

/// Ket of the `−1` outcome, orthogonal to [`measurement_ket`].
pub fn orthogonal_ket(angle: f64) -> Result<Ket> {
    let angle = finite("angle", angle)?;
    let (s, c) = angle.sin_cos();
    Ok([-s, c])
}

/// The coefficient `c` of the state `sqrt(1-c^2) u_A u_B + c v_A v_B`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct PaperStateParam(f64);

impl PaperStateParam {
    pub fn new(c: f64) -> Result<Self> {
        let c = finite("c", c)?;
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::OutOfRange {
                name: "c",
                value: c,
                constraint: "1 ≥ c ≥ 0 (c is a real positive quantity with 1 ≥ c)",
            });
        }
        Ok(Self(c))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// `sqrt(1 - c^2)`, the amplitude of `u_A u_B`.
    pub fn uu_amplitude(self) -> f64 {
        (1.0 - self.0 * self.0).sqrt()
    }
}

impl TryFrom<f64> for PaperStateParam {
    type Error = Error;
    fn try_from(c: f64) -> Result<Self> {
        Self::new(c)
    }
}

impl From<PaperStateParam> for f64 {
    fn from(c: PaperStateParam) -> f64 {
        c.0
    }
}

/// Analyzer angles in radians, measured from `û`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub alpha: f64,
    pub beta: f64,
}

impl MeasurementSettings {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        Ok(Self {
            alpha: finite("alpha", alpha)?,
            beta: finite("beta", beta)?,
        })
    }

    pub fn from_degrees(alpha_deg: f64, beta_deg: f64) -> Result<Self> {
        Self::new(alpha_deg.to_radians(), beta_deg.to_radians())
    }

    /// Settings swapped between the two localities.
    pub fn swapped(self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
        }
    }
}

/// A normalized pure state `Σ c_jk |j⟩_A |k⟩_B` with `j, k ∈ {u, v}`.
///
/// Row index is the A-side basis ket, column index the B-side one. Serialized
/// as `[[[re, im], [re, im]], [[re, im], [re, im]]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoeffs", into = "RawCoeffs")]
pub struct PureTwoPhotonState {
    coeffs: [[Complex64; 2]; 2],
}

impl PureTwoPhotonState {
    /// Rejects states whose squared norm differs from 1 by more than `1e-12`.
    pub fn new(coeffs: [[Complex64; 2]; 2]) -> Result<Self> {
        for z in coeffs.iter().flatten() {
            finite("coefficient (re)", z.re)?;
            finite("coefficient (im)", z.im)?;
        }
        let norm: f64 = coeffs.iter().flatten().map(|z| z.norm_sqr()).sum();
        if (norm - 1.0).abs() > PROB_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { coeffs })
    }

    /// Real-coefficient convenience constructor.
    pub fn from_real(coeffs: [[f64; 2]; 2]) -> Result<Self> {
        let z = |x: f64| Complex64::new(x, 0.0);
        Self::new([
            [z(coeffs[0][0]), z(coeffs[0][1])],
            [z(coeffs[1][0]), z(coeffs[1][1])],
        ])
    }

    /// `sqrt(1-c^2) u_A u_B + c v_A v_B`.
    pub fn paper(c: PaperStateParam) -> Self {
        let z = |x: f64| Complex64::new(x, 0.0);
        Self {
            coeffs: [
                [z(c.uu_amplitude()), z(0.0)],
                [z(0.0), z(c.value())],
            ],
        }
    }

    /// `(u_A v_B − v_A u_B)/sqrt 2`.
    pub fn singlet() -> Self {
        let z = |x: f64| Complex64::new(x, 0.0);
        Self {
            coeffs: [
                [z(0.0), z(FRAC_1_SQRT_2)],
                [z(-FRAC_1_SQRT_2), z(0.0)],
            ],
        }
    }

    /// `(u_A u_B + v_A v_B)/sqrt 2`.
    pub fn positive_parity() -> Self {
        let z = |x: f64| Complex64::new(x, 0.0);
        Self {
            coeffs: [
                [z(FRAC_1_SQRT_2), z(0.0)],
                [z(0.0), z(FRAC_1_SQRT_2)],
            ],
        }
    }

    pub fn coeffs(&self) -> &[[Complex64; 2]; 2] {
        &self.coeffs
    }

    /// Projection amplitude onto the product ket `a_A ⊗ b_B`.
    pub fn amplitude(&self, a: Ket, b: Ket) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, row) in self.coeffs.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                acc += c * (a[j] * b[k]);
            }
        }
        acc
    }

    /// `|Ψ · a_A|²`: squared norm of the partial projection on side A.
    pub fn prob_a(&self, a: Ket) -> f64 {
        (0..2)
            .map(|k| (a[0] * self.coeffs[0][k] + a[1] * self.coeffs[1][k]).norm_sqr())
            .sum()
    }

    /// `|Ψ · b_B|²`: squared norm of the partial projection on side B.
    pub fn prob_b(&self, b: Ket) -> f64 {
        (0..2)
            .map(|j| (b[0] * self.coeffs[j][0] + b[1] * self.coeffs[j][1]).norm_sqr())
            .sum()
    }
}

type RawCoeffs = [[[f64; 2]; 2]; 2];

impl TryFrom<RawCoeffs> for PureTwoPhotonState {
    type Error = Error;
    fn try_from(raw: RawCoeffs) -> Result<Self> {
        let z = |p: [f64; 2]| Complex64::new(p[0], p[1]);
        Self::new([
            [z(raw[0][0]), z(raw[0][1])],
            [z(raw[1][0]), z(raw[1][1])],
        ])
    }
}

impl From<PureTwoPhotonState> for RawCoeffs {
    fn from(s: PureTwoPhotonState) -> Self {
        s.coeffs.map(|row| row.map(|z| [z.re, z.im]))
    }
}

/// Probabilities of the four joint outcomes for one settings pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointOutcomeDistribution {
    pub p_pp: f64,
    pub p_pm: f64,
    pub p_mp: f64,
    pub p_mm: f64,
}

impl JointOutcomeDistribution {
    /// Entries must lie in `[0, 1]` and sum to 1, both within `1e-12`.
    pub fn new(p_pp: f64, p_pm: f64, p_mp: f64, p_mm: f64) -> Result<Self> {
        let d = Self {
            p_pp,
            p_pm,
            p_mp,
            p_mm,
        };
        for (name, p) in [("p_pp", p_pp), ("p_pm", p_pm), ("p_mp", p_mp), ("p_mm", p_mm)] {
            finite(name, p)?;
            if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&p) {
                return Err(Error::OutOfRange {
                    name,
                    value: p,
                    constraint: "0 <= p <= 1",
                });
            }
        }
        let total = d.total();
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::OutOfRange {
                name: "p_pp + p_pm + p_mp + p_mm",
                value: total,
                constraint: "sum of probabilities = 1",
            });
        }
        Ok(d)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p_pp, self.p_pm, self.p_mp, self.p_mm]
    }

    pub fn total(&self) -> f64 {
        self.p_pp + self.p_pm + self.p_mp + self.p_mm
    }

    /// `P_A(a,+)` as a row sum.
    pub fn a_plus(&self) -> f64 {
        self.p_pp + self.p_pm
    }

    /// `P_B(b,+)` as a column sum.
    pub fn b_plus(&self) -> f64 {
        self.p_pp + self.p_mp
    }

    /// Same distribution with the roles of A and B exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            p_pp: self.p_pp,
            p_pm: self.p_mp,
            p_mp: self.p_pm,
            p_mm: self.p_mm,
        }
    }
}

/// Joint outcome probabilities `|⟨a_A b_B|Ψ⟩|²` and the three variants with
/// orthogonal kets.
pub fn joint_distribution(
    state: &PureTwoPhotonState,
    settings: MeasurementSettings,
) -> JointOutcomeDistribution {
    let (a, a_perp) = kets(settings.alpha);
    let (b, b_perp) = kets(settings.beta);
    JointOutcomeDistribution {
        p_pp: state.amplitude(a, b).norm_sqr(),
        p_pm: state.amplitude(a, b_perp).norm_sqr(),
        p_mp: state.amplitude(a_perp, b).norm_sqr(),
        p_mm: state.amplitude(a_perp, b_perp).norm_sqr(),
    }
}

/// Single-side probabilities `(P_A(a,+), P_B(b,+))` from partial projections.
pub fn marginals(state: &PureTwoPhotonState, settings: MeasurementSettings) -> (f64, f64) {
    let (a, _) = kets(settings.alpha);
    let (b, _) = kets(settings.beta);
    (state.prob_a(a), state.prob_b(b))
}

/// `(Ā, B̄, ĀB̄)` from outcome probabilities: `Ā = 2 P_A(+) − 1`,
/// `B̄ = 2 P_B(+) − 1`, `ĀB̄ = 2 (P_{++} + P_{−−}) − 1`.
pub fn correlation_triple(dist: &JointOutcomeDistribution) -> CorrelationTriple {
    CorrelationTriple {
        a_bar: 2.0 * dist.a_plus() - 1.0,
        b_bar: 2.0 * dist.b_plus() - 1.0,
        ab_bar: 2.0 * (dist.p_pp + dist.p_mm) - 1.0,
    }
}

fn kets(angle: f64) -> (Ket, Ket) {
    let (s, c) = angle.sin_cos();
    ([c, s], [-s, c])
}

/// Closed-form probabilities for `sqrt(1-c^2) uu + c vv`.
pub mod closed_form {
    /// `P_A(a,+) = (1−c²)cos²α + c²sin²α`.
    pub fn p_a_plus(c: f64, alpha: f64) -> f64 {
        let (s, co) = alpha.sin_cos();
        (1.0 - c * c) * co * co + c * c * s * s
    }

    /// `P_B(b,+) = (1−c²)cos²β + c²sin²β`.
    pub fn p_b_plus(c: f64, beta: f64) -> f64 {
        p_a_plus(c, beta)
    }

    /// `P_AB(++) = (1−c²)cos²α cos²β + c² sin²α sin²β + ½ c sqrt(1−c²) sin2α sin2β`.
    pub fn p_pp(c: f64, alpha: f64, beta: f64) -> f64 {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        (1.0 - c * c) * ca * ca * cb * cb
            + c * c * sa * sa * sb * sb
            + 0.5 * c * (1.0 - c * c).sqrt() * (2.0 * alpha).sin() * (2.0 * beta).sin()
    }

    /// `P_AB(−−) = (1−c²)sin²α sin²β + c² cos²α cos²β + ½ c sqrt(1−c²) sin2α sin2β`.
    pub fn p_mm(c: f64, alpha: f64, beta: f64) -> f64 {
        let (sa, ca) = alpha.sin_cos();
        let (sb, cb) = beta.sin_cos();
        (1.0 - c * c) * sa * sa * sb * sb
            + c * c * ca * ca * cb * cb
            + 0.5 * c * (1.0 - c * c).sqrt() * (2.0 * alpha).sin() * (2.0 * beta).sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_6, PI};

    fn paper(c: f64) -> PureTwoPhotonState {
        PureTwoPhotonState::paper(PaperStateParam::new(c).unwrap())
    }

    fn settings(a: f64, b: f64) -> MeasurementSettings {
        MeasurementSettings::new(a, b).unwrap()
    }

    fn assert_dist(d: JointOutcomeDistribution, want: [f64; 4]) {
        for (got, want) in d.as_array().iter().zip(want) {
            assert!((got - want).abs() < 1e-12, "{d:?} vs {want:?}");
        }
    }

    #[test]
    fn kets_at_reference_angles() {
        let k = measurement_ket(0.0).unwrap();
        assert!((k[0] - 1.0).abs() < 1e-15 && k[1].abs() < 1e-15);
        let k = measurement_ket(FRAC_PI_2).unwrap();
        assert!(k[0].abs() < 1e-15 && (k[1] - 1.0).abs() < 1e-15);
        let k = measurement_ket(FRAC_PI_4).unwrap();
        let h = 2f64.sqrt() / 2.0;
        assert!((k[0] - h).abs() < 1e-15 && (k[1] - h).abs() < 1e-15);
    }

    #[test]
    fn kets_are_orthonormal() {
        for i in 0..100 {
            let t = -7.0 + 0.17 * i as f64;
            let a = measurement_ket(t).unwrap();
            let p = orthogonal_ket(t).unwrap();
            assert!((a[0] * a[0] + a[1] * a[1] - 1.0).abs() < 1e-15);
            assert!((a[0] * p[0] + a[1] * p[1]).abs() < 1e-15);
        }
    }

    #[test]
    fn non_finite_angle_rejected() {
        assert!(matches!(measurement_ket(f64::NAN), Err(Error::NonFinite { .. })));
        assert!(orthogonal_ket(f64::INFINITY).is_err());
        assert!(MeasurementSettings::new(0.0, f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn paper_param_range() {
        assert!(PaperStateParam::new(0.0).is_ok());
        assert!(PaperStateParam::new(1.0).is_ok());
        let err = PaperStateParam::new(2.0).unwrap_err();
        assert!(err.to_string().contains("1 ≥ c"));
        assert!(PaperStateParam::new(-0.1).is_err());
    }

    #[test]
    fn normalization_is_enforced_not_repaired() {
        assert!(PureTwoPhotonState::from_real([[1.0, 0.0], [0.0, 1.0]]).is_err());
        assert!(PureTwoPhotonState::from_real([[0.6, 0.0], [0.0, 0.8]]).is_ok());
        let off = 1.0 + 1e-9;
        assert!(matches!(
            PureTwoPhotonState::from_real([[off, 0.0], [0.0, 0.0]]),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn joint_distribution_examples() {
        assert_dist(joint_distribution(&paper(0.0), settings(0.0, 0.0)), [1.0, 0.0, 0.0, 0.0]);
        assert_dist(
            joint_distribution(&paper(FRAC_1_SQRT_2), settings(FRAC_PI_6, FRAC_PI_6)),
            [0.5, 0.0, 0.0, 0.5],
        );
        assert_dist(joint_distribution(&paper(0.5), settings(0.0, 0.0)), [0.75, 0.0, 0.0, 0.25]);
    }

    #[test]
    fn marginal_examples() {
        let (pa, _) = marginals(&paper(0.5), settings(0.0, 1.3));
        assert!((pa - 0.75).abs() < 1e-12);
        for c in [0.0, 0.2, 0.77, 1.0] {
            let (pa, _) = marginals(&paper(c), settings(FRAC_PI_4, 0.4));
            assert!((pa - 0.5).abs() < 1e-12);
        }
        for i in 0..50 {
            let a = 0.13 * i as f64;
            let (pa, pb) = marginals(&PureTwoPhotonState::singlet(), settings(a, 2.0 - a));
            assert!((pa - 0.5).abs() < 1e-12 && (pb - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn triple_examples() {
        let t = correlation_triple(&JointOutcomeDistribution::new(1.0, 0.0, 0.0, 0.0).unwrap());
        assert_eq!((t.a_bar, t.b_bar, t.ab_bar), (1.0, 1.0, 1.0));
        let t = correlation_triple(&JointOutcomeDistribution::new(0.5, 0.0, 0.0, 0.5).unwrap());
        assert_eq!((t.a_bar, t.b_bar, t.ab_bar), (0.0, 0.0, 1.0));
        let t = correlation_triple(&JointOutcomeDistribution::new(0.25, 0.25, 0.25, 0.25).unwrap());
        assert_eq!((t.a_bar, t.b_bar, t.ab_bar), (0.0, 0.0, 0.0));
    }

    #[test]
    fn distribution_validation() {
        assert!(JointOutcomeDistribution::new(0.5, 0.5, 0.5, 0.0).is_err());
        assert!(JointOutcomeDistribution::new(1.1, -0.1, 0.0, 0.0).is_err());
        assert!(JointOutcomeDistribution::new(f64::NAN, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn complex_phase_state() {
        // (u u + i v v)/sqrt 2: relative phase kills the sin2α sin2β interference.
        let h = FRAC_1_SQRT_2;
        let st = PureTwoPhotonState::new([
            [Complex64::new(h, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(0.0, h)],
        ])
        .unwrap();
        let (a, b) = (0.3, 1.1);
        let d = joint_distribution(&st, settings(a, b));
        let want = 0.5 * (a.cos() * b.cos()).powi(2) + 0.5 * (a.sin() * b.sin()).powi(2);
        assert!((d.p_pp - want).abs() < 1e-12);
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodicity_in_pi() {
        let st = paper(0.37);
        let base = joint_distribution(&st, settings(0.4, 1.2));
        for (da, db) in [(PI, 0.0), (0.0, PI), (2.0 * PI, -2.0 * PI), (-PI, PI)] {
            let d = joint_distribution(&st, settings(0.4 + da, 1.2 + db));
            for (x, y) in d.as_array().iter().zip(base.as_array()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
