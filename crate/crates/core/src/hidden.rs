//! Finite-support realist models at one fixed settings pair.
//!
//! A model assigns every hidden-variable value `λ` (here: an index into the
//! support) a weight `ρ(λ)` and a deterministic pair of outcomes
//! `(A(λ), B(λ)) ∈ {±1}²`. Any integral model's correlation triple is
//! reproduced by a finite one, so nothing is lost by the discretization.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leggett::CorrelationTriple;
use crate::lp::LinearProgram;
use crate::rng;
use crate::PROB_TOL;

/// A single ±1 measurement outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i8", into = "i8")]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub fn value(self) -> f64 {
        match self {
            Outcome::Plus => 1.0,
            Outcome::Minus => -1.0,
        }
    }

    pub fn from_value(x: f64) -> Result<Self> {
        if x == 1.0 {
            Ok(Outcome::Plus)
        } else if x == -1.0 {
            Ok(Outcome::Minus)
        } else {
            Err(Error::OutOfRange {
                name: "outcome",
                value: x,
                constraint: "outcome must be exactly +1 or -1",
            })
        }
    }
}

impl TryFrom<i8> for Outcome {
    type Error = Error;
    fn try_from(v: i8) -> Result<Self> {
        Self::from_value(f64::from(v))
    }
}

impl From<Outcome> for i8 {
    fn from(o: Outcome) -> i8 {
        match o {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidModel("support is empty".into()));
    }
    if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
        return Err(Error::InvalidModel(format!("weight {i} = {w} is not a finite non-negative number")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidModel(format!("weights sum to {total}, not 1")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawModel {
    weights: Vec<f64>,
    responses: Vec<(Outcome, Outcome)>,
}

/// Outcome-independent model: `A = A(a, b; λ)`, `B = B(b, a; λ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel", into = "RawModel")]
pub struct HVModel {
    weights: Vec<f64>,
    responses: Vec<(Outcome, Outcome)>,
}

impl TryFrom<RawModel> for HVModel {
    type Error = Error;
    fn try_from(raw: RawModel) -> Result<Self> {
        Self::new(raw.weights, raw.responses)
    }
}

impl From<HVModel> for RawModel {
    fn from(m: HVModel) -> Self {
        RawModel {
            weights: m.weights,
            responses: m.responses,
        }
    }
}

impl HVModel {
    pub fn new(weights: Vec<f64>, responses: Vec<(Outcome, Outcome)>) -> Result<Self> {
        if weights.len() != responses.len() {
            return Err(Error::InvalidModel(format!(
                "{} weights but {} response pairs",
                weights.len(),
                responses.len()
            )));
        }
        check_weights(&weights)?;
        Ok(Self { weights, responses })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn responses(&self) -> &[(Outcome, Outcome)] {
        &self.responses
    }

    /// `{"weights": [...], "responses": [[a, b], ...]}`; weights are written
    /// in shortest round-trip decimal form.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidModel(e.to_string()))
    }
}

/// `(Σρ A, Σρ B, Σρ AB)`, summed in support order.
pub fn ensemble_averages(model: &HVModel) -> CorrelationTriple {
    let mut t = CorrelationTriple {
        a_bar: 0.0,
        b_bar: 0.0,
        ab_bar: 0.0,
    };
    for (w, (a, b)) in model.weights.iter().zip(&model.responses) {
        let (a, b) = (a.value(), b.value());
        t.a_bar += w * a;
        t.b_bar += w * b;
        t.ab_bar += w * (a * b);
    }
    t
}

/// `(1 − |A − B|, AB, −1 + |A + B|)`, all equal for ±1 inputs.
pub fn pointwise_identity(a: f64, b: f64) -> Result<(f64, f64, f64)> {
    let a = Outcome::from_value(a)?.value();
    let b = Outcome::from_value(b)?.value();
    Ok((1.0 - (a - b).abs(), a * b, -1.0 + (a + b).abs()))
}

/// The pointwise identity averaged over a model, together with the two
/// sides of `Σρ|A−B| ≥ |Σρ(A−B)|` and `Σρ|A+B| ≥ |Σρ(A+B)|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedIdentity {
    pub one_minus_mean_abs_diff: f64,
    pub mean_product: f64,
    pub mean_abs_sum_minus_one: f64,
    pub mean_abs_diff: f64,
    pub abs_mean_diff: f64,
    pub mean_abs_sum: f64,
    pub abs_mean_sum: f64,
}

pub fn averaged_identity(model: &HVModel) -> AveragedIdentity {
    let (mut abs_diff, mut diff, mut abs_sum, mut sum, mut prod) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (w, (a, b)) in model.weights.iter().zip(&model.responses) {
        let (a, b) = (a.value(), b.value());
        abs_diff += w * (a - b).abs();
        diff += w * (a - b);
        abs_sum += w * (a + b).abs();
        sum += w * (a + b);
        prod += w * (a * b);
    }
    AveragedIdentity {
        one_minus_mean_abs_diff: 1.0 - abs_diff,
        mean_product: prod,
        mean_abs_sum_minus_one: -1.0 + abs_sum,
        mean_abs_diff: abs_diff,
        abs_mean_diff: diff.abs(),
        mean_abs_sum: abs_sum,
        abs_mean_sum: sum.abs(),
    }
}

/// `B` as a function of the earlier outcome `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseToA {
    pub on_plus: Outcome,
    pub on_minus: Outcome,
}

impl ResponseToA {
    pub fn apply(self, a: Outcome) -> Outcome {
        match a {
            Outcome::Plus => self.on_plus,
            Outcome::Minus => self.on_minus,
        }
    }
}

/// Time-ordered model: `A = A(a, b; λ)` first, then `B = B(a, b; λ, A)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialHVModel {
    weights: Vec<f64>,
    a: Vec<Outcome>,
    b_given_a: Vec<ResponseToA>,
}

impl SequentialHVModel {
    pub fn new(weights: Vec<f64>, a: Vec<Outcome>, b_given_a: Vec<ResponseToA>) -> Result<Self> {
        if weights.len() != a.len() || weights.len() != b_given_a.len() {
            return Err(Error::InvalidModel("support lengths disagree".into()));
        }
        check_weights(&weights)?;
        Ok(Self { weights, a, b_given_a })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Averages with `B` evaluated on the realized `A`, in support order.
    pub fn ensemble_averages(&self) -> CorrelationTriple {
        let mut t = CorrelationTriple {
            a_bar: 0.0,
            b_bar: 0.0,
            ab_bar: 0.0,
        };
        for ((w, &a), resp) in self.weights.iter().zip(&self.a).zip(&self.b_given_a) {
            let b = resp.apply(a).value();
            let a = a.value();
            t.a_bar += w * a;
            t.b_bar += w * b;
            t.ab_bar += w * (a * b);
        }
        t
    }
}

/// Substitutes `A(λ)` into `B(λ, A)`, giving an outcome-independent model on
/// the same support and weights.
pub fn collapse_sequential(model: &SequentialHVModel) -> HVModel {
    let responses = model
        .a
        .iter()
        .zip(&model.b_given_a)
        .map(|(&a, resp)| (a, resp.apply(a)))
        .collect();
    HVModel {
        weights: model.weights.clone(),
        responses,
    }
}

fn check_marginal(name: &'static str, x: f64) -> Result<f64> {
    crate::error::finite(name, x)?;
    if x.abs() > 1.0 {
        return Err(Error::OutOfRange {
            name,
            value: x,
            constraint: "-1 <= x <= 1",
        });
    }
    Ok(x)
}

/// Attainable range of `ĀB̄` over all four-outcome distributions with the
/// given `Ā` and `B̄`, by exact linear programming.
pub fn frechet_range(a_bar: f64, b_bar: f64) -> Result<(f64, f64)> {
    let pa = (1.0 + check_marginal("a_bar", a_bar)?) / 2.0;
    let pb = (1.0 + check_marginal("b_bar", b_bar)?) / 2.0;
    // variables: p_pp, p_pm, p_mp, p_mm
    let lp = LinearProgram::new(
        vec![
            vec![1.0, 1.0, 1.0, 1.0],
            vec![1.0, 1.0, 0.0, 0.0],
            vec![1.0, 0.0, 1.0, 0.0],
        ],
        vec![1.0, pa, pb],
    )?;
    let corr = [1.0, -1.0, -1.0, 1.0];
    let lo = lp.minimize(&corr)?.value;
    let hi = lp.maximize(&corr)?.value;
    Ok((lo, hi))
}

/// Same range by brute force: walks `P_{++}` over a grid of the given step
/// on `[0, 1]`, fills the other three entries from the marginals and keeps
/// the non-negative ones.
pub fn frechet_range_enumerated(a_bar: f64, b_bar: f64, step: f64) -> Result<(f64, f64)> {
    let pa = (1.0 + check_marginal("a_bar", a_bar)?) / 2.0;
    let pb = (1.0 + check_marginal("b_bar", b_bar)?) / 2.0;
    if !(step > 0.0 && step <= 1.0) {
        return Err(Error::Invalid(format!("enumeration step {step} not in (0, 1]")));
    }
    let n = (1.0 / step).round() as u64;
    let mut range: Option<(f64, f64)> = None;
    for k in 0..=n {
        let pp = k as f64 * step;
        let pm = pa - pp;
        let mp = pb - pp;
        let mm = 1.0 - pp - pm - mp;
        if [pm, mp, mm].iter().any(|&p| p < -PROB_TOL) {
            continue;
        }
        let ab = pp - pm - mp + mm;
        range = Some(match range {
            None => (ab, ab),
            Some((lo, hi)) => (lo.min(ab), hi.max(ab)),
        });
    }
    range.ok_or_else(|| Error::Invalid(format!("no grid point of step {step} matches marginals ({a_bar}, {b_bar})")))
}

/// Reproducible random model with `label_count` atoms.
///
/// A model-level stream picks a distribution over the four outcome pairs;
/// each atom then draws its weight (exponential, later normalized) and its
/// outcome pair from its own stream `(seed, index + 1)`.
pub fn random_model(label_count: usize, seed: u64) -> Result<HVModel> {
    if label_count < 1 {
        return Err(Error::InvalidModel("label_count must be at least 1".into()));
    }
    let mut model_rng = rng::stream(seed, 0);
    let mut pair_cdf = [0.0; 4];
    let mut acc = 0.0;
    for slot in pair_cdf.iter_mut() {
        // squaring skews the mixture so that near-deterministic models are common
        acc += rng::uniform(&mut model_rng).powi(2) + 1e-3;
        *slot = acc;
    }
    const PAIRS: [(Outcome, Outcome); 4] = [
        (Outcome::Plus, Outcome::Plus),
        (Outcome::Plus, Outcome::Minus),
        (Outcome::Minus, Outcome::Plus),
        (Outcome::Minus, Outcome::Minus),
    ];
    let mut raw = Vec::with_capacity(label_count);
    let mut responses = Vec::with_capacity(label_count);
    for i in 0..label_count {
        let mut r = rng::stream(seed, i as u64 + 1);
        raw.push(-(1.0 - rng::uniform(&mut r)).ln());
        let u = rng::uniform(&mut r) * acc;
        let idx = pair_cdf.iter().position(|&c| u < c).unwrap_or(3);
        responses.push(PAIRS[idx]);
    }
    let total: f64 = raw.iter().sum();
    let weights = if total > 0.0 {
        raw.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / label_count as f64; label_count]
    };
    HVModel::new(weights, responses)
}

/// Reproducible random time-ordered model, drawn like [`random_model`]:
/// each atom gets an exponential weight, an outcome `A` and a response
/// table `B(A)` from stream `(seed, index + 1)`.
pub fn random_sequential_model(label_count: usize, seed: u64) -> Result<SequentialHVModel> {
    if label_count < 1 {
        return Err(Error::InvalidModel("label_count must be at least 1".into()));
    }
    let bit = |r: &mut rng::StreamRng| {
        if rng::uniform(r) < 0.5 {
            Outcome::Plus
        } else {
            Outcome::Minus
        }
    };
    let mut raw = Vec::with_capacity(label_count);
    let mut a = Vec::with_capacity(label_count);
    let mut b_given_a = Vec::with_capacity(label_count);
    for i in 0..label_count {
        let mut r = rng::stream(seed, i as u64 + 1);
        raw.push(-(1.0 - rng::uniform(&mut r)).ln());
        a.push(bit(&mut r));
        b_given_a.push(ResponseToA {
            on_plus: bit(&mut r),
            on_minus: bit(&mut r),
        });
    }
    let total: f64 = raw.iter().sum();
    let weights = raw.iter().map(|w| w / total).collect();
    SequentialHVModel::new(weights, a, b_given_a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use Outcome::{Minus, Plus};

    #[test]
    fn averages_examples() {
        let m = HVModel::new(vec![1.0], vec![(Plus, Plus)]).unwrap();
        assert_eq!(ensemble_averages(&m).as_array(), [1.0, 1.0, 1.0]);
        let m = HVModel::new(vec![0.5, 0.5], vec![(Plus, Minus), (Minus, Plus)]).unwrap();
        assert_eq!(ensemble_averages(&m).as_array(), [0.0, 0.0, -1.0]);
        let m = HVModel::new(
            vec![0.25; 4],
            vec![(Plus, Plus), (Plus, Minus), (Minus, Plus), (Minus, Minus)],
        )
        .unwrap();
        assert_eq!(ensemble_averages(&m).as_array(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn model_validation() {
        assert!(HVModel::new(vec![], vec![]).is_err());
        assert!(HVModel::new(vec![0.5, 0.6], vec![(Plus, Plus); 2]).is_err());
        assert!(HVModel::new(vec![1.5, -0.5], vec![(Plus, Plus); 2]).is_err());
        assert!(HVModel::new(vec![1.0], vec![(Plus, Plus); 2]).is_err());
        assert!(HVModel::new(vec![f64::NAN], vec![(Plus, Plus)]).is_err());
    }

    #[test]
    fn pointwise_examples() {
        assert_eq!(pointwise_identity(1.0, 1.0).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(pointwise_identity(1.0, -1.0).unwrap(), (-1.0, -1.0, -1.0));
        assert_eq!(pointwise_identity(-1.0, -1.0).unwrap(), (1.0, 1.0, 1.0));
        assert_eq!(pointwise_identity(-1.0, 1.0).unwrap(), (-1.0, -1.0, -1.0));
        assert!(pointwise_identity(0.0, 1.0).is_err());
        assert!(pointwise_identity(1.0, 0.999).is_err());
    }

    #[test]
    fn collapse_examples() {
        let copy = ResponseToA {
            on_plus: Plus,
            on_minus: Minus,
        };
        let s = SequentialHVModel::new(vec![0.3, 0.7], vec![Plus, Minus], vec![copy; 2]).unwrap();
        let c = collapse_sequential(&s);
        assert!(c.responses().iter().all(|(a, b)| a == b));

        let constant = ResponseToA {
            on_plus: Plus,
            on_minus: Plus,
        };
        let s = SequentialHVModel::new(vec![0.3, 0.7], vec![Plus, Minus], vec![constant; 2]).unwrap();
        let c = collapse_sequential(&s);
        assert!(c.responses().iter().all(|&(_, b)| b == Plus));
        assert_eq!(c.weights(), s.weights());
    }

    #[test]
    fn collapse_preserves_averages_of_random_model() {
        let s = random_sequential_model(50, 3).unwrap();
        let c = collapse_sequential(&s);
        assert_eq!(ensemble_averages(&c), s.ensemble_averages());
        assert_eq!(c.len(), 50);
    }

    #[test]
    fn frechet_examples() {
        let close = |x: (f64, f64), y: (f64, f64)| (x.0 - y.0).abs() < 1e-9 && (x.1 - y.1).abs() < 1e-9;
        assert!(close(frechet_range(0.0, 0.0).unwrap(), (-1.0, 1.0)));
        assert!(close(frechet_range(1.0, 0.0).unwrap(), (0.0, 0.0)));
        assert!(close(frechet_range(0.6, 0.2).unwrap(), (-0.2, 0.6)));
        assert!(frechet_range(1.2, 0.0).is_err());
        assert!(frechet_range(0.0, f64::NAN).is_err());
    }

    #[test]
    fn frechet_enumeration_agrees_to_grid_resolution() {
        for &(a, b) in &[(0.0, 0.0), (1.0, 0.0), (0.6, 0.2), (-0.35, 0.8)] {
            let (lo, hi) = frechet_range(a, b).unwrap();
            let (elo, ehi) = frechet_range_enumerated(a, b, 1e-3).unwrap();
            assert!((lo - elo).abs() <= 4e-3 && (hi - ehi).abs() <= 4e-3);
        }
        assert!(frechet_range_enumerated(0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn random_model_contract() {
        let m = random_model(1, 99).unwrap();
        assert_eq!(m.weights(), &[1.0]);
        assert_eq!(random_model(4, 7).unwrap(), random_model(4, 7).unwrap());
        assert_ne!(random_model(4, 7).unwrap(), random_model(4, 8).unwrap());
        let m = random_model(1000, 1).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(random_model(0, 1).is_err());
    }

    #[test]
    fn json_schema_shape() {
        let m = HVModel::new(vec![0.25, 0.75], vec![(Plus, Minus), (Minus, Minus)]).unwrap();
        let s = m.to_json();
        assert_eq!(s, r#"{"weights":[0.25,0.75],"responses":[[1,-1],[-1,-1]]}"#);
        assert_eq!(HVModel::from_json(&s).unwrap(), m);
        assert!(HVModel::from_json(r#"{"weights":[1.0],"responses":[[1,0]]}"#).is_err());
        assert!(HVModel::from_json(r#"{"weights":[0.5],"responses":[[1,1]]}"#).is_err());
    }
}
