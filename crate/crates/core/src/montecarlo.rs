//! Event-level sampling of joint outcome records.
//!
//! Events are generated in fixed blocks of [`BLOCK_EVENTS`]; block `i` draws
//! from stream `(seed, i)`. Blocks are independent work units for the rayon
//! pool and their counts are merged by summation, so the result is
//! bit-identical for any number of worker threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hidden::{HVModel, Outcome};
use crate::leggett::CorrelationTriple;
use crate::quantum::JointOutcomeDistribution;
use crate::rng;

pub const BLOCK_EVENTS: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleCounts {
    pub n_pp: u64,
    pub n_pm: u64,
    pub n_mp: u64,
    pub n_mm: u64,
    pub n_total: u64,
}

impl SampleCounts {
    pub fn new(n_pp: u64, n_pm: u64, n_mp: u64, n_mm: u64) -> Self {
        Self {
            n_pp,
            n_pm,
            n_mp,
            n_mm,
            n_total: n_pp + n_pm + n_mp + n_mm,
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            n_pp: self.n_pp + o.n_pp,
            n_pm: self.n_pm + o.n_pm,
            n_mp: self.n_mp + o.n_mp,
            n_mm: self.n_mm + o.n_mm,
            n_total: self.n_total + o.n_total,
        }
    }

    fn record(&mut self, a: Outcome, b: Outcome) {
        match (a, b) {
            (Outcome::Plus, Outcome::Plus) => self.n_pp += 1,
            (Outcome::Plus, Outcome::Minus) => self.n_pm += 1,
            (Outcome::Minus, Outcome::Plus) => self.n_mp += 1,
            (Outcome::Minus, Outcome::Minus) => self.n_mm += 1,
        }
        self.n_total += 1;
    }
}

/// Plug-in estimate of the correlation triple with Wald standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub triple_hat: CorrelationTriple,
    /// Standard errors of `(Ā, B̄, ĀB̄)`: `sqrt((1 − x̂²)/n)` for a ±1 mean.
    pub std_errors: [f64; 3],
    pub n: u64,
    pub seed: Option<u64>,
}

impl MCEstimate {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// `(x̂ − x)/se` per component. A zero standard error gives `Some(0)`
    /// on exact agreement and `None` otherwise.
    pub fn z_scores(&self, truth: &CorrelationTriple) -> [Option<f64>; 3] {
        let est = self.triple_hat.as_array();
        let want = truth.as_array();
        std::array::from_fn(|i| {
            let d = est[i] - want[i];
            if self.std_errors[i] > 0.0 {
                Some(d / self.std_errors[i])
            } else if d.abs() <= 1e-12 {
                Some(0.0)
            } else {
                None
            }
        })
    }

    /// Every component within `k` standard errors of `truth`.
    pub fn within(&self, truth: &CorrelationTriple, k: f64) -> [bool; 3] {
        self.z_scores(truth).map(|z| z.is_some_and(|z| z.abs() <= k))
    }
}

fn check_n(n: u64) -> Result<()> {
    if n < 1 {
        return Err(Error::OutOfRange {
            name: "n",
            value: n as f64,
            constraint: "n >= 1",
        });
    }
    Ok(())
}

fn run_blocks<F>(n: u64, seed: u64, draw: F) -> SampleCounts
where
    F: Fn(&mut rng::StreamRng) -> (Outcome, Outcome) + Sync,
{
    let blocks = n.div_ceil(BLOCK_EVENTS);
    (0..blocks)
        .into_par_iter()
        .map(|block| {
            let mut r = rng::stream(seed, block);
            let len = BLOCK_EVENTS.min(n - block * BLOCK_EVENTS);
            let mut c = SampleCounts::default();
            for _ in 0..len {
                let (a, b) = draw(&mut r);
                c.record(a, b);
            }
            c
        })
        .reduce(SampleCounts::default, SampleCounts::merge)
}

/// Draws `n` outcome pairs from a joint distribution.
pub fn sample_pairs(dist: &JointOutcomeDistribution, n: u64, seed: u64) -> Result<SampleCounts> {
    check_n(n)?;
    let p = dist.as_array().map(|x| x.max(0.0));
    let t0 = p[0];
    let t1 = t0 + p[1];
    let t2 = t1 + p[2];
    let total = t2 + p[3];
    Ok(run_blocks(n, seed, |r| {
        let u = rng::uniform(r) * total;
        if u < t0 {
            (Outcome::Plus, Outcome::Plus)
        } else if u < t1 {
            (Outcome::Plus, Outcome::Minus)
        } else if u < t2 {
            (Outcome::Minus, Outcome::Plus)
        } else {
            (Outcome::Minus, Outcome::Minus)
        }
    }))
}

/// Draws `λ` by weight `n` times and records the model's deterministic pair.
pub fn simulate_hv(model: &HVModel, n: u64, seed: u64) -> Result<SampleCounts> {
    check_n(n)?;
    let mut cdf = Vec::with_capacity(model.len());
    let mut acc = 0.0;
    for w in model.weights() {
        acc += w;
        cdf.push(acc);
    }
    let last = model.len() - 1;
    let responses = model.responses();
    Ok(run_blocks(n, seed, |r| {
        let u = rng::uniform(r) * acc;
        let idx = cdf.partition_point(|&c| c <= u).min(last);
        responses[idx]
    }))
}

pub fn estimate(counts: &SampleCounts) -> Result<MCEstimate> {
    let sum = counts.n_pp + counts.n_pm + counts.n_mp + counts.n_mm;
    if counts.n_total == 0 || sum != counts.n_total {
        return Err(Error::Invalid(format!(
            "counts must be non-empty and sum to n_total (sum {sum}, n_total {})",
            counts.n_total
        )));
    }
    let n = counts.n_total as f64;
    let (pp, pm, mp, mm) = (
        counts.n_pp as f64,
        counts.n_pm as f64,
        counts.n_mp as f64,
        counts.n_mm as f64,
    );
    let triple_hat = CorrelationTriple {
        a_bar: (pp + pm - mp - mm) / n,
        b_bar: (pp + mp - pm - mm) / n,
        ab_bar: (pp - pm - mp + mm) / n,
    };
    let se = |x: f64| ((1.0 - x * x).max(0.0) / n).sqrt();
    Ok(MCEstimate {
        triple_hat,
        std_errors: [se(triple_hat.a_bar), se(triple_hat.b_bar), se(triple_hat.ab_bar)],
        n: counts.n_total,
        seed: None,
    })
}
