use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use leggett_core::hidden::{
    averaged_identity, collapse_sequential, ensemble_averages, frechet_range, pointwise_identity, random_model,
    random_sequential_model, HVModel,
};
use leggett_core::leggett::{
    cross_term_identity, expansion_audit, halving_ladder, leggett_bounds, probability_form_lhs, reduced_lhs_exact,
    CorrelationTriple, ExpansionAudit, LeggettBounds,
};
use leggett_core::montecarlo::{estimate, sample_pairs, simulate_hv, MCEstimate, SampleCounts};
use leggett_core::quantum::{
    closed_form, correlation_triple, joint_distribution, marginals, JointOutcomeDistribution, MeasurementSettings,
    PaperStateParam, PureTwoPhotonState,
};
use leggett_core::rng;
use leggett_core::scan::{self, AngleDomain, GridAxis, ScanReport, ScanSpec, StateFamily};

use crate::report::ReportEnvelope;
use crate::{AngleUnit, Outcome, UsageError};

type CmdResult = anyhow::Result<(ReportEnvelope, Outcome)>;

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn core<T>(r: leggett_core::Result<T>) -> anyhow::Result<T> {
    r.map_err(|e| UsageError::from(e).into())
}

#[derive(Debug, Serialize)]
struct PointInputs {
    c: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvalArgs {
    /// State coefficient c in sqrt(1-c^2) uu + c vv (1 ≥ c ≥ 0).
    #[arg(long)]
    c: f64,
    /// Analyzer angle at A, from û.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Analyzer angle at B, from û.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    #[command(flatten)]
    unit: AngleUnit,
}

#[derive(Debug, Serialize)]
struct Marginals {
    p_a_plus: f64,
    p_b_plus: f64,
}

#[derive(Debug, Serialize)]
struct ClosedForm {
    p_a_plus: f64,
    p_b_plus: f64,
    p_pp: f64,
    p_mm: f64,
}

#[derive(Debug, Serialize)]
struct CrossTerm {
    lhs: f64,
    rhs: f64,
}

#[derive(Debug, Serialize)]
struct EvalResults {
    state: PureTwoPhotonState,
    marginals: Marginals,
    joint: JointOutcomeDistribution,
    closed_form: ClosedForm,
    triple: CorrelationTriple,
    bounds: LeggettBounds,
    /// Closed-form reduced left-hand side.
    s: f64,
    s_probability_form: f64,
    cross_term: CrossTerm,
    s_within_bound: bool,
}

fn settings_from(alpha: f64, beta: f64, unit: AngleUnit) -> anyhow::Result<MeasurementSettings> {
    core(MeasurementSettings::new(unit.to_radians(alpha), unit.to_radians(beta)))
}

pub fn eval(a: &EvalArgs) -> CmdResult {
    let c = core(PaperStateParam::new(a.c))?;
    let settings = settings_from(a.alpha, a.beta, a.unit)?;
    let state = PureTwoPhotonState::paper(c);
    let joint = joint_distribution(&state, settings);
    let (pa, pb) = marginals(&state, settings);
    let triple = correlation_triple(&joint);
    let bounds = core(leggett_bounds(&triple))?;
    let s = core(reduced_lhs_exact(a.c, settings))?;
    let (lhs, rhs) = core(cross_term_identity(a.c, settings))?;
    let (al, be) = (settings.alpha, settings.beta);
    let results = EvalResults {
        state,
        marginals: Marginals {
            p_a_plus: pa,
            p_b_plus: pb,
        },
        joint,
        closed_form: ClosedForm {
            p_a_plus: closed_form::p_a_plus(a.c, al),
            p_b_plus: closed_form::p_b_plus(a.c, be),
            p_pp: closed_form::p_pp(a.c, al, be),
            p_mm: closed_form::p_mm(a.c, al, be),
        },
        triple,
        bounds,
        s,
        s_probability_form: probability_form_lhs(&state, settings),
        cross_term: CrossTerm { lhs, rhs },
        s_within_bound: s <= 1.0 + leggett_core::PROB_TOL,
    };
    let inputs = PointInputs {
        c: a.c,
        alpha: al,
        beta: be,
    };
    Ok((ReportEnvelope::new("eval", None, &inputs, &results)?, Outcome::Ok))
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ScanArgs {
    /// paper-state, singlet, positive-parity or fixed-matrix.
    #[arg(long, default_value = "paper-state")]
    family: String,
    /// Row-major c_uu, c_uv, c_vu, c_vv as eight comma-separated re,im values
    /// (fixed-matrix family only).
    #[arg(long, value_delimiter = ',')]
    coeffs: Option<Vec<f64>>,
    /// Grid step for angles and, unless --c-step is given, for c.
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    /// Step of the c axis.
    #[arg(long)]
    c_step: Option<f64>,
    /// Lower end of the c axis.
    #[arg(long, default_value_t = 0.0)]
    c_min: f64,
    /// Upper end of the c axis.
    #[arg(long, default_value_t = 0.7)]
    c_max: f64,
    /// Defaults to 0.
    #[arg(long)]
    alpha_min: Option<f64>,
    /// Defaults to π (180 with --degrees).
    #[arg(long)]
    alpha_max: Option<f64>,
    /// Defaults to 0.
    #[arg(long)]
    beta_min: Option<f64>,
    /// Defaults to π (180 with --degrees).
    #[arg(long)]
    beta_max: Option<f64>,
    /// Scan along α = √ε, β = π/2 − √ε instead of the α × β grid.
    #[arg(long)]
    eps_preset: bool,
    /// ε range, used by --eps-preset and by the first-order check of
    /// paper-state grid scans.
    #[arg(long, default_value_t = 1e-3)]
    eps_min: f64,
    #[arg(long, default_value_t = 1e-2)]
    eps_max: f64,
    #[arg(long, default_value_t = 1e-3)]
    eps_step: f64,
    /// Refine the best grid cells with a local derivative-free search.
    #[arg(long)]
    refine: bool,
    /// Amount above 1 that counts as a violation.
    #[arg(long, default_value_t = scan::DEFAULT_TOLERANCE)]
    tolerance: f64,
    /// Refinement stops once a sweep moves no coordinate further than this.
    #[arg(long, default_value_t = scan::DEFAULT_REFINE_TOLERANCE)]
    refine_tolerance: f64,
    /// Number of top grid cells handed to the refinement.
    #[arg(long, default_value_t = scan::DEFAULT_REFINE_CANDIDATES)]
    candidates: usize,
    /// Also write every grid point as `c,alpha,beta,S` rows.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    unit: AngleUnit,
}

#[derive(Debug, Serialize)]
struct ScanResults {
    #[serde(flatten)]
    report: ScanReport,
    violation_found: bool,
    csv: Option<PathBuf>,
}

fn parse_family(a: &ScanArgs) -> anyhow::Result<StateFamily> {
    if a.family == "fixed-matrix" {
        let v = a
            .coeffs
            .as_ref()
            .ok_or_else(|| usage("--family fixed-matrix requires --coeffs"))?;
        if v.len() != 8 {
            return Err(usage(format!("--coeffs needs 8 numbers, got {}", v.len())));
        }
        let raw = [[[v[0], v[1]], [v[2], v[3]]], [[v[4], v[5]], [v[6], v[7]]]];
        let state: PureTwoPhotonState = core(raw.try_into())?;
        return Ok(StateFamily::FixedMatrix(state));
    }
    if a.coeffs.is_some() {
        return Err(usage("--coeffs only applies to --family fixed-matrix"));
    }
    core(scan::parse_family(&a.family))
}

fn axis(name: &str, lo: f64, hi: f64, step: f64) -> anyhow::Result<GridAxis> {
    GridAxis::new(lo, hi, step).map_err(|e| usage(format!("{name}: {e}")))
}

fn scan_spec(a: &ScanArgs) -> anyhow::Result<ScanSpec> {
    let family = parse_family(a)?;
    let r = |x: f64| a.unit.to_radians(x);
    let full = if a.unit.degrees { 180.0 } else { PI };
    let step = r(a.step);
    let c_range = if matches!(family, StateFamily::PaperState) {
        axis("c range", a.c_min, a.c_max, a.c_step.unwrap_or(a.step))?
    } else {
        GridAxis::point(0.0)
    };
    let eps = axis("eps range", a.eps_min, a.eps_max, a.eps_step)?;
    let angles = if a.eps_preset {
        AngleDomain::EpsPreset { eps }
    } else {
        AngleDomain::Grid {
            alpha: axis(
                "alpha range",
                r(a.alpha_min.unwrap_or(0.0)),
                r(a.alpha_max.unwrap_or(full)),
                step,
            )?,
            beta: axis(
                "beta range",
                r(a.beta_min.unwrap_or(0.0)),
                r(a.beta_max.unwrap_or(full)),
                step,
            )?,
        }
    };
    let mut spec = match angles {
        AngleDomain::Grid { alpha, beta } if matches!(family, StateFamily::PaperState) => {
            ScanSpec::paper_grid(c_range, alpha, beta).with_eq20_eps(eps)
        }
        AngleDomain::Grid { alpha, beta } => ScanSpec::family_grid(family, alpha, beta),
        AngleDomain::EpsPreset { eps } => ScanSpec::eps_preset(family, c_range, eps),
    };
    spec = spec.with_refine(a.refine).with_tolerance(a.tolerance);
    spec.refine_tolerance = a.refine_tolerance;
    spec.refine_candidates = a.candidates.max(1);
    core(spec.validate())?;
    Ok(spec)
}

pub fn scan(a: &ScanArgs) -> CmdResult {
    let spec = scan_spec(a)?;
    let report = core(scan::run(&spec))?;
    if let Some(path) = &a.csv {
        let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
        scan::write_csv(&spec, std::io::BufWriter::new(file)).context("writing csv")?;
    }
    let violation_found = report.violation_count > 0;
    let results = ScanResults {
        report,
        violation_found,
        csv: a.csv.clone(),
    };
    let outcome = if violation_found { Outcome::Violation } else { Outcome::Ok };
    Ok((ReportEnvelope::new("scan", None, &spec, &results)?, outcome))
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct McArgs {
    /// State parameter of the quantum source.
    #[arg(long, default_value_t = 0.0)]
    c: f64,
    /// Analyzer angle at A.
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    /// Analyzer angle at B.
    #[arg(long, default_value_t = 0.0)]
    beta: f64,
    /// Number of simulated pairs.
    #[arg(long, default_value_t = 1_000_000)]
    n: i64,
    /// Base seed; the same seed gives the same record for any thread count.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Sample a hidden-variable model (JSON) instead of the quantum state.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    unit: AngleUnit,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
enum McSource {
    Quantum { c: f64, alpha: f64, beta: f64 },
    HiddenVariables { model: HVModel },
}

#[derive(Debug, Serialize)]
struct McInputs {
    source: McSource,
    n: u64,
    seed: u64,
}

#[derive(Debug, Serialize)]
struct McResults {
    counts: SampleCounts,
    estimate: MCEstimate,
    analytic: CorrelationTriple,
    z_scores: [Option<f64>; 3],
    within_4_sigma: [bool; 3],
    bounds_on_estimate: LeggettBounds,
}

pub fn mc(a: &McArgs) -> CmdResult {
    let n = u64::try_from(a.n)
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| usage(format!("--n must be >= 1, got {}", a.n)))?;
    let (source, counts, analytic) = match &a.model {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let model = core(HVModel::from_json(&text))?;
            let counts = core(simulate_hv(&model, n, a.seed))?;
            let analytic = ensemble_averages(&model);
            (McSource::HiddenVariables { model }, counts, analytic)
        }
        None => {
            let c = core(PaperStateParam::new(a.c))?;
            let settings = settings_from(a.alpha, a.beta, a.unit)?;
            let dist = joint_distribution(&PureTwoPhotonState::paper(c), settings);
            let counts = core(sample_pairs(&dist, n, a.seed))?;
            let source = McSource::Quantum {
                c: a.c,
                alpha: settings.alpha,
                beta: settings.beta,
            };
            (source, counts, correlation_triple(&dist))
        }
    };
    let est = core(estimate(&counts))?.with_seed(a.seed);
    let results = McResults {
        counts,
        estimate: est,
        analytic,
        z_scores: est.z_scores(&analytic),
        within_4_sigma: est.within(&analytic, 4.0),
        bounds_on_estimate: core(leggett_bounds(&est.triple_hat))?,
    };
    let inputs = McInputs {
        source,
        n,
        seed: a.seed,
    };
    Ok((ReportEnvelope::new("mc", Some(a.seed), &inputs, &results)?, Outcome::Ok))
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct HvArgs {
    /// Number of random models.
    #[arg(long, default_value_t = 10_000)]
    models: i64,
    /// Support size of every model.
    #[arg(long, default_value_t = 100)]
    labels: i64,
    /// Base seed; model i is drawn from stream i of this seed.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Side of the (Ā, B̄) grid for the Fréchet check; 0 skips it.
    #[arg(long, default_value_t = 101)]
    frechet_grid: usize,
}

#[derive(Debug, Serialize)]
struct HvInputs {
    models: u64,
    labels: u64,
    seed: u64,
    frechet_grid: usize,
}

#[derive(Debug, Serialize)]
struct PointwiseRow {
    a: f64,
    b: f64,
    left: f64,
    mid: f64,
    right: f64,
}

#[derive(Debug, Serialize)]
struct FrechetSummary {
    grid: usize,
    points: usize,
    max_abs_deviation: f64,
    within_1e_9: bool,
}

#[derive(Debug, Serialize)]
struct HvResults {
    /// Largest amount by which any model's `ĀB̄` passes a bound; negative
    /// means every model sits strictly inside.
    max_overshoot: f64,
    violating_models: u64,
    /// Largest deviation in `1 − Σρ|A−B| = ĀB̄ = −1 + Σρ|A+B|`.
    max_identity_deviation: f64,
    triangle_inequality_holds: bool,
    collapse_checked: u64,
    collapse_mismatches: u64,
    pointwise_identity: Vec<PointwiseRow>,
    first_model_triple: CorrelationTriple,
    frechet: Option<FrechetSummary>,
}

struct ModelCheck {
    triple: CorrelationTriple,
    overshoot: f64,
    identity_dev: f64,
    triangle_ok: bool,
    collapse_ok: bool,
}

pub fn hv(a: &HvArgs) -> CmdResult {
    let models = u64::try_from(a.models)
        .ok()
        .filter(|&m| m >= 1)
        .ok_or_else(|| usage(format!("--models must be >= 1, got {}", a.models)))?;
    let labels = usize::try_from(a.labels)
        .ok()
        .filter(|&l| l >= 1)
        .ok_or_else(|| usage(format!("--labels must be >= 1, got {}", a.labels)))?;
    let checks: Vec<ModelCheck> = (0..models)
        .into_par_iter()
        .map(|i| -> anyhow::Result<ModelCheck> {
            let model_seed = rng::stream(a.seed, i).next_u64();
            let m = core(random_model(labels, model_seed))?;
            let triple = ensemble_averages(&m);
            let b = core(leggett_bounds(&triple))?;
            let id = averaged_identity(&m);
            let identity_dev = (id.one_minus_mean_abs_diff - id.mean_product)
                .abs()
                .max((id.mean_abs_sum_minus_one - id.mean_product).abs());
            let triangle_ok = id.mean_abs_diff >= id.abs_mean_diff - 1e-15 && id.mean_abs_sum >= id.abs_mean_sum - 1e-15;
            let seq = core(random_sequential_model(labels, model_seed))?;
            let collapse_ok = ensemble_averages(&collapse_sequential(&seq)) == seq.ensemble_averages();
            Ok(ModelCheck {
                triple,
                overshoot: -b.margin,
                identity_dev,
                triangle_ok,
                collapse_ok,
            })
        })
        .collect::<anyhow::Result<_>>()?;
    let max_overshoot = checks.iter().map(|c| c.overshoot).fold(f64::NEG_INFINITY, f64::max);
    let violating_models = checks.iter().filter(|c| c.overshoot > leggett_core::PROB_TOL).count() as u64;
    let mut pointwise = Vec::new();
    for (x, y) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
        let (left, mid, right) = core(pointwise_identity(x, y))?;
        pointwise.push(PointwiseRow {
            a: x,
            b: y,
            left,
            mid,
            right,
        });
    }
    let frechet = if a.frechet_grid >= 2 {
        let g = a.frechet_grid;
        let pts: Vec<(f64, f64)> = (0..g)
            .flat_map(|i| (0..g).map(move |j| (i, j)))
            .map(|(i, j)| {
                let x = |k: usize| -1.0 + 2.0 * k as f64 / (g - 1) as f64;
                (x(i), x(j))
            })
            .collect();
        let dev = pts
            .par_iter()
            .map(|&(ab, bb)| {
                let (lo, hi) = frechet_range(ab, bb).expect("grid inside [-1, 1]");
                let upper = 1.0 - (ab - bb).abs();
                let lower = -1.0 + (ab + bb).abs();
                (lo - lower).abs().max((hi - upper).abs())
            })
            .reduce(|| 0.0, f64::max);
        Some(FrechetSummary {
            grid: g,
            points: pts.len(),
            max_abs_deviation: dev,
            within_1e_9: dev <= 1e-9,
        })
    } else {
        None
    };
    let results = HvResults {
        max_overshoot,
        violating_models,
        max_identity_deviation: checks.iter().map(|c| c.identity_dev).fold(0.0, f64::max),
        triangle_inequality_holds: checks.iter().all(|c| c.triangle_ok),
        collapse_checked: models,
        collapse_mismatches: checks.iter().filter(|c| !c.collapse_ok).count() as u64,
        pointwise_identity: pointwise,
        first_model_triple: checks[0].triple,
        frechet,
    };
    let inputs = HvInputs {
        models,
        labels: labels as u64,
        seed: a.seed,
        frechet_grid: a.frechet_grid,
    };
    let outcome = if violating_models > 0 { Outcome::Violation } else { Outcome::Ok };
    Ok((ReportEnvelope::new("hv", Some(a.seed), &inputs, &results)?, outcome))
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
pub struct ExpandArgs {
    /// State parameter c.
    #[arg(long)]
    c: f64,
    /// Explicit ε values (comma-separated, strictly decreasing).
    #[arg(long, value_delimiter = ',', conflicts_with = "eps_ladder")]
    eps: Option<Vec<f64>>,
    /// Halving ladder `MAX:MIN`, e.g. `1e-2:1e-5`.
    #[arg(long, default_value = "1e-2:1e-5")]
    eps_ladder: String,
}

#[derive(Debug, Serialize)]
struct ExpandInputs {
    c: f64,
    eps: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct ExpandResults {
    #[serde(flatten)]
    audit: ExpansionAudit,
    /// Whether `1 > 2c²`, under which the first-order condition is defined.
    first_order_condition_applies: bool,
}

fn parse_ladder(s: &str) -> anyhow::Result<Vec<f64>> {
    let (hi, lo) = s
        .split_once(':')
        .ok_or_else(|| usage(format!("--eps-ladder expects MAX:MIN, got {s:?}")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|e| usage(format!("--eps-ladder: cannot parse {t:?}: {e}")))
    };
    core(halving_ladder(parse(hi)?, parse(lo)?))
}

pub fn expand(a: &ExpandArgs) -> CmdResult {
    core(PaperStateParam::new(a.c))?;
    let eps = match &a.eps {
        Some(v) => v.clone(),
        None => parse_ladder(&a.eps_ladder)?,
    };
    let audit = core(expansion_audit(a.c, &eps))?;
    let results = ExpandResults {
        audit,
        first_order_condition_applies: 2.0 * a.c * a.c < 1.0,
    };
    Ok((
        ReportEnvelope::new("expand", None, &ExpandInputs { c: a.c, eps }, &results)?,
        Outcome::Ok,
    ))
}
