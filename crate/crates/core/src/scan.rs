//! Exhaustive grid scan of the reduced left-hand side `S` over `(c, α, β)`,
//! followed by an optional derivative-free local refinement.
//!
//! The bound is violated at a point iff `S > 1`. The scan records the
//! supremum found, every grid point above `1 + tolerance`, and, for the
//! paper-state family, every `(c, ε)` at which the first-order condition
//! predicts a violation, so the exact and truncated verdicts can be read
//! side by side.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::ops::Range;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::leggett::{eq20_predicate, first_order_lhs, probability_form_lhs, reduced_lhs_unchecked};
use crate::quantum::{joint_distribution, MeasurementSettings, PaperStateParam, PureTwoPhotonState};

/// Default threshold above 1 for declaring a violation.
pub const DEFAULT_TOLERANCE: f64 = 1e-9;
/// Default coordinate width at which refinement stops.
pub const DEFAULT_REFINE_TOLERANCE: f64 = 1e-10;
/// Default number of top grid cells handed to the refinement.
pub const DEFAULT_REFINE_CANDIDATES: usize = 4;
/// At most this many violation points are listed; the count is always exact.
pub const MAX_LISTED_VIOLATIONS: usize = 10_000;

const MAX_SWEEPS: usize = 100;

/// Closed interval `[lo, hi]` sampled at `lo + i·step`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl GridAxis {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let axis = Self { lo, hi, step };
        axis.validate("axis")?;
        Ok(axis)
    }

    /// Degenerate single-point axis.
    pub fn point(x: f64) -> Self {
        Self {
            lo: x,
            hi: x,
            step: 1.0,
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.step.is_finite()) {
            return Err(Error::InvalidScan(format!("{name}: bounds and step must be finite")));
        }
        if self.step <= 0.0 {
            return Err(Error::InvalidScan(format!("{name}: step must be > 0, got {}", self.step)));
        }
        if self.hi < self.lo {
            return Err(Error::InvalidScan(format!(
                "{name}: empty range [{}, {}]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self, i: usize) -> f64 {
        (self.lo + i as f64 * self.step).min(self.hi)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    fn is_point(&self) -> bool {
        self.len() == 1
    }

    /// The two grid cells around `x`, clipped to the axis.
    fn cell(&self, x: f64) -> (f64, f64) {
        ((x - self.step).max(self.lo), (x + self.step).min(self.hi))
    }
}

/// Which pure state is scanned.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "coeffs", rename_all = "kebab-case")]
pub enum StateFamily {
    /// `sqrt(1-c^2) uu + c vv`, parametrized by the scanned `c`.
    PaperState,
    Singlet,
    PositiveParity,
    FixedMatrix(PureTwoPhotonState),
}

impl StateFamily {
    pub fn name(&self) -> &'static str {
        match self {
            StateFamily::PaperState => "paper-state",
            StateFamily::Singlet => "singlet",
            StateFamily::PositiveParity => "positive-parity",
            StateFamily::FixedMatrix(_) => "fixed-matrix",
        }
    }

    fn is_paper(&self) -> bool {
        matches!(self, StateFamily::PaperState)
    }

    fn state_for(&self, c: f64) -> PureTwoPhotonState {
        match self {
            StateFamily::PaperState => {
                PureTwoPhotonState::paper(PaperStateParam::new(c.clamp(0.0, 1.0)).expect("c clamped"))
            }
            StateFamily::Singlet => PureTwoPhotonState::singlet(),
            StateFamily::PositiveParity => PureTwoPhotonState::positive_parity(),
            StateFamily::FixedMatrix(s) => *s,
        }
    }
}

/// Analyzer-angle domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum AngleDomain {
    /// Full `α × β` grid.
    Grid { alpha: GridAxis, beta: GridAxis },
    /// The path `α = √ε`, `β = π/2 − √ε`.
    EpsPreset { eps: GridAxis },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub family: StateFamily,
    pub c_range: GridAxis,
    pub angles: AngleDomain,
    /// `ε` values at which the first-order condition is tabulated. The
    /// ε-preset domain uses its own axis when this is absent.
    pub eq20_eps: Option<GridAxis>,
    pub refine: bool,
    pub tolerance: f64,
    pub refine_tolerance: f64,
    pub refine_candidates: usize,
}

impl ScanSpec {
    fn base(family: StateFamily, c_range: GridAxis, angles: AngleDomain) -> Self {
        Self {
            family,
            c_range,
            angles,
            eq20_eps: None,
            refine: false,
            tolerance: DEFAULT_TOLERANCE,
            refine_tolerance: DEFAULT_REFINE_TOLERANCE,
            refine_candidates: DEFAULT_REFINE_CANDIDATES,
        }
    }

    /// Paper-state family on a `c × α × β` grid.
    pub fn paper_grid(c_range: GridAxis, alpha: GridAxis, beta: GridAxis) -> Self {
        Self::base(StateFamily::PaperState, c_range, AngleDomain::Grid { alpha, beta })
    }

    /// A `c`-free family on an `α × β` grid.
    pub fn family_grid(family: StateFamily, alpha: GridAxis, beta: GridAxis) -> Self {
        Self::base(family, GridAxis::point(0.0), AngleDomain::Grid { alpha, beta })
    }

    /// Any family along the `α = √ε`, `β = π/2 − √ε` path.
    pub fn eps_preset(family: StateFamily, c_range: GridAxis, eps: GridAxis) -> Self {
        Self::base(family, c_range, AngleDomain::EpsPreset { eps })
    }

    pub fn with_refine(mut self, refine: bool) -> Self {
        self.refine = refine;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_eq20_eps(mut self, eps: GridAxis) -> Self {
        self.eq20_eps = Some(eps);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.c_range.validate("c range")?;
        if self.c_range.lo < 0.0 || self.c_range.hi > 1.0 {
            return Err(Error::InvalidScan(format!(
                "c range [{}, {}] must lie within [0, 1]",
                self.c_range.lo, self.c_range.hi
            )));
        }
        if !self.family.is_paper() && !self.c_range.is_point() {
            return Err(Error::InvalidScan(format!(
                "c only parametrizes the paper-state family, not {}",
                self.family.name()
            )));
        }
        match &self.angles {
            AngleDomain::Grid { alpha, beta } => {
                alpha.validate("alpha range")?;
                beta.validate("beta range")?;
            }
            AngleDomain::EpsPreset { eps } => check_eps_axis(eps)?,
        }
        if let Some(eps) = &self.eq20_eps {
            check_eps_axis(eps)?;
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidScan(format!("tolerance must be >= 0, got {}", self.tolerance)));
        }
        if !(self.refine_tolerance > 0.0 && self.refine_tolerance.is_finite()) {
            return Err(Error::InvalidScan("refine tolerance must be > 0".into()));
        }
        Ok(())
    }

    /// Total number of evaluated grid points.
    pub fn grid_points(&self) -> u64 {
        let angles = match &self.angles {
            AngleDomain::Grid { alpha, beta } => alpha.len() as u64 * beta.len() as u64,
            AngleDomain::EpsPreset { eps } => eps.len() as u64,
        };
        self.c_range.len() as u64 * angles
    }

    fn eq20_axis(&self) -> Option<GridAxis> {
        match (&self.eq20_eps, &self.angles) {
            (Some(e), _) => Some(*e),
            (None, AngleDomain::EpsPreset { eps }) => Some(*eps),
            _ => None,
        }
    }
}

fn check_eps_axis(eps: &GridAxis) -> Result<()> {
    eps.validate("eps range")?;
    if eps.lo <= 0.0 {
        return Err(Error::InvalidScan("eps values must be > 0".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

impl ScanPoint {
    /// Larger `S` wins; ties go to the lexicographically smallest `(c, α, β)`.
    fn beats(&self, other: &ScanPoint) -> bool {
        match self.s.total_cmp(&other.s) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.key() < other.key(),
        }
    }

    fn key(&self) -> (f64, f64, f64) {
        (self.c, self.alpha, self.beta)
    }
}

/// A `(c, ε)` pair at which the first-order condition fails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eq20Point {
    pub c: f64,
    pub eps: f64,
    pub s_first_order: f64,
    pub s_exact: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefinementSummary {
    pub candidates_refined: usize,
    pub grid_best: ScanPoint,
    pub refined_best: ScanPoint,
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub family: StateFamily,
    pub max_s: f64,
    pub argmax: ScanPoint,
    pub grid_points: u64,
    pub tolerance: f64,
    pub violation_count: u64,
    /// Points with `S > 1 + tolerance` in canonical `(c, α, β)` order,
    /// truncated to [`MAX_LISTED_VIOLATIONS`].
    pub violations: Vec<ScanPoint>,
    pub eq20_predicted_violations: Vec<Eq20Point>,
    /// No exact violation was found but the first-order condition predicts one.
    pub truncation_discrepancy: bool,
    /// Best grid points of distinct rows, best first; seeds for refinement.
    pub candidates: Vec<ScanPoint>,
    pub refinement: Option<RefinementSummary>,
    pub wall_time_s: f64,
}

impl ScanReport {
    /// Associative merge of two partial reports over disjoint, ordered row
    /// ranges (`self` before `other`).
    fn merge(mut self, other: ScanReport, keep: usize) -> ScanReport {
        if other.argmax.beats(&self.argmax) {
            self.argmax = other.argmax;
            self.max_s = other.max_s;
        }
        self.grid_points += other.grid_points;
        self.violation_count += other.violation_count;
        self.violations.extend(other.violations);
        self.violations.truncate(MAX_LISTED_VIOLATIONS);
        self.candidates.extend(other.candidates);
        sort_candidates(&mut self.candidates);
        self.candidates.truncate(keep);
        self
    }

    /// Everything except wall time, for determinism checks.
    pub fn without_timing(&self) -> ScanReport {
        ScanReport {
            wall_time_s: 0.0,
            ..self.clone()
        }
    }
}

fn sort_candidates(c: &mut [ScanPoint]) {
    c.sort_by(|a, b| {
        if a.beats(b) {
            Ordering::Less
        } else if b.beats(a) {
            Ordering::Greater
        } else {
            Ordering::Equal
        }
    });
}

/// `S` at one point: the closed form for the paper state, the probability
/// form `|P_A − P_B| + P_{++} + P_{−−}` otherwise.
pub fn evaluate_point(family: &StateFamily, c: f64, alpha: f64, beta: f64) -> f64 {
    match family {
        StateFamily::PaperState => reduced_lhs_unchecked(c, (1.0 - c * c).sqrt(), alpha, beta),
        other => probability_form_lhs(&other.state_for(c), MeasurementSettings { alpha, beta }),
    }
}

/// `1 − S` from the off-diagonal probabilities alone: `2 min(P_{+−}, P_{−+})`.
/// Retains full relative precision where `S` is within rounding of 1.
fn gap(family: &StateFamily, c: f64, alpha: f64, beta: f64) -> f64 {
    let d = joint_distribution(&family.state_for(c), MeasurementSettings { alpha, beta });
    2.0 * d.p_pm.min(d.p_mp)
}

struct AngleTable {
    values: Vec<f64>,
    cos2: Vec<f64>,
    sin2: Vec<f64>,
    sin_double: Vec<f64>,
}

impl AngleTable {
    fn new(axis: &GridAxis) -> Self {
        let values = axis.values();
        let mut t = Self {
            cos2: Vec::with_capacity(values.len()),
            sin2: Vec::with_capacity(values.len()),
            sin_double: Vec::with_capacity(values.len()),
            values,
        };
        for &x in &t.values {
            let (s, c) = x.sin_cos();
            t.cos2.push(c * c);
            t.sin2.push(s * s);
            t.sin_double.push((2.0 * x).sin());
        }
        t
    }
}

enum Rows {
    /// One row per `c`, each covering the whole `α × β` grid.
    PaperGrid { c: Vec<f64>, alpha: AngleTable, beta: AngleTable },
    /// One row per `α` for a fixed state.
    StateGrid { state: PureTwoPhotonState, alpha: Vec<f64>, beta: Vec<f64> },
    /// One row per `c` along the ε path.
    EpsPath { c: Vec<f64>, eps: Vec<f64> },
}

impl Rows {
    fn new(spec: &ScanSpec) -> Self {
        match (&spec.angles, &spec.family) {
            (AngleDomain::Grid { alpha, beta }, StateFamily::PaperState) => Rows::PaperGrid {
                c: spec.c_range.values(),
                alpha: AngleTable::new(alpha),
                beta: AngleTable::new(beta),
            },
            (AngleDomain::Grid { alpha, beta }, family) => Rows::StateGrid {
                state: family.state_for(0.0),
                alpha: alpha.values(),
                beta: beta.values(),
            },
            (AngleDomain::EpsPreset { eps }, _) => Rows::EpsPath {
                c: spec.c_range.values(),
                eps: eps.values(),
            },
        }
    }

    fn count(&self) -> usize {
        match self {
            Rows::PaperGrid { c, .. } | Rows::EpsPath { c, .. } => c.len(),
            Rows::StateGrid { alpha, .. } => alpha.len(),
        }
    }

    fn scan_row(&self, row: usize, family: &StateFamily, threshold: f64) -> RowOut {
        let mut out = RowOut::new();
        match self {
            Rows::PaperGrid { c, alpha, beta } => {
                let c = c[row];
                let k = (1.0 - 2.0 * c * c).abs();
                let m = c * (1.0 - c * c).sqrt();
                let mut buf = vec![0.0; beta.values.len()];
                for i in 0..alpha.values.len() {
                    let (ca2, sa2) = (alpha.cos2[i], alpha.sin2[i]);
                    let ms2a = m * alpha.sin_double[i];
                    // same operation order as `reduced_lhs_unchecked`, so grid values
                    // are bit-identical to point evaluations
                    for (((s, &cb2), &sb2), &s2b) in buf
                        .iter_mut()
                        .zip(&beta.cos2)
                        .zip(&beta.sin2)
                        .zip(&beta.sin_double)
                    {
                        *s = k * (ca2 - cb2).abs() + ca2 * cb2 + sa2 * sb2 + ms2a * s2b;
                    }
                    out.absorb(&buf, threshold, |j| (c, alpha.values[i], beta.values[j]));
                }
            }
            Rows::StateGrid { state, alpha, beta } => {
                let a = alpha[row];
                let buf: Vec<f64> = beta
                    .iter()
                    .map(|&b| probability_form_lhs(state, MeasurementSettings { alpha: a, beta: b }))
                    .collect();
                out.absorb(&buf, threshold, |j| (0.0, a, beta[j]));
            }
            Rows::EpsPath { c, eps } => {
                let c = c[row];
                let pts: Vec<(f64, f64)> = eps.iter().map(|&e| (e.sqrt(), FRAC_PI_2 - e.sqrt())).collect();
                let buf: Vec<f64> = pts.iter().map(|&(a, b)| evaluate_point(family, c, a, b)).collect();
                out.absorb(&buf, threshold, |j| (c, pts[j].0, pts[j].1));
            }
        }
        out
    }
}

struct RowOut {
    best: Option<ScanPoint>,
    violations: Vec<ScanPoint>,
    violation_count: u64,
    points: u64,
}

impl RowOut {
    fn new() -> Self {
        Self {
            best: None,
            violations: Vec::new(),
            violation_count: 0,
            points: 0,
        }
    }

    /// Folds one contiguous run of values, ordered by increasing coordinates.
    fn absorb(&mut self, values: &[f64], threshold: f64, coords: impl Fn(usize) -> (f64, f64, f64)) {
        self.points += values.len() as u64;
        let max = values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        // strict comparison keeps the earliest, i.e. lexicographically smallest, point
        if self.best.is_none_or(|b| max > b.s) {
            let j = values.iter().position(|&v| v == max).unwrap_or(0);
            let (c, alpha, beta) = coords(j);
            self.best = Some(ScanPoint { c, alpha, beta, s: max });
        }
        if max > threshold {
            for (j, &s) in values.iter().enumerate() {
                if s > threshold {
                    self.violation_count += 1;
                    if self.violations.len() < MAX_LISTED_VIOLATIONS {
                        let (c, alpha, beta) = coords(j);
                        self.violations.push(ScanPoint { c, alpha, beta, s });
                    }
                }
            }
        }
    }
}

fn partial_report(spec: &ScanSpec, rows: &Rows, range: Range<usize>) -> ScanReport {
    let threshold = 1.0 + spec.tolerance;
    let outs: Vec<RowOut> = range
        .into_par_iter()
        .map(|r| rows.scan_row(r, &spec.family, threshold))
        .collect();
    let keep = spec.refine_candidates.max(1);
    let mut report: Option<ScanReport> = None;
    for out in outs {
        let best = out.best.expect("rows are non-empty");
        let part = ScanReport {
            family: spec.family,
            max_s: best.s,
            argmax: best,
            grid_points: out.points,
            tolerance: spec.tolerance,
            violation_count: out.violation_count,
            violations: out.violations,
            eq20_predicted_violations: Vec::new(),
            truncation_discrepancy: false,
            candidates: vec![best],
            refinement: None,
            wall_time_s: 0.0,
        };
        report = Some(match report {
            None => part,
            Some(acc) => acc.merge(part, keep),
        });
    }
    report.expect("at least one row")
}

fn eq20_points(spec: &ScanSpec) -> Vec<Eq20Point> {
    let (true, Some(eps_axis)) = (spec.family.is_paper(), spec.eq20_axis()) else {
        return Vec::new();
    };
    let eps = eps_axis.values();
    let mut out = Vec::new();
    for c in spec.c_range.values() {
        if 2.0 * c * c >= 1.0 {
            continue;
        }
        for &e in &eps {
            if let Ok(false) = eq20_predicate(c, e) {
                let r = e.sqrt();
                out.push(Eq20Point {
                    c,
                    eps: e,
                    s_first_order: first_order_lhs(c, e).expect("validated inputs"),
                    s_exact: evaluate_point(&StateFamily::PaperState, c, r, FRAC_PI_2 - r),
                });
            }
        }
    }
    out
}

fn finish(spec: &ScanSpec, mut report: ScanReport, start: Instant) -> ScanReport {
    report.eq20_predicted_violations = eq20_points(spec);
    report.truncation_discrepancy =
        report.violation_count == 0 && !report.eq20_predicted_violations.is_empty();
    report.wall_time_s = start.elapsed().as_secs_f64();
    report
}

/// Evaluates `S` at every grid point. Rows are evaluated in parallel and
/// merged in row order, so the report does not depend on the thread count.
pub fn grid_scan(spec: &ScanSpec) -> Result<ScanReport> {
    grid_scan_sharded(spec, 1)
}

/// Same as [`grid_scan`], with the rows split into `shards` contiguous
/// chunks whose partial reports are merged afterwards.
pub fn grid_scan_sharded(spec: &ScanSpec, shards: usize) -> Result<ScanReport> {
    spec.validate()?;
    if shards == 0 {
        return Err(Error::InvalidScan("shard count must be >= 1".into()));
    }
    let start = Instant::now();
    let rows = Rows::new(spec);
    let n = rows.count();
    let per = n.div_ceil(shards).max(1);
    let keep = spec.refine_candidates.max(1);
    let report = (0..n)
        .step_by(per)
        .map(|lo| partial_report(spec, &rows, lo..(lo + per).min(n)))
        .reduce(|a, b| a.merge(b, keep))
        .ok_or_else(|| Error::InvalidScan("empty grid".into()))?;
    Ok(finish(spec, report, start))
}

/// Grid scan, then refinement when `spec.refine` is set.
pub fn run(spec: &ScanSpec) -> Result<ScanReport> {
    let report = grid_scan(spec)?;
    if spec.refine {
        refine(&report, spec)
    } else {
        Ok(report)
    }
}

/// Free refinement coordinates of a spec and how they map to `(c, α, β)`.
#[derive(Clone, Copy)]
enum Coord {
    C(GridAxis),
    Alpha(GridAxis),
    Beta(GridAxis),
    Eps(GridAxis),
}

struct Layout {
    coords: Vec<Coord>,
    family: StateFamily,
}

impl Layout {
    fn new(spec: &ScanSpec) -> Self {
        let mut coords = Vec::new();
        if spec.family.is_paper() && !spec.c_range.is_point() {
            coords.push(Coord::C(spec.c_range));
        }
        match spec.angles {
            AngleDomain::Grid { alpha, beta } => {
                if !alpha.is_point() {
                    coords.push(Coord::Alpha(alpha));
                }
                if !beta.is_point() {
                    coords.push(Coord::Beta(beta));
                }
            }
            AngleDomain::EpsPreset { eps } => {
                if !eps.is_point() {
                    coords.push(Coord::Eps(eps));
                }
            }
        }
        Self {
            coords,
            family: spec.family,
        }
    }

    fn read(&self, p: &ScanPoint) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| match c {
                Coord::C(_) => p.c,
                Coord::Alpha(_) => p.alpha,
                Coord::Beta(_) => p.beta,
                Coord::Eps(_) => p.alpha * p.alpha,
            })
            .collect()
    }

    fn write(&self, base: &ScanPoint, x: &[f64]) -> (f64, f64, f64) {
        let (mut c, mut a, mut b) = (base.c, base.alpha, base.beta);
        for (coord, &v) in self.coords.iter().zip(x) {
            match coord {
                Coord::C(_) => c = v,
                Coord::Alpha(_) => a = v,
                Coord::Beta(_) => b = v,
                Coord::Eps(_) => {
                    a = v.sqrt();
                    b = FRAC_PI_2 - v.sqrt();
                }
            }
        }
        (c, a, b)
    }

    fn brackets(&self, x: &[f64]) -> Vec<(f64, f64)> {
        self.coords
            .iter()
            .zip(x)
            .map(|(coord, &v)| match coord {
                Coord::C(ax) | Coord::Alpha(ax) | Coord::Beta(ax) | Coord::Eps(ax) => ax.cell(v),
            })
            .collect()
    }

    fn gap_at(&self, base: &ScanPoint, x: &[f64]) -> f64 {
        let (c, a, b) = self.write(base, x);
        gap(&self.family, c, a, b)
    }
}

/// Golden-section minimization of a unimodal-on-bracket function.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_8;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Cyclic coordinate search inside the bracketing cells of `start`.
fn refine_point(layout: &Layout, start: &ScanPoint, tol: f64) -> ScanPoint {
    let mut x = layout.read(start);
    let brackets = layout.brackets(&x);
    let mut best_gap = layout.gap_at(start, &x);
    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for k in 0..x.len() {
            let (lo, hi) = brackets[k];
            let (xk, g) = golden_min(
                |v| {
                    let mut y = x.clone();
                    y[k] = v;
                    layout.gap_at(start, &y)
                },
                lo,
                hi,
                tol,
            );
            if g < best_gap {
                moved = moved.max((xk - x[k]).abs());
                x[k] = xk;
                best_gap = g;
            }
        }
        if moved < tol {
            break;
        }
    }
    let (c, alpha, beta) = layout.write(start, &x);
    ScanPoint {
        c,
        alpha,
        beta,
        s: evaluate_point(&layout.family, c, alpha, beta),
    }
}

/// Local derivative-free refinement around the report's top grid cells.
///
/// Each candidate is improved by golden-section searches over one
/// coordinate at a time, restricted to the two grid cells around it, until
/// a sweep moves no coordinate by more than `spec.refine_tolerance`. The
/// searched quantity is `1 − S` from the off-diagonal probabilities; the
/// reported `S` is re-evaluated by [`evaluate_point`]. `max_s` never
/// decreases.
pub fn refine(report: &ScanReport, spec: &ScanSpec) -> Result<ScanReport> {
    spec.validate()?;
    if report.family != spec.family {
        return Err(Error::InvalidScan(format!(
            "report family {} does not match spec family {}",
            report.family.name(),
            spec.family.name()
        )));
    }
    let start = Instant::now();
    let layout = Layout::new(spec);
    let mut out = report.clone();
    if layout.coords.is_empty() || report.candidates.is_empty() {
        return Ok(out);
    }
    let refined: Vec<ScanPoint> = report
        .candidates
        .par_iter()
        .map(|cand| refine_point(&layout, cand, spec.refine_tolerance))
        .collect();
    let mut best = report.argmax;
    for p in &refined {
        if p.s.is_finite() && p.beats(&best) {
            best = *p;
        }
    }
    let improved = best != report.argmax;
    out.argmax = best;
    out.max_s = best.s;
    if best.s > 1.0 + spec.tolerance && improved {
        out.violation_count += 1;
        if out.violations.len() < MAX_LISTED_VIOLATIONS {
            out.violations.push(best);
        }
        out.truncation_discrepancy = false;
    }
    out.refinement = Some(RefinementSummary {
        candidates_refined: refined.len(),
        grid_best: report.argmax,
        refined_best: best,
        improved,
    });
    out.wall_time_s = report.wall_time_s + start.elapsed().as_secs_f64();
    Ok(out)
}

/// Writes `c,alpha,beta,S` rows for every grid point, in scan order.
pub fn write_csv<W: Write>(spec: &ScanSpec, mut w: W) -> Result<()> {
    spec.validate()?;
    let io = |e: std::io::Error| Error::Invalid(format!("csv write failed: {e}"));
    writeln!(w, "c,alpha,beta,S").map_err(io)?;
    let cs = spec.c_range.values();
    let points: Vec<(f64, f64)> = match &spec.angles {
        AngleDomain::Grid { alpha, beta } => {
            let bs = beta.values();
            alpha.values().into_iter().flat_map(|a| bs.iter().map(move |&b| (a, b))).collect()
        }
        AngleDomain::EpsPreset { eps } => eps.values().into_iter().map(|e| (e.sqrt(), FRAC_PI_2 - e.sqrt())).collect(),
    };
    for &c in &cs {
        for &(a, b) in &points {
            let s = evaluate_point(&spec.family, c, a, b);
            writeln!(w, "{c},{a},{b},{s}").map_err(io)?;
        }
    }
    Ok(())
}

/// Parses the flag value of a family name.
pub fn parse_family(name: &str) -> Result<StateFamily> {
    match name {
        "paper-state" => Ok(StateFamily::PaperState),
        "singlet" => Ok(StateFamily::Singlet),
        "positive-parity" => Ok(StateFamily::PositiveParity),
        other => Err(Error::InvalidScan(format!(
            "unknown family {other:?} (expected paper-state, singlet, positive-parity or fixed-matrix)"
        ))),
    }
}
