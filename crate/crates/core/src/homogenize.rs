//! Iterated gap opening toward a limit-periodic potential whose spectrum is
//! a homogeneous Cantor set.
//!
//! Starting from a generic periodic `b_0`, each step chooses a budget `eps_j`
//! from the metrics of the previous spectrum (shortest gap, break-point
//! spacing, the `r` schedule and, optionally, the super-exponential decay
//! term), then opens all gaps of a `k_j`-fold extension within that budget.
//! The run records every intermediate spectrum so that the homogeneity,
//! nowhere-density and decay claims can be checked step by step.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::{
    genericity_metrics_with, BandSpectrum, FloquetOptions, Metrics, MetricsOptions,
    DEFAULT_GAP_TOL,
};
use crate::gap_opening::find_generic_with;
use crate::intervals::{IntervalSet, ProfileGrid};
use crate::jacobi::{PeriodicJacobi, PeriodicSequence};

/// `r_l = (1 - tau) 2^{-(l + 1)}` for `l = 1..=n`; the full series sums to
/// `(1 - tau) / 2`.
pub fn schedule_r(tau: f64, n: usize) -> Result<Vec<f64>> {
    if !(tau > 0.0 && tau < 1.0) {
        return invalid(format!("tau must lie in (0, 1), got {tau}"));
    }
    Ok((1..=n)
        .map(|l| (1.0 - tau) * 2f64.powi(-(l as i32 + 1)))
        .collect())
}

/// Which term of the five-way minimum bound the step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundTerm {
    GapFifth,
    PrevEpsFifth,
    HalfSpacing,
    ScheduleSpacing,
    DecayTerm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonBound {
    /// `safety * min(...)`; zero or subnormal when `underflow` is set.
    pub value: f64,
    pub ln_value: f64,
    pub binding: BoundTerm,
    /// The bound is below the smallest normal double.
    pub underflow: bool,
}

pub const DEFAULT_SAFETY: f64 = 0.9;

/// Budget for step `j`:
/// `safety * min(gamma/5, eps_prev/5, t/2, r t/(2r + 5), exp(-j p_next2))`,
/// evaluated in log space. `gamma = None` (no gaps yet) drops its term, as
/// does `ac_term = false` for the decay term.
pub fn epsilon_bound(
    prev: &Metrics,
    eps_prev: f64,
    r: f64,
    j: usize,
    p_next2: usize,
    ac_term: bool,
    safety: f64,
) -> Result<EpsilonBound> {
    if let Some(g) = prev.gamma {
        if !(g > 0.0) {
            return invalid(format!("gap length must be positive, got {g}"));
        }
    }
    for (name, v) in [("eps_prev", eps_prev), ("t", prev.t), ("r", r), ("safety", safety)] {
        if !(v > 0.0) {
            return invalid(format!("{name} must be positive, got {v}"));
        }
    }
    if j == 0 || p_next2 == 0 {
        return invalid("step index and period must be positive");
    }
    let mut terms = vec![
        (BoundTerm::PrevEpsFifth, (eps_prev / 5.0).ln()),
        (BoundTerm::HalfSpacing, (prev.t / 2.0).ln()),
        (BoundTerm::ScheduleSpacing, (r * prev.t / (2.0 * r + 5.0)).ln()),
    ];
    if let Some(g) = prev.gamma {
        terms.insert(0, (BoundTerm::GapFifth, (g / 5.0).ln()));
    }
    if ac_term {
        terms.push((BoundTerm::DecayTerm, -(j as f64) * p_next2 as f64));
    }
    let (binding, ln_min) = terms
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least three terms");
    let ln_value = ln_min + safety.ln();
    Ok(EpsilonBound {
        value: ln_value.exp(),
        ln_value,
        binding,
        underflow: ln_value < f64::MIN_POSITIVE.ln(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConstructionOptions {
    /// Include the `exp(-j p_{j+1})` decay term in the budget.
    pub ac_term: bool,
    pub safety: f64,
    /// Genericity threshold, relative to the operator scale.
    pub gap_tol: f64,
    /// Stop once a budget falls below this fraction of the scale.
    pub saturation: f64,
    /// Adjacent edges closer than this fraction of the scale are one edge.
    pub merge_tol: f64,
    /// Measure break-point spacing over proper points only.
    pub proper_only_spacing: bool,
}

impl Default for ConstructionOptions {
    fn default() -> Self {
        ConstructionOptions {
            ac_term: true,
            safety: DEFAULT_SAFETY,
            gap_tol: DEFAULT_GAP_TOL,
            saturation: 1e-15,
            merge_tol: FloquetOptions::default().merge_tol,
            proper_only_spacing: false,
        }
    }
}

impl ConstructionOptions {
    fn metrics_options(&self) -> MetricsOptions {
        MetricsOptions {
            floquet: FloquetOptions {
                merge_tol: self.merge_tol,
                ..FloquetOptions::default()
            },
            proper_only: self.proper_only_spacing,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionStep {
    pub j: usize,
    pub b: PeriodicSequence,
    pub period: usize,
    /// `k_j`; absent for the starting potential.
    pub k: Option<usize>,
    /// `eps_j`; for the starting potential this is `eps_0`.
    pub eps: f64,
    pub ln_eps: f64,
    pub binding: Option<BoundTerm>,
    pub r: Option<f64>,
    /// The shift actually applied, `||b_j - b_{j-1}||_inf = |t_used|`.
    pub t_used: Option<f64>,
    pub gap_tol: f64,
    pub metrics: Metrics,
    pub spectrum: BandSpectrum,
}

impl ConstructionStep {
    pub fn sigma(&self) -> IntervalSet {
        self.spectrum.to_interval_set()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    /// The next budget is below what doubles (or the gap certification
    /// threshold) can resolve; certificates refer to the recorded steps.
    FloatSaturated {
        at_step: usize,
        ln_eps: f64,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstructionRun {
    pub tau: f64,
    pub eps: f64,
    pub eps0: f64,
    pub a: PeriodicSequence,
    /// `k_1, k_2, ...` as used, including the entry needed for `p_{n+1}`.
    pub ks: Vec<usize>,
    pub r: Vec<f64>,
    pub options: ConstructionOptions,
    pub steps: Vec<ConstructionStep>,
    pub status: RunStatus,
}

impl ConstructionRun {
    /// Number of completed gap-opening steps.
    pub fn depth(&self) -> usize {
        self.steps.len() - 1
    }

    pub fn last(&self) -> &ConstructionStep {
        self.steps.last().expect("step 0 is always recorded")
    }

    /// `p_j`, extended past the recorded steps with the `ks` schedule.
    pub fn period_at(&self, j: usize) -> usize {
        if j < self.steps.len() {
            return self.steps[j].period;
        }
        let mut p = self.last().period;
        for i in self.steps.len()..=j {
            p *= k_at(&self.ks, i);
        }
        p
    }

    /// Sum of the recorded budgets `eps_1 + ... + eps_n`.
    pub fn total_eps(&self) -> f64 {
        self.steps[1..].iter().map(|s| s.eps).sum()
    }

    pub fn operator(&self, j: usize) -> Result<PeriodicJacobi> {
        PeriodicJacobi::new(self.a.clone(), self.steps[j].b.clone())
    }

    /// Strict upper bound on `||b_inf - b_n||_inf`: the recorded budgets after
    /// `n` plus the largest tail the budget rule allows beyond the last step,
    /// returned as a natural log.
    pub fn ln_tail_bound(&self, n: usize) -> f64 {
        let last = self.last();
        let l = self.depth();
        // any further step obeys eps < min(gamma, eps_prev)/5 (and the decay
        // term when enforced), so the remaining series is below min/4
        let mut ln_future = match last.metrics.gamma {
            Some(g) => g.min(last.eps),
            None => last.eps,
        }
        .ln()
            - 4f64.ln();
        if self.options.ac_term {
            let p_next2 = self.period_at(l + 2);
            ln_future = ln_future.min(-((l + 1) as f64) * p_next2 as f64 + 1.25f64.ln());
        }
        let recorded: Vec<f64> = self.steps[(n + 1).min(self.steps.len())..]
            .iter()
            .map(|s| s.ln_eps)
            .chain(std::iter::once(ln_future))
            .collect();
        log_sum_exp(&recorded)
    }
}

fn k_at(ks: &[usize], j: usize) -> usize {
    // k_j for j >= 1; past the end the last entry repeats
    ks.get(j - 1).or(ks.last()).copied().unwrap_or(2)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Runs `n_steps` gap-opening steps from `b0`.
pub fn construct(
    b0: &PeriodicSequence,
    a: &PeriodicSequence,
    tau: f64,
    eps: f64,
    ks: &[usize],
    n_steps: usize,
    options: &ConstructionOptions,
) -> Result<ConstructionRun> {
    let r = schedule_r(tau, n_steps)?;
    if !(eps > 0.0 && eps.is_finite()) {
        return invalid(format!("eps must be positive, got {eps}"));
    }
    if let Some(k) = ks.iter().find(|&&k| k < 2) {
        return invalid(format!("every k must be at least 2, got {k}"));
    }
    if !(options.safety > 0.0 && options.safety < 1.0) {
        return invalid("safety factor must lie in (0, 1)");
    }
    let mut ks: Vec<usize> = if ks.is_empty() { vec![2] } else { ks.to_vec() };
    while ks.len() < n_steps + 2 {
        ks.push(*ks.last().expect("nonempty"));
    }
    let mopts = options.metrics_options();
    let j0 = PeriodicJacobi::new(a.clone(), b0.clone())?;
    let scale = j0.scale();
    let gap_tol0 = options.gap_tol * scale;
    let (m0, spec0) = genericity_metrics_with(&j0, ks[0], gap_tol0, &mopts)?;
    if !m0.is_generic {
        return invalid("starting potential is not generic: some gap is closed");
    }
    let eps0 = m0.gamma.map_or(4.0 * eps, |g| g.min(4.0 * eps));
    let mut steps = vec![ConstructionStep {
        j: 0,
        b: j0.b().clone(),
        period: j0.period(),
        k: None,
        eps: eps0,
        ln_eps: eps0.ln(),
        binding: None,
        r: None,
        t_used: None,
        gap_tol: gap_tol0,
        metrics: m0,
        spectrum: spec0,
    }];
    let mut status = RunStatus::Completed;
    let mut current = j0;
    for j in 1..=n_steps {
        let prev = steps.last().expect("nonempty");
        let k = ks[j - 1];
        let p_next2 = prev.period * k * ks[j];
        let bound = epsilon_bound(
            &prev.metrics,
            prev.eps,
            r[j - 1],
            j,
            p_next2,
            options.ac_term,
            options.safety,
        )?;
        if bound.underflow || bound.value < options.saturation * scale {
            status = RunStatus::FloatSaturated {
                at_step: j,
                ln_eps: bound.ln_value,
                reason: "budget below double resolution".into(),
            };
            break;
        }
        let gap_tol = gap_tol0.min(bound.value / 100.0);
        if gap_tol <= options.merge_tol * scale {
            status = RunStatus::FloatSaturated {
                at_step: j,
                ln_eps: bound.ln_value,
                reason: "budget too small to certify new gaps open".into(),
            };
            break;
        }
        let pert = find_generic_with(&current, k, bound.value, gap_tol, &mopts.floquet)?;
        let (metrics, spectrum) = genericity_metrics_with(&pert.operator, ks[j], gap_tol, &mopts)?;
        if !metrics.is_generic {
            return Err(Error::NumericFailure {
                context: "construct",
                detail: format!("step {j} lost genericity after the search accepted it"),
            });
        }
        steps.push(ConstructionStep {
            j,
            b: pert.b.clone(),
            period: pert.operator.period(),
            k: Some(k),
            eps: bound.value,
            ln_eps: bound.ln_value,
            binding: Some(bound.binding),
            r: Some(r[j - 1]),
            t_used: Some(pert.t),
            gap_tol,
            metrics,
            spectrum,
        });
        current = pert.operator;
    }
    Ok(ConstructionRun {
        tau,
        eps,
        eps0,
        a: a.clone(),
        ks,
        r,
        options: *options,
        steps,
        status,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepHomogeneityReport {
    pub step: usize,
    /// `1 - (r_1 + ... + r_n)`.
    pub factor: f64,
    pub delta_max: f64,
    pub n_delta: usize,
    pub n_points: usize,
    pub min_ratio: f64,
    pub argmin_x: f64,
    pub argmin_delta: f64,
    /// `min_ratio - factor`.
    pub min_slack: f64,
    pub pass: bool,
}

/// Default number of interior sample points in homogeneity sweeps.
pub const DEFAULT_HOMOGENEITY_POINTS: usize = 2000;

/// Checks `|B_delta(E) ∩ sigma_n| >= delta (1 - r_1 - ... - r_n)` for
/// `delta` on a log grid in `(0, lambda_0]` and `E` on every band edge plus
/// interior samples of `sigma_n`.
pub fn verify_step_homogeneity(
    run: &ConstructionRun,
    n: usize,
    n_delta: usize,
    n_points: usize,
) -> Result<StepHomogeneityReport> {
    let step = run
        .steps
        .get(n)
        .ok_or_else(|| Error::InvalidArgument(format!("run has no step {n}")))?;
    let factor = 1.0 - run.r[..n].iter().sum::<f64>();
    let delta_max = run.steps[0].metrics.lambda;
    let grid = ProfileGrid::new(delta_max, n_delta, n_points);
    let m = step.sigma().min_ratio(&grid)?;
    Ok(StepHomogeneityReport {
        step: n,
        factor,
        delta_max,
        n_delta,
        n_points,
        min_ratio: m.ratio,
        argmin_x: m.x,
        argmin_delta: m.delta,
        min_slack: m.ratio - factor,
        pass: m.ratio >= factor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowWitness {
    pub window: (f64, f64),
    /// Component of `window \ sigma_n` holding the witness.
    pub free_component: (f64, f64),
    pub center: f64,
    pub distance_to_sigma_n: f64,
    /// `distance_to_sigma_n - tail_bound`; positive keeps the center out of
    /// the limit spectrum.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CantorStatus {
    Checked,
    InsufficientDepth { deepest_bound: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CantorReport {
    pub window_len: f64,
    pub status: CantorStatus,
    pub step: Option<usize>,
    /// `4 pi A^2 / p_n`.
    pub depth_bound: Option<f64>,
    pub gamma_n: Option<f64>,
    pub tail_bound: Option<f64>,
    pub tail_ok: bool,
    pub windows_checked: usize,
    pub failed_windows: usize,
    pub worst: Option<WindowWitness>,
    pub pass: bool,
}

/// Slides windows of length `window_len` across the hull of `sigma_n`, for
/// the first step with `4 pi A^2 / p_n < window_len`, and exhibits in each a
/// gap piece of length at least `gamma_n` whose center is farther from
/// `sigma_n` than the remaining tail of budgets.
pub fn cantor_certificate(
    run: &ConstructionRun,
    window_len: f64,
    n_windows: usize,
) -> Result<CantorReport> {
    if !(window_len > 0.0) || n_windows == 0 {
        return invalid("window length and count must be positive");
    }
    let a_bound = run.a.max().max(1.0);
    let depth = |s: &ConstructionStep| 4.0 * PI * a_bound * a_bound / s.period as f64;
    let Some(step) = run.steps.iter().find(|s| depth(s) < window_len) else {
        return Ok(CantorReport {
            window_len,
            status: CantorStatus::InsufficientDepth {
                deepest_bound: depth(run.last()),
            },
            step: None,
            depth_bound: None,
            gamma_n: None,
            tail_bound: None,
            tail_ok: false,
            windows_checked: 0,
            failed_windows: 0,
            worst: None,
            pass: false,
        });
    };
    let n = step.j;
    let gamma = step.metrics.gamma.ok_or_else(|| {
        Error::InvalidArgument(format!("step {n} has no open gaps to certify with"))
    })?;
    let tail = run.ln_tail_bound(n).exp();
    let tail_ok = tail <= gamma / 4.0;
    let sigma = step.sigma();
    let (lo, hi) = (sigma.min().expect("nonempty"), sigma.max().expect("nonempty"));
    let starts: Vec<f64> = if window_len >= hi - lo || n_windows == 1 {
        vec![lo]
    } else {
        let span = hi - lo - window_len;
        (0..n_windows)
            .map(|i| lo + span * i as f64 / (n_windows - 1) as f64)
            .collect()
    };
    let witnesses: Vec<Option<WindowWitness>> = starts
        .par_iter()
        .map(|&u| window_witness(&sigma, u, u + window_len, gamma, tail))
        .collect();
    let failed = witnesses.iter().filter(|w| w.is_none()).count();
    let worst = witnesses
        .into_iter()
        .flatten()
        .min_by(|a, b| a.margin.total_cmp(&b.margin));
    let pass = tail_ok && failed == 0 && worst.as_ref().is_some_and(|w| w.margin > 0.0);
    Ok(CantorReport {
        window_len,
        status: CantorStatus::Checked,
        step: Some(n),
        depth_bound: Some(depth(step)),
        gamma_n: Some(gamma),
        tail_bound: Some(tail),
        tail_ok,
        windows_checked: starts.len(),
        failed_windows: failed,
        worst,
        pass,
    })
}

fn window_witness(
    sigma: &IntervalSet,
    u: f64,
    v: f64,
    gamma: f64,
    tail: f64,
) -> Option<WindowWitness> {
    // components of (u, v) minus sigma
    let mut free = Vec::new();
    let mut cursor = u;
    for &(lo, hi) in sigma.intervals() {
        if hi <= cursor {
            continue;
        }
        if lo >= v {
            break;
        }
        if lo > cursor {
            free.push((cursor, lo));
        }
        cursor = cursor.max(hi);
    }
    if cursor < v {
        free.push((cursor, v));
    }
    let best = free
        .into_iter()
        .max_by(|a, b| (a.1 - a.0).total_cmp(&(b.1 - b.0)))?;
    if best.1 - best.0 < gamma {
        return None;
    }
    let center = 0.5 * (best.0 + best.1);
    let distance = sigma.distance_to(center);
    Some(WindowWitness {
        window: (u, v),
        free_component: best,
        center,
        distance_to_sigma_n: distance,
        margin: distance - tail,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayStep {
    pub j: usize,
    pub ln_eps: f64,
    /// `-j p_{j+1}`.
    pub limit: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySequence {
    pub c: f64,
    /// `c p_{n+1} + ln(tail after n)` for `n = 0..=depth`.
    pub values: Vec<f64>,
    pub decreasing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcDecayReport {
    pub enforced: bool,
    pub steps: Vec<DecayStep>,
    pub sequences: Vec<DecaySequence>,
    pub note: Option<String>,
    pub pass: bool,
}

/// Checks `ln eps_j < -j p_{j+1}` at every recorded step and that
/// `c p_{n+1} + ln ||b_inf - b_n||` decreases along the run for `c` on a
/// grid in `(0, c_max]`.
pub fn ac_decay_certificate(run: &ConstructionRun, c_max: f64, n_c: usize) -> AcDecayReport {
    let depth = run.depth();
    if depth == 0 {
        return AcDecayReport {
            enforced: run.options.ac_term,
            steps: Vec::new(),
            sequences: Vec::new(),
            note: Some("no gap-opening steps; vacuous".into()),
            pass: true,
        };
    }
    let steps: Vec<DecayStep> = run.steps[1..]
        .iter()
        .map(|s| {
            let limit = -(s.j as f64) * run.period_at(s.j + 1) as f64;
            DecayStep {
                j: s.j,
                ln_eps: s.ln_eps,
                limit,
                ok: s.ln_eps < limit,
            }
        })
        .collect();
    let ln_tails: Vec<f64> = (0..=depth).map(|n| run.ln_tail_bound(n)).collect();
    let sequences: Vec<DecaySequence> = (1..=n_c.max(1))
        .map(|i| {
            let c = c_max * i as f64 / n_c.max(1) as f64;
            let values: Vec<f64> = ln_tails
                .iter()
                .enumerate()
                .map(|(n, lt)| c * run.period_at(n + 1) as f64 + lt)
                .collect();
            let decreasing = values.windows(2).all(|w| w[1] < w[0]);
            DecaySequence {
                c,
                values,
                decreasing,
            }
        })
        .collect();
    let enforced = run.options.ac_term;
    let note = (!enforced).then(|| "AC hypothesis not enforced (decay term disabled)".to_string());
    let pass = enforced && steps.iter().all(|s| s.ok) && sequences.iter().all(|s| s.decreasing);
    AcDecayReport {
        enforced,
        steps,
        sequences,
        note,
        pass,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyInequality {
    pub j: usize,
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Step-by-step consistency checks of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    /// `eps_j < lambda_j r_j / 5` per step.
    pub band_budget: Vec<bool>,
    /// Pairs `(j, n)` with `delta = lambda_j`.
    pub key_inequality: Vec<KeyInequality>,
    /// `d_H(sigma_n, sigma_{n-1}) <= |t_n| < eps_n`.
    pub hausdorff_steps: Vec<f64>,
    pub containment: Vec<bool>,
    pub total_eps: f64,
    /// `sum eps_j < eps_0 / 4 <= eps`.
    pub telescoping: bool,
    /// Open gaps at step n equal `p_n - 1`.
    pub gap_census: Vec<bool>,
    pub drift: f64,
    pub pass: bool,
}

pub fn check_invariants(run: &ConstructionRun) -> Result<InvariantReport> {
    let steps = &run.steps;
    let band_budget: Vec<bool> = steps[1..]
        .iter()
        .map(|s| s.eps < s.metrics.lambda * s.r.expect("recorded") / 5.0)
        .collect();
    let mut key = Vec::new();
    for j in 1..steps.len() {
        let delta = steps[j].metrics.lambda;
        for n in j..steps.len() {
            let range = &steps[j..=n];
            let eps_jn: f64 = range.iter().map(|s| s.eps).sum();
            let lhs = eps_jn
                + range
                    .iter()
                    .map(|s| 2.0 * s.eps * (delta / s.metrics.lambda + 1.0))
                    .sum::<f64>();
            let rhs = delta * range.iter().map(|s| s.r.expect("recorded")).sum::<f64>();
            key.push(KeyInequality { j, n, lhs, rhs });
        }
    }
    let mut hd = Vec::new();
    let mut containment = Vec::new();
    for w in steps.windows(2) {
        let d = w[0].sigma().hausdorff_distance(&w[1].sigma())?;
        let slack = 1e-12 * run.operator(0)?.scale();
        containment.push(d <= w[1].t_used.expect("recorded").abs() + slack && d < w[1].eps + slack);
        hd.push(d);
    }
    let total_eps = run.total_eps();
    let telescoping = total_eps < run.eps0 / 4.0 && run.eps0 / 4.0 <= run.eps;
    let gap_census: Vec<bool> = steps
        .iter()
        .map(|s| s.spectrum.open_gaps().len() + 1 == s.period)
        .collect();
    let drift = run.last().b.sup_distance(&steps[0].b);
    let pass = band_budget.iter().all(|&x| x)
        && key.iter().all(|k| k.lhs < k.rhs)
        && containment.iter().all(|&x| x)
        && telescoping
        && gap_census.iter().all(|&x| x)
        && drift < run.eps;
    Ok(InvariantReport {
        band_budget,
        key_inequality: key,
        hausdorff_steps: hd,
        containment,
        total_eps,
        telescoping,
        gap_census,
        drift,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn free_run(n_steps: usize, ac: bool) -> ConstructionRun {
        let opts = ConstructionOptions {
            ac_term: ac,
            ..Default::default()
        };
        construct(
            &PeriodicSequence::new(vec![0.0]).unwrap(),
            &PeriodicSequence::new(vec![1.0]).unwrap(),
            0.5,
            0.5,
            &[2, 2],
            n_steps,
            &opts,
        )
        .unwrap()
    }

    #[test]
    fn r_schedule_examples() {
        assert_eq!(schedule_r(0.5, 3).unwrap(), vec![0.125, 0.0625, 0.03125]);
        let r = schedule_r(0.9, 1).unwrap();
        assert!((r[0] - 0.025).abs() < 1e-16);
        let long = schedule_r(0.3, 60).unwrap();
        assert!(long.windows(2).all(|w| w[1] < w[0]));
        assert!(long.iter().sum::<f64>() < 0.35);
        assert!(schedule_r(1.0, 3).is_err());
        assert!(schedule_r(0.0, 3).is_err());
    }

    fn metrics(gamma: f64, t: f64) -> Metrics {
        Metrics {
            period: 2,
            lambda: 1.0,
            gamma: Some(gamma),
            t,
            k_next: 2,
            is_generic: true,
        }
    }

    #[test]
    fn epsilon_bound_hand_example() {
        let b = epsilon_bound(&metrics(1.0, 0.5), 1.0, 0.125, 1, 4, true, 0.9).unwrap();
        // min(0.2, 0.2, 0.25, 0.0625/5.25, e^-4) = 0.0625/5.25
        let want = 0.9 * 0.0625 / 5.25;
        assert!((b.value - want).abs() < 1e-15);
        assert!((b.value - 0.010714).abs() < 1e-6);
        assert_eq!(b.binding, BoundTerm::ScheduleSpacing);
        assert!(!b.underflow);
    }

    #[test]
    fn epsilon_bound_decay_term_in_log_space() {
        let b = epsilon_bound(&metrics(1.0, 0.5), 1.0, 0.125, 3, 64, true, 0.9).unwrap();
        assert_eq!(b.binding, BoundTerm::DecayTerm);
        assert!((b.ln_value - (0.9f64.ln() - 192.0)).abs() < 1e-12);
        // e^-192 is tiny but still a normal double
        assert!(!b.underflow);
        let b = epsilon_bound(&metrics(1.0, 0.5), 1.0, 0.125, 12, 64, true, 0.9).unwrap();
        assert!(b.underflow);
        assert_eq!(b.value, 0.0);
        let off = epsilon_bound(&metrics(1.0, 0.5), 1.0, 0.125, 12, 64, false, 0.9).unwrap();
        assert_eq!(off.binding, BoundTerm::ScheduleSpacing);
    }

    #[test]
    fn epsilon_bound_rejects_nonpositive() {
        assert!(epsilon_bound(&metrics(0.0, 0.5), 1.0, 0.1, 1, 4, true, 0.9).is_err());
        assert!(epsilon_bound(&metrics(1.0, 0.0), 1.0, 0.1, 1, 4, true, 0.9).is_err());
        assert!(epsilon_bound(&metrics(1.0, 0.5), -1.0, 0.1, 1, 4, true, 0.9).is_err());
    }

    #[test]
    fn schedule_term_below_half_spacing() {
        for &r in &[1e-6, 0.01, 0.5, 3.0, 1e6] {
            let t = 0.7;
            assert!(r * t / (2.0 * r + 5.0) < t / 2.0);
        }
    }

    #[test]
    fn two_step_free_run() {
        let run = free_run(2, true);
        assert_eq!(run.status, RunStatus::Completed);
        assert_eq!(run.depth(), 2);
        let last = run.last();
        assert_eq!(last.period, 4);
        assert_eq!(last.spectrum.open_gaps().len(), 3);
        assert!(last.b.sup_distance(&run.steps[0].b) < 0.5);
        assert_eq!(run.eps0, 2.0);
        for w in run.steps.windows(2) {
            assert!(w[1].b.sup_distance(&w[0].b) < w[1].eps);
            assert_eq!(w[1].period, w[0].period * w[1].k.unwrap());
        }
        let inv = check_invariants(&run).unwrap();
        assert!(inv.pass, "{inv:?}");
    }

    #[test]
    fn zero_steps_records_initial_metrics() {
        let run = free_run(0, true);
        assert_eq!(run.steps.len(), 1);
        assert_eq!(run.steps[0].metrics.lambda, 4.0);
        assert!(ac_decay_certificate(&run, 1.0, 4).pass);
    }

    #[test]
    fn rejects_non_generic_start() {
        let err = construct(
            &PeriodicSequence::new(vec![0.0, 0.0]).unwrap(),
            &PeriodicSequence::new(vec![1.0]).unwrap(),
            0.5,
            0.5,
            &[2],
            1,
            &ConstructionOptions::default(),
        );
        assert!(matches!(err, Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn step_zero_homogeneity_is_plain_interval() {
        let run = free_run(0, true);
        let rep = verify_step_homogeneity(&run, 0, 64, 200).unwrap();
        assert_eq!(rep.factor, 1.0);
        assert_eq!(rep.delta_max, 4.0);
        assert!(rep.pass);
        assert!((rep.min_ratio - 1.0).abs() < 1e-12);
        assert!(verify_step_homogeneity(&run, 3, 64, 10).is_err());
    }

    #[test]
    fn homogeneity_holds_along_two_step_run() {
        let run = free_run(2, true);
        for n in 0..=2 {
            let rep = verify_step_homogeneity(&run, n, 64, 500).unwrap();
            assert!(rep.pass && rep.min_slack >= 0.0, "{rep:?}");
            assert!(rep.argmin_delta <= 4.0);
        }
    }

    #[test]
    fn decay_certificate_reads_schedule() {
        let run = free_run(2, true);
        let rep = ac_decay_certificate(&run, 1.0, 4);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.steps[0].limit, -4.0);
        assert_eq!(rep.steps[1].limit, -16.0);
        let off = free_run(2, false);
        let rep = ac_decay_certificate(&off, 1.0, 4);
        assert!(!rep.pass);
        assert!(rep.note.unwrap().contains("not enforced"));
    }

    #[test]
    fn cantor_certificate_on_two_step_run() {
        let run = free_run(2, true);
        let rep = cantor_certificate(&run, PI + 0.1, 200).unwrap();
        assert_eq!(rep.status, CantorStatus::Checked);
        assert_eq!(rep.step, Some(2));
        assert!(rep.tail_ok);
        assert!(rep.pass, "{rep:?}");
        let tail = rep.tail_bound.unwrap();
        assert!(tail < rep.gamma_n.unwrap() / 4.0);
        let shallow = cantor_certificate(&run, PI, 10).unwrap();
        assert!(matches!(shallow.status, CantorStatus::InsufficientDepth { .. }));
        assert!(!shallow.pass);
    }

    #[test]
    fn run_json_roundtrip() {
        let run = free_run(1, true);
        let s = serde_json::to_string(&run).unwrap();
        let back: ConstructionRun = serde_json::from_str(&s).unwrap();
        assert_eq!(back.steps.len(), run.steps.len());
        assert_eq!(back.steps[1].b, run.steps[1].b);
        assert_eq!(serde_json::to_string(&back).unwrap(), s);
    }
}
