//! Opening every gap of a `kp`-periodic extension by shifting its last entry.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::{band_spectrum_with, BandSpectrum, BreakPointSet, FloquetOptions, Gap};
use crate::jacobi::{PeriodicJacobi, PeriodicSequence};

/// Maximum number of candidate shifts tried by [`find_generic`].
pub const MAX_CANDIDATES: usize = 64;

/// `b` written over `k p` sites with `t` added to the last one.
pub fn perturb_last(b: &PeriodicSequence, k: usize, t: f64) -> Result<PeriodicSequence> {
    if k < 2 {
        return invalid(format!("k must be at least 2, got {k}"));
    }
    if !t.is_finite() {
        return invalid("shift must be finite");
    }
    let mut values = b.extend_to(k * b.period())?.values().to_vec();
    *values.last_mut().expect("nonempty") += t;
    PeriodicSequence::new(values)
}

/// Fractions of the budget tried in order: `1/2, -1/2, 1/4, -1/4, 3/8, -3/8,
/// 1/8, -1/8, 7/16, ...`, largest first within each dyadic level.
pub fn candidate_fractions() -> Vec<f64> {
    let mut out = Vec::with_capacity(MAX_CANDIDATES);
    let mut level = 1u32;
    while out.len() < MAX_CANDIDATES {
        let denom = 2f64.powi(level as i32);
        let top = 1u64 << (level - 1);
        let mut m = if top % 2 == 1 { top } else { top - 1 };
        loop {
            let f = m as f64 / denom;
            out.push(f);
            out.push(-f);
            if m <= 1 || out.len() >= MAX_CANDIDATES {
                break;
            }
            m -= 2;
        }
        level += 1;
    }
    out.truncate(MAX_CANDIDATES);
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenericPerturbation {
    pub b: PeriodicSequence,
    pub t: f64,
    /// Position of `t` in the candidate schedule.
    pub candidate: usize,
    pub operator: PeriodicJacobi,
    pub spectrum: BandSpectrum,
}

/// Searches the candidate schedule for a shift `0 < |t| < eps_budget` whose
/// `k p`-periodic perturbation has all `k p - 1` gaps longer than `gap_tol`.
pub fn find_generic(
    j: &PeriodicJacobi,
    k: usize,
    eps_budget: f64,
    gap_tol: f64,
) -> Result<GenericPerturbation> {
    find_generic_with(j, k, eps_budget, gap_tol, &FloquetOptions::default())
}

pub fn find_generic_with(
    j: &PeriodicJacobi,
    k: usize,
    eps_budget: f64,
    gap_tol: f64,
    opts: &FloquetOptions,
) -> Result<GenericPerturbation> {
    if k < 2 {
        return invalid(format!("k must be at least 2, got {k}"));
    }
    if !(eps_budget > 0.0 && eps_budget.is_finite()) {
        return invalid(format!("eps_budget must be positive, got {eps_budget}"));
    }
    if !(gap_tol > 0.0) || gap_tol > eps_budget / 100.0 {
        return invalid(format!(
            "gap_tol {gap_tol:e} must lie in (0, eps_budget / 100 = {:e}]",
            eps_budget / 100.0
        ));
    }
    let base = band_spectrum_with(j, opts)?;
    if base.gaps().iter().any(|g| g.closed || g.length() <= gap_tol) {
        return invalid("starting operator is not generic");
    }
    let mut smallest_gap = f64::INFINITY;
    for (candidate, frac) in candidate_fractions().into_iter().enumerate() {
        let t = frac * eps_budget;
        let b = perturb_last(j.b(), k, t)?;
        let op = j.with_b(b.clone())?;
        let spectrum = band_spectrum_with(&op, opts)?;
        let gaps = spectrum.gaps();
        let shortest = gaps
            .iter()
            .map(|g| if g.closed { 0.0 } else { g.length() })
            .fold(f64::INFINITY, f64::min);
        if shortest > gap_tol {
            // the shift actually stored after rounding b(kp) + t
            let last = k * j.period();
            let realized = b.values()[last - 1] - j.b().at(last as i64);
            return Ok(GenericPerturbation {
                b,
                t: realized,
                candidate,
                operator: op,
                spectrum,
            });
        }
        smallest_gap = smallest_gap.min(shortest);
    }
    Err(Error::SearchFailure {
        tried: MAX_CANDIDATES,
        smallest_gap,
        gap_tol,
    })
}

/// Where the gaps of a perturbed spectrum sit relative to the break points
/// and gaps of the unperturbed one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementReport {
    pub eps: f64,
    /// `eps` is below half the minimal break-point spacing.
    pub applicable: bool,
    pub new_gap_count: usize,
    /// Gaps lying inside the `eps`-ball of a proper break point.
    pub near_break_points: usize,
    /// Gaps lying inside the `eps`-neighborhood of an old gap.
    pub near_old_gaps: usize,
    pub stray_gaps: Vec<(f64, f64)>,
    /// Old gaps with no perturbed gap whose endpoints moved by at most `eps`.
    pub lost_old_gaps: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Checks gap placement after a perturbation of sup-norm `eps`.
///
/// `slack` absorbs rounding in the computed edges.
pub fn gap_placement(
    old: &BandSpectrum,
    old_breaks: &BreakPointSet,
    new: &BandSpectrum,
    eps: f64,
    slack: f64,
) -> PlacementReport {
    let reach = eps + slack;
    let proper: Vec<f64> = old_breaks.proper().map(|b| b.energy).collect();
    let old_gaps: Vec<Gap> = old.gaps();
    let new_gaps: Vec<Gap> = new.open_gaps();
    let mut near_bp = 0;
    let mut near_old = 0;
    let mut stray = Vec::new();
    for g in &new_gaps {
        if proper.iter().any(|&e| g.lo >= e - reach && g.hi <= e + reach) {
            near_bp += 1;
        } else if old_gaps
            .iter()
            .any(|o| g.lo >= o.lo - reach && g.hi <= o.hi + reach)
        {
            near_old += 1;
        } else {
            stray.push((g.lo, g.hi));
        }
    }
    let lost: Vec<(f64, f64)> = old_gaps
        .iter()
        .filter(|o| {
            !new_gaps
                .iter()
                .any(|g| (g.lo - o.lo).abs() <= reach && (g.hi - o.hi).abs() <= reach)
        })
        .map(|o| (o.lo, o.hi))
        .collect();
    let applicable = eps < 0.5 * old_breaks.min_spacing(false, 0.0);
    let pass = stray.is_empty() && lost.is_empty();
    PlacementReport {
        eps,
        applicable,
        new_gap_count: new_gaps.len(),
        near_break_points: near_bp,
        near_old_gaps: near_old,
        stray_gaps: stray,
        lost_old_gaps: lost,
        pass,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::{band_spectrum, break_points};

    #[test]
    fn perturb_examples() {
        let b = PeriodicSequence::new(vec![0.0]).unwrap();
        assert_eq!(perturb_last(&b, 2, 0.3).unwrap().values(), &[0.0, 0.3]);
        let z = perturb_last(&b, 2, 0.0).unwrap();
        assert_eq!(z.values(), &[0.0, 0.0]);
        assert_eq!(z.period(), 2);
        let b = PeriodicSequence::new(vec![1.0, 2.0]).unwrap();
        let p = perturb_last(&b, 2, -0.1).unwrap();
        assert_eq!(p.values(), &[1.0, 2.0, 1.0, 1.9]);
        assert!((p.sup_distance(&b) - 0.1).abs() < 1e-15);
        assert!(perturb_last(&b, 1, 0.1).is_err());
    }

    #[test]
    fn zero_shift_keeps_spectrum() {
        let j = PeriodicJacobi::free(1).unwrap();
        let b = perturb_last(j.b(), 2, 0.0).unwrap();
        let s0 = band_spectrum(&j).unwrap().to_interval_set();
        let s1 = band_spectrum(&j.with_b(b).unwrap()).unwrap().to_interval_set();
        assert!(s0.hausdorff_distance(&s1).unwrap() < 1e-14);
        assert!((s1.measure() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn schedule_shape() {
        let f = candidate_fractions();
        assert_eq!(f.len(), MAX_CANDIDATES);
        assert_eq!(&f[..6], &[0.5, -0.5, 0.25, -0.25, 0.375, -0.375]);
        assert!(f.iter().all(|&x| x != 0.0 && x.abs() < 1.0));
        let mut abs: Vec<f64> = f.iter().map(|x| x.abs()).collect();
        abs.sort_by(f64::total_cmp);
        abs.dedup();
        assert_eq!(abs.len(), MAX_CANDIDATES / 2);
    }

    #[test]
    fn free_k2_first_candidate_opens_gap_of_length_t() {
        let j = PeriodicJacobi::free(1).unwrap();
        let r = find_generic(&j, 2, 0.5, 1e-6).unwrap();
        assert_eq!(r.candidate, 0);
        assert_eq!(r.t, 0.25);
        let gaps = r.spectrum.open_gaps();
        assert_eq!(gaps.len(), 1);
        assert!(gaps[0].lo.abs() < 1e-14 && (gaps[0].hi - 0.25).abs() < 1e-14);
    }

    #[test]
    fn free_k3_opens_gaps_near_plus_minus_one() {
        let j = PeriodicJacobi::free(1).unwrap();
        let r = find_generic(&j, 3, 0.5, 1e-6).unwrap();
        assert!(r.t.abs() <= 0.25);
        let gaps = r.spectrum.open_gaps();
        assert_eq!(gaps.len(), 2);
        assert!(gaps[0].lo > -1.0 - r.t.abs() && gaps[0].hi < -1.0 + r.t.abs());
        assert!(gaps[1].lo > 1.0 - r.t.abs() && gaps[1].hi < 1.0 + r.t.abs());
    }

    #[test]
    fn preconditions() {
        let free2 = PeriodicJacobi::free(2).unwrap();
        assert!(matches!(
            find_generic(&free2, 2, 0.5, 1e-6),
            Err(Error::InvalidArgument(_))
        ));
        let j = PeriodicJacobi::free(1).unwrap();
        assert!(find_generic(&j, 2, 0.5, 0.01).is_err());
        assert!(find_generic(&j, 2, 0.0, 1e-9).is_err());
        assert!(find_generic(&j, 1, 0.5, 1e-6).is_err());
    }

    #[test]
    fn exhausted_search_reports_smallest_gap() {
        // a merge tolerance wider than any new gap forces every candidate shut
        let j = PeriodicJacobi::free(1).unwrap();
        let opts = FloquetOptions {
            merge_tol: 0.5,
            ..Default::default()
        };
        match find_generic_with(&j, 2, 0.5, 1e-6, &opts) {
            Err(Error::SearchFailure {
                tried, smallest_gap, ..
            }) => {
                assert_eq!(tried, MAX_CANDIDATES);
                assert_eq!(smallest_gap, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn placement_of_free_k3_gaps() {
        let j = PeriodicJacobi::free(1).unwrap();
        let r = find_generic(&j, 3, 0.5, 1e-6).unwrap();
        let old = band_spectrum(&j).unwrap();
        let bp = break_points(&j, 3).unwrap();
        let rep = gap_placement(&old, &bp, &r.spectrum, r.t.abs(), 1e-12);
        assert!(rep.applicable);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.near_break_points, 2);
        assert_eq!(rep.new_gap_count, 2);
    }
}
