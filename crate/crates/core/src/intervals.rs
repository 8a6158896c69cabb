//! Finite unions of closed intervals.
//!
//! Every operation here is an exact endpoint merge: no tolerance is applied
//! inside this module, so measures and Hausdorff distances are reproducible
//! down to the last bit of the inputs. Callers that need slack (closed gap
//! detection, certificate margins) apply it themselves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Sorted closed intervals with pairwise disjoint interiors.
///
/// Touching intervals such as `[-2, 0]` and `[0, 2]` are kept as two entries;
/// this is how a periodic spectrum with a closed gap is represented.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for IntervalSet {
    type Error = crate::Error;

    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        IntervalSet::new(v)
    }
}

impl From<IntervalSet> for Vec<(f64, f64)> {
    fn from(s: IntervalSet) -> Self {
        s.intervals
    }
}

impl IntervalSet {
    pub fn empty() -> Self {
        IntervalSet { intervals: Vec::new() }
    }

    /// Validates an already sorted, interior-disjoint list.
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        for (i, &(lo, hi)) in intervals.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return invalid(format!("interval {i} has a non-finite endpoint"));
            }
            if lo > hi {
                return invalid(format!("interval {i} has lo {lo} > hi {hi}"));
            }
            if i > 0 && intervals[i - 1].1 > lo {
                return invalid(format!(
                    "intervals {} and {i} are unsorted or overlap",
                    i - 1
                ));
            }
        }
        Ok(IntervalSet { intervals })
    }

    /// Builds a set from arbitrary intervals, merging overlaps.
    pub fn from_unsorted(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        for &(lo, hi) in &intervals {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return invalid(format!("bad interval [{lo}, {hi}]"));
            }
        }
        intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
        for (lo, hi) in intervals {
            match out.last_mut() {
                // overlaps merge; two proper intervals sharing an endpoint stay apart
                Some(last)
                    if lo < last.1 || (lo == last.1 && (lo == hi || last.0 == last.1)) =>
                {
                    last.1 = last.1.max(hi);
                }
                _ => out.push((lo, hi)),
            }
        }
        Ok(IntervalSet { intervals: out })
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|&(lo, hi)| hi - lo).sum()
    }

    pub fn min(&self) -> Option<f64> {
        self.intervals.first().map(|i| i.0)
    }

    pub fn max(&self) -> Option<f64> {
        self.intervals.last().map(|i| i.1)
    }

    /// All interval endpoints in ascending order (duplicates kept).
    pub fn endpoints(&self) -> Vec<f64> {
        self.intervals.iter().flat_map(|&(lo, hi)| [lo, hi]).collect()
    }

    /// Open intervals between consecutive members, including zero-length
    /// ones where two intervals touch.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.intervals.windows(2).map(|w| (w[0].1, w[1].0)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        let i = self.intervals.partition_point(|&(_, hi)| hi < x);
        i < self.intervals.len() && self.intervals[i].0 <= x
    }

    /// Distance from `x` to the nearest point of the set.
    pub fn distance_to(&self, x: f64) -> f64 {
        if self.intervals.is_empty() {
            return f64::INFINITY;
        }
        let i = self.intervals.partition_point(|&(_, hi)| hi < x);
        let mut d = f64::INFINITY;
        if i < self.intervals.len() {
            let (lo, _) = self.intervals[i];
            d = d.min((lo - x).max(0.0));
        }
        if i > 0 {
            d = d.min(x - self.intervals[i - 1].1);
        }
        d
    }

    pub fn union(&self, other: &IntervalSet) -> IntervalSet {
        let all: Vec<_> = self
            .intervals
            .iter()
            .chain(other.intervals.iter())
            .copied()
            .collect();
        IntervalSet::from_unsorted(all).expect("members of valid sets are valid")
    }

    pub fn intersection(&self, other: &IntervalSet) -> IntervalSet {
        let (a, b) = (&self.intervals, &other.intervals);
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo <= hi {
                out.push((lo, hi));
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        IntervalSet::from_unsorted(out).expect("clipped intervals are valid")
    }

    /// Intersection with the open ball `(center - radius, center + radius)`.
    pub fn intersect_ball(&self, center: f64, radius: f64) -> Result<IntervalSet> {
        if !(radius > 0.0) {
            return invalid(format!("ball radius must be positive, got {radius}"));
        }
        let (left, right) = (center - radius, center + radius);
        let intervals = self
            .intervals
            .iter()
            .filter(|&&(lo, hi)| hi > left && lo < right)
            .map(|&(lo, hi)| (lo.max(left), hi.min(right)))
            .collect();
        Ok(IntervalSet { intervals })
    }

    /// Measure of the set inside `(-inf, y]`.
    pub fn cumulative_measure(&self, y: f64) -> f64 {
        self.intervals
            .iter()
            .take_while(|&&(lo, _)| lo < y)
            .map(|&(lo, hi)| hi.min(y) - lo)
            .sum()
    }

    /// `measure(intersect_ball(center, radius))` without allocating.
    pub fn ball_measure(&self, center: f64, radius: f64) -> f64 {
        let (left, right) = (center - radius, center + radius);
        let start = self.intervals.partition_point(|&(_, hi)| hi <= left);
        self.intervals[start..]
            .iter()
            .take_while(|&&(lo, _)| lo < right)
            // offsets from the center avoid cancellation when radius << |center|
            .map(|&(lo, hi)| (hi - center).clamp(-radius, radius) - (lo - center).clamp(-radius, radius))
            .sum()
    }

    /// Directed Hausdorff distance `sup_{x in self} d(x, other)`.
    fn directed_hausdorff(&self, other: &IntervalSet) -> f64 {
        let gaps = other.gaps();
        let mut worst: f64 = 0.0;
        for &(lo, hi) in &self.intervals {
            worst = worst.max(other.distance_to(lo)).max(other.distance_to(hi));
            // d(., other) is piecewise linear on [lo, hi]; interior maxima sit
            // at gap midpoints of `other`
            let first = gaps.partition_point(|&(_, r)| r <= lo);
            for &(l, r) in gaps[first..].iter().take_while(|&&(l, _)| l < hi) {
                let x = (0.5 * (l + r)).clamp(lo, hi);
                worst = worst.max(other.distance_to(x));
            }
        }
        worst
    }

    /// Hausdorff distance between two nonempty sets.
    pub fn hausdorff_distance(&self, other: &IntervalSet) -> Result<f64> {
        if self.is_empty() || other.is_empty() {
            return invalid("Hausdorff distance needs two nonempty sets");
        }
        Ok(self
            .directed_hausdorff(other)
            .max(other.directed_hausdorff(self)))
    }

    /// Open `radius`-neighborhood, returned as its closure.
    pub fn fattened(&self, radius: f64) -> IntervalSet {
        let v = self
            .intervals
            .iter()
            .map(|&(lo, hi)| (lo - radius, hi + radius))
            .collect();
        IntervalSet::from_unsorted(v).expect("fattening keeps intervals valid")
    }

    /// Sweeps `(x, delta)` over `grid` and returns the minimum of
    /// `ball_measure(x, delta) / delta`.
    pub fn homogeneity_profile(&self, tau: f64, grid: &ProfileGrid) -> Result<HomogeneityReport> {
        if !(tau > 0.0 && tau < 1.0) {
            return invalid(format!("tau must lie in (0, 1), got {tau}"));
        }
        let sweep = self.min_ratio(grid)?;
        Ok(HomogeneityReport {
            tau,
            min_ratio: sweep.ratio,
            argmin_x: sweep.x,
            argmin_delta: sweep.delta,
            pass: sweep.ratio >= tau,
        })
    }

    /// Lowest `ball_measure(x, delta) / delta` over the profile grid.
    pub fn min_ratio(&self, grid: &ProfileGrid) -> Result<RatioMin> {
        if self.is_empty() {
            return invalid("homogeneity of an empty set is undefined");
        }
        let deltas = grid.deltas()?;
        let xs = self.sample_points(grid.n_points);
        let best = xs
            .par_iter()
            .map(|&x| {
                let mut best = RatioMin {
                    ratio: f64::INFINITY,
                    x,
                    delta: deltas[0],
                };
                for &delta in &deltas {
                    let r = self.ball_measure(x, delta) / delta;
                    if r < best.ratio {
                        best = RatioMin { ratio: r, x, delta };
                    }
                }
                best
            })
            .reduce_with(|a, b| if b.ratio < a.ratio { b } else { a })
            .expect("nonempty set has endpoints");
        Ok(best)
    }

    /// Every endpoint plus `n_interior` points spread uniformly in measure.
    pub fn sample_points(&self, n_interior: usize) -> Vec<f64> {
        let mut xs = self.endpoints();
        let total = self.measure();
        if n_interior > 0 && total > 0.0 {
            let mut k = 0;
            let mut acc = 0.0;
            for &(lo, hi) in &self.intervals {
                let len = hi - lo;
                while k < n_interior {
                    let target = (k as f64 + 0.5) / n_interior as f64 * total;
                    if target > acc + len {
                        break;
                    }
                    xs.push((lo + (target - acc)).clamp(lo, hi));
                    k += 1;
                }
                acc += len;
            }
        }
        xs
    }
}

/// Sampling grid for homogeneity sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileGrid {
    pub delta_max: f64,
    /// Smallest radius, as a fraction of `delta_max`.
    pub delta_min_ratio: f64,
    pub n_delta: usize,
    pub n_points: usize,
}

impl ProfileGrid {
    pub const DEFAULT_N_DELTA: usize = 64;
    pub const DEFAULT_MIN_RATIO: f64 = 1e-10;

    pub fn new(delta_max: f64, n_delta: usize, n_points: usize) -> Self {
        ProfileGrid {
            delta_max,
            delta_min_ratio: Self::DEFAULT_MIN_RATIO,
            n_delta,
            n_points,
        }
    }

    /// Log-spaced radii ending exactly at `delta_max`.
    pub fn deltas(&self) -> Result<Vec<f64>> {
        if !(self.delta_max > 0.0 && self.delta_max.is_finite()) {
            return invalid(format!("delta_max must be positive, got {}", self.delta_max));
        }
        if !(self.delta_min_ratio > 0.0 && self.delta_min_ratio <= 1.0) {
            return invalid("delta_min_ratio must lie in (0, 1]");
        }
        if self.n_delta == 0 {
            return invalid("n_delta must be at least 1");
        }
        if self.n_delta == 1 {
            return Ok(vec![self.delta_max]);
        }
        let lo = self.delta_min_ratio.ln();
        let steps = (self.n_delta - 1) as f64;
        Ok((0..self.n_delta)
            .map(|i| {
                if i + 1 == self.n_delta {
                    self.delta_max
                } else {
                    self.delta_max * (lo * (1.0 - i as f64 / steps)).exp()
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioMin {
    pub ratio: f64,
    pub x: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomogeneityReport {
    pub tau: f64,
    pub min_ratio: f64,
    pub argmin_x: f64,
    pub argmin_delta: f64,
    pub pass: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[(f64, f64)]) -> IntervalSet {
        IntervalSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn measure_examples() {
        assert_eq!(IntervalSet::empty().measure(), 0.0);
        assert_eq!(set(&[(0.0, 1.0)]).measure(), 1.0);
        assert_eq!(set(&[(-2.0, 0.0), (0.0, 2.0)]).measure(), 4.0);
    }

    #[test]
    fn rejects_overlap_and_reversed() {
        assert!(IntervalSet::new(vec![(0.0, 2.0), (1.0, 3.0)]).is_err());
        assert!(IntervalSet::new(vec![(1.0, 0.0)]).is_err());
        assert!(IntervalSet::new(vec![(0.0, f64::NAN)]).is_err());
    }

    #[test]
    fn ball_examples() {
        let s = set(&[(0.0, 1.0)]);
        let b = s.intersect_ball(0.5, 0.2).unwrap();
        assert_eq!(b.len(), 1);
        assert!((b.intervals()[0].0 - 0.3).abs() < 1e-15);
        assert!((b.intervals()[0].1 - 0.7).abs() < 1e-15);
        assert!(s.intersect_ball(2.0, 0.5).unwrap().is_empty());
        let t = set(&[(-2.0, 0.0), (1.0, 2.0)]);
        assert_eq!(
            t.intersect_ball(0.0, 1.5).unwrap().intervals(),
            &[(-1.5, 0.0), (1.0, 1.5)]
        );
        assert!(s.intersect_ball(0.0, 0.0).is_err());
        assert!(s.intersect_ball(0.0, -1.0).is_err());
        // the ball is open: touching at one point gives nothing
        assert!(s.intersect_ball(1.5, 0.5).unwrap().is_empty());
    }

    #[test]
    fn ball_measure_matches_clipping() {
        let s = set(&[(-2.0, -1.0), (-0.5, 0.0), (0.0, 0.25), (1.0, 3.0)]);
        for &(c, r) in &[(0.0, 0.1), (-1.2, 0.9), (2.0, 5.0), (0.9, 0.1), (10.0, 1.0)] {
            let direct = s.intersect_ball(c, r).unwrap().measure();
            assert!((s.ball_measure(c, r) - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn hausdorff_examples() {
        let a = set(&[(0.0, 1.0)]);
        assert_eq!(a.hausdorff_distance(&a).unwrap(), 0.0);
        let b = set(&[(-2.0, 2.0)]);
        let c = set(&[(-1.5, 2.5)]);
        assert_eq!(b.hausdorff_distance(&c).unwrap(), 0.5);
        let d = set(&[(0.0, 1.0), (3.0, 3.0)]);
        assert_eq!(a.hausdorff_distance(&d).unwrap(), 2.0);
        assert!(a.hausdorff_distance(&IntervalSet::empty()).is_err());
    }

    #[test]
    fn hausdorff_sees_gap_midpoints() {
        // [0,4] against {[0,1],[3,4]}: the worst point is 2, distance 1
        let a = set(&[(0.0, 4.0)]);
        let b = set(&[(0.0, 1.0), (3.0, 4.0)]);
        assert_eq!(a.hausdorff_distance(&b).unwrap(), 1.0);
    }

    #[test]
    fn union_keeps_touching_pieces() {
        let a = set(&[(0.0, 1.0)]);
        let b = IntervalSet::from_unsorted(vec![(1.0, 2.0), (0.5, 0.75)]).unwrap();
        let u = a.union(&b);
        assert_eq!(u.intervals(), &[(0.0, 1.0), (1.0, 2.0)]);
        assert_eq!(u.measure(), 2.0);
    }

    #[test]
    fn homogeneity_single_interval() {
        let s = set(&[(0.0, 1.0)]);
        let r = s
            .homogeneity_profile(0.5, &ProfileGrid::new(0.25, 64, 50))
            .unwrap();
        assert!(r.pass);
        assert!((r.min_ratio - 1.0).abs() < 1e-12);
        let r = s
            .homogeneity_profile(0.99, &ProfileGrid::new(1.0, 64, 50))
            .unwrap();
        assert!(r.pass);
        assert!((r.min_ratio - 1.0).abs() < 1e-12);
    }

    #[test]
    fn homogeneity_two_intervals_worst_case_at_outer_endpoint() {
        // brute-force oracle over a fine (x, delta) lattice, endpoints included
        let s = set(&[(0.0, 1.0), (2.0, 3.0)]);
        let mut oracle = f64::INFINITY;
        for i in 0..=300 {
            let x = 3.0 * i as f64 / 300.0;
            if !s.contains(x) {
                continue;
            }
            for k in 1..=400 {
                let d = 2.0 * k as f64 / 400.0;
                oracle = oracle.min(s.ball_measure(x, d) / d);
            }
        }
        assert!((oracle - 0.5).abs() < 1e-12);
        let r = s
            .homogeneity_profile(0.9, &ProfileGrid::new(2.0, 64, 200))
            .unwrap();
        assert!((r.min_ratio - 0.5).abs() < 1e-12);
        assert!(r.argmin_x == 0.0 || r.argmin_x == 3.0);
        assert_eq!(r.argmin_delta, 2.0);
        assert!(!r.pass);
    }

    #[test]
    fn profile_rejects_bad_tau() {
        let s = set(&[(0.0, 1.0)]);
        assert!(s.homogeneity_profile(1.0, &ProfileGrid::new(1.0, 8, 8)).is_err());
        assert!(s.homogeneity_profile(0.5, &ProfileGrid::new(0.0, 8, 8)).is_err());
    }

    #[test]
    fn deltas_are_log_spaced() {
        let d = ProfileGrid::new(4.0, 64, 0).deltas().unwrap();
        assert_eq!(d.len(), 64);
        assert_eq!(*d.last().unwrap(), 4.0);
        assert!((d[0] - 4e-10).abs() < 1e-20);
        let r1 = d[1] / d[0];
        let r2 = d[40] / d[39];
        assert!((r1 - r2).abs() < 1e-9);
    }

    #[test]
    fn json_shape() {
        let s = set(&[(-2.0, 0.0), (0.5, 2.0)]);
        let j = serde_json::to_string(&s).unwrap();
        assert_eq!(j, "[[-2.0,0.0],[0.5,2.0]]");
        let back: IntervalSet = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
        assert!(serde_json::from_str::<IntervalSet>("[[1.0,0.0]]").is_err());
    }
}
