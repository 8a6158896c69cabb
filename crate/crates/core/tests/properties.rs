use lpspec::floquet::{band_spectrum, break_points};
use lpspec::gap_opening::find_generic;
use lpspec::intervals::{IntervalSet, ProfileGrid};
use lpspec::jacobi::{PeriodicJacobi, PeriodicSequence};
use proptest::prelude::*;

fn interval_set() -> impl Strategy<Value = IntervalSet> {
    prop::collection::vec((-10.0f64..10.0, 0.01f64..3.0), 1..6).prop_map(|v| {
        IntervalSet::from_unsorted(v.into_iter().map(|(lo, len)| (lo, lo + len)).collect()).unwrap()
    })
}

fn operator(max_p: usize) -> impl Strategy<Value = PeriodicJacobi> {
    (1..=max_p).prop_flat_map(|p| {
        (
            prop::collection::vec(0.5f64..=2.0, p),
            prop::collection::vec(-2.0f64..=2.0, p),
        )
            .prop_map(|(a, b)| {
                PeriodicJacobi::new(
                    PeriodicSequence::new(a).unwrap(),
                    PeriodicSequence::new(b).unwrap(),
                )
                .unwrap()
            })
    })
}

/// Every interval pulled inward by `s` from both ends.
fn shrink(s: &IntervalSet, by: f64) -> IntervalSet {
    IntervalSet::new(
        s.intervals()
            .iter()
            .filter(|(lo, hi)| hi - lo > 2.0 * by)
            .map(|&(lo, hi)| (lo + by, hi - by))
            .collect(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn inclusion_exclusion(a in interval_set(), b in interval_set()) {
        let lhs = a.union(&b).measure() + a.intersection(&b).measure();
        let rhs = a.measure() + b.measure();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs));
    }

    #[test]
    fn hausdorff_is_a_metric(a in interval_set(), b in interval_set(), c in interval_set()) {
        let ab = a.hausdorff_distance(&b).unwrap();
        let ba = b.hausdorff_distance(&a).unwrap();
        prop_assert_eq!(ab, ba);
        prop_assert_eq!(a.hausdorff_distance(&a).unwrap(), 0.0);
        let ac = a.hausdorff_distance(&c).unwrap();
        let cb = c.hausdorff_distance(&b).unwrap();
        prop_assert!(ab <= ac + cb + 1e-12);
    }

    #[test]
    fn intersection_measure_upper_semicontinuous(a in interval_set(), b in interval_set()) {
        let limit = a.intersection(&b).measure();
        let tail = (0..6)
            .map(|n| {
                let s = 0.1 * 0.5f64.powi(n);
                shrink(&a, s).intersection(&shrink(&b, s)).measure()
            })
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(limit >= tail - 1e-9);
    }

    #[test]
    fn single_interval_is_one_homogeneous(lo in -5.0f64..5.0, len in 0.1f64..4.0, frac in 0.01f64..=1.0) {
        let s = IntervalSet::new(vec![(lo, lo + len)]).unwrap();
        let rep = s.homogeneity_profile(0.5, &ProfileGrid::new(frac * len, 64, 50)).unwrap();
        prop_assert!((rep.min_ratio - 1.0).abs() < 1e-12, "{:?}", rep);
        prop_assert!(rep.pass);
    }

    #[test]
    fn monodromy_is_unimodular(j in operator(8), e in -7.0f64..7.0) {
        let m = j.monodromy(e);
        prop_assert!((m.det() - 1.0).abs() <= 1e-9 * m.max_abs().powi(2).max(1.0));
    }

    #[test]
    fn discriminant_derivative_matches_differences(j in operator(6), e in -6.0f64..6.0) {
        let h = 1e-6;
        let (_, dd) = j.discriminant(e);
        let fd = (j.discriminant(e + h).0 - j.discriminant(e - h).0) / (2.0 * h);
        prop_assert!((dd - fd).abs() <= 1e-5 * dd.abs().max(1.0), "{} vs {}", dd, fd);
    }

    #[test]
    fn bands_are_where_discriminant_is_small(j in operator(6), e in -7.0f64..7.0) {
        let spec = band_spectrum(&j).unwrap();
        let sigma = spec.to_interval_set();
        let (d, _) = j.discriminant(e);
        // skip energies whose classification is within rounding of an edge
        if sigma.endpoints().iter().all(|x| (x - e).abs() > 1e-7) {
            prop_assert_eq!(d.abs() <= 2.0, sigma.contains(e));
        }
    }

    #[test]
    fn band_edges_and_interiors(j in operator(8)) {
        let spec = band_spectrum(&j).unwrap();
        let (lo_bound, hi_bound) = j.spectrum_hull_bound();
        for &(lo, hi) in spec.bands() {
            for e in [lo, hi] {
                let d = j.discriminant(e).0;
                prop_assert!((d.abs() - 2.0).abs() <= 1e-8 * (1.0 + e.abs()), "D({}) = {}", e, d);
            }
            prop_assert!(lo >= lo_bound - 1e-12 && hi <= hi_bound + 1e-12);
            for i in 1..=100 {
                let e = lo + (hi - lo) * i as f64 / 101.0;
                prop_assert!(j.discriminant(e).0.abs() < 2.0 + 1e-9);
            }
        }
    }

    #[test]
    fn break_points_ordered_by_level(j in operator(5), k in 2usize..5) {
        let set = break_points(&j, k).unwrap();
        let spec = band_spectrum(&j).unwrap();
        for band in 0..spec.period() {
            let pts: Vec<_> = set.points.iter().filter(|b| b.band == band).collect();
            prop_assert_eq!(pts.len(), k + 1);
            let up = pts.windows(2).all(|w| w[1].j > w[0].j);
            let down = pts.windows(2).all(|w| w[1].j < w[0].j);
            prop_assert!(up || down);
        }
    }

    #[test]
    fn perturbation_stays_in_budget(j in operator(3), k in 2usize..4, budget in 0.01f64..0.5) {
        let spec = band_spectrum(&j).unwrap();
        prop_assume!(spec.gaps().iter().all(|g| !g.closed && g.length() > 1e-6));
        if let Ok(found) = find_generic(&j, k, budget, budget / 100.0) {
            let d = found.b.sup_distance(j.b());
            prop_assert_eq!(d, found.t.abs());
            prop_assert!(d < budget);
            prop_assert_eq!(found.spectrum.open_gaps().len(), k * j.period() - 1);
        }
    }
}
