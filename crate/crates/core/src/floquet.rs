//! Bands, gaps and break points of periodic Jacobi operators.
//!
//! Band edges are the eigenvalues of the periodic and antiperiodic
//! restrictions. Sorting the `2p` eigenvalues of both and pairing them
//! consecutively gives the bands `[alpha_j, beta_j]`; the top eigenvalue is
//! periodic, the next antiperiodic, and so on in alternation down the list.
//! Break points are found by bisection on the discriminant, which is
//! monotone across each band.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::eigen::JacobiOptions;
use crate::error::{invalid, Error, Result};
use crate::intervals::IntervalSet;
use crate::jacobi::{BoundarySign, PeriodicJacobi};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FloquetOptions {
    /// Adjacent edges closer than `merge_tol * scale` form a closed gap.
    pub merge_tol: f64,
    pub eigen: JacobiOptions,
    /// Absolute width at which break-point bisection stops.
    pub bisection_tol: f64,
    pub max_bisection_steps: usize,
}

impl Default for FloquetOptions {
    fn default() -> Self {
        FloquetOptions {
            merge_tol: 1e-10,
            eigen: JacobiOptions::default(),
            bisection_tol: 1e-13,
            max_bisection_steps: 200,
        }
    }
}

/// Relative default for deciding that a gap is open.
pub const DEFAULT_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct BandSpectrum {
    bands: Vec<(f64, f64)>,
    closed_gaps: Vec<bool>,
    periodic_eigs: Vec<f64>,
    antiperiodic_eigs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gap {
    pub lo: f64,
    pub hi: f64,
    pub closed: bool,
}

impl Gap {
    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Computes the band spectrum with default options.
pub fn band_spectrum(j: &PeriodicJacobi) -> Result<BandSpectrum> {
    band_spectrum_with(j, &FloquetOptions::default())
}

pub fn band_spectrum_with(j: &PeriodicJacobi, opts: &FloquetOptions) -> Result<BandSpectrum> {
    let plus = j
        .floquet_restriction(BoundarySign::Periodic)
        .eigenvalues(&opts.eigen)?;
    let minus = j
        .floquet_restriction(BoundarySign::Antiperiodic)
        .eigenvalues(&opts.eigen)?;
    let mut all: Vec<f64> = plus.iter().chain(minus.iter()).copied().collect();
    all.sort_by(f64::total_cmp);
    let p = j.period();
    let mut bands: Vec<(f64, f64)> = all.chunks(2).map(|c| (c[0], c[1])).collect();
    let tol = opts.merge_tol * j.scale();
    let mut closed_gaps = Vec::with_capacity(p.saturating_sub(1));
    for i in 0..p.saturating_sub(1) {
        let (beta, alpha_next) = (bands[i].1, bands[i + 1].0);
        if (alpha_next - beta).abs() < tol {
            let mid = 0.5 * (beta + alpha_next);
            bands[i].1 = mid;
            bands[i + 1].0 = mid;
            closed_gaps.push(true);
        } else {
            closed_gaps.push(false);
        }
    }
    if let Some((i, b)) = bands.iter().enumerate().find(|(_, b)| !(b.0 < b.1)) {
        return Err(Error::NumericFailure {
            context: "band_spectrum",
            detail: format!("band {} is degenerate: [{}, {}]", i + 1, b.0, b.1),
        });
    }
    Ok(BandSpectrum {
        bands,
        closed_gaps,
        periodic_eigs: plus,
        antiperiodic_eigs: minus,
    })
}

impl BandSpectrum {
    pub fn bands(&self) -> &[(f64, f64)] {
        &self.bands
    }

    pub fn period(&self) -> usize {
        self.bands.len()
    }

    pub fn closed_gap_flags(&self) -> &[bool] {
        &self.closed_gaps
    }

    /// All `p - 1` gaps, closed ones having zero length.
    pub fn gaps(&self) -> Vec<Gap> {
        self.bands
            .windows(2)
            .zip(&self.closed_gaps)
            .map(|(w, &closed)| Gap {
                lo: w[0].1,
                hi: w[1].0,
                closed,
            })
            .collect()
    }

    pub fn open_gaps(&self) -> Vec<Gap> {
        self.gaps().into_iter().filter(|g| !g.closed).collect()
    }

    /// Shortest band length.
    pub fn lambda(&self) -> f64 {
        self.bands
            .iter()
            .map(|b| b.1 - b.0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_band_length(&self) -> f64 {
        self.bands.iter().map(|b| b.1 - b.0).fold(0.0, f64::max)
    }

    /// Shortest open gap, `None` when there is none.
    pub fn gamma(&self) -> Option<f64> {
        self.open_gaps()
            .iter()
            .map(Gap::length)
            .min_by(f64::total_cmp)
    }

    pub fn to_interval_set(&self) -> IntervalSet {
        IntervalSet::new(self.bands.clone()).expect("bands are sorted with disjoint interiors")
    }

    /// Raw eigenvalues of the periodic restriction, ascending.
    pub fn periodic_eigenvalues(&self) -> &[f64] {
        &self.periodic_eigs
    }

    pub fn antiperiodic_eigenvalues(&self) -> &[f64] {
        &self.antiperiodic_eigs
    }

    /// Checks that, read from the top, the periodic eigenvalues are
    /// `beta_p, alpha_{p-1}, beta_{p-2}, ...` and the antiperiodic ones
    /// `alpha_p, beta_{p-1}, alpha_{p-2}, ...`, within `tol`.
    pub fn interleaving_holds(&self, tol: f64) -> bool {
        let p = self.period();
        let edge = |i: usize, right: bool| {
            let b = self.bands[i];
            if right {
                b.1
            } else {
                b.0
            }
        };
        let expect = |start_right: bool| -> Vec<f64> {
            (0..p)
                .map(|s| edge(p - 1 - s, start_right == (s % 2 == 0)))
                .collect()
        };
        let cmp = |eigs: &[f64], want: Vec<f64>| {
            eigs.len() == p
                && eigs
                    .iter()
                    .rev()
                    .zip(want)
                    .all(|(e, w)| (e - w).abs() <= tol)
        };
        cmp(&self.periodic_eigs, expect(true)) && cmp(&self.antiperiodic_eigs, expect(false))
    }

    /// One band per row: `band,alpha,beta,length`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("band,alpha,beta,length\n");
        for (i, b) in self.bands.iter().enumerate() {
            s.push_str(&format!("{},{},{},{}\n", i + 1, b.0, b.1, b.1 - b.0));
        }
        s
    }
}

#[derive(Serialize, Deserialize)]
struct BandSpectrumJson {
    bands: Vec<(f64, f64)>,
    gaps: Vec<(f64, f64)>,
    closed_gaps: Vec<bool>,
    lambda: f64,
    gamma: Option<f64>,
}

impl Serialize for BandSpectrum {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BandSpectrumJson {
            bands: self.bands.clone(),
            gaps: self.gaps().iter().map(|g| (g.lo, g.hi)).collect(),
            closed_gaps: self.closed_gaps.clone(),
            lambda: self.lambda(),
            gamma: self.gamma(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BandSpectrum {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = BandSpectrumJson::deserialize(d)?;
        if j.bands.is_empty() || j.closed_gaps.len() + 1 != j.bands.len() {
            return Err(serde::de::Error::custom("need p bands and p - 1 gap flags"));
        }
        IntervalSet::new(j.bands.clone()).map_err(serde::de::Error::custom)?;
        Ok(BandSpectrum {
            bands: j.bands,
            closed_gaps: j.closed_gaps,
            periodic_eigs: Vec::new(),
            antiperiodic_eigs: Vec::new(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakPoint {
    pub energy: f64,
    /// `D(energy) = 2 cos(pi j / k)`.
    pub j: usize,
    /// Zero-based band index.
    pub band: usize,
    pub proper: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakPointSet {
    pub k: usize,
    /// Sorted by energy.
    pub points: Vec<BreakPoint>,
}

impl BreakPointSet {
    pub fn proper(&self) -> impl Iterator<Item = &BreakPoint> {
        self.points.iter().filter(|b| b.proper)
    }

    /// Smallest distance between consecutive distinct points; points closer
    /// than `merge_tol` count as one.
    pub fn min_spacing(&self, proper_only: bool, merge_tol: f64) -> f64 {
        let mut es: Vec<f64> = self
            .points
            .iter()
            .filter(|b| b.proper || !proper_only)
            .map(|b| b.energy)
            .collect();
        es.sort_by(f64::total_cmp);
        es.dedup_by(|x, y| (*x - *y).abs() < merge_tol);
        es.windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn break_points(j: &PeriodicJacobi, k: usize) -> Result<BreakPointSet> {
    let spec = band_spectrum(j)?;
    break_points_in(j, &spec, k, &FloquetOptions::default())
}

/// Break points of `j` given its already computed spectrum.
pub fn break_points_in(
    j: &PeriodicJacobi,
    spec: &BandSpectrum,
    k: usize,
    opts: &FloquetOptions,
) -> Result<BreakPointSet> {
    if k < 2 {
        return invalid(format!("break points need k >= 2, got {k}"));
    }
    let mut points = Vec::with_capacity(spec.period() * (k + 1));
    for (band, &(alpha, beta)) in spec.bands().iter().enumerate() {
        let d_alpha = j.discriminant(alpha).0;
        // D runs from +2 to -2 across the band when it starts positive
        let descending = d_alpha > 0.0;
        for jj in 0..=k {
            let target = 2.0 * (PI * jj as f64 / k as f64).cos();
            let energy = if jj == 0 || jj == k {
                let at_left = (jj == 0) == descending;
                if at_left {
                    alpha
                } else {
                    beta
                }
            } else {
                bisect_level(j, alpha, beta, target, opts)?
            };
            points.push(BreakPoint {
                energy,
                j: jj,
                band,
                proper: jj != 0 && jj != k,
            });
        }
    }
    points.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(BreakPointSet { k, points })
}

/// Solves `D(E) = target` on `[lo, hi]`, assuming `D - target` changes sign.
fn bisect_level(
    j: &PeriodicJacobi,
    mut lo: f64,
    mut hi: f64,
    target: f64,
    opts: &FloquetOptions,
) -> Result<f64> {
    let f = |e: f64| j.discriminant(e).0 - target;
    let (mut f_lo, f_hi) = (f(lo), f(hi));
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NumericFailure {
            context: "break_points",
            detail: format!(
                "D - {target} does not change sign on [{lo}, {hi}] ({f_lo:e}, {f_hi:e})"
            ),
        });
    }
    for _ in 0..opts.max_bisection_steps {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= opts.bisection_tol || mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Shortest band, shortest open gap and break-point spacing of a periodic
/// operator, together with the genericity verdict.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub period: usize,
    pub lambda: f64,
    /// `None` when there are no open gaps.
    pub gamma: Option<f64>,
    /// Minimal spacing of consecutive `k_next`-break points.
    pub t: f64,
    pub k_next: usize,
    pub is_generic: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsOptions {
    pub floquet: FloquetOptions,
    /// Restrict the spacing `t` to proper break points.
    pub proper_only: bool,
}

impl Default for MetricsOptions {
    fn default() -> Self {
        MetricsOptions {
            floquet: FloquetOptions::default(),
            proper_only: false,
        }
    }
}

pub fn genericity_metrics(j: &PeriodicJacobi, k_next: usize, gap_tol: f64) -> Result<Metrics> {
    genericity_metrics_with(j, k_next, gap_tol, &MetricsOptions::default()).map(|(m, _)| m)
}

/// Metrics plus the spectrum they were computed from.
pub fn genericity_metrics_with(
    j: &PeriodicJacobi,
    k_next: usize,
    gap_tol: f64,
    opts: &MetricsOptions,
) -> Result<(Metrics, BandSpectrum)> {
    let spec = band_spectrum_with(j, &opts.floquet)?;
    let bp = break_points_in(j, &spec, k_next, &opts.floquet)?;
    let t = bp.min_spacing(opts.proper_only, opts.floquet.merge_tol * j.scale());
    let is_generic = spec.gaps().iter().all(|g| !g.closed && g.length() > gap_tol);
    Ok((
        Metrics {
            period: j.period(),
            lambda: spec.lambda(),
            gamma: spec.gamma(),
            t,
            k_next,
            is_generic,
        },
        spec,
    ))
}
