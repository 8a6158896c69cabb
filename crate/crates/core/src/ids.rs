//! Integrated density of states of periodic Jacobi operators.
//!
//! Inside a band the monodromy is elliptic and `2 cos(theta) = D(E)` defines
//! the Floquet phase; `k(E)` grows by `1/p` across each band with density
//! `|dtheta/dE| / (pi p)`. Each site's monodromy `Phi_j` is conjugated to a
//! rotation by an explicit upper-triangular `M_j`, whose Hilbert-Schmidt
//! norms give a lower bound on the density and, integrated, an upper bound
//! `2 pi A^2 / p` on band lengths.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::floquet::{band_spectrum, BandSpectrum};
use crate::jacobi::PeriodicJacobi;
use crate::mat2::Mat2;

/// Relative distance from band edges inside which densities are refused.
pub const DEFAULT_EDGE_MARGIN: f64 = 1e-6;

/// `m21 - m12`.
pub fn anti_trace(m: &Mat2) -> f64 {
    m.m21 - m.m12
}

/// The unique fixed point in the upper half plane of the Mobius action of
/// an elliptic matrix of unit determinant.
///
/// The discriminant is taken as `(2 - tr)(2 + tr)`: the computed determinant
/// of a long transfer product carries an error of order `eps ||M||^2`, far
/// larger than the error in its trace.
pub fn elliptic_fixed_point(m: &Mat2) -> Result<Complex64> {
    let det = m.det();
    if !((det - 1.0).abs() <= 1e-6 * m.max_abs().powi(2).max(1.0)) {
        return invalid(format!("determinant {det} is not 1"));
    }
    let tr = m.trace();
    let disc = (2.0 - tr) * (2.0 + tr);
    if !(disc > 0.0) || m.m21 == 0.0 {
        return Err(Error::NotElliptic { trace: tr });
    }
    Ok(Complex64::new(
        (m.m11 - m.m22) / (2.0 * m.m21),
        disc.sqrt() / (2.0 * m.m21.abs()),
    ))
}

/// `M(z) = (Im z)^{-1/2} [[1, -Re z], [0, Im z]]`, which maps `z` to `i`.
pub fn conjugacy_from_point(z: Complex64) -> Mat2 {
    let s = z.im.sqrt().recip();
    Mat2::new(s, -z.re * s, 0.0, z.im * s)
}

/// A conjugacy `M` with `M m M^{-1}` a rotation.
pub fn conjugacy_to_rotation(m: &Mat2) -> Result<Mat2> {
    elliptic_fixed_point(m).map(conjugacy_from_point)
}

/// `||M(z)||_HS^2 = (1 + |z|^2) / Im z`.
pub fn conjugacy_norm_sq(z: Complex64) -> f64 {
    (1.0 + z.norm_sqr()) / z.im
}

fn locate_band(spec: &BandSpectrum, energy: f64) -> Option<usize> {
    spec.bands()
        .iter()
        .position(|&(lo, hi)| energy >= lo && energy <= hi)
}

fn check_interior(spec: &BandSpectrum, energy: f64, margin_rel: f64) -> Result<usize> {
    let band = locate_band(spec, energy);
    let Some(i) = band else {
        return Err(Error::EdgeSingularity {
            energy,
            margin: f64::INFINITY,
        });
    };
    let (lo, hi) = spec.bands()[i];
    let margin = (energy - lo).min(hi - energy);
    if margin <= margin_rel * (hi - lo) {
        return Err(Error::EdgeSingularity { energy, margin });
    }
    Ok(i)
}

/// `dk/dE = |D'(E)| / (pi p sqrt(4 - D(E)^2))` at an energy at least
/// `DEFAULT_EDGE_MARGIN` band lengths inside a band.
pub fn ids_density(j: &PeriodicJacobi, energy: f64) -> Result<f64> {
    let spec = band_spectrum(j)?;
    ids_density_in(j, &spec, energy, DEFAULT_EDGE_MARGIN)
}

pub fn ids_density_in(
    j: &PeriodicJacobi,
    spec: &BandSpectrum,
    energy: f64,
    margin_rel: f64,
) -> Result<f64> {
    check_interior(spec, energy, margin_rel)?;
    density_raw(j, energy)
}

fn density_raw(j: &PeriodicJacobi, energy: f64) -> Result<f64> {
    let (d, dd) = j.discriminant(energy);
    let s = 4.0 - d * d;
    if !(s > 0.0) {
        return Err(Error::EdgeSingularity {
            energy,
            margin: 0.0,
        });
    }
    Ok(dd.abs() / (PI * j.period() as f64 * s.sqrt()))
}

/// Per-site elliptic data at an energy inside a band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EllipticData {
    pub energy: f64,
    pub z: Vec<Complex64>,
    pub m: Vec<Mat2>,
    pub hs_sq: Vec<f64>,
    /// `Phi_j = A_{j-1} Phi_1 A_{j-1}^{-1}`, the monodromy started at site `j`.
    pub phi: Vec<Mat2>,
}

pub fn elliptic_data(j: &PeriodicJacobi, energy: f64) -> Result<EllipticData> {
    let p = j.period();
    let transfers: Vec<Mat2> = (1..=p as i64).map(|n| j.transfer_matrix(energy, n)).collect();
    let mut z = Vec::with_capacity(p);
    let mut m = Vec::with_capacity(p);
    let mut hs_sq = Vec::with_capacity(p);
    let mut phi = Vec::with_capacity(p);
    for start in 0..p {
        // the cyclic product T(j-1) ... T(1) T(p) ... T(j) equals
        // A_{j-1} Phi_1 A_{j-1}^{-1} without the cancellation of forming it so
        let phi_j = (0..p).fold(Mat2::IDENTITY, |acc, i| transfers[(start + i) % p] * acc);
        let zj = elliptic_fixed_point(&phi_j).map_err(|_| Error::EdgeSingularity {
            energy,
            margin: 0.0,
        })?;
        z.push(zj);
        m.push(conjugacy_from_point(zj));
        hs_sq.push(conjugacy_norm_sq(zj));
        phi.push(phi_j);
    }
    Ok(EllipticData {
        energy,
        z,
        m,
        hs_sq,
        phi,
    })
}

/// `(1 / (4 pi A^2 p)) sum_j ||M_j||^2`, a lower bound for `dk/dE`.
pub fn hs_lower_bound(j: &PeriodicJacobi, energy: f64) -> Result<f64> {
    let (d, _) = j.discriminant(energy);
    if !(d.abs() < 2.0) {
        return Err(Error::EdgeSingularity {
            energy,
            margin: 0.0,
        });
    }
    let data = elliptic_data(j, energy)?;
    let a = j.a_bound();
    Ok(data.hs_sq.iter().sum::<f64>() / (4.0 * PI * a * a * j.period() as f64))
}

/// Floquet phase at an energy inside a band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub energy: f64,
    /// `arccos(D/2)` in `[0, pi]`.
    pub theta: f64,
    pub sin_theta: f64,
    /// Zero-based band index.
    pub band: usize,
}

pub fn phase_at(j: &PeriodicJacobi, energy: f64) -> Result<PhasePoint> {
    let spec = band_spectrum(j)?;
    let band = check_interior(&spec, energy, 0.0)?;
    let (d, _) = j.discriminant(energy);
    let theta = (0.5 * d).clamp(-1.0, 1.0).acos();
    Ok(PhasePoint {
        energy,
        theta,
        sin_theta: theta.sin(),
        band,
    })
}

/// Edge phases are pinned to 0 or pi according to the sign of `D` there.
fn edge_theta(d: f64) -> f64 {
    if d > 0.0 {
        0.0
    } else {
        PI
    }
}

const MAX_PHASE_REFINEMENTS: usize = 16;

/// `|theta(beta) - theta(alpha)| / (pi p)` for a zero-based band, by
/// continuation of `arccos(D/2)` along a grid refined until every step is
/// below `pi/4`.
pub fn phase_increment(j: &PeriodicJacobi, band: usize) -> Result<f64> {
    let spec = band_spectrum(j)?;
    phase_increment_in(j, &spec, band)
}

pub fn phase_increment_in(j: &PeriodicJacobi, spec: &BandSpectrum, band: usize) -> Result<f64> {
    let Some(&(lo, hi)) = spec.bands().get(band) else {
        return invalid(format!("band {band} out of range (p = {})", spec.period()));
    };
    let mut n = 16usize;
    for _ in 0..MAX_PHASE_REFINEMENTS {
        let thetas: Vec<f64> = (0..=n)
            .map(|i| {
                let e = lo + (hi - lo) * i as f64 / n as f64;
                let d = j.discriminant(e).0;
                if i == 0 || i == n {
                    edge_theta(d)
                } else {
                    (0.5 * d).clamp(-1.0, 1.0).acos()
                }
            })
            .collect();
        let steps: Vec<f64> = thetas.windows(2).map(|w| w[1] - w[0]).collect();
        if steps.iter().all(|s| s.abs() < PI / 4.0) {
            let up = steps.iter().all(|&s| s >= 0.0);
            let down = steps.iter().all(|&s| s <= 0.0);
            if !(up || down) {
                return Err(Error::NumericFailure {
                    context: "phase_increment",
                    detail: format!("phase is not monotone across band {band}"),
                });
            }
            let total: f64 = steps.iter().sum();
            return Ok(total.abs() / (PI * j.period() as f64));
        }
        n *= 2;
    }
    Err(Error::NumericFailure {
        context: "phase_increment",
        detail: format!("phase steps stayed above pi/4 after {n} grid points"),
    })
}

/// `k(E)`: zero below the spectrum, one above, `m/p` in the gap after band
/// `m`, interpolated by the phase inside bands.
pub fn integrated_density(j: &PeriodicJacobi, energy: f64) -> Result<f64> {
    let spec = band_spectrum(j)?;
    let p = j.period() as f64;
    let bands = spec.bands();
    let below = bands.iter().filter(|b| b.1 <= energy).count();
    match bands.iter().position(|&(lo, hi)| energy > lo && energy < hi) {
        None => Ok(below as f64 / p),
        Some(i) => {
            let d_lo = j.discriminant(bands[i].0).0;
            let d = j.discriminant(energy).0;
            let theta = (0.5 * d).clamp(-1.0, 1.0).acos();
            let frac = (theta - edge_theta(d_lo)).abs() / PI;
            Ok((i as f64 + frac) / p)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandLengthReport {
    pub period: usize,
    pub a_bound: f64,
    pub max_band_length: f64,
    /// `2 pi A^2 / p`.
    pub bound: f64,
    pub slack: f64,
    pub holds: bool,
}

pub fn band_length_check(j: &PeriodicJacobi) -> Result<BandLengthReport> {
    let spec = band_spectrum(j)?;
    let a = j.a_bound();
    let bound = 2.0 * PI * a * a / j.period() as f64;
    let max = spec.max_band_length();
    Ok(BandLengthReport {
        period: j.period(),
        a_bound: a,
        max_band_length: max,
        bound,
        slack: bound - max,
        holds: max <= bound,
    })
}

/// One row of a density table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub energy: f64,
    pub band: usize,
    pub density: f64,
    pub hs_lower_bound: f64,
}

/// Densities on `n_per_band` points per band, placed at cell midpoints so
/// that no sample sits on an edge.
pub fn density_table(j: &PeriodicJacobi, n_per_band: usize) -> Result<Vec<DensitySample>> {
    use rayon::prelude::*;
    let spec = band_spectrum(j)?;
    let mut energies = Vec::new();
    for (b, &(lo, hi)) in spec.bands().iter().enumerate() {
        for i in 0..n_per_band {
            energies.push((b, lo + (hi - lo) * (i as f64 + 0.5) / n_per_band as f64));
        }
    }
    energies
        .par_iter()
        .map(|&(band, e)| {
            Ok(DensitySample {
                energy: e,
                band,
                density: ids_density_in(j, &spec, e, 0.0)?,
                hs_lower_bound: hs_lower_bound(j, e)?,
            })
        })
        .collect()
}
