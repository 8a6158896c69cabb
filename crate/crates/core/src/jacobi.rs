//! Periodic Jacobi operators
//!
//! `(J u)(n) = a(n-1) u(n-1) + a(n) u(n+1) + b(n) u(n)` with `a > 0` and
//! `a`, `b` periodic. Sequences are indexed from 1: `values[0]` is `s(1)`.

use serde::{Deserialize, Serialize};

use crate::eigen::{symmetric_eigenvalues, JacobiOptions, SymMatrix};
use crate::error::{invalid, Result};
use crate::mat2::{Mat2, ScaledMat2};

/// One period of a bi-infinite periodic sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct PeriodicSequence {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for PeriodicSequence {
    type Error = crate::Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        PeriodicSequence::new(v)
    }
}

impl From<PeriodicSequence> for Vec<f64> {
    fn from(s: PeriodicSequence) -> Self {
        s.values
    }
}

impl PeriodicSequence {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return invalid("a periodic sequence needs at least one value");
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return invalid(format!("value {} is not finite", i + 1));
        }
        Ok(PeriodicSequence { values })
    }

    pub fn constant(value: f64, period: usize) -> Result<Self> {
        PeriodicSequence::new(vec![value; period])
    }

    pub fn period(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `s(n)` for any integer `n`.
    pub fn at(&self, n: i64) -> f64 {
        let p = self.values.len() as i64;
        self.values[((n - 1).rem_euclid(p)) as usize]
    }

    /// The same sequence written over `period` entries; `period` must be a
    /// multiple of the current period.
    pub fn extend_to(&self, period: usize) -> Result<PeriodicSequence> {
        if period == 0 || period % self.period() != 0 {
            return invalid(format!(
                "cannot extend period {} to {period}",
                self.period()
            ));
        }
        Ok(PeriodicSequence {
            values: (1..=period as i64).map(|n| self.at(n)).collect(),
        })
    }

    /// Smallest period of the sequence.
    pub fn minimal_period(&self) -> usize {
        let p = self.period();
        (1..=p)
            .filter(|d| p % d == 0)
            .find(|&d| (0..p).all(|i| self.values[i] == self.values[i % d]))
            .unwrap_or(p)
    }

    /// `sup_n |s(n) - t(n)|`.
    pub fn sup_distance(&self, other: &PeriodicSequence) -> f64 {
        let l = lcm(self.period(), other.period());
        (1..=l as i64)
            .map(|n| (self.at(n) - other.at(n)).abs())
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Shift by `k`: `s'(n) = s(n + k)`.
    pub fn shifted(&self, k: i64) -> PeriodicSequence {
        PeriodicSequence {
            values: (1..=self.period() as i64).map(|n| self.at(n + k)).collect(),
        }
    }
}

pub fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// A periodic Jacobi operator with both sequences written over a common period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JacobiJson", into = "JacobiJson")]
pub struct PeriodicJacobi {
    a: PeriodicSequence,
    b: PeriodicSequence,
    a_bound: f64,
}

#[derive(Serialize, Deserialize)]
struct JacobiJson {
    p: usize,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<JacobiJson> for PeriodicJacobi {
    type Error = crate::Error;

    fn try_from(j: JacobiJson) -> Result<Self> {
        let op = PeriodicJacobi::new(PeriodicSequence::new(j.a)?, PeriodicSequence::new(j.b)?)?;
        if op.period() != j.p {
            let op = op.extend_to(j.p)?;
            return Ok(op);
        }
        Ok(op)
    }
}

impl From<PeriodicJacobi> for JacobiJson {
    fn from(j: PeriodicJacobi) -> Self {
        JacobiJson {
            p: j.period(),
            a: j.a.values,
            b: j.b.values,
        }
    }
}

impl PeriodicJacobi {
    pub fn new(a: PeriodicSequence, b: PeriodicSequence) -> Result<Self> {
        if let Some(i) = a.values().iter().position(|&v| !(v > 0.0)) {
            return invalid(format!("off-diagonal a({}) must be positive", i + 1));
        }
        let p = lcm(a.period(), b.period());
        let a = a.extend_to(p)?;
        let b = b.extend_to(p)?;
        let a_bound = a.max().max(1.0);
        Ok(PeriodicJacobi { a, b, a_bound })
    }

    /// The free operator `a = 1`, `b = 0` of period `p`.
    pub fn free(p: usize) -> Result<Self> {
        PeriodicJacobi::new(
            PeriodicSequence::constant(1.0, p)?,
            PeriodicSequence::constant(0.0, p)?,
        )
    }

    /// Schrodinger case `a = 1`.
    pub fn schrodinger(b: Vec<f64>) -> Result<Self> {
        PeriodicJacobi::new(PeriodicSequence::constant(1.0, 1)?, PeriodicSequence::new(b)?)
    }

    pub fn period(&self) -> usize {
        self.a.period()
    }

    pub fn a(&self) -> &PeriodicSequence {
        &self.a
    }

    pub fn b(&self) -> &PeriodicSequence {
        &self.b
    }

    /// `A = max(1, a(1), ..., a(p))`.
    pub fn a_bound(&self) -> f64 {
        self.a_bound
    }

    /// Same `a`, new diagonal.
    pub fn with_b(&self, b: PeriodicSequence) -> Result<Self> {
        PeriodicJacobi::new(self.a.clone(), b)
    }

    pub fn extend_to(&self, period: usize) -> Result<Self> {
        PeriodicJacobi::new(self.a.extend_to(period)?, self.b.extend_to(period)?)
    }

    /// Closed interval guaranteed to contain the spectrum.
    pub fn spectrum_hull_bound(&self) -> (f64, f64) {
        let two_a = 2.0 * self.a.max();
        (self.b.min() - two_a, self.b.max() + two_a)
    }

    /// Energy scale used for relative tolerances.
    pub fn scale(&self) -> f64 {
        (self.b.sup_norm() + 2.0 * self.a.max()).max(1.0)
    }

    /// One-step transfer matrix `T_E(n)`.
    pub fn transfer_matrix(&self, energy: f64, n: i64) -> Mat2 {
        let a = self.a.at(n);
        let b = self.b.at(n);
        Mat2::new((energy - b) / a, -1.0 / a, a, 0.0)
    }

    /// `dT_E(n)/dE`.
    pub fn transfer_derivative(&self, n: i64) -> Mat2 {
        Mat2::new(1.0 / self.a.at(n), 0.0, 0.0, 0.0)
    }

    /// `T_E(p) ... T_E(1)` with exponent tracking.
    pub fn monodromy_scaled(&self, energy: f64) -> ScaledMat2 {
        let mut acc = ScaledMat2::identity();
        for n in 1..=self.period() as i64 {
            acc.left_mul(&self.transfer_matrix(energy, n));
        }
        acc
    }

    pub fn monodromy(&self, energy: f64) -> Mat2 {
        self.monodromy_scaled(energy).to_mat2()
    }

    /// Prefix products `A_0 = I, A_1 = T(1), ..., A_p = T(p) ... T(1)`.
    pub fn transfer_prefixes(&self, energy: f64) -> Vec<Mat2> {
        let mut out = Vec::with_capacity(self.period() + 1);
        let mut acc = Mat2::IDENTITY;
        out.push(acc);
        for n in 1..=self.period() as i64 {
            acc = self.transfer_matrix(energy, n) * acc;
            out.push(acc);
        }
        out
    }

    /// Discriminant `D(E) = tr(monodromy)` and its derivative, the latter by
    /// the product rule over the transfer factors.
    pub fn discriminant(&self, energy: f64) -> (f64, f64) {
        let mut prod = Mat2::IDENTITY;
        let mut deriv = Mat2::ZERO;
        let mut exponent = 0i32;
        for n in 1..=self.period() as i64 {
            let t = self.transfer_matrix(energy, n);
            deriv = self.transfer_derivative(n) * prod + t * deriv;
            prod = t * prod;
            let big = prod.max_abs().max(deriv.max_abs());
            if big > 1e150 {
                let e = big.log2().floor() as i32;
                let s = 2f64.powi(-e);
                prod = prod.scale(s);
                deriv = deriv.scale(s);
                exponent += e;
            }
        }
        let f = 2f64.powi(exponent);
        (prod.trace() * f, deriv.trace() * f)
    }

    pub fn floquet_restriction(&self, sign: BoundarySign) -> FloquetRestriction {
        let p = self.period();
        FloquetRestriction {
            sign,
            diagonal: self.b.values().to_vec(),
            off: self.a.values()[..p - 1].to_vec(),
            corner: sign.factor() * self.a.values()[p - 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundarySign {
    /// `u(n + p) = u(n)`
    Periodic,
    /// `u(n + p) = -u(n)`
    Antiperiodic,
}

impl BoundarySign {
    pub fn factor(self) -> f64 {
        match self {
            BoundarySign::Periodic => 1.0,
            BoundarySign::Antiperiodic => -1.0,
        }
    }

    /// Value of the discriminant at eigenvalues of this restriction.
    pub fn discriminant_value(self) -> f64 {
        2.0 * self.factor()
    }
}

/// The `p x p` restriction of `J` with (anti)periodic boundary coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetRestriction {
    pub sign: BoundarySign,
    pub diagonal: Vec<f64>,
    pub off: Vec<f64>,
    pub corner: f64,
}

impl FloquetRestriction {
    pub fn size(&self) -> usize {
        self.diagonal.len()
    }

    /// Dense matrix. For `p = 2` the corner and the off-diagonal share an
    /// entry and are summed; for `p = 1` the single entry is `b ± 2a`.
    pub fn to_matrix(&self) -> SymMatrix {
        let p = self.size();
        let mut m = SymMatrix::zeros(p);
        for (i, &d) in self.diagonal.iter().enumerate() {
            m.set(i, i, d);
        }
        for (i, &o) in self.off.iter().enumerate() {
            m.add(i, i + 1, o);
        }
        if p == 1 {
            m.add(0, 0, 2.0 * self.corner);
        } else {
            m.add(0, p - 1, self.corner);
        }
        m
    }

    pub fn eigenvalues(&self, opts: &JacobiOptions) -> Result<Vec<f64>> {
        symmetric_eigenvalues(&self.to_matrix(), opts)
    }
}
