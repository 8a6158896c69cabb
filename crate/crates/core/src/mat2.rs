use std::ops::{Add, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Real 2x2 matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);
    pub const ZERO: Mat2 = Mat2::new(0.0, 0.0, 0.0, 0.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    /// Counter-clockwise rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    /// Inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m22, -self.m12, -self.m21, self.m11).scale(1.0 / d))
    }

    /// Squared Hilbert-Schmidt (Frobenius) norm.
    pub fn hs_norm_sq(&self) -> f64 {
        self.m11 * self.m11 + self.m12 * self.m12 + self.m21 * self.m21 + self.m22 * self.m22
    }

    pub fn max_abs(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    /// Linear fractional action `z -> (m11 z + m12) / (m21 z + m22)`.
    pub fn mobius(&self, z: Complex64) -> Complex64 {
        (z * self.m11 + self.m12) / (z * self.m21 + self.m22)
    }

    /// Largest entrywise difference from `other`.
    pub fn max_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, r: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * r.m11 + self.m12 * r.m21,
            self.m11 * r.m12 + self.m12 * r.m22,
            self.m21 * r.m11 + self.m22 * r.m21,
            self.m21 * r.m12 + self.m22 * r.m22,
        )
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, r: Mat2) -> Mat2 {
        Mat2::new(self.m11 + r.m11, self.m12 + r.m12, self.m21 + r.m21, self.m22 + r.m22)
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, r: Mat2) -> Mat2 {
        Mat2::new(self.m11 - r.m11, self.m12 - r.m12, self.m21 - r.m21, self.m22 - r.m22)
    }
}

/// A matrix stored as `mantissa * 2^exponent`, used for long transfer
/// products whose entries would otherwise overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMat2 {
    pub mantissa: Mat2,
    pub exponent: i32,
}

impl ScaledMat2 {
    const RESCALE_ABOVE: f64 = 1e150;

    pub fn identity() -> Self {
        ScaledMat2 {
            mantissa: Mat2::IDENTITY,
            exponent: 0,
        }
    }

    /// Left multiplication `self <- m * self`.
    pub fn left_mul(&mut self, m: &Mat2) {
        self.mantissa = *m * self.mantissa;
        self.renormalize();
    }

    fn renormalize(&mut self) {
        let big = self.mantissa.max_abs();
        if big > Self::RESCALE_ABOVE || (big < 1.0 / Self::RESCALE_ABOVE && big > 0.0) {
            let e = big.log2().floor() as i32;
            self.mantissa = self.mantissa.scale(2f64.powi(-e));
            self.exponent += e;
        }
    }

    /// Collapses to a plain matrix; entries may overflow to infinity.
    pub fn to_mat2(&self) -> Mat2 {
        self.mantissa.scale(2f64.powi(self.exponent))
    }

    pub fn trace(&self) -> f64 {
        self.mantissa.trace() * 2f64.powi(self.exponent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rotation_is_orthogonal() {
        let r = Mat2::rotation(0.7);
        let rtr = r.transpose() * r;
        assert!(rtr.max_diff(&Mat2::IDENTITY) < 1e-15);
        assert!((r.det() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 1.0, 3.0, 4.0);
        let inv = m.inverse().unwrap();
        assert!((m * inv).max_diff(&Mat2::IDENTITY) < 1e-15);
        assert!(Mat2::ZERO.inverse().is_none());
    }

    #[test]
    fn scaled_product_survives_overflow() {
        let m = Mat2::new(1e100, 0.0, 0.0, 1e-100);
        let mut p = ScaledMat2::identity();
        for _ in 0..10 {
            p.left_mul(&m);
        }
        assert!(p.mantissa.max_abs().is_finite());
        assert!(p.exponent > 3000);
        assert!(p.to_mat2().m11.is_infinite());
    }

    #[test]
    fn rotation_fixes_i() {
        let z = Mat2::rotation(1.3).mobius(Complex64::i());
        assert!((z - Complex64::i()).norm() < 1e-15);
    }
}
