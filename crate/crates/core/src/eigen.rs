//! Dense symmetric eigenvalues by cyclic Jacobi rotations.
//!
//! Floquet restrictions are small (one period) and may carry exactly
//! repeated eigenvalues at closed gaps, which is where Jacobi rotations are
//! at their most reliable.

use crate::error::{Error, Result};

/// Row-major dense symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(n: usize) -> Self {
        SymMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    /// Adds `v` to `(i, j)` and, off the diagonal, to `(j, i)`.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
        if i != j {
            self.data[j * self.n + i] += v;
        }
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    fn off_diagonal_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                let v = self.get(i, j);
                s += 2.0 * v * v;
            }
        }
        s.sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobiOptions {
    /// Stop once the off-diagonal norm falls below `off_tol * ||A||_F`.
    pub off_tol: f64,
    pub max_sweeps: usize,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        JacobiOptions {
            off_tol: 1e-15,
            max_sweeps: 100,
        }
    }
}

/// Eigenvalues of `m` in ascending order.
pub fn symmetric_eigenvalues(m: &SymMatrix, opts: &JacobiOptions) -> Result<Vec<f64>> {
    let n = m.n;
    let mut a = m.clone();
    if a.data.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure {
            context: "symmetric_eigenvalues",
            detail: "matrix has non-finite entries".into(),
        });
    }
    let norm = a.frobenius();
    let mut sweeps = 0;
    loop {
        let off = a.off_diagonal_norm();
        if off == 0.0 || off <= opts.off_tol * norm {
            break;
        }
        if sweeps == opts.max_sweeps {
            return Err(Error::NumericFailure {
                context: "symmetric_eigenvalues",
                detail: format!(
                    "no convergence after {sweeps} sweeps (n = {n}, off-diagonal norm {off:e}, ||A|| {norm:e})"
                ),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a.get(p, q);
                if apq == 0.0 {
                    continue;
                }
                let app = a.get(p, p);
                let aqq = a.get(q, q);
                let g = 100.0 * apq.abs();
                // once an entry is below rounding of both diagonals, drop it
                if sweeps > 4 && app.abs() + g == app.abs() && aqq.abs() + g == aqq.abs() {
                    a.set(p, q, 0.0);
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                a.data[p * n + p] = app - t * apq;
                a.data[q * n + q] = aqq + t * apq;
                a.set(p, q, 0.0);
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a.get(r, p);
                    let arq = a.get(r, q);
                    a.set(r, p, c * arp - s * arq);
                    a.set(r, q, s * arp + c * arq);
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a.get(i, i)).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn diagonal_and_two_by_two() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 1, 2.0);
        let e = symmetric_eigenvalues(&m, &JacobiOptions::default()).unwrap();
        assert_eq!(e, vec![-2.0, 2.0]);
        let z = SymMatrix::zeros(3);
        assert_eq!(
            symmetric_eigenvalues(&z, &JacobiOptions::default()).unwrap(),
            vec![0.0; 3]
        );
    }

    #[test]
    fn circulant_three() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 1, 1.0);
        m.set(1, 2, 1.0);
        m.set(0, 2, 1.0);
        let e = symmetric_eigenvalues(&m, &JacobiOptions::default()).unwrap();
        for (got, want) in e.iter().zip([-1.0, -1.0, 2.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn matches_nalgebra_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 1..=12 {
            let mut m = SymMatrix::zeros(n);
            let mut na = nalgebra::DMatrix::<f64>::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v: f64 = rng.gen_range(-3.0..3.0);
                    m.set(i, j, v);
                    na[(i, j)] = v;
                    na[(j, i)] = v;
                }
            }
            let ours = symmetric_eigenvalues(&m, &JacobiOptions::default()).unwrap();
            let mut theirs: Vec<f64> = na.symmetric_eigenvalues().iter().copied().collect();
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-12 * (1.0 + m.frobenius()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_nan() {
        let mut m = SymMatrix::zeros(2);
        m.set(0, 0, f64::NAN);
        assert!(matches!(
            symmetric_eigenvalues(&m, &JacobiOptions::default()),
            Err(Error::NumericFailure { .. })
        ));
    }

    #[test]
    fn sweep_limit_reports_failure() {
        let mut m = SymMatrix::zeros(3);
        m.set(0, 1, 1.0);
        m.set(1, 2, 0.5);
        let opts = JacobiOptions {
            off_tol: 0.0,
            max_sweeps: 0,
        };
        assert!(symmetric_eigenvalues(&m, &opts).is_err());
    }
}
