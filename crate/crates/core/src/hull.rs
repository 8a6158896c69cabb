//! Finite quotients `Z/n_j Z` of a procyclic hull and the periodic sampling
//! functions living on them.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::homogenize::ConstructionRun;

/// A divisibility chain `n_1 | n_2 | ...`; level 0 is the trivial quotient.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "HullJson", into = "HullJson")]
pub struct HullSpec {
    indices: Vec<usize>,
    label: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct HullJson {
    indices: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl TryFrom<HullJson> for HullSpec {
    type Error = Error;
    fn try_from(j: HullJson) -> Result<Self> {
        let mut h = HullSpec::new(j.indices)?;
        h.label = j.label;
        Ok(h)
    }
}

impl From<HullSpec> for HullJson {
    fn from(h: HullSpec) -> Self {
        HullJson {
            indices: h.indices,
            label: h.label,
        }
    }
}

impl HullSpec {
    pub fn new(indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return invalid("hull needs at least one index");
        }
        if indices[0] == 0 {
            return invalid("indices must be positive");
        }
        if let Some(w) = indices.windows(2).find(|w| w[1] % w[0] != 0) {
            return invalid(format!("{} does not divide {}", w[0], w[1]));
        }
        Ok(HullSpec {
            indices,
            label: None,
        })
    }

    /// `n_j = q^j` for `j = 1..=len`.
    pub fn p_adic(q: usize, len: usize) -> Result<Self> {
        if q < 2 {
            return invalid(format!("base must be at least 2, got {q}"));
        }
        let mut indices = Vec::with_capacity(len);
        let mut n = 1usize;
        for _ in 0..len {
            n = n
                .checked_mul(q)
                .ok_or_else(|| Error::InvalidArgument("index overflows usize".into()))?;
            indices.push(n);
        }
        let mut h = HullSpec::new(indices)?;
        h.label = Some(format!("{q}-adic"));
        Ok(h)
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Number of levels beyond the trivial one.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// `n_level`, with `n_0 = 1`.
    pub fn index(&self, level: usize) -> Option<usize> {
        match level {
            0 => Some(1),
            l => self.indices.get(l - 1).copied(),
        }
    }
}

/// A function on `Z/n Z`, the value on coset `i` stored at `table[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingFunction {
    pub level: usize,
    pub n: usize,
    pub table: Vec<f64>,
}

impl SamplingFunction {
    pub fn new(level: usize, table: Vec<f64>) -> Result<Self> {
        if table.is_empty() || table.iter().any(|v| !v.is_finite()) {
            return invalid("table must be nonempty and finite");
        }
        Ok(SamplingFunction {
            level,
            n: table.len(),
            table,
        })
    }
}

/// `s(n) = table[(n + omega) mod n_j]` for `n = 1..=len`.
pub fn sample_sequence(f: &SamplingFunction, omega: usize, len: usize) -> Result<Vec<f64>> {
    if omega >= f.n {
        return invalid(format!("omega {omega} is not a coset of Z/{}Z", f.n));
    }
    Ok((1..=len).map(|n| f.table[(n + omega) % f.n]).collect())
}

/// `k_j = n_{q0+j} / n_{q0+j-1}` for `j = 1..=n_steps`.
pub fn ks_from_hull(hull: &HullSpec, q0: usize, n_steps: usize) -> Result<Vec<usize>> {
    if q0 + n_steps > hull.len() {
        return invalid(format!(
            "levels {q0}..{} exceed the chain length {}",
            q0 + n_steps,
            hull.len()
        ));
    }
    (1..=n_steps)
        .map(|j| {
            let lo = hull.index(q0 + j - 1).expect("checked");
            let hi = hull.index(q0 + j).expect("checked");
            match hi / lo {
                k if k >= 2 => Ok(k),
                _ => invalid(format!("ratio n_{} / n_{} is 1", q0 + j, q0 + j - 1)),
            }
        })
        .collect()
}

/// Tables of every recorded potential of `run` as sampling functions at
/// levels `q0, q0 + 1, ...`.
pub fn lift_run(run: &ConstructionRun, hull: &HullSpec, q0: usize) -> Result<Vec<SamplingFunction>> {
    let mut out = Vec::with_capacity(run.steps.len());
    for step in &run.steps {
        let level = q0 + step.j;
        let Some(n) = hull.index(level) else {
            return invalid(format!("hull has no level {level}"));
        };
        let ok = if step.j == 0 {
            n % step.period == 0
        } else {
            n == step.period
        };
        if !ok {
            return invalid(format!(
                "step {} has period {} but level {level} has index {n}",
                step.j, step.period
            ));
        }
        let b = step.b.extend_to(n)?;
        let v = b.values();
        // coset i carries b(i), with coset 0 standing for site n
        let table: Vec<f64> = (0..n).map(|i| if i == 0 { v[n - 1] } else { v[i - 1] }).collect();
        out.push(SamplingFunction::new(level, table)?);
    }
    Ok(out)
}

/// `max_i |f_{j+1}(i) - f_j(i mod n_j)|` for consecutive levels.
pub fn level_increments(fs: &[SamplingFunction]) -> Result<Vec<f64>> {
    fs.windows(2)
        .map(|w| {
            if w[1].n % w[0].n != 0 {
                return invalid(format!("{} does not divide {}", w[0].n, w[1].n));
            }
            Ok(w[1]
                .table
                .iter()
                .enumerate()
                .map(|(i, v)| (v - w[0].table[i % w[0].n]).abs())
                .fold(0.0, f64::max))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::floquet::band_spectrum;
    use crate::homogenize::{construct, ConstructionOptions};
    use crate::jacobi::{PeriodicJacobi, PeriodicSequence};

    #[test]
    fn sample_examples() {
        let f = SamplingFunction::new(0, vec![5.0]).unwrap();
        assert_eq!(sample_sequence(&f, 0, 4).unwrap(), vec![5.0; 4]);
        let f = SamplingFunction::new(1, vec![0.0, 0.3]).unwrap();
        assert_eq!(sample_sequence(&f, 0, 4).unwrap(), vec![0.3, 0.0, 0.3, 0.0]);
        assert_eq!(sample_sequence(&f, 1, 4).unwrap(), vec![0.0, 0.3, 0.0, 0.3]);
        assert!(sample_sequence(&f, 2, 4).is_err());
    }

    #[test]
    fn sampled_period_divides_n() {
        let f = SamplingFunction::new(2, vec![1.0, 2.0, 1.0, 2.0, 1.0, 2.0]).unwrap();
        for omega in 0..6 {
            let s = sample_sequence(&f, omega, 12).unwrap();
            let p = PeriodicSequence::new(s[..6].to_vec()).unwrap();
            assert_eq!(6 % p.minimal_period(), 0);
            assert_eq!(&s[..6], &s[6..]);
        }
    }

    #[test]
    fn hull_validation() {
        assert!(HullSpec::new(vec![2, 3]).is_err());
        assert!(HullSpec::new(vec![]).is_err());
        assert_eq!(HullSpec::p_adic(3, 3).unwrap().indices(), &[3, 9, 27]);
        assert!(HullSpec::p_adic(1, 3).is_err());
        let h: HullSpec = serde_json::from_str(r#"{"indices":[2,6,12]}"#).unwrap();
        assert_eq!(h.index(0), Some(1));
        assert_eq!(h.index(3), Some(12));
        assert!(serde_json::from_str::<HullSpec>(r#"{"indices":[4,6]}"#).is_err());
    }

    #[test]
    fn ks_examples() {
        let h = HullSpec::p_adic(3, 5).unwrap();
        assert_eq!(ks_from_hull(&h, 0, 3).unwrap(), vec![3, 3, 3]);
        let h = HullSpec::new(vec![2, 6, 12]).unwrap();
        assert_eq!(ks_from_hull(&h, 1, 2).unwrap(), vec![3, 2]);
        assert!(ks_from_hull(&h, 2, 2).is_err());
        let flat = HullSpec::new(vec![2, 2, 2]).unwrap();
        assert!(matches!(
            ks_from_hull(&flat, 1, 2),
            Err(Error::InvalidArgument(_))
        ));
    }

    fn two_adic_run() -> ConstructionRun {
        let hull = HullSpec::p_adic(2, 4).unwrap();
        let ks = ks_from_hull(&hull, 0, 2).unwrap();
        construct(
            &PeriodicSequence::new(vec![0.0]).unwrap(),
            &PeriodicSequence::new(vec![1.0]).unwrap(),
            0.5,
            0.5,
            &ks,
            2,
            &ConstructionOptions::default(),
        )
        .unwrap()
    }

    #[test]
    fn lift_reproduces_potentials() {
        let run = two_adic_run();
        let hull = HullSpec::p_adic(2, 4).unwrap();
        let fs = lift_run(&run, &hull, 0).unwrap();
        assert_eq!(fs.len(), 3);
        assert_eq!(fs[1].n, 2);
        assert_eq!(fs[2].n, 4);
        for (f, step) in fs.iter().zip(&run.steps) {
            let s = sample_sequence(f, 0, step.period).unwrap();
            assert_eq!(s, step.b.values());
        }
        let inc = level_increments(&fs).unwrap();
        for (d, step) in inc.iter().zip(&run.steps[1..]) {
            assert!(*d < step.eps);
        }
    }

    #[test]
    fn spectrum_independent_of_omega() {
        let run = two_adic_run();
        let hull = HullSpec::p_adic(2, 4).unwrap();
        let fs = lift_run(&run, &hull, 0).unwrap();
        let f = &fs[2];
        let a = PeriodicSequence::new(vec![1.0]).unwrap();
        let base = run.steps[2].sigma();
        for omega in 0..f.n {
            let b = PeriodicSequence::new(sample_sequence(f, omega, f.n).unwrap()).unwrap();
            let j = PeriodicJacobi::new(a.clone(), b).unwrap();
            let s = band_spectrum(&j).unwrap().to_interval_set();
            assert!(s.hausdorff_distance(&base).unwrap() <= 1e-12);
        }
    }

    #[test]
    fn mismatched_hull_rejected() {
        let run = two_adic_run();
        let hull = HullSpec::p_adic(3, 4).unwrap();
        assert!(matches!(
            lift_run(&run, &hull, 0),
            Err(Error::InvalidArgument(_))
        ));
        assert!(lift_run(&run, &HullSpec::p_adic(2, 1).unwrap(), 0).is_err());
    }

    #[test]
    fn json_shape() {
        let f = SamplingFunction::new(1, vec![0.0, 0.3]).unwrap();
        let v: serde_json::Value = serde_json::to_value(&f).unwrap();
        assert_eq!(v, serde_json::json!({"level": 1, "n": 2, "table": [0.0, 0.3]}));
    }
}
