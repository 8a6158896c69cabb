use lpspec::homogenize::{ConstructionOptions, DEFAULT_HOMOGENEITY_POINTS};
use lpspec::hull::{ks_from_hull, HullSpec};
use lpspec::Error;
use serde::{Deserialize, Serialize};

fn default_a() -> Vec<f64> {
    vec![1.0]
}

/// Everything `construct` needs, read from one JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub b0: Vec<f64>,
    #[serde(default = "default_a")]
    pub a: Vec<f64>,
    pub tau: f64,
    pub eps: f64,
    #[serde(default)]
    pub ks: Vec<usize>,
    pub n_steps: usize,
    #[serde(default)]
    pub options: ConstructionOptions,
    #[serde(default)]
    pub certificates: CertificateConfig,
    #[serde(default)]
    pub hull: Option<HullConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertificateConfig {
    pub n_delta: usize,
    pub n_points: usize,
    /// Defaults to just above `4 pi A^2 / p` of the deepest step.
    pub window_len: Option<f64>,
    pub n_windows: usize,
    pub c_max: f64,
    pub n_c: usize,
}

impl Default for CertificateConfig {
    fn default() -> Self {
        CertificateConfig {
            n_delta: 64,
            n_points: DEFAULT_HOMOGENEITY_POINTS,
            window_len: None,
            n_windows: 200,
            c_max: 1.0,
            n_c: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HullConfig {
    pub spec: HullSpec,
    #[serde(default)]
    pub q0: usize,
}

impl RunConfig {
    /// Checks the fields that do not need a spectrum, and reconciles `ks`
    /// with the hull when one is given.
    pub fn resolve_ks(&self) -> Result<Vec<usize>, Error> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        let c = &self.certificates;
        if c.n_delta == 0 || c.n_windows == 0 || c.n_c == 0 || !(c.c_max > 0.0) {
            return bad("certificate grid sizes and c_max must be positive".into());
        }
        let Some(h) = &self.hull else {
            return Ok(self.ks.clone());
        };
        let avail = h.spec.len().saturating_sub(h.q0);
        if self.n_steps > avail {
            return bad(format!(
                "hull provides {avail} levels past q0 but {} steps were requested",
                self.n_steps
            ));
        }
        // one ratio beyond the last step feeds the decay term when available
        let from_hull = ks_from_hull(&h.spec, h.q0, (self.n_steps + 1).min(avail))?;
        let n = self.ks.len().min(from_hull.len());
        if self.ks[..n] != from_hull[..n] {
            return bad(format!("ks {:?} disagree with hull ratios {from_hull:?}", self.ks));
        }
        Ok(from_hull)
    }
}
