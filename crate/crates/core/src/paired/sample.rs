use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-topic scores of a baseline and an experimental system together
/// with their differences `d_i = e_i - b_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSample {
    b: Vec<f64>,
    e: Vec<f64>,
    d: Vec<f64>,
}

impl PairedSample {
    pub fn new(b: Vec<f64>, e: Vec<f64>) -> Result<Self> {
        if b.len() != e.len() {
            return Err(Error::InvalidData(format!(
                "paired score lists differ in length ({} vs {})",
                b.len(),
                e.len()
            )));
        }
        if b.is_empty() {
            return Err(Error::InsufficientSample { needed: 1, got: 0 });
        }
        if b.iter().chain(&e).any(|x| !x.is_finite()) {
            return Err(Error::InvalidData("non-finite score".into()));
        }
        let d = b.iter().zip(&e).map(|(b, e)| e - b).collect();
        Ok(PairedSample { b, e, d })
    }

    /// A sample with a zero baseline, so that `d` equals `diffs` exactly.
    pub fn from_differences(diffs: Vec<f64>) -> Result<Self> {
        let b = vec![0.0; diffs.len()];
        Self::new(b, diffs)
    }

    pub fn baseline(&self) -> &[f64] {
        &self.b
    }

    pub fn experimental(&self) -> &[f64] {
        &self.e
    }

    pub fn differences(&self) -> &[f64] {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn mean_d(&self) -> f64 {
        self.d.iter().sum::<f64>() / self.n() as f64
    }

    /// Sample standard deviation of the differences (n - 1 denominator).
    /// Zero for a single topic.
    pub fn sd_d(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean_d();
        let ss: f64 = self.d.iter().map(|x| (x - m) * (x - m)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Number of differences with `|d_i| > threshold`.
    pub fn n0(&self, threshold: f64) -> usize {
        self.d.iter().filter(|x| x.abs() > threshold).count()
    }

    /// Same sample with every difference multiplied by `c` (baseline kept).
    pub fn scaled(&self, c: f64) -> Self {
        let d: Vec<f64> = self.d.iter().map(|x| x * c).collect();
        let e = self.b.iter().zip(&d).map(|(b, d)| b + d).collect();
        PairedSample {
            b: self.b.clone(),
            e,
            d,
        }
    }
}
