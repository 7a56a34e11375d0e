use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Law `f` on `N^2` for the (ask, bid) depths drawn after every price change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<((u32, u32), f64)>", into = "Vec<((u32, u32), f64)>")]
pub struct DepthDistribution {
    support: Vec<((u32, u32), f64)>,
    cumulative: Vec<f64>,
}

impl DepthDistribution {
    pub fn new(support: Vec<((u32, u32), f64)>) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::EmptySupport);
        }
        for &((x, y), p) in &support {
            if x == 0 || y == 0 {
                return Err(invalid(format!("depth ({x}, {y}) must have both sides >= 1")));
            }
            if !(p.is_finite() && p > 0.0) {
                return Err(invalid(format!("probability of ({x}, {y}) must be positive, got {p}")));
            }
        }
        let total: f64 = support.iter().map(|s| s.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("depth probabilities sum to {total}, not 1")));
        }
        let mut acc = 0.0;
        let cumulative = support
            .iter()
            .map(|s| {
                acc += s.1 / total;
                acc
            })
            .collect();
        Ok(Self { support, cumulative })
    }

    pub fn point(x: u32, y: u32) -> Result<Self> {
        Self::new(vec![((x, y), 1.0)])
    }

    /// Uniform law on the product grid `xs x ys`.
    pub fn uniform(xs: &[u32], ys: &[u32]) -> Result<Self> {
        let n = (xs.len() * ys.len()) as f64;
        let support = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| ((x, y), 1.0 / n)))
            .collect();
        Self::new(support)
    }

    pub fn support(&self) -> &[((u32, u32), f64)] {
        &self.support
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (u32, u32) {
        if self.support.len() == 1 {
            return self.support[0].0;
        }
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|c| *c <= u);
        self.support[i.min(self.support.len() - 1)].0
    }

    pub fn is_symmetric(&self) -> bool {
        self.support.iter().all(|&((x, y), p)| {
            self.support
                .iter()
                .any(|&((a, b), q)| a == y && b == x && (p - q).abs() <= 1e-12)
        })
    }
}

impl TryFrom<Vec<((u32, u32), f64)>> for DepthDistribution {
    type Error = Error;

    fn try_from(support: Vec<((u32, u32), f64)>) -> Result<Self> {
        Self::new(support)
    }
}

impl From<DepthDistribution> for Vec<((u32, u32), f64)> {
    fn from(d: DepthDistribution) -> Self {
        d.support
    }
}
