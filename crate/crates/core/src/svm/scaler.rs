use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SD_FLOOR: f64 = 1e-12;

/// Per-dimension z-scoring fitted on training data (population standard
/// deviation, floored so constant columns map to zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
}

impl Scaler {
    pub fn fit(points: &[Vec<f64>]) -> Result<Scaler> {
        let Some(first) = points.first() else {
            return Err(Error::Svm("cannot fit a scaler on zero points".into()));
        };
        let dim = first.len();
        let n = points.len() as f64;
        let mut mean = vec![0.0; dim];
        for p in points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            for (m, v) in mean.iter_mut().zip(p) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for p in points {
            for ((s, v), m) in var.iter_mut().zip(p).zip(&mean) {
                *s += (v - m) * (v - m);
            }
        }
        let sd = var.into_iter().map(|s| (s / n).sqrt().max(SD_FLOOR)).collect();
        Ok(Scaler { mean, sd })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.sd))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn z_scores() {
        let s = Scaler::fit(&[vec![-1.0, 5.0], vec![1.0, 5.0]]).unwrap();
        assert_eq!(s.mean, vec![0.0, 5.0]);
        assert_eq!(s.sd, vec![1.0, SD_FLOOR]);
        assert_eq!(s.transform(&[1.0, 5.0]).unwrap(), vec![1.0, 0.0]);
        assert!(s.transform(&[1.0]).is_err());
    }
}
