use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum KernelKind {
    Linear,
    Polynomial,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { degree: u32, coef0: f64 },
}

impl KernelSpec {
    pub fn rbf(gamma: f64) -> Result<KernelSpec> {
        KernelSpec::Rbf { gamma }.validated()
    }

    /// Polynomial kernel with `coef0 = 1`.
    pub fn poly(degree: u32) -> Result<KernelSpec> {
        KernelSpec::Polynomial { degree, coef0: 1.0 }.validated()
    }

    pub fn validated(self) -> Result<KernelSpec> {
        match self {
            KernelSpec::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => {
                Err(Error::Svm(format!("rbf gamma must be positive, got {gamma}")))
            }
            KernelSpec::Polynomial { degree: 0, .. } => {
                Err(Error::Svm("polynomial degree must be at least 1".into()))
            }
            KernelSpec::Polynomial { coef0, .. } if !coef0.is_finite() => {
                Err(Error::Svm(format!("polynomial coef0 must be finite, got {coef0}")))
            }
            k => Ok(k),
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Linear => KernelKind::Linear,
            KernelSpec::Rbf { .. } => KernelKind::Rbf,
            KernelSpec::Polynomial { .. } => KernelKind::Polynomial,
        }
    }

    /// Kernel value without a dimension check.
    #[inline]
    pub(crate) fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, y),
            KernelSpec::Rbf { gamma } => {
                let d2: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-gamma * d2).exp()
            }
            KernelSpec::Polynomial { degree, coef0 } => (dot(x, y) + coef0).powi(degree as i32),
        }
    }

    /// Simplicity order used to break model-selection ties: linear before
    /// polynomial before RBF, then by the kernel parameter.
    pub fn simplicity_cmp(&self, other: &KernelSpec) -> Ordering {
        self.kind().cmp(&other.kind()).then_with(|| {
            self.parameter()
                .partial_cmp(&other.parameter())
                .unwrap_or(Ordering::Equal)
        })
    }

    fn parameter(&self) -> f64 {
        match *self {
            KernelSpec::Linear => 0.0,
            KernelSpec::Rbf { gamma } => gamma,
            KernelSpec::Polynomial { degree, .. } => degree as f64,
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSpec::Linear => write!(f, "linear"),
            KernelSpec::Rbf { gamma } => write!(f, "rbf(gamma={gamma})"),
            KernelSpec::Polynomial { degree, coef0 } => write!(f, "poly(degree={degree},coef0={coef0})"),
        }
    }
}

#[inline]
fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn kernel_eval(k: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(k.eval(x, y))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn examples() {
        assert_eq!(kernel_eval(&KernelSpec::rbf(0.7).unwrap(), &[1.0, -2.0], &[1.0, -2.0]).unwrap(), 1.0);
        assert_eq!(kernel_eval(&KernelSpec::Linear, &[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(kernel_eval(&KernelSpec::poly(2).unwrap(), &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 4.0);
        let r = kernel_eval(&KernelSpec::rbf(0.5).unwrap(), &[0.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((r - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(
            kernel_eval(&KernelSpec::Linear, &[1.0], &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        ));
    }

    #[test]
    fn invalid_parameters() {
        assert!(KernelSpec::rbf(0.0).is_err());
        assert!(KernelSpec::rbf(f64::NAN).is_err());
        assert!(KernelSpec::poly(0).is_err());
    }

    #[test]
    fn simplicity() {
        let lin = KernelSpec::Linear;
        let p2 = KernelSpec::poly(2).unwrap();
        let p3 = KernelSpec::poly(3).unwrap();
        let r = KernelSpec::rbf(0.01).unwrap();
        assert_eq!(lin.simplicity_cmp(&p2), Ordering::Less);
        assert_eq!(p3.simplicity_cmp(&r), Ordering::Less);
        assert_eq!(p2.simplicity_cmp(&p3), Ordering::Less);
    }

    #[test]
    fn rbf_gram_is_psd() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let n = rng.random_range(2..9);
            let pts: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect();
            let k = KernelSpec::rbf(rng.random_range(0.05..5.0)).unwrap();
            let g = nalgebra::DMatrix::from_fn(n, n, |i, j| k.eval(&pts[i], &pts[j]));
            let min = g.symmetric_eigenvalues().min();
            assert!(min >= -1e-8, "min eigenvalue {min}");
        }
    }

    fn arb_kernel() -> impl Strategy<Value = KernelSpec> {
        prop_oneof![
            Just(KernelSpec::Linear),
            (0.01f64..10.0).prop_map(|g| KernelSpec::Rbf { gamma: g }),
            (1u32..5, -1.0f64..2.0).prop_map(|(d, c)| KernelSpec::Polynomial { degree: d, coef0: c }),
        ]
    }

    proptest! {
        #[test]
        fn symmetric(k in arb_kernel(), xy in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 1..8)) {
            let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
            prop_assert_eq!(kernel_eval(&k, &x, &y).unwrap(), kernel_eval(&k, &y, &x).unwrap());
        }
    }
}
