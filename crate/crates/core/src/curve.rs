use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("curve `{label}`: {len_x} abscissa values but {len_y} values")]
    LengthMismatch {
        label: String,
        len_x: usize,
        len_y: usize,
    },
    #[error("curve `{label}`: abscissa not strictly increasing at index {index}")]
    NotIncreasing { label: String, index: usize },
    #[error("cannot average curves with different abscissae")]
    IncompatibleCurves,
    #[error("no curves to average")]
    Empty,
}

/// `(x, value[, stderr])` table used for every plot-ready output.
///
/// Undefined points (for example a correlation with zero variance) are
/// stored as NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveTable {
    pub label: String,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl CurveTable {
    pub fn new(
        label: impl Into<String>,
        abscissa: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, CurveError> {
        Self::build(label.into(), abscissa, values, None)
    }

    pub fn with_stderr(
        label: impl Into<String>,
        abscissa: Vec<f64>,
        values: Vec<f64>,
        stderr: Vec<f64>,
    ) -> Result<Self, CurveError> {
        Self::build(label.into(), abscissa, values, Some(stderr))
    }

    fn build(
        label: String,
        abscissa: Vec<f64>,
        values: Vec<f64>,
        stderr: Option<Vec<f64>>,
    ) -> Result<Self, CurveError> {
        if abscissa.len() != values.len() {
            return Err(CurveError::LengthMismatch {
                label,
                len_x: abscissa.len(),
                len_y: values.len(),
            });
        }
        if let Some(se) = &stderr {
            if se.len() != values.len() {
                return Err(CurveError::LengthMismatch {
                    label,
                    len_x: abscissa.len(),
                    len_y: se.len(),
                });
            }
        }
        if let Some(index) = abscissa.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(CurveError::NotIncreasing {
                label,
                index: index + 1,
            });
        }
        Ok(CurveTable {
            label,
            abscissa,
            values,
            stderr,
        })
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.abscissa
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    /// Linear interpolation, clamped to the end values outside the range.
    pub fn interpolate(&self, x: f64) -> f64 {
        let xs = &self.abscissa;
        let ys = &self.values;
        match xs.len() {
            0 => f64::NAN,
            1 => ys[0],
            n => {
                if x <= xs[0] {
                    return ys[0];
                }
                if x >= xs[n - 1] {
                    return ys[n - 1];
                }
                let hi = xs.partition_point(|&v| v <= x);
                let lo = hi - 1;
                let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
                ys[lo] + w * (ys[hi] - ys[lo])
            }
        }
    }

    /// Pointwise mean across curves sharing one abscissa; the stderr column
    /// is the sample standard deviation over `√n` (zero for a single curve).
    pub fn average(label: impl Into<String>, curves: &[CurveTable]) -> Result<Self, CurveError> {
        let first = curves.first().ok_or(CurveError::Empty)?;
        if curves.iter().any(|c| c.abscissa != first.abscissa) {
            return Err(CurveError::IncompatibleCurves);
        }
        let mut mean = vec![0.0; first.len()];
        let mut se = vec![0.0; first.len()];
        for (k, (m, s)) in mean.iter_mut().zip(se.iter_mut()).enumerate() {
            let acc = MeanVar::from_iter(curves.iter().map(|c| c.values[k]));
            *m = acc.mean();
            *s = if curves.len() > 1 {
                acc.std_error()
            } else {
                0.0
            };
        }
        Self::with_stderr(label, first.abscissa.clone(), mean, se)
    }
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeanVar {
    n: u64,
    mean: f64,
    m2: f64,
}

impl MeanVar {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn std_error(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

impl FromIterator<f64> for MeanVar {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MeanVar::default();
        for x in iter {
            acc.push(x);
        }
        acc
    }
}
