use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::ext::ExtReal;

/// A function on the points of a finite space, valued in the extended reals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Potential(Vec<ExtReal>);

impl Potential {
    pub fn new(values: Vec<ExtReal>) -> Self {
        Potential(values)
    }

    pub fn from_f64s(values: &[f64]) -> Self {
        Potential(values.iter().copied().map(ExtReal::from_f64).collect())
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Potential(vec![ExtReal::from_f64(value); n])
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = ExtReal> + '_ {
        self.0.iter().copied()
    }

    pub fn into_vec(self) -> Vec<ExtReal> {
        self.0
    }

    /// Raw doubles (infinities included).
    pub fn to_f64s(&self) -> Vec<f64> {
        self.0.iter().map(|v| v.value()).collect()
    }

    /// At least one entry is finite.
    pub fn is_proper(&self) -> bool {
        self.0.iter().any(|v| v.is_finite())
    }

    /// No entry is `+inf`.
    pub fn is_bounded_above(&self) -> bool {
        !self.0.iter().any(|v| v.is_pos_inf())
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Checks that the potential is finite everywhere, as the operators on
    /// `C(X)` require.
    pub fn require_finite(&self) -> Result<()> {
        match self.0.iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(i) => Err(Error::InvalidInput(format!(
                "potential must be finite, entry {i} is {}",
                self.0[i]
            ))),
        }
    }

    pub fn max(&self) -> ExtReal {
        ExtReal::max_of(self.iter())
    }

    pub fn min(&self) -> ExtReal {
        ExtReal::min_of(self.iter())
    }

    pub fn map(&self, f: impl Fn(ExtReal) -> ExtReal) -> Potential {
        Potential(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(
        &self,
        other: &Potential,
        f: impl Fn(ExtReal, ExtReal) -> ExtReal,
    ) -> Result<Potential> {
        check_dim(self.len(), other.len())?;
        Ok(Potential(
            self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add_scalar(&self, c: f64) -> Potential {
        let c = ExtReal::from_f64(c);
        self.map(|v| v + c)
    }

    pub fn scale(&self, lambda: f64) -> Potential {
        self.map(|v| v.scale(lambda))
    }

    pub fn pointwise_max(&self, other: &Potential) -> Result<Potential> {
        self.zip_with(other, ExtReal::max)
    }

    pub fn pointwise_min(&self, other: &Potential) -> Result<Potential> {
        self.zip_with(other, ExtReal::min)
    }

    /// `max_x |self(x) - other(x)|`, with equal infinities at distance 0.
    pub fn sup_distance(&self, other: &Potential) -> Result<f64> {
        check_dim(self.len(), other.len())?;
        Ok(self
            .0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.distance(*b))
            .fold(0.0, f64::max))
    }

    /// Oscillation seminorm `(max u - min u) / 2` of a finite vector.
    pub fn oscillation(&self) -> f64 {
        (self.max().value() - self.min().value()) / 2.0
    }

    /// `sum_x weights[x] * self(x)` over finite entries with positive weight.
    pub fn integrate(&self, weights: &[f64]) -> ExtReal {
        let mut acc = ExtReal::ZERO;
        for (v, &w) in self.0.iter().zip(weights) {
            if w > 0.0 {
                acc = acc + v.scale(w);
            }
        }
        acc
    }
}

impl Index<usize> for Potential {
    type Output = ExtReal;

    fn index(&self, i: usize) -> &ExtReal {
        &self.0[i]
    }
}

impl FromIterator<ExtReal> for Potential {
    fn from_iter<I: IntoIterator<Item = ExtReal>>(iter: I) -> Self {
        Potential(iter.into_iter().collect())
    }
}

/// A finite stand-in for a compact metric space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteSpace {
    pub n: usize,
    pub labels: Option<Vec<String>>,
    pub metric: Option<Vec<Vec<f64>>>,
}

impl FiniteSpace {
    pub fn new(n: usize) -> Self {
        FiniteSpace { n, labels: None, metric: None }
    }

    pub fn with_metric(metric: Vec<Vec<f64>>) -> Result<Self> {
        let n = metric.len();
        for row in &metric {
            check_dim(n, row.len())?;
        }
        const TOL: f64 = 1e-12;
        for i in 0..n {
            if metric[i][i].abs() > TOL {
                return Err(Error::InvalidInput(format!("metric diagonal at {i} is nonzero")));
            }
            for j in 0..n {
                if metric[i][j] < 0.0 || (metric[i][j] - metric[j][i]).abs() > TOL {
                    return Err(Error::InvalidInput(format!(
                        "metric is negative or asymmetric at ({i}, {j})"
                    )));
                }
                for k in 0..n {
                    if metric[i][k] > metric[i][j] + metric[j][k] + TOL {
                        return Err(Error::InvalidInput(format!(
                            "triangle inequality fails at ({i}, {j}, {k})"
                        )));
                    }
                }
            }
        }
        Ok(FiniteSpace { n, labels: None, metric: Some(metric) })
    }

    /// Points of `[a, b]` at spacing `(b - a) / (n - 1)` with the distance `|x - y|`.
    pub fn uniform_grid(a: f64, b: f64, n: usize) -> (Self, Vec<f64>) {
        let points: Vec<f64> = if n == 1 {
            vec![a]
        } else {
            (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
        };
        let metric = points
            .iter()
            .map(|x| points.iter().map(|y| (x - y).abs()).collect())
            .collect();
        (FiniteSpace { n, labels: None, metric: Some(metric) }, points)
    }

    pub fn diameter(&self) -> Option<f64> {
        self.metric
            .as_ref()
            .map(|m| m.iter().flatten().copied().fold(0.0, f64::max))
    }
}
