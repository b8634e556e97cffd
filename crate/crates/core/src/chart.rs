use serde::{Deserialize, Serialize};

/// Coordinate chart of the ambient space: plain Euclidean coordinates or a
/// per-coordinate periodic chart (torus, circle, annulus).
///
/// In a periodic chart a period of `0.0` marks a non-wrapped coordinate, so an
/// annulus is `periods = [2*PI, 0.0]`. Distances always use the shortest
/// representative in each wrapped coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Chart {
    Euclidean { dim: usize },
    Periodic { periods: Vec<f64> },
}

impl Chart {
    pub fn circle() -> Self {
        Chart::Periodic {
            periods: vec![std::f64::consts::TAU],
        }
    }

    pub fn unit_circle() -> Self {
        Chart::Periodic { periods: vec![1.0] }
    }

    pub fn unit_torus(dim: usize) -> Self {
        Chart::Periodic {
            periods: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Chart::Euclidean { dim } => *dim,
            Chart::Periodic { periods } => periods.len(),
        }
    }

    fn period(&self, i: usize) -> f64 {
        match self {
            Chart::Euclidean { .. } => 0.0,
            Chart::Periodic { periods } => periods[i],
        }
    }

    /// Signed coordinate-wise displacement from `a` to `b`, shortest
    /// representative in wrapped coordinates.
    pub fn displacement(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        (0..a.len())
            .map(|i| {
                let d = b[i] - a[i];
                let p = self.period(i);
                if p > 0.0 {
                    let mut r = d.rem_euclid(p);
                    if r > p / 2.0 {
                        r -= p;
                    }
                    r
                } else {
                    d
                }
            })
            .collect()
    }

    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        self.displacement(a, b)
            .iter()
            .map(|d| d * d)
            .sum::<f64>()
            .sqrt()
    }

    /// Wrap a point into the fundamental domain `[0, period)` per coordinate.
    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let p = self.period(i);
                if p > 0.0 {
                    x[i].rem_euclid(p)
                } else {
                    x[i]
                }
            })
            .collect()
    }

    /// Representative of `b` nearest to `a` (unwrapped coordinates).
    pub fn nearest_representative(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let d = self.displacement(a, b);
        (0..a.len()).map(|i| a[i] + d[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_distance() {
        let c = Chart::Euclidean { dim: 2 };
        assert_eq!(c.distance(&[0.0, 0.0], &[3.0, 4.0]), 5.0);
    }

    #[test]
    fn circle_shortest_representative() {
        let c = Chart::unit_circle();
        assert!((c.distance(&[0.05], &[0.95]) - 0.1).abs() < 1e-15);
        let d = c.displacement(&[0.05], &[0.95]);
        assert!((d[0] + 0.1).abs() < 1e-15);
    }

    #[test]
    fn annulus_mixes_wrapped_and_flat() {
        let c = Chart::Periodic {
            periods: vec![1.0, 0.0],
        };
        let d = c.distance(&[0.9, 1.0], &[0.1, 2.0]);
        assert!((d - (0.04f64 + 1.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn wrap_into_fundamental_domain() {
        let c = Chart::unit_torus(2);
        let w = c.wrap(&[1.25, -0.25]);
        assert!((w[0] - 0.25).abs() < 1e-15);
        assert!((w[1] - 0.75).abs() < 1e-15);
    }
}
