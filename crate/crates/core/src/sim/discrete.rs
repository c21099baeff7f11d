use ndarray::ArrayViewMut1;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::StreamRng;

/// A joint distribution of a discrete covariate `X ∈ {0..k-1}`, `G` and `Y`.
///
/// `cells[(2x + g) * 2 + y] = P(X=x, G=g, Y=y)`. As features, `X` is one
/// column for `k = 2` and a one-hot block with level 0 dropped otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteLaw {
    levels: usize,
    cells: Vec<f64>,
}

impl DiscreteLaw {
    pub fn from_cells(levels: usize, cells: Vec<f64>) -> Result<Self> {
        let law = Self { levels, cells };
        law.validate()?;
        Ok(law)
    }

    /// `P(G=1) = 1/2`, `P(X=1|G=1) = 0.7`, `P(X=1|G=0) = 0.3`,
    /// `P(Y=1|X=0) = 0.2`, `P(Y=1|X=1) = 0.8`.
    pub fn eight_cell() -> Self {
        let px_g = |x: usize, g: usize| match (x, g) {
            (1, 1) => 0.7,
            (0, 1) => 0.3,
            (1, 0) => 0.3,
            _ => 0.7,
        };
        let py_x = |y: usize, x: usize| {
            let p1 = if x == 1 { 0.8 } else { 0.2 };
            if y == 1 {
                p1
            } else {
                1.0 - p1
            }
        };
        let mut cells = vec![0.0; 8];
        for x in 0..2 {
            for g in 0..2 {
                for y in 0..2 {
                    cells[(2 * x + g) * 2 + y] = 0.5 * px_g(x, g) * py_x(y, x);
                }
            }
        }
        Self { levels: 2, cells }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidDistribution(m));
        if self.levels < 2 {
            return bad(format!("need at least 2 levels, got {}", self.levels));
        }
        if self.cells.len() != 4 * self.levels {
            return bad(format!("{} cells for {} levels", self.cells.len(), self.levels));
        }
        if self.cells.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
            return bad("cell probabilities must be finite and nonnegative".into());
        }
        let total: f64 = self.cells.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("cells sum to {total}"));
        }
        for g in 0..2 {
            if (0..self.levels).map(|x| self.p(x, g, 0) + self.p(x, g, 1)).sum::<f64>() <= 0.0 {
                return bad(format!("P(G={g}) is zero"));
            }
        }
        Ok(())
    }

    pub fn n_levels(&self) -> usize {
        self.levels
    }

    pub fn p(&self, x: usize, g: usize, y: usize) -> f64 {
        self.cells[(2 * x + g) * 2 + y]
    }

    pub fn p_x(&self, x: usize) -> f64 {
        (0..4).map(|k| self.cells[4 * x + k]).sum()
    }

    pub fn n_feature_columns(&self) -> usize {
        if self.levels == 2 {
            1
        } else {
            self.levels - 1
        }
    }

    pub fn feature_names(&self) -> Vec<String> {
        if self.levels == 2 {
            vec!["x".into()]
        } else {
            (1..self.levels).map(|l| format!("x={l}")).collect()
        }
    }

    pub fn encode_level(&self, level: usize, mut row: ArrayViewMut1<'_, f64>) {
        row.fill(0.0);
        if self.levels == 2 {
            row[0] = level as f64;
        } else if level > 0 {
            row[level - 1] = 1.0;
        }
    }

    pub fn sample_cell(&self, rng: &mut StreamRng) -> (usize, u8, u8) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut idx = self.cells.len() - 1;
        for (k, &p) in self.cells.iter().enumerate() {
            acc += p;
            if u < acc {
                idx = k;
                break;
            }
        }
        (idx / 4, ((idx / 2) % 2) as u8, (idx % 2) as u8)
    }

    /// `(π(x), q₁(x), q₀(x))`; levels of zero mass get neutral values.
    pub fn conditionals(&self, x: usize) -> (f64, f64, f64) {
        let px = self.p_x(x);
        if px <= 0.0 {
            return (0.5, 0.5, 0.5);
        }
        let pg1 = self.p(x, 1, 0) + self.p(x, 1, 1);
        let pg0 = self.p(x, 0, 0) + self.p(x, 0, 1);
        let q1 = if pg1 > 0.0 { self.p(x, 1, 1) / pg1 } else { 0.5 };
        let q0 = if pg0 > 0.0 { self.p(x, 0, 1) / pg0 } else { 0.5 };
        (pg1 / px, q1, q0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_cell_is_a_distribution() {
        let law = DiscreteLaw::eight_cell();
        assert!(law.validate().is_ok());
        assert!((law.p_x(1) - 0.5).abs() < 1e-15);
        let (pi, q1, q0) = law.conditionals(1);
        assert!((pi - 0.7).abs() < 1e-12 && (q1 - 0.8).abs() < 1e-12 && (q0 - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_cells() {
        assert!(DiscreteLaw::from_cells(2, vec![0.125; 7]).is_err());
        assert!(DiscreteLaw::from_cells(2, vec![0.2; 8]).is_err());
        let mut c = vec![0.125; 8];
        c[0] = -0.125;
        c[1] = 0.375;
        assert!(DiscreteLaw::from_cells(2, c).is_err());
    }
}
