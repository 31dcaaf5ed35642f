use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equispaced nodes `xi_l = a + (l - 1) (b - a) / (L - 1)` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollocationGrid {
    pub a: f64,
    pub b: f64,
    pub count: usize,
}

impl Default for CollocationGrid {
    fn default() -> Self {
        Self {
            a: -1.0,
            b: 1.0,
            count: 101,
        }
    }
}

impl CollocationGrid {
    pub fn new(a: f64, b: f64, count: usize) -> Result<Self> {
        let g = Self { a, b, count };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::Config("need at least one collocation node".into()));
        }
        if self.count > 1 && !(self.b > self.a) {
            return Err(Error::Config(format!(
                "empty range [{}, {}]",
                self.a, self.b
            )));
        }
        Ok(())
    }

    /// Node `l` (0-based); a single node sits at the midpoint.
    pub fn node(&self, l: usize) -> f64 {
        if self.count == 1 {
            return 0.5 * (self.a + self.b);
        }
        if l == self.count - 1 {
            return self.b;
        }
        self.a + l as f64 * (self.b - self.a) / (self.count - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.count).map(|l| self.node(l)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.nodes().iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_spacing() {
        let g = CollocationGrid::default();
        let x = g.nodes();
        assert_eq!(x.len(), 101);
        assert_eq!(x[0], -1.0);
        assert_eq!(x[100], 1.0);
        assert!((x[50]).abs() < 1e-15);
        let g = CollocationGrid::new(0.0, 2.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(CollocationGrid::new(1.0, 1.0, 3).is_err());
    }
}
