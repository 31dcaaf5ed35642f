//! Kelvin-Helmholtz initial data with randomly perturbed interfaces.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::coeffs::{PerturbationCoeffs, MODES};
use crate::error::{Error, Result};
use crate::gas::{prim_to_cons, GasParams, PrimitiveState};
use crate::mesh::{ConservedField, MeshHierarchy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KhConfig {
    pub tau: f64,
    pub j1: f64,
    pub j2: f64,
    pub amplitude: f64,
    /// Primitive `(rho, u, v, p)` between the interfaces.
    pub inner: [f64; 4],
    pub outer: [f64; 4],
}

impl Default for KhConfig {
    fn default() -> Self {
        Self {
            tau: 1.1,
            j1: 0.25,
            j2: 0.75,
            amplitude: 0.05,
            inner: [2.0, -0.5, 0.0, 2.5],
            outer: [1.0, 0.5, 0.0, 2.5],
        }
    }
}

impl KhConfig {
    /// Largest interface displacement for `|xi| <= xi_max`.
    pub fn max_displacement(&self, xi_max: f64) -> f64 {
        self.amplitude * (1.0 + self.tau * xi_max.tanh())
    }

    /// Checks that the perturbed interfaces cannot touch for `|xi| <= xi_max`.
    pub fn validate(&self, xi_max: f64) -> Result<()> {
        if !(0.0..=1.1).contains(&self.tau) {
            return Err(Error::Config(format!(
                "tau must lie in [0, 1.1], got {}",
                self.tau
            )));
        }
        if !(self.j1 < self.j2) {
            return Err(Error::Config("j1 must be below j2".into()));
        }
        let d = self.max_displacement(xi_max);
        if d >= 0.5 * (self.j2 - self.j1) {
            return Err(Error::InterfaceCross(format!(
                "displacement bound {d} reaches half the layer width {}",
                0.5 * (self.j2 - self.j1)
            )));
        }
        Ok(())
    }
}

/// `Y_i(x; xi) = (1 + tau tanh xi) sum_k a_i^k cos(b_i^k + 10 k pi x)`, `i` in `{1, 2}`.
pub fn interface_offset(
    x: f64,
    xi: f64,
    i: usize,
    coeffs: &PerturbationCoeffs,
    cfg: &KhConfig,
) -> f64 {
    assert!(i == 1 || i == 2, "interface index must be 1 or 2");
    let row = i - 1;
    let sum: f64 = (0..MODES)
        .map(|k| coeffs.a[row][k] * (coeffs.b[row][k] + 10.0 * (k + 1) as f64 * PI * x).cos())
        .sum();
    (1.0 + cfg.tau * xi.tanh()) * sum
}

/// Nodewise KH state on level `level` for random parameter `xi`.
pub fn kh_initial_field(
    hier: &MeshHierarchy,
    level: usize,
    xi: f64,
    coeffs: &PerturbationCoeffs,
    cfg: &KhConfig,
    g: &GasParams,
) -> Result<ConservedField> {
    hier.check_level(level)?;
    cfg.validate(xi.abs())?;
    let as_cons = |w: [f64; 4]| -> Result<[f64; 4]> {
        Ok(prim_to_cons(&PrimitiveState::new(w[0], w[1], w[2], w[3]), g)?.to_array())
    };
    let inner = as_cons(cfg.inner)?;
    let outer = as_cons(cfg.outer)?;
    let n = hier.n(level);
    let lower: Vec<f64> = (0..n)
        .map(|j| {
            cfg.j1 + cfg.amplitude * interface_offset(hier.coordinate(level, j), xi, 1, coeffs, cfg)
        })
        .collect();
    let upper: Vec<f64> = (0..n)
        .map(|j| {
            cfg.j2 + cfg.amplitude * interface_offset(hier.coordinate(level, j), xi, 2, coeffs, cfg)
        })
        .collect();
    let mut cells = Vec::with_capacity(n * n);
    for k in 0..n {
        let y = hier.coordinate(level, k);
        for j in 0..n {
            cells.push(if lower[j] < y && y < upper[j] {
                inner
            } else {
                outer
            });
        }
    }
    Ok(ConservedField { level, n, cells })
}
