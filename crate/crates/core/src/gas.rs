//! Ideal-gas closure for the 2-D Euler system.
//!
//! Total energy is `E = |m|^2 / (2 rho) + rho e` with `rho e = c_v p`, and the
//! total entropy is `S = c_v rho ln(p / rho^gamma)`. Everything here is
//! nondimensional.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::ConservedField;

/// Spatial dimension of the system.
pub const DIM: usize = 2;

/// Adiabatic exponent and the constants derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GasParams {
    gamma: f64,
}

impl Default for GasParams {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

impl GasParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0 && gamma <= 5.0 / 3.0) {
            return Err(Error::Config(format!(
                "gamma must lie in (1, 5/3], got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    #[inline]
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Specific heat at constant volume, `1 / (gamma - 1)`.
    #[inline]
    pub fn c_v(&self) -> f64 {
        1.0 / (self.gamma - 1.0)
    }

    pub fn dim(&self) -> usize {
        DIM
    }

    /// `(d1, d2)` with `d1 = min(2, d (gamma - 1))`, `d2 = max(2, d (gamma - 1))`.
    ///
    /// A dissipative solution satisfies `d1 E <= tr R <= d2 E`, so the ratio
    /// `E / tr R` lies in `[1 / d2, 1 / d1]`.
    pub fn defect_bounds(&self) -> (f64, f64) {
        let v = DIM as f64 * (self.gamma - 1.0);
        (v.min(2.0), v.max(2.0))
    }

    /// Band `[1 / d2, 1 / d1]` for the energy-defect to trace ratio.
    pub fn defect_ratio_band(&self) -> (f64, f64) {
        let (d1, d2) = self.defect_bounds();
        (1.0 / d2, 1.0 / d1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConservedState {
    pub rho: f64,
    pub mx: f64,
    pub my: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u: f64,
    pub v: f64,
    pub p: f64,
}

impl ConservedState {
    pub fn new(rho: f64, mx: f64, my: f64, energy: f64) -> Self {
        Self {
            rho,
            mx,
            my,
            energy,
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.rho, self.mx, self.my, self.energy]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }
}

impl PrimitiveState {
    pub fn new(rho: f64, u: f64, v: f64, p: f64) -> Self {
        Self { rho, u, v, p }
    }
}

/// Pressure of a conserved state, without validation.
#[inline]
pub fn pressure_raw(u: &[f64; 4], gamma: f64) -> f64 {
    (gamma - 1.0) * (u[3] - 0.5 * (u[1] * u[1] + u[2] * u[2]) / u[0])
}

pub fn cons_to_prim(u: &ConservedState, g: &GasParams) -> Result<PrimitiveState> {
    if !(u.rho > 0.0) {
        return Err(Error::NonPhysicalState(format!("density {}", u.rho)));
    }
    let p = pressure_raw(&u.to_array(), g.gamma);
    if !(p > 0.0) {
        return Err(Error::NonPhysicalState(format!("pressure {p}")));
    }
    Ok(PrimitiveState {
        rho: u.rho,
        u: u.mx / u.rho,
        v: u.my / u.rho,
        p,
    })
}

pub fn prim_to_cons(w: &PrimitiveState, g: &GasParams) -> Result<ConservedState> {
    if !(w.rho > 0.0) || !(w.p > 0.0) {
        return Err(Error::NonPhysicalState(format!(
            "density {} / pressure {}",
            w.rho, w.p
        )));
    }
    let mx = w.rho * w.u;
    let my = w.rho * w.v;
    Ok(ConservedState {
        rho: w.rho,
        mx,
        my,
        energy: g.c_v() * w.p + 0.5 * w.rho * (w.u * w.u + w.v * w.v),
    })
}

/// Total entropy `S = c_v rho ln(p / rho^gamma)`.
pub fn entropy(u: &ConservedState, g: &GasParams) -> Result<f64> {
    let w = cons_to_prim(u, g)?;
    Ok(entropy_from_rho_p(w.rho, w.p, g))
}

#[inline]
pub fn entropy_from_rho_p(rho: f64, p: f64, g: &GasParams) -> f64 {
    g.c_v() * rho * (p.ln() - g.gamma * rho.ln())
}

/// Inverts the entropy relation at fixed density: `p = rho^gamma exp(S / (c_v rho))`.
pub fn pressure_from_entropy(rho: f64, s: f64, g: &GasParams) -> Result<f64> {
    if !(rho > 0.0) {
        return Err(Error::Domain(format!(
            "density must be positive, got {rho}"
        )));
    }
    Ok(pressure_from_entropy_raw(rho, s, g))
}

#[inline]
pub(crate) fn pressure_from_entropy_raw(rho: f64, s: f64, g: &GasParams) -> f64 {
    (g.gamma * rho.ln() + s / (g.c_v() * rho)).exp()
}

#[inline]
pub fn sound_speed(rho: f64, p: f64, g: &GasParams) -> f64 {
    (g.gamma * p / rho).sqrt()
}

/// Largest `|u| + c` and `|v| + c` over all nodes.
pub fn max_wave_speeds(field: &ConservedField, g: &GasParams) -> Result<(f64, f64)> {
    let mut lx: f64 = 0.0;
    let mut ly: f64 = 0.0;
    for (idx, u) in field.cells.iter().enumerate() {
        let rho = u[0];
        let p = pressure_raw(u, g.gamma);
        if !(rho > 0.0) || !(p > 0.0) {
            return Err(Error::NonPhysicalState(format!(
                "node {idx}: density {rho}, pressure {p}"
            )));
        }
        let c = sound_speed(rho, p, g);
        lx = lx.max((u[1] / rho).abs() + c);
        ly = ly.max((u[2] / rho).abs() + c);
    }
    Ok((lx, ly))
}
