//! Reynolds-stress and energy defects of Cesaro averages.

use super::cesaro::CesaroField;
use crate::error::{Error, Result};
use crate::gas::{pressure_from_entropy, GasParams};
use crate::mesh::l1_norm;

#[derive(Debug, Clone, PartialEq)]
pub struct DefectFields {
    pub n: usize,
    pub r11: Vec<f64>,
    /// The single stored off-diagonal entry of the symmetric tensor.
    pub r12: Vec<f64>,
    pub r22: Vec<f64>,
    pub tr: Vec<f64>,
    pub edef: Vec<f64>,
    /// `edef / tr` where `tr > threshold`, NaN elsewhere.
    pub ratio: Vec<f64>,
}

impl DefectFields {
    /// Fraction of unmasked nodes whose ratio lies in `[lo, hi]`, and the
    /// number of unmasked nodes.
    pub fn fraction_within(&self, lo: f64, hi: f64) -> (f64, usize) {
        let active: Vec<f64> = self.ratio.iter().copied().filter(|r| !r.is_nan()).collect();
        if active.is_empty() {
            return (1.0, 0);
        }
        let inside = active.iter().filter(|r| **r >= lo && **r <= hi).count();
        (inside as f64 / active.len() as f64, active.len())
    }
}

/// `R = <m m^T/rho> + <p> I - <m><m>^T/<rho> - p(<rho>, <S>) I` and
/// `E = <|m|^2/rho>/2 + <rho e> - |<m>|^2/(2<rho>) - <rho> e(<rho>, <S>)`.
pub fn defect_fields(ces: &CesaroField, g: &GasParams, threshold: f64) -> Result<DefectFields> {
    let n = ces.n();
    let len = n * n;
    let (rho, mx, my, s) = (ces.get("rho"), ces.get("mx"), ces.get("my"), ces.get("S"));
    let (mxx, mxy, myy) = (ces.get("mxx"), ces.get("mxy"), ces.get("myy"));
    let (p, ke2, rhoe) = (ces.get("p"), ces.get("ke2"), ces.get("rhoe"));
    let mut out = DefectFields {
        n,
        r11: vec![0.0; len],
        r12: vec![0.0; len],
        r22: vec![0.0; len],
        tr: vec![0.0; len],
        edef: vec![0.0; len],
        ratio: vec![f64::NAN; len],
    };
    for i in 0..len {
        if !(rho[i] > 0.0) {
            return Err(Error::NonPhysicalState(format!(
                "averaged density {} at node {i}",
                rho[i]
            )));
        }
        let p_bar = pressure_from_entropy(rho[i], s[i], g)?;
        out.r11[i] = mxx[i] + p[i] - mx[i] * mx[i] / rho[i] - p_bar;
        out.r12[i] = mxy[i] - mx[i] * my[i] / rho[i];
        out.r22[i] = myy[i] + p[i] - my[i] * my[i] / rho[i] - p_bar;
        out.tr[i] = out.r11[i] + out.r22[i];
        out.edef[i] = 0.5 * ke2[i] + rhoe[i]
            - 0.5 * (mx[i] * mx[i] + my[i] * my[i]) / rho[i]
            - g.c_v() * p_bar;
        if out.tr[i] > threshold {
            out.ratio[i] = out.edef[i] / out.tr[i];
        }
    }
    Ok(out)
}

/// One row of the residual table.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Residual {
    pub levels: usize,
    pub eps_r: f64,
    pub eps_e: f64,
}

/// `eps_R(M) = ||tr R(M) - tr R(M_max)||_1` and the same for the energy defect.
/// `tr[k]` and `edef[k]` hold the xi-mean fields for `M = k + 1`.
pub fn defect_residuals(tr: &[Vec<f64>], edef: &[Vec<f64>], n: usize) -> Result<Vec<Residual>> {
    if tr.is_empty() || tr.len() != edef.len() {
        return Err(Error::Shape("need matching defect sequences".into()));
    }
    let last = tr.len() - 1;
    (0..tr.len())
        .map(|k| {
            let dr: Vec<f64> = tr[k].iter().zip(&tr[last]).map(|(a, b)| a - b).collect();
            let de: Vec<f64> = edef[k]
                .iter()
                .zip(&edef[last])
                .map(|(a, b)| a - b)
                .collect();
            if dr.len() != tr[last].len() || de.len() != edef[last].len() {
                return Err(Error::Shape("defect fields differ in size".into()));
            }
            Ok(Residual {
                levels: k + 1,
                eps_r: l1_norm(&dr, n)?,
                eps_e: l1_norm(&de, n)?,
            })
        })
        .collect()
}
