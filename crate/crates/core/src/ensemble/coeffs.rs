//! Random interface-perturbation coefficients and their text file format.
//!
//! The file has four lines (`a_1`, `b_1`, `a_2`, `b_2`), each with ten values
//! written with 17 significant digits.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prng::SplitMix64;
use crate::error::{Error, Result};

pub const MODES: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationCoeffs {
    /// Amplitudes `a[i][k]`, each row nonnegative and summing to one.
    pub a: [[f64; MODES]; 2],
    /// Phases `b[i][k]` in `[-pi, pi]`.
    pub b: [[f64; MODES]; 2],
}

fn normalize(row: &mut [f64; MODES]) {
    let total: f64 = row.iter().sum();
    for v in row.iter_mut() {
        *v /= total;
    }
}

/// Draws 20 amplitudes (`a_1` then `a_2`) and then 20 phases (`b_1` then
/// `b_2`) from one SplitMix64 stream.
pub fn generate_coeffs(seed: u64) -> PerturbationCoeffs {
    let mut rng = SplitMix64::new(seed);
    let mut a = [[0.0; MODES]; 2];
    let mut b = [[0.0; MODES]; 2];
    for row in a.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.next_f64();
        }
        normalize(row);
    }
    for row in b.iter_mut() {
        for v in row.iter_mut() {
            *v = rng.uniform(-PI, PI);
        }
    }
    PerturbationCoeffs { a, b }
}

impl PerturbationCoeffs {
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.a.iter().enumerate() {
            if row.iter().any(|v| !(*v >= 0.0)) {
                return Err(Error::Format(format!(
                    "a_{} has a negative amplitude",
                    i + 1
                )));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::Format(format!("a_{} sums to {total}, not 1", i + 1)));
            }
        }
        if self.b.iter().flatten().any(|v| !(v.abs() <= PI)) {
            return Err(Error::Format("phase outside [-pi, pi]".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in [&self.a[0], &self.b[0], &self.a[1], &self.b[1]] {
            let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            writeln!(out, "{}", line.join(" ")).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|e| Error::Format(format!("{t:?}: {e}")))
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        if rows.len() != 4 || rows.iter().any(|r| r.len() != MODES) {
            return Err(Error::Format(
                "coefficient file needs 4 lines of 10 values".into(),
            ));
        }
        let arr = |r: &Vec<f64>| -> [f64; MODES] { r.as_slice().try_into().unwrap() };
        let c = Self {
            a: [arr(&rows[0]), arr(&rows[2])],
            b: [arr(&rows[1]), arr(&rows[3])],
        };
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    /// Writes the file; refuses to replace an existing one unless `force`.
    pub fn save(&self, path: &Path, force: bool) -> Result<()> {
        if path.exists() && !force {
            return Err(Error::Config(format!(
                "{} exists; pass --force to overwrite",
                path.display()
            )));
        }
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// SHA-256 of the canonical text form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }
}
