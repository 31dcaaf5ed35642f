//! Averages over mesh levels of fields projected to a common fine grid.

use crate::cweno::{refine_2d, CwenoConfig};
use crate::error::{Error, Result};
use crate::gas::{pressure_from_entropy, GasParams};
use crate::mesh::{GridField, MeshHierarchy};

/// Components carried through the average: the state `(rho, m, S)` and the
/// nonlinear terms evaluated from each projected state.
pub const CESARO_COMPONENTS: [&str; 10] = [
    "rho", "mx", "my", "S", "mxx", "mxy", "myy", "p", "ke2", "rhoe",
];

/// Level averages `<.>_M` on one target grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CesaroField {
    /// Number of levels averaged.
    pub levels: usize,
    pub field: GridField,
}

impl CesaroField {
    pub fn n(&self) -> usize {
        self.field.n
    }

    pub fn get(&self, name: &str) -> &[f64] {
        self.field
            .component(name)
            .unwrap_or_else(|| panic!("Cesaro field lacks {name}"))
    }
}

/// Interpolated state variables.
pub const STATE_COMPONENTS: [&str; 4] = ["rho", "mx", "my", "S"];

/// Adds the nonlinear terms `m m^T / rho`, `p(rho, S)`, `|m|^2 / rho` and
/// `rho e` to a field holding `(rho, m, S)`.
pub fn with_auxiliaries(field: &GridField, g: &GasParams) -> Result<GridField> {
    let rho = field.require("rho")?;
    let mx = field.require("mx")?;
    let my = field.require("my")?;
    let s = field.require("S")?;
    let len = rho.len();
    let mut out = GridField::new(field.level, field.n);
    let (mut mxx, mut mxy, mut myy) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    let (mut p, mut ke2, mut rhoe) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for i in 0..len {
        if !(rho[i] > 0.0) {
            return Err(Error::NonPhysicalState(format!(
                "rho = {} at node {i}",
                rho[i]
            )));
        }
        mxx[i] = mx[i] * mx[i] / rho[i];
        mxy[i] = mx[i] * my[i] / rho[i];
        myy[i] = my[i] * my[i] / rho[i];
        p[i] = pressure_from_entropy(rho[i], s[i], g)?;
        ke2[i] = mxx[i] + myy[i];
        rhoe[i] = g.c_v() * p[i];
    }
    for (name, v) in [
        ("rho", rho.to_vec()),
        ("mx", mx.to_vec()),
        ("my", my.to_vec()),
        ("S", s.to_vec()),
        ("mxx", mxx),
        ("mxy", mxy),
        ("myy", myy),
        ("p", p),
        ("ke2", ke2),
        ("rhoe", rhoe),
    ] {
        out.insert(name, v)?;
    }
    Ok(out)
}

/// Projects the state `(rho, m, S)` of every level to `target` and evaluates
/// the auxiliaries there. `per_level[i]` must hold level `i + 1`.
pub fn project_levels(
    per_level: &[GridField],
    hier: &MeshHierarchy,
    target: usize,
    g: &GasParams,
    cfg: &CwenoConfig,
) -> Result<Vec<GridField>> {
    if per_level.is_empty() {
        return Err(Error::MissingLevel(1));
    }
    per_level
        .iter()
        .enumerate()
        .map(|(i, f)| {
            if f.level != i + 1 {
                return Err(Error::MissingLevel(i + 1));
            }
            let mut state = GridField::new(f.level, f.n);
            for name in STATE_COMPONENTS {
                state.insert(name, f.require(name)?.to_vec())?;
            }
            with_auxiliaries(&refine_2d(&state, hier, target, cfg)?, g)
        })
        .collect()
}

/// Arithmetic mean of already projected level fields.
pub fn cesaro_from_projected(projected: &[GridField]) -> Result<CesaroField> {
    let first = projected.first().ok_or(Error::MissingLevel(1))?;
    let count = projected.len();
    let mut out = GridField::new(first.level, first.n);
    for name in CESARO_COMPONENTS {
        let mut acc = vec![0.0; first.n * first.n];
        for f in projected {
            if f.n != first.n {
                return Err(Error::Shape("projected levels differ in size".into()));
            }
            for (a, v) in acc.iter_mut().zip(f.require(name)?) {
                *a += v;
            }
        }
        let w = 1.0 / count as f64;
        acc.iter_mut().for_each(|a| *a *= w);
        out.insert(name, acc)?;
    }
    Ok(CesaroField {
        levels: count,
        field: out,
    })
}

/// Cesaro average over levels `1..=per_level.len()` on level `target`.
pub fn cesaro_average(
    per_level: &[GridField],
    hier: &MeshHierarchy,
    target: usize,
    g: &GasParams,
    cfg: &CwenoConfig,
) -> Result<CesaroField> {
    cesaro_from_projected(&project_levels(per_level, hier, target, g, cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::ConservedField;
    use crate::solver::with_entropy;

    fn constant(level: usize, n: usize, u: [f64; 4]) -> GridField {
        with_entropy(&ConservedField::uniform(level, n, u), &GasParams::default()).unwrap()
    }

    #[test]
    fn single_level_is_pointwise() {
        let hier = MeshHierarchy::new(1, 1).unwrap();
        let g = GasParams::default();
        let f = constant(1, 3, [1.5, 0.3, -0.6, 4.0]);
        let c = cesaro_average(&[f.clone()], &hier, 1, &g, &CwenoConfig::default()).unwrap();
        assert_eq!(c.get("rho"), f.require("rho").unwrap());
        let mxx = 0.3 * 0.3 / 1.5;
        assert!(c.get("mxx").iter().all(|v| *v == mxx));
    }

    #[test]
    fn constant_levels_average_arithmetically() {
        let hier = MeshHierarchy::new(0, 2).unwrap();
        let g = GasParams::default();
        let a = constant(1, 1, [1.0, 0.0, 0.0, 2.5]);
        let b = constant(2, 2, [2.0, 0.0, 0.0, 2.5]);
        // A single node is too coarse for a 7-point stencil but constant data
        // wraps onto itself.
        let c = cesaro_average(&[a, b], &hier, 2, &g, &CwenoConfig::default()).unwrap();
        assert!(c.get("rho").iter().all(|v| (*v - 1.5).abs() < 1e-15));
        assert!(c.get("p").iter().all(|v| (*v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn projected_states_respect_the_defect_band() {
        use crate::diagnostics::defect_fields;
        use std::f64::consts::PI;
        let hier = MeshHierarchy::new(1, 3).unwrap();
        let g = GasParams::default();
        let levels: Vec<GridField> = (1..=3)
            .map(|m| {
                let phase = 0.7 * m as f64;
                let f = ConservedField::from_fn(m, hier.n(m), |x, y| {
                    let rho = 1.5 + 0.5 * (2.0 * PI * x + phase).sin() * (2.0 * PI * y).cos();
                    let u = (2.0 * PI * (y + 0.1 * m as f64)).sin();
                    let p = 2.5 + 0.3 * (4.0 * PI * x).cos();
                    [
                        rho,
                        rho * u,
                        -0.2 * rho,
                        p / 0.4 + 0.5 * rho * (u * u + 0.04),
                    ]
                });
                with_entropy(&f, &g).unwrap()
            })
            .collect();
        let c = cesaro_average(&levels, &hier, 3, &g, &CwenoConfig::default()).unwrap();
        let d = defect_fields(&c, &g, 1e-10).unwrap();
        let (lo, hi) = g.defect_ratio_band();
        assert!(d.tr.iter().all(|v| *v >= -1e-12));
        assert!(d.edef.iter().all(|v| *v >= -1e-12));
        let (frac, active) = d.fraction_within(lo - 1e-9, hi + 1e-9);
        assert!(active > 0);
        assert_eq!(frac, 1.0);
    }

    #[test]
    fn missing_levels_are_reported() {
        let hier = MeshHierarchy::new(0, 3).unwrap();
        let g = GasParams::default();
        let b = constant(2, 2, [2.0, 0.0, 0.0, 2.5]);
        assert!(matches!(
            cesaro_average(&[b], &hier, 3, &g, &CwenoConfig::default()),
            Err(Error::MissingLevel(1))
        ));
        assert!(matches!(
            cesaro_average(&[], &hier, 3, &g, &CwenoConfig::default()),
            Err(Error::MissingLevel(1))
        ));
    }
}
