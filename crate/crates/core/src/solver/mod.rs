//! Fifth-order A-WENO finite differences in space and SSP-RK3 in time on one
//! periodic grid.

mod kernel;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gas::{entropy_from_rho_p, max_wave_speeds, pressure_raw, GasParams};
use crate::mesh::{ConservedField, GridField};
use crate::numeric::pairwise_sum;

use kernel::{line_tendency, State, Variables, Workspace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Reconstruction {
    #[default]
    Characteristic,
    Primitive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub cfl: f64,
    pub weno_eps: f64,
    pub reconstruction: Reconstruction,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub max_steps: u64,
    /// Upper bound on the step size in addition to the CFL limit.
    pub max_dt: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            cfl: 0.45,
            weno_eps: 1e-12,
            reconstruction: Reconstruction::Characteristic,
            t_end: 2.0,
            snapshot_times: Vec::new(),
            max_steps: 10_000_000,
            max_dt: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, 1), got {}",
                self.cfl
            )));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::Config(format!(
                "t_end must be >= 0, got {}",
                self.t_end
            )));
        }
        if !(self.weno_eps > 0.0) {
            return Err(Error::Config("weno_eps must be positive".into()));
        }
        if self
            .snapshot_times
            .iter()
            .any(|t| !(*t >= 0.0 && *t <= self.t_end))
        {
            return Err(Error::Config(
                "snapshot times must lie in [0, t_end]".into(),
            ));
        }
        if let Some(dt) = self.max_dt {
            if !(dt > 0.0) {
                return Err(Error::Config("max_dt must be positive".into()));
            }
        }
        Ok(())
    }

    fn variables(&self) -> Variables {
        match self.reconstruction {
            Reconstruction::Characteristic => Variables::Characteristic,
            Reconstruction::Primitive => Variables::Primitive,
        }
    }
}

/// Semi-discrete right-hand side together with the number of interfaces that
/// fell back to first order.
pub struct Tendency {
    pub values: Vec<State>,
    pub fallbacks: u64,
}

/// Flux-difference tendencies `dU/dt` for every node.
pub fn rhs(field: &ConservedField, g: &GasParams, cfg: &SolverConfig) -> Result<Tendency> {
    let n = field.n;
    let dx = field.spacing();
    let gamma = g.gamma();
    let eps = cfg.weno_eps;
    let vars = cfg.variables();

    let mut tx = vec![[0.0; 4]; n * n];
    let x_out: Vec<(u64, Option<usize>)> = tx
        .par_chunks_mut(n)
        .enumerate()
        .map_init(Workspace::default, |ws, (k, out)| {
            let line = &field.cells[k * n..(k + 1) * n];
            let o = line_tendency(line, dx, gamma, eps, vars, ws, out);
            (o.fallbacks, o.bad_interface.map(|j| k * n + j))
        })
        .collect();

    let mut ty_cols = vec![[0.0; 4]; n * n];
    let y_out: Vec<(u64, Option<usize>)> = ty_cols
        .par_chunks_mut(n)
        .enumerate()
        .map_init(
            || (Workspace::default(), Vec::with_capacity(n)),
            |(ws, line), (j, out)| {
                line.clear();
                line.extend((0..n).map(|k| {
                    let u = field.cells[k * n + j];
                    [u[0], u[2], u[1], u[3]]
                }));
                let o = line_tendency(line, dx, gamma, eps, vars, ws, out);
                (o.fallbacks, o.bad_interface.map(|k| k * n + j))
            },
        )
        .collect();

    let mut fallbacks = 0;
    for (f, bad) in x_out.iter().chain(&y_out) {
        fallbacks += f;
        if let Some(node) = bad {
            return Err(Error::NonPhysicalState(format!(
                "interface next to node {node} has no physical state"
            )));
        }
    }
    for k in 0..n {
        for j in 0..n {
            let c = ty_cols[j * n + k];
            let t = &mut tx[k * n + j];
            t[0] += c[0];
            t[1] += c[2];
            t[2] += c[1];
            t[3] += c[3];
        }
    }
    Ok(Tendency {
        values: tx,
        fallbacks,
    })
}

fn check_physical(cells: &[State], gamma: f64) -> Result<(f64, f64)> {
    let mut min_rho = f64::INFINITY;
    let mut min_p = f64::INFINITY;
    for (i, u) in cells.iter().enumerate() {
        let p = pressure_raw(u, gamma);
        if !(u[0] > 0.0 && p > 0.0) || !p.is_finite() {
            return Err(Error::NonPhysicalState(format!(
                "node {i}: rho = {}, p = {p}",
                u[0]
            )));
        }
        min_rho = min_rho.min(u[0]);
        min_p = min_p.min(p);
    }
    Ok((min_rho, min_p))
}

/// Counters accumulated while stepping.
#[derive(Debug, Clone, Copy, Default)]
pub struct StepStats {
    pub fallbacks: u64,
    pub min_rho: f64,
    pub min_p: f64,
}

/// Three-stage SSP-RK3 update of `u0` with right-hand side `l`. `check` runs
/// after each stage; both callbacks receive the 1-based stage index.
pub fn ssprk3(
    u0: &[State],
    dt: f64,
    mut l: impl FnMut(usize, &[State]) -> Result<Vec<State>>,
    mut check: impl FnMut(usize, &[State]) -> Result<()>,
) -> Result<Vec<State>> {
    let combine = |a: f64, stage: &[State], b: f64, lu: &[State]| -> Vec<State> {
        u0.iter()
            .zip(stage)
            .zip(lu)
            .map(|((x0, xs), d)| {
                let mut o = [0.0; 4];
                for k in 0..4 {
                    o[k] = a * x0[k] + b * (xs[k] + dt * d[k]);
                }
                o
            })
            .collect()
    };
    let l0 = l(1, u0)?;
    let u1 = combine(0.0, u0, 1.0, &l0);
    check(1, &u1)?;
    let l1 = l(2, &u1)?;
    let u2 = combine(0.75, &u1, 0.25, &l1);
    check(2, &u2)?;
    let l2 = l(3, &u2)?;
    let u3 = combine(1.0 / 3.0, &u2, 2.0 / 3.0, &l2);
    check(3, &u3)?;
    Ok(u3)
}

/// One SSP-RK3 step of the A-WENO discretization. Errors carry the failing
/// stage in [`Error::Blowup`] with `time` set to NaN; [`advance`] fills it in.
pub fn step_ssprk3(
    field: &ConservedField,
    dt: f64,
    g: &GasParams,
    cfg: &SolverConfig,
) -> Result<(ConservedField, StepStats)> {
    if !(dt > 0.0) {
        return Err(Error::Config(format!("dt must be positive, got {dt}")));
    }
    let gamma = g.gamma();
    let blow = |stage: usize, e: Error| Error::Blowup {
        time: f64::NAN,
        stage: Some(stage),
        cause: e.to_string(),
    };
    let mut fallbacks = 0;
    let mut mins = (f64::INFINITY, f64::INFINITY);
    let cells = ssprk3(
        &field.cells,
        dt,
        |stage, u| {
            let f = ConservedField {
                level: field.level,
                n: field.n,
                cells: u.to_vec(),
            };
            let t = rhs(&f, g, cfg).map_err(|e| blow(stage, e))?;
            fallbacks += t.fallbacks;
            Ok(t.values)
        },
        |stage, u| {
            mins = check_physical(u, gamma).map_err(|e| blow(stage, e))?;
            Ok(())
        },
    )?;
    let stats = StepStats {
        fallbacks,
        min_rho: mins.0,
        min_p: mins.1,
    };
    Ok((
        ConservedField {
            cells,
            ..field.clone()
        },
        stats,
    ))
}

/// Conserved variables plus the entropy `S`, as stored on disk.
pub fn with_entropy(field: &ConservedField, g: &GasParams) -> Result<GridField> {
    let mut out = field.to_grid_field();
    let s = field
        .cells
        .iter()
        .map(|u| {
            let p = pressure_raw(u, g.gamma());
            if u[0] <= 0.0 || p <= 0.0 {
                return Err(Error::NonPhysicalState(format!("rho = {}, p = {p}", u[0])));
            }
            Ok(entropy_from_rho_p(u[0], p, g))
        })
        .collect::<Result<Vec<_>>>()?;
    out.insert("S", s)?;
    Ok(out)
}

/// Grid-weighted total entropy.
pub fn total_entropy(field: &GridField) -> Result<f64> {
    let s = field.require("S")?;
    let h = 1.0 / field.n as f64;
    Ok(pairwise_sum(s) * h * h)
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub time: f64,
    pub field: GridField,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub conserved: ConservedField,
    /// Final conserved variables with `S`.
    pub field: GridField,
    pub time: f64,
    pub steps: u64,
    pub wall_time_s: f64,
    pub min_rho: f64,
    pub min_p: f64,
    pub fallbacks: u64,
    pub snapshots: Vec<Snapshot>,
    /// `(t, total entropy)` at the start, each snapshot and the end.
    pub entropy_history: Vec<(f64, f64)>,
}

/// Advances `field` from `t = 0` to `cfg.t_end`, landing exactly on every
/// snapshot time.
pub fn advance(field: &ConservedField, g: &GasParams, cfg: &SolverConfig) -> Result<RunResult> {
    cfg.validate()?;
    let start = Instant::now();
    let gamma = g.gamma();
    let (mut min_rho, mut min_p) = check_physical(&field.cells, gamma)?;
    let mut targets: Vec<f64> = cfg.snapshot_times.clone();
    targets.push(cfg.t_end);
    targets.sort_by(f64::total_cmp);
    targets.dedup();

    let mut u = field.clone();
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut fallbacks = 0u64;
    let mut snapshots = Vec::new();
    let initial = with_entropy(&u, g)?;
    let mut entropy_history = vec![(0.0, total_entropy(&initial)?)];
    let dx = u.spacing();

    for &target in &targets {
        while t < target {
            if steps >= cfg.max_steps {
                return Err(Error::MaxStepsExceeded { steps, time: t });
            }
            let (lx, ly) = max_wave_speeds(&u, g).map_err(|e| Error::Blowup {
                time: t,
                stage: None,
                cause: e.to_string(),
            })?;
            let mut dt = cfg.cfl * (dx / lx).min(dx / ly);
            if let Some(m) = cfg.max_dt {
                dt = dt.min(m);
            }
            let landing = t + dt >= target - 1e-12 * target.max(1.0);
            if landing {
                dt = target - t;
            }
            let (next, stats) = step_ssprk3(&u, dt, g, cfg).map_err(|e| match e {
                Error::Blowup { stage, cause, .. } => Error::Blowup {
                    time: t,
                    stage,
                    cause,
                },
                other => other,
            })?;
            u = next;
            t = if landing { target } else { t + dt };
            steps += 1;
            fallbacks += stats.fallbacks;
            min_rho = min_rho.min(stats.min_rho);
            min_p = min_p.min(stats.min_p);
        }
        if target < cfg.t_end || cfg.snapshot_times.contains(&target) {
            let snap = with_entropy(&u, g)?;
            let total = total_entropy(&snap)?;
            log::debug!("t = {target}: total entropy {total:.12e}");
            entropy_history.push((target, total));
            snapshots.push(Snapshot {
                time: target,
                field: snap,
            });
        }
    }
    let final_field = with_entropy(&u, g)?;
    if entropy_history.last().map(|e| e.0) != Some(t) || t == 0.0 {
        entropy_history.push((t, total_entropy(&final_field)?));
    }
    Ok(RunResult {
        conserved: u,
        field: final_field,
        time: t,
        steps,
        wall_time_s: start.elapsed().as_secs_f64(),
        min_rho,
        min_p,
        fallbacks,
        snapshots,
        entropy_history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gas::{prim_to_cons, PrimitiveState};
    use std::f64::consts::PI;

    fn advected(n: usize) -> ConservedField {
        let g = GasParams::default();
        ConservedField::from_fn(1, n, |x, y| {
            let rho = 1.0 + 0.2 * (2.0 * PI * (x + y)).sin();
            prim_to_cons(&PrimitiveState::new(rho, 1.0, 1.0, 1.0), &g)
                .unwrap()
                .to_array()
        })
    }

    #[test]
    fn uniform_state_has_zero_tendency() {
        let f = ConservedField::uniform(1, 12, [1.0, 0.3, -0.2, 2.7]);
        let t = rhs(&f, &GasParams::default(), &SolverConfig::default()).unwrap();
        for v in &t.values {
            for c in v {
                assert!(c.abs() < 1e-13);
            }
        }
    }

    #[test]
    fn tendencies_telescope() {
        for rec in [Reconstruction::Characteristic, Reconstruction::Primitive] {
            let cfg = SolverConfig {
                reconstruction: rec,
                ..SolverConfig::default()
            };
            let f = advected(20);
            let t = rhs(&f, &GasParams::default(), &cfg).unwrap();
            for k in 0..4 {
                let total: f64 = t.values.iter().map(|v| v[k]).sum();
                assert!(total.abs() < 1e-12, "component {k}: {total:e}");
            }
        }
    }

    #[test]
    fn density_tendency_converges_at_fifth_order() {
        let g = GasParams::default();
        let mut errs = Vec::new();
        let mut hs = Vec::new();
        for n in [16usize, 32, 64] {
            let f = advected(n);
            let t = rhs(&f, &g, &SolverConfig::default()).unwrap();
            let h = 1.0 / n as f64;
            let mut err = 0.0;
            for k in 0..n {
                for j in 0..n {
                    let s = (j + k) as f64 * h;
                    // -div(rho u) with u = v = 1.
                    let exact = -2.0 * 0.2 * 2.0 * PI * (2.0 * PI * s).cos();
                    err += (t.values[k * n + j][0] - exact).abs() * h * h;
                }
            }
            errs.push(err);
            hs.push(h);
        }
        let order = crate::numeric::fitted_order(&hs, &errs);
        assert!(order > 4.5, "order {order}, errors {errs:?}");
    }

    #[test]
    fn ssprk3_on_scalar_decay() {
        let dt: f64 = 0.1;
        let out = ssprk3(
            &[[1.0, 0.0, 0.0, 0.0]],
            dt,
            |_, u| Ok(u.iter().map(|v| [-v[0], 0.0, 0.0, 0.0]).collect()),
            |_, _| Ok(()),
        )
        .unwrap();
        // Third-order Taylor polynomial of exp(-dt).
        let rk3 = 1.0 - dt + dt * dt / 2.0 - dt.powi(3) / 6.0;
        assert!((out[0][0] - rk3).abs() < 1e-15);
        assert!((out[0][0] - 0.904_833_3).abs() < 1e-7);
        assert!((out[0][0] - (-dt).exp()).abs() < dt.powi(4));
    }

    #[test]
    fn uniform_field_is_a_fixed_point() {
        let f = ConservedField::uniform(1, 8, [1.0, 0.5, 0.0, 2.625]);
        let (next, _) =
            step_ssprk3(&f, 0.01, &GasParams::default(), &SolverConfig::default()).unwrap();
        for (a, b) in next.cells.iter().zip(&f.cells) {
            for k in 0..4 {
                assert!((a[k] - b[k]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn zero_end_time_returns_input() {
        let f = advected(8);
        let cfg = SolverConfig {
            t_end: 0.0,
            ..SolverConfig::default()
        };
        let r = advance(&f, &GasParams::default(), &cfg).unwrap();
        assert_eq!(r.conserved, f);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn advance_lands_on_snapshots_and_conserves() {
        let f = advected(16);
        let g = GasParams::default();
        let cfg = SolverConfig {
            t_end: 0.3,
            snapshot_times: vec![0.1, 0.25],
            ..SolverConfig::default()
        };
        let r = advance(&f, &g, &cfg).unwrap();
        assert_eq!(r.time, 0.3);
        let times: Vec<f64> = r.snapshots.iter().map(|s| s.time).collect();
        assert_eq!(times, vec![0.1, 0.25]);
        let before = f.totals();
        let after = r.conserved.totals();
        for k in 0..4 {
            assert!((after[k] - before[k]).abs() <= 1e-11 * before[k].abs().max(1.0));
        }
    }

    #[test]
    fn config_validation() {
        let bad = SolverConfig {
            cfl: 1.5,
            ..SolverConfig::default()
        };
        assert!(matches!(bad.validate(), Err(Error::Config(_))));
        assert!(SolverConfig::default().validate().is_ok());
    }

    #[test]
    fn blowup_reports_stage() {
        let mut f = ConservedField::uniform(1, 8, [1.0, 0.0, 0.0, 2.5]);
        f.cells[10] = [1e-8, 0.0, 0.0, 1e-9];
        f.cells[11] = [1.0, 50.0, 0.0, 1251.0];
        let err =
            step_ssprk3(&f, 0.5, &GasParams::default(), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Blowup { stage: Some(_), .. }), "{err}");
    }

    proptest::proptest! {
        #![proptest_config(proptest::test_runner::Config::with_cases(16))]

        #[test]
        fn random_smooth_states_conserve_totals(
            n in 8usize..20,
            a in proptest::array::uniform4(-0.3f64..0.3),
            phase in 0.0f64..6.3,
            primitive in proptest::bool::ANY,
        ) {
            let g = GasParams::default();
            let f = ConservedField::from_fn(1, n, |x, y| {
                let s = (2.0 * PI * x + phase).sin();
                let c = (2.0 * PI * y).cos();
                let w = PrimitiveState::new(1.0 + a[0] * s, a[1] * c, a[2] * s * c, 1.0 + a[3] * c);
                prim_to_cons(&w, &g).unwrap().to_array()
            });
            let cfg = SolverConfig {
                t_end: 0.05,
                reconstruction: if primitive { Reconstruction::Primitive } else { Reconstruction::Characteristic },
                ..SolverConfig::default()
            };
            let r = advance(&f, &g, &cfg).unwrap();
            let (before, after) = (f.totals(), r.conserved.totals());
            for k in 0..4 {
                proptest::prop_assert!((after[k] - before[k]).abs() <= 1e-12 * before[k].abs().max(1.0));
            }
        }
    }
}
