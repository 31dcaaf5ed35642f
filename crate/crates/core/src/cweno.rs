//! Seventh-order CWENO point-value interpolation in one dimension.
//!
//! Each cell `[x_l - h/2, x_l + h/2]` carries a degree-6 polynomial written in
//! the local coordinate `s = (x - x_l) / h`. The polynomial is a convex blend of
//! the central degree-6 interpolant and four cubic interpolants, all of which
//! pass through `(x_l, psi_l)`, weighted with Z-type nonlinear weights.
//! Within three cells of either end the seven-point window is shifted inward
//! and the low-degree candidates become the one-sided linear interpolants.

use std::sync::OnceLock;

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{GridField, MeshHierarchy};
use crate::numeric::{gauss_legendre_7, pairwise_sum};

pub const DEGREE: usize = 6;
const CUBIC: usize = 3;
/// Linear weight of the central degree-6 candidate; the low-degree candidates share the rest.
const D_CENTRAL: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CwenoMode {
    #[default]
    Nonlinear,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CwenoConfig {
    pub eps: f64,
    pub power: i32,
    pub mode: CwenoMode,
    /// Linear weight of the central candidate inside the nonlinear weights.
    /// Any value other than the construction weight 0.6 makes the blend
    /// inconsistent; it exists for fault injection.
    pub central_weight: f64,
}

impl Default for CwenoConfig {
    fn default() -> Self {
        Self {
            eps: 1e-12,
            power: 2,
            mode: CwenoMode::Nonlinear,
            central_weight: D_CENTRAL,
        }
    }
}

impl CwenoConfig {
    pub fn linear() -> Self {
        Self {
            mode: CwenoMode::Linear,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.central_weight > 0.0 && self.central_weight < 1.0) {
            return Err(Error::Config(format!(
                "cweno central weight must lie in (0, 1), got {}",
                self.central_weight
            )));
        }
        if !(self.eps > 0.0) || self.power < 1 {
            return Err(Error::Config(format!(
                "cweno eps must be > 0 and power >= 1, got eps={} power={}",
                self.eps, self.power
            )));
        }
        Ok(())
    }
}

type Coeffs = [f64; DEGREE + 1];

/// Maps stencil differences `psi_j - psi_l` to the monomial coefficients
/// `c_1..c_deg` of the interpolant in `s`.
struct Stencil {
    start: i32,
    deg: usize,
    inv: Vec<f64>,
}

impl Stencil {
    fn new(start: i32, deg: usize) -> Self {
        let offsets: Vec<i32> = (start..=start + deg as i32).filter(|&o| o != 0).collect();
        let v = Mat::from_fn(deg, deg, |r, c| (offsets[r] as f64).powi(c as i32 + 1));
        let inv = v.partial_piv_lu().inverse();
        let mut flat = vec![0.0; deg * deg];
        for r in 0..deg {
            for c in 0..deg {
                flat[r * deg + c] = inv[(r, c)];
            }
        }
        Self {
            start,
            deg,
            inv: flat,
        }
    }

    /// `value(o)` returns the sample at offset `o` from the centre node.
    fn coeffs(&self, center: f64, value: &impl Fn(i32) -> f64) -> Coeffs {
        let mut diffs = [0.0; DEGREE];
        let mut k = 0;
        for o in self.start..=self.start + self.deg as i32 {
            if o != 0 {
                diffs[k] = value(o) - center;
                k += 1;
            }
        }
        let mut c = [0.0; DEGREE + 1];
        c[0] = center;
        for i in 0..self.deg {
            let row = &self.inv[i * self.deg..(i + 1) * self.deg];
            c[i + 1] = row.iter().zip(&diffs).map(|(a, b)| a * b).sum();
        }
        c
    }
}

struct Tables {
    sextic: Vec<Stencil>,
    cubic: Vec<Stencil>,
    linear: Vec<Stencil>,
    beta: [[f64; DEGREE + 1]; DEGREE + 1],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let sextic = (-6..=0).map(|s| Stencil::new(s, DEGREE)).collect();
        let cubic = (-3..=0).map(|s| Stencil::new(s, CUBIC)).collect();
        let linear = (-1..=0).map(|s| Stencil::new(s, 1)).collect();
        Tables {
            sextic,
            cubic,
            linear,
            beta: beta_form(),
        }
    })
}

/// Quadratic form of the smoothness indicator `sum_r int_{-1/2}^{1/2} (d^r P / ds^r)^2 ds`.
fn beta_form() -> [[f64; DEGREE + 1]; DEGREE + 1] {
    let falling = |i: usize, r: usize| -> f64 { ((i - r + 1)..=i).map(|v| v as f64).product() };
    let moment = |n: usize| -> f64 {
        if n % 2 == 1 {
            0.0
        } else {
            2.0 * 0.5f64.powi(n as i32 + 1) / (n as f64 + 1.0)
        }
    };
    let mut b = [[0.0; DEGREE + 1]; DEGREE + 1];
    for i in 1..=DEGREE {
        for j in 1..=DEGREE {
            for r in 1..=i.min(j) {
                b[i][j] += falling(i, r) * falling(j, r) * moment(i + j - 2 * r);
            }
        }
    }
    b
}

fn indicator(c: &Coeffs) -> f64 {
    let b = &tables().beta;
    let mut s = 0.0;
    for i in 1..=DEGREE {
        if c[i] == 0.0 {
            continue;
        }
        for j in 1..=DEGREE {
            s += b[i][j] * c[i] * c[j];
        }
    }
    s
}

/// Builds the blended piece centred on a node whose seven-point window starts
/// at offset `window` (`-3` in the interior).
fn build_piece(center: f64, window: i32, value: &impl Fn(i32) -> f64, cfg: &CwenoConfig) -> Coeffs {
    let t = tables();
    let opt = t.sextic[(window + 6) as usize].coeffs(center, value);
    if cfg.mode == CwenoMode::Linear {
        return opt;
    }
    let mut cand = [[0.0; DEGREE + 1]; 4];
    let mut beta = [0.0; 4];
    let count;
    if window == -3 {
        count = 4;
        for k in 0..4 {
            cand[k] = t.cubic[k].coeffs(center, value);
        }
    } else {
        let lo = if window <= -1 { -1 } else { 0 };
        let hi = if window >= -5 { 0 } else { -1 };
        count = (hi - lo + 1) as usize;
        for (k, s) in (lo..=hi).enumerate() {
            cand[k] = t.linear[(s + 1) as usize].coeffs(center, value);
        }
    }
    for k in 0..count {
        beta[k] = indicator(&cand[k]);
    }
    let d_k = (1.0 - D_CENTRAL) / count as f64;
    let beta_opt = indicator(&opt);
    let tau = match count {
        4 => (beta[0] - 3.0 * beta[1] + 3.0 * beta[2] - beta[3]).abs(),
        _ => {
            beta[..count]
                .iter()
                .map(|b| (beta_opt - b).abs())
                .sum::<f64>()
                / count as f64
        }
    };
    let z = |b: f64| 1.0 + (tau / (b + cfg.eps)).powi(cfg.power);
    let mut alpha = [0.0; 4];
    let mut alpha0 = cfg.central_weight * z(beta_opt);
    let mut total = alpha0;
    for k in 0..count {
        alpha[k] = d_k * z(beta[k]);
        total += alpha[k];
    }
    alpha0 /= total;
    let mut out = [0.0; DEGREE + 1];
    out[0] = center;
    for i in 1..=DEGREE {
        let mut central = opt[i];
        let mut blend = 0.0;
        for k in 0..count {
            central -= d_k * cand[k][i];
            blend += alpha[k] / total * cand[k][i];
        }
        out[i] = alpha0 / D_CENTRAL * central + blend;
    }
    out
}

fn horner(c: &Coeffs, s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * s + v)
}

/// Piecewise-polynomial CWENO7 representation of samples on uniform nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    a: f64,
    h: f64,
    pieces: Vec<Coeffs>,
}

impl PiecewisePoly {
    /// Builds from samples at `a + l (b - a) / (L - 1)`.
    pub fn build_uniform(a: f64, b: f64, samples: &[f64], cfg: &CwenoConfig) -> Result<Self> {
        let l = samples.len();
        if l < 7 {
            return Err(Error::TooFewSamples(l));
        }
        if !(b > a) {
            return Err(Error::Config(format!("empty interval [{a}, {b}]")));
        }
        let h = (b - a) / (l - 1) as f64;
        let pieces = (0..l)
            .map(|i| {
                let window = (i as i32 - 3).clamp(0, l as i32 - 7) - i as i32;
                let value = |o: i32| samples[(i as i32 + o) as usize];
                build_piece(samples[i], window, &value, cfg)
            })
            .collect();
        Ok(Self { a, h, pieces })
    }

    /// Builds from explicit abscissae, which must be uniformly spaced.
    pub fn build(nodes: &[f64], samples: &[f64], cfg: &CwenoConfig) -> Result<Self> {
        if nodes.len() != samples.len() {
            return Err(Error::Shape(format!(
                "{} nodes but {} samples",
                nodes.len(),
                samples.len()
            )));
        }
        if nodes.len() < 7 {
            return Err(Error::TooFewSamples(nodes.len()));
        }
        let a = nodes[0];
        let b = nodes[nodes.len() - 1];
        let h = (b - a) / (nodes.len() - 1) as f64;
        for (i, x) in nodes.iter().enumerate() {
            let expected = a + i as f64 * h;
            if (x - expected).abs() > 1e-12 * (b - a) {
                return Err(Error::NonUniform);
            }
        }
        Self::build_uniform(a, b, samples, cfg)
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.a
    }

    pub fn upper(&self) -> f64 {
        self.a + self.h * (self.pieces.len() - 1) as f64
    }

    pub fn node(&self, l: usize) -> f64 {
        self.a + self.h * l as f64
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Monomial coefficients of piece `l` in `s = (x - x_l) / h`.
    pub fn piece(&self, l: usize) -> &[f64; DEGREE + 1] {
        &self.pieces[l]
    }

    /// Index of the cell containing `x`; half-node ties go to the left cell.
    pub fn cell_of(&self, x: f64) -> Result<usize> {
        let (lo, hi) = (self.lower(), self.upper());
        let slack = 1e-12 * (hi - lo);
        if !(x >= lo - slack && x <= hi + slack) {
            return Err(Error::OutOfRange { value: x, lo, hi });
        }
        let t = (x - self.a) / self.h - 0.5;
        Ok((t.ceil().max(0.0) as usize).min(self.pieces.len() - 1))
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let l = self.cell_of(x)?;
        Ok(horner(&self.pieces[l], (x - self.node(l)) / self.h))
    }

    /// Mean and standard deviation of the interpolant under the uniform
    /// density on `[x_1, x_L]`, with half cells at both ends.
    pub fn uniform_moments(&self) -> (f64, f64) {
        let (gx, gw) = gauss_legendre_7();
        let l = self.pieces.len();
        let cell = |i: usize| -> (f64, f64) {
            let lo = if i == 0 { 0.0 } else { -0.5 };
            let hi = if i == l - 1 { 0.0 } else { 0.5 };
            (lo, hi)
        };
        let integrate = |f: &dyn Fn(usize, f64) -> f64| -> f64 {
            let parts: Vec<f64> = (0..l)
                .map(|i| {
                    let (lo, hi) = cell(i);
                    let half = 0.5 * (hi - lo);
                    let mid = 0.5 * (hi + lo);
                    half * gx
                        .iter()
                        .zip(gw)
                        .map(|(x, w)| w * f(i, mid + half * x))
                        .sum::<f64>()
                })
                .collect();
            pairwise_sum(&parts)
        };
        // Integrals in `s` carry a factor h; the density is 1 / ((L - 1) h).
        let norm = 1.0 / (l - 1) as f64;
        let mean = integrate(&|i, s| horner(&self.pieces[i], s)) * norm;
        let var = integrate(&|i, s| {
            let d = horner(&self.pieces[i], s) - mean;
            d * d
        }) * norm;
        let var = if var < 0.0 && var.abs() < 1e-14 {
            0.0
        } else {
            var
        };
        (mean, var.max(0.0).sqrt())
    }
}

/// Probability density over the random parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Density {
    Uniform { a: f64, b: f64 },
    Other,
}

/// Mean and standard deviation of `pp` against density `mu`.
pub fn quadrature_moments(pp: &PiecewisePoly, mu: Density) -> Result<(f64, f64)> {
    match mu {
        Density::Uniform { a, b } => {
            let tol = 1e-12 * (b - a).abs().max(1.0);
            if (a - pp.lower()).abs() > tol || (b - pp.upper()).abs() > tol {
                return Err(Error::Config(format!(
                    "density support [{a}, {b}] differs from node range [{}, {}]",
                    pp.lower(),
                    pp.upper()
                )));
            }
            Ok(pp.uniform_moments())
        }
        Density::Other => Err(Error::UnsupportedWeight),
    }
}

/// Doubles a periodic sample sequence: even outputs copy the input, odd outputs
/// evaluate the CWENO7 piece of the left node at the midpoint.
pub fn refine_1d(coarse: &[f64], cfg: &CwenoConfig) -> Result<Vec<f64>> {
    let mut out = vec![0.0; 2 * coarse.len()];
    refine_1d_into(coarse, cfg, &mut out)?;
    Ok(out)
}

fn refine_1d_into(coarse: &[f64], cfg: &CwenoConfig, out: &mut [f64]) -> Result<()> {
    let n = coarse.len();
    if n == 0 {
        return Err(Error::TooFewSamples(0));
    }
    for j in 0..n {
        let value = |o: i32| coarse[(j as i64 + o as i64).rem_euclid(n as i64) as usize];
        let piece = build_piece(coarse[j], -3, &value, cfg);
        out[2 * j] = coarse[j];
        out[2 * j + 1] = horner(&piece, 0.5);
    }
    Ok(())
}

/// Doubles a periodic `n x n` array along `x` and then `y`.
fn refine_square(values: &[f64], n: usize, cfg: &CwenoConfig) -> Result<Vec<f64>> {
    let f = 2 * n;
    let mut rows = vec![0.0; n * f];
    for k in 0..n {
        refine_1d_into(
            &values[k * n..(k + 1) * n],
            cfg,
            &mut rows[k * f..(k + 1) * f],
        )?;
    }
    let mut out = vec![0.0; f * f];
    let mut col = vec![0.0; n];
    let mut fine = vec![0.0; f];
    for j in 0..f {
        for k in 0..n {
            col[k] = rows[k * f + j];
        }
        refine_1d_into(&col, cfg, &mut fine)?;
        for k in 0..f {
            out[k * f + j] = fine[k];
        }
    }
    Ok(out)
}

/// Projects a flat `n x n` array through `doublings` successive refinements.
pub fn refine_values(
    values: &[f64],
    n: usize,
    doublings: usize,
    cfg: &CwenoConfig,
) -> Result<Vec<f64>> {
    if values.len() != n * n {
        return Err(Error::Shape(format!(
            "expected {} values, got {}",
            n * n,
            values.len()
        )));
    }
    let mut cur = values.to_vec();
    let mut size = n;
    for _ in 0..doublings {
        cur = refine_square(&cur, size, cfg)?;
        size *= 2;
    }
    Ok(cur)
}

/// Projects every component of `field` to level `target` of `hier`.
pub fn refine_2d(
    field: &GridField,
    hier: &MeshHierarchy,
    target: usize,
    cfg: &CwenoConfig,
) -> Result<GridField> {
    hier.check_level(field.level)?;
    hier.check_level(target)?;
    if field.n != hier.n(field.level) {
        return Err(Error::HierarchyMismatch(format!(
            "field has n={} but level {} has n={}",
            field.n,
            field.level,
            hier.n(field.level)
        )));
    }
    if target < field.level {
        return Err(Error::HierarchyMismatch(format!(
            "cannot project level {} down to level {target}",
            field.level
        )));
    }
    let doublings = target - field.level;
    let mut out = GridField::new(target, hier.n(target));
    for (name, values) in field.components() {
        out.insert(name, refine_values(values, field.n, doublings, cfg)?)?;
    }
    Ok(out)
}
