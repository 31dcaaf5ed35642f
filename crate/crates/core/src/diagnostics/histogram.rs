//! Histograms of field values inside rectangular windows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Minimum number of grid nodes a window must contain.
pub const MIN_WINDOW_NODES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub name: String,
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Window {
    pub fn new(name: &str, x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        if !(0.0 <= x0 && x0 <= x1 && x1 <= 1.0 && 0.0 <= y0 && y0 <= y1 && y1 <= 1.0) {
            return Err(Error::Config(format!(
                "window {name} = [{x0}, {x1}] x [{y0}, {y1}] is not inside the unit square"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            x0,
            x1,
            y0,
            y1,
        })
    }

    /// Flat indices of the nodes `(j/n, k/n)` lying in the closed rectangle.
    pub fn nodes(&self, n: usize) -> Vec<usize> {
        let tol = 1e-12;
        let range = |lo: f64, hi: f64| -> Vec<usize> {
            (0..n)
                .filter(|&j| {
                    let x = j as f64 / n as f64;
                    x >= lo - tol && x <= hi + tol
                })
                .collect()
        };
        let xs = range(self.x0, self.x1);
        let ys = range(self.y0, self.y1);
        ys.iter()
            .flat_map(|k| xs.iter().map(move |j| k * n + j))
            .collect()
    }

    pub fn gather(&self, values: &[f64], n: usize) -> Result<Vec<f64>> {
        if values.len() != n * n {
            return Err(Error::Shape(format!("expected {} values", n * n)));
        }
        let idx = self.nodes(n);
        if idx.len() < MIN_WINDOW_NODES {
            return Err(Error::EmptyWindow(format!(
                "{} holds {} nodes on an {n}x{n} grid",
                self.name,
                idx.len()
            )));
        }
        Ok(idx.into_iter().map(|i| values[i]).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowHistogram {
    pub window: String,
    pub samples: Vec<f64>,
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub density: Vec<f64>,
}

/// Linear-interpolation percentile of sorted data, `q` in `[0, 1]`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn sturges_bins(n: usize) -> usize {
    (n as f64).log2().ceil() as usize + 1
}

/// Freedman-Diaconis bin count, or `None` when the interquartile range vanishes.
pub fn freedman_diaconis_bins(samples: &[f64]) -> Option<usize> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = percentile(&sorted, 0.75) - percentile(&sorted, 0.25);
    let range = sorted[sorted.len() - 1] - sorted[0];
    if !(iqr > 0.0) {
        return None;
    }
    let width = 2.0 * iqr * (sorted.len() as f64).powf(-1.0 / 3.0);
    Some((range / width).ceil().max(1.0) as usize)
}

/// Larger of the Sturges and Freedman-Diaconis counts.
pub fn auto_bins(samples: &[f64]) -> usize {
    let s = sturges_bins(samples.len());
    freedman_diaconis_bins(samples).map_or(s, |fd| fd.max(s))
}

/// Histogram of raw samples with uniform bins spanning `[min, max]`. Constant
/// data yields one unit-width bin centred on the value.
pub fn histogram(window: &str, samples: Vec<f64>) -> Result<WindowHistogram> {
    if samples.is_empty() {
        return Err(Error::EmptyWindow(window.to_string()));
    }
    let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = samples.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let total = samples.len();
    if !(hi > lo) {
        return Ok(WindowHistogram {
            window: window.to_string(),
            edges: vec![lo - 0.5, lo + 0.5],
            counts: vec![total],
            density: vec![1.0],
            samples,
        });
    }
    let bins = auto_bins(&samples);
    let width = (hi - lo) / bins as f64;
    let edges: Vec<f64> = (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * i as f64 })
        .collect();
    let mut counts = vec![0usize; bins];
    for v in &samples {
        let b = (((v - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let density = counts
        .iter()
        .zip(edges.windows(2))
        .map(|(c, e)| *c as f64 / (total as f64 * (e[1] - e[0])))
        .collect();
    Ok(WindowHistogram {
        window: window.to_string(),
        samples,
        edges,
        counts,
        density,
    })
}

/// Histogram of the nodes of an `n x n` field inside `window`.
pub fn window_histogram(values: &[f64], n: usize, window: &Window) -> Result<WindowHistogram> {
    histogram(&window.name, window.gather(values, n)?)
}

/// Mean and population standard deviation of the raw window samples.
pub fn histogram_stats(h: &WindowHistogram) -> Result<(f64, f64)> {
    sample_stats(&h.samples).ok_or_else(|| Error::EmptyWindow(h.window.clone()))
}

pub fn sample_stats(samples: &[f64]) -> Option<(f64, f64)> {
    if samples.is_empty() {
        return None;
    }
    let n = samples.len() as f64;
    let mean = pairwise_sum(samples) / n;
    let sq: Vec<f64> = samples.iter().map(|v| (v - mean) * (v - mean)).collect();
    Some((mean, (pairwise_sum(&sq) / n).sqrt()))
}
