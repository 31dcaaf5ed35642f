//! Proper orthogonal decomposition of centered snapshot ensembles.

use faer::{Mat, Side};

use crate::error::{Error, Result};

/// Columns are mean-free snapshots; rows are flattened grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    pub data: Mat<f64>,
    pub tag: String,
}

impl SnapshotMatrix {
    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn cols(&self) -> usize {
        self.data.ncols()
    }
}

/// Subtracts the ensemble mean from every snapshot.
pub fn center_snapshots(snapshots: &[Vec<f64>], tag: &str) -> Result<SnapshotMatrix> {
    if snapshots.len() < 2 {
        return Err(Error::Shape(format!(
            "need at least two snapshots, got {}",
            snapshots.len()
        )));
    }
    let rows = snapshots[0].len();
    if rows == 0 || snapshots.iter().any(|s| s.len() != rows) {
        return Err(Error::Shape("snapshots differ in length".into()));
    }
    let cols = snapshots.len();
    // Mean taken as an offset from the first snapshot.
    let mean: Vec<f64> = (0..rows)
        .map(|i| {
            let base = snapshots[0][i];
            base + snapshots.iter().map(|s| s[i] - base).sum::<f64>() / cols as f64
        })
        .collect();
    let data = Mat::from_fn(rows, cols, |i, j| snapshots[j][i] - mean[i]);
    Ok(SnapshotMatrix {
        data,
        tag: tag.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvdRoute {
    /// Eigen-decomposition of the `L x L` Gram matrix.
    Gram,
    /// Bidiagonalization of the snapshot matrix itself.
    Direct,
}

#[derive(Debug, Clone)]
pub struct PodResult {
    /// Nonincreasing and nonnegative.
    pub singular_values: Vec<f64>,
    /// Orthonormal spatial modes for the nonzero singular values.
    pub modes: Mat<f64>,
    pub route: SvdRoute,
}

impl PodResult {
    pub fn energies(&self) -> Vec<f64> {
        self.singular_values.iter().map(|s| s * s).collect()
    }

    pub fn rank(&self) -> usize {
        self.singular_values.iter().filter(|s| **s > 0.0).count()
    }
}

/// The Gram route is used when the snapshots are much longer than the ensemble.
pub fn preferred_route(s: &SnapshotMatrix) -> SvdRoute {
    if s.rows() > 8 * s.cols() {
        SvdRoute::Gram
    } else {
        SvdRoute::Direct
    }
}

pub fn pod_svd(s: &SnapshotMatrix) -> Result<PodResult> {
    pod_svd_with(s, preferred_route(s))
}

/// Thin SVD by the requested route. Values at roundoff level relative to the
/// largest one (`s_j <= 1e-12 s_1` directly, or Gram eigenvalues below
/// `L eps lambda_1`) are reported as exact zeros.
pub fn pod_svd_with(s: &SnapshotMatrix, route: SvdRoute) -> Result<PodResult> {
    let (values, modes) = match route {
        SvdRoute::Direct => {
            let svd = s
                .data
                .thin_svd()
                .map_err(|e| Error::ConvergenceFailure(format!("SVD: {e:?}")))?;
            let sv = svd.S().column_vector();
            let top = sv.iter().copied().fold(0.0, f64::max);
            let values: Vec<f64> = sv
                .iter()
                .map(|&v| if v <= 1e-12 * top { 0.0 } else { v })
                .collect();
            (values, svd.U().to_owned())
        }
        SvdRoute::Gram => {
            let gram = s.data.transpose() * &s.data;
            let eig = gram
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::ConvergenceFailure(format!("Gram eigensolver: {e:?}")))?;
            let lambda = eig.S().column_vector();
            let l = lambda.nrows();
            let top = lambda[l - 1].max(0.0);
            let floor = s.cols() as f64 * f64::EPSILON * top;
            let values: Vec<f64> = (0..l)
                .rev()
                .map(|i| {
                    if lambda[i] <= floor {
                        0.0
                    } else {
                        lambda[i].sqrt()
                    }
                })
                .collect();
            let v = eig.U();
            let mut modes = Mat::zeros(s.rows(), l);
            for (c, &sv) in values.iter().enumerate() {
                if sv > 0.0 {
                    let w = &s.data * v.col(l - 1 - c);
                    for r in 0..s.rows() {
                        modes[(r, c)] = w[r] / sv;
                    }
                }
            }
            (values, modes)
        }
    };
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|a, b| values[*b].total_cmp(&values[*a]));
    let values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let rank = values.iter().filter(|v| **v > 0.0).count();
    let modes = Mat::from_fn(modes.nrows(), rank, |r, c| modes[(r, order[c])]);
    Ok(PodResult {
        singular_values: values,
        modes,
        route,
    })
}

/// Cumulative energy fraction of the leading `k` modes; zero energy gives 0.
pub fn cef(result: &PodResult, k: usize) -> Result<f64> {
    let e = result.energies();
    if k > e.len() {
        return Err(Error::Index {
            index: k,
            max: e.len(),
        });
    }
    let total: f64 = e.iter().sum();
    if total <= 0.0 {
        return Ok(0.0);
    }
    if k == e.len() {
        return Ok(1.0);
    }
    Ok(e[..k].iter().sum::<f64>() / total)
}

/// Smallest `k` with `cef(k) >= threshold`; 0 for zero-energy data.
pub fn k_at(result: &PodResult, threshold: f64) -> usize {
    let e = result.energies();
    let total: f64 = e.iter().sum();
    if total <= 0.0 {
        return 0;
    }
    let mut partial = 0.0;
    for (k, v) in e.iter().enumerate() {
        partial += v;
        if partial / total >= threshold {
            return k + 1;
        }
    }
    e.len()
}

/// Best rank-`k` approximation of the snapshot matrix from the modes.
pub fn reconstruct(s: &SnapshotMatrix, result: &PodResult, k: usize) -> Mat<f64> {
    let k = k.min(result.modes.ncols());
    let w = result.modes.subcols(0, k);
    w * (w.transpose() * &s.data)
}
