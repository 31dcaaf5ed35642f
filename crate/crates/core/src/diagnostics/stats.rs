//! Node-wise statistics over the collocation parameter.

use rayon::prelude::*;

use crate::cweno::{quadrature_moments, CwenoConfig, Density, PiecewisePoly};
use crate::ensemble::CollocationGrid;
use crate::error::{Error, Result};

/// Mean and standard deviation fields of `samples[l][node]` over `xi`, from
/// CWENO7 interpolation in `xi` and quadrature against the uniform density.
pub fn xi_statistics(
    samples: &[Vec<f64>],
    grid: &CollocationGrid,
    cfg: &CwenoConfig,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if samples.len() != grid.count {
        return Err(Error::Shape(format!(
            "{} samples for {} collocation nodes",
            samples.len(),
            grid.count
        )));
    }
    if samples.len() < 7 {
        return Err(Error::TooFewSamples(samples.len()));
    }
    let len = samples[0].len();
    if samples.iter().any(|s| s.len() != len) {
        return Err(Error::Shape("samples differ in length".into()));
    }
    let mu = Density::Uniform {
        a: grid.a,
        b: grid.b,
    };
    let moments: Vec<(f64, f64)> = (0..len)
        .into_par_iter()
        .map(|i| {
            let column: Vec<f64> = samples.iter().map(|s| s[i]).collect();
            let pp = PiecewisePoly::build_uniform(grid.a, grid.b, &column, cfg)?;
            quadrature_moments(&pp, mu)
        })
        .collect::<Result<_>>()?;
    Ok(moments.into_iter().unzip())
}
