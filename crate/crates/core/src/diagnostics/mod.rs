//! Cesaro averages, collocation statistics, defects and window histograms.

mod cesaro;
mod defects;
mod histogram;
mod stats;

pub use cesaro::{
    cesaro_average, cesaro_from_projected, project_levels, with_auxiliaries, CesaroField,
    CESARO_COMPONENTS, STATE_COMPONENTS,
};
pub use defects::{defect_fields, defect_residuals, DefectFields, Residual};
pub use histogram::{
    auto_bins, freedman_diaconis_bins, histogram, histogram_stats, sample_stats, sturges_bins,
    window_histogram, Window, WindowHistogram, MIN_WINDOW_NODES,
};
pub use stats::xi_statistics;
