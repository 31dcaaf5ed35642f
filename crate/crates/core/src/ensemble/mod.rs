//! Collocation ensembles of Kelvin-Helmholtz runs.

mod campaign;
mod coeffs;
mod collocation;
mod kh;
mod prng;

pub use campaign::{
    run_campaign, CachePolicy, Campaign, CampaignConfig, CampaignOptions, Manifest, RunRecord,
    RunStatus, MANIFEST_FILE,
};
pub use coeffs::{generate_coeffs, PerturbationCoeffs, MODES};
pub use collocation::CollocationGrid;
pub use kh::{interface_offset, kh_initial_field, KhConfig};
pub use prng::SplitMix64;
