//! Weighted Bergman volumes: closed forms, seeded Monte Carlo and scaling fits.

pub mod fit;
pub mod rng;
pub mod sampler;
pub mod volume;

pub use fit::{fit_scaling_exponent, ExponentFit};
pub use rng::{parse_seed, DEFAULT_SEED};
pub use sampler::{DiscFactor, Proposal, Sample};
pub use volume::{
    box_volume_exact, carleson_box_volume, sublevel_indicator, sublevel_volume_exact, weighted_volume_mc,
    weighted_volume_with, CarlesonBox, VolumeEstimate, WeightParams,
};
