//! Pull-back measures of symbol pairs and the boundedness diagnostics built
//! on them.

pub mod certificate;
pub mod lojasiewicz;
pub mod pullback;

pub use certificate::{
    align_at_one, carleson_sweep, default_centers, pick_singularity, theorem_certificate, Alignment, BoundednessReport, CertificateOptions, RatioRecord,
    RatioRow,
};
pub use lojasiewicz::{gap_envelope, lojasiewicz_fit, stabilized_lojasiewicz, LojasiewiczEstimate};
pub use pullback::{plan_pullback, pullback_volume, torus_preimages, PullbackPlan, MIN_PULLBACK_SAMPLES};
