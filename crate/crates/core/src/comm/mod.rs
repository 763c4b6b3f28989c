//! Post-alignment link evaluation: flat-top tapers, SINR and sum spectral
//! efficiency without equalization, matched-filter bound and frequency
//! flatness.

mod metrics;
pub mod remez;
mod taper;

pub use metrics::{
    beamformed_taps, compute_link_metrics, compute_mfb, element_reference, frequency_flatness,
    FlatnessReport, LinkMetrics, LinkSet, RadioParams,
};
pub use taper::{design_flat_top, DEFAULT_RIPPLE_DB, natural_beamwidth_deg, pattern, steer_beam, Taper};
