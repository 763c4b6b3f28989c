//! Synthetic indoor multipath channels.
//!
//! Paths come from an image-source model of a shoebox room with exact
//! element-to-element distances (no far-field approximation). The path set
//! is then sampled through a raised-cosine pulse into matrix taps `H̄[n]`,
//! transformed per entry into frequency bins `H̃[m]`, and finally projected
//! onto a codebook to obtain the beamspace channel.

mod discrete;
mod freq;
mod geometry;
mod paths;
mod pulse;

pub use discrete::{channel_length, discretize_channel, DiscreteChannel, DEFAULT_TAP_THRESHOLD_DB};
pub use freq::{beamspace, to_frequency_domain, BeamspaceChannel, FrequencyChannel};
pub use geometry::{DevicePose, Occluder, RoomSpec, Vec3};
pub use paths::{trace_paths, Path, PathSet};
pub use pulse::{raised_cosine, root_raised_cosine, PulseSpec};
