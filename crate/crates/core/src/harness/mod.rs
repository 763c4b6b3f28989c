//! Experiment orchestration: configuration, scenario construction,
//! Monte-Carlo sweeps, aggregation and the position-grid link study.

mod aggregate;
mod config;
mod experiment;
mod grid;

pub use aggregate::{aggregate, empirical_cdf, median, Aggregates, CdfRow, MaeRow, SeRow};
pub use config::{
    default_layout, AlignmentSettings, CommSettings, DeviceConfig, ExperimentConfig, GridSettings, RadioConfig, RoomConfig,
    SweepConfig,
};
pub use experiment::{
    axis_facing, beam_center_angle, beam_energy_map, build_poses, build_room, dbm_to_watts, genie_sum_se,
    link_pair, pairing_beams, single_link_estimate, pilot_weights, radio_params, run_experiment, run_on_scenario, run_trial,
    sweep_points, trial_seed, AngleRecord, ResultSet, Scenario, SweepPoint, TrialResult,
};
pub use grid::{energy_map, evaluate_grid, receiver_grid, GridPoint};
