use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use crate::channel::{
    beamspace, discretize_channel, to_frequency_domain, trace_paths, DevicePose, DiscreteChannel, PulseSpec,
    RoomSpec, Vec3,
};
use crate::codebook::{wrap_index, Codebook};
use crate::comm::{compute_link_metrics, design_flat_top, steer_beam, LinkMetrics, LinkSet, RadioParams, Taper};
use crate::error::{Error, Result};
use crate::netsched::{plan_rounds, run_alignment, AlignmentConfig, AlignmentTable, Method, NetworkChannels};
use crate::pilots::{design_pilot, flat_spectrum_sequence, PilotSpec, WeightVector};
use crate::sensing::{
    block_ista_solve, build_sampling_matrix, default_gamma, draw_beam_weights, simulate_measurement, BeamWeights,
    BeamspaceEstimate, IstaOptions,
};
use crate::seed::{derive_seed, derived_rng};
use crate::{C64, SPEED_OF_LIGHT};

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Central angle in degrees of DFT beam `i`: `asin(2·wrap(i)/N)`.
///
/// For even `N` the index `N/2` sits at endfire and returns `+90°`; the
/// mirror direction `−90°` is equally valid.
pub fn beam_center_angle(i: usize, n: usize) -> f64 {
    let u = 2.0 * wrap_index(i, n) as f64 / n as f64;
    u.clamp(-1.0, 1.0).asin().to_degrees()
}

fn is_endfire(i: usize, n: usize) -> bool {
    n.is_multiple_of(2) && i % n == n / 2
}

/// Angle a device attributes to a beam: transmit beams point toward
/// `+θ_i`, receive combiners toward `−θ_i`. Endfire beams take whichever
/// sign is closer to `truth`.
fn beam_angle(i: usize, n: usize, receive: bool, truth: f64) -> f64 {
    if is_endfire(i, n) {
        return if truth >= 0.0 { 90.0 } else { -90.0 };
    }
    let a = beam_center_angle(i, n);
    if receive {
        -a
    } else {
        a
    }
}

/// Mean error of a uniformly random beam choice against `truth`.
fn random_guess_error(n: usize, receive: bool, truth: f64) -> f64 {
    (0..n).map(|i| (truth - beam_angle(i, n, receive, truth)).abs()).sum::<f64>() / n as f64
}

fn normalize(v: Vec3) -> Vec3 {
    let l = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / l, v[1] / l, v[2] / l]
}

/// Horizontal array axis whose broadside faces `target`.
pub fn axis_facing(position: Vec3, target: Vec3) -> Vec3 {
    let d = [target[0] - position[0], target[1] - position[1]];
    if d[0].hypot(d[1]) < 1e-9 {
        [1.0, 0.0, 0.0]
    } else {
        normalize([-d[1], d[0], 0.0])
    }
}

/// Geometry, channels and codebooks shared by every trial of an experiment.
pub struct Scenario {
    pub config: ExperimentConfig,
    pub room: RoomSpec,
    pub poses: Vec<DevicePose>,
    pub pulse: PulseSpec,
    pub links: LinkSet,
    pub network: NetworkChannels,
    pub codebook: Codebook,
    pub taper: Taper,
    /// Exhaustive-search beam pair per ordered link.
    pub genie: BTreeMap<(usize, usize), (usize, usize)>,
    pub channel_length: usize,
}

pub fn build_room(cfg: &ExperimentConfig) -> Result<RoomSpec> {
    let r = &cfg.room;
    let gamma = C64::from_polar(r.reflection_magnitude, r.reflection_phase_deg.to_radians());
    let mut room = RoomSpec::new(r.width, r.depth, r.height, gamma, r.max_reflection_order)?;
    for o in &r.occluders {
        room = room.with_occluder(*o);
    }
    Ok(room)
}

pub fn build_poses(cfg: &ExperimentConfig) -> Result<Vec<DevicePose>> {
    let centre = [cfg.room.width / 2.0, cfg.room.depth / 2.0, cfg.room.height / 2.0];
    cfg.devices
        .iter()
        .map(|d| {
            let axis = d.axis.unwrap_or_else(|| axis_facing(d.position, centre));
            DevicePose::new(d.position, axis, cfg.radio.num_antennas)
        })
        .collect()
}

/// Link `a → b` with its reverse obtained by transposing every tap.
pub fn link_pair(
    room: &RoomSpec,
    a: &DevicePose,
    b: &DevicePose,
    f0: f64,
    pulse: &PulseSpec,
) -> Result<(DiscreteChannel, DiscreteChannel)> {
    let ab = discretize_channel(&trace_paths(room, a, b, f0)?, pulse)?;
    let ba = DiscreteChannel {
        taps: ab.taps.iter().map(|t| t.t().to_owned()).collect(),
        ..ab.clone()
    };
    Ok((ab, ba))
}

fn genie_pair(bs: &crate::channel::BeamspaceChannel) -> (usize, usize) {
    let bins: Vec<usize> = (0..bs.matrix.ncols()).collect();
    let e = bs.row_energies(&bins);
    let mut best = 0;
    for (r, &v) in e.iter().enumerate() {
        if v > e[best] {
            best = r;
        }
    }
    crate::channel::BeamspaceChannel::beam_pair(best, bs.num_antennas)
}

impl Scenario {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let room = build_room(cfg)?;
        let poses = build_poses(cfg)?;
        let r = &cfg.radio;
        let pulse = PulseSpec::new(r.rolloff, r.pulse_span, 1.0 / r.bandwidth_hz)?;
        let k = poses.len();
        let n = r.num_antennas;
        let pairs: Vec<(usize, usize)> = (0..k).flat_map(|a| (a + 1..k).map(move |b| (a, b))).collect();
        let built: Vec<Result<(DiscreteChannel, DiscreteChannel)>> = pairs
            .par_iter()
            .map(|&(a, b)| link_pair(&room, &poses[a], &poses[b], r.carrier_hz, &pulse))
            .collect();
        let mut links = LinkSet::new();
        for (&(a, b), res) in pairs.iter().zip(built) {
            let (ab, ba) = res?;
            links.insert((a, b), ab);
            links.insert((b, a), ba);
        }
        let channel_length = links.values().map(|c| c.len()).max().unwrap_or(1);
        if channel_length > r.num_bins {
            return Err(Error::Config(format!(
                "channel length {channel_length} exceeds num_bins {}; enlarge num_bins or shrink the room",
                r.num_bins
            )));
        }
        let codebook = Codebook::dft(n);
        let mut network = NetworkChannels::new(k, n, r.num_bins);
        let mut genie = BTreeMap::new();
        for (&(a, b), ch) in &links {
            let bs = beamspace(&to_frequency_domain(ch, r.num_bins)?, &codebook)?;
            genie.insert((a, b), genie_pair(&bs));
            network.insert(a, b, bs)?;
        }
        let taper = design_flat_top(n, cfg.comm.beamwidth_deg, cfg.comm.ripple_db)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { config: cfg.clone(), room, poses, pulse, links, network, codebook, taper, genie, channel_length })
    }

    pub fn num_devices(&self) -> usize {
        self.poses.len()
    }

    /// True LOS angles (degrees from broadside) of link `a → b`: departure
    /// at `a` and arrival at `b`.
    pub fn los_angles(&self, a: usize, b: usize) -> (f64, f64) {
        let (pa, pb) = (&self.poses[a], &self.poses[b]);
        (
            pa.direction_cosine(pb.position).asin().to_degrees(),
            pb.direction_cosine(pa.position).asin().to_degrees(),
        )
    }

    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.config.radio.carrier_hz
    }
}

/// One point of the sweep grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SweepPoint {
    pub method: Method,
    pub tx_power_dbm: f64,
    pub active_bins: usize,
    pub measurements: usize,
}

impl SweepPoint {
    pub fn base(cfg: &ExperimentConfig) -> Self {
        Self {
            method: cfg.method,
            tx_power_dbm: cfg.radio.tx_power_dbm,
            active_bins: cfg.alignment.active_bins,
            measurements: cfg.alignment.measurements,
        }
    }

    pub fn rounds(&self, k: usize) -> usize {
        self.method.rounds_for(k)
    }
}

/// One-sided angle record: the error at one end of one link.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AngleRecord {
    pub method: Method,
    pub tx_power_dbm: f64,
    pub active_bins: usize,
    pub measurements: usize,
    pub total_pilots: usize,
    pub trial: usize,
    pub seed: u64,
    pub a: usize,
    pub b: usize,
    pub end: usize,
    pub true_angle_deg: f64,
    pub est_angle_deg: f64,
    pub abs_err_deg: f64,
    pub tx_beam: Option<usize>,
    pub rx_beam: Option<usize>,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct TrialResult {
    pub point: SweepPoint,
    pub trial: usize,
    pub seed: u64,
    pub rounds_used: usize,
    pub table: AlignmentTable,
    pub records: Vec<AngleRecord>,
    pub link_metrics: Vec<LinkMetrics>,
    pub sum_se: f64,
    pub genie_sum_se: f64,
}

/// Per-trial seed; shared by all sweep points so they see common random numbers.
pub fn trial_seed(master: u64, trial: usize) -> u64 {
    derive_seed(master, &[trial as u64])
}

/// Flat-spectrum weights for `M_s` active bins, deterministic in the master seed.
pub fn pilot_weights(cfg: &ExperimentConfig, ms: usize) -> Result<WeightVector> {
    let a = &cfg.alignment;
    flat_spectrum_sequence(ms, a.flatness_tol_db, a.flatness_max_iter, &mut derived_rng(cfg.seed, &[0xF1A7, ms as u64]))
}

pub fn radio_params(cfg: &ExperimentConfig, tx_power_dbm: f64) -> RadioParams {
    RadioParams {
        p_tx: dbm_to_watts(tx_power_dbm),
        n0: dbm_to_watts(cfg.radio.noise_psd_dbm_hz),
        bandwidth: cfg.radio.bandwidth_hz,
    }
}

/// Flat-top beams for the pairing given a beam-pair lookup; missing pairs
/// fall back to beam 0.
pub fn pairing_beams(
    sc: &Scenario,
    pairing: &[(usize, usize)],
    lookup: impl Fn(usize, usize) -> Option<(usize, usize)>,
) -> Result<Vec<(Array1<C64>, Array1<C64>)>> {
    pairing
        .iter()
        .map(|&(t, r)| {
            let (bt, br) = lookup(t, r).unwrap_or((0, 0));
            Ok((steer_beam(&sc.taper, &sc.codebook, bt)?, steer_beam(&sc.taper, &sc.codebook, br)?))
        })
        .collect()
}

/// Sum SE of the pairing when every link uses its exhaustive-search beams.
pub fn genie_sum_se(sc: &Scenario, tx_power_dbm: f64) -> Result<f64> {
    let pairing = sc.config.pairing();
    let beams = pairing_beams(sc, &pairing, |t, r| sc.genie.get(&(t, r)).copied())?;
    Ok(compute_link_metrics(&sc.links, &pairing, &beams, &radio_params(&sc.config, tx_power_dbm))?.1)
}

/// Full network alignment for one sweep point and trial, plus angle
/// records and the resulting sum SE.
pub fn run_trial(sc: &Scenario, point: &SweepPoint, weights: &WeightVector, trial: usize) -> Result<TrialResult> {
    let cfg = &sc.config;
    let k = sc.num_devices();
    let n = cfg.radio.num_antennas;
    let m = cfg.radio.num_bins;
    let radio = radio_params(cfg, point.tx_power_dbm);
    let seed = trial_seed(cfg.seed, trial);
    let acfg = AlignmentConfig {
        num_measurements: point.measurements,
        active_bins: point.active_bins,
        pilot_energy: radio.p_tx * m as f64,
        noise_power: radio.noise_power(),
        gamma_scale: cfg.alignment.gamma_scale,
        max_iter: cfg.alignment.max_iter,
        tol: cfg.alignment.tol,
        weights: weights.clone(),
    };
    let plan = plan_rounds(k)?;
    let out = run_alignment(&sc.network, &plan, point.method, &acfg, seed)?;
    let total_pilots = point.measurements * out.rounds_used;

    let mut records = Vec::new();
    for a in 0..k {
        for b in a + 1..k {
            let entry = out.table.get(a, b).copied();
            let (dep, arr) = sc.los_angles(a, b);
            let beams = entry.and_then(|e| e.beams);
            for (end, truth, receive) in [(a, dep, false), (b, arr, true)] {
                let (est, err) = match beams {
                    Some((bt, br)) => {
                        let i = if receive { br } else { bt };
                        let est = beam_angle(i, n, receive, truth);
                        (est, (truth - est).abs())
                    }
                    None => (f64::NAN, random_guess_error(n, receive, truth)),
                };
                records.push(AngleRecord {
                    method: point.method,
                    tx_power_dbm: point.tx_power_dbm,
                    active_bins: point.active_bins,
                    measurements: point.measurements,
                    total_pilots,
                    trial,
                    seed,
                    a,
                    b,
                    end,
                    true_angle_deg: truth,
                    est_angle_deg: est,
                    abs_err_deg: err,
                    tx_beam: beams.map(|p| p.0),
                    rx_beam: beams.map(|p| p.1),
                    ok: beams.is_some(),
                });
            }
        }
    }

    let pairing = cfg.pairing();
    let beams = pairing_beams(sc, &pairing, |t, r| out.table.get(t, r).and_then(|e| e.beams))?;
    let (link_metrics, sum_se) = compute_link_metrics(&sc.links, &pairing, &beams, &radio)?;
    Ok(TrialResult {
        point: *point,
        trial,
        seed,
        rounds_used: out.rounds_used,
        table: out.table,
        records,
        link_metrics,
        sum_se,
        genie_sum_se: genie_sum_se(sc, point.tx_power_dbm)?,
    })
}

/// Single-link MMV estimate of `tx → rx` on frequency set 0, with the
/// same seed derivation as round 0 of a trial.
pub fn single_link_estimate(
    sc: &Scenario,
    tx: usize,
    rx: usize,
    point: &SweepPoint,
    weights: &WeightVector,
    trial: usize,
) -> Result<BeamspaceEstimate> {
    let cfg = &sc.config;
    let n = cfg.radio.num_antennas;
    let m = cfg.radio.num_bins;
    let radio = radio_params(cfg, point.tx_power_dbm);
    let seed = trial_seed(cfg.seed, trial);
    let spec = PilotSpec::new(m, point.active_bins, 0, radio.p_tx * m as f64)?;
    let pilot = design_pilot(&spec, weights)?;
    let w_tx = draw_beam_weights(point.measurements, n, &mut derived_rng(seed, &[0, tx as u64, 0]))?;
    let w_rx = draw_beam_weights(point.measurements, n, &mut derived_rng(seed, &[0, rx as u64, 0]))?;
    let a = build_sampling_matrix(&BeamWeights { v: w_tx.v, u: w_rx.u });
    let block = simulate_measurement(
        sc.network.get(tx, rx)?,
        &a,
        &pilot,
        radio.n0,
        radio.bandwidth,
        &mut derived_rng(seed, &[0, rx as u64, 2]),
    )?;
    let gamma = default_gamma(cfg.alignment.gamma_scale, block.noise_power, point.measurements, n, m, block.bins.len());
    block_ista_solve(&block, &a, &IstaOptions { gamma, max_iter: cfg.alignment.max_iter, tol: cfg.alignment.tol })
}

/// Every sweep point in a fixed order: method, power, `M_s`, `Q`.
pub fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    let mut pts = Vec::new();
    for method in cfg.methods_axis() {
        for tx_power_dbm in cfg.tx_power_axis() {
            for active_bins in cfg.active_bins_axis() {
                for measurements in cfg.measurements_axis() {
                    pts.push(SweepPoint { method, tx_power_dbm, active_bins, measurements });
                }
            }
        }
    }
    pts
}

#[derive(Clone, Debug)]
pub struct ResultSet {
    pub trials: Vec<TrialResult>,
}

impl ResultSet {
    pub fn records(&self) -> impl Iterator<Item = &AngleRecord> {
        self.trials.iter().flat_map(|t| t.records.iter())
    }
}

/// Runs every sweep point for `cfg.trials` trials. Trials execute in
/// parallel and are collected in a fixed order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultSet> {
    let sc = Scenario::build(cfg)?;
    run_on_scenario(&sc, &sweep_points(cfg))
}

pub fn run_on_scenario(sc: &Scenario, points: &[SweepPoint]) -> Result<ResultSet> {
    let cfg = &sc.config;
    let mut weights = BTreeMap::new();
    for p in points {
        if let std::collections::btree_map::Entry::Vacant(e) = weights.entry(p.active_bins) {
            e.insert(pilot_weights(cfg, p.active_bins)?);
        }
    }
    let jobs: Vec<(SweepPoint, usize)> =
        points.iter().flat_map(|p| (0..cfg.trials).map(move |t| (*p, t))).collect();
    let trials = jobs
        .par_iter()
        .map(|(p, t)| run_trial(sc, p, &weights[&p.active_bins], *t))
        .collect::<Result<Vec<_>>>()?;
    Ok(ResultSet { trials })
}

/// Received-power matrix of a link over the scenario's flat-top codebook.
pub fn beam_energy_map(sc: &Scenario, ch: &DiscreteChannel) -> Result<Array2<f64>> {
    super::grid::energy_map(&sc.taper, &sc.codebook, ch)
}
