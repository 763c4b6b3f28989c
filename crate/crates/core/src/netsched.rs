//! Logarithmic-round transmitter/receiver partitions, frequency-set
//! assignment and the round orchestration that fills an [`AlignmentTable`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{
    default_l1_gamma, draw_probes, l1_solve, noncoherent_combine, one_sided_from_beamspace,
    one_sided_signal, rank1_estimate, rank1_pair, OneSidedBeamspace, OneSidedEstimate,
};
use crate::channel::BeamspaceChannel;
use crate::codebook::mirror_index;
use crate::error::{domain, Result};
use crate::pilots::{design_pilot, frequency_set, PilotSequence, PilotSpec, WeightVector};
use crate::seed::derived_rng;
use crate::sensing::{
    block_ista_solve, build_sampling_matrix, complex_noise, default_gamma, draw_beam_weights,
    extract_beam_pair, measurement_signal, BeamWeights, BeamspaceEstimate, IstaOptions,
    MeasurementBlock,
};
use crate::C64;

/// One alignment round: `transmitters` send concurrently, `receivers` listen.
///
/// `pairs` lists the `(tx, rx)` edges this round is responsible for, i.e.
/// the cut of every group being halved. Receivers also hear transmitters
/// of other groups, but those edges belong to an earlier round.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub transmitters: Vec<usize>,
    pub receivers: Vec<usize>,
    pub pairs: Vec<(usize, usize)>,
}

impl Partition {
    /// Scheduled transmitters of receiver `rx`.
    pub fn sources_of(&self, rx: usize) -> Vec<usize> {
        self.pairs.iter().filter(|p| p.1 == rx).map(|p| p.0).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RoundPlan {
    pub num_devices: usize,
    pub rounds: Vec<Partition>,
}

/// `⌈log₂ k⌉` for `k ≥ 1`.
pub fn ceil_log2(k: usize) -> usize {
    k.next_power_of_two().trailing_zeros() as usize
}

/// Pads to `K' = 2^⌈log₂K⌉` nodes and halves every group in each round;
/// the first half of each group transmits. Dummy nodes are dropped from
/// the output.
pub fn plan_rounds(k: usize) -> Result<RoundPlan> {
    if k < 2 {
        return Err(domain(format!("need at least two devices, got {k}")));
    }
    let padded = k.next_power_of_two();
    let mut groups: Vec<Vec<usize>> = vec![(0..padded).collect()];
    let mut rounds = Vec::new();
    while groups[0].len() > 1 {
        let mut tx = Vec::new();
        let mut rx = Vec::new();
        let mut pairs = Vec::new();
        let mut next = Vec::new();
        for g in &groups {
            let (a, b) = g.split_at(g.len() / 2);
            let a: Vec<usize> = a.iter().copied().filter(|&d| d < k).collect();
            let b: Vec<usize> = b.iter().copied().filter(|&d| d < k).collect();
            pairs.extend(a.iter().flat_map(|&t| b.iter().map(move |&r| (t, r))));
            tx.extend(&a);
            rx.extend(&b);
            next.push(g[..g.len() / 2].to_vec());
            next.push(g[g.len() / 2..].to_vec());
        }
        rounds.push(Partition { transmitters: tx, receivers: rx, pairs });
        groups = next;
    }
    Ok(RoundPlan { num_devices: k, rounds })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FrequencyAssignment {
    pub index: usize,
    pub bins: Vec<usize>,
}

/// Pilot indices `k = 0, 1, …` in ascending device-id order.
pub fn assign_frequency_sets(
    transmitters: &[usize],
    m: usize,
    ms: usize,
) -> Result<BTreeMap<usize, FrequencyAssignment>> {
    if ms == 0 || !m.is_multiple_of(ms) {
        return Err(domain(format!("active bins {ms} must divide sequence length {m}")));
    }
    let eta = m / ms;
    let mut ids = transmitters.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() > eta {
        return Err(domain(format!(
            "{} transmitters exceed the bound K <= M/M_s = {eta}",
            ids.len()
        )));
    }
    ids.into_iter()
        .enumerate()
        .map(|(k, d)| Ok((d, FrequencyAssignment { index: k, bins: frequency_set(k, m, ms)? })))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mmv,
    Baseline,
}

impl Method {
    pub fn rounds_for(self, k: usize) -> usize {
        match self {
            Method::Mmv => ceil_log2(k),
            Method::Baseline => 2 * ceil_log2(k),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Mmv => "mmv",
            Method::Baseline => "baseline",
        })
    }
}

impl FromStr for Method {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mmv" => Ok(Method::Mmv),
            "baseline" => Ok(Method::Baseline),
            other => Err(crate::Error::Config(format!("unknown method '{other}'"))),
        }
    }
}

/// Directed entry `a → b`: beam used at `a` to transmit and at `b` to receive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    pub beams: Option<(usize, usize)>,
    /// Strength of the winning estimate (row norm, or rank-1 peak).
    pub score: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentTable {
    k: usize,
    entries: Vec<Option<TableEntry>>,
}

impl AlignmentTable {
    pub fn new(k: usize) -> Self {
        Self { k, entries: vec![None; k * k] }
    }

    pub fn num_devices(&self) -> usize {
        self.k
    }

    pub fn get(&self, a: usize, b: usize) -> Option<&TableEntry> {
        self.entries[a * self.k + b].as_ref()
    }

    pub fn set(&mut self, a: usize, b: usize, e: TableEntry) {
        assert_ne!(a, b, "diagonal entries stay empty");
        self.entries[a * self.k + b] = Some(e);
    }

    /// Stores `a → b` and the reciprocal `b → a`, whose beams are the
    /// mirrored codebook indices.
    pub fn set_reciprocal(&mut self, a: usize, b: usize, e: TableEntry, n: usize) {
        let rev = TableEntry {
            beams: e.beams.map(|(t, r)| (mirror_index(r, n), mirror_index(t, n))),
            ..e
        };
        self.set(a, b, e);
        self.set(b, a, rev);
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &TableEntry)> {
        self.entries
            .iter()
            .enumerate()
            .filter_map(move |(i, e)| e.as_ref().map(|e| (i / self.k, i % self.k, e)))
    }

    pub fn is_complete(&self) -> bool {
        (0..self.k).all(|a| (0..self.k).all(|b| a == b || self.get(a, b).is_some()))
    }
}

/// Beamspace channels of every ordered device pair on a common codebook.
#[derive(Clone, Debug)]
pub struct NetworkChannels {
    k: usize,
    pub num_antennas: usize,
    pub num_bins: usize,
    links: Vec<Option<BeamspaceChannel>>,
}

impl NetworkChannels {
    pub fn new(k: usize, num_antennas: usize, num_bins: usize) -> Self {
        Self { k, num_antennas, num_bins, links: vec![None; k * k] }
    }

    pub fn num_devices(&self) -> usize {
        self.k
    }

    pub fn insert(&mut self, tx: usize, rx: usize, bs: BeamspaceChannel) -> Result<()> {
        if bs.num_antennas != self.num_antennas || bs.matrix.ncols() != self.num_bins {
            return Err(domain("beamspace channel does not match the network dimensions"));
        }
        self.links[tx * self.k + rx] = Some(bs);
        Ok(())
    }

    pub fn get(&self, tx: usize, rx: usize) -> Result<&BeamspaceChannel> {
        self.links
            .get(tx * self.k + rx)
            .and_then(|l| l.as_ref())
            .ok_or_else(|| domain(format!("no channel from device {tx} to {rx}")))
    }
}

/// Parameters shared by every round of a network alignment run.
#[derive(Clone, Debug)]
pub struct AlignmentConfig {
    pub num_measurements: usize,
    pub active_bins: usize,
    /// Pilot energy in per-sample units (`P_tx · M`).
    pub pilot_energy: f64,
    /// Per-sample noise variance `N₀B`.
    pub noise_power: f64,
    pub gamma_scale: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Unit-modulus flat-spectrum weights shared by every pilot.
    pub weights: WeightVector,
}

#[derive(Clone, Debug)]
pub struct AlignmentOutcome {
    pub table: AlignmentTable,
    pub rounds_used: usize,
}

fn pilots_for(
    transmitters: &[usize],
    m: usize,
    cfg: &AlignmentConfig,
) -> Result<BTreeMap<usize, PilotSequence>> {
    assign_frequency_sets(transmitters, m, cfg.active_bins)?
        .into_iter()
        .map(|(d, fa)| {
            let spec = PilotSpec::new(m, cfg.active_bins, fa.index, cfg.pilot_energy)?;
            Ok((d, design_pilot(&spec, &cfg.weights)?))
        })
        .collect()
}

/// One transmitter as heard by a receiver in a round.
pub struct Incoming<'a> {
    pub device: usize,
    pub pilot: &'a PilotSequence,
    pub weights: &'a BeamWeights,
}

/// Superposes all incoming pilots at receiver `rx`, adds `noise` (`Q × M`),
/// and solves one MMV problem per transmitter on its own frequency set.
pub fn mmv_receive(
    channels: &NetworkChannels,
    rx: usize,
    rx_weights: &BeamWeights,
    incoming: &[Incoming<'_>],
    noise: &Array2<C64>,
    noise_power: f64,
    cfg: &AlignmentConfig,
) -> Result<Vec<(usize, BeamspaceEstimate)>> {
    let n = channels.num_antennas;
    let m = channels.num_bins;
    let mut total = noise.clone();
    let mut mats = Vec::with_capacity(incoming.len());
    for inc in incoming {
        let a = build_sampling_matrix(&BeamWeights { v: inc.weights.v.clone(), u: rx_weights.u.clone() });
        total += &measurement_signal(channels.get(inc.device, rx)?, &a, inc.pilot)?;
        mats.push(a);
    }
    incoming
        .iter()
        .zip(&mats)
        .map(|(inc, a)| {
            let bins = inc.pilot.active_set.clone();
            let block = MeasurementBlock {
                y: total.select(ndarray::Axis(1), &bins),
                bins,
                sequence_length: m,
                noise_power,
            };
            let q = a.num_measurements();
            let gamma = default_gamma(cfg.gamma_scale, noise_power, q, n, m, block.bins.len());
            let opts = IstaOptions { gamma, max_iter: cfg.max_iter, tol: cfg.tol };
            Ok((inc.device, block_ista_solve(&block, a, &opts)?))
        })
        .collect()
}

/// Omnidirectional reception of superposed probes at one receiver,
/// followed by per-transmitter energy combining and ℓ1 recovery.
pub fn baseline_receive(
    one_sided: &BTreeMap<(usize, usize), OneSidedBeamspace>,
    rx: usize,
    incoming: &[(usize, &PilotSequence, &Array2<C64>)],
    noise: &Array2<C64>,
    noise_power: f64,
    cfg: &AlignmentConfig,
) -> Result<Vec<(usize, OneSidedEstimate)>> {
    let m = noise.ncols();
    let mut total = noise.clone();
    for (d, pilot, probes) in incoming {
        let os = one_sided
            .get(&(*d, rx))
            .ok_or_else(|| domain(format!("no channel from device {d} to {rx}")))?;
        total += &one_sided_signal(os, probes, pilot)?;
    }
    incoming
        .iter()
        .map(|(d, pilot, probes)| {
            let bins = pilot.active_set.clone();
            let block = MeasurementBlock {
                y: total.select(ndarray::Axis(1), &bins),
                bins,
                sequence_length: m,
                noise_power,
            };
            let e = noncoherent_combine(&block)?;
            let gamma = default_l1_gamma(cfg.gamma_scale, noise_power, block.bins.len(), probes);
            Ok((*d, l1_solve(&e, probes, gamma, cfg.max_iter.max(1000), cfg.tol)?))
        })
        .collect()
}

fn mmv_entry(est: &BeamspaceEstimate) -> TableEntry {
    let beams = extract_beam_pair(est);
    let score = est.row_norms.iter().copied().fold(0.0, f64::max);
    TableEntry { beams, score, ok: beams.is_some() }
}

/// Runs every round of `plan` and fills the table in both directions.
///
/// Beam weights, probes and receiver noise are drawn from seeds derived
/// from `(seed, round, device)`, so results do not depend on thread count.
/// Noise is generated over all `M` bins per receiver, so a receiver's noise
/// does not depend on which transmitters are active.
pub fn run_alignment(
    channels: &NetworkChannels,
    plan: &RoundPlan,
    method: Method,
    cfg: &AlignmentConfig,
    seed: u64,
) -> Result<AlignmentOutcome> {
    let k = channels.num_devices();
    if plan.num_devices != k {
        return Err(domain("plan and channels disagree on the number of devices"));
    }
    let n = channels.num_antennas;
    let m = channels.num_bins;
    let q = cfg.num_measurements;
    let mut table = AlignmentTable::new(k);
    let mut rounds_used = 0;

    match method {
        Method::Mmv => {
            for (ri, part) in plan.rounds.iter().enumerate() {
                rounds_used += 1;
                let r = ri as u64;
                let pilots = pilots_for(&part.transmitters, m, cfg)?;
                let weights: BTreeMap<usize, BeamWeights> = (0..k)
                    .map(|d| {
                        let w = draw_beam_weights(q, n, &mut derived_rng(seed, &[r, d as u64, 0]))?;
                        Ok((d, w))
                    })
                    .collect::<Result<_>>()?;
                let results: Vec<Result<Vec<(usize, BeamspaceEstimate)>>> = part
                    .receivers
                    .par_iter()
                    .map(|&rx| {
                        let noise = complex_noise(q, m, cfg.noise_power, &mut derived_rng(seed, &[r, rx as u64, 2]));
                        let incoming: Vec<Incoming> = part
                            .transmitters
                            .iter()
                            .map(|&t| Incoming { device: t, pilot: &pilots[&t], weights: &weights[&t] })
                            .collect();
                        mmv_receive(channels, rx, &weights[&rx], &incoming, &noise, cfg.noise_power, cfg)
                    })
                    .collect();
                for (&rx, res) in part.receivers.iter().zip(results) {
                    let scheduled = part.sources_of(rx);
                    for (tx, est) in res? {
                        if scheduled.contains(&tx) {
                            table.set_reciprocal(tx, rx, mmv_entry(&est), n);
                        }
                    }
                }
            }
        }
        Method::Baseline => {
            let mut one_sided = BTreeMap::new();
            for a in 0..k {
                for b in 0..k {
                    if a != b {
                        one_sided.insert((a, b), one_sided_from_beamspace(channels.get(a, b)?));
                    }
                }
            }
            for (ri, part) in plan.rounds.iter().enumerate() {
                let mut dir_est: BTreeMap<(usize, usize), OneSidedEstimate> = BTreeMap::new();
                for (sub, (txs, rxs)) in [
                    (&part.transmitters, &part.receivers),
                    (&part.receivers, &part.transmitters),
                ]
                .into_iter()
                .enumerate()
                {
                    rounds_used += 1;
                    let r = (2 * ri + sub) as u64;
                    let pilots = pilots_for(txs, m, cfg)?;
                    let probes: BTreeMap<usize, Array2<C64>> = txs
                        .iter()
                        .map(|&d| Ok((d, draw_probes(q, n, &mut derived_rng(seed, &[r, d as u64, 3]))?)))
                        .collect::<Result<_>>()?;
                    let results: Vec<Result<Vec<(usize, OneSidedEstimate)>>> = rxs
                        .par_iter()
                        .map(|&rx| {
                            let noise = complex_noise(q, m, cfg.noise_power, &mut derived_rng(seed, &[r, rx as u64, 2]));
                            let incoming: Vec<(usize, &PilotSequence, &Array2<C64>)> =
                                txs.iter().map(|&t| (t, &pilots[&t], &probes[&t])).collect();
                            baseline_receive(&one_sided, rx, &incoming, &noise, cfg.noise_power, cfg)
                        })
                        .collect();
                    for (&rx, res) in rxs.iter().zip(results) {
                        for (tx, est) in res? {
                            dir_est.insert((tx, rx), est);
                        }
                    }
                }
                for &(t, rx) in &part.pairs {
                    let fwd = &dir_est[&(t, rx)];
                    let rev = dir_est[&(rx, t)].mirrored();
                    let entry = match rank1_estimate(fwd, &rev) {
                        Ok(map) => {
                            let beams = rank1_pair(&map);
                            let score = map.iter().copied().fold(0.0, f64::max);
                            TableEntry { beams, score, ok: beams.is_some() }
                        }
                        Err(_) => TableEntry { beams: None, score: 0.0, ok: false },
                    };
                    table.set_reciprocal(t, rx, entry, n);
                }
            }
        }
    }
    Ok(AlignmentOutcome { table, rounds_used })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_devices_one_round() {
        let p = plan_rounds(2).unwrap();
        assert_eq!(
            p.rounds,
            vec![Partition { transmitters: vec![0], receivers: vec![1], pairs: vec![(0, 1)] }]
        );
        assert!(plan_rounds(1).is_err());
    }

    #[test]
    fn eight_devices_three_rounds() {
        assert_eq!(plan_rounds(8).unwrap().rounds.len(), 3);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(1), 0);
    }

    #[test]
    fn frequency_sets_are_assigned_by_id() {
        let a = assign_frequency_sets(&[7, 2], 8, 2).unwrap();
        assert_eq!(a[&2].bins, vec![0, 4]);
        assert_eq!(a[&7].bins, vec![1, 5]);
        assert!(assign_frequency_sets(&[0, 1, 2, 3, 4], 8, 2).is_err());
    }

    #[test]
    fn reciprocal_entries_mirror() {
        let mut t = AlignmentTable::new(2);
        t.set_reciprocal(0, 1, TableEntry { beams: Some((3, 1)), score: 1.0, ok: true }, 8);
        assert_eq!(t.get(1, 0).unwrap().beams, Some((7, 5)));
        assert!(t.is_complete());
        assert!(t.get(0, 0).is_none());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("mmv".parse::<Method>().unwrap(), Method::Mmv);
        assert!("foo".parse::<Method>().is_err());
        assert_eq!(Method::Baseline.rounds_for(4), 4);
    }
}
