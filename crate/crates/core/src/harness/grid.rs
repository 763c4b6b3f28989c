use ndarray::{Array1, Array2};
use rayon::prelude::*;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::experiment::{axis_facing, build_room, link_pair, radio_params};
use crate::channel::{to_frequency_domain, DevicePose, DiscreteChannel, PulseSpec, Vec3};
use crate::codebook::Codebook;
use crate::comm::{
    beamformed_taps, compute_link_metrics, design_flat_top, element_reference, frequency_flatness, steer_beam,
    LinkSet, Taper,
};
use crate::error::{domain, Error, Result};
use crate::C64;

/// Entry `(i, j)` is `Σ_n |u_jᴴ H̄[n] v_i|²` with flat-top beams `v_i`, `u_j`.
pub fn energy_map(taper: &Taper, codebook: &Codebook, ch: &DiscreteChannel) -> Result<Array2<f64>> {
    let n = codebook.size();
    let beams: Vec<Array1<C64>> = (0..n).map(|i| steer_beam(taper, codebook, i)).collect::<Result<_>>()?;
    let mut out = Array2::zeros((n, n));
    for (i, v) in beams.iter().enumerate() {
        let hv: Vec<Array1<C64>> = ch.taps.iter().map(|h| h.dot(v)).collect();
        for (j, u) in beams.iter().enumerate() {
            out[[i, j]] = hv
                .iter()
                .map(|x| u.iter().zip(x.iter()).map(|(a, b)| a.conj() * b).sum::<C64>().norm_sqr())
                .sum();
        }
    }
    Ok(out)
}

/// Outcome at one receiver position of the grid study.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub tx_beam: usize,
    pub rx_beam: usize,
    pub se: f64,
    pub mfb_se: f64,
    pub isi_db: f64,
    pub pre_std_db: f64,
    pub post_std_db: f64,
}

impl GridPoint {
    pub fn se_ratio(&self) -> f64 {
        self.se / self.mfb_se
    }
}

/// `count × count` receiver positions spaced evenly `margin` metres inside
/// the walls, at the transmitter's height.
pub fn receiver_grid(cfg: &ExperimentConfig, tx: Vec3, count: usize, margin: f64) -> Result<Vec<Vec3>> {
    let (w, d) = (cfg.room.width, cfg.room.depth);
    if count == 0 || !(margin > 0.0) || 2.0 * margin >= w.min(d) {
        return Err(domain("grid needs a positive count and a margin below half the room size"));
    }
    let step = |len: f64, k: usize| {
        if count == 1 {
            len / 2.0
        } else {
            margin + (len - 2.0 * margin) * k as f64 / (count - 1) as f64
        }
    };
    Ok((0..count)
        .flat_map(|iy| (0..count).map(move |ix| [step(w, ix), step(d, iy), tx[2]]))
        .collect())
}

/// Single-link study: for each receiver position the transmitter and
/// receiver use the flat-top pair with the most received energy. Reports
/// SE without equalization against the matched-filter bound together with
/// frequency flatness before (single element) and after beamforming.
pub fn evaluate_grid(cfg: &ExperimentConfig, tx: Vec3, receivers: &[Vec3]) -> Result<Vec<GridPoint>> {
    cfg.validate()?;
    let room = build_room(cfg)?;
    let r = &cfg.radio;
    let n = r.num_antennas;
    let pulse = PulseSpec::new(r.rolloff, r.pulse_span, 1.0 / r.bandwidth_hz)?;
    let taper = design_flat_top(n, cfg.comm.beamwidth_deg, cfg.comm.ripple_db)
        .map_err(|e| Error::Config(e.to_string()))?;
    let codebook = Codebook::dft(n);
    let radio = radio_params(cfg, r.tx_power_dbm);
    let centre = [cfg.room.width / 2.0, cfg.room.depth / 2.0, cfg.room.height / 2.0];
    let tx_pose = DevicePose::new(tx, axis_facing(tx, centre), n)?;
    let reference = element_reference(n);

    receivers
        .par_iter()
        .map(|&p| {
            let rx_pose = DevicePose::new(p, axis_facing(p, tx), n)?;
            let (ch, _) = link_pair(&room, &tx_pose, &rx_pose, r.carrier_hz, &pulse)?;
            let map = energy_map(&taper, &codebook, &ch)?;
            let (mut bt, mut br) = (0, 0);
            for ((i, j), &e) in map.indexed_iter() {
                if e > map[[bt, br]] {
                    (bt, br) = (i, j);
                }
            }
            let v = steer_beam(&taper, &codebook, bt)?;
            let u = steer_beam(&taper, &codebook, br)?;
            let mut links = LinkSet::new();
            links.insert((0, 1), ch.clone());
            let (m, _) = compute_link_metrics(&links, &[(0, 1)], &[(v.clone(), u.clone())], &radio)?;
            let taps = beamformed_taps(&ch, &v, &u)?;
            let total: f64 = taps.iter().map(|z| z.norm_sqr()).sum();
            let isi: f64 = taps[1..].iter().map(|z| z.norm_sqr()).sum();
            let fc = to_frequency_domain(&ch, r.num_bins.max(ch.len()))?;
            let pre = frequency_flatness(&fc, &reference, &reference)?;
            let post = frequency_flatness(&fc, &v, &u)?;
            Ok(GridPoint {
                x: p[0],
                y: p[1],
                z: p[2],
                tx_beam: bt,
                rx_beam: br,
                se: m[0].se,
                mfb_se: m[0].mfb_se,
                isi_db: 10.0 * (isi / total).max(1e-300).log10(),
                pre_std_db: pre.std_db,
                post_std_db: post.std_db,
            })
        })
        .collect()
}
