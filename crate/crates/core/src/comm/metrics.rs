use std::collections::BTreeMap;

use ndarray::Array1;

use crate::channel::{DiscreteChannel, FrequencyChannel};
use crate::error::{domain, Result};
use crate::C64;

/// Discrete channels keyed by `(tx device, rx device)`.
pub type LinkSet = BTreeMap<(usize, usize), DiscreteChannel>;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RadioParams {
    /// Transmit power in watts.
    pub p_tx: f64,
    /// Noise spectral density in W/Hz.
    pub n0: f64,
    pub bandwidth: f64,
}

impl RadioParams {
    pub fn noise_power(&self) -> f64 {
        self.n0 * self.bandwidth
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkMetrics {
    pub signal_power: f64,
    pub isi_power: f64,
    pub mui_power: f64,
    pub sinr: f64,
    pub se: f64,
    pub mfb_se: f64,
}

/// `uᴴ H̄[n] v` for every tap.
pub fn beamformed_taps(ch: &DiscreteChannel, v: &Array1<C64>, u: &Array1<C64>) -> Result<Vec<C64>> {
    let (r, c) = ch.shape();
    if v.len() != c || u.len() != r {
        return Err(domain(format!(
            "beam lengths ({}, {}) do not fit a {r}x{c} channel",
            v.len(),
            u.len()
        )));
    }
    Ok(ch
        .taps
        .iter()
        .map(|h| u.iter().zip(h.dot(v).iter()).map(|(a, b)| a.conj() * b).sum())
        .collect())
}

fn energy(taps: &[C64]) -> f64 {
    taps.iter().map(|z| z.norm_sqr()).sum()
}

/// Per-pair SINR without equalization and the resulting sum spectral
/// efficiency.
///
/// Tap 0 carries the useful signal, later taps count as ISI, and every
/// other pair's transmitter leaks all of its taps through its own beam
/// into this pair's receive beam.
pub fn compute_link_metrics(
    channels: &LinkSet,
    pairing: &[(usize, usize)],
    beams: &[(Array1<C64>, Array1<C64>)],
    radio: &RadioParams,
) -> Result<(Vec<LinkMetrics>, f64)> {
    if pairing.len() != beams.len() {
        return Err(domain("one (v, u) beam pair per link is required"));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &(t, r) in pairing {
        if t == r || !seen.insert(t) || !seen.insert(r) {
            return Err(domain(format!("pairing is not disjoint at ({t}, {r})")));
        }
    }
    let get = |t: usize, r: usize| {
        channels
            .get(&(t, r))
            .ok_or_else(|| domain(format!("no channel from device {t} to {r}")))
    };
    let noise = radio.noise_power();
    let mut out = Vec::with_capacity(pairing.len());
    for (p, &(t, r)) in pairing.iter().enumerate() {
        let (v, u) = &beams[p];
        let taps = beamformed_taps(get(t, r)?, v, u)?;
        let signal = radio.p_tx * taps[0].norm_sqr();
        let isi = radio.p_tx * energy(&taps[1..]);
        let mut mui = 0.0;
        for (pp, &(t2, _)) in pairing.iter().enumerate() {
            if pp != p {
                mui += radio.p_tx * energy(&beamformed_taps(get(t2, r)?, &beams[pp].0, u)?);
            }
        }
        let sinr = signal / (noise + isi + mui);
        let mfb_se = (1.0 + radio.p_tx * energy(&taps) / noise).log2();
        out.push(LinkMetrics { signal_power: signal, isi_power: isi, mui_power: mui, sinr, se: (1.0 + sinr).log2(), mfb_se });
    }
    let sum = out.iter().map(|m| m.se).sum();
    Ok((out, sum))
}

/// `log₂(1 + P Σ_n |uᴴH̄[n]v|² / (N₀B))`.
pub fn compute_mfb(ch: &DiscreteChannel, v: &Array1<C64>, u: &Array1<C64>, radio: &RadioParams) -> Result<f64> {
    let taps = beamformed_taps(ch, v, u)?;
    Ok((1.0 + radio.p_tx * energy(&taps) / radio.noise_power()).log2())
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    pub mag_db: Vec<f64>,
    pub std_db: f64,
    pub peak_to_peak_db: f64,
}

/// Spread of `20 log₁₀ |uᴴ H̃[m] v|` across bins.
pub fn frequency_flatness(fc: &FrequencyChannel, v: &Array1<C64>, u: &Array1<C64>) -> Result<FlatnessReport> {
    let (r, c) = fc.shape();
    if v.len() != c || u.len() != r {
        return Err(domain("beam lengths do not fit the channel"));
    }
    let mag_db: Vec<f64> = fc
        .bins
        .iter()
        .map(|h| {
            let g: C64 = u.iter().zip(h.dot(v).iter()).map(|(a, b)| a.conj() * b).sum();
            20.0 * g.norm().max(1e-300).log10()
        })
        .collect();
    let n = mag_db.len() as f64;
    let mean = mag_db.iter().sum::<f64>() / n;
    let std_db = (mag_db.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    let hi = mag_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = mag_db.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(FlatnessReport { mag_db, std_db, peak_to_peak_db: hi - lo })
}

/// Single-element weights `e₀`, the reference before beamforming.
pub fn element_reference(n: usize) -> Array1<C64> {
    let mut e = Array1::zeros(n);
    if n > 0 {
        e[0] = C64::new(1.0, 0.0);
    }
    e
}
