use std::f64::consts::PI;

use ndarray::Array2;

use super::paths::PathSet;
use super::pulse::PulseSpec;
use crate::error::{domain, Result};
use crate::C64;

pub const DEFAULT_TAP_THRESHOLD_DB: f64 = -60.0;

/// Sampled matrix taps `H̄[0..L]`, rows indexing receive antennas.
#[derive(Clone, Debug)]
pub struct DiscreteChannel {
    pub taps: Vec<Array2<C64>>,
    pub symbol_period: f64,
    pub reference_delay: f64,
}

impl DiscreteChannel {
    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.taps.first().map(|t| t.dim()).unwrap_or((0, 0))
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().flat_map(|t| t.iter()).map(|v| v.norm_sqr()).sum()
    }
}

/// Samples the multipath channel at `t = τ₀ + nT` through the combined pulse.
///
/// Each path contributes `β_p e^{-j2πf₀(τ_p^{ij} - d_p/c)} g(nT + τ₀ - τ_p^{ij})`
/// to entry `(i, j)`, so the element phase differences come from the exact
/// delays while `β_p` carries the centroid phase. `τ₀` is the earliest
/// element arrival over all paths. Taps are truncated at
/// [`DEFAULT_TAP_THRESHOLD_DB`].
pub fn discretize_channel(paths: &PathSet, pulse: &PulseSpec) -> Result<DiscreteChannel> {
    let first = paths.paths.first().ok_or_else(|| domain("path set is empty"))?;
    let shape = first.delays.dim();
    let tau0 = paths
        .paths
        .iter()
        .flat_map(|p| p.delays.iter().copied())
        .fold(f64::INFINITY, f64::min);
    let tau_max = paths
        .paths
        .iter()
        .flat_map(|p| p.delays.iter().copied())
        .fold(f64::NEG_INFINITY, f64::max);
    let t = pulse.symbol_period;
    let n_taps = ((tau_max - tau0) / t).ceil() as usize + pulse.span as usize + 1;
    let f0 = paths.carrier_frequency;

    let mut taps = vec![Array2::<C64>::zeros(shape); n_taps];
    for p in &paths.paths {
        let tc = p.centroid_delay();
        for ((i, j), &tau) in p.delays.indexed_iter() {
            let coef = p.gain * C64::from_polar(1.0, -2.0 * PI * f0 * (tau - tc));
            let offset = (tau - tau0) / t;
            let lo = (offset - pulse.span as f64).floor().max(0.0) as usize;
            let hi = ((offset + pulse.span as f64).ceil() as usize).min(n_taps - 1);
            for (n, tap) in taps.iter_mut().enumerate().take(hi + 1).skip(lo) {
                tap[[i, j]] += coef * pulse.combined(n as f64 * t + tau0 - tau);
            }
        }
    }
    let mut ch = DiscreteChannel { taps, symbol_period: t, reference_delay: tau0 };
    let l = channel_length(&ch, DEFAULT_TAP_THRESHOLD_DB)?;
    ch.taps.truncate(l);
    Ok(ch)
}

/// Smallest `n` such that every tap at index `≥ n` is below `rel_threshold_db`
/// (Frobenius norm, relative to the strongest tap).
pub fn channel_length(ch: &DiscreteChannel, rel_threshold_db: f64) -> Result<usize> {
    if ch.taps.is_empty() {
        return Err(domain("channel has no taps"));
    }
    let norms: Vec<f64> = ch
        .taps
        .iter()
        .map(|t| t.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let peak = norms.iter().copied().fold(0.0, f64::max);
    if peak == 0.0 {
        return Err(domain("channel is identically zero"));
    }
    let floor = peak * 10f64.powf(rel_threshold_db / 20.0);
    Ok(norms.iter().rposition(|&v| v >= floor).map_or(0, |i| i + 1))
}

#[cfg(test)]
mod tests {
    use super::super::paths::Path;
    use super::*;

    fn tap_chan(norms: &[f64]) -> DiscreteChannel {
        DiscreteChannel {
            taps: norms.iter().map(|&v| Array2::from_elem((1, 1), C64::new(v, 0.0))).collect(),
            symbol_period: 1.0,
            reference_delay: 0.0,
        }
    }

    #[test]
    fn length_by_definition() {
        assert_eq!(channel_length(&tap_chan(&[1.0]), -60.0).unwrap(), 1);
        assert_eq!(channel_length(&tap_chan(&[1.0, 0.1, 1e-9]), -60.0).unwrap(), 2);
        assert!(channel_length(&tap_chan(&[0.0, 0.0]), -60.0).is_err());
        assert!(channel_length(&tap_chan(&[]), -60.0).is_err());
    }

    fn single_path(delay: f64, gain: C64) -> Path {
        Path {
            gain,
            delays: Array2::from_elem((1, 1), delay),
            bounce_count: 0,
            length: delay * crate::SPEED_OF_LIGHT,
        }
    }

    #[test]
    fn on_grid_delay_hits_one_tap() {
        let pulse = PulseSpec::new(0.25, 8, 1.0).unwrap();
        let beta = C64::new(0.3, -0.4);
        let ps = PathSet {
            paths: vec![single_path(5.0, beta), single_path(8.0, beta * 0.5)],
            carrier_frequency: 1.0,
            los_present: true,
        };
        let ch = discretize_channel(&ps, &pulse).unwrap();
        assert_eq!(ch.len(), 4);
        assert!((ch.taps[0][[0, 0]] - beta).norm() < 1e-12);
        assert!((ch.taps[3][[0, 0]] - beta * 0.5).norm() < 1e-12);
        assert!(ch.taps[1][[0, 0]].norm() < 1e-12);
    }
}
