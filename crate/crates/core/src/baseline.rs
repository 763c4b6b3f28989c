//! One-sided random-probing baseline: the receiver listens
//! omnidirectionally, combines probe energies noncoherently across bins and
//! recovers per-beam gains with nonnegative ℓ1-regularized least squares.
//! Two such estimates, one per direction, form a rank-1 beam-pair map.

use ndarray::{Array1, Array2, Axis};
use rand::seq::index::sample;
use rand::Rng;

use crate::channel::{beamspace, BeamspaceChannel, FrequencyChannel};
use crate::codebook::{mirror_index, Codebook};
use crate::error::{domain, Result};
use crate::pilots::PilotSequence;
use crate::sensing::{complex_noise, select_bins, MeasurementBlock};
use crate::C64;

/// `Ȟ_os[b, m] = (1/√N) Σ_a [Cᴴ H̃[m] C]_{a,b}`: transmit beam `b` seen by
/// an omnidirectional receiver.
#[derive(Clone, Debug)]
pub struct OneSidedBeamspace {
    pub h: Array2<C64>,
}

pub fn one_sided_beamspace(fc: &FrequencyChannel, codebook: &Codebook) -> Result<OneSidedBeamspace> {
    Ok(one_sided_from_beamspace(&beamspace(fc, codebook)?))
}

pub fn one_sided_from_beamspace(bs: &BeamspaceChannel) -> OneSidedBeamspace {
    let n = bs.num_antennas;
    let scale = 1.0 / (n as f64).sqrt();
    let h = Array2::from_shape_fn((n, bs.matrix.ncols()), |(b, m)| {
        (0..n).map(|a| bs.matrix[[b * n + a, m]]).sum::<C64>() * scale
    });
    OneSidedBeamspace { h }
}

/// Random on/off probes: `N/2` beams (at least one) active with random
/// signs, unit norm.
pub fn draw_probes<R: Rng + ?Sized>(q: usize, n: usize, rng: &mut R) -> Result<Array2<C64>> {
    if q == 0 || n == 0 {
        return Err(domain("need at least one probe and one beam"));
    }
    let active = (n / 2).max(1);
    let amp = 1.0 / (active as f64).sqrt();
    let mut p = Array2::<C64>::zeros((q, n));
    for mut row in p.rows_mut() {
        for b in sample(rng, n, active) {
            row[b] = C64::new(if rng.random::<bool>() { amp } else { -amp }, 0.0);
        }
    }
    Ok(p)
}

/// Noiseless `(1/√M) V Ȟ_os diag(s̃)` over all bins; `probes` holds `v̌_qᵀ` as rows.
pub fn one_sided_signal(
    os: &OneSidedBeamspace,
    probes: &Array2<C64>,
    pilot: &PilotSequence,
) -> Result<Array2<C64>> {
    let m = pilot.samples.len();
    if probes.ncols() != os.h.nrows() || os.h.ncols() != m {
        return Err(domain(format!(
            "probes are {}x{}, one-sided channel {}x{}, pilot length {m}",
            probes.nrows(),
            probes.ncols(),
            os.h.nrows(),
            os.h.ncols()
        )));
    }
    let scale = 1.0 / (m as f64).sqrt();
    let mut y = probes.dot(&os.h);
    for (mut col, s) in y.axis_iter_mut(Axis(1)).zip(&pilot.spectrum) {
        col.mapv_inplace(|v| v * s * scale);
    }
    Ok(y)
}

pub fn simulate_one_sided<R: Rng + ?Sized>(
    os: &OneSidedBeamspace,
    probes: &Array2<C64>,
    pilot: &PilotSequence,
    noise_psd: f64,
    bandwidth: f64,
    rng: &mut R,
) -> Result<MeasurementBlock> {
    let power = noise_psd * bandwidth;
    let sig = select_bins(&one_sided_signal(os, probes, pilot)?, &pilot.active_set);
    let y = sig + complex_noise(probes.nrows(), pilot.active_set.len(), power, rng);
    Ok(MeasurementBlock {
        y,
        bins: pilot.active_set.clone(),
        sequence_length: pilot.samples.len(),
        noise_power: power,
    })
}

/// `e_q = Σ_{m∈F} |Y[q, m]|²`.
pub fn noncoherent_combine(block: &MeasurementBlock) -> Result<Array1<f64>> {
    if block.bins.is_empty() || block.y.ncols() == 0 {
        return Err(domain("no active bins to combine"));
    }
    Ok(block.y.map_axis(Axis(1), |row| row.iter().map(|v| v.norm_sqr()).sum()))
}

#[derive(Clone, Debug)]
pub struct OneSidedEstimate {
    pub gain_per_beam: Array1<f64>,
    /// `None` when every gain is zero.
    pub best_beam: Option<usize>,
    /// Fitted energy offset (noise floor).
    pub intercept: f64,
}

impl OneSidedEstimate {
    /// Gains re-indexed by the mirrored codebook index; turns transmit-beam
    /// gains of the reverse direction into receive-beam gains.
    pub fn mirrored(&self) -> Self {
        let n = self.gain_per_beam.len();
        let mut g = Array1::zeros(n);
        for (i, &v) in self.gain_per_beam.iter().enumerate() {
            g[mirror_index(i, n)] = v;
        }
        Self { best_beam: argmax(&g), gain_per_beam: g, intercept: self.intercept }
    }
}

fn argmax(g: &Array1<f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in g.iter().enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Regularization scale for [`l1_solve`] from the energy noise statistics:
/// each `e_q` has standard deviation `√|F|·N₀B` under noise only.
pub fn default_l1_gamma(c: f64, noise_power: f64, bins: usize, probes: &Array2<C64>) -> f64 {
    let design = probes.mapv(|v| v.norm_sqr());
    let col = design
        .columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let n = probes.ncols().max(2) as f64;
    c * (bins as f64).sqrt() * noise_power * col * (2.0 * n.ln()).sqrt()
}

/// Fits `e_q ≈ Σ_b |v̌_{q,b}|² g_b + c` with `g ≥ 0` and an ℓ1 penalty on
/// `g` by projected ISTA; the offset `c` is free and unpenalized.
pub fn l1_solve(
    energies: &Array1<f64>,
    probes: &Array2<C64>,
    gamma: f64,
    max_iter: usize,
    tol: f64,
) -> Result<OneSidedEstimate> {
    if gamma < 0.0 || !gamma.is_finite() {
        return Err(domain(format!("regularization weight {gamma} must be nonnegative")));
    }
    if energies.len() != probes.nrows() {
        return Err(domain("one energy per probe is required"));
    }
    let (q, n) = probes.dim();
    let mut design = Array2::<f64>::ones((q, n + 1));
    design.slice_mut(ndarray::s![.., ..n]).assign(&probes.mapv(|v| v.norm_sqr()));
    let lip = spectral_norm_sq(&design) * 1.01;
    if lip == 0.0 {
        return Err(domain("probe design is zero"));
    }
    let mut x = Array1::<f64>::zeros(n + 1);
    for _ in 0..max_iter {
        let r = design.dot(&x) - energies;
        let grad = design.t().dot(&r);
        let mut next = &x - &(grad / lip);
        for g in next.iter_mut().take(n) {
            *g = (*g - gamma / lip).max(0.0);
        }
        let change = (&next - &x).mapv(|v| v * v).sum().sqrt();
        let size = next.mapv(|v| v * v).sum().sqrt();
        x = next;
        if change <= tol * size.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let gains = x.slice(ndarray::s![..n]).to_owned();
    Ok(OneSidedEstimate { best_beam: argmax(&gains), gain_per_beam: gains, intercept: x[n] })
}

fn spectral_norm_sq(a: &Array2<f64>) -> f64 {
    let g = a.t().dot(a);
    let mut v = Array1::from_shape_fn(g.nrows(), |i| 1.0 + 0.1 * (i as f64).sin());
    let mut lam = 0.0;
    for _ in 0..100 {
        let w = g.dot(&v);
        let nrm = w.mapv(|x| x * x).sum().sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        lam = nrm / v.mapv(|x| x * x).sum().sqrt();
        v = w / nrm;
    }
    lam
}

/// Outer product of transmit-beam gains and receive-beam gains; rows index
/// transmit beams.
pub fn rank1_estimate(tx_est: &OneSidedEstimate, rx_est: &OneSidedEstimate) -> Result<Array2<f64>> {
    if tx_est.best_beam.is_none() && rx_est.best_beam.is_none() {
        return Err(domain("both one-sided estimates are zero"));
    }
    let t = tx_est.gain_per_beam.view().insert_axis(Axis(1));
    let r = rx_est.gain_per_beam.view().insert_axis(Axis(0));
    Ok(t.dot(&r))
}

/// `(tx_beam, rx_beam)` of the largest entry, lowest flat index on ties.
pub fn rank1_pair(map: &Array2<f64>) -> Option<(usize, usize)> {
    let mut best: Option<((usize, usize), f64)> = None;
    for (idx, &v) in map.indexed_iter() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((idx, v));
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn probes_are_unit_norm_half_active() {
        let p = draw_probes(10, 8, &mut rng_from(2)).unwrap();
        for row in p.rows() {
            assert_eq!(row.iter().filter(|v| v.norm() > 0.0).count(), 4);
            assert!((row.iter().map(|v| v.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn outer_product_of_one_hots() {
        let mk = |i: usize| OneSidedEstimate {
            gain_per_beam: Array1::from_shape_fn(4, |j| if i == j { 2.0 } else { 0.0 }),
            best_beam: Some(i),
            intercept: 0.0,
        };
        let r = rank1_estimate(&mk(1), &mk(3)).unwrap();
        assert_eq!(r.iter().filter(|v| **v != 0.0).count(), 1);
        assert_eq!(rank1_pair(&r), Some((1, 3)));
        let zero = OneSidedEstimate { gain_per_beam: Array1::zeros(4), best_beam: None, intercept: 0.0 };
        assert!(rank1_estimate(&zero, &zero).is_err());
    }

    #[test]
    fn mirroring_maps_indices() {
        let e = OneSidedEstimate {
            gain_per_beam: Array1::from(vec![0.0, 1.0, 0.0, 0.0]),
            best_beam: Some(1),
            intercept: 0.0,
        };
        assert_eq!(e.mirrored().best_beam, Some(3));
    }
}
