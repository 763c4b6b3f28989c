//! Constant-envelope pilots whose spectra occupy `M_s` equally spaced bins.

use std::f64::consts::PI;

use rand::Rng;

use crate::dft::{fft, ifft};
use crate::error::{domain, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PilotSpec {
    /// Sequence length `M`.
    pub length: usize,
    /// Number of active bins `M_s`; must divide `M`.
    pub active_bins: usize,
    /// Pilot index `k ∈ [0, η)`.
    pub index: usize,
    /// `Σ|s[n]|²`.
    pub energy: f64,
}

impl PilotSpec {
    pub fn new(length: usize, active_bins: usize, index: usize, energy: f64) -> Result<Self> {
        let spec = Self { length, active_bins, index, energy };
        spec.validate()?;
        Ok(spec)
    }

    pub fn eta(&self) -> usize {
        self.length / self.active_bins
    }

    pub fn validate(&self) -> Result<()> {
        check_comb(self.length, self.active_bins)?;
        if self.index >= self.eta() {
            return Err(domain(format!(
                "pilot index {} outside [0, {})",
                self.index,
                self.eta()
            )));
        }
        if !(self.energy > 0.0) || !self.energy.is_finite() {
            return Err(domain("pilot energy must be positive and finite"));
        }
        Ok(())
    }
}

fn check_comb(m: usize, ms: usize) -> Result<()> {
    if ms == 0 || m == 0 || !m.is_multiple_of(ms) {
        return Err(domain(format!("active bins {ms} must divide sequence length {m}")));
    }
    Ok(())
}

/// Time samples and spectrum of a designed pilot.
///
/// `spectrum` is the unscaled `M`-point DFT, so `Σ_m |s̃[m]|² = M·E`.
#[derive(Clone, Debug)]
pub struct PilotSequence {
    pub spec: PilotSpec,
    pub samples: Vec<C64>,
    pub spectrum: Vec<C64>,
    pub active_set: Vec<usize>,
}

impl PilotSequence {
    /// `|s̃[m]|² M_s / (M E)`, which is 1 on every active bin for a perfectly
    /// flat pilot.
    pub fn normalized_bin_power(&self, m: usize) -> f64 {
        let s = &self.spec;
        self.spectrum[m].norm_sqr() * s.active_bins as f64 / (s.length as f64 * s.energy)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Unit-modulus weights `μ′` with approximately flat `M_s`-point spectrum.
#[derive(Clone, Debug)]
pub struct WeightVector {
    pub mu_prime: Vec<C64>,
    /// Largest deviation of `|DFT(μ′)|` from its RMS value, in dB.
    pub flatness_db: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl WeightVector {
    pub fn from_sequence(mu_prime: Vec<C64>) -> Result<Self> {
        if mu_prime.is_empty() {
            return Err(domain("weight vector is empty"));
        }
        if mu_prime.iter().any(|z| (z.norm() - 1.0).abs() > 1e-9) {
            return Err(domain("weights must have unit modulus"));
        }
        let flatness_db = spectral_flatness_db(&mu_prime);
        Ok(Self { mu_prime, flatness_db, converged: true, iterations: 0 })
    }
}

pub const DEFAULT_FLATNESS_TOL_DB: f64 = 0.5;
pub const DEFAULT_FLATNESS_MAX_ITER: usize = 100_000;
const STALL_WINDOW: usize = 200;

/// Largest `|20 log₁₀(|X[m]| / √len)|` over the DFT of a unit-modulus sequence.
pub fn spectral_flatness_db(x: &[C64]) -> f64 {
    let rms = (x.len() as f64).sqrt();
    fft(x)
        .iter()
        .map(|z| (20.0 * (z.norm() / rms).log10()).abs())
        .fold(0.0, f64::max)
}

/// Unit-modulus sequence with near-flat DFT magnitude.
///
/// Alternates between the unit-modulus set in time and the flat-magnitude
/// set in frequency, starting from uniformly random phases. Projections can
/// stall in a poor fixed point, so the phases are redrawn after
/// [`STALL_WINDOW`] iterations without improvement. The best iterate seen is
/// returned; `converged` tells whether it meets `tol_db`.
pub fn flat_spectrum_sequence<R: Rng + ?Sized>(
    ms: usize,
    tol_db: f64,
    max_iter: usize,
    rng: &mut R,
) -> Result<WeightVector> {
    if ms == 0 {
        return Err(domain("sequence length must be at least 1"));
    }
    if !(tol_db > 0.0) {
        return Err(domain("flatness tolerance must be positive"));
    }
    let draw = |rng: &mut R| -> Vec<C64> {
        (0..ms).map(|_| C64::from_polar(1.0, rng.random_range(0.0..2.0 * PI))).collect()
    };
    let mut x = draw(rng);
    let target = (ms as f64).sqrt();
    let mut best = x.clone();
    let mut best_flat = spectral_flatness_db(&x);
    let mut run_best = best_flat;
    let mut since_improve = 0;
    let mut iterations = 0;
    while best_flat > tol_db && iterations < max_iter {
        iterations += 1;
        if since_improve >= STALL_WINDOW {
            x = draw(rng);
            run_best = f64::INFINITY;
            since_improve = 0;
        }
        let spec: Vec<C64> = fft(&x)
            .into_iter()
            .map(|z| if z.norm() > 0.0 { z * (target / z.norm()) } else { C64::new(target, 0.0) })
            .collect();
        x = ifft(&spec)
            .into_iter()
            .map(|z| if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) })
            .collect();
        let flat = spectral_flatness_db(&x);
        if flat < run_best - 1e-9 {
            run_best = flat;
            since_improve = 0;
        } else {
            since_improve += 1;
        }
        if flat < best_flat {
            best_flat = flat;
            best.clone_from(&x);
        }
    }
    Ok(WeightVector { mu_prime: best, flatness_db: best_flat, converged: best_flat <= tol_db, iterations })
}

/// `F_k = {k, k+η, …, k+(M_s−1)η}`.
pub fn frequency_set(k: usize, m: usize, ms: usize) -> Result<Vec<usize>> {
    check_comb(m, ms)?;
    let eta = m / ms;
    if k >= eta {
        return Err(domain(format!("pilot index {k} outside [0, {eta})")));
    }
    Ok((0..ms).map(|l| k + l * eta).collect())
}

/// Builds the pilot step by step: shifted delta in an `η`-point spectrum,
/// inverse DFT, upsampling by `M_s`, weighting of `M_s` cyclic shifts by
/// `μ_n = μ′_n e^{+j2πkn/M}`, and finally scaling to energy `E`.
///
/// The rotation sign makes `DFT(μ, M)` restricted to `F_k` equal
/// `DFT(μ′, M_s)`, so in-band flatness is inherited from `μ′`.
pub fn design_pilot(spec: &PilotSpec, weights: &WeightVector) -> Result<PilotSequence> {
    spec.validate()?;
    let (m, ms, k) = (spec.length, spec.active_bins, spec.index);
    let eta = spec.eta();
    if weights.mu_prime.len() != ms {
        return Err(domain(format!(
            "weight vector has length {}, expected {ms}",
            weights.mu_prime.len()
        )));
    }

    let mut s_eta_tilde = vec![C64::new(0.0, 0.0); eta];
    s_eta_tilde[k] = C64::new(1.0, 0.0);
    let s_eta = ifft(&s_eta_tilde);

    let mut s_up = vec![C64::new(0.0, 0.0); m];
    for (l, v) in s_eta.iter().enumerate() {
        s_up[l * ms] = *v;
    }

    let mu: Vec<C64> = weights
        .mu_prime
        .iter()
        .enumerate()
        .map(|(n, w)| w * C64::from_polar(1.0, 2.0 * PI * (k * n) as f64 / m as f64))
        .collect();

    let mut samples = vec![C64::new(0.0, 0.0); m];
    for (shift, w) in mu.iter().enumerate() {
        for n in 0..m {
            samples[(n + shift) % m] += s_up[n] * w;
        }
    }

    let energy: f64 = samples.iter().map(|z| z.norm_sqr()).sum();
    let scale = (spec.energy / energy).sqrt();
    samples.iter_mut().for_each(|z| *z *= scale);
    let spectrum = fft(&samples);
    Ok(PilotSequence { spec: *spec, samples, spectrum, active_set: frequency_set(k, m, ms)? })
}
