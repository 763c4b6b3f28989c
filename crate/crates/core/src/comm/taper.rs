use std::f64::consts::PI;

use ndarray::Array1;

use super::remez::{remez_lowpass, Band};
use crate::codebook::Codebook;
use crate::error::{domain, Result};
use crate::C64;

/// Real symmetric amplitude taper applied on top of a DFT beam.
#[derive(Clone, Debug)]
pub struct Taper {
    pub omega: Array1<C64>,
    pub beamwidth_deg: f64,
    /// Achieved passband peak-to-peak ripple.
    pub ripple_db: f64,
}

impl Taper {
    pub fn uniform(n: usize) -> Self {
        let v = 1.0 / (n as f64).sqrt();
        Self { omega: Array1::from_elem(n, C64::new(v, 0.0)), beamwidth_deg: natural_beamwidth_deg(n), ripple_db: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }
}

/// Narrowest flat-top beamwidth the array supports: `2 asin(1/N)`.
pub fn natural_beamwidth_deg(n: usize) -> f64 {
    2.0 * (1.0 / n as f64).min(1.0).asin().to_degrees()
}

/// Array response of `w` toward spatial frequency `u = sin θ` under
/// half-wavelength spacing: `Σ_n w_n e^{jπ n u}`.
pub fn pattern(w: &Array1<C64>, u: f64) -> C64 {
    let c = (w.len() as f64 - 1.0) / 2.0;
    w.iter()
        .enumerate()
        .map(|(n, wn)| wn * C64::from_polar(1.0, PI * (n as f64 - c) * u))
        .sum()
}

pub const DEFAULT_RIPPLE_DB: f64 = 3.0;

/// Flat-top taper by equiripple lowpass design on spatial frequency.
///
/// With half-wavelength spacing the taper response at `u = sin θ` is a
/// filter response at normalized frequency `f = u/2`. The passband ends at
/// `sin(bw/2)/2` and the stopband starts `1/N` later (`2/N` in `u`). The
/// passband weight is bisected (log scale) until the passband
/// peak-to-peak ripple matches `ripple_db`; a 3 dB target puts the
/// beamwidth edges at the half-power points.
pub fn design_flat_top(n: usize, beamwidth_deg: f64, ripple_db: f64) -> Result<Taper> {
    if n == 0 {
        return Err(domain("array needs at least one element"));
    }
    if !(ripple_db > 0.0) {
        return Err(domain("ripple must be positive"));
    }
    if n == 1 {
        return Ok(Taper::uniform(1));
    }
    let min_bw = natural_beamwidth_deg(n);
    if !(beamwidth_deg > 0.0 && beamwidth_deg < 180.0)
        || (beamwidth_deg.to_radians() / 2.0).sin() < 1.0 / n as f64 - 1e-12
    {
        return Err(domain(format!(
            "beamwidth {beamwidth_deg:.3} deg is not achievable with {n} elements; minimum is {min_bw:.3} deg"
        )));
    }
    let f_pass = (beamwidth_deg.to_radians() / 2.0).sin() / 2.0;
    let f_stop = f_pass + 1.0 / n as f64;
    if f_stop >= 0.5 {
        return Err(domain(format!(
            "beamwidth {beamwidth_deg:.3} deg leaves no stopband for {n} elements"
        )));
    }
    let design = |w_pass: f64| -> Result<(Array1<C64>, f64)> {
        let bands = [
            Band { lo: 0.0, hi: f_pass, desired: 1.0, weight: w_pass },
            Band { lo: f_stop, hi: 0.5, desired: 0.0, weight: 1.0 },
        ];
        let d = remez_lowpass(n, &bands, 32)?;
        let h = Array1::from_iter(d.taps.iter().map(|&v| C64::new(v, 0.0)));
        let r = passband_ripple_db(&h, f_pass);
        Ok((h, r))
    };
    // Ripple falls as the passband weight grows.
    let (mut lo, mut hi) = (-3.0f64, 3.0f64);
    let mut best = design(1.0)?;
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        let cand = design(10f64.powf(mid))?;
        if cand.1 > ripple_db {
            lo = mid;
        } else {
            hi = mid;
        }
        if (cand.1 - ripple_db).abs() < (best.1 - ripple_db).abs() {
            best = cand;
        }
        if (best.1 - ripple_db).abs() < 1e-3 {
            break;
        }
    }
    let (h, ripple) = best;
    let norm = h.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    Ok(Taper { omega: h / C64::new(norm, 0.0), beamwidth_deg, ripple_db: ripple })
}

fn passband_ripple_db(h: &Array1<C64>, f_pass: f64) -> f64 {
    let mags: Vec<f64> = (0..=200).map(|i| pattern(h, 2.0 * f_pass * i as f64 / 200.0).norm()).collect();
    let hi = mags.iter().copied().fold(0.0, f64::max);
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min);
    20.0 * (hi / lo.max(1e-300)).log10()
}

/// `v = √N · ω ∘ c_i`, renormalized.
pub fn steer_beam(taper: &Taper, codebook: &Codebook, i: usize) -> Result<Array1<C64>> {
    let n = codebook.size();
    if i >= n {
        return Err(domain(format!("beam index {i} outside [0, {n})")));
    }
    if taper.len() != n {
        return Err(domain(format!("taper has {} elements, codebook {n}", taper.len())));
    }
    let v = &taper.omega * &codebook.column(i) * C64::new((n as f64).sqrt(), 0.0);
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(v / C64::new(norm, 0.0))
}
