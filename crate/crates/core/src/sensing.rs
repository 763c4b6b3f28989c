//! Compressed-sensing beam alignment: random unit-circle beam weights,
//! Kronecker sampling matrices, measurement synthesis and block ISTA.

use std::f64::consts::PI;

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::BeamspaceChannel;
use crate::error::{domain, Result};
use crate::pilots::PilotSequence;
use crate::C64;

/// Per-measurement transmit (`v̌_q`) and receive (`ǔ_q`) weights in the
/// codebook domain, stored as rows.
#[derive(Clone, Debug)]
pub struct BeamWeights {
    pub v: Array2<C64>,
    pub u: Array2<C64>,
}

impl BeamWeights {
    pub fn num_measurements(&self) -> usize {
        self.v.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.v.ncols()
    }
}

/// Every entry has modulus `1/√N` and an independent uniform phase.
pub fn draw_beam_weights<R: Rng + ?Sized>(q: usize, n: usize, rng: &mut R) -> Result<BeamWeights> {
    if q == 0 || n == 0 {
        return Err(domain("need at least one measurement and one antenna"));
    }
    let r = 1.0 / (n as f64).sqrt();
    let mut draw = || Array2::from_shape_simple_fn((q, n), || C64::from_polar(r, rng.random_range(0.0..2.0 * PI)));
    let v = draw();
    let u = draw();
    Ok(BeamWeights { v, u })
}

/// `A` with rows `N (v̌_qᵀ ⊗ ǔ_qᴴ)`; column `b·N + a` pairs transmit beam
/// `b` with receive beam `a`, matching [`BeamspaceChannel`] rows.
#[derive(Clone, Debug)]
pub struct SamplingMatrix {
    pub a: Array2<C64>,
    pub num_antennas: usize,
}

impl SamplingMatrix {
    pub fn num_measurements(&self) -> usize {
        self.a.nrows()
    }
}

pub fn build_sampling_matrix(w: &BeamWeights) -> SamplingMatrix {
    let (q, n) = w.v.dim();
    let scale = n as f64;
    let a = Array2::from_shape_fn((q, n * n), |(qi, col)| {
        let (b, r) = (col / n, col % n);
        w.v[[qi, b]] * w.u[[qi, r]].conj() * scale
    });
    SamplingMatrix { a, num_antennas: n }
}

/// Received frequency-domain samples on one pilot's active bins.
#[derive(Clone, Debug)]
pub struct MeasurementBlock {
    /// `Q × |F|`.
    pub y: Array2<C64>,
    pub bins: Vec<usize>,
    /// Pilot length `M`, needed to scale the sensing operator.
    pub sequence_length: usize,
    /// Per-sample noise variance `N₀B`.
    pub noise_power: f64,
}

/// Noiseless `(1/(N√M)) A Ȟ diag(s̃)` over all `M` bins.
pub fn measurement_signal(
    bs: &BeamspaceChannel,
    a: &SamplingMatrix,
    pilot: &PilotSequence,
) -> Result<Array2<C64>> {
    let n = a.num_antennas;
    let m = pilot.samples.len();
    if bs.matrix.nrows() != n * n || a.a.ncols() != n * n {
        return Err(domain(format!(
            "beamspace has {} rows, sampling matrix {} columns, expected {}",
            bs.matrix.nrows(),
            a.a.ncols(),
            n * n
        )));
    }
    if bs.matrix.ncols() != m {
        return Err(domain(format!(
            "beamspace has {} bins but the pilot has length {m}",
            bs.matrix.ncols()
        )));
    }
    let scale = 1.0 / (n as f64 * (m as f64).sqrt());
    let mut y = a.a.dot(&bs.matrix);
    for (mut col, s) in y.axis_iter_mut(Axis(1)).zip(&pilot.spectrum) {
        col.mapv_inplace(|v| v * s * scale);
    }
    Ok(y)
}

/// Circular complex Gaussian block with per-entry variance `power`.
pub fn complex_noise<R: Rng + ?Sized>(rows: usize, cols: usize, power: f64, rng: &mut R) -> Array2<C64> {
    let sd = (power / 2.0).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re * sd, im * sd)
    })
}

/// Restricts a full `Q × M` block to the given bins.
pub fn select_bins(full: &Array2<C64>, bins: &[usize]) -> Array2<C64> {
    full.select(Axis(1), bins)
}

/// `Y = (1/(N√M)) A Ȟ diag(s̃) + Z` on the pilot's active bins, with `Z`
/// i.i.d. `CN(0, N₀B)`.
pub fn simulate_measurement<R: Rng + ?Sized>(
    bs: &BeamspaceChannel,
    a: &SamplingMatrix,
    pilot: &PilotSequence,
    noise_psd: f64,
    bandwidth: f64,
    rng: &mut R,
) -> Result<MeasurementBlock> {
    if noise_psd < 0.0 || bandwidth <= 0.0 {
        return Err(domain("noise PSD must be nonnegative and bandwidth positive"));
    }
    let power = noise_psd * bandwidth;
    let sig = select_bins(&measurement_signal(bs, a, pilot)?, &pilot.active_set);
    let y = sig + complex_noise(a.num_measurements(), pilot.active_set.len(), power, rng);
    Ok(MeasurementBlock {
        y,
        bins: pilot.active_set.clone(),
        sequence_length: pilot.samples.len(),
        noise_power: power,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IstaOptions {
    pub gamma: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IstaOptions {
    fn default() -> Self {
        Self { gamma: 0.0, max_iter: 500, tol: 1e-6 }
    }
}

/// Recovered `Ȟ diag(s̃)` restricted to the measured bins.
#[derive(Clone, Debug)]
pub struct BeamspaceEstimate {
    /// `N² × |F|`.
    pub x: Array2<C64>,
    pub row_norms: Array1<f64>,
    pub support: Vec<usize>,
    pub num_antennas: usize,
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

/// Universal-threshold style regularization weight.
///
/// Under noise only, row `r` of `ĀᴴZ` has norm close to
/// `σ √Q/(N√M) √|F|`; the `√(2 ln N²)` term covers the maximum over rows.
pub fn default_gamma(c: f64, noise_power: f64, q: usize, n: usize, m: usize, bins: usize) -> f64 {
    let sigma = noise_power.sqrt();
    let col_norm = (q as f64).sqrt() / (n as f64 * (m as f64).sqrt());
    let rows = (n * n) as f64;
    c * sigma * col_norm * ((bins as f64).sqrt() + (2.0 * rows.ln().max(0.0)).sqrt())
}

fn conj_t(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

fn frob2(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum()
}

fn row_norms(x: &Array2<C64>) -> Array1<f64> {
    x.rows().into_iter().map(|r| r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()).collect()
}

/// `½‖Y − ĀX‖²_F + γ Σ_r ‖X_r‖₂`.
pub fn objective(y: &Array2<C64>, abar: &Array2<C64>, x: &Array2<C64>, gamma: f64) -> f64 {
    0.5 * frob2(&(y - &abar.dot(x))) + gamma * row_norms(x).sum()
}

fn row_shrink(x: &mut Array2<C64>, t: f64) {
    for mut row in x.rows_mut() {
        let nrm = row.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        let f = if nrm > t { 1.0 - t / nrm } else { 0.0 };
        row.mapv_inplace(|v| v * f);
    }
}

/// Largest eigenvalue of `ĀᴴĀ`, via power iteration on the smaller Gram matrix.
fn lipschitz(abar: &Array2<C64>) -> f64 {
    let g = abar.dot(&conj_t(abar));
    let n = g.nrows();
    let mut v = Array1::from_shape_fn(n, |i| C64::new(1.0 + (i as f64 * 0.618).sin(), 0.0));
    let mut lam = 0.0;
    for _ in 0..50 {
        let w = g.dot(&v);
        let nrm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm == 0.0 {
            return 0.0;
        }
        lam = nrm / v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v = w / C64::new(nrm, 0.0);
    }
    lam
}

/// Orthonormal `W` (`|F| × r`, `r ≤ Q`) with `Y = (YW)Wᴴ`, via modified
/// Gram–Schmidt on the rows of `Y`.
fn row_space_basis(y: &Array2<C64>) -> Array2<C64> {
    let yh = conj_t(y);
    let scale = frob2(y).sqrt().max(f64::MIN_POSITIVE);
    let mut basis: Vec<Array1<C64>> = Vec::new();
    for col in yh.columns() {
        let mut v = col.to_owned();
        for _ in 0..2 {
            for b in &basis {
                let proj: C64 = b.iter().zip(v.iter()).map(|(bi, vi)| bi.conj() * vi).sum();
                v.zip_mut_with(b, |vi, bi| *vi -= proj * bi);
            }
        }
        let nrm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if nrm > 1e-12 * scale {
            basis.push(v / C64::new(nrm, 0.0));
        }
    }
    let mut w = Array2::<C64>::zeros((y.ncols(), basis.len()));
    for (j, b) in basis.iter().enumerate() {
        w.column_mut(j).assign(b);
    }
    w
}

/// Block ISTA for `min ½‖Y − ĀX‖²_F + γ‖X‖₂,₁` with `Ā = A/(N√M)`.
///
/// The minimizer lies in the row space of `Y`, so the iterations run on the
/// projection `YW` with at most `Q` columns and the result is lifted back.
/// The step is `1/Λ` with `Λ` from power iteration; if an iterate ever
/// raises the objective the step is halved and retried, so the recorded
/// objective trace is non-increasing. Iteration stops early when no step
/// size decreases the objective.
pub fn block_ista_solve(
    block: &MeasurementBlock,
    a: &SamplingMatrix,
    opts: &IstaOptions,
) -> Result<BeamspaceEstimate> {
    if opts.gamma < 0.0 || !opts.gamma.is_finite() {
        return Err(domain(format!("regularization weight {} must be nonnegative", opts.gamma)));
    }
    if block.y.nrows() != a.num_measurements() {
        return Err(domain("measurement rows do not match the sampling matrix"));
    }
    let n = a.num_antennas;
    let abar = a.a.mapv(|v| v / (n as f64 * (block.sequence_length as f64).sqrt()));
    let abar_h = conj_t(&abar);
    let mut lam = lipschitz(&abar) * 1.01;
    if lam == 0.0 {
        return Err(domain("sampling matrix is zero"));
    }
    let w = row_space_basis(&block.y);
    let y = block.y.dot(&w);
    let cols = y.ncols();

    let mut x = Array2::<C64>::zeros((n * n, cols));
    let mut obj = objective(&y, &abar, &x, opts.gamma);
    let mut trace = vec![obj];
    let mut iterations = 0;
    let lam_cap = lam * 2f64.powi(40);
    'outer: while iterations < opts.max_iter && cols > 0 {
        let grad = abar_h.dot(&(abar.dot(&x) - &y));
        let (next, next_obj) = loop {
            let mut cand = &x - &grad.mapv(|v| v / lam);
            row_shrink(&mut cand, opts.gamma / lam);
            let o = objective(&y, &abar, &cand, opts.gamma);
            if o <= obj {
                break (cand, o);
            }
            if lam > lam_cap {
                // No step decreases the objective: converged to roundoff.
                break 'outer;
            }
            lam *= 2.0;
        };
        iterations += 1;
        let change = frob2(&(&next - &x)).sqrt();
        let size = frob2(&next).sqrt();
        x = next;
        obj = next_obj;
        trace.push(obj);
        if change <= opts.tol * size.max(f64::MIN_POSITIVE) || size == 0.0 && change == 0.0 {
            break;
        }
    }
    let x_full = x.dot(&conj_t(&w));
    let norms = row_norms(&x);
    let support = norms.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect();
    let x_out = if cols == 0 { Array2::zeros((n * n, block.y.ncols())) } else { x_full };
    Ok(BeamspaceEstimate {
        x: x_out,
        row_norms: norms,
        support,
        num_antennas: n,
        objective_trace: trace,
        iterations,
    })
}

/// Beam pair `(tx, rx)` of the strongest row, lowest index on ties;
/// `None` for an all-zero estimate.
pub fn extract_beam_pair(est: &BeamspaceEstimate) -> Option<(usize, usize)> {
    let mut best: Option<(usize, f64)> = None;
    for (r, &v) in est.row_norms.iter().enumerate() {
        if v > 0.0 && best.is_none_or(|(_, b)| v > b) {
            best = Some((r, v));
        }
    }
    best.map(|(r, _)| BeamspaceChannel::beam_pair(r, est.num_antennas))
}

/// `‖Y − ĀX̂‖_F` of an estimate.
pub fn residual_norm(block: &MeasurementBlock, a: &SamplingMatrix, est: &BeamspaceEstimate) -> f64 {
    let n = a.num_antennas;
    let abar = a.a.mapv(|v| v / (n as f64 * (block.sequence_length as f64).sqrt()));
    frob2(&(&block.y - &abar.dot(&est.x))).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from;

    #[test]
    fn weights_and_matrix_have_exact_moduli() {
        let w = draw_beam_weights(5, 4, &mut rng_from(1)).unwrap();
        for row in w.v.rows().into_iter().chain(w.u.rows()) {
            let nrm: f64 = row.iter().map(|z| z.norm_sqr()).sum();
            assert!((nrm - 1.0).abs() < 1e-12);
        }
        let a = build_sampling_matrix(&w);
        assert_eq!(a.a.dim(), (5, 16));
        assert!(a.a.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(draw_beam_weights(0, 4, &mut rng_from(1)).is_err());
    }

    #[test]
    fn hand_built_kronecker() {
        let j = C64::new(0.0, 1.0);
        let h = 1.0 / 2f64.sqrt();
        let v = Array2::from_shape_vec((1, 2), vec![C64::new(h, 0.0), j * h]).unwrap();
        let u = Array2::from_shape_vec((1, 2), vec![C64::new(-h, 0.0), C64::new(h, 0.0)]).unwrap();
        let a = build_sampling_matrix(&BeamWeights { v, u });
        // Columns (b, a): (0,0), (0,1), (1,0), (1,1); entries 2 v_b conj(u_a).
        let expect = [C64::new(-1.0, 0.0), C64::new(1.0, 0.0), -j, j];
        for (c, e) in expect.iter().enumerate() {
            assert!((a.a[[0, c]] - e).norm() < 1e-12);
        }
    }

    #[test]
    fn tie_break_prefers_lowest_row() {
        let mut norms = Array1::zeros(16);
        norms[3] = 1.0;
        norms[7] = 1.0;
        let est = BeamspaceEstimate {
            x: Array2::zeros((16, 1)),
            row_norms: norms,
            support: vec![3, 7],
            num_antennas: 4,
            objective_trace: vec![],
            iterations: 0,
        };
        assert_eq!(extract_beam_pair(&est), Some((0, 3)));
        let zero = BeamspaceEstimate { row_norms: Array1::zeros(16), support: vec![], ..est };
        assert_eq!(extract_beam_pair(&zero), None);
    }

    #[test]
    fn negative_gamma_is_rejected() {
        let w = draw_beam_weights(4, 2, &mut rng_from(0)).unwrap();
        let a = build_sampling_matrix(&w);
        let block = MeasurementBlock { y: Array2::zeros((4, 2)), bins: vec![0, 1], sequence_length: 2, noise_power: 0.0 };
        let opts = IstaOptions { gamma: -1.0, ..Default::default() };
        assert!(block_ista_solve(&block, &a, &opts).is_err());
    }
}
