use ndarray::{Array1, Array2};

use super::discrete::DiscreteChannel;
use crate::codebook::Codebook;
use crate::dft::{fft_in_place, ifft_in_place};
use crate::error::{domain, Result};
use crate::C64;

/// Per-bin channel matrices `H̃[m]`, `m = 0..M`.
#[derive(Clone, Debug)]
pub struct FrequencyChannel {
    pub bins: Vec<Array2<C64>>,
}

impl FrequencyChannel {
    pub fn num_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.bins.first().map(|b| b.dim()).unwrap_or((0, 0))
    }

    /// Inverse DFT, keeping the first `len` taps.
    pub fn to_taps(&self, len: usize) -> Vec<Array2<C64>> {
        let m = self.bins.len();
        let (r, c) = self.shape();
        let mut taps = vec![Array2::<C64>::zeros((r, c)); len.min(m)];
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for i in 0..r {
            for j in 0..c {
                for (k, b) in self.bins.iter().enumerate() {
                    buf[k] = b[[i, j]];
                }
                ifft_in_place(&mut buf);
                for (n, t) in taps.iter_mut().enumerate() {
                    t[[i, j]] = buf[n];
                }
            }
        }
        taps
    }
}

/// Entrywise `M`-point DFT of the zero-padded taps.
pub fn to_frequency_domain(ch: &DiscreteChannel, m: usize) -> Result<FrequencyChannel> {
    if ch.taps.is_empty() {
        return Err(domain("channel has no taps"));
    }
    if m < ch.taps.len() {
        return Err(domain(format!(
            "{m} bins cannot hold a channel of length {} (cyclic prefix too short)",
            ch.taps.len()
        )));
    }
    let (r, c) = ch.shape();
    let mut bins = vec![Array2::<C64>::zeros((r, c)); m];
    let mut buf = vec![C64::new(0.0, 0.0); m];
    for i in 0..r {
        for j in 0..c {
            buf.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            for (n, t) in ch.taps.iter().enumerate() {
                buf[n] = t[[i, j]];
            }
            fft_in_place(&mut buf);
            for (b, v) in bins.iter_mut().zip(&buf) {
                b[[i, j]] = *v;
            }
        }
    }
    Ok(FrequencyChannel { bins })
}

/// Channel seen through every transmit/receive codebook pair.
///
/// `matrix` is `N² × M`; row `r = b·N + a` holds the frequency response of
/// transmit beam `b` combined with receive beam `a`, i.e. the column-major
/// vectorization of `Cᴴ H̃[m] C`.
#[derive(Clone, Debug)]
pub struct BeamspaceChannel {
    pub matrix: Array2<C64>,
    pub num_antennas: usize,
}

impl BeamspaceChannel {
    pub fn row_index(tx_beam: usize, rx_beam: usize, n: usize) -> usize {
        tx_beam * n + rx_beam
    }

    /// `(tx_beam, rx_beam)` of a row.
    pub fn beam_pair(row: usize, n: usize) -> (usize, usize) {
        (row / n, row % n)
    }

    /// Row energies over the given bins.
    pub fn row_energies(&self, bins: &[usize]) -> Array1<f64> {
        Array1::from_iter(
            self.matrix
                .rows()
                .into_iter()
                .map(|row| bins.iter().map(|&m| row[m].norm_sqr()).sum()),
        )
    }
}

pub fn beamspace(fc: &FrequencyChannel, codebook: &Codebook) -> Result<BeamspaceChannel> {
    let n = codebook.size();
    if fc.shape() != (n, n) {
        return Err(domain(format!(
            "channel shape {:?} does not match codebook size {n}",
            fc.shape()
        )));
    }
    let c = codebook.matrix();
    let ch = c.t().mapv(|v| v.conj());
    let mut out = Array2::<C64>::zeros((n * n, fc.num_bins()));
    for (m, h) in fc.bins.iter().enumerate() {
        let g = ch.dot(h).dot(c);
        for b in 0..n {
            for a in 0..n {
                out[[b * n + a, m]] = g[[a, b]];
            }
        }
    }
    Ok(BeamspaceChannel { matrix: out, num_antennas: n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chan(taps: Vec<Array2<C64>>) -> DiscreteChannel {
        DiscreteChannel { taps, symbol_period: 1.0, reference_delay: 0.0 }
    }

    fn eye(n: usize) -> Array2<C64> {
        Array2::from_diag(&Array1::from_elem(n, C64::new(1.0, 0.0)))
    }

    #[test]
    fn delta_and_shift() {
        let fc = to_frequency_domain(&chan(vec![eye(3)]), 8).unwrap();
        assert!(fc.bins.iter().all(|b| (b - &eye(3)).iter().all(|v| v.norm() < 1e-14)));
        let fc = to_frequency_domain(&chan(vec![Array2::zeros((3, 3)), eye(3)]), 8).unwrap();
        for (m, b) in fc.bins.iter().enumerate() {
            let w = C64::from_polar(1.0, -2.0 * std::f64::consts::PI * m as f64 / 8.0);
            assert!((b - &eye(3).mapv(|v| v * w)).iter().all(|v| v.norm() < 1e-14));
        }
    }

    #[test]
    fn too_few_bins_is_rejected() {
        let ch = chan(vec![eye(2); 5]);
        assert!(matches!(to_frequency_domain(&ch, 4), Err(crate::Error::Domain(_))));
    }

    #[test]
    fn identity_codebook_vectorizes() {
        let h = Array2::from_shape_fn((2, 2), |(i, j)| C64::new(i as f64, j as f64));
        let fc = FrequencyChannel { bins: vec![h.clone()] };
        let cb = Codebook::from_matrix(eye(2)).unwrap();
        let bs = beamspace(&fc, &cb).unwrap();
        // Column-major: (0,0), (1,0), (0,1), (1,1).
        let expect = [h[[0, 0]], h[[1, 0]], h[[0, 1]], h[[1, 1]]];
        for (r, e) in expect.iter().enumerate() {
            assert_eq!(bs.matrix[[r, 0]], *e);
        }
    }

    #[test]
    fn rank_one_on_atoms_is_one_sparse() {
        let n = 4;
        let cb = Codebook::dft(n);
        let (a, b) = (1, 2);
        let ca = cb.column(a);
        let cbv = cb.column(b);
        let h = Array2::from_shape_fn((n, n), |(i, j)| ca[i] * cbv[j].conj());
        let bs = beamspace(&FrequencyChannel { bins: vec![h] }, &cb).unwrap();
        for r in 0..n * n {
            let v = bs.matrix[[r, 0]].norm();
            if r == BeamspaceChannel::row_index(b, a, n) {
                assert!((v - 1.0).abs() < 1e-12);
            } else {
                assert!(v < 1e-12);
            }
        }
        assert_eq!(BeamspaceChannel::beam_pair(9, 4), (2, 1));
    }

    #[test]
    fn dimension_mismatch() {
        let fc = FrequencyChannel { bins: vec![eye(3)] };
        assert!(beamspace(&fc, &Codebook::dft(4)).is_err());
    }
}
