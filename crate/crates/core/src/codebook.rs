//! Beam codebooks for half-wavelength uniform linear arrays.

use std::f64::consts::PI;

use ndarray::{Array1, Array2};

use crate::error::{dimension, Result};
use crate::C64;

/// A square codebook `C = [c_0, …, c_{N-1}]` whose columns are beams.
#[derive(Clone, Debug)]
pub struct Codebook {
    matrix: Array2<C64>,
}

impl Codebook {
    /// Normalised DFT codebook, `[C]_{n,i} = e^{-j2π n i / N} / √N`.
    pub fn dft(n: usize) -> Self {
        let scale = 1.0 / (n as f64).sqrt();
        let matrix = Array2::from_shape_fn((n, n), |(row, col)| {
            C64::from_polar(scale, -2.0 * PI * ((row * col) % n) as f64 / n as f64)
        });
        Self { matrix }
    }

    pub fn from_matrix(matrix: Array2<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(dimension(format!(
                "codebook must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { matrix })
    }

    pub fn size(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn column(&self, i: usize) -> Array1<C64> {
        self.matrix.column(i).to_owned()
    }
}

/// Maps a DFT index to the signed frequency index in `(-N/2, N/2]`.
pub fn wrap_index(i: usize, n: usize) -> i64 {
    let i = (i % n) as i64;
    let n = n as i64;
    if 2 * i > n {
        i - n
    } else {
        i
    }
}

/// Spatial frequency `u = sin θ` radiated by transmit beam `i`.
///
/// A receiver combining with the same column listens toward `-u`, because
/// the combiner enters the link as `uᴴ`.
pub fn beam_center_u(i: usize, n: usize) -> f64 {
    2.0 * wrap_index(i, n) as f64 / n as f64
}

/// Codebook index whose receive direction mirrors transmit beam `i`.
pub fn mirror_index(i: usize, n: usize) -> usize {
    (n - i % n) % n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dft_codebook_is_unitary() {
        let c = Codebook::dft(8);
        let g = c.matrix().t().mapv(|z| z.conj()).dot(c.matrix());
        for ((i, j), v) in g.indexed_iter() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - C64::new(expect, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn wrap_and_mirror() {
        assert_eq!(wrap_index(0, 32), 0);
        assert_eq!(wrap_index(16, 32), 16);
        assert_eq!(wrap_index(17, 32), -15);
        assert_eq!(mirror_index(0, 16), 0);
        assert_eq!(mirror_index(3, 16), 13);
        assert!((beam_center_u(8, 32) - 0.5).abs() < 1e-15);
    }
}
