//! Parks–McClellan equiripple design of symmetric real lowpass filters.

use std::f64::consts::PI;

use crate::error::{domain, Result};

/// A band on normalized frequency `f ∈ [0, 0.5]` with desired amplitude and weight.
#[derive(Clone, Copy, Debug)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
    pub desired: f64,
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct RemezDesign {
    /// Symmetric impulse response of the requested length.
    pub taps: Vec<f64>,
    /// Final weighted equiripple error.
    pub deviation: f64,
    pub iterations: usize,
}

/// Offsets `|n − (N−1)/2|` of the distinct symmetric tap pairs.
fn offsets(n: usize) -> Vec<f64> {
    let c = (n as f64 - 1.0) / 2.0;
    (0..n.div_ceil(2)).map(|k| c - k as f64).rev().collect()
}

/// Zero-phase amplitude `A(f) = Σ_k a_k cos(2π f d_k)`.
fn amplitude(coef: &[f64], d: &[f64], f: f64) -> f64 {
    coef.iter().zip(d).map(|(a, dk)| a * (2.0 * PI * f * dk).cos()).sum()
}

fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Equiripple symmetric filter with `n` taps via the Remez exchange.
///
/// The amplitude is expanded on `cos(2π f d_k)` with `d_k` the half-integer
/// or integer tap offsets, which covers both odd and even lengths without
/// a change of variables.
pub fn remez_lowpass(n: usize, bands: &[Band], grid_density: usize) -> Result<RemezDesign> {
    if n < 2 {
        return Err(domain("filter length must be at least 2"));
    }
    for b in bands {
        if !(0.0..=0.5).contains(&b.lo) || !(b.lo..=0.5).contains(&b.hi) || b.weight <= 0.0 {
            return Err(domain(format!("invalid band {b:?}")));
        }
    }
    let d = offsets(n);
    let r = d.len();
    let step = 0.5 / (grid_density * n) as f64;
    // Even lengths force a zero at f = 0.5, which would make the system singular.
    let top = if n.is_multiple_of(2) { 0.5 - step } else { 0.5 };
    let bands: Vec<Band> = bands.iter().map(|b| Band { hi: b.hi.min(top), lo: b.lo.min(top), ..*b }).collect();
    let mut grid: Vec<(f64, f64, f64)> = Vec::new();
    for b in &bands {
        let pts = ((b.hi - b.lo) / step).ceil().max(1.0) as usize;
        for i in 0..=pts {
            grid.push((b.lo + (b.hi - b.lo) * i as f64 / pts as f64, b.desired, b.weight));
        }
    }
    if grid.len() < r + 1 {
        return Err(domain("frequency grid too coarse for the filter length"));
    }
    let mut ext: Vec<usize> = (0..=r).map(|i| i * (grid.len() - 1) / r).collect();
    let mut coef = vec![0.0; r];
    let mut delta = 0.0;
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        let mut a = Vec::with_capacity(r + 1);
        let mut rhs = Vec::with_capacity(r + 1);
        for (i, &gi) in ext.iter().enumerate() {
            let (f, des, w) = grid[gi];
            let mut row: Vec<f64> = d.iter().map(|dk| (2.0 * PI * f * dk).cos()).collect();
            row.push(if i % 2 == 0 { 1.0 } else { -1.0 } / w);
            a.push(row);
            rhs.push(des);
        }
        let sol = solve(a, rhs).ok_or_else(|| domain("singular Remez system"))?;
        coef.copy_from_slice(&sol[..r]);
        delta = sol[r].abs();

        let err: Vec<f64> = grid.iter().map(|&(f, des, w)| w * (des - amplitude(&coef, &d, f))).collect();
        // Local extrema of the error, band edges included.
        let mut cand: Vec<usize> = Vec::new();
        let mut start = 0;
        for b in &bands {
            let pts = ((b.hi - b.lo) / step).ceil().max(1.0) as usize + 1;
            let end = start + pts;
            for i in start..end {
                let e = err[i].abs();
                let edge = i == start || i + 1 == end;
                let left = if i > start { err[i - 1].abs() } else { -1.0 };
                let right = if i + 1 < end { err[i + 1].abs() } else { -1.0 };
                if e > 0.0 && (edge || e >= left && e >= right) {
                    cand.push(i);
                }
            }
            start = end;
        }
        // Merge runs with equal sign, keeping the larger magnitude.
        let mut merged: Vec<usize> = Vec::new();
        for i in cand {
            match merged.last() {
                Some(&j) if err[j].signum() == err[i].signum() => {
                    if err[i].abs() > err[j].abs() {
                        *merged.last_mut().unwrap() = i;
                    }
                }
                _ => merged.push(i),
            }
        }
        while merged.len() > r + 1 {
            if err[merged[0]].abs() < err[*merged.last().unwrap()].abs() {
                merged.remove(0);
            } else {
                merged.pop();
            }
        }
        let max_err = err.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        if merged.len() < r + 1 {
            break;
        }
        let converged = (max_err - delta) <= 1e-9 * max_err.max(1e-300);
        ext = merged;
        if converged {
            break;
        }
    }

    let mut taps = vec![0.0; n];
    let c = (n as f64 - 1.0) / 2.0;
    for (k, (&a, &dk)) in coef.iter().zip(&d).enumerate() {
        let _ = k;
        if dk == 0.0 {
            taps[c as usize] = a;
        } else {
            taps[(c - dk).round() as usize] = a / 2.0;
            taps[(c + dk).round() as usize] = a / 2.0;
        }
    }
    Ok(RemezDesign { taps, deviation: delta, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn response(h: &[f64], f: f64) -> f64 {
        let c = (h.len() as f64 - 1.0) / 2.0;
        h.iter().enumerate().map(|(n, v)| v * (2.0 * PI * f * (n as f64 - c)).cos()).sum()
    }

    #[test]
    fn equiripple_lowpass_odd_and_even() {
        for n in [15usize, 16, 31, 32] {
            let bands = [
                Band { lo: 0.0, hi: 0.1, desired: 1.0, weight: 1.0 },
                Band { lo: 0.2, hi: 0.5, desired: 0.0, weight: 1.0 },
            ];
            let d = remez_lowpass(n, &bands, 16).unwrap();
            let h = &d.taps;
            for i in 0..n {
                assert!((h[i] - h[n - 1 - i]).abs() < 1e-14);
            }
            let mut pass = 0.0f64;
            let mut stop = 0.0f64;
            for i in 0..=2000 {
                let f = 0.5 * i as f64 / 2000.0;
                let a = response(h, f);
                if f <= 0.1 {
                    pass = pass.max((a - 1.0).abs());
                } else if f >= 0.2 {
                    stop = stop.max(a.abs());
                }
            }
            // Equal weights give equal ripple in both bands, up to grid error.
            assert!((pass - d.deviation).abs() < 0.02 * d.deviation + 1e-9, "n={n} {pass} {}", d.deviation);
            assert!((stop - d.deviation).abs() < 0.02 * d.deviation + 1e-9, "n={n} {stop} {}", d.deviation);
            assert!(d.deviation < 0.05);
        }
    }
}
