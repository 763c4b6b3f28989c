//! Thin wrappers over `rustfft` with the sign and scaling conventions used
//! throughout the crate: forward transforms use `e^{-j2πmn/M}` without
//! scaling, inverse transforms carry the `1/M` factor.

use std::cell::RefCell;

use rustfft::FftPlanner;

use crate::C64;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

pub fn fft_in_place(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    plan.process(buf);
}

pub fn ifft_in_place(buf: &mut [C64]) {
    if buf.is_empty() {
        return;
    }
    let plan = PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(buf.len()));
    plan.process(buf);
    let scale = 1.0 / buf.len() as f64;
    for z in buf.iter_mut() {
        *z *= scale;
    }
}

pub fn fft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    fft_in_place(&mut buf);
    buf
}

pub fn ifft(x: &[C64]) -> Vec<C64> {
    let mut buf = x.to_vec();
    ifft_in_place(&mut buf);
    buf
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn naive_dft(x: &[C64]) -> Vec<C64> {
        let m = x.len();
        (0..m)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(n, &v)| v * C64::from_polar(1.0, -2.0 * PI * (k * n) as f64 / m as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_sign_convention() {
        let x: Vec<C64> = (0..12).map(|n| C64::new(n as f64, (n * n) as f64 * 0.1)).collect();
        let fast = fft(&x);
        let slow = naive_dft(&x);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-9);
        }
        let back = ifft(&fast);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
