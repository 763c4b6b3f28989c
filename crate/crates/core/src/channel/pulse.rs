use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Root-raised-cosine pulse pair; the tx/rx cascade is a raised cosine.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub rolloff: f64,
    /// One-sided truncation in symbol periods.
    pub span: u32,
    pub symbol_period: f64,
}

impl PulseSpec {
    pub fn new(rolloff: f64, span: u32, symbol_period: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rolloff) {
            return Err(domain(format!("rolloff {rolloff} outside [0, 1]")));
        }
        if span < 1 {
            return Err(domain("pulse span must be at least one symbol"));
        }
        if !(symbol_period > 0.0) {
            return Err(domain("symbol period must be positive"));
        }
        Ok(Self { rolloff, span, symbol_period })
    }

    /// Default pulse for bandwidth `b`: rolloff 0.25, span 8, `T = 1/b`.
    pub fn for_bandwidth(b: f64) -> Result<Self> {
        Self::new(0.25, 8, 1.0 / b)
    }

    /// Combined tx/rx response at delay `t`, zero beyond the span.
    pub fn combined(&self, t: f64) -> f64 {
        if t.abs() > self.span as f64 * self.symbol_period {
            return 0.0;
        }
        raised_cosine(t, self.symbol_period, self.rolloff)
    }

    /// Transmit (or receive) pulse at `t`, zero beyond the span.
    pub fn single(&self, t: f64) -> f64 {
        if t.abs() > self.span as f64 * self.symbol_period {
            return 0.0;
        }
        root_raised_cosine(t, self.symbol_period, self.rolloff)
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

/// Raised cosine with unit peak and zero crossings at nonzero multiples of `t_sym`.
pub fn raised_cosine(t: f64, t_sym: f64, rolloff: f64) -> f64 {
    let x = t / t_sym;
    let d = 1.0 - (2.0 * rolloff * x).powi(2);
    if d.abs() < 1e-10 {
        PI / 4.0 * sinc(1.0 / (2.0 * rolloff))
    } else {
        sinc(x) * (PI * rolloff * x).cos() / d
    }
}

/// Unit-energy root raised cosine.
pub fn root_raised_cosine(t: f64, t_sym: f64, rolloff: f64) -> f64 {
    let a = rolloff;
    let x = t / t_sym;
    let s = 1.0 / t_sym.sqrt();
    if x.abs() < 1e-12 {
        return s * (1.0 - a + 4.0 * a / PI);
    }
    if a > 0.0 && ((4.0 * a * x).abs() - 1.0).abs() < 1e-10 {
        let q = PI / (4.0 * a);
        return s * a / 2f64.sqrt() * ((1.0 + 2.0 / PI) * q.sin() + (1.0 - 2.0 / PI) * q.cos());
    }
    let num = (PI * x * (1.0 - a)).sin() + 4.0 * a * x * (PI * x * (1.0 + a)).cos();
    let den = PI * x * (1.0 - (4.0 * a * x).powi(2));
    s * num / den
}
