use std::collections::BTreeMap;

use serde::Serialize;

use super::experiment::{AngleRecord, ResultSet};
use crate::error::{domain, Result};
use crate::netsched::Method;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaeRow {
    pub method: Method,
    pub tx_power_dbm: f64,
    pub active_bins: usize,
    pub measurements: usize,
    pub total_pilots: usize,
    /// Mean of one-sided (per-end) errors.
    pub mae_deg: f64,
    pub median_deg: f64,
    /// Mean over links of the two ends' average error.
    pub link_mae_deg: f64,
    pub fail_rate: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CdfRow {
    pub method: Method,
    pub tx_power_dbm: f64,
    pub active_bins: usize,
    pub measurements: usize,
    pub abs_err_deg: f64,
    pub cdf: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeRow {
    pub method: Method,
    pub tx_power_dbm: f64,
    pub active_bins: usize,
    pub measurements: usize,
    pub total_pilots: usize,
    pub mean_sum_se: f64,
    pub genie_sum_se: f64,
    pub fraction_of_genie: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Aggregates {
    pub mae_vs_q: Vec<MaeRow>,
    pub cdf: Vec<CdfRow>,
    pub sum_se_vs_total_pilots: Vec<SeRow>,
}

/// Groups sweep points; powers sort numerically and the tail carries
/// their exact bit pattern.
type Key = (Method, i64, usize, usize, u64);

fn key_of(method: Method, p: f64, ms: usize, q: usize) -> Key {
    (method, (p * 1e6).round() as i64, ms, q, p.to_bits())
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Fraction of samples `≤ x`.
pub fn empirical_cdf(samples: &[f64], x: f64) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().filter(|&&s| s <= x).count() as f64 / samples.len() as f64
}

pub fn aggregate(results: &ResultSet) -> Result<Aggregates> {
    if results.trials.is_empty() {
        return Err(domain("no results to aggregate"));
    }
    let mut groups: BTreeMap<_, Vec<&AngleRecord>> = BTreeMap::new();
    for r in results.records() {
        groups.entry(key_of(r.method, r.tx_power_dbm, r.active_bins, r.measurements)).or_default().push(r);
    }
    let mut out = Aggregates::default();
    for (key, recs) in &groups {
        let &(method, _, ms, q, p_bits) = key;
        let p = f64::from_bits(p_bits);
        let mut errs: Vec<f64> = recs.iter().map(|r| r.abs_err_deg).collect();
        let mae = errs.iter().sum::<f64>() / errs.len() as f64;
        let mut links: BTreeMap<(usize, usize, usize), (f64, usize)> = BTreeMap::new();
        for r in recs {
            let e = links.entry((r.trial, r.a, r.b)).or_insert((0.0, 0));
            e.0 += r.abs_err_deg;
            e.1 += 1;
        }
        let link_mae = links.values().map(|(s, c)| s / *c as f64).sum::<f64>() / links.len() as f64;
        let fails = recs.iter().filter(|r| !r.ok).count();
        let med = median(&mut errs);
        out.mae_vs_q.push(MaeRow {
            method,
            tx_power_dbm: p,
            active_bins: ms,
            measurements: q,
            total_pilots: recs[0].total_pilots,
            mae_deg: mae,
            median_deg: med,
            link_mae_deg: link_mae,
            fail_rate: fails as f64 / recs.len() as f64,
            samples: recs.len(),
        });
        let total = errs.len() as f64;
        for (i, e) in errs.iter().enumerate() {
            if i + 1 < errs.len() && errs[i + 1] == *e {
                continue;
            }
            out.cdf.push(CdfRow {
                method,
                tx_power_dbm: p,
                active_bins: ms,
                measurements: q,
                abs_err_deg: *e,
                cdf: (i + 1) as f64 / total,
            });
        }
    }

    let mut se: BTreeMap<_, Vec<(f64, f64, usize)>> = BTreeMap::new();
    for t in &results.trials {
        let p = &t.point;
        se.entry(key_of(p.method, p.tx_power_dbm, p.active_bins, p.measurements))
            .or_default()
            .push((t.sum_se, t.genie_sum_se, t.rounds_used * p.measurements));
    }
    for (key, v) in &se {
        let &(method, _, ms, q, p_bits) = key;
        let n = v.len() as f64;
        let mean = v.iter().map(|x| x.0).sum::<f64>() / n;
        let genie = v.iter().map(|x| x.1).sum::<f64>() / n;
        out.sum_se_vs_total_pilots.push(SeRow {
            method,
            tx_power_dbm: f64::from_bits(p_bits),
            active_bins: ms,
            measurements: q,
            total_pilots: v[0].2,
            mean_sum_se: mean,
            genie_sum_se: genie,
            fraction_of_genie: if genie > 0.0 { mean / genie } else { f64::NAN },
            trials: v.len(),
        });
    }
    Ok(out)
}
