use std::collections::{BTreeMap, BTreeSet};

use beamnet::baseline::{draw_probes, one_sided_from_beamspace};
use beamnet::channel::{beamspace, FrequencyChannel};
use beamnet::codebook::Codebook;
use beamnet::netsched::{
    assign_frequency_sets, baseline_receive, mmv_receive, plan_rounds, run_alignment, AlignmentConfig, Incoming,
    Method, NetworkChannels,
};
use beamnet::pilots::{design_pilot, flat_spectrum_sequence, PilotSpec, WeightVector};
use beamnet::seed::rng_from;
use beamnet::sensing::{complex_noise, draw_beam_weights};
use beamnet::C64;
use ndarray::Array2;
use rand::Rng;

fn covered_pairs(k: usize) -> (usize, BTreeMap<(usize, usize), usize>) {
    let plan = plan_rounds(k).unwrap();
    let mut seen = BTreeMap::new();
    for p in &plan.rounds {
        let t: BTreeSet<_> = p.transmitters.iter().collect();
        let r: BTreeSet<_> = p.receivers.iter().collect();
        assert!(t.is_disjoint(&r));
        assert!(p.transmitters.iter().chain(&p.receivers).all(|&d| d < k), "dummy id leaked");
        for &(a, b) in &p.pairs {
            assert!(t.contains(&a) && r.contains(&b));
            *seen.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    (plan.rounds.len(), seen)
}

#[test]
fn small_plans() {
    let p = plan_rounds(2).unwrap();
    assert_eq!(p.rounds.len(), 1);
    assert_eq!((p.rounds[0].transmitters.clone(), p.rounds[0].receivers.clone()), (vec![0], vec![1]));
    assert_eq!(plan_rounds(8).unwrap().rounds.len(), 3);
    let (rounds, seen) = covered_pairs(5);
    assert_eq!(rounds, 3);
    assert_eq!(seen.len(), 10);
    assert!(seen.values().all(|&c| c == 1));
    assert!(plan_rounds(1).is_err());
    assert!(plan_rounds(0).is_err());
}

#[test]
fn every_network_size_is_covered_exactly_once() {
    for k in 2..=16 {
        let (rounds, seen) = covered_pairs(k);
        let want = (k as f64).log2().ceil() as usize;
        assert_eq!(rounds, want, "K={k}");
        assert_eq!(seen.len(), k * (k - 1) / 2, "K={k}");
        assert!(seen.values().all(|&c| c == 1), "K={k}");
        assert_eq!(Method::Mmv.rounds_for(k), want);
        assert_eq!(Method::Baseline.rounds_for(k), 2 * want);
    }
}

#[test]
fn pilot_budget_of_an_eight_device_network() {
    let q = 50;
    assert_eq!(Method::Mmv.rounds_for(8) * q, 150);
    assert_eq!(Method::Baseline.rounds_for(8) * q, 300);
}

#[test]
fn frequency_assignment() {
    let a = assign_frequency_sets(&[0, 1, 2, 3], 1024, 16).unwrap();
    let mut all = BTreeSet::new();
    for (d, fa) in &a {
        assert_eq!(fa.index, *d);
        assert_eq!(fa.bins.len(), 16);
        for &b in &fa.bins {
            assert!(all.insert(b));
        }
    }
    assert_eq!(assign_frequency_sets(&[9], 64, 4).unwrap()[&9].bins, (0..4).map(|l| l * 16).collect::<Vec<_>>());

    let ids: Vec<usize> = (0..16).collect();
    let full = assign_frequency_sets(&ids, 64, 4).unwrap();
    let union: BTreeSet<usize> = full.values().flat_map(|fa| fa.bins.iter().copied()).collect();
    assert_eq!(union, (0..64).collect());
    assert_eq!(full.values().map(|fa| fa.bins.len()).sum::<usize>(), 64);

    let err = assign_frequency_sets(&(0..17).collect::<Vec<_>>(), 64, 4).unwrap_err();
    assert!(err.to_string().contains("M/M_s"));
}

fn weights(ms: usize) -> WeightVector {
    flat_spectrum_sequence(ms, 0.5, 100_000, &mut rng_from(40 + ms as u64)).unwrap()
}

fn config(q: usize, ms: usize, noise: f64) -> AlignmentConfig {
    AlignmentConfig {
        num_measurements: q,
        active_bins: ms,
        pilot_energy: 64.0,
        noise_power: noise,
        gamma_scale: 1.0,
        max_iter: 3000,
        tol: 1e-10,
        weights: weights(ms),
    }
}

fn random_freq(n: usize, m: usize, rng: &mut impl Rng) -> FrequencyChannel {
    FrequencyChannel {
        bins: (0..m)
            .map(|_| Array2::from_shape_simple_fn((n, n), || C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
            .collect(),
    }
}

fn network(k: usize, n: usize, m: usize, seed: u64) -> (NetworkChannels, BTreeMap<(usize, usize), FrequencyChannel>) {
    let cb = Codebook::dft(n);
    let mut rng = rng_from(seed);
    let mut net = NetworkChannels::new(k, n, m);
    let mut raw = BTreeMap::new();
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let fc = random_freq(n, m, &mut rng);
                net.insert(a, b, beamspace(&fc, &cb).unwrap()).unwrap();
                raw.insert((a, b), fc);
            }
        }
    }
    (net, raw)
}

#[test]
fn two_devices_noiseless_match_exhaustive_search() {
    let (n, m, ms) = (4, 64, 4);
    for seed in 0..5 {
        let (net, raw) = network(2, n, m, seed);
        let cfg = config(32, ms, 0.0);
        let out = run_alignment(&net, &plan_rounds(2).unwrap(), Method::Mmv, &cfg, seed).unwrap();
        assert_eq!(out.rounds_used, 1);

        // Exhaustive search over beam pairs, straight from the antenna-domain channel.
        let cb = Codebook::dft(n);
        let pilot = design_pilot(&PilotSpec::new(m, ms, 0, 64.0).unwrap(), &cfg.weights).unwrap();
        let fc = &raw[&(0, 1)];
        let mut best = ((0, 0), -1.0);
        for t in 0..n {
            for r in 0..n {
                let (ct, cr) = (cb.column(t), cb.column(r));
                let e: f64 = pilot
                    .active_set
                    .iter()
                    .map(|&b| (cr.mapv(|z| z.conj()).dot(&fc.bins[b].dot(&ct)) * pilot.spectrum[b]).norm_sqr())
                    .sum();
                if e > best.1 {
                    best = ((t, r), e);
                }
            }
        }
        assert_eq!(out.table.get(0, 1).unwrap().beams, Some(best.0), "seed {seed}");
    }
}

#[test]
fn full_runs_fill_the_table_in_the_expected_rounds() {
    let (n, m) = (4, 64);
    let (net, _) = network(4, n, m, 9);
    let plan = plan_rounds(4).unwrap();
    let cfg = config(12, 4, 1e-3);
    for (method, rounds) in [(Method::Mmv, 2), (Method::Baseline, 4)] {
        let out = run_alignment(&net, &plan, method, &cfg, 3).unwrap();
        assert_eq!(out.rounds_used, rounds, "{method}");
        assert!(out.table.is_complete());
        assert!((0..4).all(|d| out.table.get(d, d).is_none()));
        assert_eq!(out.table.iter().count(), 12);
        let again = run_alignment(&net, &plan, method, &cfg, 3).unwrap();
        assert_eq!(again.table, out.table);
    }
}

#[test]
fn concurrent_transmitters_superpose_without_crosstalk() {
    let (n, m, ms, q) = (4, 256, 16, 10);
    let (net, _) = network(3, n, m, 21);
    let cfg = config(q, ms, 1e-2);
    let assign = assign_frequency_sets(&[0, 1], m, ms).unwrap();
    let pilots: Vec<_> = (0..2)
        .map(|d| design_pilot(&PilotSpec::new(m, ms, assign[&d].index, 64.0).unwrap(), &cfg.weights).unwrap())
        .collect();
    let w: Vec<_> = (0..3).map(|d| draw_beam_weights(q, n, &mut rng_from(100 + d)).unwrap()).collect();
    let noise = complex_noise(q, m, cfg.noise_power, &mut rng_from(7));
    let inc = |d: usize| Incoming { device: d, pilot: &pilots[d], weights: &w[d] };

    let both = mmv_receive(&net, 2, &w[2], &[inc(0), inc(1)], &noise, cfg.noise_power, &cfg).unwrap();
    for d in 0..2 {
        let alone = mmv_receive(&net, 2, &w[2], &[inc(d)], &noise, cfg.noise_power, &cfg).unwrap();
        let (x, y) = (&both[d].1.x, &alone[0].1.x);
        let diff = (x - y).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let size = y.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!(diff <= 1e-10 * size, "device {d}: {}", diff / size);
    }

    let mut os = BTreeMap::new();
    for a in 0..2 {
        os.insert((a, 2), one_sided_from_beamspace(net.get(a, 2).unwrap()));
    }
    let probes: Vec<_> = (0..2).map(|d| draw_probes(q, n, &mut rng_from(200 + d as u64)).unwrap()).collect();
    let bi = |d: usize| (d, &pilots[d], &probes[d]);
    let both = baseline_receive(&os, 2, &[bi(0), bi(1)], &noise, cfg.noise_power, &cfg).unwrap();
    for d in 0..2 {
        let alone = baseline_receive(&os, 2, &[bi(d)], &noise, cfg.noise_power, &cfg).unwrap();
        for (a, b) in both[d].1.gain_per_beam.iter().zip(&alone[0].1.gain_per_beam) {
            assert!((a - b).abs() <= 1e-10 * b.abs().max(1e-30));
        }
    }
}

#[test]
fn missing_links_and_mismatched_plans_are_errors() {
    let (n, m) = (4, 64);
    let mut net = NetworkChannels::new(3, n, m);
    let cfg = config(8, 4, 0.0);
    assert!(run_alignment(&net, &plan_rounds(3).unwrap(), Method::Mmv, &cfg, 0).is_err());
    let (full, _) = network(3, n, m, 1);
    assert!(run_alignment(&full, &plan_rounds(4).unwrap(), Method::Mmv, &cfg, 0).is_err());
    let wrong = beamspace(&random_freq(n, 32, &mut rng_from(1)), &Codebook::dft(n)).unwrap();
    assert!(net.insert(0, 1, wrong).is_err());
}
