use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use beamnet::channel::to_frequency_domain;
use beamnet::comm::{compute_link_metrics, element_reference, frequency_flatness, steer_beam};
use beamnet::export;
use beamnet::harness::{
    aggregate, evaluate_grid, pairing_beams, pilot_weights, radio_params, receiver_grid, run_on_scenario,
    run_trial, single_link_estimate, sweep_points, ExperimentConfig, Scenario, SweepPoint,
};
use beamnet::netsched::Method;
use beamnet::pilots::{design_pilot, flat_spectrum_sequence, PilotSpec};
use beamnet::seed::derived_rng;
use beamnet::{Error, Result};

#[derive(Parser)]
#[command(name = "beamnet", version, about = "Network-wide sub-THz beam alignment simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configured master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Design one constant-envelope comb pilot.
    DesignPilots {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        ms: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Sequence energy `E`.
        #[arg(long, default_value_t = 1.0)]
        energy: f64,
        #[arg(long, default_value_t = beamnet::pilots::DEFAULT_FLATNESS_TOL_DB)]
        tol_db: f64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// One network alignment trial at the base operating point.
    RunAlignment {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        method: Option<Method>,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Shorthand for `run-alignment --method baseline`.
    RunBaseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 0)]
        trial: usize,
    },
    /// Receiver-grid SE / MFB study and frequency flatness of link 0 → 1.
    Evaluate {
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo sweep over the configured axes with aggregate tables.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
    },
}

fn load(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(p: &Path) -> Result<&Path> {
    fs::create_dir_all(p)?;
    Ok(p)
}

fn design_pilots(m: usize, ms: usize, k: usize, seed: u64, energy: f64, tol: f64, out: &Path) -> Result<()> {
    let spec = PilotSpec::new(m, ms, k, energy).map_err(|e| Error::Config(e.to_string()))?;
    let w = flat_spectrum_sequence(ms, tol, beamnet::pilots::DEFAULT_FLATNESS_MAX_ITER, &mut derived_rng(seed, &[0xF1A7, ms as u64]))?;
    let pilot = design_pilot(&spec, &w)?;
    let dir = out_dir(out)?;
    export::write_pilot(&dir.join("pilot.csv"), &pilot)?;
    export::write_spectrum(&dir.join("spectrum.csv"), &pilot)?;
    let mut cfg = ExperimentConfig { seed, ..Default::default() };
    cfg.radio.num_bins = m;
    cfg.alignment.active_bins = ms;
    cfg.alignment.flatness_tol_db = tol;
    export::write_manifest(dir, "design-pilots", &cfg)?;
    eprintln!(
        "pilot k={k}: {} samples, flatness {:.3} dB after {} iterations",
        pilot.samples.len(),
        w.flatness_db,
        w.iterations
    );
    Ok(())
}

fn run_alignment(common: &Common, method: Option<Method>, trial: usize, name: &str) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(m) = method {
        cfg.method = m;
    }
    let sc = Scenario::build(&cfg)?;
    let point = SweepPoint::base(&cfg);
    let weights = pilot_weights(&cfg, point.active_bins)?;
    let res = run_trial(&sc, &point, &weights, trial)?;
    let dir = out_dir(&common.out)?;
    export::write_table(&dir.join("table.csv"), &res.table)?;
    export::write_rows(&dir.join("records.csv"), &res.records)?;
    export::write_metrics(&dir.join("metrics.csv"), &cfg.pairing(), &res.link_metrics)?;
    export::write_channel(&dir.join("channel.csv"), &sc.links[&(0, 1)])?;
    if cfg.method == Method::Mmv {
        let est = single_link_estimate(&sc, 0, 1, &point, &weights, trial)?;
        export::write_estimates(&dir.join("estimates.csv"), &est)?;
        export::write_objective_trace(&dir.join("objective.csv"), &est.objective_trace)?;
    }
    export::write_manifest(dir, name, &cfg)?;
    eprintln!(
        "{} alignment: {} rounds, {} pilots, sum SE {:.3} (genie {:.3})",
        cfg.method,
        res.rounds_used,
        res.rounds_used * point.measurements,
        res.sum_se,
        res.genie_sum_se
    );
    Ok(())
}

fn evaluate(common: &Common) -> Result<()> {
    let cfg = load(common)?;
    let sc = Scenario::build(&cfg)?;
    let dir = out_dir(&common.out)?;
    let tx = cfg.grid_tx_position();
    let points = evaluate_grid(&cfg, tx, &receiver_grid(&cfg, tx, cfg.grid.count, cfg.grid.margin)?)?;
    export::write_grid(&dir.join("grid.csv"), &points)?;

    let (bt, br) = sc.genie[&(0, 1)];
    let ch = &sc.links[&(0, 1)];
    let fc = to_frequency_domain(ch, cfg.radio.num_bins)?;
    let e0 = element_reference(cfg.radio.num_antennas);
    let v = steer_beam(&sc.taper, &sc.codebook, bt)?;
    let u = steer_beam(&sc.taper, &sc.codebook, br)?;
    let pre = frequency_flatness(&fc, &e0, &e0)?;
    let post = frequency_flatness(&fc, &v, &u)?;
    export::write_flatness(&dir.join("flatness_pre.csv"), &pre)?;
    export::write_flatness(&dir.join("flatness_post.csv"), &post)?;
    export::write_channel(&dir.join("channel.csv"), ch)?;

    let pairing = cfg.pairing();
    let beams = pairing_beams(&sc, &pairing, |t, r| sc.genie.get(&(t, r)).copied())?;
    let (metrics, sum) = compute_link_metrics(&sc.links, &pairing, &beams, &radio_params(&cfg, cfg.radio.tx_power_dbm))?;
    export::write_metrics(&dir.join("metrics.csv"), &pairing, &metrics)?;
    export::write_manifest(dir, "evaluate", &cfg)?;

    let good = points.iter().filter(|p| p.se >= 0.9 * p.mfb_se).count();
    eprintln!(
        "grid: {good}/{} positions within 90% of MFB; link 0->1 flatness std {:.2} dB -> {:.2} dB; genie sum SE {sum:.3}",
        points.len(),
        pre.std_db,
        post.std_db
    );
    Ok(())
}

fn sweep(common: &Common, trials: Option<usize>) -> Result<()> {
    let mut cfg = load(common)?;
    if let Some(t) = trials {
        cfg.trials = t;
        cfg.validate()?;
    }
    let sc = Scenario::build(&cfg)?;
    let results = run_on_scenario(&sc, &sweep_points(&cfg))?;
    let agg = aggregate(&results)?;
    let dir = out_dir(&common.out)?;
    export::write_results(dir, &results, &agg)?;
    export::write_manifest(dir, "sweep", &cfg)?;
    eprintln!("sweep: {} trials, {} records", results.trials.len(), results.records().count());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.command {
        Command::DesignPilots { m, ms, k, seed, energy, tol_db, out } => {
            design_pilots(*m, *ms, *k, *seed, *energy, *tol_db, out)
        }
        Command::RunAlignment { common, method, trial } => run_alignment(common, *method, *trial, "run-alignment"),
        Command::RunBaseline { common, trial } => run_alignment(common, Some(Method::Baseline), *trial, "run-baseline"),
        Command::Evaluate { common } => evaluate(common),
        Command::Sweep { common, trials } => sweep(common, *trials),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
