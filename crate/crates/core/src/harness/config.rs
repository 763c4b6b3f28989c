use serde::{Deserialize, Serialize};

use crate::channel::Occluder;
use crate::error::{Error, Result};
use crate::netsched::Method;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoomConfig {
    pub width: f64,
    pub depth: f64,
    pub height: f64,
    pub reflection_magnitude: f64,
    pub reflection_phase_deg: f64,
    pub max_reflection_order: u32,
    pub occluders: Vec<Occluder>,
}

impl Default for RoomConfig {
    fn default() -> Self {
        Self {
            width: 10.0,
            depth: 10.0,
            height: 3.0,
            reflection_magnitude: 0.15,
            reflection_phase_deg: 180.0,
            max_reflection_order: 2,
            occluders: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub carrier_hz: f64,
    pub bandwidth_hz: f64,
    pub noise_psd_dbm_hz: f64,
    pub tx_power_dbm: f64,
    pub num_antennas: usize,
    /// Pilot / DFT length `M`.
    pub num_bins: usize,
    pub rolloff: f64,
    pub pulse_span: u32,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            carrier_hz: 100e9,
            bandwidth_hz: 2e9,
            noise_psd_dbm_hz: -174.0,
            tx_power_dbm: -15.0,
            num_antennas: 16,
            num_bins: 256,
            rolloff: 0.25,
            pulse_span: 8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlignmentSettings {
    /// Pilots per round `Q`.
    pub measurements: usize,
    pub active_bins: usize,
    pub gamma_scale: f64,
    pub max_iter: usize,
    pub tol: f64,
    pub flatness_tol_db: f64,
    pub flatness_max_iter: usize,
}

impl Default for AlignmentSettings {
    fn default() -> Self {
        Self {
            measurements: 32,
            active_bins: 16,
            gamma_scale: 1.0,
            max_iter: 500,
            tol: 1e-6,
            flatness_tol_db: 0.5,
            flatness_max_iter: 100_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CommSettings {
    pub beamwidth_deg: f64,
    pub ripple_db: f64,
    /// Disjoint (tx, rx) device pairs for sum-SE evaluation; empty means
    /// `(0,1), (2,3), …`.
    pub pairing: Vec<[usize; 2]>,
}

impl Default for CommSettings {
    fn default() -> Self {
        Self { beamwidth_deg: 14.0, ripple_db: crate::comm::DEFAULT_RIPPLE_DB, pairing: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub position: [f64; 3],
    /// Array axis; by default horizontal with broadside toward the room centre.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis: Option<[f64; 3]>,
}

/// Receiver-position study: a `count × count` grid `margin` metres inside
/// the walls, with the transmitter at `tx_position`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSettings {
    /// Defaults to the middle of the `y = 0` wall, 0.5 m into the room.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tx_position: Option<[f64; 3]>,
    pub count: usize,
    pub margin: f64,
}

impl Default for GridSettings {
    fn default() -> Self {
        Self { tx_position: None, count: 5, margin: 1.0 }
    }
}

/// Sweep axes; an empty axis falls back to the base setting.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub measurements: Vec<usize>,
    pub active_bins: Vec<usize>,
    pub tx_power_dbm: Vec<f64>,
    pub methods: Vec<Method>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub trials: usize,
    pub method: Method,
    pub room: RoomConfig,
    pub radio: RadioConfig,
    pub alignment: AlignmentSettings,
    pub comm: CommSettings,
    pub devices: Vec<DeviceConfig>,
    pub sweep: SweepConfig,
    pub grid: GridSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            trials: 4,
            method: Method::Mmv,
            room: RoomConfig::default(),
            radio: RadioConfig::default(),
            alignment: AlignmentSettings::default(),
            comm: CommSettings::default(),
            devices: default_layout(),
            sweep: SweepConfig::default(),
            grid: GridSettings::default(),
        }
    }
}

/// Eight devices spread over the default 10 m × 10 m × 3 m room.
pub fn default_layout() -> Vec<DeviceConfig> {
    [
        [1.5, 2.0, 1.2],
        [8.5, 2.5, 1.0],
        [3.0, 8.0, 1.4],
        [7.5, 7.5, 1.1],
        [5.0, 1.2, 1.3],
        [1.2, 5.5, 1.0],
        [8.8, 5.0, 1.5],
        [5.5, 8.8, 1.2],
    ]
    .into_iter()
    .map(|position| DeviceConfig { position, axis: None })
    .collect()
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| cfg_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg_err(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn num_devices(&self) -> usize {
        self.devices.len()
    }

    pub fn pairing(&self) -> Vec<(usize, usize)> {
        if self.comm.pairing.is_empty() {
            (0..self.num_devices() / 2).map(|p| (2 * p, 2 * p + 1)).collect()
        } else {
            self.comm.pairing.iter().map(|p| (p[0], p[1])).collect()
        }
    }

    pub fn grid_tx_position(&self) -> [f64; 3] {
        self.grid.tx_position.unwrap_or([self.room.width / 2.0, 0.5, 1.2])
    }

    pub fn measurements_axis(&self) -> Vec<usize> {
        or_base(&self.sweep.measurements, self.alignment.measurements)
    }

    pub fn active_bins_axis(&self) -> Vec<usize> {
        or_base(&self.sweep.active_bins, self.alignment.active_bins)
    }

    pub fn tx_power_axis(&self) -> Vec<f64> {
        or_base(&self.sweep.tx_power_dbm, self.radio.tx_power_dbm)
    }

    pub fn methods_axis(&self) -> Vec<Method> {
        or_base(&self.sweep.methods, self.method)
    }

    /// Checks every value against the preconditions of the modules it feeds.
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(cfg_err("trials must be at least 1"));
        }
        let k = self.num_devices();
        if k < 2 {
            return Err(cfg_err(format!("need at least two devices, got {k}")));
        }
        let r = &self.radio;
        if !(r.carrier_hz > 0.0 && r.bandwidth_hz > 0.0) {
            return Err(cfg_err("carrier and bandwidth must be positive"));
        }
        if r.num_antennas < 1 || r.num_bins < 1 {
            return Err(cfg_err("num_antennas and num_bins must be positive"));
        }
        if !(0.0..=1.0).contains(&r.rolloff) || r.pulse_span < 1 {
            return Err(cfg_err("rolloff must lie in [0, 1] and pulse_span be at least 1"));
        }
        let rm = &self.room;
        if !(rm.width > 0.0 && rm.depth > 0.0 && rm.height > 0.0) {
            return Err(cfg_err("room dimensions must be positive"));
        }
        if !(0.0..=1.0).contains(&rm.reflection_magnitude) {
            return Err(cfg_err("reflection_magnitude must lie in [0, 1]"));
        }
        let a = &self.alignment;
        if a.gamma_scale < 0.0 || a.max_iter < 1 || !(a.tol >= 0.0) || !(a.flatness_tol_db > 0.0) {
            return Err(cfg_err("invalid solver settings"));
        }
        for q in self.measurements_axis() {
            if q < 1 {
                return Err(cfg_err("measurements must be at least 1"));
            }
        }
        for ms in self.active_bins_axis() {
            if ms == 0 || !r.num_bins.is_multiple_of(ms) {
                return Err(cfg_err(format!("active_bins {ms} must divide num_bins {}", r.num_bins)));
            }
            let eta = r.num_bins / ms;
            if k.div_ceil(2) > eta {
                return Err(cfg_err(format!(
                    "{} concurrent transmitters exceed M/M_s = {eta} for active_bins {ms}",
                    k.div_ceil(2)
                )));
            }
        }
        for (t, rx) in self.pairing() {
            if t >= k || rx >= k || t == rx {
                return Err(cfg_err(format!("pairing ({t}, {rx}) is invalid for {k} devices")));
            }
        }
        if !(self.comm.beamwidth_deg > 0.0 && self.comm.ripple_db > 0.0) {
            return Err(cfg_err("beamwidth and ripple must be positive"));
        }
        for (i, d) in self.devices.iter().enumerate() {
            let p = d.position;
            if !(p[0] > 0.0 && p[0] < rm.width && p[1] > 0.0 && p[1] < rm.depth && p[2] > 0.0 && p[2] < rm.height) {
                return Err(cfg_err(format!("device {i} at {p:?} lies outside the room")));
            }
        }
        let inside = |p: [f64; 3]| {
            p[0] > 0.0 && p[0] < rm.width && p[1] > 0.0 && p[1] < rm.depth && p[2] > 0.0 && p[2] < rm.height
        };
        if !inside(self.grid_tx_position()) {
            return Err(cfg_err("grid transmitter lies outside the room"));
        }
        if self.grid.count < 1 || !(self.grid.margin > 0.0 && 2.0 * self.grid.margin < rm.width.min(rm.depth)) {
            return Err(cfg_err("grid needs count >= 1 and a margin below half the room size"));
        }
        Ok(())
    }
}

fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_round_trip() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(cfg.pairing(), vec![(0, 1), (2, 3), (4, 5), (6, 7)]);
    }

    #[test]
    fn config_errors() {
        assert!(matches!(ExperimentConfig::from_toml_str("trials = 0"), Err(Error::Config(_))));
        assert!(ExperimentConfig::from_toml_str("bogus = 1").is_err());
        assert!(ExperimentConfig::from_toml_str("[alignment]\nactive_bins = 3").is_err());
        let partial = ExperimentConfig::from_toml_str("seed = 9\n[radio]\nnum_antennas = 8").unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.radio.num_antennas, 8);
        assert_eq!(partial.devices.len(), 8);
    }
}
