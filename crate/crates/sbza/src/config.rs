//! Flat `key = value` run configuration.
//!
//! A config file holds one `key = value` pair per line; `#` starts a comment
//! line. Overrides given on the command line are applied after the file, so
//! they win. Keys that no subcommand understands are rejected.
//!
//! `scenario` and `seed` pick the base scenario defaults, whatever their
//! position; every other key then overrides one field.

use sbza_core::pipeline::DetectorConfig;
use sbza_core::power::{BatterySpec, SensorPowerProfile};
use sbza_core::sim::{Fading, Scenario, ScenarioConfig};
use sbza_core::{BinGrid, Rssi, Threshold, VehicleId};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: expected 'key = value'")]
    Syntax { origin: String },
    #[error("{origin}: unknown key {key}")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: key {key} given twice")]
    Duplicate { origin: String, key: String },
    #[error("{origin}: {key}: {reason}: {value:?}")]
    BadValue {
        origin: String,
        key: String,
        value: String,
        reason: &'static str,
    },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodPlan {
    pub zone_length_m: f64,
    pub relative_speed_mps: f64,
    pub delivery_ratio: f64,
}

/// Everything a subcommand may need, with defaults filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioConfig,
    pub grid: BinGrid,
    pub noise_floor: Rssi,
    pub boundary_p: f64,
    pub lambda: Threshold,
    pub smoothing: u32,
    pub power: SensorPowerProfile,
    pub battery: BatterySpec,
    /// Decimal places the mean current is rounded to in the reported
    /// battery figures.
    pub current_decimals: u32,
    pub plan: PeriodPlan,
}

const KEYS: &[&str] = &[
    "scenario",
    "seed",
    "duration_s",
    "beacon_period_ms",
    "vehicle_id",
    "speed_min_mps",
    "speed_max_mps",
    "receiver.x_m",
    "receiver.y_m",
    "zone.longitudinal_offset_m",
    "zone.length_m",
    "zone.lateral_offset_m",
    "zone.width_m",
    "zone.guard_margin_m",
    "target.length_m",
    "target.width_m",
    "target.wheelbase_m",
    "channel.tx_power_dbm",
    "channel.path_loss_exponent",
    "channel.reference_loss_db",
    "channel.shadowing_sigma_db",
    "channel.fading",
    "channel.rician_k_db",
    "channel.sensitivity_dbm",
    "channel.noise_floor_dbm",
    "channel.rssi_max_dbm",
    "channel.loss_probability",
    "channel.min_distance_m",
    "grid.rssi_min",
    "grid.rssi_max",
    "grid.bin_width",
    "noise_floor_dbm",
    "boundary_p",
    "lambda",
    "smoothing",
    "power.i_tx_ma",
    "power.t_tx_ms",
    "power.i_sleep_ma",
    "power.period_ms",
    "battery.capacity_mah",
    "battery.duty_cycle",
    "battery.current_decimals",
    "plan.zone_length_m",
    "plan.relative_speed_mps",
    "plan.delivery_ratio",
];

/// Raw settings in the order they were given, tagged with where they came
/// from for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Settings {
    entries: Vec<(String, String, String)>,
}

impl Settings {
    pub fn new() -> Self {
        Settings::default()
    }

    /// Parses a config file's text. `name` is used in diagnostics.
    pub fn parse_file(&mut self, name: &str, text: &str) -> Result<(), ConfigError> {
        let mut seen = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let origin = format!("{name}:{}", n + 1);
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = split_pair(line).ok_or_else(|| ConfigError::Syntax { origin: origin.clone() })?;
            if seen.insert(k.to_string(), ()).is_some() {
                return Err(ConfigError::Duplicate {
                    origin,
                    key: k.to_string(),
                });
            }
            self.push(origin, k, v)?;
        }
        Ok(())
    }

    /// Adds one `key=value` override.
    pub fn parse_override(&mut self, pair: &str) -> Result<(), ConfigError> {
        let origin = format!("--set {pair}");
        let (k, v) = split_pair(pair).ok_or_else(|| ConfigError::Syntax { origin: origin.clone() })?;
        self.push(origin, k, v)
    }

    fn push(&mut self, origin: String, key: &str, value: &str) -> Result<(), ConfigError> {
        if !KEYS.contains(&key) {
            return Err(ConfigError::UnknownKey {
                origin,
                key: key.to_string(),
            });
        }
        self.entries.push((key.to_string(), value.to_string(), origin));
        Ok(())
    }

    fn last(&self, key: &str) -> Option<&(String, String, String)> {
        self.entries.iter().rev().find(|(k, _, _)| k == key)
    }

    pub fn resolve(&self) -> Result<RunConfig, ConfigError> {
        let scenario = match self.last("scenario") {
            Some((k, v, o)) => v.parse::<Scenario>().map_err(|_| bad(o, k, v, "expected parking or driving"))?,
            None => Scenario::Parking,
        };
        let seed = match self.last("seed") {
            Some((k, v, o)) => parse_u64(v).ok_or_else(|| bad(o, k, v, "expected an unsigned integer"))?,
            None => 0,
        };
        let mut cfg = RunConfig::defaults(scenario, seed);
        let mut fading: Option<(String, String)> = None;
        let mut k_db: Option<f64> = None;
        for (key, value, origin) in &self.entries {
            let f = || parse_f64(value).ok_or_else(|| bad(origin, key, value, "expected a finite number"));
            let u = || parse_u64(value).ok_or_else(|| bad(origin, key, value, "expected an unsigned integer"));
            let s = &mut cfg.scenario;
            match key.as_str() {
                "scenario" | "seed" => {}
                "duration_s" => s.duration_s = f()?,
                "beacon_period_ms" => s.beacon_period_ms = u()?,
                "vehicle_id" => {
                    s.vehicle_id = value
                        .parse::<VehicleId>()
                        .map_err(|_| bad(origin, key, value, "invalid vehicle id"))?
                }
                "speed_min_mps" => s.speed_min_mps = f()?,
                "speed_max_mps" => s.speed_max_mps = f()?,
                "receiver.x_m" => s.receiver.x = f()?,
                "receiver.y_m" => s.receiver.y = f()?,
                "zone.longitudinal_offset_m" => s.blind_zone.longitudinal_offset_m = f()?,
                "zone.length_m" => s.blind_zone.length_m = f()?,
                "zone.lateral_offset_m" => s.blind_zone.lateral_offset_m = f()?,
                "zone.width_m" => s.blind_zone.width_m = f()?,
                "zone.guard_margin_m" => s.blind_zone.guard_margin_m = f()?,
                "target.length_m" => s.target.length_m = f()?,
                "target.width_m" => s.target.width_m = f()?,
                "target.wheelbase_m" => s.target.wheelbase_m = f()?,
                "channel.tx_power_dbm" => s.channel.tx_power_dbm = f()?,
                "channel.path_loss_exponent" => s.channel.path_loss_exponent = f()?,
                "channel.reference_loss_db" => s.channel.reference_loss_db = f()?,
                "channel.shadowing_sigma_db" => s.channel.shadowing_sigma_db = f()?,
                "channel.fading" => fading = Some((value.clone(), origin.clone())),
                "channel.rician_k_db" => k_db = Some(f()?),
                "channel.sensitivity_dbm" => s.channel.sensitivity_dbm = f()?,
                "channel.noise_floor_dbm" => s.channel.noise_floor_dbm = f()?,
                "channel.rssi_max_dbm" => s.channel.rssi_max_dbm = f()?,
                "channel.loss_probability" => s.channel.loss_probability = f()?,
                "channel.min_distance_m" => s.channel.min_distance_m = f()?,
                "grid.rssi_min" | "grid.rssi_max" | "grid.bin_width" => {
                    f()?;
                }
                "noise_floor_dbm" => cfg.noise_floor = Rssi::new(f()?).expect("finite"),
                "boundary_p" => cfg.boundary_p = f()?,
                "lambda" => {
                    cfg.lambda = value
                        .parse()
                        .map_err(|_| bad(origin, key, value, "expected a non-negative decimal or a/b"))?
                }
                "smoothing" => {
                    cfg.smoothing = u32::try_from(u()?).map_err(|_| bad(origin, key, value, "too large"))?
                }
                "power.i_tx_ma" => cfg.power.i_tx_ma = f()?,
                "power.t_tx_ms" => cfg.power.t_tx_ms = f()?,
                "power.i_sleep_ma" => cfg.power.i_sleep_ma = f()?,
                "power.period_ms" => cfg.power.period_ms = f()?,
                "battery.capacity_mah" => cfg.battery.capacity_mah = f()?,
                "battery.duty_cycle" => cfg.battery.duty_cycle = f()?,
                "battery.current_decimals" => {
                    cfg.current_decimals = u32::try_from(u()?)
                        .ok()
                        .filter(|d| *d <= 12)
                        .ok_or_else(|| bad(origin, key, value, "expected 0 to 12"))?
                }
                "plan.zone_length_m" => cfg.plan.zone_length_m = f()?,
                "plan.relative_speed_mps" => cfg.plan.relative_speed_mps = f()?,
                "plan.delivery_ratio" => cfg.plan.delivery_ratio = f()?,
                other => unreachable!("key {other} passed the key check"),
            }
        }
        let k = k_db.unwrap_or(match cfg.scenario.channel.fading {
            Fading::Rician { k_db } => k_db,
            _ => DEFAULT_K_DB,
        });
        cfg.scenario.channel.fading = match fading {
            Some((name, origin)) => match name.as_str() {
                "off" => Fading::Off,
                "rayleigh" => Fading::Rayleigh,
                "rician" => Fading::Rician { k_db: k },
                _ => return Err(bad(&origin, "channel.fading", &name, "expected off, rician or rayleigh")),
            },
            None => match cfg.scenario.channel.fading {
                Fading::Rician { .. } => Fading::Rician { k_db: k },
                other => other,
            },
        };
        let grid_value = |key: &str, default: f64| self.last(key).map(|(_, v, _)| parse_f64(v).expect("checked above")).unwrap_or(default);
        let d = BinGrid::default();
        cfg.grid = BinGrid::new(
            grid_value("grid.rssi_min", d.rssi_min()),
            grid_value("grid.rssi_max", d.rssi_max()),
            grid_value("grid.bin_width", d.bin_width()),
        )
        .map_err(|e| ConfigError::Invalid(format!("grid: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

const DEFAULT_K_DB: f64 = 12.0;

fn bad(origin: &str, key: &str, value: &str, reason: &'static str) -> ConfigError {
    ConfigError::BadValue {
        origin: origin.to_string(),
        key: key.to_string(),
        value: value.to_string(),
        reason,
    }
}

fn split_pair(s: &str) -> Option<(&str, &str)> {
    let (k, v) = s.split_once('=')?;
    let (k, v) = (k.trim(), v.trim());
    if k.is_empty() || v.is_empty() {
        None
    } else {
        Some((k, v))
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_u64(s: &str) -> Option<u64> {
    if s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

impl RunConfig {
    pub fn defaults(scenario: Scenario, seed: u64) -> Self {
        RunConfig {
            scenario: ScenarioConfig::for_scenario(scenario, seed),
            grid: BinGrid::default(),
            noise_floor: Rssi::new(-100.0).expect("finite"),
            boundary_p: 0.5,
            lambda: Threshold::from_hundredths(50),
            smoothing: 0,
            power: SensorPowerProfile::CC2540_BEACON,
            battery: BatterySpec::COIN_CELL_8H,
            current_decimals: 3,
            plan: PeriodPlan {
                zone_length_m: 6.0,
                relative_speed_mps: 5.0,
                delivery_ratio: 0.99,
            },
        }
    }

    pub fn seed(&self) -> u64 {
        self.scenario.seed
    }

    pub fn detector(&self) -> DetectorConfig {
        DetectorConfig {
            period_ms: self.scenario.beacon_period_ms,
            noise_floor: self.noise_floor,
            boundary_p: self.boundary_p,
            seed: self.seed(),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if let Err(e) = self.scenario.validate() {
            return Err(ConfigError::Invalid(e.to_string()));
        }
        if !(0.0..=1.0).contains(&self.boundary_p) {
            return Err(ConfigError::Invalid(format!("boundary_p must be in [0, 1], got {}", self.boundary_p)));
        }
        if self.power.validate().is_err() || self.battery.validate().is_err() {
            let e = self.power.validate().and(self.battery.validate()).unwrap_err();
            return Err(ConfigError::Invalid(e.to_string()));
        }
        Ok(())
    }

    /// Every setting, in key order, as `key=value` lines.
    pub fn render(&self) -> String {
        let s = &self.scenario;
        let (fading, k) = match s.channel.fading {
            Fading::Off => ("off", DEFAULT_K_DB),
            Fading::Rayleigh => ("rayleigh", DEFAULT_K_DB),
            Fading::Rician { k_db } => ("rician", k_db),
        };
        let values: Vec<String> = vec![
            s.scenario.as_str().to_string(),
            s.seed.to_string(),
            s.duration_s.to_string(),
            s.beacon_period_ms.to_string(),
            s.vehicle_id.to_string(),
            s.speed_min_mps.to_string(),
            s.speed_max_mps.to_string(),
            s.receiver.x.to_string(),
            s.receiver.y.to_string(),
            s.blind_zone.longitudinal_offset_m.to_string(),
            s.blind_zone.length_m.to_string(),
            s.blind_zone.lateral_offset_m.to_string(),
            s.blind_zone.width_m.to_string(),
            s.blind_zone.guard_margin_m.to_string(),
            s.target.length_m.to_string(),
            s.target.width_m.to_string(),
            s.target.wheelbase_m.to_string(),
            s.channel.tx_power_dbm.to_string(),
            s.channel.path_loss_exponent.to_string(),
            s.channel.reference_loss_db.to_string(),
            s.channel.shadowing_sigma_db.to_string(),
            fading.to_string(),
            k.to_string(),
            s.channel.sensitivity_dbm.to_string(),
            s.channel.noise_floor_dbm.to_string(),
            s.channel.rssi_max_dbm.to_string(),
            s.channel.loss_probability.to_string(),
            s.channel.min_distance_m.to_string(),
            self.grid.rssi_min().to_string(),
            self.grid.rssi_max().to_string(),
            self.grid.bin_width().to_string(),
            self.noise_floor.dbm().to_string(),
            self.boundary_p.to_string(),
            self.lambda.to_string(),
            self.smoothing.to_string(),
            self.power.i_tx_ma.to_string(),
            self.power.t_tx_ms.to_string(),
            self.power.i_sleep_ma.to_string(),
            self.power.period_ms.to_string(),
            self.battery.capacity_mah.to_string(),
            self.battery.duty_cycle.to_string(),
            self.current_decimals.to_string(),
            self.plan.zone_length_m.to_string(),
            self.plan.relative_speed_mps.to_string(),
            self.plan.delivery_ratio.to_string(),
        ];
        debug_assert_eq!(values.len(), KEYS.len());
        let mut out = String::new();
        for (k, v) in KEYS.iter().zip(values) {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// SHA-256 of [`RunConfig::render`], hex encoded.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.render().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
