//! Seeded generator of labeled beacon streams for the parking and driving
//! scenarios.
//!
//! Coordinates are in the detector vehicle's frame: `x` forward from the
//! rear bumper, `y` to the left of the centre line, metres. The detection
//! device sits on the left end of the rear bumper. The target vehicle drives
//! parallel to the detector on its left, so the target's right-wheel sensors
//! face the device.
//!
//! Each tick is one beacon period. The target follows piecewise-constant
//! velocity segments between random waypoints, each sensor sends one beacon
//! per tick, and the received RSSI is
//! `tx_power - (reference_loss + 10 n log10 d) - shadowing + fading_gain`.
//! A beacon is delivered when that value reaches the receiver sensitivity and
//! an independent loss draw passes; the reported RSSI is clamped to
//! `[noise_floor, rssi_max]` and rounded to 0.01 dB.
//!
//! None of the channel constants are measured values; they are plausible
//! 2.4 GHz defaults chosen so the parking scenario separates well and the
//! driving scenario suffers from deeper fading.

use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::observation::Class;
use crate::pipeline::{BeaconPacket, SensorPosition, VehicleId};
use crate::rssi::Rssi;

/// 20 mph.
pub const PARKING_SPEED_LIMIT_MPS: f64 = 8.9;
/// 40 mph.
pub const DRIVING_SPEED_LIMIT_MPS: f64 = 17.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Detector parked, target driving lanes around it.
    Parking,
    /// Both vehicles on the road, target weaving in and out of the zone.
    Driving,
}

impl Scenario {
    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::Parking => "parking",
            Scenario::Driving => "driving",
        }
    }

    pub fn speed_limit_mps(self) -> f64 {
        match self {
            Scenario::Parking => PARKING_SPEED_LIMIT_MPS,
            Scenario::Driving => DRIVING_SPEED_LIMIT_MPS,
        }
    }
}

impl core::str::FromStr for Scenario {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "parking" => Ok(Scenario::Parking),
            "driving" => Ok(Scenario::Driving),
            _ => Err(ConfigError::new(alloc::vec!["scenario"])),
        }
    }
}

/// Small-scale fading applied independently to every beacon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Fading {
    Off,
    Rician { k_db: f64 },
    Rayleigh,
}

impl Fading {
    /// Power gain in dB, unit mean power in linear scale.
    fn sample_db<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let power = match *self {
            Fading::Off => return 0.0,
            Fading::Rayleigh => {
                let u: f64 = rng.random();
                -libm::log(1.0 - u)
            }
            Fading::Rician { k_db } => {
                let k = libm::pow(10.0, k_db / 10.0);
                let los = libm::sqrt(k / (k + 1.0));
                let s = libm::sqrt(1.0 / (2.0 * (k + 1.0)));
                let re = los + s * rng.sample::<f64, _>(StandardNormal);
                let im = s * rng.sample::<f64, _>(StandardNormal);
                re * re + im * im
            }
        };
        10.0 * libm::log10(power.max(1e-12))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Channel {
    pub tx_power_dbm: f64,
    pub path_loss_exponent: f64,
    /// Path loss at 1 m.
    pub reference_loss_db: f64,
    pub shadowing_sigma_db: f64,
    pub fading: Fading,
    pub sensitivity_dbm: f64,
    pub noise_floor_dbm: f64,
    pub rssi_max_dbm: f64,
    /// Chance a beacon above sensitivity is still lost (collisions, CRC).
    pub loss_probability: f64,
    /// Distances are floored here before taking the logarithm.
    pub min_distance_m: f64,
}

impl Channel {
    /// Open lot with a clear line of sight: light shadowing, strong
    /// specular component.
    pub fn parking() -> Self {
        Channel {
            tx_power_dbm: -20.0,
            path_loss_exponent: 2.2,
            reference_loss_db: 40.0,
            shadowing_sigma_db: 1.5,
            fading: Fading::Rician { k_db: 12.0 },
            sensitivity_dbm: -95.0,
            noise_floor_dbm: -100.0,
            rssi_max_dbm: -20.0,
            loss_probability: 0.005,
            min_distance_m: 0.1,
        }
    }

    /// Road traffic: heavier shadowing and no dominant path.
    pub fn driving() -> Self {
        Channel {
            shadowing_sigma_db: 3.0,
            fading: Fading::Rayleigh,
            ..Channel::parking()
        }
    }

    /// Mean received power before shadowing and fading.
    pub fn mean_rssi_dbm(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(self.min_distance_m);
        self.tx_power_dbm - self.reference_loss_db - 10.0 * self.path_loss_exponent * libm::log10(d)
    }

    /// Received power of one beacon, unclamped.
    pub fn sample_rssi_dbm<R: Rng + ?Sized>(&self, distance_m: f64, rng: &mut R) -> f64 {
        let shadow = if self.shadowing_sigma_db > 0.0 {
            self.shadowing_sigma_db * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        self.mean_rssi_dbm(distance_m) - shadow + self.fading.sample_db(rng)
    }

    fn validate(&self, bad: &mut Vec<&'static str>) {
        let finite = [
            ("tx_power_dbm", self.tx_power_dbm),
            ("reference_loss_db", self.reference_loss_db),
            ("sensitivity_dbm", self.sensitivity_dbm),
            ("noise_floor_dbm", self.noise_floor_dbm),
            ("rssi_max_dbm", self.rssi_max_dbm),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                bad.push(name);
            }
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent > 0.0) {
            bad.push("path_loss_exponent");
        }
        if !(self.shadowing_sigma_db.is_finite() && self.shadowing_sigma_db >= 0.0) {
            bad.push("shadowing_sigma_db");
        }
        if let Fading::Rician { k_db } = self.fading {
            if !k_db.is_finite() {
                bad.push("fading");
            }
        }
        if self.noise_floor_dbm >= self.rssi_max_dbm {
            bad.push("noise_floor_dbm");
        }
        if self.sensitivity_dbm < self.noise_floor_dbm {
            bad.push("sensitivity_dbm");
        }
        if !(0.0..1.0).contains(&self.loss_probability) {
            bad.push("loss_probability");
        }
        if !(self.min_distance_m.is_finite() && self.min_distance_m > 0.0) {
            bad.push("min_distance_m");
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn distance(&self, other: &Point) -> f64 {
        libm::hypot(self.x - other.x, self.y - other.y)
    }
}

/// Axis-aligned rectangle in the detector frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    /// True when the interiors intersect.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x_min < other.x_max && other.x_min < self.x_max && self.y_min < other.y_max && other.y_min < self.y_max
    }
}

/// Nominal left blind zone and the guard margin added around it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlindZone {
    /// Start of the zone along `x`; negative is behind the rear bumper.
    pub longitudinal_offset_m: f64,
    /// Zone length `l` along `x`.
    pub length_m: f64,
    /// Start of the zone along `y`, measured from the centre line.
    pub lateral_offset_m: f64,
    pub width_m: f64,
    pub guard_margin_m: f64,
}

impl Default for BlindZone {
    /// 6 m x 3 m, from 3.5 m behind the rear bumper to 2.5 m ahead of it,
    /// starting at the detector's left flank; 0.5 m guard.
    fn default() -> Self {
        BlindZone {
            longitudinal_offset_m: -3.5,
            length_m: 6.0,
            lateral_offset_m: 1.0,
            width_m: 3.0,
            guard_margin_m: 0.5,
        }
    }
}

impl BlindZone {
    pub fn nominal(&self) -> Rect {
        Rect {
            x_min: self.longitudinal_offset_m,
            x_max: self.longitudinal_offset_m + self.length_m,
            y_min: self.lateral_offset_m,
            y_max: self.lateral_offset_m + self.width_m,
        }
    }

    pub fn guarded(&self) -> Rect {
        let r = self.nominal();
        let g = self.guard_margin_m;
        Rect {
            x_min: r.x_min - g,
            x_max: r.x_max + g,
            y_min: r.y_min - g,
            y_max: r.y_max + g,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehicleGeometry {
    pub length_m: f64,
    pub width_m: f64,
    /// Distance between front and rear axles; the sensors sit above the
    /// right wheels, centred on the vehicle.
    pub wheelbase_m: f64,
}

impl Default for VehicleGeometry {
    /// Mid-size sedan.
    fn default() -> Self {
        VehicleGeometry {
            length_m: 5.0,
            width_m: 1.85,
            wheelbase_m: 2.96,
        }
    }
}

/// Target vehicle centre relative to the detector, and its speed relative
/// to the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub x_m: f64,
    pub y_m: f64,
    pub v_mps: f64,
}

impl Pose {
    pub fn footprint(&self, g: &VehicleGeometry) -> Rect {
        Rect {
            x_min: self.x_m - g.length_m / 2.0,
            x_max: self.x_m + g.length_m / 2.0,
            y_min: self.y_m - g.width_m / 2.0,
            y_max: self.y_m + g.width_m / 2.0,
        }
    }

    /// Mount point of a sensor; left-side mounts mirror the right ones.
    pub fn sensor_position(&self, g: &VehicleGeometry, sensor: SensorPosition) -> Point {
        let dx = g.wheelbase_m / 2.0;
        let dy = g.width_m / 2.0;
        let (sx, sy) = match sensor {
            SensorPosition::FrontRight => (dx, -dy),
            SensorPosition::RearRight => (-dx, -dy),
            SensorPosition::FrontLeft => (dx, dy),
            SensorPosition::RearLeft => (-dx, dy),
        };
        Point {
            x: self.x_m + sx,
            y: self.y_m + sy,
        }
    }
}

/// Ground-truth class of one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundTruth {
    pub t_ms: u64,
    pub class: Class,
}

/// Whether the target's footprint overlaps the guarded zone.
pub fn label(zone: &BlindZone, target: &VehicleGeometry, pose: &Pose) -> Class {
    if pose.footprint(target).overlaps(&zone.guarded()) {
        Class::Target
    } else {
        Class::NoTarget
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub fields: Vec<&'static str>,
}

impl ConfigError {
    fn new(fields: Vec<&'static str>) -> Self {
        ConfigError { fields }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("invalid scenario config:")?;
        for (k, name) in self.fields.iter().enumerate() {
            let sep = if k == 0 { " " } else { ", " };
            write!(f, "{sep}{name}")?;
        }
        Ok(())
    }
}

impl core::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub duration_s: f64,
    pub beacon_period_ms: u64,
    pub blind_zone: BlindZone,
    pub target: VehicleGeometry,
    /// Range of the target's speed relative to the detector.
    pub speed_min_mps: f64,
    pub speed_max_mps: f64,
    pub channel: Channel,
    /// Detection device position.
    pub receiver: Point,
    pub vehicle_id: VehicleId,
    pub seed: u64,
}

impl ScenarioConfig {
    /// 60 minutes around a parked detector, speeds up to 20 mph.
    pub fn parking(seed: u64) -> Self {
        ScenarioConfig {
            scenario: Scenario::Parking,
            duration_s: 3600.0,
            beacon_period_ms: 250,
            blind_zone: BlindZone::default(),
            target: VehicleGeometry::default(),
            speed_min_mps: 0.5,
            speed_max_mps: PARKING_SPEED_LIMIT_MPS,
            channel: Channel::parking(),
            receiver: Point { x: 0.0, y: 0.9 },
            vehicle_id: VehicleId::new("target").expect("valid id"),
            seed,
        }
    }

    /// 60 minutes on the road; relative speeds stay low since the vehicles
    /// travel together.
    pub fn driving(seed: u64) -> Self {
        ScenarioConfig {
            scenario: Scenario::Driving,
            speed_min_mps: 0.2,
            speed_max_mps: 5.0,
            channel: Channel::driving(),
            ..ScenarioConfig::parking(seed)
        }
    }

    pub fn for_scenario(scenario: Scenario, seed: u64) -> Self {
        match scenario {
            Scenario::Parking => ScenarioConfig::parking(seed),
            Scenario::Driving => ScenarioConfig::driving(seed),
        }
    }

    pub fn n_ticks(&self) -> usize {
        (self.duration_s * 1000.0 / self.beacon_period_ms as f64) as usize
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut bad = Vec::new();
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            bad.push("duration_s");
        }
        if self.beacon_period_ms == 0 {
            bad.push("beacon_period_ms");
        }
        let z = &self.blind_zone;
        if !(z.length_m.is_finite() && z.length_m > 0.0) {
            bad.push("zone_length_m");
        }
        if !(z.width_m.is_finite() && z.width_m > 0.0) {
            bad.push("zone_width_m");
        }
        if !z.longitudinal_offset_m.is_finite() {
            bad.push("zone_longitudinal_offset_m");
        }
        if !z.lateral_offset_m.is_finite() {
            bad.push("zone_lateral_offset_m");
        }
        if !(z.guard_margin_m.is_finite() && z.guard_margin_m >= 0.0) {
            bad.push("guard_margin_m");
        }
        let t = &self.target;
        if !(t.length_m.is_finite() && t.length_m > 0.0) {
            bad.push("target_length_m");
        }
        if !(t.width_m.is_finite() && t.width_m > 0.0) {
            bad.push("target_width_m");
        }
        if !(t.wheelbase_m.is_finite() && t.wheelbase_m > 0.0 && t.wheelbase_m <= t.length_m) {
            bad.push("target_wheelbase_m");
        }
        let limit = self.scenario.speed_limit_mps();
        if !(self.speed_min_mps.is_finite() && self.speed_min_mps >= 0.0) {
            bad.push("speed_min_mps");
        }
        if !(self.speed_max_mps.is_finite()
            && self.speed_max_mps > 0.0
            && self.speed_max_mps <= limit
            && self.speed_max_mps >= self.speed_min_mps)
        {
            bad.push("speed_max_mps");
        }
        if !(self.receiver.x.is_finite() && self.receiver.y.is_finite()) {
            bad.push("receiver");
        }
        self.channel.validate(&mut bad);
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::new(bad))
        }
    }
}

/// Turn-signal state at the start of a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TurnSignalSample {
    pub t_ms: u64,
    pub on: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    /// Delivered beacons, time-sorted.
    pub packets: Vec<BeaconPacket>,
    /// One entry per tick.
    pub truth: Vec<GroundTruth>,
    pub turn_signal: Vec<TurnSignalSample>,
    pub poses: Vec<Pose>,
}

// Independent generator streams derived from the one seed.
const STREAM_KINEMATICS: u64 = 0;
const STREAM_CHANNEL: u64 = 1;
const STREAM_SIGNAL: u64 = 2;
const STREAM_TIMING: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

struct Waypoint {
    x: f64,
    y: f64,
    speed: f64,
    /// Ticks to stand still on arrival.
    dwell_ticks: u64,
}

fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, options: &[(f64, f64)]) -> f64 {
    let total: f64 = options.iter().map(|o| o.1).sum();
    let mut u = rng.random::<f64>() * total;
    for &(v, w) in options {
        if u < w {
            return v;
        }
        u -= w;
    }
    options[options.len() - 1].0
}

fn next_waypoint<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Waypoint {
    let ticks_per_s = 1000.0 / cfg.beacon_period_ms as f64;
    let speed = if cfg.speed_max_mps > cfg.speed_min_mps {
        rng.random_range(cfg.speed_min_mps..=cfg.speed_max_mps)
    } else {
        cfg.speed_max_mps
    };
    // lane centres: adjacent lane, then lanes further out
    let (x, y, dwell_p, dwell_s) = match cfg.scenario {
        Scenario::Parking => {
            let y = pick_weighted(rng, &[(2.75, 0.6), (7.0, 0.15), (10.5, 0.25)]);
            (rng.random_range(-20.0..20.0), y, 0.6, (5.0, 30.0))
        }
        Scenario::Driving => {
            let lane = pick_weighted(rng, &[(3.0, 0.75), (6.5, 0.25)]);
            let y = lane + rng.random_range(-0.4..0.4);
            (rng.random_range(-30.0..20.0), y, 0.4, (1.0, 10.0))
        }
    };
    let dwell_ticks = if rng.random::<f64>() < dwell_p {
        (rng.random_range(dwell_s.0..dwell_s.1) * ticks_per_s) as u64
    } else {
        0
    };
    Waypoint {
        x,
        y,
        speed,
        dwell_ticks,
    }
}

/// Random waypoint track of `cfg.n_ticks()` poses.
pub fn generate_track(cfg: &ScenarioConfig) -> Vec<Pose> {
    let mut rng = stream(cfg.seed, STREAM_KINEMATICS);
    let dt = cfg.beacon_period_ms as f64 / 1000.0;
    let start = next_waypoint(cfg, &mut rng);
    let (mut x, mut y) = (start.x, start.y);
    let mut wp = next_waypoint(cfg, &mut rng);
    let mut dwell = 0u64;
    let n = cfg.n_ticks();
    let mut poses = Vec::with_capacity(n);
    while poses.len() < n {
        if dwell > 0 {
            dwell -= 1;
            poses.push(Pose { x_m: x, y_m: y, v_mps: 0.0 });
            continue;
        }
        poses.push(Pose {
            x_m: x,
            y_m: y,
            v_mps: wp.speed,
        });
        let (dx, dy) = (wp.x - x, wp.y - y);
        let dist = libm::hypot(dx, dy);
        let step = wp.speed * dt;
        if dist <= step {
            x = wp.x;
            y = wp.y;
            dwell = wp.dwell_ticks;
            wp = next_waypoint(cfg, &mut rng);
        } else {
            x += dx / dist * step;
            y += dy / dist * step;
        }
    }
    poses
}

fn turn_signal_track(cfg: &ScenarioConfig, n: usize) -> Vec<TurnSignalSample> {
    let mut rng = stream(cfg.seed, STREAM_SIGNAL);
    let ticks_per_s = 1000.0 / cfg.beacon_period_ms as f64;
    // on average one 2-6 s blink every 20 s
    let p_start = 1.0 / (20.0 * ticks_per_s);
    let mut remaining = 0u64;
    (0..n)
        .map(|k| {
            if remaining == 0 && rng.random::<f64>() < p_start {
                remaining = (rng.random_range(2.0..6.0) * ticks_per_s) as u64;
            }
            let on = remaining > 0;
            remaining = remaining.saturating_sub(1);
            TurnSignalSample {
                t_ms: k as u64 * cfg.beacon_period_ms,
                on,
            }
        })
        .collect()
}

/// Beacons, truth and turn signal for an explicit track of one pose per
/// tick.
pub fn simulate_track(cfg: &ScenarioConfig, poses: &[Pose]) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    let period = cfg.beacon_period_ms;
    let ch = &cfg.channel;
    let mut channel_rng = stream(cfg.seed, STREAM_CHANNEL);
    let mut timing_rng = stream(cfg.seed, STREAM_TIMING);

    let sensors = [SensorPosition::FrontRight, SensorPosition::RearRight];
    // advertising offset within the period plus up to 10 ms of per-beacon
    // jitter, kept inside the period
    let jitter_max = (period / 25).clamp(1, 10);
    let phases: [u64; 2] = core::array::from_fn(|_| timing_rng.random_range(0..period.saturating_sub(jitter_max).max(1)));
    let mut seq = [0u32; 2];

    let mut packets = Vec::with_capacity(poses.len() * 2);
    let mut truth = Vec::with_capacity(poses.len());
    for (k, pose) in poses.iter().enumerate() {
        let t0 = k as u64 * period;
        truth.push(GroundTruth {
            t_ms: t0,
            class: label(&cfg.blind_zone, &cfg.target, pose),
        });
        let mut tick = Vec::with_capacity(2);
        for (s, sensor) in sensors.iter().enumerate() {
            let jitter = timing_rng.random_range(0..jitter_max);
            let t_ms = t0 + (phases[s] + jitter).min(period - 1);
            let d = pose.sensor_position(&cfg.target, *sensor).distance(&cfg.receiver);
            let raw = ch.sample_rssi_dbm(d, &mut channel_rng);
            let lost = channel_rng.random::<f64>() < ch.loss_probability;
            let this_seq = seq[s];
            seq[s] = seq[s].wrapping_add(1);
            if raw < ch.sensitivity_dbm || lost {
                continue;
            }
            let rssi = Rssi::new(raw.clamp(ch.noise_floor_dbm, ch.rssi_max_dbm))
                .expect("finite channel output")
                .to_centi_db();
            tick.push(BeaconPacket {
                t_ms,
                vehicle_id: cfg.vehicle_id.clone(),
                sensor: *sensor,
                seq: this_seq,
                rssi,
            });
        }
        tick.sort_by_key(|p| p.t_ms);
        packets.extend(tick);
    }
    Ok(SimOutput {
        packets,
        truth,
        turn_signal: turn_signal_track(cfg, poses.len()),
        poses: poses.to_vec(),
    })
}

/// Runs the scenario's random waypoint kinematics and the channel.
pub fn simulate(cfg: &ScenarioConfig) -> Result<SimOutput, ConfigError> {
    cfg.validate()?;
    let poses = generate_track(cfg);
    simulate_track(cfg, &poses)
}
