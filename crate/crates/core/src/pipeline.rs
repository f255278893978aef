//! Runtime detector.
//!
//! Every beacon period the detector averages the RSSI of the packets each
//! right-side sensor delivered during that period (noise floor when none
//! arrived), pushes the pair into a three-deep window, smooths the window and
//! looks the result up in the decision map. A `Target` decision raises the
//! light alert, and the sound alert as well while the turn signal is on.
//!
//! Packets are routed by vehicle id. Each vehicle has its own window and its
//! own boundary-draw generator seeded from the detector seed and the id, so
//! decisions for one vehicle never depend on traffic from another.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifier::DecisionMap;
use crate::observation::{smooth, Class, Observation, SmoothedObservation};
use crate::rssi::Rssi;

/// Opaque vehicle identifier carried in the beacon header.
///
/// Non-empty, at most 64 bytes, no commas, whitespace or control characters
/// (it is written unquoted into CSV files).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VehicleId(String);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvalidVehicleId;

impl fmt::Display for InvalidVehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("vehicle id must be 1-64 bytes without commas, whitespace or control characters")
    }
}

impl core::error::Error for InvalidVehicleId {}

impl VehicleId {
    pub fn new(id: &str) -> Result<Self, InvalidVehicleId> {
        let ok = !id.is_empty()
            && id.len() <= 64
            && !id.chars().any(|c| c == ',' || c.is_whitespace() || c.is_control());
        if ok {
            Ok(VehicleId(String::from(id)))
        } else {
            Err(InvalidVehicleId)
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    fn stream_seed(&self, seed: u64) -> u64 {
        // FNV-1a
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in self.0.bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
        seed ^ h
    }
}

impl fmt::Display for VehicleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for VehicleId {
    type Err = InvalidVehicleId;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        VehicleId::new(s)
    }
}

/// Mounting position of a beaconing sensor on its vehicle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SensorPosition {
    FrontRight,
    RearRight,
    FrontLeft,
    RearLeft,
}

impl SensorPosition {
    pub const ALL: [SensorPosition; 4] = [
        SensorPosition::FrontRight,
        SensorPosition::RearRight,
        SensorPosition::FrontLeft,
        SensorPosition::RearLeft,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SensorPosition::FrontRight => "FrontRight",
            SensorPosition::RearRight => "RearRight",
            SensorPosition::FrontLeft => "FrontLeft",
            SensorPosition::RearLeft => "RearLeft",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for SensorPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownSensorPosition;

impl fmt::Display for UnknownSensorPosition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected FrontRight, RearRight, FrontLeft or RearLeft")
    }
}

impl core::error::Error for UnknownSensorPosition {}

impl FromStr for SensorPosition {
    type Err = UnknownSensorPosition;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SensorPosition::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or(UnknownSensorPosition)
    }
}

/// A received beacon with its measured RSSI.
#[derive(Debug, Clone, PartialEq)]
pub struct BeaconPacket {
    pub t_ms: u64,
    pub vehicle_id: VehicleId,
    pub sensor: SensorPosition,
    pub seq: u32,
    pub rssi: Rssi,
}

/// Driver alert for one period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AlertState {
    None,
    Light,
    LightAndSound,
}

impl AlertState {
    pub fn for_decision(class: Class, turn_signal: bool) -> Self {
        match (class, turn_signal) {
            (Class::NoTarget, _) => AlertState::None,
            (Class::Target, false) => AlertState::Light,
            (Class::Target, true) => AlertState::LightAndSound,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AlertState::None => "None",
            AlertState::Light => "Light",
            AlertState::LightAndSound => "LightAndSound",
        }
    }
}

impl fmt::Display for AlertState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingError {
    pub expected: VehicleId,
    pub found: VehicleId,
}

impl fmt::Display for RoutingError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "packet from vehicle {} routed to the state of vehicle {}",
            self.found, self.expected
        )
    }
}

impl core::error::Error for RoutingError {}

/// Observation window and bookkeeping for one target vehicle.
#[derive(Debug, Clone, PartialEq)]
pub struct PerVehicleState {
    vehicle_id: VehicleId,
    noise_floor: Rssi,
    window: VecDeque<Observation>,
    last_packet_ms: [Option<u64>; 4],
    last_period_packets: u32,
}

impl PerVehicleState {
    pub fn new(vehicle_id: VehicleId, noise_floor: Rssi) -> Self {
        PerVehicleState {
            vehicle_id,
            noise_floor,
            window: VecDeque::with_capacity(3),
            last_packet_ms: [None; 4],
            last_period_packets: 0,
        }
    }

    pub fn vehicle_id(&self) -> &VehicleId {
        &self.vehicle_id
    }

    pub fn window(&self) -> impl Iterator<Item = &Observation> {
        self.window.iter()
    }

    /// Time of the latest packet seen from `sensor`.
    pub fn last_packet_ms(&self, sensor: SensorPosition) -> Option<u64> {
        self.last_packet_ms[sensor.index()]
    }

    /// Right-side packets that arrived in the most recent period.
    pub fn last_period_packets(&self) -> u32 {
        self.last_period_packets
    }

    /// Closes the period starting at `period_start_ms`.
    ///
    /// The front and rear components are the mean RSSI of that sensor's
    /// packets in the period, or the noise floor. Left-side packets only
    /// update bookkeeping. Nothing is modified if any packet belongs to a
    /// different vehicle.
    pub fn collect_period(&mut self, period_start_ms: u64, packets: &[BeaconPacket]) -> Result<Observation, RoutingError> {
        if let Some(p) = packets.iter().find(|p| p.vehicle_id != self.vehicle_id) {
            return Err(RoutingError {
                expected: self.vehicle_id.clone(),
                found: p.vehicle_id.clone(),
            });
        }
        let mut sum = [0.0f64; 2];
        let mut n = [0u32; 2];
        for p in packets {
            let slot = &mut self.last_packet_ms[p.sensor.index()];
            *slot = Some(slot.map_or(p.t_ms, |t| t.max(p.t_ms)));
            let k = match p.sensor {
                SensorPosition::FrontRight => 0,
                SensorPosition::RearRight => 1,
                SensorPosition::FrontLeft | SensorPosition::RearLeft => continue,
            };
            sum[k] += p.rssi.dbm();
            n[k] += 1;
        }
        let component = |k: usize| {
            if n[k] == 0 {
                self.noise_floor
            } else {
                Rssi::new(sum[k] / f64::from(n[k])).expect("mean of finite values")
            }
        };
        let obs = Observation {
            front: component(0),
            rear: component(1),
            t_ms: period_start_ms,
        };
        self.push(obs);
        self.last_period_packets = n[0] + n[1];
        Ok(obs)
    }

    fn push(&mut self, obs: Observation) {
        if self.window.len() == 3 {
            self.window.pop_front();
        }
        self.window.push_back(obs);
    }

    /// Smoothed view of the window, padding missing history with
    /// noise-floor observations. `None` before the first period.
    pub fn smoothed(&self) -> Option<SmoothedObservation> {
        let newest = *self.window.back()?;
        let pad = Observation::silent(self.noise_floor, newest.t_ms);
        let mut w = [pad; 3];
        let skip = 3 - self.window.len();
        for (slot, obs) in w.iter_mut().skip(skip).zip(self.window.iter()) {
            *slot = *obs;
        }
        Some(smooth(&w))
    }

    /// Smooths, classifies and arbitrates the alert.
    pub fn step<R: rand::Rng + ?Sized>(
        &self,
        map: &DecisionMap,
        boundary_p: f64,
        turn_signal: bool,
        rng: &mut R,
    ) -> (Class, AlertState) {
        let obs = self
            .smoothed()
            .unwrap_or_else(|| smooth(&[Observation::silent(self.noise_floor, 0); 3]));
        let class = map.classify(&obs, boundary_p, rng);
        (class, AlertState::for_decision(class, turn_signal))
    }
}

/// Output of the detector for one vehicle and one period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodDecision {
    pub t_ms: u64,
    pub vehicle_id: VehicleId,
    pub smoothed: SmoothedObservation,
    pub class: Class,
    pub alert: AlertState,
    /// Right-side packets received from this vehicle in the period.
    pub packets: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub period_ms: u64,
    pub noise_floor: Rssi,
    pub boundary_p: f64,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            period_ms: 250,
            noise_floor: Rssi::new(-100.0).unwrap(),
            boundary_p: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug)]
struct Track {
    state: PerVehicleState,
    rng: ChaCha8Rng,
}

/// Multi-vehicle detector driven one period at a time.
///
/// A vehicle is tracked from the first period in which one of its packets
/// arrives and is stepped every period after that, silent or not.
#[derive(Debug)]
pub struct Detector {
    config: DetectorConfig,
    map: DecisionMap,
    tracks: BTreeMap<VehicleId, Track>,
}

impl Detector {
    pub fn new(config: DetectorConfig, map: DecisionMap) -> Self {
        Detector {
            config,
            map,
            tracks: BTreeMap::new(),
        }
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn vehicles(&self) -> impl Iterator<Item = &VehicleId> {
        self.tracks.keys()
    }

    /// Processes the packets of the period starting at `period_start_ms`.
    /// Decisions come out in vehicle id order.
    pub fn process_period(&mut self, period_start_ms: u64, packets: &[BeaconPacket], turn_signal: bool) -> Vec<PeriodDecision> {
        let mut by_vehicle: BTreeMap<&VehicleId, Vec<BeaconPacket>> = BTreeMap::new();
        for p in packets {
            by_vehicle.entry(&p.vehicle_id).or_default().push(p.clone());
        }
        for id in by_vehicle.keys() {
            if !self.tracks.contains_key(*id) {
                let rng = ChaCha8Rng::seed_from_u64(id.stream_seed(self.config.seed));
                let state = PerVehicleState::new((*id).clone(), self.config.noise_floor);
                self.tracks.insert((*id).clone(), Track { state, rng });
            }
        }
        let empty = Vec::new();
        let mut out = Vec::with_capacity(self.tracks.len());
        for (id, track) in self.tracks.iter_mut() {
            let own = by_vehicle.get(id).unwrap_or(&empty);
            track
                .state
                .collect_period(period_start_ms, own)
                .expect("packets grouped by vehicle id");
            let smoothed = track.state.smoothed().expect("window is non-empty after a period");
            let (class, alert) = track
                .state
                .step(&self.map, self.config.boundary_p, turn_signal, &mut track.rng);
            out.push(PeriodDecision {
                t_ms: period_start_ms,
                vehicle_id: id.clone(),
                smoothed,
                class,
                alert,
                packets: track.state.last_period_packets(),
            });
        }
        out
    }

    /// Runs a whole time-sorted packet stream, period by period from t = 0
    /// through `end_ms` (exclusive). `turn_signal` reports the indicator at a
    /// period start.
    pub fn replay<F>(&mut self, packets: &[BeaconPacket], end_ms: u64, mut turn_signal: F) -> Vec<PeriodDecision>
    where
        F: FnMut(u64) -> bool,
    {
        let period = self.config.period_ms;
        let mut out = Vec::new();
        let mut cursor = 0;
        let mut start = 0;
        while start < end_ms {
            let end = start + period;
            let first = cursor;
            while cursor < packets.len() && packets[cursor].t_ms < end {
                cursor += 1;
            }
            let signal = turn_signal(start);
            out.extend(self.process_period(start, &packets[first..cursor], signal));
            start = end;
        }
        out
    }
}

/// Period-by-period smoothed observations of a single vehicle, as used to
/// build training and test sets. Returns one entry per period in
/// `[0, n_periods * period_ms)`, with the number of right-side packets
/// received in that period.
pub fn assemble_observations(
    packets: &[BeaconPacket],
    vehicle_id: &VehicleId,
    period_ms: u64,
    n_periods: usize,
    noise_floor: Rssi,
) -> Vec<(SmoothedObservation, u32)> {
    let mut state = PerVehicleState::new(vehicle_id.clone(), noise_floor);
    let mut own = packets.iter().filter(|p| &p.vehicle_id == vehicle_id).peekable();
    let mut out = Vec::with_capacity(n_periods);
    let mut buf = Vec::new();
    for k in 0..n_periods as u64 {
        let start = k * period_ms;
        buf.clear();
        while let Some(p) = own.next_if(|p| p.t_ms < start + period_ms) {
            buf.push(p.clone());
        }
        state
            .collect_period(start, &buf)
            .expect("filtered to one vehicle");
        out.push((state.smoothed().expect("non-empty window"), state.last_period_packets()));
    }
    out
}
