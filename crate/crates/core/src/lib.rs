//! Side blind zone detection from the RSSI of beacons broadcast by wheel
//! sensors on a neighbouring vehicle.
//!
//! A detection device on the detector vehicle's rear bumper listens to the
//! front and rear right-wheel sensors of a target vehicle. Every beacon period
//! it pairs the two RSSI values into an [`Observation`], averages the last
//! three observations, and looks the result up in a [`DecisionMap`] built
//! from class-conditional 2-D histograms with a Neyman-Pearson
//! likelihood-ratio rule.
//!
//! The crate is `no_std` (with `alloc`) so the detector can run on the same
//! kind of small embedded target as the sensors. File formats, configuration
//! and the command-line tools live in the `sbza` companion crate.
//!
//! Modules:
//! - [`rssi`] and [`observation`]: domain types, quantization, smoothing
//! - [`classifier`]: histogram training, decision maps, classification
//! - [`pipeline`]: the per-period runtime detector and alert arbitration
//! - [`sim`]: seeded parking and driving scenario generator
//! - [`eval`]: detection / false-alarm scoring and threshold sweeps
//! - [`power`]: battery life and beacon period planning

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod classifier;
pub mod eval;
pub mod observation;
pub mod pipeline;
pub mod power;
pub mod rssi;
pub mod sim;

mod wide;

pub use classifier::{
    build_decision_map, train, Cell, DecisionMap, Histogram2D, LikelihoodRatio, NpConfig,
    Threshold, TrainError, TrainedModel,
};
pub use eval::{roc_sweep, score, LabeledPeriod, OperatingPoint, Rates, RocCurve, ScoreError};
pub use observation::{smooth, Class, Observation, Record, SmoothedObservation};
pub use pipeline::{AlertState, BeaconPacket, Detector, PerVehicleState, SensorPosition, VehicleId};
pub use rssi::{quantize, BinGrid, GridError, Rssi};
pub use sim::{simulate, Scenario, ScenarioConfig, SimOutput};

