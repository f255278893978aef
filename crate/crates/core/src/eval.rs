//! Detection-rate / false-alarm-rate scoring and threshold sweeps.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::classifier::{Cell, DecisionMap, Threshold, TrainedModel};
use crate::observation::{Class, Record, SmoothedObservation};
use crate::rssi::quantize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreError {
    /// The rate conditioned on this class is undefined.
    MissingClass(Class),
}

impl fmt::Display for ScoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScoreError::MissingClass(Class::Target) => {
                f.write_str("no Target samples in the test set: detection rate is undefined")
            }
            ScoreError::MissingClass(Class::NoTarget) => {
                f.write_str("no NoTarget samples in the test set: false alarm rate is undefined")
            }
        }
    }
}

impl core::error::Error for ScoreError {}

/// Detection and false-alarm rates with their sample counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    /// `P(decided Target | truth Target)`.
    pub p_d: f64,
    /// `P(decided Target | truth NoTarget)`.
    pub p_fa: f64,
    pub n_target: u64,
    pub n_notarget: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    hits: u64,
    n_target: u64,
    false_alarms: u64,
    n_notarget: u64,
}

impl Tally {
    fn add(&mut self, decided: Class, truth: Class, weight: u64) {
        match truth {
            Class::Target => {
                self.n_target += weight;
                if decided.is_target() {
                    self.hits += weight;
                }
            }
            Class::NoTarget => {
                self.n_notarget += weight;
                if decided.is_target() {
                    self.false_alarms += weight;
                }
            }
        }
    }

    fn rates(&self) -> Result<Rates, ScoreError> {
        if self.n_target == 0 {
            return Err(ScoreError::MissingClass(Class::Target));
        }
        if self.n_notarget == 0 {
            return Err(ScoreError::MissingClass(Class::NoTarget));
        }
        Ok(Rates {
            p_d: self.hits as f64 / self.n_target as f64,
            p_fa: self.false_alarms as f64 / self.n_notarget as f64,
            n_target: self.n_target,
            n_notarget: self.n_notarget,
        })
    }
}

/// Scores `(decided, truth)` pairs.
pub fn score<I>(decisions: I) -> Result<Rates, ScoreError>
where
    I: IntoIterator<Item = (Class, Class)>,
{
    let mut t = Tally::default();
    for (decided, truth) in decisions {
        t.add(decided, truth, 1);
    }
    t.rates()
}

/// Rates at one threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: Threshold,
    pub p_d: f64,
    pub p_fa: f64,
    pub n_target: u64,
    pub n_notarget: u64,
}

impl OperatingPoint {
    pub fn new(threshold: Threshold, rates: Rates) -> Self {
        OperatingPoint {
            threshold,
            p_d: rates.p_d,
            p_fa: rates.p_fa,
            n_target: rates.n_target,
            n_notarget: rates.n_notarget,
        }
    }
}

/// `0, 0.01, ..., 10.00`: 1001 thresholds.
pub fn default_thresholds() -> Vec<Threshold> {
    (0..=1000).map(Threshold::from_hundredths).collect()
}

/// One operating point per threshold, boundary cells counted as `Target`.
///
/// Test records are tallied per bin once; each threshold then only visits
/// occupied bins.
pub fn roc_sweep(model: &TrainedModel, test: &[Record], thresholds: &[Threshold]) -> Result<Vec<OperatingPoint>, ScoreError> {
    let grid = *model.grid();
    let mut per_bin = vec![(0u64, 0u64); grid.cells()];
    for r in test {
        let (i, j) = quantize(&grid, &r.obs);
        let slot = &mut per_bin[grid.offset(i, j)];
        match r.truth {
            Class::Target => slot.0 += 1,
            Class::NoTarget => slot.1 += 1,
        }
    }
    let n = grid.n_bins();
    let occupied: Vec<(u32, u32, u64, u64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| {
            let (t, f) = per_bin[grid.offset(i, j)];
            (t + f > 0).then_some((i, j, t, f))
        })
        .collect();

    thresholds
        .iter()
        .map(|th| {
            let mut tally = Tally::default();
            for &(i, j, t, f) in &occupied {
                let decided = match model.decide_cell(i, j, th) {
                    Cell::Target | Cell::Boundary => Class::Target,
                    Cell::NoTarget => Class::NoTarget,
                };
                tally.add(decided, Class::Target, t);
                tally.add(decided, Class::NoTarget, f);
            }
            tally.rates().map(|r| OperatingPoint::new(*th, r))
        })
        .collect()
}

/// A test-set period: the smoothed observation, its true class, and how
/// many packets arrived during the period itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPeriod {
    pub record: Record,
    pub packets: u32,
}

/// Joins per-period observations with per-period truth.
pub fn label_periods<I>(observations: &[(SmoothedObservation, u32)], truth: I) -> Vec<LabeledPeriod>
where
    I: IntoIterator<Item = Class>,
{
    observations
        .iter()
        .zip(truth)
        .map(|(&(obs, packets), truth)| LabeledPeriod {
            record: Record { obs, truth },
            packets,
        })
        .collect()
}

/// Rates over every period and over packet-bearing periods only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub all_periods: Rates,
    /// Periods in which no packet arrived are dropped; an error when that
    /// removes every sample of a class.
    pub packet_bearing: Result<Rates, ScoreError>,
}

pub fn evaluate<R: Rng + ?Sized>(map: &DecisionMap, periods: &[LabeledPeriod], boundary_p: f64, rng: &mut R) -> Result<Evaluation, ScoreError> {
    let mut all = Tally::default();
    let mut bearing = Tally::default();
    for p in periods {
        let decided = map.classify(&p.record.obs, boundary_p, rng);
        all.add(decided, p.record.truth, 1);
        if p.packets > 0 {
            bearing.add(decided, p.record.truth, 1);
        }
    }
    Ok(Evaluation {
        all_periods: all.rates()?,
        packet_bearing: bearing.rates(),
    })
}

/// Piecewise-linear ROC through the operating points plus the `(0, 0)` and
/// `(1, 1)` corners, which are always reachable by randomizing between
/// deciding `NoTarget` and `Target` everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    knots: Vec<(f64, f64)>,
}

impl RocCurve {
    pub fn new(points: &[OperatingPoint]) -> Self {
        let mut knots: Vec<(f64, f64)> = points.iter().map(|p| (p.p_fa, p.p_d)).collect();
        knots.push((0.0, 0.0));
        knots.push((1.0, 1.0));
        knots.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
        // for equal p_fa keep only the best p_d
        let mut dedup: Vec<(f64, f64)> = Vec::with_capacity(knots.len());
        for k in knots {
            match dedup.last_mut() {
                Some(last) if last.0 == k.0 => last.1 = last.1.max(k.1),
                _ => dedup.push(k),
            }
        }
        RocCurve { knots: dedup }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    /// Interpolated detection rate at false-alarm rate `p_fa` in `[0, 1]`.
    pub fn p_d_at(&self, p_fa: f64) -> f64 {
        let x = p_fa.clamp(0.0, 1.0);
        let k = &self.knots;
        let idx = k.partition_point(|&(fa, _)| fa <= x);
        if idx == 0 {
            return k[0].1;
        }
        if idx == k.len() {
            return k[k.len() - 1].1;
        }
        let (x0, y0) = k[idx - 1];
        let (x1, y1) = k[idx];
        if x == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Largest shortfall of `self` below `other` over `[lo, hi]`, checked at
    /// both curves' knots and the interval ends. Between knots both curves
    /// are linear, so this is exact. Returns `(p_fa, self_p_d, other_p_d)`
    /// of the worst point, or `None` when `self` is never below `other`.
    pub fn shortfall_against(&self, other: &RocCurve, lo: f64, hi: f64) -> Option<(f64, f64, f64)> {
        let mut xs: Vec<f64> = self
            .knots
            .iter()
            .chain(other.knots.iter())
            .map(|k| k.0)
            .filter(|&x| x > lo && x < hi)
            .collect();
        xs.push(lo);
        xs.push(hi);
        let mut worst: Option<(f64, f64, f64)> = None;
        for x in xs {
            let (a, b) = (self.p_d_at(x), other.p_d_at(x));
            if a < b && worst.is_none_or(|w| b - a > w.2 - w.1) {
                worst = Some((x, a, b));
            }
        }
        worst
    }
}
