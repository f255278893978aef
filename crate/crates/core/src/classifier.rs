//! Neyman-Pearson classification over trained 2-D RSSI histograms.
//!
//! Training counts every record's quantized observation into the histogram
//! of its true class. Normalizing each histogram by its class total gives the
//! class-conditional probability of a bin, and the likelihood ratio of a bin
//! is `P(bin | Target) / P(bin | NoTarget)`.
//!
//! A [`DecisionMap`] fixes a threshold and stores, for every bin, whether the
//! ratio is above it (`Target`), below it (`NoTarget`), or exactly on it
//! (`Boundary`). Boundary cells are resolved at lookup time by a Bernoulli
//! draw: `Y = 0` decides `Target`, `Y = 1` decides `NoTarget`.
//!
//! Ratios are never formed in floating point for decisions. Since
//! `(c1 / t1) / (c2 / t2) > num / den` iff `c1 * t2 * den > num * c2 * t1`,
//! all comparisons are done on integer cross products, so `Boundary` is
//! detected exactly.

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::observation::{Class, Record, SmoothedObservation};
use crate::rssi::{quantize, BinGrid};
use crate::wide::cmp_products;

/// Non-negative rational threshold `num / den`.
///
/// Equality and ordering compare values, so `0.5` and `0.50` are equal; the
/// written form is kept for display.
#[derive(Debug, Clone, Copy)]
pub struct Threshold {
    num: u64,
    den: u64,
    /// Number of fractional digits when the value was given in decimal.
    decimals: Option<u8>,
}

impl Threshold {
    pub const ZERO: Threshold = Threshold {
        num: 0,
        den: 1,
        decimals: Some(0),
    };

    pub fn from_ratio(num: u64, den: u64) -> Option<Self> {
        (den > 0).then_some(Threshold {
            num,
            den,
            decimals: None,
        })
    }

    pub fn from_integer(value: u64) -> Self {
        Threshold {
            num: value,
            den: 1,
            decimals: Some(0),
        }
    }

    /// `k / 100`, written with two decimals.
    pub fn from_hundredths(k: u64) -> Self {
        Threshold {
            num: k,
            den: 100,
            decimals: Some(2),
        }
    }

    pub fn numerator(&self) -> u64 {
        self.num
    }

    pub fn denominator(&self) -> u64 {
        self.den
    }

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Threshold {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Threshold {}

impl PartialOrd for Threshold {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Threshold {
    fn cmp(&self, other: &Self) -> Ordering {
        (u128::from(self.num) * u128::from(other.den))
            .cmp(&(u128::from(other.num) * u128::from(self.den)))
    }
}

impl fmt::Display for Threshold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.decimals {
            Some(0) => write!(f, "{}", self.num),
            Some(k) => {
                let int = self.num / self.den;
                let frac = self.num % self.den;
                write!(f, "{int}.{frac:0width$}", width = usize::from(k))
            }
            None => write!(f, "{}/{}", self.num, self.den),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThresholdParseError {
    Empty,
    Negative,
    Invalid,
    Overflow,
    ZeroDenominator,
}

impl fmt::Display for ThresholdParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            ThresholdParseError::Empty => "empty threshold",
            ThresholdParseError::Negative => "threshold must be non-negative",
            ThresholdParseError::Invalid => "threshold must be a decimal or num/den",
            ThresholdParseError::Overflow => "threshold has too many digits",
            ThresholdParseError::ZeroDenominator => "threshold denominator is zero",
        };
        f.write_str(msg)
    }
}

impl core::error::Error for ThresholdParseError {}

fn parse_digits(s: &str) -> Result<u64, ThresholdParseError> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ThresholdParseError::Invalid);
    }
    s.parse().map_err(|_| ThresholdParseError::Overflow)
}

impl FromStr for Threshold {
    type Err = ThresholdParseError;

    /// Accepts `3`, `0.26`, `.5` and `7/20`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.is_empty() {
            return Err(ThresholdParseError::Empty);
        }
        if s.starts_with('-') {
            return Err(ThresholdParseError::Negative);
        }
        if let Some((n, d)) = s.split_once('/') {
            let num = parse_digits(n)?;
            let den = parse_digits(d)?;
            return Threshold::from_ratio(num, den).ok_or(ThresholdParseError::ZeroDenominator);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(ThresholdParseError::Invalid);
        }
        let int = if int.is_empty() { 0 } else { parse_digits(int)? };
        let decimals = u8::try_from(frac.len()).map_err(|_| ThresholdParseError::Overflow)?;
        if decimals > 19 {
            return Err(ThresholdParseError::Overflow);
        }
        let den = 10u64.pow(u32::from(decimals));
        let frac = if frac.is_empty() { 0 } else { parse_digits(frac)? };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or(ThresholdParseError::Overflow)?;
        Ok(Threshold {
            num,
            den,
            decimals: Some(decimals),
        })
    }
}

/// Count histogram over the cells of a [`BinGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2D {
    grid: BinGrid,
    counts: Vec<u32>,
    total: u64,
}

impl Histogram2D {
    pub fn new(grid: BinGrid) -> Self {
        Histogram2D {
            grid,
            counts: vec![0; grid.cells()],
            total: 0,
        }
    }

    /// Rebuilds a histogram from row-major counts.
    pub fn from_counts(grid: BinGrid, counts: Vec<u32>) -> Result<Self, TrainError> {
        if counts.len() != grid.cells() {
            return Err(TrainError::CountLength {
                expected: grid.cells(),
                found: counts.len(),
            });
        }
        let total = counts.iter().map(|&c| u64::from(c)).sum();
        if total > u64::from(u32::MAX) {
            return Err(TrainError::TooManyRecords);
        }
        Ok(Histogram2D { grid, counts, total })
    }

    pub fn grid(&self) -> &BinGrid {
        &self.grid
    }

    pub fn add(&mut self, i: u32, j: u32) {
        let off = self.grid.offset(i, j);
        self.counts[off] += 1;
        self.total += 1;
    }

    pub fn count(&self, i: u32, j: u32) -> u32 {
        self.counts[self.grid.offset(i, j)]
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Normalized bin probability, zero for an empty histogram.
    pub fn probability(&self, i: u32, j: u32) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        f64::from(self.count(i, j)) / self.total as f64
    }

    /// Sum of all normalized probabilities; 1 up to rounding when non-empty.
    pub fn probability_mass(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let t = self.total as f64;
        self.counts.iter().map(|&c| f64::from(c) / t).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrainError {
    /// No records at all.
    Empty,
    /// Every record has the same class; the named one is absent.
    MissingClass(Class),
    GridMismatch,
    CountLength { expected: usize, found: usize },
    TooManyRecords,
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Empty => f.write_str("no training records"),
            TrainError::MissingClass(c) => write!(f, "training set has no {c} records"),
            TrainError::GridMismatch => f.write_str("class histograms use different grids"),
            TrainError::CountLength { expected, found } => {
                write!(f, "expected {expected} histogram cells, found {found}")
            }
            TrainError::TooManyRecords => {
                write!(f, "more than {} records in one class", u32::MAX)
            }
        }
    }
}

impl core::error::Error for TrainError {}

/// Likelihood ratio of one bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LikelihoodRatio {
    Finite(f64),
    /// Seen only in `Target` training data.
    Infinite,
    /// Seen in neither class.
    Unseen,
}

/// Class-conditional histograms learned from labeled records.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    target: Histogram2D,
    notarget: Histogram2D,
    smoothing: u32,
}

impl TrainedModel {
    pub fn from_histograms(target: Histogram2D, notarget: Histogram2D) -> Result<Self, TrainError> {
        if target.grid != notarget.grid {
            return Err(TrainError::GridMismatch);
        }
        match (target.total, notarget.total) {
            (0, 0) => Err(TrainError::Empty),
            (0, _) => Err(TrainError::MissingClass(Class::Target)),
            (_, 0) => Err(TrainError::MissingClass(Class::NoTarget)),
            _ => Ok(TrainedModel {
                target,
                notarget,
                smoothing: 0,
            }),
        }
    }

    /// Adds `alpha` pseudo-counts to every bin of both classes before
    /// normalizing. The default of 0 is plain relative frequency.
    pub fn with_smoothing(mut self, alpha: u32) -> Self {
        self.smoothing = alpha;
        self
    }

    pub fn smoothing(&self) -> u32 {
        self.smoothing
    }

    pub fn grid(&self) -> &BinGrid {
        &self.target.grid
    }

    pub fn histogram(&self, class: Class) -> &Histogram2D {
        match class {
            Class::Target => &self.target,
            Class::NoTarget => &self.notarget,
        }
    }

    pub fn n_target(&self) -> u64 {
        self.target.total
    }

    pub fn n_notarget(&self) -> u64 {
        self.notarget.total
    }

    /// Smoothed count and smoothed total for `class` at `(i, j)`.
    fn weight(&self, class: Class, i: u32, j: u32) -> (u64, u64) {
        let h = self.histogram(class);
        let alpha = u64::from(self.smoothing);
        let cells = h.grid.cells() as u64;
        (u64::from(h.count(i, j)) + alpha, h.total + cells * alpha)
    }

    /// `P(bin | class)`.
    pub fn probability(&self, class: Class, i: u32, j: u32) -> f64 {
        let (w, total) = self.weight(class, i, j);
        w as f64 / total as f64
    }

    pub fn likelihood_ratio(&self, i: u32, j: u32) -> LikelihoodRatio {
        let (w1, t1) = self.weight(Class::Target, i, j);
        let (w2, t2) = self.weight(Class::NoTarget, i, j);
        match (w1, w2) {
            (0, 0) => LikelihoodRatio::Unseen,
            (_, 0) => LikelihoodRatio::Infinite,
            _ => LikelihoodRatio::Finite((w1 as f64 / t1 as f64) / (w2 as f64 / t2 as f64)),
        }
    }

    /// Exact ordering of the bin's likelihood ratio against `threshold`, or
    /// `None` for an unseen bin.
    pub fn compare_ratio(&self, i: u32, j: u32, threshold: &Threshold) -> Option<Ordering> {
        let (w1, t1) = self.weight(Class::Target, i, j);
        let (w2, t2) = self.weight(Class::NoTarget, i, j);
        if w1 == 0 && w2 == 0 {
            return None;
        }
        // (w1/t1) / (w2/t2) vs num/den  <=>  w1*t2*den vs num*w2*t1
        let lhs = u128::from(w1) * u128::from(t2);
        let rhs = u128::from(threshold.num) * u128::from(w2);
        Some(cmp_products(lhs, threshold.den, rhs, t1))
    }

    /// Decision for one bin, boundary cells kept unresolved.
    pub fn decide_cell(&self, i: u32, j: u32, threshold: &Threshold) -> Cell {
        match self.compare_ratio(i, j, threshold) {
            None => Cell::NoTarget,
            Some(Ordering::Greater) => Cell::Target,
            Some(Ordering::Less) => Cell::NoTarget,
            Some(Ordering::Equal) => Cell::Boundary,
        }
    }
}

/// Counts each record into the histogram of its true class.
pub fn train(records: &[Record], grid: BinGrid) -> Result<TrainedModel, TrainError> {
    let mut target = Histogram2D::new(grid);
    let mut notarget = Histogram2D::new(grid);
    for r in records {
        let (i, j) = quantize(&grid, &r.obs);
        match r.truth {
            Class::Target => target.add(i, j),
            Class::NoTarget => notarget.add(i, j),
        }
    }
    if target.total > u64::from(u32::MAX) || notarget.total > u64::from(u32::MAX) {
        return Err(TrainError::TooManyRecords);
    }
    TrainedModel::from_histograms(target, notarget)
}

/// Precomputed decision of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Cell {
    Target,
    NoTarget,
    /// Ratio exactly equal to the threshold.
    Boundary,
}

impl Cell {
    pub fn as_char(self) -> char {
        match self {
            Cell::Target => 'T',
            Cell::NoTarget => 'N',
            Cell::Boundary => 'B',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'T' => Some(Cell::Target),
            'N' => Some(Cell::NoTarget),
            'B' => Some(Cell::Boundary),
            _ => None,
        }
    }
}

/// Threshold and boundary-draw parameters of the detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NpConfig {
    pub threshold: Threshold,
    /// `P(Y = 1)`, the chance a boundary cell decides `NoTarget`.
    pub boundary_p: f64,
    pub seed: u64,
}

impl NpConfig {
    pub fn new(threshold: Threshold, boundary_p: f64, seed: u64) -> Result<Self, BadBoundaryProbability> {
        if !(0.0..=1.0).contains(&boundary_p) {
            return Err(BadBoundaryProbability(boundary_p));
        }
        Ok(NpConfig {
            threshold,
            boundary_p,
            seed,
        })
    }
}

impl Default for NpConfig {
    fn default() -> Self {
        NpConfig {
            threshold: Threshold {
                num: 5,
                den: 10,
                decimals: Some(1),
            },
            boundary_p: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BadBoundaryProbability(pub f64);

impl fmt::Display for BadBoundaryProbability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "boundary probability must be in [0, 1], got {}", self.0)
    }
}

impl core::error::Error for BadBoundaryProbability {}

/// Per-cell decisions for one threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionMap {
    grid: BinGrid,
    threshold: Threshold,
    cells: Vec<Cell>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCountMismatch {
    pub expected: usize,
    pub found: usize,
}

impl fmt::Display for CellCountMismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "decision map needs {} cells, got {}", self.expected, self.found)
    }
}

impl core::error::Error for CellCountMismatch {}

impl DecisionMap {
    pub fn from_cells(grid: BinGrid, threshold: Threshold, cells: Vec<Cell>) -> Result<Self, CellCountMismatch> {
        if cells.len() != grid.cells() {
            return Err(CellCountMismatch {
                expected: grid.cells(),
                found: cells.len(),
            });
        }
        Ok(DecisionMap {
            grid,
            threshold,
            cells,
        })
    }

    pub fn grid(&self) -> &BinGrid {
        &self.grid
    }

    pub fn threshold(&self) -> Threshold {
        self.threshold
    }

    /// Row-major cells, row = front bin, column = rear bin.
    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, i: u32, j: u32) -> Cell {
        self.cells[self.grid.offset(i, j)]
    }

    pub fn lookup(&self, obs: &SmoothedObservation) -> Cell {
        let (i, j) = quantize(&self.grid, obs);
        self.cell(i, j)
    }

    pub fn count(&self, which: Cell) -> usize {
        self.cells.iter().filter(|&&c| c == which).count()
    }

    /// Classifies with a Bernoulli(`boundary_p`) draw on boundary cells.
    /// The generator is only advanced for boundary cells.
    pub fn classify<R: Rng + ?Sized>(&self, obs: &SmoothedObservation, boundary_p: f64, rng: &mut R) -> Class {
        match self.lookup(obs) {
            Cell::Target => Class::Target,
            Cell::NoTarget => Class::NoTarget,
            Cell::Boundary => {
                if rng.random_bool(boundary_p.clamp(0.0, 1.0)) {
                    Class::NoTarget
                } else {
                    Class::Target
                }
            }
        }
    }

    /// Classification with boundary cells resolved to `Target` (`p = 0`).
    pub fn classify_deterministic(&self, obs: &SmoothedObservation) -> Class {
        match self.lookup(obs) {
            Cell::Target | Cell::Boundary => Class::Target,
            Cell::NoTarget => Class::NoTarget,
        }
    }
}

/// Applies the threshold rule to every cell. Cells unseen in both classes
/// decide `NoTarget`.
pub fn build_decision_map(model: &TrainedModel, threshold: Threshold) -> DecisionMap {
    let grid = *model.grid();
    let n = grid.n_bins();
    let mut cells = Vec::with_capacity(grid.cells());
    for i in 0..n {
        for j in 0..n {
            cells.push(model.decide_cell(i, j, &threshold));
        }
    }
    DecisionMap {
        grid,
        threshold,
        cells,
    }
}

/// Classifies one observation against `map` with `cfg.boundary_p`.
pub fn classify<R: Rng + ?Sized>(map: &DecisionMap, cfg: &NpConfig, obs: &SmoothedObservation, rng: &mut R) -> Class {
    map.classify(obs, cfg.boundary_p, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rssi::Rssi;
    use alloc::string::ToString;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grid() -> BinGrid {
        BinGrid::default()
    }

    /// Observation quantizing to bin `(i, j)` of the default grid.
    fn at(i: u32, j: u32) -> SmoothedObservation {
        SmoothedObservation {
            front: Rssi::new(-100.0 + f64::from(i) + 0.5).unwrap(),
            rear: Rssi::new(-100.0 + f64::from(j) + 0.5).unwrap(),
            t_ms: 0,
        }
    }

    fn rec(i: u32, j: u32, truth: Class) -> Record {
        Record { obs: at(i, j), truth }
    }

    fn example_model() -> TrainedModel {
        let mut rs = Vec::new();
        rs.extend((0..3).map(|_| rec(10, 10, Class::Target)));
        rs.push(rec(11, 10, Class::Target));
        rs.push(rec(10, 10, Class::NoTarget));
        rs.extend((0..3).map(|_| rec(0, 0, Class::NoTarget)));
        train(&rs, grid()).unwrap()
    }

    #[test]
    fn missing_class_is_named() {
        let rs: Vec<_> = (0..4).map(|_| rec(5, 5, Class::Target)).collect();
        assert_eq!(train(&rs, grid()), Err(TrainError::MissingClass(Class::NoTarget)));
        assert_eq!(train(&[], grid()), Err(TrainError::Empty));
        assert!(TrainError::MissingClass(Class::NoTarget).to_string().contains("NoTarget"));
    }

    #[test]
    fn conditional_probabilities_from_counts() {
        let m = example_model();
        assert_eq!(m.probability(Class::Target, 10, 10), 0.75);
        assert_eq!(m.probability(Class::NoTarget, 10, 10), 0.25);
        assert_eq!(m.n_target(), 4);
        assert_eq!(m.n_notarget(), 4);
    }

    #[test]
    fn ratio_conventions() {
        let m = example_model();
        assert_eq!(m.likelihood_ratio(10, 10), LikelihoodRatio::Finite(3.0));
        assert_eq!(m.likelihood_ratio(0, 0), LikelihoodRatio::Finite(0.0));
        assert_eq!(m.likelihood_ratio(11, 10), LikelihoodRatio::Infinite);
        assert_eq!(m.likelihood_ratio(40, 40), LikelihoodRatio::Unseen);
    }

    #[test]
    fn map_at_half() {
        let m = example_model();
        let map = build_decision_map(&m, "0.5".parse().unwrap());
        assert_eq!(map.cell(10, 10), Cell::Target);
        assert_eq!(map.cell(11, 10), Cell::Target);
        assert_eq!(map.cell(0, 0), Cell::NoTarget);
        assert_eq!(map.cell(40, 40), Cell::NoTarget);
    }

    #[test]
    fn zero_threshold_marks_every_target_bin() {
        let m = example_model();
        let map = build_decision_map(&m, Threshold::ZERO);
        for i in 0..80 {
            for j in 0..80 {
                let p1 = m.probability(Class::Target, i, j);
                if p1 > 0.0 {
                    assert_eq!(map.cell(i, j), Cell::Target);
                }
            }
        }
        // ratio 0 sits exactly on a zero threshold
        assert_eq!(map.cell(0, 0), Cell::Boundary);
    }

    #[test]
    fn huge_threshold_keeps_only_infinite_ratios() {
        let m = example_model();
        let map = build_decision_map(&m, Threshold::from_integer(1_000_000_000_000));
        assert_eq!(map.count(Cell::Target), 1);
        assert_eq!(map.cell(11, 10), Cell::Target);
    }

    #[test]
    fn exact_ratio_is_boundary() {
        let m = example_model();
        let map = build_decision_map(&m, Threshold::from_integer(3));
        assert_eq!(map.cell(10, 10), Cell::Boundary);
        assert_eq!(map.count(Cell::Boundary), 1);
        // 3.00 and 3/1 are the same threshold
        let map2 = build_decision_map(&m, "3.00".parse().unwrap());
        assert_eq!(map.cells(), map2.cells());
    }

    #[test]
    fn boundary_draw_extremes() {
        let m = example_model();
        let map = build_decision_map(&m, Threshold::from_integer(3));
        let target_cell = build_decision_map(&m, Threshold::ZERO);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            assert_eq!(map.classify(&at(10, 10), 0.0, &mut rng), Class::Target);
            assert_eq!(map.classify(&at(10, 10), 1.0, &mut rng), Class::NoTarget);
            assert_eq!(target_cell.classify(&at(11, 10), 1.0, &mut rng), Class::Target);
        }
    }

    #[test]
    fn boundary_draw_is_seeded() {
        let m = example_model();
        let map = build_decision_map(&m, Threshold::from_integer(3));
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..64).map(|_| map.classify(&at(10, 10), 0.5, &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(1), run(1));
        let mixed = run(1);
        assert!(mixed.contains(&Class::Target) && mixed.contains(&Class::NoTarget));
    }

    #[test]
    fn smoothing_fills_unseen_bins() {
        let m = example_model().with_smoothing(1);
        // counts +1, totals +6400 in both classes: equal weights away from data
        assert_eq!(m.likelihood_ratio(40, 40), LikelihoodRatio::Finite(1.0));
        let map = build_decision_map(&m, Threshold::from_integer(1));
        assert_eq!(map.cell(40, 40), Cell::Boundary);
    }

    #[test]
    fn threshold_parsing() {
        let t: Threshold = "0.26".parse().unwrap();
        assert_eq!((t.numerator(), t.denominator()), (26, 100));
        assert_eq!(t.to_string(), "0.26");
        assert_eq!("10".parse::<Threshold>().unwrap(), Threshold::from_hundredths(1000));
        assert_eq!(".5".parse::<Threshold>().unwrap(), Threshold::from_ratio(1, 2).unwrap());
        assert_eq!("7/20".parse::<Threshold>().unwrap().to_string(), "7/20");
        assert_eq!(Threshold::from_hundredths(5).to_string(), "0.05");
        assert_eq!(Threshold::from_hundredths(1000).to_string(), "10.00");
        assert_eq!("-1".parse::<Threshold>(), Err(ThresholdParseError::Negative));
        assert_eq!("1/0".parse::<Threshold>(), Err(ThresholdParseError::ZeroDenominator));
        assert!("1e3".parse::<Threshold>().is_err());
        assert!(".".parse::<Threshold>().is_err());
        assert!("99999999999999999999".parse::<Threshold>().is_err());
    }

    #[test]
    fn bad_boundary_probability() {
        assert!(NpConfig::new(Threshold::ZERO, 1.5, 0).is_err());
        assert!(NpConfig::new(Threshold::ZERO, -0.1, 0).is_err());
        assert!(NpConfig::new(Threshold::ZERO, 1.0, 0).is_ok());
    }

    #[test]
    fn map_rejects_wrong_cell_count() {
        let g = BinGrid::new(-100.0, -98.0, 1.0).unwrap();
        assert!(DecisionMap::from_cells(g, Threshold::ZERO, vec![Cell::NoTarget; 3]).is_err());
        assert!(DecisionMap::from_cells(g, Threshold::ZERO, vec![Cell::NoTarget; 4]).is_ok());
    }
}
