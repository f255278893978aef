//! Received signal strength values and the quantization grid used by the
//! class-conditional histograms.

use core::fmt;

/// Received signal strength in dBm. Always finite.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rssi(f64);

impl Rssi {
    pub fn new(dbm: f64) -> Result<Self, NonFiniteRssi> {
        if dbm.is_finite() {
            Ok(Rssi(dbm))
        } else {
            Err(NonFiniteRssi)
        }
    }

    pub fn dbm(self) -> f64 {
        self.0
    }

    /// Rounds to the 0.01 dB precision used by every on-disk format.
    pub fn to_centi_db(self) -> Rssi {
        Rssi(libm::round(self.0 * 100.0) / 100.0)
    }
}

impl fmt::Display for Rssi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonFiniteRssi;

impl fmt::Display for NonFiniteRssi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("RSSI must be a finite number of dBm")
    }
}

impl core::error::Error for NonFiniteRssi {}

#[derive(Debug, Clone, PartialEq)]
pub enum GridError {
    NonFinite,
    EmptyRange { rssi_min: f64, rssi_max: f64 },
    BadWidth(f64),
    TooFewBins(u32),
    TooManyBins(u64),
}

impl fmt::Display for GridError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridError::NonFinite => f.write_str("grid bounds and bin width must be finite"),
            GridError::EmptyRange { rssi_min, rssi_max } => {
                write!(f, "rssi_min ({rssi_min}) must be below rssi_max ({rssi_max})")
            }
            GridError::BadWidth(w) => write!(f, "bin width must be positive, got {w}"),
            GridError::TooFewBins(n) => write!(f, "grid needs at least 2 bins per axis, got {n}"),
            GridError::TooManyBins(n) => {
                write!(f, "grid has {n} bins per axis, limit is {}", BinGrid::MAX_BINS)
            }
        }
    }
}

impl core::error::Error for GridError {}

/// Uniform quantization of `[rssi_min, rssi_max]` into `n_bins` bins per axis.
///
/// The lowest bin starts at the noise floor; values outside the range are
/// clamped onto the edge bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinGrid {
    rssi_min: f64,
    rssi_max: f64,
    bin_width: f64,
    n_bins: u32,
}

impl BinGrid {
    pub const MAX_BINS: u32 = 4096;

    pub fn new(rssi_min: f64, rssi_max: f64, bin_width: f64) -> Result<Self, GridError> {
        if !(rssi_min.is_finite() && rssi_max.is_finite() && bin_width.is_finite()) {
            return Err(GridError::NonFinite);
        }
        if rssi_min >= rssi_max {
            return Err(GridError::EmptyRange { rssi_min, rssi_max });
        }
        if bin_width <= 0.0 {
            return Err(GridError::BadWidth(bin_width));
        }
        // A tiny slack keeps exact multiples (80 / 1.0, 8 / 0.1) from
        // rounding up to an extra bin.
        let raw = libm::ceil((rssi_max - rssi_min) / bin_width - 1e-9);
        if raw > f64::from(Self::MAX_BINS) {
            return Err(GridError::TooManyBins(raw as u64));
        }
        let n_bins = raw.max(0.0) as u32;
        if n_bins < 2 {
            return Err(GridError::TooFewBins(n_bins));
        }
        Ok(BinGrid {
            rssi_min,
            rssi_max,
            bin_width,
            n_bins,
        })
    }

    pub fn rssi_min(&self) -> f64 {
        self.rssi_min
    }

    pub fn rssi_max(&self) -> f64 {
        self.rssi_max
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    pub fn n_bins(&self) -> u32 {
        self.n_bins
    }

    /// Number of cells in the 2-D grid.
    pub fn cells(&self) -> usize {
        self.n_bins as usize * self.n_bins as usize
    }

    pub fn clamp(&self, rssi: Rssi) -> Rssi {
        Rssi(rssi.0.clamp(self.rssi_min, self.rssi_max))
    }

    /// Bin index of one RSSI component.
    pub fn bin(&self, rssi: Rssi) -> u32 {
        let v = self.clamp(rssi).0;
        let idx = libm::floor((v - self.rssi_min) / self.bin_width);
        (idx.max(0.0) as u32).min(self.n_bins - 1)
    }

    /// Lower edge of bin `idx` in dBm.
    pub fn bin_lower_edge(&self, idx: u32) -> f64 {
        self.rssi_min + f64::from(idx) * self.bin_width
    }

    /// Row-major cell offset of `(i, j)`.
    pub fn offset(&self, i: u32, j: u32) -> usize {
        debug_assert!(i < self.n_bins && j < self.n_bins);
        i as usize * self.n_bins as usize + j as usize
    }
}

impl Default for BinGrid {
    /// `[-100, -20]` dBm at 1 dB: 80 x 80 bins.
    fn default() -> Self {
        BinGrid {
            rssi_min: -100.0,
            rssi_max: -20.0,
            bin_width: 1.0,
            n_bins: 80,
        }
    }
}

/// Bin indices `(front, rear)` of a smoothed observation.
pub fn quantize(grid: &BinGrid, obs: &crate::SmoothedObservation) -> (u32, u32) {
    (grid.bin(obs.front), grid.bin(obs.rear))
}
