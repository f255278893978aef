//! Paired front/rear observations, the three-period moving average, and
//! labeled training records.

use core::fmt;
use core::str::FromStr;

use crate::rssi::Rssi;

/// One beacon period's pair of RSSI values from the front and rear sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub front: Rssi,
    pub rear: Rssi,
    /// Start of the period, milliseconds since the start of the run.
    pub t_ms: u64,
}

impl Observation {
    /// The observation recorded for a period in which nothing was received.
    pub fn silent(noise_floor: Rssi, t_ms: u64) -> Self {
        Observation {
            front: noise_floor,
            rear: noise_floor,
            t_ms,
        }
    }
}

/// Mean of the three most recent observations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedObservation {
    pub front: Rssi,
    pub rear: Rssi,
    pub t_ms: u64,
}

fn mean3(a: f64, b: f64, c: f64) -> f64 {
    let lo = a.min(b).min(c);
    let hi = a.max(b).max(c);
    // Clamping keeps constant windows exact under rounding.
    ((a + b + c) / 3.0).clamp(lo, hi)
}

/// Equal-weight average of a window ordered oldest to newest. The result
/// carries the newest observation's timestamp.
pub fn smooth(window: &[Observation; 3]) -> SmoothedObservation {
    let [a, b, c] = window;
    let front = mean3(a.front.dbm(), b.front.dbm(), c.front.dbm());
    let rear = mean3(a.rear.dbm(), b.rear.dbm(), c.rear.dbm());
    SmoothedObservation {
        // means of finite values are finite
        front: Rssi::new(front).expect("finite mean"),
        rear: Rssi::new(rear).expect("finite mean"),
        t_ms: c.t_ms,
    }
}

/// Ground truth or decided class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Class {
    /// A vehicle is in the blind zone.
    Target,
    NoTarget,
}

impl Class {
    pub fn as_str(self) -> &'static str {
        match self {
            Class::Target => "Target",
            Class::NoTarget => "NoTarget",
        }
    }

    pub fn is_target(self) -> bool {
        self == Class::Target
    }
}

impl fmt::Display for Class {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownClass;

impl fmt::Display for UnknownClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("expected Target or NoTarget")
    }
}

impl core::error::Error for UnknownClass {}

impl FromStr for Class {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Target" => Ok(Class::Target),
            "NoTarget" => Ok(Class::NoTarget),
            _ => Err(UnknownClass),
        }
    }
}

/// A smoothed observation with its actual class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Record {
    pub obs: SmoothedObservation,
    pub truth: Class,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn o(front: f64, rear: f64, t_ms: u64) -> Observation {
        Observation {
            front: Rssi::new(front).unwrap(),
            rear: Rssi::new(rear).unwrap(),
            t_ms,
        }
    }

    #[test]
    fn constant_window() {
        let s = smooth(&[o(-60.0, -70.0, 0), o(-60.0, -70.0, 250), o(-60.0, -70.0, 500)]);
        assert_eq!((s.front.dbm(), s.rear.dbm()), (-60.0, -70.0));
        assert_eq!(s.t_ms, 500);
    }

    #[test]
    fn plain_mean() {
        let s = smooth(&[o(-50.0, -60.0, 0), o(-56.0, -63.0, 1), o(-62.0, -66.0, 2)]);
        assert_eq!((s.front.dbm(), s.rear.dbm()), (-56.0, -63.0));
    }

    #[test]
    fn noise_floor_padding() {
        let nf = -100.0;
        let s = smooth(&[o(-90.0, nf, 0), o(nf, nf, 1), o(nf, nf, 2)]);
        assert!((s.front.dbm() + 96.67).abs() < 0.01);
        assert_eq!(s.rear.dbm(), -100.0);
    }

    #[test]
    fn class_tokens() {
        for c in [Class::Target, Class::NoTarget] {
            assert_eq!(c.as_str().parse::<Class>(), Ok(c));
        }
        assert!("target".parse::<Class>().is_err());
    }

    proptest! {
        #[test]
        fn constant_windows_are_fixed_points(v in -120.0f64..0.0, w in -120.0f64..0.0) {
            let s = smooth(&[o(v, w, 0), o(v, w, 1), o(v, w, 2)]);
            prop_assert_eq!(s.front.dbm(), v);
            prop_assert_eq!(s.rear.dbm(), w);
        }

        #[test]
        fn mean_within_window_range(a in -120.0f64..0.0, b in -120.0f64..0.0, c in -120.0f64..0.0) {
            let s = smooth(&[o(a, c, 0), o(b, a, 1), o(c, b, 2)]);
            let lo = a.min(b).min(c);
            let hi = a.max(b).max(c);
            prop_assert!(s.front.dbm() >= lo && s.front.dbm() <= hi);
            prop_assert!(s.rear.dbm() >= lo && s.rear.dbm() <= hi);
        }
    }
}
