//! Sensor battery life and beacon period planning.
//!
//! Only beacon transmission and sleep current are modelled; receive and
//! listen current are not.

use core::fmt;

pub const HOURS_PER_YEAR: f64 = 8760.0;

/// Current draw of a beaconing sensor over one beacon period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorPowerProfile {
    /// Current while transmitting a beacon, mA.
    pub i_tx_ma: f64,
    /// Time spent transmitting per period, ms.
    pub t_tx_ms: f64,
    /// Sleep current, mA.
    pub i_sleep_ma: f64,
    /// Beacon period (transmit plus sleep time), ms.
    pub period_ms: f64,
}

impl SensorPowerProfile {
    /// 8-byte BLE beacon on a CC2540 node, one beacon every 250 ms.
    pub const CC2540_BEACON: SensorPowerProfile = SensorPowerProfile {
        i_tx_ma: 7.599,
        t_tx_ms: 1.028,
        i_sleep_ma: 0.0009,
        period_ms: 250.0,
    };

    pub fn validate(&self) -> Result<(), PowerError> {
        let fields = [
            ("i_tx_ma", self.i_tx_ma),
            ("t_tx_ms", self.t_tx_ms),
            ("i_sleep_ma", self.i_sleep_ma),
            ("period_ms", self.period_ms),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(PowerError::NotPositive(name));
            }
        }
        if self.t_tx_ms >= self.period_ms {
            return Err(PowerError::TransmitExceedsPeriod);
        }
        Ok(())
    }

    pub fn sleep_ms(&self) -> f64 {
        self.period_ms - self.t_tx_ms
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatterySpec {
    pub capacity_mah: f64,
    /// Fraction of the day the vehicle, and so the sensor, is running.
    pub duty_cycle: f64,
}

impl BatterySpec {
    /// 1000 mAh lithium cell on a car driven 8 hours a day.
    pub const COIN_CELL_8H: BatterySpec = BatterySpec {
        capacity_mah: 1000.0,
        duty_cycle: 8.0 / 24.0,
    };

    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.capacity_mah.is_finite() && self.capacity_mah > 0.0) {
            return Err(PowerError::NotPositive("capacity_mah"));
        }
        if !(self.duty_cycle > 0.0 && self.duty_cycle <= 1.0) {
            return Err(PowerError::DutyCycle(self.duty_cycle));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerError {
    NotPositive(&'static str),
    TransmitExceedsPeriod,
    DutyCycle(f64),
    /// The target never crosses the zone, so any period works.
    UnboundedPeriod,
    DeliveryRatio(f64),
}

impl fmt::Display for PowerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PowerError::NotPositive(name) => write!(f, "{name} must be positive"),
            PowerError::TransmitExceedsPeriod => f.write_str("transmit time must be shorter than the period"),
            PowerError::DutyCycle(d) => write!(f, "duty cycle must be in (0, 1], got {d}"),
            PowerError::UnboundedPeriod => {
                f.write_str("relative speed is zero: the beacon period is unbounded")
            }
            PowerError::DeliveryRatio(r) => write!(f, "delivery ratio must be in (0, 1], got {r}"),
        }
    }
}

impl core::error::Error for PowerError {}

/// Time-weighted mean current over one period, mA.
pub fn avg_current(profile: &SensorPowerProfile) -> f64 {
    let p = profile;
    (p.i_tx_ma * p.t_tx_ms + p.i_sleep_ma * p.sleep_ms()) / p.period_ms
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryLife {
    pub hours: f64,
    /// Running around the clock.
    pub years_continuous: f64,
    /// Running only for the duty cycle.
    pub years_at_duty: f64,
}

pub fn battery_life(avg_current_ma: f64, battery: &BatterySpec) -> BatteryLife {
    let hours = battery.capacity_mah / avg_current_ma;
    let years = hours / HOURS_PER_YEAR;
    BatteryLife {
        hours,
        years_continuous: years,
        years_at_duty: years / battery.duty_cycle,
    }
}

fn round_to(v: f64, decimals: i32) -> f64 {
    let s = libm::pow(10.0, f64::from(decimals));
    libm::round(v * s) / s
}

/// Battery life as a hand calculation reports it: the mean current rounded
/// to `current_decimals` places first, then years rounded to two places
/// before dividing by the duty cycle.
pub fn reported_battery_life(profile: &SensorPowerProfile, battery: &BatterySpec, current_decimals: i32) -> (f64, BatteryLife) {
    let current = round_to(avg_current(profile), current_decimals);
    let hours = battery.capacity_mah / current;
    let years = round_to(hours / HOURS_PER_YEAR, 2);
    let life = BatteryLife {
        hours,
        years_continuous: years,
        years_at_duty: round_to(years / battery.duty_cycle, 2),
    };
    (current, life)
}

/// Longest beacon period, in seconds, that still delivers three beacons
/// while a target crosses a zone of `zone_length_m` at `relative_speed_mps`
/// with packet delivery ratio `delivery_ratio`.
pub fn max_beacon_period(zone_length_m: f64, relative_speed_mps: f64, delivery_ratio: f64) -> Result<f64, PowerError> {
    if !(zone_length_m.is_finite() && zone_length_m > 0.0) {
        return Err(PowerError::NotPositive("zone_length_m"));
    }
    if !(relative_speed_mps.is_finite() && relative_speed_mps >= 0.0) {
        return Err(PowerError::NotPositive("relative_speed_mps"));
    }
    if relative_speed_mps == 0.0 {
        return Err(PowerError::UnboundedPeriod);
    }
    if !(delivery_ratio > 0.0 && delivery_ratio <= 1.0) {
        return Err(PowerError::DeliveryRatio(delivery_ratio));
    }
    Ok(zone_length_m * delivery_ratio / (3.0 * relative_speed_mps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reference_sensor_current() {
        let i = avg_current(&SensorPowerProfile::CC2540_BEACON);
        assert!((i - 0.032).abs() < 0.0005, "{i}");
    }

    #[test]
    fn half_rate_current() {
        let p = SensorPowerProfile {
            period_ms: 500.0,
            ..SensorPowerProfile::CC2540_BEACON
        };
        assert!((avg_current(&p) - 0.0165).abs() < 0.00005);
    }

    #[test]
    fn constant_current() {
        let p = SensorPowerProfile {
            i_tx_ma: 2.5,
            t_tx_ms: 3.0,
            i_sleep_ma: 2.5,
            period_ms: 100.0,
        };
        assert!((avg_current(&p) - 2.5).abs() < 1e-12);
    }

    #[test]
    fn life_at_reference_current() {
        let life = battery_life(0.032, &BatterySpec::COIN_CELL_8H);
        assert!((life.hours - 31250.0).abs() < 1e-9);
        assert!((life.years_continuous - 3.57).abs() < 0.01);
        assert!((life.years_at_duty - 10.71).abs() < 0.02);
        let big = battery_life(
            0.032,
            &BatterySpec {
                capacity_mah: 2000.0,
                duty_cycle: 1.0,
            },
        );
        assert!((big.years_at_duty - 7.13).abs() < 0.01);
    }

    #[test]
    fn reported_life_matches_hand_calculation() {
        let (i, life) = reported_battery_life(&SensorPowerProfile::CC2540_BEACON, &BatterySpec::COIN_CELL_8H, 3);
        assert_eq!(i, 0.032);
        assert!((life.hours - 31250.0).abs() < 1e-6);
        assert_eq!(life.years_continuous, 3.57);
        assert_eq!(life.years_at_duty, 10.71);
    }

    #[test]
    fn beacon_period_bound() {
        let t = max_beacon_period(6.0, 5.0, 0.99).unwrap();
        assert!((t - 0.396).abs() < 1e-9);
        assert!(t >= 0.25);
        assert!((max_beacon_period(15.0, 5.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(max_beacon_period(6.0, 0.0, 0.99), Err(PowerError::UnboundedPeriod));
        assert!(max_beacon_period(6.0, 5.0, 0.0).is_err());
        assert!(max_beacon_period(-1.0, 5.0, 0.5).is_err());
    }

    #[test]
    fn validation() {
        assert!(SensorPowerProfile::CC2540_BEACON.validate().is_ok());
        let bad = SensorPowerProfile {
            t_tx_ms: 300.0,
            ..SensorPowerProfile::CC2540_BEACON
        };
        assert_eq!(bad.validate(), Err(PowerError::TransmitExceedsPeriod));
        assert!(BatterySpec { capacity_mah: 1.0, duty_cycle: 0.0 }.validate().is_err());
    }

    proptest! {
        #[test]
        fn mean_current_is_between_states(
            i_tx in 0.001f64..50.0, i_sleep in 0.0001f64..50.0,
            t_tx in 0.01f64..10.0, extra in 0.01f64..1000.0,
        ) {
            let p = SensorPowerProfile { i_tx_ma: i_tx, t_tx_ms: t_tx, i_sleep_ma: i_sleep, period_ms: t_tx + extra };
            let i = avg_current(&p);
            let eps = 1e-12 * i_tx.max(i_sleep);
            prop_assert!(i >= i_tx.min(i_sleep) - eps && i <= i_tx.max(i_sleep) + eps);
        }

        #[test]
        fn life_scales_with_capacity(cap in 1.0f64..1e5, i in 1e-4f64..10.0, duty in 0.01f64..1.0) {
            let a = battery_life(i, &BatterySpec { capacity_mah: cap, duty_cycle: duty });
            let b = battery_life(i, &BatterySpec { capacity_mah: 2.0 * cap, duty_cycle: duty });
            prop_assert!((b.hours - 2.0 * a.hours).abs() <= 1e-9 * b.hours);
            prop_assert!((b.years_continuous - 2.0 * a.years_continuous).abs() <= 1e-9 * b.years_continuous);
            prop_assert!((b.years_at_duty - 2.0 * a.years_at_duty).abs() <= 1e-9 * b.years_at_duty);
        }

        #[test]
        fn period_bound_monotone(l in 0.5f64..50.0, v in 0.1f64..20.0, rho in 0.05f64..0.95, d in 0.01f64..1.0) {
            let base = max_beacon_period(l, v, rho).unwrap();
            prop_assert!(max_beacon_period(l + d, v, rho).unwrap() > base);
            prop_assert!(max_beacon_period(l, v, (rho + d * 0.05).min(1.0)).unwrap() > base);
            prop_assert!(max_beacon_period(l, v + d, rho).unwrap() < base);
        }
    }
}
