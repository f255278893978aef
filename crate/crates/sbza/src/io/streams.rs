//! Time-stamped event streams: packets, ground truth, turn signal and
//! detector output.

use super::*;
use sbza_core::sim::{GroundTruth, TurnSignalSample};
use sbza_core::{AlertState, BeaconPacket, Class, SensorPosition, VehicleId};

const PACKET_COLUMNS: [&str; 5] = ["t_ms", "vehicle_id", "sensor_pos", "seq", "rssi_dbm"];
const TRUTH_COLUMNS: [&str; 2] = ["t_ms", "in_blind_zone"];
const TURN_COLUMNS: [&str; 2] = ["t_ms", "turn_signal"];
const EVENT_COLUMNS: [&str; 4] = ["t_ms", "vehicle_id", "class", "alert"];

fn header(out: &mut String, cols: &[&str]) {
    out.push_str(&cols.join(","));
    out.push('\n');
}

/// Packets must be sorted by time; RSSI is written at 0.01 dB.
pub fn write_packets(meta: &Meta, packets: &[BeaconPacket]) -> String {
    let mut out = String::with_capacity(40 * packets.len() + 256);
    write_preamble(&mut out, Kind::Packets, &[], meta);
    header(&mut out, &PACKET_COLUMNS);
    for p in packets {
        let _ = writeln!(out, "{},{},{},{},{}", p.t_ms, p.vehicle_id, p.sensor, p.seq, p.rssi);
    }
    out
}

pub fn read_packets(text: &str) -> Result<(Meta, Vec<BeaconPacket>), IoError> {
    let table = parse_table(text, Kind::Packets, Some(&PACKET_COLUMNS))?;
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t_ms: u64 = uint_field(row, 0, "t_ms")?;
        check_sorted(out.last().map(|p: &BeaconPacket| &p.t_ms), &t_ms, false, row.line, "t_ms")?;
        out.push(BeaconPacket {
            t_ms,
            vehicle_id: parsed_field::<VehicleId>(row, 1, "vehicle_id", "invalid vehicle id")?,
            sensor: parsed_field::<SensorPosition>(row, 2, "sensor_pos", "unknown sensor position")?,
            seq: uint_field(row, 3, "seq")?,
            rssi: rssi_field(row, 4, "rssi_dbm")?,
        });
    }
    Ok((table.meta, out))
}

pub fn write_truth(meta: &Meta, truth: &[GroundTruth]) -> String {
    let mut out = String::with_capacity(10 * truth.len() + 256);
    write_preamble(&mut out, Kind::Truth, &[], meta);
    header(&mut out, &TRUTH_COLUMNS);
    for g in truth {
        let _ = writeln!(out, "{},{}", g.t_ms, u8::from(g.class.is_target()));
    }
    out
}

pub fn read_truth(text: &str) -> Result<(Meta, Vec<GroundTruth>), IoError> {
    let table = parse_table(text, Kind::Truth, Some(&TRUTH_COLUMNS))?;
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t_ms: u64 = uint_field(row, 0, "t_ms")?;
        check_sorted(out.last().map(|g: &GroundTruth| &g.t_ms), &t_ms, true, row.line, "t_ms")?;
        let class = if flag_field(row, 1, "in_blind_zone")? {
            Class::Target
        } else {
            Class::NoTarget
        };
        out.push(GroundTruth { t_ms, class });
    }
    Ok((table.meta, out))
}

pub fn write_turn_signal(meta: &Meta, samples: &[TurnSignalSample]) -> String {
    let mut out = String::with_capacity(10 * samples.len() + 256);
    write_preamble(&mut out, Kind::TurnSignal, &[], meta);
    header(&mut out, &TURN_COLUMNS);
    for s in samples {
        let _ = writeln!(out, "{},{}", s.t_ms, u8::from(s.on));
    }
    out
}

pub fn read_turn_signal(text: &str) -> Result<(Meta, Vec<TurnSignalSample>), IoError> {
    let table = parse_table(text, Kind::TurnSignal, Some(&TURN_COLUMNS))?;
    let mut out = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t_ms: u64 = uint_field(row, 0, "t_ms")?;
        check_sorted(out.last().map(|s: &TurnSignalSample| &s.t_ms), &t_ms, true, row.line, "t_ms")?;
        out.push(TurnSignalSample {
            t_ms,
            on: flag_field(row, 1, "turn_signal")?,
        });
    }
    Ok((table.meta, out))
}

/// One detector decision as written by `replay`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReplayEvent {
    pub t_ms: u64,
    pub vehicle_id: VehicleId,
    pub class: Class,
    pub alert: AlertState,
}

pub fn write_events(meta: &Meta, events: &[ReplayEvent]) -> String {
    let mut out = String::with_capacity(32 * events.len() + 256);
    write_preamble(&mut out, Kind::Events, &[], meta);
    header(&mut out, &EVENT_COLUMNS);
    for e in events {
        let _ = writeln!(out, "{},{},{},{}", e.t_ms, e.vehicle_id, e.class, e.alert);
    }
    out
}

fn parse_alert(s: &str) -> Option<AlertState> {
    [AlertState::None, AlertState::Light, AlertState::LightAndSound]
        .into_iter()
        .find(|a| a.as_str() == s)
}

pub fn read_events(text: &str) -> Result<(Meta, Vec<ReplayEvent>), IoError> {
    let table = parse_table(text, Kind::Events, Some(&EVENT_COLUMNS))?;
    let mut out: Vec<ReplayEvent> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t_ms: u64 = uint_field(row, 0, "t_ms")?;
        let vehicle_id: VehicleId = parsed_field(row, 1, "vehicle_id", "invalid vehicle id")?;
        let key = (t_ms, vehicle_id);
        check_sorted(out.last().map(|e| (e.t_ms, e.vehicle_id.clone())).as_ref(), &key, true, row.line, "t_ms, vehicle_id")?;
        let class = parsed_field(row, 2, "class", "unknown class")?;
        let alert = parse_alert(row.fields[3]).ok_or_else(|| super::field_error(row, 3, "alert", "unknown alert"))?;
        if alert != AlertState::None && class == Class::NoTarget {
            return Err(IoError::Invalid {
                line: row.line,
                reason: "alert raised without a target".to_string(),
            });
        }
        out.push(ReplayEvent {
            t_ms: key.0,
            vehicle_id: key.1,
            class,
            alert,
        });
    }
    Ok((table.meta, out))
}
