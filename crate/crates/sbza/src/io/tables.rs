use super::*;
use sbza_core::{Class, OperatingPoint, Record, SmoothedObservation, Threshold};

const RECORD_COLUMNS: [&str; 4] = ["t_ms", "front_dbm", "rear_dbm", "class"];
const ROC_COLUMNS: [&str; 5] = ["lambda", "p_d", "p_fa", "n_target", "n_notarget"];

/// Observations are written at 0.01 dB, so records only round-trip exactly
/// once they have been rounded to that precision.
pub fn write_records(meta: &Meta, records: &[Record]) -> String {
    let mut out = String::with_capacity(32 * records.len() + 256);
    write_preamble(&mut out, Kind::Records, &[], meta);
    out.push_str(&RECORD_COLUMNS.join(","));
    out.push('\n');
    for r in records {
        let _ = writeln!(out, "{},{},{},{}", r.obs.t_ms, r.obs.front, r.obs.rear, r.truth);
    }
    out
}

pub fn read_records(text: &str) -> Result<(Meta, Vec<Record>), IoError> {
    let table = parse_table(text, Kind::Records, Some(&RECORD_COLUMNS))?;
    let mut out: Vec<Record> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let t_ms: u64 = uint_field(row, 0, "t_ms")?;
        check_sorted(out.last().map(|r| &r.obs.t_ms), &t_ms, false, row.line, "t_ms")?;
        out.push(Record {
            obs: SmoothedObservation {
                front: rssi_field(row, 1, "front_dbm")?,
                rear: rssi_field(row, 2, "rear_dbm")?,
                t_ms,
            },
            truth: parsed_field::<Class>(row, 3, "class", "unknown class")?,
        });
    }
    Ok((table.meta, out))
}

/// Rates are written in shortest round-trip form.
pub fn write_roc(meta: &Meta, points: &[OperatingPoint]) -> String {
    let mut out = String::with_capacity(48 * points.len() + 256);
    write_preamble(&mut out, Kind::Roc, &[], meta);
    out.push_str(&ROC_COLUMNS.join(","));
    out.push('\n');
    for p in points {
        let _ = writeln!(out, "{},{},{},{},{}", p.threshold, p.p_d, p.p_fa, p.n_target, p.n_notarget);
    }
    out
}

fn rate_field(row: &Row<'_>, idx: usize, field: &'static str) -> Result<f64, IoError> {
    let v: f64 = parsed_field(row, idx, field, "expected a rate")?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(super::field_error(row, idx, field, "rate outside [0, 1]"))
    }
}

pub fn read_roc(text: &str) -> Result<(Meta, Vec<OperatingPoint>), IoError> {
    let table = parse_table(text, Kind::Roc, Some(&ROC_COLUMNS))?;
    let mut out: Vec<OperatingPoint> = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let threshold: Threshold = parsed_field(row, 0, "lambda", "invalid threshold")?;
        check_sorted(out.last().map(|p| &p.threshold), &threshold, true, row.line, "lambda")?;
        out.push(OperatingPoint {
            threshold,
            p_d: rate_field(row, 1, "p_d")?,
            p_fa: rate_field(row, 2, "p_fa")?,
            n_target: uint_field(row, 3, "n_target")?,
            n_notarget: uint_field(row, 4, "n_notarget")?,
        });
    }
    Ok((table.meta, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use sbza_core::Rssi;

    #[test]
    fn records_round_trip() {
        let r = |t, f, b, truth| Record {
            obs: SmoothedObservation {
                front: Rssi::new(f).unwrap(),
                rear: Rssi::new(b).unwrap(),
                t_ms: t,
            },
            truth,
        };
        let records = vec![r(0, -96.67, -100.0, Class::NoTarget), r(250, -55.4, -63.0, Class::Target)];
        let text = write_records(&Meta::new().with("scenario", "parking"), &records);
        assert!(text.ends_with("t_ms,front_dbm,rear_dbm,class\n0,-96.67,-100.00,NoTarget\n250,-55.40,-63.00,Target\n"));
        let (meta, back) = read_records(&text).unwrap();
        assert_eq!(back, records);
        assert_eq!(write_records(&meta, &back), text);
    }

    #[test]
    fn roc_round_trip() {
        let pts = vec![
            OperatingPoint {
                threshold: Threshold::from_hundredths(0),
                p_d: 1.0,
                p_fa: 2.0 / 3.0,
                n_target: 3,
                n_notarget: 9,
            },
            OperatingPoint {
                threshold: Threshold::from_hundredths(26),
                p_d: 0.1,
                p_fa: 0.0,
                n_target: 3,
                n_notarget: 9,
            },
        ];
        let text = write_roc(&Meta::new(), &pts);
        assert!(text.contains("\n0.26,0.1,0,3,9\n"), "{text}");
        let (_, back) = read_roc(&text).unwrap();
        assert_eq!(back, pts);
        assert_eq!(back[0].threshold.to_string(), "0.00");
    }

    #[test]
    fn roc_rejects_bad_rows() {
        let h = "# sbza-roc v1\nlambda,p_d,p_fa,n_target,n_notarget\n";
        assert!(matches!(read_roc(&format!("{h}0.5,1.5,0,1,1\n")), Err(IoError::Field { field: "p_d", .. })));
        assert!(matches!(
            read_roc(&format!("{h}0.5,1,0,1,1\n0.5,1,0,1,1\n")),
            Err(IoError::Unsorted { line: 4, .. })
        ));
        assert!(matches!(read_roc(&format!("{h}-1,1,0,1,1\n")), Err(IoError::Field { field: "lambda", .. })));
    }
}
