//! Trained histograms and decision maps.
//!
//! A model file lists only the occupied cells. A decision map file has one
//! line per front-RSSI bin holding one `T`, `N` or `B` per rear-RSSI bin.

use super::*;
use sbza_core::{Cell, Class, DecisionMap, Histogram2D, Threshold, TrainedModel};

const MODEL_COLUMNS: [&str; 4] = ["i", "j", "target_count", "notarget_count"];

pub fn write_model(meta: &Meta, model: &TrainedModel) -> String {
    let grid = model.grid();
    let mut fixed = grid_fields(grid);
    fixed.push(("smoothing", model.smoothing().to_string()));
    fixed.push(("n_target", model.n_target().to_string()));
    fixed.push(("n_notarget", model.n_notarget().to_string()));
    let mut out = String::new();
    write_preamble(&mut out, Kind::Model, &fixed, meta);
    out.push_str(&MODEL_COLUMNS.join(","));
    out.push('\n');
    let t = model.histogram(Class::Target);
    let nt = model.histogram(Class::NoTarget);
    for i in 0..grid.n_bins() {
        for j in 0..grid.n_bins() {
            let (a, b) = (t.count(i, j), nt.count(i, j));
            if a != 0 || b != 0 {
                let _ = writeln!(out, "{i},{j},{a},{b}");
            }
        }
    }
    out
}

pub fn read_model(text: &str) -> Result<(Meta, TrainedModel), IoError> {
    let mut table = parse_table(text, Kind::Model, Some(&MODEL_COLUMNS))?;
    let grid = take_grid(&mut table.meta)?;
    let smoothing: u32 = meta_uint(&mut table.meta, "smoothing")?;
    let n_target: u64 = meta_uint(&mut table.meta, "n_target")?;
    let n_notarget: u64 = meta_uint(&mut table.meta, "n_notarget")?;
    let n = grid.n_bins();
    let mut target = vec![0u32; grid.cells()];
    let mut notarget = vec![0u32; grid.cells()];
    let mut prev = None;
    for row in &table.rows {
        let i: u32 = uint_field(row, 0, "i")?;
        let j: u32 = uint_field(row, 1, "j")?;
        if i >= n {
            return Err(super::field_error(row, 0, "i", "bin index outside the grid"));
        }
        if j >= n {
            return Err(super::field_error(row, 1, "j", "bin index outside the grid"));
        }
        check_sorted(prev.as_ref(), &(i, j), true, row.line, "i, j")?;
        prev = Some((i, j));
        let a: u32 = uint_field(row, 2, "target_count")?;
        let b: u32 = uint_field(row, 3, "notarget_count")?;
        if a == 0 && b == 0 {
            return Err(IoError::Invalid {
                line: row.line,
                reason: "empty cells are not listed".to_string(),
            });
        }
        let off = grid.offset(i, j);
        target[off] = a;
        notarget[off] = b;
    }
    let bad = |reason: String| IoError::Invalid {
        line: text.lines().count(),
        reason,
    };
    let t = Histogram2D::from_counts(grid, target).map_err(|e| bad(e.to_string()))?;
    let nt = Histogram2D::from_counts(grid, notarget).map_err(|e| bad(e.to_string()))?;
    if t.total() != n_target || nt.total() != n_notarget {
        return Err(bad(format!(
            "cell counts sum to {}/{}, header says {n_target}/{n_notarget}",
            t.total(),
            nt.total()
        )));
    }
    let model = TrainedModel::from_histograms(t, nt)
        .map_err(|e| bad(e.to_string()))?
        .with_smoothing(smoothing);
    Ok((table.meta, model))
}

pub fn write_map(meta: &Meta, map: &DecisionMap) -> String {
    let grid = map.grid();
    let mut fixed = grid_fields(grid);
    fixed.push(("lambda", map.threshold().to_string()));
    let n = grid.n_bins() as usize;
    let mut out = String::with_capacity(grid.cells() + n + 256);
    write_preamble(&mut out, Kind::Map, &fixed, meta);
    for row in map.cells().chunks(n) {
        out.extend(row.iter().map(|c| c.as_char()));
        out.push('\n');
    }
    out
}

pub fn read_map(text: &str) -> Result<(Meta, DecisionMap), IoError> {
    let mut table = parse_table(text, Kind::Map, None)?;
    let grid = take_grid(&mut table.meta)?;
    let lambda = table.meta.take("lambda")?;
    let threshold: Threshold = lambda.parse().map_err(|e: sbza_core::classifier::ThresholdParseError| IoError::BadKey {
        key: "lambda",
        reason: e.to_string(),
    })?;
    let n = grid.n_bins() as usize;
    if table.rows.len() < n {
        return Err(IoError::Truncated {
            expected: n,
            found: table.rows.len(),
        });
    }
    let mut cells = Vec::with_capacity(grid.cells());
    for row in &table.rows {
        if cells.len() == grid.cells() {
            return Err(IoError::Invalid {
                line: row.line,
                reason: format!("map has more than {n} rows"),
            });
        }
        let line = row.fields[0];
        let before = cells.len();
        for ch in line.chars() {
            let cell = Cell::from_char(ch).ok_or_else(|| IoError::Invalid {
                line: row.line,
                reason: format!("unknown cell {ch:?}, expected T, N or B"),
            })?;
            cells.push(cell);
        }
        if cells.len() - before != n {
            return Err(IoError::Invalid {
                line: row.line,
                reason: format!("row has {} cells, expected {n}", cells.len() - before),
            });
        }
    }
    let map = DecisionMap::from_cells(grid, threshold, cells).map_err(|e| IoError::Invalid {
        line: 0,
        reason: e.to_string(),
    })?;
    Ok((table.meta, map))
}

/// Reads a map and checks it was built on `expected`.
pub fn read_map_for(text: &str, expected: &BinGrid) -> Result<(Meta, DecisionMap), IoError> {
    let (meta, map) = read_map(text)?;
    if map.grid() != expected {
        return Err(IoError::GridMismatch {
            expected: describe_grid(expected),
            found: describe_grid(map.grid()),
        });
    }
    Ok((meta, map))
}
