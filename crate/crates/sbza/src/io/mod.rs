//! Line-oriented text formats.
//!
//! Every file starts with a magic line naming the format and its version,
//! followed by `# key=value` metadata lines and, for tabular formats, a
//! column header row:
//!
//! ```text
//! # sbza-packets v1
//! # seed=7
//! t_ms,vehicle_id,sensor_pos,seq,rssi_dbm
//! 0,target,FrontRight,0,-61.25
//! ```
//!
//! Readers are strict: they reject anything the writers would not produce
//! instead of repairing it, so a file that reads back writes back
//! byte-identically.

mod model;
mod streams;
mod tables;

pub use model::{read_map, read_map_for, read_model, write_map, write_model};
pub use streams::{
    read_events, read_packets, read_truth, read_turn_signal, write_events, write_packets, write_truth,
    write_turn_signal, ReplayEvent,
};
pub use tables::{read_records, read_roc, write_records, write_roc};

use sbza_core::{BinGrid, Rssi};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Packets,
    Truth,
    TurnSignal,
    Records,
    Roc,
    Model,
    Map,
    Events,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Packets => "packets",
            Kind::Truth => "truth",
            Kind::TurnSignal => "turn-signal",
            Kind::Records => "records",
            Kind::Roc => "roc",
            Kind::Model => "model",
            Kind::Map => "map",
            Kind::Events => "events",
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum IoError {
    #[error("line 1: expected a '# sbza-<format> v<version>' line")]
    MissingMagic,
    #[error("line 1: expected a {expected} file, found {found}")]
    WrongKind { expected: &'static str, found: String },
    #[error("line 1: unsupported {kind} format version {found} (this build reads version {FORMAT_VERSION})")]
    Version { kind: &'static str, found: String },
    #[error("line {line}: malformed metadata line")]
    BadMeta { line: usize },
    #[error("line {line}: duplicate metadata key {key}")]
    DuplicateKey { line: usize, key: String },
    #[error("missing metadata key {0}")]
    MissingKey(&'static str),
    #[error("metadata key {key}: {reason}")]
    BadKey { key: &'static str, reason: String },
    #[error("line {line}: expected header '{expected}'")]
    Header { line: usize, expected: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    FieldCount { line: usize, expected: usize, found: usize },
    #[error("line {line}: field {field}: {reason}: {value:?}")]
    Field {
        line: usize,
        field: &'static str,
        value: String,
        reason: &'static str,
    },
    #[error("line {line}: rows must be sorted by {field}")]
    Unsorted { line: usize, field: &'static str },
    #[error("line {line}: empty line")]
    EmptyLine { line: usize },
    #[error("line {line}: {reason}")]
    Invalid { line: usize, reason: String },
    #[error("file ends after {found} of {expected} rows")]
    Truncated { expected: usize, found: usize },
    #[error("file is not valid text: {0}")]
    Encoding(String),
    #[error("grid mismatch: file has {found}, expected {expected}")]
    GridMismatch { expected: String, found: String },
}

/// Ordered `key=value` metadata carried in a file header.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Meta {
    entries: Vec<(String, String)>,
}

impl Meta {
    pub fn new() -> Self {
        Meta::default()
    }

    /// Sets `key`, replacing an existing value in place.
    ///
    /// Panics if the key or value could not be written back as a header
    /// line.
    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        assert!(valid_key(key), "invalid metadata key {key:?}");
        assert!(valid_value(&value), "invalid metadata value {value:?}");
        match self.entries.iter_mut().find(|(k, _)| k == key) {
            Some(e) => e.1 = value,
            None => self.entries.push((key.to_string(), value)),
        }
        self
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.set(key, value);
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn take(&mut self, key: &'static str) -> Result<String, IoError> {
        let idx = self
            .entries
            .iter()
            .position(|(k, _)| k == key)
            .ok_or(IoError::MissingKey(key))?;
        Ok(self.entries.remove(idx).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'.'))
}

fn valid_value(value: &str) -> bool {
    !value.chars().any(|c| c.is_control())
}

fn write_preamble(out: &mut String, kind: Kind, fixed: &[(&str, String)], meta: &Meta) {
    let _ = writeln!(out, "# sbza-{} v{FORMAT_VERSION}", kind.name());
    for (k, v) in fixed {
        let _ = writeln!(out, "# {k}={v}");
    }
    for (k, v) in meta.iter() {
        debug_assert!(!fixed.iter().any(|(f, _)| *f == k), "metadata shadows {k}");
        let _ = writeln!(out, "# {k}={v}");
    }
}

pub(crate) struct Row<'a> {
    pub line: usize,
    pub fields: Vec<&'a str>,
}

pub(crate) struct Table<'a> {
    pub meta: Meta,
    pub rows: Vec<Row<'a>>,
}

/// Splits a file into metadata and rows. With `header` set, the first
/// non-metadata line must be exactly that column list and every row must
/// have that many fields.
pub(crate) fn parse_table<'a>(text: &'a str, kind: Kind, header: Option<&[&str]>) -> Result<Table<'a>, IoError> {
    let body = text.strip_suffix('\n').unwrap_or(text);
    let mut lines = body.split('\n').enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let (_, magic) = lines.next().ok_or(IoError::MissingMagic)?;
    check_magic(magic, kind)?;

    let mut meta = Meta::new();
    while let Some((n, line)) = lines.next_if(|(_, l)| l.starts_with('#')) {
        let kv = line.strip_prefix("# ").ok_or(IoError::BadMeta { line: n })?;
        let (k, v) = kv.split_once('=').ok_or(IoError::BadMeta { line: n })?;
        if !valid_key(k) || !valid_value(v) {
            return Err(IoError::BadMeta { line: n });
        }
        if meta.get(k).is_some() {
            return Err(IoError::DuplicateKey {
                line: n,
                key: k.to_string(),
            });
        }
        meta.entries.push((k.to_string(), v.to_string()));
    }

    let width = header.map(|h| h.len());
    if let Some(cols) = header {
        let expected = cols.join(",");
        match lines.next() {
            Some((_, l)) if l == expected => {}
            Some((n, _)) => return Err(IoError::Header { line: n, expected }),
            None => {
                return Err(IoError::Header {
                    line: text.split('\n').count().max(2),
                    expected,
                })
            }
        }
    }

    let mut rows = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            return Err(IoError::EmptyLine { line: n });
        }
        let fields: Vec<&str> = match width {
            Some(_) => line.split(',').collect(),
            None => vec![line],
        };
        if let Some(w) = width {
            if fields.len() != w {
                return Err(IoError::FieldCount {
                    line: n,
                    expected: w,
                    found: fields.len(),
                });
            }
        }
        rows.push(Row { line: n, fields });
    }
    Ok(Table { meta, rows })
}

fn check_magic(line: &str, kind: Kind) -> Result<(), IoError> {
    let rest = line.strip_prefix("# sbza-").ok_or(IoError::MissingMagic)?;
    let (name, version) = rest.rsplit_once(' ').ok_or(IoError::MissingMagic)?;
    let version = version.strip_prefix('v').ok_or(IoError::MissingMagic)?;
    if name != kind.name() {
        return Err(IoError::WrongKind {
            expected: kind.name(),
            found: name.to_string(),
        });
    }
    if version != FORMAT_VERSION.to_string() {
        return Err(IoError::Version {
            kind: kind.name(),
            found: version.to_string(),
        });
    }
    Ok(())
}

fn field_error(row: &Row<'_>, idx: usize, field: &'static str, reason: &'static str) -> IoError {
    IoError::Field {
        line: row.line,
        field,
        value: row.fields[idx].to_string(),
        reason,
    }
}

/// Unsigned integer in canonical form: digits only, no leading zeros.
fn parse_uint<T: std::str::FromStr>(s: &str) -> Option<T> {
    let canonical = !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) && (s == "0" || !s.starts_with('0'));
    if canonical {
        s.parse().ok()
    } else {
        None
    }
}

pub(crate) fn uint_field<T: std::str::FromStr>(row: &Row<'_>, idx: usize, field: &'static str) -> Result<T, IoError> {
    parse_uint(row.fields[idx]).ok_or_else(|| field_error(row, idx, field, "expected an unsigned integer"))
}

/// RSSI written with exactly two decimals.
pub(crate) fn rssi_field(row: &Row<'_>, idx: usize, field: &'static str) -> Result<Rssi, IoError> {
    let s = row.fields[idx];
    let digits = s.strip_prefix('-').unwrap_or(s);
    let ok = match digits.split_once('.') {
        Some((int, frac)) => {
            parse_uint::<u64>(int).is_some() && frac.len() == 2 && frac.bytes().all(|b| b.is_ascii_digit())
        }
        None => false,
    };
    let value = if ok { s.parse::<f64>().ok() } else { None };
    value
        .and_then(|v| Rssi::new(v).ok())
        .ok_or_else(|| field_error(row, idx, field, "expected dBm with two decimals"))
}

pub(crate) fn flag_field(row: &Row<'_>, idx: usize, field: &'static str) -> Result<bool, IoError> {
    match row.fields[idx] {
        "1" => Ok(true),
        "0" => Ok(false),
        _ => Err(field_error(row, idx, field, "expected 0 or 1")),
    }
}

pub(crate) fn parsed_field<T: std::str::FromStr>(row: &Row<'_>, idx: usize, field: &'static str, reason: &'static str) -> Result<T, IoError> {
    row.fields[idx].parse().map_err(|_| field_error(row, idx, field, reason))
}

fn meta_f64(meta: &mut Meta, key: &'static str) -> Result<f64, IoError> {
    let v = meta.take(key)?;
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or(IoError::BadKey {
            key,
            reason: format!("expected a number, found {v:?}"),
        })
}

fn meta_uint<T: std::str::FromStr>(meta: &mut Meta, key: &'static str) -> Result<T, IoError> {
    let v = meta.take(key)?;
    parse_uint(&v).ok_or(IoError::BadKey {
        key,
        reason: format!("expected an unsigned integer, found {v:?}"),
    })
}

fn grid_fields(grid: &BinGrid) -> Vec<(&'static str, String)> {
    vec![
        ("rssi_min", grid.rssi_min().to_string()),
        ("rssi_max", grid.rssi_max().to_string()),
        ("bin_width", grid.bin_width().to_string()),
        ("n_bins", grid.n_bins().to_string()),
    ]
}

fn describe_grid(grid: &BinGrid) -> String {
    format!(
        "[{}, {}] dBm at {} dB ({} bins)",
        grid.rssi_min(),
        grid.rssi_max(),
        grid.bin_width(),
        grid.n_bins()
    )
}

fn take_grid(meta: &mut Meta) -> Result<BinGrid, IoError> {
    let lo = meta_f64(meta, "rssi_min")?;
    let hi = meta_f64(meta, "rssi_max")?;
    let width = meta_f64(meta, "bin_width")?;
    let n: u32 = meta_uint(meta, "n_bins")?;
    let grid = BinGrid::new(lo, hi, width).map_err(|e| IoError::BadKey {
        key: "bin_width",
        reason: e.to_string(),
    })?;
    if grid.n_bins() != n {
        return Err(IoError::BadKey {
            key: "n_bins",
            reason: format!("grid parameters give {} bins, header says {n}", grid.n_bins()),
        });
    }
    Ok(grid)
}

pub(crate) fn check_sorted<T: PartialOrd>(prev: Option<&T>, cur: &T, strict: bool, line: usize, field: &'static str) -> Result<(), IoError> {
    match prev {
        Some(p) if p > cur || (strict && p == cur) => Err(IoError::Unsorted { line, field }),
        _ => Ok(()),
    }
}

/// Reads a whole file as UTF-8.
pub fn read_text(path: &Path) -> std::io::Result<Result<String, IoError>> {
    let bytes = std::fs::read(path)?;
    Ok(String::from_utf8(bytes).map_err(|e| IoError::Encoding(e.to_string())))
}

/// Writes each `(path, contents)` pair to a temporary file beside its
/// target, and renames them into place only once every file is written.
pub fn write_atomically(outputs: &[(&Path, &str)]) -> std::io::Result<()> {
    let mut staged = Vec::with_capacity(outputs.len());
    for (path, contents) in outputs {
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        std::io::Write::write_all(&mut tmp, contents.as_bytes())?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, *path));
    }
    for (tmp, path) in staged {
        tmp.persist(path).map_err(|e| e.error)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_and_version() {
        let header = ["a"];
        assert!(parse_table("# sbza-roc v1\na\n", Kind::Roc, Some(&header)).is_ok());
        assert!(matches!(
            parse_table("# sbza-roc v2\na\n", Kind::Roc, Some(&header)),
            Err(IoError::Version { found, .. }) if found == "2"
        ));
        assert!(matches!(
            parse_table("# sbza-map v1\na\n", Kind::Roc, Some(&header)),
            Err(IoError::WrongKind { .. })
        ));
        assert!(matches!(parse_table("a\n", Kind::Roc, Some(&header)), Err(IoError::MissingMagic)));
        assert!(matches!(parse_table("", Kind::Roc, Some(&header)), Err(IoError::MissingMagic)));
    }

    #[test]
    fn metadata_lines() {
        let t = parse_table("# sbza-roc v1\n# seed=3\n# note=a b=c\na\n", Kind::Roc, Some(&["a"])).unwrap();
        assert_eq!(t.meta.get("seed"), Some("3"));
        assert_eq!(t.meta.get("note"), Some("a b=c"));
        assert!(matches!(
            parse_table("# sbza-roc v1\n#seed=3\na\n", Kind::Roc, Some(&["a"])),
            Err(IoError::BadMeta { line: 2 })
        ));
        assert!(matches!(
            parse_table("# sbza-roc v1\n# s=1\n# s=2\na\n", Kind::Roc, Some(&["a"])),
            Err(IoError::DuplicateKey { line: 3, .. })
        ));
    }

    #[test]
    fn missing_header_and_blank_lines() {
        assert!(matches!(
            parse_table("# sbza-roc v1\n", Kind::Roc, Some(&["a", "b"])),
            Err(IoError::Header { .. })
        ));
        assert!(matches!(
            parse_table("# sbza-roc v1\na,b\n1,2\n\n3,4\n", Kind::Roc, Some(&["a", "b"])),
            Err(IoError::EmptyLine { line: 4 })
        ));
        assert!(matches!(
            parse_table("# sbza-roc v1\na,b\n1,2,3\n", Kind::Roc, Some(&["a", "b"])),
            Err(IoError::FieldCount { line: 3, .. })
        ));
    }

    #[test]
    fn canonical_numbers() {
        assert_eq!(parse_uint::<u64>("0"), Some(0));
        assert_eq!(parse_uint::<u64>("120"), Some(120));
        for bad in ["", "+1", "01", "-1", "1.0", " 1"] {
            assert_eq!(parse_uint::<u64>(bad), None, "{bad}");
        }
        let row = |s: &'static str| Row { line: 9, fields: vec![s] };
        assert_eq!(rssi_field(&row("-61.25"), 0, "rssi_dbm").unwrap().dbm(), -61.25);
        assert_eq!(rssi_field(&row("0.00"), 0, "rssi_dbm").unwrap().dbm(), 0.0);
        for bad in ["-61.2", "-61.250", "-61", "--1.00", "-01.00", "nan", "-6a.00"] {
            assert!(rssi_field(&row(bad), 0, "rssi_dbm").is_err(), "{bad}");
        }
    }

    #[test]
    fn meta_set_replaces() {
        let mut m = Meta::new().with("a", 1).with("b", 2);
        m.set("a", 3);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![("a", "3"), ("b", "2")]);
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("b.csv");
        write_atomically(&[(&a, "one\n"), (&b, "two\n")]).unwrap();
        assert_eq!(std::fs::read_to_string(&a).unwrap(), "one\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
        let missing = dir.path().join("nope").join("c.csv");
        assert!(write_atomically(&[(&a, "three\n"), (&missing, "x\n")]).is_err());
        assert_eq!(std::fs::read_to_string(&a).unwrap(), "one\n");
    }
}
