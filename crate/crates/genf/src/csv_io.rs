//! Per-unit series in CSV form.
//!
//! Header: `unit,<feature_1>,...,<feature_K>`, optionally with a `timestamp`
//! column right after `unit`. Rows are in time order within a unit; units may
//! interleave. An empty cell is a missing value.

use crate::error::{CliError, Result};
use genf_core::data::RawSeries;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

const TIMESTAMP_NAMES: [&str; 3] = ["timestamp", "time", "t"];

struct UnitRows {
    values: Vec<f64>,
    missing: Vec<bool>,
    last_ts: Option<(f64, u64)>,
}

fn csv_err(line: u64, msg: impl Into<String>) -> CliError {
    CliError::Csv { line, msg: msg.into() }
}

/// Parse series from any reader. An empty input yields no units.
pub fn read_series<R: Read>(reader: R) -> Result<Vec<RawSeries>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Ok(Vec::new()),
        Some(r) => r.map_err(|e| csv_err(e.position().map_or(1, |p| p.line()), e.to_string()))?,
    };
    let cols: Vec<String> = header.iter().map(|c| c.trim().to_string()).collect();
    if cols.first().map(String::as_str) != Some("unit") {
        return Err(csv_err(1, "first header column must be `unit`"));
    }
    let has_ts = cols.len() > 1 && TIMESTAMP_NAMES.contains(&cols[1].to_ascii_lowercase().as_str());
    let first_feature = if has_ts { 2 } else { 1 };
    let features: Vec<String> = cols[first_feature..].to_vec();
    if features.is_empty() {
        return Err(csv_err(1, "no feature columns"));
    }
    let width = cols.len();

    let mut order: Vec<String> = Vec::new();
    let mut units: BTreeMap<String, UnitRows> = BTreeMap::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec.get(0).is_some_and(|c| c.trim().is_empty()) {
            continue;
        }
        if rec.len() != width {
            return Err(csv_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let unit = rec[0].trim();
        if unit.is_empty() {
            return Err(csv_err(line, "empty unit id"));
        }
        let entry = units.entry(unit.to_string()).or_insert_with(|| {
            order.push(unit.to_string());
            UnitRows {
                values: Vec::new(),
                missing: Vec::new(),
                last_ts: None,
            }
        });
        if has_ts {
            let raw = rec[1].trim();
            let ts: f64 = raw
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| csv_err(line, format!("bad timestamp `{raw}`")))?;
            if let Some((prev, prev_line)) = entry.last_ts {
                if ts == prev {
                    return Err(csv_err(
                        line,
                        format!("duplicate timestamp {raw} for unit {unit} (first at line {prev_line})"),
                    ));
                }
                if ts < prev {
                    return Err(csv_err(line, format!("timestamp {raw} for unit {unit} goes backwards")));
                }
            }
            entry.last_ts = Some((ts, line));
        }
        for (j, cell) in rec.iter().enumerate().skip(first_feature) {
            let cell = cell.trim();
            if cell.is_empty() {
                entry.values.push(f64::NAN);
                entry.missing.push(true);
                continue;
            }
            let v: f64 = cell
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| csv_err(line, format!("non-numeric value `{cell}` in column `{}`", cols[j])))?;
            entry.values.push(v);
            entry.missing.push(false);
        }
    }

    order
        .into_iter()
        .map(|id| {
            let rows = units.remove(&id).expect("unit recorded in order");
            Ok(RawSeries {
                unit_id: id,
                feature_names: features.clone(),
                values: rows.values,
                missing: rows.missing,
            })
        })
        .collect()
}

pub fn load_csv(path: &Path) -> Result<Vec<RawSeries>> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_series(file)
}

/// Write series unit by unit; missing cells stay empty. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn write_series<W: Write>(series: &[RawSeries], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let to_err = |e: csv::Error| CliError::Config(format!("csv write failed: {e}"));
    let Some(first) = series.first() else {
        return w.flush().map_err(|e| CliError::io("<csv>", e));
    };
    let mut header = vec![String::from("unit")];
    header.extend(first.feature_names.iter().cloned());
    w.write_record(&header).map_err(to_err)?;
    for s in series {
        let k = s.k();
        for t in 0..s.len() {
            let mut row = Vec::with_capacity(k + 1);
            row.push(s.unit_id.clone());
            for f in 0..k {
                let idx = t * k + f;
                row.push(if s.missing[idx] { String::new() } else { format!("{}", s.values[idx]) });
            }
            w.write_record(&row).map_err(to_err)?;
        }
    }
    w.flush().map_err(|e| CliError::io("<csv>", e))
}

pub fn save_csv(path: &Path, series: &[RawSeries]) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_series(series, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<RawSeries>> {
        read_series(text.as_bytes())
    }

    #[test]
    fn two_units_three_features() {
        let mut text = String::from("unit,a,b,c\n");
        for u in ["u1", "u2"] {
            for t in 0..10 {
                text.push_str(&format!("{u},{t},{},{}\n", t * 2, t * 3));
            }
        }
        let units = parse(&text).unwrap();
        assert_eq!(units.len(), 2);
        assert!(units.iter().all(|s| s.len() == 10 && s.k() == 3));
        assert_eq!(units[1].row(4), &[4.0, 8.0, 12.0]);
    }

    #[test]
    fn bad_cell_cites_line() {
        let text = "unit,a\nu,1\nu,2\nu,3\nu,4\nu,5\nu,x\n";
        let err = parse(text).unwrap_err();
        assert!(matches!(err, CliError::Csv { line: 7, .. }), "{err}");
    }

    #[test]
    fn empty_input() {
        assert!(parse("").unwrap().is_empty());
    }

    #[test]
    fn missing_cells_are_flagged() {
        let units = parse("unit,a,b\nu,1,\nu,,2\n").unwrap();
        assert_eq!(units[0].missing, vec![false, true, true, false]);
        assert!(units[0].values[1].is_nan());
    }

    #[test]
    fn duplicate_timestamp_rejected() {
        let err = parse("unit,timestamp,a\nu,1,1\nu,2,1\nu,2,3\n").unwrap_err();
        assert!(matches!(err, CliError::Csv { line: 4, .. }));
        assert!(err.to_string().contains("duplicate"));
        assert!(parse("unit,timestamp,a\nu,2,1\nu,1,1\n").is_err());
        let ok = parse("unit,timestamp,a\nu,1,1\nv,1,5\nu,2,3\n").unwrap();
        assert_eq!(ok[0].values, vec![1.0, 3.0]);
    }

    #[test]
    fn header_checks() {
        assert!(parse("id,a\nu,1\n").is_err());
        assert!(parse("unit\nu\n").is_err());
        assert!(matches!(parse("unit,a\nu,1,2\n").unwrap_err(), CliError::Csv { line: 2, .. }));
    }
}
