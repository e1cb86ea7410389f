//! CSV / JSONL ingestion and writing.
//!
//! Column kinds come from an explicit schema when given; otherwise a column
//! is continuous iff every non-empty cell parses as a number. Unparseable
//! continuous cells and absent categorical cells become missing. JSONL rows
//! may carry a `nav_log` array of strings, which is passed through for the
//! featurizer.

use super::{Column, ColumnData, ColumnKind, Dataset, MISSING_CODE};
use crate::navfeat::NavigationLog;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;

pub const NAV_LOG_FIELD: &str = "nav_log";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

/// A loaded dataset plus any per-row navigation logs found in the input.
#[derive(Debug)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub nav_logs: Option<Vec<NavigationLog>>,
}

#[derive(Clone)]
enum Cell {
    Absent,
    Text(String),
    Number(f64),
}

impl Cell {
    fn as_text(&self) -> Option<String> {
        match self {
            Cell::Absent => None,
            Cell::Text(s) => {
                if s.is_empty() {
                    None
                } else {
                    Some(s.clone())
                }
            }
            Cell::Number(x) => Some(format_f64(*x)),
        }
    }

    fn as_number(&self) -> Option<f64> {
        match self {
            Cell::Absent => None,
            Cell::Text(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
            Cell::Number(x) => Some(*x).filter(|v| v.is_finite()),
        }
    }
}

pub fn load(
    path: &Path,
    format: Format,
    schema: Option<&HashMap<String, ColumnKind>>,
    group_column: &str,
) -> Result<LoadedData> {
    let (names, rows, nav_logs) = match format {
        Format::Csv => read_csv(path)?,
        Format::Jsonl => read_jsonl(path)?,
    };
    if rows.is_empty() {
        return Err(Error::NoRows);
    }
    if let Some(schema) = schema {
        for name in schema.keys() {
            if !names.contains(name) {
                return Err(Error::UnknownColumn(name.clone()));
            }
        }
    }
    let group_idx = names
        .iter()
        .position(|n| n == group_column)
        .ok_or_else(|| Error::GroupColumnNotFound(group_column.to_string()))?;

    let mut group_names: Vec<String> = Vec::new();
    let mut group_of = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let label = row[group_idx]
            .as_text()
            .ok_or(Error::MissingGroupLabel(r))?;
        let g = match group_names.iter().position(|n| *n == label) {
            Some(g) => g,
            None => {
                group_names.push(label);
                group_names.len() - 1
            }
        };
        group_of.push(g as u32);
    }

    let mut columns = Vec::new();
    for (c, name) in names.iter().enumerate() {
        if c == group_idx {
            continue;
        }
        let kind = match schema.and_then(|s| s.get(name)) {
            Some(&k) => k,
            None => infer_kind(rows.iter().map(|row| &row[c])),
        };
        let data = match kind {
            ColumnKind::Continuous => ColumnData::Continuous {
                values: rows
                    .iter()
                    .map(|row| row[c].as_number().unwrap_or(f64::NAN))
                    .collect(),
            },
            ColumnKind::Categorical => {
                let mut dict: Vec<String> = Vec::new();
                let mut index: HashMap<String, u32> = HashMap::new();
                let codes = rows
                    .iter()
                    .map(|row| match row[c].as_text() {
                        None => MISSING_CODE,
                        Some(v) => *index.entry(v.clone()).or_insert_with(|| {
                            dict.push(v);
                            (dict.len() - 1) as u32
                        }),
                    })
                    .collect();
                ColumnData::Categorical { codes, dict }
            }
        };
        columns.push(Column {
            name: name.clone(),
            data,
        });
    }

    Ok(LoadedData {
        dataset: Dataset {
            columns,
            group_column: group_column.to_string(),
            group_names,
            group_of,
        },
        nav_logs,
    })
}

fn infer_kind<'a>(cells: impl Iterator<Item = &'a Cell>) -> ColumnKind {
    let mut saw_number = false;
    for cell in cells {
        match cell {
            Cell::Absent => {}
            Cell::Number(_) => saw_number = true,
            Cell::Text(s) => {
                if s.is_empty() {
                    continue;
                }
                if s.trim().parse::<f64>().is_ok() {
                    saw_number = true;
                } else {
                    return ColumnKind::Categorical;
                }
            }
        }
    }
    if saw_number {
        ColumnKind::Continuous
    } else {
        ColumnKind::Categorical
    }
}

type RawTable = (Vec<String>, Vec<Vec<Cell>>, Option<Vec<NavigationLog>>);

fn read_csv(path: &Path) -> Result<RawTable> {
    let mut rdr = csv::Reader::from_path(path)?;
    let names: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        rows.push(
            (0..names.len())
                .map(|i| match rec.get(i) {
                    None => Cell::Absent,
                    Some(s) => Cell::Text(s.to_string()),
                })
                .collect(),
        );
    }
    Ok((names, rows, None))
}

fn read_jsonl(path: &Path) -> Result<RawTable> {
    let file = std::fs::File::open(path)?;
    let mut names: Vec<String> = Vec::new();
    let mut objects: Vec<serde_json::Map<String, serde_json::Value>> = Vec::new();
    let mut logs: Vec<NavigationLog> = Vec::new();
    let mut any_log = false;
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let obj: serde_json::Map<String, serde_json::Value> = serde_json::from_str(&line)?;
        let mut events = Vec::new();
        if let Some(serde_json::Value::Array(arr)) = obj.get(NAV_LOG_FIELD) {
            any_log = true;
            for v in arr {
                if let serde_json::Value::String(s) = v {
                    events.push(s.clone());
                }
            }
        }
        logs.push(NavigationLog { events });
        for key in obj.keys() {
            if key != NAV_LOG_FIELD && !names.contains(key) {
                names.push(key.clone());
            }
        }
        objects.push(obj);
    }
    let rows = objects
        .iter()
        .map(|obj| {
            names
                .iter()
                .map(|name| match obj.get(name) {
                    None | Some(serde_json::Value::Null) => Cell::Absent,
                    Some(serde_json::Value::Number(n)) => {
                        n.as_f64().map(Cell::Number).unwrap_or(Cell::Absent)
                    }
                    Some(serde_json::Value::String(s)) => Cell::Text(s.clone()),
                    Some(serde_json::Value::Bool(b)) => Cell::Text(b.to_string()),
                    Some(other) => Cell::Text(other.to_string()),
                })
                .collect()
        })
        .collect();
    Ok((names, rows, if any_log { Some(logs) } else { None }))
}

fn format_f64(x: f64) -> String {
    // Rust's Display for f64 is the shortest round-trip representation
    x.to_string()
}

fn cell_string(col: &Column, row: usize) -> String {
    match &col.data {
        ColumnData::Categorical { codes, dict } => {
            if codes[row] == MISSING_CODE {
                String::new()
            } else {
                dict[codes[row] as usize].clone()
            }
        }
        ColumnData::Continuous { values } => {
            if values[row].is_finite() {
                format_f64(values[row])
            } else {
                String::new()
            }
        }
    }
}

pub fn write_csv(d: &Dataset, w: &mut dyn Write) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = vec![d.group_column.clone()];
    header.extend(d.columns.iter().map(|c| c.name.clone()));
    wtr.write_record(&header)?;
    for r in 0..d.n_rows() {
        let mut rec = vec![d.group_names[d.group_of[r] as usize].clone()];
        rec.extend(d.columns.iter().map(|c| cell_string(c, r)));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_jsonl(d: &Dataset, w: &mut dyn Write) -> Result<()> {
    for r in 0..d.n_rows() {
        let mut obj = serde_json::Map::new();
        obj.insert(
            d.group_column.clone(),
            serde_json::Value::String(d.group_names[d.group_of[r] as usize].clone()),
        );
        for c in &d.columns {
            let v = match &c.data {
                ColumnData::Categorical { codes, dict } => {
                    if codes[r] == MISSING_CODE {
                        serde_json::Value::Null
                    } else {
                        serde_json::Value::String(dict[codes[r] as usize].clone())
                    }
                }
                ColumnData::Continuous { values } => {
                    if values[r].is_finite() {
                        serde_json::Number::from_f64(values[r])
                            .map(serde_json::Value::Number)
                            .unwrap_or(serde_json::Value::Null)
                    } else {
                        serde_json::Value::Null
                    }
                }
            };
            obj.insert(c.name.clone(), v);
        }
        serde_json::to_writer(&mut *w, &serde_json::Value::Object(obj))?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_to_path(d: &Dataset, path: &Path, format: Format) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    match format {
        Format::Csv => write_csv(d, &mut f),
        Format::Jsonl => write_jsonl(d, &mut f),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(content: &str, ext: &str) -> tempfile::TempPath {
        let mut f = tempfile::Builder::new().suffix(ext).tempfile().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.into_temp_path()
    }

    #[test]
    fn load_csv_with_schema() {
        let p = write_tmp("sig,country,uptime\nA,US,1.5\nA,IN,2.0\nB,US,9\n", ".csv");
        let mut schema = HashMap::new();
        schema.insert("country".to_string(), ColumnKind::Categorical);
        schema.insert("uptime".to_string(), ColumnKind::Continuous);
        let loaded = load(&p, Format::Csv, Some(&schema), "sig").unwrap();
        let d = loaded.dataset;
        assert_eq!(d.n_rows(), 3);
        assert_eq!(d.columns.len(), 2);
        assert_eq!(d.group_names, vec!["A", "B"]);
        assert_eq!(d.columns[0].kind(), ColumnKind::Categorical);
        assert_eq!(d.columns[1].kind(), ColumnKind::Continuous);
    }

    #[test]
    fn load_empty_file_is_error() {
        let p = write_tmp("sig,country\n", ".csv");
        match load(&p, Format::Csv, None, "sig") {
            Err(Error::NoRows) => {}
            other => panic!("expected NoRows, got {other:?}"),
        }
    }

    #[test]
    fn load_jsonl_missing_sig_names_record() {
        let p = write_tmp(
            "{\"sig\":\"A\",\"x\":1}\n{\"x\":2}\n{\"sig\":\"B\",\"x\":3}\n",
            ".jsonl",
        );
        match load(&p, Format::Jsonl, None, "sig") {
            Err(Error::MissingGroupLabel(1)) => {}
            other => panic!("expected MissingGroupLabel(1), got {other:?}"),
        }
    }

    #[test]
    fn load_unknown_schema_column_is_error() {
        let p = write_tmp("sig,x\nA,1\n", ".csv");
        let mut schema = HashMap::new();
        schema.insert("nope".to_string(), ColumnKind::Continuous);
        assert!(matches!(
            load(&p, Format::Csv, Some(&schema), "sig"),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn jsonl_nav_log_passthrough() {
        let p = write_tmp(
            "{\"sig\":\"A\",\"nav_log\":[\"Feed\",\"Photos\"]}\n{\"sig\":\"B\",\"nav_log\":[]}\n",
            ".jsonl",
        );
        let loaded = load(&p, Format::Jsonl, None, "sig").unwrap();
        let logs = loaded.nav_logs.unwrap();
        assert_eq!(logs[0].events, vec!["Feed", "Photos"]);
        assert!(logs[1].events.is_empty());
    }

    #[test]
    fn csv_round_trip() {
        let p = write_tmp("sig,country,uptime\nA,US,1.5\nA,,2\nB,US,\n", ".csv");
        let d = load(&p, Format::Csv, None, "sig").unwrap().dataset;
        let mut buf = Vec::new();
        write_csv(&d, &mut buf).unwrap();
        let p2 = write_tmp(std::str::from_utf8(&buf).unwrap(), ".csv");
        let d2 = load(&p2, Format::Csv, None, "sig").unwrap().dataset;
        assert_eq!(d.fingerprint(), d2.fingerprint());
    }

    #[test]
    fn jsonl_round_trip() {
        let p = write_tmp(
            "{\"sig\":\"A\",\"c\":\"x\",\"u\":1.25}\n{\"sig\":\"B\",\"c\":null,\"u\":null}\n",
            ".jsonl",
        );
        let d = load(&p, Format::Jsonl, None, "sig").unwrap().dataset;
        let mut buf = Vec::new();
        write_jsonl(&d, &mut buf).unwrap();
        let p2 = write_tmp(std::str::from_utf8(&buf).unwrap(), ".jsonl");
        let d2 = load(&p2, Format::Jsonl, None, "sig").unwrap().dataset;
        assert_eq!(d.fingerprint(), d2.fingerprint());
    }
}
