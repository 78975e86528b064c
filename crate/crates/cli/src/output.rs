//! CSV and JSON emission. Every file carries the config hash and seed.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Rows of string cells under a header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// First 16 hex digits of the SHA-256 of the config's canonical JSON.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let json = serde_json::to_vec(config)?;
    Ok(hex::encode(&Sha256::digest(&json)[..8]))
}

pub fn run_id(experiment: &str, hash: &str, seed: u64) -> String {
    let d = Sha256::digest(format!("{experiment}:{hash}:{seed}").as_bytes());
    hex::encode(&d[..6])
}

/// Serializes the table with leading `config_hash` and `seed` columns.
pub fn csv_bytes(table: &Table, hash: &str, seed: u64) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["config_hash".to_string(), "seed".to_string()];
    header.extend(table.header.iter().cloned());
    w.write_record(&header)?;
    let seed = seed.to_string();
    for row in &table.rows {
        w.write_record([hash, seed.as_str()].into_iter().chain(row.iter().map(String::as_str)))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Csv(csv::Error::from(e.into_error())))
}

/// Inverse of [`csv_bytes`]: the header and rows without the two leading
/// columns, plus the hash and seed found in the file.
pub fn parse_csv(bytes: &[u8]) -> Result<(Table, String, u64)> {
    let mut r = csv::Reader::from_reader(bytes);
    let header: Vec<String> = r.headers()?.iter().skip(2).map(str::to_string).collect();
    let mut table = Table {
        header,
        rows: Vec::new(),
    };
    let mut hash = String::new();
    let mut seed = 0;
    for rec in r.records() {
        let rec = rec?;
        hash = rec[0].to_string();
        seed = rec[1].parse().map_err(|_| CliError::Parse(format!("bad seed `{}`", &rec[1])))?;
        table.rows.push(rec.iter().skip(2).map(str::to_string).collect());
    }
    Ok((table, hash, seed))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn rename(from: &Path, to: &Path) -> Result<()> {
    fs::rename(from, to).map_err(|e| CliError::Io {
        path: to.to_path_buf(),
        source: e,
    })
}

pub struct Written {
    pub csv: PathBuf,
    pub json: PathBuf,
}

/// Writes `<name>.csv` and `<name>.json` into `dir`. Files are written
/// under a `.partial` suffix and renamed once both are complete.
pub fn write_outputs(dir: &Path, name: &str, csv: &[u8], summary: &serde_json::Value) -> Result<Written> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let csv_path = dir.join(format!("{name}.csv"));
    let json_path = dir.join(format!("{name}.json"));
    let csv_tmp = dir.join(format!("{name}.csv.partial"));
    let json_tmp = dir.join(format!("{name}.json.partial"));
    write(&csv_tmp, csv)?;
    write(&json_tmp, &serde_json::to_vec_pretty(summary)?)?;
    rename(&csv_tmp, &csv_path)?;
    rename(&json_tmp, &json_path)?;
    Ok(Written {
        csv: csv_path,
        json: json_path,
    })
}

/// Summary left behind when an experiment fails.
pub fn write_failure(dir: &Path, name: &str, summary: &serde_json::Value) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    let path = dir.join(format!("{name}.json.partial"));
    write(&path, &serde_json::to_vec_pretty(summary)?)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = config_hash(&serde_json::json!({"x": 1})).unwrap();
        assert_eq!(a, config_hash(&serde_json::json!({"x": 1})).unwrap());
        assert_ne!(a, config_hash(&serde_json::json!({"x": 2})).unwrap());
        assert_eq!(a.len(), 16);
    }

    #[test]
    fn quoting() {
        let mut t = Table::new(&["name", "v"]);
        t.push(vec!["mmw, #2 \"x\"".into(), fmt_f64(1.5)]);
        let b = csv_bytes(&t, "ab", 3).unwrap();
        let (back, h, s) = parse_csv(&b).unwrap();
        assert_eq!((back, h.as_str(), s), (t, "ab", 3));
    }

    proptest! {
        #[test]
        fn floats_round_trip(vals in prop::collection::vec(any::<f64>(), 1..20), seed in any::<u64>()) {
            let mut t = Table::new(&["v"]);
            for v in &vals {
                t.push(vec![fmt_f64(*v)]);
            }
            let (back, _, s) = parse_csv(&csv_bytes(&t, "h", seed).unwrap()).unwrap();
            prop_assert_eq!(s, seed);
            for (row, v) in back.rows.iter().zip(&vals) {
                let p: f64 = row[0].parse().unwrap();
                prop_assert!(p.to_bits() == v.to_bits() || (p.is_nan() && v.is_nan()));
            }
        }
    }
}
