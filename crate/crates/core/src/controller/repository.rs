//! Append-only local repository of BER/SNR estimates.
//!
//! Each record is one line, `timestamp,profile_id,est_ber,mapped_snr_db,jamming`,
//! written and flushed on append.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct RepositoryRecord {
    pub timestamp: f64,
    pub profile_id: String,
    pub est_ber: f64,
    pub mapped_snr_db: f64,
    pub jamming: bool,
}

impl fmt::Display for RepositoryRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{},{},{},{},{}",
            self.timestamp, self.profile_id, self.est_ber, self.mapped_snr_db, self.jamming
        )
    }
}

impl RepositoryRecord {
    fn parse(line: &str, line_no: usize) -> Result<Self> {
        let bad = |reason: String| Error::Repository {
            line: line_no,
            reason,
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 fields, got {}", fields.len())));
        }
        let num = |s: &str, what: &str| {
            s.parse::<f64>()
                .map_err(|_| bad(format!("bad {what} `{s}`")))
        };
        let record = RepositoryRecord {
            timestamp: num(fields[0], "timestamp")?,
            profile_id: fields[1].to_string(),
            est_ber: num(fields[2], "est_ber")?,
            mapped_snr_db: num(fields[3], "mapped_snr_db")?,
            jamming: fields[4]
                .parse()
                .map_err(|_| bad(format!("bad jamming flag `{}`", fields[4])))?,
        };
        record.validate().map_err(bad)?;
        Ok(record)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if !self.timestamp.is_finite() {
            return Err("timestamp must be finite".into());
        }
        if self.profile_id.is_empty() || self.profile_id.contains([',', '\n']) {
            return Err(format!("bad profile id `{}`", self.profile_id));
        }
        if !(0.0..=1.0).contains(&self.est_ber) {
            return Err(format!("est_ber {} outside [0, 1]", self.est_ber));
        }
        Ok(())
    }
}

#[derive(Debug, Default)]
pub struct Repository {
    records: Vec<RepositoryRecord>,
    file: Option<(PathBuf, File)>,
}

impl Repository {
    pub fn in_memory() -> Self {
        Repository::default()
    }

    /// Opens (or creates) a repository file, loading any existing records.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut records: Vec<RepositoryRecord> = Vec::new();
        if path.exists() {
            let text = std::fs::read_to_string(path)?;
            for (idx, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let record = RepositoryRecord::parse(line.trim(), idx + 1)?;
                if let Some(last) = records.last() {
                    if record.timestamp < last.timestamp {
                        return Err(Error::Repository {
                            line: idx + 1,
                            reason: "timestamps out of order".into(),
                        });
                    }
                }
                records.push(record);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Repository {
            records,
            file: Some((path.to_path_buf(), file)),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.file.as_ref().map(|(p, _)| p.as_path())
    }

    pub fn append(&mut self, record: RepositoryRecord) -> Result<()> {
        record.validate().map_err(Error::InvalidArgument)?;
        if let Some(last) = self.records.last() {
            if record.timestamp < last.timestamp {
                return Err(Error::InvalidArgument(format!(
                    "record at {} precedes last record at {}",
                    record.timestamp, last.timestamp
                )));
            }
        }
        if let Some((_, file)) = self.file.as_mut() {
            writeln!(file, "{record}")?;
            file.flush()?;
        }
        self.records.push(record);
        Ok(())
    }

    /// Records in `[from, to]`, optionally restricted to one profile.
    pub fn query(&self, profile_id: Option<&str>, from: f64, to: f64) -> Vec<&RepositoryRecord> {
        self.records
            .iter()
            .filter(|r| r.timestamp >= from && r.timestamp <= to)
            .filter(|r| profile_id.is_none_or(|p| r.profile_id == p))
            .collect()
    }

    pub fn records(&self) -> &[RepositoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
