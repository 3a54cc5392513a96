//! Lookup tables, the BER → SNR MAP function, and the threshold store.
//!
//! Table files are CSV with the header
//! `snr,seed,actual_ber,estimated_ber,erroneous_frames`, one row per
//! `(snr, seed)` pair. Two tables are bundled: `table_wlan80211a` (SNR 1..11)
//! and `table_wimax` (SNR 3..7 in steps of 0.5).

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::phy::ProfileSet;
use crate::{Error, Result};

pub const TABLE_HEADER: &str = "snr,seed,actual_ber,estimated_ber,erroneous_frames";
pub const DEFAULT_KEY_SEED: u64 = 10;
/// Frames per window behind every bundled row.
pub const TABLE_FRAMES: u32 = 500;
/// Decimal places kept before nearest-neighbour matching.
pub const MAP_DECIMALS: i32 = 4;

const WLAN_DATA: &str = include_str!("../data/table_wlan80211a.csv");
const WIMAX_DATA: &str = include_str!("../data/table_wimax.csv");

/// Printed cells whose frame count and estimated BER disagree in the source
/// data, kept verbatim: `(snr, seed)`.
const WLAN_ERRATA: &[(f64, u64)] = &[(9.0, 100)];
const WIMAX_ERRATA: &[(f64, u64)] = &[(3.0, 10), (3.0, 70), (3.5, 10)];

pub const BUNDLED_TABLE_IDS: [&str; 2] = ["table_wlan80211a", "table_wimax"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyColumn {
    Estimated,
    Actual,
}

impl FromStr for KeyColumn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "estimated" => Ok(KeyColumn::Estimated),
            "actual" => Ok(KeyColumn::Actual),
            other => Err(Error::InvalidArgument(format!(
                "key column `{other}` (expected estimated|actual)"
            ))),
        }
    }
}

impl fmt::Display for KeyColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KeyColumn::Estimated => "estimated",
            KeyColumn::Actual => "actual",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedEntry {
    pub actual_ber: f64,
    pub estimated_ber: f64,
    pub erroneous_frames: u32,
    /// Decimal places printed for `estimated_ber`.
    pub estimated_decimals: u32,
}

impl SeedEntry {
    /// Whether `erroneous_frames / frames`, rounded to the printed
    /// precision, reproduces the printed estimated BER.
    pub fn count_matches_rate(&self, frames: u32) -> bool {
        let scale = 10u64.pow(self.estimated_decimals);
        let printed = (self.estimated_ber * scale as f64).round() as u64;
        let frames = u64::from(frames);
        // round-half-up of count * scale / frames
        let from_count = (2 * u64::from(self.erroneous_frames) * scale + frames) / (2 * frames);
        printed == from_count
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupRow {
    pub snr_db: f64,
    pub per_seed: BTreeMap<u64, SeedEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    pub id: String,
    pub rows: Vec<LookupRow>,
    pub key_column: KeyColumn,
    pub key_seed: u64,
}

impl LookupTable {
    pub fn key_ber(&self, row: &LookupRow) -> f64 {
        let entry = &row.per_seed[&self.key_seed];
        match self.key_column {
            KeyColumn::Estimated => entry.estimated_ber,
            KeyColumn::Actual => entry.actual_ber,
        }
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.rows
            .first()
            .map(|r| r.per_seed.keys().copied().collect())
            .unwrap_or_default()
    }

    /// Re-keys the table; every row must carry `seed`.
    pub fn with_key(mut self, column: KeyColumn, seed: u64) -> Result<Self> {
        if let Some(idx) = self
            .rows
            .iter()
            .position(|r| !r.per_seed.contains_key(&seed))
        {
            return Err(Error::TableRow {
                table: self.id,
                row: idx + 1,
                reason: format!("no entry for key seed {seed}"),
            });
        }
        self.key_column = column;
        self.key_seed = seed;
        Ok(self)
    }
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Frames behind each row; `None` skips the count/rate check.
    pub frames: Option<u32>,
    /// `(snr, seed)` cells exempt from the count/rate check.
    pub errata: Vec<(f64, u64)>,
}

impl Default for LoadOptions {
    fn default() -> Self {
        LoadOptions {
            frames: Some(TABLE_FRAMES),
            errata: Vec::new(),
        }
    }
}

fn parse_ber(field: &str, what: &str, table: &str, row: usize) -> Result<(f64, u32)> {
    let value: f64 = field.parse().map_err(|_| Error::TableRow {
        table: table.into(),
        row,
        reason: format!("bad {what} `{field}`"),
    })?;
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::TableRow {
            table: table.into(),
            row,
            reason: format!("{what} {value} outside [0, 1]"),
        });
    }
    let decimals = field
        .split_once('.')
        .map_or(0, |(_, frac)| frac.len() as u32);
    Ok((value, decimals))
}

/// Parses and validates a table. Row numbers in errors are file line numbers.
pub fn load_table(id: &str, text: &str, options: &LoadOptions) -> Result<LookupTable> {
    let err = |row: usize, reason: String| Error::TableRow {
        table: id.to_string(),
        row,
        reason,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TABLE_HEADER => {}
        _ => return Err(err(1, format!("expected header `{TABLE_HEADER}`"))),
    }

    let mut rows: Vec<LookupRow> = Vec::new();
    for (idx, raw) in lines {
        let line = idx + 1;
        let raw = raw.trim();
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(err(
                line,
                format!("expected 5 fields, got {}", fields.len()),
            ));
        }
        let snr_db: f64 = fields[0]
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| err(line, format!("bad snr `{}`", fields[0])))?;
        let seed: u64 = fields[1]
            .parse()
            .map_err(|_| err(line, format!("bad seed `{}`", fields[1])))?;
        let (actual_ber, _) = parse_ber(fields[2], "actual_ber", id, line)?;
        let (estimated_ber, estimated_decimals) = parse_ber(fields[3], "estimated_ber", id, line)?;
        let erroneous_frames: u32 = fields[4]
            .parse()
            .map_err(|_| err(line, format!("bad erroneous_frames `{}`", fields[4])))?;
        let entry = SeedEntry {
            actual_ber,
            estimated_ber,
            erroneous_frames,
            estimated_decimals,
        };
        if let Some(frames) = options.frames {
            if erroneous_frames > frames {
                return Err(err(
                    line,
                    format!("{erroneous_frames} erroneous of {frames} frames"),
                ));
            }
            let exempt = options.errata.contains(&(snr_db, seed));
            if !exempt && !entry.count_matches_rate(frames) {
                return Err(err(
                    line,
                    format!("{erroneous_frames}/{frames} does not round to estimated_ber {estimated_ber}"),
                ));
            }
        }
        let row = match rows.iter_mut().find(|r| r.snr_db == snr_db) {
            Some(row) => row,
            None => {
                rows.push(LookupRow {
                    snr_db,
                    per_seed: BTreeMap::new(),
                });
                rows.last_mut().expect("just pushed")
            }
        };
        if row.per_seed.insert(seed, entry).is_some() {
            return Err(err(
                line,
                format!("duplicate entry for snr {snr_db} seed {seed}"),
            ));
        }
    }

    if rows.len() < 2 {
        return Err(err(
            0,
            format!("need at least 2 SNR rows, got {}", rows.len()),
        ));
    }
    rows.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    let key_seed = if rows
        .iter()
        .all(|r| r.per_seed.contains_key(&DEFAULT_KEY_SEED))
    {
        DEFAULT_KEY_SEED
    } else {
        *rows[0].per_seed.keys().next().expect("row has an entry")
    };
    LookupTable {
        id: id.to_string(),
        rows,
        key_column: KeyColumn::Estimated,
        key_seed,
    }
    .with_key(KeyColumn::Estimated, key_seed)
}

fn canonical_table_id(id: &str) -> Option<&'static str> {
    match id {
        "table_wlan80211a" | "wlan80211a" | "wlan" => Some("table_wlan80211a"),
        "table_wimax" | "wimax" => Some("table_wimax"),
        _ => None,
    }
}

/// Raw text of a bundled table, by table id or profile id.
pub fn bundled_table_data(id: &str) -> Result<&'static str> {
    match canonical_table_id(id) {
        Some("table_wlan80211a") => Ok(WLAN_DATA),
        Some(_) => Ok(WIMAX_DATA),
        None => Err(Error::UnknownTable(id.to_string())),
    }
}

pub fn bundled_table(id: &str) -> Result<LookupTable> {
    let canonical = canonical_table_id(id).ok_or_else(|| Error::UnknownTable(id.to_string()))?;
    let errata = if canonical == "table_wlan80211a" {
        WLAN_ERRATA
    } else {
        WIMAX_ERRATA
    };
    load_table(
        canonical,
        bundled_table_data(canonical)?,
        &LoadOptions {
            frames: Some(TABLE_FRAMES),
            errata: errata.to_vec(),
        },
    )
}

fn to_fixed(ber: f64) -> i64 {
    (ber * 10f64.powi(MAP_DECIMALS)).round() as i64
}

/// Nearest-BER lookup. The input and keys are rounded to four decimals;
/// ties go to the higher SNR.
pub fn map_ber_to_snr(est_ber: f64, table: &LookupTable) -> f64 {
    let target = to_fixed(if est_ber.is_nan() {
        1.0
    } else {
        est_ber.clamp(0.0, 1.0)
    });
    let mut best: Option<(i64, f64)> = None;
    for row in &table.rows {
        let distance = (to_fixed(table.key_ber(row)) - target).abs();
        match best {
            Some((d, _)) if distance > d => {}
            _ => best = Some((distance, row.snr_db)),
        }
    }
    best.map(|(_, snr)| snr)
        .expect("tables hold at least two rows")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub value_x: f64,
    pub value_y: f64,
    pub min_snr_db: f64,
}

/// Per-profile test-bench thresholds.
#[derive(Debug, Clone, Default)]
pub struct ThresholdStore {
    entries: BTreeMap<String, Thresholds>,
}

impl ThresholdStore {
    pub fn from_profiles(profiles: &ProfileSet) -> Self {
        ThresholdStore {
            entries: profiles
                .iter()
                .map(|p| {
                    (
                        p.id.clone(),
                        Thresholds {
                            value_x: p.value_x,
                            value_y: p.value_y,
                            min_snr_db: p.min_snr_db,
                        },
                    )
                })
                .collect(),
        }
    }

    pub fn bundled() -> Self {
        Self::from_profiles(&ProfileSet::bundled())
    }

    pub fn set(&mut self, profile_id: &str, thresholds: Thresholds) {
        self.entries.insert(profile_id.to_string(), thresholds);
    }
}

pub fn get_thresholds(profile_id: &str, store: &ThresholdStore) -> Result<Thresholds> {
    store
        .entries
        .get(profile_id)
        .copied()
        .ok_or_else(|| Error::UnknownProfile(profile_id.to_string()))
}
