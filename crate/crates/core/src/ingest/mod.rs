//! AIS contact ingestion from CSV exports.

mod mapping;
mod types;

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use csv::{ByteRecord, ReaderBuilder, WriterBuilder};

pub use mapping::{ColumnMapping, Columns, REQUIRED_FIELDS};
pub use types::{to_binary_class, AisRecord, BinaryClass, Label, MobileClass, NavStatus, ShipType};

use crate::error::{Error, Result};

/// Why a data row was skipped.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum RejectReason {
    MissingField(&'static str),
    UnparseableNumber(&'static str),
    InvalidTimestamp,
    InvalidMmsi,
    CoordinateOutOfRange,
    InvalidValue(&'static str),
    InvalidUtf8,
    Malformed(String),
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::MissingField(field) => write!(f, "missing required field {field}"),
            RejectReason::UnparseableNumber(field) => write!(f, "unparseable number in {field}"),
            RejectReason::InvalidTimestamp => f.write_str("invalid timestamp"),
            RejectReason::InvalidMmsi => f.write_str("invalid mmsi"),
            RejectReason::CoordinateOutOfRange => f.write_str("coordinate out of range"),
            RejectReason::InvalidValue(field) => write!(f, "invalid value in {field}"),
            RejectReason::InvalidUtf8 => f.write_str("invalid utf-8"),
            RejectReason::Malformed(detail) => write!(f, "malformed row: {detail}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    /// 1-based data row number (the header is not counted).
    pub row: u64,
    pub reason: RejectReason,
}

#[derive(Debug, Clone, Default)]
pub struct ParseOutcome {
    pub records: Vec<AisRecord>,
    pub rejects: Vec<Reject>,
    pub data_rows: u64,
}

impl ParseOutcome {
    pub fn reject_counts(&self) -> BTreeMap<String, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.rejects {
            *counts.entry(r.reason.to_string()).or_insert(0) += 1;
        }
        counts
    }
}

struct FieldIndex {
    timestamp: usize,
    mmsi: usize,
    lat: usize,
    lon: usize,
    sog: Option<usize>,
    cog: Option<usize>,
    nav_status: Option<usize>,
    ship_type: Option<usize>,
    length: Option<usize>,
    width: Option<usize>,
    mobile_class: Option<usize>,
}

impl FieldIndex {
    fn resolve(header: &[String], mapping: &ColumnMapping) -> Result<FieldIndex> {
        let mut found = [None; 11];
        for (slot, (field, column)) in found.iter_mut().zip(mapping.columns.entries()) {
            if let Some(column) = column {
                let idx = header
                    .iter()
                    .position(|h| h.trim() == column.trim())
                    .ok_or_else(|| Error::MissingColumn { field, column: column.to_string() })?;
                *slot = Some(idx);
            }
        }
        let required = |i: usize| found[i].ok_or_else(|| Error::InvalidConfig(format!("required field `{}` unmapped", REQUIRED_FIELDS[i])));
        Ok(FieldIndex {
            timestamp: required(0)?,
            mmsi: required(1)?,
            lat: required(2)?,
            lon: required(3)?,
            sog: found[4],
            cog: found[5],
            nav_status: found[6],
            ship_type: found[7],
            length: found[8],
            width: found[9],
            mobile_class: found[10],
        })
    }
}

/// Parses a CSV export into records. Row-level defects never abort the parse;
/// they land in the reject log and the remaining rows keep their input order.
pub fn parse_csv<R: Read>(source: R, mapping: &ColumnMapping) -> Result<ParseOutcome> {
    mapping.validate()?;
    let mut reader = ReaderBuilder::new().has_headers(true).flexible(true).from_reader(source);
    let header = reader.byte_headers()?.clone();
    let header: Vec<String> = header
        .iter()
        .enumerate()
        .map(|(i, h)| {
            let h = std::str::from_utf8(h).map_err(|_| Error::Data("header is not valid UTF-8".into()))?;
            Ok(if i == 0 { h.trim_start_matches('\u{feff}').to_string() } else { h.to_string() })
        })
        .collect::<Result<_>>()?;
    let index = FieldIndex::resolve(&header, mapping)?;

    let mut out = ParseOutcome::default();
    let mut row = ByteRecord::new();
    loop {
        match reader.read_byte_record(&mut row) {
            Ok(false) => break,
            Ok(true) => {
                out.data_rows += 1;
                match parse_row(&row, &index, mapping) {
                    Ok(record) => out.records.push(record),
                    Err(reason) => out.rejects.push(Reject { row: out.data_rows, reason }),
                }
            }
            Err(err) => match err.kind() {
                csv::ErrorKind::Io(_) => return Err(err.into()),
                _ => {
                    out.data_rows += 1;
                    out.rejects.push(Reject { row: out.data_rows, reason: RejectReason::Malformed(err.to_string()) });
                }
            },
        }
    }
    Ok(out)
}

fn parse_row(row: &ByteRecord, index: &FieldIndex, mapping: &ColumnMapping) -> std::result::Result<AisRecord, RejectReason> {
    let text = |idx: usize| -> std::result::Result<&str, RejectReason> {
        match row.get(idx) {
            Some(bytes) => std::str::from_utf8(bytes).map(str::trim).map_err(|_| RejectReason::InvalidUtf8),
            None => Ok(""),
        }
    };
    let optional = |idx: Option<usize>| -> std::result::Result<Option<&str>, RejectReason> {
        match idx {
            Some(i) => text(i).map(|s| (!s.is_empty()).then_some(s)),
            None => Ok(None),
        }
    };
    let number = |idx: Option<usize>, field: &'static str| -> std::result::Result<Option<f64>, RejectReason> {
        optional(idx)?.map(|s| mapping.parse_number(s).ok_or(RejectReason::UnparseableNumber(field))).transpose()
    };
    let required = |idx: usize, field: &'static str| -> std::result::Result<&str, RejectReason> {
        let s = text(idx)?;
        if s.is_empty() {
            Err(RejectReason::MissingField(field))
        } else {
            Ok(s)
        }
    };

    let timestamp = mapping
        .parse_timestamp(required(index.timestamp, "timestamp")?)
        .filter(|t| *t >= 0)
        .ok_or(RejectReason::InvalidTimestamp)?;
    let mmsi: u32 = required(index.mmsi, "mmsi")?.parse().map_err(|_| RejectReason::UnparseableNumber("mmsi"))?;
    if mmsi == 0 || mmsi > 999_999_999 {
        return Err(RejectReason::InvalidMmsi);
    }
    let lat = mapping.parse_number(required(index.lat, "lat")?).ok_or(RejectReason::UnparseableNumber("lat"))?;
    let lon = mapping.parse_number(required(index.lon, "lon")?).ok_or(RejectReason::UnparseableNumber("lon"))?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        return Err(RejectReason::CoordinateOutOfRange);
    }

    // AIS encodes "not available" as out-of-range sentinels (sog 102.3, cog 360);
    // those become absent rather than rejecting an otherwise usable contact.
    let sog = number(index.sog, "sog")?.filter(|v| (0.0..102.3).contains(v));
    let cog = number(index.cog, "cog")?.filter(|v| (0.0..360.0).contains(v));
    let nav_status = optional(index.nav_status)?
        .map(|s| s.parse::<NavStatus>().map_err(|_| RejectReason::InvalidValue("nav_status")))
        .transpose()?;
    let ship_type = optional(index.ship_type)?.map(ShipType::from_label);
    let length = number(index.length, "length")?.filter(|v| *v >= 0.0);
    let width = number(index.width, "width")?.filter(|v| *v >= 0.0);
    let mobile_class = match optional(index.mobile_class)? {
        Some(s) => MobileClass::from_label(s),
        None => MobileClass::from_mmsi(mmsi),
    };

    Ok(AisRecord { timestamp, mmsi, lat, lon, sog, cog, nav_status, ship_type, length, width, mobile_class })
}

/// Writes records with the mapping's column names; unmapped optional fields are omitted.
pub fn write_csv<W: Write>(records: &[AisRecord], mapping: &ColumnMapping, sink: W) -> Result<()> {
    mapping.validate()?;
    let mut writer = WriterBuilder::new().from_writer(sink);
    let entries = mapping.columns.entries();
    writer.write_record(entries.iter().filter_map(|(_, c)| *c))?;
    let num = |v: Option<f64>| v.map(|v| mapping.format_number(v)).unwrap_or_default();
    for r in records {
        let mut fields = Vec::with_capacity(entries.len());
        for (field, column) in entries {
            if column.is_none() {
                continue;
            }
            fields.push(match field {
                "timestamp" => mapping.format_timestamp(r.timestamp),
                "mmsi" => r.mmsi.to_string(),
                "lat" => mapping.format_number(r.lat),
                "lon" => mapping.format_number(r.lon),
                "sog" => num(r.sog),
                "cog" => num(r.cog),
                "nav_status" => r.nav_status.map(|s| s.name().to_string()).unwrap_or_default(),
                "ship_type" => r.ship_type.map(|s| s.name().to_string()).unwrap_or_default(),
                "length" => num(r.length),
                "width" => num(r.width),
                "mobile_class" => r.mobile_class.name().to_string(),
                _ => unreachable!("unknown record field {field}"),
            });
        }
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn write_reject_log<W: Write>(rejects: &[Reject], sink: W) -> Result<()> {
    let mut writer = WriterBuilder::new().from_writer(sink);
    writer.write_record(["row", "reason"])?;
    for r in rejects {
        writer.write_record([r.row.to_string(), r.reason.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}
