use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source column for every record field. `None` leaves an optional field unmapped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Columns {
    pub timestamp: Option<String>,
    pub mmsi: Option<String>,
    pub lat: Option<String>,
    pub lon: Option<String>,
    pub sog: Option<String>,
    pub cog: Option<String>,
    pub nav_status: Option<String>,
    pub ship_type: Option<String>,
    pub length: Option<String>,
    pub width: Option<String>,
    pub mobile_class: Option<String>,
}

impl Default for Columns {
    fn default() -> Self {
        let col = |s: &str| Some(s.to_string());
        Columns {
            timestamp: col("timestamp"),
            mmsi: col("mmsi"),
            lat: col("lat"),
            lon: col("lon"),
            sog: col("sog"),
            cog: col("cog"),
            nav_status: col("nav_status"),
            ship_type: col("ship_type"),
            length: col("length"),
            width: col("width"),
            mobile_class: col("mobile_class"),
        }
    }
}

impl Columns {
    /// (field name, mapped column) in record field order.
    pub fn entries(&self) -> [(&'static str, Option<&str>); 11] {
        [
            ("timestamp", self.timestamp.as_deref()),
            ("mmsi", self.mmsi.as_deref()),
            ("lat", self.lat.as_deref()),
            ("lon", self.lon.as_deref()),
            ("sog", self.sog.as_deref()),
            ("cog", self.cog.as_deref()),
            ("nav_status", self.nav_status.as_deref()),
            ("ship_type", self.ship_type.as_deref()),
            ("length", self.length.as_deref()),
            ("width", self.width.as_deref()),
            ("mobile_class", self.mobile_class.as_deref()),
        ]
    }
}

pub const REQUIRED_FIELDS: [&str; 4] = ["timestamp", "mmsi", "lat", "lon"];

/// How a CSV export maps onto [`AisRecord`](super::AisRecord) fields.
///
/// `timestamp_format` accepts `iso8601` (RFC 3339, or naive `YYYY-MM-DD[T ]HH:MM:SS`
/// read as UTC), `unix` (integer seconds) or any chrono strftime pattern read as UTC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub columns: Columns,
    pub timestamp_format: String,
    pub decimal_separator: char,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping { columns: Columns::default(), timestamp_format: "iso8601".into(), decimal_separator: '.' }
    }
}

impl ColumnMapping {
    pub fn validate(&self) -> Result<()> {
        for (field, column) in self.columns.entries() {
            if REQUIRED_FIELDS.contains(&field) && column.is_none() {
                return Err(Error::InvalidConfig(format!("required field `{field}` has no mapped column")));
            }
        }
        if self.timestamp_format.trim().is_empty() {
            return Err(Error::InvalidConfig("empty timestamp format".into()));
        }
        if self.decimal_separator.is_ascii_digit() || self.decimal_separator == '-' {
            return Err(Error::InvalidConfig(format!("unusable decimal separator {:?}", self.decimal_separator)));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let mapping: ColumnMapping = serde_json::from_str(text)?;
        mapping.validate()?;
        Ok(mapping)
    }

    pub fn parse_timestamp(&self, raw: &str) -> Option<i64> {
        let raw = raw.trim();
        match self.timestamp_format.as_str() {
            "unix" => raw.parse::<i64>().ok(),
            "iso8601" => DateTime::parse_from_rfc3339(raw)
                .map(|dt| dt.timestamp())
                .ok()
                .or_else(|| {
                    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"]
                        .iter()
                        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
                        .map(|dt| dt.and_utc().timestamp())
                }),
            fmt => NaiveDateTime::parse_from_str(raw, fmt).ok().map(|dt| dt.and_utc().timestamp()),
        }
    }

    pub fn format_timestamp(&self, ts: i64) -> String {
        match self.timestamp_format.as_str() {
            "unix" => ts.to_string(),
            fmt => {
                let dt = DateTime::from_timestamp(ts, 0).expect("timestamp within chrono range");
                if fmt == "iso8601" {
                    dt.format("%Y-%m-%dT%H:%M:%SZ").to_string()
                } else {
                    dt.format(fmt).to_string()
                }
            }
        }
    }

    pub fn parse_number(&self, raw: &str) -> Option<f64> {
        let raw = raw.trim();
        let value = if self.decimal_separator == '.' {
            raw.parse::<f64>().ok()?
        } else {
            raw.replace(self.decimal_separator, ".").parse::<f64>().ok()?
        };
        value.is_finite().then_some(value)
    }

    pub fn format_number(&self, value: f64) -> String {
        let s = format!("{value}");
        if self.decimal_separator == '.' {
            s
        } else {
            s.replace('.', &self.decimal_separator.to_string())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_mapping_overrides_defaults() {
        let m = ColumnMapping::from_json(
            r##"{"columns": {"timestamp": "# Timestamp", "mmsi": "MMSI", "lat": "Latitude", "lon": "Longitude", "width": null},
                "timestamp_format": "%d/%m/%Y %H:%M:%S"}"##,
        )
        .unwrap();
        assert_eq!(m.columns.timestamp.as_deref(), Some("# Timestamp"));
        assert_eq!(m.columns.width, None);
        assert_eq!(m.columns.sog.as_deref(), Some("sog"));
        assert_eq!(m.parse_timestamp("01/01/2020 00:00:10"), Some(1_577_836_810));
        assert_eq!(m.format_timestamp(1_577_836_810), "01/01/2020 00:00:10");
    }

    #[test]
    fn required_fields_must_be_mapped() {
        let err = ColumnMapping::from_json(r#"{"columns": {"lat": null}}"#).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn iso_timestamps() {
        let m = ColumnMapping::default();
        assert_eq!(m.parse_timestamp("2020-01-01T00:00:10Z"), Some(1_577_836_810));
        assert_eq!(m.parse_timestamp("2020-01-01 00:00:10"), Some(1_577_836_810));
        assert_eq!(m.parse_timestamp("2020-01-01T01:00:10+01:00"), Some(1_577_836_810));
        assert_eq!(m.parse_timestamp("yesterday"), None);
        assert_eq!(m.format_timestamp(1_577_836_810), "2020-01-01T00:00:10Z");
    }

    #[test]
    fn decimal_comma() {
        let m = ColumnMapping { decimal_separator: ',', ..Default::default() };
        assert_eq!(m.parse_number("55,125"), Some(55.125));
        assert_eq!(m.format_number(55.125), "55,125");
        assert_eq!(m.parse_number("nan"), None);
    }
}
