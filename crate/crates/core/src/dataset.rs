//! Labeled feature matrices and their CSV form.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{Label, ShipType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Synthetic,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Synthetic => "synthetic",
        }
    }
}

/// Feature rows with their binary label, source ship type and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
    pub ship_types: Vec<ShipType>,
    pub provenance: Vec<Provenance>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>) -> Self {
        LabeledDataset { feature_names, rows: Vec::new(), labels: Vec::new(), ship_types: Vec::new(), provenance: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>, label: Label, ship_type: ShipType, provenance: Provenance) {
        assert_eq!(row.len(), self.feature_names.len(), "row width does not match the feature names");
        self.rows.push(row);
        self.labels.push(label);
        self.ship_types.push(ship_type);
        self.provenance.push(provenance);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }

    /// The less frequent label (fishing on ties).
    pub fn minority(&self) -> Label {
        if self.count(Label::Fishing) <= self.count(Label::NonFishing) {
            Label::Fishing
        } else {
            Label::NonFishing
        }
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        let mut out = LabeledDataset::new(self.feature_names.clone());
        for &i in indices {
            out.push(self.rows[i].clone(), self.labels[i], self.ship_types[i], self.provenance[i]);
        }
        out
    }

    /// Keeps only the named columns, in the given order.
    pub fn project(&self, names: &[String]) -> Result<LabeledDataset> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| self.feature_names.iter().position(|f| f == n).ok_or_else(|| Error::UnknownFeature(n.clone())))
            .collect::<Result<_>>()?;
        let mut out = self.clone();
        out.feature_names = names.to_vec();
        out.rows = self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect();
        Ok(out)
    }

    pub fn ship_type_counts(&self) -> BTreeMap<ShipType, usize> {
        let mut counts = BTreeMap::new();
        for t in &self.ship_types {
            *counts.entry(*t).or_insert(0) += 1;
        }
        counts
    }

    pub fn write_csv<W: Write>(&self, sink: W, with_provenance: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.extend(["ship_type", "label"]);
        if with_provenance {
            header.push("provenance");
        }
        w.write_record(&header)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.rows[i].iter().map(|v| v.to_string()).collect();
            rec.push(self.ship_types[i].name().to_string());
            rec.push(self.labels[i].as_str().to_string());
            if with_provenance {
                rec.push(self.provenance[i].as_str().to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the CSV form. `ship_type` and `provenance` columns are optional;
    /// without them rows default to the label's nominal type and `original`.
    pub fn read_csv<R: Read>(source: R) -> Result<LabeledDataset> {
        let mut r = csv::Reader::from_reader(source);
        let header = r.headers()?.clone();
        let pos = |name: &str| header.iter().position(|h| h == name);
        let label_col = pos("label").ok_or_else(|| Error::Data("feature file has no `label` column".into()))?;
        let type_col = pos("ship_type");
        let prov_col = pos("provenance");
        let feature_cols: Vec<usize> = (0..header.len()).filter(|i| ![Some(label_col), type_col, prov_col].contains(&Some(*i))).collect();
        let mut ds = LabeledDataset::new(feature_cols.iter().map(|&i| header[i].to_string()).collect());
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = |what: &str| Error::Data(format!("row {}: {what}", line + 1));
            let row = feature_cols
                .iter()
                .map(|&i| rec.get(i).and_then(|s| s.trim().parse::<f64>().ok()).filter(|v| v.is_finite()).ok_or_else(|| bad("non-numeric feature")))
                .collect::<Result<Vec<f64>>>()?;
            let label: Label = rec.get(label_col).unwrap_or("").parse().map_err(|e: String| bad(&e))?;
            let ship_type = match type_col.and_then(|i| rec.get(i)) {
                Some(s) => ShipType::from_label(s),
                None if label == Label::Fishing => ShipType::Fishing,
                None => ShipType::Unknown,
            };
            let provenance = match prov_col.and_then(|i| rec.get(i)) {
                Some("synthetic") => Provenance::Synthetic,
                Some("original") | None => Provenance::Original,
                Some(other) => return Err(bad(&format!("unknown provenance `{other}`"))),
            };
            ds.push(row, label, ship_type, provenance);
        }
        Ok(ds)
    }
}
