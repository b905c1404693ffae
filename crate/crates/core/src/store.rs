//! JSON-lines persistence for intermediate track files.

use std::io::{BufRead, BufReader, Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], sink: W) -> Result<()> {
    let mut out = std::io::BufWriter::new(sink);
    for item in items {
        serde_json::to_writer(&mut out, item)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Blank lines are skipped; a malformed line reports its 1-based number.
pub fn read_jsonl<T: DeserializeOwned, R: Read>(source: R) -> Result<Vec<T>> {
    let mut items = Vec::new();
    for (n, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| Error::Data(format!("line {}: {e}", n + 1)))?;
        items.push(item);
    }
    Ok(items)
}
