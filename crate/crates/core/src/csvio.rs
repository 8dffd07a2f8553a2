use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

pub fn write_records<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_records_to(file, rows).map_err(|e| Error::csv(path, e))
}

pub fn write_records_to<W: Write, T: Serialize>(out: W, rows: &[T]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_records_from(file).map_err(|e| Error::csv(path, e))
}

pub fn read_records_from<R: Read, T: DeserializeOwned>(input: R) -> csv::Result<Vec<T>> {
    csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input)
        .deserialize()
        .collect()
}

/// Column lookup for readers that need to report missing columns by name.
pub struct Columns {
    headers: csv::StringRecord,
}

impl Columns {
    pub fn new(headers: csv::StringRecord) -> Self {
        Columns { headers }
    }

    pub fn require(&self, name: &str) -> Result<usize> {
        self.optional(name)
            .ok_or_else(|| Error::Schema(format!("missing required column `{name}`")))
    }

    pub fn optional(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h.trim() == name)
    }
}
