//! File formats: indicator tables (CSV and JSON), configuration, reading
//! files and the snapshot store.

mod config;
mod snapshot;
mod table;

pub use config::{load_config, ConfigError, ConfigWarning, LoadedConfig};
pub use snapshot::{Snapshot, SnapshotContent, SnapshotError, SnapshotStore};
pub use table::{
    canonical_order, parse_table, to_document, write_table, AngleMode, LayoutSpec, Location,
    ParseError, ParseErrors, RowDocument, TableDocument, TableFormat,
};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Pretty JSON with a trailing newline; the format of reading and report files.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("value serializes");
    out.push(b'\n');
    out
}

pub fn from_json_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, serde_json::Error> {
    serde_json::from_slice(bytes)
}
