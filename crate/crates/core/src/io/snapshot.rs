use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::IndicatorTable;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SnapshotError {
    #[error("snapshot at {time} for `{institution}` is not after the latest one ({latest})")]
    NotIncreasing { institution: String, time: DateTime<Utc>, latest: DateTime<Utc> },
    #[error("snapshot store: {0}")]
    Format(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotContent {
    Table { table: IndicatorTable },
    /// Eco, socio and econo tables.
    Spheres { tables: Box<[IndicatorTable; 3]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub time: DateTime<Utc>,
    pub content: SnapshotContent,
}

/// Tables of each institution over time. Times are strictly increasing
/// per institution.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SnapshotStore {
    institutions: BTreeMap<String, Vec<Snapshot>>,
}

impl SnapshotStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        institution: impl Into<String>,
        time: DateTime<Utc>,
        content: SnapshotContent,
    ) -> Result<(), SnapshotError> {
        let institution = institution.into();
        let list = self.institutions.entry(institution.clone()).or_default();
        if let Some(last) = list.last() {
            if time <= last.time {
                return Err(SnapshotError::NotIncreasing { institution, time, latest: last.time });
            }
        }
        list.push(Snapshot { time, content });
        Ok(())
    }

    pub fn history(&self, institution: &str) -> &[Snapshot] {
        self.institutions.get(institution).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn institutions(&self) -> impl Iterator<Item = &str> {
        self.institutions.keys().map(String::as_str)
    }

    pub fn to_json(&self) -> Vec<u8> {
        super::to_json_bytes(self)
    }

    /// Loads a store, re-checking the ordering invariant.
    pub fn from_json(bytes: &[u8]) -> Result<Self, SnapshotError> {
        let raw: SnapshotStore = serde_json::from_slice(bytes).map_err(|e| SnapshotError::Format(e.to_string()))?;
        let mut store = SnapshotStore::new();
        for (inst, snaps) in raw.institutions {
            for s in snaps {
                store.insert(inst.clone(), s.time, s.content)?;
            }
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Sphere;
    use chrono::TimeZone;

    fn table() -> SnapshotContent {
        SnapshotContent::Table { table: IndicatorTable::empty(Sphere::Unspecified, "school").unwrap() }
    }

    #[test]
    fn times_must_increase() {
        let mut s = SnapshotStore::new();
        let t1 = Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap();
        let t2 = Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap();
        s.insert("school", t1, table()).unwrap();
        assert!(matches!(s.insert("school", t1, table()), Err(SnapshotError::NotIncreasing { .. })));
        s.insert("school", t2, table()).unwrap();
        s.insert("farm", t1, table()).unwrap();
        assert_eq!(s.history("school").len(), 2);
        assert!(s.history("nowhere").is_empty());
        let back = SnapshotStore::from_json(&s.to_json()).unwrap();
        assert_eq!(back, s);
    }
}
