use std::collections::BTreeSet;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Indicator, IndicatorId, Quality, Sphere};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("indicator id `{0}` appears more than once")]
    DuplicateId(IndicatorId),
    #[error("institution name must be a single line")]
    MultilineInstitution,
}

/// The indicators gathered for one institution, in one sphere, at one time.
///
/// Ids are unique within a table. Any sector may be empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable")]
pub struct IndicatorTable {
    sphere: Sphere,
    institution: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    snapshot_time: Option<DateTime<Utc>>,
    indicators: Vec<Indicator>,
}

#[derive(Deserialize)]
struct RawTable {
    #[serde(default)]
    sphere: Sphere,
    #[serde(default)]
    institution: String,
    #[serde(default)]
    snapshot_time: Option<DateTime<Utc>>,
    #[serde(default)]
    indicators: Vec<Indicator>,
}

impl TryFrom<RawTable> for IndicatorTable {
    type Error = TableError;
    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        Ok(IndicatorTable::new(raw.sphere, raw.institution, raw.indicators)?
            .with_snapshot_time(raw.snapshot_time))
    }
}

impl IndicatorTable {
    pub fn new(
        sphere: Sphere,
        institution: impl Into<String>,
        indicators: Vec<Indicator>,
    ) -> Result<Self, TableError> {
        let institution = institution.into();
        if institution.contains(['\n', '\r']) {
            return Err(TableError::MultilineInstitution);
        }
        let mut seen = BTreeSet::new();
        for ind in &indicators {
            if !seen.insert(ind.id()) {
                return Err(TableError::DuplicateId(ind.id().clone()));
            }
        }
        Ok(Self { sphere, institution, snapshot_time: None, indicators })
    }

    pub fn empty(sphere: Sphere, institution: impl Into<String>) -> Result<Self, TableError> {
        Self::new(sphere, institution, Vec::new())
    }

    pub fn with_snapshot_time(mut self, time: Option<DateTime<Utc>>) -> Self {
        self.snapshot_time = time;
        self
    }

    pub fn with_sphere(mut self, sphere: Sphere) -> Self {
        self.sphere = sphere;
        self
    }

    pub fn sphere(&self) -> Sphere {
        self.sphere
    }

    pub fn institution(&self) -> &str {
        &self.institution
    }

    pub fn snapshot_time(&self) -> Option<DateTime<Utc>> {
        self.snapshot_time
    }

    pub fn indicators(&self) -> &[Indicator] {
        &self.indicators
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn get(&self, id: &IndicatorId) -> Option<&Indicator> {
        self.indicators.iter().find(|i| i.id() == id)
    }

    pub fn contains(&self, id: &IndicatorId) -> bool {
        self.get(id).is_some()
    }

    pub fn in_sector(&self, q: Quality) -> impl Iterator<Item = &Indicator> {
        self.indicators.iter().filter(move |i| i.quality() == q)
    }

    pub fn sector_count(&self, q: Quality) -> usize {
        self.in_sector(q).count()
    }

    pub fn push(&mut self, ind: Indicator) -> Result<(), TableError> {
        if self.contains(ind.id()) {
            return Err(TableError::DuplicateId(ind.id().clone()));
        }
        self.indicators.push(ind);
        Ok(())
    }

    pub fn remove(&mut self, id: &IndicatorId) -> Option<Indicator> {
        let pos = self.indicators.iter().position(|i| i.id() == id)?;
        Some(self.indicators.remove(pos))
    }

    /// Replaces the indicator with the same id, keeping its position.
    pub fn replace(&mut self, ind: Indicator) -> Option<Indicator> {
        let slot = self.indicators.iter_mut().find(|i| i.id() == ind.id())?;
        Some(std::mem::replace(slot, ind))
    }

    /// A copy of this table without `id`.
    pub fn without(&self, id: &IndicatorId) -> Self {
        let mut t = self.clone();
        t.remove(id);
        t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::IndicatorDraft;

    fn ind(id: &str, q: Quality) -> Indicator {
        IndicatorDraft::new(id, id, q, 50.0, 0.5).validate().unwrap()
    }

    #[test]
    fn duplicate_ids_rejected() {
        let err = IndicatorTable::new(
            Sphere::Eco,
            "farm",
            vec![ind("a", Quality::Harmony), ind("a", Quality::Passion)],
        )
        .unwrap_err();
        assert_eq!(err, TableError::DuplicateId("a".into()));
    }

    #[test]
    fn empty_sectors_are_legal() {
        let t = IndicatorTable::new(Sphere::Eco, "farm", vec![ind("a", Quality::Harmony)]).unwrap();
        assert_eq!(t.sector_count(Quality::Passion), 0);
        assert_eq!(t.sector_count(Quality::Harmony), 1);
    }

    #[test]
    fn replace_keeps_position() {
        let mut t = IndicatorTable::new(
            Sphere::Eco,
            "farm",
            vec![ind("a", Quality::Harmony), ind("b", Quality::Passion)],
        )
        .unwrap();
        let newer = IndicatorDraft::new("a", "a", Quality::Harmony, 80.0, 0.1).validate().unwrap();
        t.replace(newer);
        assert_eq!(t.indicators()[0].offset(), 80.0);
        assert!(t.without(&"b".into()).get(&"b".into()).is_none());
    }

    #[test]
    fn deserialization_enforces_unique_ids() {
        let json = r#"{"sphere":"eco","institution":"x","indicators":[
            {"id":"a","name":"a","quality":"harmony","angle":10,"length":0.5},
            {"id":"a","name":"b","quality":"harmony","angle":20,"length":0.5}]}"#;
        assert!(serde_json::from_str::<IndicatorTable>(json).is_err());
    }
}
