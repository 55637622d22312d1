use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Quality, SectorLayout};

/// Width of every sector, in degrees.
pub const SECTOR_SPAN: f64 = 120.0;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct IndicatorId(String);

impl IndicatorId {
    pub fn new(id: impl Into<String>) -> Self {
        Self(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for IndicatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for IndicatorId {
    fn from(s: &str) -> Self {
        Self(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ValidationError {
    #[error("offset {offset} is outside [0, 120)")]
    OffsetOutOfRange { offset: f64 },
    #[error("length {length} is outside [0, 1]")]
    LengthOutOfRange { length: f64 },
    #[error("offset {offset} sits on a sector boundary; pick another statistic or mark it boundary_ok")]
    BoundarySitting { offset: f64 },
    #[error("indicator name is empty")]
    EmptyName,
    #[error("indicator id is empty")]
    EmptyId,
}

/// Every violation found in one candidate indicator.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValidationErrors(pub Vec<ValidationError>);

impl fmt::Display for ValidationErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

/// An unchecked indicator, as read from a file or an API request.
///
/// Field names follow the table schema: `angle` holds the within-sector
/// offset and `length` the raw length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorDraft {
    pub id: IndicatorId,
    pub name: String,
    pub quality: Quality,
    #[serde(rename = "angle")]
    pub offset: f64,
    #[serde(rename = "length")]
    pub raw_length: f64,
    #[serde(default)]
    pub notes: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub boundary_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

impl IndicatorDraft {
    pub fn new(
        id: impl Into<String>,
        name: impl Into<String>,
        quality: Quality,
        offset: f64,
        raw_length: f64,
    ) -> Self {
        Self {
            id: IndicatorId::new(id),
            name: name.into(),
            quality,
            offset,
            raw_length,
            notes: String::new(),
            boundary_ok: false,
            timestamp: None,
        }
    }

    pub fn notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = notes.into();
        self
    }

    pub fn boundary_ok(mut self, ok: bool) -> Self {
        self.boundary_ok = ok;
        self
    }

    pub fn validate(self) -> Result<Indicator, ValidationErrors> {
        let mut errors = Vec::new();
        if self.id.as_str().trim().is_empty() {
            errors.push(ValidationError::EmptyId);
        }
        if self.name.trim().is_empty() {
            errors.push(ValidationError::EmptyName);
        }
        let offset = self.offset;
        // The closing boundary is reachable only for flagged indicators.
        let in_range = offset >= 0.0
            && (offset < SECTOR_SPAN || (offset == SECTOR_SPAN && self.boundary_ok));
        if !in_range {
            errors.push(ValidationError::OffsetOutOfRange { offset });
        } else if offset == 0.0 && !self.boundary_ok {
            errors.push(ValidationError::BoundarySitting { offset });
        }
        if !(0.0..=1.0).contains(&self.raw_length) {
            errors.push(ValidationError::LengthOutOfRange { length: self.raw_length });
        }
        if errors.is_empty() {
            Ok(Indicator(self))
        } else {
            Err(ValidationErrors(errors))
        }
    }
}

/// A validated statistic placed on the compass.
///
/// Invariants: `0 <= offset < 120` (the closing 120 only with
/// `boundary_ok`), offset 0 only with `boundary_ok`, `0 <= raw_length <= 1`,
/// non-empty id and name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IndicatorDraft", into = "IndicatorDraft")]
pub struct Indicator(IndicatorDraft);

impl TryFrom<IndicatorDraft> for Indicator {
    type Error = ValidationErrors;
    fn try_from(d: IndicatorDraft) -> Result<Self, Self::Error> {
        d.validate()
    }
}

impl From<Indicator> for IndicatorDraft {
    fn from(i: Indicator) -> Self {
        i.0
    }
}

impl Indicator {
    pub fn id(&self) -> &IndicatorId {
        &self.0.id
    }
    pub fn name(&self) -> &str {
        &self.0.name
    }
    pub fn quality(&self) -> Quality {
        self.0.quality
    }
    pub fn offset(&self) -> f64 {
        self.0.offset
    }
    pub fn raw_length(&self) -> f64 {
        self.0.raw_length
    }
    pub fn notes(&self) -> &str {
        &self.0.notes
    }
    pub fn is_boundary_ok(&self) -> bool {
        self.0.boundary_ok
    }
    pub fn timestamp(&self) -> Option<DateTime<Utc>> {
        self.0.timestamp
    }

    pub fn absolute_angle(&self, layout: &SectorLayout) -> f64 {
        layout.absolute_angle(self.quality(), self.offset())
    }

    pub fn draft(&self) -> &IndicatorDraft {
        &self.0
    }

    pub fn into_draft(self) -> IndicatorDraft {
        self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draft(offset: f64, length: f64) -> IndicatorDraft {
        IndicatorDraft::new("d", "debt", Quality::Suppression, offset, length)
    }

    #[test]
    fn accepts_interior_values() {
        let ind = draft(60.0, 0.5).validate().unwrap();
        assert_eq!(ind.offset(), 60.0);
        assert_eq!(ind.raw_length(), 0.5);
    }

    #[test]
    fn closing_boundary_is_out_of_range() {
        let errs = draft(120.0, 0.5).validate().unwrap_err();
        assert_eq!(errs.0, vec![ValidationError::OffsetOutOfRange { offset: 120.0 }]);
    }

    #[test]
    fn opening_boundary_needs_a_flag() {
        let errs = draft(0.0, 0.5).validate().unwrap_err();
        assert_eq!(errs.0, vec![ValidationError::BoundarySitting { offset: 0.0 }]);
        assert!(draft(0.0, 0.5).boundary_ok(true).validate().is_ok());
        assert!(draft(120.0, 0.5).boundary_ok(true).validate().is_ok());
    }

    #[test]
    fn reports_every_violation() {
        let mut d = draft(-3.0, 1.5);
        d.name = "  ".into();
        let errs = d.validate().unwrap_err();
        assert_eq!(errs.0.len(), 3);
        assert!(errs.0.contains(&ValidationError::EmptyName));
        assert!(errs.0.contains(&ValidationError::LengthOutOfRange { length: 1.5 }));
    }

    #[test]
    fn nan_is_rejected() {
        let errs = draft(f64::NAN, f64::NAN).validate().unwrap_err();
        assert_eq!(errs.0.len(), 2);
    }

    #[test]
    fn absolute_angle_under_default_layout() {
        let layout = SectorLayout::default();
        let h = IndicatorDraft::new("w", "Stability in wages", Quality::Harmony, 100.0, 0.5);
        assert_eq!(h.validate().unwrap().absolute_angle(&layout), 100.0);
        let p = IndicatorDraft::new("p", "x", Quality::Passion, 0.0, 0.5).boundary_ok(true);
        assert_eq!(p.validate().unwrap().absolute_angle(&layout), 120.0);
        let s = IndicatorDraft::new("s", "x", Quality::Suppression, 24.0, 0.5);
        assert_eq!(s.validate().unwrap().absolute_angle(&layout), 264.0);
    }
}
