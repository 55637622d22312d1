use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::indicator::SECTOR_SPAN;
use super::Quality;
use crate::geometry::normalize_degrees;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout order must name each quality exactly once")]
    DuplicateQuality,
    #[error("layout origin must be finite")]
    NonFiniteOrigin,
}

/// Where each quality's 120° sector sits on the circle.
///
/// A layout is a counterclockwise order of the three qualities plus the
/// absolute angle at which the first one starts. The default puts Harmony
/// on `[0, 120)`, Passion on `[120, 240)` and Suppression on `[240, 360)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLayout")]
pub struct SectorLayout {
    order: [Quality; 3],
    origin: f64,
}

#[derive(Deserialize)]
struct RawLayout {
    order: [Quality; 3],
    origin: f64,
}

impl TryFrom<RawLayout> for SectorLayout {
    type Error = LayoutError;
    fn try_from(raw: RawLayout) -> Result<Self, Self::Error> {
        SectorLayout::new(raw.order, raw.origin)
    }
}

impl Default for SectorLayout {
    fn default() -> Self {
        Self {
            order: [Quality::Harmony, Quality::Passion, Quality::Suppression],
            origin: 0.0,
        }
    }
}

impl SectorLayout {
    pub fn new(order: [Quality; 3], origin: f64) -> Result<Self, LayoutError> {
        if !origin.is_finite() {
            return Err(LayoutError::NonFiniteOrigin);
        }
        if order[0] == order[1] || order[1] == order[2] || order[0] == order[2] {
            return Err(LayoutError::DuplicateQuality);
        }
        Ok(Self { order, origin: normalize_degrees(origin) })
    }

    /// Harmony, Suppression, Passion counterclockwise from 0°, the
    /// orientation used by the three sphere tables.
    pub fn harmony_suppression_passion() -> Self {
        Self {
            order: [Quality::Harmony, Quality::Suppression, Quality::Passion],
            origin: 0.0,
        }
    }

    pub fn order(&self) -> [Quality; 3] {
        self.order
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    fn position(&self, q: Quality) -> usize {
        self.order.iter().position(|&o| o == q).expect("layout names every quality")
    }

    /// Absolute angle at which `q`'s sector starts.
    pub fn start_angle(&self, q: Quality) -> f64 {
        normalize_degrees(self.origin + SECTOR_SPAN * self.position(q) as f64)
    }

    pub fn start_angles(&self) -> BTreeMap<Quality, f64> {
        Quality::ALL.iter().map(|&q| (q, self.start_angle(q))).collect()
    }

    /// The quality whose sector ends where `q`'s begins.
    pub fn start_neighbor(&self, q: Quality) -> Quality {
        self.order[(self.position(q) + 2) % 3]
    }

    /// The quality whose sector begins where `q`'s ends.
    pub fn end_neighbor(&self, q: Quality) -> Quality {
        self.order[(self.position(q) + 1) % 3]
    }

    /// `(start_angle(q) + offset) mod 360`.
    pub fn absolute_angle(&self, q: Quality, offset: f64) -> f64 {
        normalize_degrees(self.start_angle(q) + offset)
    }

    /// Offset of `angle` measured from the start of `q`'s sector, in `[0, 360)`.
    pub fn offset_within(&self, q: Quality, angle: f64) -> f64 {
        normalize_degrees(angle - self.start_angle(q))
    }

    /// The quality whose half-open span contains `angle`.
    pub fn quality_at(&self, angle: f64) -> Quality {
        let rel = normalize_degrees(angle - self.origin);
        let idx = ((rel / SECTOR_SPAN) as usize).min(2);
        self.order[idx]
    }

    pub fn rotated(&self, degrees: f64) -> Self {
        Self {
            order: self.order,
            origin: normalize_degrees(self.origin + degrees),
        }
    }

    /// Comma-separated order, e.g. `harmony,passion,suppression`.
    pub fn order_string(&self) -> String {
        self.order.iter().map(|q| q.as_str()).collect::<Vec<_>>().join(",")
    }

    pub fn parse_order(s: &str) -> Result<[Quality; 3], String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated qualities, got `{s}`"));
        }
        let mut order = [Quality::Harmony; 3];
        for (slot, part) in order.iter_mut().zip(&parts) {
            *slot = part.parse().map_err(|e: super::ParseEnumError| e.to_string())?;
        }
        Ok(order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spans() {
        let l = SectorLayout::default();
        assert_eq!(l.start_angle(Quality::Harmony), 0.0);
        assert_eq!(l.start_angle(Quality::Passion), 120.0);
        assert_eq!(l.start_angle(Quality::Suppression), 240.0);
        assert_eq!(l.quality_at(66.0), Quality::Harmony);
        assert_eq!(l.quality_at(120.0), Quality::Passion);
        assert_eq!(l.quality_at(264.0), Quality::Suppression);
        assert_eq!(l.quality_at(359.999), Quality::Suppression);
    }

    #[test]
    fn neighbors_follow_the_order() {
        let l = SectorLayout::default();
        assert_eq!(l.start_neighbor(Quality::Suppression), Quality::Passion);
        assert_eq!(l.end_neighbor(Quality::Suppression), Quality::Harmony);
        let f = SectorLayout::harmony_suppression_passion();
        assert_eq!(f.start_angle(Quality::Suppression), 120.0);
        assert_eq!(f.start_angle(Quality::Passion), 240.0);
        assert_eq!(f.start_neighbor(Quality::Suppression), Quality::Harmony);
    }

    #[test]
    fn rejects_repeated_quality() {
        let err = SectorLayout::new([Quality::Harmony, Quality::Harmony, Quality::Passion], 0.0);
        assert_eq!(err, Err(LayoutError::DuplicateQuality));
    }

    #[test]
    fn spans_partition_the_circle() {
        let l = SectorLayout::default().rotated(17.0);
        let mut starts: Vec<f64> = l.start_angles().into_values().collect();
        starts.sort_by(f64::total_cmp);
        assert_eq!(starts, vec![17.0, 137.0, 257.0]);
        for deg in 0..360 {
            let a = deg as f64 + 0.5;
            let owners = Quality::ALL
                .iter()
                .filter(|&&q| l.offset_within(q, a) < SECTOR_SPAN)
                .count();
            assert_eq!(owners, 1, "angle {a}");
        }
    }

    #[test]
    fn order_round_trips_through_text() {
        let f = SectorLayout::harmony_suppression_passion();
        assert_eq!(SectorLayout::parse_order(&f.order_string()).unwrap(), f.order());
        assert!(SectorLayout::parse_order("harmony,passion").is_err());
    }
}
