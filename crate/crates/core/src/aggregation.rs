//! Single-compass aggregation.
//!
//! Indicator arrows of one sector are laid head to tail with corrected
//! lengths to form that sector's arrow. The three sector-arrow heads span a
//! triangle; the arrow from the circle's center to the triangle's center,
//! after the perspicuity correction, is the final arrow.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vector2;
use crate::model::{Indicator, IndicatorTable, Quality, SectorLayout, Sphere};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AggregationError {
    #[error("sector count must be at least 1, got {0}")]
    NonpositiveCount(usize),
    #[error("triangle is degenerate (collinear or coincident vertices); orthocenter undefined")]
    DegenerateTriangle,
    #[error("invalid compass configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CenterMethod {
    #[default]
    Centroid,
    Orthocenter,
}

impl std::str::FromStr for CenterMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "centroid" => Ok(CenterMethod::Centroid),
            "orthocenter" => Ok(CenterMethod::Orthocenter),
            other => Err(format!("unknown center method `{other}`")),
        }
    }
}

/// Parameters of the bounded magnitude remap applied to final arrows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Perspicuity {
    pub enabled: bool,
    /// Exponent below half the radius; smaller values expand short arrows more.
    pub alpha: f64,
    /// Exponent above half the radius; smaller values compress long arrows more.
    pub beta: f64,
}

impl Default for Perspicuity {
    fn default() -> Self {
        Self { enabled: true, alpha: 0.5, beta: 0.5 }
    }
}

impl Perspicuity {
    pub fn apply(&self, m: f64) -> f64 {
        if self.enabled {
            perspicuity_correct(m, self.alpha, self.beta)
        } else {
            m
        }
    }

    /// Rescales `v` to the corrected magnitude, keeping its direction.
    pub fn apply_to(&self, v: Vector2) -> Vector2 {
        if !self.enabled || v.is_zero() {
            return v;
        }
        v.with_magnitude(self.apply(v.magnitude().min(1.0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompassConfig {
    pub layout: SectorLayout,
    pub center_method: CenterMethod,
    pub perspicuity: Perspicuity,
    pub balance_epsilon: f64,
}

impl Default for CompassConfig {
    fn default() -> Self {
        Self {
            layout: SectorLayout::default(),
            center_method: CenterMethod::Centroid,
            perspicuity: Perspicuity::default(),
            balance_epsilon: 1e-9,
        }
    }
}

impl CompassConfig {
    pub fn with_layout(mut self, layout: SectorLayout) -> Self {
        self.layout = layout;
        self
    }

    pub fn validate(&self) -> Result<(), AggregationError> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if !in_unit(self.perspicuity.alpha) || !in_unit(self.perspicuity.beta) {
            return Err(AggregationError::InvalidConfig(format!(
                "perspicuity exponents must lie in (0, 1], got alpha {} beta {}",
                self.perspicuity.alpha, self.perspicuity.beta
            )));
        }
        if !(self.balance_epsilon > 0.0) {
            return Err(AggregationError::InvalidConfig(format!(
                "balance_epsilon must be positive, got {}",
                self.balance_epsilon
            )));
        }
        Ok(())
    }
}

/// Which third an arrow points into, or `Balanced` for a (near-)zero arrow.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Harmony,
    Passion,
    Suppression,
    Balanced,
}

impl Classification {
    pub fn quality(self) -> Option<Quality> {
        match self {
            Classification::Harmony => Some(Quality::Harmony),
            Classification::Passion => Some(Quality::Passion),
            Classification::Suppression => Some(Quality::Suppression),
            Classification::Balanced => None,
        }
    }
}

impl From<Quality> for Classification {
    fn from(q: Quality) -> Self {
        match q {
            Quality::Harmony => Classification::Harmony,
            Quality::Passion => Classification::Passion,
            Quality::Suppression => Classification::Suppression,
        }
    }
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.quality() {
            Some(q) => q.fmt(f),
            None => f.write_str("balanced"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectorArrow {
    pub quality: Quality,
    pub vector: Vector2,
    pub indicator_count: usize,
}

/// Everything derived from one table under one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompassReading {
    pub institution: String,
    pub sphere: Sphere,
    pub table: IndicatorTable,
    pub sectors: BTreeMap<Quality, SectorArrow>,
    /// Sector-arrow heads in the order Harmony, Passion, Suppression.
    pub triangle: [Vector2; 3],
    pub raw_final: Vector2,
    #[serde(rename = "final")]
    pub final_arrow: Vector2,
    pub classification: Classification,
    pub config: CompassConfig,
}

impl CompassReading {
    pub fn sector(&self, q: Quality) -> &SectorArrow {
        &self.sectors[&q]
    }
}

/// `log2(1 + raw) / n`: short arrows are emphasized, long ones flattened,
/// and a full-length arrow alone in its sector keeps length 1.
pub fn corrected_length(raw: f64, n: usize) -> Result<f64, AggregationError> {
    if n < 1 {
        return Err(AggregationError::NonpositiveCount(n));
    }
    Ok(shifted_log(raw, n))
}

fn shifted_log(raw: f64, n: usize) -> f64 {
    (1.0 + raw).log2() / n as f64
}

/// Head-to-tail sum of the corrected indicator arrows in sector `q`.
///
/// Terms are summed in id order so the result does not depend on row order.
pub fn sector_arrow(table: &IndicatorTable, q: Quality, cfg: &CompassConfig) -> SectorArrow {
    let members: Vec<&Indicator> = table.in_sector(q).collect();
    SectorArrow {
        quality: q,
        vector: head_to_tail(&members, &cfg.layout),
        indicator_count: members.len(),
    }
}

/// Sum of corrected arrows for `members`, all assumed to share one sector.
/// Sorting is stable, so repeated ids keep their given order.
pub fn head_to_tail(members: &[&Indicator], layout: &SectorLayout) -> Vector2 {
    let mut sorted = members.to_vec();
    sorted.sort_by(|a, b| a.id().cmp(b.id()));
    let n = sorted.len();
    sorted
        .iter()
        .map(|ind| Vector2::from_polar(shifted_log(ind.raw_length(), n), ind.absolute_angle(layout)))
        .sum()
}

pub fn triangle_center(
    v1: Vector2,
    v2: Vector2,
    v3: Vector2,
    method: CenterMethod,
) -> Result<Vector2, AggregationError> {
    match method {
        CenterMethod::Centroid => Ok((v1 + v2 + v3) / 3.0),
        CenterMethod::Orthocenter => orthocenter(v1, v2, v3),
    }
}

// Intersection of the altitudes from v1 and v2:
//   (h - v1) . (v3 - v2) = 0
//   (h - v2) . (v3 - v1) = 0
fn orthocenter(a: Vector2, b: Vector2, c: Vector2) -> Result<Vector2, AggregationError> {
    let twice_area = (b - a).cross(c - a);
    if twice_area.abs() <= 1e-12 {
        return Err(AggregationError::DegenerateTriangle);
    }
    let u = c - b;
    let w = c - a;
    let r1 = u.dot(a);
    let r2 = w.dot(b);
    let det = u.x * w.y - u.y * w.x;
    Ok(Vector2::new((r1 * w.y - u.y * r2) / det, (u.x * r2 - w.x * r1) / det))
}

/// Bounded remap of a magnitude in `[0, 1]` with fixed points 0, 0.5 and 1.
///
/// Below one half the arrow is lengthened (`0.5 * (2m)^alpha`), above it is
/// shortened toward the rim (`1 - 0.5 * (2 - 2m)^beta`).
pub fn perspicuity_correct(m: f64, alpha: f64, beta: f64) -> f64 {
    let m = m.clamp(0.0, 1.0);
    if m <= 0.5 {
        0.5 * (2.0 * m).powf(alpha)
    } else {
        1.0 - 0.5 * (2.0 - 2.0 * m).powf(beta)
    }
}

pub fn classify(v: Vector2, layout: &SectorLayout, balance_epsilon: f64) -> Classification {
    if v.magnitude() < balance_epsilon {
        return Classification::Balanced;
    }
    match v.angle_degrees() {
        Some(angle) => layout.quality_at(angle).into(),
        None => Classification::Balanced,
    }
}

pub fn compass_reading(
    table: &IndicatorTable,
    cfg: &CompassConfig,
) -> Result<CompassReading, AggregationError> {
    cfg.validate()?;
    let sectors: BTreeMap<Quality, SectorArrow> = Quality::ALL
        .iter()
        .map(|&q| (q, sector_arrow(table, q, cfg)))
        .collect();
    let triangle = Quality::ALL.map(|q| sectors[&q].vector);
    let raw_final = triangle_center(triangle[0], triangle[1], triangle[2], cfg.center_method)?;
    let final_arrow = cfg.perspicuity.apply_to(raw_final);
    let classification = if raw_final.magnitude() < cfg.balance_epsilon {
        Classification::Balanced
    } else {
        classify(final_arrow, &cfg.layout, 0.0)
    };
    Ok(CompassReading {
        institution: table.institution().to_string(),
        sphere: table.sphere(),
        table: table.clone(),
        sectors,
        triangle,
        raw_final,
        final_arrow,
        classification,
        config: *cfg,
    })
}
