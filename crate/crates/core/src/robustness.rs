//! Robustness diagnostics.
//!
//! * Convergence: as statistics are added to a sector, its arrow should
//!   settle. [`convergence_report`] replays a stream of indicators and finds
//!   where each sector's arrow stops moving by more than `epsilon` over a
//!   trailing window.
//! * Influence: [`influence_report`] drops each indicator in turn and measures
//!   how far the final arrow moves. Large moves mark outlier arrows.
//! * Representation changes: [`gerrymander_diff`] and [`ecological_diff`]
//!   report what differs between two readings of the same institution, so
//!   changes to parameters rather than statistics are visible.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{
    compass_reading, head_to_tail, AggregationError, Classification, CompassConfig, CompassReading,
};
use crate::ecological::EcologicalCompass;
use crate::geometry::{angle_between, Vector2};
use crate::model::{Indicator, IndicatorId, IndicatorTable, Quality, Sphere};

pub const DEFAULT_EPSILON: f64 = 0.02;
pub const DEFAULT_WINDOW: usize = 20;
pub const DEFAULT_OUTLIER_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RobustnessError {
    #[error("window must be at least 2, got {0}")]
    WindowTooSmall(usize),
    #[error("epsilon must be positive, got {0}")]
    NonpositiveEpsilon(f64),
    #[error("influence needs a non-empty table")]
    EmptyTable,
    #[error("readings describe different institutions (`{0}` vs `{1}`)")]
    IncomparableReadings(String, String),
    #[error(transparent)]
    Aggregation(#[from] AggregationError),
}

/// Thresholds for the robustness checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobustnessSettings {
    pub epsilon: f64,
    pub window: usize,
    pub outlier_threshold: f64,
}

impl Default for RobustnessSettings {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            window: DEFAULT_WINDOW,
            outlier_threshold: DEFAULT_OUTLIER_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub indicator_count: usize,
    pub vector: Vector2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    Stable,
    Unstable,
    /// Fewer trace points than the window.
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorConvergence {
    pub trace: Vec<TracePoint>,
    pub stability: Stability,
    /// Sector indicator count at which the trailing window first fit
    /// within epsilon.
    pub first_stable_index: Option<usize>,
    /// Largest pairwise distance in the final window.
    pub final_spread: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub epsilon: f64,
    pub window: usize,
    pub sectors: BTreeMap<Quality, SectorConvergence>,
}

impl ConvergenceReport {
    pub fn stability(&self, q: Quality) -> Stability {
        self.sectors[&q].stability
    }

    /// True when no sector with a determinable trace is unstable.
    pub fn all_determined_stable(&self) -> bool {
        self.sectors.values().all(|s| s.stability != Stability::Unstable)
    }
}

fn max_pairwise_distance(points: &[TracePoint]) -> f64 {
    let mut worst = 0.0_f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            worst = worst.max(a.vector.distance(b.vector));
        }
    }
    worst
}

/// Recomputes each sector arrow as the stream grows, one trace point per
/// indicator of that sector.
pub fn convergence_report(
    stream: &[Indicator],
    cfg: &CompassConfig,
    epsilon: f64,
    window: usize,
) -> Result<ConvergenceReport, RobustnessError> {
    if window < 2 {
        return Err(RobustnessError::WindowTooSmall(window));
    }
    if !(epsilon > 0.0) {
        return Err(RobustnessError::NonpositiveEpsilon(epsilon));
    }
    let mut members: BTreeMap<Quality, Vec<&Indicator>> = BTreeMap::new();
    let mut traces: BTreeMap<Quality, Vec<TracePoint>> =
        Quality::ALL.iter().map(|&q| (q, Vec::new())).collect();
    for ind in stream {
        let list = members.entry(ind.quality()).or_default();
        list.push(ind);
        traces.get_mut(&ind.quality()).expect("all qualities").push(TracePoint {
            indicator_count: list.len(),
            vector: head_to_tail(list, &cfg.layout),
        });
    }

    let sectors = traces
        .into_iter()
        .map(|(q, trace)| {
            if trace.len() < window {
                let sc = SectorConvergence {
                    trace,
                    stability: Stability::Undetermined,
                    first_stable_index: None,
                    final_spread: None,
                };
                return (q, sc);
            }
            let spreads: Vec<f64> = trace.windows(window).map(max_pairwise_distance).collect();
            let first_stable_index = spreads
                .iter()
                .position(|&s| s < epsilon)
                .map(|i| trace[i + window - 1].indicator_count);
            let last = *spreads.last().expect("at least one window");
            let sc = SectorConvergence {
                trace,
                stability: if last < epsilon { Stability::Stable } else { Stability::Unstable },
                first_stable_index,
                final_spread: Some(last),
            };
            (q, sc)
        })
        .collect();
    Ok(ConvergenceReport { epsilon, window, sectors })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceEntry {
    pub id: IndicatorId,
    pub quality: Quality,
    /// Final arrow of the table without this indicator.
    pub final_without: Vector2,
    /// `final_without - final`.
    pub displacement: Vector2,
    pub displacement_magnitude: f64,
    /// Signed change of direction in degrees; absent when either arrow is zero.
    pub angle_delta_degrees: Option<f64>,
    pub magnitude_delta: f64,
    pub outlier: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfluenceReport {
    pub outlier_threshold: f64,
    pub baseline_final: Vector2,
    pub entries: Vec<InfluenceEntry>,
}

impl InfluenceReport {
    pub fn outliers(&self) -> impl Iterator<Item = &InfluenceEntry> {
        self.entries.iter().filter(|e| e.outlier)
    }

    pub fn entry(&self, id: &IndicatorId) -> Option<&InfluenceEntry> {
        self.entries.iter().find(|e| &e.id == id)
    }
}

pub fn direction_change(from: Vector2, to: Vector2) -> Option<f64> {
    Some(angle_between(from.angle_degrees()?, to.angle_degrees()?))
}

/// Leave-one-out influence of every indicator on the final arrow.
pub fn influence_report(
    table: &IndicatorTable,
    cfg: &CompassConfig,
    outlier_threshold: f64,
) -> Result<InfluenceReport, RobustnessError> {
    if table.is_empty() {
        return Err(RobustnessError::EmptyTable);
    }
    let baseline = compass_reading(table, cfg)?.final_arrow;
    let entries = table
        .indicators()
        .iter()
        .map(|ind| {
            let without = compass_reading(&table.without(ind.id()), cfg)?.final_arrow;
            let displacement = without - baseline;
            let displacement_magnitude = displacement.magnitude();
            Ok(InfluenceEntry {
                id: ind.id().clone(),
                quality: ind.quality(),
                final_without: without,
                displacement,
                displacement_magnitude,
                angle_delta_degrees: direction_change(baseline, without),
                magnitude_delta: without.magnitude() - baseline.magnitude(),
                outlier: displacement_magnitude > outlier_threshold,
            })
        })
        .collect::<Result<Vec<_>, RobustnessError>>()?;
    Ok(InfluenceReport { outlier_threshold, baseline_final: baseline, entries })
}

/// Whether a compass can be reported plainly or only with hesitancy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "grade", rename_all = "snake_case")]
pub enum RobustnessGrade {
    Robust,
    Hesitant { reasons: Vec<String> },
}

impl RobustnessGrade {
    pub fn is_robust(&self) -> bool {
        matches!(self, RobustnessGrade::Robust)
    }
}

pub fn grade(influence: Option<&InfluenceReport>, convergence: Option<&ConvergenceReport>) -> RobustnessGrade {
    let mut reasons = Vec::new();
    if let Some(inf) = influence {
        for e in inf.outliers() {
            reasons.push(format!(
                "removing `{}` moves the final arrow by {:.3}",
                e.id, e.displacement_magnitude
            ));
        }
    }
    if let Some(conv) = convergence {
        for (q, s) in &conv.sectors {
            match s.stability {
                Stability::Stable => {}
                Stability::Unstable => reasons.push(format!("{q} sector arrow has not stabilised")),
                Stability::Undetermined => reasons.push(format!(
                    "{q} sector has {} indicators, fewer than the window of {}",
                    s.trace.len(),
                    conv.window
                )),
            }
        }
    }
    if reasons.is_empty() {
        RobustnessGrade::Robust
    } else {
        RobustnessGrade::Hesitant { reasons }
    }
}

/// Grade for a table using both checks, with the table rows as the stream.
pub fn assess_table(
    table: &IndicatorTable,
    cfg: &CompassConfig,
    settings: &RobustnessSettings,
) -> Result<RobustnessGrade, RobustnessError> {
    let conv = convergence_report(table.indicators(), cfg, settings.epsilon, settings.window)?;
    if table.is_empty() {
        return Ok(grade(None, Some(&conv)));
    }
    let inf = influence_report(table, cfg, settings.outlier_threshold)?;
    Ok(grade(Some(&inf), Some(&conv)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldChange {
    pub field: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IndicatorEdits {
    pub added: Vec<IndicatorId>,
    pub removed: Vec<IndicatorId>,
    pub modified: Vec<IndicatorId>,
}

impl IndicatorEdits {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.modified.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadingDiff {
    pub classification_flip: Option<(Classification, Classification)>,
    pub angle_delta_degrees: Option<f64>,
    pub magnitude_delta: f64,
    pub config_changes: Vec<FieldChange>,
    pub indicator_edits: IndicatorEdits,
    pub sphere_change: Option<(Sphere, Sphere)>,
}

impl ReadingDiff {
    pub fn is_empty(&self) -> bool {
        self.classification_flip.is_none()
            && self.angle_delta_degrees.unwrap_or(0.0) == 0.0
            && self.magnitude_delta == 0.0
            && self.config_changes.is_empty()
            && self.indicator_edits.is_empty()
            && self.sphere_change.is_none()
    }
}

fn config_changes(a: &CompassConfig, b: &CompassConfig) -> Vec<FieldChange> {
    let fields: [(&str, String, String); 7] = [
        ("layout", a.layout.order_string(), b.layout.order_string()),
        ("layout_origin", a.layout.origin().to_string(), b.layout.origin().to_string()),
        (
            "center_method",
            format!("{:?}", a.center_method).to_lowercase(),
            format!("{:?}", b.center_method).to_lowercase(),
        ),
        ("perspicuity", a.perspicuity.enabled.to_string(), b.perspicuity.enabled.to_string()),
        ("perspicuity_alpha", a.perspicuity.alpha.to_string(), b.perspicuity.alpha.to_string()),
        ("perspicuity_beta", a.perspicuity.beta.to_string(), b.perspicuity.beta.to_string()),
        ("balance_epsilon", a.balance_epsilon.to_string(), b.balance_epsilon.to_string()),
    ];
    fields
        .into_iter()
        .filter(|(_, x, y)| x != y)
        .map(|(field, before, after)| FieldChange { field: field.into(), before, after })
        .collect()
}

fn indicator_edits(a: &IndicatorTable, b: &IndicatorTable) -> IndicatorEdits {
    let ids_a: BTreeSet<&IndicatorId> = a.indicators().iter().map(|i| i.id()).collect();
    let ids_b: BTreeSet<&IndicatorId> = b.indicators().iter().map(|i| i.id()).collect();
    IndicatorEdits {
        added: ids_b.difference(&ids_a).map(|&id| id.clone()).collect(),
        removed: ids_a.difference(&ids_b).map(|&id| id.clone()).collect(),
        modified: ids_a
            .intersection(&ids_b)
            .filter(|&&id| a.get(id) != b.get(id))
            .map(|&id| id.clone())
            .collect(),
    }
}

fn flip(a: Classification, b: Classification) -> Option<(Classification, Classification)> {
    (a != b).then_some((a, b))
}

/// Differences between two readings of one institution.
pub fn gerrymander_diff(a: &CompassReading, b: &CompassReading) -> Result<ReadingDiff, RobustnessError> {
    if a.institution != b.institution {
        return Err(RobustnessError::IncomparableReadings(
            a.institution.clone(),
            b.institution.clone(),
        ));
    }
    Ok(ReadingDiff {
        classification_flip: flip(a.classification, b.classification),
        angle_delta_degrees: direction_change(a.final_arrow, b.final_arrow),
        magnitude_delta: b.final_arrow.magnitude() - a.final_arrow.magnitude(),
        config_changes: config_changes(&a.config, &b.config),
        indicator_edits: indicator_edits(&a.table, &b.table),
        sphere_change: (a.sphere != b.sphere).then_some((a.sphere, b.sphere)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcologicalDiff {
    pub classification_flip: Option<(Classification, Classification)>,
    pub sustainable_flip: Option<(bool, bool)>,
    pub angle_delta_degrees: Option<f64>,
    pub magnitude_delta: f64,
    pub weight_changes: Vec<FieldChange>,
    pub spheres: BTreeMap<Sphere, ReadingDiff>,
}

impl EcologicalDiff {
    pub fn is_empty(&self) -> bool {
        self.classification_flip.is_none()
            && self.sustainable_flip.is_none()
            && self.angle_delta_degrees.unwrap_or(0.0) == 0.0
            && self.magnitude_delta == 0.0
            && self.weight_changes.is_empty()
            && self.spheres.values().all(ReadingDiff::is_empty)
    }
}

pub fn ecological_diff(a: &EcologicalCompass, b: &EcologicalCompass) -> Result<EcologicalDiff, RobustnessError> {
    let mut spheres = BTreeMap::new();
    for s in Sphere::NESTED {
        spheres.insert(s, gerrymander_diff(a.reading(s), b.reading(s))?);
    }
    let weight_changes = [
        ("weight_eco", a.weights.eco, b.weights.eco),
        ("weight_socio", a.weights.socio, b.weights.socio),
        ("weight_econo", a.weights.econo, b.weights.econo),
    ]
    .into_iter()
    .filter(|(_, x, y)| x != y)
    .map(|(field, x, y)| FieldChange { field: field.into(), before: x.to_string(), after: y.to_string() })
    .collect();
    Ok(EcologicalDiff {
        classification_flip: flip(a.classification, b.classification),
        sustainable_flip: (a.sustainable != b.sustainable).then_some((a.sustainable, b.sustainable)),
        angle_delta_degrees: direction_change(a.composed_final, b.composed_final),
        magnitude_delta: b.composed_final.magnitude() - a.composed_final.magnitude(),
        weight_changes,
        spheres,
    })
}
