//! Eco-, socio- and econo-sphere compasses and their weighted composition.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{classify, Classification, CompassConfig, CompassReading};
use crate::geometry::Vector2;
use crate::model::Sphere;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EcologicalError {
    #[error("sphere readings were computed under different layouts")]
    LayoutMismatch,
    #[error("reading for the {expected} sphere is labelled {found}")]
    SphereMismatch { expected: Sphere, found: Sphere },
    #[error("sphere weights must be positive and finite")]
    NonpositiveWeight,
}

/// Relative radii of the nested spheres. The econo-sphere is half the
/// eco-sphere and the socio-sphere sits halfway between.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereWeights {
    pub eco: f64,
    pub socio: f64,
    pub econo: f64,
}

impl Default for SphereWeights {
    fn default() -> Self {
        Self { eco: 1.0, socio: 0.75, econo: 0.5 }
    }
}

impl SphereWeights {
    pub fn get(&self, sphere: Sphere) -> f64 {
        match sphere {
            Sphere::Eco => self.eco,
            Sphere::Socio => self.socio,
            Sphere::Econo => self.econo,
            Sphere::Unspecified => 0.0,
        }
    }

    pub fn sum(&self) -> f64 {
        self.eco + self.socio + self.econo
    }

    pub fn largest(&self) -> f64 {
        self.eco.max(self.socio).max(self.econo)
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { eco: self.eco * k, socio: self.socio * k, econo: self.econo * k }
    }

    pub fn check_positive(&self) -> Result<(), EcologicalError> {
        let ok = |w: f64| w.is_finite() && w > 0.0;
        if ok(self.eco) && ok(self.socio) && ok(self.econo) {
            Ok(())
        } else {
            Err(EcologicalError::NonpositiveWeight)
        }
    }

    /// `false` when the nesting order eco >= socio >= econo has been
    /// deliberately changed. This is a warning, not an error.
    pub fn is_nested_order(&self) -> bool {
        self.eco >= self.socio && self.socio >= self.econo
    }
}

/// Which arrow of each sphere reading feeds the composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SphereArrowSource {
    /// Each sphere's perspicuity-corrected final arrow.
    #[default]
    Final,
    /// Each sphere's raw triangle-center arrow, so the composed arrow is
    /// corrected exactly once.
    RawFinal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EcologicalCompass {
    pub readings: BTreeMap<Sphere, CompassReading>,
    pub weights: SphereWeights,
    pub source: SphereArrowSource,
    /// Tail-to-head sum of the weighted sphere arrows before normalization.
    /// Diagnostic only; it can leave the unit circle.
    pub unnormalized_sum: Vector2,
    pub composed_raw: Vector2,
    pub composed_final: Vector2,
    pub classification: Classification,
    pub sustainable: bool,
}

impl EcologicalCompass {
    pub fn reading(&self, sphere: Sphere) -> &CompassReading {
        &self.readings[&sphere]
    }

    pub fn layout(&self) -> crate::model::SectorLayout {
        self.readings[&Sphere::Eco].config.layout
    }
}

/// Weighted mean of the three sphere arrows, divided by the weight sum.
pub fn weighted_composition(arrows: [Vector2; 3], weights: &SphereWeights) -> Vector2 {
    let sum = arrows[0] * weights.eco + arrows[1] * weights.socio + arrows[2] * weights.econo;
    sum / weights.sum()
}

/// Composes per-sphere readings given in the order eco, socio, econo.
///
/// Readings labelled `Unspecified` are accepted in their slot; a reading
/// labelled with a different sphere is rejected.
pub fn compose_spheres(
    readings: [CompassReading; 3],
    weights: SphereWeights,
    source: SphereArrowSource,
    cfg: &CompassConfig,
) -> Result<EcologicalCompass, EcologicalError> {
    weights.check_positive()?;
    for r in &readings {
        if r.config.layout != cfg.layout {
            return Err(EcologicalError::LayoutMismatch);
        }
    }
    for (r, expected) in readings.iter().zip(Sphere::NESTED) {
        if r.sphere != expected && r.sphere != Sphere::Unspecified {
            return Err(EcologicalError::SphereMismatch { expected, found: r.sphere });
        }
    }
    let arrows = readings.each_ref().map(|r| match source {
        SphereArrowSource::Final => r.final_arrow,
        SphereArrowSource::RawFinal => r.raw_final,
    });
    let unnormalized_sum =
        arrows[0] * weights.eco + arrows[1] * weights.socio + arrows[2] * weights.econo;
    let composed_raw = weighted_composition(arrows, &weights);
    let composed_final = cfg.perspicuity.apply_to(composed_raw);
    let classification = if composed_raw.magnitude() < cfg.balance_epsilon {
        Classification::Balanced
    } else {
        classify(composed_final, &cfg.layout, 0.0)
    };
    let readings = Sphere::NESTED.into_iter().zip(readings).collect();
    Ok(EcologicalCompass {
        readings,
        weights,
        source,
        unnormalized_sum,
        composed_raw,
        composed_final,
        classification,
        sustainable: classification == Classification::Harmony,
    })
}

/// Sustainable exactly when the composed final arrow lies in the Harmony
/// third. A Balanced arrow lies in no third and is not sustainable.
pub fn is_sustainable(ec: &EcologicalCompass) -> bool {
    ec.classification == Classification::Harmony
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::compass_reading;
    use crate::geometry::angle_between;
    use crate::model::{IndicatorDraft, IndicatorTable, Quality};

    fn reading_for(sphere: Sphere, rows: &[(Quality, f64, f64)]) -> CompassReading {
        let inds = rows
            .iter()
            .enumerate()
            .map(|(i, &(q, off, len))| {
                IndicatorDraft::new(format!("i{i}"), format!("i{i}"), q, off, len).validate().unwrap()
            })
            .collect();
        let t = IndicatorTable::new(sphere, "inst", inds).unwrap();
        compass_reading(&t, &CompassConfig::default()).unwrap()
    }

    #[test]
    fn default_weights_follow_the_nesting() {
        let w = SphereWeights::default();
        assert_eq!((w.eco, w.socio, w.econo), (1.0, 0.75, 0.5));
        assert_eq!(w.socio, (w.eco + w.econo) / 2.0);
        assert!(w.is_nested_order());
        assert!(!SphereWeights { eco: 0.5, socio: 1.0, econo: 0.5 }.is_nested_order());
    }

    #[test]
    fn identical_arrows_compose_to_themselves() {
        let f = Vector2::from_polar(0.4, 90.0);
        let c = weighted_composition([f, f, f], &SphereWeights::default());
        assert!(c.distance(f) < 1e-15);
    }

    #[test]
    fn lone_eco_arrow_is_scaled_by_its_weight_share() {
        let eco = Vector2::from_polar(0.45, 66.0);
        let c = weighted_composition([eco, Vector2::ZERO, Vector2::ZERO], &SphereWeights::default());
        assert!((c.magnitude() - 0.2).abs() < 1e-12);
        assert!((c.angle_degrees().unwrap() - 66.0).abs() < 1e-9);
    }

    #[test]
    fn weights_pull_toward_the_eco_arrow() {
        let f = [
            Vector2::from_polar(0.4, 66.0),
            Vector2::from_polar(0.4, 200.0),
            Vector2::from_polar(0.4, 300.0),
        ];
        let weighted = weighted_composition(f, &SphereWeights::default()).angle_degrees().unwrap();
        let plain = weighted_composition(f, &SphereWeights { eco: 1.0, socio: 1.0, econo: 1.0 })
            .angle_degrees()
            .unwrap();
        assert!(angle_between(66.0, weighted).abs() < angle_between(66.0, plain).abs());
    }

    #[test]
    fn harmony_eco_table_with_empty_others_is_sustainable() {
        let eco = reading_for(Sphere::Eco, &[(Quality::Harmony, 60.0, 0.8)]);
        let socio = reading_for(Sphere::Socio, &[]);
        let econo = reading_for(Sphere::Econo, &[]);
        let ec = compose_spheres(
            [eco, socio, econo],
            SphereWeights::default(),
            SphereArrowSource::Final,
            &CompassConfig::default(),
        )
        .unwrap();
        assert!(ec.sustainable);
        assert!(is_sustainable(&ec));
        assert!(ec.composed_final.magnitude() <= 1.0);
    }

    #[test]
    fn all_empty_is_balanced_and_not_sustainable() {
        let rs = Sphere::NESTED.map(|s| reading_for(s, &[]));
        let ec = compose_spheres(rs, SphereWeights::default(), SphereArrowSource::Final, &CompassConfig::default())
            .unwrap();
        assert_eq!(ec.classification, Classification::Balanced);
        assert!(!is_sustainable(&ec));
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let mut rs = Sphere::NESTED.map(|s| reading_for(s, &[(Quality::Harmony, 60.0, 0.8)]));
        rs[1].config.layout = rs[1].config.layout.rotated(10.0);
        let err = compose_spheres(rs, SphereWeights::default(), SphereArrowSource::Final, &CompassConfig::default());
        assert_eq!(err.unwrap_err(), EcologicalError::LayoutMismatch);
    }

    #[test]
    fn misplaced_sphere_is_rejected() {
        let rs = [
            reading_for(Sphere::Socio, &[]),
            reading_for(Sphere::Socio, &[]),
            reading_for(Sphere::Econo, &[]),
        ];
        let err = compose_spheres(rs, SphereWeights::default(), SphereArrowSource::Final, &CompassConfig::default());
        assert!(matches!(err, Err(EcologicalError::SphereMismatch { .. })));
    }
}
