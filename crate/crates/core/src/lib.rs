//! Policy compass: place statistics on a circle divided into three qualities,
//! aggregate them into sector arrows and a final arrow, compose the eco-, socio-
//! and econo-sphere compasses, and check how robust the result is.
//!
//! The pipeline for one table of indicators:
//!
//! ```
//! use policy_compass::{compass_reading, CompassConfig, IndicatorDraft, IndicatorTable, Quality, Sphere};
//!
//! let table = IndicatorTable::new(
//!     Sphere::Unspecified,
//!     "Village school",
//!     vec![
//!         IndicatorDraft::new("wages", "Stability in wages", Quality::Harmony, 100.0, 0.5).validate()?,
//!         IndicatorDraft::new("health", "Good health of staff", Quality::Harmony, 30.0, 0.8).validate()?,
//!     ],
//! )?;
//! let reading = compass_reading(&table, &CompassConfig::default())?;
//! assert_eq!(reading.classification.quality(), Some(Quality::Harmony));
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod aggregation;
pub mod ecological;
pub mod elicitation;
pub mod geometry;
pub mod io;
pub mod model;
pub mod render;
pub mod robustness;

pub use aggregation::{
    classify, compass_reading, corrected_length, perspicuity_correct, sector_arrow,
    triangle_center, AggregationError, CenterMethod, Classification, CompassConfig,
    CompassReading, Perspicuity, SectorArrow,
};
pub use ecological::{compose_spheres, is_sustainable, EcologicalCompass, EcologicalError, SphereWeights};
pub use geometry::Vector2;
pub use model::{
    IndicatorDraft, Indicator, IndicatorId, IndicatorTable, LayoutError, Quality, SectorLayout,
    Sphere, TableError, ValidationError, ValidationErrors,
};
