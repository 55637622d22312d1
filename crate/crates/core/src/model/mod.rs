//! Domain types shared by every stage of the pipeline.

mod indicator;
mod layout;
mod quality;
mod table;

pub use indicator::{Indicator, IndicatorDraft, IndicatorId, ValidationError, ValidationErrors, SECTOR_SPAN};
pub use layout::{LayoutError, SectorLayout};
pub use quality::{ParseEnumError, Quality, Sphere};
pub use table::{IndicatorTable, TableError};
