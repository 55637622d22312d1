//! CSV and JSON indicator tables.
//!
//! CSV documents start with optional `#`-prefixed directive lines
//! (`# key=value`), then a header row, then one row per indicator. Columns
//! are matched by header name; `quality`, `name`, `angle` and `length` are
//! required, `id`, `sphere`, `notes`, `boundary_ok` and `timestamp` are
//! optional. The `angle_mode` directive says whether `angle` is an absolute
//! direction on the circle or an offset within the row's sector. Rows
//! without an id get `r<row>`, or `<sphere>-r<row>` once the table names a
//! sphere.
//!
//! The JSON form carries the same field names:
//!
//! ```json
//! { "angle_mode": "offset", "institution": "…", "sphere": "eco",
//!   "indicators": [ { "id": "…", "quality": "harmony", "name": "…",
//!                     "angle": 40, "length": 0.5, "notes": "" } ] }
//! ```

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    IndicatorDraft, IndicatorId, IndicatorTable, Quality, SectorLayout, Sphere, ValidationErrors,
    SECTOR_SPAN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

impl TableFormat {
    /// `.json` files are JSON; anything else is CSV.
    pub fn from_path(path: &std::path::Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => TableFormat::Json,
            _ => TableFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AngleMode {
    Absolute,
    #[default]
    Offset,
}

impl AngleMode {
    fn as_str(self) -> &'static str {
        match self {
            AngleMode::Absolute => "absolute",
            AngleMode::Offset => "offset",
        }
    }
}

/// Where in a document a problem was found: a 1-based line for CSV, a
/// 0-based indicator index for JSON.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Location {
    Document,
    Line(u64),
    Indicator(usize),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Indicator(i) => write!(f, "indicator #{i}"),
            Location::Document => f.write_str("document"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParseError {
    #[error("{at}, column `{column}`: {message}")]
    MalformedRow { at: Location, column: String, message: String },
    #[error("{at}: unknown quality `{value}`")]
    UnknownQuality { at: Location, value: String },
    #[error("{at}: angle {angle} is outside the {quality} sector under layout {layout}")]
    QualityAngleMismatch { at: Location, quality: Quality, angle: f64, layout: String },
    #[error("{at}: {errors}")]
    InvalidIndicator { at: Location, errors: ValidationErrors },
    #[error("{at}: indicator id `{id}` repeats an earlier row")]
    DuplicateId { at: Location, id: IndicatorId },
    #[error("{at}: {message}")]
    MalformedDirective { at: Location, message: String },
    #[error("header is missing required column `{column}`")]
    MissingColumn { column: String },
    #[error("{message}")]
    Malformed { message: String },
}

impl ParseError {
    pub fn location(&self) -> Location {
        match self {
            ParseError::MalformedRow { at, .. }
            | ParseError::UnknownQuality { at, .. }
            | ParseError::QualityAngleMismatch { at, .. }
            | ParseError::InvalidIndicator { at, .. }
            | ParseError::DuplicateId { at, .. }
            | ParseError::MalformedDirective { at, .. } => *at,
            ParseError::MissingColumn { .. } | ParseError::Malformed { .. } => Location::Document,
        }
    }
}

/// Every problem found in a document, in document order.
#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParseErrors(pub Vec<ParseError>);

impl fmt::Display for ParseErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutSpec {
    pub order: [Quality; 3],
    #[serde(default)]
    pub origin: f64,
}

/// Row as it appears in a JSON document, before validation.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RowDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sphere: Option<String>,
    pub quality: String,
    pub name: String,
    pub angle: f64,
    pub length: f64,
    #[serde(default)]
    pub notes: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub boundary_ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDocument {
    #[serde(default)]
    pub angle_mode: AngleMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layout: Option<LayoutSpec>,
    #[serde(default)]
    pub institution: String,
    #[serde(default)]
    pub sphere: Sphere,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot_time: Option<DateTime<Utc>>,
    #[serde(default)]
    pub indicators: Vec<RowDocument>,
}

struct Row {
    at: Location,
    id: Option<String>,
    sphere: Option<String>,
    quality: String,
    name: String,
    angle: f64,
    length: f64,
    notes: String,
    boundary_ok: bool,
    timestamp: Option<DateTime<Utc>>,
}

struct Header {
    angle_mode: AngleMode,
    layout: SectorLayout,
    institution: String,
    sphere: Option<Sphere>,
    snapshot_time: Option<DateTime<Utc>>,
}

/// Parses a table. `layout` is used for absolute angles unless the
/// document declares its own.
pub fn parse_table(bytes: &[u8], format: TableFormat, layout: &SectorLayout) -> Result<IndicatorTable, ParseErrors> {
    match format {
        TableFormat::Csv => parse_csv(bytes, layout),
        TableFormat::Json => parse_json(bytes, layout),
    }
}

fn parse_json(bytes: &[u8], layout: &SectorLayout) -> Result<IndicatorTable, ParseErrors> {
    let doc: TableDocument = serde_json::from_slice(bytes)
        .map_err(|e| ParseErrors(vec![ParseError::Malformed { message: e.to_string() }]))?;
    let layout = match &doc.layout {
        Some(spec) => SectorLayout::new(spec.order, spec.origin).map_err(|e| {
            ParseErrors(vec![ParseError::MalformedDirective { at: Location::Document, message: e.to_string() }])
        })?,
        None => *layout,
    };
    let header = Header {
        angle_mode: doc.angle_mode,
        layout,
        institution: doc.institution,
        sphere: Some(doc.sphere),
        snapshot_time: doc.snapshot_time,
    };
    let rows = doc
        .indicators
        .into_iter()
        .enumerate()
        .map(|(i, r)| Row {
            at: Location::Indicator(i),
            id: r.id,
            sphere: r.sphere,
            quality: r.quality,
            name: r.name,
            angle: r.angle,
            length: r.length,
            notes: r.notes,
            boundary_ok: r.boundary_ok,
            timestamp: r.timestamp,
        })
        .collect();
    build_table(header, rows, Vec::new())
}

fn parse_csv(bytes: &[u8], default_layout: &SectorLayout) -> Result<IndicatorTable, ParseErrors> {
    let text = std::str::from_utf8(bytes)
        .map_err(|e| ParseErrors(vec![ParseError::Malformed { message: format!("not UTF-8: {e}") }]))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut errors = Vec::new();

    let mut angle_mode = AngleMode::Offset;
    let mut order = None;
    let mut origin = None;
    let mut institution = String::new();
    let mut sphere = None;
    let mut snapshot_time = None;

    // Directive lines and blank lines before the header.
    let mut consumed = 0usize;
    let mut skipped_lines = 0u64;
    for line in text.split_inclusive('\n') {
        let trimmed = line.trim_end_matches(['\n', '\r']);
        let line_no = skipped_lines + 1;
        if trimmed.trim().is_empty() {
            consumed += line.len();
            skipped_lines += 1;
            continue;
        }
        let Some(rest) = trimmed.strip_prefix('#') else { break };
        consumed += line.len();
        skipped_lines += 1;
        let rest = rest.strip_prefix(' ').unwrap_or(rest);
        let at = Location::Line(line_no);
        let Some((key, value)) = rest.split_once('=') else {
            errors.push(ParseError::MalformedDirective { at, message: format!("expected `key=value`, got `{rest}`") });
            continue;
        };
        match key.trim() {
            "angle_mode" => match value.trim() {
                "absolute" => angle_mode = AngleMode::Absolute,
                "offset" => angle_mode = AngleMode::Offset,
                other => errors.push(ParseError::MalformedDirective {
                    at,
                    message: format!("angle_mode must be `absolute` or `offset`, got `{other}`"),
                }),
            },
            "layout" => match SectorLayout::parse_order(value) {
                Ok(o) => order = Some(o),
                Err(message) => errors.push(ParseError::MalformedDirective { at, message }),
            },
            "layout_origin" => match value.trim().parse::<f64>() {
                Ok(v) => origin = Some(v),
                Err(e) => errors.push(ParseError::MalformedDirective { at, message: format!("layout_origin: {e}") }),
            },
            "institution" => institution = value.to_string(),
            "sphere" => match value.parse::<Sphere>() {
                Ok(s) => sphere = Some(s),
                Err(e) => errors.push(ParseError::MalformedDirective { at, message: e.to_string() }),
            },
            "snapshot_time" => match DateTime::parse_from_rfc3339(value.trim()) {
                Ok(t) => snapshot_time = Some(t.with_timezone(&Utc)),
                Err(e) => errors.push(ParseError::MalformedDirective { at, message: format!("snapshot_time: {e}") }),
            },
            other => errors.push(ParseError::MalformedDirective { at, message: format!("unknown directive `{other}`") }),
        }
    }

    let layout = match (order, origin) {
        (None, None) => *default_layout,
        (o, g) => match SectorLayout::new(o.unwrap_or(default_layout.order()), g.unwrap_or(0.0)) {
            Ok(l) => l,
            Err(e) => {
                errors.push(ParseError::MalformedDirective { at: Location::Document, message: e.to_string() });
                *default_layout
            }
        },
    };

    let body = &text[consumed..];
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .trim(csv::Trim::None)
        .from_reader(body.as_bytes());
    let headers: Vec<String> = match reader.headers() {
        Ok(h) => h.iter().map(|s| s.trim().to_ascii_lowercase()).collect(),
        Err(e) => {
            errors.push(ParseError::Malformed { message: e.to_string() });
            return Err(ParseErrors(errors));
        }
    };
    let col = |name: &str| headers.iter().position(|h| h == name);
    let known = ["id", "sphere", "quality", "name", "angle", "length", "notes", "boundary_ok", "timestamp"];
    for h in &headers {
        if !known.contains(&h.as_str()) && !h.is_empty() {
            errors.push(ParseError::MalformedRow {
                at: Location::Line(skipped_lines + 1),
                column: h.clone(),
                message: "unknown column".into(),
            });
        }
    }
    let mut missing = false;
    for required in ["quality", "name", "angle", "length"] {
        if col(required).is_none() && !(headers.len() == 1 && headers[0].is_empty()) {
            errors.push(ParseError::MissingColumn { column: required.into() });
            missing = true;
        }
    }
    if missing {
        return Err(ParseErrors(errors));
    }

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() + skipped_lines).unwrap_or(0);
                errors.push(ParseError::MalformedRow {
                    at: Location::Line(line),
                    column: String::new(),
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map(|p| p.line() + skipped_lines).unwrap_or(0);
        let at = Location::Line(line);
        let field = |name: &str| col(name).and_then(|i| record.get(i)).unwrap_or("");
        let mut row_ok = true;
        let mut number = |name: &str| -> f64 {
            let raw = field(name).trim();
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                _ => {
                    errors.push(ParseError::MalformedRow {
                        at,
                        column: name.into(),
                        message: format!("expected a number, got `{raw}`"),
                    });
                    row_ok = false;
                    f64::NAN
                }
            }
        };
        let angle = number("angle");
        let length = number("length");
        let boundary_ok = match field("boundary_ok").trim().to_ascii_lowercase().as_str() {
            "" | "false" | "no" | "0" => false,
            "true" | "yes" | "1" => true,
            other => {
                errors.push(ParseError::MalformedRow {
                    at,
                    column: "boundary_ok".into(),
                    message: format!("expected true or false, got `{other}`"),
                });
                row_ok = false;
                false
            }
        };
        let timestamp = match field("timestamp").trim() {
            "" => None,
            raw => match DateTime::parse_from_rfc3339(raw) {
                Ok(t) => Some(t.with_timezone(&Utc)),
                Err(e) => {
                    errors.push(ParseError::MalformedRow {
                        at,
                        column: "timestamp".into(),
                        message: e.to_string(),
                    });
                    row_ok = false;
                    None
                }
            },
        };
        let id = match field("id") {
            "" => None,
            s => Some(s.to_string()),
        };
        let sphere_cell = match field("sphere").trim() {
            "" => None,
            s => Some(s.to_string()),
        };
        if row_ok {
            rows.push(Row {
                at,
                id,
                sphere: sphere_cell,
                quality: field("quality").to_string(),
                name: field("name").to_string(),
                angle,
                length,
                notes: field("notes").to_string(),
                boundary_ok,
                timestamp,
            });
        } else {
            // Keep checking the parts that did parse so every problem is reported.
            if field("quality").parse::<Quality>().is_err() {
                errors.push(ParseError::UnknownQuality { at, value: field("quality").to_string() });
            }
        }
    }

    let header = Header { angle_mode, layout, institution, sphere, snapshot_time };
    build_table(header, rows, errors)
}

fn build_table(header: Header, rows: Vec<Row>, mut errors: Vec<ParseError>) -> Result<IndicatorTable, ParseErrors> {
    let mut sphere = header.sphere;
    let mut drafts = Vec::with_capacity(rows.len());
    let mut seen = std::collections::BTreeSet::new();

    for (index, row) in rows.into_iter().enumerate() {
        let at = row.at;
        let quality = match row.quality.parse::<Quality>() {
            Ok(q) => q,
            Err(_) => {
                errors.push(ParseError::UnknownQuality { at, value: row.quality.clone() });
                continue;
            }
        };
        if let Some(cell) = &row.sphere {
            match cell.parse::<Sphere>() {
                Ok(s) => match sphere {
                    None => sphere = Some(s),
                    Some(expected) if expected == s => {}
                    // Rows inherit the table's sphere; an unspecified table
                    // takes the first row's sphere.
                    Some(Sphere::Unspecified) if index == 0 => sphere = Some(s),
                    Some(expected) => errors.push(ParseError::MalformedRow {
                        at,
                        column: "sphere".into(),
                        message: format!("row says {s} but the table is {expected}"),
                    }),
                },
                Err(e) => errors.push(ParseError::MalformedRow {
                    at,
                    column: "sphere".into(),
                    message: e.to_string(),
                }),
            }
        }
        let offset = match header.angle_mode {
            AngleMode::Offset => row.angle,
            AngleMode::Absolute => {
                let off = header.layout.offset_within(quality, row.angle);
                if off < SECTOR_SPAN || (off == SECTOR_SPAN && row.boundary_ok) {
                    off
                } else {
                    errors.push(ParseError::QualityAngleMismatch {
                        at,
                        quality,
                        angle: row.angle,
                        layout: header.layout.order_string(),
                    });
                    continue;
                }
            }
        };
        // Generated ids carry the sphere so a sphere triple never collides.
        let id = IndicatorId::new(row.id.unwrap_or_else(|| match sphere {
            Some(s) if s != Sphere::Unspecified => format!("{s}-r{}", index + 1),
            _ => format!("r{}", index + 1),
        }));
        if !seen.insert(id.clone()) {
            errors.push(ParseError::DuplicateId { at, id });
            continue;
        }
        let draft = IndicatorDraft {
            id,
            name: row.name,
            quality,
            offset,
            raw_length: row.length,
            notes: row.notes,
            boundary_ok: row.boundary_ok,
            timestamp: row.timestamp,
        };
        match draft.validate() {
            Ok(ind) => drafts.push(ind),
            Err(e) => errors.push(ParseError::InvalidIndicator { at, errors: e }),
        }
    }

    if !errors.is_empty() {
        errors.sort_by_key(ParseError::location);
        return Err(ParseErrors(errors));
    }
    IndicatorTable::new(sphere.unwrap_or_default(), header.institution, drafts)
        .map(|t| t.with_snapshot_time(header.snapshot_time))
        .map_err(|e| ParseErrors(vec![ParseError::Malformed { message: e.to_string() }]))
}

/// Indicators sorted by quality, then id.
pub fn canonical_order(table: &IndicatorTable) -> IndicatorTable {
    let mut inds = table.indicators().to_vec();
    inds.sort_by(|a, b| (a.quality(), a.id()).cmp(&(b.quality(), b.id())));
    IndicatorTable::new(table.sphere(), table.institution(), inds)
        .expect("same ids as a valid table")
        .with_snapshot_time(table.snapshot_time())
}

fn timestamp_text(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::AutoSi, true)
}

/// Canonical serialization: offsets, indicators sorted by (quality, id),
/// shortest round-trip decimal numbers.
pub fn write_table(table: &IndicatorTable, format: TableFormat) -> Vec<u8> {
    let table = canonical_order(table);
    match format {
        TableFormat::Csv => write_csv(&table),
        TableFormat::Json => {
            let mut out = serde_json::to_vec_pretty(&to_document(&table)).expect("table serializes");
            out.push(b'\n');
            out
        }
    }
}

pub fn to_document(table: &IndicatorTable) -> TableDocument {
    TableDocument {
        angle_mode: AngleMode::Offset,
        layout: None,
        institution: table.institution().to_string(),
        sphere: table.sphere(),
        snapshot_time: table.snapshot_time(),
        indicators: table
            .indicators()
            .iter()
            .map(|ind| RowDocument {
                id: Some(ind.id().to_string()),
                sphere: None,
                quality: ind.quality().to_string(),
                name: ind.name().to_string(),
                angle: ind.offset(),
                length: ind.raw_length(),
                notes: ind.notes().to_string(),
                boundary_ok: ind.is_boundary_ok(),
                timestamp: ind.timestamp(),
            })
            .collect(),
    }
}

fn write_csv(table: &IndicatorTable) -> Vec<u8> {
    let mut out = String::new();
    out.push_str(&format!("# angle_mode={}\n", AngleMode::Offset.as_str()));
    out.push_str(&format!("# institution={}\n", table.institution()));
    out.push_str(&format!("# sphere={}\n", table.sphere()));
    if let Some(t) = table.snapshot_time() {
        out.push_str(&format!("# snapshot_time={}\n", timestamp_text(&t)));
    }
    let mut bytes = out.into_bytes();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(["id", "sphere", "quality", "name", "angle", "length", "notes", "boundary_ok", "timestamp"])
        .expect("in-memory write");
    for ind in table.indicators() {
        w.write_record([
            ind.id().as_str(),
            table.sphere().as_str(),
            ind.quality().as_str(),
            ind.name(),
            &ind.offset().to_string(),
            &ind.raw_length().to_string(),
            ind.notes(),
            if ind.is_boundary_ok() { "true" } else { "false" },
            &ind.timestamp().map(|t| timestamp_text(&t)).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    bytes.extend(w.into_inner().expect("in-memory flush"));
    bytes
}
