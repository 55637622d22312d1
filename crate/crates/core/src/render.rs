//! Deterministic SVG drawings of each construction stage.
//!
//! Element ids and classes are stable so the workshop client can hit-test
//! and tests can read coordinates back:
//!
//! * `sector-<quality>`: group holding a sector's indicator chain and arrow
//! * `indicator-<id>`: one indicator arrow in a chain
//! * `sector-arrow`, `triangle`, `sector-boundary`, `compass-circle`
//! * `final-arrow`: exactly one element once the final stage is drawn; a
//!   `<line>` normally, a `<circle class="final-arrow balanced">` dot when
//!   the reading is Balanced
//! * `sphere sphere-<name>`, `sphere-final`, `trajectory`, `trajectory-point`
//!
//! The unit circle maps to a circle of radius `0.45 * size_px` centered in
//! a square `0 0 size_px size_px` viewBox, with y pointing up on the compass
//! and down in SVG.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::aggregation::{corrected_length, Classification, CompassReading};
use crate::ecological::EcologicalCompass;
use crate::geometry::Vector2;
use crate::model::{Indicator, Quality, SectorLayout, Sphere};
use crate::robustness::RobustnessGrade;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    IndicatorChains,
    SectorArrows,
    Triangle,
    FinalArrow,
    Spheres,
    Composition,
    Trajectory,
}

impl std::str::FromStr for Stage {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "indicator_chains" | "chains" => Stage::IndicatorChains,
            "sector_arrows" | "sectors" => Stage::SectorArrows,
            "triangle" => Stage::Triangle,
            "final_arrow" | "final" => Stage::FinalArrow,
            "spheres" => Stage::Spheres,
            "composition" | "composed" => Stage::Composition,
            "trajectory" => Stage::Trajectory,
            other => return Err(format!("unknown stage `{other}`")),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub stage: Stage,
    pub size_px: u32,
    pub show_labels: bool,
    /// Draw a hesitancy badge when `grade` is not robust.
    pub robustness_annotation: bool,
    #[serde(default)]
    pub grade: Option<RobustnessGrade>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        Self {
            stage: Stage::FinalArrow,
            size_px: 400,
            show_labels: true,
            robustness_annotation: true,
            grade: None,
        }
    }
}

impl RenderOptions {
    pub fn stage(stage: Stage) -> Self {
        Self { stage, ..Self::default() }
    }
}

/// Mapping between compass coordinates and SVG user units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub size: f64,
    pub center: f64,
    pub radius: f64,
}

impl Viewport {
    pub fn new(size_px: u32) -> Self {
        let size = f64::from(size_px.max(1));
        Self { size, center: size / 2.0, radius: size * 0.45 }
    }

    pub fn to_svg(&self, v: Vector2) -> (f64, f64) {
        (self.center + self.radius * v.x, self.center - self.radius * v.y)
    }

    pub fn from_svg(&self, x: f64, y: f64) -> Vector2 {
        Vector2::new((x - self.center) / self.radius, (self.center - y) / self.radius)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn color(q: Quality) -> &'static str {
    match q {
        Quality::Harmony => "#2e7d32",
        Quality::Passion => "#c62828",
        Quality::Suppression => "#37474f",
    }
}

struct Canvas {
    out: String,
    vp: Viewport,
}

impl Canvas {
    fn open(size_px: u32, stage: Stage) -> Self {
        let vp = Viewport::new(size_px);
        let mut out = String::new();
        let s = vp.size;
        writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{s}" height="{s}" viewBox="0 0 {s} {s}" data-stage="{}">"#,
            stage_name(stage)
        )
        .unwrap();
        out.push_str(concat!(
            "<defs><marker id=\"arrowhead\" markerWidth=\"8\" markerHeight=\"6\" refX=\"8\" refY=\"3\" orient=\"auto\">",
            "<polygon points=\"0 0, 8 3, 0 6\"/></marker></defs>\n"
        ));
        Self { out, vp }
    }

    fn circle_frame(&mut self, layout: &SectorLayout, radius: f64, show_labels: bool) {
        let c = self.vp.center;
        writeln!(
            self.out,
            r##"<circle class="compass-circle" cx="{c}" cy="{c}" r="{}" fill="none" stroke="#555"/>"##,
            self.vp.radius * radius
        )
        .unwrap();
        for q in Quality::ALL {
            let (x, y) = self.vp.to_svg(Vector2::from_polar(radius, layout.start_angle(q)));
            writeln!(
                self.out,
                r##"<line class="sector-boundary" data-quality="{q}" x1="{c}" y1="{c}" x2="{x}" y2="{y}" stroke="#999"/>"##
            )
            .unwrap();
            if show_labels {
                let mid = layout.absolute_angle(q, 60.0);
                let (lx, ly) = self.vp.to_svg(Vector2::from_polar(radius * 1.08, mid));
                writeln!(
                    self.out,
                    r#"<text class="sector-label" x="{lx}" y="{ly}" text-anchor="middle" fill="{}">{q}</text>"#,
                    color(q)
                )
                .unwrap();
            }
        }
    }

    fn arrow(&mut self, class: &str, extra: &str, from: Vector2, to: Vector2, stroke: &str, width: f64) {
        let (x1, y1) = self.vp.to_svg(from);
        let (x2, y2) = self.vp.to_svg(to);
        writeln!(
            self.out,
            r#"<line class="{class}"{extra} x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}" stroke="{stroke}" stroke-width="{width}" marker-end="url(#arrowhead)"/>"#
        )
        .unwrap();
    }

    fn dot(&mut self, class: &str, extra: &str, at: Vector2, r: f64) {
        let (x, y) = self.vp.to_svg(at);
        writeln!(self.out, r#"<circle class="{class}"{extra} cx="{x}" cy="{y}" r="{r}"/>"#).unwrap();
    }

    fn final_marker(&mut self, v: Vector2, classification: Classification, extra_class: &str) {
        let class = if extra_class.is_empty() {
            "final-arrow".to_string()
        } else {
            format!("final-arrow {extra_class}")
        };
        if classification == Classification::Balanced || v.is_zero() {
            self.dot(&format!("{class} balanced"), " data-classification=\"balanced\"", Vector2::ZERO, 3.0);
        } else {
            let extra = format!(" data-classification=\"{classification}\"");
            self.arrow(&class, &extra, Vector2::ZERO, v, "#000", 3.0);
        }
    }

    fn text(&mut self, class: &str, x: f64, y: f64, body: &str) {
        writeln!(self.out, r#"<text class="{class}" x="{x}" y="{y}">{}</text>"#, escape(body)).unwrap();
    }

    fn badge(&mut self, opts: &RenderOptions) {
        if !opts.robustness_annotation {
            return;
        }
        if let Some(RobustnessGrade::Hesitant { reasons }) = &opts.grade {
            let y = self.vp.size - 8.0;
            writeln!(
                self.out,
                r##"<g class="robustness-badge" data-reasons="{}"><text x="8" y="{y}" fill="#b26a00">not robust: report with hesitancy</text></g>"##,
                escape(&reasons.join("; "))
            )
            .unwrap();
        }
    }

    fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}

fn stage_name(stage: Stage) -> &'static str {
    match stage {
        Stage::IndicatorChains => "indicator_chains",
        Stage::SectorArrows => "sector_arrows",
        Stage::Triangle => "triangle",
        Stage::FinalArrow => "final_arrow",
        Stage::Spheres => "spheres",
        Stage::Composition => "composition",
        Stage::Trajectory => "trajectory",
    }
}

fn sorted_sector<'a>(reading: &'a CompassReading, q: Quality) -> Vec<&'a Indicator> {
    let mut members: Vec<&Indicator> = reading.table.in_sector(q).collect();
    members.sort_by(|a, b| a.id().cmp(b.id()));
    members
}

/// Draws a single compass up to `opts.stage` (stages past the final arrow
/// are drawn as the final arrow).
pub fn render_compass(reading: &CompassReading, opts: &RenderOptions) -> String {
    let stage = opts.stage.min(Stage::FinalArrow);
    let layout = &reading.config.layout;
    let mut cv = Canvas::open(opts.size_px, stage);
    cv.circle_frame(layout, 1.0, opts.show_labels);

    for q in Quality::ALL {
        let sector = reading.sector(q);
        writeln!(
            cv.out,
            r#"<g id="sector-{q}" class="sector" data-quality="{q}" data-count="{}">"#,
            sector.indicator_count
        )
        .unwrap();
        let members = sorted_sector(reading, q);
        let n = members.len();
        let mut tail = Vector2::ZERO;
        for ind in members {
            let len = corrected_length(ind.raw_length(), n).unwrap_or(0.0);
            let head = tail + Vector2::from_polar(len, ind.absolute_angle(layout));
            let extra = format!(r#" id="indicator-{}" data-quality="{q}""#, escape(ind.id().as_str()));
            let stroke_w = if stage == Stage::IndicatorChains { 2.0 } else { 1.0 };
            cv.arrow("indicator-arrow", &extra, tail, head, color(q), stroke_w);
            tail = head;
        }
        if stage >= Stage::SectorArrows && !sector.vector.is_zero() {
            let extra = format!(r#" data-quality="{q}""#);
            cv.arrow("sector-arrow", &extra, Vector2::ZERO, sector.vector, color(q), 2.5);
        }
        cv.out.push_str("</g>\n");
    }

    if stage >= Stage::Triangle {
        let pts: Vec<String> = reading
            .triangle
            .iter()
            .map(|&v| {
                let (x, y) = cv.vp.to_svg(v);
                format!("{x},{y}")
            })
            .collect();
        writeln!(
            cv.out,
            r##"<polygon class="triangle" points="{}" fill="#ffd54f" fill-opacity="0.3" stroke="#f9a825"/>"##,
            pts.join(" ")
        )
        .unwrap();
        if stage == Stage::Triangle && !reading.raw_final.is_zero() {
            cv.dot("triangle-center", "", reading.raw_final, 3.0);
        }
    }

    if stage >= Stage::FinalArrow {
        cv.final_marker(reading.final_arrow, reading.classification, "");
        if opts.show_labels {
            let y = cv.vp.size - 24.0;
            cv.text(
                "classification",
                8.0,
                y,
                &format!("{}: {}", reading.institution, reading.classification),
            );
        }
    }
    cv.badge(opts);
    cv.finish()
}

/// Draws the three nested spheres with radii proportional to their weights
/// (eco outermost by default), each sphere's final arrow in its own frame,
/// and the composed arrow last in the outer frame.
pub fn render_ecological(ec: &EcologicalCompass, opts: &RenderOptions) -> String {
    let stage = if opts.stage == Stage::Spheres { Stage::Spheres } else { Stage::Composition };
    let layout = ec.layout();
    let mut cv = Canvas::open(opts.size_px, stage);
    cv.circle_frame(&layout, 1.0, opts.show_labels);
    let largest = ec.weights.largest();
    let c = cv.vp.center;
    for sphere in Sphere::NESTED {
        let scale = ec.weights.get(sphere) / largest;
        writeln!(
            cv.out,
            r##"<circle class="sphere sphere-{sphere}" data-sphere="{sphere}" cx="{c}" cy="{c}" r="{}" fill="none" stroke="#1565c0" stroke-dasharray="4 2"/>"##,
            cv.vp.radius * scale
        )
        .unwrap();
    }
    for sphere in Sphere::NESTED {
        let scale = ec.weights.get(sphere) / largest;
        let f = ec.reading(sphere).final_arrow;
        if !f.is_zero() {
            let extra = format!(
                r#" data-sphere="{sphere}" data-classification="{}""#,
                ec.reading(sphere).classification
            );
            cv.arrow("sphere-final", &extra, Vector2::ZERO, f * scale, "#1565c0", 1.5);
        }
    }
    if stage == Stage::Composition {
        cv.final_marker(ec.composed_final, ec.classification, "composed");
        if opts.show_labels {
            let y = cv.vp.size - 24.0;
            cv.text(
                "sustainability",
                8.0,
                y,
                &format!("{}: sustainable: {}", ec.classification, ec.sustainable),
            );
        }
    }
    cv.badge(opts);
    cv.finish()
}

/// Final-arrow heads of successive snapshots joined by a polyline.
pub fn render_trajectory(snapshots: &[(String, CompassReading)], opts: &RenderOptions) -> String {
    let mut cv = Canvas::open(opts.size_px, Stage::Trajectory);
    let layout = snapshots.first().map(|(_, r)| r.config.layout).unwrap_or_default();
    cv.circle_frame(&layout, 1.0, opts.show_labels);
    let heads: Vec<(f64, f64)> = snapshots.iter().map(|(_, r)| cv.vp.to_svg(r.final_arrow)).collect();
    if heads.len() >= 2 {
        let pts: Vec<String> = heads.iter().map(|(x, y)| format!("{x},{y}")).collect();
        writeln!(
            cv.out,
            r##"<polyline class="trajectory" points="{}" fill="none" stroke="#6a1b9a" stroke-width="2"/>"##,
            pts.join(" ")
        )
        .unwrap();
    }
    let mut previous: Option<Classification> = None;
    for (i, (label, r)) in snapshots.iter().enumerate() {
        let extra = format!(
            r#" data-index="{i}" data-label="{}" data-classification="{}""#,
            escape(label),
            r.classification
        );
        cv.dot("trajectory-point", &extra, r.final_arrow, 4.0);
        if previous.is_some_and(|p| p != r.classification) {
            let extra = format!(r##" data-index="{i}" fill="none" stroke="#d84315""##);
            cv.dot("classification-change", &extra, r.final_arrow, 8.0);
        }
        previous = Some(r.classification);
        if opts.show_labels {
            let (x, y) = heads[i];
            cv.text("time-label", x + 6.0, y - 6.0, label);
        }
    }
    let unchanged = snapshots.len() >= 2
        && snapshots.windows(2).all(|w| w[0].1.final_arrow == w[1].1.final_arrow);
    if unchanged {
        cv.text("no-change", 8.0, 16.0, "no change");
    }
    cv.badge(opts);
    cv.finish()
}
