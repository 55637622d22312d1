#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use policy_compass::io::{parse_table, TableFormat};
use policy_compass::{IndicatorDraft, IndicatorTable, Quality, SectorLayout, Sphere};
use proptest::prelude::*;
use rand::Rng;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> IndicatorTable {
    let bytes = std::fs::read(fixture_path(name)).unwrap();
    parse_table(&bytes, TableFormat::Csv, &SectorLayout::default()).unwrap()
}

/// Builds a table from `(quality, offset, raw_length)` rows with ids `r0`, `r1`, ...
pub fn table(rows: &[(Quality, f64, f64)]) -> IndicatorTable {
    let inds = rows
        .iter()
        .enumerate()
        .map(|(i, &(q, o, l))| IndicatorDraft::new(format!("r{i}"), format!("row {i}"), q, o, l).validate().unwrap())
        .collect();
    IndicatorTable::new(Sphere::Unspecified, "test", inds).unwrap()
}

/// Random valid table with up to `max_per_sector` rows per sector. Offsets
/// avoid the sector boundaries, except for the occasional flagged row.
pub fn random_table(rng: &mut impl Rng, max_per_sector: usize, sphere: Sphere) -> IndicatorTable {
    let mut inds = Vec::new();
    for q in Quality::ALL {
        let n = rng.random_range(0..=max_per_sector);
        for i in 0..n {
            let id = format!("{}{i:03}", &q.as_str()[..1]);
            let (offset, flagged) = match rng.random_range(0..50) {
                0 => (0.0, true),
                1 => (120.0, true),
                _ => (rng.random_range(0.001..119.999), false),
            };
            let length = match rng.random_range(0..20) {
                0 => 0.0,
                1 => 1.0,
                _ => rng.random_range(0.0..=1.0),
            };
            let d = IndicatorDraft::new(id, format!("stat {i}"), q, offset, length).boundary_ok(flagged);
            inds.push(d.validate().unwrap());
        }
    }
    IndicatorTable::new(sphere, "random", inds).unwrap()
}

pub fn arb_rows(max_per_sector: usize) -> impl Strategy<Value = Vec<(Quality, f64, f64)>> {
    let sector = |q: Quality| {
        prop::collection::vec((0.001f64..119.999, 0.0f64..=1.0), 0..=max_per_sector)
            .prop_map(move |v| v.into_iter().map(|(o, l)| (q, o, l)).collect::<Vec<_>>())
    };
    (sector(Quality::Harmony), sector(Quality::Passion), sector(Quality::Suppression)).prop_map(|(a, b, c)| {
        let mut all = a;
        all.extend(b);
        all.extend(c);
        all
    })
}

pub fn arb_layout() -> impl Strategy<Value = SectorLayout> {
    let orders = vec![
        [Quality::Harmony, Quality::Passion, Quality::Suppression],
        [Quality::Harmony, Quality::Suppression, Quality::Passion],
    ];
    (prop::sample::select(orders), 0.0f64..360.0).prop_map(|(o, origin)| SectorLayout::new(o, origin).unwrap())
}

/// Attributes of every `<tag ...>` element whose class list contains `class`.
pub fn svg_elements(svg: &str, tag: &str, class: &str) -> Vec<HashMap<String, String>> {
    let open = format!("<{tag} ");
    let mut out = Vec::new();
    let mut rest = svg;
    while let Some(start) = rest.find(&open) {
        let body = &rest[start + open.len()..];
        let end = body.find('>').unwrap();
        let attrs = parse_attrs(&body[..end]);
        if attrs.get("class").is_some_and(|c| c.split_whitespace().any(|w| w == class)) {
            out.push(attrs);
        }
        rest = &body[end..];
    }
    out
}

fn parse_attrs(s: &str) -> HashMap<String, String> {
    let mut out = HashMap::new();
    let mut rest = s;
    while let Some(eq) = rest.find("=\"") {
        let key = rest[..eq].trim().to_string();
        let after = &rest[eq + 2..];
        let close = after.find('"').unwrap();
        out.insert(key, after[..close].to_string());
        rest = &after[close + 1..];
    }
    out
}

pub fn num(attrs: &HashMap<String, String>, key: &str) -> f64 {
    attrs[key].parse().unwrap()
}
