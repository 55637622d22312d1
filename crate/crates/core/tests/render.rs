mod common;

use common::{fixture, num, svg_elements, table};
use policy_compass::ecological::SphereArrowSource;
use policy_compass::render::{render_compass, render_ecological, render_trajectory, RenderOptions, Stage, Viewport};
use policy_compass::{
    compass_reading, compose_spheres, Classification, CompassConfig, CompassReading, Quality, SphereWeights, Vector2,
};

fn example_company() -> CompassReading {
    compass_reading(&fixture("example_company.csv"), &CompassConfig::default()).unwrap()
}

fn line_end(attrs: &std::collections::HashMap<String, String>, vp: &Viewport) -> (Vector2, Vector2) {
    (vp.from_svg(num(attrs, "x1"), num(attrs, "y1")), vp.from_svg(num(attrs, "x2"), num(attrs, "y2")))
}

#[test]
fn final_arrow_parses_back() {
    let r = example_company();
    let opts = RenderOptions::default();
    let svg = render_compass(&r, &opts);
    let finals = svg_elements(&svg, "line", "final-arrow");
    assert_eq!(finals.len(), 1);
    let (tail, head) = line_end(&finals[0], &Viewport::new(opts.size_px));
    assert!(tail.magnitude() < 1e-9);
    assert!((head - r.final_arrow).magnitude() < 1e-6);
    assert_eq!(finals[0]["data-classification"], "suppression");
}

#[test]
fn golden_example_company() {
    let svg = render_compass(&example_company(), &RenderOptions::default());
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/example_company_final.svg");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &svg).unwrap();
    }
    let golden = std::fs::read_to_string(&path).unwrap();
    assert_eq!(svg, golden, "rerun with UPDATE_GOLDEN=1 after an intended change");
    assert_eq!(svg, render_compass(&example_company(), &RenderOptions::default()));
}

#[test]
fn chains_are_continuous() {
    let r = example_company();
    let opts = RenderOptions::stage(Stage::IndicatorChains);
    let vp = Viewport::new(opts.size_px);
    let svg = render_compass(&r, &opts);
    assert!(svg_elements(&svg, "line", "final-arrow").is_empty());
    assert!(svg_elements(&svg, "line", "sector-arrow").is_empty());
    for q in Quality::ALL {
        let segs: Vec<_> = svg_elements(&svg, "line", "indicator-arrow")
            .into_iter()
            .filter(|a| a["data-quality"] == q.as_str())
            .map(|a| line_end(&a, &vp))
            .collect();
        assert_eq!(segs.len(), r.sector(q).indicator_count);
        assert!(segs[0].0.magnitude() < 1e-9);
        for w in segs.windows(2) {
            assert!((w[0].1 - w[1].0).magnitude() < 1e-9);
        }
        assert!((segs.last().unwrap().1 - r.sector(q).vector).magnitude() < 1e-9);
    }
}

#[test]
fn stages_add_elements() {
    let r = example_company();
    let sectors = render_compass(&r, &RenderOptions::stage(Stage::SectorArrows));
    assert_eq!(svg_elements(&sectors, "line", "sector-arrow").len(), 3);
    let tri = render_compass(&r, &RenderOptions::stage(Stage::Triangle));
    assert_eq!(svg_elements(&tri, "polygon", "triangle").len(), 1);
    assert!(svg_elements(&tri, "line", "final-arrow").is_empty());
}

#[test]
fn balanced_reading_draws_a_dot() {
    let r = compass_reading(&table(&[]), &CompassConfig::default()).unwrap();
    let svg = render_compass(&r, &RenderOptions::default());
    assert!(svg_elements(&svg, "line", "final-arrow").is_empty());
    let dots = svg_elements(&svg, "circle", "final-arrow");
    assert_eq!(dots.len(), 1);
    assert!(dots[0]["class"].contains("balanced"));
}

fn flipped_layout() -> policy_compass::EcologicalCompass {
    let cfg = CompassConfig::default().with_layout(policy_compass::SectorLayout::harmony_suppression_passion());
    let readings = ["eco.csv", "socio.csv", "econo.csv"].map(|f| {
        let bytes = std::fs::read(common::fixture_path(f)).unwrap();
        let t = policy_compass::io::parse_table(&bytes, policy_compass::io::TableFormat::Csv, &cfg.layout).unwrap();
        compass_reading(&t, &cfg).unwrap()
    });
    compose_spheres(readings, SphereWeights::default(), SphereArrowSource::Final, &cfg).unwrap()
}

#[test]
fn sphere_radii_follow_weights() {
    let ec = flipped_layout();
    let svg = render_ecological(&ec, &RenderOptions::stage(Stage::Composition));
    let radius = |s: &str| num(&svg_elements(&svg, "circle", &format!("sphere-{s}"))[0], "r");
    let eco = radius("eco");
    assert!((radius("socio") / eco - 0.75).abs() < 1e-6);
    assert!((radius("econo") / eco - 0.5).abs() < 1e-6);
    assert!((eco - Viewport::new(400).radius).abs() < 1e-6);

    let composed = svg_elements(&svg, "line", "final-arrow");
    assert_eq!(composed.len(), 1);
    assert!(svg.rfind("final-arrow").unwrap() > svg.rfind("sphere-final").unwrap());
    let (_, head) = line_end(&composed[0], &Viewport::new(400));
    assert!((head - ec.composed_final).magnitude() < 1e-6);
    let q = ec.layout().quality_at(head.angle_degrees().unwrap());
    assert_eq!(Classification::from(q), ec.classification);
}

#[test]
fn balanced_spheres_draw_circles_and_a_dot() {
    let cfg = CompassConfig::default();
    let empty = || compass_reading(&table(&[]), &cfg).unwrap();
    let ec = compose_spheres([empty(), empty(), empty()], SphereWeights::default(), SphereArrowSource::Final, &cfg)
        .unwrap();
    let svg = render_ecological(&ec, &RenderOptions::stage(Stage::Composition));
    assert_eq!(svg_elements(&svg, "circle", "sphere").len(), 3);
    assert!(svg_elements(&svg, "line", "sphere-final").is_empty());
    assert_eq!(svg_elements(&svg, "circle", "balanced").len(), 1);
}

#[test]
fn school_trajectory_crosses_two_boundaries() {
    // A school drifting from harmony through passion into suppression.
    let cfg = CompassConfig::default();
    let snap = |q: Quality| {
        let rows: Vec<_> = (0..3).map(|i| (q, 40.0 + 20.0 * i as f64, 0.7)).collect();
        compass_reading(&table(&rows), &cfg).unwrap()
    };
    let snaps = vec![
        ("2019".to_string(), snap(Quality::Harmony)),
        ("2021".to_string(), snap(Quality::Passion)),
        ("2023".to_string(), snap(Quality::Suppression)),
    ];
    let svg = render_trajectory(&snaps, &RenderOptions::stage(Stage::Trajectory));
    let points = svg_elements(&svg, "circle", "trajectory-point");
    let labels: Vec<&str> = points.iter().map(|p| p["data-label"].as_str()).collect();
    assert_eq!(labels, ["2019", "2021", "2023"]);
    let classes: Vec<&str> = points.iter().map(|p| p["data-classification"].as_str()).collect();
    assert_eq!(classes, ["harmony", "passion", "suppression"]);
    assert_eq!(svg_elements(&svg, "circle", "classification-change").len(), 2);
    assert_eq!(svg_elements(&svg, "polyline", "trajectory").len(), 1);
}

#[test]
fn trajectory_edge_cases() {
    let r = example_company();
    let one = render_trajectory(&[("t0".into(), r.clone())], &RenderOptions::stage(Stage::Trajectory));
    assert_eq!(svg_elements(&one, "circle", "trajectory-point").len(), 1);
    assert!(svg_elements(&one, "polyline", "trajectory").is_empty());

    let two = render_trajectory(&[("t0".into(), r.clone()), ("t1".into(), r)], &RenderOptions::stage(Stage::Trajectory));
    assert_eq!(svg_elements(&two, "text", "no-change").len(), 1);
    assert!(svg_elements(&two, "circle", "classification-change").is_empty());
}

#[test]
fn hesitant_grade_adds_badge() {
    let grade = policy_compass::robustness::RobustnessGrade::Hesitant { reasons: vec!["too few rows".into()] };
    let opts = RenderOptions { grade: Some(grade), ..RenderOptions::default() };
    let svg = render_compass(&example_company(), &opts);
    assert_eq!(svg_elements(&svg, "g", "robustness-badge").len(), 1);
    let quiet = RenderOptions { robustness_annotation: false, ..opts };
    assert!(svg_elements(&render_compass(&example_company(), &quiet), "g", "robustness-badge").is_empty());
}
