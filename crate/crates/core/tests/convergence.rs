mod common;

use policy_compass::robustness::{
    assess_table, convergence_report, gerrymander_diff, RobustnessSettings, Stability, DEFAULT_EPSILON,
    DEFAULT_WINDOW,
};
use policy_compass::{
    compass_reading, CompassConfig, Indicator, IndicatorDraft, Quality, SectorLayout,
    Vector2,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn iid_stream(seed: u64, n: usize) -> Vec<Indicator> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let offset = rng.random_range(10.0..110.0);
            let length = rng.random_range(0.2..0.8);
            IndicatorDraft::new(format!("s{i:04}"), format!("stat {i}"), Quality::Harmony, offset, length)
                .validate()
                .unwrap()
        })
        .collect()
}

#[test]
fn iid_streams_stabilise() {
    let cfg = CompassConfig::default();
    let stable = (0..100)
        .filter(|&seed| {
            let report = convergence_report(&iid_stream(seed, 200), &cfg, DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap();
            report.stability(Quality::Harmony) == Stability::Stable
        })
        .count();
    assert!(stable >= 95, "only {stable}/100 streams stabilised");
}

#[test]
fn trace_points_stay_in_the_disk() {
    let cfg = CompassConfig::default();
    let report = convergence_report(&iid_stream(7, 200), &cfg, DEFAULT_EPSILON, DEFAULT_WINDOW).unwrap();
    let trace = &report.sectors[&Quality::Harmony].trace;
    assert_eq!(trace.len(), 200);
    assert!(trace.iter().all(|p| p.vector.magnitude() <= 1.0 + 1e-12));
    assert_eq!(report.stability(Quality::Passion), Stability::Undetermined);
}

// Alternating full-length arrows at offsets 5 and 115.
fn alternating(n: usize) -> Vec<Indicator> {
    (0..n)
        .map(|i| {
            let offset = if i % 2 == 0 { 5.0 } else { 115.0 };
            IndicatorDraft::new(format!("a{i:05}"), "alt", Quality::Harmony, offset, 1.0).validate().unwrap()
        })
        .collect()
}

/// Sector arrow after k of the alternating rows, computed directly.
fn alternating_oracle(k: usize) -> Vector2 {
    let evens = k.div_ceil(2) as f64;
    let odds = (k / 2) as f64;
    (Vector2::unit(5.0) * evens + Vector2::unit(115.0) * odds) / k as f64
}

#[test]
fn alternating_extremes_trace_matches_oracle() {
    let cfg = CompassConfig::default();
    let stream = alternating(60);
    let report = convergence_report(&stream, &cfg, 0.001, 20).unwrap();
    let s = &report.sectors[&Quality::Harmony];
    for (k, p) in (1..).zip(&s.trace) {
        assert_eq!(p.indicator_count, k);
        assert!((p.vector - alternating_oracle(k)).magnitude() < 1e-12);
    }
    // The odd prefixes sit about 0.82/k from the even ones: 60 rows is far too few.
    assert_eq!(s.stability, Stability::Unstable);
    let looser = convergence_report(&stream, &cfg, 0.05, 20).unwrap();
    assert_eq!(looser.stability(Quality::Harmony), Stability::Stable);
    let first = looser.sectors[&Quality::Harmony].first_stable_index.unwrap();
    let spread = |end: usize| {
        let mut worst: f64 = 0.0;
        for i in end - 19..=end {
            for j in end - 19..=end {
                worst = worst.max(alternating_oracle(i).distance(alternating_oracle(j)));
            }
        }
        worst
    };
    assert!(spread(first) < 0.05);
    assert!((20..first).all(|end| spread(end) >= 0.05));
}

#[test]
fn short_tables_grade_hesitant() {
    let t = common::fixture("example_company.csv");
    let grade = assess_table(&t, &CompassConfig::default(), &RobustnessSettings::default()).unwrap();
    assert!(!grade.is_robust());
}

#[test]
fn layout_change_shows_up_in_diff() {
    let t = common::fixture("example_company.csv");
    let a = compass_reading(&t, &CompassConfig::default()).unwrap();
    let b = compass_reading(&t, &CompassConfig::default().with_layout(SectorLayout::default().rotated(30.0))).unwrap();
    let diff = gerrymander_diff(&a, &b).unwrap();
    assert!(!diff.is_empty());
    let same = gerrymander_diff(&a, &a).unwrap();
    assert!(same.is_empty());
}

#[test]
fn removing_a_zero_length_row_rescales_its_sector() {
    let t = common::fixture("example_company.csv");
    let mut padded = t.clone();
    padded
        .push(IndicatorDraft::new("zero", "empty statistic", Quality::Passion, 60.0, 0.0).validate().unwrap())
        .unwrap();
    let cfg = CompassConfig::default();
    let with = compass_reading(&padded, &cfg).unwrap().sector(Quality::Passion).vector;
    let without = compass_reading(&padded.without(&"zero".into()), &cfg).unwrap().sector(Quality::Passion).vector;
    assert!((without.magnitude() - with.magnitude() * 4.0 / 3.0).abs() < 1e-12);
    let turn = policy_compass::geometry::angle_between(with.angle_degrees().unwrap(), without.angle_degrees().unwrap());
    assert!(turn.abs() < 1e-9);
}
