mod common;

use chrono::{TimeZone, Utc};
use policy_compass::elicitation::{
    angle_from_votes, Ballot, Intensity, Mutation, Session, SessionError, SessionEvent, SessionSeed, SplitPart,
};
use policy_compass::io::{from_json_bytes, to_json_bytes};
use policy_compass::{compass_reading, CompassConfig, IndicatorDraft, IndicatorId, Quality, SectorLayout};
use proptest::prelude::*;

fn seed() -> SessionSeed {
    SessionSeed {
        id: "workshop".into(),
        tables: vec![common::fixture("example_company.csv")],
        config: CompassConfig::default(),
        weights: Default::default(),
        created_at: None,
    }
}

fn at(i: u64) -> chrono::DateTime<Utc> {
    Utc.timestamp_opt(1_700_000_000 + i as i64, 0).unwrap()
}

#[test]
fn ninety_six_degrees_toward_passion() {
    let layout = SectorLayout::default();
    let mut ballots: Vec<Ballot> = (0..8).map(|i| Ballot::new(format!("p{i}"), Quality::Passion)).collect();
    ballots.extend((0..2).map(|i| Ballot::new(format!("h{i}"), Quality::Harmony)));
    let offset = angle_from_votes(&ballots, Quality::Suppression, &layout).unwrap();
    // Suppression's start boundary borders Passion, so 96 degrees toward
    // Passion means 24 degrees past that boundary.
    assert!((offset - 24.0).abs() < 1e-9);
    assert!((SECTOR - offset - 96.0).abs() < 1e-9);

    // Same tally under the other layout, where Passion borders the end.
    let flipped = SectorLayout::harmony_suppression_passion();
    assert!((angle_from_votes(&ballots, Quality::Suppression, &flipped).unwrap() - 96.0).abs() < 1e-9);
}

const SECTOR: f64 = 120.0;

#[test]
fn intensity_and_weight_fold_together() {
    let layout = SectorLayout::default();
    let ballots = [
        Ballot::new("a", Quality::Passion).with_intensity(Intensity::Strong),
        Ballot::new("b", Quality::Suppression).weighted(3.0),
    ];
    let offset = angle_from_votes(&ballots, Quality::Harmony, &layout).unwrap();
    assert!((offset - 60.0).abs() < 1e-12);
    let bad = [Ballot::new("c", Quality::Harmony)];
    assert!(angle_from_votes(&bad, Quality::Harmony, &layout).is_err());
}

#[test]
fn stale_versions_conflict_without_side_effects() {
    let mut s = Session::new(seed()).unwrap();
    let join = |p: &str| Mutation::Join { participant: p.into() };
    assert_eq!(s.apply(Some(0), join("ana"), at(1)).unwrap(), 1);
    let before = s.state().clone();
    let err = s.apply(Some(0), join("bo"), at(2)).unwrap_err();
    assert_eq!(err, SessionError::VersionConflict { expected: 0, actual: 1 });
    assert_eq!(s.state(), &before);
    assert_eq!(s.version(), 1);
}

#[test]
fn state_readings_match_fresh_recomputation() {
    let mut s = Session::new(seed()).unwrap();
    let id = IndicatorId::new("r1");
    s.apply(None, Mutation::AdjustIndicator { id: id.clone(), offset: 50.0, raw_length: 0.9 }, at(1)).unwrap();
    let parts = [
        SplitPart { id: None, name: "Wages, full time".into(), quality: Quality::Harmony, offset: 40.0, raw_length: 0.4 },
        SplitPart { id: None, name: "Wages, part time".into(), quality: Quality::Passion, offset: 10.0, raw_length: 0.3 },
    ];
    s.apply(None, Mutation::SplitIndicator { id: id.clone(), parts }, at(2)).unwrap();
    let t = &s.tables()[0];
    assert!(!t.contains(&id));
    assert!(t.contains(&"r1.a".into()) && t.contains(&"r1.b".into()));
    let fresh = compass_reading(t, s.config()).unwrap();
    assert_eq!(s.readings().unwrap()[0], fresh);
}

#[test]
fn what_if_leaves_session_untouched() {
    let s = Session::new(seed()).unwrap();
    let state = s.what_if(&[Mutation::RemoveIndicator { id: "r1".into() }]).unwrap();
    assert_eq!(state.tables[0].len(), 8);
    assert_eq!(s.tables()[0].len(), 9);
    assert_eq!(s.version(), 0);
}

fn arb_mutation() -> impl Strategy<Value = Mutation> {
    let id = (0usize..12).prop_map(|i| IndicatorId::new(format!("r{i}")));
    prop_oneof![
        (id.clone(), 0.5f64..119.5, 0.0f64..=1.0)
            .prop_map(|(id, offset, raw_length)| Mutation::AdjustIndicator { id, offset, raw_length }),
        id.clone().prop_map(|id| Mutation::RemoveIndicator { id }),
        (id.clone(), prop::collection::vec((prop::sample::select(Quality::ALL.to_vec()), 0.5f64..3.0), 1..5))
            .prop_map(|(id, votes)| Mutation::CastBallots {
                id,
                ballots: votes
                    .into_iter()
                    .enumerate()
                    .map(|(i, (q, w))| Ballot::new(format!("v{i}"), q).weighted(w))
                    .collect(),
            }),
        (0usize..40, prop::sample::select(Quality::ALL.to_vec()), 1.0f64..119.0, 0.0f64..=1.0).prop_map(
            |(n, q, o, l)| Mutation::AddIndicator {
                sphere: None,
                indicator: IndicatorDraft::new(format!("n{n}"), format!("new {n}"), q, o, l),
            }
        ),
        "[a-z]{1,6}".prop_map(|p| Mutation::Join { participant: p }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn replay_reproduces_state(mutations in prop::collection::vec(arb_mutation(), 0..60)) {
        let mut s = Session::new(seed()).unwrap();
        let mut accepted = 0;
        for (i, m) in mutations.into_iter().enumerate() {
            let before = s.version();
            match s.apply(Some(before), m, at(i as u64)) {
                Ok(v) => {
                    accepted += 1;
                    prop_assert_eq!(v, before + 1);
                }
                Err(_) => prop_assert_eq!(s.version(), before),
            }
        }
        prop_assert_eq!(s.version(), accepted);
        let versions: Vec<u64> = s.events().iter().map(|e| e.version).collect();
        prop_assert_eq!(versions, (1..=accepted).collect::<Vec<_>>());

        // Through the persisted JSON form, as the service stores it.
        let events: Vec<SessionEvent> = s
            .events()
            .iter()
            .map(|e| from_json_bytes(&to_json_bytes(e)).unwrap())
            .collect();
        let seed: SessionSeed = from_json_bytes(&to_json_bytes(s.seed())).unwrap();
        let replayed = Session::replay(seed, events).unwrap();
        prop_assert_eq!(replayed.state(), s.state());
        prop_assert_eq!(replayed.version(), s.version());
    }

    #[test]
    fn ballot_scaling_leaves_offset(votes in prop::collection::vec((any::<bool>(), 0.1f64..5.0), 1..20), k in 0.01f64..100.0) {
        let layout = SectorLayout::default();
        let ballots: Vec<Ballot> = votes
            .iter()
            .enumerate()
            .map(|(i, &(p, w))| Ballot::new(i.to_string(), if p { Quality::Passion } else { Quality::Suppression }).weighted(w))
            .collect();
        let scaled: Vec<Ballot> = ballots.iter().cloned().map(|b| { let w = b.weight * k; b.weighted(w) }).collect();
        let a = angle_from_votes(&ballots, Quality::Harmony, &layout).unwrap();
        let b = angle_from_votes(&scaled, Quality::Harmony, &layout).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!((0.0..=120.0).contains(&a));
    }
}
