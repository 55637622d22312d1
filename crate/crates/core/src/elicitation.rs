//! Workshop protocols: angles from weighted votes, splitting an ambiguous
//! indicator in two, and event-sourced consensus sessions.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::aggregation::{compass_reading, AggregationError, CompassConfig, CompassReading};
use crate::ecological::{compose_spheres, EcologicalCompass, EcologicalError, SphereArrowSource, SphereWeights};
use crate::model::{
    Indicator, IndicatorDraft, IndicatorId, IndicatorTable, Quality, SectorLayout, Sphere,
    TableError, ValidationErrors, SECTOR_SPAN,
};

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VoteError {
    #[error("no ballots were cast")]
    EmptyBallots,
    #[error("ballots carry no weight")]
    ZeroTotalWeight,
    #[error("voter `{voter}` pulls toward {toward}, which is not a neighbor of {target}")]
    InvalidNeighbor { voter: String, toward: Quality, target: Quality },
    #[error("voter `{voter}` has an invalid weight {weight}")]
    InvalidWeight { voter: String, weight: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intensity {
    #[default]
    Light,
    Medium,
    Strong,
}

impl Intensity {
    pub fn multiplier(self) -> f64 {
        match self {
            Intensity::Light => 1.0,
            Intensity::Medium => 2.0,
            Intensity::Strong => 3.0,
        }
    }
}

/// One participant's pull on an indicator arrow toward a neighboring quality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ballot {
    pub voter: String,
    pub toward: Quality,
    #[serde(default = "unit_weight")]
    pub weight: f64,
    #[serde(default)]
    pub intensity: Intensity,
}

fn unit_weight() -> f64 {
    1.0
}

impl Ballot {
    pub fn new(voter: impl Into<String>, toward: Quality) -> Self {
        Self { voter: voter.into(), toward, weight: 1.0, intensity: Intensity::Light }
    }

    pub fn weighted(mut self, weight: f64) -> Self {
        self.weight = weight;
        self
    }

    pub fn with_intensity(mut self, intensity: Intensity) -> Self {
        self.intensity = intensity;
        self
    }

    pub fn effective_weight(&self) -> f64 {
        self.weight * self.intensity.multiplier()
    }
}

/// Offset within `target`'s sector implied by the ballots.
///
/// Weight pulling toward the neighbor at the sector's start boundary keeps
/// the arrow near offset 0; weight toward the end-boundary neighbor pushes
/// it toward 120. The result is `120 * W_end / (W_start + W_end)`.
pub fn angle_from_votes(
    ballots: &[Ballot],
    target: Quality,
    layout: &SectorLayout,
) -> Result<f64, VoteError> {
    if ballots.is_empty() {
        return Err(VoteError::EmptyBallots);
    }
    let end_neighbor = layout.end_neighbor(target);
    let (mut w_start, mut w_end) = (0.0, 0.0);
    for b in ballots {
        if b.toward == target {
            return Err(VoteError::InvalidNeighbor {
                voter: b.voter.clone(),
                toward: b.toward,
                target,
            });
        }
        let w = b.effective_weight();
        if !(w >= 0.0) || !w.is_finite() {
            return Err(VoteError::InvalidWeight { voter: b.voter.clone(), weight: b.weight });
        }
        if b.toward == end_neighbor {
            w_end += w;
        } else {
            w_start += w;
        }
    }
    let total = w_start + w_end;
    if total <= 0.0 {
        return Err(VoteError::ZeroTotalWeight);
    }
    // Fraction first, so an all-one-way vote lands exactly on 120.
    Ok(SECTOR_SPAN * (w_end / total))
}

#[derive(Debug, Clone, PartialEq, Error, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SessionError {
    #[error("unknown indicator `{id}`")]
    UnknownIndicator { id: IndicatorId },
    #[error("indicator id `{id}` already exists")]
    DuplicateId { id: IndicatorId },
    #[error("split parts need distinct, non-empty names (got `{name}`)")]
    DuplicateName { name: String },
    #[error("indicator `{id}` is invalid: {errors}")]
    Validation { id: IndicatorId, errors: ValidationErrors },
    #[error("expected version {expected}, session is at {actual}")]
    VersionConflict { expected: u64, actual: u64 },
    #[error(transparent)]
    Vote(VoteError),
    #[error("this session holds three sphere tables; name the sphere")]
    SphereRequired,
    #[error("no table for sphere {sphere}")]
    UnknownSphere { sphere: Sphere },
    #[error("invalid session shape: {message}")]
    InvalidShape { message: String },
    #[error("invalid configuration: {message}")]
    Config { message: String },
    #[error("event log is inconsistent: {message}")]
    Replay { message: String },
}

impl From<VoteError> for SessionError {
    fn from(e: VoteError) -> Self {
        SessionError::Vote(e)
    }
}

/// Placement of one half of a split indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPart {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<IndicatorId>,
    pub name: String,
    pub quality: Quality,
    #[serde(rename = "angle")]
    pub offset: f64,
    #[serde(rename = "length")]
    pub raw_length: f64,
}

/// A state change accepted by a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Mutation {
    AddIndicator {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sphere: Option<Sphere>,
        indicator: IndicatorDraft,
    },
    AdjustIndicator {
        id: IndicatorId,
        #[serde(rename = "angle")]
        offset: f64,
        #[serde(rename = "length")]
        raw_length: f64,
    },
    SplitIndicator {
        id: IndicatorId,
        parts: [SplitPart; 2],
    },
    RemoveIndicator {
        id: IndicatorId,
    },
    CastBallots {
        id: IndicatorId,
        ballots: Vec<Ballot>,
    },
    SetConfig {
        config: CompassConfig,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<SphereWeights>,
    },
    Join {
        participant: String,
    },
}

impl Mutation {
    pub fn summary(&self) -> String {
        match self {
            Mutation::AddIndicator { indicator, .. } => format!("add {}", indicator.id),
            Mutation::AdjustIndicator { id, offset, raw_length } => {
                format!("adjust {id} to angle {offset} length {raw_length}")
            }
            Mutation::SplitIndicator { id, .. } => format!("split {id}"),
            Mutation::RemoveIndicator { id } => format!("remove {id}"),
            Mutation::CastBallots { id, ballots } => format!("{} ballots on {id}", ballots.len()),
            Mutation::SetConfig { .. } => "set config".to_string(),
            Mutation::Join { participant } => format!("{participant} joined"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub version: u64,
    pub at: DateTime<Utc>,
    pub mutation: Mutation,
}

/// Everything needed to rebuild a session from its log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSeed {
    pub id: String,
    pub tables: Vec<IndicatorTable>,
    pub config: CompassConfig,
    #[serde(default)]
    pub weights: SphereWeights,
    #[serde(default)]
    pub created_at: Option<DateTime<Utc>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub tables: Vec<IndicatorTable>,
    pub config: CompassConfig,
    pub weights: SphereWeights,
    pub participants: BTreeSet<String>,
    pub ballots: BTreeMap<IndicatorId, Vec<Ballot>>,
}

/// A consensus session over one table or a sphere triple (eco, socio, econo).
///
/// Every accepted mutation bumps the version by exactly one and is appended
/// to the event log; replaying the log over the seed rebuilds the state.
#[derive(Debug, Clone)]
pub struct Session {
    seed: SessionSeed,
    state: SessionState,
    version: u64,
    log: Vec<SessionEvent>,
}

impl Session {
    pub fn new(seed: SessionSeed) -> Result<Self, SessionError> {
        check_shape(&seed.tables)?;
        seed.config.validate().map_err(config_error)?;
        seed.weights.check_positive().map_err(|e| SessionError::Config { message: e.to_string() })?;
        let state = SessionState {
            tables: seed.tables.clone(),
            config: seed.config,
            weights: seed.weights,
            participants: BTreeSet::new(),
            ballots: BTreeMap::new(),
        };
        Ok(Self { seed, state, version: 0, log: Vec::new() })
    }

    /// Rebuilds a session by re-applying `events` in order.
    pub fn replay(seed: SessionSeed, events: impl IntoIterator<Item = SessionEvent>) -> Result<Self, SessionError> {
        let mut s = Session::new(seed)?;
        for ev in events {
            if ev.version != s.version + 1 {
                return Err(SessionError::Replay {
                    message: format!("event version {} follows {}", ev.version, s.version),
                });
            }
            s.apply(Some(s.version), ev.mutation, ev.at)?;
        }
        Ok(s)
    }

    pub fn id(&self) -> &str {
        &self.seed.id
    }
    pub fn seed(&self) -> &SessionSeed {
        &self.seed
    }
    pub fn version(&self) -> u64 {
        self.version
    }
    pub fn state(&self) -> &SessionState {
        &self.state
    }
    pub fn tables(&self) -> &[IndicatorTable] {
        &self.state.tables
    }
    pub fn config(&self) -> &CompassConfig {
        &self.state.config
    }
    pub fn events(&self) -> &[SessionEvent] {
        &self.log
    }
    pub fn is_sphere_triple(&self) -> bool {
        self.state.tables.len() == 3
    }

    /// Applies `mutation` atomically. With `expected_version` set, a stale
    /// version is rejected and nothing changes.
    pub fn apply(
        &mut self,
        expected_version: Option<u64>,
        mutation: Mutation,
        at: DateTime<Utc>,
    ) -> Result<u64, SessionError> {
        if let Some(expected) = expected_version {
            if expected != self.version {
                return Err(SessionError::VersionConflict { expected, actual: self.version });
            }
        }
        let next = apply_to_state(&self.state, &mutation)?;
        self.state = next;
        self.version += 1;
        self.log.push(SessionEvent { version: self.version, at, mutation });
        Ok(self.version)
    }

    /// State after `mutations`, leaving this session untouched.
    pub fn what_if(&self, mutations: &[Mutation]) -> Result<SessionState, SessionError> {
        let mut state = self.state.clone();
        for m in mutations {
            state = apply_to_state(&state, m)?;
        }
        Ok(state)
    }

    pub fn readings(&self) -> Result<Vec<CompassReading>, AggregationError> {
        self.state.readings()
    }

    pub fn ecological(&self) -> Result<Option<EcologicalCompass>, SessionError> {
        self.state.ecological()
    }
}

impl SessionState {
    pub fn readings(&self) -> Result<Vec<CompassReading>, AggregationError> {
        self.tables.iter().map(|t| compass_reading(t, &self.config)).collect()
    }

    pub fn table(&self, sphere: Sphere) -> Option<&IndicatorTable> {
        self.tables.iter().find(|t| t.sphere() == sphere)
    }

    /// The composed compass when this state holds a sphere triple.
    pub fn ecological(&self) -> Result<Option<EcologicalCompass>, SessionError> {
        if self.tables.len() != 3 {
            return Ok(None);
        }
        let readings = self.readings().map_err(config_error)?;
        let readings: [CompassReading; 3] = readings.try_into().expect("three tables");
        compose_spheres(readings, self.weights, SphereArrowSource::Final, &self.config)
            .map(Some)
            .map_err(|e: EcologicalError| SessionError::Config { message: e.to_string() })
    }

    fn locate(&self, id: &IndicatorId) -> Result<(usize, &Indicator), SessionError> {
        self.tables
            .iter()
            .enumerate()
            .find_map(|(i, t)| t.get(id).map(|ind| (i, ind)))
            .ok_or_else(|| SessionError::UnknownIndicator { id: id.clone() })
    }

    fn id_taken(&self, id: &IndicatorId) -> bool {
        self.tables.iter().any(|t| t.contains(id))
    }
}

fn config_error(e: AggregationError) -> SessionError {
    SessionError::Config { message: e.to_string() }
}

fn check_shape(tables: &[IndicatorTable]) -> Result<(), SessionError> {
    match tables.len() {
        1 => {}
        3 => {
            let spheres: Vec<Sphere> = tables.iter().map(|t| t.sphere()).collect();
            if spheres != Sphere::NESTED {
                return Err(SessionError::InvalidShape {
                    message: "a sphere triple must be ordered eco, socio, econo".into(),
                });
            }
        }
        n => {
            return Err(SessionError::InvalidShape {
                message: format!("expected one table or three sphere tables, got {n}"),
            })
        }
    }
    let mut seen = BTreeSet::new();
    for ind in tables.iter().flat_map(|t| t.indicators()) {
        if !seen.insert(ind.id().clone()) {
            return Err(SessionError::DuplicateId { id: ind.id().clone() });
        }
    }
    Ok(())
}

fn validated(draft: IndicatorDraft) -> Result<Indicator, SessionError> {
    let id = draft.id.clone();
    draft.validate().map_err(|errors| SessionError::Validation { id, errors })
}

fn table_error(e: TableError) -> SessionError {
    match e {
        TableError::DuplicateId(id) => SessionError::DuplicateId { id },
        other => SessionError::InvalidShape { message: other.to_string() },
    }
}

fn apply_to_state(state: &SessionState, mutation: &Mutation) -> Result<SessionState, SessionError> {
    let mut next = state.clone();
    match mutation {
        Mutation::AddIndicator { sphere, indicator } => {
            let slot = match (sphere, next.tables.len()) {
                (None, 1) => 0,
                (None, _) => return Err(SessionError::SphereRequired),
                (Some(s), _) => next
                    .tables
                    .iter()
                    .position(|t| t.sphere() == *s)
                    .ok_or(SessionError::UnknownSphere { sphere: *s })?,
            };
            if next.id_taken(&indicator.id) {
                return Err(SessionError::DuplicateId { id: indicator.id.clone() });
            }
            let ind = validated(indicator.clone())?;
            next.tables[slot].push(ind).map_err(table_error)?;
        }
        Mutation::AdjustIndicator { id, offset, raw_length } => {
            let (slot, current) = next.locate(id)?;
            let mut draft = current.draft().clone();
            draft.offset = *offset;
            draft.raw_length = *raw_length;
            let ind = validated(draft)?;
            next.tables[slot].replace(ind);
        }
        Mutation::SplitIndicator { id, parts } => {
            let (slot, parent) = next.locate(id)?;
            let parent = parent.clone();
            let [a, b] = parts;
            for part in [a, b] {
                if part.name.trim().is_empty() {
                    return Err(SessionError::DuplicateName { name: part.name.clone() });
                }
            }
            if a.name.trim() == b.name.trim() {
                return Err(SessionError::DuplicateName { name: a.name.clone() });
            }
            let ids = [
                a.id.clone().unwrap_or_else(|| IndicatorId::new(format!("{id}.a"))),
                b.id.clone().unwrap_or_else(|| IndicatorId::new(format!("{id}.b"))),
            ];
            if ids[0] == ids[1] {
                return Err(SessionError::DuplicateId { id: ids[0].clone() });
            }
            next.tables[slot].remove(id);
            next.ballots.remove(id);
            for (part, child_id) in [a, b].into_iter().zip(ids) {
                if next.id_taken(&child_id) {
                    return Err(SessionError::DuplicateId { id: child_id });
                }
                let draft = IndicatorDraft {
                    id: child_id,
                    name: part.name.clone(),
                    quality: part.quality,
                    offset: part.offset,
                    raw_length: part.raw_length,
                    notes: parent.notes().to_string(),
                    boundary_ok: false,
                    timestamp: parent.timestamp(),
                };
                let ind = validated(draft)?;
                next.tables[slot].push(ind).map_err(table_error)?;
            }
        }
        Mutation::RemoveIndicator { id } => {
            let (slot, _) = next.locate(id)?;
            next.tables[slot].remove(id);
            next.ballots.remove(id);
        }
        Mutation::CastBallots { id, ballots } => {
            let (slot, current) = next.locate(id)?;
            let mut all = next.ballots.get(id).cloned().unwrap_or_default();
            all.extend(ballots.iter().cloned());
            let offset = angle_from_votes(&all, current.quality(), &next.config.layout)?;
            let mut draft = current.draft().clone();
            draft.offset = offset;
            let ind = validated(draft)?;
            next.tables[slot].replace(ind);
            next.participants.extend(ballots.iter().map(|b| b.voter.clone()));
            next.ballots.insert(id.clone(), all);
        }
        Mutation::SetConfig { config, weights } => {
            config.validate().map_err(config_error)?;
            next.config = *config;
            if let Some(w) = weights {
                w.check_positive().map_err(|e| SessionError::Config { message: e.to_string() })?;
                next.weights = *w;
            }
        }
        Mutation::Join { participant } => {
            next.participants.insert(participant.clone());
        }
    }
    Ok(next)
}

fn commit(session: &Session, mutation: Mutation) -> Result<Session, SessionError> {
    let mut s = session.clone();
    s.apply(Some(s.version()), mutation, Utc::now())?;
    Ok(s)
}

/// Replaces indicator `id` with two more specific statistics.
pub fn split_indicator(
    session: &Session,
    id: &IndicatorId,
    parts: [SplitPart; 2],
) -> Result<Session, SessionError> {
    commit(session, Mutation::SplitIndicator { id: id.clone(), parts })
}

/// Moves and/or resizes indicator `id` after discussion.
pub fn consensus_adjust(
    session: &Session,
    id: &IndicatorId,
    new_offset: f64,
    new_raw_length: f64,
) -> Result<Session, SessionError> {
    commit(
        session,
        Mutation::AdjustIndicator { id: id.clone(), offset: new_offset, raw_length: new_raw_length },
    )
}
