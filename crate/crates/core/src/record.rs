//! Game records: JSON serialization, replay and ingestion.
//!
//! A record lists every phase with the orders each power submitted, the
//! per-order results and the state at the start of the following phase.
//! Replaying the orders from the opening position must reproduce every
//! snapshot exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjudicator::Verdict;
use crate::game::{Game, OrderSet, Outcome, Rules};
use crate::map::{LocId, MapGraph, UnitKind};
use crate::order::{parse_order, InvalidReason, Order};
use crate::power::Power;
use crate::state::{Dislodged, GameState, Phase, Unit};

pub const RECORD_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResultEntry {
    pub power: Power,
    pub order: String,
    /// An adjudication outcome (`succeeds`, `bounced`, ...) or
    /// `invalid:<reason>` for orders rejected at validation.
    pub result: String,
    #[serde(default, skip_serializing_if = "is_false")]
    pub dislodged: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub defaulted: bool,
}

fn is_false(b: &bool) -> bool {
    !*b
}

impl ResultEntry {
    pub fn from_verdict(map: &MapGraph, v: &Verdict) -> Self {
        ResultEntry {
            power: v.power,
            order: v.order.to_text(map),
            result: enum_name(&v.outcome),
            dislodged: v.dislodged,
            defaulted: v.defaulted,
        }
    }

    pub fn invalid(map: &MapGraph, power: Power, order: &Order, reason: InvalidReason) -> Self {
        ResultEntry {
            power,
            order: order.to_text(map),
            result: format!("invalid:{}", enum_name(&reason)),
            dislodged: false,
            defaulted: false,
        }
    }
}

fn enum_name<T: Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DislodgedEntry {
    pub power: Power,
    pub unit: String,
    /// Attacker's province; absent when the attack was convoyed.
    pub from: Option<String>,
}

/// Serializable game state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub phase: String,
    pub units: BTreeMap<Power, Vec<String>>,
    pub centers: BTreeMap<Power, Vec<String>>,
    #[serde(default)]
    pub dislodged: Vec<DislodgedEntry>,
    #[serde(default)]
    pub standoffs: Vec<String>,
}

fn unit_text(map: &MapGraph, u: &Unit) -> String {
    format!("{} {}", u.kind.letter(), map.name(u.loc))
}

fn parse_unit(map: &MapGraph, owner: Power, text: &str) -> Result<Unit, String> {
    let (k, loc) = text
        .split_once(' ')
        .ok_or_else(|| format!("malformed unit `{text}`"))?;
    let kind = match k {
        "A" => UnitKind::Army,
        "F" => UnitKind::Fleet,
        _ => return Err(format!("malformed unit `{text}`")),
    };
    let loc = map.loc(loc).map_err(|e| e.to_string())?;
    Ok(Unit { kind, loc, owner })
}

fn parse_loc(map: &MapGraph, text: &str) -> Result<LocId, String> {
    map.loc(text).map_err(|e| e.to_string())
}

impl StateSnapshot {
    pub fn of(map: &MapGraph, state: &GameState) -> Self {
        let mut units: BTreeMap<Power, Vec<String>> = BTreeMap::new();
        for u in state.units() {
            units.entry(u.owner).or_default().push(unit_text(map, u));
        }
        let mut centers: BTreeMap<Power, Vec<String>> = BTreeMap::new();
        for p in Power::ALL {
            let owned: Vec<String> = state
                .owned_centers(p)
                .map(|l| map.name(l).to_string())
                .collect();
            if !owned.is_empty() {
                centers.insert(p, owned);
            }
        }
        StateSnapshot {
            phase: state.phase().code(),
            units,
            centers,
            dislodged: state
                .dislodged()
                .iter()
                .map(|d| DislodgedEntry {
                    power: d.unit.owner,
                    unit: unit_text(map, &d.unit),
                    from: d.attacker_from.map(|l| map.name(l).to_string()),
                })
                .collect(),
            standoffs: state
                .standoffs()
                .iter()
                .map(|l| map.name(*l).to_string())
                .collect(),
        }
    }

    pub fn to_state(&self, map: &MapGraph) -> Result<GameState, String> {
        let phase: Phase = self.phase.parse().map_err(|e| format!("{e}"))?;
        let mut units = Vec::new();
        for (p, list) in &self.units {
            for u in list {
                units.push(parse_unit(map, *p, u)?);
            }
        }
        let mut owner = vec![None; map.len()];
        for (p, list) in &self.centers {
            for c in list {
                owner[map.province(parse_loc(map, c)?).index()] = Some(*p);
            }
        }
        let mut dislodged = Vec::new();
        for d in &self.dislodged {
            dislodged.push(Dislodged {
                unit: parse_unit(map, d.power, &d.unit)?,
                attacker_from: d.from.as_deref().map(|f| parse_loc(map, f)).transpose()?,
            });
        }
        let standoffs = self
            .standoffs
            .iter()
            .map(|s| parse_loc(map, s))
            .collect::<Result<Vec<_>, _>>()?;
        GameState::try_new(map, phase, units, dislodged, owner, standoffs)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub name: String,
    pub orders: BTreeMap<Power, Vec<String>>,
    pub results: Vec<ResultEntry>,
    /// State at the start of the next phase.
    pub state: StateSnapshot,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRecord {
    pub version: u32,
    pub map: String,
    pub rules: Rules,
    pub phases: Vec<PhaseRecord>,
    pub outcome: Outcome,
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("malformed record: {0}")]
    Schema(String),
    #[error("record is for map `{0}`")]
    WrongMap(String),
    #[error("phase {index} ({phase}): {message}")]
    Divergence {
        index: usize,
        phase: String,
        message: String,
    },
}

impl GameRecord {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<GameRecord, RecordError> {
        let rec: GameRecord =
            serde_json::from_str(text).map_err(|e| RecordError::Schema(e.to_string()))?;
        if rec.version != RECORD_VERSION {
            return Err(RecordError::Schema(format!(
                "unsupported version {}",
                rec.version
            )));
        }
        Ok(rec)
    }

    /// States at the start of each phase, beginning with the opening.
    pub fn states(&self, map: &MapGraph) -> Result<Vec<GameState>, RecordError> {
        let mut out = vec![crate::state::initial_state(map)];
        for (i, ph) in self.phases.iter().enumerate() {
            out.push(
                ph.state
                    .to_state(map)
                    .map_err(|m| RecordError::Divergence {
                        index: i,
                        phase: ph.name.clone(),
                        message: m,
                    })?,
            );
        }
        Ok(out)
    }

    /// Orders of one phase parsed back into the AST. Unparsable strings are
    /// returned separately.
    pub fn parsed_orders(&self, map: &MapGraph, index: usize) -> (OrderSet, Vec<(Power, String)>) {
        let mut set = OrderSet::new();
        let mut bad = Vec::new();
        for (p, list) in &self.phases[index].orders {
            let entry = set.entry(*p).or_default();
            for text in list {
                match parse_order(map, text) {
                    Ok(o) => entry.push(o),
                    Err(_) => bad.push((*p, text.clone())),
                }
            }
        }
        (set, bad)
    }
}

/// Replays a record's orders from the opening and returns the regenerated
/// record. Fails at the first phase whose name or resulting state differs.
pub fn replay(map: &MapGraph, record: &GameRecord) -> Result<GameRecord, RecordError> {
    if record.map != map.name_of_map() {
        return Err(RecordError::WrongMap(record.map.clone()));
    }
    let mut game = Game::new(map, record.rules);
    for (i, ph) in record.phases.iter().enumerate() {
        let current = game.state().phase().code();
        if current != ph.name {
            return Err(RecordError::Divergence {
                index: i,
                phase: ph.name.clone(),
                message: format!("engine is at {current}"),
            });
        }
        let (orders, _) = record.parsed_orders(map, i);
        game.step(&orders).map_err(|e| RecordError::Divergence {
            index: i,
            phase: ph.name.clone(),
            message: e.to_string(),
        })?;
        let produced = &game.phases()[i].state;
        if produced != &ph.state {
            return Err(RecordError::Divergence {
                index: i,
                phase: ph.name.clone(),
                message: first_difference(produced, &ph.state),
            });
        }
    }
    if game.outcome() != &record.outcome {
        let last = record.phases.len().saturating_sub(1);
        return Err(RecordError::Divergence {
            index: last,
            phase: record
                .phases
                .last()
                .map(|p| p.name.clone())
                .unwrap_or_default(),
            message: "final outcome differs".into(),
        });
    }
    Ok(game.record())
}

fn first_difference(a: &StateSnapshot, b: &StateSnapshot) -> String {
    if a.phase != b.phase {
        return format!("next phase {} but record says {}", a.phase, b.phase);
    }
    if a.units != b.units {
        return "unit positions differ".into();
    }
    if a.centers != b.centers {
        return "center ownership differs".into();
    }
    if a.dislodged != b.dislodged {
        return "dislodged units differ".into();
    }
    "standoffs differ".into()
}

/// An order in an ingested record that the engine did not accept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DivergenceNote {
    pub phase: String,
    pub power: Power,
    pub order: String,
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct IngestReport {
    /// The record as the engine regenerates it.
    pub record: GameRecord,
    pub notes: Vec<DivergenceNote>,
}

/// Re-validates every phase of a record. Illegal or unparsable orders are
/// dropped and noted; the game is rejected if the states no longer replay.
pub fn ingest(map: &MapGraph, text: &str) -> Result<IngestReport, RecordError> {
    let record = GameRecord::from_json(text)?;
    let regenerated = replay(map, &record)?;
    let mut notes = Vec::new();
    for (i, ph) in regenerated.phases.iter().enumerate() {
        let (_, bad) = record.parsed_orders(map, i);
        for (power, order) in bad {
            notes.push(DivergenceNote {
                phase: ph.name.clone(),
                power,
                order,
                reason: "unparsable".into(),
            });
        }
        for r in &ph.results {
            if let Some(reason) = r.result.strip_prefix("invalid:") {
                notes.push(DivergenceNote {
                    phase: ph.name.clone(),
                    power: r.power,
                    order: r.order.clone(),
                    reason: reason.to_string(),
                });
            }
        }
    }
    Ok(IngestReport {
        record: regenerated,
        notes,
    })
}
