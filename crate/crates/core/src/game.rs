//! Full-game loop: validation, adjudication, termination, scoring and rewards.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::adjudicator::{adjudicate, Resolution};
use crate::map::MapGraph;
use crate::order::{validate_in, Order, OrderContext, Validity};
use crate::power::Power;
use crate::record::{GameRecord, PhaseRecord, ResultEntry, StateSnapshot, RECORD_VERSION};
use crate::state::{initial_state, occupancy_sc_count, GameState, PhaseKind};

/// Orders submitted for one phase, keyed by power.
pub type OrderSet = BTreeMap<Power, Vec<Order>>;

/// Total supply centers on the standard map.
pub const TOTAL_CENTERS: f64 = 34.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Rules {
    /// Centers needed for a solo victory.
    pub solo_centers: usize,
    /// Last year played; the game is drawn among survivors once it ends.
    pub year_cap: u16,
}

impl Default for Rules {
    fn default() -> Self {
        Rules {
            solo_centers: 18,
            year_cap: 1935,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum Outcome {
    Ongoing,
    Solo { winner: Power },
    Draw { survivors: Vec<Power> },
}

impl Outcome {
    pub fn is_over(&self) -> bool {
        !matches!(self, Outcome::Ongoing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringSystem {
    /// Solo scores everything; a draw splits the pot equally among survivors.
    DrawBased,
    /// Solo scores everything; a draw splits the pot by center count.
    ScCount,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("the game is over")]
    GameOver,
    #[error("the game is still in progress")]
    Ongoing,
}

/// Survivors: powers with a unit or a supply center left.
pub fn survivors(state: &GameState) -> Vec<Power> {
    Power::ALL
        .into_iter()
        .filter(|p| !state.is_eliminated(*p))
        .collect()
}

/// Result of the game after reaching `state`.
pub fn outcome(state: &GameState, rules: &Rules) -> Outcome {
    if let Some(p) = Power::ALL
        .into_iter()
        .find(|p| state.sc_count(*p) >= rules.solo_centers)
    {
        return Outcome::Solo { winner: p };
    }
    if state.phase().year > rules.year_cap {
        return Outcome::Draw {
            survivors: survivors(state),
        };
    }
    Outcome::Ongoing
}

/// Points per power at the end of a game, indexed by [`Power::index`].
pub fn score(
    state: &GameState,
    outcome: &Outcome,
    system: ScoringSystem,
) -> Result<[f64; 7], EngineError> {
    let mut points = [0.0; 7];
    match outcome {
        Outcome::Ongoing => return Err(EngineError::Ongoing),
        Outcome::Solo { winner } => points[winner.index()] = TOTAL_CENTERS,
        Outcome::Draw { survivors } => match system {
            ScoringSystem::DrawBased => {
                for p in survivors {
                    points[p.index()] = TOTAL_CENTERS / survivors.len() as f64;
                }
            }
            ScoringSystem::ScCount => {
                let total: usize = survivors.iter().map(|p| state.sc_count(*p)).sum();
                if total > 0 {
                    for p in survivors {
                        points[p.index()] =
                            TOTAL_CENTERS * state.sc_count(*p) as f64 / total as f64;
                    }
                }
            }
        },
    }
    Ok(points)
}

/// Reward for `power` over the transition `prev -> next`: the average of the
/// change in occupied-or-owned centers and, at the end of the game, the
/// center-count score.
pub fn reward(
    map: &MapGraph,
    prev: &GameState,
    next: &GameState,
    power: Power,
    outcome: &Outcome,
) -> f64 {
    let local =
        occupancy_sc_count(map, next, power) as f64 - occupancy_sc_count(map, prev, power) as f64;
    let terminal = match score(next, outcome, ScoringSystem::ScCount) {
        Ok(points) => points[power.index()],
        Err(_) => 0.0,
    };
    (local + terminal) / 2.0
}

/// Orders of the most recent movement phase and the state they were given in.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MovementOrders {
    pub state: GameState,
    pub orders: Vec<(Power, Order)>,
}

/// What one call to [`Game::step`] did.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub resolution: Resolution,
    /// Orders rejected at validation, with the power that sent them.
    pub rejected: Vec<(Power, Order, crate::order::InvalidReason)>,
}

/// A game in progress, recording every phase as it is played.
#[derive(Debug, Clone)]
pub struct Game<'m> {
    map: &'m MapGraph,
    rules: Rules,
    state: GameState,
    outcome: Outcome,
    last_movement: Option<MovementOrders>,
    phases: Vec<PhaseRecord>,
}

impl<'m> Game<'m> {
    pub fn new(map: &'m MapGraph, rules: Rules) -> Self {
        Game::from_state(map, rules, initial_state(map))
    }

    /// Starts from an arbitrary position. Records of such games replay only
    /// from the same position.
    pub fn from_state(map: &'m MapGraph, rules: Rules, state: GameState) -> Self {
        let outcome = outcome(&state, &rules);
        Game {
            map,
            rules,
            state,
            outcome,
            last_movement: None,
            phases: Vec::new(),
        }
    }

    pub fn map(&self) -> &'m MapGraph {
        self.map
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    pub fn outcome(&self) -> &Outcome {
        &self.outcome
    }

    pub fn is_over(&self) -> bool {
        self.outcome.is_over()
    }

    pub fn last_movement(&self) -> Option<&MovementOrders> {
        self.last_movement.as_ref()
    }

    pub fn phases(&self) -> &[PhaseRecord] {
        &self.phases
    }

    /// Validates, resolves and applies one phase. Invalid orders are dropped
    /// (their units hold or disband by default).
    pub fn step(&mut self, orders: &OrderSet) -> Result<StepReport, EngineError> {
        if self.is_over() {
            return Err(EngineError::GameOver);
        }
        let ctx = OrderContext::new(self.map, &self.state);
        let mut accepted = Vec::new();
        let mut tagged = Vec::new();
        let mut rejected = Vec::new();
        let mut invalid_entries = Vec::new();
        for (&power, list) in orders {
            let v = validate_in(&ctx, power, list);
            for (o, validity) in v.entries {
                match validity {
                    Validity::Valid => {
                        accepted.push(o);
                        tagged.push((power, o));
                    }
                    Validity::Invalid(reason) => {
                        rejected.push((power, o, reason));
                        invalid_entries.push(ResultEntry::invalid(self.map, power, &o, reason));
                    }
                }
            }
        }
        let resolution =
            adjudicate(self.map, &self.state, &accepted).expect("validated orders adjudicate");
        if self.state.phase().kind == PhaseKind::Movement {
            self.last_movement = Some(MovementOrders {
                state: self.state.clone(),
                orders: tagged,
            });
        }
        let mut results: Vec<ResultEntry> = resolution
            .verdicts
            .iter()
            .map(|v| ResultEntry::from_verdict(self.map, v))
            .collect();
        results.extend(invalid_entries);
        self.phases.push(PhaseRecord {
            name: self.state.phase().code(),
            orders: orders
                .iter()
                .map(|(p, list)| (*p, list.iter().map(|o| o.to_text(self.map)).collect()))
                .collect(),
            results,
            state: StateSnapshot::of(self.map, &resolution.next),
        });
        self.state = resolution.next.clone();
        self.outcome = outcome(&self.state, &self.rules);
        Ok(StepReport {
            resolution,
            rejected,
        })
    }

    pub fn record(&self) -> GameRecord {
        GameRecord {
            version: RECORD_VERSION,
            map: self.map.name_of_map().to_string(),
            rules: self.rules,
            phases: self.phases.clone(),
            outcome: self.outcome.clone(),
        }
    }
}
