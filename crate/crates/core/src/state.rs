//! Game state and the phase calendar.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::map::{LocId, MapGraph, UnitKind, NUM_LOCATIONS};
use crate::power::Power;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Season {
    Spring,
    Fall,
    Winter,
}

impl Season {
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PhaseKind {
    Movement,
    Retreat,
    Adjustment,
}

/// A phase of the calendar, e.g. `S1901M`, `F1903R`, `W1904A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Phase {
    pub year: u16,
    pub season: Season,
    pub kind: PhaseKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StateError {
    #[error("invalid phase code `{0}`")]
    BadPhaseCode(String),
    #[error("operation requires a {expected:?} phase, state is in {actual}")]
    WrongPhase { expected: PhaseKind, actual: Phase },
}

impl Phase {
    pub const fn new(year: u16, season: Season, kind: PhaseKind) -> Phase {
        Phase { year, season, kind }
    }

    pub const fn opening() -> Phase {
        Phase::new(1901, Season::Spring, PhaseKind::Movement)
    }

    pub fn code(&self) -> String {
        let s = match self.season {
            Season::Spring => 'S',
            Season::Fall => 'F',
            Season::Winter => 'W',
        };
        let k = match self.kind {
            PhaseKind::Movement => 'M',
            PhaseKind::Retreat => 'R',
            PhaseKind::Adjustment => 'A',
        };
        format!("{s}{}{k}", self.year)
    }

    /// Next phase of the full five-phase calendar, ignoring skipping.
    pub fn successor(&self) -> Phase {
        use PhaseKind::*;
        use Season::*;
        match (self.season, self.kind) {
            (Spring, Movement) => Phase::new(self.year, Spring, Retreat),
            (Spring, _) => Phase::new(self.year, Fall, Movement),
            (Fall, Movement) => Phase::new(self.year, Fall, Retreat),
            (Fall, _) => Phase::new(self.year, Winter, Adjustment),
            (Winter, _) => Phase::new(self.year + 1, Spring, Movement),
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code())
    }
}

impl FromStr for Phase {
    type Err = StateError;

    fn from_str(code: &str) -> Result<Self, Self::Err> {
        let bad = || StateError::BadPhaseCode(code.to_string());
        let b = code.as_bytes();
        if b.len() < 3 || !code.is_ascii() {
            return Err(bad());
        }
        let season = match b[0] {
            b'S' => Season::Spring,
            b'F' => Season::Fall,
            b'W' => Season::Winter,
            _ => return Err(bad()),
        };
        let kind = match b[b.len() - 1] {
            b'M' => PhaseKind::Movement,
            b'R' => PhaseKind::Retreat,
            b'A' => PhaseKind::Adjustment,
            _ => return Err(bad()),
        };
        let digits = &code[1..code.len() - 1];
        if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let year: u16 = digits.parse().map_err(|_| bad())?;
        if year < 1901 {
            return Err(bad());
        }
        let winter = season == Season::Winter;
        if winter != (kind == PhaseKind::Adjustment) {
            return Err(bad());
        }
        Ok(Phase { year, season, kind })
    }
}

impl Serialize for Phase {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.code())
    }
}

impl<'de> Deserialize<'de> for Phase {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Unit {
    pub kind: UnitKind,
    pub loc: LocId,
    pub owner: Power,
}

/// A unit forced out of its province, waiting for a retreat order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dislodged {
    pub unit: Unit,
    /// Province the attacker came from. `None` when the attack was convoyed,
    /// in which case retreating there is allowed.
    pub attacker_from: Option<LocId>,
}

/// Immutable snapshot of a game between phases.
///
/// Units are kept sorted by location; an occupancy table indexed by province
/// is maintained alongside.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GameState {
    phase: Phase,
    units: Vec<Unit>,
    dislodged: Vec<Dislodged>,
    sc_owner: Vec<Option<Power>>,
    standoffs: Vec<LocId>,
    occupant: Vec<Option<u8>>,
}

impl fmt::Debug for GameState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameState")
            .field("phase", &self.phase.code())
            .field("units", &self.units)
            .field("dislodged", &self.dislodged)
            .field("standoffs", &self.standoffs)
            .finish()
    }
}

impl GameState {
    /// Builds a state, sorting and indexing units.
    ///
    /// Panics if two units share a province or a unit stands where its kind
    /// cannot; callers building states from untrusted input should use
    /// [`GameState::try_new`].
    pub fn new(
        map: &MapGraph,
        phase: Phase,
        units: Vec<Unit>,
        dislodged: Vec<Dislodged>,
        sc_owner: Vec<Option<Power>>,
        standoffs: Vec<LocId>,
    ) -> GameState {
        GameState::try_new(map, phase, units, dislodged, sc_owner, standoffs)
            .expect("valid game state")
    }

    pub fn try_new(
        map: &MapGraph,
        phase: Phase,
        mut units: Vec<Unit>,
        mut dislodged: Vec<Dislodged>,
        sc_owner: Vec<Option<Power>>,
        mut standoffs: Vec<LocId>,
    ) -> Result<GameState, String> {
        units.sort();
        dislodged.sort();
        standoffs.sort();
        standoffs.dedup();
        if sc_owner.len() != map.len() {
            return Err("ownership table has the wrong length".into());
        }
        let mut occupant = vec![None; map.len()];
        for (i, u) in units.iter().enumerate() {
            if !map.can_occupy(u.loc, u.kind) {
                return Err(format!(
                    "{} {} cannot stand on {}",
                    u.owner,
                    u.kind.letter(),
                    map.name(u.loc)
                ));
            }
            let slot = &mut occupant[map.province(u.loc).index()];
            if slot.is_some() {
                return Err(format!("two units in {}", map.name(map.province(u.loc))));
            }
            *slot = Some(i as u8);
        }
        for (loc, owner) in sc_owner.iter().enumerate() {
            if owner.is_some() && !map.is_supply_center(LocId(loc as u8)) {
                return Err(format!(
                    "{} is owned but is not a supply center",
                    map.name(LocId(loc as u8))
                ));
            }
        }
        if !dislodged.is_empty() && phase.kind != PhaseKind::Retreat {
            return Err(format!("dislodged units outside a retreat phase ({phase})"));
        }
        Ok(GameState {
            phase,
            units,
            dislodged,
            sc_owner,
            standoffs,
            occupant,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn units_of(&self, power: Power) -> impl Iterator<Item = &Unit> + '_ {
        self.units.iter().filter(move |u| u.owner == power)
    }

    pub fn dislodged(&self) -> &[Dislodged] {
        &self.dislodged
    }

    pub fn standoffs(&self) -> &[LocId] {
        &self.standoffs
    }

    pub fn is_standoff(&self, province: LocId) -> bool {
        self.standoffs.binary_search(&province).is_ok()
    }

    /// The (non-dislodged) unit occupying `province`, if any.
    #[inline]
    pub fn unit_in(&self, map: &MapGraph, loc: LocId) -> Option<&Unit> {
        self.occupant[map.province(loc).index()].map(|i| &self.units[i as usize])
    }

    /// Owner of a supply center province.
    pub fn sc_owner(&self, map: &MapGraph, loc: LocId) -> Option<Power> {
        self.sc_owner[map.province(loc).index()]
    }

    pub fn ownership(&self) -> &[Option<Power>] {
        &self.sc_owner
    }

    pub fn sc_count(&self, power: Power) -> usize {
        self.sc_owner.iter().filter(|o| **o == Some(power)).count()
    }

    pub fn unit_count(&self, power: Power) -> usize {
        self.units_of(power).count()
    }

    pub fn owned_centers(&self, power: Power) -> impl Iterator<Item = LocId> + '_ {
        self.sc_owner
            .iter()
            .enumerate()
            .filter(move |(_, o)| **o == Some(power))
            .map(|(i, _)| LocId(i as u8))
    }

    /// Eliminated powers own no supply centers and have no units left.
    pub fn is_eliminated(&self, power: Power) -> bool {
        self.sc_count(power) == 0
            && self.unit_count(power) == 0
            && !self.dislodged.iter().any(|d| d.unit.owner == power)
    }
}

/// Standard opening position, phase `S1901M`.
pub fn initial_state(map: &MapGraph) -> GameState {
    let units = map
        .opening_units()
        .iter()
        .map(|&(owner, kind, loc)| Unit { kind, loc, owner })
        .collect();
    let mut owner = vec![None; map.len()];
    for p in Power::ALL {
        for h in map.home_centers(p) {
            owner[h.index()] = Some(p);
        }
    }
    GameState::new(map, Phase::opening(), units, Vec::new(), owner, Vec::new())
}

/// Home centers where `power` could build right now: owned and unoccupied.
pub fn build_sites(map: &MapGraph, state: &GameState, power: Power) -> Vec<LocId> {
    map.home_centers(power)
        .iter()
        .copied()
        .filter(|&h| state.sc_owner(map, h) == Some(power) && state.unit_in(map, h).is_none())
        .collect()
}

/// Adjustment for `power`: positive means builds, negative means disbands.
/// Builds are capped by the number of free home centers.
pub fn build_count(map: &MapGraph, state: &GameState, power: Power) -> Result<i32, StateError> {
    if state.phase.kind != PhaseKind::Adjustment {
        return Err(StateError::WrongPhase {
            expected: PhaseKind::Adjustment,
            actual: state.phase,
        });
    }
    Ok(raw_build_count(map, state, power))
}

pub(crate) fn raw_build_count(map: &MapGraph, state: &GameState, power: Power) -> i32 {
    let delta = state.sc_count(power) as i32 - state.unit_count(power) as i32;
    if delta > 0 {
        delta.min(build_sites(map, state, power).len() as i32)
    } else {
        delta
    }
}

/// Locations that need an order from `power` in the current phase.
///
/// In adjustment phases this is the pool to choose from: build sites when
/// building, every unit when disbanding. See [`orders_required`] for how many
/// of them must actually receive an order.
pub fn units_requiring_orders(map: &MapGraph, state: &GameState, power: Power) -> Vec<LocId> {
    match state.phase.kind {
        PhaseKind::Movement => state.units_of(power).map(|u| u.loc).collect(),
        PhaseKind::Retreat => state
            .dislodged
            .iter()
            .filter(|d| d.unit.owner == power)
            .map(|d| d.unit.loc)
            .collect(),
        PhaseKind::Adjustment => {
            let n = raw_build_count(map, state, power);
            if n > 0 {
                build_sites(map, state, power)
            } else if n < 0 {
                state.units_of(power).map(|u| u.loc).collect()
            } else {
                Vec::new()
            }
        }
    }
}

/// How many of [`units_requiring_orders`] must receive an order.
pub fn orders_required(map: &MapGraph, state: &GameState, power: Power) -> usize {
    match state.phase.kind {
        PhaseKind::Adjustment => raw_build_count(map, state, power).unsigned_abs() as usize,
        _ => units_requiring_orders(map, state, power).len(),
    }
}

/// Transfers every supply center occupied by a foreign unit to the occupier.
pub fn update_ownership(map: &MapGraph, state: &GameState) -> GameState {
    let mut owner = state.sc_owner.clone();
    for u in &state.units {
        let p = map.province(u.loc);
        if map.is_supply_center(p) {
            owner[p.index()] = Some(u.owner);
        }
    }
    GameState::new(
        map,
        state.phase,
        state.units.clone(),
        state.dislodged.clone(),
        owner,
        state.standoffs.clone(),
    )
}

/// Supply centers a power controls counting occupation immediately: a center
/// it occupies counts, an owned center occupied by someone else does not.
pub fn occupancy_sc_count(map: &MapGraph, state: &GameState, power: Power) -> usize {
    map.supply_centers()
        .filter(|&sc| match state.unit_in(map, sc) {
            Some(u) => u.owner == power,
            None => state.sc_owner(map, sc) == Some(power),
        })
        .count()
}

const _: () = assert!(NUM_LOCATIONS <= u8::MAX as usize);
