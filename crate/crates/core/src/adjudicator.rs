//! Order resolution for movement, retreat and adjustment phases.
//!
//! Movement uses a guess-and-check recursive resolver over one boolean
//! decision per non-holding unit (move succeeds, support given, convoying
//! fleet not dislodged). When a dependency cycle admits two answers or none,
//! a backup rule decides it: if a convoying fleet is part of the cycle, the
//! armies relying on those convoys are treated as holding; otherwise the
//! cycle is a rotation and every move in it succeeds.

use serde::{Deserialize, Serialize};

use crate::map::{LocId, MapGraph, UnitKind};
use crate::order::{validate_in, InvalidReason, Order, OrderContext, UnitRef, Validity};
use crate::power::Power;
use crate::state::{raw_build_count, Dislodged, GameState, Phase, PhaseKind, Season, Unit};

/// What happened to one order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderOutcome {
    Succeeds,
    /// A move or retreat that did not reach its destination.
    Bounced,
    /// Support cut by an attack on the supporter.
    Cut,
    /// Support or convoy for an order that was not given.
    Void,
    /// Convoyed move without an intact chain of fleets.
    NoConvoy,
    /// Support or convoy that failed because its unit was dislodged, or a
    /// hold that was overpowered.
    Dislodged,
}

/// Result line for one order (explicit or defaulted).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Verdict {
    pub power: Power,
    pub order: Order,
    pub outcome: OrderOutcome,
    /// The ordered unit was dislodged this phase.
    pub dislodged: bool,
    /// The engine supplied this order because none was given.
    pub defaulted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolution {
    /// One entry per unit (or adjustment), sorted by location.
    pub verdicts: Vec<Verdict>,
    pub dislodged: Vec<Dislodged>,
    pub standoffs: Vec<LocId>,
    /// State at the start of the following phase.
    pub next: GameState,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AdjudicationError {
    #[error("order `{order}` is not legal: {reason}")]
    IllegalOrder {
        order: String,
        reason: InvalidReason,
    },
    #[error("order `{0}` names no unit on the board")]
    NoSuchUnit(String),
}

/// Resolves `orders` against `state` and returns the next state.
///
/// Orders must be legal for their unit's owner (builds for the power whose
/// home center it is); anything else is rejected as a contract violation.
/// Units without an order hold (movement) or disband (retreat); missing
/// adjustment disbands are chosen by the engine.
pub fn adjudicate(
    map: &MapGraph,
    state: &GameState,
    orders: &[Order],
) -> Result<Resolution, AdjudicationError> {
    let ctx = OrderContext::new(map, state);
    let orders = check_contract(&ctx, orders)?;
    Ok(match state.phase().kind {
        PhaseKind::Movement => resolve_movement(map, state, &orders),
        PhaseKind::Retreat => resolve_retreats(map, state, &orders),
        PhaseKind::Adjustment => resolve_adjustments(map, state, &orders),
    })
}

/// Resolves the movement phase with the order at `index` replaced by a hold.
pub fn counterfactual_without(
    map: &MapGraph,
    state: &GameState,
    orders: &[Order],
    index: usize,
) -> Result<Resolution, AdjudicationError> {
    let mut changed = orders.to_vec();
    if let Some(u) = changed[index].unit() {
        changed[index] = Order::Hold(u);
    }
    adjudicate(map, state, &changed)
}

fn order_power(ctx: &OrderContext, order: &Order) -> Option<Power> {
    let map = ctx.map;
    match *order {
        Order::Build(u) => map.home_power(map.province(u.loc)),
        Order::Waive => None,
        _ => {
            let u = order.unit()?;
            if ctx.state.phase().kind == PhaseKind::Retreat {
                ctx.state
                    .dislodged()
                    .iter()
                    .find(|d| map.province(d.unit.loc) == map.province(u.loc))
                    .map(|d| d.unit.owner)
            } else {
                ctx.state.unit_in(map, u.loc).map(|x| x.owner)
            }
        }
    }
}

fn check_contract(ctx: &OrderContext, orders: &[Order]) -> Result<Vec<Order>, AdjudicationError> {
    let mut by_power: Vec<Vec<Order>> = vec![Vec::new(); Power::COUNT];
    for o in orders {
        if *o == Order::Waive {
            continue;
        }
        match order_power(ctx, o) {
            Some(p) => by_power[p.index()].push(*o),
            None => return Err(AdjudicationError::NoSuchUnit(o.to_text(ctx.map))),
        }
    }
    let mut out = Vec::with_capacity(orders.len());
    for p in Power::ALL {
        let v = validate_in(ctx, p, &by_power[p.index()]);
        for (o, verdict) in v.entries {
            if let Validity::Invalid(reason) = verdict {
                return Err(AdjudicationError::IllegalOrder {
                    order: o.to_text(ctx.map),
                    reason,
                });
            }
            out.push(o);
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Unresolved,
    Guessing,
    Resolved,
}

struct Resolver<'a> {
    map: &'a MapGraph,
    units: &'a [Unit],
    orders: Vec<Order>,
    defaulted: Vec<bool>,
    prov: Vec<LocId>,
    /// Unit index standing in each province before resolution.
    at: Vec<Option<usize>>,
    /// Units moving into each province.
    attackers: Vec<Vec<usize>>,
    /// Supporters whose order matches each unit's order.
    supporters: Vec<Vec<usize>>,
    /// Fleets whose convoy order matches each convoyed army's move.
    convoyers: Vec<Vec<usize>>,
    /// For each convoying fleet, the army it carries (if the army's order matches).
    carries: Vec<Option<usize>>,
    status: Vec<Status>,
    result: Vec<bool>,
    deps: Vec<usize>,
    no_path: Vec<bool>,
}

impl<'a> Resolver<'a> {
    fn new(map: &'a MapGraph, state: &'a GameState, given: &[Order]) -> Self {
        let units = state.units();
        let n = units.len();
        let mut at = vec![None; map.len()];
        let prov: Vec<LocId> = units.iter().map(|u| map.province(u.loc)).collect();
        for (i, p) in prov.iter().enumerate() {
            at[p.index()] = Some(i);
        }
        let mut orders: Vec<Order> = units
            .iter()
            .map(|u| Order::Hold(UnitRef::from(u)))
            .collect();
        let mut defaulted = vec![true; n];
        for o in given {
            if let Some(u) = o.unit() {
                if let Some(i) = at[map.province(u.loc).index()] {
                    if defaulted[i] {
                        orders[i] = *o;
                        defaulted[i] = false;
                    }
                }
            }
        }
        let mut attackers = vec![Vec::new(); map.len()];
        for (i, o) in orders.iter().enumerate() {
            if let Order::Move { dest, .. } = o {
                attackers[map.province(*dest).index()].push(i);
            }
        }
        let mut supporters = vec![Vec::new(); n];
        let mut convoyers = vec![Vec::new(); n];
        let mut carries = vec![None; n];
        for (s, o) in orders.iter().enumerate() {
            match *o {
                Order::SupportHold { target, .. } => {
                    if let Some(t) = at[map.province(target.loc).index()] {
                        if !matches!(orders[t], Order::Move { .. }) {
                            supporters[t].push(s);
                        }
                    }
                }
                Order::SupportMove { target, dest, .. } => {
                    if let Some(t) = at[map.province(target.loc).index()] {
                        if let Order::Move { dest: d, .. } = orders[t] {
                            if map.province(d) == dest {
                                supporters[t].push(s);
                            }
                        }
                    }
                }
                Order::Convoy { army, dest, .. } => {
                    if let Some(a) = at[map.province(army.loc).index()] {
                        if let Order::Move {
                            dest: d,
                            via_convoy: true,
                            ..
                        } = orders[a]
                        {
                            if d == dest {
                                convoyers[a].push(s);
                                carries[s] = Some(a);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        Resolver {
            map,
            units,
            orders,
            defaulted,
            prov,
            at,
            attackers,
            supporters,
            convoyers,
            carries,
            status: vec![Status::Unresolved; n],
            result: vec![false; n],
            deps: Vec::new(),
            no_path: vec![false; n],
        }
    }

    fn dest(&self, i: usize) -> Option<LocId> {
        match self.orders[i] {
            Order::Move { dest, .. } => Some(self.map.province(dest)),
            _ => None,
        }
    }

    fn is_move(&self, i: usize) -> bool {
        matches!(self.orders[i], Order::Move { .. })
    }

    fn is_convoyed(&self, i: usize) -> bool {
        matches!(
            self.orders[i],
            Order::Move {
                via_convoy: true,
                ..
            }
        )
    }

    /// The unit at `m`'s destination when the two are moving into each
    /// other's province directly.
    fn head_to_head(&self, m: usize) -> Option<usize> {
        if self.is_convoyed(m) {
            return None;
        }
        let d = self.at[self.dest(m)?.index()]?;
        if !self.is_convoyed(d) && self.dest(d) == Some(self.prov[m]) {
            Some(d)
        } else {
            None
        }
    }

    fn resolve(&mut self, nr: usize) -> bool {
        match self.status[nr] {
            Status::Resolved => return self.result[nr],
            Status::Guessing => {
                if !self.deps.contains(&nr) {
                    self.deps.push(nr);
                }
                return self.result[nr];
            }
            Status::Unresolved => {}
        }
        let old = self.deps.len();
        self.result[nr] = false;
        self.status[nr] = Status::Guessing;
        let first = self.adjudicate(nr);
        if self.deps.len() == old {
            if self.status[nr] != Status::Resolved {
                self.result[nr] = first;
                self.status[nr] = Status::Resolved;
            }
            return self.result[nr];
        }
        if self.deps[old] != nr {
            self.deps.push(nr);
            self.result[nr] = first;
            return first;
        }
        self.reset_deps(old);
        self.result[nr] = true;
        self.status[nr] = Status::Guessing;
        let second = self.adjudicate(nr);
        if first == second {
            self.reset_deps(old);
            self.result[nr] = first;
            self.status[nr] = Status::Resolved;
            return first;
        }
        self.backup_rule(old);
        self.resolve(nr)
    }

    fn reset_deps(&mut self, old: usize) {
        for d in self.deps.drain(old..) {
            self.status[d] = Status::Unresolved;
        }
    }

    fn backup_rule(&mut self, old: usize) {
        let cycle: Vec<usize> = self.deps.drain(old..).collect();
        for &d in &cycle {
            self.status[d] = Status::Unresolved;
        }
        let carried: Vec<usize> = cycle.iter().filter_map(|&d| self.carries[d]).collect();
        if carried.is_empty() {
            for &d in &cycle {
                if self.is_move(d) {
                    self.result[d] = true;
                    self.status[d] = Status::Resolved;
                }
            }
        } else {
            for a in carried {
                self.no_path[a] = true;
            }
        }
    }

    fn adjudicate(&mut self, i: usize) -> bool {
        match self.orders[i] {
            Order::Move { .. } => self.adjudicate_move(i),
            Order::SupportHold { .. } | Order::SupportMove { .. } => {
                !self.is_cut(i) && !self.is_dislodged(i)
            }
            Order::Convoy { .. } => !self.is_dislodged(i),
            _ => true,
        }
    }

    fn path(&mut self, m: usize) -> bool {
        if !self.is_convoyed(m) {
            return true;
        }
        if self.no_path[m] {
            return false;
        }
        let map = self.map;
        let fleets = self.convoyers[m].clone();
        let mut open: Vec<usize> = Vec::new();
        for f in fleets {
            if self.resolve(f) {
                open.push(f);
            }
        }
        let dest = self.dest(m).expect("move");
        let start_seas = map.seas(self.prov[m]);
        let end_seas = map.seas(dest);
        let mut reached = vec![false; open.len()];
        let mut stack: Vec<usize> = Vec::new();
        for (k, &f) in open.iter().enumerate() {
            if start_seas.contains(&self.units[f].loc) {
                reached[k] = true;
                stack.push(k);
            }
        }
        while let Some(k) = stack.pop() {
            let here = self.units[open[k]].loc;
            if end_seas.contains(&here) {
                return true;
            }
            for (j, &g) in open.iter().enumerate() {
                if !reached[j] && map.is_adjacent(here, self.units[g].loc, UnitKind::Fleet) {
                    reached[j] = true;
                    stack.push(j);
                }
            }
        }
        false
    }

    fn support_count(&mut self, i: usize, exclude: Option<Power>) -> u32 {
        let list = self.supporters[i].clone();
        let mut n = 0;
        for s in list {
            if Some(self.units[s].owner) == exclude {
                continue;
            }
            if self.resolve(s) {
                n += 1;
            }
        }
        n
    }

    fn attack_strength(&mut self, m: usize) -> u32 {
        if !self.path(m) {
            return 0;
        }
        let dest = self.dest(m).expect("move");
        let defender = self.at[dest.index()];
        let left = match defender {
            None => true,
            Some(d) => self.is_move(d) && self.head_to_head(m) != Some(d) && self.resolve(d),
        };
        if left {
            return 1 + self.support_count(m, None);
        }
        let d = defender.expect("occupied");
        let owner = self.units[d].owner;
        if owner == self.units[m].owner {
            0
        } else {
            1 + self.support_count(m, Some(owner))
        }
    }

    fn hold_strength(&mut self, province: LocId) -> u32 {
        let Some(d) = self.at[province.index()] else {
            return 0;
        };
        if self.is_move(d) {
            if self.resolve(d) {
                0
            } else {
                1
            }
        } else {
            1 + self.support_count(d, None)
        }
    }

    fn prevent_strength(&mut self, o: usize) -> u32 {
        if !self.path(o) {
            return 0;
        }
        if let Some(d) = self.head_to_head(o) {
            if self.resolve(d) {
                return 0;
            }
        }
        1 + self.support_count(o, None)
    }

    fn adjudicate_move(&mut self, m: usize) -> bool {
        if !self.path(m) {
            return false;
        }
        let dest = self.dest(m).expect("move");
        let attack = self.attack_strength(m);
        let opposing = match self.head_to_head(m) {
            Some(d) => 1 + self.support_count(d, None),
            None => self.hold_strength(dest),
        };
        if attack <= opposing {
            return false;
        }
        let others: Vec<usize> = self.attackers[dest.index()]
            .iter()
            .copied()
            .filter(|&o| o != m)
            .collect();
        for o in others {
            if attack <= self.prevent_strength(o) {
                return false;
            }
        }
        true
    }

    fn is_cut(&mut self, s: usize) -> bool {
        let supported_dest = match self.orders[s] {
            Order::SupportMove { dest, .. } => Some(dest),
            _ => None,
        };
        let list = self.attackers[self.prov[s].index()].clone();
        for m in list {
            if self.units[m].owner == self.units[s].owner || Some(self.prov[m]) == supported_dest {
                continue;
            }
            if self.path(m) {
                return true;
            }
        }
        false
    }

    fn is_dislodged(&mut self, i: usize) -> bool {
        if self.is_move(i) && self.resolve(i) {
            return false;
        }
        let list = self.attackers[self.prov[i].index()].clone();
        for m in list {
            if self.resolve(m) {
                return true;
            }
        }
        false
    }
}

/// Resolves a movement phase. `orders` must already be legal; units without
/// an order hold.
pub fn resolve_movement(map: &MapGraph, state: &GameState, orders: &[Order]) -> Resolution {
    let mut r = Resolver::new(map, state, orders);
    let n = r.units.len();
    for i in 0..n {
        if !matches!(r.orders[i], Order::Hold(_)) {
            r.resolve(i);
        }
    }
    let dislodged_flag: Vec<bool> = (0..n).map(|i| r.is_dislodged(i)).collect();
    let mut verdicts = Vec::with_capacity(n);
    for (i, &was_dislodged) in dislodged_flag.iter().enumerate() {
        let outcome = match r.orders[i] {
            Order::Hold(_) => {
                if was_dislodged {
                    OrderOutcome::Dislodged
                } else {
                    OrderOutcome::Succeeds
                }
            }
            Order::Move { .. } => {
                if r.result[i] {
                    OrderOutcome::Succeeds
                } else if !r.path(i) {
                    OrderOutcome::NoConvoy
                } else {
                    OrderOutcome::Bounced
                }
            }
            Order::SupportHold { .. } | Order::SupportMove { .. } => {
                let matched = r.supporters.iter().any(|l| l.contains(&i));
                if !matched {
                    OrderOutcome::Void
                } else if was_dislodged {
                    OrderOutcome::Dislodged
                } else if !r.result[i] {
                    OrderOutcome::Cut
                } else {
                    OrderOutcome::Succeeds
                }
            }
            Order::Convoy { .. } => {
                if r.carries[i].is_none() {
                    OrderOutcome::Void
                } else if was_dislodged {
                    OrderOutcome::Dislodged
                } else {
                    OrderOutcome::Succeeds
                }
            }
            _ => unreachable!("movement phase orders only"),
        };
        verdicts.push(Verdict {
            power: r.units[i].owner,
            order: r.orders[i],
            outcome,
            dislodged: was_dislodged,
            defaulted: r.defaulted[i],
        });
    }

    let mut units = Vec::with_capacity(n);
    let mut dislodged = Vec::new();
    for (i, u) in r.units.iter().enumerate() {
        if let (Order::Move { dest, .. }, true) = (r.orders[i], r.result[i]) {
            units.push(Unit { loc: dest, ..*u });
        } else if dislodged_flag[i] {
            let winner = r.attackers[r.prov[i].index()]
                .iter()
                .copied()
                .find(|&m| r.result[m])
                .expect("dislodging move");
            let attacker_from = if r.is_convoyed(winner) {
                None
            } else {
                Some(r.prov[winner])
            };
            dislodged.push(Dislodged {
                unit: *u,
                attacker_from,
            });
        } else {
            units.push(*u);
        }
    }

    let mut standoffs = Vec::new();
    for p in map.provinces() {
        let list = r.attackers[p.index()].clone();
        if list.is_empty() || list.iter().any(|&m| r.result[m]) {
            continue;
        }
        let occupied = match r.at[p.index()] {
            Some(d) => !(r.is_move(d) && r.result[d]),
            None => false,
        };
        if occupied {
            continue;
        }
        let bounced = list.iter().any(|&m| {
            if !r.path(m) {
                return false;
            }
            match r.head_to_head(m) {
                Some(d) => !r.result[d],
                None => true,
            }
        });
        if bounced {
            standoffs.push(p);
        }
    }

    verdicts.sort_by_key(|v| v.order.unit().map(|u| u.loc));
    dislodged.sort();
    let next = next_state(
        map,
        state,
        units,
        dislodged.clone(),
        state.ownership().to_vec(),
        standoffs.clone(),
    );
    Resolution {
        verdicts,
        dislodged,
        standoffs,
        next,
    }
}

/// Resolves a retreat phase. Two or more retreats into the same province
/// all fail and those units disband; units without an order disband.
pub fn resolve_retreats(map: &MapGraph, state: &GameState, orders: &[Order]) -> Resolution {
    let mut chosen: Vec<(Dislodged, Option<Order>)> =
        state.dislodged().iter().map(|d| (*d, None)).collect();
    for o in orders {
        let Some(u) = o.unit() else { continue };
        if let Some(slot) = chosen
            .iter_mut()
            .find(|(d, _)| map.province(d.unit.loc) == map.province(u.loc))
        {
            if slot.1.is_none() {
                slot.1 = Some(*o);
            }
        }
    }
    let target = |o: &Option<Order>| match o {
        Some(Order::Retreat { dest, .. }) => Some(map.province(*dest)),
        _ => None,
    };
    let mut units = state.units().to_vec();
    let mut verdicts = Vec::new();
    for (d, o) in &chosen {
        let order = o.unwrap_or(Order::Disband(UnitRef::from(&d.unit)));
        let outcome = match (order, target(o)) {
            (Order::Retreat { dest, .. }, Some(p)) => {
                let rivals = chosen.iter().filter(|(_, x)| target(x) == Some(p)).count();
                if rivals == 1 {
                    units.push(Unit {
                        loc: dest,
                        ..d.unit
                    });
                    OrderOutcome::Succeeds
                } else {
                    OrderOutcome::Bounced
                }
            }
            _ => OrderOutcome::Succeeds,
        };
        verdicts.push(Verdict {
            power: d.unit.owner,
            order,
            outcome,
            dislodged: false,
            defaulted: o.is_none(),
        });
    }
    verdicts.sort_by_key(|v| v.order.unit().map(|u| u.loc));
    let next = next_state(
        map,
        state,
        units,
        Vec::new(),
        state.ownership().to_vec(),
        Vec::new(),
    );
    Resolution {
        verdicts,
        dislodged: Vec::new(),
        standoffs: Vec::new(),
        next,
    }
}

/// Resolves an adjustment phase. Missing disbands are chosen by distance:
/// the unit farthest from the power's owned home centers goes first, ties
/// broken alphabetically by location.
pub fn resolve_adjustments(map: &MapGraph, state: &GameState, orders: &[Order]) -> Resolution {
    let mut units = state.units().to_vec();
    let mut verdicts = Vec::new();
    let mut disbanded_by = [0i32; Power::COUNT];
    for o in orders {
        match *o {
            Order::Build(u) => {
                let power = map.home_power(map.province(u.loc)).expect("home center");
                units.push(Unit {
                    kind: u.kind,
                    loc: u.loc,
                    owner: power,
                });
                verdicts.push(Verdict {
                    power,
                    order: *o,
                    outcome: OrderOutcome::Succeeds,
                    dislodged: false,
                    defaulted: false,
                });
            }
            Order::Disband(u) => {
                if let Some(pos) = units.iter().position(|x| x.loc == u.loc) {
                    let gone = units.remove(pos);
                    disbanded_by[gone.owner.index()] += 1;
                    verdicts.push(Verdict {
                        power: gone.owner,
                        order: *o,
                        outcome: OrderOutcome::Succeeds,
                        dislodged: false,
                        defaulted: false,
                    });
                }
            }
            _ => {}
        }
    }
    for p in Power::ALL {
        let owed = -raw_build_count(map, state, p) - disbanded_by[p.index()];
        for _ in 0..owed.max(0) {
            let gone = auto_disband_choice(map, state, &units, p).expect("unit to disband");
            units.retain(|u| u.loc != gone.loc);
            verdicts.push(Verdict {
                power: p,
                order: Order::Disband(UnitRef::from(&gone)),
                outcome: OrderOutcome::Succeeds,
                dislodged: false,
                defaulted: true,
            });
        }
    }
    verdicts.sort_by_key(|v| match v.order {
        Order::Build(u) => Some(u.loc),
        o => o.unit().map(|u| u.loc),
    });
    let next = next_state(
        map,
        state,
        units,
        Vec::new(),
        state.ownership().to_vec(),
        Vec::new(),
    );
    Resolution {
        verdicts,
        dislodged: Vec::new(),
        standoffs: Vec::new(),
        next,
    }
}

/// The unit of `power` the engine removes when a disband is missing.
pub fn auto_disband_choice(
    map: &MapGraph,
    state: &GameState,
    units: &[Unit],
    power: Power,
) -> Option<Unit> {
    let homes: Vec<LocId> = map
        .home_centers(power)
        .iter()
        .copied()
        .filter(|h| state.sc_owner(map, *h) == Some(power))
        .collect();
    let homes = if homes.is_empty() {
        map.home_centers(power).to_vec()
    } else {
        homes
    };
    let distance = |u: &Unit| {
        homes
            .iter()
            .map(|h| map.distance(u.loc, *h))
            .min()
            .unwrap_or(0)
    };
    units
        .iter()
        .filter(|u| u.owner == power)
        .fold(None, |best: Option<&Unit>, u| match best {
            Some(b) if distance(b) >= distance(u) => Some(b),
            _ => Some(u),
        })
        .copied()
}

/// State at the start of the phase after `state`, given the units left on
/// the board and, after a movement phase, the dislodged units.
fn next_state(
    map: &MapGraph,
    state: &GameState,
    units: Vec<Unit>,
    dislodged: Vec<Dislodged>,
    mut owner: Vec<Option<Power>>,
    standoffs: Vec<LocId>,
) -> GameState {
    let phase = state.phase();
    if phase.kind == PhaseKind::Movement && !dislodged.is_empty() {
        return GameState::new(
            map,
            Phase::new(phase.year, phase.season, PhaseKind::Retreat),
            units,
            dislodged,
            owner,
            standoffs,
        );
    }
    let spring = Phase::new(phase.year + 1, Season::Spring, PhaseKind::Movement);
    match phase.season {
        Season::Spring => GameState::new(
            map,
            Phase::new(phase.year, Season::Fall, PhaseKind::Movement),
            units,
            Vec::new(),
            owner,
            Vec::new(),
        ),
        Season::Fall => {
            for u in &units {
                let p = map.province(u.loc);
                if map.is_supply_center(p) {
                    owner[p.index()] = Some(u.owner);
                }
            }
            let winter = GameState::new(
                map,
                Phase::new(phase.year, Season::Winter, PhaseKind::Adjustment),
                units.clone(),
                Vec::new(),
                owner.clone(),
                Vec::new(),
            );
            if Power::ALL
                .iter()
                .any(|p| raw_build_count(map, &winter, *p) != 0)
            {
                winter
            } else {
                GameState::new(map, spring, units, Vec::new(), owner, Vec::new())
            }
        }
        Season::Winter => GameState::new(map, spring, units, Vec::new(), owner, Vec::new()),
    }
}
