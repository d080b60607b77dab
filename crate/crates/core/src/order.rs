//! Orders: the typed AST, the canonical text grammar and legality.
//!
//! Canonical grammar (upper case, single spaces):
//!
//! ```text
//! unit        := ("A" | "F") " " loc
//! hold        := unit " H"
//! move        := unit " - " loc [" VIA"]
//! supporthold := unit " S " unit
//! supportmove := unit " S " unit " - " loc
//! convoy      := unit " C " unit " - " loc
//! retreat     := unit " R " loc
//! disband     := unit " D"
//! build       := ("A" | "F") " " loc " B"
//! waive       := "WAIVE"
//! ```
//!
//! `VIA` marks a convoyed move. Support and convoy destinations are always
//! province-level (no coast tag).

use std::fmt;

use crate::map::{LocId, LocKind, MapError, MapGraph, UnitKind};
use crate::power::Power;
use crate::state::{raw_build_count, GameState, PhaseKind, Unit};

/// A unit as written in an order: kind and location, no owner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UnitRef {
    pub kind: UnitKind,
    pub loc: LocId,
}

impl From<&Unit> for UnitRef {
    fn from(u: &Unit) -> Self {
        UnitRef {
            kind: u.kind,
            loc: u.loc,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Hold(UnitRef),
    Move {
        unit: UnitRef,
        dest: LocId,
        via_convoy: bool,
    },
    SupportHold {
        unit: UnitRef,
        target: UnitRef,
    },
    SupportMove {
        unit: UnitRef,
        target: UnitRef,
        dest: LocId,
    },
    Convoy {
        unit: UnitRef,
        army: UnitRef,
        dest: LocId,
    },
    Retreat {
        unit: UnitRef,
        dest: LocId,
    },
    Disband(UnitRef),
    Build(UnitRef),
    Waive,
}

impl Order {
    /// The unit receiving the order (`None` for builds and waives).
    pub fn unit(&self) -> Option<UnitRef> {
        match *self {
            Order::Hold(u) | Order::Disband(u) => Some(u),
            Order::Move { unit, .. }
            | Order::SupportHold { unit, .. }
            | Order::SupportMove { unit, .. }
            | Order::Convoy { unit, .. }
            | Order::Retreat { unit, .. } => Some(unit),
            Order::Build(_) | Order::Waive => None,
        }
    }

    pub fn is_support(&self) -> bool {
        matches!(self, Order::SupportHold { .. } | Order::SupportMove { .. })
    }

    /// Phase kind in which this order variant can be issued. Disband is
    /// valid in both retreat and adjustment phases.
    pub fn fits_phase(&self, kind: PhaseKind) -> bool {
        match self {
            Order::Hold(_)
            | Order::Move { .. }
            | Order::SupportHold { .. }
            | Order::SupportMove { .. }
            | Order::Convoy { .. } => kind == PhaseKind::Movement,
            Order::Retreat { .. } => kind == PhaseKind::Retreat,
            Order::Disband(_) => kind != PhaseKind::Movement,
            Order::Build(_) | Order::Waive => kind == PhaseKind::Adjustment,
        }
    }

    /// Canonical text of the order.
    pub fn to_text(&self, map: &MapGraph) -> String {
        let unit = |u: &UnitRef| format!("{} {}", u.kind.letter(), map.name(u.loc));
        match self {
            Order::Hold(u) => format!("{} H", unit(u)),
            Order::Move {
                unit: u,
                dest,
                via_convoy,
            } => {
                format!(
                    "{} - {}{}",
                    unit(u),
                    map.name(*dest),
                    if *via_convoy { " VIA" } else { "" }
                )
            }
            Order::SupportHold { unit: u, target } => format!("{} S {}", unit(u), unit(target)),
            Order::SupportMove {
                unit: u,
                target,
                dest,
            } => {
                format!("{} S {} - {}", unit(u), unit(target), map.name(*dest))
            }
            Order::Convoy {
                unit: u,
                army,
                dest,
            } => format!("{} C {} - {}", unit(u), unit(army), map.name(*dest)),
            Order::Retreat { unit: u, dest } => format!("{} R {}", unit(u), map.name(*dest)),
            Order::Disband(u) => format!("{} D", unit(u)),
            Order::Build(u) => format!("{} B", unit(u)),
            Order::Waive => "WAIVE".to_string(),
        }
    }

    /// Adapter implementing `Display` for an order against a map.
    pub fn display<'a>(&'a self, map: &'a MapGraph) -> OrderDisplay<'a> {
        OrderDisplay { order: self, map }
    }
}

pub struct OrderDisplay<'a> {
    order: &'a Order,
    map: &'a MapGraph,
}

impl fmt::Display for OrderDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.order.to_text(self.map))
    }
}

/// Canonical text of `order`.
pub fn format_order(map: &MapGraph, order: &Order) -> String {
    order.to_text(map)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("unknown province `{0}`")]
    UnknownProvince(String),
    #[error("malformed coast tag `{0}`")]
    MalformedCoast(String),
}

/// Parse failure; `position` is the byte offset of the offending token.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at column {position}: {kind}")]
pub struct ParseError {
    pub position: usize,
    pub kind: ParseErrorKind,
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    next: usize,
    end: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut start = None;
        for (i, c) in text.char_indices() {
            if c.is_whitespace() {
                if let Some(s) = start.take() {
                    items.push((s, &text[s..i]));
                }
            } else if start.is_none() {
                start = Some(i);
            }
        }
        if let Some(s) = start {
            items.push((s, &text[s..]));
        }
        Tokens {
            items,
            next: 0,
            end: text.len(),
        }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.items.get(self.next).copied()
    }

    fn take(&mut self, what: &str) -> Result<(usize, &'a str), ParseError> {
        match self.peek() {
            Some(t) => {
                self.next += 1;
                Ok(t)
            }
            None => Err(ParseError {
                position: self.end,
                kind: ParseErrorKind::Syntax(format!("expected {what}, found end of input")),
            }),
        }
    }

    fn expect(&mut self, word: &str) -> Result<(), ParseError> {
        let (pos, tok) = self.take(&format!("`{word}`"))?;
        if tok.eq_ignore_ascii_case(word) {
            Ok(())
        } else {
            Err(syntax(pos, format!("expected `{word}`, found `{tok}`")))
        }
    }
}

fn syntax(position: usize, message: String) -> ParseError {
    ParseError {
        position,
        kind: ParseErrorKind::Syntax(message),
    }
}

fn parse_loc(map: &MapGraph, pos: usize, tok: &str) -> Result<LocId, ParseError> {
    map.loc(tok).map_err(|e| ParseError {
        position: pos,
        kind: match e {
            MapError::MalformedCoast(s) => ParseErrorKind::MalformedCoast(s),
            _ => ParseErrorKind::UnknownProvince(tok.to_string()),
        },
    })
}

fn parse_kind(pos: usize, tok: &str) -> Result<UnitKind, ParseError> {
    match tok.to_ascii_uppercase().as_str() {
        "A" => Ok(UnitKind::Army),
        "F" => Ok(UnitKind::Fleet),
        _ => Err(syntax(
            pos,
            format!("expected unit kind `A` or `F`, found `{tok}`"),
        )),
    }
}

fn parse_unit(map: &MapGraph, t: &mut Tokens) -> Result<UnitRef, ParseError> {
    let (pk, k) = t.take("unit kind")?;
    let kind = parse_kind(pk, k)?;
    let (pl, l) = t.take("location")?;
    let mut loc = parse_loc(map, pl, l)?;
    if kind == UnitKind::Army {
        loc = map.province(loc);
    }
    Ok(UnitRef { kind, loc })
}

/// Destination of a unit's own move: armies are province-level; a fleet
/// naming a split province is resolved to the coast it can reach when unique.
fn mover_dest(map: &MapGraph, unit: UnitRef, dest: LocId) -> LocId {
    match unit.kind {
        UnitKind::Army => map.province(dest),
        UnitKind::Fleet if map.has_split_coasts(dest) && map.province(dest) == dest => {
            let reachable: Vec<LocId> = map
                .coasts(dest)
                .iter()
                .copied()
                .filter(|c| map.is_adjacent(unit.loc, *c, UnitKind::Fleet))
                .collect();
            if reachable.len() == 1 {
                reachable[0]
            } else {
                dest
            }
        }
        UnitKind::Fleet => dest,
    }
}

/// Parses one order. Input is case-insensitive; the result formats back to
/// canonical text.
pub fn parse_order(map: &MapGraph, text: &str) -> Result<Order, ParseError> {
    let mut t = Tokens::new(text);
    if let Some((_, first)) = t.peek() {
        if first.eq_ignore_ascii_case("WAIVE") {
            t.next += 1;
            return finish(t, Order::Waive);
        }
    }
    let unit = parse_unit(map, &mut t)?;
    let (pos, verb) = t.take("order type")?;
    let order = match verb.to_ascii_uppercase().as_str() {
        "H" => Order::Hold(unit),
        "-" => {
            let (pl, l) = t.take("destination")?;
            let dest = mover_dest(map, unit, parse_loc(map, pl, l)?);
            let via_convoy = match t.peek() {
                Some((_, w)) if w.eq_ignore_ascii_case("VIA") => {
                    t.next += 1;
                    true
                }
                _ => false,
            };
            Order::Move {
                unit,
                dest,
                via_convoy,
            }
        }
        "S" => {
            let target = parse_unit(map, &mut t)?;
            match t.peek() {
                Some((_, "-")) => {
                    t.next += 1;
                    let (pl, l) = t.take("supported destination")?;
                    let dest = map.province(parse_loc(map, pl, l)?);
                    Order::SupportMove { unit, target, dest }
                }
                _ => Order::SupportHold { unit, target },
            }
        }
        "C" => {
            let army = parse_unit(map, &mut t)?;
            t.expect("-")?;
            let (pl, l) = t.take("convoy destination")?;
            let dest = map.province(parse_loc(map, pl, l)?);
            Order::Convoy { unit, army, dest }
        }
        "R" => {
            let (pl, l) = t.take("retreat destination")?;
            let dest = mover_dest(map, unit, parse_loc(map, pl, l)?);
            Order::Retreat { unit, dest }
        }
        "D" => Order::Disband(unit),
        "B" => Order::Build(unit),
        other => return Err(syntax(pos, format!("unknown order type `{other}`"))),
    };
    finish(t, order)
}

fn finish(t: Tokens, order: Order) -> Result<Order, ParseError> {
    match t.peek() {
        None => Ok(order),
        Some((pos, tok)) => Err(syntax(pos, format!("unexpected trailing `{tok}`"))),
    }
}

/// Per-state lookup tables shared by legality checks and order generation.
pub struct OrderContext<'a> {
    pub map: &'a MapGraph,
    pub state: &'a GameState,
    /// Connected-component label of each fleet-occupied water location.
    fleet_component: Vec<Option<u8>>,
    build_counts: [i32; Power::COUNT],
}

impl<'a> OrderContext<'a> {
    pub fn new(map: &'a MapGraph, state: &'a GameState) -> Self {
        let mut fleet_component = vec![None; map.len()];
        let mut label = 0u8;
        let is_fleet_sea = |l: LocId| {
            map.kind(l) == LocKind::Water
                && state
                    .unit_in(map, l)
                    .is_some_and(|u| u.kind == UnitKind::Fleet)
        };
        for start in map.locations() {
            if !is_fleet_sea(start) || fleet_component[start.index()].is_some() {
                continue;
            }
            let mut stack = vec![start];
            fleet_component[start.index()] = Some(label);
            while let Some(l) = stack.pop() {
                for &n in map.adjacent(l, UnitKind::Fleet) {
                    if is_fleet_sea(n) && fleet_component[n.index()].is_none() {
                        fleet_component[n.index()] = Some(label);
                        stack.push(n);
                    }
                }
            }
            label += 1;
        }
        let mut build_counts = [0; Power::COUNT];
        if state.phase().kind == PhaseKind::Adjustment {
            for p in Power::ALL {
                build_counts[p.index()] = raw_build_count(map, state, p);
            }
        }
        OrderContext {
            map,
            state,
            fleet_component,
            build_counts,
        }
    }

    pub fn build_count(&self, power: Power) -> i32 {
        self.build_counts[power.index()]
    }

    /// Whether a chain of fleets on water could carry an army from `from` to `to`.
    pub fn convoy_route_exists(&self, from: LocId, to: LocId) -> bool {
        self.convoy_route_through(from, to, None)
    }

    fn convoy_route_through(&self, from: LocId, to: LocId, via: Option<LocId>) -> bool {
        let map = self.map;
        let (from, to) = (map.province(from), map.province(to));
        if from == to || map.kind(from) != LocKind::Coastal || map.kind(to) != LocKind::Coastal {
            return false;
        }
        let required = via.map(|v| self.fleet_component[v.index()]);
        for s in map.seas(from) {
            let Some(c) = self.fleet_component[s.index()] else {
                continue;
            };
            if required.is_some_and(|r| r != Some(c)) {
                continue;
            }
            if map
                .seas(to)
                .iter()
                .any(|t| self.fleet_component[t.index()] == Some(c))
            {
                return true;
            }
        }
        false
    }

    fn can_reach_for_support(&self, unit: &Unit, province: LocId) -> bool {
        let map = self.map;
        map.reaches_province(unit.loc, unit.kind, province)
            || (unit.kind == UnitKind::Army && self.convoy_route_exists(unit.loc, province))
    }

    /// The acting unit for an order: on the board in movement phases, among
    /// the dislodged in retreat phases.
    fn actor(&self, u: UnitRef) -> Option<Unit> {
        let map = self.map;
        match self.state.phase().kind {
            PhaseKind::Retreat => self
                .state
                .dislodged()
                .iter()
                .map(|d| d.unit)
                .find(|d| d.loc == u.loc && d.kind == u.kind),
            _ => self
                .state
                .unit_in(map, u.loc)
                .filter(|x| x.loc == u.loc && x.kind == u.kind)
                .copied(),
        }
    }

    fn target(&self, u: UnitRef) -> Option<Unit> {
        self.state
            .unit_in(self.map, u.loc)
            .filter(|x| x.loc == u.loc && x.kind == u.kind)
            .copied()
    }

    /// Every legal order for the unit or build site at `loc`.
    pub fn legal_orders(&self, loc: LocId) -> LegalSet {
        let map = self.map;
        let state = self.state;
        let mut out = Vec::new();
        match state.phase().kind {
            PhaseKind::Movement => {
                let Some(u) = state.unit_in(map, loc).copied() else {
                    return LegalSet::not_orderable();
                };
                let me = UnitRef::from(&u);
                let my_prov = map.province(u.loc);
                out.push(Order::Hold(me));
                for &d in map.adjacent(u.loc, u.kind) {
                    out.push(Order::Move {
                        unit: me,
                        dest: d,
                        via_convoy: false,
                    });
                }
                if u.kind == UnitKind::Army && map.kind(my_prov) == LocKind::Coastal {
                    for dest in map.provinces() {
                        if self.convoy_route_exists(my_prov, dest) {
                            out.push(Order::Move {
                                unit: me,
                                dest,
                                via_convoy: true,
                            });
                        }
                    }
                }
                let reachable: Vec<LocId> = {
                    let mut r: Vec<LocId> = map
                        .adjacent(u.loc, u.kind)
                        .iter()
                        .map(|d| map.province(*d))
                        .collect();
                    r.sort();
                    r.dedup();
                    r
                };
                for other in state.units() {
                    if other.loc == u.loc {
                        continue;
                    }
                    let target = UnitRef::from(other);
                    let other_prov = map.province(other.loc);
                    if reachable.contains(&other_prov) {
                        out.push(Order::SupportHold { unit: me, target });
                    }
                    for &dest in &reachable {
                        if dest != other_prov && self.can_reach_for_support(other, dest) {
                            out.push(Order::SupportMove {
                                unit: me,
                                target,
                                dest,
                            });
                        }
                    }
                }
                if u.kind == UnitKind::Fleet && map.kind(u.loc) == LocKind::Water {
                    for army in state.units().iter().filter(|a| a.kind == UnitKind::Army) {
                        let from = map.province(army.loc);
                        for dest in map.provinces() {
                            if self.convoy_route_through(from, dest, Some(u.loc)) {
                                out.push(Order::Convoy {
                                    unit: me,
                                    army: UnitRef::from(army),
                                    dest,
                                });
                            }
                        }
                    }
                }
                out.sort();
                LegalSet::orderable(u.owner, out)
            }
            PhaseKind::Retreat => {
                let prov = map.province(loc);
                let Some(d) = state
                    .dislodged()
                    .iter()
                    .find(|d| map.province(d.unit.loc) == prov)
                else {
                    return LegalSet::not_orderable();
                };
                let me = UnitRef::from(&d.unit);
                for &dest in map.adjacent(d.unit.loc, d.unit.kind) {
                    let p = map.province(dest);
                    if state.unit_in(map, p).is_none()
                        && !state.is_standoff(p)
                        && d.attacker_from != Some(p)
                    {
                        out.push(Order::Retreat { unit: me, dest });
                    }
                }
                out.push(Order::Disband(me));
                out.sort();
                LegalSet::orderable(d.unit.owner, out)
            }
            PhaseKind::Adjustment => {
                let prov = map.province(loc);
                if let Some(u) = state.unit_in(map, prov) {
                    if self.build_count(u.owner) < 0 {
                        return LegalSet::orderable(
                            u.owner,
                            vec![Order::Disband(UnitRef::from(u))],
                        );
                    }
                    return LegalSet::not_orderable();
                }
                let Some(power) = map.home_power(prov) else {
                    return LegalSet::not_orderable();
                };
                if state.sc_owner(map, prov) != Some(power) || self.build_count(power) <= 0 {
                    return LegalSet::not_orderable();
                }
                if map.can_occupy(prov, UnitKind::Army) {
                    out.push(Order::Build(UnitRef {
                        kind: UnitKind::Army,
                        loc: prov,
                    }));
                }
                let fleet_spots: Vec<LocId> = if map.has_split_coasts(prov) {
                    map.coasts(prov).to_vec()
                } else {
                    vec![prov]
                };
                for l in fleet_spots {
                    if map.can_occupy(l, UnitKind::Fleet) {
                        out.push(Order::Build(UnitRef {
                            kind: UnitKind::Fleet,
                            loc: l,
                        }));
                    }
                }
                out.push(Order::Waive);
                out.sort();
                LegalSet::orderable(power, out)
            }
        }
    }

    /// Direct legality predicate for an order issued by `power`.
    ///
    /// Agrees with membership in [`OrderContext::legal_orders`]; `Waive` is
    /// legal for any power with builds available.
    pub fn check(&self, power: Power, order: &Order) -> Result<(), InvalidReason> {
        use InvalidReason::*;
        let map = self.map;
        let state = self.state;
        let phase = state.phase().kind;
        if !order.fits_phase(phase) {
            return Err(WrongPhase);
        }
        match *order {
            Order::Waive => {
                if self.build_count(power) > 0 {
                    Ok(())
                } else {
                    Err(NoBuildsAvailable)
                }
            }
            Order::Build(u) => {
                let prov = map.province(u.loc);
                if map.home_power(prov) != Some(power) {
                    return Err(NotHomeCenter);
                }
                if state.sc_owner(map, prov) != Some(power) {
                    return Err(NotOwned);
                }
                if state.unit_in(map, prov).is_some() {
                    return Err(Occupied);
                }
                if self.build_count(power) <= 0 {
                    return Err(NoBuildsAvailable);
                }
                if !map.can_occupy(u.loc, u.kind) {
                    return Err(Unbuildable);
                }
                Ok(())
            }
            Order::Disband(u) if phase == PhaseKind::Adjustment => {
                let actual = self.target(u).ok_or(NoSuchUnit)?;
                if actual.owner != power {
                    return Err(ForeignUnit);
                }
                if self.build_count(power) >= 0 {
                    return Err(NoDisbandsRequired);
                }
                Ok(())
            }
            _ => {
                let u = order.unit().expect("unit order");
                let actor = self.actor(u).ok_or(NoSuchUnit)?;
                if actor.owner != power {
                    return Err(ForeignUnit);
                }
                self.check_unit_order(&actor, order)
            }
        }
    }

    fn check_unit_order(&self, actor: &Unit, order: &Order) -> Result<(), InvalidReason> {
        use InvalidReason::*;
        let map = self.map;
        let state = self.state;
        let my_prov = map.province(actor.loc);
        match *order {
            Order::Hold(_) | Order::Disband(_) => Ok(()),
            Order::Move {
                dest,
                via_convoy: false,
                ..
            } => {
                if map.is_adjacent(actor.loc, dest, actor.kind) {
                    Ok(())
                } else {
                    Err(UnreachableDestination)
                }
            }
            Order::Move {
                dest,
                via_convoy: true,
                ..
            } => {
                if actor.kind != UnitKind::Army || map.province(dest) != dest {
                    return Err(NoConvoyRoute);
                }
                if self.convoy_route_exists(my_prov, dest) {
                    Ok(())
                } else {
                    Err(NoConvoyRoute)
                }
            }
            Order::SupportHold { target, .. } => {
                let t = self.target(target).ok_or(NoSuchTarget)?;
                if t.loc == actor.loc {
                    return Err(SelfSupport);
                }
                if map.reaches_province(actor.loc, actor.kind, map.province(t.loc)) {
                    Ok(())
                } else {
                    Err(UnreachableDestination)
                }
            }
            Order::SupportMove { target, dest, .. } => {
                let t = self.target(target).ok_or(NoSuchTarget)?;
                if t.loc == actor.loc {
                    return Err(SelfSupport);
                }
                if map.province(dest) != dest || dest == map.province(t.loc) {
                    return Err(Illegal);
                }
                if !map.reaches_province(actor.loc, actor.kind, dest) {
                    return Err(UnreachableDestination);
                }
                if !self.can_reach_for_support(&t, dest) {
                    return Err(TargetCannotReach);
                }
                Ok(())
            }
            Order::Convoy { army, dest, .. } => {
                if actor.kind != UnitKind::Fleet || map.kind(actor.loc) != LocKind::Water {
                    return Err(NotAtSea);
                }
                let a = self.target(army).ok_or(NoSuchTarget)?;
                if a.kind != UnitKind::Army || map.province(dest) != dest {
                    return Err(Illegal);
                }
                if self.convoy_route_through(map.province(a.loc), dest, Some(actor.loc)) {
                    Ok(())
                } else {
                    Err(NoConvoyRoute)
                }
            }
            Order::Retreat { dest, .. } => {
                let d = state
                    .dislodged()
                    .iter()
                    .find(|d| d.unit == *actor)
                    .ok_or(NoSuchUnit)?;
                if !map.is_adjacent(actor.loc, dest, actor.kind) {
                    return Err(UnreachableDestination);
                }
                let p = map.province(dest);
                if state.unit_in(map, p).is_some() {
                    return Err(Occupied);
                }
                if state.is_standoff(p) {
                    return Err(StandoffProvince);
                }
                if d.attacker_from == Some(p) {
                    return Err(AttackerOrigin);
                }
                Ok(())
            }
            Order::Build(_) | Order::Waive => Err(WrongPhase),
        }
    }
}

/// Result of [`legal_orders`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LegalSet {
    pub orders: Vec<Order>,
    /// False when nothing at the location can be ordered this phase.
    pub orderable: bool,
    pub power: Option<Power>,
}

impl LegalSet {
    fn orderable(power: Power, orders: Vec<Order>) -> Self {
        LegalSet {
            orders,
            orderable: true,
            power: Some(power),
        }
    }

    fn not_orderable() -> Self {
        LegalSet {
            orders: Vec::new(),
            orderable: false,
            power: None,
        }
    }
}

/// Every legal order for the unit (or build site) at `loc` in the current phase.
pub fn legal_orders(map: &MapGraph, state: &GameState, loc: LocId) -> LegalSet {
    OrderContext::new(map, state).legal_orders(loc)
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize, thiserror::Error,
)]
#[serde(rename_all = "snake_case")]
pub enum InvalidReason {
    #[error("order type not allowed in this phase")]
    WrongPhase,
    #[error("no such unit")]
    NoSuchUnit,
    #[error("unit belongs to another power")]
    ForeignUnit,
    #[error("unit already has an order")]
    Duplicate,
    #[error("unreachable destination")]
    UnreachableDestination,
    #[error("no such unit to support or convoy")]
    NoSuchTarget,
    #[error("a unit cannot support itself")]
    SelfSupport,
    #[error("supported unit cannot reach the destination")]
    TargetCannotReach,
    #[error("no convoy route")]
    NoConvoyRoute,
    #[error("only fleets at sea can convoy")]
    NotAtSea,
    #[error("destination is occupied")]
    Occupied,
    #[error("destination was left vacant by a standoff")]
    StandoffProvince,
    #[error("cannot retreat to the attacker's origin")]
    AttackerOrigin,
    #[error("not a home center of this power")]
    NotHomeCenter,
    #[error("supply center not owned")]
    NotOwned,
    #[error("unit kind cannot be built there")]
    Unbuildable,
    #[error("no builds available")]
    NoBuildsAvailable,
    #[error("no disbands required")]
    NoDisbandsRequired,
    #[error("more adjustment orders than allowed")]
    TooMany,
    #[error("illegal order")]
    Illegal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Validity {
    Valid,
    Invalid(InvalidReason),
}

/// Outcome of [`validate`] for one power.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validation {
    pub power: Power,
    /// Every submitted order, in submission order, with its status.
    pub entries: Vec<(Order, Validity)>,
}

impl Validation {
    pub fn accepted(&self) -> impl Iterator<Item = &Order> + '_ {
        self.entries
            .iter()
            .filter(|(_, v)| *v == Validity::Valid)
            .map(|(o, _)| o)
    }

    pub fn rejected(&self) -> impl Iterator<Item = (&Order, InvalidReason)> + '_ {
        self.entries.iter().filter_map(|(o, v)| match v {
            Validity::Invalid(r) => Some((o, *r)),
            Validity::Valid => None,
        })
    }
}

/// Rewrites unit references so a fleet named without its coast, or a unit
/// named with the wrong kind of coast tag, points at the unit actually there.
fn normalise(ctx: &OrderContext, order: &Order) -> Order {
    let map = ctx.map;
    let fix = |u: UnitRef, dislodged: bool| -> UnitRef {
        let found = if dislodged {
            ctx.state
                .dislodged()
                .iter()
                .map(|d| d.unit)
                .find(|d| map.province(d.loc) == map.province(u.loc))
        } else {
            ctx.state.unit_in(map, u.loc).copied()
        };
        match found {
            Some(x) if x.kind == u.kind => UnitRef {
                kind: x.kind,
                loc: x.loc,
            },
            _ => u,
        }
    };
    let retreat = ctx.state.phase().kind == PhaseKind::Retreat;
    match *order {
        Order::Hold(u) => Order::Hold(fix(u, false)),
        Order::Move {
            unit,
            dest,
            via_convoy,
        } => Order::Move {
            unit: fix(unit, false),
            dest,
            via_convoy,
        },
        Order::SupportHold { unit, target } => Order::SupportHold {
            unit: fix(unit, false),
            target: fix(target, false),
        },
        Order::SupportMove { unit, target, dest } => Order::SupportMove {
            unit: fix(unit, false),
            target: fix(target, false),
            dest,
        },
        Order::Convoy { unit, army, dest } => Order::Convoy {
            unit: fix(unit, false),
            army: fix(army, false),
            dest,
        },
        Order::Retreat { unit, dest } => Order::Retreat {
            unit: fix(unit, true),
            dest,
        },
        Order::Disband(u) => Order::Disband(fix(u, retreat)),
        other => other,
    }
}

/// Checks a power's submitted orders. Invalid orders are reported with a
/// reason; the first order for a unit wins and later ones are duplicates.
/// In adjustment phases at most `|build_count|` orders are accepted.
pub fn validate(map: &MapGraph, state: &GameState, power: Power, orders: &[Order]) -> Validation {
    let ctx = OrderContext::new(map, state);
    validate_in(&ctx, power, orders)
}

pub fn validate_in(ctx: &OrderContext, power: Power, orders: &[Order]) -> Validation {
    let map = ctx.map;
    let mut seen: Vec<LocId> = Vec::new();
    let mut adjustments = 0i32;
    let allowed = ctx.build_count(power).abs();
    let mut entries = Vec::with_capacity(orders.len());
    for raw in orders {
        let order = normalise(ctx, raw);
        let mut verdict = match ctx.check(power, &order) {
            Ok(()) => Validity::Valid,
            Err(r) => Validity::Invalid(r),
        };
        if verdict == Validity::Valid {
            let key = match order {
                Order::Waive => None,
                Order::Build(u) => Some(map.province(u.loc)),
                _ => order.unit().map(|u| map.province(u.loc)),
            };
            if let Some(k) = key {
                if seen.contains(&k) {
                    verdict = Validity::Invalid(InvalidReason::Duplicate);
                } else {
                    seen.push(k);
                }
            }
        }
        if verdict == Validity::Valid && ctx.state.phase().kind == PhaseKind::Adjustment {
            if adjustments >= allowed {
                verdict = Validity::Invalid(InvalidReason::TooMany);
            } else {
                adjustments += 1;
            }
        }
        entries.push((order, verdict));
    }
    Validation { power, entries }
}
