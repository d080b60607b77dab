//! Brute-force legality: enumerate every syntactically possible order for a
//! location and keep those allowed by a direct reading of the rules.

use std::collections::{BTreeSet, VecDeque};

use nopress::map::{LocId, LocKind, MapGraph, UnitKind};
use nopress::order::{Order, UnitRef};
use nopress::state::{GameState, PhaseKind, Unit};
use nopress::Power;

fn province_of(map: &MapGraph, l: LocId) -> LocId {
    map.province(l)
}

fn moves_into(map: &MapGraph, from: LocId, kind: UnitKind, province: LocId) -> bool {
    map.adjacent(from, kind)
        .iter()
        .any(|d| province_of(map, *d) == province)
}

fn is_coastal_province(map: &MapGraph, p: LocId) -> bool {
    map.kind(p) == LocKind::Coastal
}

/// Water locations from which a fleet could step onto some part of `province`.
fn bordering_seas(map: &MapGraph, province: LocId) -> Vec<LocId> {
    map.locations()
        .filter(|w| {
            map.kind(*w) == LocKind::Water && moves_into(map, *w, UnitKind::Fleet, province)
        })
        .collect()
}

fn fleet_at(state: &GameState, w: LocId) -> bool {
    state
        .units()
        .iter()
        .any(|u| u.loc == w && u.kind == UnitKind::Fleet)
}

/// Water fleets connected to `start` through other water fleets.
fn fleet_group(map: &MapGraph, state: &GameState, start: LocId) -> BTreeSet<LocId> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(w) = queue.pop_front() {
        for &n in map.adjacent(w, UnitKind::Fleet) {
            if map.kind(n) == LocKind::Water && fleet_at(state, n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen
}

/// Whether water fleets could carry an army from `from` to `to`, optionally
/// requiring the fleet at `via` to take part.
fn carried(map: &MapGraph, state: &GameState, from: LocId, to: LocId, via: Option<LocId>) -> bool {
    let (from, to) = (province_of(map, from), province_of(map, to));
    if from == to || !is_coastal_province(map, from) || !is_coastal_province(map, to) {
        return false;
    }
    let starts: Vec<LocId> = match via {
        Some(v) => vec![v],
        None => bordering_seas(map, from)
            .into_iter()
            .filter(|w| fleet_at(state, *w))
            .collect(),
    };
    let from_seas = bordering_seas(map, from);
    let to_seas = bordering_seas(map, to);
    starts.into_iter().any(|s| {
        let group = fleet_group(map, state, s);
        group.iter().any(|w| from_seas.contains(w)) && group.iter().any(|w| to_seas.contains(w))
    })
}

fn unit_ref(u: &Unit) -> UnitRef {
    UnitRef {
        kind: u.kind,
        loc: u.loc,
    }
}

fn movement(map: &MapGraph, state: &GameState, u: &Unit) -> BTreeSet<Order> {
    let me = unit_ref(u);
    let here = province_of(map, u.loc);
    let provinces: Vec<LocId> = map
        .locations()
        .filter(|l| province_of(map, *l) == *l)
        .collect();
    let mut candidates = vec![Order::Hold(me)];
    for d in map.locations() {
        for via_convoy in [false, true] {
            candidates.push(Order::Move {
                unit: me,
                dest: d,
                via_convoy,
            });
        }
    }
    for t in state.units() {
        let target = unit_ref(t);
        candidates.push(Order::SupportHold { unit: me, target });
        for &d in &provinces {
            candidates.push(Order::SupportMove {
                unit: me,
                target,
                dest: d,
            });
            if t.kind == UnitKind::Army {
                candidates.push(Order::Convoy {
                    unit: me,
                    army: target,
                    dest: d,
                });
            }
        }
    }
    candidates
        .into_iter()
        .filter(|o| match *o {
            Order::Hold(_) => true,
            Order::Move {
                dest,
                via_convoy: false,
                ..
            } => map.adjacent(u.loc, u.kind).contains(&dest),
            Order::Move {
                dest,
                via_convoy: true,
                ..
            } => {
                u.kind == UnitKind::Army
                    && province_of(map, dest) == dest
                    && carried(map, state, u.loc, dest, None)
            }
            Order::SupportHold { target, .. } => {
                let there = province_of(map, target.loc);
                there != here && moves_into(map, u.loc, u.kind, there)
            }
            Order::SupportMove { target, dest, .. } => {
                let there = province_of(map, target.loc);
                there != here
                    && dest != there
                    && dest != here
                    && moves_into(map, u.loc, u.kind, dest)
                    && (moves_into(map, target.loc, target.kind, dest)
                        || (target.kind == UnitKind::Army
                            && carried(map, state, target.loc, dest, None)))
            }
            Order::Convoy { army, dest, .. } => {
                u.kind == UnitKind::Fleet
                    && map.kind(u.loc) == LocKind::Water
                    && carried(map, state, army.loc, dest, Some(u.loc))
            }
            _ => false,
        })
        .collect()
}

fn retreat(map: &MapGraph, state: &GameState, province: LocId) -> BTreeSet<Order> {
    let Some(d) = state
        .dislodged()
        .iter()
        .find(|d| province_of(map, d.unit.loc) == province)
    else {
        return BTreeSet::new();
    };
    let me = unit_ref(&d.unit);
    let mut out = BTreeSet::from([Order::Disband(me)]);
    for dest in map.locations() {
        let p = province_of(map, dest);
        let open = !state.units().iter().any(|x| province_of(map, x.loc) == p)
            && !state.standoffs().contains(&p)
            && d.attacker_from != Some(p);
        if open && map.adjacent(d.unit.loc, d.unit.kind).contains(&dest) {
            out.insert(Order::Retreat { unit: me, dest });
        }
    }
    out
}

fn balance(state: &GameState, p: Power) -> i64 {
    state.sc_count(p) as i64 - state.unit_count(p) as i64
}

fn adjustment(map: &MapGraph, state: &GameState, province: LocId) -> BTreeSet<Order> {
    if let Some(u) = state
        .units()
        .iter()
        .find(|u| province_of(map, u.loc) == province)
    {
        if balance(state, u.owner) < 0 {
            return BTreeSet::from([Order::Disband(unit_ref(u))]);
        }
        return BTreeSet::new();
    }
    let home = Power::ALL
        .into_iter()
        .find(|p| map.home_centers(*p).contains(&province));
    let Some(p) = home else {
        return BTreeSet::new();
    };
    if state.sc_owner(map, province) != Some(p) || balance(state, p) <= 0 {
        return BTreeSet::new();
    }
    let mut out = BTreeSet::from([Order::Waive]);
    let spots = std::iter::once(province).chain(map.coasts(province).iter().copied());
    for loc in spots {
        for kind in [UnitKind::Army, UnitKind::Fleet] {
            if map.can_occupy(loc, kind) {
                out.insert(Order::Build(UnitRef { kind, loc }));
            }
        }
    }
    out
}

/// The legal orders at `loc` (a unit's location, or any province in retreat
/// and adjustment phases).
pub fn legal_by_rules(map: &MapGraph, state: &GameState, loc: LocId) -> BTreeSet<Order> {
    match state.phase().kind {
        PhaseKind::Movement => match state
            .units()
            .iter()
            .find(|u| province_of(map, u.loc) == province_of(map, loc))
        {
            Some(u) => movement(map, state, u),
            None => BTreeSet::new(),
        },
        PhaseKind::Retreat => retreat(map, state, province_of(map, loc)),
        PhaseKind::Adjustment => adjustment(map, state, province_of(map, loc)),
    }
}
