//! Shared test support: random positions, random order sets and a brute-force
//! adjudication oracle.
#![allow(dead_code)]

pub mod coalition;
pub mod legality;

use nopress::map::{LocId, LocKind, MapGraph, UnitKind};
use nopress::order::{Order, OrderContext, UnitRef};
use nopress::state::{GameState, Phase, Unit};
use nopress::Power;
use rand::seq::SliceRandom;
use rand::Rng;

/// A movement-phase position with `n` units packed around a random province
/// so that orders interact.
pub fn random_position<R: Rng>(map: &MapGraph, rng: &mut R, n: usize) -> GameState {
    let provinces: Vec<LocId> = map.provinces().collect();
    let centre = *provinces.choose(rng).unwrap();
    let mut near: Vec<LocId> = map
        .locations()
        .filter(|l| map.distance(centre, *l) <= 2)
        .collect();
    near.shuffle(rng);
    let powers = [Power::Austria, Power::France, Power::Turkey];
    let mut units: Vec<Unit> = Vec::new();
    for loc in near {
        if units.len() == n {
            break;
        }
        let prov = map.province(loc);
        if units.iter().any(|u| map.province(u.loc) == prov) {
            continue;
        }
        let kind = match map.kind(loc) {
            LocKind::Water => UnitKind::Fleet,
            LocKind::Land => UnitKind::Army,
            LocKind::Coastal => {
                if rng.gen_bool(0.5) {
                    UnitKind::Army
                } else {
                    UnitKind::Fleet
                }
            }
        };
        if !map.can_occupy(loc, kind) {
            continue;
        }
        units.push(Unit {
            kind,
            loc,
            owner: *powers.choose(rng).unwrap(),
        });
    }
    GameState::new(
        map,
        Phase::opening(),
        units,
        vec![],
        vec![None; map.len()],
        vec![],
    )
}

fn matches(map: &MapGraph, state: &GameState, chosen: &[Order], candidate: &Order) -> bool {
    let order_of = |u: UnitRef| {
        let prov = map.province(u.loc);
        state
            .units()
            .iter()
            .position(|x| map.province(x.loc) == prov)
            .map(|i| chosen[i])
    };
    match *candidate {
        Order::SupportHold { target, .. } => {
            order_of(target).is_some_and(|o| !matches!(o, Order::Move { .. }))
        }
        Order::SupportMove { target, dest, .. } => order_of(target)
            .is_some_and(|o| matches!(o, Order::Move { dest: d, .. } if map.province(d) == dest)),
        Order::Convoy { army, dest, .. } => order_of(army).is_some_and(
            |o| matches!(o, Order::Move { dest: d, via_convoy: true, .. } if d == dest),
        ),
        _ => false,
    }
}

/// One legal order per unit; roughly half the supporters and convoyers are
/// steered towards orders that match what the other units are doing.
pub fn random_orders<R: Rng>(map: &MapGraph, state: &GameState, rng: &mut R) -> Vec<Order> {
    let ctx = OrderContext::new(map, state);
    let sets: Vec<Vec<Order>> = state
        .units()
        .iter()
        .map(|u| ctx.legal_orders(u.loc).orders)
        .collect();
    let mut chosen: Vec<Order> = sets
        .iter()
        .zip(state.units())
        .map(|(set, me)| {
            let vias: Vec<&Order> = set
                .iter()
                .filter(|o| {
                    matches!(
                        o,
                        Order::Move {
                            via_convoy: true,
                            ..
                        }
                    )
                })
                .collect();
            let attacks: Vec<&Order> = set
                .iter()
                .filter(|o| match o {
                    Order::Move { dest, .. } => state
                        .unit_in(map, *dest)
                        .is_some_and(|u| u.owner != me.owner),
                    _ => false,
                })
                .collect();
            if !vias.is_empty() && rng.gen_bool(0.25) {
                **vias.choose(rng).unwrap()
            } else if !attacks.is_empty() && rng.gen_bool(0.5) {
                **attacks.choose(rng).unwrap()
            } else {
                *set.choose(rng).unwrap()
            }
        })
        .collect();
    for _round in 0..2 {
        for i in 0..chosen.len() {
            if !rng.gen_bool(0.5) {
                continue;
            }
            let helpful: Vec<Order> = sets[i]
                .iter()
                .filter(|o| matches(map, state, &chosen, o))
                .copied()
                .collect();
            let pushes: Vec<Order> = helpful
                .iter()
                .filter(|o| matches!(o, Order::SupportMove { .. } | Order::Convoy { .. }))
                .copied()
                .collect();
            let pool = if !pushes.is_empty() && rng.gen_bool(0.7) {
                &pushes
            } else {
                &helpful
            };
            if let Some(o) = pool.choose(rng) {
                chosen[i] = *o;
            }
        }
    }
    chosen
}

/// Per-unit result of the oracle, indexed like `state.units()`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleOutcome {
    pub moved: Vec<bool>,
    pub dislodged: Vec<bool>,
}

struct Board<'a> {
    map: &'a MapGraph,
    units: &'a [Unit],
    orders: Vec<Order>,
    prov: Vec<LocId>,
    at: Vec<Option<usize>>,
    no_path: Vec<bool>,
}

impl Board<'_> {
    fn dest(&self, i: usize) -> Option<LocId> {
        match self.orders[i] {
            Order::Move { dest, .. } => Some(self.map.province(dest)),
            _ => None,
        }
    }

    fn via(&self, i: usize) -> bool {
        matches!(
            self.orders[i],
            Order::Move {
                via_convoy: true,
                ..
            }
        )
    }

    fn movers_into(&self, p: LocId) -> Vec<usize> {
        (0..self.units.len())
            .filter(|&i| self.dest(i) == Some(p))
            .collect()
    }

    fn h2h(&self, m: usize) -> Option<usize> {
        if self.via(m) {
            return None;
        }
        let d = self.at[self.dest(m)?.index()]?;
        (!self.via(d) && self.dest(d) == Some(self.prov[m])).then_some(d)
    }

    fn supports(&self, t: usize, d: &[bool], exclude: Option<Power>) -> u32 {
        let map = self.map;
        (0..self.units.len())
            .filter(|&s| d[s] && Some(self.units[s].owner) != exclude)
            .filter(|&s| match self.orders[s] {
                Order::SupportHold { target, .. } => {
                    map.province(target.loc) == self.prov[t]
                        && !matches!(self.orders[t], Order::Move { .. })
                }
                Order::SupportMove { target, dest, .. } => {
                    map.province(target.loc) == self.prov[t] && self.dest(t) == Some(dest)
                }
                _ => false,
            })
            .count() as u32
    }

    fn carriers(&self, m: usize) -> Vec<usize> {
        let map = self.map;
        (0..self.units.len())
            .filter(|&f| match self.orders[f] {
                Order::Convoy { army, dest, .. } => {
                    map.province(army.loc) == self.prov[m]
                        && self.via(m)
                        && self.dest(m) == Some(dest)
                }
                _ => false,
            })
            .collect()
    }

    fn path(&self, m: usize, d: &[bool]) -> bool {
        if !self.via(m) {
            return true;
        }
        if self.no_path[m] {
            return false;
        }
        let map = self.map;
        let fleets: Vec<LocId> = self
            .carriers(m)
            .into_iter()
            .filter(|&f| d[f])
            .map(|f| self.units[f].loc)
            .collect();
        let end = map.seas(self.dest(m).unwrap());
        let mut seen: Vec<LocId> = fleets
            .iter()
            .copied()
            .filter(|f| map.seas(self.prov[m]).contains(f))
            .collect();
        let mut i = 0;
        while i < seen.len() {
            let here = seen[i];
            if end.contains(&here) {
                return true;
            }
            for &f in &fleets {
                if !seen.contains(&f) && map.is_adjacent(here, f, UnitKind::Fleet) {
                    seen.push(f);
                }
            }
            i += 1;
        }
        false
    }

    fn dislodged(&self, i: usize, d: &[bool]) -> bool {
        let moved = self.dest(i).is_some() && d[i];
        !moved && self.movers_into(self.prov[i]).iter().any(|&m| d[m])
    }

    fn prevent(&self, o: usize, d: &[bool]) -> u32 {
        if !self.path(o, d) {
            return 0;
        }
        if let Some(x) = self.h2h(o) {
            if d[x] {
                return 0;
            }
        }
        1 + self.supports(o, d, None)
    }

    fn eval(&self, i: usize, d: &[bool]) -> bool {
        match self.orders[i] {
            Order::Move { .. } => {
                if !self.path(i, d) {
                    return false;
                }
                let dest = self.dest(i).unwrap();
                let occupant = self.at[dest.index()];
                let h2h = self.h2h(i);
                let attack = match occupant {
                    None => 1 + self.supports(i, d, None),
                    Some(x) if self.dest(x).is_some() && h2h != Some(x) && d[x] => {
                        1 + self.supports(i, d, None)
                    }
                    Some(x) if self.units[x].owner == self.units[i].owner => 0,
                    Some(x) => 1 + self.supports(i, d, Some(self.units[x].owner)),
                };
                let resistance = match (h2h, occupant) {
                    (Some(x), _) => 1 + self.supports(x, d, None),
                    (None, None) => 0,
                    (None, Some(x)) if self.dest(x).is_some() => u32::from(!d[x]),
                    (None, Some(x)) => 1 + self.supports(x, d, None),
                };
                attack > resistance
                    && self
                        .movers_into(dest)
                        .into_iter()
                        .filter(|&o| o != i)
                        .all(|o| attack > self.prevent(o, d))
            }
            Order::SupportHold { .. } | Order::SupportMove { .. } => {
                let into = match self.orders[i] {
                    Order::SupportMove { dest, .. } => Some(dest),
                    _ => None,
                };
                let cut = self.movers_into(self.prov[i]).into_iter().any(|m| {
                    self.units[m].owner != self.units[i].owner
                        && Some(self.prov[m]) != into
                        && self.path(m, d)
                });
                !cut && !self.dislodged(i, d)
            }
            Order::Convoy { .. } => !self.dislodged(i, d),
            _ => false,
        }
    }

    fn fixed_points(&self) -> Vec<Vec<bool>> {
        let active: Vec<usize> = (0..self.units.len())
            .filter(|&i| !matches!(self.orders[i], Order::Hold(_)))
            .collect();
        let mut out = Vec::new();
        for mask in 0u32..(1 << active.len()) {
            let mut d = vec![false; self.units.len()];
            for (b, &i) in active.iter().enumerate() {
                d[i] = mask >> b & 1 == 1;
            }
            if active.iter().all(|&i| self.eval(i, &d) == d[i]) {
                out.push(d);
            }
        }
        out
    }
}

/// Resolves a movement phase by enumerating every assignment of the order
/// decisions and keeping the self-consistent ones.
///
/// Several consistent assignments that agree on every convoy are a rotation:
/// the one with the most successful moves wins. Otherwise the convoys are in
/// a paradox and the armies relying on disputed (or attacked, when nothing is
/// consistent) convoys are treated as holding.
pub fn oracle_resolve(map: &MapGraph, state: &GameState, orders: &[Order]) -> OracleOutcome {
    let units = state.units();
    let prov: Vec<LocId> = units.iter().map(|u| map.province(u.loc)).collect();
    let mut at = vec![None; map.len()];
    for (i, p) in prov.iter().enumerate() {
        at[p.index()] = Some(i);
    }
    let mut full: Vec<Order> = units.iter().map(|u| Order::Hold(u.into())).collect();
    let mut given = vec![false; units.len()];
    for o in orders {
        let i = prov
            .iter()
            .position(|p| *p == map.province(o.unit().unwrap().loc))
            .unwrap();
        if !given[i] {
            full[i] = *o;
            given[i] = true;
        }
    }
    let mut board = Board {
        map,
        units,
        orders: full,
        prov,
        at,
        no_path: vec![false; units.len()],
    };
    let is_convoy = |b: &Board, f: usize| matches!(b.orders[f], Order::Convoy { .. });
    for _ in 0..units.len() + 1 {
        let fps = board.fixed_points();
        let convoys: Vec<usize> = (0..units.len()).filter(|&f| is_convoy(&board, f)).collect();
        let chosen = match fps.len() {
            1 => Some(fps[0].clone()),
            0 => None,
            _ => {
                let disputed: Vec<usize> = convoys
                    .iter()
                    .copied()
                    .filter(|&f| fps.iter().any(|d| d[f] != fps[0][f]))
                    .collect();
                if disputed.is_empty() {
                    let moves = |d: &Vec<bool>| {
                        (0..units.len())
                            .filter(|&i| board.dest(i).is_some() && d[i])
                            .count()
                    };
                    fps.iter().max_by_key(|d| moves(d)).cloned()
                } else {
                    for f in disputed {
                        for m in 0..units.len() {
                            if board.carriers(m).contains(&f) {
                                board.no_path[m] = true;
                            }
                        }
                    }
                    continue;
                }
            }
        };
        if let Some(d) = chosen {
            let moved = (0..units.len())
                .map(|i| board.dest(i).is_some() && d[i])
                .collect();
            let dislodged = (0..units.len()).map(|i| board.dislodged(i, &d)).collect();
            return OracleOutcome { moved, dislodged };
        }
        for f in convoys {
            if !board.movers_into(board.prov[f]).is_empty() {
                for m in 0..units.len() {
                    if board.carriers(m).contains(&f) {
                        board.no_path[m] = true;
                    }
                }
            }
        }
    }
    panic!("oracle could not settle the position");
}

/// States drawn from seeded bot games, covering all three phase kinds.
pub fn sampled_states(map: &MapGraph, seed: u64, count: usize) -> Vec<GameState> {
    use nopress::bots::{play_game, AgentSpec};
    use nopress::game::Rules;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut pool = Vec::new();
    let mut game = 0;
    while pool.len() < count * 4 {
        let specs = [AgentSpec::Random, AgentSpec::DumbBot, AgentSpec::Greedy];
        let mut agents: Vec<_> = (0..7)
            .map(|i| {
                specs[(game + i) % specs.len()]
                    .build(seed.wrapping_mul(31).wrapping_add((game * 7 + i) as u64))
            })
            .collect();
        let rules = Rules {
            year_cap: 1915,
            ..Rules::default()
        };
        let record = play_game(map, rules, &mut agents);
        let states = record.states(map).unwrap();
        pool.extend(states.into_iter().take(record.phases.len()));
        game += 1;
    }
    pool.shuffle(&mut rng);
    pool.truncate(count);
    pool
}

/// Compares the resolver with the oracle on the position generated from `seed`.
pub fn oracle_mismatch(seed: u64) -> Result<(), String> {
    use nopress::adjudicator::{adjudicate, OrderOutcome};
    use nopress::map::standard_map;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    let map = standard_map();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(2..=8);
    let state = random_position(map, &mut rng, n);
    let orders = random_orders(map, &state, &mut rng);
    let expected = oracle_resolve(map, &state, &orders);
    let got = adjudicate(map, &state, &orders).map_err(|e| e.to_string())?;
    for (i, u) in state.units().iter().enumerate() {
        let v = got
            .verdicts
            .iter()
            .find(|v| v.order.unit().unwrap().loc == u.loc)
            .unwrap();
        let moved = matches!(v.order, Order::Move { .. }) && v.outcome == OrderOutcome::Succeeds;
        if moved != expected.moved[i] || v.dislodged != expected.dislodged[i] {
            let text: Vec<String> = orders.iter().map(|o| o.to_text(map)).collect();
            return Err(format!(
                "seed {seed}: unit {} moved {moved} (oracle {}), dislodged {} (oracle {})\norders: {text:?}",
                map.name(u.loc),
                expected.moved[i],
                v.dislodged,
                expected.dislodged[i]
            ));
        }
    }
    Ok(())
}
