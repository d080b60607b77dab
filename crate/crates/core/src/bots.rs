//! Rule-based agents and the game driver that seats them.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adjudicator::auto_disband_choice;
use crate::game::{Game, MovementOrders, OrderSet, Rules};
use crate::map::{LocId, MapGraph, UnitKind};
use crate::order::{LegalSet, Order, OrderContext, UnitRef};
use crate::power::Power;
use crate::record::GameRecord;
use crate::state::{orders_required, units_requiring_orders, GameState, PhaseKind, Unit};

/// Everything an agent sees when asked for orders.
pub struct Observation<'a> {
    pub map: &'a MapGraph,
    pub power: Power,
    pub state: &'a GameState,
    /// Orders of the most recent movement phase, if any.
    pub prev: Option<&'a MovementOrders>,
    /// Legal orders for each location that may receive one.
    pub legal: Vec<(LocId, LegalSet)>,
    /// Number of orders the power must give (adjustments give at most this many).
    pub required: usize,
}

impl<'a> Observation<'a> {
    pub fn new(
        map: &'a MapGraph,
        state: &'a GameState,
        power: Power,
        prev: Option<&'a MovementOrders>,
    ) -> Self {
        let ctx = OrderContext::new(map, state);
        let legal = units_requiring_orders(map, state, power)
            .into_iter()
            .map(|l| (l, ctx.legal_orders(l)))
            .collect();
        Observation {
            map,
            power,
            state,
            prev,
            legal,
            required: orders_required(map, state, power),
        }
    }
}

pub trait Agent: Send {
    fn name(&self) -> String;
    fn decide(&mut self, obs: &Observation) -> Vec<Order>;

    /// Decisions or orders replaced by defaults because the agent failed.
    fn substitutions(&self) -> usize {
        0
    }
}

/// Plays a game to the end with one agent per power, indexed by [`Power::index`].
pub fn play_game(map: &MapGraph, rules: Rules, agents: &mut [Box<dyn Agent>]) -> GameRecord {
    assert_eq!(agents.len(), Power::COUNT, "one agent per power");
    let mut game = Game::new(map, rules);
    while !game.is_over() {
        let orders = collect_orders(&game, agents);
        game.step(&orders).expect("game in progress");
    }
    game.record()
}

/// Asks every power with something to order for its orders.
pub fn collect_orders(game: &Game, agents: &mut [Box<dyn Agent>]) -> OrderSet {
    let mut set = OrderSet::new();
    for p in Power::ALL {
        let obs = Observation::new(game.map(), game.state(), p, game.last_movement());
        if obs.legal.is_empty() {
            continue;
        }
        let orders = agents[p.index()].decide(&obs);
        if !orders.is_empty() {
            set.insert(p, orders);
        }
    }
    set
}

/// Names an agent that can be instantiated once per seat.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    Random,
    Greedy,
    DumbBot,
    Hold,
    /// A program speaking the agent protocol on its standard streams.
    Command(String),
    /// An agent listening on a TCP address.
    Connect(String),
}

impl AgentSpec {
    /// Creates a fresh agent; `seed` drives any randomness it uses.
    pub fn build(&self, seed: u64) -> Box<dyn Agent> {
        match self {
            AgentSpec::Random => Box::new(RandomAgent::new(seed)),
            AgentSpec::Greedy => Box::new(GreedyAgent),
            AgentSpec::DumbBot => Box::new(DumbBot::new(seed)),
            AgentSpec::Hold => Box::new(HoldAgent),
            AgentSpec::Command(cmd) => Box::new(crate::protocol::ExternalAgent::spawn(cmd)),
            AgentSpec::Connect(addr) => Box::new(crate::protocol::ExternalAgent::connect(addr)),
        }
    }
}

impl std::fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AgentSpec::Random => f.write_str("random"),
            AgentSpec::Greedy => f.write_str("greedy"),
            AgentSpec::DumbBot => f.write_str("dumbbot"),
            AgentSpec::Hold => f.write_str("hold"),
            AgentSpec::Command(c) => write!(f, "cmd:{c}"),
            AgentSpec::Connect(a) => write!(f, "tcp:{a}"),
        }
    }
}

impl std::str::FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(cmd) = s.strip_prefix("cmd:") {
            return Ok(AgentSpec::Command(cmd.to_string()));
        }
        if let Some(addr) = s.strip_prefix("tcp:") {
            return Ok(AgentSpec::Connect(addr.to_string()));
        }
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(AgentSpec::Random),
            "greedy" => Ok(AgentSpec::Greedy),
            "dumbbot" => Ok(AgentSpec::DumbBot),
            "hold" => Ok(AgentSpec::Hold),
            _ => Err(format!("unknown agent `{s}`")),
        }
    }
}

/// Picks uniformly among the legal orders of each location.
pub struct RandomAgent {
    rng: ChaCha8Rng,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        RandomAgent {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn name(&self) -> String {
        "random".into()
    }

    fn decide(&mut self, obs: &Observation) -> Vec<Order> {
        let mut slots: Vec<&LegalSet> = obs.legal.iter().map(|(_, s)| s).collect();
        if obs.state.phase().kind == PhaseKind::Adjustment {
            slots.shuffle(&mut self.rng);
            slots.truncate(obs.required);
        }
        slots
            .into_iter()
            .filter_map(|s| s.orders.choose(&mut self.rng).copied())
            .collect()
    }
}

/// Holds everything, waives builds and leaves disbands to the engine.
pub struct HoldAgent;

impl Agent for HoldAgent {
    fn name(&self) -> String {
        "hold".into()
    }

    fn decide(&mut self, obs: &Observation) -> Vec<Order> {
        match obs.state.phase().kind {
            PhaseKind::Movement => obs
                .legal
                .iter()
                .filter_map(|(_, s)| {
                    s.orders
                        .iter()
                        .find(|o| matches!(o, Order::Hold(_)))
                        .copied()
                })
                .collect(),
            _ => Vec::new(),
        }
    }
}

/// Distance in steps for a unit of `kind` from every location to the nearest
/// location whose province satisfies `target`. Unreachable locations get `u8::MAX`.
pub fn kind_distances(map: &MapGraph, kind: UnitKind, target: impl Fn(LocId) -> bool) -> Vec<u8> {
    let mut dist = vec![u8::MAX; map.len()];
    let mut queue = std::collections::VecDeque::new();
    for l in map.locations() {
        if map.can_occupy(l, kind) && target(map.province(l)) {
            dist[l.index()] = 0;
            queue.push_back(l);
        }
    }
    while let Some(l) = queue.pop_front() {
        for &n in map.adjacent(l, kind) {
            if dist[n.index()] == u8::MAX {
                dist[n.index()] = dist[l.index()] + 1;
                queue.push_back(n);
            }
        }
    }
    dist
}

fn move_dest(o: &Order) -> Option<LocId> {
    match *o {
        Order::Move {
            dest,
            via_convoy: false,
            ..
        } => Some(dest),
        _ => None,
    }
}

/// Grabs neighbouring supply centers it does not own (neutral first, then
/// foreign, then alphabetical); otherwise heads for the nearest one. Never
/// supports or convoys.
pub struct GreedyAgent;

impl GreedyAgent {
    fn movement(&self, obs: &Observation) -> Vec<Order> {
        let map = obs.map;
        let state = obs.state;
        let wanted =
            |p: LocId| map.is_supply_center(p) && state.sc_owner(map, p) != Some(obs.power);
        let dist = [
            kind_distances(map, UnitKind::Army, wanted),
            kind_distances(map, UnitKind::Fleet, wanted),
        ];
        let mut claimed: Vec<LocId> = Vec::new();
        let mut out = Vec::new();
        for (loc, set) in &obs.legal {
            let unit = state.unit_in(map, *loc).expect("unit to order");
            let moves: Vec<(Order, LocId)> = set
                .orders
                .iter()
                .filter_map(|o| move_dest(o).map(|d| (*o, d)))
                .filter(|(_, d)| !claimed.contains(&map.province(*d)))
                .collect();
            let grab = moves
                .iter()
                .filter(|(_, d)| wanted(map.province(*d)))
                .min_by_key(|(_, d)| (state.sc_owner(map, *d).is_some(), map.name(*d).to_string()));
            let d = &dist[(unit.kind == UnitKind::Fleet) as usize];
            let chosen = grab.copied().or_else(|| {
                let here = d[unit.loc.index()];
                moves
                    .iter()
                    .filter(|(_, to)| d[to.index()] < here)
                    .min_by_key(|(_, to)| (d[to.index()], map.name(*to).to_string()))
                    .copied()
            });
            match chosen {
                Some((o, to)) => {
                    claimed.push(map.province(to));
                    out.push(o);
                }
                None => {
                    claimed.push(map.province(unit.loc));
                    out.push(Order::Hold(UnitRef::from(unit)));
                }
            }
        }
        out
    }
}

impl Agent for GreedyAgent {
    fn name(&self) -> String {
        "greedy".into()
    }

    fn decide(&mut self, obs: &Observation) -> Vec<Order> {
        let map = obs.map;
        let state = obs.state;
        match state.phase().kind {
            PhaseKind::Movement => self.movement(obs),
            PhaseKind::Retreat => {
                let wanted =
                    |p: LocId| map.is_supply_center(p) && state.sc_owner(map, p) != Some(obs.power);
                let dist = [
                    kind_distances(map, UnitKind::Army, wanted),
                    kind_distances(map, UnitKind::Fleet, wanted),
                ];
                obs.legal
                    .iter()
                    .map(|(_, set)| {
                        set.orders
                            .iter()
                            .filter_map(|o| match *o {
                                Order::Retreat { unit, dest } => Some((
                                    dist[(unit.kind == UnitKind::Fleet) as usize][dest.index()],
                                    map.name(dest),
                                    *o,
                                )),
                                _ => None,
                            })
                            .min_by_key(|(d, name, _)| (*d, *name))
                            .map(|(_, _, o)| o)
                            .unwrap_or_else(|| *set.orders.last().expect("disband is always legal"))
                    })
                    .collect()
            }
            PhaseKind::Adjustment => adjust_by_rule(obs),
        }
    }
}

/// Builds armies where possible (fleets otherwise) at the first sites
/// alphabetically; disbands using the engine's distance rule.
fn adjust_by_rule(obs: &Observation) -> Vec<Order> {
    let map = obs.map;
    let state = obs.state;
    if obs
        .legal
        .iter()
        .any(|(_, s)| s.orders.iter().any(|o| matches!(o, Order::Build(_))))
    {
        let mut sites: Vec<&(LocId, LegalSet)> = obs.legal.iter().collect();
        sites.sort_by_key(|(l, _)| map.name(*l).to_string());
        sites
            .into_iter()
            .take(obs.required)
            .filter_map(|(_, s)| {
                s.orders
                    .iter()
                    .find(|o| matches!(o, Order::Build(u) if u.kind == UnitKind::Army))
                    .or_else(|| s.orders.iter().find(|o| matches!(o, Order::Build(_))))
                    .copied()
            })
            .collect()
    } else {
        let mut units: Vec<Unit> = state.units_of(obs.power).copied().collect();
        let mut out = Vec::new();
        for _ in 0..obs.required {
            let Some(u) = auto_disband_choice(map, state, &units, obs.power) else {
                break;
            };
            units.retain(|x| x.loc != u.loc);
            out.push(Order::Disband(UnitRef::from(&u)));
        }
        out
    }
}

/// Province-value bot: scores provinces from supply-center ownership and
/// threats, spreads the scores over the map, then sends units to the best
/// free destinations and turns spare units into supports.
pub struct DumbBot {
    rng: ChaCha8Rng,
    pub rounds: usize,
    pub decay: f64,
    pub noise: f64,
}

impl DumbBot {
    pub fn new(seed: u64) -> Self {
        DumbBot {
            rng: ChaCha8Rng::seed_from_u64(seed),
            rounds: 5,
            decay: 0.5,
            noise: 0.05,
        }
    }

    /// Value of every province (indexed by location, meaningful on provinces).
    pub fn province_values(&self, map: &MapGraph, state: &GameState, power: Power) -> Vec<f64> {
        let mut threat = vec![0usize; map.len()];
        for u in state.units().iter().filter(|u| u.owner != power) {
            for &d in map.adjacent(u.loc, u.kind) {
                threat[map.province(d).index()] += 1;
            }
        }
        let mut value = vec![0.0; map.len()];
        for p in map.provinces() {
            if !map.is_supply_center(p) {
                continue;
            }
            value[p.index()] = match state.sc_owner(map, p) {
                Some(o) if o == power => 10.0 * threat[p.index()] as f64,
                Some(o) => 10.0 + state.sc_count(o) as f64,
                None => 10.0,
            };
        }
        let provinces: Vec<LocId> = map.provinces().collect();
        let base = value.clone();
        for _ in 0..self.rounds {
            let prev = value.clone();
            for &p in &provinces {
                let ns = map.province_neighbours(p);
                if ns.is_empty() {
                    continue;
                }
                let mean = ns.iter().map(|n| prev[n.index()]).sum::<f64>() / ns.len() as f64;
                value[p.index()] = base[p.index()] + self.decay * mean;
            }
        }
        value
    }

    fn jitter(&mut self, v: f64) -> f64 {
        v * (1.0 + self.rng.gen_range(-self.noise..=self.noise))
    }

    fn movement(&mut self, obs: &Observation) -> Vec<Order> {
        let map = obs.map;
        let state = obs.state;
        let value = self.province_values(map, state, obs.power);
        let mut threat = vec![false; map.len()];
        for u in state.units().iter().filter(|u| u.owner != obs.power) {
            for &d in map.adjacent(u.loc, u.kind) {
                threat[map.province(d).index()] = true;
            }
            threat[map.province(u.loc).index()] = true;
        }
        // (value, slot, order, province)
        let mut options: Vec<(f64, usize, Order, LocId)> = Vec::new();
        for (i, (loc, set)) in obs.legal.iter().enumerate() {
            for o in &set.orders {
                let dest = match o {
                    Order::Hold(_) => *loc,
                    _ => match move_dest(o) {
                        Some(d) => d,
                        None => continue,
                    },
                };
                let p = map.province(dest);
                let v = self.jitter(value[p.index()]);
                options.push((v, i, *o, p));
            }
        }
        options.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
        let n = obs.legal.len();
        // Units left without a free destination hold, so their provinces are
        // reserved and the assignment is redone until every unit has one.
        let mut pinned = vec![false; n];
        let mut chosen: Vec<Option<(f64, Order, LocId)>>;
        loop {
            chosen = vec![None; n];
            let mut claimed = vec![false; map.len()];
            for (v, i, o, p) in &options {
                if pinned[*i] && matches!(o, Order::Hold(_)) {
                    chosen[*i] = Some((*v, *o, *p));
                    claimed[p.index()] = true;
                }
            }
            for (v, i, o, p) in &options {
                if chosen[*i].is_none() && !claimed[p.index()] {
                    chosen[*i] = Some((*v, *o, *p));
                    claimed[p.index()] = true;
                }
            }
            let stuck: Vec<usize> = (0..n).filter(|i| chosen[*i].is_none()).collect();
            if stuck.is_empty() {
                break;
            }
            for i in stuck {
                pinned[i] = true;
            }
        }
        let entered: Vec<LocId> = chosen
            .iter()
            .filter_map(|c| match c {
                Some((_, Order::Move { .. }, p)) => Some(*p),
                _ => None,
            })
            .collect();
        let mut out: Vec<Order> = chosen
            .iter()
            .map(|c| c.expect("every unit assigned").1)
            .collect();

        // Coordination: units whose own destination is worth less than a
        // contested friendly attack or a threatened friendly hold back it up.
        let mut targets: Vec<(f64, usize)> = (0..n)
            .filter_map(|i| {
                let (v, o, p) = chosen[i]?;
                let contested = threat[p.index()]
                    || state.unit_in(map, p).is_some_and(|u| u.owner != obs.power);
                let worth = matches!(o, Order::Move { .. }) || matches!(o, Order::Hold(_));
                (contested && worth).then_some((v, i))
            })
            .collect();
        targets.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut helper = vec![false; n];
        for (tv, ti) in targets {
            if helper[ti] {
                continue;
            }
            let target_order = out[ti];
            let Some(tu) = target_order.unit() else {
                continue;
            };
            for j in 0..n {
                if j == ti || helper[j] {
                    continue;
                }
                let own_v = chosen[j].map(|c| c.0).unwrap_or(0.0);
                let home = obs.legal[j].0;
                if own_v >= tv || entered.contains(&map.province(home)) {
                    continue;
                }
                let wanted = match target_order {
                    Order::Move { dest, .. } => Order::SupportMove {
                        unit: out[j].unit().expect("unit"),
                        target: tu,
                        dest: map.province(dest),
                    },
                    _ => Order::SupportHold {
                        unit: out[j].unit().expect("unit"),
                        target: tu,
                    },
                };
                if obs.legal[j].1.orders.binary_search(&wanted).is_ok() {
                    out[j] = wanted;
                    helper[j] = true;
                    break;
                }
            }
        }
        out
    }

    fn retreat(&mut self, obs: &Observation) -> Vec<Order> {
        let map = obs.map;
        let value = self.province_values(map, obs.state, obs.power);
        let mut taken: Vec<LocId> = Vec::new();
        let mut out = Vec::new();
        for (_, set) in &obs.legal {
            let mut best: Option<(f64, Order)> = None;
            for o in &set.orders {
                if let Order::Retreat { dest, .. } = *o {
                    let p = map.province(dest);
                    if taken.contains(&p) {
                        continue;
                    }
                    let v = self.jitter(value[p.index()]);
                    if best.is_none_or(|(bv, _)| v > bv) {
                        best = Some((v, *o));
                    }
                }
            }
            match best {
                Some((_, o)) => {
                    if let Order::Retreat { dest, .. } = o {
                        taken.push(map.province(dest));
                    }
                    out.push(o);
                }
                None => out.push(*set.orders.last().expect("disband is always legal")),
            }
        }
        out
    }

    fn adjustment(&mut self, obs: &Observation) -> Vec<Order> {
        let map = obs.map;
        let value = self.province_values(map, obs.state, obs.power);
        let around = |l: LocId, kind: UnitKind| -> f64 {
            map.adjacent(l, kind)
                .iter()
                .map(|d| value[map.province(*d).index()])
                .fold(0.0, f64::max)
        };
        let building = obs
            .legal
            .iter()
            .any(|(_, s)| s.orders.iter().any(|o| matches!(o, Order::Build(_))));
        let mut scored: Vec<(f64, Order)> = Vec::new();
        if building {
            for (_, set) in &obs.legal {
                let best = set
                    .orders
                    .iter()
                    .filter_map(|o| match *o {
                        Order::Build(u) => Some((around(u.loc, u.kind), *o)),
                        _ => None,
                    })
                    .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
                if let Some((v, o)) = best {
                    scored.push((self.jitter(v), o));
                }
            }
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        } else {
            for (loc, set) in &obs.legal {
                let v = value[map.province(*loc).index()];
                scored.push((self.jitter(v), set.orders[0]));
            }
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        scored
            .into_iter()
            .take(obs.required)
            .map(|(_, o)| o)
            .collect()
    }
}

impl Agent for DumbBot {
    fn name(&self) -> String {
        "dumbbot".into()
    }

    fn decide(&mut self, obs: &Observation) -> Vec<Order> {
        match obs.state.phase().kind {
            PhaseKind::Movement => self.movement(obs),
            PhaseKind::Retreat => self.retreat(obs),
            PhaseKind::Adjustment => self.adjustment(obs),
        }
    }
}
