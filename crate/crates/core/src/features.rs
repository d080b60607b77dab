//! Board and previous-order encodings, the order vocabulary, legality masks
//! and the decoder's location ordering.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::game::{Game, MovementOrders};
use crate::map::{LocId, LocKind, MapGraph, UnitKind};
use crate::matrix::Matrix;
use crate::order::{Order, OrderContext, UnitRef};
use crate::power::Power;
use crate::record::{replay, GameRecord, RecordError};
use crate::state::{GameState, PhaseKind};

/// Bumped whenever a tensor layout or the vocabulary construction changes.
pub const LAYOUT_VERSION: u32 = 1;

pub const BOARD_FEATURES: usize = 35;
pub const PREV_FEATURES: usize = 40;

/// Column offsets of the board tensor blocks.
pub mod board {
    pub const UNIT_KIND: usize = 0;
    pub const UNIT_OWNER: usize = 3;
    pub const BUILDABLE: usize = 11;
    pub const REMOVABLE: usize = 12;
    pub const DISLODGED_KIND: usize = 13;
    pub const DISLODGED_OWNER: usize = 16;
    pub const PROVINCE_KIND: usize = 24;
    pub const SC_OWNER: usize = 27;
}

/// Column offsets of the previous-order tensor blocks.
pub mod prev {
    pub const UNIT_KIND: usize = 0;
    pub const ISSUER: usize = 3;
    pub const ORDER_KIND: usize = 11;
    pub const SUPPORTED_OWNER: usize = 16;
    pub const DEST_OPPONENT: usize = 24;
    pub const DEST_SC_OWNER: usize = 32;
}

/// One-hot blocks as (offset, width), shared by tests and consumers.
pub const BOARD_ONE_HOTS: [(usize, usize); 6] = [
    (board::UNIT_KIND, 3),
    (board::UNIT_OWNER, 8),
    (board::DISLODGED_KIND, 3),
    (board::DISLODGED_OWNER, 8),
    (board::PROVINCE_KIND, 3),
    (board::SC_OWNER, 8),
];
pub const PREV_ONE_HOTS: [(usize, usize); 6] = [
    (prev::UNIT_KIND, 3),
    (prev::ISSUER, 8),
    (prev::ORDER_KIND, 5),
    (prev::SUPPORTED_OWNER, 8),
    (prev::DEST_OPPONENT, 8),
    (prev::DEST_SC_OWNER, 8),
];

// The none category is the last slot of every one-hot block.
const NO_KIND: usize = 2;
const NO_POWER: usize = 7;

pub const ORDER_HOLD: usize = 0;
pub const ORDER_MOVE: usize = 1;
pub const ORDER_SUPPORT: usize = 2;
pub const ORDER_CONVOY: usize = 3;
pub const ORDER_NONE: usize = 4;

fn kind_slot(k: Option<UnitKind>) -> usize {
    match k {
        Some(UnitKind::Army) => 0,
        Some(UnitKind::Fleet) => 1,
        None => NO_KIND,
    }
}

fn power_slot(p: Option<Power>) -> usize {
    p.map_or(NO_POWER, Power::index)
}

/// Rows a unit on `loc` is written to: its own, plus the parent province's
/// when it stands on a coast.
fn rows_for(map: &MapGraph, loc: LocId) -> impl Iterator<Item = usize> {
    let parent = map.province(loc);
    let extra = (parent != loc).then_some(parent.index());
    std::iter::once(loc.index()).chain(extra)
}

fn one_hot(m: &mut Matrix, row: usize, offset: usize, slot: usize) {
    m.set(row, offset + slot, 1.0);
}

/// Clears a block and sets one slot.
fn put(m: &mut Matrix, row: usize, offset: usize, width: usize, slot: usize) {
    for c in offset..offset + width {
        m.set(row, c, 0.0);
    }
    one_hot(m, row, offset, slot);
}

/// Encodes the board, one row per location in index order.
pub fn encode_board(map: &MapGraph, state: &GameState) -> Matrix {
    let n = map.len();
    let mut m = Matrix::zeros(n, BOARD_FEATURES);
    for l in map.locations() {
        let r = l.index();
        one_hot(&mut m, r, board::UNIT_KIND, NO_KIND);
        one_hot(&mut m, r, board::UNIT_OWNER, NO_POWER);
        one_hot(&mut m, r, board::DISLODGED_KIND, NO_KIND);
        one_hot(&mut m, r, board::DISLODGED_OWNER, NO_POWER);
        let pk = match map.kind(l) {
            LocKind::Land => 0,
            LocKind::Water => 1,
            LocKind::Coastal => 2,
        };
        one_hot(&mut m, r, board::PROVINCE_KIND, pk);
        let sc = if map.is_supply_center(l) {
            state.sc_owner(map, l)
        } else {
            None
        };
        one_hot(&mut m, r, board::SC_OWNER, power_slot(sc));
    }
    let adjusting = state.phase().kind == PhaseKind::Adjustment;
    let ctx = OrderContext::new(map, state);
    for u in state.units() {
        let removable = adjusting && ctx.build_count(u.owner) < 0;
        for r in rows_for(map, u.loc) {
            put(&mut m, r, board::UNIT_KIND, 3, kind_slot(Some(u.kind)));
            put(&mut m, r, board::UNIT_OWNER, 8, power_slot(Some(u.owner)));
            m.set(r, board::REMOVABLE, f64::from(u8::from(removable)));
        }
    }
    for d in state.dislodged() {
        for r in rows_for(map, d.unit.loc) {
            put(
                &mut m,
                r,
                board::DISLODGED_KIND,
                3,
                kind_slot(Some(d.unit.kind)),
            );
            put(
                &mut m,
                r,
                board::DISLODGED_OWNER,
                8,
                power_slot(Some(d.unit.owner)),
            );
        }
    }
    if adjusting {
        for p in map.provinces() {
            for o in ctx.legal_orders(p).orders {
                if let Order::Build(u) = o {
                    for r in rows_for(map, u.loc) {
                        m.set(r, board::BUILDABLE, 1.0);
                    }
                }
            }
        }
    }
    m
}

fn owner_at(state: &GameState, map: &MapGraph, province: LocId) -> Option<Power> {
    state.unit_in(map, province).map(|u| u.owner)
}

/// Encodes the orders of the last movement phase, one row per location.
/// Rows without an order use the none categories in every block.
pub fn encode_prev_orders(map: &MapGraph, last: Option<&MovementOrders>) -> Matrix {
    let n = map.len();
    let mut m = Matrix::zeros(n, PREV_FEATURES);
    for r in 0..n {
        for (offset, width) in PREV_ONE_HOTS {
            one_hot(&mut m, r, offset, width - 1);
        }
    }
    let Some(last) = last else { return m };
    let state = &last.state;
    for (power, order) in &last.orders {
        let Some(unit) = order.unit() else { continue };
        let (kind, supported, dest) = match *order {
            Order::Hold(_) => (ORDER_HOLD, None, None),
            Order::Move { dest, .. } => (ORDER_MOVE, None, Some(dest)),
            Order::SupportHold { target, .. } => (
                ORDER_SUPPORT,
                owner_at(state, map, target.loc),
                Some(target.loc),
            ),
            Order::SupportMove { target, dest, .. } => {
                (ORDER_SUPPORT, owner_at(state, map, target.loc), Some(dest))
            }
            Order::Convoy { army, dest, .. } => {
                (ORDER_CONVOY, owner_at(state, map, army.loc), Some(dest))
            }
            _ => continue,
        };
        let (opponent, dest_sc) = match dest {
            Some(d) => {
                let sc = if map.is_supply_center(d) {
                    state.sc_owner(map, d)
                } else {
                    None
                };
                (owner_at(state, map, d).or(sc), sc)
            }
            None => (None, None),
        };
        for r in rows_for(map, unit.loc) {
            put(&mut m, r, prev::UNIT_KIND, 3, kind_slot(Some(unit.kind)));
            put(&mut m, r, prev::ISSUER, 8, power_slot(Some(*power)));
            put(&mut m, r, prev::ORDER_KIND, 5, kind);
            put(&mut m, r, prev::SUPPORTED_OWNER, 8, power_slot(supported));
            put(&mut m, r, prev::DEST_OPPONENT, 8, power_slot(opponent));
            put(&mut m, r, prev::DEST_SC_OWNER, 8, power_slot(dest_sc));
        }
    }
    m
}

/// Every order the map allows in any position, plus `WAIVE`, in a fixed order.
#[derive(Debug, Clone)]
pub struct OrderVocabulary {
    orders: Vec<Order>,
    index: HashMap<Order, usize>,
    /// Candidate indices per province.
    by_province: Vec<Vec<usize>>,
}

fn units_on(map: &MapGraph, province: LocId) -> Vec<UnitRef> {
    let mut out = Vec::new();
    for kind in [UnitKind::Army, UnitKind::Fleet] {
        if map.can_occupy(province, kind) {
            out.push(UnitRef {
                kind,
                loc: province,
            });
        }
        for &c in map.coasts(province) {
            if map.can_occupy(c, kind) {
                out.push(UnitRef { kind, loc: c });
            }
        }
    }
    out
}

fn convoyable(map: &MapGraph, province: LocId) -> bool {
    map.kind(province) == LocKind::Coastal && !map.seas(province).is_empty()
}

impl OrderVocabulary {
    pub fn new(map: &MapGraph) -> Self {
        let units: Vec<UnitRef> = map.provinces().flat_map(|p| units_on(map, p)).collect();
        let reach = |u: &UnitRef| -> BTreeSet<LocId> {
            map.adjacent(u.loc, u.kind)
                .iter()
                .map(|d| map.province(*d))
                .collect()
        };
        let can_reach = |u: &UnitRef, province: LocId| {
            map.reaches_province(u.loc, u.kind, province)
                || (u.kind == UnitKind::Army
                    && convoyable(map, map.province(u.loc))
                    && convoyable(map, province)
                    && province != map.province(u.loc))
        };
        let mut set = BTreeSet::new();
        set.insert(Order::Waive);
        for u in &units {
            let here = map.province(u.loc);
            set.insert(Order::Hold(*u));
            set.insert(Order::Disband(*u));
            for &d in map.adjacent(u.loc, u.kind) {
                set.insert(Order::Move {
                    unit: *u,
                    dest: d,
                    via_convoy: false,
                });
                set.insert(Order::Retreat { unit: *u, dest: d });
            }
            if u.kind == UnitKind::Army && convoyable(map, here) {
                for dest in map
                    .provinces()
                    .filter(|d| *d != here && convoyable(map, *d))
                {
                    set.insert(Order::Move {
                        unit: *u,
                        dest,
                        via_convoy: true,
                    });
                }
            }
            if map.home_power(here).is_some() && map.is_supply_center(here) {
                set.insert(Order::Build(*u));
            }
            let reachable = reach(u);
            for t in &units {
                let there = map.province(t.loc);
                if there == here {
                    continue;
                }
                if reachable.contains(&there) {
                    set.insert(Order::SupportHold {
                        unit: *u,
                        target: *t,
                    });
                }
                for &dest in &reachable {
                    if dest != there && can_reach(t, dest) {
                        set.insert(Order::SupportMove {
                            unit: *u,
                            target: *t,
                            dest,
                        });
                    }
                }
            }
            if u.kind == UnitKind::Fleet && map.kind(u.loc) == LocKind::Water {
                for a in units
                    .iter()
                    .filter(|a| a.kind == UnitKind::Army && convoyable(map, a.loc))
                {
                    for dest in map
                        .provinces()
                        .filter(|d| *d != a.loc && convoyable(map, *d))
                    {
                        set.insert(Order::Convoy {
                            unit: *u,
                            army: *a,
                            dest,
                        });
                    }
                }
            }
        }
        let orders: Vec<Order> = set.into_iter().collect();
        let index = orders.iter().enumerate().map(|(i, o)| (*o, i)).collect();
        let mut by_province = vec![Vec::new(); map.len()];
        for (i, o) in orders.iter().enumerate() {
            match o.unit() {
                Some(u) => by_province[map.province(u.loc).index()].push(i),
                None => {
                    for p in map
                        .provinces()
                        .filter(|p| map.home_power(*p).is_some() && map.is_supply_center(*p))
                    {
                        by_province[p.index()].push(i);
                    }
                }
            }
        }
        OrderVocabulary {
            orders,
            index,
            by_province,
        }
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn order(&self, i: usize) -> Order {
        self.orders[i]
    }

    pub fn index_of(&self, order: &Order) -> Option<usize> {
        self.index.get(order).copied()
    }

    /// Indices of every order a unit or build at `loc`'s province could receive.
    pub fn candidates(&self, map: &MapGraph, loc: LocId) -> &[usize] {
        &self.by_province[map.province(loc).index()]
    }

    /// Order texts in index order.
    pub fn texts(&self, map: &MapGraph) -> Vec<String> {
        self.orders.iter().map(|o| o.to_text(map)).collect()
    }
}

/// Vocabulary indices of the legal orders at `loc`, ascending.
pub fn legal_indices(vocab: &OrderVocabulary, ctx: &OrderContext, loc: LocId) -> Vec<usize> {
    let mut out: Vec<usize> = ctx
        .legal_orders(loc)
        .orders
        .iter()
        .map(|o| vocab.index_of(o).expect("legal order in vocabulary"))
        .collect();
    out.sort_unstable();
    out
}

/// Boolean mask over the vocabulary, true exactly on the legal orders at `loc`.
pub fn legality_mask(
    vocab: &OrderVocabulary,
    map: &MapGraph,
    state: &GameState,
    loc: LocId,
) -> Vec<bool> {
    let mut mask = vec![false; vocab.len()];
    for i in legal_indices(vocab, &OrderContext::new(map, state), loc) {
        mask[i] = true;
    }
    mask
}

/// Position of every location in the decoding order: a graph traversal from
/// the north-west corner that always expands the discovered location closest
/// to the top-left, measured as `x + y` and then `y`.
pub fn decode_ranking(map: &MapGraph) -> Vec<usize> {
    let key = |l: LocId| {
        let (x, y) = map.coordinates(l);
        (x + y, y, x, l)
    };
    let mut rank = vec![usize::MAX; map.len()];
    let mut frontier = BTreeSet::new();
    let mut next = 0;
    while next < map.len() {
        if frontier.is_empty() {
            let seed = map
                .locations()
                .filter(|l| rank[l.index()] == usize::MAX)
                .min_by_key(|l| key(*l));
            frontier.insert(key(seed.expect("unvisited location")));
        }
        let (.., l) = frontier.pop_first().expect("non-empty frontier");
        if rank[l.index()] != usize::MAX {
            continue;
        }
        rank[l.index()] = next;
        next += 1;
        for &nb in map.neighbours(l) {
            if rank[nb.index()] == usize::MAX {
                frontier.insert(key(nb));
            }
        }
    }
    rank
}

/// Sorts orderable locations into decoding order.
pub fn decode_ordering(map: &MapGraph, locations: &[LocId]) -> Vec<LocId> {
    let rank = decode_ranking(map);
    let mut out = locations.to_vec();
    out.sort_by_key(|l| rank[l.index()]);
    out
}

/// A matrix with its layout version, as written to disk or the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    pub layout: u32,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

impl From<&Matrix> for Tensor {
    fn from(m: &Matrix) -> Self {
        Tensor {
            layout: LAYOUT_VERSION,
            shape: [m.rows, m.cols],
            data: m.data.clone(),
        }
    }
}

impl Tensor {
    pub fn to_matrix(&self) -> Result<Matrix, String> {
        if self.layout != LAYOUT_VERSION {
            return Err(format!(
                "tensor layout {} (expected {LAYOUT_VERSION})",
                self.layout
            ));
        }
        if self.shape[0] * self.shape[1] != self.data.len() {
            return Err("tensor shape does not match its data".into());
        }
        Ok(Matrix {
            rows: self.shape[0],
            cols: self.shape[1],
            data: self.data.clone(),
        })
    }
}

/// Model inputs and target orders of one recorded phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedPhase {
    pub phase: String,
    pub board: Tensor,
    pub prev_orders: Tensor,
    /// Vocabulary indices of each power's valid orders, in decoding order.
    pub orders: BTreeMap<Power, Vec<usize>>,
}

/// Encodes every phase of a record. The record must replay exactly.
pub fn encode_record(
    map: &MapGraph,
    vocab: &OrderVocabulary,
    record: &GameRecord,
) -> Result<Vec<EncodedPhase>, RecordError> {
    replay(map, record)?;
    let rank = decode_ranking(map);
    let position = |o: &Order| match o {
        Order::Waive => usize::MAX,
        Order::Build(u) => rank[u.loc.index()],
        _ => o.unit().map_or(usize::MAX, |u| rank[u.loc.index()]),
    };
    let mut game = Game::new(map, record.rules);
    let mut out = Vec::with_capacity(record.phases.len());
    for (i, ph) in record.phases.iter().enumerate() {
        let (orders, _) = record.parsed_orders(map, i);
        let ctx = OrderContext::new(map, game.state());
        let mut targets = BTreeMap::new();
        for (&power, list) in &orders {
            let mut valid: Vec<Order> = list
                .iter()
                .filter(|o| ctx.check(power, o).is_ok())
                .copied()
                .collect();
            valid.sort_by_key(|o| position(o));
            targets.insert(
                power,
                valid.iter().filter_map(|o| vocab.index_of(o)).collect(),
            );
        }
        out.push(EncodedPhase {
            phase: ph.name.clone(),
            board: Tensor::from(&encode_board(map, game.state())),
            prev_orders: Tensor::from(&encode_prev_orders(map, game.last_movement())),
            orders: targets,
        });
        game.step(&orders).map_err(|e| RecordError::Divergence {
            index: i,
            phase: ph.name.clone(),
            message: e.to_string(),
        })?;
    }
    Ok(out)
}
