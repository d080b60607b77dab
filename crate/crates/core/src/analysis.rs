//! Coalition metrics, order-prediction accuracy and dataset statistics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adjudicator::{adjudicate, counterfactual_without, OrderOutcome};
use crate::features::decode_ordering;
use crate::game::Outcome;
use crate::map::{LocId, MapGraph};
use crate::order::{validate_in, Order, OrderContext, Validity};
use crate::power::Power;
use crate::record::{replay, GameRecord};
use crate::state::{GameState, PhaseKind};

/// A movement phase: the position and every power's valid orders.
pub type PhaseOrders = (GameState, Vec<(Power, Order)>);

/// Support counts from one or more movement phases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportCounts {
    pub supports: usize,
    /// Supports given to another power's unit.
    pub x_supports: usize,
    /// Successful X-supports without which the supported order would have failed.
    pub effective_x_supports: usize,
}

impl std::ops::Add for SupportCounts {
    type Output = SupportCounts;

    fn add(self, o: SupportCounts) -> SupportCounts {
        SupportCounts {
            supports: self.supports + o.supports,
            x_supports: self.x_supports + o.x_supports,
            effective_x_supports: self.effective_x_supports + o.effective_x_supports,
        }
    }
}

/// How one support order was classified.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SupportVerdict {
    pub power: Power,
    pub order: Order,
    pub foreign: bool,
    pub effective: bool,
}

/// Classifies every support in one movement phase. `orders` must be valid
/// for `state`.
pub fn classify_supports(
    map: &MapGraph,
    state: &GameState,
    orders: &[(Power, Order)],
) -> Vec<SupportVerdict> {
    let plain: Vec<Order> = orders.iter().map(|(_, o)| *o).collect();
    let full = adjudicate(map, state, &plain).expect("valid orders adjudicate");
    let verdict_of = |res: &crate::adjudicator::Resolution, loc: LocId| {
        res.verdicts
            .iter()
            .find(|v| {
                v.order
                    .unit()
                    .is_some_and(|u| map.province(u.loc) == map.province(loc))
            })
            .copied()
    };
    let mut out = Vec::new();
    for (i, (power, order)) in orders.iter().enumerate() {
        let (target, dest) = match *order {
            Order::SupportHold { target, .. } => (target, None),
            Order::SupportMove { target, dest, .. } => (target, Some(dest)),
            _ => continue,
        };
        let owner = state.unit_in(map, target.loc).map(|u| u.owner);
        let foreign = owner != Some(*power);
        let mut effective = false;
        let succeeded = verdict_of(&full, order.unit().expect("support has a unit").loc)
            .is_some_and(|v| v.outcome == OrderOutcome::Succeeds);
        if foreign && succeeded {
            let without =
                counterfactual_without(map, state, &plain, i).expect("valid orders adjudicate");
            let before = verdict_of(&full, target.loc);
            let after = verdict_of(&without, target.loc);
            effective = match (dest, before, after) {
                (Some(_), Some(b), Some(a)) => {
                    matches!(b.order, Order::Move { .. })
                        && b.outcome == OrderOutcome::Succeeds
                        && a.outcome != OrderOutcome::Succeeds
                }
                (None, Some(b), Some(a)) => !b.dislodged && a.dislodged,
                _ => false,
            };
        }
        out.push(SupportVerdict {
            power: *power,
            order: *order,
            foreign,
            effective,
        });
    }
    out
}

pub fn count_supports(verdicts: &[SupportVerdict]) -> SupportCounts {
    SupportCounts {
        supports: verdicts.len(),
        x_supports: verdicts.iter().filter(|v| v.foreign).count(),
        effective_x_supports: verdicts.iter().filter(|v| v.effective).count(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalitionReport {
    pub counts: SupportCounts,
    /// Absent when no support was given.
    pub x_support_ratio: Option<f64>,
    /// Absent when no X-support was given.
    pub eff_x_support_ratio: Option<f64>,
    pub records: usize,
    /// Records that failed to replay and were left out.
    pub rejected: usize,
}

impl CoalitionReport {
    pub fn from_counts(counts: SupportCounts, records: usize, rejected: usize) -> Self {
        let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
        CoalitionReport {
            counts,
            x_support_ratio: ratio(counts.x_supports, counts.supports),
            eff_x_support_ratio: ratio(counts.effective_x_supports, counts.x_supports),
            records,
            rejected,
        }
    }

    pub const CSV_HEADER: &'static str = "variant,x_support_ratio,eff_x_support_ratio";

    pub fn csv_row(&self, variant: &str) -> String {
        let f = |r: Option<f64>| r.map(|x| format!("{x:.4}")).unwrap_or_default();
        format!(
            "{variant},{},{}",
            f(self.x_support_ratio),
            f(self.eff_x_support_ratio)
        )
    }
}

/// Orders the engine accepted in each movement phase of a record, with the
/// state they were given in.
pub fn movement_phases(
    map: &MapGraph,
    record: &GameRecord,
) -> Result<Vec<PhaseOrders>, crate::record::RecordError> {
    let states = record.states(map)?;
    let mut out = Vec::new();
    for (i, state) in states.iter().take(record.phases.len()).enumerate() {
        if state.phase().kind != PhaseKind::Movement {
            continue;
        }
        let ctx = OrderContext::new(map, state);
        let (set, _) = record.parsed_orders(map, i);
        let mut accepted = Vec::new();
        for (p, list) in &set {
            for (o, v) in validate_in(&ctx, *p, list).entries {
                if v == Validity::Valid {
                    accepted.push((*p, o));
                }
            }
        }
        out.push((state.clone(), accepted));
    }
    Ok(out)
}

fn record_counts(map: &MapGraph, record: &GameRecord) -> Option<SupportCounts> {
    if let Err(e) = replay(map, record) {
        log::warn!("skipping record: {e}");
        return None;
    }
    let phases = movement_phases(map, record).ok()?;
    Some(
        phases
            .iter()
            .map(|(s, o)| count_supports(&classify_supports(map, s, o)))
            .fold(SupportCounts::default(), |a, b| a + b),
    )
}

/// Coalition metrics over a set of records, one parallel task per record.
pub fn coalition_metrics(map: &MapGraph, records: &[GameRecord]) -> CoalitionReport {
    let per: Vec<Option<SupportCounts>> =
        records.par_iter().map(|r| record_counts(map, r)).collect();
    let rejected = per.iter().filter(|c| c.is_none()).count();
    let counts = per
        .into_iter()
        .flatten()
        .fold(SupportCounts::default(), |a, b| a + b);
    CoalitionReport::from_counts(counts, records.len() - rejected, rejected)
}

/// The orders one power gave (or was predicted to give) in one phase.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PowerOrders {
    pub phase: String,
    pub power: Power,
    pub orders: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AlignmentError {
    #[error("{predictions} prediction sets for {gold} gold sets")]
    Length { predictions: usize, gold: usize },
    #[error("entry {index}: prediction is for {predicted}, gold for {gold}")]
    Mismatch {
        index: usize,
        predicted: String,
        gold: String,
    },
    #[error("entry {index}: unparsable order `{order}`")]
    Unparsable { index: usize, order: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionBucket {
    /// 1-based position in decoding order.
    pub position: usize,
    pub correct: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub unit_orders: usize,
    pub unit_correct: usize,
    pub order_sets: usize,
    pub sets_correct: usize,
    pub unit_accuracy: Option<f64>,
    pub all_orders_accuracy: Option<f64>,
    /// Accuracy of gold support orders by the supporting unit's decode position.
    pub support_by_position: Vec<PositionBucket>,
}

/// Every power's recorded orders, phase by phase, as gold data.
pub fn gold_orders(record: &GameRecord) -> Vec<PowerOrders> {
    record
        .phases
        .iter()
        .flat_map(|ph| {
            ph.orders
                .iter()
                .filter(|(_, list)| !list.is_empty())
                .map(|(power, list)| PowerOrders {
                    phase: ph.name.clone(),
                    power: *power,
                    orders: list.clone(),
                })
        })
        .collect()
}

/// Province an order is about; `None` for waives.
fn slot(map: &MapGraph, o: &Order) -> Option<LocId> {
    match o {
        Order::Waive => None,
        Order::Build(u) => Some(map.province(u.loc)),
        _ => o.unit().map(|u| map.province(u.loc)),
    }
}

fn parse_all(map: &MapGraph, index: usize, texts: &[String]) -> Result<Vec<Order>, AlignmentError> {
    texts
        .iter()
        .map(|t| {
            crate::order::parse_order(map, t).map_err(|_| AlignmentError::Unparsable {
                index,
                order: t.clone(),
            })
        })
        .collect()
}

/// Compares predicted orders with gold orders, entry by entry.
pub fn accuracy_metrics(
    map: &MapGraph,
    predictions: &[PowerOrders],
    gold: &[PowerOrders],
) -> Result<AccuracyReport, AlignmentError> {
    if predictions.len() != gold.len() {
        return Err(AlignmentError::Length {
            predictions: predictions.len(),
            gold: gold.len(),
        });
    }
    let mut report = AccuracyReport {
        unit_orders: 0,
        unit_correct: 0,
        order_sets: 0,
        sets_correct: 0,
        unit_accuracy: None,
        all_orders_accuracy: None,
        support_by_position: Vec::new(),
    };
    for (i, (p, g)) in predictions.iter().zip(gold).enumerate() {
        if p.phase != g.phase || p.power != g.power {
            return Err(AlignmentError::Mismatch {
                index: i,
                predicted: format!("{} {}", p.power, p.phase),
                gold: format!("{} {}", g.power, g.phase),
            });
        }
        let pred = parse_all(map, i, &p.orders)?;
        let gold_orders = parse_all(map, i, &g.orders)?;
        let located: Vec<LocId> = gold_orders.iter().filter_map(|o| slot(map, o)).collect();
        let ordering = decode_ordering(map, &located);
        let mut used = vec![false; pred.len()];
        let mut all = pred.len() == gold_orders.len();
        for o in &gold_orders {
            let key = slot(map, o);
            let matched = pred
                .iter()
                .enumerate()
                .find(|(j, q)| !used[*j] && slot(map, q) == key)
                .map(|(j, q)| {
                    used[j] = true;
                    q == o
                })
                .unwrap_or(false);
            report.unit_orders += 1;
            report.unit_correct += usize::from(matched);
            all &= matched;
            if o.is_support() {
                let pos = 1 + ordering
                    .iter()
                    .position(|l| Some(*l) == key)
                    .expect("gold location ordered");
                if report.support_by_position.len() < pos {
                    report.support_by_position.extend(
                        (report.support_by_position.len() + 1..=pos).map(|position| {
                            PositionBucket {
                                position,
                                correct: 0,
                                total: 0,
                            }
                        }),
                    );
                }
                let b = &mut report.support_by_position[pos - 1];
                b.total += 1;
                b.correct += usize::from(matched);
            }
        }
        report.order_sets += 1;
        report.sets_correct += usize::from(all);
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    report.unit_accuracy = ratio(report.unit_correct, report.unit_orders);
    report.all_orders_accuracy = ratio(report.sets_correct, report.order_sets);
    Ok(report)
}

/// How a power ended a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameResult {
    Win,
    Draw,
    Defeated,
    /// Still on the board when another power soloed.
    Lost,
}

pub fn game_result(outcome: &Outcome, last: &GameState, power: Power) -> GameResult {
    match outcome {
        Outcome::Solo { winner } if *winner == power => GameResult::Win,
        _ if last.is_eliminated(power) => GameResult::Defeated,
        Outcome::Draw { survivors } if survivors.contains(&power) => GameResult::Draw,
        _ => GameResult::Lost,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerStats {
    pub power: Power,
    pub win: f64,
    pub draw: f64,
    pub defeated: f64,
    pub lost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub games: usize,
    /// Records skipped because the game had not ended or did not parse.
    pub skipped: usize,
    pub per_power: Vec<PowerStats>,
    /// `survival[p][q]`: percentage of games `p` won or drew in which `q`
    /// survived; absent when `p` never won or drew.
    pub survival: Vec<Vec<Option<f64>>>,
}

/// Per-power results and survival cross-table over finished games.
pub fn dataset_stats(map: &MapGraph, records: &[GameRecord]) -> DatasetStats {
    let finals: Vec<(Outcome, GameState)> = records
        .iter()
        .filter(|r| r.outcome.is_over())
        .filter_map(|r| {
            r.states(map)
                .ok()
                .and_then(|s| s.last().cloned())
                .map(|s| (r.outcome.clone(), s))
        })
        .collect();
    let games = finals.len();
    let mut counts = [[0usize; 4]; 7];
    let mut good = [0usize; 7];
    let mut alive = [[0usize; 7]; 7];
    for (outcome, last) in &finals {
        for p in Power::ALL {
            let r = game_result(outcome, last, p);
            counts[p.index()][r as usize] += 1;
            if matches!(r, GameResult::Win | GameResult::Draw) {
                good[p.index()] += 1;
                for q in Power::ALL {
                    alive[p.index()][q.index()] += usize::from(!last.is_eliminated(q));
                }
            }
        }
    }
    let pct = |a: usize, b: usize| {
        if b == 0 {
            0.0
        } else {
            100.0 * a as f64 / b as f64
        }
    };
    DatasetStats {
        games,
        skipped: records.len() - games,
        per_power: Power::ALL
            .iter()
            .map(|p| {
                let c = counts[p.index()];
                PowerStats {
                    power: *p,
                    win: pct(c[0], games),
                    draw: pct(c[1], games),
                    defeated: pct(c[2], games),
                    lost: pct(c[3], games),
                }
            })
            .collect(),
        survival: Power::ALL
            .iter()
            .map(|p| {
                Power::ALL
                    .iter()
                    .map(|q| {
                        (good[p.index()] > 0)
                            .then(|| pct(alive[p.index()][q.index()], good[p.index()]))
                    })
                    .collect()
            })
            .collect(),
    }
}
