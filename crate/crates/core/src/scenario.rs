//! Text scenarios for adjudication conformance.
//!
//! ```text
//! case supported attack dislodges
//! phase S1901M
//! unit FRANCE A PAR
//! unit FRANCE A MAR
//! unit GERMANY A BUR
//! order FRANCE A PAR - BUR
//! order FRANCE A MAR S A PAR - BUR
//! expect A PAR - BUR : succeeds
//! expect-dislodged A BUR
//! end
//! ```
//!
//! Setup lines: `phase`, `unit POWER K LOC`, `dislodged POWER K LOC from LOC|-`,
//! `standoff LOC`, `center POWER LOC`, `order POWER ORDER`.
//! Checks: `expect ORDER : OUTCOME`, `expect-invalid ORDER`,
//! `expect-dislodged K LOC` (the full dislodged set), `expect-standoff LOC`,
//! `expect-no-standoff LOC`,
//! `expect-unit POWER K LOC`, `expect-no-unit LOC`, `expect-phase CODE`.
//! Invalid orders are reported and replaced by the default (hold or nothing).

use std::collections::BTreeSet;

use crate::adjudicator::{adjudicate, AdjudicationError, OrderOutcome, Resolution};
use crate::map::{LocId, MapGraph, UnitKind};
use crate::order::{parse_order, validate, InvalidReason, Order, Validity};
use crate::power::Power;
use crate::state::{Dislodged, GameState, Phase, Unit};

/// The bundled conformance corpus.
pub const STANDARD_CORPUS: &str = include_str!("../data/conformance.txt");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ScenarioError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Check {
    Outcome(Order, OrderOutcome),
    Invalid(Order),
    Dislodged(UnitKind, LocId),
    Standoff(LocId),
    NoStandoff(LocId),
    Unit(Power, UnitKind, LocId),
    NoUnit(LocId),
    Phase(Phase),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub line: usize,
    pub state: GameState,
    pub orders: Vec<(Power, Order)>,
    checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioReport {
    pub name: String,
    pub failures: Vec<String>,
}

impl ScenarioReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

fn err(line: usize, message: impl Into<String>) -> ScenarioError {
    ScenarioError {
        line,
        message: message.into(),
    }
}

fn parse_unit_kind(line: usize, s: &str) -> Result<UnitKind, ScenarioError> {
    match s {
        "A" => Ok(UnitKind::Army),
        "F" => Ok(UnitKind::Fleet),
        _ => Err(err(line, format!("bad unit kind `{s}`"))),
    }
}

fn parse_outcome(line: usize, s: &str) -> Result<OrderOutcome, ScenarioError> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| err(line, format!("unknown outcome `{s}`")))
}

#[derive(Default)]
struct Draft {
    name: String,
    line: usize,
    phase: Option<Phase>,
    units: Vec<Unit>,
    dislodged: Vec<Dislodged>,
    standoffs: Vec<LocId>,
    centers: Vec<(Power, LocId)>,
    orders: Vec<(Power, Order)>,
    checks: Vec<Check>,
}

/// Parses a file of scenarios.
pub fn parse_scenarios(map: &MapGraph, text: &str) -> Result<Vec<Scenario>, ScenarioError> {
    let mut out = Vec::new();
    let mut cur: Option<Draft> = None;
    for (idx, raw) in text.lines().enumerate() {
        let n = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
        let rest = rest.trim();
        if head == "case" {
            if cur.is_some() {
                return Err(err(n, "`case` before `end`"));
            }
            cur = Some(Draft {
                name: rest.to_string(),
                line: n,
                ..Draft::default()
            });
            continue;
        }
        let Some(d) = cur.as_mut() else {
            return Err(err(n, format!("`{head}` outside a case")));
        };
        let loc = |s: &str| map.loc(s).map_err(|e| err(n, e.to_string()));
        let power = |s: &str| s.parse::<Power>().map_err(|e| err(n, e.to_string()));
        let order = |s: &str| parse_order(map, s).map_err(|e| err(n, e.to_string()));
        let words: Vec<&str> = rest.split_whitespace().collect();
        match head {
            "phase" => {
                d.phase = Some(
                    rest.parse()
                        .map_err(|e: crate::state::StateError| err(n, e.to_string()))?,
                )
            }
            "unit" | "dislodged" => {
                if words.len() < 3 {
                    return Err(err(n, "expected POWER KIND LOC"));
                }
                let unit = Unit {
                    owner: power(words[0])?,
                    kind: parse_unit_kind(n, words[1])?,
                    loc: loc(words[2])?,
                };
                if head == "unit" {
                    d.units.push(unit);
                } else {
                    let attacker_from = match words.get(3..) {
                        Some(["from", "-"]) => None,
                        Some(["from", l]) => Some(map.province(loc(l)?)),
                        _ => return Err(err(n, "expected `from LOC` or `from -`")),
                    };
                    d.dislodged.push(Dislodged {
                        unit,
                        attacker_from,
                    });
                }
            }
            "standoff" => d.standoffs.push(map.province(loc(rest)?)),
            "center" => {
                if words.len() != 2 {
                    return Err(err(n, "expected POWER LOC"));
                }
                d.centers
                    .push((power(words[0])?, map.province(loc(words[1])?)));
            }
            "order" => {
                let (p, o) = rest
                    .split_once(' ')
                    .ok_or_else(|| err(n, "expected POWER ORDER"))?;
                d.orders.push((power(p)?, order(o)?));
            }
            "expect" => {
                let (o, outcome) = rest
                    .rsplit_once(':')
                    .ok_or_else(|| err(n, "expected ORDER : OUTCOME"))?;
                d.checks.push(Check::Outcome(
                    order(o.trim())?,
                    parse_outcome(n, outcome.trim())?,
                ));
            }
            "expect-invalid" => d.checks.push(Check::Invalid(order(rest)?)),
            "expect-dislodged" => {
                if words.len() != 2 {
                    return Err(err(n, "expected KIND LOC"));
                }
                d.checks.push(Check::Dislodged(
                    parse_unit_kind(n, words[0])?,
                    loc(words[1])?,
                ));
            }
            "expect-standoff" => d.checks.push(Check::Standoff(map.province(loc(rest)?))),
            "expect-no-standoff" => d.checks.push(Check::NoStandoff(map.province(loc(rest)?))),
            "expect-unit" => {
                if words.len() != 3 {
                    return Err(err(n, "expected POWER KIND LOC"));
                }
                d.checks.push(Check::Unit(
                    power(words[0])?,
                    parse_unit_kind(n, words[1])?,
                    loc(words[2])?,
                ));
            }
            "expect-no-unit" => d.checks.push(Check::NoUnit(map.province(loc(rest)?))),
            "expect-phase" => d
                .checks
                .push(Check::Phase(rest.parse().map_err(
                    |e: crate::state::StateError| err(n, e.to_string()),
                )?)),
            "end" => {
                let d = cur.take().expect("open case");
                let phase = d.phase.unwrap_or_else(Phase::opening);
                let mut owner = vec![None; map.len()];
                for (p, l) in &d.centers {
                    owner[l.index()] = Some(*p);
                }
                let state =
                    GameState::try_new(map, phase, d.units, d.dislodged, owner, d.standoffs)
                        .map_err(|e| err(d.line, e))?;
                out.push(Scenario {
                    name: d.name,
                    line: d.line,
                    state,
                    orders: d.orders,
                    checks: d.checks,
                });
            }
            other => return Err(err(n, format!("unknown directive `{other}`"))),
        }
    }
    if let Some(d) = cur {
        return Err(err(d.line, "case without `end`"));
    }
    Ok(out)
}

impl Scenario {
    pub fn has_checks(&self) -> bool {
        !self.checks.is_empty()
    }
}

/// A scenario's phase after validation and adjudication.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub resolution: Resolution,
    /// Orders rejected at validation, with the power that sent them.
    pub rejected: Vec<(Power, Order, InvalidReason)>,
}

impl Resolved {
    /// Whether no unit moved, appeared or vanished and no center changed hands.
    pub fn no_changes(&self, before: &GameState) -> bool {
        let next = &self.resolution.next;
        self.resolution.dislodged.is_empty()
            && next.units() == before.units()
            && next.ownership() == before.ownership()
    }
}

/// Validates each power's orders and adjudicates the accepted ones.
pub fn resolve(map: &MapGraph, sc: &Scenario) -> Result<Resolved, AdjudicationError> {
    let mut accepted = Vec::new();
    let mut rejected = Vec::new();
    for p in Power::ALL {
        let mine: Vec<Order> = sc
            .orders
            .iter()
            .filter(|(q, _)| *q == p)
            .map(|(_, o)| *o)
            .collect();
        for (o, v) in validate(map, &sc.state, p, &mine).entries {
            match v {
                Validity::Valid => accepted.push(o),
                Validity::Invalid(reason) => rejected.push((p, o, reason)),
            }
        }
    }
    Ok(Resolved {
        resolution: adjudicate(map, &sc.state, &accepted)?,
        rejected,
    })
}

/// Runs one scenario and reports every failed check.
pub fn run_scenario(map: &MapGraph, sc: &Scenario) -> ScenarioReport {
    let mut failures = Vec::new();
    let (resolution, invalid) = match resolve(map, sc) {
        Ok(r) => (
            r.resolution,
            r.rejected
                .into_iter()
                .map(|(_, o, _)| o)
                .collect::<BTreeSet<Order>>(),
        ),
        Err(e) => {
            return ScenarioReport {
                name: sc.name.clone(),
                failures: vec![format!("adjudication rejected orders: {e}")],
            }
        }
    };
    let unit_loc = |o: &Order| match *o {
        Order::Build(u) => Some(u.loc),
        _ => o.unit().map(|u| u.loc),
    };
    let mut expected_dislodged = BTreeSet::new();
    for check in &sc.checks {
        match check {
            Check::Outcome(o, want) => {
                let at = unit_loc(o).map(|l| map.province(l));
                let found = resolution
                    .verdicts
                    .iter()
                    .find(|v| unit_loc(&v.order).map(|l| map.province(l)) == at);
                match found {
                    None => failures.push(format!("no result for `{}`", o.to_text(map))),
                    Some(v) if v.order != *o && !invalid.contains(o) => failures.push(format!(
                        "`{}` was resolved as `{}`",
                        o.to_text(map),
                        v.order.to_text(map)
                    )),
                    Some(v) if v.outcome != *want => failures.push(format!(
                        "`{}`: expected {want:?}, got {:?}",
                        o.to_text(map),
                        v.outcome
                    )),
                    Some(_) => {}
                }
            }
            Check::Invalid(o) => {
                if !invalid.contains(o) {
                    failures.push(format!("`{}` should have been rejected", o.to_text(map)));
                }
            }
            Check::Dislodged(k, l) => {
                expected_dislodged.insert((*k, *l));
            }
            Check::Standoff(p) => {
                if !resolution.standoffs.contains(p) {
                    failures.push(format!("expected a standoff in {}", map.name(*p)));
                }
            }
            Check::NoStandoff(p) => {
                if resolution.standoffs.contains(p) {
                    failures.push(format!("unexpected standoff in {}", map.name(*p)));
                }
            }
            Check::Unit(p, k, l) => {
                let ok = resolution
                    .next
                    .units()
                    .iter()
                    .any(|u| u.owner == *p && u.kind == *k && u.loc == *l);
                if !ok {
                    failures.push(format!(
                        "expected {p} {} {} after resolution",
                        k.letter(),
                        map.name(*l)
                    ));
                }
            }
            Check::NoUnit(p) => {
                if let Some(u) = resolution.next.unit_in(map, *p) {
                    failures.push(format!(
                        "expected {} empty, found {} {}",
                        map.name(*p),
                        u.owner,
                        u.kind.letter()
                    ));
                }
            }
            Check::Phase(ph) => {
                if resolution.next.phase() != *ph {
                    failures.push(format!(
                        "expected next phase {ph}, got {}",
                        resolution.next.phase()
                    ));
                }
            }
        }
    }
    for o in &invalid {
        if !sc.checks.contains(&Check::Invalid(*o)) {
            failures.push(format!("`{}` was unexpectedly rejected", o.to_text(map)));
        }
    }
    let got: BTreeSet<(UnitKind, LocId)> = resolution
        .dislodged
        .iter()
        .map(|d| (d.unit.kind, d.unit.loc))
        .collect();
    if got != expected_dislodged {
        let show = |s: &BTreeSet<(UnitKind, LocId)>| {
            s.iter()
                .map(|(k, l)| format!("{} {}", k.letter(), map.name(*l)))
                .collect::<Vec<_>>()
                .join(", ")
        };
        failures.push(format!(
            "dislodged: expected [{}], got [{}]",
            show(&expected_dislodged),
            show(&got)
        ));
    }
    ScenarioReport {
        name: sc.name.clone(),
        failures,
    }
}

/// Parses and runs every scenario in `text`.
pub fn run_corpus(map: &MapGraph, text: &str) -> Result<Vec<ScenarioReport>, ScenarioError> {
    Ok(parse_scenarios(map, text)?
        .iter()
        .map(|s| run_scenario(map, s))
        .collect())
}
