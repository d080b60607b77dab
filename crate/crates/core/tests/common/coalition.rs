//! Movement phases whose supports have a known classification.

use nopress::map::MapGraph;
use nopress::order::{parse_order, Order};
use nopress::record::StateSnapshot;
use nopress::state::GameState;
use nopress::Power;
use Power::*;

pub struct Case {
    pub name: &'static str,
    pub units: &'static [(Power, &'static str)],
    pub orders: &'static [(Power, &'static str)],
    /// Each support order with whether it is foreign and whether it is effective.
    pub expected: &'static [(&'static str, bool, bool)],
}

impl Case {
    pub fn state(&self, map: &MapGraph) -> GameState {
        let mut snap = StateSnapshot {
            phase: "S1901M".into(),
            units: Default::default(),
            centers: Default::default(),
            dislodged: vec![],
            standoffs: vec![],
        };
        for (p, u) in self.units {
            snap.units.entry(*p).or_default().push(u.to_string());
        }
        snap.to_state(map).unwrap()
    }

    pub fn orders(&self, map: &MapGraph) -> Vec<(Power, Order)> {
        self.orders
            .iter()
            .map(|(p, t)| (*p, parse_order(map, t).unwrap()))
            .collect()
    }
}

pub const CASES: [Case; 10] = [
    Case {
        name: "foreign support breaks a one-on-one",
        units: &[(Germany, "A MUN"), (France, "A BOH"), (Italy, "A TYR")],
        orders: &[
            (Germany, "A MUN - TYR"),
            (France, "A BOH S A MUN - TYR"),
            (Italy, "A TYR H"),
        ],
        expected: &[("A BOH S A MUN - TYR", true, true)],
    },
    Case {
        name: "foreign support not enough against a supported hold",
        units: &[
            (Germany, "A MUN"),
            (France, "A BOH"),
            (Italy, "A TYR"),
            (Italy, "A VEN"),
        ],
        orders: &[
            (Germany, "A MUN - TYR"),
            (France, "A BOH S A MUN - TYR"),
            (Italy, "A TYR H"),
            (Italy, "A VEN S A TYR"),
        ],
        expected: &[
            ("A BOH S A MUN - TYR", true, false),
            ("A VEN S A TYR", false, false),
        ],
    },
    Case {
        name: "support into an empty province is not needed",
        units: &[(Germany, "A MUN"), (France, "A BOH")],
        orders: &[(Germany, "A MUN - TYR"), (France, "A BOH S A MUN - TYR")],
        expected: &[("A BOH S A MUN - TYR", true, false)],
    },
    Case {
        name: "foreign support saves a unit from dislodgement",
        units: &[
            (Italy, "A TYR"),
            (Austria, "A VIE"),
            (Germany, "A MUN"),
            (Germany, "A BOH"),
        ],
        orders: &[
            (Italy, "A TYR H"),
            (Austria, "A VIE S A TYR"),
            (Germany, "A MUN - TYR"),
            (Germany, "A BOH S A MUN - TYR"),
        ],
        expected: &[
            ("A VIE S A TYR", true, true),
            ("A BOH S A MUN - TYR", false, false),
        ],
    },
    Case {
        name: "defensive support against a lone attacker is not needed",
        units: &[(Italy, "A TYR"), (Austria, "A VIE"), (Germany, "A MUN")],
        orders: &[
            (Italy, "A TYR H"),
            (Austria, "A VIE S A TYR"),
            (Germany, "A MUN - TYR"),
        ],
        expected: &[("A VIE S A TYR", true, false)],
    },
    Case {
        name: "cut foreign support is not effective",
        units: &[
            (Germany, "A MUN"),
            (France, "A BOH"),
            (Italy, "A TYR"),
            (Russia, "A SIL"),
        ],
        orders: &[
            (Germany, "A MUN - TYR"),
            (France, "A BOH S A MUN - TYR"),
            (Italy, "A TYR H"),
            (Russia, "A SIL - BOH"),
        ],
        expected: &[("A BOH S A MUN - TYR", true, false)],
    },
    Case {
        name: "own support is never foreign",
        units: &[(Germany, "A MUN"), (Germany, "A BOH"), (Italy, "A TYR")],
        orders: &[
            (Germany, "A MUN - TYR"),
            (Germany, "A BOH S A MUN - TYR"),
            (Italy, "A TYR H"),
        ],
        expected: &[("A BOH S A MUN - TYR", false, false)],
    },
    Case {
        name: "foreign support of a convoyed attack",
        units: &[
            (England, "A LON"),
            (England, "F NTH"),
            (France, "F ENG"),
            (Germany, "A BEL"),
        ],
        orders: &[
            (England, "A LON - BEL VIA"),
            (England, "F NTH C A LON - BEL"),
            (France, "F ENG S A LON - BEL"),
            (Germany, "A BEL H"),
        ],
        expected: &[("F ENG S A LON - BEL", true, true)],
    },
    Case {
        name: "support to hold a unit that moves is void",
        units: &[(Italy, "A TYR"), (Austria, "A VIE")],
        orders: &[(Italy, "A TYR - MUN"), (Austria, "A VIE S A TYR")],
        expected: &[("A VIE S A TYR", true, false)],
    },
    Case {
        name: "foreign support settles a three-way standoff",
        units: &[(Germany, "A RUH"), (Italy, "A MAR"), (France, "A PAR")],
        orders: &[
            (Germany, "A RUH - BUR"),
            (Italy, "A MAR - BUR"),
            (France, "A PAR S A RUH - BUR"),
        ],
        expected: &[("A PAR S A RUH - BUR", true, true)],
    },
];
