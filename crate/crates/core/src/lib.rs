//! No Press Diplomacy: map, rules engine, bots and evaluation tooling.

pub mod adjudicator;
pub mod analysis;
pub mod bots;
pub mod features;
pub mod game;
pub mod map;
pub mod matrix;
pub mod order;
pub mod power;
pub mod protocol;
pub mod record;
pub mod scenario;
pub mod state;
pub mod tournament;
pub mod trueskill;

pub use map::{standard_map, LocId, LocKind, MapGraph, UnitKind};
pub use order::{legal_orders, parse_order, validate, Order, UnitRef};
pub use power::Power;
pub use state::{initial_state, GameState, Phase, PhaseKind, Season, Unit};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/orders.md")]
    mod orders {}
    #[doc = include_str!("../../../book/src/adjudication.md")]
    mod adjudication {}
    #[doc = include_str!("../../../book/src/games.md")]
    mod games {}
    #[doc = include_str!("../../../book/src/bots.md")]
    mod bots {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/tournaments.md")]
    mod tournaments {}
    #[doc = include_str!("../../../book/src/analysis.md")]
    mod analysis {}
    #[doc = include_str!("../../../book/src/protocol.md")]
    mod protocol {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
