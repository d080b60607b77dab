//! In-game ranking, 1-vs-6 evaluation and TrueSkill pool tournaments.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::bots::{play_game, Agent, AgentSpec};
use crate::game::{Outcome, Rules};
use crate::map::MapGraph;
use crate::power::Power;
use crate::record::{GameRecord, RecordError};
use crate::state::GameState;
use crate::trueskill::{rate_seats, Env, Rating};

#[derive(Debug, thiserror::Error)]
pub enum TournamentError {
    #[error("game is still in progress")]
    Ongoing,
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Placing of every power, 1 to 7, indexed by [`Power::index`]. Ties share a rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameRanking {
    pub ranks: [usize; 7],
}

/// Ranks a solo winner first, other survivors by supply centers and
/// eliminated powers by how long they lasted. `history` runs from the first
/// to the final state.
pub fn rank_history(history: &[GameState], outcome: &Outcome) -> GameRanking {
    let winner = match outcome {
        Outcome::Solo { winner } => Some(*winner),
        _ => None,
    };
    let last = history.last().expect("at least one state");
    let mut out_at = [None; 7];
    for p in Power::ALL {
        out_at[p.index()] = history.iter().position(|s| s.is_eliminated(p));
    }
    let survivors = out_at.iter().filter(|e| e.is_none()).count();
    let mut ranks = [0; 7];
    for p in Power::ALL {
        let i = p.index();
        ranks[i] = match out_at[i] {
            None if winner == Some(p) => 1,
            None => {
                let sc = last.sc_count(p);
                let ahead = Power::ALL
                    .iter()
                    .filter(|q| {
                        out_at[q.index()].is_none()
                            && winner != Some(**q)
                            && last.sc_count(**q) > sc
                    })
                    .count();
                1 + usize::from(winner.is_some()) + ahead
            }
            Some(t) => {
                1 + survivors
                    + out_at
                        .iter()
                        .filter(|e| matches!(e, Some(u) if *u > t))
                        .count()
            }
        };
    }
    GameRanking { ranks }
}

/// Ranks a finished game from its record.
pub fn rank_game(map: &MapGraph, record: &GameRecord) -> Result<GameRanking, TournamentError> {
    if !record.outcome.is_over() {
        return Err(TournamentError::Ongoing);
    }
    let states = record.states(map)?;
    Ok(rank_history(&states, &record.outcome))
}

/// How one power finished a game.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    Win,
    MostSc,
    Survived,
    Defeated,
}

impl Placement {
    pub const ALL: [Placement; 4] = [
        Placement::Win,
        Placement::MostSc,
        Placement::Survived,
        Placement::Defeated,
    ];

    pub fn of(state: &GameState, outcome: &Outcome, power: Power) -> Placement {
        if let Outcome::Solo { winner } = outcome {
            if *winner == power {
                return Placement::Win;
            }
        }
        if state.is_eliminated(power) {
            return Placement::Defeated;
        }
        let best = Power::ALL
            .iter()
            .map(|p| state.sc_count(*p))
            .max()
            .unwrap_or(0);
        if !matches!(outcome, Outcome::Solo { .. }) && state.sc_count(power) == best {
            Placement::MostSc
        } else {
            Placement::Survived
        }
    }
}

/// One finished game of a tournament.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSummary {
    pub game: u64,
    /// Pool index of the agent in each seat.
    pub seats: [usize; 7],
    pub ranking: GameRanking,
    pub placements: [Placement; 7],
    pub centers: [usize; 7],
    pub outcome: Outcome,
    pub phases: usize,
    /// Agent failures replaced by defaults.
    pub substitutions: usize,
}

/// Seed for one seat of one game, derived from the tournament seed.
pub fn seat_seed(seed: u64, game: u64, seat: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(game);
    rng.set_word_pos(16 * seat as u128);
    rng.next_u64()
}

/// Plays one game with the given pool indices in the seats.
pub fn play_seated(
    map: &MapGraph,
    rules: Rules,
    pool: &[AgentSpec],
    seats: [usize; 7],
    seed: u64,
    game: u64,
) -> GameSummary {
    let mut agents: Vec<Box<dyn Agent>> = seats
        .iter()
        .enumerate()
        .map(|(s, &a)| pool[a].build(seat_seed(seed, game, s)))
        .collect();
    let record = play_game(map, rules, &mut agents);
    summarize(
        map,
        &record,
        game,
        seats,
        agents.iter().map(|a| a.substitutions()).sum(),
    )
}

fn summarize(
    map: &MapGraph,
    record: &GameRecord,
    game: u64,
    seats: [usize; 7],
    substitutions: usize,
) -> GameSummary {
    let states = record.states(map).expect("engine records parse");
    let last = states.last().expect("initial state");
    GameSummary {
        game,
        seats,
        ranking: rank_history(&states, &record.outcome),
        placements: Power::ALL.map(|p| Placement::of(last, &record.outcome, p)),
        centers: Power::ALL.map(|p| last.sc_count(p)),
        outcome: record.outcome.clone(),
        phases: record.phases.len(),
        substitutions,
    }
}

/// One row of a 1-vs-6 table, in percent of the seats it covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementRow {
    pub agent: String,
    pub opponent: String,
    #[serde(rename = "% Win")]
    pub win: f64,
    #[serde(rename = "% Most SC")]
    pub most_sc: f64,
    #[serde(rename = "% Survived")]
    pub survived: f64,
    #[serde(rename = "% Defeated")]
    pub defeated: f64,
    #[serde(rename = "# Games")]
    pub games: usize,
}

impl PlacementRow {
    fn new(agent: String, opponent: String, counts: [usize; 4], games: usize) -> Self {
        let total: usize = counts.iter().sum::<usize>().max(1);
        let pct = |c: usize| 100.0 * c as f64 / total as f64;
        PlacementRow {
            agent,
            opponent,
            win: pct(counts[0]),
            most_sc: pct(counts[1]),
            survived: pct(counts[2]),
            defeated: pct(counts[3]),
            games,
        }
    }
}

pub const TABLE_HEADER: &str = "agent,opponent,% Win,% Most SC,% Survived,% Defeated,# Games";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneVsSix {
    /// The single agent's results against six copies of the other.
    pub solo: PlacementRow,
    /// The six copies' results, pooled over their seats.
    pub copies: PlacementRow,
    /// Placement counts of the single agent and of the copies.
    pub solo_counts: [usize; 4],
    pub copy_counts: [usize; 4],
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
    /// Homogeneity test of the two placement distributions.
    pub p_value: f64,
    pub games: Vec<GameSummary>,
}

impl OneVsSix {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(TABLE_HEADER);
        out.push('\n');
        for r in [&self.solo, &self.copies] {
            out.push_str(&format!(
                "{},{},{:.2},{:.2},{:.2},{:.2},{}\n",
                r.agent, r.opponent, r.win, r.most_sc, r.survived, r.defeated, r.games
            ));
        }
        out
    }
}

/// Pearson's test of homogeneity for a two-row contingency table. Columns
/// empty in both rows are dropped. Returns (statistic, df, p).
pub fn chi_square_homogeneity(a: &[usize], b: &[usize]) -> (f64, usize, f64) {
    let cols: Vec<(f64, f64)> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| **x + **y > 0)
        .map(|(x, y)| (*x as f64, *y as f64))
        .collect();
    if cols.len() < 2 {
        return (0.0, 0, 1.0);
    }
    let na: f64 = cols.iter().map(|c| c.0).sum();
    let nb: f64 = cols.iter().map(|c| c.1).sum();
    let n = na + nb;
    let mut stat = 0.0;
    for (x, y) in &cols {
        let col = x + y;
        let ea = na * col / n;
        let eb = nb * col / n;
        stat += (x - ea).powi(2) / ea + (y - eb).powi(2) / eb;
    }
    let df = cols.len() - 1;
    let p = 1.0 - ChiSquared::new(df as f64).expect("positive df").cdf(stat);
    (stat, df, p)
}

/// Plays `n` games with `a` on one power and `b` on the other six. The
/// single agent's power rotates through the seven powers game by game.
pub fn run_1v6(
    map: &MapGraph,
    rules: Rules,
    a: &AgentSpec,
    b: &AgentSpec,
    n: u64,
    seed: u64,
) -> OneVsSix {
    let pool = [a.clone(), b.clone()];
    let games: Vec<GameSummary> = (0..n)
        .into_par_iter()
        .map(|g| {
            let solo = (g % 7) as usize;
            let seats = std::array::from_fn(|s| usize::from(s != solo));
            play_seated(map, rules, &pool, seats, seed, g)
        })
        .collect();
    let mut solo_counts = [0; 4];
    let mut copy_counts = [0; 4];
    for g in &games {
        for (s, &agent) in g.seats.iter().enumerate() {
            let k = Placement::ALL
                .iter()
                .position(|p| *p == g.placements[s])
                .expect("known placement");
            if agent == 0 {
                solo_counts[k] += 1;
            } else {
                copy_counts[k] += 1;
            }
        }
    }
    let (chi_square, degrees_of_freedom, p_value) =
        chi_square_homogeneity(&solo_counts, &copy_counts);
    OneVsSix {
        solo: PlacementRow::new(a.to_string(), b.to_string(), solo_counts, games.len()),
        copies: PlacementRow::new(b.to_string(), a.to_string(), copy_counts, games.len()),
        solo_counts,
        copy_counts,
        chi_square,
        degrees_of_freedom,
        p_value,
        games,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolReport {
    pub agents: Vec<String>,
    pub ratings: Vec<Rating>,
    /// Sigma of every agent after each game.
    pub trace: Vec<Vec<f64>>,
    pub games: Vec<GameSummary>,
}

impl PoolReport {
    pub fn ratings_csv(&self) -> String {
        let mut out = String::from("agent,mu,sigma,exposure,seats\n");
        for (i, (a, r)) in self.agents.iter().zip(&self.ratings).enumerate() {
            let seats: usize = self
                .games
                .iter()
                .map(|g| g.seats.iter().filter(|s| **s == i).count())
                .sum();
            out.push_str(&format!(
                "{a},{:.4},{:.4},{:.4},{seats}\n",
                r.mu,
                r.sigma,
                r.exposure()
            ));
        }
        out
    }

    pub fn trace_csv(&self) -> String {
        let mut out = String::from("game");
        for a in &self.agents {
            out.push(',');
            out.push_str(a);
        }
        out.push('\n');
        for (g, row) in self.trace.iter().enumerate() {
            out.push_str(&(g + 1).to_string());
            for s in row {
                out.push_str(&format!(",{s:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn max_sigma(&self) -> f64 {
        self.ratings.iter().map(|r| r.sigma).fold(0.0, f64::max)
    }
}

/// Seats for game `g` of a pool tournament, each drawn uniformly from the pool.
pub fn pool_seats(pool_size: usize, seed: u64, game: u64) -> [usize; 7] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    rng.set_stream(game);
    std::array::from_fn(|_| rng.gen_range(0..pool_size))
}

/// Rates a sequence of finished games in order.
pub fn rate_games(
    env: &Env,
    pool_size: usize,
    games: &[GameSummary],
) -> (Vec<Rating>, Vec<Vec<f64>>) {
    let mut ratings = vec![Rating::default(); pool_size];
    let mut trace = Vec::with_capacity(games.len());
    for g in games {
        ratings = rate_seats(env, &ratings, &g.seats, &g.ranking.ranks);
        trace.push(ratings.iter().map(|r| r.sigma).collect());
    }
    (ratings, trace)
}

/// Plays `n` games with seats sampled from `pool` and rates the agents.
/// Games run in parallel; ratings are updated in game order.
pub fn run_pool(map: &MapGraph, rules: Rules, pool: &[AgentSpec], n: u64, seed: u64) -> PoolReport {
    assert!(pool.len() >= 2, "a pool needs at least two agents");
    let games: Vec<GameSummary> = (0..n)
        .into_par_iter()
        .map(|g| play_seated(map, rules, pool, pool_seats(pool.len(), seed, g), seed, g))
        .collect();
    let (ratings, trace) = rate_games(&Env::default(), pool.len(), &games);
    PoolReport {
        agents: pool.iter().map(|a| a.to_string()).collect(),
        ratings,
        trace,
        games,
    }
}
