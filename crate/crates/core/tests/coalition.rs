mod common;

use common::coalition::CASES;
use nopress::analysis::{
    classify_supports, coalition_metrics, count_supports, dataset_stats, movement_phases,
};
use nopress::bots::{play_game, Agent, AgentSpec};
use nopress::game::Rules;
use nopress::map::standard_map;
use nopress::record::GameRecord;

#[test]
fn scripted_supports_are_classified_exactly() {
    let map = standard_map();
    for case in &CASES {
        let verdicts = classify_supports(map, &case.state(map), &case.orders(map));
        let got: Vec<(String, bool, bool)> = verdicts
            .iter()
            .map(|v| (v.order.to_text(map), v.foreign, v.effective))
            .collect();
        let want: Vec<(String, bool, bool)> = case
            .expected
            .iter()
            .map(|(t, f, e)| (t.to_string(), *f, *e))
            .collect();
        assert_eq!(got, want, "{}", case.name);
    }
}

fn games(n: u64) -> Vec<GameRecord> {
    let map = standard_map();
    (0..n)
        .map(|g| {
            let mut agents: Vec<Box<dyn Agent>> = (0..7)
                .map(|i| {
                    if (g + i) % 2 == 0 {
                        AgentSpec::DumbBot.build(g * 7 + i)
                    } else {
                        AgentSpec::Random.build(g * 7 + i)
                    }
                })
                .collect();
            play_game(
                map,
                Rules {
                    year_cap: 1906,
                    ..Rules::default()
                },
                &mut agents,
            )
        })
        .collect()
}

#[test]
fn counts_are_nested_and_order_free() {
    let map = standard_map();
    let records = games(12);
    for r in &records {
        for (state, orders) in movement_phases(map, r).unwrap() {
            let c = count_supports(&classify_supports(map, &state, &orders));
            assert!(c.effective_x_supports <= c.x_supports && c.x_supports <= c.supports);
        }
    }
    let report = coalition_metrics(map, &records);
    assert!(report.counts.supports > 0);
    assert_eq!(report.rejected, 0);
    let mut reversed = records.clone();
    reversed.reverse();
    assert_eq!(coalition_metrics(map, &reversed), report);
    let ratio = report.x_support_ratio.unwrap();
    assert!(
        (ratio - report.counts.x_supports as f64 / report.counts.supports as f64).abs() < 1e-12
    );
}

#[test]
fn tampered_records_are_excluded() {
    let map = standard_map();
    let mut records = games(2);
    records[1].phases[0].state.centers.clear();
    let report = coalition_metrics(map, &records);
    assert_eq!((report.records, report.rejected), (1, 1));
}

#[test]
fn dataset_results_partition_every_power() {
    let map = standard_map();
    let records = games(6);
    let stats = dataset_stats(map, &records);
    assert_eq!(stats.games, 6);
    for p in &stats.per_power {
        assert!((p.win + p.draw + p.defeated + p.lost - 100.0).abs() < 1e-9);
    }
    for (i, row) in stats.survival.iter().enumerate() {
        if let Some(d) = row[i] {
            assert_eq!(d, 100.0);
        }
    }
}

#[test]
fn single_solo_game_gives_the_winner_every_win() {
    let map = standard_map();
    let mut agents: Vec<Box<dyn Agent>> = (0..7).map(|i| AgentSpec::Greedy.build(i)).collect();
    let record = play_game(
        map,
        Rules {
            solo_centers: 6,
            ..Rules::default()
        },
        &mut agents,
    );
    let nopress::game::Outcome::Solo { winner } = record.outcome else {
        panic!("no solo")
    };
    let stats = dataset_stats(map, &[record]);
    assert_eq!(stats.per_power[winner.index()].win, 100.0);
    assert_eq!(stats.survival[winner.index()][winner.index()], Some(100.0));
}
