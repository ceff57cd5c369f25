use super::*;
use crate::engine::{generate_game_with, worked_cooking_example, GenOptions, Genre, Profile};
use crate::encoder::{EncoderConfig, Variant};
use proptest::prelude::*;
use rand::Rng;

fn micro(genre: Genre, seed: u64) -> GameSpec {
    generate_game_with(genre, seed, 1, &GenOptions { profile: Profile::Micro }).unwrap()
}

const FULL: SolverConfig = SolverConfig {
    discount: 0.9,
    max_states: 100_000,
    prune: false,
};

#[test]
fn oracle_greedy_wins_with_max_score() {
    let mut oracle = OracleAgent::new(FULL);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    // The worked treasure game exceeds the unpruned state bound.
    let mut games = vec![worked_cooking_example()];
    games.extend((0..5).map(|s| micro(Genre::Cooking, s)));
    games.extend((0..5).map(|s| micro(Genre::Treasure, s)));
    for spec in &games {
        let ep = play_episode(&mut oracle, &PolicyConfig::greedy(), spec, 100, &mut rng).unwrap();
        assert_eq!(ep.outcome, Outcome::Win, "{}", spec.id());
        assert_eq!(ep.score, spec.max_score);
        assert_eq!(ep.turns.len(), 2 * ep.steps.len() + 1);
    }
}

#[test]
fn constant_agent_loops_to_the_cap() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for seed in 0..5 {
        let spec = micro(Genre::Cooking, seed);
        let ep = play_episode(&mut ConstantAgent::default(), &PolicyConfig::greedy(), &spec, 100, &mut rng)
            .unwrap();
        assert_eq!(ep.outcome, Outcome::StepLimit);
        assert_eq!(ep.steps.len(), 100);
        assert!(ep.steps.iter().all(|s| s.chosen == 0));
    }
}

#[test]
fn step_cap_is_validated() {
    let spec = micro(Genre::Cooking, 0);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for cap in [0, 101] {
        let err = play_episode(&mut ConstantAgent::default(), &PolicyConfig::greedy(), &spec, cap, &mut rng)
            .unwrap_err();
        assert_eq!(err.category(), "range");
    }
    let ep = play_episode(&mut ConstantAgent::default(), &PolicyConfig::greedy(), &spec, 7, &mut rng).unwrap();
    assert_eq!(ep.steps.len(), 7);
}

#[test]
fn percent_is_total_score_over_total_max() {
    let row = |score, outcome| GameResult {
        game_id: "g".into(),
        play: 1,
        score,
        max_score: 7,
        steps: 10,
        outcome,
    };
    let report = EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        suite_id: "s".into(),
        agent: "a".into(),
        policy: PolicyConfig::greedy(),
        plays_per_game: 1,
        games: vec![row(7, Outcome::Win), row(0, Outcome::Fail)],
        percent: 0.0,
        tallies: Tallies::default(),
        step_kl: vec![],
    };
    let (pct, tallies) = report.recompute();
    assert_eq!(pct, 50.0);
    assert_eq!(
        tallies,
        Tallies {
            win: 1,
            fail: 1,
            step_limit: 0
        }
    );
}

#[test]
fn perfect_agent_scores_everything() {
    let games: Vec<GameSpec> = (0..4).map(|s| micro(Genre::Cooking, s)).collect();
    let (report, _) =
        evaluate_games(&mut OracleAgent::new(FULL), "oracle", "micro", &games, &EvalOptions::default()).unwrap();
    assert_eq!(report.percent, 100.0);
    assert_eq!(
        report.tallies,
        Tallies {
            win: 8,
            fail: 0,
            step_limit: 0
        }
    );
    assert_eq!(report.games.iter().map(|g| g.play).collect::<Vec<_>>(), [1, 2, 1, 2, 1, 2, 1, 2]);
}

#[test]
fn constant_agent_is_all_step_limit() {
    let games: Vec<GameSpec> = (0..3).map(|s| micro(Genre::Treasure, s)).collect();
    let (report, episodes) = evaluate_games(
        &mut ConstantAgent::default(),
        "constant",
        "micro",
        &games,
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(report.tallies.step_limit, 6);
    assert_eq!(report.tallies.total(), 6);
    assert!(report.step_kl.iter().all(|&k| k == 0.0));
    let summary = analyze_confidence(&[("constant".into(), episodes)]).unwrap();
    let s = &summary[0];
    for v in [s.min, s.q1, s.median, s.q3, s.max, s.whisker_low, s.whisker_high] {
        assert_eq!(v, 0.0);
    }
}

#[test]
fn evaluation_is_reproducible_and_round_trips() {
    let games: Vec<GameSpec> = (0..3).map(|s| micro(Genre::Cooking, s)).collect();
    let opts = EvalOptions::with_policy(PolicyConfig::sample(1.0));
    let dir = tempfile::tempdir().unwrap();
    let mut bytes = Vec::new();
    for run in 0..2 {
        let (report, _) =
            evaluate_games(&mut ConstantAgent::default(), "random", "micro", &games, &opts).unwrap();
        let out = dir.path().join(format!("run{run}"));
        report.write(&out).unwrap();
        assert_eq!(EvalReport::read(&out.join("report.json")).unwrap(), report);
        bytes.push((
            std::fs::read(out.join("report.json")).unwrap(),
            std::fs::read(out.join("report.csv")).unwrap(),
        ));
    }
    assert_eq!(bytes[0], bytes[1]);
    // Distinct streams: the two plays of a game differ somewhere.
    let (report, episodes) =
        evaluate_games(&mut ConstantAgent::default(), "random", "micro", &games, &opts).unwrap();
    assert!(episodes.chunks(2).any(|p| p[0].turns != p[1].turns));
    let lines = report.to_csv();
    assert_eq!(lines.lines().count(), 7);
    assert!(lines.starts_with("game_id,play,score,max_score,steps,outcome\n"));
}

#[test]
fn suite_directory_round_trip() {
    let games: Vec<GameSpec> = (0..3).map(|s| micro(Genre::Treasure, s)).collect();
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_suite(dir.path(), "treasure-micro", &games).unwrap();
    let (back, read) = read_suite(dir.path()).unwrap();
    assert_eq!(back, manifest);
    assert_eq!(read, games);
    let report = evaluate_suite(
        &mut OracleAgent::new(FULL),
        "oracle",
        dir.path(),
        &EvalOptions::default(),
    )
    .unwrap();
    assert_eq!(report.suite_id, "treasure-micro");
    assert_eq!(report.percent, 100.0);
    let missing = dir.path().join("nope");
    assert_eq!(read_suite(&missing).unwrap_err().category(), "io");
    assert!(write_suite(dir.path(), "dup", &[games[0].clone(), games[0].clone()]).is_err());
}

#[test]
fn kl_examples() {
    for n in 1..8 {
        assert_eq!(kl_confidence(&vec![0.3; n]), 0.0);
    }
    let peaked = kl_confidence(&[60.0, 0.0, 0.0, 0.0]);
    assert!((peaked - 4f64.ln()).abs() < 1e-12);
    // Direct summation without max-subtraction.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..100 {
        let q: Vec<f64> = (0..7).map(|_| rng.random_range(-3.0..3.0)).collect();
        let z: f64 = q.iter().map(|x| x.exp()).sum();
        let direct: f64 = q
            .iter()
            .map(|x| {
                let p = x.exp() / z;
                p * (p * 7.0).ln()
            })
            .sum();
        assert!((kl_confidence(&q) - direct).abs() < 1e-12);
    }
}

#[test]
fn kl_summary_examples() {
    let s = summarize_kl("one", &[0.7]).unwrap();
    for v in [s.min, s.q1, s.median, s.q3, s.max, s.whisker_low, s.whisker_high] {
        assert_eq!(v, 0.7);
    }
    let s = summarize_kl("spread", &[0.0, 1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
    assert_eq!(s.median, 2.5);
    assert_eq!(s.q1, 1.25);
    assert_eq!(s.q3, 3.75);
    assert_eq!(s.whisker_high, 4.0);
    assert_eq!(s.max, 100.0);
    assert!(summarize_kl("none", &[]).is_err());
    let csv = kl_summaries_csv(&[s]);
    assert!(csv.starts_with("agent,count,"));
}

#[test]
fn policies_all_complete_with_a_neural_agent() {
    let vocab = Vocabulary::engine_default();
    let enc = Encoder::new(EncoderConfig::new(Variant::Drrn, vocab.len(), 3), None).unwrap();
    let joint = Encoder::new(EncoderConfig::new(Variant::Joint, vocab.len(), 3), None).unwrap();
    let spec = micro(Genre::Cooking, 2);
    for e in [&enc, &joint] {
        for policy in [PolicyConfig::greedy(), PolicyConfig::sample(0.1), PolicyConfig::linucb(0.5)] {
            let mut agent = NeuralAgent::new(e, &vocab, 384).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            let ep = play_episode(&mut agent, &policy, &spec, 100, &mut rng).unwrap();
            assert!(ep.steps.len() <= 100);
            assert!(agent.trajectory().ids().len() <= 384);
        }
    }
    let small = Vocabulary::build(["look"]);
    assert!(NeuralAgent::new(&enc, &small, 384).is_err());
}

#[test]
fn linucb_runs_on_featureless_agents() {
    let spec = micro(Genre::Treasure, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ep = play_episode(&mut OracleAgent::new(FULL), &PolicyConfig::linucb(0.5), &spec, 100, &mut rng).unwrap();
    assert!(ep.steps.len() <= 100);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn episodes_respect_cap_and_partition(seed in 0u64..1000, treasure in any::<bool>(), t in 0.05f64..2.0) {
        let genre = if treasure { Genre::Treasure } else { Genre::Cooking };
        let games = vec![micro(genre, seed), micro(genre, seed + 1)];
        let opts = EvalOptions::with_policy(PolicyConfig { seed, ..PolicyConfig::sample(t) });
        let (report, episodes) =
            evaluate_games(&mut ConstantAgent::default(), "random", "p", &games, &opts).unwrap();
        prop_assert_eq!(report.tallies.total(), 4);
        prop_assert!(episodes.iter().all(|e| e.steps.len() <= 100));
        prop_assert!((0.0..=100.0).contains(&report.percent));
        let (pct, tallies) = report.recompute();
        prop_assert_eq!(pct, report.percent);
        prop_assert_eq!(tallies, report.tallies);
    }

    #[test]
    fn kl_is_non_negative(q in prop::collection::vec(-10.0f64..10.0, 1..12)) {
        prop_assert!(kl_confidence(&q) >= 0.0);
    }
}
