use super::*;
use crate::encoder::{Encoder, EncoderConfig, Variant};
use crate::engine::{generate_game_with, GenOptions, Genre, Profile};
use crate::harness::ConstantAgent;
use proptest::prelude::*;
use rand::Rng;

fn micro(seed: u64) -> GameSpec {
    generate_game_with(Genre::Cooking, seed, 1, &GenOptions { profile: Profile::Micro }).unwrap()
}

/// Distinct pseudo-random Q-values derived from the state and action text.
struct HashAgent;

impl Agent for HashAgent {
    fn begin(&mut self, _: &GameSpec, _: &str) -> Result<()> {
        Ok(())
    }
    fn observe(&mut self, _: Role, _: &str) -> Result<()> {
        Ok(())
    }
    fn evaluate(
        &mut self,
        _: &GameSpec,
        state: &GameState,
        actions: &[String],
        _: bool,
    ) -> Result<crate::harness::Evaluation> {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let q = actions
            .iter()
            .map(|a| {
                let mut h = DefaultHasher::new();
                (state, a).hash(&mut h);
                (h.finish() % 1_000_000) as f64 / 1e6
            })
            .collect();
        Ok(crate::harness::Evaluation {
            q_values: q,
            features: None,
        })
    }
}

fn record(i: usize, rng: &mut ChaCha8Rng) -> CurriculumRecord {
    let n = 1 + i % 5;
    CurriculumRecord {
        game_id: format!("cooking-micro-d1-s{i}"),
        step: i as u32,
        turns: vec![
            (Role::System, format!("You see a fridge #{i}.\n\"quoted\" ✓")),
            (Role::Player, "open fridge".into()),
            (Role::System, "You open the fridge.".into()),
        ],
        actions: (0..n).map(|k| format!("action {k}")).collect(),
        q_values: (0..n).map(|_| rng.random::<f64>() * 3.0 - 1.0).collect(),
        behavior_action: i % n,
        epsilon: rng.random(),
    }
}

#[test]
fn pool_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut pool = CurriculumPool::default();
    for i in 0..1000 {
        pool.push(record(i, &mut rng)).unwrap();
    }
    pool.records[3].q_values[0] = 1e-310;
    pool.records[4].q_values[0] = -0.1 - 0.2;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.jsonl");
    write_pool(&pool, &path).unwrap();
    let back = read_pool(&path).unwrap();
    assert_eq!(back, pool);
    for (a, b) in back.records.iter().zip(&pool.records) {
        for (x, y) in a.q_values.iter().zip(&b.q_values) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(a.epsilon.to_bits(), b.epsilon.to_bits());
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 1000);
    let first = text.lines().next().unwrap();
    let keys = ["game_id", "step", "turns", "actions", "q_values", "behavior_action", "epsilon"];
    let mut at = 0;
    for k in keys {
        let p = first.find(&format!("\"{k}\":")).unwrap();
        assert!(p >= at, "{k} out of order");
        at = p;
    }
    assert!(first.contains(r#""turns":[["system","#));
}

#[test]
fn truncated_line_names_the_line() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pool = CurriculumPool {
        records: (0..3).map(|i| record(i, &mut rng)).collect(),
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.jsonl");
    write_pool(&pool, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, &text[..text.len() - 20]).unwrap();
    match read_pool(&path).unwrap_err() {
        Error::Parse { line, .. } => assert_eq!(line, 3),
        e => panic!("{e}"),
    }
    let mut bad = record(0, &mut rng);
    bad.behavior_action = 9;
    std::fs::write(&path, serde_json::to_string(&bad).unwrap() + "\n").unwrap();
    assert_eq!(read_pool(&path).unwrap_err().category(), "parse");
}

#[test]
fn empty_pool_is_an_empty_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pool.jsonl");
    write_pool(&CurriculumPool::default(), &path).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 0);
    assert!(read_pool(&path).unwrap().is_empty());
}

#[test]
fn sampling_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    assert!(sample_batch(&CurriculumPool::default(), 1, &mut rng).is_err());
    let pool = CurriculumPool {
        records: (0..10).map(|i| record(i, &mut rng)).collect(),
    };
    assert_eq!(sample_batch(&pool, 32, &mut rng).unwrap().len(), 32);
    let four = CurriculumPool {
        records: pool.records[..4].to_vec(),
    };
    let mut counts = [0usize; 4];
    for r in sample_batch(&four, 100_000, &mut rng).unwrap() {
        counts[r.step as usize] += 1;
    }
    for c in counts {
        assert!((c as f64 / 1e5 - 0.25).abs() < 0.02);
    }
    let draw = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sample_batch(&pool, 16, &mut rng).unwrap().iter().map(|r| r.step).collect::<Vec<_>>()
    };
    assert_eq!(draw(5), draw(5));
}

#[test]
fn one_record_per_step() {
    let spec = micro(0);
    let config = CollectConfig {
        episodes: 1,
        ..CollectConfig::default()
    };
    let vocab = Vocabulary::engine_default();
    let pool = collect(&mut HashAgent, &vocab, std::slice::from_ref(&spec), &config).unwrap();
    let mut state = GameState::initial(&spec);
    for (i, r) in pool.records.iter().enumerate() {
        assert_eq!(r.step as usize, i);
        let actions = state.admissible_actions(&spec);
        assert_eq!(r.actions, actions);
        assert_eq!(r.q_values.len(), actions.len());
        assert_eq!(r.turns[0].0, Role::System);
        state.apply(&spec, &actions[r.behavior_action]).unwrap();
    }
    assert!(state.status.is_terminal());
}

#[test]
fn episode_epsilons_are_uniform() {
    let games: Vec<GameSpec> = (0..5).map(micro).collect();
    let config = CollectConfig {
        episodes: 10_000,
        step_cap: 1,
        seed: 3,
        ..CollectConfig::default()
    };
    let pool = collect(&mut ConstantAgent::default(), &Vocabulary::engine_default(), &games, &config).unwrap();
    let eps: Vec<f64> = pool.records.iter().filter(|r| r.step == 0).map(|r| r.epsilon).collect();
    assert_eq!(eps.len(), 10_000);
    let (d, p) = ks_uniform(&eps);
    assert!(p > 0.01, "D = {d}, p = {p}");
    // The test itself rejects a skewed sample.
    let skewed: Vec<f64> = eps.iter().map(|e| e * e).collect();
    assert!(ks_uniform(&skewed).1 < 0.01);
}

#[test]
fn behavior_matches_argmax_at_the_analytic_rate() {
    let games: Vec<GameSpec> = (0..10).map(micro).collect();
    let config = CollectConfig {
        episodes: 2000,
        step_cap: 10,
        seed: 4,
        ..CollectConfig::default()
    };
    let pool = collect(&mut HashAgent, &Vocabulary::engine_default(), &games, &config).unwrap();
    let n = pool.len() as f64;
    let observed = pool.records.iter().filter(|r| r.behavior_action == r.best_action()).count() as f64 / n;
    let expected = pool
        .records
        .iter()
        .map(|r| 1.0 - r.epsilon * (1.0 - 1.0 / r.actions.len() as f64))
        .sum::<f64>()
        / n;
    assert!((observed - expected).abs() < 0.02, "{observed} vs {expected}");
}

#[test]
fn stored_q_values_match_teacher_rescoring() {
    let vocab = Vocabulary::engine_default();
    for variant in [Variant::Drrn, Variant::Joint] {
        let teacher = Checkpoint {
            label: "teacher".into(),
            step: 0,
            encoder: Encoder::new(EncoderConfig::new(variant, vocab.len(), 7), None).unwrap(),
            vocab: vocab.clone(),
        };
        let config = CollectConfig {
            episodes: 6,
            step_cap: 30,
            max_tokens: 128,
            seed: 5,
        };
        let games: Vec<GameSpec> = (0..3).map(micro).collect();
        let pool = collect_with_teacher(&teacher, &games, &config).unwrap();
        assert!(pool.len() > 20);
        let prep = teacher.encoder.prepare();
        for r in &pool.records {
            let traj = Trajectory::from_turns(&r.turns, &vocab, config.max_tokens).unwrap();
            let ids: Vec<Vec<u32>> = r.actions.iter().map(|a| vocab.encode(a)).collect();
            let q = teacher.encoder.score(&prep, traj.ids(), &ids).unwrap();
            for (a, b) in q.iter().zip(&r.q_values) {
                assert!((a - b).abs() <= 1e-9);
            }
        }
        // Games are visited in shuffled passes: each pass covers all games.
        let starts: Vec<&str> = pool.records.iter().filter(|r| r.step == 0).map(|r| r.game_id.as_str()).collect();
        for pass in starts.chunks(3) {
            let mut ids = pass.to_vec();
            ids.sort();
            ids.dedup();
            assert_eq!(ids.len(), 3);
        }
    }
}

#[test]
fn ks_reference_values() {
    // Asymptotic critical value at α = 0.01 is about 1.628 / √n.
    assert!((kolmogorov_q(1.628) - 0.01).abs() < 5e-4);
    assert!((kolmogorov_q(1.358) - 0.05).abs() < 5e-4);
    let grid: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
    let (d, p) = ks_uniform(&grid);
    assert!((d - 0.0005).abs() < 1e-12);
    assert!(p > 0.99);
}

proptest! {
    #[test]
    fn records_round_trip_any_floats(
        q in prop::collection::vec(any::<f64>().prop_filter("finite", |x| x.is_finite()), 1..6),
        eps in 0.0f64..1.0,
        text in "\\PC{0,30}",
    ) {
        let r = CurriculumRecord {
            game_id: "g".into(),
            step: 0,
            turns: vec![(Role::System, text)],
            actions: q.iter().map(|x| format!("{x}")).collect(),
            q_values: q,
            behavior_action: 0,
            epsilon: eps,
        };
        let line = serde_json::to_string(&r).unwrap();
        let back: CurriculumRecord = serde_json::from_str(&line).unwrap();
        prop_assert_eq!(back, r);
    }
}
