//! Acceptance criteria 1-10, run in order against shared fixtures. Every
//! criterion prints one `PASS`/`FAIL` line; the test fails if any is red.
//!
//! Fixtures:
//! - narrow teacher: 50k steps on the 20-seed cooking micro suite (C1, C3,
//!   C10), with its pool of 1000 episodes;
//! - wide teacher: 50k steps on 100 cooking micro games (C4-C7), with its
//!   pool of 1000 episodes;
//! - held-out in-domain suite: cooking micro seeds 1000..1020;
//! - out-of-domain suite: treasure micro seeds 0..20.

use std::collections::HashMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsrl_core::curriculum::{collect_with_teacher, ks_uniform, read_pool, write_pool, CollectConfig, CurriculumPool};
use tsrl_core::dqn_teacher::{dqn_batch_loss, dqn_loss, q_target, train_teacher, TeacherRun, TrainingConfig};
use tsrl_core::encoder::{ArchConfig, Checkpoint, Encoder, EncoderConfig, Variant};
use tsrl_core::engine::{
    generate_game_with, solve_optimal, GameSpec, GameState, GenOptions, Genre, Profile,
    SolverConfig,
};
use tsrl_core::harness::{
    analyze_confidence, evaluate_games, read_suite, write_suite, Agent, ConstantAgent, EvalOptions, EvalReport,
    NeuralAgent, PLAYS_PER_GAME,
};
use tsrl_core::policy::{PolicyConfig, PolicyKind};
use tsrl_core::student::{
    nlu_ce_loss, nlu_se_loss, student_se_loss, train_student, EvalSuites, StudentConfig, StudentRun,
    StudentVariant,
};
use tsrl_core::text::{
    build_word_vectors, engine_corpus, load_word_vectors, write_word_vectors, CorpusConfig, EmbeddingTable,
    VectorConfig, Vocabulary, DEFAULT_MAX_TOKENS,
};
use tsrl_core::Result;

const DISCOUNT: f64 = 0.9;
const TEACHER_STEPS: u64 = 50_000;
const POOL_EPISODES: u64 = 1000;
const STUDENT_STEPS: u64 = 6000;

fn micro(genre: Genre, seeds: std::ops::Range<u64>) -> Vec<GameSpec> {
    seeds
        .map(|s| generate_game_with(genre, s, 1, &GenOptions { profile: Profile::Micro }).unwrap())
        .collect()
}

fn full_solver() -> SolverConfig {
    SolverConfig {
        discount: DISCOUNT,
        max_states: 100_000,
        prune: false,
    }
}

fn report_line(line: &str) {
    // Written past the harness capture so the lines show on success too.
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Result<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

struct Teacher {
    run: TeacherRun,
    elapsed: Duration,
    pool: CurriculumPool,
}

impl Teacher {
    fn train(games: &[GameSpec], eval: &[GameSpec]) -> Result<Teacher> {
        let config = TrainingConfig {
            discount: DISCOUNT,
            total_steps: TEACHER_STEPS,
            checkpoint_every: 10_000,
            seed: 0,
            ..TrainingConfig::default()
        };
        let start = Instant::now();
        let run = train_teacher(&config, games, eval, None)?;
        let elapsed = start.elapsed();
        let pool = collect_with_teacher(
            &run.checkpoint,
            games,
            &CollectConfig {
                episodes: POOL_EPISODES,
                seed: 1,
                ..CollectConfig::default()
            },
        )?;
        Ok(Teacher { run, elapsed, pool })
    }

    fn agent(&self) -> Result<NeuralAgent<'_>> {
        let c = &self.run.checkpoint;
        NeuralAgent::new(&c.encoder, &c.vocab, DEFAULT_MAX_TOKENS)
    }
}

fn neural(c: &Checkpoint) -> Result<NeuralAgent<'_>> {
    NeuralAgent::new(&c.encoder, &c.vocab, DEFAULT_MAX_TOKENS)
}

/// Total score per game over its plays, in suite order.
fn per_game(report: &EvalReport) -> Vec<u32> {
    let mut by_game: Vec<(String, u32)> = Vec::new();
    for g in &report.games {
        match by_game.last_mut() {
            Some((id, s)) if *id == g.game_id => *s += g.score,
            _ => by_game.push((g.game_id.clone(), g.score)),
        }
    }
    by_game.into_iter().map(|(_, s)| s).collect()
}

fn greedy(agent: &mut dyn Agent, games: &[GameSpec]) -> Result<EvalReport> {
    Ok(evaluate_games(agent, "agent", "suite", games, &EvalOptions::default())?.0)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

struct World {
    train20: Vec<GameSpec>,
    wide_train: Vec<GameSpec>,
    held: Vec<GameSpec>,
    ood: Vec<GameSpec>,
    vocab: Vocabulary,
    /// Every report produced along the way, for the tally partition check.
    reports: Vec<EvalReport>,
}

// ---------------------------------------------------------------- C1

fn c1_oracle_equivalence(w: &mut World, narrow: &Teacher) -> Result<Verdict> {
    let mut agent = narrow.agent()?;
    let opts = EvalOptions {
        plays: 1,
        ..EvalOptions::default()
    };
    let (_, episodes) = evaluate_games(&mut agent, "teacher", "train20", &w.train20, &opts)?;
    let mut optimal = 0;
    for (spec, ep) in w.train20.iter().zip(&episodes) {
        let solution = solve_optimal(spec, &full_solver())?;
        assert!(solution.state_count() < 100_000);
        let greedy_return: f64 = ep
            .steps
            .iter()
            .enumerate()
            .map(|(t, s)| DISCOUNT.powi(t as i32) * s.reward as f64)
            .sum();
        if (greedy_return - solution.optimal_return()).abs() <= 1e-9 {
            optimal += 1;
        }
    }
    let minutes = narrow.elapsed.as_secs_f64() / 60.0;
    verdict(
        optimal >= 18 && minutes <= 30.0,
        format!("greedy return optimal on {optimal}/20 seeds (need 18); training took {minutes:.1} min (limit 30)"),
    )
}

// ---------------------------------------------------------------- C2

fn close(a: f64, b: f64, atol: f64) -> bool {
    (a - b).abs() <= atol
}

fn rel_close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-8
}

/// Q-value iteration with `q_target` as the backup over every reachable
/// state, compared with the solver's Q-table.
fn fixation_matches_solver(spec: &GameSpec) -> Result<bool> {
    let solution = solve_optimal(spec, &full_solver())?;
    let key = |s: &GameState| {
        let mut k = s.clone();
        k.steps_taken = 0;
        k
    };
    let mut start = GameState::initial(spec);
    start.step_cap = u32::MAX;
    let mut index = HashMap::new();
    index.insert(key(&start), 0usize);
    let mut states = vec![start];
    let mut edges: Vec<Vec<(f64, Option<usize>)>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        let mut out = Vec::new();
        for cmd in s.admissible_commands(spec) {
            let mut n = s.clone();
            let r = n.apply_command(spec, cmd).reward as f64;
            if n.status.is_terminal() {
                out.push((r, None));
                continue;
            }
            let j = *index.entry(key(&n)).or_insert_with(|| {
                states.push(n.clone());
                states.len() - 1
            });
            out.push((r, Some(j)));
        }
        edges.push(out);
        i += 1;
    }
    let mut q: Vec<Vec<f64>> = edges.iter().map(|e| vec![0.0; e.len()]).collect();
    loop {
        let mut change: f64 = 0.0;
        for s in 0..q.len() {
            for a in 0..q[s].len() {
                let t = match edges[s][a] {
                    (r, None) => q_target(r, &[], DISCOUNT, true)?,
                    (r, Some(j)) => q_target(r, &q[j], DISCOUNT, false)?,
                };
                change = change.max((t - q[s][a]).abs());
                q[s][a] = t;
            }
        }
        if change < 1e-12 {
            break;
        }
    }
    for (s, state) in states.iter().enumerate() {
        let oracle = solution.q_values(spec, state)?;
        if q[s].iter().zip(&oracle).any(|(a, b)| (a - b).abs() > 1e-6) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Central differences of `loss(score(...))` against the gradient the
/// encoder accumulates, on a sample of entries from every trainable tensor.
fn encoder_gradient_ok(variant: Variant, seed: u64, vocab_size: usize) -> Result<(usize, usize)> {
    let mut enc = Encoder::new(EncoderConfig::new(variant, vocab_size, seed), None)?;
    let d = enc.config().emb_dim;
    for x in enc.params_mut().data[d..].iter_mut() {
        *x *= 4.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids = |rng: &mut ChaCha8Rng, n: usize| -> Vec<u32> {
        (0..n).map(|_| rng.random_range(1..vocab_size as u32)).collect()
    };
    let traj = ids(&mut rng, 40);
    let actions: Vec<Vec<u32>> = (1..5).map(|n| ids(&mut rng, n)).collect();
    let q: Vec<f64> = (0..actions.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let loss = |scores: &[f64]| match variant {
        Variant::Drrn => student_se_loss(scores, &q),
        Variant::Joint => nlu_ce_loss(scores, 2),
    };
    let prep = enc.prepare();
    let mut grads = enc.new_grads();
    enc.accumulate(&prep, &mut grads, &traj, &actions, |s| loss(s))?;
    let analytic = enc.finish(grads);
    let value = |e: &Encoder| -> Result<f64> { Ok(loss(&e.score(&e.prepare(), &traj, &actions)?)?.0) };

    let mut indices = Vec::new();
    for t in enc.params().infos.iter().filter(|t| t.trainable) {
        let r = t.range();
        for _ in 0..12 {
            let i = rng.random_range(r.clone());
            // Pad row entries have no gradient by construction; skip them.
            if i >= d {
                indices.push(i);
            }
        }
    }
    let h = 1e-5;
    let mut ok = 0;
    for &i in &indices {
        let mut plus = enc.clone();
        plus.params_mut().data[i] += h;
        let mut minus = enc.clone();
        minus.params_mut().data[i] -= h;
        let numeric = (value(&plus)? - value(&minus)?) / (2.0 * h);
        if rel_close(analytic[i], numeric) {
            ok += 1;
        }
    }
    Ok((ok, indices.len()))
}

fn c2_equation_fidelity(w: &mut World) -> Result<Verdict> {
    let mut failures = Vec::new();
    let mut check = |name: &str, pass: bool| {
        if !pass {
            failures.push(name.to_string());
        }
    };

    check("q_target terminal", q_target(1.0, &[], DISCOUNT, true)? == 1.0);
    check("q_target bootstrap", close(q_target(0.0, &[2.0, 1.0], 0.9, false)?, 1.8, 1e-12));
    check("q_target empty non-terminal", q_target(0.0, &[], 0.9, false).is_err());
    check("dqn_loss fit", dqn_loss(1.0, 1.0) == (0.0, 0.0));
    check("dqn_loss 0.25", close(dqn_loss(1.5, 1.0).0, 0.25, 1e-12));
    check("dqn_loss seed", close(dqn_loss(1.5, 1.0).1, 1.0, 1e-12));
    check("dqn batch mean", close(dqn_batch_loss(&[(1.0, 0.0), (0.0, 0.0)]), 0.5, 1e-12));

    check("se fit", student_se_loss(&[1.0, 2.0], &[1.0, 2.0])?.0 == 0.0);
    check("se unit errors", close(student_se_loss(&[0.0, 0.0], &[1.0, 1.0])?.0, 1.0, 1e-12));
    check("se length mismatch", student_se_loss(&[0.0], &[1.0, 1.0]).is_err());
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.random_range(1..12);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let q: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut sum = 0.0;
        for i in 0..n {
            sum += (f[i] - q[i]) * (f[i] - q[i]);
        }
        check("se brute force", close(student_se_loss(&f, &q)?.0, sum / n as f64, 1e-12));
    }

    check("ce uniform", close(nlu_ce_loss(&[0.0, 0.0], 0)?.0, std::f64::consts::LN_2, 1e-12));
    check("ce saturated", close(nlu_ce_loss(&[10.0, -10.0], 0)?.0, (-20f64).exp().ln_1p(), 1e-12));
    for _ in 0..50 {
        let n = rng.random_range(2..6);
        let s: Vec<f64> = (0..n).map(|_| rng.random_range(-4.0..4.0)).collect();
        let label = rng.random_range(0..n);
        let (_, grad) = nlu_ce_loss(&s, label)?;
        for i in 0..n {
            let h = 1e-6;
            let mut p = s.clone();
            p[i] += h;
            let mut m = s.clone();
            m[i] -= h;
            let numeric = (nlu_ce_loss(&p, label)?.0 - nlu_ce_loss(&m, label)?.0) / (2.0 * h);
            check("ce finite differences", rel_close(grad[i], numeric));
        }
    }
    check("nlu_se fit", nlu_se_loss(&[0.5, 1.0], &[0.5, 1.0])?.0 == 0.0);
    check("nlu_se 0.25", close(nlu_se_loss(&[0.0; 4], &[1.0, 0.0, 0.0, 0.0])?.0, 0.25, 1e-12));
    let (f, q) = ([0.3, -1.7, 2.2], [1.1, 0.4, -0.9]);
    check(
        "nlu_se equals se",
        nlu_se_loss(&f, &q)?.0.to_bits() == student_se_loss(&f, &q)?.0.to_bits(),
    );

    check("q_target fixation", fixation_matches_solver(&micro(Genre::Cooking, 3..4)[0])?);

    let mut grad_summary = Vec::new();
    for variant in [Variant::Drrn, Variant::Joint] {
        for seed in 0..2 {
            let (ok, total) = encoder_gradient_ok(variant, seed, w.vocab.len())?;
            check("encoder gradient", ok == total);
            grad_summary.push(format!("{} {ok}/{total}", variant.as_str()));
        }
    }
    verdict(
        failures.is_empty(),
        format!(
            "loss examples and fixation {}; encoder gradients {}",
            if failures.is_empty() { "ok".to_string() } else { format!("failed: {failures:?}") },
            grad_summary.join(", ")
        ),
    )
}

// ---------------------------------------------------------------- C3

fn c3_speedup(w: &mut World, narrow: &Teacher) -> Result<Verdict> {
    let budget = narrow.run.gradient_steps / 2;
    let teacher_report = greedy(&mut narrow.agent()?, &w.train20)?;
    let target = per_game(&teacher_report);
    w.reports.push(teacher_report);
    let config = StudentConfig {
        total_steps: budget,
        checkpoint_every: 500,
        seed: 0,
        ..StudentConfig::for_variant(StudentVariant::DrrnSe)
    };
    let run = train_student(&config, &narrow.pool, &w.vocab, None, EvalSuites::default(), None)?;
    let mut reached = vec![false; target.len()];
    for ckpt in run.checkpoints.iter().filter(|c| c.step <= budget) {
        let report = greedy(&mut neural(ckpt)?, &w.train20)?;
        for (r, (s, t)) in reached.iter_mut().zip(per_game(&report).iter().zip(&target)) {
            *r |= s >= t;
        }
        w.reports.push(report);
    }
    let count = reached.iter().filter(|&&r| r).count();
    verdict(
        count >= 15,
        format!(
            "student matched the teacher's final per-seed score within {budget} of the teacher's {} gradient steps on {count}/20 seeds (need 15)",
            narrow.run.gradient_steps
        ),
    )
}

// ---------------------------------------------------------------- C4

struct Students {
    drrn_se: StudentRun,
    nlu_ce: StudentRun,
    nlu_se: StudentRun,
}

fn student(w: &World, pool: &CurriculumPool, variant: StudentVariant) -> Result<StudentRun> {
    let config = StudentConfig {
        total_steps: STUDENT_STEPS,
        checkpoint_every: 1000,
        seed: 0,
        ..StudentConfig::for_variant(variant)
    };
    let suites = EvalSuites {
        in_domain: &w.held,
        out_domain: &w.ood,
    };
    train_student(&config, pool, &w.vocab, None, suites, None)
}

fn uniform_random() -> EvalOptions {
    EvalOptions::with_policy(PolicyConfig {
        kind: PolicyKind::Sample,
        temperature: 1.0,
        ..PolicyConfig::greedy()
    })
}

fn c4_exceed_teacher(w: &mut World, wide: &Teacher, students: &Students) -> Result<Verdict> {
    let teacher = greedy(&mut wide.agent()?, &w.held)?;
    // Zero Q-values under temperature-1 sampling: uniform over admissible actions.
    let random = evaluate_games(&mut ConstantAgent::default(), "random", "held", &w.held, &uniform_random())?.0;
    let (t, r) = (teacher.percent, random.percent);
    let mut pass = false;
    let mut parts = Vec::new();
    for (name, run) in [("drrn_se", &students.drrn_se), ("nlu_ce", &students.nlu_ce), ("nlu_se", &students.nlu_se)] {
        let (_, best) = run.best();
        let s = best.eval_in_domain_pct.expect("in-domain suite evaluated");
        pass |= s >= t && r <= t - 20.0 && r <= s - 20.0;
        parts.push(format!("{name} best {s:.1}% at step {}", best.step));
    }
    w.reports.push(teacher);
    w.reports.push(random);
    verdict(
        pass,
        format!("teacher {t:.1}%, random {r:.1}%, {}", parts.join(", ")),
    )
}

// ---------------------------------------------------------------- C5

fn pretrained_vectors(vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let vectors = build_word_vectors(&engine_corpus(&CorpusConfig::default()), &VectorConfig { dim: 50, window: 2 })?;
    let dir = tempfile::tempdir().expect("temp dir");
    let path = dir.path().join("vectors.txt");
    write_word_vectors(&path, &vectors)?;
    load_word_vectors(&path, vocab)
}

fn c5_out_of_domain(w: &mut World, wide: &Teacher) -> Result<Verdict> {
    let table = pretrained_vectors(&w.vocab)?;
    let random_init = ArchConfig {
        emb_dim: table.dim,
        trainable_embeddings: true,
        ..ArchConfig::for_variant(Variant::Joint)
    };
    let mut pre = Vec::new();
    let mut rnd = Vec::new();
    for seed in 0..5 {
        for (embeddings, arch, out) in [(Some(&table), None, &mut pre), (None, Some(random_init.clone()), &mut rnd)] {
            let config = StudentConfig {
                total_steps: STUDENT_STEPS,
                checkpoint_every: STUDENT_STEPS,
                seed,
                arch,
                ..StudentConfig::for_variant(StudentVariant::NluSe)
            };
            let run = train_student(&config, &wide.pool, &w.vocab, embeddings, EvalSuites::default(), None)?;
            let report = greedy(&mut neural(run.final_checkpoint())?, &w.ood)?;
            out.push(report.percent);
            w.reports.push(report);
        }
    }
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.1}")).collect::<Vec<_>>().join(" ");
    let detail = format!("pretrained [{}] vs random-init [{}]", fmt(&pre), fmt(&rnd));
    let (mp, mr) = (median(&mut pre), median(&mut rnd));
    verdict(mp >= mr, format!("treasure median {mp:.1}% vs {mr:.1}%; {detail}"))
}

// ---------------------------------------------------------------- C6

fn c6_confidence(w: &mut World, students: &Students) -> Result<Verdict> {
    let mut runs = Vec::new();
    for (name, run) in [("nlu_ce", &students.nlu_ce), ("nlu_se", &students.nlu_se)] {
        let (report, episodes) =
            evaluate_games(&mut neural(run.final_checkpoint())?, name, "ood", &w.ood, &EvalOptions::default())?;
        w.reports.push(report);
        runs.push((name.to_string(), episodes));
    }
    let (report, episodes) =
        evaluate_games(&mut ConstantAgent::default(), "constant", "ood", &w.ood, &EvalOptions::default())?;
    let uniform_zero = report.step_kl.iter().all(|&k| k == 0.0);
    w.reports.push(report);
    runs.push(("constant".to_string(), episodes));
    let summary = analyze_confidence(&runs)?;
    let (ce, se, constant) = (summary[0].median, summary[1].median, &summary[2]);
    let constant_zero = uniform_zero && constant.min == 0.0 && constant.max == 0.0;
    verdict(
        ce > se && constant_zero,
        format!("median KL on treasure: nlu_ce {ce:.4}, nlu_se {se:.4}; uniform-Q agent all zero: {constant_zero}"),
    )
}

// ---------------------------------------------------------------- C7

fn c7_temperature(w: &mut World, students: &Students) -> Result<Verdict> {
    let mut spreads = Vec::new();
    let mut parts = Vec::new();
    let mut completes = true;
    for (name, run) in [("nlu_se", &students.nlu_se), ("nlu_ce", &students.nlu_ce)] {
        let ckpt = run.final_checkpoint();
        let mut scores = Vec::new();
        for t in [0.01, 0.1, 1.0] {
            let policy = PolicyConfig::sample(t);
            let report = evaluate_games(&mut neural(ckpt)?, name, "held", &w.held, &EvalOptions::with_policy(policy))?.0;
            scores.push(report.percent);
            w.reports.push(report);
        }
        for policy in [PolicyConfig::greedy(), PolicyConfig::linucb(0.5)] {
            let report = evaluate_games(&mut neural(ckpt)?, name, "held", &w.held, &EvalOptions::with_policy(policy))?.0;
            completes &= report.tallies.total() == PLAYS_PER_GAME * w.held.len() as u32;
            parts.push(format!("{name} {} {:.1}%", policy.label(), report.percent));
            w.reports.push(report);
        }
        let spread = scores.iter().cloned().fold(f64::MIN, f64::max) - scores.iter().cloned().fold(f64::MAX, f64::min);
        parts.insert(
            spreads.len(),
            format!("{name} T=0.01/0.1/1: {:.1}/{:.1}/{:.1} (spread {spread:.1})", scores[0], scores[1], scores[2]),
        );
        spreads.push(spread);
    }
    verdict(
        spreads[0] > 10.0 && spreads[1] <= 5.0 && completes,
        parts.join("; "),
    )
}

// ---------------------------------------------------------------- C8

fn c8_tallies(w: &mut World) -> Result<Verdict> {
    let mut constant_limit = true;
    for games in [&w.held, &w.ood] {
        let report = greedy(&mut ConstantAgent::default(), games)?;
        let n = PLAYS_PER_GAME * games.len() as u32;
        constant_limit &= report.tallies.step_limit == n && report.tallies.total() == n;
        w.reports.push(report);
    }
    let mut partitioned = 0;
    for r in &w.reports {
        let n = r.plays_per_game * per_game(r).len() as u32;
        let (percent, tallies) = r.recompute();
        if r.tallies.total() == n && tallies == r.tallies && percent == r.percent {
            partitioned += 1;
        }
    }
    verdict(
        constant_limit && partitioned == w.reports.len(),
        format!(
            "{partitioned}/{} reports partition into 2 plays per game; constant-Q agent all step_limit: {constant_limit}",
            w.reports.len()
        ),
    )
}

// ---------------------------------------------------------------- C9

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn c9_determinism(w: &mut World, narrow: &Teacher) -> Result<Verdict> {
    let tmp = tempfile::tempdir().expect("temp dir");
    let p = |name: &str| tmp.path().join(name);
    let mut failures = Vec::new();
    let mut check = |name: &str, pass: bool| {
        if !pass {
            failures.push(name.to_string());
        }
    };
    let small = &w.train20[..3];

    let teacher_config = TrainingConfig {
        total_steps: 1500,
        observe_steps: 200,
        checkpoint_every: 500,
        seed: 5,
        ..TrainingConfig::default()
    };
    train_teacher(&teacher_config, small, small, Some(&p("teacher-a")))?;
    train_teacher(&teacher_config, small, small, Some(&p("teacher-b")))?;
    let ta = tree(&p("teacher-a"));
    check("teacher runs", ta.len() > 3 && ta == tree(&p("teacher-b")));

    let collect = CollectConfig {
        episodes: 40,
        seed: 9,
        ..CollectConfig::default()
    };
    let pool = collect_with_teacher(&narrow.run.checkpoint, small, &collect)?;
    write_pool(&pool, &p("pool-a.jsonl"))?;
    write_pool(&collect_with_teacher(&narrow.run.checkpoint, small, &collect)?, &p("pool-b.jsonl"))?;
    let bytes = std::fs::read(p("pool-a.jsonl")).unwrap();
    check("pools", bytes == std::fs::read(p("pool-b.jsonl")).unwrap());
    let back = read_pool(&p("pool-a.jsonl"))?;
    check("pool round trip", back == pool);
    write_pool(&back, &p("pool-c.jsonl"))?;
    check("pool rewrite", bytes == std::fs::read(p("pool-c.jsonl")).unwrap());

    for variant in [StudentVariant::DrrnSe, StudentVariant::NluCe] {
        let config = StudentConfig {
            total_steps: 40,
            checkpoint_every: 20,
            batch_size: 8,
            seed: 2,
            ..StudentConfig::for_variant(variant)
        };
        let suites = EvalSuites {
            in_domain: small,
            out_domain: &w.ood[..2],
        };
        let a = p(&format!("student-{}-a", variant.as_str()));
        let b = p(&format!("student-{}-b", variant.as_str()));
        train_student(&config, &pool, &w.vocab, None, suites, Some(&a))?;
        train_student(&config, &pool, &w.vocab, None, suites, Some(&b))?;
        let files = tree(&a);
        check("student runs", files.len() > 3 && files == tree(&b));
    }

    let ckpt = &narrow.run.checkpoint;
    ckpt.save(&p("ckpt-a"))?;
    let loaded = Checkpoint::load(&p("ckpt-a"))?;
    let bits = |c: &Checkpoint| c.encoder.params().data.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    check("checkpoint parameters", bits(&loaded) == bits(ckpt) && loaded.vocab == ckpt.vocab);
    loaded.save(&p("ckpt-b"))?;
    check("checkpoint rewrite", tree(&p("ckpt-a")) == tree(&p("ckpt-b")));

    let opts = EvalOptions::with_policy(PolicyConfig {
        seed: 1,
        ..PolicyConfig::sample(1.0)
    });
    for dir in ["report-a", "report-b"] {
        let (report, _) = evaluate_games(&mut neural(ckpt)?, "teacher", "small", small, &opts)?;
        report.write(&p(dir))?;
    }
    check("reports", tree(&p("report-a")) == tree(&p("report-b")));
    let report = EvalReport::read(&p("report-a").join("report.json"))?;
    report.write(&p("report-c"))?;
    check("report round trip", tree(&p("report-a")) == tree(&p("report-c")));

    write_suite(&p("suite-a"), "small", small)?;
    let (_, games) = read_suite(&p("suite-a"))?;
    check("suite round trip", games == small);
    write_suite(&p("suite-b"), "small", &games)?;
    check("suite rewrite", tree(&p("suite-a")) == tree(&p("suite-b")));

    w.vocab.save(&p("vocab.txt"))?;
    check("vocabulary round trip", Vocabulary::load(&p("vocab.txt"))? == w.vocab);

    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            "teacher, student, pool, checkpoint, report, suite and vocabulary files byte-identical and round-trip exactly".to_string()
        } else {
            format!("mismatches: {failures:?}")
        },
    )
}

// ---------------------------------------------------------------- C10

fn c10_curriculum(narrow: &Teacher, wide: &Teacher) -> Result<Verdict> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, pool) in [("narrow", &narrow.pool), ("wide", &wide.pool)] {
        let eps: Vec<f64> = pool.records.iter().filter(|r| r.step == 0).map(|r| r.epsilon).collect();
        let (d, p) = ks_uniform(&eps);
        let n = pool.len() as f64;
        let observed = pool.records.iter().filter(|r| r.behavior_action == r.best_action()).count() as f64 / n;
        let expected = pool
            .records
            .iter()
            .map(|r| 1.0 - r.epsilon * (1.0 - 1.0 / r.actions.len() as f64))
            .sum::<f64>()
            / n;
        pass &= eps.len() as u64 == POOL_EPISODES && p >= 0.01 && (observed - expected).abs() <= 0.02;
        parts.push(format!(
            "{name}: KS D={d:.4} p={p:.3} over {} episodes, argmax rate {observed:.4} vs {expected:.4}",
            eps.len()
        ));
    }
    verdict(pass, parts.join("; "))
}

#[test]
fn acceptance_criteria() {
    let started = Instant::now();
    let mut w = World {
        train20: micro(Genre::Cooking, 0..20),
        wide_train: micro(Genre::Cooking, 0..100),
        held: micro(Genre::Cooking, 1000..1020),
        ood: micro(Genre::Treasure, 0..20),
        vocab: Vocabulary::engine_default(),
        reports: Vec::new(),
    };
    let mut results: Vec<(u32, &str, Verdict)> = Vec::new();
    let mut record = |n: u32, name: &'static str, v: Result<Verdict>| {
        let v = v.unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        report_line(&format!(
            "C{n} {} {name}: {} [{:.0}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            started.elapsed().as_secs_f64()
        ));
        results.push((n, name, v));
    };

    let narrow = Teacher::train(&w.train20, &w.train20).expect("narrow teacher");
    record(1, "oracle equivalence", c1_oracle_equivalence(&mut w, &narrow));
    record(2, "equation fidelity", c2_equation_fidelity(&mut w));
    record(3, "teacher-student speedup", c3_speedup(&mut w, &narrow));

    let wide = Teacher::train(&w.wide_train, &w.held).expect("wide teacher");
    let students = Students {
        drrn_se: student(&w, &wide.pool, StudentVariant::DrrnSe).expect("drrn_se student"),
        nlu_ce: student(&w, &wide.pool, StudentVariant::NluCe).expect("nlu_ce student"),
        nlu_se: student(&w, &wide.pool, StudentVariant::NluSe).expect("nlu_se student"),
    };
    record(4, "exceed the teacher", c4_exceed_teacher(&mut w, &wide, &students));
    record(5, "out-of-domain ordering", c5_out_of_domain(&mut w, &wide));
    record(6, "confidence analysis", c6_confidence(&mut w, &students));
    record(7, "inference-policy sensitivity", c7_temperature(&mut w, &students));
    record(8, "outcome tallies", c8_tallies(&mut w));
    record(9, "determinism and serialization", c9_determinism(&mut w, &narrow));
    record(10, "curriculum statistics", c10_curriculum(&narrow, &wide));

    let red: Vec<String> = results
        .iter()
        .filter(|(_, _, v)| !v.pass)
        .map(|(n, name, _)| format!("C{n} {name}"))
        .collect();
    report_line(&format!("{}/{} criteria pass", results.len() - red.len(), results.len()));
    assert!(red.is_empty(), "red criteria: {}", red.join(", "));
}
