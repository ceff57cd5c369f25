//! The DQN teacher: replay memory, ε schedule, Q-targets and the training
//! loop that alternates environment steps with gradient steps.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{Adam, AdamConfig, ArchConfig, Checkpoint, Encoder, EncoderConfig};
use crate::engine::{self, GameSpec, GameState, Status, DEFAULT_STEP_CAP};
use crate::error::{Error, Result};
use crate::harness::{self, EvalOptions, NeuralAgent};
use crate::text::{Role, Trajectory, Vocabulary, DEFAULT_MAX_TOKENS};

/// One replay sample. Consecutive transitions of an episode share their
/// token buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Arc<[u32]>,
    pub action: Vec<u32>,
    pub reward: f64,
    pub next_state: Arc<[u32]>,
    pub next_actions: Arc<[Vec<u32>]>,
    pub terminal: bool,
}

impl Transition {
    pub fn new(
        state: Arc<[u32]>,
        action: Vec<u32>,
        reward: f64,
        next_state: Arc<[u32]>,
        next_actions: Arc<[Vec<u32>]>,
        terminal: bool,
    ) -> Result<Self> {
        if reward != 0.0 && reward != 1.0 {
            return Err(Error::Range(format!("reward must be 0 or 1, got {reward}")));
        }
        if terminal != next_actions.is_empty() {
            return Err(Error::Contract(format!(
                "terminal = {terminal} with {} next actions",
                next_actions.len()
            )));
        }
        Ok(Transition {
            state,
            action,
            reward,
            next_state,
            next_actions,
            terminal,
        })
    }
}

/// Fixed-capacity ring buffer; the oldest transition is evicted first and
/// sampling is uniform with replacement.
#[derive(Debug, Clone)]
pub struct ReplayMemory {
    capacity: usize,
    items: Vec<Transition>,
    next: usize,
    inserted: u64,
    rng: ChaCha8Rng,
}

impl ReplayMemory {
    pub fn new(capacity: usize, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Range("replay capacity must be positive".into()));
        }
        Ok(ReplayMemory {
            capacity,
            items: Vec::new(),
            next: 0,
            inserted: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.next] = t;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
    }

    /// Contents from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.next };
        self.items[split..].iter().chain(&self.items[..split])
    }

    pub fn sample(&mut self, batch: usize) -> Result<Vec<&Transition>> {
        if self.items.is_empty() {
            return Err(Error::State("sampling from an empty replay memory".into()));
        }
        let n = self.items.len();
        let picks: Vec<usize> = (0..batch).map(|_| self.rng.random_range(0..n)).collect();
        Ok(picks.into_iter().map(|i| &self.items[i]).collect())
    }
}

/// r for terminal transitions, r + λ·max f(s', a') otherwise.
pub fn q_target(reward: f64, next_scores: &[f64], discount: f64, terminal: bool) -> Result<f64> {
    if terminal {
        return Ok(reward);
    }
    let best = next_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if next_scores.is_empty() {
        return Err(Error::Contract("non-terminal transition without next actions".into()));
    }
    Ok(reward + discount * best)
}

/// (f − Q)² and its derivative with respect to f.
pub fn dqn_loss(f: f64, target: f64) -> (f64, f64) {
    let d = f - target;
    (d * d, 2.0 * d)
}

/// Mean of [`dqn_loss`] over (f, Q) pairs.
pub fn dqn_batch_loss(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|&(f, q)| dqn_loss(f, q).0).sum::<f64>() / pairs.len() as f64
}

/// Linear decay from `start` to `end` over `steps`, flat afterwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsilonSchedule {
    pub start: f64,
    pub end: f64,
    pub steps: u64,
}

pub fn epsilon_at(schedule: &EpsilonSchedule, step: u64) -> f64 {
    if schedule.steps == 0 || step >= schedule.steps {
        return schedule.end;
    }
    let frac = step as f64 / schedule.steps as f64;
    schedule.start + (schedule.end - schedule.start) * frac
}

/// With probability ε a uniform action, otherwise the lowest-index argmax of
/// `scores`, which is only called when needed.
pub fn act_epsilon_greedy<R: Rng + ?Sized>(
    n_actions: usize,
    epsilon: f64,
    rng: &mut R,
    scores: impl FnOnce() -> Result<Vec<f64>>,
) -> Result<usize> {
    if n_actions == 0 {
        return Err(Error::Contract("no actions to choose from".into()));
    }
    if n_actions == 1 {
        return Ok(0);
    }
    if rng.random::<f64>() < epsilon {
        return Ok(rng.random_range(0..n_actions));
    }
    let q = scores()?;
    if q.len() != n_actions {
        return Err(Error::Contract(format!("{} scores for {n_actions} actions", q.len())));
    }
    crate::policy::select_greedy(&q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingConfig {
    /// λ in the Q-target.
    pub discount: f64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Length of the ε decay; the whole run when absent.
    pub epsilon_decay_steps: Option<u64>,
    pub replay_capacity: usize,
    pub batch_size: usize,
    /// Environment steps before the first gradient step.
    pub observe_steps: u64,
    pub learn_every: u64,
    /// Environment steps.
    pub total_steps: u64,
    pub checkpoint_every: u64,
    pub step_cap: u32,
    pub max_tokens: usize,
    pub seed: u64,
    pub arch: ArchConfig,
    pub adam: AdamConfig,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            discount: 0.9,
            epsilon_start: 1.0,
            epsilon_end: 0.0,
            epsilon_decay_steps: None,
            replay_capacity: 100_000,
            batch_size: 32,
            observe_steps: 500,
            learn_every: 4,
            total_steps: 50_000,
            checkpoint_every: 5_000,
            step_cap: DEFAULT_STEP_CAP,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: 0,
            arch: ArchConfig::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainingConfig {
    pub fn schedule(&self) -> EpsilonSchedule {
        EpsilonSchedule {
            start: self.epsilon_start,
            end: self.epsilon_end,
            steps: self.epsilon_decay_steps.unwrap_or(self.total_steps),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Range(format!("training config: {what}")));
        if !(0.0..1.0).contains(&self.discount) {
            return bad("discount must be in [0, 1)");
        }
        for e in [self.epsilon_start, self.epsilon_end] {
            if !(0.0..=1.0).contains(&e) {
                return bad("epsilon must be in [0, 1]");
            }
        }
        if self.replay_capacity == 0
            || self.batch_size == 0
            || self.learn_every == 0
            || self.total_steps == 0
            || self.checkpoint_every == 0
            || self.max_tokens == 0
        {
            return bad("sizes and intervals must be positive");
        }
        if self.step_cap == 0 || self.step_cap > DEFAULT_STEP_CAP {
            return bad("step cap must be in [1, 100]");
        }
        Ok(())
    }
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeacherMetrics {
    pub step: u64,
    pub epsilon: f64,
    /// Mean batch loss since the previous row; absent before learning starts.
    pub loss: Option<f64>,
    pub eval_score_pct: f64,
}

pub fn metrics_csv(rows: &[TeacherMetrics]) -> String {
    let mut out = String::from("step,epsilon,loss,eval_score_pct\n");
    for r in rows {
        let loss = r.loss.map_or(String::new(), |l| format!("{l:?}"));
        let _ = writeln!(out, "{},{:?},{},{:?}", r.step, r.epsilon, loss, r.eval_score_pct);
    }
    out
}

#[derive(Debug, Clone)]
pub struct TeacherRun {
    pub checkpoint: Checkpoint,
    pub metrics: Vec<TeacherMetrics>,
    pub gradient_steps: u64,
    pub episodes: u64,
}

struct Episode {
    spec: usize,
    state: GameState,
    traj: Trajectory,
    ids: Arc<[u32]>,
    actions: Vec<String>,
    action_ids: Arc<[Vec<u32>]>,
}

/// Trains a teacher on `games`, evaluating greedily on `eval_games` at each
/// checkpoint. With `out_dir`, writes `config.json`, `metrics.csv`,
/// `ckpt-<step>/` per checkpoint and `final/`.
pub fn train_teacher(
    config: &TrainingConfig,
    games: &[GameSpec],
    eval_games: &[GameSpec],
    out_dir: Option<&Path>,
) -> Result<TeacherRun> {
    config.validate()?;
    if games.is_empty() {
        return Err(Error::Contract("teacher needs at least one training game".into()));
    }
    let vocab = Vocabulary::engine_default();
    let mut encoder = Encoder::new(EncoderConfig::with_arch(&config.arch, vocab.len(), config.seed), None)?;
    let mut adam = Adam::new(config.adam, encoder.params());
    let mut memory = ReplayMemory::new(config.replay_capacity, config.seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let schedule = config.schedule();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("config.json");
        std::fs::write(&path, serde_json::to_string_pretty(config)? + "\n").map_err(|e| Error::io(&path, e))?;
    }

    let mut order: Vec<usize> = (0..games.len()).collect();
    let mut cursor = order.len();
    let mut episode: Option<Episode> = None;
    let mut episodes = 0;
    let mut prep = encoder.prepare();
    let mut grad_steps = 0u64;
    let (mut loss_sum, mut loss_n) = (0.0, 0u64);
    let mut metrics = Vec::new();
    let encode_actions = |actions: &[String]| -> Arc<[Vec<u32>]> {
        actions.iter().map(|a| vocab.encode(a)).collect()
    };

    for step in 0..config.total_steps {
        let ep = match episode.as_mut() {
            Some(ep) => ep,
            None => {
                if cursor == order.len() {
                    order.shuffle(&mut rng);
                    cursor = 0;
                }
                let spec = &games[order[cursor]];
                cursor += 1;
                episodes += 1;
                let state = GameState::initial(spec).with_step_cap(config.step_cap);
                let mut traj = Trajectory::new(config.max_tokens);
                traj.append_turn(Role::System, &harness::opening_text(spec, &state), &vocab)?;
                let actions = state.admissible_actions(spec);
                episode.insert(Episode {
                    spec: order[cursor - 1],
                    ids: traj.ids().into(),
                    traj,
                    action_ids: encode_actions(&actions),
                    actions,
                    state,
                })
            }
        };
        let spec = &games[ep.spec];
        let epsilon = epsilon_at(&schedule, step);
        let chosen = act_epsilon_greedy(ep.actions.len(), epsilon, &mut rng, || {
            encoder.score(&prep, &ep.ids, &ep.action_ids)
        })?;
        let outcome = ep.state.apply(spec, &ep.actions[chosen])?;
        let text = engine::render(spec, &ep.state, &outcome.feedback);
        ep.traj.append_turn(Role::Player, &ep.actions[chosen], &vocab)?;
        ep.traj.append_turn(Role::System, &text, &vocab)?;
        let next_ids: Arc<[u32]> = ep.traj.ids().into();
        let terminal = matches!(ep.state.status, Status::Won | Status::Lost);
        // Hitting the step cap truncates the episode without ending the
        // game, so its last transition still bootstraps.
        let next_actions = match ep.state.status {
            Status::Ongoing => ep.state.admissible_actions(spec),
            Status::StepLimit => {
                let mut probe = ep.state.clone();
                probe.status = Status::Ongoing;
                probe.admissible_actions(spec)
            }
            _ => Vec::new(),
        };
        let next_action_ids = encode_actions(&next_actions);
        memory.push(Transition::new(
            ep.ids.clone(),
            ep.action_ids[chosen].clone(),
            outcome.reward as f64,
            next_ids.clone(),
            next_action_ids.clone(),
            terminal,
        )?);
        if ep.state.status == Status::Ongoing {
            ep.ids = next_ids;
            ep.actions = next_actions;
            ep.action_ids = next_action_ids;
        } else {
            episode = None;
        }

        if step >= config.observe_steps && step % config.learn_every == 0 {
            let loss = learn(&mut encoder, &prep, &mut adam, &mut memory, config)?;
            prep = encoder.prepare();
            grad_steps += 1;
            loss_sum += loss;
            loss_n += 1;
        }

        let done = step + 1;
        if done % config.checkpoint_every == 0 || done == config.total_steps {
            let eval_score_pct = if eval_games.is_empty() {
                0.0
            } else {
                let mut agent = NeuralAgent::new(&encoder, &vocab, config.max_tokens)?;
                harness::evaluate_games(&mut agent, "teacher", "eval", eval_games, &EvalOptions::default())?
                    .0
                    .percent
            };
            metrics.push(TeacherMetrics {
                step: done,
                epsilon: epsilon_at(&schedule, done),
                loss: (loss_n > 0).then(|| loss_sum / loss_n as f64),
                eval_score_pct,
            });
            log::info!(
                "teacher step {done}: eval {eval_score_pct:.1}%, {grad_steps} gradient steps, {episodes} episodes"
            );
            (loss_sum, loss_n) = (0.0, 0);
            if let Some(dir) = out_dir {
                let ckpt = Checkpoint {
                    label: "teacher".into(),
                    step: grad_steps,
                    encoder: encoder.clone(),
                    vocab: vocab.clone(),
                };
                ckpt.save(&dir.join(format!("ckpt-{done}")))?;
                let path = dir.join("metrics.csv");
                std::fs::write(&path, metrics_csv(&metrics)).map_err(|e| Error::io(&path, e))?;
            }
        }
    }

    let checkpoint = Checkpoint {
        label: "teacher".into(),
        step: grad_steps,
        encoder,
        vocab,
    };
    if let Some(dir) = out_dir {
        checkpoint.save(&dir.join("final"))?;
    }
    Ok(TeacherRun {
        checkpoint,
        metrics,
        gradient_steps: grad_steps,
        episodes,
    })
}

/// One gradient step on a sampled batch; returns the mean batch loss.
fn learn(
    encoder: &mut Encoder,
    prep: &crate::encoder::Prepared,
    adam: &mut Adam,
    memory: &mut ReplayMemory,
    config: &TrainingConfig,
) -> Result<f64> {
    let batch = memory.sample(config.batch_size)?;
    let scale = 1.0 / batch.len() as f64;
    let mut grads = encoder.new_grads();
    let mut total = 0.0;
    for t in batch {
        let next = if t.terminal {
            Vec::new()
        } else {
            encoder.score(prep, &t.next_state, &t.next_actions)?
        };
        let target = q_target(t.reward, &next, config.discount, t.terminal)?;
        let (loss, _) = encoder.accumulate(prep, &mut grads, &t.state, std::slice::from_ref(&t.action), |q| {
            let (l, d) = dqn_loss(q[0], target);
            Ok((l * scale, vec![d * scale]))
        })?;
        total += loss;
    }
    let grads = encoder.finish(grads);
    adam.apply(encoder.params_mut(), &grads)?;
    Ok(total)
}
