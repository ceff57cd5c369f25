//! Curriculum pools: full Q-tables recorded from teacher rollouts with one
//! uniformly drawn ε per episode.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::Checkpoint;
use crate::engine::{self, GameSpec, GameState, Status, DEFAULT_STEP_CAP};
use crate::error::{Error, Result};
use crate::harness::{opening_text, Agent, NeuralAgent};
use crate::policy::select_greedy;
use crate::text::{Role, Trajectory, Vocabulary, DEFAULT_MAX_TOKENS};

/// One decision point. Field order is the JSONL field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumRecord {
    pub game_id: String,
    pub step: u32,
    /// The turns the teacher's token window covered.
    pub turns: Vec<(Role, String)>,
    pub actions: Vec<String>,
    pub q_values: Vec<f64>,
    pub behavior_action: usize,
    pub epsilon: f64,
}

impl CurriculumRecord {
    pub fn validate(&self) -> Result<()> {
        if self.actions.is_empty() || self.q_values.len() != self.actions.len() {
            return Err(Error::Contract(format!(
                "record has {} actions and {} q-values",
                self.actions.len(),
                self.q_values.len()
            )));
        }
        if self.behavior_action >= self.actions.len() {
            return Err(Error::Contract(format!(
                "behavior action {} out of {}",
                self.behavior_action,
                self.actions.len()
            )));
        }
        Ok(())
    }

    /// Teacher argmax, lowest index on ties.
    pub fn best_action(&self) -> usize {
        select_greedy(&self.q_values).unwrap_or(0)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CurriculumPool {
    pub records: Vec<CurriculumRecord>,
}

impl CurriculumPool {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn push(&mut self, record: CurriculumRecord) -> Result<()> {
        record.validate()?;
        self.records.push(record);
        Ok(())
    }
}

/// Uniform with replacement.
pub fn sample_batch<'a, R: Rng + ?Sized>(
    pool: &'a CurriculumPool,
    batch: usize,
    rng: &mut R,
) -> Result<Vec<&'a CurriculumRecord>> {
    Ok(sample_indices(pool, batch, rng)?.into_iter().map(|i| &pool.records[i]).collect())
}

/// The record positions [`sample_batch`] would return.
pub fn sample_indices<R: Rng + ?Sized>(pool: &CurriculumPool, batch: usize, rng: &mut R) -> Result<Vec<usize>> {
    if pool.is_empty() {
        return Err(Error::State("sampling from an empty curriculum pool".into()));
    }
    Ok((0..batch).map(|_| rng.random_range(0..pool.len())).collect())
}

/// JSONL, one record per line. Floats use the shortest representation that
/// parses back to the same bits.
pub fn write_pool(pool: &CurriculumPool, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for r in &pool.records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_pool(path: &Path) -> Result<CurriculumPool> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut pool = CurriculumPool::default();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let record: CurriculumRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        record.validate().map_err(|e| Error::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        pool.records.push(record);
    }
    Ok(pool)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CollectConfig {
    pub episodes: u64,
    pub step_cap: u32,
    pub max_tokens: usize,
    pub seed: u64,
}

impl Default for CollectConfig {
    fn default() -> Self {
        CollectConfig {
            episodes: 1000,
            step_cap: DEFAULT_STEP_CAP,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: 0,
        }
    }
}

/// Plays `config.episodes` episodes, each with its own ε ~ U[0, 1], visiting
/// games in shuffled passes, and records the full Q-table at every step.
/// `vocab` and `config.max_tokens` decide which turns a record keeps.
pub fn collect(
    agent: &mut dyn Agent,
    vocab: &Vocabulary,
    games: &[GameSpec],
    config: &CollectConfig,
) -> Result<CurriculumPool> {
    if games.is_empty() {
        return Err(Error::Contract("curriculum collection needs games".into()));
    }
    if config.step_cap == 0 || config.step_cap > DEFAULT_STEP_CAP || config.max_tokens == 0 {
        return Err(Error::Range(format!("invalid collect config {config:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..games.len()).collect();
    let mut cursor = order.len();
    let mut pool = CurriculumPool::default();
    for _ in 0..config.episodes {
        if cursor == order.len() {
            order.shuffle(&mut rng);
            cursor = 0;
        }
        let spec = &games[order[cursor]];
        cursor += 1;
        let epsilon: f64 = rng.random();
        let mut state = GameState::initial(spec).with_step_cap(config.step_cap);
        let opening = opening_text(spec, &state);
        agent.begin(spec, &opening)?;
        let mut traj = Trajectory::new(config.max_tokens);
        traj.append_turn(Role::System, &opening, vocab)?;
        let mut step = 0;
        while state.status == Status::Ongoing {
            let actions = state.admissible_actions(spec);
            let q = agent.evaluate(spec, &state, &actions, false)?.q_values;
            let chosen = if rng.random::<f64>() < epsilon {
                rng.random_range(0..actions.len())
            } else {
                select_greedy(&q)?
            };
            pool.push(CurriculumRecord {
                game_id: spec.id(),
                step,
                turns: traj.window_turns().to_vec(),
                actions: actions.clone(),
                q_values: q,
                behavior_action: chosen,
                epsilon,
            })?;
            let outcome = state.apply(spec, &actions[chosen])?;
            let text = engine::render(spec, &state, &outcome.feedback);
            for (role, t) in [(Role::Player, actions[chosen].as_str()), (Role::System, text.as_str())] {
                agent.observe(role, t)?;
                traj.append_turn(role, t, vocab)?;
            }
            step += 1;
        }
    }
    Ok(pool)
}

/// [`collect`] with the teacher checkpoint as the agent.
pub fn collect_with_teacher(
    teacher: &Checkpoint,
    games: &[GameSpec],
    config: &CollectConfig,
) -> Result<CurriculumPool> {
    let mut agent = NeuralAgent::new(&teacher.encoder, &teacher.vocab, config.max_tokens)?;
    collect(&mut agent, &teacher.vocab, games, config)
}

/// One-sample Kolmogorov–Smirnov test against U[0, 1]; returns the
/// statistic D and its asymptotic p-value.
pub fn ks_uniform(samples: &[f64]) -> (f64, f64) {
    let mut x = samples.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let v = v.clamp(0.0, 1.0);
        d = d.max((i as f64 + 1.0) / n - v).max(v - i as f64 / n);
    }
    let sn = n.sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    (d, kolmogorov_q(lambda))
}

/// Survival function of the Kolmogorov distribution.
fn kolmogorov_q(lambda: f64) -> f64 {
    if lambda < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let k = k as f64;
        let term = (-2.0 * k * k * lambda * lambda).exp();
        sum += if k as u64 % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests;
