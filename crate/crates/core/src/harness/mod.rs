//! Episode running, suite evaluation, outcome tallies and the KL confidence
//! analysis.

mod suite;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{Encoder, Prepared};
use crate::engine::{self, GameSpec, GameState, Solution, SolverConfig, Status, DEFAULT_STEP_CAP};
use crate::error::{Error, Result};
use crate::policy::{self, LinUcbState, PolicyConfig, PolicyKind, LINUCB_DIM};
use crate::text::{Role, Trajectory, Vocabulary};

pub use suite::{read_suite, write_suite, SuiteManifest, SUITE_FILE};

pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Text of the first system turn: the game's intro followed by the opening
/// observation.
pub fn opening_text(spec: &GameSpec, state: &GameState) -> String {
    format!("{}\n{}", engine::intro_text(spec), engine::render(spec, state, ""))
}

/// Scores produced by an agent for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub q_values: Vec<f64>,
    /// Per-action 32-dim features for LinUCB, if the agent has any.
    pub features: Option<Vec<Vec<f64>>>,
}

/// Anything that assigns Q-values to the admissible actions of a state.
pub trait Agent {
    /// Starts an episode; `opening` is the first system turn.
    fn begin(&mut self, spec: &GameSpec, opening: &str) -> Result<()>;
    /// Appends one turn to the agent's view of the episode.
    fn observe(&mut self, role: Role, text: &str) -> Result<()>;
    fn evaluate(
        &mut self,
        spec: &GameSpec,
        state: &GameState,
        actions: &[String],
        want_features: bool,
    ) -> Result<Evaluation>;
}

/// A trained encoder reading the episode as a token trajectory.
pub struct NeuralAgent<'a> {
    encoder: &'a Encoder,
    vocab: &'a Vocabulary,
    prep: Prepared,
    traj: Trajectory,
    actions: HashMap<String, Vec<u32>>,
}

impl<'a> NeuralAgent<'a> {
    pub fn new(encoder: &'a Encoder, vocab: &'a Vocabulary, max_tokens: usize) -> Result<Self> {
        if vocab.len() != encoder.config().vocab_size {
            return Err(Error::Contract(format!(
                "vocabulary has {} tokens but the encoder expects {}",
                vocab.len(),
                encoder.config().vocab_size
            )));
        }
        Ok(NeuralAgent {
            encoder,
            vocab,
            prep: encoder.prepare(),
            traj: Trajectory::new(max_tokens),
            actions: HashMap::new(),
        })
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.traj
    }

    fn action_ids(&mut self, actions: &[String]) -> Vec<Vec<u32>> {
        actions
            .iter()
            .map(|a| {
                self.actions
                    .entry(a.clone())
                    .or_insert_with(|| self.vocab.encode(a))
                    .clone()
            })
            .collect()
    }
}

impl Agent for NeuralAgent<'_> {
    fn begin(&mut self, _spec: &GameSpec, opening: &str) -> Result<()> {
        self.traj = Trajectory::new(self.traj.max_tokens());
        self.traj.append_turn(Role::System, opening, self.vocab)
    }

    fn observe(&mut self, role: Role, text: &str) -> Result<()> {
        self.traj.append_turn(role, text, self.vocab)
    }

    fn evaluate(
        &mut self,
        _spec: &GameSpec,
        _state: &GameState,
        actions: &[String],
        want_features: bool,
    ) -> Result<Evaluation> {
        let ids = self.action_ids(actions);
        if want_features {
            let (q_values, features) = self.encoder.score_features(&self.prep, self.traj.ids(), &ids)?;
            Ok(Evaluation {
                q_values,
                features: Some(features),
            })
        } else {
            Ok(Evaluation {
                q_values: self.encoder.score(&self.prep, self.traj.ids(), &ids)?,
                features: None,
            })
        }
    }
}

/// Exact Q-values from the solver. Needs an unpruned solution, since a
/// pruned one has no values behind non-progress actions.
#[derive(Default)]
pub struct OracleAgent {
    config: SolverConfig,
    solutions: HashMap<String, Solution>,
}

impl OracleAgent {
    pub fn new(config: SolverConfig) -> Self {
        OracleAgent {
            config,
            solutions: HashMap::new(),
        }
    }
}

impl Agent for OracleAgent {
    fn begin(&mut self, spec: &GameSpec, _opening: &str) -> Result<()> {
        let id = spec.id();
        if !self.solutions.contains_key(&id) {
            let solution = engine::solve_optimal(spec, &self.config)?;
            self.solutions.insert(id, solution);
        }
        Ok(())
    }

    fn observe(&mut self, _role: Role, _text: &str) -> Result<()> {
        Ok(())
    }

    fn evaluate(
        &mut self,
        spec: &GameSpec,
        state: &GameState,
        _actions: &[String],
        _want_features: bool,
    ) -> Result<Evaluation> {
        let solution = self
            .solutions
            .get(&spec.id())
            .ok_or_else(|| Error::Contract("oracle evaluated before begin".into()))?;
        Ok(Evaluation {
            q_values: solution.q_values(spec, state)?,
            features: None,
        })
    }
}

/// Scores every action with the same value. Under greedy play it repeats
/// the first action; under sampling it is the uniform random policy.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantAgent {
    pub value: f64,
}

impl Agent for ConstantAgent {
    fn begin(&mut self, _spec: &GameSpec, _opening: &str) -> Result<()> {
        Ok(())
    }

    fn observe(&mut self, _role: Role, _text: &str) -> Result<()> {
        Ok(())
    }

    fn evaluate(
        &mut self,
        _spec: &GameSpec,
        _state: &GameState,
        actions: &[String],
        _want_features: bool,
    ) -> Result<Evaluation> {
        Ok(Evaluation {
            q_values: vec![self.value; actions.len()],
            features: None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Fail,
    StepLimit,
}

impl Outcome {
    pub fn as_str(self) -> &'static str {
        match self {
            Outcome::Win => "win",
            Outcome::Fail => "fail",
            Outcome::StepLimit => "step_limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub actions: Vec<String>,
    pub q_values: Vec<f64>,
    pub chosen: usize,
    pub reward: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub game_id: String,
    pub turns: Vec<(Role, String)>,
    pub steps: Vec<StepRecord>,
    pub score: u32,
    pub max_score: u32,
    pub outcome: Outcome,
}

/// Plays one episode to a win, a loss or the step cap.
pub fn play_episode(
    agent: &mut dyn Agent,
    policy: &PolicyConfig,
    spec: &GameSpec,
    step_cap: u32,
    rng: &mut ChaCha8Rng,
) -> Result<EpisodeRecord> {
    policy.validate()?;
    if step_cap == 0 || step_cap > DEFAULT_STEP_CAP {
        return Err(Error::Range(format!(
            "step cap must be in [1, {DEFAULT_STEP_CAP}], got {step_cap}"
        )));
    }
    let mut state = GameState::initial(spec).with_step_cap(step_cap);
    let opening = opening_text(spec, &state);
    agent.begin(spec, &opening)?;
    let mut turns = vec![(Role::System, opening)];
    let mut steps = Vec::new();
    let mut bandit = match policy.kind {
        PolicyKind::Linucb => Some(LinUcbState::new(LINUCB_DIM, policy.alpha)?),
        _ => None,
    };
    while state.status == Status::Ongoing {
        let actions = state.admissible_actions(spec);
        let eval = agent.evaluate(spec, &state, &actions, bandit.is_some())?;
        if eval.q_values.len() != actions.len() {
            return Err(Error::Contract(format!(
                "agent scored {} of {} actions",
                eval.q_values.len(),
                actions.len()
            )));
        }
        let mut context = None;
        let chosen = match &bandit {
            None if policy.kind == PolicyKind::Greedy => policy::select_greedy(&eval.q_values)?,
            None => policy::select_sample(&eval.q_values, policy.temperature, rng)?,
            Some(b) => {
                let contexts = linucb_contexts(&eval);
                let i = b.select(&contexts)?;
                context = Some(contexts[i].clone());
                i
            }
        };
        let outcome = state.apply(spec, &actions[chosen])?;
        if let (Some(b), Some(x)) = (bandit.as_mut(), context) {
            b.update(&x, outcome.reward as f64)?;
        }
        let text = engine::render(spec, &state, &outcome.feedback);
        agent.observe(Role::Player, &actions[chosen])?;
        agent.observe(Role::System, &text)?;
        turns.push((Role::Player, actions[chosen].clone()));
        turns.push((Role::System, text));
        steps.push(StepRecord {
            actions,
            q_values: eval.q_values,
            chosen,
            reward: outcome.reward,
        });
    }
    let outcome = match state.status {
        Status::Won => Outcome::Win,
        Status::Lost => Outcome::Fail,
        _ => Outcome::StepLimit,
    };
    Ok(EpisodeRecord {
        game_id: spec.id(),
        turns,
        steps,
        score: state.score,
        max_score: spec.max_score,
        outcome,
    })
}

/// Per-action features with the Q-value appended; agents without features
/// contribute zeros in their place.
fn linucb_contexts(eval: &Evaluation) -> Vec<Vec<f64>> {
    eval.q_values
        .iter()
        .enumerate()
        .map(|(i, &q)| {
            let mut x = match &eval.features {
                Some(f) => f[i].clone(),
                None => vec![0.0; LINUCB_DIM - 1],
            };
            x.resize(LINUCB_DIM - 1, 0.0);
            x.push(q);
            x
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameResult {
    pub game_id: String,
    pub play: u32,
    pub score: u32,
    pub max_score: u32,
    pub steps: u32,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tallies {
    pub win: u32,
    pub fail: u32,
    pub step_limit: u32,
}

impl Tallies {
    pub fn total(&self) -> u32 {
        self.win + self.fail + self.step_limit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub suite_id: String,
    pub agent: String,
    pub policy: PolicyConfig,
    pub plays_per_game: u32,
    pub games: Vec<GameResult>,
    pub percent: f64,
    pub tallies: Tallies,
    /// KL confidence of every decision, in play order.
    pub step_kl: Vec<f64>,
}

impl EvalReport {
    /// Recomputes the aggregate from the per-game rows.
    pub fn recompute(&self) -> (f64, Tallies) {
        let score: u64 = self.games.iter().map(|g| g.score as u64).sum();
        let max: u64 = self.games.iter().map(|g| g.max_score as u64).sum();
        let mut t = Tallies::default();
        for g in &self.games {
            match g.outcome {
                Outcome::Win => t.win += 1,
                Outcome::Fail => t.fail += 1,
                Outcome::StepLimit => t.step_limit += 1,
            }
        }
        (percent(score, max), t)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("game_id,play,score,max_score,steps,outcome\n");
        for g in &self.games {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                g.game_id,
                g.play,
                g.score,
                g.max_score,
                g.steps,
                g.outcome.as_str()
            );
        }
        out
    }

    /// Writes `report.json` and `report.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;
        let csv = dir.join("report.csv");
        std::fs::write(&csv, self.to_csv()).map_err(|e| Error::io(&csv, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let report: EvalReport = serde_json::from_str(&text)?;
        if report.format_version != REPORT_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "report format_version {} is not supported",
                report.format_version
            )));
        }
        Ok(report)
    }
}

fn percent(score: u64, max: u64) -> f64 {
    if max == 0 {
        0.0
    } else {
        100.0 * score as f64 / max as f64
    }
}

pub const PLAYS_PER_GAME: u32 = 2;

/// Evaluation settings shared by every suite run.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalOptions {
    pub policy: PolicyConfig,
    pub plays: u32,
    pub step_cap: u32,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            policy: PolicyConfig::greedy(),
            plays: PLAYS_PER_GAME,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

impl EvalOptions {
    pub fn with_policy(policy: PolicyConfig) -> Self {
        EvalOptions {
            policy,
            ..EvalOptions::default()
        }
    }
}

/// Plays every game `plays` times. Play `p` of game `g` draws from RNG
/// stream `2g + p` of the policy seed, so plays never share randomness.
pub fn evaluate_games(
    agent: &mut dyn Agent,
    agent_label: &str,
    suite_id: &str,
    games: &[GameSpec],
    opts: &EvalOptions,
) -> Result<(EvalReport, Vec<EpisodeRecord>)> {
    if games.is_empty() {
        return Err(Error::Contract("evaluation suite has no games".into()));
    }
    let mut results = Vec::new();
    let mut episodes = Vec::new();
    let mut step_kl = Vec::new();
    for (g, spec) in games.iter().enumerate() {
        for play in 0..opts.plays {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.policy.seed);
            rng.set_stream((g as u64) * opts.plays as u64 + play as u64);
            let ep = play_episode(agent, &opts.policy, spec, opts.step_cap, &mut rng)?;
            step_kl.extend(ep.steps.iter().map(|s| kl_confidence(&s.q_values)));
            results.push(GameResult {
                game_id: ep.game_id.clone(),
                play: play + 1,
                score: ep.score,
                max_score: ep.max_score,
                steps: ep.steps.len() as u32,
                outcome: ep.outcome,
            });
            episodes.push(ep);
        }
    }
    let mut report = EvalReport {
        format_version: REPORT_FORMAT_VERSION,
        suite_id: suite_id.to_string(),
        agent: agent_label.to_string(),
        policy: opts.policy,
        plays_per_game: opts.plays,
        games: results,
        percent: 0.0,
        tallies: Tallies::default(),
        step_kl,
    };
    (report.percent, report.tallies) = report.recompute();
    Ok((report, episodes))
}

/// Evaluates on a suite directory.
pub fn evaluate_suite(
    agent: &mut dyn Agent,
    agent_label: &str,
    suite_dir: &Path,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let (manifest, games) = read_suite(suite_dir)?;
    Ok(evaluate_games(agent, agent_label, &manifest.suite_id, &games, opts)?.0)
}

/// KL(softmax(q) ‖ uniform) in nats.
pub fn kl_confidence(q: &[f64]) -> f64 {
    if q.is_empty() {
        return 0.0;
    }
    let n = q.len() as f64;
    let p = policy::softmax(q, 1.0).expect("temperature 1 over a non-empty table");
    p.iter()
        .filter(|&&pi| pi > 0.0)
        .map(|&pi| pi * (pi * n).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Box-plot statistics of one agent's per-step KL values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KlSummary {
    pub agent: String,
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme values within 1.5 IQR of the box.
    pub whisker_low: f64,
    pub whisker_high: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize_kl(agent: &str, values: &[f64]) -> Result<KlSummary> {
    if values.is_empty() {
        return Err(Error::Contract(format!("no recorded steps for {agent}")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
    let reach = 1.5 * (q3 - q1);
    let whisker_low = *v.iter().find(|&&x| x >= q1 - reach).expect("q1 is in range");
    let whisker_high = *v.iter().rev().find(|&&x| x <= q3 + reach).expect("q3 is in range");
    Ok(KlSummary {
        agent: agent.to_string(),
        count: v.len(),
        min: v[0],
        q1,
        median: quantile(&v, 0.5),
        q3,
        max: v[v.len() - 1],
        whisker_low,
        whisker_high,
    })
}

/// Per-agent KL summaries over the decisions in each agent's episodes.
pub fn analyze_confidence(agents: &[(String, Vec<EpisodeRecord>)]) -> Result<Vec<KlSummary>> {
    agents
        .iter()
        .map(|(label, episodes)| {
            let kl: Vec<f64> = episodes
                .iter()
                .flat_map(|e| e.steps.iter().map(|s| kl_confidence(&s.q_values)))
                .collect();
            summarize_kl(label, &kl)
        })
        .collect()
}

pub fn kl_summaries_csv(rows: &[KlSummary]) -> String {
    let mut out = String::from("agent,count,min,whisker_low,q1,median,q3,whisker_high,max\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{:?},{:?},{:?},{:?},{:?},{:?},{:?}",
            r.agent, r.count, r.min, r.whisker_low, r.q1, r.median, r.q3, r.whisker_high, r.max
        );
    }
    out
}

#[cfg(test)]
mod tests;
