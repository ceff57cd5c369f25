//! Exact value iteration over a game's reachable state space.
//!
//! States are keyed by their relevant projection ([`GameState::relevant_key`]).
//! Distractors and ingredients the recipe doesn't call for can never change
//! a reward, a terminal status or the admissibility of any other entity's
//! action, so two states that differ only in those entities have the same
//! optimal value, and Q(s, a) = r + λ·V(proj(s')) holds for every full
//! state s. Projecting keeps generated games with clutter tractable.

use std::collections::{HashMap, VecDeque};

use super::{Command, GameSpec, GameState, Status};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub discount: f64,
    pub max_states: usize,
    /// Expand only progress actions; see [`is_progress`].
    pub prune: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            discount: 0.9,
            max_states: 100_000,
            prune: false,
        }
    }
}

/// Moving, opening doors, preparing and eating, and opening, unlocking,
/// taking or cooking goal-relevant entities.
///
/// Every other action (drop, insert, close, lock, examine, look, inventory,
/// anything on an irrelevant entity) leaves the relevant state the same or
/// strictly worse: nothing in these games needs a free hand, a closed lid or
/// a dropped key. So an optimal policy exists that never takes them, and the
/// optimal value of every state reachable through progress actions is the
/// same in the pruned and the full game. What pruning loses is Q for the
/// pruned actions themselves, which [`Solution::q_values`] reports as an error.
pub fn is_progress(spec: &GameSpec, cmd: &Command) -> bool {
    match *cmd {
        Command::Go(_) | Command::OpenDoor(_) | Command::PrepareMeal | Command::EatMeal => true,
        Command::Open(e)
        | Command::Unlock(e, _)
        | Command::Take(e)
        | Command::TakeFrom(e, _)
        | Command::Cook(e, _) => !spec.is_irrelevant(e),
        _ => false,
    }
}

/// Optimal values for every reachable state plus the greedy optimal path.
#[derive(Debug, Clone)]
pub struct Solution {
    discount: f64,
    index: HashMap<Vec<u32>, u32>,
    values: Vec<f64>,
    /// Greedy optimal action sequence from the initial state.
    pub path: Vec<String>,
    /// Score reached by following `path`.
    pub path_score: u32,
    /// Status after following `path`.
    pub path_status: Status,
}

#[derive(Clone, Copy)]
struct Edge {
    to: u32,
    reward: u32,
}

/// Longest greedy walk attempted when extracting the optimal path.
const PATH_LIMIT: usize = 1_000;

pub fn solve_optimal(spec: &GameSpec, config: &SolverConfig) -> Result<Solution> {
    if !(0.0..1.0).contains(&config.discount) {
        return Err(Error::Range(format!(
            "discount must be in [0, 1), got {}",
            config.discount
        )));
    }
    let mut start = GameState::initial(spec);
    start.step_cap = u32::MAX;

    let mut index: HashMap<Vec<u32>, u32> = HashMap::new();
    let mut offsets: Vec<usize> = Vec::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut queue = VecDeque::new();
    index.insert(start.relevant_key(spec), 0);
    queue.push_back(start.clone());

    // Breadth-first expansion; states are numbered in discovery order and
    // expanded in that same order, so `offsets[i]` belongs to state i.
    while let Some(state) = queue.pop_front() {
        offsets.push(edges.len());
        let first = edges.len();
        for cmd in state.admissible_commands(spec) {
            if config.prune && !is_progress(spec, &cmd) {
                continue;
            }
            let mut next = state.clone();
            let reward = next.transition(spec, cmd);
            let key = next.relevant_key(spec);
            let to = match index.get(&key) {
                Some(&i) => i,
                None => {
                    let i = index.len() as u32;
                    if index.len() >= config.max_states {
                        return Err(Error::Capacity(format!(
                            "more than {} reachable states",
                            config.max_states
                        )));
                    }
                    index.insert(key, i);
                    queue.push_back(next);
                    i
                }
            };
            let edge = Edge { to, reward };
            if !edges[first..]
                .iter()
                .any(|e| e.to == edge.to && e.reward == edge.reward)
            {
                edges.push(edge);
            }
        }
    }
    offsets.push(edges.len());

    // Gauss-Seidel sweeps, latest-discovered first, until nothing changes.
    let n = index.len();
    let mut values = vec![0.0f64; n];
    let lambda = config.discount;
    loop {
        let mut changed = false;
        for s in (0..n).rev() {
            let out = &edges[offsets[s]..offsets[s + 1]];
            if out.is_empty() {
                continue;
            }
            let best = out
                .iter()
                .map(|e| e.reward as f64 + lambda * values[e.to as usize])
                .fold(f64::NEG_INFINITY, f64::max);
            if best != values[s] {
                values[s] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut solution = Solution {
        discount: lambda,
        index,
        values,
        path: Vec::new(),
        path_score: 0,
        path_status: Status::Ongoing,
    };
    let mut state = start;
    while state.status == Status::Ongoing && solution.path.len() < PATH_LIMIT {
        let cmds: Vec<Command> = state
            .admissible_commands(spec)
            .into_iter()
            .filter(|c| !config.prune || is_progress(spec, c))
            .collect();
        let q = cmds
            .iter()
            .map(|&cmd| solution.q_of(spec, &state, cmd))
            .collect::<Result<Vec<f64>>>()?;
        let cmd = cmds[crate::policy::select_greedy(&q)?];
        solution.path.push(cmd.text(spec));
        state.transition(spec, cmd);
    }
    solution.path_score = state.score;
    solution.path_status = state.status;
    Ok(solution)
}

impl Solution {
    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn state_count(&self) -> usize {
        self.values.len()
    }

    /// Optimal discounted return from the initial state.
    pub fn optimal_return(&self) -> f64 {
        self.values[0]
    }

    /// V*(s); `None` if `state` is not reachable from the initial state.
    pub fn value(&self, spec: &GameSpec, state: &GameState) -> Option<f64> {
        self.index
            .get(&state.relevant_key(spec))
            .map(|&i| self.values[i as usize])
    }

    /// Q*(s, a) for every admissible action of `state`, in admissible order.
    pub fn q_values(&self, spec: &GameSpec, state: &GameState) -> Result<Vec<f64>> {
        state
            .admissible_commands(spec)
            .into_iter()
            .map(|cmd| self.q_of(spec, state, cmd))
            .collect()
    }

    fn q_of(&self, spec: &GameSpec, state: &GameState, cmd: Command) -> Result<f64> {
        let mut next = state.clone();
        next.step_cap = u32::MAX;
        if next.status == Status::StepLimit {
            next.status = Status::Ongoing;
        }
        let reward = next.transition(spec, cmd);
        let v = self
            .value(spec, &next)
            .ok_or_else(|| Error::State("successor outside the solved state space".into()))?;
        Ok(reward as f64 + self.discount * v)
    }
}
