//! Shared fixtures for the kernel benchmarks in `benches/`.

use tsrl_core::engine::{generate_game_with, render, intro_text, GameSpec, GameState, GenOptions, Genre, Profile, Status};
use tsrl_core::text::{Role, Trajectory, Vocabulary, DEFAULT_MAX_TOKENS};

/// A mid-game state: encoded trajectory plus the admissible actions there.
pub struct Position {
    pub spec: GameSpec,
    pub trajectory: Vec<u32>,
    pub actions: Vec<Vec<u32>>,
}

pub fn micro_game(seed: u64) -> GameSpec {
    generate_game_with(Genre::Cooking, seed, 1, &GenOptions { profile: Profile::Micro }).expect("micro game")
}

/// Plays `turns` steps of a fixed cycling policy so the trajectory has a
/// realistic length.
pub fn position(vocab: &Vocabulary, seed: u64, turns: usize) -> Position {
    let spec = micro_game(seed);
    let mut state = GameState::initial(&spec);
    let mut traj = Trajectory::new(DEFAULT_MAX_TOKENS);
    let opening = format!("{}\n{}", intro_text(&spec), render(&spec, &state, ""));
    traj.append_turn(Role::System, &opening, vocab).unwrap();
    for t in 0..turns {
        let actions = state.admissible_actions(&spec);
        let pick = actions[(t * 7) % actions.len()].clone();
        let before = state.clone();
        let out = state.apply(&spec, &pick).unwrap();
        if state.status != Status::Ongoing {
            state = before;
            continue;
        }
        traj.append_turn(Role::Player, &pick, vocab).unwrap();
        traj.append_turn(Role::System, &render(&spec, &state, &out.feedback), vocab).unwrap();
    }
    let actions = state.admissible_actions(&spec).iter().map(|a| vocab.encode(a)).collect();
    Position {
        spec,
        trajectory: traj.ids().to_vec(),
        actions,
    }
}
