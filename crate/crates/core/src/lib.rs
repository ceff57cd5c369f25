//! Teacher-student imitation learning for text games.
//!
//! The crate bundles a seedable text-game engine, text processing, neural
//! encoders with hand-written gradients, a DQN teacher, curriculum pools,
//! three student trainers, inference policies and an evaluation harness.

pub mod curriculum;
pub mod dqn_teacher;
pub mod encoder;
pub mod engine;
pub mod error;
pub mod harness;
pub mod policy;
pub mod student;
pub mod text;

pub use error::{Error, Result};
