//! Procedural text games: generation, rules, rendering and an exact solver.
//!
//! A [`GameSpec`] is the immutable world produced by [`generate_game`]; a
//! [`GameState`] is the mutable play state stepped by [`GameState::apply`].
//! Both are plain data so that states can be cloned, hashed and compared.

mod generate;
pub mod lexicon;
mod render;
mod rules;
mod solver;
mod worked;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[cfg(test)]
pub(crate) use generate::Builder;
pub use generate::{generate_game, generate_game_with, GenOptions, Profile};
pub use render::{intro_text, render, Transcript};
pub use rules::{Command, StepOutcome};
pub use solver::{is_progress, solve_optimal, Solution, SolverConfig};
pub use worked::{worked_cooking_example, worked_treasure_example};

/// Default per-episode step cap.
pub const DEFAULT_STEP_CAP: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Genre {
    Cooking,
    Treasure,
}

impl Genre {
    pub fn as_str(self) -> &'static str {
        match self {
            Genre::Cooking => "cooking",
            Genre::Treasure => "treasure",
        }
    }
}

impl std::str::FromStr for Genre {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cooking" => Ok(Genre::Cooking),
            "treasure" => Ok(Genre::Treasure),
            other => Err(Error::Range(format!("unknown genre {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    North,
    South,
    East,
    West,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::North,
        Direction::South,
        Direction::East,
        Direction::West,
    ];

    pub fn opposite(self) -> Direction {
        match self {
            Direction::North => Direction::South,
            Direction::South => Direction::North,
            Direction::East => Direction::West,
            Direction::West => Direction::East,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::North => "north",
            Direction::South => "south",
            Direction::East => "east",
            Direction::West => "west",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Ingredient,
    Container,
    Device,
    Key,
    LockContainer,
    Furniture,
    Distractor,
}

/// Device classes: stove fries, oven roasts, BBQ grills.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CookClass {
    Fry,
    Roast,
    Grill,
}

impl CookClass {
    pub const ALL: [CookClass; 3] = [CookClass::Fry, CookClass::Roast, CookClass::Grill];

    fn code(self) -> u32 {
        match self {
            CookClass::Fry => 1,
            CookClass::Roast => 2,
            CookClass::Grill => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prep {
    Diced,
    Sliced,
    Chopped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "at", content = "id")]
pub enum Location {
    Room(usize),
    /// Inside (or on top of) another entity.
    In(usize),
    Inventory,
    Nowhere,
}

impl Location {
    fn code(self) -> u32 {
        match self {
            Location::Room(r) => r as u32,
            Location::In(e) => 10_000 + e as u32,
            Location::Inventory => 20_000,
            Location::Nowhere => 20_001,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityProps {
    pub portable: bool,
    pub openable: bool,
    /// Contents are "on" rather than "in" and always visible.
    pub supporter: bool,
    pub open: bool,
    pub locked: bool,
    /// Key entity that fits this lock container.
    pub key: Option<usize>,
    pub device: Option<CookClass>,
    pub prep: Option<Prep>,
    pub mass_noun: bool,
    pub examine_text: String,
}

impl EntityProps {
    pub(crate) fn plain(examine_text: impl Into<String>) -> Self {
        EntityProps {
            portable: false,
            openable: false,
            supporter: false,
            open: false,
            locked: false,
            key: None,
            device: None,
            prep: None,
            mass_noun: false,
            examine_text: examine_text.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub kind: EntityKind,
    pub location: Location,
    pub props: EntityProps,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Door {
    pub name: String,
    pub open: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exit {
    pub direction: Direction,
    pub to: usize,
    pub door: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Room {
    pub name: String,
    pub description: String,
    pub exits: Vec<Exit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrepStep {
    pub ingredient: usize,
    pub prep: Prep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CookStep {
    pub ingredient: usize,
    pub class: CookClass,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LockLink {
    pub lock: usize,
    pub key: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Goal {
    Recipe {
        ingredients: Vec<usize>,
        /// Prep directions; generated ingredients arrive already prepared.
        prep: Vec<PrepStep>,
        cook: Vec<CookStep>,
        kitchen: usize,
    },
    KeyChain {
        links: Vec<LockLink>,
        target: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameSpec {
    pub genre: Genre,
    pub seed: u64,
    pub difficulty: u8,
    pub profile: Profile,
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    pub entities: Vec<Entity>,
    pub goal: Goal,
    pub max_score: u32,
    pub start_room: usize,
}

impl GameSpec {
    /// Stable identifier used in suites, pools and reports.
    pub fn id(&self) -> String {
        let profile = match self.profile {
            Profile::Standard => "",
            Profile::Micro => "-micro",
        };
        format!(
            "{}{}-d{}-s{}",
            self.genre.as_str(),
            profile,
            self.difficulty,
            self.seed
        )
    }

    /// Canonical JSON: sorted keys, no insignificant whitespace.
    pub fn to_canonical_json(&self) -> Result<String> {
        // serde_json's default map is ordered, so a round trip through
        // `Value` sorts every object's keys.
        let value = serde_json::to_value(self)?;
        Ok(serde_json::to_string(&value)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entities.iter().position(|e| e.name == name)
    }

    pub(crate) fn recipe_index(&self, entity: usize) -> Option<usize> {
        match &self.goal {
            Goal::Recipe { ingredients, .. } => ingredients.iter().position(|&i| i == entity),
            Goal::KeyChain { .. } => None,
        }
    }

    pub(crate) fn cook_direction(&self, entity: usize) -> Option<(usize, CookClass)> {
        match &self.goal {
            Goal::Recipe { cook, .. } => cook
                .iter()
                .enumerate()
                .find(|(_, c)| c.ingredient == entity)
                .map(|(j, c)| (j, c.class)),
            Goal::KeyChain { .. } => None,
        }
    }

    /// Entities whose state never influences rewards, terminal status or the
    /// admissibility of any other entity's actions.
    pub fn is_irrelevant(&self, entity: usize) -> bool {
        match self.entities[entity].kind {
            EntityKind::Distractor => true,
            EntityKind::Ingredient => self.recipe_index(entity).is_none(),
            _ => false,
        }
    }

    /// Number of score-bearing subgoals, equal to `max_score`.
    pub(crate) fn subgoal_count(&self) -> usize {
        match &self.goal {
            Goal::Recipe {
                ingredients, cook, ..
            } => ingredients.len() + cook.len() + 2,
            Goal::KeyChain { .. } => 1,
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.max_score as usize != self.subgoal_count() || self.max_score == 0 {
            return Err(Error::Format(format!(
                "max_score {} does not match the goal",
                self.max_score
            )));
        }
        if self.start_room >= self.rooms.len() {
            return Err(Error::Format("start room out of range".into()));
        }
        for room in &self.rooms {
            for exit in &room.exits {
                if exit.to >= self.rooms.len() || exit.door.is_some_and(|d| d >= self.doors.len())
                {
                    return Err(Error::Format(format!("bad exit in {}", room.name)));
                }
            }
        }
        let mut names = std::collections::HashSet::new();
        for e in &self.entities {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Format(format!("duplicate entity name {}", e.name)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ongoing,
    Won,
    Lost,
    StepLimit,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        self != Status::Ongoing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Meal {
    Absent,
    Carried,
    Eaten,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EntityState {
    pub open: bool,
    pub locked: bool,
    pub cooked: Option<CookClass>,
    pub spoiled: bool,
}

impl EntityState {
    fn code(self) -> u32 {
        (self.open as u32)
            | (self.locked as u32) << 1
            | self.cooked.map_or(0, CookClass::code) << 2
            | (self.spoiled as u32) << 4
    }
}

/// Mutable play state of one episode.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GameState {
    pub player_room: usize,
    pub locations: Vec<Location>,
    pub entity_state: Vec<EntityState>,
    pub doors_open: Vec<bool>,
    pub meal: Meal,
    /// One flag per score-bearing subgoal; `score` counts the set flags.
    pub scored: Vec<bool>,
    pub steps_taken: u32,
    pub step_cap: u32,
    pub score: u32,
    pub status: Status,
}

impl GameState {
    pub fn initial(spec: &GameSpec) -> Self {
        GameState {
            player_room: spec.start_room,
            locations: spec.entities.iter().map(|e| e.location).collect(),
            entity_state: spec
                .entities
                .iter()
                .map(|e| EntityState {
                    open: e.props.open,
                    locked: e.props.locked,
                    cooked: None,
                    spoiled: false,
                })
                .collect(),
            doors_open: spec.doors.iter().map(|d| d.open).collect(),
            meal: Meal::Absent,
            scored: vec![false; spec.subgoal_count()],
            steps_taken: 0,
            step_cap: DEFAULT_STEP_CAP,
            score: 0,
            status: Status::Ongoing,
        }
    }

    pub fn with_step_cap(mut self, cap: u32) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn inventory(&self) -> Vec<usize> {
        self.locations
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Location::Inventory)
            .map(|(i, _)| i)
            .collect()
    }

    /// Compact key over the components that matter for optimal play.
    pub(crate) fn relevant_key(&self, spec: &GameSpec) -> Vec<u32> {
        let mut key = Vec::with_capacity(8 + 2 * self.locations.len());
        key.push(self.player_room as u32);
        key.push(
            self.doors_open
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &o)| acc | (o as u32) << i),
        );
        key.push(match self.meal {
            Meal::Absent => 0,
            Meal::Carried => 1,
            Meal::Eaten => 2,
        });
        key.push(
            self.scored
                .iter()
                .enumerate()
                .fold(0u32, |acc, (i, &s)| acc | (s as u32) << i),
        );
        key.push(match self.status {
            Status::Ongoing | Status::StepLimit => 0,
            Status::Won => 1,
            Status::Lost => 2,
        });
        for e in 0..self.locations.len() {
            if !spec.is_irrelevant(e) {
                key.push(self.locations[e].code());
                key.push(self.entity_state[e].code());
            }
        }
        key
    }
}

/// Convenience pairing of a spec with its live state.
#[derive(Debug, Clone)]
pub struct Game {
    pub spec: std::sync::Arc<GameSpec>,
    pub state: GameState,
}

impl Game {
    pub fn new(spec: std::sync::Arc<GameSpec>) -> Self {
        let state = GameState::initial(&spec);
        Game { spec, state }
    }

    pub fn admissible_actions(&self) -> Vec<String> {
        self.state.admissible_actions(&self.spec)
    }

    pub fn step(&mut self, action: &str) -> Result<StepOutcome> {
        self.state.apply(&self.spec, action)
    }

    pub fn render(&self, feedback: &str) -> String {
        render(&self.spec, &self.state, feedback)
    }
}
