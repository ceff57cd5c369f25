//! Admissible-action enumeration and the step function.

use super::lexicon;
use super::render::{article_name, list_phrase, plain_name};
use super::{
    CookClass, Direction, EntityKind, GameSpec, GameState, Goal, Location, Meal, Status,
};
use crate::error::{Error, Result};

/// A parsed admissible action. Entity and door fields are indices into the
/// spec's entity and door lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    Look,
    Inventory,
    Go(Direction),
    OpenDoor(usize),
    CloseDoor(usize),
    Examine(usize),
    ExamineDoor(usize),
    Open(usize),
    Close(usize),
    Unlock(usize, usize),
    Lock(usize, usize),
    Take(usize),
    TakeFrom(usize, usize),
    Drop(usize),
    Insert(usize, usize),
    Cook(usize, usize),
    PrepareMeal,
    EatMeal,
}

impl Command {
    pub fn text(&self, spec: &GameSpec) -> String {
        let n = |e: usize| spec.entities[e].name.as_str();
        let d = |i: usize| spec.doors[i].name.as_str();
        match *self {
            Command::Look => "look".into(),
            Command::Inventory => "inventory".into(),
            Command::Go(dir) => format!("go {}", dir.as_str()),
            Command::OpenDoor(i) => format!("open {}", d(i)),
            Command::CloseDoor(i) => format!("close {}", d(i)),
            Command::Examine(e) => format!("examine {}", n(e)),
            Command::ExamineDoor(i) => format!("examine {}", d(i)),
            Command::Open(e) => format!("open {}", n(e)),
            Command::Close(e) => format!("close {}", n(e)),
            Command::Unlock(c, k) => format!("unlock {} with {}", n(c), n(k)),
            Command::Lock(c, k) => format!("lock {} with {}", n(c), n(k)),
            Command::Take(e) => format!("take {}", n(e)),
            Command::TakeFrom(e, c) => format!("take {} from {}", n(e), n(c)),
            Command::Drop(e) => format!("drop {}", n(e)),
            Command::Insert(e, c) => format!("insert {} into {}", n(e), n(c)),
            Command::Cook(e, dev) => format!("cook {} with {}", n(e), n(dev)),
            Command::PrepareMeal => "prepare meal".into(),
            Command::EatMeal => "eat meal".into(),
        }
    }
}

/// Result of one step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub reward: u32,
    pub status: Status,
    pub feedback: String,
}

const SCORE_LINE: &str = "Your score has just gone up by one point.";
const THE_END: &str = "*** The End ***";
const YOU_LOST: &str = "*** You lost! ***";

fn is_container(spec: &GameSpec, e: usize) -> bool {
    matches!(
        spec.entities[e].kind,
        EntityKind::Container | EntityKind::LockContainer
    )
}

impl GameState {
    /// Whether the player can currently see `e`.
    pub fn is_visible(&self, spec: &GameSpec, e: usize) -> bool {
        let mut cur = e;
        // Containment depth is tiny; the bound guards against malformed specs.
        for _ in 0..=spec.entities.len() {
            match self.locations[cur] {
                Location::Room(r) => return r == self.player_room,
                Location::Inventory => return true,
                Location::Nowhere => return false,
                Location::In(c) => {
                    let props = &spec.entities[c].props;
                    if !(props.supporter || self.entity_state[c].open) {
                        return false;
                    }
                    cur = c;
                }
            }
        }
        false
    }

    /// Entities directly inside (or on) `c`, in entity order.
    pub(crate) fn contents(&self, c: usize) -> Vec<usize> {
        self.locations
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == Location::In(c))
            .map(|(i, _)| i)
            .collect()
    }

    /// Ordered admissible commands; empty once the episode is over.
    pub fn admissible_commands(&self, spec: &GameSpec) -> Vec<Command> {
        let mut out = Vec::new();
        if self.status != Status::Ongoing {
            return out;
        }
        out.push(Command::Look);
        out.push(Command::Inventory);

        let room = &spec.rooms[self.player_room];
        for exit in &room.exits {
            if exit.door.is_none_or(|d| self.doors_open[d]) {
                out.push(Command::Go(exit.direction));
            }
        }
        for exit in &room.exits {
            if let Some(d) = exit.door {
                out.push(if self.doors_open[d] {
                    Command::CloseDoor(d)
                } else {
                    Command::OpenDoor(d)
                });
            }
        }

        let n = spec.entities.len();
        let visible: Vec<bool> = (0..n).map(|e| self.is_visible(spec, e)).collect();
        for (e, _) in visible.iter().enumerate().filter(|(_, v)| **v) {
            out.push(Command::Examine(e));
        }
        for exit in &room.exits {
            if let Some(d) = exit.door {
                out.push(Command::ExamineDoor(d));
            }
        }

        for e in 0..n {
            let props = &spec.entities[e].props;
            if visible[e] && props.openable && !self.entity_state[e].locked {
                out.push(if self.entity_state[e].open {
                    Command::Close(e)
                } else {
                    Command::Open(e)
                });
            }
        }

        let inventory = self.inventory();
        let keys: Vec<usize> = inventory
            .iter()
            .copied()
            .filter(|&k| spec.entities[k].kind == EntityKind::Key)
            .collect();
        for c in 0..n {
            if !visible[c] || spec.entities[c].kind != EntityKind::LockContainer {
                continue;
            }
            let st = self.entity_state[c];
            for &k in &keys {
                if st.locked {
                    out.push(Command::Unlock(c, k));
                } else if !st.open {
                    out.push(Command::Lock(c, k));
                }
            }
        }

        for e in 0..n {
            if !visible[e] || !spec.entities[e].props.portable {
                continue;
            }
            match self.locations[e] {
                Location::Room(_) => out.push(Command::Take(e)),
                Location::In(c) => out.push(Command::TakeFrom(e, c)),
                _ => {}
            }
        }
        for &e in &inventory {
            out.push(Command::Drop(e));
        }
        for &e in &inventory {
            for c in 0..n {
                if visible[c]
                    && is_container(spec, c)
                    && self.entity_state[c].open
                    && self.locations[c] != Location::Inventory
                {
                    out.push(Command::Insert(e, c));
                }
            }
        }

        if let Goal::Recipe {
            ingredients,
            cook,
            kitchen,
            ..
        } = &spec.goal
        {
            for &e in &inventory {
                if spec.entities[e].kind != EntityKind::Ingredient {
                    continue;
                }
                for dev in 0..n {
                    if visible[dev] && spec.entities[dev].props.device.is_some() {
                        out.push(Command::Cook(e, dev));
                    }
                }
            }
            let carried = |i: &usize| self.locations[*i] == Location::Inventory;
            let cooked = cook
                .iter()
                .all(|c| self.entity_state[c.ingredient].cooked == Some(c.class));
            if self.meal == Meal::Absent
                && self.player_room == *kitchen
                && ingredients.iter().all(carried)
                && cooked
            {
                out.push(Command::PrepareMeal);
            }
            if self.meal == Meal::Carried {
                out.push(Command::EatMeal);
            }
        }
        out
    }

    /// Ordered admissible action strings; empty once the episode is over.
    pub fn admissible_actions(&self, spec: &GameSpec) -> Vec<String> {
        self.admissible_commands(spec)
            .iter()
            .map(|c| c.text(spec))
            .collect()
    }

    /// Applies an action string, which must be admissible.
    pub fn apply(&mut self, spec: &GameSpec, action: &str) -> Result<StepOutcome> {
        if self.status != Status::Ongoing {
            return Err(Error::State(format!(
                "step after episode end ({:?})",
                self.status
            )));
        }
        let cmd = self
            .admissible_commands(spec)
            .into_iter()
            .find(|c| c.text(spec) == action)
            .ok_or_else(|| Error::Contract(format!("inadmissible action {action:?}")))?;
        Ok(self.apply_command(spec, cmd))
    }

    /// Applies a command taken from [`GameState::admissible_commands`].
    pub fn apply_command(&mut self, spec: &GameSpec, cmd: Command) -> StepOutcome {
        let reward = self.transition(spec, cmd);
        StepOutcome {
            reward,
            status: self.status,
            feedback: self.describe(spec, cmd, reward),
        }
    }

    /// State change of one step without any text; returns the reward.
    pub(crate) fn transition(&mut self, spec: &GameSpec, cmd: Command) -> u32 {
        debug_assert_eq!(self.status, Status::Ongoing);
        let mut reward = 0;
        match cmd {
            Command::Look | Command::Inventory | Command::Examine(_) | Command::ExamineDoor(_) => {}
            Command::Go(dir) => {
                let exit = spec.rooms[self.player_room]
                    .exits
                    .iter()
                    .find(|x| x.direction == dir)
                    .expect("admissible exit");
                self.player_room = exit.to;
            }
            Command::OpenDoor(d) => self.doors_open[d] = true,
            Command::CloseDoor(d) => self.doors_open[d] = false,
            Command::Open(c) => self.entity_state[c].open = true,
            Command::Close(c) => self.entity_state[c].open = false,
            Command::Unlock(c, k) => {
                if spec.entities[c].props.key == Some(k) {
                    self.entity_state[c].locked = false;
                }
            }
            Command::Lock(c, k) => {
                if spec.entities[c].props.key == Some(k) {
                    self.entity_state[c].locked = true;
                }
            }
            Command::Take(e) | Command::TakeFrom(e, _) => {
                self.locations[e] = Location::Inventory;
                reward += self.on_take(spec, e);
            }
            Command::Drop(e) => self.locations[e] = Location::Room(self.player_room),
            Command::Insert(e, c) => self.locations[e] = Location::In(c),
            Command::Cook(e, dev) => {
                let class = spec.entities[dev].props.device.expect("device");
                reward += self.on_cook(spec, e, class);
            }
            Command::PrepareMeal => {
                if let Goal::Recipe { ingredients, .. } = &spec.goal {
                    for &i in ingredients {
                        self.locations[i] = Location::Nowhere;
                    }
                }
                self.meal = Meal::Carried;
                reward += self.mark(spec.subgoal_count() - 2);
            }
            Command::EatMeal => {
                self.meal = Meal::Eaten;
                reward += self.mark(spec.subgoal_count() - 1);
                self.status = Status::Won;
            }
        }
        self.steps_taken += 1;
        if self.status == Status::Ongoing && self.steps_taken >= self.step_cap {
            self.status = Status::StepLimit;
        }
        reward
    }

    /// Feedback text for a command that has just been applied.
    fn describe(&self, spec: &GameSpec, cmd: Command, reward: u32) -> String {
        let name = |e: usize| plain_name(spec, e);
        let mut lines: Vec<String> = Vec::new();
        match cmd {
            Command::Look | Command::Go(_) => {}
            Command::Inventory => {
                let inv = self.inventory();
                if inv.is_empty() {
                    lines.push("You are carrying nothing.".into());
                } else {
                    lines.push("You are carrying:".into());
                    for e in inv {
                        lines.push(format!("  {}", article_name(spec, self, e)));
                    }
                }
            }
            Command::OpenDoor(d) => lines.push(format!("You open the {}.", spec.doors[d].name)),
            Command::CloseDoor(d) => lines.push(format!("You close the {}.", spec.doors[d].name)),
            Command::Examine(e) => lines.push(self.examine_text(spec, e)),
            Command::ExamineDoor(d) => {
                let state = if self.doors_open[d] { "open" } else { "closed" };
                lines.push(format!(
                    "It is what it is, a {}. It is {state}.",
                    spec.doors[d].name
                ));
            }
            Command::Open(c) => {
                let inside: Vec<String> = self
                    .contents(c)
                    .into_iter()
                    .map(|e| article_name(spec, self, e))
                    .collect();
                if inside.is_empty() {
                    lines.push(format!("You open the {}.", name(c)));
                } else {
                    lines.push(format!(
                        "You open the {}, revealing {}.",
                        name(c),
                        list_phrase(&inside)
                    ));
                }
            }
            Command::Close(c) => lines.push(format!("You close the {}.", name(c))),
            Command::Unlock(c, k) | Command::Lock(c, k) => {
                if spec.entities[c].props.key == Some(k) {
                    let verb = if matches!(cmd, Command::Unlock(..)) {
                        "unlock"
                    } else {
                        "lock"
                    };
                    lines.push(format!("You {verb} the {}.", name(c)));
                } else {
                    lines.push(format!("The {} doesn't fit the {}.", name(k), name(c)));
                }
            }
            Command::Take(e) => lines.push(format!("You pick up the {} from the ground.", name(e))),
            Command::TakeFrom(e, c) => {
                lines.push(format!("You take the {} from the {}.", name(e), name(c)))
            }
            Command::Drop(e) => lines.push(format!("You drop the {} on the ground.", name(e))),
            Command::Insert(e, c) => {
                lines.push(format!("You put the {} into the {}.", name(e), name(c)))
            }
            Command::Cook(e, dev) => {
                let class = spec.entities[dev].props.device.expect("device");
                lines.push(format!(
                    "You {} the {}.",
                    lexicon::cooked_adjective(class),
                    name(e)
                ));
            }
            Command::PrepareMeal => lines.push("Adding the meal to your inventory.".into()),
            Command::EatMeal => lines.push("You eat the meal. Not bad.".into()),
        }
        if reward > 0 {
            lines.push(SCORE_LINE.into());
        }
        match self.status {
            Status::Won => lines.push(THE_END.into()),
            Status::Lost => lines.push(YOU_LOST.into()),
            _ => {}
        }
        lines.join("\n")
    }

    fn mark(&mut self, subgoal: usize) -> u32 {
        if self.scored[subgoal] {
            return 0;
        }
        self.scored[subgoal] = true;
        self.score += 1;
        1
    }

    fn on_take(&mut self, spec: &GameSpec, e: usize) -> u32 {
        match &spec.goal {
            Goal::Recipe { .. } => match spec.recipe_index(e) {
                Some(i) => self.mark(i),
                None => 0,
            },
            Goal::KeyChain { target, .. } => {
                if e == *target {
                    self.status = Status::Won;
                    self.mark(0)
                } else {
                    0
                }
            }
        }
    }

    fn on_cook(&mut self, spec: &GameSpec, e: usize, class: CookClass) -> u32 {
        if spec.recipe_index(e).is_none() {
            // Cooking food the recipe doesn't call for is harmless.
            self.entity_state[e].cooked.get_or_insert(class);
            return 0;
        }
        let already = self.entity_state[e].cooked.is_some();
        match spec.cook_direction(e) {
            Some((j, want)) if want == class && !already => {
                self.entity_state[e].cooked = Some(class);
                let n_ingredients = match &spec.goal {
                    Goal::Recipe { ingredients, .. } => ingredients.len(),
                    Goal::KeyChain { .. } => 0,
                };
                self.mark(n_ingredients + j)
            }
            _ => {
                self.entity_state[e].cooked.get_or_insert(class);
                self.entity_state[e].spoiled = true;
                self.status = Status::Lost;
                0
            }
        }
    }

    fn examine_text(&self, spec: &GameSpec, e: usize) -> String {
        let ent = &spec.entities[e];
        if ent.name == lexicon::COOKBOOK {
            if let Goal::Recipe { .. } = spec.goal {
                return super::render::cookbook_text(spec);
            }
        }
        let mut text = ent.props.examine_text.clone();
        if ent.props.openable {
            let st = self.entity_state[e];
            let suffix = if st.locked {
                "It is locked."
            } else if st.open {
                "It is open."
            } else {
                "It is closed."
            };
            text.push(' ');
            text.push_str(suffix);
        }
        text
    }
}
