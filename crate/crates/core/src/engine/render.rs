//! Templated text output: observations, the cookbook and transcripts.

use super::lexicon;
use super::{GameSpec, GameState, Goal, Location, Meal, Status};

pub(crate) fn plain_name(spec: &GameSpec, e: usize) -> &str {
    &spec.entities[e].name
}

pub(crate) fn with_article(phrase: &str, mass: bool) -> String {
    if mass {
        return format!("some {phrase}");
    }
    let vowel = phrase
        .chars()
        .next()
        .is_some_and(|c| "aeiou".contains(c));
    format!("{} {phrase}", if vowel { "an" } else { "a" })
}

/// "a diced roasted yellow bell pepper", "some water".
pub(crate) fn article_name(spec: &GameSpec, state: &GameState, e: usize) -> String {
    let ent = &spec.entities[e];
    let mut phrase = String::new();
    if let Some(p) = ent.props.prep {
        phrase.push_str(lexicon::prep_adjective(p));
        phrase.push(' ');
    }
    if let Some(c) = state.entity_state[e].cooked {
        phrase.push_str(lexicon::cooked_adjective(c));
        phrase.push(' ');
    }
    phrase.push_str(&ent.name);
    with_article(&phrase, ent.props.mass_noun)
}

/// "x", "x and y", "x, y and z".
pub(crate) fn list_phrase(items: &[String]) -> String {
    match items {
        [] => String::new(),
        [one] => one.clone(),
        [init @ .., last] => format!("{} and {last}", init.join(", ")),
    }
}

fn title_case(name: &str) -> String {
    name.split(' ')
        .map(|w| {
            let mut c = w.chars();
            match c.next() {
                Some(f) => f.to_uppercase().chain(c).collect(),
                None => String::new(),
            }
        })
        .collect::<Vec<String>>()
        .join(" ")
}

pub(crate) fn cookbook_text(spec: &GameSpec) -> String {
    let Goal::Recipe {
        ingredients,
        prep,
        cook,
        ..
    } = &spec.goal
    else {
        return String::new();
    };
    let mut lines = vec![
        "You open the copy of \"Cooking: A Modern Approach (3rd Ed.)\" and start reading:".to_string(),
        "Recipe #1".into(),
        "---------".into(),
        "Gather all following ingredients and follow the directions to prepare this tasty meal."
            .into(),
        "Ingredients:".into(),
    ];
    for &i in ingredients {
        lines.push(format!("  {}", spec.entities[i].name));
    }
    lines.push("Directions:".into());
    for &i in ingredients {
        let name = &spec.entities[i].name;
        if let Some(p) = prep.iter().find(|p| p.ingredient == i) {
            lines.push(format!("  {} the {name}", lexicon::prep_verb(p.prep)));
        }
        if let Some(c) = cook.iter().find(|c| c.ingredient == i) {
            lines.push(format!("  {} the {name}", lexicon::cook_verb(c.class)));
        }
    }
    lines.push("  prepare meal".into());
    lines.join("\n")
}

/// Opening text shown before the first observation.
pub fn intro_text(spec: &GameSpec) -> String {
    match &spec.goal {
        Goal::Recipe { .. } => "You are hungry! Let's cook a delicious meal. Check the cookbook \
in the kitchen for the recipe. Once done, enjoy your meal!"
            .into(),
        Goal::KeyChain { links, target } => {
            let n = |e: usize| spec.entities[e].name.as_str();
            let mut parts = vec!["Here is how to play!".to_string()];
            if let Some(first) = links.first() {
                parts.push(format!(
                    "Your first objective is to pick up the {}.",
                    n(first.key)
                ));
            }
            for link in links {
                parts.push(format!(
                    "Then, unlock the {} with the {} and open it.",
                    n(link.lock),
                    n(link.key)
                ));
            }
            let holder = links.last().map_or("room", |l| n(l.lock));
            parts.push(format!(
                "After that, retrieve the {} from the {holder}. Got that? Good!",
                n(*target)
            ));
            parts.join(" ")
        }
    }
}

fn describe_entity(spec: &GameSpec, state: &GameState, e: usize, out: &mut Vec<String>) {
    let ent = &spec.entities[e];
    let name = &ent.name;
    let st = state.entity_state[e];
    let contents: Vec<String> = state
        .contents(e)
        .into_iter()
        .map(|c| article_name(spec, state, c))
        .collect();
    if ent.props.supporter {
        out.push(format!("You see {}.", with_article(name, false)));
        if contents.is_empty() {
            out.push(format!("The {name} has nothing on it."));
        } else {
            out.push(format!("On the {name} you see {}.", list_phrase(&contents)));
        }
    } else if ent.props.openable {
        if st.locked {
            out.push(format!("You see a locked {name}."));
        } else if !st.open {
            out.push(format!("You see a closed {name}."));
        } else {
            out.push(format!("You see an open {name}."));
            if contents.is_empty() {
                out.push(format!("The {name} is empty."));
            } else {
                out.push(format!("The {name} contains {}.", list_phrase(&contents)));
            }
        }
    } else {
        out.push(format!("You see {}.", with_article(name, false)));
    }
}

/// Room header, description, visible entities and exits.
pub(crate) fn room_block(spec: &GameSpec, state: &GameState) -> String {
    let room = &spec.rooms[state.player_room];
    let mut lines = vec![format!("-= {} =-", title_case(&room.name))];
    lines.push(room.description.clone());

    let mut sentences = Vec::new();
    let mut floor = Vec::new();
    for (e, ent) in spec.entities.iter().enumerate() {
        if state.locations[e] != Location::Room(state.player_room) {
            continue;
        }
        if ent.props.portable {
            floor.push(article_name(spec, state, e));
        } else {
            describe_entity(spec, state, e, &mut sentences);
        }
    }
    if !sentences.is_empty() {
        lines.push(sentences.join(" "));
    }

    let exits: Vec<String> = room
        .exits
        .iter()
        .map(|x| match x.door {
            Some(d) => format!(
                "There is {} {} leading {}.",
                if state.doors_open[d] { "an open" } else { "a closed" },
                spec.doors[d].name,
                x.direction.as_str()
            ),
            None => format!("There is an exit to the {}.", x.direction.as_str()),
        })
        .collect();
    if !exits.is_empty() {
        lines.push(exits.join(" "));
    }
    if !floor.is_empty() {
        lines.push(format!("There is {} on the floor.", list_phrase(&floor)));
    }
    lines.join("\n")
}

fn inventory_line(spec: &GameSpec, state: &GameState) -> String {
    let mut items: Vec<String> = state
        .inventory()
        .into_iter()
        .map(|e| article_name(spec, state, e))
        .collect();
    if state.meal == Meal::Carried {
        items.push("a meal".into());
    }
    if items.is_empty() {
        "You are carrying nothing.".into()
    } else {
        format!("You are carrying: {}.", items.join(", "))
    }
}

fn objective_line(spec: &GameSpec) -> String {
    match &spec.goal {
        Goal::Recipe {
            ingredients, cook, ..
        } => {
            let names: Vec<&str> = ingredients
                .iter()
                .map(|&i| spec.entities[i].name.as_str())
                .collect();
            let mut dirs: Vec<String> = cook
                .iter()
                .map(|c| {
                    format!(
                        "{} the {}",
                        lexicon::cook_verb(c.class),
                        spec.entities[c.ingredient].name
                    )
                })
                .collect();
            dirs.push("prepare meal".into());
            format!(
                "Recipe: {}. Directions: {}.",
                names.join(", "),
                dirs.join(", ")
            )
        }
        Goal::KeyChain { target, .. } => {
            format!("Goal: retrieve the {}.", spec.entities[*target].name)
        }
    }
}

/// The system text shown to the agent after an action with the given
/// feedback. Deterministic in (spec, state, feedback).
pub fn render(spec: &GameSpec, state: &GameState, feedback: &str) -> String {
    let mut parts = Vec::with_capacity(4);
    if !feedback.is_empty() {
        parts.push(feedback.to_string());
    }
    if state.status == Status::Ongoing || state.status == Status::StepLimit {
        parts.push(room_block(spec, state));
        parts.push(inventory_line(spec, state));
        parts.push(objective_line(spec));
    }
    parts.join("\n")
}

/// Plain-text play log in the classic interactive-fiction style.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    text: String,
}

impl Transcript {
    pub fn new(spec: &GameSpec, state: &GameState) -> Self {
        let text = format!(
            "{}\n\n{}\n",
            intro_text(spec),
            room_block(spec, state)
        );
        Transcript { text }
    }

    pub fn record(&mut self, action: &str, feedback: &str, spec: &GameSpec, state: &GameState) {
        self.text.push_str(&format!("\n> {action}\n\n"));
        let mut shown: Vec<&str> = feedback.lines().collect();
        let terminal = shown.last().is_some_and(|l| l.starts_with("***"));
        let banner = if terminal { shown.pop() } else { None };
        for line in &shown {
            self.text.push_str(line);
            self.text.push('\n');
        }
        // Moving or looking shows the new surroundings.
        if action == "look" || action.starts_with("go ") {
            self.text.push_str(&room_block(spec, state));
            self.text.push('\n');
        }
        if let Some(b) = banner {
            self.text.push_str(&format!("\n{:>40}\n", b));
        }
    }

    pub fn finish(mut self, spec: &GameSpec, state: &GameState) -> String {
        self.text.push_str(&format!(
            "\nYou scored {} out of a possible {}, in {} turn(s).\n",
            state.score, spec.max_score, state.steps_taken
        ));
        self.text
    }
}

