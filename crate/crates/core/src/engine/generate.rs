//! Seeded procedural generation of cooking and treasure games.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lexicon::{self, RoomWord};
use super::render::with_article;
use super::{
    CookClass, CookStep, Direction, Door, Entity, EntityKind, EntityProps, Exit, GameSpec, Genre,
    Goal, Location, LockLink, Prep, PrepStep, Room,
};
use crate::error::{Error, Result};

/// Size profile. `Micro` games have two rooms (cooking) or at most two
/// (treasure), short recipes or chains and no padding distractors, which
/// keeps their reachable state space small enough for exhaustive solving.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    #[default]
    Standard,
    Micro,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GenOptions {
    pub profile: Profile,
}

/// Generates a standard-profile game.
pub fn generate_game(genre: Genre, seed: u64, difficulty: u8) -> Result<GameSpec> {
    generate_game_with(genre, seed, difficulty, &GenOptions::default())
}

pub fn generate_game_with(
    genre: Genre,
    seed: u64,
    difficulty: u8,
    opts: &GenOptions,
) -> Result<GameSpec> {
    if !(1..=3).contains(&difficulty) {
        return Err(Error::Range(format!(
            "difficulty must be in [1, 3], got {difficulty}"
        )));
    }
    let stream = (genre as u64) << 8 | (difficulty as u64) << 4 | opts.profile as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut spec = match genre {
        Genre::Cooking => cooking(&mut rng, difficulty, opts.profile),
        Genre::Treasure => treasure(&mut rng, difficulty, opts.profile),
    };
    spec.seed = seed;
    spec.difficulty = difficulty;
    spec.profile = opts.profile;
    spec.validate()?;
    Ok(spec)
}

const ROOM_TEMPLATES: &[&str] = &[
    "You are in {}. An usual one.",
    "You arrive in {}. A typical kind of place.",
    "You find yourself in {}. Nothing special about it.",
    "Well, here you are in {}.",
];

/// Incremental world builder shared by the generator and the hand-built
/// examples.
#[derive(Default)]
pub(crate) struct Builder {
    pub rooms: Vec<Room>,
    pub doors: Vec<Door>,
    pub entities: Vec<Entity>,
}

impl Builder {
    pub fn room(&mut self, name: &str, description: impl Into<String>) -> usize {
        self.rooms.push(Room {
            name: name.into(),
            description: description.into(),
            exits: Vec::new(),
        });
        self.rooms.len() - 1
    }

    /// Two-way connection: `b` lies in direction `dir` from `a`.
    pub fn connect(&mut self, a: usize, dir: Direction, b: usize, door: Option<(&str, bool)>) {
        let door = door.map(|(name, open)| {
            self.doors.push(Door {
                name: name.into(),
                open,
            });
            self.doors.len() - 1
        });
        self.rooms[a].exits.push(Exit {
            direction: dir,
            to: b,
            door,
        });
        self.rooms[b].exits.push(Exit {
            direction: dir.opposite(),
            to: a,
            door,
        });
    }

    pub fn add(&mut self, name: &str, kind: EntityKind, location: Location, props: EntityProps) -> usize {
        self.entities.push(Entity {
            name: name.into(),
            kind,
            location,
            props,
        });
        self.entities.len() - 1
    }

    pub fn supporter(&mut self, name: &str, location: Location) -> usize {
        let props = EntityProps {
            supporter: true,
            ..EntityProps::plain(format!("The {name} is solid."))
        };
        self.add(name, EntityKind::Furniture, location, props)
    }

    pub fn container(&mut self, name: &str, location: Location, open: bool) -> usize {
        let props = EntityProps {
            openable: true,
            open,
            ..EntityProps::plain(format!(
                "The {name} looks strong, and impossible to crack open. You can see inside it."
            ))
        };
        self.add(name, EntityKind::Container, location, props)
    }

    pub fn lock_container(&mut self, name: &str, location: Location) -> usize {
        let props = EntityProps {
            openable: true,
            locked: true,
            ..EntityProps::plain(format!(
                "The {name} looks strong, and impossible to crack open."
            ))
        };
        self.add(name, EntityKind::LockContainer, location, props)
    }

    pub fn key(&mut self, name: &str, location: Location) -> usize {
        let props = EntityProps {
            portable: true,
            ..EntityProps::plain(format!("The {name} looks useful."))
        };
        self.add(name, EntityKind::Key, location, props)
    }

    pub fn device(&mut self, class: CookClass, location: Location) -> usize {
        let name = lexicon::device_name(class);
        let props = EntityProps {
            device: Some(class),
            ..EntityProps::plain(format!("The {name} is conventional."))
        };
        self.add(name, EntityKind::Device, location, props)
    }

    pub fn ingredient(&mut self, word: &lexicon::IngredientWord, prep: Option<Prep>, location: Location) -> usize {
        let props = EntityProps {
            portable: true,
            prep,
            mass_noun: word.mass,
            ..EntityProps::plain(format!("The {} looks fresh.", word.name))
        };
        self.add(word.name, EntityKind::Ingredient, location, props)
    }

    pub fn distractor(&mut self, name: &str, location: Location) -> usize {
        let props = EntityProps {
            portable: true,
            ..EntityProps::plain(format!("The {name} appears to fit in here."))
        };
        self.add(name, EntityKind::Distractor, location, props)
    }

    pub fn finish(mut self, genre: Genre, goal: Goal, start_room: usize) -> GameSpec {
        for room in &mut self.rooms {
            room.exits
                .sort_by_key(|x| Direction::ALL.iter().position(|d| *d == x.direction));
        }
        let mut spec = GameSpec {
            genre,
            seed: 0,
            difficulty: 0,
            profile: Profile::Standard,
            rooms: self.rooms,
            doors: self.doors,
            entities: self.entities,
            goal,
            max_score: 0,
            start_room,
        };
        spec.max_score = spec.subgoal_count() as u32;
        spec
    }
}

fn describe_room(rng: &mut ChaCha8Rng, name: &str) -> String {
    let template = ROOM_TEMPLATES.choose(rng).expect("templates");
    template.replace("{}", &with_article(name, false))
}

/// Lays `n` rooms out on a grid as a random tree and connects them.
fn layout(rng: &mut ChaCha8Rng, b: &mut Builder, rooms: &[usize], door_names: &[&str], door_p: f64) {
    let mut cells: Vec<(i32, i32)> = vec![(0, 0)];
    let mut names = door_names.to_vec();
    names.shuffle(rng);
    let mut names = names.into_iter();
    for i in 1..rooms.len() {
        loop {
            let j = rng.random_range(0..i);
            let dir = *Direction::ALL.choose(rng).expect("directions");
            let (x, y) = cells[j];
            let cell = match dir {
                Direction::North => (x, y + 1),
                Direction::South => (x, y - 1),
                Direction::East => (x + 1, y),
                Direction::West => (x - 1, y),
            };
            if cells.contains(&cell) {
                continue;
            }
            cells.push(cell);
            let door = if rng.random_bool(door_p) {
                let open = rng.random_bool(0.5);
                names.next().map(|n| (n, open))
            } else {
                None
            };
            b.connect(rooms[j], dir, rooms[i], door);
            break;
        }
    }
}

/// Smallest admissible-action count any state can show in a room.
const MIN_ACTIONS: usize = 10;

/// Actions a room offers no matter where portable items have gone: look,
/// inventory, exits, door toggles and examines, and the fixed entities.
fn static_actions(b: &Builder, room: usize) -> usize {
    let exits = &b.rooms[room].exits;
    // look and inventory, go through a doorless exit, toggle and examine a
    // door; going through a door is not counted since it may be closed
    let mut n = 2 + exits
        .iter()
        .map(|x| if x.door.is_some() { 2 } else { 1 })
        .sum::<usize>();
    let in_room = |loc: Location| match loc {
        Location::Room(r) => r == room,
        Location::In(c) => {
            b.entities[c].location == Location::Room(room) && b.entities[c].props.supporter
        }
        _ => false,
    };
    for e in &b.entities {
        if e.props.portable || !in_room(e.location) {
            continue;
        }
        n += 1;
        if e.props.openable && !e.props.locked {
            n += 1;
        }
    }
    n
}

/// Adds static decorations until every room meets [`MIN_ACTIONS`].
fn pad_rooms(rng: &mut ChaCha8Rng, b: &mut Builder, rooms: &[usize], decor: &[&str]) {
    let mut pool = decor.to_vec();
    pool.shuffle(rng);
    let mut pool = pool.into_iter();
    for &r in rooms {
        while static_actions(b, r) < MIN_ACTIONS {
            let Some(name) = pool.next() else { return };
            b.add(
                name,
                EntityKind::Furniture,
                Location::Room(r),
                EntityProps::plain(format!("The {name} is purely decorative.")),
            );
        }
    }
}

fn range(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}

fn cooking(rng: &mut ChaCha8Rng, difficulty: u8, profile: Profile) -> GameSpec {
    let micro = profile == Profile::Micro;
    let n_rooms = if micro {
        2
    } else {
        range(rng, difficulty as usize, difficulty as usize + 1)
    };
    let mut b = Builder::default();

    let kitchen = b.room(lexicon::KITCHEN.name, describe_room(rng, lexicon::KITCHEN.name));
    let mut others: Vec<RoomWord> = lexicon::COOKING_ROOMS.to_vec();
    others.shuffle(rng);
    let mut room_ids = vec![kitchen];
    let mut room_words = vec![lexicon::KITCHEN];
    for w in others.into_iter().take(n_rooms - 1) {
        room_ids.push(b.room(w.name, describe_room(rng, w.name)));
        room_words.push(w);
    }
    layout(rng, &mut b, &room_ids, lexicon::COOKING_DOORS, 0.5);

    // Fixtures.
    let k = Location::Room(kitchen);
    let fridge_open = micro || rng.random_bool(0.5);
    let fridge = b.container(lexicon::FRIDGE, k, fridge_open);
    b.device(CookClass::Fry, k);
    b.device(CookClass::Roast, k);
    let counter = b.supporter("counter", k);
    b.add(
        lexicon::COOKBOOK,
        EntityKind::Furniture,
        Location::In(counter),
        EntityProps::plain("A recipe book."),
    );
    let mut supporters = vec![counter];
    if !micro {
        supporters.push(b.supporter("table", k));
    }
    let mut classes = vec![CookClass::Fry, CookClass::Roast];
    for (&r, w) in room_ids.iter().zip(&room_words).skip(1) {
        for f in w.furniture {
            supporters.push(b.supporter(f, Location::Room(r)));
        }
        if w.outdoor && !classes.contains(&CookClass::Grill) {
            b.device(CookClass::Grill, Location::Room(r));
            classes.push(CookClass::Grill);
        }
    }

    // Recipe.
    let n_ing = if micro {
        range(rng, 1, 2)
    } else {
        match difficulty {
            1 => 1,
            2 => range(rng, 1, 2),
            _ => range(rng, 2, 3),
        }
    };
    let mut words: Vec<lexicon::IngredientWord> = lexicon::INGREDIENTS.to_vec();
    words.shuffle(rng);
    let recipe_words: Vec<_> = words.drain(..n_ing).collect();
    // Points: one per ingredient, one per cook direction, plus prepare and
    // eat; generated games stay within six.
    let mut cook_budget = 4 - n_ing;
    let mut ingredients = Vec::new();
    let mut prep_steps = Vec::new();
    let mut cook_steps = Vec::new();
    for w in &recipe_words {
        let prep = if w.solid {
            Some(*[Prep::Diced, Prep::Sliced, Prep::Chopped].choose(rng).expect("preps"))
        } else {
            None
        };
        let spot = if rng.random_bool(0.6) {
            Location::In(fridge)
        } else if rng.random_bool(0.5) {
            Location::In(*supporters.choose(rng).expect("supporters"))
        } else {
            Location::Room(*room_ids.choose(rng).expect("rooms"))
        };
        let id = b.ingredient(w, prep, spot);
        if let Some(p) = prep {
            prep_steps.push(PrepStep {
                ingredient: id,
                prep: p,
            });
        }
        if w.solid && cook_budget > 0 && rng.random_bool(0.6) {
            cook_budget -= 1;
            cook_steps.push(CookStep {
                ingredient: id,
                class: *classes.choose(rng).expect("classes"),
            });
        }
        ingredients.push(id);
    }

    if !micro {
        // Food the recipe doesn't need, and portable clutter.
        for w in words.iter().take(range(rng, 1, 3)) {
            let prep = if w.solid && rng.random_bool(0.5) {
                Some(Prep::Sliced)
            } else {
                None
            };
            b.ingredient(w, prep, Location::In(fridge));
        }
        let mut clutter: Vec<&str> = lexicon::COOKING_DISTRACTORS.to_vec();
        clutter.shuffle(rng);
        let mut clutter = clutter.into_iter();
        for &r in &room_ids {
            for _ in 0..range(rng, 1, 2) {
                if let Some(name) = clutter.next() {
                    b.distractor(name, Location::Room(r));
                }
            }
        }
    }

    if !micro {
        pad_rooms(rng, &mut b, &room_ids, lexicon::COOKING_DECOR);
    }
    let start = if micro {
        room_ids[1]
    } else {
        *room_ids.choose(rng).expect("rooms")
    };
    b.finish(
        Genre::Cooking,
        Goal::Recipe {
            ingredients,
            prep: prep_steps,
            cook: cook_steps,
            kitchen,
        },
        start,
    )
}

fn treasure(rng: &mut ChaCha8Rng, difficulty: u8, profile: Profile) -> GameSpec {
    let micro = profile == Profile::Micro;
    let d = difficulty as usize;
    let (n_rooms, chain) = if micro {
        (range(rng, 1, 2), range(rng, 1, 2))
    } else {
        (range(rng, d, d + 1), range(rng, d, d + 1))
    };
    let mut b = Builder::default();
    let mut words: Vec<RoomWord> = lexicon::TREASURE_ROOMS.to_vec();
    words.shuffle(rng);
    let mut room_ids = Vec::new();
    for w in words.iter().take(n_rooms) {
        room_ids.push(b.room(w.name, describe_room(rng, w.name)));
    }
    layout(rng, &mut b, &room_ids, lexicon::TREASURE_PASSAGES, 0.5);
    for (&r, w) in room_ids.iter().zip(&words) {
        for f in w.furniture {
            b.supporter(f, Location::Room(r));
        }
    }
    let pick_room = |rng: &mut ChaCha8Rng| Location::Room(*room_ids.choose(rng).expect("rooms"));

    let mut cabinet = None;
    if !micro {
        let name = *lexicon::TREASURE_CONTAINERS.choose(rng).expect("containers");
        let at = pick_room(rng);
        cabinet = Some(b.container(name, at, rng.random_bool(0.5)));
    }

    let mut lock_names: Vec<&str> = lexicon::LOCK_CONTAINERS.to_vec();
    lock_names.shuffle(rng);
    let mut key_names: Vec<&str> = lexicon::KEYS.to_vec();
    key_names.shuffle(rng);
    let mut locks = Vec::new();
    for name in lock_names.iter().take(chain) {
        let at = pick_room(rng);
        locks.push(b.lock_container(name, at));
    }
    let first_key_at = match cabinet {
        Some(c) if rng.random_bool(0.5) => Location::In(c),
        _ => pick_room(rng),
    };
    let mut links = Vec::new();
    for (i, &lock) in locks.iter().enumerate() {
        let at = if i == 0 {
            first_key_at
        } else {
            Location::In(locks[i - 1])
        };
        let key = b.key(key_names[i], at);
        b.entities[lock].props.key = Some(key);
        links.push(LockLink { lock, key });
    }
    let target_name = *lexicon::TARGETS.choose(rng).expect("targets");
    // Taking the target ends the game, so it never reaches the inventory
    // as a usable key.
    let target = b.add(
        target_name,
        EntityKind::Key,
        Location::In(*locks.last().expect("chain")),
        EntityProps {
            portable: true,
            ..EntityProps::plain(format!("The {target_name} is what you came for."))
        },
    );

    if !micro {
        let mut clutter: Vec<&str> = lexicon::TREASURE_DISTRACTORS.to_vec();
        clutter.shuffle(rng);
        let mut clutter = clutter.into_iter();
        for &r in &room_ids {
            for _ in 0..range(rng, 1, 2) {
                if let Some(name) = clutter.next() {
                    b.distractor(name, Location::Room(r));
                }
            }
        }
        if let Some(name) = clutter.next() {
            b.distractor(name, Location::In(locks[0]));
        }
    }

    if !micro {
        pad_rooms(rng, &mut b, &room_ids, lexicon::TREASURE_DECOR);
    }
    let start = room_ids[0];
    b.finish(Genre::Treasure, Goal::KeyChain { links, target }, start)
}
