//! Two hand-built games used as fixed references in tests and demos.

use super::generate::Builder;
use super::lexicon::{self, INGREDIENTS};
use super::{
    CookClass, CookStep, Direction, GameSpec, Genre, Goal, Location, LockLink, Prep, PrepStep,
};

fn word(name: &str) -> &'static lexicon::IngredientWord {
    INGREDIENTS
        .iter()
        .find(|w| w.name == name)
        .expect("ingredient word")
}

/// Pantry, kitchen and backyard; the recipe needs a grilled block of cheese,
/// water and a roasted yellow bell pepper, for seven points.
pub fn worked_cooking_example() -> GameSpec {
    let mut b = Builder::default();
    let pantry = b.room("pantry", "You are in a pantry. An usual one.");
    let kitchen = b.room("kitchen", "You're now in the kitchen.");
    let backyard = b.room(
        "backyard",
        "You arrive in a backyard. A typical kind of place.",
    );
    b.connect(pantry, Direction::North, kitchen, Some(("frosted-glass door", true)));
    b.connect(kitchen, Direction::East, backyard, Some(("patio door", true)));

    b.supporter("shelf", Location::Room(pantry));

    let k = Location::Room(kitchen);
    let fridge = b.container(lexicon::FRIDGE, k, true);
    let inside = Location::In(fridge);
    let water = b.ingredient(word("water"), None, inside);
    let cheese = b.ingredient(word("block of cheese"), Some(Prep::Diced), inside);
    let pepper = b.ingredient(word("yellow bell pepper"), Some(Prep::Diced), inside);
    for extra in ["yellow potato", "orange bell pepper", "pork chop", "cilantro"] {
        b.ingredient(word(extra), None, inside);
    }
    b.device(CookClass::Roast, k);
    b.supporter("table", k);
    let counter = b.supporter("counter", k);
    b.add(
        lexicon::COOKBOOK,
        super::EntityKind::Furniture,
        Location::In(counter),
        super::EntityProps::plain("A recipe book."),
    );
    b.device(CookClass::Fry, k);

    let y = Location::Room(backyard);
    b.supporter("patio chair", y);
    b.supporter("patio table", y);
    b.device(CookClass::Grill, y);

    let goal = Goal::Recipe {
        ingredients: vec![cheese, water, pepper],
        prep: vec![
            PrepStep {
                ingredient: cheese,
                prep: Prep::Diced,
            },
            PrepStep {
                ingredient: pepper,
                prep: Prep::Diced,
            },
        ],
        cook: vec![
            CookStep {
                ingredient: cheese,
                class: CookClass::Grill,
            },
            CookStep {
                ingredient: pepper,
                class: CookClass::Roast,
            },
        ],
        kitchen,
    };
    b.finish(Genre::Cooking, goal, pantry)
}

/// One cubicle with a three-lock chain ending in a passkey.
pub fn worked_treasure_example() -> GameSpec {
    let mut b = Builder::default();
    let cubicle = b.room(
        "cubicle",
        "I never took you for the sort of person who would show up in a cubicle, \
but I guess I was wrong.",
    );
    let office = b.room("office", "You arrive in an office. A typical kind of place.");
    let attic = b.room("attic", "Well, here you are in an attic.");
    b.connect(cubicle, Direction::South, office, Some(("door", false)));
    b.connect(cubicle, Direction::West, attic, Some(("passageway", false)));

    let c = Location::Room(cubicle);
    let chest = b.lock_container("chest", c);
    let locker = b.lock_container("type a locker", c);
    let box_ = b.lock_container("box", c);
    b.container("cabinet", c, true);
    let keycard = b.key("keycard", c);
    b.distractor("worm", c);
    let latchkey = b.key("type a latchkey", Location::In(box_));
    b.distractor("mouse", Location::In(box_));
    let key = b.key("key", Location::In(locker));
    let passkey = b.key("passkey", Location::In(chest));
    b.entities[box_].props.key = Some(keycard);
    b.entities[locker].props.key = Some(latchkey);
    b.entities[chest].props.key = Some(key);

    let goal = Goal::KeyChain {
        links: vec![
            LockLink {
                lock: box_,
                key: keycard,
            },
            LockLink {
                lock: locker,
                key: latchkey,
            },
            LockLink { lock: chest, key },
        ],
        target: passkey,
    };
    b.finish(Genre::Treasure, goal, cubicle)
}
