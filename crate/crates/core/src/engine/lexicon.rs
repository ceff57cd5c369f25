//! Genre word lists.
//!
//! The cooking and treasure lists share no content words; the only overlap
//! between the genres is the closed class of navigation and manipulation
//! verbs in [`CLOSED_CLASS`], plus template function words.

use super::{CookClass, Prep};

pub const CLOSED_CLASS: &[&str] = &[
    "take", "drop", "open", "close", "examine", "go", "north", "south", "east", "west",
];

#[derive(Debug, Clone, Copy)]
pub struct IngredientWord {
    pub name: &'static str,
    /// Solid foods take a prep direction and may take a cook direction.
    pub solid: bool,
    /// Mass nouns render with "some".
    pub mass: bool,
}

const fn solid(name: &'static str) -> IngredientWord {
    IngredientWord {
        name,
        solid: true,
        mass: false,
    }
}

const fn liquid(name: &'static str) -> IngredientWord {
    IngredientWord {
        name,
        solid: false,
        mass: true,
    }
}

pub const INGREDIENTS: &[IngredientWord] = &[
    solid("block of cheese"),
    solid("yellow bell pepper"),
    solid("orange bell pepper"),
    solid("red apple"),
    solid("carrot"),
    solid("pork chop"),
    solid("chicken wing"),
    solid("yellow potato"),
    solid("purple potato"),
    solid("red onion"),
    solid("tomato"),
    solid("banana"),
    solid("cilantro"),
    liquid("water"),
    liquid("milk"),
    liquid("salt"),
    liquid("black pepper"),
];

#[derive(Debug, Clone, Copy)]
pub struct RoomWord {
    pub name: &'static str,
    pub outdoor: bool,
    pub furniture: &'static [&'static str],
}

pub const KITCHEN: RoomWord = RoomWord {
    name: "kitchen",
    outdoor: false,
    furniture: &["counter", "table"],
};

pub const COOKING_ROOMS: &[RoomWord] = &[
    RoomWord {
        name: "pantry",
        outdoor: false,
        furniture: &["shelf"],
    },
    RoomWord {
        name: "backyard",
        outdoor: true,
        furniture: &["patio table", "patio chair"],
    },
    RoomWord {
        name: "garden",
        outdoor: true,
        furniture: &["bench"],
    },
    RoomWord {
        name: "living room",
        outdoor: false,
        furniture: &["sofa"],
    },
    RoomWord {
        name: "bedroom",
        outdoor: false,
        furniture: &["bed"],
    },
    RoomWord {
        name: "bathroom",
        outdoor: false,
        furniture: &["toilet"],
    },
    RoomWord {
        name: "corridor",
        outdoor: false,
        furniture: &["coat rack"],
    },
];

pub const COOKING_DOORS: &[&str] = &[
    "frosted-glass door",
    "patio door",
    "barn door",
    "wooden door",
    "screen door",
    "sliding door",
];

pub const COOKING_DISTRACTORS: &[&str] = &[
    "wooden spoon",
    "napkin",
    "dish sponge",
    "fork",
    "teacup",
    "salad bowl",
    "frying pan",
    "cutting board",
    "kitchen towel",
    "grocery bag",
];

/// Static room decorations used to pad small rooms.
pub const COOKING_DECOR: &[&str] = &[
    "window",
    "rug",
    "houseplant",
    "wall clock",
    "calendar",
    "radio",
    "doormat",
    "curtain",
    "vase",
    "fireplace",
    "coat hook",
    "shoe rack",
];

pub const FRIDGE: &str = "fridge";
pub const COOKBOOK: &str = "cookbook";

pub fn device_name(class: CookClass) -> &'static str {
    match class {
        CookClass::Fry => "stove",
        CookClass::Roast => "oven",
        CookClass::Grill => "bbq",
    }
}

pub fn cook_verb(class: CookClass) -> &'static str {
    match class {
        CookClass::Fry => "fry",
        CookClass::Roast => "roast",
        CookClass::Grill => "grill",
    }
}

pub fn cooked_adjective(class: CookClass) -> &'static str {
    match class {
        CookClass::Fry => "fried",
        CookClass::Roast => "roasted",
        CookClass::Grill => "grilled",
    }
}

pub fn prep_verb(prep: Prep) -> &'static str {
    match prep {
        Prep::Diced => "dice",
        Prep::Sliced => "slice",
        Prep::Chopped => "chop",
    }
}

pub fn prep_adjective(prep: Prep) -> &'static str {
    match prep {
        Prep::Diced => "diced",
        Prep::Sliced => "sliced",
        Prep::Chopped => "chopped",
    }
}

pub const COOKING_VERBS: &[&str] = &["cook", "prepare", "eat", "meal", "recipe", "directions"];

pub const TREASURE_ROOMS: &[RoomWord] = &[
    RoomWord {
        name: "cubicle",
        outdoor: false,
        furniture: &["desk"],
    },
    RoomWord {
        name: "office",
        outdoor: false,
        furniture: &["bookshelf"],
    },
    RoomWord {
        name: "attic",
        outdoor: false,
        furniture: &["easel"],
    },
    RoomWord {
        name: "vault",
        outdoor: false,
        furniture: &["pedestal"],
    },
    RoomWord {
        name: "cellar",
        outdoor: false,
        furniture: &["workbench"],
    },
    RoomWord {
        name: "study",
        outdoor: false,
        furniture: &["armchair"],
    },
    RoomWord {
        name: "gallery",
        outdoor: false,
        furniture: &["display stand"],
    },
    RoomWord {
        name: "archive",
        outdoor: false,
        furniture: &["lectern"],
    },
];

pub const TREASURE_PASSAGES: &[&str] = &["passageway", "gate", "hatch", "portal", "archway", "trapdoor"];

pub const TREASURE_CONTAINERS: &[&str] = &["cabinet", "crate", "drawer"];

pub const LOCK_CONTAINERS: &[&str] = &[
    "box",
    "chest",
    "type a locker",
    "type b locker",
    "safe",
    "strongbox",
    "coffer",
    "trunk",
];

pub const KEYS: &[&str] = &[
    "keycard",
    "latchkey",
    "type a latchkey",
    "type b latchkey",
    "skeleton key",
    "brass key",
    "iron key",
    "key",
];

pub const TARGETS: &[&str] = &[
    "passkey",
    "gold coin",
    "silver ring",
    "jewel",
    "ruby",
    "emerald",
    "map",
];

pub const TREASURE_DISTRACTORS: &[&str] = &[
    "worm",
    "mouse",
    "gummy bear",
    "pencil",
    "stapler",
    "feather",
    "paperclip",
    "marble",
    "candle",
    "notebook",
];

pub const TREASURE_DECOR: &[&str] = &[
    "painting",
    "statue",
    "banner",
    "chandelier",
    "globe",
    "lantern",
    "tapestry",
    "candelabra",
    "pillar",
    "mosaic",
    "sundial",
    "telescope",
];

pub const TREASURE_VERBS: &[&str] = &["unlock", "lock", "goal", "retrieve"];

/// Every content word of one genre, tokenized on whitespace and hyphens.
pub fn content_words(genre: super::Genre) -> std::collections::BTreeSet<String> {
    use super::Genre;
    let mut phrases: Vec<&str> = Vec::new();
    match genre {
        Genre::Cooking => {
            phrases.extend(INGREDIENTS.iter().map(|i| i.name));
            phrases.push(KITCHEN.name);
            phrases.extend(KITCHEN.furniture.iter());
            for room in COOKING_ROOMS {
                phrases.push(room.name);
                phrases.extend(room.furniture.iter());
            }
            phrases.extend(COOKING_DOORS.iter());
            phrases.extend(COOKING_DISTRACTORS.iter());
            phrases.extend(COOKING_DECOR.iter());
            phrases.extend([FRIDGE, COOKBOOK]);
            for class in [CookClass::Fry, CookClass::Roast, CookClass::Grill] {
                phrases.extend([device_name(class), cook_verb(class), cooked_adjective(class)]);
            }
            for prep in [Prep::Diced, Prep::Sliced, Prep::Chopped] {
                phrases.extend([prep_verb(prep), prep_adjective(prep)]);
            }
            phrases.extend(COOKING_VERBS.iter());
        }
        Genre::Treasure => {
            for room in TREASURE_ROOMS {
                phrases.push(room.name);
                phrases.extend(room.furniture.iter());
            }
            phrases.extend(TREASURE_PASSAGES.iter());
            phrases.extend(TREASURE_CONTAINERS.iter());
            phrases.extend(LOCK_CONTAINERS.iter());
            phrases.extend(KEYS.iter());
            phrases.extend(TARGETS.iter());
            phrases.extend(TREASURE_DISTRACTORS.iter());
            phrases.extend(TREASURE_DECOR.iter());
            phrases.extend(TREASURE_VERBS.iter());
        }
    }
    phrases
        .iter()
        .flat_map(|p| p.split(|c: char| c.is_whitespace() || c == '-'))
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}
