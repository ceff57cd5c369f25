//! Tokenization, vocabularies, trajectories and word-vector tables.

mod vectors;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::{self, GameState, Genre, Status};
use crate::error::{Error, Result};

pub use vectors::{build_word_vectors, write_word_vectors, VectorConfig};

pub const PAD: u32 = 0;
pub const UNK: u32 = 1;
/// Separates trajectory and action in joint encoder inputs.
pub const SEP: u32 = 2;
pub const SEP_TOKEN: &str = "<sep>";
pub const DEFAULT_MAX_TOKENS: usize = 384;

/// Lowercases and splits on whitespace; every ASCII punctuation character
/// becomes a token of its own.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if c.is_ascii_punctuation() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(c.to_string());
        } else {
            cur.extend(c.to_lowercase());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

pub fn detokenize(tokens: &[String]) -> String {
    tokens.join(" ")
}

/// Token ↔ id map with `<pad>` = 0, `<unk>` = 1 and `<sep>` = 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    ids: HashMap<String, u32>,
}

impl Vocabulary {
    /// Reserved tokens followed by every corpus token in byte order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut seen = BTreeSet::new();
        for text in texts {
            seen.extend(tokenize(text));
        }
        seen.remove(SEP_TOKEN);
        Self::from_tokens(seen)
    }

    fn from_tokens(rest: impl IntoIterator<Item = String>) -> Self {
        let mut tokens = vec!["<pad>".to_string(), "<unk>".to_string(), SEP_TOKEN.to_string()];
        tokens.extend(rest);
        let ids = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary { tokens, ids }
    }

    /// Vocabulary over [`engine_corpus`] for both genres.
    pub fn engine_default() -> Self {
        let corpus = engine_corpus(&CorpusConfig::default());
        Self::build(corpus.iter().map(String::as_str))
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> u32 {
        self.ids.get(token).copied().unwrap_or(UNK)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.ids.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.tokens[id as usize]
    }

    pub fn encode(&self, text: &str) -> Vec<u32> {
        tokenize(text).iter().map(|t| self.id(t)).collect()
    }

    /// Tokens from `<sep>` onward, one per line; line n holds id n + 2.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        for t in &self.tokens[SEP as usize..] {
            s.push_str(t);
            s.push('\n');
        }
        s
    }

    pub fn from_file_string(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(SEP_TOKEN) {
            return Err(Error::Format(format!("vocabulary must start with {SEP_TOKEN}")));
        }
        let rest: Vec<String> = lines.map(str::to_string).collect();
        let vocab = Self::from_tokens(rest);
        if vocab.ids.len() != vocab.tokens.len() {
            return Err(Error::Format("vocabulary has duplicate tokens".into()));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_string(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    Player,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::Player => "player",
        }
    }
}

/// Alternating system/player turns plus the truncated token-id cache.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    turns: Vec<(Role, String)>,
    /// Token count of each turn, in order.
    lengths: Vec<usize>,
    ids: Vec<u32>,
    max_tokens: usize,
}

impl Trajectory {
    pub fn new(max_tokens: usize) -> Self {
        assert!(max_tokens > 0, "max_tokens must be positive");
        Trajectory {
            turns: Vec::new(),
            lengths: Vec::new(),
            ids: Vec::new(),
            max_tokens,
        }
    }

    pub fn from_turns(turns: &[(Role, String)], vocab: &Vocabulary, max_tokens: usize) -> Result<Self> {
        let mut t = Self::new(max_tokens);
        for (role, text) in turns {
            t.append_turn(*role, text, vocab)?;
        }
        Ok(t)
    }

    pub fn append_turn(&mut self, role: Role, text: &str, vocab: &Vocabulary) -> Result<()> {
        let expected = if self.turns.len() % 2 == 0 {
            Role::System
        } else {
            Role::Player
        };
        if role != expected {
            return Err(Error::Contract(format!(
                "turn {} must be {}, got {}",
                self.turns.len(),
                expected.as_str(),
                role.as_str()
            )));
        }
        let ids = vocab.encode(text);
        self.lengths.push(ids.len());
        self.turns.push((role, text.to_string()));
        self.ids.extend(ids);
        if self.ids.len() > self.max_tokens {
            let drop = self.ids.len() - self.max_tokens;
            self.ids.drain(..drop);
        }
        Ok(())
    }

    pub fn turns(&self) -> &[(Role, String)] {
        &self.turns
    }

    /// Token ids of the most recent `max_tokens` tokens.
    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn max_tokens(&self) -> usize {
        self.max_tokens
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// The shortest suffix of turns, starting at a system turn, whose tokens
    /// cover the cache. Rebuilding a trajectory from it yields the same ids.
    pub fn window_turns(&self) -> &[(Role, String)] {
        let mut covered = 0;
        let mut start = self.turns.len();
        while start > 0 && covered < self.ids.len() {
            start -= 1;
            covered += self.lengths[start];
        }
        if start % 2 == 1 {
            start -= 1;
        }
        &self.turns[start..]
    }
}

/// Vocabulary-aligned embedding matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    pub rows: Vec<f64>,
    pub trainable: bool,
}

impl EmbeddingTable {
    pub fn row(&self, id: u32) -> &[f64] {
        let i = id as usize * self.dim;
        &self.rows[i..i + self.dim]
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reads whitespace-separated "token v1 .. vd" lines into a frozen table
/// aligned with `vocab`. Vocabulary tokens absent from the file, and `<unk>`
/// itself, get the mean of all loaded vectors; `<pad>` is zero.
pub fn load_word_vectors(path: &Path, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_word_vectors(&text, vocab)
}

pub fn parse_word_vectors(text: &str, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let mut found: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    let mut dim = None;
    let mut sum: Vec<f64> = Vec::new();
    let mut count = 0usize;
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(token) = fields.next() else { continue };
        let v = fields
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
        match dim {
            None if v.is_empty() => {
                return Err(Error::Format(format!("line {}: vector has no values", n + 1)))
            }
            None => {
                dim = Some(v.len());
                sum = vec![0.0; v.len()];
            }
            Some(d) if d != v.len() => {
                return Err(Error::Format(format!(
                    "line {}: expected {d} values, found {}",
                    n + 1,
                    v.len()
                )))
            }
            Some(_) => {}
        }
        for (s, x) in sum.iter_mut().zip(&v) {
            *s += x;
        }
        count += 1;
        if vocab.contains(token) {
            found.insert(vocab.id(token), v);
        }
    }
    let Some(dim) = dim else {
        return Err(Error::Format("word-vector file is empty".into()));
    };
    let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
    let mut rows = Vec::with_capacity(vocab.len() * dim);
    for id in 0..vocab.len() as u32 {
        match id {
            PAD => rows.extend(std::iter::repeat_n(0.0, dim)),
            UNK => rows.extend(&mean),
            _ => rows.extend(found.get(&id).unwrap_or(&mean)),
        }
    }
    Ok(EmbeddingTable {
        dim,
        rows,
        trainable: false,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusConfig {
    /// Games per genre, difficulty and profile.
    pub games: u64,
    /// Random actions per game.
    pub steps: usize,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            games: 40,
            steps: 60,
            seed: 0,
        }
    }
}

/// Text the engine produces under random play across both genres, every
/// difficulty and both profiles: intros, renders and action strings.
pub fn engine_corpus(config: &CorpusConfig) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut out = Vec::new();
    for genre in [Genre::Cooking, Genre::Treasure] {
        for profile in [engine::Profile::Standard, engine::Profile::Micro] {
            for difficulty in 1..=3 {
                for seed in 0..config.games {
                    let opts = engine::GenOptions { profile };
                    let spec = engine::generate_game_with(genre, seed, difficulty, &opts)
                        .expect("difficulty is in range");
                    let mut state = GameState::initial(&spec);
                    out.push(engine::intro_text(&spec));
                    out.push(engine::render(&spec, &state, ""));
                    for _ in 0..config.steps {
                        if state.status != Status::Ongoing {
                            break;
                        }
                        let actions = state.admissible_actions(&spec);
                        let action = actions.choose(&mut rng).expect("ongoing").clone();
                        let outcome = state.apply(&spec, &action).expect("admissible");
                        out.push(action);
                        out.push(engine::render(&spec, &state, &outcome.feedback));
                    }
                }
            }
        }
    }
    out
}
