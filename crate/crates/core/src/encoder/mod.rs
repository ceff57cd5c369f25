//! Trajectory and action encoders with exact gradients.
//!
//! Two scorers share one convolution stack over word embeddings (widths 3, 4
//! and 5, ReLU, max-pool over time):
//!
//! * [`Variant::Drrn`] encodes the trajectory to a 32-dim state vector and
//!   each action with a GRU to a 32-dim action vector, then scores
//!   `[s, a, s·a]` with a dense layer.
//! * [`Variant::Joint`] convolves `trajectory <sep> action` as one sequence
//!   and scores a tanh hidden layer.
//!
//! Both the convolution and the GRU input transform are linear in the
//! embedding, so [`Encoder::prepare`] projects every vocabulary row through
//! them once per parameter version. A window's pre-activation is then a sum
//! of table lookups, and backprop accumulates per-token gradients that
//! [`Encoder::finish`] folds back into the weights and embeddings.
//!
//! A window starts at every non-pad position; positions past the end and pad
//! tokens contribute zero. Appending pads therefore never changes an output.

mod adam;
mod checkpoint;
mod params;

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::{EmbeddingTable, PAD, SEP};

pub use adam::{Adam, AdamConfig};
pub use checkpoint::{Checkpoint, Manifest, FORMAT_VERSION};
pub use params::{ParamStore, TensorInfo};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Drrn,
    Joint,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Drrn => "drrn",
            Variant::Joint => "joint",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub variant: Variant,
    pub vocab_size: usize,
    pub emb_dim: usize,
    pub filters: usize,
    pub widths: Vec<usize>,
    /// State, action and joint hidden width.
    pub hidden: usize,
    pub max_action_tokens: usize,
    pub trainable_embeddings: bool,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn new(variant: Variant, vocab_size: usize, seed: u64) -> Self {
        EncoderConfig {
            variant,
            vocab_size,
            emb_dim: 64,
            filters: 32,
            widths: vec![3, 4, 5],
            hidden: 32,
            max_action_tokens: 10,
            trainable_embeddings: true,
            seed,
        }
    }

    pub fn with_arch(arch: &ArchConfig, vocab_size: usize, seed: u64) -> Self {
        EncoderConfig {
            variant: arch.variant,
            vocab_size,
            emb_dim: arch.emb_dim,
            filters: arch.filters,
            widths: arch.widths.clone(),
            hidden: arch.hidden,
            max_action_tokens: arch.max_action_tokens,
            trainable_embeddings: arch.trainable_embeddings,
            seed,
        }
    }

    fn slots(&self) -> usize {
        self.widths.iter().sum()
    }

    fn pooled(&self) -> usize {
        self.filters * self.widths.len()
    }

    fn max_width(&self) -> usize {
        self.widths.iter().copied().max().unwrap_or(1)
    }

    fn validate(&self) -> Result<()> {
        let ok = self.vocab_size > SEP as usize
            && self.emb_dim > 0
            && self.filters > 0
            && self.hidden > 0
            && self.max_action_tokens > 0
            && !self.widths.is_empty()
            && self.widths.iter().all(|&w| w > 0);
        if ok {
            Ok(())
        } else {
            Err(Error::Range(format!("invalid encoder config {self:?}")))
        }
    }
}

/// Architecture settings of a training config; the vocabulary and seed
/// come from the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    pub variant: Variant,
    pub emb_dim: usize,
    pub filters: usize,
    pub widths: Vec<usize>,
    pub hidden: usize,
    pub max_action_tokens: usize,
    pub trainable_embeddings: bool,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig::for_variant(Variant::Drrn)
    }
}

impl ArchConfig {
    pub fn for_variant(variant: Variant) -> Self {
        let c = EncoderConfig::new(variant, 0, 0);
        ArchConfig {
            variant,
            emb_dim: c.emb_dim,
            filters: c.filters,
            widths: c.widths,
            hidden: c.hidden,
            max_action_tokens: c.max_action_tokens,
            trainable_embeddings: c.trainable_embeddings,
        }
    }
}

/// Offsets of each tensor in the flat parameter buffer.
#[derive(Debug, Clone, Default, PartialEq)]
struct Layout {
    emb: usize,
    conv_w: Vec<usize>,
    conv_b: Vec<usize>,
    /// First projection slot of each width.
    slot_base: Vec<usize>,
    dense_w: usize,
    dense_b: usize,
    gru_w: usize,
    gru_u: usize,
    gru_b: usize,
    head_w: usize,
    head_b: usize,
}

/// Per-vocabulary projections for one parameter version.
#[derive(Debug, Clone, PartialEq)]
pub struct Prepared {
    /// `[token][slot][filter]`
    conv: Vec<f64>,
    /// `[token][3 · hidden]`, reset/update/candidate input transforms.
    gru: Vec<f64>,
}

/// Gradient buffer: flat parameter gradients plus per-token accumulators
/// still to be folded through the embedding.
#[derive(Debug, Clone)]
pub struct Grads {
    flat: Vec<f64>,
    conv: Vec<f64>,
    gru: Vec<f64>,
    touched: Vec<bool>,
    tokens: Vec<u32>,
}

impl Grads {
    fn touch(&mut self, tok: u32) {
        if !self.touched[tok as usize] {
            self.touched[tok as usize] = true;
            self.tokens.push(tok);
        }
    }
}

#[derive(Debug, Clone)]
struct Pooled {
    /// Max pre-activation per filter; `-inf` when no window exists.
    pre: Vec<f64>,
    /// Tokens of the winning window, `max_width` per filter, pad-filled.
    windows: Vec<u32>,
}

impl Pooled {
    fn value(&self, p: usize) -> f64 {
        self.pre[p].max(0.0)
    }

    fn values(&self) -> Vec<f64> {
        (0..self.pre.len()).map(|p| self.value(p)).collect()
    }
}

struct StateCache {
    pooled: Pooled,
    values: Vec<f64>,
    s: Vec<f64>,
}

struct ActionCache {
    toks: Vec<u32>,
    /// `(n + 1) × hidden`; row 0 is the zero initial state.
    hs: Vec<f64>,
    r: Vec<f64>,
    z: Vec<f64>,
    n: Vec<f64>,
    rh: Vec<f64>,
}

impl ActionCache {
    fn output(&self, h: usize) -> &[f64] {
        &self.hs[self.hs.len() - h..]
    }
}

/// Convolution over the trajectory alone, for windows that end inside it.
#[derive(Debug, Clone)]
pub struct Prefix {
    pooled: Pooled,
    tail: Vec<u32>,
    len: usize,
}

struct JointCache {
    pooled: Pooled,
    values: Vec<f64>,
    hidden: Vec<f64>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoder {
    config: EncoderConfig,
    params: ParamStore,
    layout: Layout,
}

impl Encoder {
    /// Fresh parameters: uniform(−0.05, 0.05) weights, zero biases, and
    /// normal(0, 0.1) embeddings unless `embeddings` supplies them.
    pub fn new(config: EncoderConfig, embeddings: Option<&EmbeddingTable>) -> Result<Self> {
        config.validate()?;
        if let Some(t) = embeddings {
            if t.dim != config.emb_dim || t.len() != config.vocab_size {
                return Err(Error::Contract(format!(
                    "embedding table is {}×{}, config wants {}×{}",
                    t.len(),
                    t.dim,
                    config.vocab_size,
                    config.emb_dim
                )));
            }
        }
        let (params, layout) = Self::allocate(&config);
        let mut enc = Encoder {
            config,
            params,
            layout,
        };
        enc.initialize(embeddings);
        Ok(enc)
    }

    fn allocate(c: &EncoderConfig) -> (ParamStore, Layout) {
        let mut p = ParamStore::new();
        let mut l = Layout {
            emb: p.push("embedding", &[c.vocab_size, c.emb_dim], c.trainable_embeddings),
            ..Layout::default()
        };
        let mut slot = 0;
        for &w in &c.widths {
            l.conv_w.push(p.push(&format!("conv{w}.weight"), &[c.filters, w, c.emb_dim], true));
            l.conv_b.push(p.push(&format!("conv{w}.bias"), &[c.filters], true));
            l.slot_base.push(slot);
            slot += w;
        }
        let h = c.hidden;
        match c.variant {
            Variant::Drrn => {
                l.dense_w = p.push("state.weight", &[h, c.pooled()], true);
                l.dense_b = p.push("state.bias", &[h], true);
                l.gru_w = p.push("gru.input", &[3 * h, c.emb_dim], true);
                l.gru_u = p.push("gru.recurrent", &[3 * h, h], true);
                l.gru_b = p.push("gru.bias", &[3 * h], true);
                l.head_w = p.push("head.weight", &[2 * h + 1], true);
            }
            Variant::Joint => {
                l.dense_w = p.push("hidden.weight", &[h, c.pooled()], true);
                l.dense_b = p.push("hidden.bias", &[h], true);
                l.head_w = p.push("head.weight", &[h], true);
            }
        }
        l.head_b = p.push("head.bias", &[1], true);
        (p, l)
    }

    fn initialize(&mut self, embeddings: Option<&EmbeddingTable>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let normal = Normal::new(0.0, 0.1).expect("valid normal");
        for info in &self.params.infos {
            let slice = &mut self.params.data[info.range()];
            if info.name == "embedding" {
                match embeddings {
                    Some(t) => slice.copy_from_slice(&t.rows),
                    None => slice.iter_mut().for_each(|x| *x = normal.sample(&mut rng)),
                }
                slice[..self.config.emb_dim].fill(0.0);
            } else if info.name.ends_with("bias") {
                slice.fill(0.0);
            } else {
                slice.iter_mut().for_each(|x| *x = rng.random_range(-0.05..0.05));
            }
        }
    }

    pub(crate) fn from_parts(config: EncoderConfig, tensors: &[TensorInfo], data: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let (mut params, layout) = Self::allocate(&config);
        if params.infos != tensors || params.data.len() != data.len() {
            return Err(Error::Format("tensor layout does not match the config".into()));
        }
        params.data = data;
        Ok(Encoder {
            config,
            params,
            layout,
        })
    }

    pub fn config(&self) -> &EncoderConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    /// Direct parameter access; call [`Encoder::prepare`] again afterwards.
    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn p(&self, offset: usize, len: usize) -> &[f64] {
        &self.params.data[offset..offset + len]
    }

    fn emb(&self, tok: u32) -> &[f64] {
        let d = self.config.emb_dim;
        self.p(self.layout.emb + tok as usize * d, d)
    }

    pub fn prepare(&self) -> Prepared {
        let c = &self.config;
        let (d, f, s, h) = (c.emb_dim, c.filters, c.slots(), c.hidden);
        // Column v of a d × V matrix is embedding row v.
        let emb = DMatrix::from_column_slice(d, c.vocab_size, self.p(self.layout.emb, c.vocab_size * d));
        // One weight row per (slot, filter), so the product's columns are
        // the per-token tables in storage order.
        let mut rows = vec![0.0; s * f * d];
        for (wi, &w) in c.widths.iter().enumerate() {
            let weights = self.p(self.layout.conv_w[wi], f * w * d);
            for j in 0..w {
                for fi in 0..f {
                    let dst = ((self.layout.slot_base[wi] + j) * f + fi) * d;
                    rows[dst..dst + d].copy_from_slice(&weights[(fi * w + j) * d..][..d]);
                }
            }
        }
        let conv = (DMatrix::from_row_slice(s * f, d, &rows) * &emb).data.into();
        let gru = if c.variant == Variant::Drrn {
            (DMatrix::from_row_slice(3 * h, d, self.p(self.layout.gru_w, 3 * h * d)) * &emb).data.into()
        } else {
            Vec::new()
        };
        Prepared { conv, gru }
    }

    pub fn new_grads(&self) -> Grads {
        let c = &self.config;
        let gru_width = if c.variant == Variant::Drrn { 3 * c.hidden } else { 0 };
        Grads {
            flat: vec![0.0; self.params.len()],
            conv: vec![0.0; c.vocab_size * c.slots() * c.filters],
            gru: vec![0.0; c.vocab_size * gru_width],
            touched: vec![false; c.vocab_size],
            tokens: Vec::new(),
        }
    }

    /// Folds the per-token accumulators into weight and embedding gradients.
    pub fn finish(&self, mut grads: Grads) -> Vec<f64> {
        let c = &self.config;
        let (d, f, s, h) = (c.emb_dim, c.filters, c.slots(), c.hidden);
        let emb_grad = c.trainable_embeddings;
        let mut tokens = std::mem::take(&mut grads.tokens);
        tokens.sort_unstable();
        for &v in &tokens {
            let v = v as usize;
            let e = self.emb(v as u32).to_vec();
            let mut ge = vec![0.0; d];
            for (wi, &w) in c.widths.iter().enumerate() {
                let off = self.layout.conv_w[wi];
                for j in 0..w {
                    let g = &grads.conv[(v * s + self.layout.slot_base[wi] + j) * f..][..f];
                    for (fi, &gv) in g.iter().enumerate() {
                        if gv == 0.0 {
                            continue;
                        }
                        let base = off + (fi * w + j) * d;
                        for k in 0..d {
                            grads.flat[base + k] += gv * e[k];
                            ge[k] += gv * self.params.data[base + k];
                        }
                    }
                }
            }
            if c.variant == Variant::Drrn {
                let g = &grads.gru[v * 3 * h..][..3 * h];
                for (gi, &gv) in g.iter().enumerate() {
                    if gv == 0.0 {
                        continue;
                    }
                    let base = self.layout.gru_w + gi * d;
                    for k in 0..d {
                        grads.flat[base + k] += gv * e[k];
                        ge[k] += gv * self.params.data[base + k];
                    }
                }
            }
            if emb_grad && v != PAD as usize {
                let row = self.layout.emb + v * d;
                for k in 0..d {
                    grads.flat[row + k] += ge[k];
                }
            }
        }
        grads.flat
    }

    fn empty_pool(&self) -> Pooled {
        let p = self.config.pooled();
        Pooled {
            pre: vec![f64::NEG_INFINITY; p],
            windows: vec![PAD; p * self.config.max_width()],
        }
    }

    /// Scans windows of `seq` starting in `range(w)` for each width `w`.
    fn scan(&self, prep: &Prepared, seq: &[u32], range: impl Fn(usize) -> (usize, usize), pool: &mut Pooled) {
        let c = &self.config;
        let (f, s, mw) = (c.filters, c.slots(), c.max_width());
        let mut z = vec![0.0; f];
        // Winning start per pooled unit from this scan; windows are copied
        // once at the end.
        let mut best = vec![usize::MAX; pool.pre.len()];
        for (wi, &w) in c.widths.iter().enumerate() {
            let bias = self.p(self.layout.conv_b[wi], f);
            let base = self.layout.slot_base[wi];
            let (lo, hi) = range(w);
            for t in lo..hi.min(seq.len()) {
                if seq[t] == PAD {
                    continue;
                }
                z.copy_from_slice(bias);
                for j in 0..w.min(seq.len() - t) {
                    let tok = seq[t + j] as usize;
                    if tok == PAD as usize {
                        continue;
                    }
                    let proj = &prep.conv[(tok * s + base + j) * f..][..f];
                    for (zi, pi) in z.iter_mut().zip(proj) {
                        *zi += pi;
                    }
                }
                for (fi, &zv) in z.iter().enumerate() {
                    let p = wi * f + fi;
                    if zv > pool.pre[p] {
                        pool.pre[p] = zv;
                        best[p] = t;
                    }
                }
            }
        }
        for (p, &t) in best.iter().enumerate() {
            if t == usize::MAX {
                continue;
            }
            let w = c.widths[p / f];
            let win = &mut pool.windows[p * mw..][..mw];
            for (j, slot) in win.iter_mut().enumerate() {
                *slot = if j < w { seq.get(t + j).copied().unwrap_or(PAD) } else { PAD };
            }
        }
    }

    fn pool_backward(&self, pool: &Pooled, dvalues: &[f64], grads: &mut Grads) {
        let c = &self.config;
        let (f, s, mw) = (c.filters, c.slots(), c.max_width());
        for (wi, &w) in c.widths.iter().enumerate() {
            let base = self.layout.slot_base[wi];
            for fi in 0..f {
                let p = wi * f + fi;
                let d = dvalues[p];
                if pool.pre[p] <= 0.0 || d == 0.0 {
                    continue;
                }
                grads.flat[self.layout.conv_b[wi] + fi] += d;
                for j in 0..w {
                    let tok = pool.windows[p * mw + j];
                    if tok == PAD {
                        continue;
                    }
                    grads.conv[(tok as usize * s + base + j) * f + fi] += d;
                    grads.touch(tok);
                }
            }
        }
    }

    fn dense(&self, x: &[f64]) -> Vec<f64> {
        let (h, n) = (self.config.hidden, x.len());
        let w = self.p(self.layout.dense_w, h * n);
        let b = self.p(self.layout.dense_b, h);
        (0..h).map(|o| b[o] + dot(&w[o * n..][..n], x)).collect()
    }

    /// Accumulates the dense layer's gradients; returns d/dx.
    fn dense_backward(&self, x: &[f64], dy: &[f64], grads: &mut Grads) -> Vec<f64> {
        let (h, n) = (self.config.hidden, x.len());
        let w = self.p(self.layout.dense_w, h * n);
        let mut dx = vec![0.0; n];
        for o in 0..h {
            let d = dy[o];
            if d == 0.0 {
                continue;
            }
            grads.flat[self.layout.dense_b + o] += d;
            let gw = &mut grads.flat[self.layout.dense_w + o * n..][..n];
            for k in 0..n {
                gw[k] += d * x[k];
                dx[k] += d * w[o * n + k];
            }
        }
        dx
    }

    fn require(&self, v: Variant) -> Result<()> {
        if self.config.variant == v {
            Ok(())
        } else {
            Err(Error::Contract(format!(
                "operation needs a {} encoder, this one is {}",
                v.as_str(),
                self.config.variant.as_str()
            )))
        }
    }

    fn check_traj(ids: &[u32]) -> Result<()> {
        if ids.is_empty() {
            Err(Error::Contract("empty trajectory".into()))
        } else {
            Ok(())
        }
    }

    fn check_dq(dq: &[f64], n: usize) -> Result<()> {
        if dq.len() == n {
            Ok(())
        } else {
            Err(Error::Contract(format!("loss returned {} derivatives for {n} scores", dq.len())))
        }
    }

    fn clip_action<'a>(&self, ids: &'a [u32]) -> Result<&'a [u32]> {
        let max = self.config.max_action_tokens;
        if ids.is_empty() {
            return Err(Error::Contract("empty action".into()));
        }
        if ids.len() > max {
            log::warn!("action of {} tokens truncated to {max}", ids.len());
            return Ok(&ids[..max]);
        }
        Ok(ids)
    }

    fn state_forward(&self, prep: &Prepared, ids: &[u32]) -> StateCache {
        let mut pooled = self.empty_pool();
        self.scan(prep, ids, |_| (0, ids.len()), &mut pooled);
        let values = pooled.values();
        let s = self.dense(&values);
        StateCache { pooled, values, s }
    }

    fn state_backward(&self, cache: &StateCache, ds: &[f64], grads: &mut Grads) {
        let dv = self.dense_backward(&cache.values, ds, grads);
        self.pool_backward(&cache.pooled, &dv, grads);
    }

    fn action_forward(&self, prep: &Prepared, ids: &[u32]) -> ActionCache {
        let h = self.config.hidden;
        let u = self.p(self.layout.gru_u, 3 * h * h);
        let b = self.p(self.layout.gru_b, 3 * h);
        let n_steps = ids.len();
        let mut c = ActionCache {
            toks: ids.to_vec(),
            hs: vec![0.0; (n_steps + 1) * h],
            r: vec![0.0; n_steps * h],
            z: vec![0.0; n_steps * h],
            n: vec![0.0; n_steps * h],
            rh: vec![0.0; n_steps * h],
        };
        for (i, &tok) in ids.iter().enumerate() {
            let gx = &prep.gru[tok as usize * 3 * h..][..3 * h];
            let (prev, next) = c.hs.split_at_mut((i + 1) * h);
            let hp = &prev[i * h..];
            let next = &mut next[..h];
            let (r, z, n, rh) = (
                &mut c.r[i * h..][..h],
                &mut c.z[i * h..][..h],
                &mut c.n[i * h..][..h],
                &mut c.rh[i * h..][..h],
            );
            for o in 0..h {
                r[o] = sigmoid(gx[o] + b[o] + dot(&u[o * h..][..h], hp));
                z[o] = sigmoid(gx[h + o] + b[h + o] + dot(&u[(h + o) * h..][..h], hp));
                rh[o] = r[o] * hp[o];
            }
            for o in 0..h {
                n[o] = (gx[2 * h + o] + b[2 * h + o] + dot(&u[(2 * h + o) * h..][..h], rh)).tanh();
                next[o] = (1.0 - z[o]) * n[o] + z[o] * hp[o];
            }
        }
        c
    }

    fn action_backward(&self, c: &ActionCache, da: &[f64], grads: &mut Grads) {
        let h = self.config.hidden;
        let u = self.p(self.layout.gru_u, 3 * h * h);
        let (gu, gb) = (self.layout.gru_u, self.layout.gru_b);
        let mut dh = da.to_vec();
        let mut dar = vec![0.0; h];
        let mut daz = vec![0.0; h];
        let mut dan = vec![0.0; h];
        for i in (0..c.toks.len()).rev() {
            let hp = &c.hs[i * h..][..h];
            let (r, z, n, rh) = (
                &c.r[i * h..][..h],
                &c.z[i * h..][..h],
                &c.n[i * h..][..h],
                &c.rh[i * h..][..h],
            );
            let mut dhp = vec![0.0; h];
            for o in 0..h {
                dan[o] = dh[o] * (1.0 - z[o]) * (1.0 - n[o] * n[o]);
                daz[o] = dh[o] * (hp[o] - n[o]) * z[o] * (1.0 - z[o]);
                dhp[o] = dh[o] * z[o];
            }
            // Candidate path through r ⊙ h.
            let mut drh = vec![0.0; h];
            for o in 0..h {
                let d = dan[o];
                grads.flat[gb + 2 * h + o] += d;
                let row = gu + (2 * h + o) * h;
                for k in 0..h {
                    grads.flat[row + k] += d * rh[k];
                    drh[k] += d * u[(2 * h + o) * h + k];
                }
            }
            for o in 0..h {
                dar[o] = drh[o] * hp[o] * r[o] * (1.0 - r[o]);
                dhp[o] += drh[o] * r[o];
            }
            for (gate, dg) in [(0, &dar), (1, &daz)] {
                for o in 0..h {
                    let d = dg[o];
                    grads.flat[gb + gate * h + o] += d;
                    let row = gate * h + o;
                    for k in 0..h {
                        grads.flat[gu + row * h + k] += d * hp[k];
                        dhp[k] += d * u[row * h + k];
                    }
                }
            }
            let tok = c.toks[i];
            let g = &mut grads.gru[tok as usize * 3 * h..][..3 * h];
            for o in 0..h {
                g[o] += dar[o];
                g[h + o] += daz[o];
                g[2 * h + o] += dan[o];
            }
            grads.touch(tok);
            dh = dhp;
        }
    }

    fn drrn_q(&self, s: &[f64], a: &[f64]) -> f64 {
        let h = self.config.hidden;
        let w = self.p(self.layout.head_w, 2 * h + 1);
        let b = self.params.data[self.layout.head_b];
        dot(&w[..h], s) + dot(&w[h..2 * h], a) + w[2 * h] * dot(s, a) + b
    }

    /// Head gradients for one (s, a) pair; accumulates d/ds into `ds` and
    /// returns d/da.
    fn drrn_backward(&self, s: &[f64], a: &[f64], dq: f64, ds: &mut [f64], grads: &mut Grads) -> Vec<f64> {
        let h = self.config.hidden;
        let w = self.p(self.layout.head_w, 2 * h + 1);
        let hw = self.layout.head_w;
        let sa = dot(s, a);
        let mut da = vec![0.0; h];
        for k in 0..h {
            grads.flat[hw + k] += dq * s[k];
            grads.flat[hw + h + k] += dq * a[k];
            ds[k] += dq * (w[k] + w[2 * h] * a[k]);
            da[k] = dq * (w[h + k] + w[2 * h] * s[k]);
        }
        grads.flat[hw + 2 * h] += dq * sa;
        grads.flat[self.layout.head_b] += dq;
        da
    }

    /// Convolution over windows lying wholly inside the trajectory. Trailing
    /// pads are dropped so that the separator follows the last real token.
    pub fn joint_prefix(&self, prep: &Prepared, traj: &[u32]) -> Result<Prefix> {
        self.require(Variant::Joint)?;
        Self::check_traj(traj)?;
        let traj = &traj[..traj.iter().rposition(|&t| t != PAD).map_or(0, |i| i + 1)];
        let mut pooled = self.empty_pool();
        let t = traj.len();
        self.scan(prep, traj, |w| (0, (t + 1).saturating_sub(w)), &mut pooled);
        let keep = t.min(self.config.max_width() - 1);
        Ok(Prefix {
            pooled,
            tail: traj[t - keep..].to_vec(),
            len: t,
        })
    }

    fn joint_forward(&self, prep: &Prepared, prefix: &Prefix, action: &[u32]) -> JointCache {
        let mut pooled = prefix.pooled.clone();
        let mut seq = prefix.tail.clone();
        seq.push(SEP);
        seq.extend_from_slice(action);
        let (tl, t) = (prefix.tail.len(), prefix.len);
        self.scan(prep, &seq, |w| (tl - t.min(w - 1), usize::MAX), &mut pooled);
        let values = pooled.values();
        let hidden: Vec<f64> = self.dense(&values).into_iter().map(f64::tanh).collect();
        JointCache {
            pooled,
            values,
            hidden,
        }
    }

    fn joint_q(&self, hidden: &[f64]) -> f64 {
        let h = self.config.hidden;
        dot(self.p(self.layout.head_w, h), hidden) + self.params.data[self.layout.head_b]
    }

    fn joint_backward(&self, c: &JointCache, dq: f64, grads: &mut Grads) {
        let h = self.config.hidden;
        let w = self.p(self.layout.head_w, h);
        let mut dpre = vec![0.0; h];
        for k in 0..h {
            grads.flat[self.layout.head_w + k] += dq * c.hidden[k];
            dpre[k] = dq * w[k] * (1.0 - c.hidden[k] * c.hidden[k]);
        }
        grads.flat[self.layout.head_b] += dq;
        let dv = self.dense_backward(&c.values, &dpre, grads);
        self.pool_backward(&c.pooled, &dv, grads);
    }

    /// 32-dim state vector of a trajectory (DRRN only).
    pub fn encode_trajectory(&self, prep: &Prepared, ids: &[u32]) -> Result<Vec<f64>> {
        self.require(Variant::Drrn)?;
        Self::check_traj(ids)?;
        Ok(self.state_forward(prep, ids).s)
    }

    /// Final GRU state over at most `max_action_tokens` tokens (DRRN only).
    pub fn encode_action(&self, prep: &Prepared, ids: &[u32]) -> Result<Vec<f64>> {
        self.require(Variant::Drrn)?;
        let ids = self.clip_action(ids)?;
        let c = self.action_forward(prep, ids);
        Ok(c.output(self.config.hidden).to_vec())
    }

    pub fn score_drrn(&self, s: &[f64], a: &[f64]) -> Result<f64> {
        self.require(Variant::Drrn)?;
        let h = self.config.hidden;
        if s.len() != h || a.len() != h {
            return Err(Error::Contract(format!(
                "state and action vectors must be {h}-dim, got {} and {}",
                s.len(),
                a.len()
            )));
        }
        Ok(self.drrn_q(s, a))
    }

    pub fn score_drrn_batch(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<Vec<f64>> {
        pairs.iter().map(|(s, a)| self.score_drrn(s, a)).collect()
    }

    pub fn score_joint(&self, prep: &Prepared, traj: &[u32], action: &[u32]) -> Result<f64> {
        let prefix = self.joint_prefix(prep, traj)?;
        let action = self.clip_action(action)?;
        Ok(self.joint_q(&self.joint_forward(prep, &prefix, action).hidden))
    }

    /// Q for every action, whichever the variant.
    pub fn score(&self, prep: &Prepared, traj: &[u32], actions: &[Vec<u32>]) -> Result<Vec<f64>> {
        Ok(self.score_features(prep, traj, actions)?.0)
    }

    /// Q for every action plus its 32-dim feature: `s ⊙ a` for DRRN, the
    /// tanh hidden layer for the joint encoder.
    pub fn score_features(
        &self,
        prep: &Prepared,
        traj: &[u32],
        actions: &[Vec<u32>],
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        Self::check_traj(traj)?;
        let h = self.config.hidden;
        let mut qs = Vec::with_capacity(actions.len());
        let mut feats = Vec::with_capacity(actions.len());
        match self.config.variant {
            Variant::Drrn => {
                let s = self.state_forward(prep, traj).s;
                for a in actions {
                    let c = self.action_forward(prep, self.clip_action(a)?);
                    let av = c.output(h);
                    qs.push(self.drrn_q(&s, av));
                    feats.push(s.iter().zip(av).map(|(x, y)| x * y).collect());
                }
            }
            Variant::Joint => {
                let prefix = self.joint_prefix(prep, traj)?;
                for a in actions {
                    let c = self.joint_forward(prep, &prefix, self.clip_action(a)?);
                    qs.push(self.joint_q(&c.hidden));
                    feats.push(c.hidden);
                }
            }
        }
        Ok((qs, feats))
    }

    /// Scores `actions`, asks `loss` for the loss and dL/dQ, and backprops
    /// into `grads`. Actions with a zero derivative cost no backward pass.
    pub fn accumulate<F>(
        &self,
        prep: &Prepared,
        grads: &mut Grads,
        traj: &[u32],
        actions: &[Vec<u32>],
        loss: F,
    ) -> Result<(f64, Vec<f64>)>
    where
        F: FnOnce(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        Self::check_traj(traj)?;
        let h = self.config.hidden;
        match self.config.variant {
            Variant::Drrn => {
                let state = self.state_forward(prep, traj);
                let caches = actions
                    .iter()
                    .map(|a| Ok(self.action_forward(prep, self.clip_action(a)?)))
                    .collect::<Result<Vec<_>>>()?;
                let q: Vec<f64> = caches.iter().map(|c| self.drrn_q(&state.s, c.output(h))).collect();
                let (l, dq) = loss(&q)?;
                Self::check_dq(&dq, q.len())?;
                let mut ds = vec![0.0; h];
                for (c, &d) in caches.iter().zip(&dq) {
                    if d != 0.0 {
                        let da = self.drrn_backward(&state.s, c.output(h), d, &mut ds, grads);
                        self.action_backward(c, &da, grads);
                    }
                }
                self.state_backward(&state, &ds, grads);
                Ok((l, q))
            }
            Variant::Joint => {
                let prefix = self.joint_prefix(prep, traj)?;
                let caches = actions
                    .iter()
                    .map(|a| Ok(self.joint_forward(prep, &prefix, self.clip_action(a)?)))
                    .collect::<Result<Vec<_>>>()?;
                let q: Vec<f64> = caches.iter().map(|c| self.joint_q(&c.hidden)).collect();
                let (l, dq) = loss(&q)?;
                Self::check_dq(&dq, q.len())?;
                for (c, &d) in caches.iter().zip(&dq) {
                    if d != 0.0 {
                        self.joint_backward(c, d, grads);
                    }
                }
                Ok((l, q))
            }
        }
    }

    /// [`Encoder::accumulate`] over many `(trajectory, actions)` items;
    /// `loss` also receives the item index. The DRRN scorer runs each
    /// distinct action through the GRU once per call, summing its
    /// derivatives across items. Returns the summed loss.
    pub fn accumulate_batch<F>(
        &self,
        prep: &Prepared,
        grads: &mut Grads,
        items: &[(&[u32], &[Vec<u32>])],
        mut loss: F,
    ) -> Result<f64>
    where
        F: FnMut(usize, &[f64]) -> Result<(f64, Vec<f64>)>,
    {
        if self.config.variant == Variant::Joint {
            let mut total = 0.0;
            for (i, (traj, actions)) in items.iter().enumerate() {
                total += self.accumulate(prep, grads, traj, actions, |q| loss(i, q))?.0;
            }
            return Ok(total);
        }
        let h = self.config.hidden;
        let mut index: HashMap<&[u32], usize> = HashMap::new();
        let mut caches: Vec<ActionCache> = Vec::new();
        let mut slots = Vec::with_capacity(items.len());
        for (traj, actions) in items {
            Self::check_traj(traj)?;
            let mut s = Vec::with_capacity(actions.len());
            for a in actions.iter() {
                let a = self.clip_action(a)?;
                let next = caches.len();
                let u = *index.entry(a).or_insert(next);
                if u == next {
                    caches.push(self.action_forward(prep, a));
                }
                s.push(u);
            }
            slots.push(s);
        }
        let mut da_sum = vec![vec![0.0; h]; caches.len()];
        let mut used = vec![false; caches.len()];
        let mut total = 0.0;
        for (i, ((traj, _), slots)) in items.iter().zip(&slots).enumerate() {
            let state = self.state_forward(prep, traj);
            let q: Vec<f64> = slots.iter().map(|&u| self.drrn_q(&state.s, caches[u].output(h))).collect();
            let (l, dq) = loss(i, &q)?;
            Self::check_dq(&dq, q.len())?;
            total += l;
            let mut ds = vec![0.0; h];
            for (&u, &d) in slots.iter().zip(&dq) {
                if d != 0.0 {
                    let da = self.drrn_backward(&state.s, caches[u].output(h), d, &mut ds, grads);
                    da_sum[u].iter_mut().zip(&da).for_each(|(x, y)| *x += y);
                    used[u] = true;
                }
            }
            self.state_backward(&state, &ds, grads);
        }
        for (u, c) in caches.iter().enumerate() {
            if used[u] {
                self.action_backward(c, &da_sum[u], grads);
            }
        }
        Ok(total)
    }
}
