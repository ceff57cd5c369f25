//! Students trained only from a curriculum pool: a DRRN scorer regressing
//! every action's Q-value, and a joint scorer trained on 3+1 action subsets
//! with either cross-entropy on the teacher's argmax or squared error.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curriculum::{sample_indices, CurriculumPool, CurriculumRecord};
use crate::encoder::{Adam, AdamConfig, ArchConfig, Checkpoint, Encoder, EncoderConfig, Variant};
use crate::engine::GameSpec;
use crate::error::{Error, Result};
use crate::harness::{self, EvalOptions, NeuralAgent};
use crate::text::{EmbeddingTable, Trajectory, Vocabulary, DEFAULT_MAX_TOKENS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudentVariant {
    DrrnSe,
    NluCe,
    NluSe,
}

impl StudentVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            StudentVariant::DrrnSe => "drrn_se",
            StudentVariant::NluCe => "nlu_ce",
            StudentVariant::NluSe => "nlu_se",
        }
    }

    pub fn encoder_variant(self) -> Variant {
        match self {
            StudentVariant::DrrnSe => Variant::Drrn,
            StudentVariant::NluCe | StudentVariant::NluSe => Variant::Joint,
        }
    }
}

impl std::str::FromStr for StudentVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "drrn_se" => Ok(StudentVariant::DrrnSe),
            "nlu_ce" => Ok(StudentVariant::NluCe),
            "nlu_se" => Ok(StudentVariant::NluSe),
            _ => Err(Error::Range(format!("unknown student variant {s:?}"))),
        }
    }
}

/// Σ (f − q)² / |A| and its gradient with respect to every f.
pub fn student_se_loss(f: &[f64], q: &[f64]) -> Result<(f64, Vec<f64>)> {
    if f.is_empty() || f.len() != q.len() {
        return Err(Error::Contract(format!(
            "squared error over {} scores and {} targets",
            f.len(),
            q.len()
        )));
    }
    let n = f.len() as f64;
    let sum: f64 = f.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    let grad = f.iter().zip(q).map(|(a, b)| 2.0 * (a - b) / n).collect();
    Ok((sum / n, grad))
}

/// The same loss restricted to a subset.
pub fn nlu_se_loss(scores: &[f64], q: &[f64]) -> Result<(f64, Vec<f64>)> {
    student_se_loss(scores, q)
}

/// −log softmax(scores)[label] and its gradient softmax − onehot.
pub fn nlu_ce_loss(scores: &[f64], label: usize) -> Result<(f64, Vec<f64>)> {
    if label >= scores.len() {
        return Err(Error::Contract(format!(
            "label {label} outside {} scores",
            scores.len()
        )));
    }
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = exps.iter().sum();
    let loss = z.ln() - (scores[label] - m);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / z).collect();
    grad[label] -= 1.0;
    Ok((loss, grad))
}

/// The teacher's argmax plus `k` distinct other actions drawn without
/// replacement, shuffled. Returns the indices and the argmax position.
pub fn subsample_actions<R: Rng + ?Sized>(
    record: &CurriculumRecord,
    k: usize,
    rng: &mut R,
) -> (Vec<usize>, usize) {
    let n = record.actions.len();
    let best = record.best_action();
    let mut subset = vec![best];
    if n <= k + 1 {
        subset.extend((0..n).filter(|&i| i != best));
    } else {
        subset.extend(index::sample(rng, n - 1, k).into_iter().map(|i| if i >= best { i + 1 } else { i }));
    }
    subset.shuffle(rng);
    let label = subset.iter().position(|&i| i == best).expect("argmax is in the subset");
    (subset, label)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudentConfig {
    pub variant: StudentVariant,
    /// Records per gradient step.
    pub batch_size: usize,
    /// Gradient steps.
    pub total_steps: u64,
    pub checkpoint_every: u64,
    /// Non-argmax actions per record for the joint variants.
    pub subsample_k: usize,
    pub max_tokens: usize,
    pub seed: u64,
    /// Defaults to the standard architecture for the variant.
    pub arch: Option<ArchConfig>,
    pub adam: AdamConfig,
}

impl Default for StudentConfig {
    fn default() -> Self {
        StudentConfig {
            variant: StudentVariant::DrrnSe,
            batch_size: 32,
            total_steps: 10_000,
            checkpoint_every: 1_000,
            subsample_k: 3,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: 0,
            arch: None,
            adam: AdamConfig::default(),
        }
    }
}

impl StudentConfig {
    pub fn for_variant(variant: StudentVariant) -> Self {
        StudentConfig {
            variant,
            ..StudentConfig::default()
        }
    }

    /// The architecture in use. Loaded embeddings set the width and
    /// trainability of the default architecture.
    pub fn resolved_arch(&self, embeddings: Option<&EmbeddingTable>) -> ArchConfig {
        match &self.arch {
            Some(a) => a.clone(),
            None => {
                let mut a = ArchConfig::for_variant(self.variant.encoder_variant());
                if let Some(t) = embeddings {
                    a.emb_dim = t.dim;
                    a.trainable_embeddings = t.trainable;
                }
                a
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Range(format!("student config: {what}")));
        if self.batch_size == 0 || self.total_steps == 0 || self.checkpoint_every == 0 || self.max_tokens == 0 {
            return bad("sizes and intervals must be positive");
        }
        if self.subsample_k == 0 {
            return bad("subsample k must be at least 1");
        }
        if let Some(a) = &self.arch {
            if a.variant != self.variant.encoder_variant() {
                return Err(Error::Contract(format!(
                    "{} students need the {} encoder, config has {}",
                    self.variant.as_str(),
                    self.variant.encoder_variant().as_str(),
                    a.variant.as_str()
                )));
            }
        }
        Ok(())
    }
}

/// Held-out suites scored greedily at every checkpoint.
#[derive(Debug, Clone, Copy, Default)]
pub struct EvalSuites<'a> {
    pub in_domain: &'a [GameSpec],
    pub out_domain: &'a [GameSpec],
}

/// One row of `metrics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentMetrics {
    pub step: u64,
    /// Mean batch loss since the previous row.
    pub loss: f64,
    pub eval_in_domain_pct: Option<f64>,
    pub eval_out_domain_pct: Option<f64>,
}

pub fn metrics_csv(rows: &[StudentMetrics]) -> String {
    let cell = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    let mut out = String::from("step,loss,eval_in_domain_pct,eval_out_domain_pct\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:?},{},{}",
            r.step,
            r.loss,
            cell(r.eval_in_domain_pct),
            cell(r.eval_out_domain_pct)
        );
    }
    out
}

#[derive(Debug, Clone)]
pub struct StudentRun {
    /// One per metrics row, in order.
    pub checkpoints: Vec<Checkpoint>,
    pub metrics: Vec<StudentMetrics>,
}

impl StudentRun {
    pub fn final_checkpoint(&self) -> &Checkpoint {
        self.checkpoints.last().expect("a run has at least one checkpoint")
    }

    /// Highest in-domain score, earliest on ties; the final checkpoint
    /// when nothing was evaluated.
    pub fn best(&self) -> (&Checkpoint, &StudentMetrics) {
        let mut best = self.metrics.len() - 1;
        let mut score = f64::NEG_INFINITY;
        for (i, m) in self.metrics.iter().enumerate() {
            if let Some(s) = m.eval_in_domain_pct {
                if s > score {
                    score = s;
                    best = i;
                }
            }
        }
        (&self.checkpoints[best], &self.metrics[best])
    }
}

/// A pool record tokenized with the student's vocabulary.
struct Encoded {
    traj: Arc<[u32]>,
    actions: Vec<Vec<u32>>,
}

/// Per-record loss for `variant` over the scores of `subset`; the targets
/// come from the record alone.
pub fn record_loss(
    variant: StudentVariant,
    record: &CurriculumRecord,
    subset: &[usize],
    label: usize,
    scores: &[f64],
) -> Result<(f64, Vec<f64>)> {
    match variant {
        StudentVariant::NluCe => nlu_ce_loss(scores, label),
        StudentVariant::DrrnSe | StudentVariant::NluSe => {
            let q: Vec<f64> = subset.iter().map(|&i| record.q_values[i]).collect();
            student_se_loss(scores, &q)
        }
    }
}

/// Trains a student from `pool` alone. The pool text is re-tokenized with
/// `vocab`; `embeddings`, when given, initialize the embedding table. With
/// `out_dir`, writes `config.json`, `metrics.csv`, `ckpt-<step>/` per
/// checkpoint and `final/`.
pub fn train_student(
    config: &StudentConfig,
    pool: &CurriculumPool,
    vocab: &Vocabulary,
    embeddings: Option<&EmbeddingTable>,
    suites: EvalSuites<'_>,
    out_dir: Option<&Path>,
) -> Result<StudentRun> {
    config.validate()?;
    if pool.is_empty() {
        return Err(Error::Contract("student training needs a non-empty pool".into()));
    }
    let arch = config.resolved_arch(embeddings);
    let mut encoder = Encoder::new(EncoderConfig::with_arch(&arch, vocab.len(), config.seed), embeddings)?;
    let mut adam = Adam::new(config.adam, encoder.params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let label = config.variant.as_str();
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("config.json");
        let mut stored = config.clone();
        stored.arch = Some(arch.clone());
        std::fs::write(&path, serde_json::to_string_pretty(&stored)? + "\n").map_err(|e| Error::io(&path, e))?;
    }

    let encoded = pool
        .records
        .iter()
        .map(|r| {
            Ok(Encoded {
                traj: Trajectory::from_turns(&r.turns, vocab, config.max_tokens)?.ids().into(),
                actions: r.actions.iter().map(|a| vocab.encode(a)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut prep = encoder.prepare();
    let (mut loss_sum, mut loss_n) = (0.0, 0u64);
    let mut metrics = Vec::new();
    let mut checkpoints = Vec::new();
    for step in 1..=config.total_steps {
        let batch = sample_indices(pool, config.batch_size, &mut rng)?;
        let scale = 1.0 / batch.len() as f64;
        let mut grads = encoder.new_grads();
        let mut subsets = Vec::with_capacity(batch.len());
        for &i in &batch {
            subsets.push(match config.variant {
                StudentVariant::DrrnSe => ((0..pool.records[i].actions.len()).collect(), 0),
                _ => subsample_actions(&pool.records[i], config.subsample_k, &mut rng),
            });
        }
        let actions: Vec<Vec<Vec<u32>>> = batch
            .iter()
            .zip(&subsets)
            .map(|(&i, (subset, _))| subset.iter().map(|&a| encoded[i].actions[a].clone()).collect())
            .collect();
        let items: Vec<(&[u32], &[Vec<u32>])> = batch
            .iter()
            .zip(&actions)
            .map(|(&i, a)| (&encoded[i].traj[..], a.as_slice()))
            .collect();
        let total = encoder.accumulate_batch(&prep, &mut grads, &items, |j, scores| {
            let (subset, target) = &subsets[j];
            let (l, d) = record_loss(config.variant, &pool.records[batch[j]], subset, *target, scores)?;
            Ok((l * scale, d.into_iter().map(|x| x * scale).collect()))
        })?;
        let grads = encoder.finish(grads);
        adam.apply(encoder.params_mut(), &grads)?;
        prep = encoder.prepare();
        loss_sum += total;
        loss_n += 1;

        if step % config.checkpoint_every == 0 || step == config.total_steps {
            let score = |games: &[GameSpec], suite: &str| -> Result<Option<f64>> {
                if games.is_empty() {
                    return Ok(None);
                }
                let mut agent = NeuralAgent::new(&encoder, vocab, config.max_tokens)?;
                let opts = EvalOptions::default();
                Ok(Some(harness::evaluate_games(&mut agent, label, suite, games, &opts)?.0.percent))
            };
            let row = StudentMetrics {
                step,
                loss: loss_sum / loss_n as f64,
                eval_in_domain_pct: score(suites.in_domain, "in_domain")?,
                eval_out_domain_pct: score(suites.out_domain, "out_domain")?,
            };
            log::info!("{label} step {step}: loss {:.3e}", row.loss);
            (loss_sum, loss_n) = (0.0, 0);
            metrics.push(row);
            let ckpt = Checkpoint {
                label: label.into(),
                step,
                encoder: encoder.clone(),
                vocab: vocab.clone(),
            };
            if let Some(dir) = out_dir {
                ckpt.save(&dir.join(format!("ckpt-{step}")))?;
                if step == config.total_steps {
                    ckpt.save(&dir.join("final"))?;
                }
                let path = dir.join("metrics.csv");
                std::fs::write(&path, metrics_csv(&metrics)).map_err(|e| Error::io(&path, e))?;
            }
            checkpoints.push(ckpt);
        }
    }
    Ok(StudentRun { checkpoints, metrics })
}
