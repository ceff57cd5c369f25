//! Inference-time action selection over a Q-table: greedy, softmax sampling
//! at a temperature, and a shared-model LinUCB bandit.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lowest-index argmax.
pub fn select_greedy(q: &[f64]) -> Result<usize> {
    if q.is_empty() {
        return Err(Error::Contract("greedy selection over no actions".into()));
    }
    let mut best = 0;
    for (i, &v) in q.iter().enumerate().skip(1) {
        if v > q[best] {
            best = i;
        }
    }
    Ok(best)
}

/// softmax(q / t), computed with max-subtraction.
pub fn softmax(q: &[f64], temperature: f64) -> Result<Vec<f64>> {
    if !(temperature > 0.0) {
        return Err(Error::Range(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if q.is_empty() {
        return Err(Error::Contract("softmax over no actions".into()));
    }
    let m = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = q.iter().map(|&v| ((v - m) / temperature).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / z).collect())
}

/// Draws an index from softmax(q / t).
pub fn select_sample<R: Rng + ?Sized>(q: &[f64], temperature: f64, rng: &mut R) -> Result<usize> {
    let p = softmax(q, temperature)?;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return Ok(i);
        }
    }
    // Rounding can leave the cumulative sum a hair under 1.
    Ok(p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1))
}

/// Ridge-regression bandit shared across actions: score(x) = θᵀx + α√(xᵀA⁻¹x)
/// with θ = A⁻¹b, A = I + Σxxᵀ and b = Σr·x.
#[derive(Debug, Clone, PartialEq)]
pub struct LinUcbState {
    a: DMatrix<f64>,
    b: DVector<f64>,
    alpha: f64,
    updates: u64,
}

impl LinUcbState {
    pub fn new(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 || !(alpha >= 0.0) {
            return Err(Error::Range(format!(
                "linucb needs dim > 0 and alpha >= 0, got {dim}, {alpha}"
            )));
        }
        Ok(LinUcbState {
            a: DMatrix::identity(dim, dim),
            b: DVector::zeros(dim),
            alpha,
            updates: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    fn cholesky(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        self.a
            .clone()
            .cholesky()
            .ok_or_else(|| Error::State("linucb design matrix lost positive definiteness".into()))
    }

    pub fn theta(&self) -> Result<DVector<f64>> {
        Ok(self.cholesky()?.solve(&self.b))
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::Contract(format!(
                "context has {} dims, expected {}",
                x.len(),
                self.dim()
            )));
        }
        Ok(())
    }

    /// UCB score of every context.
    pub fn scores(&self, contexts: &[Vec<f64>]) -> Result<Vec<f64>> {
        let chol = self.cholesky()?;
        let theta = chol.solve(&self.b);
        contexts
            .iter()
            .map(|x| {
                self.check(x)?;
                let x = DVector::from_column_slice(x);
                let ainv_x = chol.solve(&x);
                let width = x.dot(&ainv_x).max(0.0).sqrt();
                Ok(theta.dot(&x) + self.alpha * width)
            })
            .collect()
    }

    /// Lowest-index argmax of the UCB scores.
    pub fn select(&self, contexts: &[Vec<f64>]) -> Result<usize> {
        if contexts.is_empty() {
            return Err(Error::Contract("linucb selection over no actions".into()));
        }
        select_greedy(&self.scores(contexts)?)
    }

    pub fn update(&mut self, x: &[f64], reward: f64) -> Result<()> {
        self.check(x)?;
        if !reward.is_finite() {
            return Err(Error::Range(format!("non-finite reward {reward}")));
        }
        let x = DVector::from_column_slice(x);
        self.a += &x * x.transpose();
        self.b += reward * &x;
        self.updates += 1;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Greedy,
    Sample,
    Linucb,
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(PolicyKind::Greedy),
            "sample" => Ok(PolicyKind::Sample),
            "linucb" => Ok(PolicyKind::Linucb),
            other => Err(Error::Range(format!("unknown policy {other:?}"))),
        }
    }
}

/// LinUCB context width: a 32-dim feature plus the action's Q.
pub const LINUCB_DIM: usize = 33;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    pub temperature: f64,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            kind: PolicyKind::Greedy,
            temperature: 1.0,
            alpha: 0.5,
            seed: 0,
        }
    }
}

impl PolicyConfig {
    pub fn greedy() -> Self {
        PolicyConfig::default()
    }

    pub fn sample(temperature: f64) -> Self {
        PolicyConfig {
            kind: PolicyKind::Sample,
            temperature,
            ..PolicyConfig::default()
        }
    }

    pub fn linucb(alpha: f64) -> Self {
        PolicyConfig {
            kind: PolicyKind::Linucb,
            alpha,
            ..PolicyConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            PolicyKind::Sample if !(self.temperature > 0.0) => Err(Error::Range(format!(
                "temperature must be positive, got {}",
                self.temperature
            ))),
            PolicyKind::Linucb if !(self.alpha >= 0.0) => Err(Error::Range(format!(
                "alpha must be non-negative, got {}",
                self.alpha
            ))),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> String {
        match self.kind {
            PolicyKind::Greedy => "greedy".into(),
            PolicyKind::Sample => format!("sample_t{}", self.temperature),
            PolicyKind::Linucb => format!("linucb_a{}", self.alpha),
        }
    }
}
