//! Distributional word vectors: positive PMI over a windowed co-occurrence
//! count, factored by SVD.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use super::tokenize;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorConfig {
    pub dim: usize,
    /// Tokens on each side counted as context.
    pub window: usize,
}

impl Default for VectorConfig {
    fn default() -> Self {
        VectorConfig { dim: 50, window: 2 }
    }
}

/// One vector per distinct corpus token, in byte order of the token.
pub fn build_word_vectors(corpus: &[String], config: &VectorConfig) -> Result<Vec<(String, Vec<f64>)>> {
    if config.dim == 0 || config.window == 0 {
        return Err(Error::Range("dim and window must be positive".into()));
    }
    let docs: Vec<Vec<String>> = corpus.iter().map(|t| tokenize(t)).collect();
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for t in docs.iter().flatten() {
        index.insert(t, 0);
    }
    let words: Vec<String> = index.keys().map(|s| s.to_string()).collect();
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let n = words.len();
    if n < config.dim {
        return Err(Error::Range(format!(
            "corpus has {n} distinct tokens, fewer than dim {}",
            config.dim
        )));
    }

    let mut counts = DMatrix::<f64>::zeros(n, n);
    for doc in &docs {
        let ids: Vec<usize> = doc.iter().map(|t| index[t.as_str()]).collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in ids.iter().skip(i + 1).take(config.window) {
                counts[(a, b)] += 1.0;
                counts[(b, a)] += 1.0;
            }
        }
    }
    let total: f64 = counts.sum();
    let row: Vec<f64> = (0..n).map(|i| counts.row(i).sum()).collect();
    let ppmi = DMatrix::from_fn(n, n, |i, j| {
        let c = counts[(i, j)];
        if c == 0.0 {
            0.0
        } else {
            (c * total / (row[i] * row[j])).ln().max(0.0)
        }
    });

    let svd = ppmi.svd(true, false);
    let u = svd.u.expect("requested U");
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let mut vectors = vec![Vec::with_capacity(config.dim); n];
    for &k in order.iter().take(config.dim) {
        let col = u.column(k);
        // Fix the sign so the largest-magnitude entry is positive.
        let pivot = col.iter().copied().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
        let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * svd.singular_values[k].sqrt();
        for (i, v) in vectors.iter_mut().enumerate() {
            v.push(col[i] * scale);
        }
    }
    Ok(words.into_iter().zip(vectors).collect())
}

/// Writes "token v1 .. vd" lines with round-trip float formatting.
pub fn write_word_vectors(path: &Path, vectors: &[(String, Vec<f64>)]) -> Result<()> {
    let mut s = String::new();
    for (token, v) in vectors {
        s.push_str(token);
        for x in v {
            write!(s, " {x:?}").expect("writing to a String");
        }
        s.push('\n');
    }
    std::fs::write(path, s).map_err(|e| Error::io(path, e))
}
