//! Hybrid retrieval over precomputed multi-modal features: top-K vector
//! retrieval by cosine similarity, then re-ranking by a weighted mix of
//! unimodal similarity scores.
//!
//! Records carry an embedding vector and, for image-like payloads, an
//! optional raw matrix. The mixing weights are required to be non-negative
//! and sum to one, which keeps every mixed score inside `[-1, 1]`; this is
//! stricter than a free linear combination but makes scores comparable
//! across weight choices.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{config, domain, structure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Modality {
    Text,
    Image,
    Tabular,
}

/// One stored feature entry: an embedding plus an optional 2-D payload for
/// image-domain similarity functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub id: String,
    pub modality: Modality,
    pub vector: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
}

impl FeatureRecord {
    pub fn validate(&self) -> Result<()> {
        if self.vector.is_empty() {
            return Err(domain(format!("record {}: empty vector", self.id)));
        }
        if self.vector.iter().any(|v| !v.is_finite()) {
            return Err(domain(format!("record {}: non-finite vector entry", self.id)));
        }
        if let Some(matrix) = &self.matrix {
            if matrix.is_empty() || matrix[0].is_empty() {
                return Err(domain(format!("record {}: empty matrix", self.id)));
            }
            let width = matrix[0].len();
            for row in matrix {
                if row.len() != width {
                    return Err(domain(format!("record {}: ragged matrix", self.id)));
                }
                if row.iter().any(|v| !v.is_finite()) {
                    return Err(domain(format!("record {}: non-finite matrix entry", self.id)));
                }
            }
        }
        Ok(())
    }
}

/// Unimodal similarity functions available to the mixed metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimilarityFn {
    Cosine,
    Ncc,
    Ssim,
}

/// One weighted component of the mixed similarity metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimilarityComponent {
    pub function: SimilarityFn,
    pub weight: f64,
}

/// A convex mix of unimodal similarity functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySpec {
    pub components: Vec<SimilarityComponent>,
    /// Dynamic range fed to the structural-similarity component.
    #[serde(default = "default_dynamic_range")]
    pub ssim_dynamic_range: f64,
}

fn default_dynamic_range() -> f64 {
    1.0
}

impl SimilaritySpec {
    pub fn single(function: SimilarityFn) -> Self {
        Self {
            components: vec![SimilarityComponent { function, weight: 1.0 }],
            ssim_dynamic_range: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(config("a similarity spec needs at least one component"));
        }
        if self.components.iter().any(|c| !(c.weight >= 0.0 && c.weight.is_finite())) {
            return Err(config("component weights must be non-negative"));
        }
        let total: f64 = self.components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(config(format!("component weights must sum to 1, got {total}")));
        }
        if !(self.ssim_dynamic_range > 0.0) {
            return Err(config("ssim dynamic range must be positive"));
        }
        Ok(())
    }
}

/// Cosine similarity of two equal-length non-zero vectors.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(structure(format!("vector lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(domain("cosine of empty vectors"));
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(domain("cosine of a zero vector"));
    }
    Ok(dot / (norm_a.sqrt() * norm_b.sqrt()))
}

/// Normalized cross-correlation: mean-centered, std-normalized correlation
/// `sum((a - mean_a)(b - mean_b)) / (n * std_a * std_b)`. Inputs of any
/// matching shape are treated as flat samples.
pub fn ncc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(structure(format!("sample lengths differ: {} vs {}", a.len(), b.len())));
    }
    if a.is_empty() {
        return Err(domain("correlation of empty samples"));
    }
    let n = a.len() as f64;
    let mean_a = a.iter().sum::<f64>() / n;
    let mean_b = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        cov += (x - mean_a) * (y - mean_b);
        var_a += (x - mean_a) * (x - mean_a);
        var_b += (y - mean_b) * (y - mean_b);
    }
    if var_a == 0.0 || var_b == 0.0 {
        return Err(domain("correlation of a constant input"));
    }
    Ok(cov / (n * (var_a / n).sqrt() * (var_b / n).sqrt()))
}

/// Single-window structural similarity over whole matrices with the usual
/// stabilizers `C1 = (0.01 L)^2`, `C2 = (0.03 L)^2`.
pub fn ssim(a: &[Vec<f64>], b: &[Vec<f64>], dynamic_range: f64) -> Result<f64> {
    if a.len() != b.len() || a.is_empty() || a[0].len() != b[0].len() {
        return Err(structure("matrix shapes differ or are empty"));
    }
    for (ra, rb) in a.iter().zip(b) {
        if ra.len() != a[0].len() || rb.len() != b[0].len() {
            return Err(structure("ragged matrix"));
        }
    }
    if !(dynamic_range > 0.0) {
        return Err(domain("dynamic range must be positive"));
    }
    let n = (a.len() * a[0].len()) as f64;
    let flat = |m: &[Vec<f64>]| m.iter().flatten().copied().collect::<Vec<f64>>();
    let fa = flat(a);
    let fb = flat(b);
    let mu_a = fa.iter().sum::<f64>() / n;
    let mu_b = fb.iter().sum::<f64>() / n;
    let mut var_a = 0.0;
    let mut var_b = 0.0;
    let mut cov = 0.0;
    for (&x, &y) in fa.iter().zip(&fb) {
        var_a += (x - mu_a) * (x - mu_a);
        var_b += (y - mu_b) * (y - mu_b);
        cov += (x - mu_a) * (y - mu_b);
    }
    var_a /= n;
    var_b /= n;
    cov /= n;
    let c1 = (0.01 * dynamic_range).powi(2);
    let c2 = (0.03 * dynamic_range).powi(2);
    Ok(((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2))
        / ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)))
}

/// A record paired with its retrieval or re-ranking score.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranked<'a> {
    pub record: &'a FeatureRecord,
    pub score: f64,
}

/// Top-K retrieval: records sorted by descending cosine similarity to the
/// query vector, ties broken by ascending id. Returns `min(k, db.len())`
/// entries.
pub fn retrieve_top_k<'a>(
    query: &FeatureRecord,
    db: &'a [FeatureRecord],
    k: usize,
) -> Result<Vec<Ranked<'a>>> {
    if k == 0 {
        return Err(domain("retrieval needs k >= 1"));
    }
    query.validate()?;
    let mut ranked = Vec::with_capacity(db.len());
    for record in db {
        record.validate()?;
        if record.vector.len() != query.vector.len() {
            return Err(structure(format!(
                "record {} has dimension {}, query has {}",
                record.id,
                record.vector.len(),
                query.vector.len()
            )));
        }
        ranked.push(Ranked { record, score: cosine_similarity(&query.vector, &record.vector)? });
    }
    sort_ranked(&mut ranked);
    ranked.truncate(k);
    Ok(ranked)
}

fn sort_ranked(ranked: &mut [Ranked<'_>]) {
    ranked.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.record.id.cmp(&b.record.id))
    });
}

/// Mixed similarity of a query/candidate pair under the spec: the weighted
/// sum of each component function applied to the pair's payloads.
pub fn mis_score(
    query: &FeatureRecord,
    candidate: &FeatureRecord,
    spec: &SimilaritySpec,
) -> Result<f64> {
    spec.validate()?;
    let mut total = 0.0;
    for component in &spec.components {
        let value = match component.function {
            SimilarityFn::Cosine => cosine_similarity(&query.vector, &candidate.vector)?,
            SimilarityFn::Ncc => match (&query.matrix, &candidate.matrix) {
                (Some(qm), Some(cm)) => {
                    let fq: Vec<f64> = qm.iter().flatten().copied().collect();
                    let fc: Vec<f64> = cm.iter().flatten().copied().collect();
                    ncc(&fq, &fc)?
                }
                _ => ncc(&query.vector, &candidate.vector)?,
            },
            SimilarityFn::Ssim => match (&query.matrix, &candidate.matrix) {
                (Some(qm), Some(cm)) => ssim(qm, cm, spec.ssim_dynamic_range)?,
                _ => {
                    return Err(config(format!(
                        "ssim component needs matrices on both records ({} vs {})",
                        query.id, candidate.id
                    )))
                }
            },
        };
        total += component.weight * value;
    }
    Ok(total)
}

/// Re-ranks retrieval candidates by descending mixed similarity to the
/// query, ties broken by ascending id, truncated to the best `p`.
pub fn rerank<'a>(
    query: &FeatureRecord,
    candidates: &[Ranked<'a>],
    spec: &SimilaritySpec,
    p: usize,
) -> Result<Vec<Ranked<'a>>> {
    if p == 0 {
        return Err(domain("re-ranking needs p >= 1"));
    }
    let mut rescored = candidates
        .iter()
        .map(|c| Ok(Ranked { record: c.record, score: mis_score(query, c.record, spec)? }))
        .collect::<Result<Vec<_>>>()?;
    sort_ranked(&mut rescored);
    rescored.truncate(p);
    Ok(rescored)
}

/// Loads feature records from a line-delimited file: one JSON object per
/// line with fields `id`, `modality`, `vector`, and optional `matrix`.
pub fn load_records(path: &Path) -> Result<Vec<FeatureRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut records = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: FeatureRecord = serde_json::from_str(&line).map_err(|e| {
            Error::Parse(format!("{}:{}: {e}", path.display(), lineno + 1))
        })?;
        record.validate()?;
        records.push(record);
    }
    if records.is_empty() {
        return Err(Error::Parse(format!("{}: no records", path.display())));
    }
    Ok(records)
}

/// Loads a similarity spec from a JSON document.
pub fn load_spec(path: &Path) -> Result<SimilaritySpec> {
    let file = File::open(path)?;
    let spec: SimilaritySpec = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    spec.validate()?;
    Ok(spec)
}

/// Writes ranked ids and scores as line-delimited JSON.
pub fn write_ranked(out: &mut dyn Write, ranked: &[Ranked<'_>]) -> Result<()> {
    for r in ranked {
        let line = serde_json::json!({ "id": r.record.id, "score": r.score });
        writeln!(out, "{line}")?;
    }
    Ok(())
}
