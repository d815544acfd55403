//! Deduplication: exact grouping by fingerprint, then semantic clustering
//! with latent semantic indexing.
//!
//! Documents are tokenized (lowercase, split on non-alphanumerics, stop
//! words dropped), weighted with TF-IDF and projected onto the top singular
//! vectors of the corpus term matrix. A finding joins the most similar
//! existing cluster of the same tool category when the cosine between its
//! projection and the cluster centroid reaches the threshold.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::model::{AggId, FindingDraft, RawId, ToolCategory};

/// Slack applied to threshold and tie comparisons of cosines.
pub const SIMILARITY_EPS: f64 = 1e-9;

const STOP_WORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "being", "but", "by",
    "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "how", "if", "in", "into", "is", "it",
    "its", "may", "might", "more", "most", "no", "not", "of", "on", "or", "other", "our", "should", "so", "such",
    "than", "that", "the", "their", "them", "then", "there", "these", "they", "this", "those", "to", "too", "via",
    "was", "we", "were", "what", "when", "where", "which", "while", "who", "will", "with", "would", "you", "your",
];

pub fn is_stop_word(token: &str) -> bool {
    STOP_WORDS.binary_search(&token).is_ok()
}

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !is_stop_word(t))
        .map(String::from)
        .collect()
}

pub type TermCounts = BTreeMap<String, u32>;

pub fn term_counts(text: &str) -> TermCounts {
    let mut counts = TermCounts::new();
    for t in tokenize(text) {
        *counts.entry(t).or_default() += 1;
    }
    counts
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactGroup {
    pub draft: FindingDraft,
    /// Extra entries in the same report that shared the fingerprint.
    pub duplicates: u32,
}

/// Merges drafts with equal fingerprints, keeping first-seen order.
pub fn exact_group(drafts: Vec<FindingDraft>) -> Vec<ExactGroup> {
    let mut index: BTreeMap<RawId, usize> = BTreeMap::new();
    let mut out: Vec<ExactGroup> = Vec::new();
    for d in drafts {
        match index.get(&d.raw_id) {
            Some(&i) => out[i].duplicates += 1,
            None => {
                index.insert(d.raw_id.clone(), out.len());
                out.push(ExactGroup { draft: d, duplicates: 0 });
            }
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn normalize(v: &mut [f64]) {
    let n = dot(v, v).sqrt();
    if n > 1e-12 {
        v.iter_mut().for_each(|x| *x /= n);
    } else {
        v.iter_mut().for_each(|x| *x = 0.0);
    }
}

/// Truncated-SVD projection of TF-IDF vectors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LsiModel {
    /// Terms in lexicographic order; the value is the column index.
    pub vocabulary: BTreeMap<String, usize>,
    pub idf: Vec<f64>,
    /// `k` right singular vectors, each of vocabulary length.
    pub basis: Vec<Vec<f64>>,
    pub documents: usize,
}

impl LsiModel {
    /// Builds the model over a corpus. `k = min(max_rank, rank)`.
    pub fn build(corpus: &[TermCounts], max_rank: usize) -> Self {
        let vocabulary: BTreeMap<String, usize> = corpus
            .iter()
            .flat_map(|d| d.keys())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let n_docs = corpus.len();
        let n_terms = vocabulary.len();
        if n_docs == 0 || n_terms == 0 || max_rank == 0 {
            return Self::default();
        }

        let mut df = vec![0usize; n_terms];
        for doc in corpus {
            for t in doc.keys() {
                df[vocabulary[t]] += 1;
            }
        }
        // Smoothed idf keeps terms shared by every document from vanishing.
        let idf: Vec<f64> = df
            .iter()
            .map(|&d| ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0)
            .collect();

        let mut model = Self {
            vocabulary,
            idf,
            basis: Vec::new(),
            documents: n_docs,
        };
        let mut a = DMatrix::<f64>::zeros(n_docs, n_terms);
        for (r, doc) in corpus.iter().enumerate() {
            let row = model.tfidf(doc);
            for (c, v) in row.into_iter().enumerate() {
                a[(r, c)] = v;
            }
        }

        model.basis = right_singular_vectors(a, max_rank)
            .into_iter()
            .map(|mut v| {
                // Sign convention: first non-negligible component non-negative.
                if v.iter().find(|x| x.abs() > 1e-12).is_some_and(|x| *x < 0.0) {
                    v.iter_mut().for_each(|x| *x = -*x);
                }
                v
            })
            .collect();
        model
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// True when every term of the document is in the vocabulary.
    pub fn covers(&self, doc: &TermCounts) -> bool {
        doc.keys().all(|t| self.vocabulary.contains_key(t))
    }

    /// Unit TF-IDF vector over the vocabulary; unknown terms are ignored.
    pub fn tfidf(&self, doc: &TermCounts) -> Vec<f64> {
        let mut v = vec![0.0; self.vocabulary.len()];
        for (t, &n) in doc {
            if let Some(&i) = self.vocabulary.get(t) {
                v[i] = f64::from(n) * self.idf[i];
            }
        }
        normalize(&mut v);
        v
    }

    /// Projection onto the latent space, renormalized to unit length (or zero).
    pub fn project(&self, doc: &TermCounts) -> Vec<f64> {
        let x = self.tfidf(doc);
        let mut p: Vec<f64> = self.basis.iter().map(|b| dot(b, &x)).collect();
        normalize(&mut p);
        p
    }
}

/// Above this size the exact SVD gets slow; the top vectors are then taken
/// from the eigendecomposition of the smaller Gram matrix.
const EXACT_SVD_LIMIT: usize = 200;

/// Top right singular vectors of `a` (rows of V^T), by descending singular
/// value, numerically zero ones dropped.
fn right_singular_vectors(a: DMatrix<f64>, max_rank: usize) -> Vec<Vec<f64>> {
    let (m, n) = a.shape();
    if m.min(n) <= EXACT_SVD_LIMIT {
        let svd = a.svd(false, true);
        let v_t = svd.v_t.expect("requested V^T");
        let sigma = svd.singular_values;
        let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
        let tol = sigma_max * (m.max(n) as f64) * f64::EPSILON;
        let mut order: Vec<usize> = (0..sigma.len()).filter(|&i| sigma[i] > tol).collect();
        order.sort_by(|&i, &j| sigma[j].total_cmp(&sigma[i]).then(i.cmp(&j)));
        order.truncate(max_rank);
        return order.into_iter().map(|i| v_t.row(i).iter().copied().collect()).collect();
    }

    let gram = if m <= n { &a * a.transpose() } else { a.transpose() * &a };
    let eig = gram.symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    // Squaring costs half the precision, so the cut-off is looser.
    let tol = lambda_max * 1e-14;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&i| eig.eigenvalues[i] > tol).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
    order.truncate(max_rank);

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(order.len());
    for i in order {
        let mut v: Vec<f64> = if m <= n {
            // v = A^T u / sigma; normalized below.
            (a.transpose() * eig.eigenvectors.column(i)).iter().copied().collect()
        } else {
            eig.eigenvectors.column(i).iter().copied().collect()
        };
        // Re-orthogonalize against earlier vectors to undo rounding drift.
        for b in &basis {
            let d = dot(b, &v);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
        normalize(&mut v);
        if v.iter().any(|x| *x != 0.0) {
            basis.push(v);
        }
    }
    basis
}

/// Builds an index model over raw texts.
pub fn build_semantic_index(corpus: &[String], max_rank: usize) -> LsiModel {
    let docs: Vec<TermCounts> = corpus.iter().map(|t| term_counts(t)).collect();
    LsiModel::build(&docs, max_rank)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    dot(a, b)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterVector {
    pub category: ToolCategory,
    /// Terms of the first member; this cluster's document in the corpus.
    pub canonical: TermCounts,
    pub sum: Vec<f64>,
    pub centroid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedMember {
    pub agg_id: AggId,
    pub terms: TermCounts,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DedupConfig {
    pub similarity_threshold: f64,
    pub lsi_rank: usize,
    pub rebuild_every: usize,
}

impl Default for DedupConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.75,
            lsi_rank: 100,
            rebuild_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub agg_id: AggId,
    pub created: bool,
    pub similarity: Option<f64>,
}

/// Model plus cluster membership and centroids.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SemanticIndex {
    pub model: LsiModel,
    pub members: BTreeMap<RawId, IndexedMember>,
    pub clusters: BTreeMap<AggId, ClusterVector>,
    pub since_rebuild: usize,
    pub next_agg: u64,
    pub rebuilds: u64,
}

impl SemanticIndex {
    pub fn agg_of(&self, raw_id: &RawId) -> Option<&AggId> {
        self.members.get(raw_id).map(|m| &m.agg_id)
    }

    /// Rebuild is due when the model is missing or stale, or when a pending
    /// document has terms the model has never seen.
    pub fn needs_rebuild(&self, pending: &[TermCounts], config: &DedupConfig) -> bool {
        if pending.is_empty() {
            return false;
        }
        self.model.is_empty()
            || self.since_rebuild >= config.rebuild_every
            || pending.iter().any(|d| !self.model.covers(d))
    }

    /// Refits the model on every cluster's canonical document plus `pending`,
    /// then recomputes centroids. Membership is never changed.
    pub fn rebuild(&mut self, pending: &[TermCounts], max_rank: usize) {
        let corpus: Vec<TermCounts> = self
            .clusters
            .values()
            .map(|c| c.canonical.clone())
            .chain(pending.iter().cloned())
            .collect();
        self.model = LsiModel::build(&corpus, max_rank);
        let k = self.model.rank();
        for c in self.clusters.values_mut() {
            c.sum = vec![0.0; k];
        }
        for m in self.members.values() {
            let v = self.model.project(&m.terms);
            if let Some(c) = self.clusters.get_mut(&m.agg_id) {
                c.sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
            }
        }
        for c in self.clusters.values_mut() {
            c.centroid = c.sum.clone();
            normalize(&mut c.centroid);
        }
        self.since_rebuild = 0;
        self.rebuilds += 1;
    }

    /// Places a new raw finding: joins the most similar same-category cluster
    /// at or above `threshold` (oldest cluster wins ties), or opens a new one.
    pub fn assign_cluster(&mut self, raw_id: RawId, terms: TermCounts, category: ToolCategory, threshold: f64) -> Assignment {
        if let Some(m) = self.members.get(&raw_id) {
            return Assignment {
                agg_id: m.agg_id.clone(),
                created: false,
                similarity: None,
            };
        }
        let v = self.model.project(&terms);
        let mut best: Option<(&AggId, f64)> = None;
        if v.iter().any(|x| *x != 0.0) {
            for (id, c) in self.clusters.iter().filter(|(_, c)| c.category == category) {
                let cos = cosine(&v, &c.centroid);
                if cos + SIMILARITY_EPS < threshold {
                    continue;
                }
                if best.is_none_or(|(_, b)| cos > b + SIMILARITY_EPS) {
                    best = Some((id, cos));
                }
            }
        }
        let best = best.map(|(id, cos)| (id.clone(), cos));

        let assignment = match best {
            Some((agg_id, cos)) => {
                let c = self.clusters.get_mut(&agg_id).expect("cluster exists");
                c.sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
                c.centroid = c.sum.clone();
                normalize(&mut c.centroid);
                Assignment {
                    agg_id,
                    created: false,
                    similarity: Some(cos),
                }
            }
            None => {
                self.next_agg += 1;
                let agg_id = AggId(format!("agg-{:06}", self.next_agg));
                self.clusters.insert(
                    agg_id.clone(),
                    ClusterVector {
                        category,
                        canonical: terms.clone(),
                        sum: v.clone(),
                        centroid: v,
                    },
                );
                Assignment {
                    agg_id,
                    created: true,
                    similarity: None,
                }
            }
        };
        self.members.insert(
            raw_id,
            IndexedMember {
                agg_id: assignment.agg_id.clone(),
                terms,
            },
        );
        self.since_rebuild += 1;
        assignment
    }
}
