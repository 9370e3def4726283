use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::Chunk;
use crate::exec::{self, Execution};
use crate::text::content_tokens;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Self { k1: 1.2, b: 0.75 }
    }
}

/// Inverted index over transcript chunks. Serializes deterministically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LexicalIndex {
    pub params: Bm25Params,
    chunks: Vec<Chunk>,
    /// Position of each lesson in course order; used for tie-breaking.
    lesson_rank: BTreeMap<String, usize>,
    /// term → (chunk position, term frequency), ascending by position.
    postings: BTreeMap<String, Vec<(u32, u32)>>,
    lengths: Vec<u32>,
    average_length: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("query has no searchable terms")]
    EmptyQuery,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchHit<'a> {
    pub chunk: &'a Chunk,
    pub score: f64,
}

/// Indexes chunks; lessons rank in order of first appearance.
pub fn build_index(chunks: Vec<Chunk>) -> LexicalIndex {
    let mut order: Vec<String> = Vec::new();
    for c in &chunks {
        if !order.contains(&c.lesson_id) {
            order.push(c.lesson_id.clone());
        }
    }
    build_index_ordered(chunks, &order)
}

/// Indexes chunks with an explicit lesson order (usually syllabus order).
/// Lessons missing from `lesson_order` rank after all listed ones.
pub fn build_index_ordered(chunks: Vec<Chunk>, lesson_order: &[String]) -> LexicalIndex {
    build_index_with(chunks, lesson_order, Bm25Params::default(), Execution::Sequential)
}

pub fn build_index_with(chunks: Vec<Chunk>, lesson_order: &[String], params: Bm25Params, mode: Execution) -> LexicalIndex {
    let mut lesson_rank: BTreeMap<String, usize> =
        lesson_order.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
    for c in &chunks {
        let next = lesson_rank.len();
        lesson_rank.entry(c.lesson_id.clone()).or_insert(next);
    }

    let term_counts: Vec<BTreeMap<String, u32>> = exec::map_slice(&chunks, mode, |c| {
        let mut counts = BTreeMap::new();
        for t in content_tokens(&c.text) {
            *counts.entry(t).or_insert(0) += 1;
        }
        counts
    });

    let mut postings: BTreeMap<String, Vec<(u32, u32)>> = BTreeMap::new();
    let mut lengths = Vec::with_capacity(chunks.len());
    for (i, counts) in term_counts.into_iter().enumerate() {
        lengths.push(counts.values().sum());
        for (term, tf) in counts {
            postings.entry(term).or_default().push((i as u32, tf));
        }
    }
    let average_length = if lengths.is_empty() {
        0.0
    } else {
        lengths.iter().map(|&l| f64::from(l)).sum::<f64>() / lengths.len() as f64
    };

    LexicalIndex {
        params,
        chunks,
        lesson_rank,
        postings,
        lengths,
        average_length,
    }
}

impl LexicalIndex {
    pub fn chunks(&self) -> &[Chunk] {
        &self.chunks
    }

    pub fn len(&self) -> usize {
        self.chunks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunks.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("index serializes")
    }

    /// Probabilistic IDF, never negative.
    fn idf(&self, df: usize) -> f64 {
        let n = self.chunks.len() as f64;
        let df = df as f64;
        (1.0 + (n - df + 0.5) / (df + 0.5)).ln()
    }

    /// BM25 over chunks of `allowed` lessons. Only chunks sharing a term
    /// with the query are returned, best first; ties go to the earlier
    /// lesson, then the earlier chunk.
    pub fn search(&self, query: &str, allowed: &BTreeSet<String>, k: usize) -> Result<Vec<SearchHit<'_>>, SearchError> {
        let terms: BTreeSet<String> = content_tokens(query).into_iter().collect();
        if terms.is_empty() {
            return Err(SearchError::EmptyQuery);
        }
        let Bm25Params { k1, b } = self.params;
        let mut scores: HashMap<u32, f64> = HashMap::new();
        for term in &terms {
            let Some(list) = self.postings.get(term) else { continue };
            let idf = self.idf(list.len());
            for &(pos, tf) in list {
                let chunk = &self.chunks[pos as usize];
                if !allowed.contains(&chunk.lesson_id) {
                    continue;
                }
                let tf = f64::from(tf);
                let len_norm = 1.0 - b + b * f64::from(self.lengths[pos as usize]) / self.average_length;
                *scores.entry(pos).or_default() += idf * tf * (k1 + 1.0) / (tf + k1 * len_norm);
            }
        }
        let mut hits: Vec<(u32, f64)> = scores.into_iter().filter(|&(_, s)| s > 0.0).collect();
        hits.sort_by(|a, b| {
            b.1.total_cmp(&a.1).then_with(|| self.tie_key(a.0).partial_cmp(&self.tie_key(b.0)).expect("finite"))
        });
        Ok(hits
            .into_iter()
            .take(k)
            .map(|(pos, score)| SearchHit {
                chunk: &self.chunks[pos as usize],
                score,
            })
            .collect())
    }

    fn tie_key(&self, pos: u32) -> (usize, f64, u32) {
        let c = &self.chunks[pos as usize];
        (self.lesson_rank.get(&c.lesson_id).copied().unwrap_or(usize::MAX), c.start_seconds, pos)
    }

    /// Runs independent queries, optionally across threads.
    pub fn search_many(
        &self,
        queries: &[String],
        allowed: &BTreeSet<String>,
        k: usize,
        mode: Execution,
    ) -> Vec<Result<Vec<SearchHit<'_>>, SearchError>> {
        exec::map_slice(queries, mode, |q| self.search(q, allowed, k))
    }
}
