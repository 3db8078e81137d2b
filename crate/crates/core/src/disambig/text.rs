//! Tokenization, term frequencies and page profiles.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::CorpusPage;
use crate::graph::NodeId;

/// Number of terms kept in a profile.
pub const PROFILE_TERMS: usize = 30;

const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its",
    "itself", "just", "me", "more", "most", "my", "myself", "no", "nor", "not", "now", "of",
    "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over", "own",
    "same", "she", "should", "so", "some", "such", "than", "that", "the", "their", "theirs",
    "them", "themselves", "then", "there", "these", "they", "this", "those", "through", "to",
    "too", "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which",
    "while", "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself",
    "yourselves",
];

pub fn is_stopword(w: &str) -> bool {
    STOPWORDS.binary_search(&w).is_ok()
}

/// Lowercases, splits on anything that is not a letter or digit, and drops
/// stopwords.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|ch: char| !ch.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .filter(|w| !is_stopword(w))
        .collect()
}

/// Term count divided by the number of tokens.
pub fn term_frequencies(tokens: &[String]) -> BTreeMap<String, f64> {
    let mut tf: BTreeMap<String, f64> = BTreeMap::new();
    for t in tokens {
        *tf.entry(t.clone()).or_insert(0.0) += 1.0;
    }
    let len = tokens.len() as f64;
    tf.values_mut().for_each(|v| *v /= len);
    tf
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PageProfile {
    pub page: NodeId,
    /// Highest-weight terms, descending; unit L2 norm unless empty.
    pub terms: Vec<(String, f64)>,
}

impl PageProfile {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn weight(&self, term: &str) -> f64 {
        self.terms
            .iter()
            .find(|(t, _)| t == term)
            .map_or(0.0, |(_, w)| *w)
    }
}

/// `tf'(w) = tf(w) (1 + sum_r tf_r(w))`: every related page votes for the
/// terms it shares with the person page, each vote scaled by the original
/// `tf(w)`. Terms absent from the person page stay absent.
pub fn reweighted_tf(
    tf: &BTreeMap<String, f64>,
    related: &[BTreeMap<String, f64>],
) -> BTreeMap<String, f64> {
    tf.iter()
        .map(|(w, &f)| {
            let votes: f64 = related.iter().filter_map(|r| r.get(w)).sum();
            (w.clone(), f * (1.0 + votes))
        })
        .collect()
}

/// Top terms of `weights` (ties to the lexicographically smaller term),
/// scaled to unit L2 norm.
pub fn profile_from_weights(page: NodeId, weights: &BTreeMap<String, f64>) -> PageProfile {
    let mut terms: Vec<(String, f64)> = weights
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(t, &v)| (t.clone(), v))
        .collect();
    terms.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    terms.truncate(PROFILE_TERMS);
    let norm = terms.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        terms.iter_mut().for_each(|(_, v)| *v /= norm);
    }
    PageProfile { page, terms }
}

/// Profile of a person page after voting by its related pages.
pub fn reweight_profile(person: &CorpusPage, related: &[&CorpusPage]) -> PageProfile {
    if person.text_tokens.is_empty() {
        return PageProfile {
            page: person.id,
            terms: Vec::new(),
        };
    }
    let tf = term_frequencies(&person.text_tokens);
    let related_tf: Vec<_> = related
        .iter()
        .filter(|r| !r.text_tokens.is_empty())
        .map(|r| term_frequencies(&r.text_tokens))
        .collect();
    profile_from_weights(person.id, &reweighted_tf(&tf, &related_tf))
}

/// Cosine similarity; 0 when either profile is empty.
pub fn cosine(a: &PageProfile, b: &PageProfile) -> f64 {
    let norm = |p: &PageProfile| p.terms.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let lookup: BTreeMap<&str, f64> = b.terms.iter().map(|(t, v)| (t.as_str(), *v)).collect();
    let dot: f64 = a
        .terms
        .iter()
        .filter_map(|(t, v)| lookup.get(t.as_str()).map(|w| v * w))
        .sum();
    (dot / (na * nb)).clamp(-1.0, 1.0)
}
