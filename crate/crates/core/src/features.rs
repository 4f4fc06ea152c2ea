//! Hashed bag-of-n-grams features.

use alloc::string::String;
use alloc::vec::Vec;
use core::hash::Hasher;

use fnv::FnvHasher;

pub const DEFAULT_DIM: usize = 1 << 14;

/// Sparse view of a fixed-dimension feature vector: sorted, distinct indices
/// with finite values.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    dim: usize,
    entries: Vec<(u32, f64)>,
}

impl FeatureVector {
    /// Builds a vector from unsorted `(index, value)` pairs, summing repeats.
    pub fn from_pairs(dim: usize, mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            assert!((i as usize) < dim, "feature index {i} out of range {dim}");
            match entries.last_mut() {
                Some((j, acc)) if *j == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        Self { dim, entries }
    }

    pub fn dense(values: &[f64]) -> Self {
        let entries = values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .collect();
        Self {
            dim: values.len(),
            entries,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.dim];
        for &(i, v) in &self.entries {
            out[i as usize] = v;
        }
        out
    }

    fn normalize_l2(&mut self) {
        let norm = libm::sqrt(self.entries.iter().map(|(_, v)| v * v).sum::<f64>());
        if norm > 0.0 {
            for (_, v) in &mut self.entries {
                *v /= norm;
            }
        }
    }
}

/// Lowercased whitespace tokens, unigrams and bigrams, hashed with FNV-1a
/// into `dim` buckets. Counts are L2-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureHasher {
    pub dim: usize,
}

impl Default for FeatureHasher {
    fn default() -> Self {
        Self { dim: DEFAULT_DIM }
    }
}

impl FeatureHasher {
    pub fn new(dim: usize) -> Self {
        assert!(dim > 0 && dim <= u32::MAX as usize);
        Self { dim }
    }

    fn bucket(&self, parts: &[&str]) -> u32 {
        let mut h = FnvHasher::default();
        for (i, p) in parts.iter().enumerate() {
            if i > 0 {
                h.write_u8(b' ');
            }
            h.write(p.as_bytes());
        }
        (h.finish() % self.dim as u64) as u32
    }

    /// Features of a claim-post pair: tokens of the claim followed by the
    /// tokens of the post.
    pub fn transform(&self, claim: &str, post: &str) -> FeatureVector {
        let claim = claim.to_lowercase();
        let post = post.to_lowercase();
        let tokens: Vec<&str> = claim.split_whitespace().chain(post.split_whitespace()).collect();
        self.transform_tokens(&tokens)
    }

    pub fn transform_text(&self, text: &str) -> FeatureVector {
        let lower: String = text.to_lowercase();
        let tokens: Vec<&str> = lower.split_whitespace().collect();
        self.transform_tokens(&tokens)
    }

    fn transform_tokens(&self, tokens: &[&str]) -> FeatureVector {
        let mut pairs: Vec<(u32, f64)> = tokens.iter().map(|t| (self.bucket(&[t]), 1.0)).collect();
        pairs.extend(tokens.windows(2).map(|w| (self.bucket(w), 1.0)));
        let mut v = FeatureVector::from_pairs(self.dim, pairs);
        v.normalize_l2();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashing_is_case_insensitive_and_normalized() {
        let h = FeatureHasher::default();
        let a = h.transform("Claim TEXT", "a post");
        let b = h.transform("claim text", "A Post");
        assert_eq!(a, b);
        assert_eq!(a.dim(), DEFAULT_DIM);
        let norm: f64 = a.entries().iter().map(|(_, v)| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);
        // 4 unigrams + 3 bigrams, barring collisions
        assert_eq!(a.entries().len(), 7);
    }

    #[test]
    fn empty_text_is_zero_vector() {
        let v = FeatureHasher::new(16).transform("", "  ");
        assert!(v.entries().is_empty());
    }

    #[test]
    fn repeated_indices_sum() {
        let v = FeatureVector::from_pairs(8, alloc::vec![(3, 1.0), (1, 2.0), (3, 0.5)]);
        assert_eq!(v.entries(), [(1, 2.0), (3, 1.5)]);
        assert_eq!(v.to_dense()[3], 1.5);
    }
}
