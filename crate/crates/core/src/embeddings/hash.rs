use super::{EmbeddingProvider, EmbeddingVector, Pooling};
use crate::error::{Error, Result};
use crate::util::{fnv1a_str, splitmix64, unit_f64};

/// Deterministic subword-hashing embedder.
///
/// Each whitespace token is represented by the sum of pseudo-random vectors
/// of its character n-grams (with `<`/`>` boundary marks), so texts sharing
/// most of their tokens or stems land close together. Token vectors are
/// pooled per [`Pooling`]. No model weights are needed.
#[derive(Debug, Clone)]
pub struct HashEmbedder {
    name: String,
    dim: usize,
    pooling: Pooling,
    seed: u64,
    min_n: usize,
    max_n: usize,
}

impl HashEmbedder {
    pub fn new(dim: usize, pooling: Pooling, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("embedding dimension must be positive"));
        }
        Ok(HashEmbedder {
            name: format!("hash-ngram-d{dim}-s{seed}"),
            dim,
            pooling,
            seed,
            min_n: 3,
            max_n: 5,
        })
    }

    fn add_feature(&self, feature: &str, acc: &mut [f64]) {
        let mut h = fnv1a_str(self.seed, feature);
        for slot in acc.iter_mut() {
            h = splitmix64(h);
            *slot += 2.0 * unit_f64(h) - 1.0;
        }
    }

    fn token_vector(&self, token: &str) -> Vec<f64> {
        let mut acc = vec![0.0; self.dim];
        let chars: Vec<char> = std::iter::once('<')
            .chain(token.chars())
            .chain(std::iter::once('>'))
            .collect();
        self.add_feature(token, &mut acc);
        for n in self.min_n..=self.max_n {
            for w in chars.windows(n) {
                let gram: String = w.iter().collect();
                self.add_feature(&gram, &mut acc);
            }
        }
        acc
    }
}

impl EmbeddingProvider for HashEmbedder {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn pooling(&self) -> Pooling {
        self.pooling
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        let mut tokens = text.split_whitespace();
        let first = tokens
            .next()
            .ok_or_else(|| Error::validation("cannot embed empty text"))?;
        let pooled = match self.pooling {
            Pooling::FirstToken => self.token_vector(first),
            Pooling::Mean => {
                let mut sum = self.token_vector(first);
                let mut n = 1usize;
                for t in tokens {
                    for (s, x) in sum.iter_mut().zip(self.token_vector(t)) {
                        *s += x;
                    }
                    n += 1;
                }
                sum.iter_mut().for_each(|s| *s /= n as f64);
                sum
            }
        };
        EmbeddingVector::new(pooled)
    }

    fn reentrant(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::{cosine_similarity, embed};

    #[test]
    fn deterministic_and_shaped() {
        let e = HashEmbedder::new(4, Pooling::Mean, 0).unwrap();
        let a = embed(&e, "abc").unwrap();
        assert_eq!(a, embed(&e, "abc").unwrap());
        assert_eq!(a.dim(), 4);
    }

    #[test]
    fn similar_texts_are_closer() {
        let e = HashEmbedder::new(128, Pooling::Mean, 7).unwrap();
        let base = embed(&e, "यो नेता देशद्रोही हो उसलाई बाहिर निकाल").unwrap();
        let near = embed(&e, "यो नेता देशद्रोही हो उसलाई निकाल").unwrap();
        let far = embed(&e, "आज मौसम राम्रो छ").unwrap();
        assert!(cosine_similarity(&base, &near).unwrap() > cosine_similarity(&base, &far).unwrap());
    }

    #[test]
    fn first_token_pooling_ignores_tail() {
        let e = HashEmbedder::new(16, Pooling::FirstToken, 1).unwrap();
        assert_eq!(embed(&e, "नमस्ते दुनिया").unwrap(), embed(&e, "नमस्ते संसार").unwrap());
        let m = HashEmbedder::new(16, Pooling::Mean, 1).unwrap();
        assert_ne!(embed(&m, "नमस्ते दुनिया").unwrap(), embed(&m, "नमस्ते संसार").unwrap());
    }

    #[test]
    fn empty_text_rejected() {
        let e = HashEmbedder::new(4, Pooling::Mean, 0).unwrap();
        assert!(embed(&e, "   ").is_err());
        assert!(e.embed("").is_err());
        assert!(HashEmbedder::new(0, Pooling::Mean, 0).is_err());
    }
}
