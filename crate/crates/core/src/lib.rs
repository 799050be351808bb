//! Two-tier anchored topic modeling for microblog corpora.
//!
//! The library covers the full pipeline: ingest raw post dumps, partition
//! them into an "official" corpus (posts authored by tracked accounts) and a
//! "public" corpus (posts referencing those accounts), tokenize and vectorize
//! both, fit an anchored CorEx topic model on the small official corpus,
//! propagate its top keywords as anchors into a second model over the large
//! public corpus, label every document, and derive weekly topic timelines and
//! cross-model topic-similarity heatmaps.
//!
//! Modules map onto pipeline stages:
//! - [`corpus`] — record parsing (JSONL/CSV), partitioning, exploratory stats
//! - [`preprocess`] — tokenization, vocabulary, sparse binary doc-term matrix
//! - [`corex`] — the anchored CorEx model: fit, posterior, labeling, top words
//! - [`pipeline`] — the two-tier orchestration and run manifest
//! - [`analytics`] — timelines, similarity heatmaps, power-law slope
//! - [`svg`] — dependency-free SVG charts for the analytics outputs
//! - [`config`] — flat key=value run-configuration files

pub mod analytics;
pub mod config;
pub mod corex;
pub mod corpus;
pub mod pipeline;
pub mod preprocess;
pub mod svg;

use std::fmt;
use std::path::PathBuf;

/// Library-wide error type. Variants map onto process exit codes in the CLI:
/// I/O failures exit 1, configuration/input problems exit 2, violated
/// internal invariants exit 3.
#[derive(Debug)]
pub enum Error {
    /// Filesystem or read/write failure, with the offending path when known.
    Io {
        path: Option<PathBuf>,
        source: std::io::Error,
    },
    /// Bad configuration or unusable input (missing seed word, empty
    /// vocabulary, malformed seeds file, ...).
    Config(String),
    /// An internal invariant did not hold (misaligned inputs, fingerprint
    /// mismatch, unfitted model).
    Internal(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: Some(path.into()),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Error::Internal(msg.into())
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path: Some(p), source } => write!(f, "{}: {}", p.display(), source),
            Error::Io { path: None, source } => write!(f, "{source}"),
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(source: std::io::Error) -> Self {
        Error::Io { path: None, source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub mod fingerprint {
    //! FNV-1a hashing used to bind models to vocabularies and to record
    //! input-file digests in run manifests.

    const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

    /// 64-bit FNV-1a over a byte slice.
    pub fn fnv1a64(bytes: &[u8]) -> u64 {
        let mut hash = FNV_OFFSET;
        for &b in bytes {
            hash ^= b as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        hash
    }

    /// Hash a sequence of strings with a separator that cannot occur inside
    /// the items, so `["ab","c"]` and `["a","bc"]` hash differently.
    pub fn fnv1a64_lines<I, S>(lines: I) -> u64
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut hash = FNV_OFFSET;
        for line in lines {
            for &b in line.as_ref().as_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(FNV_PRIME);
            }
            hash ^= b'\n' as u64;
            hash = hash.wrapping_mul(FNV_PRIME);
        }
        hash
    }

}

pub mod rng {
    //! Minimal deterministic PRNG (SplitMix64). The fit initialization and
    //! synthetic-corpus generators need bit-reproducible streams across
    //! platforms, which this guarantees with no dependencies.

    #[derive(Debug, Clone)]
    pub struct SplitMix64 {
        state: u64,
    }

    impl SplitMix64 {
        pub fn new(seed: u64) -> Self {
            SplitMix64 { state: seed }
        }

        pub fn next_u64(&mut self) -> u64 {
            self.state = self.state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = self.state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        }

        /// Uniform in [0, 1) with 53 bits of precision.
        pub fn next_f64(&mut self) -> f64 {
            (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
        }

        /// Uniform integer in [0, n). `n` must be positive.
        pub fn next_below(&mut self, n: usize) -> usize {
            debug_assert!(n > 0);
            (self.next_f64() * n as f64) as usize % n
        }
    }

    #[cfg(test)]
    mod tests {
        use super::*;

        #[test]
        fn deterministic_stream() {
            let mut a = SplitMix64::new(42);
            let mut b = SplitMix64::new(42);
            for _ in 0..100 {
                assert_eq!(a.next_u64(), b.next_u64());
            }
        }

        #[test]
        fn unit_interval() {
            let mut r = SplitMix64::new(7);
            for _ in 0..1000 {
                let x = r.next_f64();
                assert!((0.0..1.0).contains(&x));
            }
        }
    }
}
