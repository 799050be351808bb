//! Tokenization, vocabulary construction and the sparse binary
//! document-term matrix the topic model consumes.
//!
//! Counts are binarized on purpose: the model operates on binary
//! word-presence variables, so only incidence matters. Documents that end up
//! empty keep their row, which keeps label lists aligned with the corpus.
//!
//! Sidecar formats (both line-oriented UTF-8):
//!
//! - vocabulary: header `vocab 1`, then one `word<TAB>doc_freq` line per
//!   word in column order;
//! - matrix: header `dtm 1`, a dimension line `n_docs n_words
//!   vocab_fingerprint`, then one `doc_id<TAB>c1 c2 ...` line per document
//!   with sorted column ids (the column list is empty for empty documents).

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use crate::fingerprint;
use crate::{Error, Result};

const STOPWORDS_EN: &str = include_str!("../data/stopwords_en.txt");

/// The shipped English stopword list.
pub fn default_stopwords() -> BTreeSet<String> {
    STOPWORDS_EN
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    /// Keep hashtag text with the `#` removed; when off, hashtag chunks are
    /// dropped entirely.
    pub keep_hashtag_text: bool,
    pub min_token_len: usize,
    pub stopwords: BTreeSet<String>,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            strip_urls: true,
            strip_mentions: true,
            keep_hashtag_text: true,
            min_token_len: 2,
            stopwords: default_stopwords(),
        }
    }
}

impl TokenizerConfig {
    /// Copy of this config whose stopword list does not shadow any of the
    /// given words. Anchor words must survive tokenization or anchoring
    /// silently no-ops.
    pub fn exempting<'a, I: IntoIterator<Item = &'a str>>(&self, words: I) -> TokenizerConfig {
        let mut cfg = self.clone();
        for w in words {
            cfg.stopwords.remove(&w.to_lowercase());
        }
        cfg
    }
}

fn is_url_chunk(chunk: &str) -> bool {
    let lower = chunk.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

/// Deterministic tokenizer. Transform order: URL strip, mention strip,
/// hashtag unwrap, lowercase, split on non-alphanumerics (apostrophes kept
/// inside words), length filter, stopword filter.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if cfg.strip_urls && is_url_chunk(chunk) {
            continue;
        }
        if cfg.strip_mentions && chunk.starts_with('@') {
            continue;
        }
        let chunk = if chunk.starts_with('#') {
            if !cfg.keep_hashtag_text {
                continue;
            }
            chunk.trim_start_matches('#')
        } else {
            chunk
        };
        let chunk = if cfg.lowercase {
            chunk.to_lowercase()
        } else {
            chunk.to_string()
        };
        for raw in chunk.split(|c: char| !c.is_alphanumeric() && c != '\'') {
            let token = raw.trim_matches('\'');
            if token.chars().count() < cfg.min_token_len {
                continue;
            }
            if cfg.stopwords.contains(token) {
                continue;
            }
            tokens.push(token.to_string());
        }
    }
    tokens
}

/// Word-to-column mapping with document frequencies, ordered by descending
/// document frequency (ties lexicographic).
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    pub words: Vec<String>,
    pub index: HashMap<String, usize>,
    /// Document frequency per column, aligned with `words`.
    pub doc_freq: Vec<usize>,
}

impl Vocabulary {
    fn from_ordered(words: Vec<String>, doc_freq: Vec<usize>) -> Vocabulary {
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary {
            words,
            index,
            doc_freq,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn column(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Hash binding a model or matrix to this vocabulary's exact content and
    /// column order.
    pub fn fingerprint(&self) -> u64 {
        fingerprint::fnv1a64_lines(&self.words)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("vocab 1\n");
        for (w, df) in self.words.iter().zip(&self.doc_freq) {
            out.push_str(w);
            out.push('\t');
            out.push_str(&df.to_string());
            out.push('\n');
        }
        out
    }

    /// Parse the sidecar format. Rejects duplicate words and malformed rows.
    pub fn from_text(text: &str) -> Result<Vocabulary> {
        let mut lines = text.lines();
        match lines.next() {
            Some("vocab 1") => {}
            _ => return Err(Error::config("vocabulary file: missing 'vocab 1' header")),
        }
        let mut words = Vec::new();
        let mut doc_freq = Vec::new();
        let mut seen = HashSet::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (word, df) = line
                .split_once('\t')
                .ok_or_else(|| Error::config(format!("vocabulary file: line {} has no tab", n + 2)))?;
            if word.is_empty() {
                return Err(Error::config(format!("vocabulary file: empty word on line {}", n + 2)));
            }
            let df: usize = df
                .parse()
                .map_err(|_| Error::config(format!("vocabulary file: bad doc_freq on line {}", n + 2)))?;
            if !seen.insert(word.to_string()) {
                return Err(Error::config(format!("vocabulary file: duplicate word {word:?}")));
            }
            words.push(word.to_string());
            doc_freq.push(df);
        }
        if words.is_empty() {
            return Err(Error::config("vocabulary file: no words"));
        }
        Ok(Vocabulary::from_ordered(words, doc_freq))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Vocabulary::from_text(&text)
    }
}

/// Builds the vocabulary from tokenized documents: words with document
/// frequency at least `min_df`, capped at `max_vocab` by descending
/// frequency (ties lexicographic). Words in `force_include` bypass the
/// `min_df` filter and the cap and are always present.
pub fn build_vocabulary(
    docs: &[Vec<String>],
    min_df: usize,
    max_vocab: usize,
    force_include: &[String],
) -> Result<Vocabulary> {
    if min_df < 1 || max_vocab < 1 {
        return Err(Error::config("min_df and max_vocab must be at least 1"));
    }
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    let mut seen_in_doc: HashSet<&str> = HashSet::new();
    for doc in docs {
        seen_in_doc.clear();
        for token in doc {
            if seen_in_doc.insert(token) {
                *df.entry(token).or_insert(0) += 1;
            }
        }
    }
    let forced: BTreeSet<String> = force_include.iter().map(|w| w.to_lowercase()).collect();
    let mut selected: Vec<(String, usize)> = forced
        .iter()
        .map(|w| (w.clone(), df.get(w.as_str()).copied().unwrap_or(0)))
        .collect();
    let mut candidates: Vec<(&str, usize)> = df
        .iter()
        .filter(|(w, &c)| c >= min_df && !forced.contains(**w))
        .map(|(&w, &c)| (w, c))
        .collect();
    // BTreeMap iteration is lexicographic, so this stable sort leaves ties
    // in lexicographic order.
    candidates.sort_by_key(|c| std::cmp::Reverse(c.1));
    for (w, c) in candidates {
        if selected.len() >= max_vocab {
            break;
        }
        selected.push((w.to_string(), c));
    }
    if selected.is_empty() {
        return Err(Error::config(
            "vocabulary is empty: no word meets min_df and nothing is force-included",
        ));
    }
    selected.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let (words, doc_freq) = selected.into_iter().unzip();
    Ok(Vocabulary::from_ordered(words, doc_freq))
}

/// Sparse binary document-term incidence matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocTermMatrix {
    pub n_docs: usize,
    pub n_words: usize,
    /// Sorted, deduplicated present-word column ids per document.
    pub rows: Vec<Vec<u32>>,
    /// Source document ids aligned with `rows`.
    pub doc_ids: Vec<String>,
    /// Fingerprint of the vocabulary the columns refer to.
    pub vocab_fingerprint: u64,
}

impl DocTermMatrix {
    /// Total number of set bits.
    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Document frequency per column, recomputed from the rows.
    pub fn column_doc_freq(&self) -> Vec<usize> {
        let mut df = vec![0usize; self.n_words];
        for row in &self.rows {
            for &c in row {
                df[c as usize] += 1;
            }
        }
        df
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("dtm 1\n");
        out.push_str(&format!(
            "{} {} {}\n",
            self.n_docs, self.n_words, self.vocab_fingerprint
        ));
        for (id, row) in self.doc_ids.iter().zip(&self.rows) {
            out.push_str(id);
            out.push('\t');
            let cols: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            out.push_str(&cols.join(" "));
            out.push('\n');
        }
        out
    }

    /// Parse the sidecar format, validating dimensions, column bounds and
    /// per-row sortedness.
    pub fn from_text(text: &str) -> Result<DocTermMatrix> {
        let mut lines = text.lines();
        match lines.next() {
            Some("dtm 1") => {}
            _ => return Err(Error::config("matrix file: missing 'dtm 1' header")),
        }
        let dims = lines
            .next()
            .ok_or_else(|| Error::config("matrix file: missing dimension line"))?;
        let mut parts = dims.split_whitespace();
        let n_docs: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("matrix file: bad n_docs"))?;
        let n_words: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("matrix file: bad n_words"))?;
        let vocab_fingerprint: u64 = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("matrix file: bad vocabulary fingerprint"))?;
        let mut rows = Vec::new();
        let mut doc_ids = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (id, cols) = line
                .split_once('\t')
                .ok_or_else(|| Error::config(format!("matrix file: row {} has no tab", n + 1)))?;
            if id.is_empty() {
                return Err(Error::config(format!("matrix file: empty doc id on row {}", n + 1)));
            }
            let mut row: Vec<u32> = Vec::new();
            for tok in cols.split_whitespace() {
                let c: u32 = tok
                    .parse()
                    .map_err(|_| Error::config(format!("matrix file: bad column id on row {}", n + 1)))?;
                if (c as usize) >= n_words {
                    return Err(Error::config(format!(
                        "matrix file: column {c} out of bounds on row {}",
                        n + 1
                    )));
                }
                if let Some(&last) = row.last() {
                    if c <= last {
                        return Err(Error::config(format!(
                            "matrix file: columns not strictly increasing on row {}",
                            n + 1
                        )));
                    }
                }
                row.push(c);
            }
            rows.push(row);
            doc_ids.push(id.to_string());
        }
        if rows.len() != n_docs {
            return Err(Error::config(format!(
                "matrix file: header says {n_docs} docs, found {}",
                rows.len()
            )));
        }
        Ok(DocTermMatrix {
            n_docs,
            n_words,
            rows,
            doc_ids,
            vocab_fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<DocTermMatrix> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DocTermMatrix::from_text(&text)
    }
}

/// Vectorizes tokenized documents against a vocabulary. Row `i` contains
/// column `j` iff word `j` occurs in document `i`; out-of-vocabulary tokens
/// are ignored and empty rows are retained.
pub fn vectorize(docs: &[Vec<String>], doc_ids: &[String], vocab: &Vocabulary) -> Result<DocTermMatrix> {
    if vocab.is_empty() {
        return Err(Error::config("cannot vectorize with an empty vocabulary"));
    }
    if docs.len() != doc_ids.len() {
        return Err(Error::internal(format!(
            "vectorize: {} documents but {} ids",
            docs.len(),
            doc_ids.len()
        )));
    }
    let mut rows = Vec::with_capacity(docs.len());
    for doc in docs {
        let mut row: Vec<u32> = doc
            .iter()
            .filter_map(|t| vocab.column(t).map(|c| c as u32))
            .collect();
        row.sort_unstable();
        row.dedup();
        rows.push(row);
    }
    Ok(DocTermMatrix {
        n_docs: docs.len(),
        n_words: vocab.len(),
        rows,
        doc_ids: doc_ids.to_vec(),
        vocab_fingerprint: vocab.fingerprint(),
    })
}
