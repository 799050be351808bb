//! Two-tier orchestration: fit an anchored model on the coherent official
//! corpus, extract each topic's top keywords, and use them to anchor a
//! second model over the large public corpus so that topic index `g` means
//! the same theme in both models. Labels for both corpora and a run manifest
//! fall out at the end.

use std::collections::BTreeMap;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::corex::{self, CorexModel, DocLabel, FitOptions, SeedSet};
use crate::corpus::{AccountList, DateWindow, Microblog};
use crate::preprocess::{build_vocabulary, tokenize, vectorize, DocTermMatrix, TokenizerConfig, Vocabulary};
use crate::{Error, Result};

/// How tier-two anchor groups are assembled from tier-one output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedMode {
    /// Anchor tier two on the extracted keywords alone.
    ExtractedOnly,
    /// Anchor tier two on the extracted keywords united with the curated
    /// group of the same topic index.
    ExtractedPlusCurated,
}

impl SeedMode {
    pub fn from_name(name: &str) -> Option<SeedMode> {
        match name {
            "extracted_only" => Some(SeedMode::ExtractedOnly),
            "extracted_plus_curated" => Some(SeedMode::ExtractedPlusCurated),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            SeedMode::ExtractedOnly => "extracted_only",
            SeedMode::ExtractedPlusCurated => "extracted_plus_curated",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub n_topics: usize,
    pub n_iter: usize,
    /// Keywords extracted per tier-one topic.
    pub top_k: usize,
    pub seed_mode: SeedMode,
    pub rng_seed: u64,
    pub anchor_strength: f64,
    pub tokenizer: TokenizerConfig,
    pub window: DateWindow,
    pub officials: AccountList,
    pub official_min_df: usize,
    pub public_min_df: usize,
    pub max_vocab: usize,
    pub threads: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_topics: corex::DEFAULT_N_TOPICS,
            n_iter: corex::DEFAULT_N_ITER,
            top_k: 10,
            seed_mode: SeedMode::ExtractedOnly,
            rng_seed: 1,
            anchor_strength: corex::DEFAULT_ANCHOR_STRENGTH,
            tokenizer: TokenizerConfig::default(),
            window: DateWindow::study_default(),
            officials: AccountList::default_tracked(),
            official_min_df: 1,
            public_min_df: 3,
            max_vocab: 20_000,
            threads: 1,
        }
    }
}

/// Preprocessing products of one tier, kept so the caller can persist them
/// and feed the analytics stage.
#[derive(Debug)]
pub struct TierArtifacts {
    pub tokens: Vec<Vec<String>>,
    pub vocab: Vocabulary,
    pub matrix: DocTermMatrix,
}

#[derive(Debug)]
pub struct TieredResult {
    pub official_model: CorexModel,
    pub public_model: CorexModel,
    pub official_labels: Vec<DocLabel>,
    pub public_labels: Vec<DocLabel>,
    /// Group `g` holds the tier-one keywords of topic `g`; always exactly
    /// `n_topics` groups of at most `top_k` words.
    pub extracted_seeds: SeedSet,
    pub official: TierArtifacts,
    pub public: TierArtifacts,
    pub warnings: Vec<String>,
}

/// Builds a seed set whose group `g` is `top_words(model, g, top_k)`.
pub fn extract_seed_keywords(
    model: &CorexModel,
    vocab: &Vocabulary,
    top_k: usize,
    anchor_strength: f64,
) -> Result<SeedSet> {
    let mut groups = Vec::with_capacity(model.n_topics);
    for topic in 0..model.n_topics {
        groups.push(corex::top_words(model, vocab, topic, top_k)?);
    }
    SeedSet::new(groups, anchor_strength)
}

fn preprocess_tier(
    docs: &[Microblog],
    tokenizer: &TokenizerConfig,
    seed_words: &[String],
    min_df: usize,
    max_vocab: usize,
) -> Result<TierArtifacts> {
    // Anchor words must survive tokenization and the vocabulary cut, or
    // anchoring would silently no-op.
    let cfg = tokenizer.exempting(seed_words.iter().map(String::as_str));
    let tokens: Vec<Vec<String>> = docs.iter().map(|d| tokenize(&d.text, &cfg)).collect();
    let ids: Vec<String> = docs.iter().map(|d| d.id.clone()).collect();
    let vocab = build_vocabulary(&tokens, min_df, max_vocab, seed_words)?;
    let matrix = vectorize(&tokens, &ids, &vocab)?;
    Ok(TierArtifacts {
        tokens,
        vocab,
        matrix,
    })
}

/// Runs the full two-tier pipeline over an already partitioned corpus.
pub fn run_two_tier(
    official_docs: &[Microblog],
    public_docs: &[Microblog],
    curated: &SeedSet,
    cfg: &PipelineConfig,
) -> Result<TieredResult> {
    if official_docs.is_empty() || public_docs.is_empty() {
        return Err(Error::config(
            "both the official and the public corpus must be non-empty",
        ));
    }
    if cfg.top_k == 0 {
        return Err(Error::config("top_k must be at least 1"));
    }
    if cfg.n_topics < curated.groups.len() {
        return Err(Error::config(format!(
            "n_topics = {} is smaller than the {} curated seed groups",
            cfg.n_topics,
            curated.groups.len()
        )));
    }
    let mut warnings = Vec::new();

    // Tier one: the coherent official corpus, anchored on curated seeds.
    let curated = curated.clone().with_anchor_strength(cfg.anchor_strength)?;
    let official = preprocess_tier(
        official_docs,
        &cfg.tokenizer,
        &curated.all_words(),
        cfg.official_min_df,
        cfg.max_vocab,
    )?;
    let opts = FitOptions {
        n_topics: cfg.n_topics,
        n_iter: cfg.n_iter,
        rng_seed: cfg.rng_seed,
        threads: cfg.threads,
    };
    let official_model = corex::fit(&official.matrix, &official.vocab, &curated, &opts)?;

    // Tier-one keywords become tier-two anchors, topic index preserved.
    let extracted_seeds =
        extract_seed_keywords(&official_model, &official.vocab, cfg.top_k, cfg.anchor_strength)?;
    let tier_two_groups: Vec<Vec<String>> = match cfg.seed_mode {
        SeedMode::ExtractedOnly => extracted_seeds.groups.clone(),
        SeedMode::ExtractedPlusCurated => extracted_seeds
            .groups
            .iter()
            .enumerate()
            .map(|(g, extracted)| {
                let mut merged = extracted.clone();
                let mut seen: HashSet<String> = merged.iter().cloned().collect();
                if let Some(curated_group) = curated.groups.get(g) {
                    for w in curated_group {
                        if seen.insert(w.clone()) {
                            merged.push(w.clone());
                        }
                    }
                }
                merged
            })
            .collect(),
    };
    for (g, group) in tier_two_groups.iter().enumerate() {
        if group.is_empty() {
            warnings.push(format!(
                "topic {g} extracted no keywords; it is unanchored in the public model"
            ));
        }
    }
    let tier_two_seeds = SeedSet::new(tier_two_groups, cfg.anchor_strength)?;

    // Tier two: the noisy public corpus, anchored on the extracted words.
    let public = preprocess_tier(
        public_docs,
        &cfg.tokenizer,
        &tier_two_seeds.all_words(),
        cfg.public_min_df,
        cfg.max_vocab,
    )?;
    let public_model = corex::fit(&public.matrix, &public.vocab, &tier_two_seeds, &opts)?;

    let official_labels = corex::label(&official_model, &official.matrix)?;
    let public_labels = corex::label(&public_model, &public.matrix)?;

    Ok(TieredResult {
        official_model,
        public_model,
        official_labels,
        public_labels,
        extracted_seeds,
        official,
        public,
        warnings,
    })
}

/// Config echo embedded in the manifest.
#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestConfig {
    pub n_topics: usize,
    pub n_iter: usize,
    pub top_k: usize,
    pub seed_mode: String,
    pub rng_seed: u64,
    pub anchor_strength: f64,
    pub window_start: chrono::NaiveDate,
    pub window_end: chrono::NaiveDate,
    pub officials: Vec<String>,
    pub official_min_df: usize,
    pub public_min_df: usize,
    pub max_vocab: usize,
    pub lowercase: bool,
    pub strip_urls: bool,
    pub strip_mentions: bool,
    pub keep_hashtag_text: bool,
    pub min_token_len: usize,
    pub stopword_count: usize,
    pub threads: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TcSummary {
    pub iterations: usize,
    pub final_tc: f64,
}

/// Everything needed to reproduce and inspect a run. Serialized as JSON with
/// a stable field order; no timestamps, so identical runs produce identical
/// manifests.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ManifestConfig,
    pub curated_seeds: Vec<Vec<String>>,
    pub official_docs: usize,
    pub public_docs: usize,
    pub extracted_seeds: Vec<Vec<String>>,
    pub official_tc: TcSummary,
    pub public_tc: TcSummary,
    pub warnings: Vec<String>,
    /// FNV-1a 64 digests of the input files, keyed by role.
    pub input_hashes: BTreeMap<String, String>,
    /// Files the run wrote, relative to the output directory.
    pub outputs: Vec<String>,
}

pub fn build_manifest(
    cfg: &PipelineConfig,
    curated: &SeedSet,
    result: &TieredResult,
) -> RunManifest {
    RunManifest {
        config: ManifestConfig {
            n_topics: cfg.n_topics,
            n_iter: cfg.n_iter,
            top_k: cfg.top_k,
            seed_mode: cfg.seed_mode.as_str().to_string(),
            rng_seed: cfg.rng_seed,
            anchor_strength: cfg.anchor_strength,
            window_start: cfg.window.start,
            window_end: cfg.window.end,
            officials: cfg.officials.iter().map(str::to_string).collect(),
            official_min_df: cfg.official_min_df,
            public_min_df: cfg.public_min_df,
            max_vocab: cfg.max_vocab,
            lowercase: cfg.tokenizer.lowercase,
            strip_urls: cfg.tokenizer.strip_urls,
            strip_mentions: cfg.tokenizer.strip_mentions,
            keep_hashtag_text: cfg.tokenizer.keep_hashtag_text,
            min_token_len: cfg.tokenizer.min_token_len,
            stopword_count: cfg.tokenizer.stopwords.len(),
            threads: cfg.threads,
        },
        curated_seeds: curated.groups.clone(),
        official_docs: result.official.matrix.n_docs,
        public_docs: result.public.matrix.n_docs,
        extracted_seeds: result.extracted_seeds.groups.clone(),
        official_tc: TcSummary {
            iterations: result.official_model.tc_history.len(),
            final_tc: *result.official_model.tc_history.last().unwrap_or(&0.0),
        },
        public_tc: TcSummary {
            iterations: result.public_model.tc_history.len(),
            final_tc: *result.public_model.tc_history.last().unwrap_or(&0.0),
        },
        warnings: result.warnings.clone(),
        input_hashes: BTreeMap::new(),
        outputs: Vec::new(),
    }
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<RunManifest> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("manifest: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use chrono::NaiveDate;

    /// Planted two-cluster corpus in microblog form. Docs in cluster 0 use
    /// a-words, cluster 1 b-words; every doc carries its cluster's anchor
    /// word so anchors are the most salient cluster terms.
    fn planted_microblogs(n: usize, seed: u64) -> (Vec<Microblog>, Vec<usize>) {
        let mut rng = SplitMix64::new(seed);
        let mut docs = Vec::new();
        let mut truth = Vec::new();
        for d in 0..n {
            let cluster = d % 2;
            let prefix = if cluster == 0 { "aaa" } else { "bbb" };
            let mut words = vec![format!("{prefix}0")];
            for w in 1..=5 {
                if rng.next_f64() < 0.6 {
                    words.push(format!("{prefix}{w}"));
                }
            }
            let day = 1 + (d % 28) as u32;
            docs.push(Microblog {
                id: d.to_string(),
                timestamp: NaiveDate::from_ymd_opt(2020, 4, day)
                    .unwrap()
                    .and_hms_opt(12, 0, 0)
                    .unwrap()
                    .and_utc(),
                author: format!("user{d}"),
                text: words.join(" "),
                mentions: vec![],
            });
            truth.push(cluster);
        }
        (docs, truth)
    }

    fn planted_config(n_topics: usize) -> PipelineConfig {
        PipelineConfig {
            n_topics,
            n_iter: 50,
            top_k: 3,
            rng_seed: 9,
            official_min_df: 1,
            public_min_df: 1,
            ..PipelineConfig::default()
        }
    }

    #[test]
    fn two_tier_planted_recovery() {
        let (docs, truth) = planted_microblogs(300, 5);
        let official: Vec<Microblog> = docs[..60].to_vec();
        let public: Vec<Microblog> = docs[60..].to_vec();
        let curated = SeedSet::new(vec![vec!["aaa0".into()], vec!["bbb0".into()]], 2.0).unwrap();
        let cfg = planted_config(2);
        let result = run_two_tier(&official, &public, &curated, &cfg).unwrap();

        assert_eq!(result.extracted_seeds.groups.len(), 2);
        for group in &result.extracted_seeds.groups {
            assert!(group.len() <= cfg.top_k);
        }
        // Tier-one topic 0 keywords come from the a-cluster vocabulary.
        assert!(result.extracted_seeds.groups[0]
            .iter()
            .all(|w| w.starts_with("aaa")));
        assert!(result.extracted_seeds.groups[1]
            .iter()
            .all(|w| w.starts_with("bbb")));

        // Public top words overlap the official planted vocabulary.
        let public_top =
            corex::top_words(&result.public_model, &result.public.vocab, 0, 5).unwrap();
        let overlap = public_top.iter().filter(|w| w.starts_with("aaa")).count();
        assert!(
            overlap * 2 >= public_top.len(),
            "tier-two topic 0 top words {public_top:?}"
        );

        // Labels line up with the planted clusters.
        let correct = result
            .public_labels
            .iter()
            .zip(&truth[60..])
            .filter(|(l, &t)| l.topic == t)
            .count();
        assert!(
            correct as f64 >= 0.9 * result.public_labels.len() as f64,
            "public label accuracy {correct}/{}",
            result.public_labels.len()
        );
    }

    #[test]
    fn extracted_groups_match_top_words_verbatim() {
        let (docs, _) = planted_microblogs(200, 7);
        let curated = SeedSet::new(vec![vec!["aaa0".into()], vec!["bbb0".into()]], 2.0).unwrap();
        let cfg = planted_config(2);
        let result = run_two_tier(&docs[..40], &docs[40..], &curated, &cfg).unwrap();
        for g in 0..cfg.n_topics {
            let expect =
                corex::top_words(&result.official_model, &result.official.vocab, g, cfg.top_k)
                    .unwrap();
            assert_eq!(result.extracted_seeds.groups[g], expect);
        }
    }

    #[test]
    fn two_tier_is_deterministic() {
        let (docs, _) = planted_microblogs(160, 3);
        let curated = SeedSet::new(vec![vec!["aaa0".into()], vec!["bbb0".into()]], 2.0).unwrap();
        let cfg = planted_config(2);
        let a = run_two_tier(&docs[..40], &docs[40..], &curated, &cfg).unwrap();
        let b = run_two_tier(&docs[..40], &docs[40..], &curated, &cfg).unwrap();
        assert_eq!(a.official_model.to_bytes(), b.official_model.to_bytes());
        assert_eq!(a.public_model.to_bytes(), b.public_model.to_bytes());
        assert_eq!(a.extracted_seeds.groups, b.extracted_seeds.groups);
        assert_eq!(a.public_labels, b.public_labels);
    }

    #[test]
    fn empty_partition_is_fatal() {
        let (docs, _) = planted_microblogs(10, 1);
        let curated = SeedSet::new(vec![], 2.0).unwrap();
        let cfg = planted_config(2);
        assert!(run_two_tier(&[], &docs, &curated, &cfg).is_err());
        assert!(run_two_tier(&docs, &[], &curated, &cfg).is_err());
    }

    #[test]
    fn seed_mode_union_includes_curated_words() {
        let (docs, _) = planted_microblogs(200, 11);
        // "zzz" never occurs; union mode must still carry it into tier two.
        let curated =
            SeedSet::new(vec![vec!["aaa0".into(), "zzz".into()], vec!["bbb0".into()]], 2.0)
                .unwrap();
        let mut cfg = planted_config(2);
        cfg.seed_mode = SeedMode::ExtractedPlusCurated;
        let result = run_two_tier(&docs[..40], &docs[40..], &curated, &cfg).unwrap();
        // The public vocabulary force-includes the curated word, so the fit
        // accepted it as an anchor.
        assert!(result.public.vocab.column("zzz").is_some());
    }

    #[test]
    fn manifest_echoes_defaults() {
        let cfg = PipelineConfig::default();
        assert_eq!(cfg.n_topics, 20);
        assert_eq!(cfg.n_iter, 100);
        assert_eq!(cfg.top_k, 10);
        assert_eq!(cfg.window.start, NaiveDate::from_ymd_opt(2020, 3, 1).unwrap());
        assert_eq!(cfg.window.end, NaiveDate::from_ymd_opt(2020, 5, 17).unwrap());
        let curated = SeedSet::default_curated();
        assert_eq!(curated.groups.len(), 13);
    }

    #[test]
    fn manifest_roundtrip() {
        let (docs, _) = planted_microblogs(120, 2);
        let curated = SeedSet::new(vec![vec!["aaa0".into()], vec!["bbb0".into()]], 2.0).unwrap();
        let cfg = planted_config(2);
        let result = run_two_tier(&docs[..30], &docs[30..], &curated, &cfg).unwrap();
        let manifest = build_manifest(&cfg, &curated, &result);
        let back = RunManifest::from_json(&manifest.to_json()).unwrap();
        assert_eq!(back.config.n_topics, cfg.n_topics);
        assert_eq!(back.extracted_seeds, result.extracted_seeds.groups);
        assert_eq!(back.official_docs, 30);
    }
}
