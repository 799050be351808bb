//! Anchored CorEx topic model over binary word-presence variables.
//!
//! The model learns `m` latent binary factors `y_j` that maximize a lower
//! bound on the total correlation the factors explain among the observed
//! word variables. Each word `i` is attached to topics through connection
//! weights `alpha[j][i]`; anchor words are pinned to their designated topic
//! with a fixed weight `anchor_strength >= 1`, which steers the otherwise
//! unsupervised factor discovery.
//!
//! Training alternates, per iteration:
//!
//! 1. per-document posteriors from the current parameters, where a
//!    document's unnormalized log-score for state `y` of topic `j` is
//!    `log p(y_j = y) + sum over words i of
//!    alpha[j][i] * (log p(x_i | y_j = y) - log p(x_i))`
//!    over the document's word states (an empty document carries no
//!    evidence at all and sits exactly at the prior);
//! 2. marginal and prior re-estimation from posterior-weighted soft counts
//!    with additive smoothing;
//! 3. mutual informations `I(X_i; Y_j)` from the same smoothed soft counts;
//! 4. soft-competition update of the non-anchor weights, each word
//!    upweighting its highest-MI topic, anchors re-clamped;
//! 5. the total-correlation lower bound, the per-document average of the
//!    posterior log-normalizer summed over topics, appended to the history.
//!
//! Everything is computed with fixed-order reductions, so a `(matrix, seeds,
//! options)` triple determines the fitted model bit-for-bit regardless of
//! the thread count.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::preprocess::{DocTermMatrix, Vocabulary};
use crate::rng::SplitMix64;
use crate::{Error, Result};

pub const DEFAULT_ANCHOR_STRENGTH: f64 = 2.0;
pub const DEFAULT_N_TOPICS: usize = 20;
pub const DEFAULT_N_ITER: usize = 100;

/// Additive smoothing applied to every soft-count table.
const SMOOTHING: f64 = 1e-3;
/// Training stops early once the TC bound moves less than this.
const TC_CONVERGENCE_TOL: f64 = 1e-6;
/// Mixing rate of the soft-competition weight update.
const ALPHA_LAMBDA: f64 = 0.5;
/// Sharpness of the soft-max competition across topics.
const ALPHA_SHARPNESS: f64 = 20.0;
/// Floor/ceiling keeping initial marginals away from 0 and 1.
const PROB_FLOOR: f64 = 1e-4;
/// Connection weights below this are rounded to zero.
const ALPHA_FLOOR: f64 = 1e-4;
/// Relative amplitude of the symmetric marginal perturbation at init. Kept
/// small so a structureless corpus starts at a TC bound that is already
/// within tolerance of zero.
const INIT_PERTURB: f64 = 1e-4;
/// Initial presence-odds boost of an anchor word in its designated topic.
/// This fixes the orientation "topic on = anchor present" from the first
/// iteration, which hard labels downstream rely on.
const ANCHOR_INIT_BOOST: f64 = 3.0;
/// Documents per fixed work unit of the parallel posterior pass. Fixed
/// chunking plus in-order accumulation keeps results independent of the
/// worker count.
const DOC_CHUNK: usize = 4096;

const DEFAULT_SEEDS: &str = include_str!("../data/seeds_default.txt");

/// Ordered anchor-word groups; group `g` anchors topic `g`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedSet {
    pub groups: Vec<Vec<String>>,
    pub anchor_strength: f64,
}

impl SeedSet {
    /// Lowercases words, removes duplicates within a group (keeping first
    /// occurrence) and validates the anchor strength.
    pub fn new(groups: Vec<Vec<String>>, anchor_strength: f64) -> Result<SeedSet> {
        if !(anchor_strength.is_finite() && anchor_strength >= 1.0) {
            return Err(Error::config(format!(
                "anchor_strength must be a finite number >= 1, got {anchor_strength}"
            )));
        }
        let mut clean_groups = Vec::with_capacity(groups.len());
        for group in groups {
            let mut seen = HashSet::new();
            let mut clean = Vec::new();
            for word in group {
                let word = word.trim().to_lowercase();
                if word.is_empty() {
                    return Err(Error::config("seed groups cannot contain empty words"));
                }
                if seen.insert(word.clone()) {
                    clean.push(word);
                }
            }
            clean_groups.push(clean);
        }
        Ok(SeedSet {
            groups: clean_groups,
            anchor_strength,
        })
    }

    /// Parses the seeds file format: one topic per line, comma-separated
    /// words; `#` starts a comment, blank lines are skipped, and a line
    /// containing only `-` is an explicitly empty group.
    pub fn parse(text: &str) -> Result<SeedSet> {
        let mut groups = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if line == "-" {
                groups.push(Vec::new());
                continue;
            }
            let words: Vec<String> = line
                .split(',')
                .map(|w| w.trim().to_string())
                .filter(|w| !w.is_empty())
                .collect();
            if words.is_empty() {
                return Err(Error::config(format!(
                    "seeds file: line {} contains separators but no words",
                    n + 1
                )));
            }
            groups.push(words);
        }
        SeedSet::new(groups, DEFAULT_ANCHOR_STRENGTH)
    }

    pub fn load(path: &Path) -> Result<SeedSet> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SeedSet::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for group in &self.groups {
            if group.is_empty() {
                out.push('-');
            } else {
                out.push_str(&group.join(","));
            }
            out.push('\n');
        }
        out
    }

    /// The 13 curated default groups shipped with the library.
    pub fn default_curated() -> SeedSet {
        SeedSet::parse(DEFAULT_SEEDS).expect("shipped default seeds parse")
    }

    pub fn with_anchor_strength(mut self, anchor_strength: f64) -> Result<SeedSet> {
        if !(anchor_strength.is_finite() && anchor_strength >= 1.0) {
            return Err(Error::config(format!(
                "anchor_strength must be a finite number >= 1, got {anchor_strength}"
            )));
        }
        self.anchor_strength = anchor_strength;
        Ok(self)
    }

    /// All distinct seed words across groups, in first-occurrence order.
    pub fn all_words(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for group in &self.groups {
            for w in group {
                if seen.insert(w.clone()) {
                    out.push(w.clone());
                }
            }
        }
        out
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct FitOptions {
    pub n_topics: usize,
    pub n_iter: usize,
    pub rng_seed: u64,
    /// Degree-of-parallelism hint for the posterior pass; results are
    /// bit-identical for any value.
    pub threads: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            n_topics: DEFAULT_N_TOPICS,
            n_iter: DEFAULT_N_ITER,
            rng_seed: 1,
            threads: 1,
        }
    }
}

/// Fitted anchored CorEx model.
#[derive(Debug, Clone, PartialEq)]
pub struct CorexModel {
    pub n_topics: usize,
    pub n_words: usize,
    pub anchor_strength: f64,
    /// Word-topic connection weights; anchored pairs sit at
    /// `anchor_strength` exactly, all others in `[0, 1]`.
    pub alpha: Vec<Vec<f64>>,
    /// Mutual information `I(X_i; Y_j)` per `[topic][word]`.
    pub mi: Vec<Vec<f64>>,
    /// Smoothed `log p(y_j = 1)` per topic.
    pub log_py1: Vec<f64>,
    /// Smoothed `log p(y_j = 0)` per topic.
    pub log_py0: Vec<f64>,
    /// `log p(x_i = x | y_j = y)` as `[topic][word][y][x]`.
    pub log_marginals: Vec<Vec<[[f64; 2]; 2]>>,
    /// Anchored word columns per topic, sorted.
    pub anchors: Vec<Vec<usize>>,
    /// Total-correlation lower bound per completed iteration.
    pub tc_history: Vec<f64>,
    /// Fingerprint of the vocabulary the columns refer to.
    pub vocab_fingerprint: u64,
}

fn logsumexp2(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Per-(topic, word) evidence weights for the posterior computation, derived
/// from the current parameters. A document's unnormalized log-score is
/// `log p(y) + sum over all words i of alpha[j][i] * (log p(x_i | y) -
/// log p(x_i))` with the word marginal taken from the model's own mixture
/// `sum_y p(y_j = y) p(x_i | y_j = y)`. The sum over absent words is folded
/// into a per-topic baseline `b`, and each present word contributes the
/// presence-minus-absence difference `d`, so scoring costs O(present words).
/// Empty documents are special-cased: no words means no evidence, and the
/// posterior is the prior.
struct Activation {
    n_topics: usize,
    log_py0: Vec<f64>,
    log_py1: Vec<f64>,
    /// All-absent baseline per topic and state.
    b0: Vec<f64>,
    b1: Vec<f64>,
    /// Present-word increments per `[topic][word]` and state.
    d0: Vec<Vec<f64>>,
    d1: Vec<Vec<f64>>,
}

impl Activation {
    fn new(
        alpha: &[Vec<f64>],
        log_marginals: &[Vec<[[f64; 2]; 2]>],
        log_py0: &[f64],
        log_py1: &[f64],
    ) -> Activation {
        let n_topics = alpha.len();
        let n_words = if n_topics > 0 { alpha[0].len() } else { 0 };
        let mut b0 = vec![0.0; n_topics];
        let mut b1 = vec![0.0; n_topics];
        let mut d0 = vec![vec![0.0; n_words]; n_topics];
        let mut d1 = vec![vec![0.0; n_words]; n_topics];
        for j in 0..n_topics {
            for i in 0..n_words {
                let lm = &log_marginals[j][i];
                let log_px1 = logsumexp2(log_py0[j] + lm[0][1], log_py1[j] + lm[1][1]);
                let log_px0 = logsumexp2(log_py0[j] + lm[0][0], log_py1[j] + lm[1][0]);
                let a = alpha[j][i];
                let absent0 = a * (lm[0][0] - log_px0);
                let absent1 = a * (lm[1][0] - log_px0);
                b0[j] += absent0;
                b1[j] += absent1;
                d0[j][i] = a * (lm[0][1] - log_px1) - absent0;
                d1[j][i] = a * (lm[1][1] - log_px1) - absent1;
            }
        }
        Activation {
            n_topics,
            log_py0: log_py0.to_vec(),
            log_py1: log_py1.to_vec(),
            b0,
            b1,
            d0,
            d1,
        }
    }

    fn from_model(model: &CorexModel) -> Activation {
        Activation::new(
            &model.alpha,
            &model.log_marginals,
            &model.log_py0,
            &model.log_py1,
        )
    }

    fn doc_scores(&self, row: &[u32], j: usize) -> (f64, f64) {
        if row.is_empty() {
            return (self.log_py0[j], self.log_py1[j]);
        }
        let mut s0 = self.log_py0[j] + self.b0[j];
        let mut s1 = self.log_py1[j] + self.b1[j];
        let d0 = &self.d0[j];
        let d1 = &self.d1[j];
        for &c in row {
            s0 += d0[c as usize];
            s1 += d1[c as usize];
        }
        (s0, s1)
    }

    /// Writes `(q1, q0, log_z)` per topic for one document into `out`,
    /// which must hold `3 * n_topics` values.
    fn doc_posterior(&self, row: &[u32], out: &mut [f64]) {
        for j in 0..self.n_topics {
            let (s0, s1) = self.doc_scores(row, j);
            let log_z = logsumexp2(s0, s1);
            out[3 * j] = (s1 - log_z).exp();
            out[3 * j + 1] = (s0 - log_z).exp();
            out[3 * j + 2] = log_z;
        }
    }

    /// Posterior log-odds `log[p(y_j=1|x) / p(y_j=0|x)]` per topic.
    fn doc_log_odds(&self, row: &[u32]) -> Vec<f64> {
        (0..self.n_topics)
            .map(|j| {
                let (s0, s1) = self.doc_scores(row, j);
                s1 - s0
            })
            .collect()
    }
}

fn compute_posteriors_into(act: &Activation, rows: &[Vec<u32>], out: &mut [f64]) {
    let stride = 3 * act.n_topics;
    for (k, row) in rows.iter().enumerate() {
        act.doc_posterior(row, &mut out[k * stride..(k + 1) * stride]);
    }
}

/// Runs the posterior computation over all documents in fixed chunks,
/// invoking `on_doc` in document order with `(q1, q0, log_z)` triples per
/// topic. The per-document values do not depend on neighbors, so splitting
/// a chunk across workers cannot change them, and the in-order callback
/// keeps every downstream reduction fixed-order.
fn posterior_pass<F: FnMut(usize, &[f64])>(
    act: &Activation,
    rows: &[Vec<u32>],
    threads: usize,
    mut on_doc: F,
) {
    let stride = 3 * act.n_topics;
    let threads = threads.max(1);
    let mut buf = vec![0.0f64; DOC_CHUNK.min(rows.len().max(1)) * stride];
    let mut start = 0;
    while start < rows.len() {
        let end = (start + DOC_CHUNK).min(rows.len());
        let chunk = &rows[start..end];
        let out = &mut buf[..chunk.len() * stride];
        if threads == 1 || chunk.len() < 2 * threads {
            compute_posteriors_into(act, chunk, out);
        } else {
            let per = chunk.len().div_ceil(threads);
            std::thread::scope(|scope| {
                let mut rest: &mut [f64] = &mut *out;
                for sub in chunk.chunks(per) {
                    let (mine, tail) = rest.split_at_mut(sub.len() * stride);
                    rest = tail;
                    scope.spawn(move || compute_posteriors_into(act, sub, mine));
                }
            });
        }
        for (k, _) in chunk.iter().enumerate() {
            on_doc(start + k, &out[k * stride..(k + 1) * stride]);
        }
        start = end;
    }
}

/// MI of the 2x2 joint described by smoothed soft counts. Written inline
/// (rather than through [`mutual_information`]) so the stored values and the
/// public estimator stay independent routes that tests can cross-check.
fn mi_from_counts(c00: f64, c01: f64, c10: f64, c11: f64, total: f64) -> f64 {
    let t = [
        (c00 + SMOOTHING) / total,
        (c01 + SMOOTHING) / total,
        (c10 + SMOOTHING) / total,
        (c11 + SMOOTHING) / total,
    ];
    let px0 = t[0] + t[1];
    let px1 = t[2] + t[3];
    let py0 = t[0] + t[2];
    let py1 = t[1] + t[3];
    let mi = t[0] * (t[0] / (px0 * py0)).ln()
        + t[1] * (t[1] / (px0 * py1)).ln()
        + t[2] * (t[2] / (px1 * py0)).ln()
        + t[3] * (t[3] / (px1 * py1)).ln();
    mi.max(0.0)
}

/// Fits the anchored model. Every seed word must be present in the
/// vocabulary (the preprocess force-include guarantees this for pipeline
/// runs) and `opts.n_topics` must cover every seed group.
pub fn fit(
    matrix: &DocTermMatrix,
    vocab: &Vocabulary,
    seeds: &SeedSet,
    opts: &FitOptions,
) -> Result<CorexModel> {
    if vocab.fingerprint() != matrix.vocab_fingerprint {
        return Err(Error::internal(
            "matrix was vectorized against a different vocabulary",
        ));
    }
    if opts.n_topics == 0 {
        return Err(Error::config("n_topics must be at least 1"));
    }
    if opts.n_topics < seeds.groups.len() {
        return Err(Error::config(format!(
            "n_topics = {} is smaller than the {} seed groups",
            opts.n_topics,
            seeds.groups.len()
        )));
    }
    if matrix.n_docs == 0 {
        return Err(Error::config("cannot fit on an empty corpus"));
    }
    if matrix.n_words == 0 {
        return Err(Error::config("cannot fit with an empty vocabulary"));
    }

    let m = opts.n_topics;
    let v = matrix.n_words;
    let n = matrix.n_docs as f64;

    let mut anchors: Vec<Vec<usize>> = vec![Vec::new(); m];
    let mut anchored = vec![vec![false; v]; m];
    for (g, group) in seeds.groups.iter().enumerate() {
        for word in group {
            let col = vocab.column(word).ok_or_else(|| {
                Error::config(format!("seed word {word:?} is not in the vocabulary"))
            })?;
            if !anchored[g][col] {
                anchored[g][col] = true;
                anchors[g].push(col);
            }
        }
        anchors[g].sort_unstable();
    }

    let mut rng = SplitMix64::new(opts.rng_seed);

    // Non-anchor weights start near zero and grow only where the competition
    // finds positive association. Starting with fat claims would inflate the
    // TC bound before pruning deflates it again, and a fully symmetric start
    // would leave unanchored topics deadlocked, so the start is tiny but
    // random.
    let mut alpha: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..v).map(|_| 0.05 * rng.next_f64()).collect())
        .collect();
    for j in 0..m {
        for &c in &anchors[j] {
            alpha[j][c] = seeds.anchor_strength;
        }
    }

    let mut log_py1 = vec![0.5f64.ln(); m];
    let mut log_py0 = vec![0.5f64.ln(); m];

    // Marginals start at the corpus frequencies with a tiny symmetric
    // perturbation; anchored pairs instead get a directed boost so that
    // y = 1 means "anchor present" for the topic from the start.
    let df = matrix.column_doc_freq();
    let mut log_marginals: Vec<Vec<[[f64; 2]; 2]>> = vec![vec![[[0.0; 2]; 2]; v]; m];
    for j in 0..m {
        for i in 0..v {
            let f = (df[i] as f64 / n).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let p1 = (f * (1.0 + INIT_PERTURB * (2.0 * rng.next_f64() - 1.0)))
                .clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let p0 = (f * (1.0 + INIT_PERTURB * (2.0 * rng.next_f64() - 1.0)))
                .clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            log_marginals[j][i] = [[(1.0 - p0).ln(), p0.ln()], [(1.0 - p1).ln(), p1.ln()]];
        }
    }
    for (g, words) in anchors.iter().enumerate() {
        for &w in words {
            let f = (df[w] as f64 / n).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let up = (f * ANCHOR_INIT_BOOST).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            let down = (f / ANCHOR_INIT_BOOST).clamp(PROB_FLOOR, 1.0 - PROB_FLOOR);
            log_marginals[g][w] = [[(1.0 - down).ln(), down.ln()], [(1.0 - up).ln(), up.ln()]];
        }
    }

    let mut mi = vec![vec![0.0f64; v]; m];
    // Whether word presence is positively associated with the topic's
    // on-state. Competition is directed by this sign so that a topic never
    // claims words that merely anti-correlate with it; two topics tracking
    // complementary structure would otherwise tie on raw MI and deadlock.
    let mut assoc_pos = vec![vec![true; v]; m];
    let mut tc_history: Vec<f64> = Vec::with_capacity(opts.n_iter);

    // Soft-count accumulators, reused across iterations.
    let mut c11 = vec![vec![0.0f64; v]; m];
    let mut c10 = vec![vec![0.0f64; v]; m];
    let mut sum_q1 = vec![0.0f64; m];
    let mut tc_acc = vec![0.0f64; m];

    for _ in 0..opts.n_iter {
        for j in 0..m {
            c11[j].iter_mut().for_each(|x| *x = 0.0);
            c10[j].iter_mut().for_each(|x| *x = 0.0);
            sum_q1[j] = 0.0;
            tc_acc[j] = 0.0;
        }

        // Step 1: posteriors under the current parameters, reduced into
        // soft counts in document order.
        let act = Activation::new(&alpha, &log_marginals, &log_py0, &log_py1);
        posterior_pass(&act, &matrix.rows, opts.threads, |d, vals| {
            let row = &matrix.rows[d];
            for j in 0..m {
                let q1 = vals[3 * j];
                let q0 = vals[3 * j + 1];
                sum_q1[j] += q1;
                tc_acc[j] += vals[3 * j + 2];
                for &c in row {
                    c11[j][c as usize] += q1;
                    c10[j][c as usize] += q0;
                }
            }
        });

        // Steps 2 and 3: priors, conditional marginals and MI from the same
        // smoothed soft counts.
        let total = n + 4.0 * SMOOTHING;
        for j in 0..m {
            let n1 = sum_q1[j];
            let n0 = n - n1;
            log_py1[j] = ((n1 + 2.0 * SMOOTHING) / total).ln();
            log_py0[j] = ((n0 + 2.0 * SMOOTHING) / total).ln();
            for i in 0..v {
                let x1y1 = c11[j][i];
                let x1y0 = c10[j][i];
                let x0y1 = (n1 - x1y1).max(0.0);
                let x0y0 = (n0 - x1y0).max(0.0);
                log_marginals[j][i] = [
                    [
                        ((x0y0 + SMOOTHING) / (n0 + 2.0 * SMOOTHING)).ln(),
                        ((x1y0 + SMOOTHING) / (n0 + 2.0 * SMOOTHING)).ln(),
                    ],
                    [
                        ((x0y1 + SMOOTHING) / (n1 + 2.0 * SMOOTHING)).ln(),
                        ((x1y1 + SMOOTHING) / (n1 + 2.0 * SMOOTHING)).ln(),
                    ],
                ];
                mi[j][i] = mi_from_counts(x0y0, x0y1, x1y0, x1y1, total);
                assoc_pos[j][i] = log_marginals[j][i][1][1] >= log_marginals[j][i][0][1];
            }
        }

        // Step 4: soft competition. Each word drifts toward weight 1 on the
        // topic where it carries the most information, and toward 0
        // elsewhere; anti-associated pairs count negatively and anchors stay
        // clamped.
        for i in 0..v {
            let signed = |j: usize| {
                if assoc_pos[j][i] {
                    mi[j][i]
                } else {
                    -mi[j][i]
                }
            };
            let mut max_signed = f64::NEG_INFINITY;
            for j in 0..m {
                let s = signed(j);
                if s > max_signed {
                    max_signed = s;
                }
            }
            for j in 0..m {
                if anchored[j][i] {
                    alpha[j][i] = seeds.anchor_strength;
                } else {
                    let target = (ALPHA_SHARPNESS * (signed(j) - max_signed)).exp();
                    let mixed = ((1.0 - ALPHA_LAMBDA) * alpha[j][i] + ALPHA_LAMBDA * target)
                        .clamp(0.0, 1.0);
                    // Snap fully out-competed words to zero so their decay
                    // cannot keep nudging the TC bound below the stopping
                    // tolerance forever.
                    alpha[j][i] = if mixed < ALPHA_FLOOR { 0.0 } else { mixed };
                }
            }
        }

        // Step 5: TC lower bound = sum over topics of the mean posterior
        // log-normalizer.
        let tc: f64 = tc_acc.iter().map(|s| s / n).sum();
        #[cfg(feature = "fit-trace")]
        {
            let per_topic: Vec<String> = tc_acc.iter().map(|s| format!("{:.6}", s / n)).collect();
            let priors: Vec<String> = log_py1.iter().map(|l| format!("{:.5}", l.exp())).collect();
            eprintln!("trace tc={tc:.7} per_topic=[{}] priors=[{}]", per_topic.join(","), priors.join(","));
        }
        tc_history.push(tc);
        let len = tc_history.len();
        if len >= 2 && (tc_history[len - 1] - tc_history[len - 2]).abs() < TC_CONVERGENCE_TOL {
            break;
        }
    }

    Ok(CorexModel {
        n_topics: m,
        n_words: v,
        anchor_strength: seeds.anchor_strength,
        alpha,
        mi,
        log_py1,
        log_py0,
        log_marginals,
        anchors,
        tc_history,
        vocab_fingerprint: matrix.vocab_fingerprint,
    })
}

impl CorexModel {
    fn check_matrix(&self, matrix: &DocTermMatrix) -> Result<()> {
        if matrix.vocab_fingerprint != self.vocab_fingerprint {
            return Err(Error::internal(
                "matrix vocabulary fingerprint does not match the model",
            ));
        }
        if matrix.n_words != self.n_words {
            return Err(Error::internal(format!(
                "matrix has {} words, model expects {}",
                matrix.n_words, self.n_words
            )));
        }
        Ok(())
    }

    /// Whether word presence raises the probability that the topic is on,
    /// read off the stored conditional marginals.
    pub fn positively_associated(&self, topic: usize, word: usize) -> bool {
        self.log_marginals[topic][word][1][1] >= self.log_marginals[topic][word][0][1]
    }

    /// The topic each word carries the most information for, counting
    /// anti-associated topics negatively (the same signed quantity the
    /// weight competition uses). Ties resolve to the lowest topic index.
    pub fn argmax_topic_per_word(&self) -> Vec<usize> {
        (0..self.n_words)
            .map(|i| {
                let signed = |j: usize| {
                    if self.positively_associated(j, i) {
                        self.mi[j][i]
                    } else {
                        -self.mi[j][i]
                    }
                };
                let mut best = 0usize;
                for j in 1..self.n_topics {
                    if signed(j) > signed(best) {
                        best = j;
                    }
                }
                best
            })
            .collect()
    }
}

/// Per-document `p(y_j = 1 | x)` with frozen parameters. An empty row has no
/// evidence and sits at the prior.
pub fn posterior(model: &CorexModel, matrix: &DocTermMatrix) -> Result<Vec<Vec<f64>>> {
    model.check_matrix(matrix)?;
    let act = Activation::from_model(model);
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(matrix.n_docs);
    posterior_pass(&act, &matrix.rows, 1, |_, vals| {
        out.push((0..model.n_topics).map(|j| vals[3 * j]).collect());
    });
    Ok(out)
}

/// One document's topic assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DocLabel {
    pub topic: usize,
    /// The document had no in-vocabulary words, so the label fell back to
    /// the prior argmax.
    pub empty: bool,
}

/// Hard single-topic labels: argmax of the posterior log-odds, ties broken
/// by the lowest topic index.
pub fn label(model: &CorexModel, matrix: &DocTermMatrix) -> Result<Vec<DocLabel>> {
    model.check_matrix(matrix)?;
    let act = Activation::from_model(model);
    Ok(matrix
        .rows
        .iter()
        .map(|row| {
            let odds = act.doc_log_odds(row);
            let mut best = 0usize;
            for (j, &o) in odds.iter().enumerate().skip(1) {
                if o > odds[best] {
                    best = j;
                }
            }
            DocLabel {
                topic: best,
                empty: row.is_empty(),
            }
        })
        .collect())
}

/// The top-`k` words of a topic by mutual information, restricted to words
/// whose argmax-MI topic is this topic. Fewer than `k` qualifying words
/// yield a shorter list. Ties go to the lower word index.
pub fn top_words(model: &CorexModel, vocab: &Vocabulary, topic: usize, k: usize) -> Result<Vec<String>> {
    if vocab.fingerprint() != model.vocab_fingerprint {
        return Err(Error::internal(
            "vocabulary fingerprint does not match the model",
        ));
    }
    if topic >= model.n_topics {
        return Err(Error::config(format!(
            "topic {topic} is out of range (model has {} topics)",
            model.n_topics
        )));
    }
    if k == 0 {
        return Err(Error::config("k must be at least 1"));
    }
    let assignment = model.argmax_topic_per_word();
    let mut qualifying: Vec<usize> = (0..model.n_words)
        .filter(|&i| assignment[i] == topic)
        .collect();
    qualifying.sort_by(|&a, &b| {
        model.mi[topic][b]
            .partial_cmp(&model.mi[topic][a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.cmp(&b))
    });
    qualifying.truncate(k);
    Ok(qualifying.into_iter().map(|i| vocab.words[i].clone()).collect())
}

/// MI in nats of a 2x2 soft-count table `table[x][y]`, normalized in place;
/// `0 * log 0` is treated as 0. Errors on negative, non-finite or all-zero
/// tables.
pub fn mutual_information(table: &[[f64; 2]; 2]) -> Result<f64> {
    let mut total = 0.0;
    for row in table {
        for &cell in row {
            if !cell.is_finite() || cell < 0.0 {
                return Err(Error::config(format!(
                    "soft-count table cells must be finite and non-negative, got {cell}"
                )));
            }
            total += cell;
        }
    }
    if total <= 0.0 {
        return Err(Error::config("soft-count table sums to zero"));
    }
    let p = [
        [table[0][0] / total, table[0][1] / total],
        [table[1][0] / total, table[1][1] / total],
    ];
    let px = [p[0][0] + p[0][1], p[1][0] + p[1][1]];
    let py = [p[0][0] + p[1][0], p[0][1] + p[1][1]];
    let mut mi = 0.0;
    for x in 0..2 {
        for y in 0..2 {
            if p[x][y] > 0.0 {
                mi += p[x][y] * (p[x][y] / (px[x] * py[y])).ln();
            }
        }
    }
    Ok(mi.max(0.0))
}

/// Final total-correlation lower bound of a fitted model.
pub fn tc_bound(model: &CorexModel) -> Result<f64> {
    model
        .tc_history
        .last()
        .copied()
        .ok_or_else(|| Error::internal("model has no completed training iterations"))
}

// --- model file format -----------------------------------------------------
//
// Single self-describing binary file, little-endian:
//
//   magic  b"CXTM"
//   u32    format version (1)
//   u64    vocabulary fingerprint
//   f64    anchor strength
//   u32    n_topics (m), u32 n_words (V), u32 anchor pairs (a), u32 tc entries
//   f64*   alpha, m*V row-major
//   f64*   mi, m*V row-major
//   f64*   log p(y=1), m
//   f64*   log p(y=0), m
//   f64*   log marginals, m*V*4 in (y0x0, y0x1, y1x0, y1x1) order
//   u32*2* anchor pairs (topic, word), sorted
//   f64*   tc history

const MODEL_MAGIC: &[u8; 4] = b"CXTM";
const MODEL_VERSION: u32 = 1;

struct ByteReader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        ByteReader { data, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.data.len() - self.pos < n {
            return Err(Error::config("model file is truncated"));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

impl CorexModel {
    pub fn to_bytes(&self) -> Vec<u8> {
        let m = self.n_topics;
        let v = self.n_words;
        let n_anchor_pairs: usize = self.anchors.iter().map(Vec::len).sum();
        let mut out = Vec::with_capacity(40 + 8 * (6 * m * v + 2 * m + self.tc_history.len()) + 8 * n_anchor_pairs);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&self.vocab_fingerprint.to_le_bytes());
        out.extend_from_slice(&self.anchor_strength.to_le_bytes());
        out.extend_from_slice(&(m as u32).to_le_bytes());
        out.extend_from_slice(&(v as u32).to_le_bytes());
        out.extend_from_slice(&(n_anchor_pairs as u32).to_le_bytes());
        out.extend_from_slice(&(self.tc_history.len() as u32).to_le_bytes());
        for row in &self.alpha {
            for &x in row {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        for row in &self.mi {
            for &x in row {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        for &x in &self.log_py1 {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for &x in &self.log_py0 {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for row in &self.log_marginals {
            for cell in row {
                for y in 0..2 {
                    for x in 0..2 {
                        out.extend_from_slice(&cell[y][x].to_le_bytes());
                    }
                }
            }
        }
        for (j, words) in self.anchors.iter().enumerate() {
            for &w in words {
                out.extend_from_slice(&(j as u32).to_le_bytes());
                out.extend_from_slice(&(w as u32).to_le_bytes());
            }
        }
        for &x in &self.tc_history {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(data: &[u8]) -> Result<CorexModel> {
        let mut r = ByteReader::new(data);
        if r.take(4)? != MODEL_MAGIC {
            return Err(Error::config("not a model file (bad magic)"));
        }
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::config(format!(
                "unsupported model format version {version}"
            )));
        }
        let vocab_fingerprint = r.u64()?;
        let anchor_strength = r.f64()?;
        let m = r.u32()? as usize;
        let v = r.u32()? as usize;
        let n_anchor_pairs = r.u32()? as usize;
        let tc_len = r.u32()? as usize;
        if m == 0 || v == 0 {
            return Err(Error::config("model file declares zero topics or words"));
        }
        // Validate the declared size before any large allocation.
        let mv = (m as u64)
            .checked_mul(v as u64)
            .ok_or_else(|| Error::config("model file dimensions overflow"))?;
        let expected: u64 = 40
            + 8 * (6 * mv + 2 * m as u64 + tc_len as u64)
            + 8 * n_anchor_pairs as u64;
        if expected != data.len() as u64 {
            return Err(Error::config(format!(
                "model file length {} does not match header (expected {expected})",
                data.len()
            )));
        }
        let read_matrix = |rr: &mut ByteReader| -> Result<Vec<Vec<f64>>> {
            let mut rows = Vec::with_capacity(m);
            for _ in 0..m {
                let mut row = Vec::with_capacity(v);
                for _ in 0..v {
                    row.push(rr.f64()?);
                }
                rows.push(row);
            }
            Ok(rows)
        };
        let alpha = read_matrix(&mut r)?;
        let mi = read_matrix(&mut r)?;
        let mut log_py1 = Vec::with_capacity(m);
        for _ in 0..m {
            log_py1.push(r.f64()?);
        }
        let mut log_py0 = Vec::with_capacity(m);
        for _ in 0..m {
            log_py0.push(r.f64()?);
        }
        let mut log_marginals = Vec::with_capacity(m);
        for _ in 0..m {
            let mut row = Vec::with_capacity(v);
            for _ in 0..v {
                let mut cell = [[0.0; 2]; 2];
                for y in &mut cell {
                    for x in y.iter_mut() {
                        *x = r.f64()?;
                    }
                }
                row.push(cell);
            }
            log_marginals.push(row);
        }
        let mut anchors: Vec<Vec<usize>> = vec![Vec::new(); m];
        for _ in 0..n_anchor_pairs {
            let j = r.u32()? as usize;
            let w = r.u32()? as usize;
            if j >= m || w >= v {
                return Err(Error::config("model file anchor pair out of range"));
            }
            anchors[j].push(w);
        }
        for a in &mut anchors {
            a.sort_unstable();
            a.dedup();
        }
        let mut tc_history = Vec::with_capacity(tc_len);
        for _ in 0..tc_len {
            tc_history.push(r.f64()?);
        }
        Ok(CorexModel {
            n_topics: m,
            n_words: v,
            anchor_strength,
            alpha,
            mi,
            log_py1,
            log_py0,
            log_marginals,
            anchors,
            tc_history,
            vocab_fingerprint,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<CorexModel> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        CorexModel::from_bytes(&data)
    }
}

/// Writes `doc_id,topic,empty` label rows.
pub fn labels_to_csv(doc_ids: &[String], labels: &[DocLabel]) -> Result<String> {
    if doc_ids.len() != labels.len() {
        return Err(Error::internal(format!(
            "{} doc ids but {} labels",
            doc_ids.len(),
            labels.len()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["doc_id", "topic", "empty"]).map_err(csv_err)?;
    for (id, l) in doc_ids.iter().zip(labels) {
        w.write_record([id.as_str(), &l.topic.to_string(), &l.empty.to_string()])
            .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::internal(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::internal(e.to_string()))
}

/// Parses the `doc_id,topic,empty` label format.
pub fn labels_from_csv(text: &str) -> Result<Vec<(String, DocLabel)>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(csv_err)?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::config(format!("labels file: missing {name:?} column")))
    };
    let (id_c, topic_c, empty_c) = (col("doc_id")?, col("topic")?, col("empty")?);
    let mut out = Vec::new();
    for row in reader.records() {
        let row = row.map_err(csv_err)?;
        let id = row
            .get(id_c)
            .ok_or_else(|| Error::config("labels file: short row"))?
            .to_string();
        let topic: usize = row
            .get(topic_c)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("labels file: bad topic id"))?;
        let empty: bool = row
            .get(empty_c)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::config("labels file: bad empty flag"))?;
        out.push((id, DocLabel { topic, empty }));
    }
    Ok(out)
}

fn csv_err(e: csv::Error) -> Error {
    Error::config(format!("labels file: {e}"))
}
