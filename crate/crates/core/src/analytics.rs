//! Analysis artifacts over labeled corpora: weekly topic timelines with
//! event markers, cross-model topic-similarity heatmaps, and the power-law
//! slope of per-user post counts.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};

use crate::corpus::{iso_week_start, DateWindow, Microblog};
use crate::{Error, Result};

const DEFAULT_EVENTS: &str = include_str!("../data/events_default.csv");

/// Which sub-corpus a series was computed over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Official,
    Public,
}

impl Source {
    pub fn from_name(name: &str) -> Option<Source> {
        match name {
            "official" => Some(Source::Official),
            "public" => Some(Source::Public),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Official => "official",
            Source::Public => "public",
        }
    }
}

/// Weekly post volume of one topic in one sub-corpus. Buckets cover every
/// ISO week of the study window, zero counts included.
#[derive(Debug, Clone)]
pub struct TimelineSeries {
    pub topic: usize,
    pub source: Source,
    pub buckets: Vec<(NaiveDate, usize)>,
    /// Per-bucket fraction of that week's total posts for this source.
    pub normalized: Option<Vec<f64>>,
}

/// Counts docs labeled `topic` per ISO week across the window. With
/// `normalized`, each bucket also carries its share of that week's total
/// source volume.
pub fn topic_timeline(
    docs: &[Microblog],
    labels: &[usize],
    topic: usize,
    source: Source,
    window: &DateWindow,
    normalized: bool,
) -> Result<TimelineSeries> {
    if docs.len() != labels.len() {
        return Err(Error::internal(format!(
            "topic_timeline: {} docs but {} labels",
            docs.len(),
            labels.len()
        )));
    }
    let mut counts: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let mut totals: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let mut week = iso_week_start(window.start);
    while week <= window.end {
        counts.insert(week, 0);
        totals.insert(week, 0);
        week += Duration::days(7);
    }
    for (doc, &label) in docs.iter().zip(labels) {
        let date = doc.timestamp.date_naive();
        if !window.contains_date(date) {
            continue;
        }
        let week = iso_week_start(date);
        *totals.get_mut(&week).expect("week covers window") += 1;
        if label == topic {
            *counts.get_mut(&week).expect("week covers window") += 1;
        }
    }
    let buckets: Vec<(NaiveDate, usize)> = counts.into_iter().collect();
    let normalized = normalized.then(|| {
        buckets
            .iter()
            .map(|(week, count)| {
                let total = totals[week];
                if total == 0 {
                    0.0
                } else {
                    *count as f64 / total as f64
                }
            })
            .collect()
    });
    Ok(TimelineSeries {
        topic,
        source,
        buckets,
        normalized,
    })
}

/// A dated annotation drawn on timeline charts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventMarker {
    pub date: NaiveDate,
    pub label: String,
}

/// Parses `date,label` lines; `#` starts a comment. The label is everything
/// after the first comma, so labels may contain commas.
pub fn parse_events(text: &str) -> Result<Vec<EventMarker>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (date, label) = line
            .split_once(',')
            .ok_or_else(|| Error::config(format!("events file: line {} has no comma", n + 1)))?;
        let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
            .map_err(|_| Error::config(format!("events file: bad date on line {}", n + 1)))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(Error::config(format!("events file: empty label on line {}", n + 1)));
        }
        out.push(EventMarker {
            date,
            label: label.to_string(),
        });
    }
    Ok(out)
}

/// The key policy dates shipped with the library.
pub fn default_events() -> Vec<EventMarker> {
    parse_events(DEFAULT_EVENTS).expect("shipped default events parse")
}

/// Drops markers outside the window.
pub fn events_in_window(events: &[EventMarker], window: &DateWindow) -> Vec<EventMarker> {
    events
        .iter()
        .filter(|e| window.contains_date(e.date))
        .cloned()
        .collect()
}

/// Term weighting used when comparing topic sub-corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// Raw term counts.
    TermFrequency,
    /// Term counts scaled by smoothed inverse document frequency
    /// `ln((1 + N) / (1 + df)) + 1`.
    TfIdf,
}

/// Cross-model topic similarity. Rows are official topics, columns public
/// topics; entries are cosine similarities in `[0, 1]`.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub values: Vec<Vec<f64>>,
    /// True where a cell was forced to zero because one of its sub-corpora
    /// was empty (no documents or no tokens).
    pub undefined: Vec<Vec<bool>>,
}

impl SimilarityMatrix {
    pub fn size(&self) -> usize {
        self.values.len()
    }

    pub fn mean_diagonal(&self) -> f64 {
        let m = self.size().max(1);
        (0..self.size()).map(|t| self.values[t][t]).sum::<f64>() / m as f64
    }

    pub fn mean_off_diagonal(&self) -> f64 {
        let m = self.size();
        if m < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for t in 0..m {
            for u in 0..m {
                if t != u {
                    sum += self.values[t][u];
                }
            }
        }
        sum / (m * m - m) as f64
    }
}

fn group_by_label<'a>(
    tokens: &'a [Vec<String>],
    labels: &[usize],
    m: usize,
    side: &str,
) -> Result<Vec<Vec<&'a Vec<String>>>> {
    if tokens.len() != labels.len() {
        return Err(Error::internal(format!(
            "similarity_heatmap: {} {side} docs but {} labels",
            tokens.len(),
            labels.len()
        )));
    }
    let mut groups: Vec<Vec<&Vec<String>>> = vec![Vec::new(); m];
    for (doc, &label) in tokens.iter().zip(labels) {
        if label >= m {
            return Err(Error::config(format!(
                "similarity_heatmap: {side} label {label} is outside 0..{m}"
            )));
        }
        groups[label].push(doc);
    }
    Ok(groups)
}

/// Similarity of one pair of sub-corpora: fit the weighting on their union
/// (each document one unit), aggregate each side by summing its document
/// vectors, and take the cosine. Word order is fixed by a sorted map, so the
/// result does not depend on document order.
fn pair_similarity(s_t: &[&Vec<String>], s_u: &[&Vec<String>], weighting: Weighting) -> Option<f64> {
    let mut word_ids: BTreeMap<&str, usize> = BTreeMap::new();
    let mut df: Vec<usize> = Vec::new();
    let n_docs = s_t.len() + s_u.len();
    for doc in s_t.iter().chain(s_u.iter()) {
        let mut seen: Vec<usize> = Vec::new();
        for w in doc.iter() {
            let next = word_ids.len();
            let id = *word_ids.entry(w.as_str()).or_insert(next);
            if id == df.len() {
                df.push(0);
            }
            if !seen.contains(&id) {
                seen.push(id);
                df[id] += 1;
            }
        }
    }
    if word_ids.is_empty() {
        return None;
    }
    let idf: Vec<f64> = match weighting {
        Weighting::TermFrequency => vec![1.0; df.len()],
        Weighting::TfIdf => df
            .iter()
            .map(|&d| ((1.0 + n_docs as f64) / (1.0 + d as f64)).ln() + 1.0)
            .collect(),
    };
    let aggregate = |side: &[&Vec<String>]| {
        let mut v = vec![0.0f64; df.len()];
        for doc in side {
            for w in doc.iter() {
                let id = word_ids[w.as_str()];
                v[id] += idf[id];
            }
        }
        v
    };
    let a = aggregate(s_t);
    let b = aggregate(s_u);
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Pairwise cosine similarity between every official topic sub-corpus and
/// every public topic sub-corpus. The weighting is refit on each pair's
/// union. Cells with an empty side are zero and flagged.
pub fn similarity_heatmap(
    official_tokens: &[Vec<String>],
    official_labels: &[usize],
    public_tokens: &[Vec<String>],
    public_labels: &[usize],
    m: usize,
    weighting: Weighting,
) -> Result<SimilarityMatrix> {
    let official = group_by_label(official_tokens, official_labels, m, "official")?;
    let public = group_by_label(public_tokens, public_labels, m, "public")?;
    let mut values = vec![vec![0.0; m]; m];
    let mut undefined = vec![vec![false; m]; m];
    for t in 0..m {
        for u in 0..m {
            match pair_similarity(&official[t], &public[u], weighting) {
                Some(v) => values[t][u] = v,
                None => undefined[t][u] = true,
            }
        }
    }
    Ok(SimilarityMatrix { values, undefined })
}

/// Least-squares slope of `log(count)` against `log(rank)` over the top 50
/// users (or all of them, if fewer). Needs at least three positive counts.
pub fn power_law_slope(user_counts: &[f64]) -> Result<f64> {
    let points: Vec<(f64, f64)> = user_counts
        .iter()
        .take(50)
        .enumerate()
        .filter(|(_, &c)| c > 0.0 && c.is_finite())
        .map(|(rank, &c)| (((rank + 1) as f64).ln(), c.ln()))
        .collect();
    if points.len() < 3 {
        return Err(Error::config(
            "power_law_slope needs at least 3 users with positive counts",
        ));
    }
    let n = points.len() as f64;
    let mean_x: f64 = points.iter().map(|(x, _)| x).sum::<f64>() / n;
    let mean_y: f64 = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var = 0.0;
    for (x, y) in &points {
        cov += (x - mean_x) * (y - mean_y);
        var += (x - mean_x) * (x - mean_x);
    }
    if var == 0.0 {
        return Err(Error::config(
            "power_law_slope: all ranks identical (need 3 distinct ranks)",
        ));
    }
    Ok(cov / var)
}

/// Long-format CSV: `topic,source,week,count` plus a `fraction` column when
/// any series carries normalized values.
pub fn timelines_to_csv(series: &[TimelineSeries]) -> String {
    let with_fraction = series.iter().any(|s| s.normalized.is_some());
    let mut out = String::from(if with_fraction {
        "topic,source,week,count,fraction\n"
    } else {
        "topic,source,week,count\n"
    });
    for s in series {
        for (k, (week, count)) in s.buckets.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}", s.topic, s.source.as_str(), week, count));
            if with_fraction {
                match &s.normalized {
                    Some(f) => out.push_str(&format!(",{}", f[k])),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
    }
    out
}

/// Long-format CSV: `official_topic,public_topic,cosine,undefined`.
pub fn similarity_to_csv(matrix: &SimilarityMatrix) -> String {
    let mut out = String::from("official_topic,public_topic,cosine,undefined\n");
    for (t, row) in matrix.values.iter().enumerate() {
        for (u, value) in row.iter().enumerate() {
            out.push_str(&format!("{t},{u},{value},{}\n", matrix.undefined[t][u]));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn doc(id: &str, day: (i32, u32, u32)) -> Microblog {
        Microblog {
            id: id.to_string(),
            timestamp: date(day.0, day.1, day.2).and_hms_opt(10, 0, 0).unwrap().and_utc(),
            author: "u".to_string(),
            text: "text".to_string(),
            mentions: vec![],
        }
    }

    fn toks(items: &[&str]) -> Vec<Vec<String>> {
        items
            .iter()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn timeline_counts_spike_week() {
        // Hand count: three topic-5 docs in the week starting Monday
        // 2020-04-27, nothing elsewhere.
        let docs = vec![
            doc("1", (2020, 4, 27)),
            doc("2", (2020, 4, 29)),
            doc("3", (2020, 5, 2)),
            doc("4", (2020, 4, 20)),
        ];
        let labels = vec![5, 5, 5, 2];
        let window = DateWindow::study_default();
        let series = topic_timeline(&docs, &labels, 5, Source::Public, &window, false).unwrap();
        let spike: Vec<_> = series
            .buckets
            .iter()
            .filter(|(_, c)| *c > 0)
            .collect();
        assert_eq!(spike, vec![&(date(2020, 4, 27), 3)]);
    }

    #[test]
    fn timeline_spans_window_with_zeros() {
        let window = DateWindow::study_default();
        let series = topic_timeline(&[], &[], 0, Source::Official, &window, false).unwrap();
        // 2020-03-01 falls in the week of Monday 2020-02-24; the window ends
        // Sunday 2020-05-17, whose week starts 2020-05-11.
        assert_eq!(series.buckets.first().unwrap().0, date(2020, 2, 24));
        assert_eq!(series.buckets.last().unwrap().0, date(2020, 5, 11));
        assert_eq!(series.buckets.len(), 12);
        assert!(series.buckets.iter().all(|(_, c)| *c == 0));
    }

    #[test]
    fn timeline_normalized_fraction() {
        let docs = vec![
            doc("1", (2020, 4, 27)),
            doc("2", (2020, 4, 28)),
            doc("3", (2020, 4, 29)),
            doc("4", (2020, 4, 30)),
        ];
        let labels = vec![1, 0, 0, 0];
        let window = DateWindow::study_default();
        let series = topic_timeline(&docs, &labels, 1, Source::Public, &window, true).unwrap();
        let f = series.normalized.unwrap();
        let idx = series
            .buckets
            .iter()
            .position(|(w, _)| *w == date(2020, 4, 27))
            .unwrap();
        assert!((f[idx] - 0.25).abs() < 1e-12);
    }

    #[test]
    fn timeline_sums_match_weekly_totals() {
        let docs: Vec<Microblog> = (0..20)
            .map(|i| doc(&i.to_string(), (2020, 4, 1 + (i % 20) as u32)))
            .collect();
        let labels: Vec<usize> = (0..20).map(|i| i % 3).collect();
        let window = DateWindow::study_default();
        let mut per_week_sum: BTreeMap<NaiveDate, usize> = BTreeMap::new();
        for topic in 0..3 {
            let s = topic_timeline(&docs, &labels, topic, Source::Public, &window, false).unwrap();
            for (w, c) in s.buckets {
                *per_week_sum.entry(w).or_insert(0) += c;
            }
        }
        let mut expected: BTreeMap<NaiveDate, usize> = BTreeMap::new();
        for d in &docs {
            *expected
                .entry(iso_week_start(d.timestamp.date_naive()))
                .or_insert(0) += 1;
        }
        for (w, c) in expected {
            assert_eq!(per_week_sum[&w], c);
        }
    }

    #[test]
    fn misaligned_timeline_inputs_are_fatal() {
        let docs = vec![doc("1", (2020, 4, 27))];
        let window = DateWindow::study_default();
        assert!(topic_timeline(&docs, &[], 0, Source::Public, &window, false).is_err());
    }

    #[test]
    fn events_parse_and_filter() {
        let events = parse_events("# c\n2020-03-15,State of disaster\n2020-06-01,Late, with comma\n").unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].label, "Late, with comma");
        let window = DateWindow::study_default();
        let kept = events_in_window(&events, &window);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].date, date(2020, 3, 15));
    }

    #[test]
    fn default_events_inside_window() {
        let window = DateWindow::study_default();
        let events = default_events();
        assert_eq!(events.len(), 4);
        assert!(events.iter().all(|e| window.contains_date(e.date)));
    }

    #[test]
    fn events_rejects_garbage() {
        assert!(parse_events("no comma here").is_err());
        assert!(parse_events("2020-13-40,bad date").is_err());
        assert!(parse_events("2020-03-15,   ").is_err());
    }

    #[test]
    fn similarity_identical_docs_is_one() {
        let official = toks(&["stay home", "wash hands"]);
        let public = toks(&["stay home", "wash hands"]);
        let labels = vec![0, 0];
        let m = similarity_heatmap(&official, &labels, &public, &labels, 1, Weighting::TfIdf).unwrap();
        assert!((m.values[0][0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn similarity_disjoint_vocabulary_is_zero() {
        let official = toks(&["alpha beta"]);
        let public = toks(&["gamma delta"]);
        let m = similarity_heatmap(&official, &[0], &public, &[0], 1, Weighting::TfIdf).unwrap();
        assert_eq!(m.values[0][0], 0.0);
        assert!(!m.undefined[0][0]);
    }

    #[test]
    fn similarity_cosine_hand_value() {
        // Hand computation with plain term frequency: vectors (1,1,0) and
        // (1,0,1); cosine = 1/2.
        let official = toks(&["a b"]);
        let public = toks(&["a c"]);
        let m =
            similarity_heatmap(&official, &[0], &public, &[0], 1, Weighting::TermFrequency).unwrap();
        assert!((m.values[0][0] - 0.5).abs() < 1e-9, "cosine = {}", m.values[0][0]);
    }

    #[test]
    fn similarity_empty_subcorpus_is_flagged() {
        let official = toks(&["a b"]);
        let public = toks(&["a c"]);
        // Topic 1 has no official docs.
        let m = similarity_heatmap(&official, &[0], &public, &[0], 2, Weighting::TfIdf).unwrap();
        assert!(m.undefined[1][0]);
        assert_eq!(m.values[1][0], 0.0);
    }

    #[test]
    fn similarity_is_order_invariant() {
        let official_a = toks(&["a b", "c d e", "a c"]);
        let official_b = toks(&["a c", "a b", "c d e"]);
        let public = toks(&["a b c", "d e"]);
        let ma = similarity_heatmap(&official_a, &[0, 0, 0], &public, &[0, 0], 1, Weighting::TfIdf)
            .unwrap();
        let mb = similarity_heatmap(&official_b, &[0, 0, 0], &public, &[0, 0], 1, Weighting::TfIdf)
            .unwrap();
        assert_eq!(ma.values, mb.values);
    }

    #[test]
    fn similarity_identical_corpora_is_symmetric_with_unit_diagonal() {
        let docs = toks(&["a b c", "a d", "b d e", "c e"]);
        let labels = vec![0, 1, 0, 1];
        let m = similarity_heatmap(&docs, &labels, &docs, &labels, 2, Weighting::TfIdf).unwrap();
        for t in 0..2 {
            assert!((m.values[t][t] - 1.0).abs() < 1e-12);
            for u in 0..2 {
                assert!((m.values[t][u] - m.values[u][t]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn similarity_rejects_out_of_range_labels() {
        let official = toks(&["a"]);
        let public = toks(&["a"]);
        assert!(similarity_heatmap(&official, &[3], &public, &[0], 2, Weighting::TfIdf).is_err());
    }

    #[test]
    fn power_law_exact_inverse_rank() {
        let counts: Vec<f64> = (1..=50).map(|r| 1000.0 / r as f64).collect();
        let slope = power_law_slope(&counts).unwrap();
        assert!((slope + 1.0).abs() < 1e-6, "slope = {slope}");
    }

    #[test]
    fn power_law_flat_counts() {
        let counts = vec![7.0; 10];
        let slope = power_law_slope(&counts).unwrap();
        assert!(slope.abs() < 1e-12);
    }

    #[test]
    fn power_law_three_point_oracle() {
        // Regression oracle over the 3 log-log points of ~rank^-2 data.
        let slope = power_law_slope(&[100.0, 25.0, 11.0]).unwrap();
        assert!((slope + 2.0).abs() < 0.05, "slope = {slope}");
    }

    #[test]
    fn power_law_needs_three_positive() {
        assert!(power_law_slope(&[5.0, 4.0]).is_err());
        assert!(power_law_slope(&[5.0, 4.0, 0.0]).is_err());
    }

    #[test]
    fn csv_emitters_are_stable() {
        let series = TimelineSeries {
            topic: 3,
            source: Source::Official,
            buckets: vec![(date(2020, 3, 2), 4), (date(2020, 3, 9), 0)],
            normalized: None,
        };
        let csv = timelines_to_csv(&[series]);
        assert_eq!(
            csv,
            "topic,source,week,count\n3,official,2020-03-02,4\n3,official,2020-03-09,0\n"
        );
        let m = SimilarityMatrix {
            values: vec![vec![1.0, 0.25], vec![0.5, 0.0]],
            undefined: vec![vec![false, false], vec![false, true]],
        };
        let csv = similarity_to_csv(&m);
        assert!(csv.starts_with("official_topic,public_topic,cosine,undefined\n"));
        assert!(csv.contains("1,1,0,true\n"));
    }
}
