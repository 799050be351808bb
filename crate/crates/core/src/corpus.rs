//! Microblog ingestion, official/public partitioning and exploratory stats.
//!
//! Input records arrive as JSONL or CSV with scraper-style field names
//! (`id`, `date`, `username`, `tweet`, `mentions`), so existing post dumps
//! can be replayed without conversion. Malformed rows are skipped and
//! counted, never fatal; an unreadable file is.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use chrono::{DateTime, Datelike, Duration, NaiveDate, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// One social-media post.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Microblog {
    /// Unique, non-empty post id.
    pub id: String,
    pub timestamp: DateTime<Utc>,
    /// Author handle without the leading `@`.
    pub author: String,
    pub text: String,
    /// Mentioned handles without the leading `@`.
    pub mentions: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Jsonl,
    Csv,
}

impl RecordFormat {
    pub fn from_name(name: &str) -> Option<RecordFormat> {
        match name.to_ascii_lowercase().as_str() {
            "jsonl" | "json" => Some(RecordFormat::Jsonl),
            "csv" => Some(RecordFormat::Csv),
            _ => None,
        }
    }
}

/// Result of parsing a record file: well-formed records in file order plus
/// the number of malformed rows that were skipped.
#[derive(Debug, Default)]
pub struct ParseOutcome {
    pub records: Vec<Microblog>,
    pub skipped: usize,
}

fn strip_at(handle: &str) -> &str {
    handle.strip_prefix('@').unwrap_or(handle)
}

/// Accepts the common scraper timestamp shapes: `2020-03-05 10:00:00`,
/// the `T`-separated variant, RFC 3339 with offset, and a bare date.
pub fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S") {
        return Some(dt.and_utc());
    }
    if let Ok(dt) = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S") {
        return Some(dt.and_utc());
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.with_timezone(&Utc));
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc());
    }
    None
}

fn record_from_parts(
    id: Option<String>,
    date: Option<&str>,
    username: Option<&str>,
    tweet: Option<&str>,
    mentions: Vec<String>,
) -> Option<Microblog> {
    let id = id?;
    if id.is_empty() {
        return None;
    }
    let timestamp = parse_timestamp(date?)?;
    let author = strip_at(username?.trim()).to_string();
    if author.is_empty() {
        return None;
    }
    let text = tweet?.to_string();
    if text.trim().is_empty() {
        return None;
    }
    Some(Microblog {
        id,
        timestamp,
        author,
        text,
        mentions: mentions
            .iter()
            .map(|m| strip_at(m.trim()).to_string())
            .filter(|m| !m.is_empty())
            .collect(),
    })
}

/// Parse JSONL text. One JSON object per line; blank lines are ignored and
/// malformed lines are counted as skipped. Never fails.
pub fn parse_jsonl(text: &str) -> ParseOutcome {
    let mut out = ParseOutcome::default();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        let id = match value.get("id") {
            Some(serde_json::Value::String(s)) => Some(s.trim().to_string()),
            Some(serde_json::Value::Number(n)) => Some(n.to_string()),
            _ => None,
        };
        let mentions = match value.get("mentions") {
            Some(serde_json::Value::Array(items)) => items
                .iter()
                .filter_map(|v| v.as_str().map(str::to_string))
                .collect(),
            _ => Vec::new(),
        };
        match record_from_parts(
            id,
            value.get("date").and_then(|v| v.as_str()),
            value.get("username").and_then(|v| v.as_str()),
            value.get("tweet").and_then(|v| v.as_str()),
            mentions,
        ) {
            Some(rec) => out.records.push(rec),
            None => out.skipped += 1,
        }
    }
    out
}

/// Parse CSV text with an `id,date,username,tweet,mentions` header (any
/// column order; extra columns ignored). The `mentions` cell holds handles
/// separated by spaces or commas. Never fails; rows that do not yield a
/// well-formed record are counted as skipped.
pub fn parse_csv(text: &str) -> ParseOutcome {
    let mut out = ParseOutcome::default();
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(_) => return out,
    };
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (id_c, date_c, user_c, tweet_c) = match (col("id"), col("date"), col("username"), col("tweet")) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return out,
    };
    let mentions_c = col("mentions");
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(_) => {
                out.skipped += 1;
                continue;
            }
        };
        let field = |i: usize| row.get(i);
        let mentions = mentions_c
            .and_then(|c| row.get(c))
            .map(|cell| {
                cell.split(|ch: char| ch == ',' || ch.is_whitespace())
                    .filter(|m| !m.is_empty())
                    .map(str::to_string)
                    .collect()
            })
            .unwrap_or_default();
        match record_from_parts(
            field(id_c).map(|s| s.trim().to_string()),
            field(date_c),
            field(user_c),
            field(tweet_c),
            mentions,
        ) {
            Some(rec) => out.records.push(rec),
            None => out.skipped += 1,
        }
    }
    out
}

/// Read and parse a record file. Unreadable or non-UTF-8 files are fatal;
/// malformed rows inside a readable file are skipped and counted.
pub fn parse_records(path: &Path, format: RecordFormat) -> Result<ParseOutcome> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(match format {
        RecordFormat::Jsonl => parse_jsonl(&text),
        RecordFormat::Csv => parse_csv(&text),
    })
}

#[derive(Serialize)]
struct RecordJson<'a> {
    id: &'a str,
    date: String,
    username: &'a str,
    tweet: &'a str,
    mentions: &'a [String],
}

/// Serialize records back to the JSONL input format (used when writing
/// partition files so downstream commands can re-ingest them).
pub fn records_to_jsonl(records: &[Microblog]) -> String {
    let mut out = String::new();
    for r in records {
        let line = serde_json::to_string(&RecordJson {
            id: &r.id,
            date: r.timestamp.format("%Y-%m-%d %H:%M:%S").to_string(),
            username: &r.author,
            tweet: &r.text,
            mentions: &r.mentions,
        })
        .expect("record serialization cannot fail");
        out.push_str(&line);
        out.push('\n');
    }
    out
}

/// Case-insensitive set of tracked account handles.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AccountList {
    handles: BTreeSet<String>,
}

impl AccountList {
    /// Builds the list, stripping any leading `@` and case-folding.
    /// Errors when no usable handle remains.
    pub fn new<I, S>(handles: I) -> Result<AccountList>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let set: BTreeSet<String> = handles
            .into_iter()
            .map(|h| strip_at(h.as_ref().trim()).to_lowercase())
            .filter(|h| !h.is_empty())
            .collect();
        if set.is_empty() {
            return Err(Error::config("account list is empty"));
        }
        Ok(AccountList { handles: set })
    }

    /// The four nationally tracked accounts the pipeline defaults to.
    pub fn default_tracked() -> AccountList {
        AccountList::new(["CyrilRamaphosa", "DrZweliMkhize", "HealthZA", "nicd_sa"])
            .expect("default account list is non-empty")
    }

    /// One handle per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<AccountList> {
        AccountList::new(
            text.lines()
                .map(|l| l.trim())
                .filter(|l| !l.is_empty() && !l.starts_with('#')),
        )
    }

    pub fn contains(&self, handle: &str) -> bool {
        self.handles.contains(&strip_at(handle.trim()).to_lowercase())
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.handles.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.handles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.handles.is_empty()
    }
}

/// Inclusive date range filtering the study period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateWindow {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateWindow {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<DateWindow> {
        if start > end {
            return Err(Error::config(format!(
                "window start {start} is after end {end}"
            )));
        }
        Ok(DateWindow { start, end })
    }

    /// The default study period, 2020-03-01 through 2020-05-17.
    pub fn study_default() -> DateWindow {
        DateWindow {
            start: NaiveDate::from_ymd_opt(2020, 3, 1).unwrap(),
            end: NaiveDate::from_ymd_opt(2020, 5, 17).unwrap(),
        }
    }

    pub fn contains(&self, ts: DateTime<Utc>) -> bool {
        let d = ts.date_naive();
        d >= self.start && d <= self.end
    }

    pub fn contains_date(&self, d: NaiveDate) -> bool {
        d >= self.start && d <= self.end
    }
}

/// Disjoint official/public split of a record set.
#[derive(Debug, Default)]
pub struct CorpusPartition {
    pub official: Vec<Microblog>,
    pub public: Vec<Microblog>,
    /// Posts outside the window plus posts referencing no tracked account.
    pub dropped: usize,
}

/// Splits records: posts authored by a tracked account go to `official`;
/// other posts that mention a tracked account (mention list or a literal
/// `@handle` substring of the text, case-insensitive) go to `public`;
/// everything else, and anything outside the window, is dropped and counted.
pub fn partition(
    records: Vec<Microblog>,
    officials: &AccountList,
    window: &DateWindow,
) -> CorpusPartition {
    let mut part = CorpusPartition::default();
    let at_handles: Vec<String> = officials.iter().map(|h| format!("@{h}")).collect();
    for rec in records {
        if !window.contains(rec.timestamp) {
            part.dropped += 1;
            continue;
        }
        if officials.contains(&rec.author) {
            part.official.push(rec);
            continue;
        }
        let mentions_tracked = rec.mentions.iter().any(|m| officials.contains(m)) || {
            let text = rec.text.to_lowercase();
            at_handles.iter().any(|h| text.contains(h.as_str()))
        };
        if mentions_tracked {
            part.public.push(rec);
        } else {
            part.dropped += 1;
        }
    }
    part
}

/// Monday that starts the ISO week containing `d`.
pub fn iso_week_start(d: NaiveDate) -> NaiveDate {
    d - Duration::days(d.weekday().num_days_from_monday() as i64)
}

/// Exploratory corpus statistics backing the top-users, weekly-volume and
/// post-length figures.
#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_posts: usize,
    pub unique_users: usize,
    /// `(handle, posts)` sorted by count descending, ties by handle.
    pub top_users: Vec<(String, usize)>,
    /// `(ISO week start, posts)` for non-empty weeks, ascending.
    pub weekly_counts: Vec<(NaiveDate, usize)>,
    /// `(words per post, posts)` ascending by word count.
    pub word_count_histogram: Vec<(usize, usize)>,
}

/// Computes totals, per-user counts (case-folded handles), Monday-start
/// weekly volumes and the whitespace-token length histogram.
pub fn corpus_stats(records: &[Microblog], top_n: usize) -> CorpusStats {
    let mut per_user: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_week: BTreeMap<NaiveDate, usize> = BTreeMap::new();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    for rec in records {
        *per_user.entry(rec.author.to_lowercase()).or_insert(0) += 1;
        *per_week
            .entry(iso_week_start(rec.timestamp.date_naive()))
            .or_insert(0) += 1;
        *histogram
            .entry(rec.text.split_whitespace().count())
            .or_insert(0) += 1;
    }
    let unique_users = per_user.len();
    let mut top_users: Vec<(String, usize)> = per_user.into_iter().collect();
    // BTreeMap yields handles in lexicographic order, so a stable sort by
    // descending count keeps the tie rule.
    top_users.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    top_users.truncate(top_n);
    CorpusStats {
        total_posts: records.len(),
        unique_users,
        top_users,
        weekly_counts: per_week.into_iter().collect(),
        word_count_histogram: histogram.into_iter().collect(),
    }
}
