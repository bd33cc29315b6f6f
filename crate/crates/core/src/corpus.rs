//! Tweet records, corpus parsing, filtering and severity labeling.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A WGS84 coordinate in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidGeoPoint("latitude out of range".into()));
        }
        if !lon.is_finite() || !(-180.0..=180.0).contains(&lon) {
            return Err(Error::InvalidGeoPoint("longitude out of range".into()));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }
}

/// Binary severity label. Categories 1 and 2 merge into `"12"`, 3 and 4 into `"34"`.
///
/// `High` (`"34"`) is the positive class for binary metrics and wins every tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CategoryLabel {
    Low,
    High,
}

impl CategoryLabel {
    pub const ALL: [CategoryLabel; 2] = [CategoryLabel::Low, CategoryLabel::High];

    pub fn as_str(self) -> &'static str {
        match self {
            CategoryLabel::Low => "12",
            CategoryLabel::High => "34",
        }
    }

    /// Position in per-class arrays: `Low` = 0, `High` = 1.
    pub fn index(self) -> usize {
        match self {
            CategoryLabel::Low => 0,
            CategoryLabel::High => 1,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == 0 {
            CategoryLabel::Low
        } else {
            CategoryLabel::High
        }
    }

    pub fn other(self) -> Self {
        match self {
            CategoryLabel::Low => CategoryLabel::High,
            CategoryLabel::High => CategoryLabel::Low,
        }
    }
}

impl fmt::Display for CategoryLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CategoryLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "12" => Ok(CategoryLabel::Low),
            "34" => Ok(CategoryLabel::High),
            other => Err(Error::Format {
                what: "category label",
                reason: format!("expected \"12\" or \"34\", got {other:?}"),
            }),
        }
    }
}

impl Serialize for CategoryLabel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for CategoryLabel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Collapse a Saffir-Simpson category into the binary label.
pub fn merge_category(raw: i64) -> Result<CategoryLabel> {
    match raw {
        1 | 2 => Ok(CategoryLabel::Low),
        3 | 4 => Ok(CategoryLabel::High),
        other => Err(Error::CategoryOutOfRange(other)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tweet {
    pub id: String,
    pub text: String,
    /// UTC seconds since the epoch.
    pub timestamp: i64,
    pub geo: Option<GeoPoint>,
    pub place_name: Option<String>,
    /// Lowercase, without the leading `#`.
    pub hashtags: Vec<String>,
    /// Lowercase language code.
    pub lang: String,
    /// Two-letter uppercase country code.
    pub country_code: String,
}

impl Tweet {
    pub fn has_hashtag(&self, tag: &str) -> bool {
        self.hashtags.iter().any(|h| h == tag)
    }

    fn to_record(&self) -> TweetRecord {
        TweetRecord {
            id: self.id.clone(),
            text: self.text.clone(),
            created_at: format_timestamp(self.timestamp),
            lat: self.geo.map(|g| g.lat),
            lon: self.geo.map(|g| g.lon),
            place_name: self.place_name.clone(),
            hashtags: self.hashtags.clone(),
            lang: self.lang.clone(),
            country_code: self.country_code.clone(),
        }
    }
}

/// A tweet annotated with the merged label of the place it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTweet {
    pub tweet: Tweet,
    pub label: CategoryLabel,
    pub place: String,
    pub event: String,
}

/// On-disk tweet schema, one object per line.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct TweetRecord {
    id: String,
    text: String,
    created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    place_name: Option<String>,
    #[serde(default)]
    hashtags: Vec<String>,
    lang: String,
    country_code: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LabeledRecord {
    #[serde(flatten)]
    tweet: TweetRecord,
    label: CategoryLabel,
    place: String,
    event: String,
}

/// Delimited-table row. Hashtags are whitespace separated in one column.
#[derive(Debug, Deserialize)]
struct TableRecord {
    id: String,
    text: String,
    created_at: String,
    lat: Option<f64>,
    lon: Option<f64>,
    place_name: Option<String>,
    #[serde(default)]
    hashtags: String,
    lang: String,
    country_code: String,
}

fn format_timestamp(ts: i64) -> String {
    DateTime::<Utc>::from_timestamp(ts, 0)
        .map(|d| d.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_default()
}

fn normalize_hashtag(raw: &str) -> String {
    raw.trim().trim_start_matches('#').to_lowercase()
}

impl TweetRecord {
    fn into_tweet(self) -> std::result::Result<Tweet, String> {
        if self.id.trim().is_empty() {
            return Err("empty id".into());
        }
        if self.text.trim().is_empty() {
            return Err("empty text".into());
        }
        let timestamp = DateTime::parse_from_rfc3339(self.created_at.trim())
            .map_err(|e| format!("bad created_at {:?}: {e}", self.created_at))?
            .timestamp();
        let geo = match (self.lat, self.lon) {
            (Some(lat), Some(lon)) => Some(GeoPoint::new(lat, lon).map_err(|e| match e {
                Error::InvalidGeoPoint(m) => m,
                other => other.to_string(),
            })?),
            (None, None) => None,
            _ => return Err("lat and lon must be given together".into()),
        };
        let country_code = self.country_code.trim().to_uppercase();
        if country_code.len() != 2 || !country_code.chars().all(|c| c.is_ascii_alphabetic()) {
            return Err(format!("bad country_code {:?}", self.country_code));
        }
        let lang = self.lang.trim().to_lowercase();
        if lang.is_empty() {
            return Err("empty lang".into());
        }
        let hashtags = self
            .hashtags
            .iter()
            .map(|h| normalize_hashtag(h))
            .filter(|h| !h.is_empty())
            .collect();
        let place_name = self
            .place_name
            .map(|p| p.trim().to_string())
            .filter(|p| !p.is_empty());
        Ok(Tweet {
            id: self.id,
            text: self.text,
            timestamp,
            geo,
            place_name,
            hashtags,
            lang,
            country_code,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One JSON object per line.
    JsonLines,
    /// Comma-separated table with a header row.
    Delimited,
}

impl CorpusFormat {
    /// `.csv`/`.tsv` are tables, anything else is line-delimited JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => CorpusFormat::Delimited,
            _ => CorpusFormat::JsonLines,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" | "json" => Ok(CorpusFormat::JsonLines),
            "csv" | "table" => Ok(CorpusFormat::Delimited),
            other => Err(Error::InvalidConfig(format!(
                "unknown corpus format {other:?}"
            ))),
        }
    }
}

/// A record that could not be turned into a [`Tweet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordError {
    pub line: usize,
    pub reason: String,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.reason)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub tweets: Vec<Tweet>,
    pub errors: Vec<RecordError>,
}

/// Lines whose top-level object carries a `provenance` key are headers, not records.
fn is_provenance(value: &serde_json::Value) -> bool {
    value.get("provenance").is_some()
}

/// Parse a corpus. Malformed records land in `errors`; only I/O failure is fatal.
pub fn parse_corpus<R: Read>(source: R, format: CorpusFormat) -> Result<ParsedCorpus> {
    let mut out = ParsedCorpus::default();
    let mut seen = HashSet::new();
    let mut push =
        |out: &mut ParsedCorpus, line: usize, res: std::result::Result<Tweet, String>| match res {
            Ok(t) if !seen.insert(t.id.clone()) => out.errors.push(RecordError {
                line,
                reason: format!("duplicate id {:?}", t.id),
            }),
            Ok(t) => out.tweets.push(t),
            Err(reason) => out.errors.push(RecordError { line, reason }),
        };
    match format {
        CorpusFormat::JsonLines => {
            for (i, line) in BufReader::new(source).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let value: serde_json::Value = match serde_json::from_str(&line) {
                    Ok(v) => v,
                    Err(e) => {
                        push(&mut out, i + 1, Err(format!("invalid JSON: {e}")));
                        continue;
                    }
                };
                if is_provenance(&value) {
                    continue;
                }
                let res = serde_json::from_value::<TweetRecord>(value)
                    .map_err(|e| format!("schema violation: {e}"))
                    .and_then(TweetRecord::into_tweet);
                push(&mut out, i + 1, res);
            }
        }
        CorpusFormat::Delimited => {
            let mut reader = csv::ReaderBuilder::new()
                .comment(Some(b'#'))
                .flexible(false)
                .from_reader(source);
            let headers = match reader.headers() {
                Ok(h) => h.clone(),
                Err(e) => return table_error(e, &mut out),
            };
            for record in reader.records() {
                let record = match record {
                    Ok(r) => r,
                    Err(e) => {
                        if let csv::ErrorKind::Io(_) = e.kind() {
                            return Err(Error::Io(e.into()));
                        }
                        let line = e.position().map_or(0, |p| p.line() as usize);
                        push(&mut out, line, Err(format!("malformed row: {e}")));
                        continue;
                    }
                };
                let line = record.position().map_or(0, |p| p.line() as usize);
                let res = record
                    .deserialize::<TableRecord>(Some(&headers))
                    .map_err(|e| format!("schema violation: {e}"))
                    .and_then(|r| {
                        TweetRecord {
                            id: r.id,
                            text: r.text,
                            created_at: r.created_at,
                            lat: r.lat,
                            lon: r.lon,
                            place_name: r.place_name,
                            hashtags: r.hashtags.split_whitespace().map(String::from).collect(),
                            lang: r.lang,
                            country_code: r.country_code,
                        }
                        .into_tweet()
                    });
                push(&mut out, line, res);
            }
        }
    }
    Ok(out)
}

fn table_error(e: csv::Error, out: &mut ParsedCorpus) -> Result<ParsedCorpus> {
    match e.kind() {
        csv::ErrorKind::Io(_) => Err(Error::Io(e.into())),
        _ => {
            out.errors.push(RecordError {
                line: 1,
                reason: format!("malformed header: {e}"),
            });
            Ok(std::mem::take(out))
        }
    }
}

/// Write tweets as line-delimited JSON in the corpus schema.
pub fn write_corpus<W: Write>(mut sink: W, tweets: &[Tweet]) -> Result<()> {
    for t in tweets {
        serde_json::to_writer(&mut sink, &t.to_record()).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Write labeled tweets, one JSON object per line (corpus schema plus `label`, `place`, `event`).
pub fn write_labeled<W: Write>(mut sink: W, tweets: &[LabeledTweet]) -> Result<()> {
    for t in tweets {
        let rec = LabeledRecord {
            tweet: t.tweet.to_record(),
            label: t.label,
            place: t.place.clone(),
            event: t.event.clone(),
        };
        serde_json::to_writer(&mut sink, &rec).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    Ok(())
}

/// Read a labeled dataset written by [`write_labeled`]. Any malformed record is fatal.
pub fn read_labeled<R: Read>(source: R) -> Result<Vec<LabeledTweet>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(source).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |reason: String| Error::Parse {
            what: "labeled dataset",
            line: i + 1,
            reason,
        };
        let value: serde_json::Value =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        if is_provenance(&value) {
            continue;
        }
        let rec: LabeledRecord =
            serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))?;
        let tweet = rec.tweet.into_tweet().map_err(parse_err)?;
        if !seen.insert(tweet.id.clone()) {
            return Err(parse_err(format!("duplicate id {:?}", tweet.id)));
        }
        out.push(LabeledTweet {
            tweet,
            label: rec.label,
            place: rec.place,
            event: rec.event,
        });
    }
    Ok(out)
}

/// Conjunction of place, hashtag, language and country constraints.
/// Empty sets and unset options impose nothing.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterSpec {
    place_names: BTreeSet<String>,
    hashtags: BTreeSet<String>,
    lang: Option<String>,
    country_code: Option<String>,
}

impl FilterSpec {
    pub fn new() -> Self {
        Self::default()
    }

    /// Place names are compared case-insensitively.
    pub fn place<S: AsRef<str>>(mut self, name: S) -> Self {
        self.place_names.insert(name.as_ref().trim().to_lowercase());
        self
    }

    pub fn places<I, S>(self, names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        names.into_iter().fold(self, |f, n| f.place(n))
    }

    /// Accepts `Harvey` or `#harvey`; stored lowercase without `#`.
    pub fn hashtag<S: AsRef<str>>(mut self, tag: S) -> Self {
        let tag = normalize_hashtag(tag.as_ref());
        if !tag.is_empty() {
            self.hashtags.insert(tag);
        }
        self
    }

    pub fn hashtags<I, S>(self, tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        tags.into_iter().fold(self, |f, t| f.hashtag(t))
    }

    pub fn lang<S: AsRef<str>>(mut self, lang: S) -> Self {
        self.lang = Some(lang.as_ref().trim().to_lowercase());
        self
    }

    pub fn country<S: AsRef<str>>(mut self, code: S) -> Self {
        self.country_code = Some(code.as_ref().trim().to_uppercase());
        self
    }

    pub fn place_names(&self) -> &BTreeSet<String> {
        &self.place_names
    }

    pub fn hashtag_set(&self) -> &BTreeSet<String> {
        &self.hashtags
    }

    pub fn lang_code(&self) -> Option<&str> {
        self.lang.as_deref()
    }

    pub fn country_code(&self) -> Option<&str> {
        self.country_code.as_deref()
    }

    pub fn matches(&self, t: &Tweet) -> bool {
        let place_ok = self.place_names.is_empty()
            || t.place_name
                .as_ref()
                .is_some_and(|p| self.place_names.contains(&p.to_lowercase()));
        let tag_ok =
            self.hashtags.is_empty() || t.hashtags.iter().any(|h| self.hashtags.contains(h));
        let lang_ok = self.lang.as_ref().is_none_or(|l| *l == t.lang);
        let country_ok = self
            .country_code
            .as_ref()
            .is_none_or(|c| *c == t.country_code);
        place_ok && tag_ok && lang_ok && country_ok
    }
}

pub fn filter_tweets(tweets: &[Tweet], spec: &FilterSpec) -> Vec<Tweet> {
    tweets.iter().filter(|t| spec.matches(t)).cloned().collect()
}

/// Number of tweets carrying hashtags of two or more of `events`.
pub fn count_multi_event<S: AsRef<str>>(tweets: &[Tweet], events: &[S]) -> usize {
    let tags: Vec<String> = events
        .iter()
        .map(|e| normalize_hashtag(e.as_ref()))
        .collect();
    tweets
        .iter()
        .filter(|t| tags.iter().filter(|tag| t.has_hashtag(tag)).count() >= 2)
        .count()
}

/// Place name → raw Saffir-Simpson category. Lookups are case-insensitive;
/// entries keep their original spelling and insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PlaceTable {
    entries: Vec<(String, i64)>,
    index: BTreeMap<String, usize>,
}

impl PlaceTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fails if the name (case-insensitively) is already present.
    pub fn insert(&mut self, name: &str, category: i64) -> Result<()> {
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Empty("place name"));
        }
        let key = name.to_lowercase();
        if self.index.contains_key(&key) {
            return Err(Error::Format {
                what: "place table",
                reason: format!("duplicate place {name:?}"),
            });
        }
        self.index.insert(key, self.entries.len());
        self.entries.push((name.to_string(), category));
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<(&str, i64)> {
        self.index
            .get(&name.trim().to_lowercase())
            .map(|&i| (self.entries[i].0.as_str(), self.entries[i].1))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, i64)> {
        self.entries.iter().map(|(n, c)| (n.as_str(), *c))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }
}

impl FromIterator<(String, i64)> for PlaceTable {
    /// Later duplicates are dropped.
    fn from_iter<I: IntoIterator<Item = (String, i64)>>(iter: I) -> Self {
        let mut table = PlaceTable::new();
        for (name, cat) in iter {
            let _ = table.insert(&name, cat);
        }
        table
    }
}

/// Read a `place,category` table with header. `#` lines are comments.
pub fn read_place_table<R: Read>(source: R) -> Result<PlaceTable> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(source);
    let mut table = PlaceTable::new();
    for record in reader.records() {
        let record = record.map_err(csv_err("place table"))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let bad = |reason: String| Error::Parse {
            what: "place table",
            line,
            reason,
        };
        if record.len() != 2 {
            return Err(bad(format!("expected 2 columns, found {}", record.len())));
        }
        let category: i64 = record[1]
            .parse()
            .map_err(|_| bad(format!("non-integer category {:?}", &record[1])))?;
        table
            .insert(&record[0], category)
            .map_err(|e| bad(e.to_string()))?;
    }
    Ok(table)
}

pub fn write_place_table<W: Write>(mut sink: W, table: &PlaceTable) -> Result<()> {
    writeln!(sink, "place,category")?;
    let mut w = csv::Writer::from_writer(sink);
    for (name, cat) in table.iter() {
        w.write_record([name, &cat.to_string()])
            .map_err(csv_err("place table"))?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn csv_err(what: &'static str) -> impl Fn(csv::Error) -> Error {
    move |e| {
        let line = e.position().map_or(0, |p| p.line() as usize);
        match e.kind() {
            csv::ErrorKind::Io(_) => Error::Io(e.into()),
            _ => Error::Parse {
                what,
                line,
                reason: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LabelOutcome {
    pub labeled: Vec<LabeledTweet>,
    /// Tweets with no place name, an unknown place, or a place whose category
    /// cannot be merged (0 or 5).
    pub skipped: usize,
    /// Places whose table category was rejected by [`merge_category`].
    pub rejected_places: BTreeSet<String>,
}

/// Attach the merged label of each tweet's place.
pub fn label_tweets(tweets: &[Tweet], table: &PlaceTable, event: &str) -> Result<LabelOutcome> {
    if table.is_empty() {
        return Err(Error::Empty("place table"));
    }
    let mut out = LabelOutcome::default();
    for t in tweets {
        let Some((place, raw)) = t.place_name.as_deref().and_then(|p| table.get(p)) else {
            out.skipped += 1;
            continue;
        };
        match merge_category(raw) {
            Ok(label) => out.labeled.push(LabeledTweet {
                tweet: t.clone(),
                label,
                place: place.to_string(),
                event: event.to_string(),
            }),
            Err(_) => {
                if out.rejected_places.insert(place.to_string()) {
                    log::warn!("place {place:?} has category {raw}; its tweets are not labeled");
                }
                out.skipped += 1;
            }
        }
    }
    Ok(out)
}

/// Read a whole file, mapping a missing path to an error that names it.
pub fn open_path(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}
