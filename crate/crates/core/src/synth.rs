//! Deterministic synthetic corpora and fixtures.
//!
//! [`synthetic_corpus`] draws tweets from two overlapping label-specific word
//! distributions. [`paper_fixture`] builds a small two-storm corpus whose
//! per-place and per-label counts follow the published Harvey and Irma
//! tables, together with a Harvey track and place list.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use std::path::{Path, PathBuf};

use crate::corpus::{write_corpus, write_place_table, CategoryLabel, GeoPoint, PlaceTable, Tweet};
use crate::error::Result;
use crate::features::EmbeddingTable;
use crate::geolabel::{write_places, write_track, PlaceEntry, TrackPoint};
use crate::rng::{substream, Domain};

pub const SHARED_WORDS: [&str; 16] = [
    "storm", "rain", "wind", "power", "water", "home", "safe", "people", "city", "today", "night",
    "street", "news", "update", "help", "family",
];

pub const MILD_WORDS: [&str; 12] = [
    "drizzle", "breezy", "gusty", "puddles", "cloudy", "showers", "minor", "branches", "flicker",
    "outage", "delay", "soggy",
];

pub const SEVERE_WORDS: [&str; 12] = [
    "destroyed",
    "flooding",
    "evacuate",
    "surge",
    "rescue",
    "collapsed",
    "devastating",
    "roof",
    "shelter",
    "debris",
    "catastrophic",
    "trapped",
];

const WORDS_PER_TWEET: usize = 10;

/// Word mixture for one tweet: shared, own-label and other-label words.
#[derive(Debug, Clone, Copy)]
pub struct WordMix {
    pub shared: f64,
    pub own: f64,
}

impl Default for WordMix {
    fn default() -> Self {
        WordMix {
            shared: 0.4,
            own: 0.45,
        }
    }
}

fn label_words(label: CategoryLabel) -> &'static [&'static str] {
    match label {
        CategoryLabel::Low => &MILD_WORDS,
        CategoryLabel::High => &SEVERE_WORDS,
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, words: &[&'a str]) -> &'a str {
    words[rng.random_range(0..words.len())]
}

/// Tweet text drawn from the distribution of `label`, with optional extra
/// words (hashtags, area terms) appended.
pub fn tweet_text(
    rng: &mut ChaCha8Rng,
    label: CategoryLabel,
    mix: WordMix,
    extra: &[&str],
) -> String {
    let mut words: Vec<&str> = (0..WORDS_PER_TWEET)
        .map(|_| {
            let u: f64 = rng.random();
            if u < mix.shared {
                pick(rng, &SHARED_WORDS)
            } else if u < mix.shared + mix.own {
                pick(rng, label_words(label))
            } else {
                pick(rng, label_words(label.other()))
            }
        })
        .collect();
    words.extend_from_slice(extra);
    words.join(" ")
}

fn base_tweet(id: String, text: String, timestamp: i64, place: &str, tags: &[&str]) -> Tweet {
    Tweet {
        id,
        text,
        timestamp,
        geo: None,
        place_name: Some(place.to_string()),
        hashtags: tags.iter().map(|t| t.to_string()).collect(),
        lang: "en".into(),
        country_code: "US".into(),
    }
}

pub const SYNTHETIC_EVENT: &str = "synthetic";
const SYNTHETIC_START: i64 = 1_600_000_000;
const TOWNS_PER_LABEL: usize = 10;

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub tweets: Vec<Tweet>,
    /// Every town with a raw category: 1 or 2 for mild towns, 3 or 4 for severe.
    pub places: PlaceTable,
}

pub fn town_name(label: CategoryLabel, i: usize) -> String {
    match label {
        CategoryLabel::Low => format!("Mildford {i}"),
        CategoryLabel::High => format!("Stormport {i}"),
    }
}

/// `per_label` tweets for each label, spread over ten towns per label.
pub fn synthetic_corpus(per_label: usize, seed: u64) -> SyntheticCorpus {
    let mut rng = substream(seed, Domain::Synthetic, 0);
    let mut places = PlaceTable::new();
    for label in CategoryLabel::ALL {
        for i in 0..TOWNS_PER_LABEL {
            let raw = 1 + 2 * label.index() as i64 + (i % 2) as i64;
            places
                .insert(&town_name(label, i), raw)
                .expect("town names are distinct");
        }
    }
    let mut tweets = Vec::with_capacity(2 * per_label);
    for label in CategoryLabel::ALL {
        for i in 0..per_label {
            let n = tweets.len();
            let text = tweet_text(&mut rng, label, WordMix::default(), &["#hurricane"]);
            tweets.push(base_tweet(
                format!("syn{n:06}"),
                text,
                SYNTHETIC_START + 60 * n as i64,
                &town_name(label, i % TOWNS_PER_LABEL),
                &["hurricane"],
            ));
        }
    }
    SyntheticCorpus { tweets, places }
}

/// `n` tweets from one town, drawn from the distribution of `label`.
pub fn synthetic_town(
    place: &str,
    label: CategoryLabel,
    n: usize,
    seed: u64,
    stream: u64,
) -> Vec<Tweet> {
    let mut rng = substream(seed, Domain::Synthetic, 1000 + stream);
    (0..n)
        .map(|i| {
            let text = tweet_text(&mut rng, label, WordMix::default(), &["#hurricane"]);
            base_tweet(
                format!("town{stream:04}-{i:04}"),
                text,
                SYNTHETIC_START + 60 * i as i64,
                place,
                &["hurricane"],
            )
        })
        .collect()
}

/// Embeddings for every synthetic word: mild words lean to `+1` on axis 0,
/// severe words to `-1`, shared words carry noise only.
pub fn synthetic_embeddings(dim: usize, seed: u64) -> Result<EmbeddingTable> {
    let mut rng = substream(seed, Domain::Synthetic, 2);
    let mut entries = Vec::new();
    let groups: [(&[&str], f64); 3] = [
        (&SHARED_WORDS, 0.0),
        (&MILD_WORDS, 1.0),
        (&SEVERE_WORDS, -1.0),
    ];
    for (words, lean) in groups {
        for w in words {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
            v[0] += lean;
            entries.push((w.to_string(), v));
        }
    }
    EmbeddingTable::from_entries(dim, entries)
}

/// One place in the two-storm fixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixturePlace {
    pub name: &'static str,
    pub category: i64,
    /// Tweets with the storm hashtag, before the language and country filters.
    pub tagged: usize,
    /// Of those, tweets in English and inside the United States.
    pub kept: usize,
    pub lat: f64,
    pub lon: f64,
}

const fn fp(
    name: &'static str,
    category: i64,
    tagged: usize,
    kept: usize,
    lat: f64,
    lon: f64,
) -> FixturePlace {
    FixturePlace {
        name,
        category,
        tagged,
        kept,
        lat,
        lon,
    }
}

pub const HARVEY_PLACES: [FixturePlace; 9] = [
    fp("Aransas Pass", 4, 5, 5, 27.9095, -97.1500),
    fp("Corpus Christi", 4, 416, 241, 27.8006, -97.3964),
    fp("Fulton", 4, 12, 12, 28.0614, -97.0411),
    fp("Holiday Beach", 4, 1, 1, 28.1519, -96.9764),
    fp("Port Aransas", 4, 13, 13, 27.8339, -97.0611),
    fp("Rockport", 4, 8, 8, 28.0206, -97.0544),
    fp("Victoria", 1, 30, 25, 28.8053, -97.0036),
    fp("Bay City", 2, 20, 18, 28.9828, -95.9694),
    fp("Houston", 1, 75, 60, 29.7604, -95.3698),
];

pub const IRMA_PLACES: [FixturePlace; 6] = [
    fp("Cudjoe Key", 4, 34, 30, 24.6710, -81.4984),
    fp("Marathon", 4, 50, 45, 24.7136, -81.0903),
    fp("Marco Island", 3, 60, 57, 25.9412, -81.7184),
    fp("Naples", 2, 66, 60, 26.1420, -81.7948),
    fp("Fort Myers", 1, 80, 70, 26.6406, -81.8723),
    fp("Sarasota", 1, 50, 46, 27.3364, -82.5307),
];

/// Towns held out of the place tables for location prediction, with their
/// true labels and tweet counts.
pub const IRMA_VALIDATION_TOWNS: [(&str, CategoryLabel, usize); 2] = [
    ("Plant City", CategoryLabel::Low, 37),
    ("Crystal River", CategoryLabel::Low, 12),
];

/// Untagged tweets per table place and tweets from places outside both tables.
const UNTAGGED_PER_PLACE: usize = 3;
const OUTSIDE_PLACES: [&str; 2] = ["Austin", "Dallas"];
const OUTSIDE_PER_PLACE: usize = 6;
/// Tweets tagged with both storms.
const DOUBLE_TAGGED: usize = 4;

const HARVEY_START: i64 = 1_503_705_600;
const IRMA_START: i64 = 1_505_001_600;

#[derive(Debug, Clone)]
pub struct PaperFixture {
    pub tweets: Vec<Tweet>,
    pub harvey_places: PlaceTable,
    pub irma_places: PlaceTable,
    pub harvey_track: Vec<TrackPoint>,
    /// Harvey table places with coordinates.
    pub harvey_place_list: Vec<PlaceEntry>,
}

fn table(places: &[FixturePlace]) -> PlaceTable {
    let mut t = PlaceTable::new();
    for p in places {
        t.insert(p.name, p.category)
            .expect("fixture names are distinct");
    }
    t
}

/// Advisory positions and intensities around landfall, six-hourly.
pub fn harvey_track() -> Vec<TrackPoint> {
    const FIXES: [(i64, f64, f64, u8); 10] = [
        (1_503_597_600, 24.4, -93.6, 1),
        (1_503_640_800, 25.6, -95.1, 2),
        (1_503_662_400, 26.3, -95.8, 3),
        (1_503_684_000, 27.1, -96.3, 4),
        (1_503_705_600, 27.8, -96.8, 4),
        (1_503_716_400, 28.0, -97.0, 4),
        (1_503_727_200, 28.3, -97.2, 3),
        (1_503_748_800, 28.7, -97.3, 1),
        (1_503_770_400, 29.0, -97.5, 1),
        (1_503_792_000, 29.2, -97.4, 0),
    ];
    FIXES
        .iter()
        .map(|&(t, lat, lon, cat)| {
            TrackPoint::new(GeoPoint::new(lat, lon).expect("valid fix"), t, cat).expect("valid fix")
        })
        .collect()
}

fn label_of(category: i64) -> CategoryLabel {
    if category >= 3 {
        CategoryLabel::High
    } else {
        CategoryLabel::Low
    }
}

struct FixtureWriter {
    rng: ChaCha8Rng,
    tweets: Vec<Tweet>,
}

impl FixtureWriter {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        start: i64,
        place: &str,
        label: CategoryLabel,
        tags: &[&str],
        area: &[&str],
        lang: &str,
        cc: &str,
    ) {
        let n = self.tweets.len();
        let mut extra: Vec<String> = area.iter().map(|a| a.to_string()).collect();
        extra.extend(tags.iter().map(|t| format!("#{t}")));
        let extra: Vec<&str> = extra.iter().map(String::as_str).collect();
        let text = tweet_text(&mut self.rng, label, WordMix::default(), &extra);
        let mut t = base_tweet(
            format!("fx{n:06}"),
            text,
            start + 47 * n as i64,
            place,
            tags,
        );
        t.lang = lang.into();
        t.country_code = cc.into();
        self.tweets.push(t);
    }

    fn storm(&mut self, places: &[FixturePlace], tag: &str, area: &[&str], start: i64) {
        for p in places {
            let label = label_of(p.category);
            for i in 0..p.tagged {
                let (lang, cc) = if i < p.kept {
                    ("en", "US")
                } else if (i - p.kept) % 2 == 0 {
                    ("es", "US")
                } else {
                    ("en", "MX")
                };
                self.push(start, p.name, label, &[tag], area, lang, cc);
            }
            for _ in 0..UNTAGGED_PER_PLACE {
                self.push(start, p.name, label, &["weather"], &[], "en", "US");
            }
        }
    }
}

pub fn paper_fixture(seed: u64) -> PaperFixture {
    let mut w = FixtureWriter {
        rng: substream(seed, Domain::Synthetic, 3),
        tweets: Vec::new(),
    };
    w.storm(&HARVEY_PLACES, "harvey", &["texas"], HARVEY_START);
    w.storm(&IRMA_PLACES, "irma", &["florida"], IRMA_START);
    for (name, label, n) in IRMA_VALIDATION_TOWNS {
        for _ in 0..n {
            w.push(IRMA_START, name, label, &["irma"], &["florida"], "en", "US");
        }
    }
    for place in OUTSIDE_PLACES {
        for _ in 0..OUTSIDE_PER_PLACE {
            w.push(
                HARVEY_START,
                place,
                CategoryLabel::Low,
                &["harvey"],
                &["texas"],
                "en",
                "US",
            );
        }
    }
    for _ in 0..DOUBLE_TAGGED {
        w.push(
            IRMA_START,
            OUTSIDE_PLACES[1],
            CategoryLabel::Low,
            &["harvey", "irma"],
            &[],
            "en",
            "US",
        );
    }
    PaperFixture {
        tweets: w.tweets,
        harvey_places: table(&HARVEY_PLACES),
        irma_places: table(&IRMA_PLACES),
        harvey_track: harvey_track(),
        harvey_place_list: HARVEY_PLACES
            .iter()
            .map(|p| PlaceEntry {
                name: p.name.to_string(),
                position: GeoPoint::new(p.lat, p.lon).expect("valid place"),
            })
            .collect(),
    }
}

/// Seed used for the bundled fixture files.
pub const FIXTURE_SEED: u64 = 2017;
pub const AREA_TERMS: [&str; 4] = ["florida", "harvey", "irma", "texas"];

/// Contents of every bundled fixture file, by file name.
pub fn fixture_files() -> Result<Vec<(&'static str, String)>> {
    fn text(f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<String> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        Ok(String::from_utf8(buf).expect("utf-8"))
    }
    let storms = paper_fixture(FIXTURE_SEED);
    let synthetic = synthetic_corpus(200, FIXTURE_SEED);
    Ok(vec![
        ("storms.jsonl", text(|b| write_corpus(b, &storms.tweets))?),
        (
            "harvey_places.csv",
            text(|b| write_place_table(b, &storms.harvey_places))?,
        ),
        (
            "irma_places.csv",
            text(|b| write_place_table(b, &storms.irma_places))?,
        ),
        (
            "harvey_track.csv",
            text(|b| write_track(b, &storms.harvey_track))?,
        ),
        (
            "harvey_coords.csv",
            text(|b| write_places(b, &storms.harvey_place_list))?,
        ),
        (
            "area_terms.txt",
            AREA_TERMS.iter().map(|t| format!("{t}\n")).collect(),
        ),
        (
            "synthetic.jsonl",
            text(|b| write_corpus(b, &synthetic.tweets))?,
        ),
        (
            "synthetic_places.csv",
            text(|b| write_place_table(b, &synthetic.places))?,
        ),
        (
            "synthetic_embeddings.txt",
            text(|b| synthetic_embeddings(16, FIXTURE_SEED)?.write(b))?,
        ),
    ])
}

/// Write [`fixture_files`] into `dir`.
pub fn write_fixture_files(dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (name, contents) in fixture_files()? {
        let p = dir.join(name);
        std::fs::write(&p, contents)?;
        paths.push(p);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{filter_tweets, label_tweets, FilterSpec};
    use crate::geolabel::{build_place_table, CategoryRule, DEFAULT_RADIUS_KM};

    #[test]
    fn synthetic_corpus_is_deterministic_and_balanced() {
        let a = synthetic_corpus(50, 4);
        assert_eq!(a.tweets, synthetic_corpus(50, 4).tweets);
        assert_ne!(a.tweets, synthetic_corpus(50, 5).tweets);
        let labeled = label_tweets(&a.tweets, &a.places, SYNTHETIC_EVENT).unwrap();
        assert_eq!(labeled.labeled.len(), 100);
        let high = labeled
            .labeled
            .iter()
            .filter(|t| t.label == CategoryLabel::High)
            .count();
        assert_eq!(high, 50);
    }

    #[test]
    fn fixture_counts_follow_the_tables() {
        let f = paper_fixture(0);
        let harvey = FilterSpec::new().hashtag("harvey");
        let cc = filter_tweets(&f.tweets, &harvey.clone().place("Corpus Christi"));
        assert_eq!(cc.len(), 416);
        let kept = filter_tweets(&f.tweets, &harvey.lang("en").country("US"));
        let out = label_tweets(&kept, &f.harvey_places, "harvey").unwrap();
        let high = out
            .labeled
            .iter()
            .filter(|t| t.label == CategoryLabel::High)
            .count();
        assert_eq!((out.labeled.len() - high, high), (103, 280));
        let kept = filter_tweets(
            &f.tweets,
            &FilterSpec::new().hashtag("irma").lang("en").country("US"),
        );
        let out = label_tweets(&kept, &f.irma_places, "irma").unwrap();
        let high = out
            .labeled
            .iter()
            .filter(|t| t.label == CategoryLabel::High)
            .count();
        assert_eq!((out.labeled.len() - high, high), (176, 132));
    }

    #[test]
    fn category_four_places_sit_on_the_category_four_segment() {
        let f = paper_fixture(0);
        let t = build_place_table(
            &f.harvey_place_list,
            &f.harvey_track,
            DEFAULT_RADIUS_KM,
            CategoryRule::Nearest,
        )
        .unwrap();
        for p in HARVEY_PLACES.iter().filter(|p| p.category == 4) {
            assert_eq!(t.get(p.name).map(|(_, c)| c), Some(4), "{}", p.name);
        }
    }
}
