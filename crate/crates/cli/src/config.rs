//! Run configuration: a `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use hurricat::classify::{Hyperparameters, NbVariant};
use hurricat::features::FeatureMethod;
use hurricat::geolabel::{CategoryRule, DEFAULT_RADIUS_KM};
use hurricat::locpredict::DEFAULT_MIN_TWEETS;
use hurricat::{Algorithm, CategoryLabel};

use crate::CliError;

/// Raw settings in the order of precedence they were applied.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parse `key = value` lines. `#` starts a comment line; keys may use
    /// `-` or `_` interchangeably.
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        let mut s = Settings::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::usage(format!("{origin}: line {}: expected key = value", i + 1))
            })?;
            s.set(k, v);
        }
        Ok(s)
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Settings::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.0.insert(normalize_key(key), value.trim().to_string());
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn merge(&mut self, other: Settings) {
        self.0.extend(other.0);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn normalize_key(key: &str) -> String {
    let k = key.trim().to_lowercase();
    // Hyperparameter keys keep their dotted form; underscores are canonical.
    k.replace('-', "_")
}

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    raw.parse()
        .map_err(|e| CliError::usage(format!("invalid value {raw:?} for {key}: {e}")))
}

fn parse_bool(key: &str, raw: &str) -> Result<bool, CliError> {
    match raw {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(CliError::usage(format!(
            "invalid value {raw:?} for {key}: expected true or false"
        ))),
    }
}

fn list(raw: &str) -> Vec<String> {
    raw.split([',', ' '])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(String::from)
        .collect()
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub format: Option<String>,
    pub labeled: Option<PathBuf>,
    pub place_table: Option<PathBuf>,
    pub track: Option<PathBuf>,
    pub places: Option<PathBuf>,
    pub radius_km: f64,
    pub category_rule: CategoryRule,
    pub event: Option<String>,
    pub hashtags: Vec<String>,
    pub lang: Option<String>,
    pub country: Option<String>,
    pub features: FeatureMethod,
    pub embeddings: Option<PathBuf>,
    pub min_freq: usize,
    pub algorithm: Algorithm,
    pub k: usize,
    pub seed: u64,
    pub blocklist: Option<PathBuf>,
    pub out: PathBuf,
    pub min_tweets: usize,
    pub leaky_vocab: bool,
    pub sweep: bool,
    pub model: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
    pub place: Option<String>,
    pub truth: Option<CategoryLabel>,
    pub hyper: Hyperparameters,
    /// Whether `nb.variant` was given; otherwise it follows the feature method.
    pub nb_variant_set: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            format: None,
            labeled: None,
            place_table: None,
            track: None,
            places: None,
            radius_km: DEFAULT_RADIUS_KM,
            category_rule: CategoryRule::Nearest,
            event: None,
            hashtags: Vec::new(),
            lang: None,
            country: None,
            features: FeatureMethod::Bow,
            embeddings: None,
            min_freq: 1,
            algorithm: Algorithm::NaiveBayes,
            k: 10,
            seed: 0,
            blocklist: None,
            out: PathBuf::from("out"),
            min_tweets: DEFAULT_MIN_TWEETS,
            leaky_vocab: false,
            sweep: false,
            model: None,
            save_model: None,
            place: None,
            truth: None,
            hyper: Hyperparameters::default(),
            nb_variant_set: false,
        }
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self, CliError> {
        let mut c = RunConfig::default();
        for (key, raw) in s.iter() {
            let path = || Some(PathBuf::from(raw));
            match key {
                "corpus" => c.corpus = path(),
                "format" => c.format = Some(raw.to_string()),
                "labeled" => c.labeled = path(),
                "place_table" => c.place_table = path(),
                "track" => c.track = path(),
                "places" => c.places = path(),
                "radius_km" | "radius" => c.radius_km = parse_value(key, raw)?,
                "category_rule" => c.category_rule = parse_value(key, raw)?,
                "event" => c.event = Some(raw.to_string()),
                "hashtags" | "hashtag" => c.hashtags = list(raw),
                "lang" => c.lang = Some(raw.to_string()),
                "country" => c.country = Some(raw.to_string()),
                "features" => c.features = parse_value(key, raw)?,
                "embeddings" => c.embeddings = path(),
                "min_freq" => c.min_freq = parse_value(key, raw)?,
                "algorithm" => c.algorithm = parse_value(key, raw)?,
                "k" | "folds" => c.k = parse_value(key, raw)?,
                "seed" => c.seed = parse_value(key, raw)?,
                "blocklist" => c.blocklist = path(),
                "out" => c.out = PathBuf::from(raw),
                "min_tweets" => c.min_tweets = parse_value(key, raw)?,
                "leaky_vocab" => c.leaky_vocab = parse_bool(key, raw)?,
                "sweep" => c.sweep = parse_bool(key, raw)?,
                "model" => c.model = path(),
                "save_model" => c.save_model = path(),
                "place" => c.place = Some(raw.to_string()),
                "truth" => c.truth = Some(parse_value(key, raw)?),
                hyper if hyper.contains('.') => {
                    c.hyper
                        .set(hyper, raw)
                        .map_err(|e| CliError::usage(e.to_string()))?;
                    if hyper == "nb.variant" {
                        c.nb_variant_set = true;
                    }
                }
                other => return Err(CliError::usage(format!("unknown setting {other:?}"))),
            }
        }
        if c.k < 2 {
            return Err(CliError::usage(format!(
                "k must be at least 2, got {}",
                c.k
            )));
        }
        Ok(c)
    }

    /// Event name: explicit, else the first hashtag, else `all`.
    pub fn event_name(&self) -> String {
        self.event
            .clone()
            .or_else(|| {
                self.hashtags
                    .first()
                    .map(|h| h.trim_start_matches('#').to_lowercase())
            })
            .unwrap_or_else(|| "all".into())
    }

    /// Hyperparameters for `method`, with the naive Bayes variant following
    /// the method unless it was set explicitly.
    pub fn hyper_for(&self, method: FeatureMethod) -> Hyperparameters {
        let mut h = self.hyper;
        if !self.nb_variant_set {
            h.nb.variant = match method {
                FeatureMethod::Bow => NbVariant::Multinomial,
                FeatureMethod::Embeddings => NbVariant::Gaussian,
            };
        }
        h
    }

    /// Every input-relevant setting, resolved, for provenance headers.
    /// Output locations are left out so reruns elsewhere compare equal.
    pub fn entries(&self) -> BTreeMap<String, String> {
        let opt_path = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        let opt = |s: &Option<String>| s.clone().unwrap_or_default();
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("corpus", opt_path(&self.corpus));
        put("format", opt(&self.format));
        put("labeled", opt_path(&self.labeled));
        put("place_table", opt_path(&self.place_table));
        put("track", opt_path(&self.track));
        put("places", opt_path(&self.places));
        put("radius_km", self.radius_km.to_string());
        put("category_rule", self.category_rule.as_str().into());
        put("event", self.event_name());
        put("hashtags", self.hashtags.join(","));
        put("lang", opt(&self.lang));
        put("country", opt(&self.country));
        put("features", self.features.as_str().into());
        put("embeddings", opt_path(&self.embeddings));
        put("min_freq", self.min_freq.to_string());
        put("algorithm", self.algorithm.to_string());
        put("k", self.k.to_string());
        put("seed", self.seed.to_string());
        put("blocklist", opt_path(&self.blocklist));
        put("min_tweets", self.min_tweets.to_string());
        put("leaky_vocab", self.leaky_vocab.to_string());
        put("sweep", self.sweep.to_string());
        put("model", opt_path(&self.model));
        put("place", opt(&self.place));
        put(
            "truth",
            self.truth.map(|t| t.to_string()).unwrap_or_default(),
        );
        for (k, v) in self.hyper_for(self.features).entries() {
            put(k, v);
        }
        m
    }
}
