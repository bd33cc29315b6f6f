//! Batch front end for the hurricat pipeline.
//!
//! Settings come from an optional `key = value` config file, then from
//! flags, then from `--set key=value` pairs; later sources win.
//! Exit codes: 0 success, 1 domain failure, 2 usage or I/O error.

pub mod commands;
pub mod config;
pub mod output;

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use config::{RunConfig, Settings};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::usage(format!("{}: {e}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<hurricat::Error> for CliError {
    fn from(e: hurricat::Error) -> Self {
        use hurricat::Error as E;
        let code = match &e {
            E::Io(_) | E::Parse { .. } | E::Format { .. } | E::InvalidConfig(_) => 2,
            E::Fold { source, .. } if matches!(**source, E::Io(_)) => 2,
            _ => 1,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "hurricat",
    version,
    about = "Hurricane-category prediction from geo-tagged tweets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Config file of `key = value` lines.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Word-embedding table in `count dim` text format.
    #[arg(long, global = true, value_name = "PATH")]
    pub embeddings: Option<PathBuf>,
    /// Area-specific terms to remove, one per line.
    #[arg(long, global = true, value_name = "PATH")]
    pub blocklist: Option<PathBuf>,
    /// Cross-validate every algorithm with both feature methods.
    #[arg(long, global = true)]
    pub sweep: bool,
    #[arg(long, global = true, value_name = "N")]
    pub min_tweets: Option<usize>,
    /// Build the vocabulary from the whole corpus rather than each training split.
    #[arg(long, global = true)]
    pub leaky_vocab: bool,
    #[arg(long, global = true, value_name = "nearest|max-within-radius")]
    pub category_rule: Option<String>,

    /// Raw tweet corpus (`.jsonl` or `.csv`).
    #[arg(long, global = true, value_name = "PATH")]
    pub corpus: Option<PathBuf>,
    /// Labeled dataset written by `label`.
    #[arg(long, global = true, value_name = "PATH")]
    pub labeled: Option<PathBuf>,
    /// `place,category` table.
    #[arg(long, global = true, value_name = "PATH")]
    pub place_table: Option<PathBuf>,
    /// Storm track, `time,lat,lon,category`.
    #[arg(long, global = true, value_name = "PATH")]
    pub track: Option<PathBuf>,
    /// Place coordinates, `name,lat,lon`.
    #[arg(long, global = true, value_name = "PATH")]
    pub places: Option<PathBuf>,
    #[arg(long, global = true, value_name = "KM")]
    pub radius: Option<f64>,
    #[arg(long, global = true)]
    pub event: Option<String>,
    /// Hashtag filter; repeat for several.
    #[arg(long = "hashtag", global = true)]
    pub hashtags: Vec<String>,
    #[arg(long, global = true)]
    pub lang: Option<String>,
    #[arg(long, global = true)]
    pub country: Option<String>,
    /// `bow` or `embeddings`.
    #[arg(long, global = true)]
    pub features: Option<String>,
    #[arg(long, global = true, value_name = "N")]
    pub min_freq: Option<usize>,
    #[arg(long, global = true)]
    pub algorithm: Option<String>,
    /// Number of folds.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Saved model bundle to predict with.
    #[arg(long, global = true, value_name = "PATH")]
    pub model: Option<PathBuf>,
    /// Where to save the trained model bundle.
    #[arg(long, global = true, value_name = "PATH")]
    pub save_model: Option<PathBuf>,
    #[arg(long, global = true)]
    pub place: Option<String>,
    /// True label of the place, `12` or `34`.
    #[arg(long, global = true)]
    pub truth: Option<String>,
    /// Any setting, e.g. `--set forest.n_trees=50`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Filter a corpus and label tweets by place category.
    Label,
    /// Cross-validate one configuration, or all of them with --sweep.
    Cv,
    /// Predict the category of one place by majority vote.
    Predict,
    /// Build a place table from a storm track.
    Geolabel,
    /// Remove area-specific terms from tweet text.
    StripTerms,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Label => "label",
            Command::Cv => "cv",
            Command::Predict => "predict",
            Command::Geolabel => "geolabel",
            Command::StripTerms => "strip-terms",
        }
    }
}

impl Cli {
    fn flag_settings(&self) -> Result<Settings, CliError> {
        let mut s = Settings::default();
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        let pairs: Vec<(&str, Option<String>)> = vec![
            ("seed", self.seed.map(|v| v.to_string())),
            ("out", path(&self.out)),
            ("embeddings", path(&self.embeddings)),
            ("blocklist", path(&self.blocklist)),
            ("sweep", self.sweep.then(|| "true".into())),
            ("min_tweets", self.min_tweets.map(|v| v.to_string())),
            ("leaky_vocab", self.leaky_vocab.then(|| "true".into())),
            ("category_rule", self.category_rule.clone()),
            ("corpus", path(&self.corpus)),
            ("labeled", path(&self.labeled)),
            ("place_table", path(&self.place_table)),
            ("track", path(&self.track)),
            ("places", path(&self.places)),
            ("radius_km", self.radius.map(|v| v.to_string())),
            ("event", self.event.clone()),
            (
                "hashtags",
                (!self.hashtags.is_empty()).then(|| self.hashtags.join(",")),
            ),
            ("lang", self.lang.clone()),
            ("country", self.country.clone()),
            ("features", self.features.clone()),
            ("min_freq", self.min_freq.map(|v| v.to_string())),
            ("algorithm", self.algorithm.clone()),
            ("k", self.k.map(|v| v.to_string())),
            ("model", path(&self.model)),
            ("save_model", path(&self.save_model)),
            ("place", self.place.clone()),
            ("truth", self.truth.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                s.set(k, &v);
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            s.set(k, v);
        }
        Ok(s)
    }

    /// Config file, then flags, then `--set`.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut settings = match &self.config {
            Some(p) => Settings::read(p)?,
            None => Settings::default(),
        };
        settings.merge(self.flag_settings()?);
        RunConfig::from_settings(&settings)
    }
}

/// Run a parsed command line and return the text for standard output.
pub fn run(cli: &Cli) -> Result<String, CliError> {
    let config = cli.resolve()?;
    match cli.command {
        Command::Label => commands::cmd_label(&config),
        Command::Cv => commands::cmd_cv(&config),
        Command::Predict => commands::cmd_predict(&config),
        Command::Geolabel => commands::cmd_geolabel(&config),
        Command::StripTerms => commands::cmd_strip_terms(&config),
    }
}

/// Parse `args` (including the program name) and run.
pub fn run_args<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| CliError::usage(e.to_string()))?;
    run(&cli)
}
