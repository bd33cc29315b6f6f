//! Hurricane-category prediction from geo-tagged tweets.
//!
//! The crate covers the whole batch pipeline:
//!
//! * [`corpus`] parses raw tweet records, applies place/hashtag/language/country
//!   filters and attaches merged severity labels (`"12"` or `"34"`).
//! * [`geolabel`] derives a place → Saffir-Simpson category table from a storm track.
//! * [`text`] and [`features`] turn tweet text into term-frequency or averaged
//!   embedding vectors.
//! * [`classify`] holds five from-scratch classifiers behind one train/predict contract.
//! * [`eval`] runs stratified k-fold cross-validation and reports precision, recall and F1.
//! * [`locpredict`] predicts a location's category by majority vote over its tweets.
//!
//! Everything is deterministic given its inputs and a 64-bit seed.

pub mod classify;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod geolabel;
pub mod locpredict;
pub mod rng;
pub mod synth;
pub mod text;

pub use classify::{Algorithm, Dataset, TrainConfig, TrainedModel};
pub use corpus::{CategoryLabel, FilterSpec, GeoPoint, LabeledTweet, PlaceTable, Tweet};
pub use error::{Error, Result};
pub use features::{EmbeddingTable, FeatureExtractor, FeatureVector};
pub use text::{TokenList, Vocabulary};
