//! Semantic trend search over univariate time series.
//!
//! The crate is organised as a pipeline:
//!
//! * [`label_models`] fits Gaussian KDE models that map perceived slopes and
//!   two-segment shapes to crowdsourced trend words.
//! * [`trend_labeler`] linearizes a series at several resolutions, labels the
//!   segments and shapes with those models and scores each event's saliency.
//! * [`query_parser`] turns a natural-language trend query into slots,
//!   attribute and date filters.
//! * [`search_core`] and [`sequence_search`] retrieve, score and bucket the
//!   labeled events; [`facets`] builds the label-family filter tree.
//! * [`datastore`] reads and writes every on-disk format, and [`engine`] ties
//!   it all together behind the response type served by the CLI and HTTP API.

pub mod config;
pub mod datastore;
pub mod engine;
pub mod error;
pub mod facets;
pub mod label_models;
pub mod lexicon;
pub mod query_parser;
pub mod response;
pub mod search_core;
pub mod sequence_search;
pub mod trend_labeler;

pub use config::Config;
pub use error::{Error, Result};
