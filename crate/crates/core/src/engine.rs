//! The loaded search engine: corpus, models, index and parser, answering
//! queries with paged, facet-filterable responses.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::datastore::{
    load_companies_csv, load_events, load_models, load_postings, load_series_csv, postings_path,
    Corpus,
};
use crate::error::{Error, Result};
use crate::facets::{
    apply_exclusions, build_facet_tree, derive_hierarchy, family_of, is_excluded, related_labels,
    SubsumptionEdge,
};
use crate::label_models::{LabelModels, LabelStats};
use crate::lexicon::{default_stop_phrases, default_synonyms, StopPhrases, SynonymTable};
use crate::query_parser::{EventType, ParsedQuery, QueryParser};
use crate::response::{
    inexact_notification, sequence_bucket_view, single_bucket_view, BucketView, SearchResponse,
};
use crate::search_core::{
    bucket, resolve_terms, retrieve, Filters, Index, ScoredMatch, SearchOptions,
};
use crate::sequence_search::join_all;
use crate::trend_labeler::{EventKind, Observation};

/// Where the engine's inputs live on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct EnginePaths {
    /// Directory holding `series.csv` and, optionally, `companies.csv`.
    pub corpus: PathBuf,
    pub models: PathBuf,
    pub events: PathBuf,
}

impl EnginePaths {
    pub fn series(&self) -> PathBuf {
        self.corpus.join("series.csv")
    }

    pub fn companies(&self) -> PathBuf {
        self.corpus.join("companies.csv")
    }
}

/// One indexed label as listed by the labels endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelInfo {
    pub label: String,
    pub kind: EventKind,
    pub family: String,
    pub events: usize,
    /// Peak angle of the label's slope model, for slope and compound labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsResponse {
    /// Every word the parser treats as an exact trend term.
    pub vocabulary: Vec<String>,
    pub labels: Vec<LabelInfo>,
    pub families: Vec<String>,
}

#[derive(Debug)]
pub struct Engine {
    config: Config,
    models: LabelModels,
    stats: BTreeMap<String, LabelStats>,
    corpus: Corpus,
    index: Index,
    parser: QueryParser,
    synonyms: SynonymTable,
    opts: SearchOptions,
}

fn label_modes(stats: &BTreeMap<String, LabelStats>) -> BTreeMap<String, f64> {
    stats.iter().map(|(l, s)| (l.clone(), s.mode)).collect()
}

/// Drops repeats of the same labeled span found at several tolerance
/// levels, keeping the best-scoring copy (then the lowest document id).
fn distinct_spans(mut matches: Vec<ScoredMatch>) -> Vec<ScoredMatch> {
    matches.sort_by(|a, b| b.composite.total_cmp(&a.composite).then(a.doc.cmp(&b.doc)));
    let mut seen = BTreeSet::new();
    matches.retain(|m| seen.insert((m.chart_id.clone(), m.label.clone(), m.start_date, m.end_date)));
    matches
}

impl Engine {
    /// Builds the engine with the bundled synonym and stop-phrase lists.
    pub fn new(config: Config, models: LabelModels, corpus: Corpus) -> Result<Self> {
        Self::with_lexicon(
            config,
            models,
            corpus,
            default_synonyms(),
            default_stop_phrases(),
            None,
        )
    }

    /// Builds the engine. The events must have been labeled with `models`;
    /// saved postings, when given, must match the events.
    pub fn with_lexicon(
        config: Config,
        models: LabelModels,
        corpus: Corpus,
        synonyms: SynonymTable,
        stops: StopPhrases,
        postings: Option<&crate::search_core::Postings>,
    ) -> Result<Self> {
        config.validate()?;
        let fingerprint = models.fingerprint();
        if corpus.model_fingerprint != fingerprint {
            return Err(Error::StaleEvents {
                events: corpus.model_fingerprint.clone(),
                models: fingerprint,
            });
        }
        let stats = models.stats();
        let modes = label_modes(&stats);
        let index = match postings {
            Some(p) => Index::with_postings(corpus.events.clone(), modes, p)?,
            None => Index::build(corpus.events.clone(), modes),
        };
        let vocabulary: BTreeSet<String> = index
            .vocabulary()
            .map(String::from)
            .chain(models.labels().flat_map(|l| l.split(' ').map(String::from)))
            .collect();
        let parser = QueryParser::with_lexicon(&vocabulary, &corpus.metadata, synonyms.clone(), stops);
        Ok(Engine {
            opts: SearchOptions::from(&config),
            config,
            models,
            stats,
            corpus,
            index,
            parser,
            synonyms,
        })
    }

    /// Loads every input from disk, using the postings sidecar when present.
    pub fn load(config: Config, paths: &EnginePaths) -> Result<Self> {
        let charts = load_series_csv(&paths.series())?;
        let companies_path = paths.companies();
        let metadata = if companies_path.exists() {
            load_companies_csv(&companies_path)?
        } else {
            Vec::new()
        };
        let models = load_models(&paths.models)?;
        let (header, events) = load_events(&paths.events)?;
        let corpus = Corpus::new(charts, metadata, events, header.model_fingerprint)?;
        let sidecar = postings_path(&paths.events);
        let postings = if sidecar.exists() {
            Some(load_postings(&sidecar)?)
        } else {
            None
        };
        Self::with_lexicon(
            config,
            models,
            corpus,
            default_synonyms(),
            default_stop_phrases(),
            postings.as_ref(),
        )
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn models(&self) -> &LabelModels {
        &self.models
    }

    pub fn stats(&self) -> &BTreeMap<String, LabelStats> {
        &self.stats
    }

    pub fn corpus(&self) -> &Corpus {
        &self.corpus
    }

    pub fn index(&self) -> &Index {
        &self.index
    }

    pub fn parser(&self) -> &QueryParser {
        &self.parser
    }

    pub fn parse(&self, query: &str) -> Result<ParsedQuery> {
        if query.trim().is_empty() {
            return Err(Error::EmptyQuery);
        }
        self.parser.parse(query)
    }

    /// Answers a query. `page` is 1-based; pages past the end are empty.
    pub fn search(&self, query: &str, exclude: &BTreeSet<String>, page: usize) -> Result<SearchResponse> {
        let parsed = self.parse(query)?;
        let filters = Filters {
            attr: parsed.attr.clone(),
            date_range: parsed.date_range,
        };
        let mut per_slot: Vec<Vec<ScoredMatch>> = parsed
            .trend_terms
            .iter()
            .map(|slot| {
                let terms = resolve_terms(&self.index, slot, &self.synonyms, &self.opts);
                let matches = retrieve(&self.index, &terms, &filters, &self.opts)
                    .iter()
                    .map(|c| ScoredMatch::new(&self.index, c))
                    .collect();
                distinct_spans(matches)
            })
            .collect();

        // The tree lists every matched label, excluded ones unchecked.
        let mut seen = BTreeSet::new();
        let matched = per_slot
            .iter()
            .flatten()
            .filter(|m| seen.insert(m.doc))
            .map(|m| (m.label.as_str(), m.kind));
        let mut facet_tree = build_facet_tree(matched);
        apply_exclusions(&mut facet_tree, exclude);

        for slot in &mut per_slot {
            slot.retain(|m| !is_excluded(&m.label, m.kind, exclude));
        }
        let views: Vec<BucketView> = match parsed.event_type {
            EventType::Single => bucket(per_slot.into_iter().flatten().collect())
                .iter()
                .map(single_bucket_view)
                .collect(),
            EventType::Sequence => bucket(join_all(&per_slot, self.config.max_gap_days))
                .iter()
                .map(sequence_bucket_view)
                .collect(),
        };

        let page_size = self.config.page_size.max(1);
        let total_buckets = views.len();
        let page = page.max(1);
        let buckets = views
            .into_iter()
            .skip((page - 1).saturating_mul(page_size))
            .take(page_size)
            .collect();
        Ok(SearchResponse {
            notification: inexact_notification(&parsed.inexact_terms),
            facet_tree,
            buckets,
            page,
            page_count: total_buckets.div_ceil(page_size),
            total_buckets,
            query_echo: parsed,
        })
    }

    /// Series points of a chart, clipped to `[from, to)` when given.
    pub fn chart_points(
        &self,
        chart_id: &str,
        from: Option<NaiveDate>,
        to: Option<NaiveDate>,
    ) -> Result<Vec<Observation>> {
        let series = self
            .corpus
            .charts
            .get(chart_id)
            .ok_or_else(|| Error::UnknownChart(chart_id.to_string()))?;
        if let (Some(f), Some(t)) = (from, to) {
            if f > t {
                return Err(Error::InvalidRange(format!("from {f} is after to {t}")));
            }
        }
        Ok(series
            .points
            .iter()
            .filter(|p| from.map_or(true, |f| p.date >= f) && to.map_or(true, |t| p.date < t))
            .copied()
            .collect())
    }

    /// Every indexed label with its kind, family and event count.
    pub fn labels(&self) -> LabelsResponse {
        let mut counts: BTreeMap<(&str, EventKind), usize> = BTreeMap::new();
        for d in self.index.documents() {
            *counts.entry((d.event.label.as_str(), d.event.kind)).or_default() += 1;
        }
        let labels: Vec<LabelInfo> = counts
            .into_iter()
            .map(|((label, kind), events)| LabelInfo {
                label: label.to_string(),
                kind,
                family: family_of(label, kind).to_string(),
                events,
                mode: self.stats.get(label).map(|s| s.mode),
            })
            .collect();
        let families = labels
            .iter()
            .map(|l| l.family.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        LabelsResponse {
            vocabulary: self.parser.vocabulary().iter().cloned().collect(),
            labels,
            families,
        }
    }

    /// Suggested hypernym/hyponym edges between the fitted slope labels.
    pub fn hierarchy(&self) -> Vec<SubsumptionEdge> {
        let stats: Vec<LabelStats> = self.stats.values().cloned().collect();
        derive_hierarchy(&stats, self.config.partial_overlap)
    }

    /// Labels related to a query term (its family, or its synonyms' families).
    pub fn related(&self, term: &str) -> BTreeSet<String> {
        related_labels(
            &term.to_lowercase(),
            &self.models,
            &self.stats,
            &self.synonyms,
            self.config.flat_threshold_deg,
        )
    }
}
