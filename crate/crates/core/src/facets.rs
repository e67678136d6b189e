//! Label families for faceted filtering, and a suggested hypernym/hyponym
//! hierarchy derived from how label angle ranges contain each other.
//!
//! A family is a base descriptor plus its modifier variants: "soaring" is
//! the parent of "slowly soaring" and "sharply soaring". Unchecking a parent
//! excludes the whole family.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::label_models::{LabelModels, LabelStats};
use crate::lexicon::{SynonymTable, SynonymTarget};
use crate::trend_labeler::EventKind;

/// Family of a label: compound labels drop their leading modifier.
pub fn family_of(label: &str, kind: EventKind) -> &str {
    match (kind, label.split_once(' ')) {
        (EventKind::Compound, Some((_, rest))) => rest,
        _ => label,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FacetNode {
    pub label: String,
    pub children: Vec<FacetNode>,
    pub checked: bool,
    /// Events carrying this label or any descendant label.
    pub match_count: usize,
}

fn order(nodes: &mut [FacetNode]) {
    nodes.sort_by(|a, b| b.match_count.cmp(&a.match_count).then(a.label.cmp(&b.label)));
}

/// Builds the facet tree from the labels of matched events (one entry per
/// event). Families are ordered by match count, then label.
pub fn build_facet_tree<'a, I>(matched: I) -> Vec<FacetNode>
where
    I: IntoIterator<Item = (&'a str, EventKind)>,
{
    // family → (own count, variant → count)
    let mut families: BTreeMap<String, (usize, BTreeMap<String, usize>)> = BTreeMap::new();
    for (label, kind) in matched {
        let family = family_of(label, kind);
        let entry = families.entry(family.to_string()).or_default();
        if family == label {
            entry.0 += 1;
        } else {
            *entry.1.entry(label.to_string()).or_default() += 1;
        }
    }
    let mut nodes: Vec<FacetNode> = families
        .into_iter()
        .map(|(label, (own, variants))| {
            let mut children: Vec<FacetNode> = variants
                .into_iter()
                .map(|(label, n)| FacetNode {
                    label,
                    children: Vec::new(),
                    checked: true,
                    match_count: n,
                })
                .collect();
            order(&mut children);
            FacetNode {
                match_count: own + children.iter().map(|c| c.match_count).sum::<usize>(),
                label,
                children,
                checked: true,
            }
        })
        .collect();
    order(&mut nodes);
    nodes
}

/// Whether an event label is hidden by the excluded facet labels: either
/// the label itself or its family parent is excluded.
pub fn is_excluded(label: &str, kind: EventKind, excluded: &BTreeSet<String>) -> bool {
    excluded.contains(label) || excluded.contains(family_of(label, kind))
}

/// Marks excluded nodes, and every descendant of an excluded node, unchecked.
pub fn apply_exclusions(nodes: &mut [FacetNode], excluded: &BTreeSet<String>) {
    fn walk(n: &mut FacetNode, excluded: &BTreeSet<String>, parent_off: bool) {
        n.checked = !(parent_off || excluded.contains(&n.label));
        let off = !n.checked;
        for c in &mut n.children {
            walk(c, excluded, off);
        }
    }
    for n in nodes {
        walk(n, excluded, false);
    }
}

/// Parses the comma-separated `exclude` parameter.
pub fn parse_exclusions(param: &str) -> BTreeSet<String> {
    param
        .split(',')
        .map(|s| s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Every label the models know, with its kind.
fn model_labels(models: &LabelModels) -> Vec<(&str, EventKind)> {
    models
        .slope
        .keys()
        .map(|l| (l.as_str(), EventKind::Slope))
        .chain(models.compound.keys().map(|l| (l.as_str(), EventKind::Compound)))
        .chain(models.shape.keys().map(|l| (l.as_str(), EventKind::Shape)))
        .collect()
}

/// Labels related to a query term: the term's own family when it names a
/// label family, otherwise the families its synonyms point at (slope
/// selectors pick labels by angle mode). Unknown terms give an empty set.
pub fn related_labels(
    term: &str,
    models: &LabelModels,
    stats: &BTreeMap<String, LabelStats>,
    synonyms: &SynonymTable,
    flat_threshold_deg: f64,
) -> BTreeSet<String> {
    let labels = model_labels(models);
    let family = |name: &str| -> BTreeSet<String> {
        labels
            .iter()
            .filter(|(l, k)| family_of(l, *k) == name)
            .map(|(l, _)| l.to_string())
            .collect()
    };
    let own = family(term);
    if !own.is_empty() {
        return own;
    }
    let mut out = BTreeSet::new();
    for target in synonyms.get(term).unwrap_or(&[]) {
        match target {
            SynonymTarget::Token(t) => out.extend(family(t)),
            SynonymTarget::Family(f) => out.extend(
                stats
                    .iter()
                    .filter(|(_, s)| f.selects(s.mode, flat_threshold_deg))
                    .map(|(l, _)| l.clone()),
            ),
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeKind {
    Full,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsumptionEdge {
    pub hypernym: String,
    pub hyponym: String,
    pub kind: EdgeKind,
}

/// Suggested hypernym → hyponym edges from interquartile ranges. An edge is
/// full when the hyponym's IQR lies inside the hypernym's, and partial when
/// the two overlap by a positive amount of at least `partial_overlap` times
/// the hyponym's IQR width.
pub fn derive_hierarchy(stats: &[LabelStats], partial_overlap: f64) -> Vec<SubsumptionEdge> {
    let mut edges = Vec::new();
    for a in stats {
        for b in stats {
            if a.label == b.label {
                continue;
            }
            let kind = if b.iqr_low >= a.iqr_low && b.iqr_high <= a.iqr_high {
                Some(EdgeKind::Full)
            } else {
                let overlap = a.iqr_high.min(b.iqr_high) - a.iqr_low.max(b.iqr_low);
                (overlap > 0.0 && overlap >= partial_overlap * b.iqr_width())
                    .then_some(EdgeKind::Partial)
            };
            if let Some(kind) = kind {
                edges.push(SubsumptionEdge {
                    hypernym: a.label.clone(),
                    hyponym: b.label.clone(),
                    kind,
                });
            }
        }
    }
    edges.sort();
    edges
}
