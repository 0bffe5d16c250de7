//! Country-index ingestion and joining.
//!
//! Index CSVs arrive with arbitrary column layouts and country spellings;
//! this module extracts just (country, score, rank) via a per-index column
//! mapping, canonicalizes country names, and inner-joins the index tables
//! with the anthem feature store.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

use crate::features::{FeatureStore, FEATURE_NAMES};

/// Alias table shipped with the crate; `alias,canonical` pairs, both in
/// canonical (post-normalization) spelling.
const ALIAS_TABLE_CSV: &str = include_str!("../data/country_aliases.csv");

fn alias_table() -> &'static BTreeMap<String, String> {
    static TABLE: OnceLock<BTreeMap<String, String>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut map = BTreeMap::new();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(ALIAS_TABLE_CSV.as_bytes());
        for record in reader.records() {
            let record = record.expect("bundled alias table is valid CSV");
            let alias = record.get(0).expect("alias column").to_string();
            let canonical = record.get(1).expect("canonical column").to_string();
            map.insert(alias, canonical);
        }
        map
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IndexError {
    #[error("country name is empty after trimming")]
    EmptyCountryName,
    #[error("index csv is not valid UTF-8")]
    InvalidUtf8,
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
    #[error("duplicate country '{country}' from rows {first_row} and {second_row}")]
    DuplicateCountry {
        country: String,
        first_row: usize,
        second_row: usize,
    },
    #[error("column {column} is not present in the header (width {width})")]
    MissingColumn { column: usize, width: usize },
    #[error("feature store is empty")]
    EmptyFeatureStore,
    #[error("joining '{index}' with the feature store leaves no countries")]
    EmptyIntersection { index: String },
}

/// Whether a higher score is the desirable direction for an index. The
/// tables themselves use raw scores; this metadata is echoed into reports so
/// readers can interpret Low/High columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexDirection {
    HigherIsBetter,
    HigherIsWorse,
}

/// Positional column mapping for one index CSV.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub country: usize,
    pub score: usize,
    #[serde(default)]
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub score: f64,
    pub rank: Option<u32>,
}

/// One global index: canonical country -> (score, optional rank).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexTable {
    pub name: String,
    pub direction: IndexDirection,
    pub rows: BTreeMap<String, IndexEntry>,
}

/// Canonicalizes a country name: trim, case-fold, strip diacritics, collapse
/// internal whitespace, then apply the bundled alias table. Idempotent.
pub fn normalize_country_name(raw: &str) -> Result<String, IndexError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(IndexError::EmptyCountryName);
    }
    let folded: String = trimmed
        .to_lowercase()
        .nfd()
        .filter(|c| !is_combining_mark(*c))
        .map(|c| if c == '\u{2019}' { '\'' } else { c })
        .collect();
    let collapsed = folded.split_whitespace().collect::<Vec<_>>().join(" ");
    if collapsed.is_empty() {
        return Err(IndexError::EmptyCountryName);
    }
    Ok(alias_table().get(&collapsed).cloned().unwrap_or(collapsed))
}

/// Parses one index CSV. Only the mapped country/score/rank columns are
/// read; everything else is dropped. Rows are numbered from 1 with the
/// header as row 1.
pub fn parse_index_csv(
    bytes: &[u8],
    name: &str,
    direction: IndexDirection,
    mapping: &ColumnMapping,
) -> Result<IndexTable, IndexError> {
    let text = std::str::from_utf8(bytes).map_err(|_| IndexError::InvalidUtf8)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(text.as_bytes());

    let header_width = reader
        .headers()
        .map_err(|e| IndexError::Row {
            row: 1,
            message: format!("unreadable header: {e}"),
        })?
        .len();
    let mut required = vec![mapping.country, mapping.score];
    required.extend(mapping.rank);
    for &column in &required {
        if column >= header_width {
            return Err(IndexError::MissingColumn {
                column,
                width: header_width,
            });
        }
    }

    let mut rows: BTreeMap<String, IndexEntry> = BTreeMap::new();
    let mut first_seen: BTreeMap<String, usize> = BTreeMap::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| IndexError::Row {
            row,
            message: format!("malformed record: {e}"),
        })?;
        let cell = |column: usize| -> Result<&str, IndexError> {
            record.get(column).ok_or(IndexError::Row {
                row,
                message: format!("missing column {column}"),
            })
        };
        let country =
            normalize_country_name(cell(mapping.country)?).map_err(|_| IndexError::Row {
                row,
                message: "empty country name".to_string(),
            })?;
        let score: f64 = cell(mapping.score)?
            .trim()
            .parse()
            .ok()
            .filter(|s: &f64| s.is_finite())
            .ok_or(IndexError::Row {
                row,
                message: "unparseable score".to_string(),
            })?;
        let rank = match mapping.rank {
            Some(column) => {
                let raw = cell(column)?.trim();
                if raw.is_empty() {
                    None
                } else {
                    Some(raw.parse::<u32>().map_err(|_| IndexError::Row {
                        row,
                        message: "unparseable rank".to_string(),
                    })?)
                }
            }
            None => None,
        };
        if let Some(&first_row) = first_seen.get(&country) {
            return Err(IndexError::DuplicateCountry {
                country,
                first_row,
                second_row: row,
            });
        }
        first_seen.insert(country.clone(), row);
        rows.insert(country, IndexEntry { score, rank });
    }

    Ok(IndexTable {
        name: name.to_string(),
        direction,
        rows,
    })
}

/// How index tables are joined with the feature store.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JoinMode {
    /// Rows are the countries present in the feature store and every index.
    GlobalIntersection,
    /// Rows are all feature-store countries; each index keeps its own
    /// pairwise intersection.
    PerIndex,
}

/// Per-index inner join with the feature store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexJoin {
    pub name: String,
    pub direction: IndexDirection,
    /// Sorted canonical names common to this index and the dataset rows.
    pub countries: Vec<String>,
    /// Scores aligned with `countries`.
    pub scores: Vec<f64>,
    /// Positions of `countries` within [`JoinedDataset::countries`].
    pub country_rows: Vec<usize>,
}

/// Drop bookkeeping for one join.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct JoinProvenance {
    /// Per index: feature-store countries absent from that index.
    pub dropped_from_features: BTreeMap<String, Vec<String>>,
    /// Per index: index countries absent from the feature store.
    pub dropped_from_index: BTreeMap<String, Vec<String>>,
}

impl JoinProvenance {
    pub fn drop_counts(&self) -> BTreeMap<String, (usize, usize)> {
        let mut out = BTreeMap::new();
        for (name, dropped) in &self.dropped_from_features {
            out.entry(name.clone()).or_insert((0, 0)).0 = dropped.len();
        }
        for (name, dropped) in &self.dropped_from_index {
            out.entry(name.clone()).or_insert((0, 0)).1 = dropped.len();
        }
        out
    }
}

/// Feature matrix and index scores on a shared, deterministic country order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinedDataset {
    pub mode: JoinMode,
    /// Sorted canonical names forming the dataset rows.
    pub countries: Vec<String>,
    pub feature_names: Vec<String>,
    /// `countries.len()` x 8.
    pub features: Vec<Vec<f64>>,
    pub index_names: Vec<String>,
    /// `countries.len()` x `index_names.len()`; `None` only in per-index
    /// mode where a country is missing from that index.
    pub index_scores: Vec<Vec<Option<f64>>>,
    pub index_joins: Vec<IndexJoin>,
    pub provenance: JoinProvenance,
}

/// Inner-joins the feature store with each index table on canonical names.
/// Row order is always sorted canonical names, so the join is insensitive to
/// input row order.
pub fn join_corpus_indices(
    features: &FeatureStore,
    indices: &[IndexTable],
    mode: JoinMode,
) -> Result<JoinedDataset, IndexError> {
    if features.vectors.is_empty() {
        return Err(IndexError::EmptyFeatureStore);
    }
    let feature_countries: BTreeSet<String> = features.countries().into_iter().collect();

    let mut provenance = JoinProvenance::default();
    for index in indices {
        let in_index: BTreeSet<&String> = index.rows.keys().collect();
        provenance.dropped_from_index.insert(
            index.name.clone(),
            index
                .rows
                .keys()
                .filter(|c| !feature_countries.contains(*c))
                .cloned()
                .collect(),
        );
        provenance.dropped_from_features.insert(
            index.name.clone(),
            feature_countries
                .iter()
                .filter(|c| !in_index.contains(c))
                .cloned()
                .collect(),
        );
    }

    let countries: Vec<String> = match mode {
        JoinMode::GlobalIntersection => {
            let mut common = feature_countries.clone();
            for index in indices {
                common.retain(|c| index.rows.contains_key(c));
            }
            common.into_iter().collect()
        }
        JoinMode::PerIndex => feature_countries.iter().cloned().collect(),
    };
    if countries.is_empty() {
        let name = indices
            .first()
            .map_or_else(|| "<none>".to_string(), |i| i.name.clone());
        return Err(IndexError::EmptyIntersection { index: name });
    }

    let row_of: BTreeMap<&str, usize> = countries
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();

    let features_matrix: Vec<Vec<f64>> = countries
        .iter()
        .map(|c| {
            features
                .get(c)
                .expect("joined country exists in the feature store")
                .values()
                .to_vec()
        })
        .collect();

    let mut index_scores = vec![vec![None; indices.len()]; countries.len()];
    let mut index_joins = Vec::with_capacity(indices.len());
    for (j, index) in indices.iter().enumerate() {
        let mut join_countries = Vec::new();
        let mut scores = Vec::new();
        let mut country_rows = Vec::new();
        for (country, entry) in &index.rows {
            if let Some(&row) = row_of.get(country.as_str()) {
                join_countries.push(country.clone());
                scores.push(entry.score);
                country_rows.push(row);
                index_scores[row][j] = Some(entry.score);
            }
        }
        if join_countries.is_empty() {
            return Err(IndexError::EmptyIntersection {
                index: index.name.clone(),
            });
        }
        index_joins.push(IndexJoin {
            name: index.name.clone(),
            direction: index.direction,
            countries: join_countries,
            scores,
            country_rows,
        });
    }

    Ok(JoinedDataset {
        mode,
        countries,
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        features: features_matrix,
        index_names: indices.iter().map(|i| i.name.clone()).collect(),
        index_scores,
        index_joins,
        provenance,
    })
}

impl JoinedDataset {
    /// CSV view: `country,<features...>,<index scores...>`; missing scores
    /// are empty cells (per-index mode only).
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header: Vec<String> = vec!["country".to_string()];
            header.extend(self.feature_names.iter().cloned());
            header.extend(self.index_names.iter().cloned());
            w.write_record(&header).expect("in-memory csv");
            for (i, country) in self.countries.iter().enumerate() {
                let mut record = vec![country.clone()];
                record.extend(self.features[i].iter().map(|v| format!("{v}")));
                record.extend(
                    self.index_scores[i]
                        .iter()
                        .map(|s| s.map_or(String::new(), |v| format!("{v}"))),
                );
                w.write_record(&record).expect("in-memory csv");
            }
            w.flush().expect("in-memory csv");
        }
        String::from_utf8(out).expect("csv output is utf-8")
    }
}
