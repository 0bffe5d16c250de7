//! End-to-end orchestration: run configuration, the staged pipeline
//! (extract -> ingest -> cluster -> correlate -> report), artifact writing
//! with content hashes, and the reproducibility manifest.

pub mod svg;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{
    cluster_agreement, kmeans_fit, pearson, qualitative_labels, select_k, spearman, standardize,
    AnalysisError, ClusterAgreement, ClusterModel, QualitativeTable, SelectionDiagnostics,
};
use crate::corpus::{load_corpus, CorpusError, CorpusLoad, DropRecord};
use crate::features::{FeatureStore, FeatureStoreError};
use crate::indices::{
    join_corpus_indices, parse_index_csv, ColumnMapping, IndexDirection, IndexError, IndexTable,
    JoinMode, JoinedDataset,
};

pub use svg::{render_distributions_svg, render_heatmap_svg, SvgError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("corpus has {parseable} parseable anthem(s); at least 2 are required")]
    TooFewAnthems { parseable: usize },
    #[error("index file {path}: {source}")]
    IndexFile { path: PathBuf, source: IndexError },
    #[error(transparent)]
    Join(#[from] IndexError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Svg(#[from] SvgError),
    #[error(transparent)]
    FeatureStore(#[from] FeatureStoreError),
    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Svg,
}

/// One index CSV to ingest, as configured.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexSpec {
    pub csv: PathBuf,
    pub name: String,
    pub direction: IndexDirection,
    pub columns: ColumnMapping,
}

/// A fully-resolved run configuration. `seed` is always explicit; there is
/// no wall-clock fallback anywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub k_max: usize,
    pub join_mode: JoinMode,
    pub formats: BTreeSet<OutputFormat>,
    pub indices: Vec<IndexSpec>,
}

pub const DEFAULT_K_MAX: usize = 10;

/// Flag-level overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct ConfigOverrides {
    pub corpus_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k_max: Option<usize>,
    pub join_mode: Option<JoinMode>,
    pub formats: Option<Vec<OutputFormat>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfigFile {
    corpus_dir: Option<PathBuf>,
    output_dir: Option<PathBuf>,
    seed: Option<u64>,
    k_max: Option<usize>,
    join_mode: Option<JoinMode>,
    formats: Option<Vec<OutputFormat>>,
    #[serde(default)]
    indices: Vec<IndexSpec>,
}

/// Loads a TOML config (optional) and applies flag overrides. Relative paths
/// inside the config resolve against the config file's directory; flag paths
/// resolve against the working directory.
pub fn load_run_config(
    config_path: Option<&Path>,
    overrides: &ConfigOverrides,
) -> Result<RunConfig, PipelineError> {
    let mut file = RunConfigFile::default();
    if let Some(path) = config_path {
        let text = fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        file = toml::from_str(&text)
            .map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        file.corpus_dir = file.corpus_dir.map(|p| resolve(base, p));
        file.output_dir = file.output_dir.map(|p| resolve(base, p));
        for spec in &mut file.indices {
            spec.csv = resolve(base, std::mem::take(&mut spec.csv));
        }
    }

    let corpus_dir = overrides
        .corpus_dir
        .clone()
        .or(file.corpus_dir)
        .ok_or_else(|| {
            PipelineError::Config("corpus_dir is required (config or --corpus-dir)".into())
        })?;
    let output_dir = overrides
        .output_dir
        .clone()
        .or(file.output_dir)
        .ok_or_else(|| PipelineError::Config("output_dir is required (config or --out)".into()))?;
    let seed = overrides.seed.or(file.seed).ok_or_else(|| {
        PipelineError::Config("seed must be set explicitly (config or --seed)".into())
    })?;
    let k_max = overrides.k_max.or(file.k_max).unwrap_or(DEFAULT_K_MAX);
    if !(3..=20).contains(&k_max) {
        return Err(PipelineError::Config(format!(
            "k_max must be in [3, 20], got {k_max}"
        )));
    }
    let join_mode = overrides
        .join_mode
        .or(file.join_mode)
        .unwrap_or(JoinMode::GlobalIntersection);
    let formats: BTreeSet<OutputFormat> = overrides
        .formats
        .clone()
        .or(file.formats)
        .unwrap_or_else(|| vec![OutputFormat::Csv, OutputFormat::Json, OutputFormat::Svg])
        .into_iter()
        .collect();

    let mut names = BTreeSet::new();
    for spec in &file.indices {
        if !names.insert(&spec.name) {
            return Err(PipelineError::Config(format!(
                "index name '{}' appears more than once",
                spec.name
            )));
        }
    }

    Ok(RunConfig {
        corpus_dir,
        output_dir,
        seed,
        k_max,
        join_mode,
        formats,
        indices: file.indices,
    })
}

fn resolve(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Success,
    /// The run completed but some corpus files were dropped.
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub files_found: usize,
    pub admitted_count: usize,
    pub dropped_count: usize,
    /// file name -> canonical country, for every admitted anthem.
    pub admitted: BTreeMap<String, String>,
    pub dropped: Vec<DropRecord>,
    /// Parse warnings and pairing repairs, per file (only files with any).
    pub logs: BTreeMap<String, Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JoinDropCounts {
    pub from_features: usize,
    pub from_index: usize,
}

/// The reproducibility record for one `run` invocation. Re-running with
/// identical inputs and config reproduces this file byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub status: RunStatus,
    pub config: RunConfig,
    pub corpus: CorpusSummary,
    pub join_drops: BTreeMap<String, JoinDropCounts>,
    /// Chosen cluster counts: key "anthems" plus one key per clustered index.
    pub chosen_k: BTreeMap<String, usize>,
    /// Indices skipped by clustering or the qualitative split, with reasons.
    pub skipped_indices: BTreeMap<String, String>,
    /// Relative output path -> SHA-256 of the written bytes.
    pub output_hashes: BTreeMap<String, String>,
}

pub const MANIFEST_FILE: &str = "run_manifest.json";

/// Writes files under the output root, recording a SHA-256 per artifact.
struct OutputWriter {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl OutputWriter {
    fn new(root: &Path) -> Result<Self, PipelineError> {
        fs::create_dir_all(root).map_err(|source| PipelineError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(OutputWriter {
            root: root.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), PipelineError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| PipelineError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, bytes).map_err(|source| PipelineError::Io { path, source })?;
        self.hashes.insert(rel.to_string(), hex_sha256(bytes));
        Ok(())
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn to_pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>, PipelineError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// File-name slug for per-index artifacts.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// K-means results for the anthems and each index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringBundle {
    pub anthem_model: ClusterModel,
    pub anthem_diagnostics: SelectionDiagnostics,
    /// Per clustered index, in config order.
    pub index_models: Vec<(String, ClusterModel, SelectionDiagnostics)>,
    /// Indices that could not be clustered, with the reason.
    pub skipped: BTreeMap<String, String>,
}

/// Standardizes and clusters the anthem feature matrix and each index's
/// score column. Indices with fewer than four joined countries are skipped
/// (recorded, not fatal); the anthem matrix itself must be clusterable.
pub fn cluster_dataset(
    joined: &JoinedDataset,
    k_max: usize,
    seed: u64,
) -> Result<ClusteringBundle, PipelineError> {
    let rows = joined.countries.len();
    let k_anthems = k_max.min(rows);
    if rows < 4 || k_anthems < 3 {
        return Err(PipelineError::Config(format!(
            "joined dataset has {rows} countries; at least 4 are needed for clustering"
        )));
    }
    let standardized = standardize(&joined.features)?;
    let (chosen, diagnostics) = select_k(&standardized.values, k_anthems, seed)?;
    let anthem_model = kmeans_fit(&standardized.values, chosen, seed)?;

    let mut index_models = Vec::new();
    let mut skipped = BTreeMap::new();
    for join in &joined.index_joins {
        let n = join.countries.len();
        let k_idx = k_max.min(n);
        if n < 4 || k_idx < 3 {
            skipped.insert(
                join.name.clone(),
                format!("only {n} joined countries; need at least 4"),
            );
            continue;
        }
        let column: Vec<Vec<f64>> = join.scores.iter().map(|&s| vec![s]).collect();
        let standardized = standardize(&column)?;
        match select_k(&standardized.values, k_idx, seed) {
            Ok((chosen, diagnostics)) => {
                let model = kmeans_fit(&standardized.values, chosen, seed)?;
                index_models.push((join.name.clone(), model, diagnostics));
            }
            Err(AnalysisError::NoViableK) => {
                skipped.insert(
                    join.name.clone(),
                    "scores are too degenerate to cluster".to_string(),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }

    Ok(ClusteringBundle {
        anthem_model,
        anthem_diagnostics: diagnostics,
        index_models,
        skipped,
    })
}

/// Feature-by-index correlation matrices plus cluster agreement and the
/// qualitative tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub feature_names: Vec<String>,
    pub index_names: Vec<String>,
    /// feature x index; `None` marks an undefined correlation.
    pub pearson: Vec<Vec<Option<f64>>>,
    pub spearman: Vec<Vec<Option<f64>>>,
    /// (feature, index, reason) for every undefined cell.
    pub undefined: Vec<(String, String, String)>,
    pub agreement: BTreeMap<String, ClusterAgreement>,
    pub qualitative: Vec<QualitativeTable>,
    /// Indices skipped by the qualitative split, with reasons.
    pub skipped_qualitative: BTreeMap<String, String>,
}

/// Correlates every feature with every index, compares anthem clusters with
/// index clusters, and builds the qualitative tables.
pub fn build_correlation_report(
    joined: &JoinedDataset,
    clustering: &ClusteringBundle,
) -> Result<CorrelationReport, PipelineError> {
    let n_features = joined.feature_names.len();
    let n_indices = joined.index_names.len();
    let mut pearson_m = vec![vec![None; n_indices]; n_features];
    let mut spearman_m = vec![vec![None; n_indices]; n_features];
    let mut undefined = Vec::new();

    for (j, join) in joined.index_joins.iter().enumerate() {
        for f in 0..n_features {
            let x: Vec<f64> = join
                .country_rows
                .iter()
                .map(|&row| joined.features[row][f])
                .collect();
            let y = &join.scores;
            match pearson(&x, y) {
                Ok(r) => pearson_m[f][j] = Some(r),
                Err(AnalysisError::ConstantInput(side)) => undefined.push((
                    joined.feature_names[f].clone(),
                    join.name.clone(),
                    format!("undefined correlation: {side} input is constant"),
                )),
                Err(AnalysisError::TooFewObservations(n)) => undefined.push((
                    joined.feature_names[f].clone(),
                    join.name.clone(),
                    format!("undefined correlation: only {n} observations"),
                )),
                Err(e) => return Err(e.into()),
            }
            if pearson_m[f][j].is_some() {
                spearman_m[f][j] = Some(spearman(&x, y)?);
            }
        }
    }

    let mut agreement = BTreeMap::new();
    for (name, model, _) in &clustering.index_models {
        let join = joined
            .index_joins
            .iter()
            .find(|j| &j.name == name)
            .expect("clustered index exists in the join");
        let anthem_side: Vec<usize> = join
            .country_rows
            .iter()
            .map(|&row| clustering.anthem_model.assignments[row])
            .collect();
        agreement.insert(
            name.clone(),
            cluster_agreement(&anthem_side, &model.assignments)?,
        );
    }

    let mut qualitative = Vec::new();
    let mut skipped_qualitative = BTreeMap::new();
    for join in &joined.index_joins {
        match qualitative_labels(joined, &join.name) {
            Ok(table) => qualitative.push(table),
            Err(AnalysisError::TooFewCountries(n)) => {
                skipped_qualitative.insert(
                    join.name.clone(),
                    format!("only {n} joined countries; need at least 4"),
                );
            }
            Err(e) => return Err(e.into()),
        }
    }

    Ok(CorrelationReport {
        feature_names: joined.feature_names.clone(),
        index_names: joined.index_names.clone(),
        pearson: pearson_m,
        spearman: spearman_m,
        undefined,
        agreement,
        qualitative,
        skipped_qualitative,
    })
}

/// Cluster assignments on the dataset's country rows, in CSV-friendly form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersTable {
    pub countries: Vec<String>,
    pub anthem: Vec<usize>,
    /// Per clustered index: one assignment per country, `None` where the
    /// country is not part of that index's join.
    pub per_index: Vec<(String, Vec<Option<usize>>)>,
}

pub fn clusters_table(joined: &JoinedDataset, clustering: &ClusteringBundle) -> ClustersTable {
    let mut per_index = Vec::new();
    for (name, model, _) in &clustering.index_models {
        let join = joined
            .index_joins
            .iter()
            .find(|j| &j.name == name)
            .expect("clustered index exists in the join");
        let mut column = vec![None; joined.countries.len()];
        for (pos, &row) in join.country_rows.iter().enumerate() {
            column[row] = Some(model.assignments[pos]);
        }
        per_index.push((name.clone(), column));
    }
    ClustersTable {
        countries: joined.countries.clone(),
        anthem: clustering.anthem_model.assignments.clone(),
        per_index,
    }
}

impl ClustersTable {
    pub fn to_csv(&self) -> String {
        let mut out = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            let mut header = vec!["country".to_string(), "anthem_cluster".to_string()];
            header.extend(
                self.per_index
                    .iter()
                    .map(|(name, _)| format!("{name}_cluster")),
            );
            w.write_record(&header).expect("in-memory csv");
            for (i, country) in self.countries.iter().enumerate() {
                let mut record = vec![country.clone(), self.anthem[i].to_string()];
                record.extend(
                    self.per_index
                        .iter()
                        .map(|(_, col)| col[i].map_or(String::new(), |c| c.to_string())),
                );
                w.write_record(&record).expect("in-memory csv");
            }
            w.flush().expect("in-memory csv");
        }
        String::from_utf8(out).expect("csv output is utf-8")
    }
}

fn correlation_csv(
    feature_names: &[String],
    index_names: &[String],
    matrix: &[Vec<Option<f64>>],
) -> String {
    let mut out = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let mut header = vec!["feature".to_string()];
        header.extend(index_names.iter().cloned());
        w.write_record(&header).expect("in-memory csv");
        for (f, name) in feature_names.iter().enumerate() {
            let mut record = vec![name.clone()];
            record.extend(
                matrix[f]
                    .iter()
                    .map(|v| v.map_or(String::new(), |r| format!("{r}"))),
            );
            w.write_record(&record).expect("in-memory csv");
        }
        w.flush().expect("in-memory csv");
    }
    String::from_utf8(out).expect("csv output is utf-8")
}

/// Splits an Option-matrix into the dense sub-matrix of fully-defined rows
/// (for the heatmap) plus the omitted row labels.
fn dense_rows(
    matrix: &[Vec<Option<f64>>],
    row_labels: &[String],
) -> (Vec<Vec<f64>>, Vec<String>, Vec<String>) {
    let mut dense = Vec::new();
    let mut kept = Vec::new();
    let mut omitted = Vec::new();
    for (row, label) in matrix.iter().zip(row_labels) {
        if row.iter().all(|v| v.is_some()) {
            dense.push(row.iter().map(|v| v.expect("checked")).collect());
            kept.push(label.clone());
        } else {
            omitted.push(label.clone());
        }
    }
    (dense, kept, omitted)
}

#[derive(Debug, Serialize)]
struct CorrelationJson<'a> {
    method: &'a str,
    feature_names: &'a [String],
    index_names: &'a [String],
    /// null marks an undefined correlation (constant input).
    values: &'a [Vec<Option<f64>>],
    undefined: &'a [(String, String, String)],
}

/// Runs the whole pipeline per the config and writes every artifact plus
/// `run_manifest.json` under the output directory.
///
/// The exit-status mapping is: `Success` when every corpus file was
/// admitted, `Partial` when some were dropped, and `Err` for failures that
/// stop the run.
pub fn run_pipeline(config: &RunConfig) -> Result<RunManifest, PipelineError> {
    if config.indices.is_empty() {
        return Err(PipelineError::Config(
            "at least one [[indices]] entry is required".into(),
        ));
    }
    let mut writer = OutputWriter::new(&config.output_dir)?;

    // Extract.
    let corpus = load_corpus(&config.corpus_dir)?;
    if corpus.admitted.len() < 2 {
        return Err(PipelineError::TooFewAnthems {
            parseable: corpus.admitted.len(),
        });
    }
    let store = corpus.feature_store();
    write_features(&mut writer, &store, &config.formats)?;

    // Ingest + join.
    let tables = load_index_tables(&config.indices)?;
    let joined = join_corpus_indices(&store, &tables, config.join_mode)?;
    write_joined(&mut writer, &joined, &config.formats)?;

    // Cluster.
    let clustering = cluster_dataset(&joined, config.k_max, config.seed)?;
    write_clusters(&mut writer, &joined, &clustering, &config.formats)?;

    // Correlate + report.
    let report = build_correlation_report(&joined, &clustering)?;
    write_correlations(&mut writer, &report, &config.formats)?;
    write_report_artifacts(&mut writer, &report, &corpus, &config.formats)?;

    // Manifest.
    let manifest = build_manifest(
        config,
        &corpus,
        &joined,
        &clustering,
        &report,
        writer.hashes.clone(),
    );
    let manifest_bytes = to_pretty_json(&manifest)?;
    let path = config.output_dir.join(MANIFEST_FILE);
    fs::write(&path, &manifest_bytes).map_err(|source| PipelineError::Io { path, source })?;
    Ok(manifest)
}

pub fn load_index_tables(specs: &[IndexSpec]) -> Result<Vec<IndexTable>, PipelineError> {
    specs
        .iter()
        .map(|spec| {
            let bytes = fs::read(&spec.csv).map_err(|source| PipelineError::Io {
                path: spec.csv.clone(),
                source,
            })?;
            parse_index_csv(&bytes, &spec.name, spec.direction, &spec.columns).map_err(|source| {
                PipelineError::IndexFile {
                    path: spec.csv.clone(),
                    source,
                }
            })
        })
        .collect()
}

fn write_features(
    writer: &mut OutputWriter,
    store: &FeatureStore,
    formats: &BTreeSet<OutputFormat>,
) -> Result<(), PipelineError> {
    writer.write("features.csv", store.to_csv()?.as_bytes())?;
    if formats.contains(&OutputFormat::Json) {
        writer.write("features.json", store.to_json().as_bytes())?;
    }
    Ok(())
}

fn write_joined(
    writer: &mut OutputWriter,
    joined: &JoinedDataset,
    formats: &BTreeSet<OutputFormat>,
) -> Result<(), PipelineError> {
    writer.write("joined.json", &to_pretty_json(joined)?)?;
    if formats.contains(&OutputFormat::Csv) {
        writer.write("joined.csv", joined.to_csv().as_bytes())?;
    }
    writer.write("join_provenance.json", &to_pretty_json(&joined.provenance)?)?;
    Ok(())
}

fn write_clusters(
    writer: &mut OutputWriter,
    joined: &JoinedDataset,
    clustering: &ClusteringBundle,
    _formats: &BTreeSet<OutputFormat>,
) -> Result<(), PipelineError> {
    let table = clusters_table(joined, clustering);
    writer.write("clusters.csv", table.to_csv().as_bytes())?;

    #[derive(Serialize)]
    struct Diagnostics<'a> {
        anthems: &'a SelectionDiagnostics,
        indices: BTreeMap<&'a str, &'a SelectionDiagnostics>,
        skipped: &'a BTreeMap<String, String>,
    }
    let diag = Diagnostics {
        anthems: &clustering.anthem_diagnostics,
        indices: clustering
            .index_models
            .iter()
            .map(|(name, _, d)| (name.as_str(), d))
            .collect(),
        skipped: &clustering.skipped,
    };
    writer.write("cluster_diagnostics.json", &to_pretty_json(&diag)?)?;
    Ok(())
}

fn write_correlations(
    writer: &mut OutputWriter,
    report: &CorrelationReport,
    formats: &BTreeSet<OutputFormat>,
) -> Result<(), PipelineError> {
    for (method, matrix) in [("pearson", &report.pearson), ("spearman", &report.spearman)] {
        if formats.contains(&OutputFormat::Csv) {
            writer.write(
                &format!("correlation_{method}.csv"),
                correlation_csv(&report.feature_names, &report.index_names, matrix).as_bytes(),
            )?;
        }
        if formats.contains(&OutputFormat::Json) {
            let json = CorrelationJson {
                method,
                feature_names: &report.feature_names,
                index_names: &report.index_names,
                values: matrix,
                undefined: &report.undefined,
            };
            writer.write(
                &format!("correlation_{method}.json"),
                &to_pretty_json(&json)?,
            )?;
        }
    }

    if formats.contains(&OutputFormat::Json) {
        writer.write(
            "cluster_agreement.json",
            &to_pretty_json(&report.agreement)?,
        )?;
    }
    if formats.contains(&OutputFormat::Csv) {
        let mut out = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["index", "adjusted_rand_index", "cramers_v"])
                .expect("in-memory csv");
            for (name, agreement) in &report.agreement {
                w.write_record([
                    name.clone(),
                    format!("{}", agreement.ari),
                    format!("{}", agreement.cramers_v),
                ])
                .expect("in-memory csv");
            }
            w.flush().expect("in-memory csv");
        }
        writer.write(
            "cluster_agreement.csv",
            &String::from_utf8(out).expect("csv is utf-8").into_bytes(),
        )?;
    }
    Ok(())
}

fn write_report_artifacts(
    writer: &mut OutputWriter,
    report: &CorrelationReport,
    corpus: &CorpusLoad,
    formats: &BTreeSet<OutputFormat>,
) -> Result<(), PipelineError> {
    if formats.contains(&OutputFormat::Json) {
        writer.write(
            "qualitative_tables.json",
            &to_pretty_json(&report.qualitative)?,
        )?;
    }
    if formats.contains(&OutputFormat::Csv) {
        for table in &report.qualitative {
            let mut out = Vec::new();
            {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(["feature", "low", "high"])
                    .expect("in-memory csv");
                for row in &table.rows {
                    w.write_record([
                        row.feature.clone(),
                        row.low.to_string(),
                        row.high.to_string(),
                    ])
                    .expect("in-memory csv");
                }
                w.flush().expect("in-memory csv");
            }
            writer.write(
                &format!("qualitative_{}.csv", slug(&table.index)),
                &String::from_utf8(out).expect("csv is utf-8").into_bytes(),
            )?;
        }
    }

    if formats.contains(&OutputFormat::Svg) {
        for (method, matrix) in [("pearson", &report.pearson), ("spearman", &report.spearman)] {
            let (dense, kept, _omitted) = dense_rows(matrix, &report.feature_names);
            if !dense.is_empty() {
                let svg = render_heatmap_svg(&dense, &kept, &report.index_names)?;
                writer.write(&format!("heatmap_{method}.svg"), svg.as_bytes())?;
            }
        }
        for anthem in &corpus.admitted {
            let svg = render_distributions_svg(&anthem.performance, &anthem.country);
            writer.write(
                &format!("distributions/{}.svg", slug(&anthem.country)),
                svg.as_bytes(),
            )?;
        }
    }
    Ok(())
}

fn build_manifest(
    config: &RunConfig,
    corpus: &CorpusLoad,
    joined: &JoinedDataset,
    clustering: &ClusteringBundle,
    report: &CorrelationReport,
    output_hashes: BTreeMap<String, String>,
) -> RunManifest {
    let mut chosen_k = BTreeMap::new();
    chosen_k.insert("anthems".to_string(), clustering.anthem_model.k);
    for (name, model, _) in &clustering.index_models {
        chosen_k.insert(name.clone(), model.k);
    }

    let mut skipped = clustering.skipped.clone();
    for (name, reason) in &report.skipped_qualitative {
        skipped
            .entry(name.clone())
            .or_insert_with(|| format!("qualitative: {reason}"));
    }

    let join_drops = joined
        .provenance
        .drop_counts()
        .into_iter()
        .map(|(name, (from_features, from_index))| {
            (
                name,
                JoinDropCounts {
                    from_features,
                    from_index,
                },
            )
        })
        .collect();

    RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        status: if corpus.dropped.is_empty() {
            RunStatus::Success
        } else {
            RunStatus::Partial
        },
        config: config.clone(),
        corpus: CorpusSummary {
            files_found: corpus.files_found,
            admitted_count: corpus.admitted.len(),
            dropped_count: corpus.dropped.len(),
            admitted: corpus
                .admitted
                .iter()
                .map(|a| (a.file_name.clone(), a.country.clone()))
                .collect(),
            dropped: corpus.dropped.clone(),
            logs: corpus
                .admitted
                .iter()
                .filter(|a| !a.log.is_empty())
                .map(|a| (a.file_name.clone(), a.log.clone()))
                .collect(),
        },
        join_drops,
        chosen_k,
        skipped_indices: skipped,
        output_hashes,
    }
}

// ---------------------------------------------------------------------------
// Stage entry points for the CLI. Each one reads its inputs from the output
// directory of the previous stage, so the stages are independently
// scriptable; `run_pipeline` does everything in memory.
// ---------------------------------------------------------------------------

/// `extract`: corpus directory -> features.csv (+ features.json).
pub fn stage_extract(config: &RunConfig) -> Result<CorpusLoad, PipelineError> {
    let corpus = load_corpus(&config.corpus_dir)?;
    if corpus.admitted.len() < 2 {
        return Err(PipelineError::TooFewAnthems {
            parseable: corpus.admitted.len(),
        });
    }
    let mut writer = OutputWriter::new(&config.output_dir)?;
    write_features(&mut writer, &corpus.feature_store(), &config.formats)?;
    Ok(corpus)
}

fn read_to_string(path: &Path) -> Result<String, PipelineError> {
    fs::read_to_string(path).map_err(|source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_joined(out_dir: &Path) -> Result<JoinedDataset, PipelineError> {
    let text = read_to_string(&out_dir.join("joined.json"))?;
    Ok(serde_json::from_str(&text)?)
}

/// `ingest`: features.csv + index CSVs -> joined dataset + provenance.
pub fn stage_ingest(config: &RunConfig) -> Result<JoinedDataset, PipelineError> {
    if config.indices.is_empty() {
        return Err(PipelineError::Config(
            "at least one [[indices]] entry is required".into(),
        ));
    }
    let store = FeatureStore::from_csv(&read_to_string(&config.output_dir.join("features.csv"))?)?;
    let tables = load_index_tables(&config.indices)?;
    let joined = join_corpus_indices(&store, &tables, config.join_mode)?;
    let mut writer = OutputWriter::new(&config.output_dir)?;
    write_joined(&mut writer, &joined, &config.formats)?;
    Ok(joined)
}

/// `cluster`: joined.json -> clusters.csv + diagnostics.
pub fn stage_cluster(config: &RunConfig) -> Result<ClusteringBundle, PipelineError> {
    let joined = read_joined(&config.output_dir)?;
    let clustering = cluster_dataset(&joined, config.k_max, config.seed)?;
    let mut writer = OutputWriter::new(&config.output_dir)?;
    write_clusters(&mut writer, &joined, &clustering, &config.formats)?;
    Ok(clustering)
}

/// `correlate`: joined.json (+ re-derived clustering) -> correlation
/// matrices and agreement statistics.
pub fn stage_correlate(config: &RunConfig) -> Result<CorrelationReport, PipelineError> {
    let joined = read_joined(&config.output_dir)?;
    let clustering = cluster_dataset(&joined, config.k_max, config.seed)?;
    let report = build_correlation_report(&joined, &clustering)?;
    let mut writer = OutputWriter::new(&config.output_dir)?;
    write_correlations(&mut writer, &report, &config.formats)?;
    Ok(report)
}

/// `report`: joined.json + corpus -> qualitative tables, heatmaps, and
/// distribution histograms.
pub fn stage_report(config: &RunConfig) -> Result<CorrelationReport, PipelineError> {
    let joined = read_joined(&config.output_dir)?;
    let clustering = cluster_dataset(&joined, config.k_max, config.seed)?;
    let report = build_correlation_report(&joined, &clustering)?;
    let corpus = load_corpus(&config.corpus_dir)?;
    let mut writer = OutputWriter::new(&config.output_dir)?;
    write_report_artifacts(&mut writer, &report, &corpus, &config.formats)?;
    Ok(report)
}
