//! Command-line front end for the anthem analysis pipeline.
//!
//! Exit codes: 0 success, 1 partial (some corpus files dropped), 2 failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use anthemetrics::indices::JoinMode;
use anthemetrics::report::{
    load_run_config, run_pipeline, stage_cluster, stage_correlate, stage_extract, stage_ingest,
    stage_report, ConfigOverrides, OutputFormat, RunStatus,
};

#[derive(Parser)]
#[command(
    name = "anthemetrics",
    version,
    about = "Parse national-anthem MIDI files, extract musical features, cluster them, and correlate against country-level indices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Svg,
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Svg => OutputFormat::Svg,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum JoinModeArg {
    GlobalIntersection,
    PerIndex,
}

impl From<JoinModeArg> for JoinMode {
    fn from(value: JoinModeArg) -> Self {
        match value {
            JoinModeArg::GlobalIntersection => JoinMode::GlobalIntersection,
            JoinModeArg::PerIndex => JoinMode::PerIndex,
        }
    }
}

/// Shared config/override flags. Values given here take precedence over the
/// config file.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// TOML run configuration (required for index specs).
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory of .mid/.midi files, one anthem per country.
    #[arg(long, value_name = "DIR")]
    corpus_dir: Option<PathBuf>,
    /// Output directory for all artifacts.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// RNG seed; required here or in the config, never implicit.
    #[arg(long)]
    seed: Option<u64>,
    /// Largest k tried during cluster-count selection (3..=20).
    #[arg(long)]
    k_max: Option<usize>,
    /// Output formats to emit.
    #[arg(long, value_delimiter = ',')]
    format: Option<Vec<FormatArg>>,
    /// How index tables join with the feature store.
    #[arg(long)]
    join_mode: Option<JoinModeArg>,
}

impl CommonArgs {
    fn overrides(&self) -> ConfigOverrides {
        ConfigOverrides {
            corpus_dir: self.corpus_dir.clone(),
            output_dir: self.out.clone(),
            seed: self.seed,
            k_max: self.k_max,
            join_mode: self.join_mode.map(Into::into),
            formats: self
                .format
                .as_ref()
                .map(|fs| fs.iter().copied().map(Into::into).collect()),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the whole pipeline and write a reproducibility manifest.
    Run(CommonArgs),
    /// Parse the corpus and write the per-anthem feature store.
    Extract(CommonArgs),
    /// Ingest index CSVs and join them with the feature store.
    Ingest(CommonArgs),
    /// Cluster anthems and index scores (seeded k-means).
    Cluster(CommonArgs),
    /// Compute correlation matrices and cluster agreement.
    Correlate(CommonArgs),
    /// Emit qualitative tables, heatmaps, and distribution histograms.
    Report(CommonArgs),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    let args = match &cli.command {
        Command::Run(a)
        | Command::Extract(a)
        | Command::Ingest(a)
        | Command::Cluster(a)
        | Command::Correlate(a)
        | Command::Report(a) => a,
    };
    let config = load_run_config(args.config.as_deref(), &args.overrides())?;

    match cli.command {
        Command::Run(_) => {
            let manifest = run_pipeline(&config)?;
            println!(
                "run complete: {} found, {} admitted, {} dropped; outputs in {}",
                manifest.corpus.files_found,
                manifest.corpus.admitted_count,
                manifest.corpus.dropped_count,
                config.output_dir.display()
            );
            for (name, k) in &manifest.chosen_k {
                println!("  chosen k [{name}] = {k}");
            }
            Ok(match manifest.status {
                RunStatus::Success => ExitCode::SUCCESS,
                RunStatus::Partial => ExitCode::from(1),
            })
        }
        Command::Extract(_) => {
            let corpus = stage_extract(&config)?;
            println!(
                "extracted {} anthems ({} dropped) -> {}",
                corpus.admitted.len(),
                corpus.dropped.len(),
                config.output_dir.join("features.csv").display()
            );
            for drop in &corpus.dropped {
                eprintln!("  dropped {}: {}", drop.file_name, drop.reason);
            }
            Ok(if corpus.dropped.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Ingest(_) => {
            let joined = stage_ingest(&config)?;
            println!(
                "joined {} countries across {} indices -> {}",
                joined.countries.len(),
                joined.index_names.len(),
                config.output_dir.join("joined.json").display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Cluster(_) => {
            let clustering = stage_cluster(&config)?;
            println!("anthem clusters: k = {}", clustering.anthem_model.k);
            for (name, model, _) in &clustering.index_models {
                println!("  {name}: k = {}", model.k);
            }
            for (name, reason) in &clustering.skipped {
                eprintln!("  skipped {name}: {reason}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Correlate(_) => {
            let report = stage_correlate(&config)?;
            println!(
                "correlations written for {} features x {} indices",
                report.feature_names.len(),
                report.index_names.len()
            );
            for (feature, index, reason) in &report.undefined {
                eprintln!("  {feature} x {index}: {reason}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Report(_) => {
            let report = stage_report(&config)?;
            println!(
                "report artifacts written ({} qualitative tables)",
                report.qualitative.len()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
