use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pathplan_core::gateway::BackendKind;
use pathplan_core::metrics::{KscMode, ReportFormat};
use pathplan_core::model::Method;

#[derive(Debug, Parser)]
#[command(name = "pathplan", version, about = "Offline learning path planning for at-risk learners")]
pub struct Cli {
    /// Input workspace directory (never modified).
    #[arg(long, global = true)]
    pub workspace: Option<PathBuf>,
    /// Output directory.
    #[arg(long, short = 'o', global = true)]
    pub out: Option<PathBuf>,
    /// Flat TOML file with default values for any option.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Report format: text, csv or json.
    #[arg(long, global = true)]
    pub format: Option<ReportFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic workspace.
    Synth(SynthArgs),
    /// Load and validate a workspace.
    Ingest(IngestArgs),
    /// Detect at-risk learners, trace their knowledge and recommend resources.
    Pipeline(PipelineArgs),
    /// Plan learning paths for every flagged learner.
    Plan(PlanArgs),
    /// Compute metrics over every planned method and write the report.
    Evaluate(EvaluateArgs),
    /// Render a previously written report.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Learners per course.
    #[arg(long)]
    pub learners: Option<usize>,
    /// Resources per course.
    #[arg(long)]
    pub resources: Option<usize>,
    /// Knowledge points per course.
    #[arg(long)]
    pub kps: Option<usize>,
    #[arg(long)]
    pub courses: Option<usize>,
    #[arg(long)]
    pub weeks: Option<u32>,
    #[arg(long)]
    pub at_risk_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Workspace directory; overrides --workspace.
    pub dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    #[arg(long)]
    pub risk_threshold: Option<f64>,
    #[arg(long)]
    pub weak_threshold: Option<f64>,
    /// Length of each recommendation list.
    #[arg(long)]
    pub list_length: Option<usize>,
    /// Weeks of risk to estimate when the workspace stores none.
    #[arg(long)]
    pub weeks: Option<u32>,
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub method: Option<Method>,
    /// mock-rule, mock-scripted or http.
    #[arg(long)]
    pub backend: Option<BackendKind>,
    /// Reply script for the scripted mock.
    #[arg(long)]
    pub script: Option<PathBuf>,
    #[arg(long)]
    pub base_url: Option<String>,
    #[arg(long)]
    pub model: Option<String>,
    /// Name of the environment variable that holds the API key.
    #[arg(long)]
    pub api_key_env: Option<String>,
    #[arg(long)]
    pub timeout_ms: Option<u64>,
    #[arg(long)]
    pub max_retries: Option<u32>,
    #[arg(long)]
    pub max_concurrency: Option<usize>,
    /// Comma-separated ablations: no_clt, no_zpd, no_reflection, no_analytics.
    #[arg(long)]
    pub ablate: Option<String>,
    #[arg(long)]
    pub max_plan_versions: Option<u32>,
    #[arg(long)]
    pub max_repairs: Option<u32>,
    #[arg(long)]
    pub max_path_length: Option<usize>,
    #[arg(long)]
    pub load_low: Option<f64>,
    #[arg(long)]
    pub load_high: Option<f64>,
    /// Extraneous load added to each learner's capacity.
    #[arg(long)]
    pub cl_ext: Option<f64>,
    #[arg(long)]
    pub oracle_max_len: Option<usize>,
    #[arg(long)]
    pub oracle_max_minutes: Option<f64>,
    /// Directory with template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Maximum number of concurrent learner sessions.
    #[arg(long)]
    pub parallel: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub ksc_mode: Option<KscMode>,
    #[arg(long)]
    pub cl_ext: Option<f64>,
    /// Comma-separated run labels; defaults to every directory under paths/.
    #[arg(long)]
    pub labels: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report JSON to render; defaults to report.json in the output directory.
    pub input: Option<PathBuf>,
}
