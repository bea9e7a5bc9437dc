mod evaluate;
mod ingest;
mod pipeline;
mod plan;
mod synth;

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use pathplan_core::ingest::{load_workspace, Workspace};
use pathplan_core::metrics::ReportFormat;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::args::{Cli, Command};
use crate::config::{pick, FileConfig};
use crate::failure::{Classify, CmdResult, Failure};

pub const ALERTS_FILE: &str = "alerts.jsonl";
pub const STATES_DIR: &str = "states";
pub const RECS_DIR: &str = "recs";
pub const PATHS_DIR: &str = "paths";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
pub const REPORT_STEM: &str = "report";

/// Global options after merging flags with the config file.
pub struct Globals {
    workspace: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    format: ReportFormat,
    pub file: FileConfig,
}

impl Globals {
    fn resolve(cli: &Cli) -> CmdResult<Self> {
        let file = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let format = pick(cli.format, FileConfig::parsed(&file.format, "format")?, ReportFormat::Text);
        Ok(Globals {
            workspace: cli.workspace.clone().or_else(|| file.workspace.clone()),
            out: cli.out.clone().or_else(|| file.out.clone()),
            seed: cli.seed.or(file.seed),
            format,
            file,
        })
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn format(&self) -> ReportFormat {
        self.format
    }

    /// The input workspace directory, which must exist.
    pub fn workspace_dir(&self) -> CmdResult<PathBuf> {
        let dir = self
            .workspace
            .clone()
            .ok_or_else(|| Failure::usage("--workspace is required"))?;
        if !dir.is_dir() {
            return Err(Failure::usage(format!("workspace {} does not exist", dir.display())));
        }
        Ok(dir)
    }

    /// The output directory. It may not be the workspace itself.
    pub fn out_dir(&self) -> CmdResult<PathBuf> {
        let out = self.out.clone().ok_or_else(|| Failure::usage("--out is required"))?;
        if let (Some(ws), Ok(o)) = (&self.workspace, out.canonicalize()) {
            if ws.canonicalize().is_ok_and(|w| w == o) {
                return Err(Failure::usage("--out must differ from --workspace"));
            }
        }
        Ok(out)
    }

    /// An output directory that must already hold earlier results.
    pub fn existing_out_dir(&self) -> CmdResult<PathBuf> {
        let out = self.out_dir()?;
        if !out.is_dir() {
            return Err(Failure::usage(format!("output directory {} does not exist", out.display())));
        }
        Ok(out)
    }
}

pub fn run(cli: Cli) -> CmdResult {
    let globals = Globals::resolve(&cli)?;
    match &cli.command {
        Command::Synth(args) => synth::run(&globals, args),
        Command::Ingest(args) => ingest::run(&globals, args),
        Command::Pipeline(args) => pipeline::run(&globals, args),
        Command::Plan(args) => plan::run(&globals, args),
        Command::Evaluate(args) => evaluate::run_evaluate(&globals, args),
        Command::Report(args) => evaluate::run_report(&globals, args),
    }
}

pub fn open_workspace(dir: &Path) -> CmdResult<Workspace> {
    load_workspace(dir)
        .with_context(|| format!("workspace {}", dir.display()))
        .data_err()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    serde_json::from_str(&text).with_context(|| path.display().to_string())
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| path.display().to_string())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> anyhow::Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| path.display().to_string())?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> anyhow::Result<()> {
    let mut text = String::new();
    for v in values {
        text.push_str(&serde_json::to_string(v)?);
        text.push('\n');
    }
    fs::write(path, text).with_context(|| path.display().to_string())
}

/// Creates `dir` and removes JSON files left there by an earlier run.
pub fn fresh_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| dir.display().to_string())?;
    for path in json_files(dir)? {
        fs::remove_file(&path).with_context(|| path.display().to_string())?;
    }
    Ok(())
}

/// JSON files directly under `dir`, sorted by name.
pub fn json_files(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| dir.display().to_string())? {
        let path = entry?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == "json") {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Writes the effective options of a run next to its outputs.
pub fn write_provenance(path: &Path, config: &FileConfig) -> anyhow::Result<()> {
    let text = toml::to_string(config)?;
    fs::write(path, text).with_context(|| path.display().to_string())
}
