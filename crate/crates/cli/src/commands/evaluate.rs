use std::fs;
use std::path::Path;

use anyhow::Context;
use pathplan_core::metrics::{evaluate_batch, EvalConfig, EvaluationReport, KscMode, ReportFormat};
use pathplan_core::model::LearningPath;

use super::{json_files, open_workspace, read_json, Globals, PATHS_DIR, REPORT_STEM};
use crate::args::{EvaluateArgs, ReportArgs};
use crate::config::{pick, FileConfig};
use crate::failure::{Classify, CmdResult, Failure};

/// Path groups under `paths/`, one per run label, in label order.
fn load_groups(out: &Path, labels: Option<&str>) -> anyhow::Result<Vec<(String, Vec<LearningPath>)>> {
    let root = out.join(PATHS_DIR);
    let mut names: Vec<String> = match labels {
        Some(list) => list
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect(),
        None if root.is_dir() => {
            let mut names = Vec::new();
            for entry in fs::read_dir(&root).with_context(|| root.display().to_string())? {
                let entry = entry?;
                if entry.file_type()?.is_dir() {
                    names.push(entry.file_name().to_string_lossy().into_owned());
                }
            }
            names
        }
        None => Vec::new(),
    };
    names.sort();
    names.dedup();
    let mut groups = Vec::with_capacity(names.len());
    for name in names {
        let dir = root.join(&name);
        if !dir.is_dir() {
            anyhow::bail!("no paths for run {name} under {}", root.display());
        }
        let paths = json_files(&dir)?
            .iter()
            .map(|p| read_json::<LearningPath>(p))
            .collect::<anyhow::Result<Vec<_>>>()?;
        if !paths.is_empty() {
            groups.push((name, paths));
        }
    }
    Ok(groups)
}

fn emit(out: &Path, report: &EvaluationReport, format: ReportFormat) -> CmdResult {
    let text = report.render(format);
    let path = out.join(format!("{REPORT_STEM}.{}", format.extension()));
    fs::write(&path, &text)
        .with_context(|| path.display().to_string())
        .data_err()?;
    say!("{}", text.trim_end_matches('\n'));
    Ok(())
}

pub fn run_evaluate(globals: &Globals, args: &EvaluateArgs) -> CmdResult {
    let file = &globals.file;
    let ws_dir = globals.workspace_dir()?;
    let out = globals.existing_out_dir()?;
    let config = EvalConfig {
        ksc_mode: pick(
            args.ksc_mode,
            FileConfig::parsed(&file.ksc_mode, "ksc_mode")?,
            KscMode::default(),
        ),
        cl_ext: pick(args.cl_ext, file.cl_ext, 0.0),
    };
    if !(config.cl_ext >= 0.0) {
        return Err(Failure::usage("--cl-ext must be non-negative"));
    }
    let labels = args.labels.clone().or_else(|| file.labels.clone());
    let groups = load_groups(&out, labels.as_deref()).data_err()?;
    if groups.is_empty() {
        return Err(Failure::data(format!(
            "no planned paths under {}; run `pathplan plan` first",
            out.join(PATHS_DIR).display()
        )));
    }
    let ws = open_workspace(&ws_dir)?;
    let report = evaluate_batch(&ws, &groups, &config).data_err()?;
    let json = out.join(format!("{REPORT_STEM}.json"));
    fs::write(&json, report.to_json())
        .with_context(|| json.display().to_string())
        .data_err()?;
    emit(&out, &report, globals.format())
}

pub fn run_report(globals: &Globals, args: &ReportArgs) -> CmdResult {
    let out = globals.existing_out_dir()?;
    let input = args
        .input
        .clone()
        .unwrap_or_else(|| out.join(format!("{REPORT_STEM}.json")));
    let report: EvaluationReport = read_json(&input).data_err()?;
    emit(&out, &report, globals.format())
}
