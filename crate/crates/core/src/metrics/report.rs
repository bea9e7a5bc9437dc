use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ald, apl, clmr_signed, ksc_path, path_load, student_load, KscMode, MetricError};
use crate::ingest::Workspace;
use crate::model::LearningPath;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub ksc_mode: KscMode,
    pub cl_ext: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            ksc_mode: KscMode::AsWritten,
            cl_ext: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub label: String,
    pub apl: f64,
    pub ald_minutes: f64,
    pub ksc_percent: f64,
    /// `None` when every learner in the group was excluded.
    pub clmr_percent: Option<f64>,
    pub n_paths: usize,
    pub n_excluded_learners: usize,
    pub fallback_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathDetail {
    pub label: String,
    pub learner_id: String,
    pub length: usize,
    pub ald_minutes: f64,
    pub ksc: f64,
    pub cl_path: f64,
    pub cl_student: Option<f64>,
    pub clmr_signed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
}

/// An ablated run compared with its full configuration. Deltas are signed so
/// that negative means the ablation made things worse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub label: String,
    pub baseline: String,
    pub ksc_percent: f64,
    pub ksc_delta: f64,
    pub clmr_percent: Option<f64>,
    pub clmr_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub ksc_mode: KscMode,
    pub cl_ext: f64,
    pub rows: Vec<MethodRow>,
    pub deltas: Vec<DeltaRow>,
    pub details: Vec<PathDetail>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format {other:?}")),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Csv => "csv",
            ReportFormat::Json => "json",
        }
    }
}

fn evaluate_group(
    ws: &Workspace,
    label: &str,
    paths: &[LearningPath],
    config: &EvalConfig,
    details: &mut Vec<PathDetail>,
) -> Result<MethodRow, MetricError> {
    let apl = apl::<f64>(paths)?;
    let ald_minutes = ald::<f64>(paths, ws)?;
    let mut ksc_total = 0.0;
    let mut abs_clmr = Vec::new();
    let mut n_excluded = 0;
    let mut fallback_nodes = 0;
    for p in paths {
        let ksc = ksc_path::<f64>(p, ws, config.ksc_mode)?;
        ksc_total += ksc;
        let load = path_load::<f64>(p, ws)?;
        fallback_nodes += load.fallback_nodes;
        let (cl_student, signed, excluded) = match student_load::<f64>(ws, &p.learner_id, config.cl_ext) {
            Ok(profile) => match clmr_signed(profile.cl_student, load.minutes) {
                Ok(v) => (Some(profile.cl_student), Some(v), None),
                Err(e) => (Some(profile.cl_student), None, Some(e.to_string())),
            },
            Err(e @ MetricError::UndefinedLoad(_)) => (None, None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        match signed {
            Some(v) => abs_clmr.push(v.abs()),
            None => n_excluded += 1,
        }
        details.push(PathDetail {
            label: label.to_string(),
            learner_id: p.learner_id.clone(),
            length: p.len(),
            ald_minutes: super::mean(super::node_minutes::<f64>(p, ws)?).expect("nonempty path"),
            ksc,
            cl_path: load.minutes,
            cl_student,
            clmr_signed: signed,
            excluded,
        });
    }
    Ok(MethodRow {
        label: label.to_string(),
        apl,
        ald_minutes,
        ksc_percent: 100.0 * ksc_total / paths.len() as f64,
        clmr_percent: super::mean(abs_clmr).map(|m| 100.0 * m),
        n_paths: paths.len(),
        n_excluded_learners: n_excluded,
        fallback_nodes,
    })
}

/// Evaluates each labelled group of paths. Learners with undefined or zero
/// capacity are left out of CLMR and counted.
pub fn evaluate_batch(
    ws: &Workspace,
    groups: &[(String, Vec<LearningPath>)],
    config: &EvalConfig,
) -> Result<EvaluationReport, MetricError> {
    if groups.is_empty() {
        return Err(MetricError::EmptyBatch);
    }
    let mut details = Vec::new();
    let rows = groups
        .iter()
        .map(|(label, paths)| evaluate_group(ws, label, paths, config, &mut details))
        .collect::<Result<Vec<_>, _>>()?;
    let deltas = ablation_deltas(&rows);
    Ok(EvaluationReport {
        ksc_mode: config.ksc_mode,
        cl_ext: config.cl_ext,
        rows,
        deltas,
        details,
    })
}

/// Pairs every `method+ablation` row with its `method` row.
fn ablation_deltas(rows: &[MethodRow]) -> Vec<DeltaRow> {
    rows.iter()
        .filter_map(|row| {
            let (base_label, _) = row.label.split_once('+')?;
            let base = rows.iter().find(|r| r.label == base_label)?;
            Some(DeltaRow {
                label: row.label.clone(),
                baseline: base.label.clone(),
                ksc_percent: row.ksc_percent,
                ksc_delta: row.ksc_percent - base.ksc_percent,
                clmr_percent: row.clmr_percent,
                clmr_delta: base.clmr_percent.zip(row.clmr_percent).map(|(b, a)| b - a),
            })
        })
        .collect()
}

fn opt2(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.2}"))
}

fn opt_full(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl EvaluationReport {
    pub fn row(&self, label: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.label == label)
    }

    pub fn render(&self, format: ReportFormat) -> String {
        match format {
            ReportFormat::Text => self.to_text(),
            ReportFormat::Csv => self.to_csv(),
            ReportFormat::Json => self.to_json(),
        }
    }

    pub fn to_text(&self) -> String {
        let mode = match self.ksc_mode {
            KscMode::AsWritten => "as_written",
            KscMode::Normalized => "normalized",
        };
        let width = self.rows.iter().map(|r| r.label.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "KSC mode: {mode}   CL_ext: {:.2} min", self.cl_ext);
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>9}  {:>7}  {:>8}  {:>5}  {:>8}",
            "Method", "APL", "ALD (min)", "KSC (%)", "CLMR (%)", "Paths", "Excluded"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<width$}  {:>6.2}  {:>9.2}  {:>7.2}  {:>8}  {:>5}  {:>8}",
                r.label,
                r.apl,
                r.ald_minutes,
                r.ksc_percent,
                opt2(r.clmr_percent),
                r.n_paths,
                r.n_excluded_learners
            );
        }
        if !self.deltas.is_empty() {
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<width$}  {:>16}  {:>16}", "Ablation", "KSC (%)", "CLMR (%)");
            for d in &self.deltas {
                let ksc = format!("{:.2} ({:+.2})", d.ksc_percent, d.ksc_delta);
                let clmr = match (d.clmr_percent, d.clmr_delta) {
                    (Some(v), Some(delta)) => format!("{v:.2} ({delta:+.2})"),
                    (v, _) => opt2(v),
                };
                let _ = writeln!(out, "{:<width$}  {:>16}  {:>16}", d.label, ksc, clmr);
            }
        }
        out
    }

    /// One line per method; numbers at full precision.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "label,apl,ald_minutes,ksc_percent,clmr_percent,n_paths,n_excluded_learners,fallback_nodes,ksc_delta,clmr_delta\n",
        );
        for r in &self.rows {
            let delta = self.deltas.iter().find(|d| d.label == r.label);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.label,
                r.apl,
                r.ald_minutes,
                r.ksc_percent,
                opt_full(r.clmr_percent),
                r.n_paths,
                r.n_excluded_learners,
                r.fallback_nodes,
                opt_full(delta.map(|d| d.ksc_delta)),
                opt_full(delta.and_then(|d| d.clmr_delta)),
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}
