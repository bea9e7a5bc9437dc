use pathplan_core::model::DEFAULT_WEAK_THRESHOLD;
use pathplan_core::signals::{
    detect_risk, recommend, risk_series_for, trace_knowledge, SignalError, DEFAULT_RISK_THRESHOLD,
};

use super::{fresh_dir, open_workspace, write_json, write_jsonl, write_provenance, Globals};
use super::{ALERTS_FILE, RECS_DIR, STATES_DIR};
use crate::args::PipelineArgs;
use crate::config::{pick, FileConfig};
use crate::failure::{Classify, CmdResult, Failure};

pub fn run(globals: &Globals, args: &PipelineArgs) -> CmdResult {
    let file = &globals.file;
    let ws_dir = globals.workspace_dir()?;
    let out = globals.out_dir()?;
    let risk_threshold = pick(args.risk_threshold, file.risk_threshold, DEFAULT_RISK_THRESHOLD);
    let weak_threshold = pick(args.weak_threshold, file.weak_threshold, DEFAULT_WEAK_THRESHOLD);
    let list_length = pick(args.list_length, file.list_length, 20);
    if !(0.0..=1.0).contains(&risk_threshold) || !(0.0..=1.0).contains(&weak_threshold) {
        return Err(Failure::usage("thresholds must lie in [0, 1]"));
    }
    if list_length == 0 {
        return Err(Failure::usage("--list-length must be at least 1"));
    }

    let ws = open_workspace(&ws_dir)?;
    let last_week = ws.events().iter().map(|e| e.week()).max().unwrap_or(1).max(1);
    let weeks = pick(args.weeks, file.weeks, last_week);

    fresh_dir(&out.join(STATES_DIR)).data_err()?;
    fresh_dir(&out.join(RECS_DIR)).data_err()?;
    let mut alerts = Vec::new();
    let mut empty = 0usize;
    for profile in ws.profiles() {
        let id = &profile.learner_id;
        let series = risk_series_for(&ws, id, weeks).data_err()?;
        let Some(alert) = detect_risk(&series, risk_threshold) else {
            continue;
        };
        let state = trace_knowledge(&ws, id, alert.week, weak_threshold).data_err()?;
        write_json(&out.join(STATES_DIR).join(format!("{id}.json")), &state).data_err()?;
        match recommend(&ws, id, &state, list_length) {
            Ok(list) => write_json(&out.join(RECS_DIR).join(format!("{id}.json")), &list).data_err()?,
            Err(SignalError::EmptyRecommendation(_)) => {
                log::warn!("learner {id} has no resources left to recommend");
                empty += 1;
            }
            Err(e) => return Err(Failure::new(crate::failure::EXIT_DATA, e)),
        }
        alerts.push(alert);
    }
    write_jsonl(&out.join(ALERTS_FILE), &alerts).data_err()?;
    let provenance = FileConfig {
        workspace: Some(ws_dir),
        risk_threshold: Some(risk_threshold),
        weak_threshold: Some(weak_threshold),
        list_length: Some(list_length),
        weeks: Some(weeks),
        ..FileConfig::default()
    };
    write_provenance(&out.join("pipeline.toml"), &provenance).data_err()?;

    say!(
        "{} of {} learners flagged at threshold {risk_threshold}; {} without recommendations",
        alerts.len(),
        ws.profiles().len(),
        empty
    );
    Ok(())
}
