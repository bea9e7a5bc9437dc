use std::path::Path;

use anyhow::Context;
use pathplan_core::agents::{ConstraintConfig, LearnerContext, Templates};
use pathplan_core::gateway::{build_backend, BackendConfig, BackendKind, ChatBackend};
use pathplan_core::metrics::LoadBand;
use pathplan_core::model::{AblationSet, KnowledgeState, Method, RecommendationList, RiskAlert};
use pathplan_core::orchestrator::{
    run_session, AgentTranscript, DirSink, OracleLimits, SessionConfig, SessionOutput, TranscriptSink,
};
use rayon::prelude::*;

use super::{fresh_dir, open_workspace, read_json, read_jsonl, write_json, write_provenance, Globals};
use super::{ALERTS_FILE, PATHS_DIR, RECS_DIR, STATES_DIR, TRANSCRIPTS_DIR};
use crate::args::PlanArgs;
use crate::config::{pick, FileConfig};
use crate::failure::{Classify, CmdResult, Failure, EXIT_BACKEND, EXIT_DATA};

struct Resolved {
    session: SessionConfig,
    cl_ext: f64,
    parallel: usize,
    provenance: FileConfig,
}

fn resolve(globals: &Globals, args: &PlanArgs) -> CmdResult<Resolved> {
    let file = &globals.file;
    let method = pick(args.method, FileConfig::parsed(&file.method, "method")?, Method::Malpp);
    let ablate = args.ablate.clone().or_else(|| file.ablate.clone());
    let ablations = match &ablate {
        Some(list) => AblationSet::parse_list(list).map_err(Failure::usage)?,
        None => AblationSet::none(),
    };
    if method != Method::Malpp && !ablations.is_empty() {
        return Err(Failure::usage(format!("ablations apply to malpp only, not {method}")));
    }
    let seed = globals.seed();
    if method == Method::Rbm && seed.is_none() {
        return Err(Failure::usage("--seed is required for rbm"));
    }

    let defaults = BackendConfig::default();
    let backend = BackendConfig {
        kind: pick(args.backend, FileConfig::parsed(&file.backend, "backend")?, defaults.kind),
        base_url: args.base_url.clone().or_else(|| file.base_url.clone()),
        model_name: args.model.clone().or_else(|| file.model.clone()),
        api_key_env_var: args.api_key_env.clone().or_else(|| file.api_key_env.clone()),
        timeout_ms: pick(args.timeout_ms, file.timeout_ms, defaults.timeout_ms),
        max_retries: pick(args.max_retries, file.max_retries, defaults.max_retries),
        retry_backoff_ms: file.retry_backoff_ms.unwrap_or(defaults.retry_backoff_ms),
        max_concurrency: pick(args.max_concurrency, file.max_concurrency, defaults.max_concurrency),
        min_request_interval_ms: file.min_request_interval_ms.unwrap_or(defaults.min_request_interval_ms),
        script_path: args.script.clone().or_else(|| file.script.clone()),
    };
    backend.validate().usage_err()?;

    let base = SessionConfig::default();
    let band = base.constraints.target_load_band;
    let constraints = ConstraintConfig {
        max_path_length: pick(args.max_path_length, file.max_path_length, base.constraints.max_path_length),
        target_load_band: LoadBand {
            low: pick(args.load_low, file.load_low, band.low),
            high: pick(args.load_high, file.load_high, band.high),
        },
        ..base.constraints
    };
    constraints.validate().usage_err()?;
    let oracle = OracleLimits {
        max_len: pick(args.oracle_max_len, file.oracle_max_len, base.oracle.max_len),
        max_total_minutes: args.oracle_max_minutes.or(file.oracle_max_minutes),
    };
    let session = SessionConfig {
        method,
        ablations,
        max_plan_versions: pick(args.max_plan_versions, file.max_plan_versions, base.max_plan_versions),
        max_repairs: pick(args.max_repairs, file.max_repairs, base.max_repairs),
        seed,
        backend,
        constraints,
        oracle,
    };
    if session.max_plan_versions < 1 {
        return Err(Failure::usage("--max-plan-versions must be at least 1"));
    }
    let cl_ext = pick(args.cl_ext, file.cl_ext, 0.0);
    let parallel = pick(args.parallel, file.parallel, 1);
    if parallel == 0 {
        return Err(Failure::usage("--parallel must be at least 1"));
    }

    let b = &session.backend;
    let provenance = FileConfig {
        workspace: globals.workspace_dir().ok(),
        seed,
        method: Some(method.to_string()),
        backend: Some(backend_name(b.kind).into()),
        script: b.script_path.clone(),
        base_url: b.base_url.clone(),
        model: b.model_name.clone(),
        api_key_env: b.api_key_env_var.clone(),
        timeout_ms: Some(b.timeout_ms),
        max_retries: Some(b.max_retries),
        retry_backoff_ms: Some(b.retry_backoff_ms),
        max_concurrency: Some(b.max_concurrency),
        min_request_interval_ms: Some(b.min_request_interval_ms),
        ablate: ablate.filter(|s| !s.trim().is_empty()),
        max_plan_versions: Some(session.max_plan_versions),
        max_repairs: Some(session.max_repairs),
        max_path_length: Some(constraints.max_path_length),
        load_low: Some(constraints.target_load_band.low),
        load_high: Some(constraints.target_load_band.high),
        cl_ext: Some(cl_ext),
        oracle_max_len: Some(oracle.max_len),
        oracle_max_minutes: oracle.max_total_minutes,
        templates: args.templates.clone().or_else(|| file.templates.clone()),
        ..FileConfig::default()
    };
    Ok(Resolved {
        session,
        cl_ext,
        parallel,
        provenance,
    })
}

fn backend_name(kind: BackendKind) -> &'static str {
    match kind {
        BackendKind::Http => "http",
        BackendKind::MockScripted => "mock-scripted",
        BackendKind::MockRuleBased => "mock-rule",
    }
}

fn load_contexts(
    out: &Path,
    ws: &pathplan_core::ingest::Workspace,
    cl_ext: f64,
) -> anyhow::Result<Vec<LearnerContext>> {
    let alerts: Vec<RiskAlert> =
        read_jsonl(&out.join(ALERTS_FILE)).context("pipeline outputs are missing; run `pathplan pipeline` first")?;
    let mut contexts = Vec::with_capacity(alerts.len());
    for alert in alerts {
        let id = alert.learner_id.clone();
        if ws.profile(&id).is_none() {
            anyhow::bail!("{ALERTS_FILE}: learner {id} is not in the workspace");
        }
        let state: KnowledgeState = read_json(&out.join(STATES_DIR).join(format!("{id}.json")))?;
        let recs_path = out.join(RECS_DIR).join(format!("{id}.json"));
        let recs: Option<RecommendationList> = if recs_path.exists() {
            Some(read_json(&recs_path)?)
        } else {
            None
        };
        contexts.push(LearnerContext::assemble(ws, &id, Some(alert), Some(state), recs.as_ref(), cl_ext));
    }
    Ok(contexts)
}

pub fn run(globals: &Globals, args: &PlanArgs) -> CmdResult {
    let resolved = resolve(globals, args)?;
    let ws_dir = globals.workspace_dir()?;
    let out = globals.existing_out_dir()?;
    let templates = match &resolved.provenance.templates {
        Some(dir) => Templates::with_overrides(dir).usage_err()?,
        None => Templates::bundled(),
    };
    let ws = open_workspace(&ws_dir)?;
    let contexts = load_contexts(&out, &ws, resolved.cl_ext).data_err()?;
    let config = &resolved.session;
    let backend: std::sync::Arc<dyn ChatBackend> = build_backend(&config.backend, None).usage_err()?;

    let label = config.label();
    let paths_dir = out.join(PATHS_DIR).join(&label);
    fresh_dir(&paths_dir).data_err()?;
    let sink = DirSink::new(out.join(TRANSCRIPTS_DIR))
        .context("creating transcript directory")
        .data_err()?;
    write_provenance(&paths_dir.join("run.toml"), &resolved.provenance).data_err()?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolved.parallel)
        .build()
        .map_err(|e| Failure::new(EXIT_DATA, e))?;
    let results: Vec<_> = pool.install(|| {
        contexts
            .par_iter()
            .map(|ctx| run_session(backend.as_ref(), &templates, ctx, config, None))
            .collect()
    });

    let mut planned = 0usize;
    let mut backend_failures = 0usize;
    let mut data_failures = 0usize;
    let (mut prompt_total, mut completion_total) = (0u64, 0u64);
    for (ctx, result) in contexts.iter().zip(results) {
        let session_id = config.session_id(&ctx.learner_id);
        let transcript = match result {
            Ok(SessionOutput { path, transcript }) => {
                write_json(&paths_dir.join(format!("{}.json", ctx.learner_id)), &path).data_err()?;
                planned += 1;
                transcript
            }
            Err(e) => {
                eprintln!("error: {e}");
                if e.error.is_backend_failure() {
                    backend_failures += 1;
                } else {
                    data_failures += 1;
                }
                e.transcript.map(|t| *t)
            }
        };
        match transcript {
            Some(t) => {
                sink.write(&t).context("writing transcript").data_err()?;
                print_tokens(&t);
                prompt_total += t.prompt_tokens;
                completion_total += t.completion_tokens;
            }
            None => say!("{session_id}: prompt_tokens=0 completion_tokens=0 total_tokens=0"),
        }
    }
    say!(
        "{label}: {planned} of {} learners planned; prompt_tokens={prompt_total} completion_tokens={completion_total} total_tokens={}",
        contexts.len(),
        prompt_total + completion_total
    );

    if backend_failures > 0 {
        return Err(Failure::new(
            EXIT_BACKEND,
            anyhow::anyhow!("{backend_failures} sessions failed in the model backend"),
        ));
    }
    if data_failures > 0 {
        return Err(Failure::data(format!("{data_failures} sessions failed on their input data")));
    }
    Ok(())
}

fn print_tokens(t: &AgentTranscript) {
    say!(
        "{}: prompt_tokens={} completion_tokens={} total_tokens={}",
        t.session_id,
        t.prompt_tokens,
        t.completion_tokens,
        t.total_tokens()
    );
}
