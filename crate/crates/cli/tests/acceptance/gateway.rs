use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use pathplan_core::agents::Templates;
use pathplan_core::gateway::{
    build_backend, complete_validated, extract_json, BackendConfig, BackendKind, ChatRequest, GatewayError,
    HttpTransport, RuleBasedBackend, SchemaId, ScriptedBackend, TransportError,
};
use pathplan_core::model::Method;
use pathplan_core::orchestrator::{run_malpp, run_session, AgentTranscript, SessionConfig};
use serde_json::{json, Value};

use crate::support::{accept_reply, context, plan_reply, report_reply};

struct CountingTransport {
    posts: AtomicUsize,
}

impl HttpTransport for CountingTransport {
    fn post_json(&self, _: &str, _: Option<&str>, _: &Value, _: Duration) -> Result<(u16, String), TransportError> {
        self.posts.fetch_add(1, Ordering::SeqCst);
        let body = json!({
            "choices": [{"message": {"role": "assistant", "content": accept_reply()}}],
            "usage": {"prompt_tokens": 7, "completion_tokens": 3}
        });
        Ok((200, body.to_string()))
    }
}

fn extraction() -> Result<usize, String> {
    let payload = json!({
        "path": [{"resource_id": "r1", "position": 1, "local_rationale": "covers {k1} first }", "estimated_minutes": 10.0}],
        "global_rationale": "a \"quoted\" rationale with { braces"
    });
    let text = payload.to_string();
    let pretty = serde_json::to_string_pretty(&payload).unwrap();
    let wrapped = [
        format!("```json\n{pretty}\n```"),
        format!("Here is the learning path you asked for:\n\n{text}\n\nLet me know if you need changes."),
        format!("Notes {{draft}} and {{\"unfinished\": }} first.\n```\n{text}\n```\ntrailing }}"),
        text.clone(),
    ];
    for (i, reply) in wrapped.iter().enumerate() {
        let got = extract_json(reply, SchemaId::Plan).map_err(|e| format!("case {i}: {e}"))?;
        crate::ensure!(got == payload, "case {i}: extracted {got}");
    }
    crate::ensure!(
        matches!(extract_json("no object here", SchemaId::Plan), Err(GatewayError::NoJsonFound)),
        "prose without JSON should not parse"
    );
    Ok(wrapped.len())
}

fn repair_bound() -> Result<(), String> {
    let request = ChatRequest::new("system", "user", "planner:s");
    for max_repairs in 0..=3u32 {
        let b = ScriptedBackend::new();
        for _ in 0..10 {
            b.push("planner", "I cannot produce JSON today.");
        }
        let mut log = Vec::new();
        let result = complete_validated(&b, &request, SchemaId::Plan, max_repairs, Ok, &mut log);
        crate::ensure!(result.is_err(), "max_repairs {max_repairs}: garbage was accepted");
        let calls = b.calls().len() as u32;
        crate::ensure!(
            calls == 1 + max_repairs && log.len() as u32 == calls,
            "max_repairs {max_repairs}: {calls} calls, {} log records",
            log.len()
        );
    }
    let b = ScriptedBackend::new();
    b.push("planner", "{\"path\": []}");
    b.push("planner", plan_reply(&["r1"]));
    let mut log = Vec::new();
    complete_validated(&b, &request, SchemaId::Plan, 2, Ok, &mut log).map_err(|e| e.to_string())?;
    crate::ensure!(b.calls().len() == 2, "a repaired reply should stop after two calls");
    crate::ensure!(
        b.calls()[1].user_text.contains("=== REPAIR ==="),
        "the second call should carry the repair prompt"
    );
    Ok(())
}

fn additive(t: &AgentTranscript) -> Result<(), String> {
    let attempts = t.steps.iter().flat_map(|s| &s.attempts);
    let (prompt, completion) = attempts.fold((0u64, 0u64), |(p, c), a| (p + a.prompt_tokens, c + a.completion_tokens));
    crate::ensure!(
        t.prompt_tokens == prompt && t.completion_tokens == completion,
        "{}: totals ({}, {}) but attempts sum to ({prompt}, {completion})",
        t.session_id,
        t.prompt_tokens,
        t.completion_tokens
    );
    crate::ensure!(t.total_tokens() == prompt + completion, "{}: total is not the sum", t.session_id);
    crate::ensure!(prompt > 0 && completion > 0, "{}: no tokens counted", t.session_id);
    Ok(())
}

fn token_accounting() -> Result<usize, String> {
    let templates = Templates::bundled();
    let mut sessions = 0;
    for method in [Method::Malpp, Method::Slmlpp] {
        let out = run_session(&RuleBasedBackend, &templates, &context(), &SessionConfig::for_method(method), None)
            .map_err(|e| e.to_string())?;
        additive(out.transcript.as_ref().ok_or("no transcript")?)?;
        sessions += 1;
    }
    let b = ScriptedBackend::new().with("analytics", report_reply());
    b.push("planner", "not json");
    b.push("planner", plan_reply(&["r1", "r2"]));
    b.push("reflector", accept_reply());
    let (_, t) = run_malpp(&b, &templates, &context(), &SessionConfig::for_method(Method::Malpp))
        .map_err(|e| e.to_string())?;
    crate::ensure!(
        t.steps.iter().map(|s| s.attempts.len()).sum::<usize>() == 4,
        "the repaired session should log four attempts"
    );
    additive(&t)?;
    Ok(sessions + 1)
}

fn no_network() -> Result<(), String> {
    let transport = Arc::new(CountingTransport {
        posts: AtomicUsize::new(0),
    });
    let templates = Templates::bundled();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let script = tmp.path().join("script.json");
    let replies = json!({
        "analytics": [report_reply()],
        "planner": [plan_reply(&["r1", "r2"])],
        "reflector": [accept_reply()]
    });
    std::fs::write(&script, replies.to_string()).map_err(|e| e.to_string())?;
    for (kind, script_path) in [(BackendKind::MockRuleBased, None), (BackendKind::MockScripted, Some(script))] {
        let config = BackendConfig {
            kind,
            script_path,
            ..BackendConfig::default()
        };
        let backend = build_backend(&config, Some(transport.clone())).map_err(|e| e.to_string())?;
        run_session(
            backend.as_ref(),
            &templates,
            &context(),
            &SessionConfig::for_method(Method::Malpp),
            None,
        )
        .map_err(|e| format!("{kind:?}: {e}"))?;
    }
    crate::ensure!(
        transport.posts.load(Ordering::SeqCst) == 0,
        "mock backends reached the transport"
    );

    const KEY_VAR: &str = "PATHPLAN_ACCEPTANCE_KEY";
    std::env::set_var(KEY_VAR, "test-key");
    let http = BackendConfig {
        kind: BackendKind::Http,
        base_url: Some("http://model.invalid/v1".into()),
        model_name: Some("m".into()),
        api_key_env_var: Some(KEY_VAR.into()),
        ..BackendConfig::default()
    };
    let backend = build_backend(&http, Some(transport.clone())).map_err(|e| e.to_string())?;
    backend
        .complete(&ChatRequest::new("system", "user", "reflector:s"))
        .map_err(|e| e.to_string())?;
    crate::ensure!(
        transport.posts.load(Ordering::SeqCst) == 1,
        "the http backend should post exactly once"
    );
    Ok(())
}

pub fn gateway_robustness() -> Result<String, String> {
    let cases = extraction()?;
    repair_bound()?;
    let sessions = token_accounting()?;
    no_network()?;
    Ok(format!(
        "{cases} wrapped payloads recovered; repairs stop at 1 + max_repairs for 0..=3; tokens additive over {sessions} sessions; mocks made 0 transport calls"
    ))
}
