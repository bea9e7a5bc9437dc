use serde::Serialize;

use super::transcript::{AgentTranscript, SessionOutcome, SessionState};
use super::{PlanError, SessionConfig, SessionError};
use crate::agents::{
    run_analytics, run_planner, run_reflector, run_single, AgentCall, AgentError, LearnerContext, PlanPayload,
    Revision, Suggestion, Templates,
};
use crate::gateway::{AttemptRecord, ChatBackend};
use crate::model::{Ablation, LearningPath, Method, Provenance};

struct Session<'a> {
    call: AgentCall<'a>,
    transcript: AgentTranscript,
}

impl Session<'_> {
    /// Runs one agent step and records it, failed or not.
    fn step<T: Serialize>(
        &mut self,
        state: SessionState,
        role: &str,
        version: Option<u32>,
        run: impl FnOnce(&AgentCall<'_>, &mut Vec<AttemptRecord>) -> Result<T, AgentError>,
    ) -> Result<T, SessionError> {
        let mut attempts = Vec::new();
        let result = run(&self.call, &mut attempts);
        let payload = result.as_ref().ok().map(|v| serde_json::to_value(v).expect("payload serializes"));
        self.transcript.push(state, role, version, attempts, payload);
        result.map_err(|e| self.fail(e.into()))
    }

    fn fail(&mut self, error: PlanError) -> SessionError {
        self.transcript.outcome = SessionOutcome::Failed { error: error.to_string() };
        SessionError {
            session_id: self.transcript.session_id.clone(),
            error,
            transcript: Some(Box::new(self.transcript.clone())),
        }
    }
}

fn to_path(ctx: &LearnerContext, plan: PlanPayload, provenance: Provenance) -> LearningPath {
    LearningPath {
        learner_id: ctx.learner_id.clone(),
        nodes: plan.path,
        global_rationale: plan.global_rationale,
        provenance,
    }
}

fn open<'a>(
    backend: &'a dyn ChatBackend,
    templates: &'a Templates,
    session_id: &'a str,
    ctx: &LearnerContext,
    config: &SessionConfig,
) -> Session<'a> {
    Session {
        call: AgentCall {
            backend,
            templates,
            session: session_id,
            max_repairs: config.max_repairs,
        },
        transcript: AgentTranscript::new(session_id, ctx.learner_id.clone(), config.label()),
    }
}

/// The collaboration loop: optional analysis, then up to
/// `max_plan_versions` rounds of planning and reflection. When every version
/// is rejected the last one is adopted.
pub fn run_malpp(
    backend: &dyn ChatBackend,
    templates: &Templates,
    ctx: &LearnerContext,
    config: &SessionConfig,
) -> Result<(LearningPath, AgentTranscript), SessionError> {
    let session_id = config.session_id(&ctx.learner_id);
    let mut s = open(backend, templates, &session_id, ctx, config);
    if config.max_plan_versions == 0 {
        return Err(s.fail(PlanError::InvalidVersions));
    }
    let constraints = config.constraints.with_ablations(&config.ablations);
    let reflect = !config.ablations.contains(Ablation::NoReflection);

    let report = if config.ablations.contains(Ablation::NoAnalytics) {
        None
    } else {
        Some(s.step(SessionState::Analyze, "analytics", None, |call, log| run_analytics(call, ctx, log))?)
    };

    let mut version = 0;
    let mut previous: Option<(PlanPayload, Vec<Suggestion>)> = None;
    let (plan, accepted) = loop {
        version += 1;
        let revision = previous.as_ref().map(|(plan, suggestions)| Revision {
            previous: plan,
            suggestions,
        });
        let plan = s.step(SessionState::Plan, "planner", Some(version), |call, log| {
            run_planner(call, ctx, report.as_ref(), &constraints, revision, log)
        })?;
        if !reflect {
            s.transcript.outcome = SessionOutcome::AdoptedWithoutReflection;
            break (plan, false);
        }
        let review = s.step(SessionState::Reflect, "reflector", Some(version), |call, log| {
            run_reflector(call, ctx, report.as_ref(), &plan, &constraints, log)
        })?;
        if review.accepted {
            s.transcript.outcome = SessionOutcome::Accepted;
            break (plan, true);
        }
        if version >= config.max_plan_versions {
            s.transcript.outcome = SessionOutcome::AdoptedByDefault;
            break (plan, false);
        }
        previous = Some((plan, review.suggestions));
    };

    let provenance = Provenance {
        method: Method::Malpp,
        plan_versions: version,
        accepted_by_reflection: accepted,
        ablations: config.ablations.clone(),
        seed: config.seed,
    };
    Ok((to_path(ctx, plan, provenance), s.transcript))
}

/// The single-prompt baseline: one validated planning call.
pub fn run_slmlpp(
    backend: &dyn ChatBackend,
    templates: &Templates,
    ctx: &LearnerContext,
    config: &SessionConfig,
) -> Result<(LearningPath, AgentTranscript), SessionError> {
    let session_id = config.session_id(&ctx.learner_id);
    let mut s = open(backend, templates, &session_id, ctx, config);
    let constraints = config.constraints;
    let plan = s.step(SessionState::Plan, "single", Some(1), |call, log| {
        run_single(call, ctx, &constraints, log)
    })?;
    s.transcript.outcome = SessionOutcome::SingleCall;
    let provenance = Provenance {
        method: Method::Slmlpp,
        plan_versions: 1,
        accepted_by_reflection: false,
        ablations: config.ablations.clone(),
        seed: config.seed,
    };
    Ok((to_path(ctx, plan, provenance), s.transcript))
}
