use std::cell::RefCell;

use serde::de::DeserializeOwned;
use serde_json::Value;

use super::prompts::{
    build_analytics_prompt, build_planning_prompt, build_reflection_prompt, build_single_prompt, Revision,
};
use super::{
    AgentError, ConstraintConfig, DiagnosticReport, LearnerContext, PlanPayload, ReflectionResult, Templates,
};
use crate::gateway::{complete_validated, AttemptRecord, ChatBackend, ChatRequest, GatewayError, SchemaId};
use crate::model::{LearningPath, Method, Provenance};

/// Shared settings for one session's agent calls.
#[derive(Clone, Copy)]
pub struct AgentCall<'a> {
    pub backend: &'a dyn ChatBackend,
    pub templates: &'a Templates,
    pub session: &'a str,
    pub max_repairs: u32,
}

fn decode<T: DeserializeOwned>(value: Value) -> Result<T, Vec<String>> {
    serde_json::from_value(value).map_err(|e| vec![e.to_string()])
}

pub fn run_analytics(
    call: &AgentCall<'_>,
    ctx: &LearnerContext,
    log: &mut Vec<AttemptRecord>,
) -> Result<DiagnosticReport, AgentError> {
    let request = build_analytics_prompt(call.templates, ctx, call.session)?;
    let course = ctx.course_points();
    let check = |value: Value| {
        let report: DiagnosticReport = decode(value)?;
        let errors = report.check(&course);
        if errors.is_empty() {
            Ok(report)
        } else {
            Err(errors)
        }
    };
    Ok(complete_validated(call.backend, &request, SchemaId::Report, call.max_repairs, check, log)?)
}

fn validated_plan(
    call: &AgentCall<'_>,
    ctx: &LearnerContext,
    request: &ChatRequest,
    constraints: &ConstraintConfig,
    log: &mut Vec<AttemptRecord>,
) -> Result<PlanPayload, AgentError> {
    let hallucinated = RefCell::new(Vec::new());
    let check = |value: Value| {
        let plan: PlanPayload = decode(value)?;
        let unknown: Vec<String> = plan
            .path
            .iter()
            .filter(|n| ctx.resource(&n.resource_id).is_none())
            .map(|n| n.resource_id.clone())
            .collect();
        let mut errors: Vec<String> = unknown
            .iter()
            .map(|id| format!("resource {id} is not in the recommended list"))
            .collect();
        *hallucinated.borrow_mut() = unknown;
        let as_path = LearningPath {
            learner_id: ctx.learner_id.clone(),
            nodes: plan.path.clone(),
            global_rationale: String::new(),
            provenance: Provenance::new(Method::Malpp),
        };
        errors.extend(as_path.validate(constraints.max_path_length).iter().map(ToString::to_string));
        if errors.is_empty() {
            Ok(plan)
        } else {
            Err(errors)
        }
    };
    match complete_validated(call.backend, request, SchemaId::Plan, call.max_repairs, check, log) {
        Err(GatewayError::ValidationFailedAfterRepairs { .. }) if !hallucinated.borrow().is_empty() => {
            Err(AgentError::HallucinatedResource(hallucinated.take()))
        }
        other => Ok(other?),
    }
}

pub fn run_planner(
    call: &AgentCall<'_>,
    ctx: &LearnerContext,
    report: Option<&DiagnosticReport>,
    constraints: &ConstraintConfig,
    revision: Option<Revision<'_>>,
    log: &mut Vec<AttemptRecord>,
) -> Result<PlanPayload, AgentError> {
    let request = build_planning_prompt(call.templates, ctx, report, constraints, revision, call.session)?;
    validated_plan(call, ctx, &request, constraints, log)
}

pub fn run_single(
    call: &AgentCall<'_>,
    ctx: &LearnerContext,
    constraints: &ConstraintConfig,
    log: &mut Vec<AttemptRecord>,
) -> Result<PlanPayload, AgentError> {
    let request = build_single_prompt(call.templates, ctx, constraints, call.session)?;
    validated_plan(call, ctx, &request, constraints, log)
}

pub fn run_reflector(
    call: &AgentCall<'_>,
    ctx: &LearnerContext,
    report: Option<&DiagnosticReport>,
    plan: &PlanPayload,
    constraints: &ConstraintConfig,
    log: &mut Vec<AttemptRecord>,
) -> Result<ReflectionResult, AgentError> {
    let request = build_reflection_prompt(call.templates, ctx, report, plan, constraints, call.session)?;
    let check = |value: Value| {
        let result: ReflectionResult = decode(value)?;
        let errors = result.check(plan.path.len());
        if errors.is_empty() {
            Ok(result)
        } else {
            Err(errors)
        }
    };
    Ok(complete_validated(call.backend, &request, SchemaId::Reflection, call.max_repairs, check, log)?)
}
