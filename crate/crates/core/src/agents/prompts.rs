use super::blocks::{self, LoadTarget, PathLimits, ProgressionRule};
use super::template::{Template, Vars};
use super::{AgentError, ConstraintConfig, DiagnosticReport, LearnerContext, PlanPayload, Suggestion, Templates};
use crate::gateway::{ChatRequest, SchemaId};
use crate::model::{KnowledgeState, LearnerProfile, RiskAlert};

/// The previous plan and the reviewer's suggestions, for a revision round.
#[derive(Debug, Clone, Copy)]
pub struct Revision<'a> {
    pub previous: &'a PlanPayload,
    pub suggestions: &'a [Suggestion],
}

struct Required<'a> {
    profile: Option<&'a LearnerProfile>,
    alert: Option<&'a RiskAlert>,
    state: Option<&'a KnowledgeState>,
    missing: Vec<&'static str>,
}

impl<'a> Required<'a> {
    fn new() -> Self {
        Required {
            profile: None,
            alert: None,
            state: None,
            missing: Vec::new(),
        }
    }

    fn take<T>(&mut self, value: Option<T>, name: &'static str) -> Option<T> {
        if value.is_none() {
            self.missing.push(name);
        }
        value
    }

    fn raw(&mut self, ctx: &'a LearnerContext) {
        self.profile = self.take(ctx.profile.as_ref(), "learner profile");
        self.alert = self.take(ctx.alert.as_ref(), "risk alert");
        self.state = self.take(ctx.state.as_ref(), "knowledge state");
    }

    fn finish(self) -> Result<(), AgentError> {
        if self.missing.is_empty() {
            Ok(())
        } else {
            Err(AgentError::IncompleteContext(self.missing))
        }
    }
}

fn common(vars: &mut Vars, ctx: &LearnerContext, schema: SchemaId) {
    vars.set("learner_id", ctx.learner_id.clone())
        .set("course_id", ctx.course_id.clone())
        .set("graph_block", blocks::render(blocks::KNOWLEDGE_GRAPH, &ctx.graph))
        .set("schema", schema.source().trim_end());
}

fn raw_blocks(vars: &mut Vars, req: &Required<'_>) {
    if let (Some(p), Some(a), Some(s)) = (req.profile, req.alert, req.state) {
        vars.set("week", a.week.to_string())
            .set("profile_block", blocks::render(blocks::LEARNER_PROFILE, p))
            .set("alert_block", blocks::render(blocks::RISK_ALERT, a))
            .set("state_block", blocks::render(blocks::LEARNER_STATE, s));
    }
}

fn constraint_blocks(
    vars: &mut Vars,
    req: &mut Required<'_>,
    ctx: &LearnerContext,
    constraints: &ConstraintConfig,
) -> Result<(), AgentError> {
    constraints.validate()?;
    vars.flag("clt", constraints.include_clt).flag("zpd", constraints.include_zpd);
    vars.set(
        "limits_block",
        blocks::render(
            blocks::PATH_LIMITS,
            &PathLimits {
                max_path_length: constraints.max_path_length,
            },
        ),
    );
    if constraints.include_clt {
        if let Some(load) = req.take(ctx.load.as_ref(), "cognitive load capacity") {
            let band = constraints.target_load_band;
            let target = LoadTarget {
                capacity_minutes: load.cl_student,
                low: band.low,
                high: band.high,
            };
            vars.set("load_block", blocks::render(blocks::LOAD_TARGET, &target));
        }
    }
    if constraints.include_zpd {
        vars.set(
            "progression_block",
            blocks::render(blocks::PROGRESSION_RULE, &ProgressionRule::default()),
        );
    }
    Ok(())
}

fn resources_block(vars: &mut Vars, req: &mut Required<'_>, ctx: &LearnerContext) {
    if let Some(resources) = req.take(ctx.resources.as_ref(), "recommended resources") {
        vars.set("resources_block", blocks::render(blocks::RESOURCES, resources));
    }
}

fn request(template: &Template, vars: &Vars, role: &str, session: &str) -> Result<ChatRequest, AgentError> {
    let (system, user) = template.render(vars)?;
    Ok(ChatRequest::new(system, user, format!("{role}:{session}")))
}

/// Analytics prompt over the learner's profile, alert, state and course graph.
pub fn build_analytics_prompt(
    templates: &Templates,
    ctx: &LearnerContext,
    session: &str,
) -> Result<ChatRequest, AgentError> {
    let mut req = Required::new();
    req.raw(ctx);
    let mut vars = Vars::new();
    common(&mut vars, ctx, SchemaId::Report);
    raw_blocks(&mut vars, &req);
    req.finish()?;
    request(&templates.analytics, &vars, "analytics", session)
}

/// Planner prompt. Without a report the planner sees the raw learner data.
pub fn build_planning_prompt(
    templates: &Templates,
    ctx: &LearnerContext,
    report: Option<&DiagnosticReport>,
    constraints: &ConstraintConfig,
    revision: Option<Revision<'_>>,
    session: &str,
) -> Result<ChatRequest, AgentError> {
    let mut req = Required::new();
    let mut vars = Vars::new();
    common(&mut vars, ctx, SchemaId::Plan);
    match report {
        Some(r) => {
            vars.flag("report", true)
                .set("report_block", blocks::render(blocks::DIAGNOSTIC_REPORT, r));
        }
        None => {
            req.raw(ctx);
            vars.flag("raw_state", true);
            raw_blocks(&mut vars, &req);
        }
    }
    resources_block(&mut vars, &mut req, ctx);
    constraint_blocks(&mut vars, &mut req, ctx, constraints)?;
    if let Some(rev) = revision {
        if rev.suggestions.is_empty() {
            req.missing.push("revision suggestions");
        }
        vars.flag("revision", true)
            .set("previous_block", blocks::render(blocks::PREVIOUS_PATH, rev.previous))
            .set("suggestions_block", blocks::render(blocks::REVISION_SUGGESTIONS, rev.suggestions));
    }
    req.finish()?;
    request(&templates.planner, &vars, "planner", session)
}

/// Reflection prompt over the full plan, rationales included.
pub fn build_reflection_prompt(
    templates: &Templates,
    ctx: &LearnerContext,
    report: Option<&DiagnosticReport>,
    plan: &PlanPayload,
    constraints: &ConstraintConfig,
    session: &str,
) -> Result<ChatRequest, AgentError> {
    let mut req = Required::new();
    let mut vars = Vars::new();
    common(&mut vars, ctx, SchemaId::Reflection);
    if let Some(state) = req.take(ctx.state.as_ref(), "knowledge state") {
        vars.set("state_block", blocks::render(blocks::LEARNER_STATE, state));
    }
    if let Some(r) = report {
        vars.flag("report", true)
            .set("report_block", blocks::render(blocks::DIAGNOSTIC_REPORT, r));
    }
    resources_block(&mut vars, &mut req, ctx);
    constraint_blocks(&mut vars, &mut req, ctx, constraints)?;
    vars.set("path_block", blocks::render(blocks::LEARNING_PATH, plan));
    req.finish()?;
    request(&templates.reflector, &vars, "reflector", session)
}

/// The single-call prompt: all extracted learner data in one request.
pub fn build_single_prompt(
    templates: &Templates,
    ctx: &LearnerContext,
    constraints: &ConstraintConfig,
    session: &str,
) -> Result<ChatRequest, AgentError> {
    let mut req = Required::new();
    req.raw(ctx);
    let mut vars = Vars::new();
    common(&mut vars, ctx, SchemaId::Plan);
    raw_blocks(&mut vars, &req);
    resources_block(&mut vars, &mut req, ctx);
    constraint_blocks(&mut vars, &mut req, ctx, constraints)?;
    req.finish()?;
    request(&templates.single, &vars, "single", session)
}
