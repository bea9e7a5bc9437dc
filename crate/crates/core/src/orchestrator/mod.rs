//! Planning sessions: the analytics → planning → reflection loop, the
//! single-call baseline, the random baseline and an exhaustive oracle.

mod baselines;
mod malpp;
mod transcript;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentError, ConstraintConfig, LearnerContext, Templates};
use crate::gateway::{BackendConfig, ChatBackend, DEFAULT_MAX_REPAIRS};
use crate::model::{AblationSet, EffectivenessModel, LearningPath, Method, ModelError};

pub use baselines::{
    default_effectiveness, learner_seed, prerequisite_feasible, run_oracle, run_rbm, OracleLimits, ORACLE_MAX_LEN,
    ORACLE_MAX_RESOURCES, RBM_MAX_LEN,
};
pub use malpp::{run_malpp, run_slmlpp};
pub use transcript::{
    AgentTranscript, DirSink, MemorySink, SessionOutcome, SessionState, TranscriptSink, TranscriptStep,
};

pub const DEFAULT_MAX_PLAN_VERSIONS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub method: Method,
    pub ablations: AblationSet,
    pub max_plan_versions: u32,
    pub max_repairs: u32,
    pub seed: Option<u64>,
    pub backend: BackendConfig,
    pub constraints: ConstraintConfig,
    pub oracle: OracleLimits,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            method: Method::Malpp,
            ablations: AblationSet::none(),
            max_plan_versions: DEFAULT_MAX_PLAN_VERSIONS,
            max_repairs: DEFAULT_MAX_REPAIRS,
            seed: None,
            backend: BackendConfig::default(),
            constraints: ConstraintConfig::default(),
            oracle: OracleLimits::default(),
        }
    }
}

impl SessionConfig {
    pub fn for_method(method: Method) -> Self {
        SessionConfig {
            method,
            ..Self::default()
        }
    }

    pub fn label(&self) -> String {
        crate::model::run_label(self.method, &self.ablations)
    }

    pub fn session_id(&self, learner_id: &str) -> String {
        format!("{}-{learner_id}", self.label())
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error("learner {0} has no recommended resources")]
    EmptyRecommendation(String),
    #[error("no recommended resource for learner {0} has its prerequisites met")]
    NoFeasiblePath(String),
    #[error("oracle search over {resources} resources up to length {max_len} exceeds the bound of {max_resources} resources and length {max_allowed}")]
    InstanceTooLarge {
        resources: usize,
        max_len: usize,
        max_resources: usize,
        max_allowed: usize,
    },
    #[error("learner context is missing {0}")]
    IncompleteContext(&'static str),
    #[error("ablations apply to malpp only, not {0}")]
    AblationNotSupported(Method),
    #[error("max_plan_versions must be at least 1")]
    InvalidVersions,
    #[error(transparent)]
    Model(#[from] ModelError),
}

impl PlanError {
    /// Failures caused by the model backend rather than the input data.
    pub fn is_backend_failure(&self) -> bool {
        matches!(
            self,
            PlanError::Agent(AgentError::Gateway(_)) | PlanError::Agent(AgentError::HallucinatedResource(_))
        )
    }
}

/// A failed session with whatever transcript it produced.
#[derive(Debug, Error)]
#[error("session {session_id} failed: {error}")]
pub struct SessionError {
    pub session_id: String,
    pub error: PlanError,
    pub transcript: Option<Box<AgentTranscript>>,
}

#[derive(Debug, Clone)]
pub struct SessionOutput {
    pub path: LearningPath,
    pub transcript: Option<AgentTranscript>,
}

/// Runs the configured method for one learner. `effectiveness` is only read
/// by the oracle; it defaults to [`default_effectiveness`].
pub fn run_session(
    backend: &dyn ChatBackend,
    templates: &Templates,
    ctx: &LearnerContext,
    config: &SessionConfig,
    effectiveness: Option<&EffectivenessModel<f64>>,
) -> Result<SessionOutput, SessionError> {
    let session_id = config.session_id(&ctx.learner_id);
    let plain = |error: PlanError| SessionError {
        session_id: session_id.clone(),
        error,
        transcript: None,
    };
    if config.method != Method::Malpp && !config.ablations.is_empty() {
        return Err(plain(PlanError::AblationNotSupported(config.method)));
    }
    match config.method {
        Method::Malpp => run_malpp(backend, templates, ctx, config).map(|(path, t)| SessionOutput {
            path,
            transcript: Some(t),
        }),
        Method::Slmlpp => run_slmlpp(backend, templates, ctx, config).map(|(path, t)| SessionOutput {
            path,
            transcript: Some(t),
        }),
        Method::Rbm => run_rbm(ctx, config.seed.unwrap_or(0))
            .map(|path| SessionOutput { path, transcript: None })
            .map_err(plain),
        Method::Oracle => {
            let owned;
            let eff = match effectiveness {
                Some(e) => e,
                None => {
                    owned = default_effectiveness(ctx).map_err(plain)?;
                    &owned
                }
            };
            run_oracle(ctx, eff, config.oracle)
                .map(|path| SessionOutput { path, transcript: None })
                .map_err(plain)
        }
    }
}
