//! Tagged JSON data blocks embedded in prompts.
//!
//! Each block is `<tag>`, one line of compact JSON, `</tag>`. The rule-based
//! mock backend reads its inputs back out of these.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const LEARNER_PROFILE: &str = "learner_profile";
pub const RISK_ALERT: &str = "risk_alert";
pub const LEARNER_STATE: &str = "learner_state";
pub const KNOWLEDGE_GRAPH: &str = "knowledge_graph";
pub const RESOURCES: &str = "resources";
pub const DIAGNOSTIC_REPORT: &str = "diagnostic_report";
pub const LOAD_TARGET: &str = "load_target";
pub const PROGRESSION_RULE: &str = "progression_rule";
pub const PATH_LIMITS: &str = "path_limits";
pub const PREVIOUS_PATH: &str = "previous_path";
pub const REVISION_SUGGESTIONS: &str = "revision_suggestions";
pub const LEARNING_PATH: &str = "learning_path";

/// Capacity and band carried by the CLT block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoadTarget {
    pub capacity_minutes: f64,
    pub low: f64,
    pub high: f64,
}

/// Carried by the ZPD block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressionRule {
    pub difficulty: String,
    pub prerequisites: String,
}

impl Default for ProgressionRule {
    fn default() -> Self {
        ProgressionRule {
            difficulty: "non_decreasing".into(),
            prerequisites: "mastered_or_earlier_in_path".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathLimits {
    pub max_path_length: usize,
}

pub fn render<T: Serialize + ?Sized>(tag: &str, value: &T) -> String {
    let json = serde_json::to_string(value).expect("block payload serializes");
    format!("<{tag}>\n{json}\n</{tag}>")
}

/// Raw JSON text of the first `tag` block, if any.
pub fn find_raw<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let open = format!("<{tag}>\n");
    let close = format!("\n</{tag}>");
    let start = text.find(&open)? + open.len();
    let len = text[start..].find(&close)?;
    Some(&text[start..start + len])
}

pub fn find<T: DeserializeOwned>(text: &str, tag: &str) -> Option<Result<T, String>> {
    find_raw(text, tag).map(|raw| serde_json::from_str(raw).map_err(|e| format!("<{tag}> block: {e}")))
}
