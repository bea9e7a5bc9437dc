//! A small template language: `{{name}}` placeholders and `{{#flag}}...{{/flag}}`
//! sections, with the system and user texts split by `=== SYSTEM ===` and
//! `=== USER ===` marker lines.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template has no value for {{{{{0}}}}}")]
    MissingField(String),
    #[error("malformed template: {0}")]
    Malformed(String),
    #[error("cannot read template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Node {
    Text(String),
    Field(String),
    Section(String, Vec<Node>),
}

fn parse_nodes(src: &str, closing: Option<&str>) -> Result<(Vec<Node>, usize), TemplateError> {
    let mut nodes = Vec::new();
    let mut pos = 0;
    while let Some(offset) = src[pos..].find("{{") {
        let open = pos + offset;
        if open > pos {
            nodes.push(Node::Text(src[pos..open].to_string()));
        }
        let close = src[open..]
            .find("}}")
            .map(|c| open + c)
            .ok_or_else(|| TemplateError::Malformed(format!("unclosed tag at byte {open}")))?;
        let tag = src[open + 2..close].trim();
        pos = close + 2;
        if let Some(name) = tag.strip_prefix('#') {
            let (children, used) = parse_nodes(&src[pos..], Some(name))?;
            nodes.push(Node::Section(name.to_string(), children));
            pos += used;
        } else if let Some(name) = tag.strip_prefix('/') {
            return match closing {
                Some(expected) if expected == name => Ok((nodes, pos)),
                _ => Err(TemplateError::Malformed(format!("unexpected {{{{/{name}}}}}"))),
            };
        } else {
            nodes.push(Node::Field(tag.to_string()));
        }
    }
    if let Some(name) = closing {
        return Err(TemplateError::Malformed(format!("section {name} is never closed")));
    }
    if pos < src.len() {
        nodes.push(Node::Text(src[pos..].to_string()));
    }
    Ok((nodes, src.len()))
}

/// Values and section flags for one rendering.
#[derive(Debug, Clone, Default)]
pub struct Vars {
    values: BTreeMap<&'static str, String>,
    flags: BTreeSet<&'static str>,
}

impl Vars {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &'static str, value: impl Into<String>) -> &mut Self {
        self.values.insert(name, value.into());
        self
    }

    pub fn flag(&mut self, name: &'static str, on: bool) -> &mut Self {
        if on {
            self.flags.insert(name);
        } else {
            self.flags.remove(name);
        }
        self
    }
}

fn render_nodes(nodes: &[Node], vars: &Vars, out: &mut String) -> Result<(), TemplateError> {
    for node in nodes {
        match node {
            Node::Text(t) => out.push_str(t),
            Node::Field(name) => out.push_str(
                vars.values
                    .get(name.as_str())
                    .ok_or_else(|| TemplateError::MissingField(name.clone()))?,
            ),
            Node::Section(name, children) => {
                if vars.flags.contains(name.as_str()) {
                    render_nodes(children, vars, out)?;
                }
            }
        }
    }
    Ok(())
}

fn collect_fields<'a>(nodes: &'a [Node], out: &mut Vec<&'a str>) {
    for node in nodes {
        match node {
            Node::Field(name) => out.push(name),
            Node::Section(_, children) => collect_fields(children, out),
            Node::Text(_) => {}
        }
    }
}

const SYSTEM_MARKER: &str = "=== SYSTEM ===\n";
const USER_MARKER: &str = "=== USER ===\n";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    system: Vec<Node>,
    user: Vec<Node>,
}

impl Template {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let rest = source
            .strip_prefix(SYSTEM_MARKER)
            .ok_or_else(|| TemplateError::Malformed("template must start with a SYSTEM marker".into()))?;
        let (system, user) = rest
            .split_once(USER_MARKER)
            .ok_or_else(|| TemplateError::Malformed("template has no USER marker".into()))?;
        Ok(Template {
            system: parse_nodes(system.trim_end(), None)?.0,
            user: parse_nodes(user.trim_end(), None)?.0,
        })
    }

    /// Renders `(system, user)`.
    pub fn render(&self, vars: &Vars) -> Result<(String, String), TemplateError> {
        let mut system = String::new();
        let mut user = String::new();
        render_nodes(&self.system, vars, &mut system)?;
        render_nodes(&self.user, vars, &mut user)?;
        Ok((system, user))
    }

    /// Placeholder names in order of appearance, repeats included.
    pub fn fields(&self) -> Vec<&str> {
        let mut out = Vec::new();
        collect_fields(&self.system, &mut out);
        collect_fields(&self.user, &mut out);
        out
    }
}

/// The four prompt templates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Templates {
    pub analytics: Template,
    pub planner: Template,
    pub reflector: Template,
    pub single: Template,
}

const BUNDLED: [(&str, &str); 4] = [
    ("analytics.txt", include_str!("../../templates/analytics.txt")),
    ("planner.txt", include_str!("../../templates/planner.txt")),
    ("reflector.txt", include_str!("../../templates/reflector.txt")),
    ("single.txt", include_str!("../../templates/single.txt")),
];

impl Templates {
    pub fn bundled() -> Self {
        let parse = |i: usize| Template::parse(BUNDLED[i].1).expect("bundled template parses");
        Templates {
            analytics: parse(0),
            planner: parse(1),
            reflector: parse(2),
            single: parse(3),
        }
    }

    /// Bundled templates, with any of the four files found in `dir` taking
    /// their place.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut parsed = Vec::with_capacity(4);
        for (name, bundled) in BUNDLED {
            let path = dir.join(name);
            let source = if path.exists() {
                std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?
            } else {
                bundled.to_string()
            };
            parsed.push(Template::parse(&source)?);
        }
        let mut it = parsed.into_iter();
        let mut next = || it.next().expect("four templates");
        Ok(Templates {
            analytics: next(),
            planner: next(),
            reflector: next(),
            single: next(),
        })
    }
}

impl Default for Templates {
    fn default() -> Self {
        Self::bundled()
    }
}
