//! Minimal `{name}` templating with `{{` / `}}` escapes.
//!
//! Unknown or unbound placeholders are errors; nothing passes through silently.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("template `{template}`: unterminated placeholder at byte {offset}")]
    Unterminated { template: String, offset: usize },
    #[error("template `{template}`: stray `}}` at byte {offset}")]
    StrayBrace { template: String, offset: usize },
    #[error("template `{template}`: invalid placeholder name `{name}`")]
    InvalidName { template: String, name: String },
    #[error("template `{template}`: unknown placeholder `{{{name}}}`")]
    UnknownPlaceholder { template: String, name: String },
    #[error("template `{template}`: no binding for `{{{name}}}`")]
    Unbound { template: String, name: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Slot(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    name: String,
    segments: Vec<Segment>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Template {
    pub fn parse(name: impl Into<String>, source: &str) -> Result<Self, TemplateError> {
        let name = name.into();
        let mut segments = Vec::new();
        let mut literal = String::new();
        let mut chars = source.char_indices().peekable();
        while let Some((offset, c)) = chars.next() {
            match c {
                '{' if matches!(chars.peek(), Some((_, '{'))) => {
                    chars.next();
                    literal.push('{');
                }
                '}' if matches!(chars.peek(), Some((_, '}'))) => {
                    chars.next();
                    literal.push('}');
                }
                '{' => {
                    let mut slot = String::new();
                    let mut closed = false;
                    for (_, c) in chars.by_ref() {
                        if c == '}' {
                            closed = true;
                            break;
                        }
                        slot.push(c);
                    }
                    if !closed {
                        return Err(TemplateError::Unterminated { template: name, offset });
                    }
                    if !valid_name(&slot) {
                        return Err(TemplateError::InvalidName {
                            template: name,
                            name: slot,
                        });
                    }
                    if !literal.is_empty() {
                        segments.push(Segment::Literal(std::mem::take(&mut literal)));
                    }
                    segments.push(Segment::Slot(slot));
                }
                '}' => return Err(TemplateError::StrayBrace { template: name, offset }),
                c => literal.push(c),
            }
        }
        if !literal.is_empty() {
            segments.push(Segment::Literal(literal));
        }
        Ok(Self { name, segments })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn placeholders(&self) -> BTreeSet<&str> {
        self.segments
            .iter()
            .filter_map(|s| match s {
                Segment::Slot(n) => Some(n.as_str()),
                Segment::Literal(_) => None,
            })
            .collect()
    }

    /// Fails if the template uses a placeholder outside `allowed`.
    pub fn check_allowed(&self, allowed: &[&str]) -> Result<(), TemplateError> {
        match self.placeholders().into_iter().find(|p| !allowed.contains(p)) {
            Some(name) => Err(TemplateError::UnknownPlaceholder {
                template: self.name.clone(),
                name: name.to_string(),
            }),
            None => Ok(()),
        }
    }

    /// Substitutes every placeholder. Bindings not used by the template are ignored.
    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
        let mut out = String::new();
        for segment in &self.segments {
            match segment {
                Segment::Literal(text) => out.push_str(text),
                Segment::Slot(name) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| TemplateError::Unbound {
                            template: self.name.clone(),
                            name: name.clone(),
                        })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}
