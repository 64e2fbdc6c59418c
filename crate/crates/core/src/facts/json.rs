//! Versioned JSON interchange for [`CrateFacts`].
//!
//! Top-level object: `{"facts_version": "1", "crate_name": .., "functions": [..],
//! "structs": [..], "traits": [..]}`. Keys are emitted sorted, so equal models
//! serialize to identical bytes.

use std::io::{Read, Write};

use serde_json::Value;
use thiserror::Error;

use super::CrateFacts;

pub const FACTS_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum FactsJsonError {
    #[error("malformed JSON: {0}")]
    Syntax(String),
    #[error("schema violation at {pointer}: {message}")]
    SchemaViolation { pointer: String, message: String },
    #[error("unsupported facts_version {found:?} (expected {FACTS_VERSION:?})")]
    VersionMismatch { found: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl FactsJsonError {
    fn schema(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        FactsJsonError::SchemaViolation {
            pointer: pointer.into(),
            message: message.into(),
        }
    }
}

pub fn save_facts_json(facts: &CrateFacts) -> String {
    let mut value = serde_json::to_value(facts).expect("facts are always representable as JSON");
    if let Value::Object(map) = &mut value {
        map.insert("facts_version".into(), Value::String(FACTS_VERSION.into()));
    }
    let mut s = serde_json::to_string_pretty(&value).expect("serializing a Value cannot fail");
    s.push('\n');
    s
}

pub fn write_facts_json<W: Write>(facts: &CrateFacts, mut out: W) -> std::io::Result<()> {
    out.write_all(save_facts_json(facts).as_bytes())
}

pub fn load_facts_json<R: Read>(mut input: R) -> Result<CrateFacts, FactsJsonError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    load_facts_str(&text)
}

pub fn load_facts_str(text: &str) -> Result<CrateFacts, FactsJsonError> {
    let mut value: Value =
        serde_json::from_str(text).map_err(|e| FactsJsonError::Syntax(e.to_string()))?;
    let map = value
        .as_object_mut()
        .ok_or_else(|| FactsJsonError::schema("", "document must be an object"))?;
    match map.remove("facts_version") {
        None => {
            return Err(FactsJsonError::schema(
                "/facts_version",
                "missing required key",
            ))
        }
        Some(Value::String(v)) if v == FACTS_VERSION => {}
        Some(Value::String(found)) => return Err(FactsJsonError::VersionMismatch { found }),
        Some(_) => return Err(FactsJsonError::schema("/facts_version", "must be a string")),
    }

    let facts: CrateFacts = serde_path_to_error::deserialize(value).map_err(|err| {
        let mut pointer = to_pointer(&err.path().to_string());
        let message = err.inner().to_string();
        if let Some(field) = missing_field(&message) {
            pointer.push('/');
            pointer.push_str(field);
        }
        FactsJsonError::SchemaViolation { pointer, message }
    })?;

    if let Some(v) = facts.validate().into_iter().next() {
        return Err(FactsJsonError::schema(v.pointer, v.message));
    }
    Ok(facts)
}

/// `functions[0].call_sites[2].kind` -> `/functions/0/call_sites/2/kind`
fn to_pointer(path: &str) -> String {
    if path == "." {
        return String::new();
    }
    let mut out = String::new();
    for part in path.split('.') {
        let (name, rest) = part.split_once('[').unwrap_or((part, ""));
        if !name.is_empty() {
            out.push('/');
            out.push_str(name);
        }
        for idx in rest.split('[').filter(|s| !s.is_empty()) {
            out.push('/');
            out.push_str(idx.trim_end_matches(']'));
        }
    }
    out
}

fn missing_field(message: &str) -> Option<&str> {
    let rest = message.strip_prefix("missing field `")?;
    rest.split('`').next()
}
