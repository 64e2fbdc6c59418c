//! `# Safety` doc-comment sections as sets of normalized property tags.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// A set of normalized safety-property tags, used as either a required (RS)
/// or a verified (VS) set.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SafetyPropertySet(BTreeSet<String>);

impl SafetyPropertySet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a set from raw tags, normalizing each and dropping empty ones.
    pub fn from_tags<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = Self::new();
        for t in tags {
            set.insert(t.as_ref());
        }
        set
    }

    pub fn insert(&mut self, raw: &str) -> bool {
        let tag = normalize_tag(raw);
        !tag.is_empty() && self.0.insert(tag)
    }

    pub fn contains(&self, tag: &str) -> bool {
        self.0.contains(tag)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn union(&self, other: &SafetyPropertySet) -> SafetyPropertySet {
        SafetyPropertySet(self.0.union(&other.0).cloned().collect())
    }

    pub fn intersection(&self, other: &SafetyPropertySet) -> SafetyPropertySet {
        SafetyPropertySet(self.0.intersection(&other.0).cloned().collect())
    }

    /// Tags of `self` missing from `other`.
    pub fn difference(&self, other: &SafetyPropertySet) -> SafetyPropertySet {
        SafetyPropertySet(self.0.difference(&other.0).cloned().collect())
    }

    pub fn is_subset(&self, other: &SafetyPropertySet) -> bool {
        self.0.is_subset(&other.0)
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0.into_iter().collect()
    }
}

impl<'a> FromIterator<&'a str> for SafetyPropertySet {
    fn from_iter<T: IntoIterator<Item = &'a str>>(iter: T) -> Self {
        Self::from_tags(iter)
    }
}

/// Trim, lowercase, collapse whitespace, drop backticks and strip punctuation
/// at either end. Interior punctuation such as `i/o` is kept.
pub fn normalize_tag(raw: &str) -> String {
    let lowered = raw.replace('`', "").to_lowercase();
    let collapsed = lowered.split_whitespace().collect::<Vec<_>>().join(" ");
    collapsed
        .trim_matches(|c: char| c.is_ascii_punctuation() || c.is_whitespace())
        .to_string()
}

/// Parses the `# Safety` section of a doc comment.
///
/// Accepts either raw comment text (with `///`, `//!` or `/** */` markers) or
/// the already-stripped doc string. Returns `None` when no such heading
/// exists; a heading with no content yields an empty set.
pub fn parse_safety_annotation(doc: &str) -> Option<SafetyPropertySet> {
    let lines: Vec<String> = doc.lines().map(strip_comment_marker).collect();
    let mut in_fence = false;
    let mut body: Option<Vec<String>> = None;

    for line in &lines {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            continue;
        }
        if let Some(heading) = heading_text(trimmed) {
            if body.is_some() {
                // next section ends the safety section
                break;
            }
            if let Some(rest) = safety_heading_rest(heading) {
                let mut b = Vec::new();
                if !rest.is_empty() {
                    b.push(rest.to_string());
                }
                body = Some(b);
            }
            continue;
        }
        if let Some(b) = body.as_mut() {
            b.push(trimmed.to_string());
        }
    }

    body.map(|b| split_tags(&b))
}

fn strip_comment_marker(line: &str) -> String {
    let t = line.trim_start();
    for prefix in ["///", "//!", "/**", "/*!"] {
        if let Some(rest) = t.strip_prefix(prefix) {
            return rest.trim_end_matches("*/").to_string();
        }
    }
    if let Some(rest) = t.strip_prefix("*/") {
        return rest.to_string();
    }
    if let Some(rest) = t.strip_prefix('*') {
        if !rest.starts_with('*') {
            return rest.trim_end_matches("*/").to_string();
        }
    }
    line.to_string()
}

fn heading_text(line: &str) -> Option<&str> {
    let rest = line.trim_start_matches('#');
    (rest.len() < line.len() && line.starts_with('#')).then(|| rest.trim())
}

fn safety_heading_rest(heading: &str) -> Option<&str> {
    let word = heading.get(..6)?;
    if !word.eq_ignore_ascii_case("safety") {
        return None;
    }
    let rest = heading[6..].trim_start();
    if rest.is_empty() {
        Some("")
    } else {
        rest.strip_prefix(':').map(str::trim)
    }
}

fn bullet_body(line: &str) -> Option<&str> {
    for marker in ["- ", "* ", "+ "] {
        if let Some(rest) = line.strip_prefix(marker) {
            return Some(rest);
        }
    }
    let digits = line.chars().take_while(char::is_ascii_digit).count();
    if digits > 0 {
        let rest = &line[digits..];
        if let Some(r) = rest.strip_prefix(". ").or_else(|| rest.strip_prefix(") ")) {
            return Some(r);
        }
    }
    None
}

fn split_tags(lines: &[String]) -> SafetyPropertySet {
    let mut set = SafetyPropertySet::new();
    let mut prose = String::new();
    let mut bullet: Option<String> = None;

    let flush_prose = |prose: &mut String, set: &mut SafetyPropertySet| {
        for s in sentences(prose) {
            set.insert(&s);
        }
        prose.clear();
    };

    for line in lines {
        if line.is_empty() {
            if let Some(b) = bullet.take() {
                set.insert(&b);
            }
            flush_prose(&mut prose, &mut set);
            continue;
        }
        if let Some(item) = bullet_body(line) {
            if let Some(b) = bullet.take() {
                set.insert(&b);
            }
            flush_prose(&mut prose, &mut set);
            bullet = Some(item.to_string());
        } else if let Some(b) = bullet.as_mut() {
            b.push(' ');
            b.push_str(line);
        } else {
            if !prose.is_empty() {
                prose.push(' ');
            }
            prose.push_str(line);
        }
    }
    if let Some(b) = bullet.take() {
        set.insert(&b);
    }
    flush_prose(&mut prose, &mut set);
    set
}

/// Splits prose at `.`, `!` or `?` followed by whitespace or the end, leaving
/// single-letter abbreviations such as "e.g." intact.
fn sentences(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..chars.len() {
        if !matches!(chars[i], '.' | '!' | '?') {
            continue;
        }
        let at_break = chars.get(i + 1).is_none_or(|c| c.is_whitespace());
        if !at_break {
            continue;
        }
        let word: String = chars[start..i]
            .iter()
            .rev()
            .take_while(|c| !c.is_whitespace())
            .collect();
        let abbreviation = chars[i] == '.'
            && (word.contains('.')
                || (word.chars().count() == 1 && word.chars().all(char::is_alphabetic)));
        if abbreviation {
            continue;
        }
        out.push(chars[start..=i].iter().collect());
        start = i + 1;
    }
    if start < chars.len() {
        out.push(chars[start..].iter().collect());
    }
    out
}
