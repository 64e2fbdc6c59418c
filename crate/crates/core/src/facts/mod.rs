//! Language-neutral model of one crate.
//!
//! Everything downstream (graph construction, audit units, check
//! classification) consumes [`CrateFacts`] only, so alternate frontends can
//! feed the analysis through the JSON interchange format in [`json`].

pub mod annotation;
pub mod json;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

pub use annotation::{parse_safety_annotation, SafetyPropertySet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrateFacts {
    pub crate_name: String,
    pub functions: Vec<FunctionFact>,
    pub structs: Vec<StructFact>,
    pub traits: Vec<TraitFact>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FunctionKind {
    FreeFunction,
    StaticMethod,
    DynamicMethod,
    TraitMethodDecl,
    TraitMethodImpl,
}

/// Declared visibility, ordered from least to most visible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Visibility {
    ModulePrivate,
    CrateVisible,
    Public,
}

impl fmt::Display for Visibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Visibility::ModulePrivate => "module-private",
            Visibility::CrateVisible => "crate-visible",
            Visibility::Public => "public",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionFact {
    pub id: String,
    pub name: String,
    pub owner: Option<String>,
    pub kind: FunctionKind,
    pub declared_unsafe: bool,
    pub contains_unsafe_block: bool,
    pub visibility: Visibility,
    pub params: Vec<Param>,
    pub returns: String,
    pub is_constructor: bool,
    pub safety_doc: Option<String>,
    pub call_sites: Vec<CallSiteFact>,
}

impl FunctionFact {
    pub fn has_receiver(&self) -> bool {
        self.params.first().is_some_and(|p| p.name == "self")
    }

    /// Normalized textual signature, e.g. `unsafe fn(u64) -> _`.
    pub fn signature(&self) -> String {
        render_signature(
            self.declared_unsafe,
            self.params.iter().map(|p| p.ty.as_str()),
            &self.returns,
        )
    }
}

pub(crate) fn render_signature<'a>(
    is_unsafe: bool,
    params: impl IntoIterator<Item = &'a str>,
    ret: &str,
) -> String {
    let params: Vec<&str> = params.into_iter().collect();
    let mut s = String::new();
    if is_unsafe {
        s.push_str("unsafe ");
    }
    s.push_str("fn(");
    s.push_str(&params.join(", "));
    s.push(')');
    if ret != "()" {
        s.push_str(" -> ");
        s.push_str(ret);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSiteFact {
    pub caller_id: String,
    pub callee_ref: CalleeRef,
    pub callee_is_unsafe: bool,
    pub inside_unsafe_block: bool,
    pub arg_flows: Vec<ArgFlow>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CalleeRef {
    /// Resolved function id, or the path as written when it lies outside the crate.
    DirectPath {
        path: String,
    },
    TraitGenericMethod {
        trait_path: String,
        method: String,
    },
    /// A callee read from a function-typed parameter or field.
    FunctionParam {
        param: String,
        signature: String,
    },
}

impl fmt::Display for CalleeRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CalleeRef::DirectPath { path } => f.write_str(path),
            CalleeRef::TraitGenericMethod { trait_path, method } => {
                write!(f, "<_ as {trait_path}>::{method}")
            }
            CalleeRef::FunctionParam { param, signature } => {
                write!(f, "<fn param {param}: {signature}>")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArgSource {
    GlobalOrStaticVar,
    HardcodedLiteral,
    FixedValueFn,
    CallerParam,
    LocalComputed,
}

impl ArgSource {
    /// Sources that fix the value independently of the caller's inputs.
    pub fn is_fixed(self) -> bool {
        matches!(
            self,
            ArgSource::GlobalOrStaticVar | ArgSource::HardcodedLiteral | ArgSource::FixedValueFn
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArgFlow {
    pub source: ArgSource,
    pub validated_by_branch_or_assert: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldFact {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    pub visibility: Visibility,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructFact {
    pub type_path: String,
    pub fields: Vec<FieldFact>,
    pub constructor_ids: Vec<String>,
    pub literal_constructible_from: Visibility,
}

impl StructFact {
    /// Name used in source for the type (last path segment).
    pub fn short_name(&self) -> &str {
        last_segment(&self.type_path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitImplFact {
    pub for_type: String,
    /// Declaration id -> implementing function id.
    pub methods: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraitFact {
    pub trait_path: String,
    pub method_decls: Vec<String>,
    /// Declarations that carry a default body.
    #[serde(default)]
    pub provided_methods: Vec<String>,
    pub impls: Vec<TraitImplFact>,
}

/// Last `::` segment of a path, ignoring `::` inside `<...>`.
pub fn last_segment(path: &str) -> &str {
    let mut depth = 0i32;
    let bytes = path.as_bytes();
    let mut cut = 0;
    let mut i = 0;
    while i < bytes.len() {
        match bytes[i] {
            b'<' => depth += 1,
            b'>' => depth -= 1,
            b':' if depth == 0 && bytes.get(i + 1) == Some(&b':') => {
                cut = i + 2;
                i += 1;
            }
            _ => {}
        }
        i += 1;
    }
    &path[cut..]
}

/// A violated model invariant, located by JSON pointer into the facts document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantViolation {
    pub pointer: String,
    pub message: String,
}

impl CrateFacts {
    pub fn empty(crate_name: impl Into<String>) -> Self {
        CrateFacts {
            crate_name: crate_name.into(),
            functions: Vec::new(),
            structs: Vec::new(),
            traits: Vec::new(),
        }
    }

    pub fn function(&self, id: &str) -> Option<&FunctionFact> {
        self.functions
            .binary_search_by(|f| f.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.functions[i])
            .or_else(|| self.functions.iter().find(|f| f.id == id))
    }

    pub fn struct_fact(&self, type_path: &str) -> Option<&StructFact> {
        self.structs.iter().find(|s| s.type_path == type_path)
    }

    pub fn trait_fact(&self, trait_path: &str) -> Option<&TraitFact> {
        self.traits.iter().find(|t| t.trait_path == trait_path)
    }

    /// Functions whose owner is `owner`, in id order.
    pub fn owned_by<'a>(&'a self, owner: &'a str) -> impl Iterator<Item = &'a FunctionFact> + 'a {
        self.functions
            .iter()
            .filter(move |f| f.owner.as_deref() == Some(owner))
    }

    /// Decl ids of trait methods without a default body; these are never graph candidates.
    pub fn bodyless_decls(&self) -> HashSet<&str> {
        let mut out = HashSet::new();
        for t in &self.traits {
            let provided: HashSet<&str> = t.provided_methods.iter().map(String::as_str).collect();
            for d in &t.method_decls {
                if !provided.contains(d.as_str()) {
                    out.insert(d.as_str());
                }
            }
        }
        out
    }

    /// Sort every list into the canonical order used for serialization.
    pub fn canonicalize(&mut self) {
        self.functions.sort_by(|a, b| a.id.cmp(&b.id));
        self.structs.sort_by(|a, b| a.type_path.cmp(&b.type_path));
        self.traits.sort_by(|a, b| a.trait_path.cmp(&b.trait_path));
        for s in &mut self.structs {
            s.constructor_ids.sort();
            s.constructor_ids.dedup();
        }
        for t in &mut self.traits {
            t.method_decls.sort();
            t.provided_methods.sort();
            t.impls.sort_by(|a, b| a.for_type.cmp(&b.for_type));
        }
    }

    /// Check the model invariants; returns every violation found.
    pub fn validate(&self) -> Vec<InvariantViolation> {
        let mut out = Vec::new();
        let mut push =
            |pointer: String, message: String| out.push(InvariantViolation { pointer, message });
        let mut seen = HashSet::new();
        let owners: HashSet<&str> = self
            .structs
            .iter()
            .map(|s| s.type_path.as_str())
            .chain(self.traits.iter().map(|t| t.trait_path.as_str()))
            .collect();
        let by_id: HashMap<&str, &FunctionFact> =
            self.functions.iter().map(|f| (f.id.as_str(), f)).collect();

        for (i, f) in self.functions.iter().enumerate() {
            if !seen.insert(f.id.as_str()) {
                push(
                    format!("/functions/{i}/id"),
                    format!("duplicate id `{}`", f.id),
                );
            }
            if let Some(owner) = &f.owner {
                if !owners.contains(owner.as_str()) {
                    push(
                        format!("/functions/{i}/owner"),
                        format!("owner `{owner}` is not a struct or trait of the crate"),
                    );
                }
            }
            if (f.kind == FunctionKind::DynamicMethod) != f.has_receiver() {
                push(
                    format!("/functions/{i}/kind"),
                    format!(
                        "`{}`: dynamic methods are exactly those taking a receiver",
                        f.id
                    ),
                );
            }
            if f.is_constructor && (f.kind != FunctionKind::StaticMethod || f.owner.is_none()) {
                push(
                    format!("/functions/{i}/is_constructor"),
                    format!("`{}`: constructors must be owned static methods", f.id),
                );
            }
            for (j, site) in f.call_sites.iter().enumerate() {
                if site.caller_id != f.id {
                    push(
                        format!("/functions/{i}/call_sites/{j}/caller_id"),
                        format!(
                            "caller `{}` does not match enclosing `{}`",
                            site.caller_id, f.id
                        ),
                    );
                }
                if let CalleeRef::DirectPath { path } = &site.callee_ref {
                    if let Some(callee) = by_id.get(path.as_str()) {
                        if callee.params.len() != site.arg_flows.len() {
                            push(
                                format!("/functions/{i}/call_sites/{j}/arg_flows"),
                                format!(
                                    "{} argument flows for `{path}` of arity {}",
                                    site.arg_flows.len(),
                                    callee.params.len()
                                ),
                            );
                        }
                    }
                }
            }
        }
        for (i, s) in self.structs.iter().enumerate() {
            for (j, c) in s.constructor_ids.iter().enumerate() {
                let ok = by_id
                    .get(c.as_str())
                    .is_some_and(|f| f.is_constructor && f.owner.as_deref() == Some(&s.type_path));
                if !ok {
                    push(
                        format!("/structs/{i}/constructor_ids/{j}"),
                        format!("`{c}` is not a constructor owned by `{}`", s.type_path),
                    );
                }
            }
        }
        for (i, t) in self.traits.iter().enumerate() {
            let decls: BTreeSet<&str> = t.method_decls.iter().map(String::as_str).collect();
            for (j, imp) in t.impls.iter().enumerate() {
                for (decl, imp_id) in &imp.methods {
                    if !decls.contains(decl.as_str()) {
                        push(
                            format!("/traits/{i}/impls/{j}/methods"),
                            format!("`{imp_id}` maps to unknown decl `{decl}`"),
                        );
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn last_segment_skips_qualified_self() {
        assert_eq!(last_segment("k::<Foo as a::Bar>::run"), "run");
        assert_eq!(last_segment("plain"), "plain");
        assert_eq!(last_segment("a::b::C"), "C");
    }

    #[test]
    fn signature_rendering() {
        assert_eq!(render_signature(true, [], "_"), "unsafe fn() -> _");
        assert_eq!(
            render_signature(false, ["u8", "&Self"], "()"),
            "fn(u8, &Self)"
        );
    }

    #[test]
    fn validate_flags_receiver_rule() {
        let mut facts = CrateFacts::empty("k");
        facts.functions.push(FunctionFact {
            id: "k::f".into(),
            name: "f".into(),
            owner: None,
            kind: FunctionKind::DynamicMethod,
            declared_unsafe: false,
            contains_unsafe_block: false,
            visibility: Visibility::Public,
            params: vec![],
            returns: "()".into(),
            is_constructor: false,
            safety_doc: None,
            call_sites: vec![],
        });
        let v = facts.validate();
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].pointer, "/functions/0/kind");
    }
}
