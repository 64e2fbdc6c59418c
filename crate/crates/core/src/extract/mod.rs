//! Source frontend: parse a crate's `.rs` files into [`CrateFacts`].

mod body;
mod collect;
mod index;
mod known;
pub(crate) mod types;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use log::{debug, warn};
use thiserror::Error;

use crate::facts::{
    CrateFacts, FieldFact, FunctionFact, FunctionKind, Param, StructFact, TraitFact, TraitImplFact,
};
use collect::{doc_text, has_receiver, Collected, ParsedFile, PendingFn, TypeNames};
use index::{Index, TypeCtx};

pub use body::{static_mut_pseudo, INLINE_ASM, RAW_DEREF};

/// One source file, with its path relative to the crate root.
#[derive(Debug, Clone)]
pub struct SourceFile {
    pub path: String,
    pub contents: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, contents: impl Into<String>) -> Self {
        SourceFile {
            path: path.into(),
            contents: contents.into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub facts: CrateFacts,
    /// Parse failures and skipped macro bodies; never fatal.
    pub warnings: Vec<String>,
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("crate root {0} does not exist or is not a directory")]
    RootNotFound(PathBuf),
    #[error("no .rs files found under {0}")]
    NoSourceFiles(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

const SKIPPED_DIRS: &[&str] = &["target", "tests", "benches", "examples"];

/// Walk `crate_root` (its `src/` directory when present) and extract facts.
pub fn extract_facts(crate_root: &Path) -> Result<Extraction, ExtractError> {
    if !crate_root.is_dir() {
        return Err(ExtractError::RootNotFound(crate_root.to_path_buf()));
    }
    let crate_name = crate_name_for(crate_root);
    let src = crate_root.join("src");
    let base = if src.is_dir() {
        src
    } else {
        crate_root.to_path_buf()
    };

    let mut files = Vec::new();
    let walker = walkdir::WalkDir::new(&base)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| {
            if e.depth() == 0 || !e.file_type().is_dir() {
                return true;
            }
            let name = e.file_name().to_string_lossy();
            !name.starts_with('.') && !SKIPPED_DIRS.contains(&name.as_ref())
        });
    for entry in walker {
        let entry = entry.map_err(|e| ExtractError::Io {
            path: e
                .path()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| base.clone()),
            source: e
                .into_io_error()
                .unwrap_or_else(|| std::io::Error::other("walk error")),
        })?;
        if !entry.file_type().is_file() || entry.path().extension().is_none_or(|x| x != "rs") {
            continue;
        }
        let contents =
            std::fs::read_to_string(entry.path()).map_err(|source| ExtractError::Io {
                path: entry.path().to_path_buf(),
                source,
            })?;
        let rel = entry.path().strip_prefix(&base).unwrap_or(entry.path());
        let rel = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/");
        files.push(SourceFile::new(rel, contents));
    }
    if files.is_empty() {
        return Err(ExtractError::NoSourceFiles(crate_root.to_path_buf()));
    }
    Ok(extract_from_sources(&crate_name, &files))
}

fn crate_name_for(root: &Path) -> String {
    let from_manifest = std::fs::read_to_string(root.join("Cargo.toml"))
        .ok()
        .and_then(|t| t.parse::<toml::Table>().ok())
        .and_then(|t| t.get("package")?.get("name")?.as_str().map(str::to_string));
    let name = from_manifest.unwrap_or_else(|| {
        root.canonicalize()
            .ok()
            .and_then(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .unwrap_or_else(|| "crate".into())
    });
    name.replace('-', "_")
}

/// Module path of a file relative to the source root.
fn module_of(crate_name: &str, rel: &str) -> Vec<String> {
    let rel = rel.strip_prefix("src/").unwrap_or(rel);
    let mut parts: Vec<String> = rel.split('/').map(str::to_string).collect();
    let file = parts.pop().unwrap_or_default();
    let stem = file.strip_suffix(".rs").unwrap_or(&file).to_string();
    let mut module = vec![crate_name.to_string()];
    module.extend(parts);
    let is_root_file = module.len() == 1 && (stem == "lib" || stem == "main");
    if stem != "mod" && !is_root_file {
        module.push(stem);
    }
    module
}

/// Extract facts from in-memory sources. Paths are relative to the crate root
/// or its `src/` directory.
pub fn extract_from_sources(crate_name: &str, files: &[SourceFile]) -> Extraction {
    let mut warnings = Vec::new();
    let mut parsed = Vec::new();
    let mut sorted: Vec<&SourceFile> = files.iter().collect();
    sorted.sort_by(|a, b| a.path.cmp(&b.path));
    for f in sorted {
        match syn::parse_file(&f.contents) {
            Ok(ast) => parsed.push(ParsedFile {
                rel_path: f.path.clone(),
                module: module_of(crate_name, &f.path),
                ast,
            }),
            Err(e) => {
                let line = e.span().start().line;
                let msg = format!("{}:{line}: skipped unparsable file: {e}", f.path);
                warn!("{msg}");
                warnings.push(msg);
            }
        }
    }

    let collected = Collected::collect(&parsed, crate_name);
    let names = TypeNames::new(&collected);
    let pending = collected.pending_fns(&names, crate_name);

    let mut functions: Vec<FunctionFact> = pending.iter().map(skeleton).collect();

    let mut structs: Vec<StructFact> = collected
        .types
        .iter()
        .map(|t| {
            let fields: Vec<FieldFact> = t
                .fields
                .iter()
                .map(|(n, ty, vis)| FieldFact {
                    name: n.clone(),
                    ty: types::render_type(ty, &t.generics),
                    visibility: *vis,
                })
                .collect();
            let literal = fields
                .iter()
                .map(|f| f.visibility)
                .chain([t.vis])
                .min()
                .unwrap_or(t.vis);
            StructFact {
                type_path: t.path.clone(),
                fields,
                constructor_ids: Vec::new(),
                literal_constructible_from: literal,
            }
        })
        .collect();
    for s in &mut structs {
        s.constructor_ids = detect_constructors(s, &mut functions);
    }

    let traits = build_traits(&collected, &pending);
    let provided: HashSet<String> = traits
        .iter()
        .flat_map(|t| t.provided_methods.iter().cloned())
        .collect();
    let impl_methods: Vec<(String, String, String, String)> = pending
        .iter()
        .filter(|p| p.id.starts_with('<'))
        .filter_map(|p| {
            let ty = p.self_type.clone()?;
            let tr = p
                .trait_path
                .clone()
                .unwrap_or_else(|| impl_trait_text(&p.id));
            Some((ty, tr, p.name.clone(), p.id.clone()))
        })
        .collect();

    let mut idx = Index::new(
        crate_name,
        &collected,
        names,
        &functions,
        &impl_methods,
        &provided,
    );
    let mut mutated: HashMap<String, HashSet<String>> = HashMap::new();
    for p in &pending {
        if let (Some(owner), Some(body)) = (&p.owner, p.body) {
            if has_receiver(p.sig) {
                mutated
                    .entry(owner.clone())
                    .or_default()
                    .extend(body::mutated_self_fields(body));
            }
        }
    }
    idx.mutated_fields = mutated;

    for (p, f) in pending.iter().zip(functions.iter_mut()) {
        let Some(body) = p.body else { continue };
        let generic_names: HashSet<String> = p
            .generics
            .iter()
            .flat_map(|g| types::type_param_names(g))
            .collect();
        let bounds = generic_bounds(&idx, p, &generic_names);
        let ctx = TypeCtx {
            module: &p.module,
            self_type: p.self_type.as_deref(),
            generic_names: &generic_names,
            generic_bounds: &bounds,
        };
        let input = body::FnInput {
            caller_id: &p.id,
            owner: p.owner.as_deref(),
            declared_unsafe: p.sig.unsafety.is_some(),
            params: typed_params(p.sig),
            file: p.file,
        };
        let out = body::analyze_body(&idx, &ctx, &input, body);
        debug!("{}: {} call sites", p.id, out.call_sites.len());
        f.call_sites = out.call_sites;
        f.contains_unsafe_block = out.contains_unsafe_block;
        warnings.extend(out.warnings);
    }

    let mut facts = CrateFacts {
        crate_name: crate_name.to_string(),
        functions,
        structs,
        traits,
    };
    facts.canonicalize();
    Extraction { facts, warnings }
}

fn impl_trait_text(id: &str) -> String {
    id.split_once(" as ")
        .and_then(|(_, rest)| rest.rsplit_once(">::"))
        .map(|(t, _)| t.to_string())
        .unwrap_or_default()
}

fn impl_self_text(id: &str) -> String {
    id.strip_prefix('<')
        .and_then(|r| r.split_once(" as "))
        .map(|(t, _)| t.to_string())
        .unwrap_or_default()
}

fn skeleton(p: &PendingFn<'_>) -> FunctionFact {
    let generic_names: HashSet<String> = p
        .generics
        .iter()
        .flat_map(|g| types::type_param_names(g))
        .collect();
    let params = p
        .sig
        .inputs
        .iter()
        .map(|arg| match arg {
            syn::FnArg::Receiver(r) => Param {
                name: "self".into(),
                ty: types::render_type(&r.ty, &generic_names),
            },
            syn::FnArg::Typed(t) => Param {
                name: match &*t.pat {
                    syn::Pat::Ident(i) => i.ident.to_string(),
                    other => types::render_tokens(
                        quote::ToTokens::to_token_stream(other),
                        &HashSet::new(),
                    ),
                },
                ty: types::render_type(&t.ty, &generic_names),
            },
        })
        .collect();
    FunctionFact {
        id: p.id.clone(),
        name: p.name.clone(),
        owner: p.owner.clone(),
        kind: p.kind,
        declared_unsafe: p.sig.unsafety.is_some(),
        contains_unsafe_block: false,
        visibility: p.vis,
        params,
        returns: types::render_return(&p.sig.output, &generic_names),
        is_constructor: false,
        safety_doc: doc_text(p.attrs),
        call_sites: Vec::new(),
    }
}

fn typed_params(sig: &syn::Signature) -> Vec<(String, Option<&syn::Type>)> {
    let mut out = Vec::new();
    for arg in &sig.inputs {
        if let syn::FnArg::Typed(t) = arg {
            match &*t.pat {
                syn::Pat::Ident(i) => out.push((i.ident.to_string(), Some(&*t.ty))),
                other => {
                    let mut names = Vec::new();
                    body::collect_pat_idents(other, &mut names);
                    out.extend(names.into_iter().map(|n| (n, None)));
                }
            }
        }
    }
    out
}

fn generic_bounds(
    idx: &Index<'_>,
    p: &PendingFn<'_>,
    names: &HashSet<String>,
) -> HashMap<String, Vec<String>> {
    let mut out: HashMap<String, Vec<String>> = HashMap::new();
    let ctx_bounds = HashMap::new();
    let ctx = TypeCtx {
        module: &p.module,
        self_type: p.self_type.as_deref(),
        generic_names: names,
        generic_bounds: &ctx_bounds,
    };
    for g in &p.generics {
        for tp in g.type_params() {
            let b = idx.bound_traits(tp.bounds.iter(), &ctx);
            out.entry(tp.ident.to_string()).or_default().extend(b);
        }
        if let Some(w) = &g.where_clause {
            for pred in &w.predicates {
                if let syn::WherePredicate::Type(pt) = pred {
                    if let syn::Type::Path(tp) = &pt.bounded_ty {
                        if let Some(id) = tp.path.get_ident() {
                            let b = idx.bound_traits(pt.bounds.iter(), &ctx);
                            out.entry(id.to_string()).or_default().extend(b);
                        }
                    }
                }
            }
        }
    }
    out
}

fn build_traits(collected: &Collected<'_>, pending: &[PendingFn<'_>]) -> Vec<TraitFact> {
    let mut out = Vec::new();
    for t in &collected.traits {
        let decls: Vec<&PendingFn<'_>> = pending
            .iter()
            .filter(|p| p.trait_path.as_deref() == Some(t.path.as_str()) && !p.id.starts_with('<'))
            .collect();
        let by_name: HashMap<&str, &str> = decls
            .iter()
            .map(|d| (d.name.as_str(), d.id.as_str()))
            .collect();
        let mut impls: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for p in pending
            .iter()
            .filter(|p| p.id.starts_with('<') && p.trait_path.as_deref() == Some(t.path.as_str()))
        {
            let for_type = p.self_type.clone().unwrap_or_else(|| impl_self_text(&p.id));
            let entry = impls.entry(for_type).or_default();
            if let Some(decl) = by_name.get(p.name.as_str()) {
                entry.insert(decl.to_string(), p.id.clone());
            }
        }
        out.push(TraitFact {
            trait_path: t.path.clone(),
            method_decls: decls.iter().map(|d| d.id.clone()).collect(),
            provided_methods: decls
                .iter()
                .filter(|d| d.body.is_some())
                .map(|d| d.id.clone())
                .collect(),
            impls: impls
                .into_iter()
                .map(|(for_type, methods)| TraitImplFact { for_type, methods })
                .collect(),
        });
    }
    out
}

/// Static methods of `s` returning the owner type, optionally wrapped once in
/// `Option`/`Result`. Marks each match as a constructor.
pub fn detect_constructors(s: &StructFact, fns: &mut [FunctionFact]) -> Vec<String> {
    let short = s.short_name().to_string();
    let mut ids = Vec::new();
    for f in fns.iter_mut() {
        if f.owner.as_deref() != Some(s.type_path.as_str()) || f.kind != FunctionKind::StaticMethod
        {
            continue;
        }
        let Ok(ty) = syn::parse_str::<syn::Type>(&f.returns) else {
            continue;
        };
        let head = types::path_type_head(types::unwrap_optional_like(&ty));
        if head.is_some_and(|h| h == "Self" || h == short) {
            f.is_constructor = true;
            ids.push(f.id.clone());
        }
    }
    ids.sort();
    ids
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::facts::{ArgSource, CalleeRef, Visibility};

    fn one(src: &str) -> CrateFacts {
        let ex = extract_from_sources("k", &[SourceFile::new("lib.rs", src)]);
        assert!(ex.facts.validate().is_empty(), "{:?}", ex.facts.validate());
        ex.facts
    }

    #[test]
    fn module_paths() {
        assert_eq!(module_of("k", "lib.rs"), vec!["k"]);
        assert_eq!(module_of("k", "src/a/mod.rs"), vec!["k", "a"]);
        assert_eq!(module_of("k", "a/b.rs"), vec!["k", "a", "b"]);
    }

    #[test]
    fn empty_crate() {
        let f = one("");
        assert!(f.functions.is_empty() && f.structs.is_empty() && f.traits.is_empty());
    }

    #[test]
    fn unresolved_call_in_unsafe_block_is_presumed_unsafe() {
        let f = one("fn foo(x: u8) { if IsValid(x) { unsafe { doUnsafe(x); } } }");
        let foo = f.function("k::foo").unwrap();
        assert!(foo.contains_unsafe_block && !foo.declared_unsafe);
        assert_eq!(foo.call_sites.len(), 1);
        let site = &foo.call_sites[0];
        assert!(site.callee_is_unsafe && site.inside_unsafe_block);
        assert_eq!(site.arg_flows[0].source, ArgSource::CallerParam);
        assert!(site.arg_flows[0].validated_by_branch_or_assert);
    }

    #[test]
    fn constructors_and_literal_scope() {
        let f = one("pub struct P(u64);
             impl P {
                 pub unsafe fn raw(a: u64) -> P { P(a) }
                 pub fn new(a: u64) -> Option<Self> { Some(unsafe { P::raw(a) }) }
                 pub fn get(&self) -> u64 { self.0 }
                 fn helper() -> u8 { 0 }
             }");
        let s = f.struct_fact("k::P").unwrap();
        assert_eq!(s.constructor_ids, vec!["k::P::new", "k::P::raw"]);
        assert_eq!(s.literal_constructible_from, Visibility::ModulePrivate);
        let new = f.function("k::P::new").unwrap();
        assert_eq!(
            new.call_sites[0].callee_ref,
            CalleeRef::DirectPath {
                path: "k::P::raw".into()
            }
        );
    }

    #[test]
    fn raw_deref_and_static_mut_are_pseudo_callees() {
        let f = one("static mut OFF: u64 = 0;
             fn a(p: *mut u8) -> u8 { unsafe { *p } }
             fn b() -> u64 { unsafe { OFF } }");
        let a = f.function("k::a").unwrap();
        assert_eq!(
            a.call_sites[0].callee_ref,
            CalleeRef::DirectPath {
                path: RAW_DEREF.into()
            }
        );
        assert_eq!(a.call_sites[0].arg_flows[0].source, ArgSource::CallerParam);
        let b = f.function("k::b").unwrap();
        assert_eq!(
            b.call_sites[0].callee_ref,
            CalleeRef::DirectPath {
                path: "<static mut k::OFF>".into()
            }
        );
    }

    #[test]
    fn fn_pointer_field_call() {
        let f = one("pub struct L<T: 'static> { inner: unsafe fn() -> T }
             impl<T: 'static> L<T> {
                 pub const unsafe fn new(inner: unsafe fn() -> T) -> L<T> { L { inner } }
                 pub fn with(&'static self) { unsafe { let _v = (self.inner)(); } }
             }");
        let w = f.function("k::L::with").unwrap();
        assert_eq!(
            w.call_sites[0].callee_ref,
            CalleeRef::FunctionParam {
                param: "self.inner".into(),
                signature: "unsafe fn() -> _".into()
            }
        );
    }

    #[test]
    fn trait_generic_call_and_ids() {
        let f = one(
            "pub trait Dev { unsafe fn poke(&self, v: u8); fn safe(&self) {} }
             pub struct D;
             impl Dev for D { unsafe fn poke(&self, _v: u8) {} }
             pub fn drive<T: Dev>(d: &T) { unsafe { d.poke(1) } }",
        );
        let drive = f.function("k::drive").unwrap();
        assert_eq!(
            drive.call_sites[0].callee_ref,
            CalleeRef::TraitGenericMethod {
                trait_path: "k::Dev".into(),
                method: "poke".into()
            }
        );
        assert_eq!(drive.call_sites[0].arg_flows.len(), 2);
        let t = f.trait_fact("k::Dev").unwrap();
        assert_eq!(t.provided_methods, vec!["k::Dev::safe"]);
        assert_eq!(t.impls[0].methods["k::Dev::poke"], "<k::D as k::Dev>::poke");
        assert_eq!(
            f.function("<k::D as k::Dev>::poke").unwrap().kind,
            FunctionKind::DynamicMethod
        );
    }

    #[test]
    fn assert_validates_and_fields_fixed_by_constructor() {
        let f = one("pub struct X { r: &'static mut [u32] }
             impl X {
                 fn read(&self, off: u32) -> u32 {
                     assert!(off % 4 == 0);
                     let i = off as usize / 4;
                     unsafe { core::ptr::read_volatile(&self.r[i]) }
                 }
             }");
        let r = f.function("k::X::read").unwrap();
        let site = &r.call_sites[0];
        assert_eq!(
            site.callee_ref,
            CalleeRef::DirectPath {
                path: "core::ptr::read_volatile".into()
            }
        );
        assert!(site.callee_is_unsafe);
        assert_eq!(site.arg_flows[0].source, ArgSource::CallerParam);
        assert!(site.arg_flows[0].validated_by_branch_or_assert);
    }

    #[test]
    fn cfg_test_items_are_skipped() {
        let f = one("#[cfg(test)] mod tests { fn t() {} } #[cfg(test)] fn u() {}");
        assert!(f.functions.is_empty());
    }

    #[test]
    fn duplicate_ids_are_disambiguated() {
        let f = one("pub struct A; impl A { fn f() {} } impl A { fn f(&self) {} }");
        assert!(f.function("k::A::f").is_some());
        assert!(f.function("k::A::f#2").is_some());
    }
}
