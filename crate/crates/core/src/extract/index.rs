//! Crate-wide lookup tables used while analyzing function bodies.

use std::collections::{BTreeMap, HashMap, HashSet};

use super::collect::{candidates, join, Collected, TypeNames, UseScope};
use super::types::render_type;
use crate::facts::{FunctionFact, FunctionKind};

pub(crate) struct FnSummary {
    pub declared_unsafe: bool,
    pub kind: FunctionKind,
    pub is_constructor: bool,
    pub owner: Option<String>,
}

/// What a value path in a body refers to.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Resolved {
    Fn(String),
    TraitMethod { trait_path: String, method: String },
    Static { path: String, is_mut: bool },
    Type(String),
    Unknown(String),
}

/// Static type of a receiver or local, as far as the syntax reveals it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) enum RecvTy {
    Named(String),
    /// Generic parameter, `impl Trait` or `dyn Trait`, with its trait bounds.
    Generic(Vec<String>),
    RawPtr(String),
    FnPtr(String),
    Other(String),
}

pub(crate) struct Index<'a> {
    pub crate_name: String,
    pub names: TypeNames,
    pub uses: &'a HashMap<String, UseScope>,
    pub statics: &'a BTreeMap<String, bool>,
    pub fns: HashMap<String, FnSummary>,
    fn_by_short: HashMap<String, Vec<String>>,
    /// (type path, method name) -> ids, inherent methods first
    methods: HashMap<(String, String), Vec<String>>,
    dyn_by_name: HashMap<String, Vec<String>>,
    trait_decls: HashMap<(String, String), String>,
    trait_provided: HashSet<String>,
    type_traits: HashMap<String, Vec<String>>,
    pub fields: HashMap<String, HashMap<String, &'a syn::Type>>,
    pub mutated_fields: HashMap<String, HashSet<String>>,
    static_by_short: HashMap<String, Vec<String>>,
}

impl<'a> Index<'a> {
    pub fn new(
        crate_name: &str,
        collected: &'a Collected<'a>,
        names: TypeNames,
        functions: &[FunctionFact],
        trait_impls: &[(String, String, String, String)],
        provided: &HashSet<String>,
    ) -> Self {
        let mut fns = HashMap::new();
        let mut fn_by_short: HashMap<String, Vec<String>> = HashMap::new();
        let mut methods: HashMap<(String, String), Vec<String>> = HashMap::new();
        let mut dyn_by_name: HashMap<String, Vec<String>> = HashMap::new();
        let mut trait_decls = HashMap::new();

        for f in functions {
            fns.insert(
                f.id.clone(),
                FnSummary {
                    declared_unsafe: f.declared_unsafe,
                    kind: f.kind,
                    is_constructor: f.is_constructor,
                    owner: f.owner.clone(),
                },
            );
            if f.kind == FunctionKind::FreeFunction {
                fn_by_short
                    .entry(f.name.clone())
                    .or_default()
                    .push(f.id.clone());
            }
            if f.kind == FunctionKind::DynamicMethod {
                dyn_by_name
                    .entry(f.name.clone())
                    .or_default()
                    .push(f.id.clone());
            }
        }
        // inherent methods keyed by owner; trait decls keyed by trait
        for f in functions {
            let Some(owner) = &f.owner else { continue };
            if names.traits.contains(owner) && f.id.starts_with(owner.as_str()) {
                trait_decls.insert((owner.clone(), f.name.clone()), f.id.clone());
            } else if !f.id.starts_with('<') {
                methods
                    .entry((owner.clone(), f.name.clone()))
                    .or_default()
                    .push(f.id.clone());
            }
        }
        let mut type_traits: HashMap<String, Vec<String>> = HashMap::new();
        for (ty, tr, name, id) in trait_impls {
            methods
                .entry((ty.clone(), name.clone()))
                .or_default()
                .push(id.clone());
            let list = type_traits.entry(ty.clone()).or_default();
            if !list.contains(tr) {
                list.push(tr.clone());
            }
        }
        for v in dyn_by_name.values_mut().chain(fn_by_short.values_mut()) {
            v.sort();
        }

        let mut fields = HashMap::new();
        for t in &collected.types {
            fields.insert(
                t.path.clone(),
                t.fields.iter().map(|(n, ty, _)| (n.clone(), *ty)).collect(),
            );
        }
        let mut static_by_short: HashMap<String, Vec<String>> = HashMap::new();
        for p in collected.statics.keys() {
            static_by_short
                .entry(crate::facts::last_segment(p).to_string())
                .or_default()
                .push(p.clone());
        }

        Index {
            crate_name: crate_name.to_string(),
            names,
            uses: &collected.uses,
            statics: &collected.statics,
            fns,
            fn_by_short,
            methods,
            dyn_by_name,
            trait_decls,
            trait_provided: provided.clone(),
            type_traits,
            fields,
            mutated_fields: HashMap::new(),
            static_by_short,
        }
    }

    pub fn trait_decl(&self, trait_path: &str, method: &str) -> Option<&String> {
        self.trait_decls
            .get(&(trait_path.to_string(), method.to_string()))
    }

    /// Method `name` callable on a value of crate type `type_path`.
    pub fn method_of(&self, type_path: &str, name: &str) -> Option<String> {
        if let Some(ids) = self.methods.get(&(type_path.to_string(), name.to_string())) {
            return ids.first().cloned();
        }
        for tr in self.type_traits.get(type_path).into_iter().flatten() {
            if let Some(decl) = self.trait_decl(tr, name) {
                if self.trait_provided.contains(decl) {
                    return Some(decl.clone());
                }
            }
        }
        None
    }

    pub fn unique_dyn_method(&self, name: &str) -> Option<&String> {
        match self.dyn_by_name.get(name) {
            Some(v) if v.len() == 1 => v.first(),
            _ => None,
        }
    }

    pub fn resolve_value(
        &self,
        segs: &[String],
        module: &[String],
        self_type: Option<&str>,
    ) -> Resolved {
        let segs: Vec<String> = match (segs.first().map(String::as_str), self_type) {
            (Some("Self"), Some(st)) => st
                .split("::")
                .map(str::to_string)
                .chain(segs[1..].iter().cloned())
                .collect(),
            _ => segs.to_vec(),
        };
        let cands = candidates(&segs, module, self.uses, &self.crate_name);
        for cand in &cands {
            if let Some(r) = self.lookup_absolute(cand) {
                return r;
            }
        }
        // fall back to unique short names
        if segs.len() == 1 {
            if let Some(v) = self.fn_by_short.get(&segs[0]) {
                if v.len() == 1 {
                    return Resolved::Fn(v[0].clone());
                }
            }
            if let Some(v) = self.static_by_short.get(&segs[0]) {
                if v.len() == 1 {
                    return Resolved::Static {
                        path: v[0].clone(),
                        is_mut: self.statics[&v[0]],
                    };
                }
            }
        } else if let Some(tp) =
            self.names
                .resolve(&segs[..segs.len() - 1], module, self.uses, &self.crate_name)
        {
            let method = &segs[segs.len() - 1];
            if self.names.types.contains(&tp) {
                if let Some(id) = self.method_of(&tp, method) {
                    return Resolved::Fn(id);
                }
                return Resolved::Unknown(format!("{tp}::{method}"));
            }
            if self.trait_decl(&tp, method).is_some() {
                return Resolved::TraitMethod {
                    trait_path: tp,
                    method: method.clone(),
                };
            }
        }
        // external: report the alias-expanded path when an import matched
        let written = match cands.first() {
            Some(c)
                if c.len() >= segs.len()
                    && c[c.len() - segs.len() + 1..] == segs[1..]
                    && c.first() != module.first() =>
            {
                join(c)
            }
            _ => join(&segs),
        };
        Resolved::Unknown(written)
    }

    fn lookup_absolute(&self, cand: &[String]) -> Option<Resolved> {
        let p = join(cand);
        if self.fns.contains_key(&p) {
            return Some(Resolved::Fn(p));
        }
        if let Some(is_mut) = self.statics.get(&p) {
            return Some(Resolved::Static {
                path: p,
                is_mut: *is_mut,
            });
        }
        if self.names.types.contains(&p) {
            return Some(Resolved::Type(p));
        }
        if cand.len() >= 2 {
            let prefix = join(&cand[..cand.len() - 1]);
            let last = &cand[cand.len() - 1];
            if self.names.types.contains(&prefix) {
                return Some(match self.method_of(&prefix, last) {
                    Some(id) => Resolved::Fn(id),
                    None if last.starts_with(char::is_uppercase) => Resolved::Type(prefix),
                    None => Resolved::Unknown(p),
                });
            }
            if self.names.traits.contains(&prefix) && self.trait_decl(&prefix, last).is_some() {
                return Some(Resolved::TraitMethod {
                    trait_path: prefix,
                    method: last.clone(),
                });
            }
        }
        None
    }

    /// Classify a written type in the context of one function.
    pub fn classify(&self, ty: &syn::Type, ctx: &TypeCtx<'_>) -> RecvTy {
        match ty {
            syn::Type::Reference(r) => self.classify(&r.elem, ctx),
            syn::Type::Paren(p) => self.classify(&p.elem, ctx),
            syn::Type::Group(g) => self.classify(&g.elem, ctx),
            syn::Type::Ptr(_) => RecvTy::RawPtr(render_type(ty, ctx.generic_names)),
            syn::Type::BareFn(_) => {
                RecvTy::FnPtr(super::body::bare_fn_signature(ty, ctx.generic_names))
            }
            syn::Type::ImplTrait(it) => RecvTy::Generic(self.bound_traits(it.bounds.iter(), ctx)),
            syn::Type::TraitObject(to) => RecvTy::Generic(self.bound_traits(to.bounds.iter(), ctx)),
            syn::Type::Path(tp) if tp.qself.is_none() => {
                let segs = &tp.path.segments;
                if segs.len() == 1 {
                    let name = segs[0].ident.to_string();
                    if name == "Self" {
                        return match ctx.self_type {
                            Some(st) if self.names.traits.contains(st) => {
                                RecvTy::Generic(vec![st.to_string()])
                            }
                            Some(st) => RecvTy::Named(st.to_string()),
                            None => RecvTy::Other("Self".into()),
                        };
                    }
                    if let Some(bounds) = ctx.generic_bounds.get(&name) {
                        return RecvTy::Generic(bounds.clone());
                    }
                    if matches!(
                        name.as_str(),
                        "Box" | "Rc" | "Arc" | "RefMut" | "Ref" | "ManuallyDrop" | "Pin"
                    ) {
                        if let syn::PathArguments::AngleBracketed(a) = &segs[0].arguments {
                            if let Some(syn::GenericArgument::Type(inner)) = a.args.first() {
                                return self.classify(inner, ctx);
                            }
                        }
                    }
                }
                match self
                    .names
                    .resolve_path(&tp.path, ctx.module, self.uses, &self.crate_name)
                {
                    Some(p) if self.names.types.contains(&p) => RecvTy::Named(p),
                    _ => RecvTy::Other(render_type(ty, ctx.generic_names)),
                }
            }
            _ => RecvTy::Other(render_type(ty, ctx.generic_names)),
        }
    }

    pub fn bound_traits<'b>(
        &self,
        bounds: impl Iterator<Item = &'b syn::TypeParamBound>,
        ctx: &TypeCtx<'_>,
    ) -> Vec<String> {
        bounds
            .filter_map(|b| match b {
                syn::TypeParamBound::Trait(t) => Some(
                    self.names
                        .resolve_path(&t.path, ctx.module, self.uses, &self.crate_name)
                        .filter(|p| self.names.traits.contains(p))
                        .unwrap_or_else(|| {
                            t.path
                                .segments
                                .iter()
                                .map(|s| s.ident.to_string())
                                .collect::<Vec<_>>()
                                .join("::")
                        }),
                ),
                _ => None,
            })
            .collect()
    }
}

/// Per-function typing context.
pub(crate) struct TypeCtx<'c> {
    pub module: &'c [String],
    pub self_type: Option<&'c str>,
    pub generic_names: &'c HashSet<String>,
    pub generic_bounds: &'c HashMap<String, Vec<String>>,
}
