//! First pass: gather items, `use` aliases and statics from every parsed file.

use std::collections::{BTreeMap, HashMap, HashSet};

use syn::{Attribute, ImplItem, Item, TraitItem, UseTree};

use crate::facts::{FunctionKind, Visibility};

pub(crate) struct ParsedFile {
    pub rel_path: String,
    pub module: Vec<String>,
    pub ast: syn::File,
}

pub(crate) struct RawType<'a> {
    pub path: String,
    pub generics: HashSet<String>,
    pub vis: Visibility,
    pub fields: Vec<(String, &'a syn::Type, Visibility)>,
}

pub(crate) struct RawTrait<'a> {
    pub path: String,
    pub module: Vec<String>,
    pub vis: Visibility,
    pub item: &'a syn::ItemTrait,
    pub file: &'a str,
}

pub(crate) struct RawImpl<'a> {
    pub module: Vec<String>,
    pub item: &'a syn::ItemImpl,
    pub file: &'a str,
}

pub(crate) struct RawFn<'a> {
    pub module: Vec<String>,
    pub item: &'a syn::ItemFn,
    pub file: &'a str,
}

#[derive(Default)]
pub(crate) struct UseScope {
    pub aliases: HashMap<String, Vec<String>>,
    pub globs: Vec<Vec<String>>,
}

#[derive(Default)]
pub(crate) struct Collected<'a> {
    pub types: Vec<RawType<'a>>,
    pub traits: Vec<RawTrait<'a>>,
    pub impls: Vec<RawImpl<'a>>,
    pub fns: Vec<RawFn<'a>>,
    /// static / const path -> is `static mut`
    pub statics: BTreeMap<String, bool>,
    pub uses: HashMap<String, UseScope>,
}

/// A function-like item ready for body analysis.
pub(crate) struct PendingFn<'a> {
    pub id: String,
    pub name: String,
    pub module: Vec<String>,
    pub owner: Option<String>,
    /// What `Self` refers to: the impl self type or, inside a trait, the trait.
    pub self_type: Option<String>,
    pub trait_path: Option<String>,
    pub kind: FunctionKind,
    pub sig: &'a syn::Signature,
    pub body: Option<&'a syn::Block>,
    pub vis: Visibility,
    pub attrs: &'a [Attribute],
    pub generics: Vec<&'a syn::Generics>,
    pub file: &'a str,
}

pub(crate) fn convert_vis(vis: &syn::Visibility) -> Visibility {
    match vis {
        syn::Visibility::Public(_) => Visibility::Public,
        syn::Visibility::Restricted(r) if r.path.is_ident("self") => Visibility::ModulePrivate,
        syn::Visibility::Restricted(_) => Visibility::CrateVisible,
        syn::Visibility::Inherited => Visibility::ModulePrivate,
    }
}

pub(crate) fn is_cfg_test(attrs: &[Attribute]) -> bool {
    attrs.iter().any(|a| {
        a.path().is_ident("cfg")
            && a.parse_args::<syn::Meta>()
                .map(|m| m.path().is_ident("test"))
                .unwrap_or(false)
    })
}

pub(crate) fn doc_text(attrs: &[Attribute]) -> Option<String> {
    let mut lines = Vec::new();
    for a in attrs {
        if !a.path().is_ident("doc") {
            continue;
        }
        if let syn::Meta::NameValue(nv) = &a.meta {
            if let syn::Expr::Lit(syn::ExprLit {
                lit: syn::Lit::Str(s),
                ..
            }) = &nv.value
            {
                let v = s.value();
                for line in v.lines() {
                    lines.push(line.strip_prefix(' ').unwrap_or(line).to_string());
                }
                if v.is_empty() {
                    lines.push(String::new());
                }
            }
        }
    }
    (!lines.is_empty()).then(|| lines.join("\n"))
}

pub(crate) fn join(path: &[String]) -> String {
    path.join("::")
}

impl<'a> Collected<'a> {
    pub fn collect(files: &'a [ParsedFile], crate_name: &str) -> Self {
        let mut c = Collected::default();
        for f in files {
            c.walk_items(&f.ast.items, &f.module, crate_name, &f.rel_path);
        }
        c
    }

    fn walk_items(
        &mut self,
        items: &'a [Item],
        module: &[String],
        crate_name: &str,
        file: &'a str,
    ) {
        let mod_key = join(module);
        for item in items {
            match item {
                Item::Mod(m) => {
                    if is_cfg_test(&m.attrs) {
                        continue;
                    }
                    if let Some((_, inner)) = &m.content {
                        let mut sub = module.to_vec();
                        sub.push(m.ident.to_string());
                        self.walk_items(inner, &sub, crate_name, file);
                    }
                }
                Item::Fn(f) if !is_cfg_test(&f.attrs) => {
                    self.fns.push(RawFn {
                        module: module.to_vec(),
                        item: f,
                        file,
                    });
                }
                Item::Struct(s) => {
                    let fields = s
                        .fields
                        .iter()
                        .enumerate()
                        .map(|(i, fld)| {
                            let name = fld
                                .ident
                                .as_ref()
                                .map(|i| i.to_string())
                                .unwrap_or_else(|| i.to_string());
                            (name, &fld.ty, convert_vis(&fld.vis))
                        })
                        .collect();
                    self.types.push(RawType {
                        path: format!("{mod_key}::{}", s.ident),
                        generics: super::types::type_param_names(&s.generics).collect(),
                        vis: convert_vis(&s.vis),
                        fields,
                    });
                }
                Item::Union(u) => {
                    let fields = u
                        .fields
                        .named
                        .iter()
                        .map(|fld| {
                            (
                                fld.ident.as_ref().unwrap().to_string(),
                                &fld.ty,
                                convert_vis(&fld.vis),
                            )
                        })
                        .collect();
                    self.types.push(RawType {
                        path: format!("{mod_key}::{}", u.ident),
                        generics: super::types::type_param_names(&u.generics).collect(),
                        vis: convert_vis(&u.vis),
                        fields,
                    });
                }
                Item::Enum(e) => {
                    self.types.push(RawType {
                        path: format!("{mod_key}::{}", e.ident),
                        generics: HashSet::new(),
                        vis: convert_vis(&e.vis),
                        fields: Vec::new(),
                    });
                }
                Item::Trait(t) => {
                    self.traits.push(RawTrait {
                        path: format!("{mod_key}::{}", t.ident),
                        module: module.to_vec(),
                        vis: convert_vis(&t.vis),
                        item: t,
                        file,
                    });
                }
                Item::Impl(i) if !is_cfg_test(&i.attrs) => {
                    self.impls.push(RawImpl {
                        module: module.to_vec(),
                        item: i,
                        file,
                    });
                }
                Item::Static(s) => {
                    let is_mut = matches!(s.mutability, syn::StaticMutability::Mut(_));
                    self.statics
                        .insert(format!("{mod_key}::{}", s.ident), is_mut);
                }
                Item::Const(k) => {
                    self.statics
                        .insert(format!("{mod_key}::{}", k.ident), false);
                }
                Item::Use(u) => {
                    let scope = self.uses.entry(mod_key.clone()).or_default();
                    walk_use(&u.tree, Vec::new(), module, crate_name, scope);
                }
                _ => {}
            }
        }
    }
}

fn normalize_use_prefix(path: Vec<String>, module: &[String], crate_name: &str) -> Vec<String> {
    match path.first().map(String::as_str) {
        Some("crate") => {
            let mut out = vec![crate_name.to_string()];
            out.extend(path.into_iter().skip(1));
            out
        }
        Some("self") => {
            let mut out = module.to_vec();
            out.extend(path.into_iter().skip(1));
            out
        }
        Some("super") => {
            let mut base = module.to_vec();
            let mut rest = path.into_iter().peekable();
            while rest.peek().map(String::as_str) == Some("super") {
                rest.next();
                if base.len() > 1 {
                    base.pop();
                }
            }
            base.extend(rest);
            base
        }
        _ => path,
    }
}

fn walk_use(
    tree: &UseTree,
    prefix: Vec<String>,
    module: &[String],
    crate_name: &str,
    scope: &mut UseScope,
) {
    match tree {
        UseTree::Path(p) => {
            let mut next = prefix;
            next.push(p.ident.to_string());
            walk_use(&p.tree, next, module, crate_name, scope);
        }
        UseTree::Name(n) => {
            let name = n.ident.to_string();
            if name == "self" {
                if let Some(alias) = prefix.last().cloned() {
                    scope
                        .aliases
                        .insert(alias, normalize_use_prefix(prefix, module, crate_name));
                }
            } else {
                let mut full = prefix;
                full.push(name.clone());
                scope
                    .aliases
                    .insert(name, normalize_use_prefix(full, module, crate_name));
            }
        }
        UseTree::Rename(r) => {
            let mut full = prefix;
            full.push(r.ident.to_string());
            scope.aliases.insert(
                r.rename.to_string(),
                normalize_use_prefix(full, module, crate_name),
            );
        }
        UseTree::Glob(_) => scope
            .globs
            .push(normalize_use_prefix(prefix, module, crate_name)),
        UseTree::Group(g) => {
            for t in &g.items {
                walk_use(t, prefix.clone(), module, crate_name, scope);
            }
        }
    }
}

/// Type-name lookup used while resolving impl self types and trait paths.
pub(crate) struct TypeNames {
    pub types: HashSet<String>,
    pub traits: HashSet<String>,
    by_short: HashMap<String, Vec<String>>,
}

impl TypeNames {
    pub fn new(c: &Collected<'_>) -> Self {
        let types: HashSet<String> = c.types.iter().map(|t| t.path.clone()).collect();
        let traits: HashSet<String> = c.traits.iter().map(|t| t.path.clone()).collect();
        let mut by_short: HashMap<String, Vec<String>> = HashMap::new();
        for p in types.iter().chain(traits.iter()) {
            by_short
                .entry(crate::facts::last_segment(p).to_string())
                .or_default()
                .push(p.clone());
        }
        for v in by_short.values_mut() {
            v.sort();
        }
        TypeNames {
            types,
            traits,
            by_short,
        }
    }

    pub fn is_known(&self, path: &str) -> bool {
        self.types.contains(path) || self.traits.contains(path)
    }

    /// Resolve a written path (`Foo`, `crate::a::Foo`, an alias) seen in `module`.
    pub fn resolve(
        &self,
        segs: &[String],
        module: &[String],
        uses: &HashMap<String, UseScope>,
        crate_name: &str,
    ) -> Option<String> {
        for cand in candidates(segs, module, uses, crate_name) {
            let p = join(&cand);
            if self.is_known(&p) {
                return Some(p);
            }
        }
        let last = segs.last()?;
        match self.by_short.get(last) {
            Some(v) if v.len() == 1 => Some(v[0].clone()),
            Some(v) => {
                // prefer a candidate in the same module
                let module_prefix = join(module);
                v.iter()
                    .find(|p| p.rsplit_once("::").map(|(m, _)| m) == Some(module_prefix.as_str()))
                    .cloned()
            }
            None => None,
        }
    }

    pub fn resolve_path(
        &self,
        path: &syn::Path,
        module: &[String],
        uses: &HashMap<String, UseScope>,
        crate_name: &str,
    ) -> Option<String> {
        let segs: Vec<String> = path.segments.iter().map(|s| s.ident.to_string()).collect();
        self.resolve(&segs, module, uses, crate_name)
    }
}

/// Absolute candidate paths for a written path, in lookup order.
pub(crate) fn candidates(
    segs: &[String],
    module: &[String],
    uses: &HashMap<String, UseScope>,
    crate_name: &str,
) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let Some(first) = segs.first() else {
        return out;
    };
    match first.as_str() {
        "crate" | "self" | "super" => {
            out.push(normalize_use_prefix(segs.to_vec(), module, crate_name));
            return out;
        }
        _ => {}
    }
    // aliases visible from this module or any enclosing one
    for depth in (1..=module.len()).rev() {
        if let Some(scope) = uses.get(&join(&module[..depth])) {
            if let Some(full) = scope.aliases.get(first) {
                let mut c = full.clone();
                c.extend(segs[1..].iter().cloned());
                out.push(c);
            }
        }
    }
    let mut rel = module.to_vec();
    rel.extend(segs.iter().cloned());
    out.push(rel);
    if first == crate_name {
        out.push(segs.to_vec());
    }
    for depth in (1..=module.len()).rev() {
        if let Some(scope) = uses.get(&join(&module[..depth])) {
            for g in &scope.globs {
                let mut c = g.clone();
                c.extend(segs.iter().cloned());
                out.push(c);
            }
        }
    }
    let mut root = vec![crate_name.to_string()];
    root.extend(segs.iter().cloned());
    out.push(root);
    out
}

pub(crate) fn has_receiver(sig: &syn::Signature) -> bool {
    matches!(sig.inputs.first(), Some(syn::FnArg::Receiver(_)))
}

impl<'a> Collected<'a> {
    /// Turn raw items into function records with resolved owners and ids.
    pub fn pending_fns(&self, names: &TypeNames, crate_name: &str) -> Vec<PendingFn<'a>> {
        let mut out: Vec<PendingFn<'a>> = Vec::new();
        for f in &self.fns {
            out.push(PendingFn {
                id: format!("{}::{}", join(&f.module), f.item.sig.ident),
                name: f.item.sig.ident.to_string(),
                module: f.module.clone(),
                owner: None,
                self_type: None,
                trait_path: None,
                kind: FunctionKind::FreeFunction,
                sig: &f.item.sig,
                body: Some(&f.item.block),
                vis: convert_vis(&f.item.vis),
                attrs: &f.item.attrs,
                generics: vec![&f.item.sig.generics],
                file: f.file,
            });
        }
        for t in &self.traits {
            for ti in &t.item.items {
                let TraitItem::Fn(m) = ti else { continue };
                let kind = if has_receiver(&m.sig) {
                    FunctionKind::DynamicMethod
                } else {
                    FunctionKind::TraitMethodDecl
                };
                out.push(PendingFn {
                    id: format!("{}::{}", t.path, m.sig.ident),
                    name: m.sig.ident.to_string(),
                    module: t.module.clone(),
                    owner: Some(t.path.clone()),
                    self_type: Some(t.path.clone()),
                    trait_path: Some(t.path.clone()),
                    kind,
                    sig: &m.sig,
                    body: m.default.as_ref(),
                    vis: t.vis,
                    attrs: &m.attrs,
                    generics: vec![&t.item.generics, &m.sig.generics],
                    file: t.file,
                });
            }
        }
        for imp in &self.impls {
            let item = imp.item;
            let self_ty_path = match &*item.self_ty {
                syn::Type::Path(tp) => {
                    names.resolve_path(&tp.path, &imp.module, &self.uses, crate_name)
                }
                _ => None,
            };
            let self_ty_text = super::types::render_tokens(
                quote::ToTokens::to_token_stream(&*item.self_ty),
                &HashSet::new(),
            );
            let trait_info = item.trait_.as_ref().map(|(_, path, _)| {
                let resolved = names
                    .resolve_path(path, &imp.module, &self.uses, crate_name)
                    .filter(|p| names.traits.contains(p));
                let text = path
                    .segments
                    .iter()
                    .map(|s| s.ident.to_string())
                    .collect::<Vec<_>>()
                    .join("::");
                (resolved, text)
            });
            let owner_type = self_ty_path.clone().filter(|p| names.types.contains(p));
            for ii in &item.items {
                let ImplItem::Fn(m) = ii else { continue };
                if is_cfg_test(&m.attrs) {
                    continue;
                }
                let receiver = has_receiver(&m.sig);
                let name = m.sig.ident.to_string();
                let (id, owner, kind, trait_path, vis) = match &trait_info {
                    None => {
                        let kind = if receiver {
                            FunctionKind::DynamicMethod
                        } else {
                            FunctionKind::StaticMethod
                        };
                        let id = match &owner_type {
                            Some(o) => format!("{o}::{name}"),
                            None => format!("{}::{self_ty_text}::{name}", join(&imp.module)),
                        };
                        (id, owner_type.clone(), kind, None, convert_vis(&m.vis))
                    }
                    Some((resolved, text)) => {
                        let kind = if receiver {
                            FunctionKind::DynamicMethod
                        } else {
                            FunctionKind::TraitMethodImpl
                        };
                        let ty = owner_type.clone().unwrap_or_else(|| self_ty_text.clone());
                        let tr = resolved.clone().unwrap_or_else(|| text.clone());
                        let id = format!("<{ty} as {tr}>::{name}");
                        let owner = owner_type.clone().or_else(|| resolved.clone());
                        let vis = resolved
                            .as_ref()
                            .and_then(|p| self.traits.iter().find(|t| &t.path == p))
                            .map(|t| t.vis)
                            .unwrap_or(Visibility::Public);
                        (id, owner, kind, resolved.clone(), vis)
                    }
                };
                out.push(PendingFn {
                    id,
                    name,
                    module: imp.module.clone(),
                    owner,
                    self_type: owner_type.clone(),
                    trait_path,
                    kind,
                    sig: &m.sig,
                    body: Some(&m.block),
                    vis,
                    attrs: &m.attrs,
                    generics: vec![&item.generics, &m.sig.generics],
                    file: imp.file,
                });
            }
        }

        // disambiguate repeated ids in source order
        let mut counts: HashMap<String, usize> = HashMap::new();
        for f in &mut out {
            let n = counts.entry(f.id.clone()).or_insert(0);
            *n += 1;
            if *n > 1 {
                f.id = format!("{}#{}", f.id, n);
            }
        }
        out
    }
}
