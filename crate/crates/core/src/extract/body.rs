//! Second pass: walk one function body, recording unsafe-relevant call sites
//! together with the provenance of every argument.

use std::collections::{BTreeSet, HashMap, HashSet};

use syn::punctuated::Punctuated;
use syn::visit::Visit;
use syn::{Block, Expr, Pat, Stmt, Token};

use super::index::{Index, RecvTy, Resolved, TypeCtx};
use super::known::{
    is_known_safe_function, is_known_safe_method, ASM_MACROS, ASSERT_MACROS, DIVERGING_MACROS,
    EXPR_MACROS,
};
use super::types::render_type;
use crate::facts::{render_signature, ArgFlow, ArgSource, CallSiteFact, CalleeRef};

pub const RAW_DEREF: &str = "<raw pointer deref>";
pub const INLINE_ASM: &str = "<inline asm>";

pub fn static_mut_pseudo(path: &str) -> String {
    format!("<static mut {path}>")
}

const RAW_PTR_UNSAFE_METHODS: &[&str] = &[
    "add",
    "as_mut",
    "as_ref",
    "copy_from",
    "copy_from_nonoverlapping",
    "copy_to",
    "copy_to_nonoverlapping",
    "drop_in_place",
    "offset",
    "offset_from",
    "read",
    "read_unaligned",
    "read_volatile",
    "replace",
    "sub",
    "swap",
    "write",
    "write_bytes",
    "write_unaligned",
    "write_volatile",
];

const RAW_PTR_PRODUCERS: &[&str] = &["as_ptr", "as_mut_ptr"];
const RAW_PTR_PRESERVING: &[&str] = &[
    "add",
    "sub",
    "offset",
    "cast",
    "cast_mut",
    "cast_const",
    "wrapping_add",
    "wrapping_sub",
    "wrapping_offset",
    "byte_add",
    "byte_sub",
];

pub(crate) fn bare_fn_signature(ty: &syn::Type, generics: &HashSet<String>) -> String {
    match ty {
        syn::Type::BareFn(f) => {
            let params: Vec<String> = f
                .inputs
                .iter()
                .map(|a| render_type(&a.ty, generics))
                .collect();
            let ret = super::types::render_return(&f.output, generics);
            render_signature(
                f.unsafety.is_some(),
                params.iter().map(String::as_str),
                &ret,
            )
        }
        syn::Type::Paren(p) => bare_fn_signature(&p.elem, generics),
        syn::Type::Group(g) => bare_fn_signature(&g.elem, generics),
        other => render_type(other, generics),
    }
}

/// Where a value ultimately comes from.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Root {
    Global,
    Literal,
    FixedFn,
    Param,
    ReceiverField(String),
    Receiver,
    Opaque,
}

#[derive(Default)]
struct Scan {
    roots: BTreeSet<Root>,
    names: BTreeSet<String>,
}

struct Local {
    roots: BTreeSet<Root>,
    names: BTreeSet<String>,
    ty: RecvTy,
}

#[derive(Default)]
struct Scope {
    locals: HashMap<String, Local>,
    guards: BTreeSet<String>,
}

pub(crate) struct FnInput<'c> {
    pub caller_id: &'c str,
    pub owner: Option<&'c str>,
    pub declared_unsafe: bool,
    pub params: Vec<(String, Option<&'c syn::Type>)>,
    pub file: &'c str,
}

#[derive(Default)]
pub(crate) struct BodyFacts {
    pub call_sites: Vec<CallSiteFact>,
    pub contains_unsafe_block: bool,
    pub warnings: Vec<String>,
}

pub(crate) fn analyze_body(
    idx: &Index<'_>,
    ctx: &TypeCtx<'_>,
    input: &FnInput<'_>,
    body: &Block,
) -> BodyFacts {
    let mut v = BodyVisitor {
        idx,
        ctx,
        input,
        params: input.params.iter().map(|(n, t)| (n.clone(), *t)).collect(),
        scopes: vec![Scope::default()],
        unsafe_depth: 0,
        out: BodyFacts::default(),
    };
    v.block(body);
    v.out
}

struct BodyVisitor<'v, 'i, 'a> {
    idx: &'v Index<'a>,
    ctx: &'v TypeCtx<'i>,
    input: &'v FnInput<'i>,
    params: HashMap<String, Option<&'i syn::Type>>,
    scopes: Vec<Scope>,
    unsafe_depth: usize,
    out: BodyFacts,
}

fn ident_of_path(e: &Expr) -> Option<String> {
    match e {
        Expr::Path(p) if p.qself.is_none() && p.path.segments.len() == 1 => {
            Some(p.path.segments[0].ident.to_string())
        }
        _ => None,
    }
}

fn path_segments(p: &syn::Path) -> Vec<String> {
    p.segments.iter().map(|s| s.ident.to_string()).collect()
}

/// `self.f` (possibly nested or parenthesized) -> `f`
fn self_field(e: &Expr) -> Option<String> {
    match e {
        Expr::Field(f) => {
            if ident_of_path(&f.base).as_deref() == Some("self") {
                match &f.member {
                    syn::Member::Named(n) => Some(n.to_string()),
                    syn::Member::Unnamed(i) => Some(i.index.to_string()),
                }
            } else {
                self_field(&f.base)
            }
        }
        Expr::Paren(p) => self_field(&p.expr),
        Expr::Index(i) => self_field(&i.expr),
        _ => None,
    }
}

fn macro_name(m: &syn::Macro) -> String {
    m.path
        .segments
        .last()
        .map(|s| s.ident.to_string())
        .unwrap_or_default()
}

fn parse_macro_exprs(m: &syn::Macro) -> Option<Vec<Expr>> {
    if let Ok(list) = m.parse_body_with(Punctuated::<Expr, Token![,]>::parse_terminated) {
        return Some(list.into_iter().collect());
    }
    // `vec![value; count]`
    m.parse_body_with(|input: syn::parse::ParseStream| {
        let a: Expr = input.parse()?;
        input.parse::<Token![;]>()?;
        let b: Expr = input.parse()?;
        Ok(vec![a, b])
    })
    .ok()
}

fn tokens_contain_unsafe(ts: proc_macro2::TokenStream) -> bool {
    ts.into_iter().any(|t| match t {
        proc_macro2::TokenTree::Ident(i) => i == "unsafe",
        proc_macro2::TokenTree::Group(g) => tokens_contain_unsafe(g.stream()),
        _ => false,
    })
}

fn stmt_diverges(s: &Stmt) -> bool {
    match s {
        Stmt::Expr(e, _) => expr_diverges(e),
        Stmt::Macro(m) => DIVERGING_MACROS.contains(&macro_name(&m.mac).as_str()),
        _ => false,
    }
}

fn expr_diverges(e: &Expr) -> bool {
    match e {
        Expr::Return(_) | Expr::Break(_) | Expr::Continue(_) => true,
        Expr::Macro(m) => DIVERGING_MACROS.contains(&macro_name(&m.mac).as_str()),
        Expr::Block(b) => b.block.stmts.iter().any(stmt_diverges),
        Expr::Call(c) => {
            // std::process::exit / abort
            matches!(&*c.func, Expr::Path(p) if p.path.segments.last().is_some_and(|s| s.ident == "exit" || s.ident == "abort"))
        }
        _ => false,
    }
}

pub(crate) fn block_diverges(b: &Block) -> bool {
    b.stmts.iter().any(stmt_diverges)
}

impl<'v, 'i, 'a> BodyVisitor<'v, 'i, 'a> {
    fn in_unsafe_ctx(&self) -> bool {
        self.unsafe_depth > 0 || self.input.declared_unsafe
    }

    fn local(&self, name: &str) -> Option<&Local> {
        self.scopes.iter().rev().find_map(|s| s.locals.get(name))
    }

    fn active_guards(&self) -> BTreeSet<String> {
        self.scopes
            .iter()
            .flat_map(|s| s.guards.iter().cloned())
            .collect()
    }

    fn push_scope(&mut self, guards: BTreeSet<String>) {
        self.scopes.push(Scope {
            locals: HashMap::new(),
            guards,
        });
    }

    fn pop_scope(&mut self) {
        self.scopes.pop();
    }

    fn add_guard(&mut self, names: BTreeSet<String>) {
        if let Some(s) = self.scopes.last_mut() {
            s.guards.extend(names);
        }
    }

    fn warn(&mut self, msg: String) {
        self.out.warnings.push(format!(
            "{}: {}: {msg}",
            self.input.file, self.input.caller_id
        ));
    }

    // ---------------------------------------------------------------- scanning

    fn scan(&self, e: &Expr) -> Scan {
        let mut s = Scanner {
            v: self,
            out: Scan::default(),
        };
        s.visit_expr(e);
        s.out
    }

    fn scan_all<'e>(&self, es: impl IntoIterator<Item = &'e Expr>) -> Scan {
        let mut s = Scanner {
            v: self,
            out: Scan::default(),
        };
        for e in es {
            s.visit_expr(e);
        }
        s.out
    }

    fn root_source(&self, root: &Root) -> Option<ArgSource> {
        let owner_fields = self
            .input
            .owner
            .filter(|o| self.idx.names.types.contains(*o))
            .map(|o| self.idx.mutated_fields.get(o));
        match root {
            Root::Global => Some(ArgSource::GlobalOrStaticVar),
            Root::Literal => Some(ArgSource::HardcodedLiteral),
            Root::FixedFn => Some(ArgSource::FixedValueFn),
            Root::ReceiverField(f) => match owner_fields {
                Some(None) => Some(ArgSource::GlobalOrStaticVar),
                Some(Some(m)) if !m.contains(f) && !m.contains("*") => {
                    Some(ArgSource::GlobalOrStaticVar)
                }
                _ => None,
            },
            Root::Receiver => match owner_fields {
                Some(None) => Some(ArgSource::GlobalOrStaticVar),
                Some(Some(m)) if m.is_empty() => Some(ArgSource::GlobalOrStaticVar),
                _ => None,
            },
            Root::Param | Root::Opaque => None,
        }
    }

    fn flow(&self, e: &Expr) -> ArgFlow {
        let scan = self.scan(e);
        let guards = self.active_guards();
        let validated = scan.names.iter().any(|n| guards.contains(n));
        let fixed: Vec<Option<ArgSource>> =
            scan.roots.iter().map(|r| self.root_source(r)).collect();
        let source = if fixed.iter().all(Option::is_some) {
            fixed
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(ArgSource::HardcodedLiteral)
        } else if scan
            .roots
            .iter()
            .any(|r| matches!(r, Root::Param | Root::Receiver | Root::ReceiverField(_)))
        {
            ArgSource::CallerParam
        } else {
            ArgSource::LocalComputed
        };
        ArgFlow {
            source,
            validated_by_branch_or_assert: validated,
        }
    }

    // ---------------------------------------------------------------- typing

    fn self_recv(&self) -> RecvTy {
        match self.ctx.self_type {
            Some(st) if self.idx.names.traits.contains(st) => RecvTy::Generic(vec![st.to_string()]),
            Some(st) => RecvTy::Named(st.to_string()),
            None => RecvTy::Other("Self".into()),
        }
    }

    fn field_type(&self, owner: &str, field: &str) -> RecvTy {
        match self.idx.fields.get(owner).and_then(|m| m.get(field)) {
            Some(ty) => self.idx.classify(ty, self.ctx),
            None => RecvTy::Other("_".into()),
        }
    }

    fn type_of(&self, e: &Expr) -> RecvTy {
        match e {
            Expr::Path(p) if p.qself.is_none() && p.path.segments.len() == 1 => {
                let name = p.path.segments[0].ident.to_string();
                if name == "self" {
                    return self.self_recv();
                }
                if let Some(l) = self.local(&name) {
                    return l.ty.clone();
                }
                if let Some(Some(ty)) = self.params.get(&name) {
                    return self.idx.classify(ty, self.ctx);
                }
                RecvTy::Other("_".into())
            }
            Expr::Field(f) => {
                let member = match &f.member {
                    syn::Member::Named(n) => n.to_string(),
                    syn::Member::Unnamed(i) => i.index.to_string(),
                };
                match self.type_of(&f.base) {
                    RecvTy::Named(t) => self.field_type(&t, &member),
                    _ => RecvTy::Other("_".into()),
                }
            }
            Expr::Paren(p) => self.type_of(&p.expr),
            Expr::Group(g) => self.type_of(&g.expr),
            Expr::Reference(r) => self.type_of(&r.expr),
            Expr::Unary(u) if matches!(u.op, syn::UnOp::Deref(_)) => match self.type_of(&u.expr) {
                RecvTy::RawPtr(_) | RecvTy::FnPtr(_) => RecvTy::Other("_".into()),
                other => other,
            },
            Expr::Cast(c) => self.idx.classify(&c.ty, self.ctx),
            Expr::MethodCall(m) => {
                let name = m.method.to_string();
                if RAW_PTR_PRODUCERS.contains(&name.as_str()) {
                    return RecvTy::RawPtr("*const _".into());
                }
                match self.type_of(&m.receiver) {
                    RecvTy::RawPtr(t) if RAW_PTR_PRESERVING.contains(&name.as_str()) => {
                        RecvTy::RawPtr(t)
                    }
                    _ => RecvTy::Other("_".into()),
                }
            }
            Expr::Call(c) => {
                if let Expr::Path(p) = &*c.func {
                    let segs = path_segments(&p.path);
                    if segs.last().is_some_and(|s| s == "null" || s == "null_mut") {
                        return RecvTy::RawPtr("*const _".into());
                    }
                    if let Resolved::Fn(id) =
                        self.idx
                            .resolve_value(&segs, self.ctx.module, self.ctx.self_type)
                    {
                        if let Some(f) = self.idx.fns.get(&id) {
                            if f.is_constructor {
                                if let Some(o) = &f.owner {
                                    return RecvTy::Named(o.clone());
                                }
                            }
                        }
                    }
                }
                RecvTy::Other("_".into())
            }
            Expr::Struct(s) => {
                let segs = path_segments(&s.path);
                if segs.len() == 1 && segs[0] == "Self" {
                    return self.self_recv();
                }
                match self.idx.names.resolve(
                    &segs,
                    self.ctx.module,
                    self.idx.uses,
                    &self.idx.crate_name,
                ) {
                    Some(p) if self.idx.names.types.contains(&p) => RecvTy::Named(p),
                    _ => RecvTy::Other("_".into()),
                }
            }
            _ => RecvTy::Other("_".into()),
        }
    }

    // ---------------------------------------------------------------- recording

    fn record(&mut self, callee_ref: CalleeRef, callee_is_unsafe: bool, args: Vec<ArgFlow>) {
        let inside = self.unsafe_depth > 0;
        if !(callee_is_unsafe || inside) {
            return;
        }
        self.out.call_sites.push(CallSiteFact {
            caller_id: self.input.caller_id.to_string(),
            callee_ref,
            callee_is_unsafe,
            inside_unsafe_block: inside,
            arg_flows: args,
        });
    }

    fn external_unsafe(&self, safe_listed: bool) -> bool {
        self.in_unsafe_ctx() && !safe_listed
    }

    fn path_call(&mut self, p: &syn::ExprPath, args: &[Expr]) {
        let segs = path_segments(&p.path);
        let flows = || args.iter().map(|a| self.flow(a)).collect::<Vec<_>>();

        if p.qself.is_none() && segs.len() == 1 {
            let name = &segs[0];
            let local_ty = self.local(name).map(|l| l.ty.clone()).or_else(|| {
                self.params.get(name).map(|t| match t {
                    Some(ty) => self.idx.classify(ty, self.ctx),
                    None => RecvTy::Other("_".into()),
                })
            });
            if let Some(ty) = local_ty {
                if let RecvTy::FnPtr(sig) = ty {
                    let unsafe_ = sig.starts_with("unsafe ");
                    let f = flows();
                    self.record(
                        CalleeRef::FunctionParam {
                            param: name.clone(),
                            signature: sig,
                        },
                        unsafe_,
                        f,
                    );
                }
                return;
            }
        }
        // `T::method(..)` on a bounded generic parameter
        if p.qself.is_none() && segs.len() == 2 {
            if let Some(bounds) = self.ctx.generic_bounds.get(&segs[0]) {
                for b in bounds {
                    if let Some(decl) = self.idx.trait_decl(b, &segs[1]) {
                        let unsafe_ = self.idx.fns.get(decl).is_some_and(|f| f.declared_unsafe);
                        let f = flows();
                        self.record(
                            CalleeRef::TraitGenericMethod {
                                trait_path: b.clone(),
                                method: segs[1].clone(),
                            },
                            unsafe_,
                            f,
                        );
                        return;
                    }
                }
            }
        }
        match self
            .idx
            .resolve_value(&segs, self.ctx.module, self.ctx.self_type)
        {
            Resolved::Fn(id) => {
                let unsafe_ = self.idx.fns.get(&id).is_some_and(|f| f.declared_unsafe);
                let f = flows();
                self.record(CalleeRef::DirectPath { path: id }, unsafe_, f);
            }
            Resolved::TraitMethod { trait_path, method } => {
                let unsafe_ = self
                    .idx
                    .trait_decl(&trait_path, &method)
                    .and_then(|d| self.idx.fns.get(d))
                    .is_some_and(|f| f.declared_unsafe);
                let f = flows();
                self.record(
                    CalleeRef::TraitGenericMethod { trait_path, method },
                    unsafe_,
                    f,
                );
            }
            Resolved::Type(_) => {}
            Resolved::Static { .. } => {}
            Resolved::Unknown(path) => {
                let last = segs.last().cloned().unwrap_or_default();
                if last.starts_with(char::is_uppercase) {
                    return;
                }
                let unsafe_ = self.external_unsafe(is_known_safe_function(&last));
                let f = flows();
                self.record(CalleeRef::DirectPath { path }, unsafe_, f);
            }
        }
    }

    fn method_call(&mut self, m: &syn::ExprMethodCall) {
        let name = m.method.to_string();
        let recv_ty = self.type_of(&m.receiver);
        let all_flows = |v: &Self| {
            std::iter::once(v.flow(&m.receiver))
                .chain(m.args.iter().map(|a| v.flow(a)))
                .collect::<Vec<_>>()
        };
        match &recv_ty {
            RecvTy::Named(t) => {
                if let Some(id) = self.idx.method_of(t, &name) {
                    if self
                        .idx
                        .fns
                        .get(&id)
                        .is_some_and(|f| f.kind == crate::facts::FunctionKind::DynamicMethod)
                    {
                        let unsafe_ = self.idx.fns.get(&id).is_some_and(|f| f.declared_unsafe);
                        let f = all_flows(self);
                        self.record(CalleeRef::DirectPath { path: id }, unsafe_, f);
                        return;
                    }
                }
                let unsafe_ = self.external_unsafe(is_known_safe_method(&name));
                let f = all_flows(self);
                self.record(
                    CalleeRef::DirectPath {
                        path: format!("{t}::{name}"),
                    },
                    unsafe_,
                    f,
                );
            }
            RecvTy::Generic(bounds) => {
                for b in bounds {
                    if let Some(decl) = self.idx.trait_decl(b, &name) {
                        let unsafe_ = self.idx.fns.get(decl).is_some_and(|f| f.declared_unsafe);
                        let f = all_flows(self);
                        self.record(
                            CalleeRef::TraitGenericMethod {
                                trait_path: b.clone(),
                                method: name.clone(),
                            },
                            unsafe_,
                            f,
                        );
                        return;
                    }
                }
                let unsafe_ = self.external_unsafe(is_known_safe_method(&name));
                let f = all_flows(self);
                self.record(
                    CalleeRef::DirectPath {
                        path: format!("<_>::{name}"),
                    },
                    unsafe_,
                    f,
                );
            }
            RecvTy::RawPtr(t) => {
                let unsafe_ = RAW_PTR_UNSAFE_METHODS.contains(&name.as_str());
                let f = all_flows(self);
                self.record(
                    CalleeRef::DirectPath {
                        path: format!("<{t}>::{name}"),
                    },
                    unsafe_,
                    f,
                );
            }
            RecvTy::FnPtr(_) | RecvTy::Other(_) => {
                if !is_known_safe_method(&name) {
                    if let Some(id) = self.idx.unique_dyn_method(&name).cloned() {
                        let unsafe_ = self.idx.fns.get(&id).is_some_and(|f| f.declared_unsafe);
                        let f = all_flows(self);
                        self.record(CalleeRef::DirectPath { path: id }, unsafe_, f);
                        return;
                    }
                }
                let unsafe_ = self.external_unsafe(is_known_safe_method(&name));
                let f = all_flows(self);
                self.record(
                    CalleeRef::DirectPath {
                        path: format!("<_>::{name}"),
                    },
                    unsafe_,
                    f,
                );
            }
        }
    }

    fn callable_expr(&mut self, func: &Expr, args: &[Expr]) {
        // `(self.inner)()` or `(f)(x)` with a function-pointer type
        if let RecvTy::FnPtr(sig) = self.type_of(func) {
            let param = match self_field(func) {
                Some(f) => format!("self.{f}"),
                None => super::types::render_tokens(
                    quote::ToTokens::to_token_stream(func),
                    &HashSet::new(),
                ),
            };
            let unsafe_ = sig.starts_with("unsafe ");
            let flows = args.iter().map(|a| self.flow(a)).collect();
            self.record(
                CalleeRef::FunctionParam {
                    param,
                    signature: sig,
                },
                unsafe_,
                flows,
            );
        }
    }

    // ---------------------------------------------------------------- walking

    fn block(&mut self, b: &Block) {
        self.push_scope(BTreeSet::new());
        self.stmts(&b.stmts);
        self.pop_scope();
    }

    fn stmts(&mut self, stmts: &[Stmt]) {
        for s in stmts {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match s {
            Stmt::Local(l) => {
                if let Some(init) = &l.init {
                    self.expr(&init.expr);
                    let scan = self.scan(&init.expr);
                    let ty = match &l.pat {
                        Pat::Type(pt) => self.idx.classify(&pt.ty, self.ctx),
                        _ => self.type_of(&init.expr),
                    };
                    if let Some((_, diverge)) = &init.diverge {
                        self.expr(diverge);
                        self.add_guard(scan.names.clone());
                    }
                    self.bind(&l.pat, &scan, ty);
                } else {
                    let ty = match &l.pat {
                        Pat::Type(pt) => self.idx.classify(&pt.ty, self.ctx),
                        _ => RecvTy::Other("_".into()),
                    };
                    let scan = Scan {
                        roots: [Root::Opaque].into(),
                        names: BTreeSet::new(),
                    };
                    self.bind(&l.pat, &scan, ty);
                }
            }
            Stmt::Item(_) => {}
            Stmt::Expr(e, _) => {
                self.expr(e);
                // `if !ok { return; }` guards the remainder of the block
                if let Expr::If(i) = e {
                    if block_diverges(&i.then_branch) && i.else_branch.is_none() {
                        let names = self.scan(&i.cond).names;
                        self.add_guard(names);
                    }
                }
            }
            Stmt::Macro(m) => self.mac(&m.mac),
        }
    }

    fn bind(&mut self, pat: &Pat, scan: &Scan, ty: RecvTy) {
        let mut idents = Vec::new();
        collect_pat_idents(pat, &mut idents);
        let single = matches!(strip_pat_type(pat), Pat::Ident(_));
        for name in idents {
            let mut names = scan.names.clone();
            names.insert(name.clone());
            let local = Local {
                roots: scan.roots.clone(),
                names,
                ty: if single {
                    ty.clone()
                } else {
                    RecvTy::Other("_".into())
                },
            };
            if let Some(s) = self.scopes.last_mut() {
                s.locals.insert(name, local);
            }
        }
    }

    fn guarded<F: FnOnce(&mut Self)>(&mut self, guards: BTreeSet<String>, f: F) {
        self.push_scope(guards);
        f(self);
        self.pop_scope();
    }

    fn expr(&mut self, e: &Expr) {
        match e {
            Expr::Unsafe(u) => {
                self.out.contains_unsafe_block = true;
                self.unsafe_depth += 1;
                self.block(&u.block);
                self.unsafe_depth -= 1;
            }
            Expr::Block(b) => self.block(&b.block),
            Expr::Const(c) => self.block(&c.block),
            Expr::Async(a) => self.block(&a.block),
            Expr::TryBlock(t) => self.block(&t.block),
            Expr::Loop(l) => self.block(&l.body),
            Expr::If(i) => self.if_expr(i),
            Expr::While(w) => {
                self.cond(&w.cond, |v| v.block(&w.body));
            }
            Expr::ForLoop(f) => {
                self.expr(&f.expr);
                let scan = self.scan(&f.expr);
                self.push_scope(BTreeSet::new());
                self.bind(&f.pat, &scan, RecvTy::Other("_".into()));
                self.block(&f.body);
                self.pop_scope();
            }
            Expr::Match(m) => {
                self.expr(&m.expr);
                let scan = self.scan(&m.expr);
                for arm in &m.arms {
                    self.push_scope(scan.names.clone());
                    self.bind(&arm.pat, &scan, RecvTy::Other("_".into()));
                    if let Some((_, g)) = &arm.guard {
                        self.expr(g);
                        let names = self.scan(g).names;
                        self.add_guard(names);
                    }
                    self.expr(&arm.body);
                    self.pop_scope();
                }
            }
            Expr::Let(l) => {
                self.expr(&l.expr);
            }
            Expr::Closure(c) => {
                self.push_scope(BTreeSet::new());
                let scan = Scan {
                    roots: [Root::Opaque].into(),
                    names: BTreeSet::new(),
                };
                for p in &c.inputs {
                    self.bind(p, &scan, RecvTy::Other("_".into()));
                }
                self.expr(&c.body);
                self.pop_scope();
            }
            Expr::Call(c) => {
                self.expr(&c.func);
                for a in &c.args {
                    self.expr(a);
                }
                let args: Vec<Expr> = c.args.iter().cloned().collect();
                match &*c.func {
                    Expr::Path(p) => self.path_call(p, &args),
                    other => self.callable_expr(other, &args),
                }
            }
            Expr::MethodCall(m) => {
                self.expr(&m.receiver);
                for a in &m.args {
                    self.expr(a);
                }
                self.method_call(m);
            }
            Expr::Unary(u) => {
                self.expr(&u.expr);
                if matches!(u.op, syn::UnOp::Deref(_)) && self.in_unsafe_ctx() {
                    if let RecvTy::RawPtr(_) = self.type_of(&u.expr) {
                        let f = vec![self.flow(&u.expr)];
                        self.record(
                            CalleeRef::DirectPath {
                                path: RAW_DEREF.into(),
                            },
                            true,
                            f,
                        );
                    }
                }
            }
            Expr::Path(p) => {
                if self.in_unsafe_ctx() && p.qself.is_none() {
                    let segs = path_segments(&p.path);
                    let shadowed = segs.len() == 1
                        && (self.local(&segs[0]).is_some() || self.params.contains_key(&segs[0]));
                    if !shadowed {
                        if let Resolved::Static { path, is_mut: true } =
                            self.idx
                                .resolve_value(&segs, self.ctx.module, self.ctx.self_type)
                        {
                            self.record(
                                CalleeRef::DirectPath {
                                    path: static_mut_pseudo(&path),
                                },
                                true,
                                Vec::new(),
                            );
                        }
                    }
                }
            }
            Expr::Macro(m) => self.mac(&m.mac),
            Expr::Array(a) => a.elems.iter().for_each(|e| self.expr(e)),
            Expr::Tuple(t) => t.elems.iter().for_each(|e| self.expr(e)),
            Expr::Assign(a) => {
                self.expr(&a.left);
                self.expr(&a.right);
            }
            Expr::Binary(b) => {
                self.expr(&b.left);
                self.expr(&b.right);
            }
            Expr::Await(a) => self.expr(&a.base),
            Expr::Break(b) => {
                if let Some(e) = &b.expr {
                    self.expr(e);
                }
            }
            Expr::Return(r) => {
                if let Some(e) = &r.expr {
                    self.expr(e);
                }
            }
            Expr::Yield(y) => {
                if let Some(e) = &y.expr {
                    self.expr(e);
                }
            }
            Expr::Cast(c) => self.expr(&c.expr),
            Expr::Field(f) => self.expr(&f.base),
            Expr::Group(g) => self.expr(&g.expr),
            Expr::Paren(p) => self.expr(&p.expr),
            Expr::Reference(r) => self.expr(&r.expr),
            Expr::RawAddr(r) => self.expr(&r.expr),
            Expr::Index(i) => {
                self.expr(&i.expr);
                self.expr(&i.index);
            }
            Expr::Range(r) => {
                if let Some(s) = &r.start {
                    self.expr(s);
                }
                if let Some(e) = &r.end {
                    self.expr(e);
                }
            }
            Expr::Repeat(r) => {
                self.expr(&r.expr);
                self.expr(&r.len);
            }
            Expr::Struct(s) => {
                for f in &s.fields {
                    self.expr(&f.expr);
                }
                if let Some(r) = &s.rest {
                    self.expr(r);
                }
            }
            Expr::Try(t) => self.expr(&t.expr),
            _ => {}
        }
    }

    fn cond<F: FnOnce(&mut Self)>(&mut self, cond: &Expr, body: F) {
        self.expr(cond);
        let names = self.scan(cond).names;
        self.push_scope(names);
        if let Expr::Let(l) = cond {
            let scan = self.scan(&l.expr);
            self.bind(&l.pat, &scan, RecvTy::Other("_".into()));
        }
        bind_let_chain(self, cond);
        body(self);
        self.pop_scope();
    }

    fn if_expr(&mut self, i: &syn::ExprIf) {
        self.cond(&i.cond, |v| v.block(&i.then_branch));
        if let Some((_, els)) = &i.else_branch {
            let names = self.scan(&i.cond).names;
            self.guarded(names, |v| v.expr(els));
        }
    }

    fn mac(&mut self, m: &syn::Macro) {
        let name = macro_name(m);
        if ASSERT_MACROS.contains(&name.as_str()) {
            if let Some(args) = parse_macro_exprs(m) {
                for a in &args {
                    self.expr(a);
                }
                let names = self.scan_all(args.iter()).names;
                self.add_guard(names);
                return;
            }
        } else if EXPR_MACROS.contains(&name.as_str()) {
            if let Some(args) = parse_macro_exprs(m) {
                for a in &args {
                    self.expr(a);
                }
                return;
            }
        } else if ASM_MACROS.contains(&name.as_str()) {
            self.record(
                CalleeRef::DirectPath {
                    path: INLINE_ASM.into(),
                },
                true,
                Vec::new(),
            );
            return;
        }
        let has_unsafe = tokens_contain_unsafe(m.tokens.clone());
        if has_unsafe {
            self.out.contains_unsafe_block = true;
        }
        if has_unsafe || self.in_unsafe_ctx() {
            self.warn(format!(
                "macro `{name}!` not expanded; call sites inside it are skipped"
            ));
        }
    }
}

fn bind_let_chain(v: &mut BodyVisitor<'_, '_, '_>, cond: &Expr) {
    if let Expr::Binary(b) = cond {
        if matches!(b.op, syn::BinOp::And(_)) {
            for side in [&*b.left, &*b.right] {
                if let Expr::Let(l) = side {
                    let scan = v.scan(&l.expr);
                    v.bind(&l.pat, &scan, RecvTy::Other("_".into()));
                } else {
                    bind_let_chain(v, side);
                }
            }
        }
    }
}

fn strip_pat_type(p: &Pat) -> &Pat {
    match p {
        Pat::Type(t) => strip_pat_type(&t.pat),
        Pat::Paren(p) => strip_pat_type(&p.pat),
        other => other,
    }
}

pub(crate) fn collect_pat_idents(p: &Pat, out: &mut Vec<String>) {
    match p {
        Pat::Ident(i) => {
            out.push(i.ident.to_string());
            if let Some((_, sub)) = &i.subpat {
                collect_pat_idents(sub, out);
            }
        }
        Pat::Type(t) => collect_pat_idents(&t.pat, out),
        Pat::Paren(p) => collect_pat_idents(&p.pat, out),
        Pat::Reference(r) => collect_pat_idents(&r.pat, out),
        Pat::Tuple(t) => t.elems.iter().for_each(|e| collect_pat_idents(e, out)),
        Pat::TupleStruct(t) => t.elems.iter().for_each(|e| collect_pat_idents(e, out)),
        Pat::Slice(s) => s.elems.iter().for_each(|e| collect_pat_idents(e, out)),
        Pat::Or(o) => o.cases.iter().for_each(|e| collect_pat_idents(e, out)),
        Pat::Struct(s) => s
            .fields
            .iter()
            .for_each(|f| collect_pat_idents(&f.pat, out)),
        _ => {}
    }
}

struct Scanner<'s, 'v, 'i, 'a> {
    v: &'s BodyVisitor<'v, 'i, 'a>,
    out: Scan,
}

impl<'ast> Visit<'ast> for Scanner<'_, '_, '_, '_> {
    fn visit_lit(&mut self, _: &'ast syn::Lit) {
        self.out.roots.insert(Root::Literal);
    }

    fn visit_expr_path(&mut self, p: &'ast syn::ExprPath) {
        let segs = path_segments(&p.path);
        if p.qself.is_none() && segs.len() == 1 {
            let name = &segs[0];
            if name == "self" {
                self.out.roots.insert(Root::Receiver);
                self.out.names.insert("self".into());
                return;
            }
            if let Some(l) = self.v.local(name) {
                self.out.roots.extend(l.roots.iter().cloned());
                self.out.names.extend(l.names.iter().cloned());
                return;
            }
            if self.v.params.contains_key(name) {
                self.out.roots.insert(Root::Param);
                self.out.names.insert(name.clone());
                return;
            }
        }
        let root = match self
            .v
            .idx
            .resolve_value(&segs, self.v.ctx.module, self.v.ctx.self_type)
        {
            Resolved::Static { .. } => Root::Global,
            Resolved::Fn(_) | Resolved::Type(_) | Resolved::TraitMethod { .. } => Root::Literal,
            Resolved::Unknown(_) => {
                let last = segs.last().map(String::as_str).unwrap_or("");
                if last.starts_with(char::is_uppercase) {
                    Root::Literal
                } else {
                    Root::Opaque
                }
            }
        };
        self.out.roots.insert(root);
    }

    fn visit_expr_field(&mut self, f: &'ast syn::ExprField) {
        if ident_of_path(&f.base).as_deref() == Some("self") {
            let member = match &f.member {
                syn::Member::Named(n) => n.to_string(),
                syn::Member::Unnamed(i) => i.index.to_string(),
            };
            self.out.names.insert(format!("self.{member}"));
            self.out.roots.insert(Root::ReceiverField(member));
            return;
        }
        self.visit_expr(&f.base);
    }

    fn visit_expr_call(&mut self, c: &'ast syn::ExprCall) {
        if let Expr::Path(p) = &*c.func {
            let last = p
                .path
                .segments
                .last()
                .map(|s| s.ident.to_string())
                .unwrap_or_default();
            if c.args.is_empty() && !last.starts_with(char::is_uppercase) {
                self.out.roots.insert(Root::FixedFn);
                return;
            }
            for a in &c.args {
                self.visit_expr(a);
            }
            if c.args.is_empty() {
                self.out.roots.insert(Root::Literal);
            }
            return;
        }
        syn::visit::visit_expr_call(self, c);
    }

    fn visit_expr_closure(&mut self, _: &'ast syn::ExprClosure) {
        self.out.roots.insert(Root::Opaque);
    }

    fn visit_expr_macro(&mut self, m: &'ast syn::ExprMacro) {
        match parse_macro_exprs(&m.mac) {
            Some(args) if EXPR_MACROS.contains(&macro_name(&m.mac).as_str()) => {
                for a in &args {
                    self.visit_expr(a);
                }
            }
            _ => {
                self.out.roots.insert(Root::Opaque);
            }
        }
    }

    fn visit_type(&mut self, _: &'ast syn::Type) {}
    fn visit_block(&mut self, b: &'ast Block) {
        for s in &b.stmts {
            if let Stmt::Expr(e, None) = s {
                self.visit_expr(e);
            }
        }
        if b.stmts.is_empty() {
            self.out.roots.insert(Root::Literal);
        }
    }
}

/// Fields of `Self` written by a method body: plain or compound assignment,
/// or a `&mut self.f` borrow. `*` marks a whole-value overwrite.
pub(crate) fn mutated_self_fields(body: &Block) -> HashSet<String> {
    struct M(HashSet<String>);
    impl M {
        fn target(&mut self, e: &Expr) {
            if let Some(f) = self_field(e) {
                self.0.insert(f);
            } else if let Expr::Unary(u) = e {
                if ident_of_path(&u.expr).as_deref() == Some("self") {
                    self.0.insert("*".into());
                }
            }
        }
    }
    impl<'ast> Visit<'ast> for M {
        fn visit_expr_assign(&mut self, a: &'ast syn::ExprAssign) {
            self.target(&a.left);
            syn::visit::visit_expr_assign(self, a);
        }
        fn visit_expr_binary(&mut self, b: &'ast syn::ExprBinary) {
            use syn::BinOp::*;
            if matches!(
                b.op,
                AddAssign(_)
                    | SubAssign(_)
                    | MulAssign(_)
                    | DivAssign(_)
                    | RemAssign(_)
                    | BitXorAssign(_)
                    | BitAndAssign(_)
                    | BitOrAssign(_)
                    | ShlAssign(_)
                    | ShrAssign(_)
            ) {
                self.target(&b.left);
            }
            syn::visit::visit_expr_binary(self, b);
        }
        fn visit_expr_reference(&mut self, r: &'ast syn::ExprReference) {
            if r.mutability.is_some() {
                if let Some(f) = self_field(&r.expr) {
                    self.0.insert(f);
                }
            }
            syn::visit::visit_expr_reference(self, r);
        }
    }
    let mut m = M(HashSet::new());
    m.visit_block(body);
    m.0
}
