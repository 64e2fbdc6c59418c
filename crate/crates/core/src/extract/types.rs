//! Canonical text for types and signatures.
//!
//! In-scope generic type parameters render as `_`, so `unsafe fn() -> T`
//! and `unsafe fn() -> U` share one signature string.

use std::collections::HashSet;

use proc_macro2::{Delimiter, Spacing, TokenStream, TokenTree};
use quote::ToTokens;

pub(crate) fn render_type(ty: &syn::Type, generics: &HashSet<String>) -> String {
    render_tokens(ty.to_token_stream(), generics)
}

pub(crate) fn render_return(ret: &syn::ReturnType, generics: &HashSet<String>) -> String {
    match ret {
        syn::ReturnType::Default => "()".to_string(),
        syn::ReturnType::Type(_, ty) => render_type(ty, generics),
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Prev {
    Start,
    Word,
    SpacedKeyword,
    Punct(char, Spacing),
    Group,
}

const SPACED_KEYWORDS: &[&str] = &["mut", "const", "dyn", "impl", "in", "unsafe", "extern"];

pub(crate) fn render_tokens(ts: TokenStream, generics: &HashSet<String>) -> String {
    let mut out = String::new();
    render_into(ts, generics, &mut out);
    out
}

fn render_into(ts: TokenStream, generics: &HashSet<String>, out: &mut String) {
    let tokens: Vec<TokenTree> = ts.into_iter().collect();
    let mut prev = Prev::Start;
    let mut i = 0;
    while i < tokens.len() {
        match &tokens[i] {
            TokenTree::Ident(ident) => {
                let text = ident.to_string();
                let text = if generics.contains(&text) {
                    "_".to_string()
                } else {
                    text
                };
                if matches!(
                    prev,
                    Prev::Word | Prev::SpacedKeyword | Prev::Punct(',' | ';' | '+' | '=', _)
                ) {
                    out.push(' ');
                }
                prev = if SPACED_KEYWORDS.contains(&text.as_str()) {
                    Prev::SpacedKeyword
                } else {
                    Prev::Word
                };
                out.push_str(&text);
            }
            TokenTree::Literal(lit) => {
                if matches!(
                    prev,
                    Prev::Word | Prev::SpacedKeyword | Prev::Punct(',' | ';' | '+' | '=', _)
                ) {
                    out.push(' ');
                }
                out.push_str(&lit.to_string());
                prev = Prev::Word;
            }
            TokenTree::Punct(p) => {
                let c = p.as_char();
                let next_is_gt =
                    matches!(tokens.get(i + 1), Some(TokenTree::Punct(n)) if n.as_char() == '>');
                if c == '-' && p.spacing() == Spacing::Joint && next_is_gt {
                    out.push_str(" -> ");
                    i += 2;
                    prev = Prev::Start;
                    continue;
                }
                match c {
                    '+' | '=' => {
                        out.push(' ');
                        out.push(c);
                    }
                    '\'' if matches!(
                        prev,
                        Prev::Word | Prev::SpacedKeyword | Prev::Punct(',' | '+', _)
                    ) =>
                    {
                        out.push(' ');
                        out.push(c);
                    }
                    _ => out.push(c),
                }
                prev = Prev::Punct(c, p.spacing());
            }
            TokenTree::Group(g) => {
                if matches!(
                    prev,
                    Prev::SpacedKeyword | Prev::Punct(',' | ';' | '+' | '=', _)
                ) {
                    out.push(' ');
                }
                let (open, close) = match g.delimiter() {
                    Delimiter::Parenthesis => ("(", ")"),
                    Delimiter::Bracket => ("[", "]"),
                    Delimiter::Brace => ("{", "}"),
                    Delimiter::None => ("", ""),
                };
                out.push_str(open);
                render_into(g.stream(), generics, out);
                out.push_str(close);
                prev = Prev::Group;
            }
        }
        i += 1;
    }
}

/// Type parameter names declared by `generics` (lifetimes and consts excluded).
pub(crate) fn type_param_names(generics: &syn::Generics) -> impl Iterator<Item = String> + '_ {
    generics.type_params().map(|p| p.ident.to_string())
}

/// Strips one `Option<..>`/`Result<.., ..>` layer from a rendered return type.
pub(crate) fn unwrap_optional_like(ty: &syn::Type) -> &syn::Type {
    if let syn::Type::Path(tp) = ty {
        if tp.qself.is_none() {
            if let Some(last) = tp.path.segments.last() {
                let name = last.ident.to_string();
                if name == "Option" || name == "Result" {
                    if let syn::PathArguments::AngleBracketed(args) = &last.arguments {
                        if let Some(syn::GenericArgument::Type(inner)) = args.args.first() {
                            return inner;
                        }
                    }
                }
            }
        }
    }
    ty
}

/// Last identifier of a path type, e.g. `IoPort` for `crate::io::IoPort<T, A>`.
pub(crate) fn path_type_head(ty: &syn::Type) -> Option<String> {
    match ty {
        syn::Type::Path(tp) if tp.qself.is_none() => {
            tp.path.segments.last().map(|s| s.ident.to_string())
        }
        syn::Type::Paren(p) => path_type_head(&p.elem),
        syn::Type::Group(g) => path_type_head(&g.elem),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(src: &str, generics: &[&str]) -> String {
        let ty: syn::Type = syn::parse_str(src).unwrap();
        let g = generics.iter().map(|s| s.to_string()).collect();
        render_type(&ty, &g)
    }

    #[test]
    fn renders_common_shapes() {
        assert_eq!(r("& 'static mut [u32]", &[]), "&'static mut [u32]");
        assert_eq!(r("*const T", &["T"]), "*const _");
        assert_eq!(r("Option < Self >", &[]), "Option<Self>");
        assert_eq!(r("Result<Self, E>", &[]), "Result<Self, E>");
        assert_eq!(r("[u32; 256]", &[]), "[u32; 256]");
        assert_eq!(r("unsafe fn() -> T", &["T"]), "unsafe fn() -> _");
        assert_eq!(r("PhantomData<(T, A)>", &["T", "A"]), "PhantomData<(_, _)>");
        assert_eq!(r("core::ptr::NonNull<u8>", &[]), "core::ptr::NonNull<u8>");
        assert_eq!(r("&'a dyn Fn(u8) -> u8", &[]), "&'a dyn Fn(u8) -> u8");
        assert_eq!(r("Box<dyn Any + Send>", &[]), "Box<dyn Any + Send>");
    }

    #[test]
    fn optional_wrapper_is_peeled_once() {
        let ty: syn::Type = syn::parse_str("Option<Option<Self>>").unwrap();
        let inner = unwrap_optional_like(&ty);
        assert_eq!(path_type_head(inner).as_deref(), Some("Option"));
    }
}
