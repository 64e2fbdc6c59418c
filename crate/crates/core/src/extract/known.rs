//! Callee names assumed safe when they cannot be resolved inside the crate.
//!
//! Unresolved calls inside an unsafe context are presumed unsafe unless
//! their final path segment appears here.

const SAFE_METHODS: &[&str] = &[
    "addr",
    "and_then",
    "as_mut_ptr",
    "as_mut_slice",
    "as_ptr",
    "as_slice",
    "as_str",
    "borrow",
    "borrow_mut",
    "capacity",
    "cast",
    "cast_mut",
    "cast_const",
    "checked_add",
    "checked_mul",
    "checked_sub",
    "clone",
    "cmp",
    "collect",
    "contains",
    "count",
    "default",
    "eq",
    "err",
    "expect",
    "extend",
    "filter",
    "fmt",
    "from",
    "get",
    "get_mut",
    "hash",
    "insert",
    "into",
    "into_iter",
    "is_empty",
    "is_none",
    "is_null",
    "is_some",
    "iter",
    "iter_mut",
    "len",
    "lock",
    "map",
    "max",
    "min",
    "ne",
    "ok",
    "partial_cmp",
    "pop",
    "push",
    "remove",
    "saturating_add",
    "saturating_sub",
    "sum",
    "to_owned",
    "to_string",
    "to_vec",
    "unwrap",
    "unwrap_or",
    "unwrap_or_default",
    "unwrap_or_else",
    "with_capacity",
    "wrapping_add",
    "wrapping_mul",
    "wrapping_sub",
];

const SAFE_FUNCTIONS: &[&str] = &[
    "align_of", "drop", "forget", "null", "null_mut", "new", "size_of", "swap", "replace", "take",
    "default", "from",
];

pub(crate) fn is_known_safe_method(name: &str) -> bool {
    SAFE_METHODS.contains(&name)
}

pub(crate) fn is_known_safe_function(last_segment: &str) -> bool {
    SAFE_FUNCTIONS.contains(&last_segment)
}

/// Macros whose arguments are plain expressions evaluated in place.
pub(crate) const EXPR_MACROS: &[&str] = &[
    "format",
    "format_args",
    "print",
    "println",
    "eprint",
    "eprintln",
    "write",
    "writeln",
    "vec",
    "dbg",
    "panic",
    "todo",
    "unimplemented",
    "unreachable",
    "matches",
];

pub(crate) const ASSERT_MACROS: &[&str] = &[
    "assert",
    "assert_eq",
    "assert_ne",
    "debug_assert",
    "debug_assert_eq",
    "debug_assert_ne",
];

pub(crate) const DIVERGING_MACROS: &[&str] = &["panic", "todo", "unimplemented", "unreachable"];

pub(crate) const ASM_MACROS: &[&str] = &["asm", "global_asm", "naked_asm", "llvm_asm"];
