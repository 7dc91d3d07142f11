//! Terms, patterns, rewrite rules, and the generative operator over them.

mod distance;
mod generate;
mod rule;
mod state;
mod term;

pub use distance::{canonical_tree, rule_distance, tree_edit_distance};
pub use generate::{generate, generate_chained, matching, renormalized, MAX_CHAIN_DEPTH};
pub use rule::{
    apply_rule, match_pattern, substitute, Bindings, Origin, Pattern, RewriteRule, RuleId,
    RuleRole, ACTION, CATEGORY, EVENT,
};
pub use state::WorldState;
pub use term::{Symbol, Term};
