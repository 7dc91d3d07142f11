//! The training loop: act with the rule population, keep a window of what
//! happened, measure how badly the rules predicted it, and move the
//! population toward lower error, either by local edits plus plain gradient
//! steps or by natural-gradient steps under the transport metric.

mod abstraction;
mod agent;
mod config;
mod mutation;
mod trainer;
mod window;

pub use abstraction::{label_symbol, propose_abstraction, AbstractionLabel, AbstractionParams};
pub use agent::{closure, evaluate, greedy_action, matching_policy, policy_context, sample_action, Agent};
pub use config::{AbstractionConfig, Scheme, TrainerConfig, Updater};
pub use mutation::{neighborhood, policy_indices, CandidateEdit, MutationKind, MutationScope};
pub use trainer::{
    derive_seed, generic_rule, metrics_csv, null_model_rule, train, MetricsRow, Trainer, TrainerState,
    UpdateReport, METRICS_HEADER,
};
pub use window::{
    model_observed, null_event, outcome_of, policy_observed, ChannelKind, ChannelSpec, Column, RuleColumns,
    WindowLoss, WindowModel,
};
