//! Discriminative pattern-based prediction.
//!
//! The pipeline grows an ensemble of constrained random decision trees, turns
//! every non-leaf split into a conjunctive pattern, keeps a small top-k subset
//! of those patterns chosen by how well they work *together* inside a
//! generalized linear model, and predicts with that model over the binary
//! pattern space.
//!
//! ```text
//! Dataset -> fit_forest -> extract_patterns -> construct_pattern_space
//!         -> forward_select | lasso_select -> DppredModel
//! ```
//!
//! The [`stratify`] module layers a cluster-aware variant on top: global
//! patterns, LDA clustering over bags of patterns, and per-cluster local
//! patterns feeding one unified linear model.

// Guards like `!(x > 0.0)` are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod glm;
pub mod model;
pub mod patterns;
pub mod selection;
pub mod stratify;
pub mod synth;
pub mod tree;

mod numfmt;
mod seed;

pub use data::{Dataset, Encoding, LabelKind, RawTable, Schema, SplitRatio};
pub use error::{Error, Result};
pub use glm::{FitConfig, GlmModel, GlmTask};
pub use model::{DppredModel, HyperParams, Metrics, Prediction, SelectionMethod, TaskKind};
pub use patterns::{Condition, Op, Pattern, PatternPool, PatternSpace};
pub use selection::SelectionResult;
pub use stratify::{StratifiedModel, StratifyConfig};
pub use tree::{DecisionTree, TreeConfig};

pub use seed::derive_seed;
