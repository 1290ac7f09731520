//! Execution of partial Python snippets: hook instrumentation, an
//! exception-driven injection runtime, value and type predictors, completion
//! backends, and coverage evaluation.

pub mod backend;
pub mod eval;
pub mod instrument;
pub mod pipeline;
pub mod predict;
pub mod runtime;
pub mod snippet;
pub mod types;

pub use instrument::{count_branches, instrument, locate, HookKind, HookSite, InstrumentedProgram};
pub use pipeline::{BackendSource, Pipeline, PipelineConfig, PipelineFactory, PipelineMode};
pub use runtime::{run, Budget, ExecutionReport, HookQuery, Runtime, Terminal};
pub use snippet::SourceSnippet;
pub use types::{dummy_for, AbstractClass};
