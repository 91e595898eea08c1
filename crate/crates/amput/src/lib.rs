//! File formats, report emission, and command runners for the `amput` CLI.
//!
//! The numerical work lives in `amput-core`; this crate adds JSON/CSV/SVG
//! rendering, the model-file schema, a small deterministic thread pool for
//! study schedules, and the subcommand implementations shared between the
//! binary and the test suites.

pub mod commands;
pub mod formats;
pub mod parallel;
