//! CPSLint: a small declarative language for preparing time-series traces
//! from industrial cyber-physical systems, together with the engine that
//! executes it directly against CSV files.
//!
//! The crate is organised by stage of the workflow:
//!
//! * [`dsl`] parses, validates and prints scripts.
//! * [`table`] holds the cell/table model and the canonical CSV dialect.
//! * [`inspect`] infers column types and drafts a baseline script.
//! * [`sanitise`] runs `import`/`export` actions and reports what changed.
//! * [`segment`] cuts a trace into execution-phase files on text markers.
//! * [`corrupt`] injects block-localised faults for round-trip testing.
//! * [`golden`] generates a clean synthetic reference trace.

pub mod dsl;
pub mod table;
pub mod inspect;
pub mod sanitise;
pub mod segment;
pub mod corrupt;
pub mod golden;
pub mod rng;
#[cfg(feature = "testing")]
pub mod testing;
