//! Choreographies with grouped communications: syntax, well-formedness,
//! sequential and concurrent semantics, endpoint projection, networks and
//! a property-checking harness.

pub mod ast;
pub mod cli;
pub mod conc;
pub mod epp;
pub mod equiv;
pub mod net;
pub mod seq;
pub mod syntax;
pub mod trace;
pub mod verify;
pub mod wf;
