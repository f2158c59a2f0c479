//! Gaussian expectations: entry-level Wick contraction and the trace engine.

pub mod entry;
pub mod family;
pub mod traces;

pub use entry::{
    expectation, mean_value_check, propagator, Budget, Ensemble, EntryPoly, EntrySymbol, Kind,
    WickMemo,
};
pub use family::FamilyFraction;
pub use traces::{Atom, ComponentKey, Letter, Slot, TraceIntegrand, Vertex, WickExpansion};
