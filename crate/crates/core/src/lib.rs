//! Parsing, bounded consistency checking and LLM-assisted explanation of SLEEC normative rules.

pub mod checker;
pub mod explain;
pub mod language;
pub mod par;
pub mod semantics;
