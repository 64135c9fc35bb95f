//! Temporal-logic front end: formulas, concrete syntax, the property
//! catalog and template instantiation.

pub mod ast;
pub mod catalog;
pub mod instantiate;
pub mod parser;

pub use ast::{Atom, Formula, Logic, Predicate, ProjectionError};
pub use catalog::{catalog, lookup, select, Category, PropertyEntry};
pub use instantiate::{instantiate, Bindings, GroundProperty, NodeBinding};
pub use parser::{parse, SyntaxError};
