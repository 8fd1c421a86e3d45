//! Termination-proof checking and constructive-negation execution for
//! general logic programs.

pub mod annotation;
pub mod bounded;
pub mod checkers;
pub mod completion;
pub mod constraints;
pub mod corpus;
pub mod decompose;
pub mod engine;
pub mod error;
pub mod interp;
pub mod levelmap;
pub mod lexer;
pub mod parser;
pub mod symbolic;
pub mod term;
pub mod universe;

pub use error::{ParseError, ResourceError};
pub use parser::{parse_program, parse_query};
pub use term::{unify, Atom, Clause, Literal, Program, Rel, Subst, Term, Var};
