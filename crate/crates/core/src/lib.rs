//! Front end, affine type checker, elaborator, core calculus and HLS
//! backend for the `.fuse` accelerator language.

pub mod ast;
pub mod backend;
pub mod calculus;
pub mod diag;
pub mod elaborate;
pub mod layout;
pub mod lexer;
pub mod linear;
pub mod parser;
pub mod pretty;
pub mod typecheck;
pub mod view;

pub use diag::{Code, Diagnostic, Span};
pub use parser::parse_program;
pub use pretty::pretty_print;
