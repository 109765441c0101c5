//! Automata, grammar-complexity metrics, recurrent networks and DFA
//! extraction for the seven Tomita grammars.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the
//! experiment harness and the command-line tool live in `tomita-lab`.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod automata;
pub mod complexity;
mod error;
pub mod extraction;
pub mod grammars;
pub mod rnn;

pub use automata::{Dfa, Grammar, Symbol};
pub use error::{Error, Result};
