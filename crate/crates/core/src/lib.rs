//! Parallel pattern matching over suffix tries, suffix trees and
//! interleaved suffix-tree hierarchies, with a work/span step ledger.

pub mod ancestry;
pub mod container;
pub mod dict;
pub mod error;
pub mod harness;
pub mod index;
pub mod interleaved;
pub mod ledger;
pub mod query;
pub mod text;
pub mod tree_par;
pub mod trie_par;

pub use container::{StoredIndex, StoredKind};
pub use error::{Error, Result};
pub use harness::Algo;
pub use index::{IndexKind, LeafRef, NavOutcome, NavStatus, NodeId, SuffixIndex};
pub use ledger::StepLedger;
pub use query::{oracle_scan, ExecMode, QueryResult};
pub use text::{make_text, Pattern, Symbol, Text};
