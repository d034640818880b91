//! An autonomous agent for parser-based interactive fiction.
//!
//! The crate is organized around the pieces that make the agent go:
//!
//! - [`engine`]: a deterministic, seedable mock game interpreter with a
//!   declarative JSON game-definition format, used as ground truth.
//! - [`textutils`]: tokenizer, rule-based noun-phrase chunker, and fuzzy
//!   token-set similarity shared by the agent and the engine.
//! - [`validity`]: a trainable linear classifier estimating whether a game
//!   response indicates the action succeeded.
//! - [`lm`]: a backoff n-gram language model used as a prior over candidate
//!   actions.
//! - [`kg`]: the knowledge graph the agent accumulates while playing.
//! - [`agent`]: the decision modules, eagerness arbitration, and the episode
//!   loop.
//! - [`harness`]: the dependency-based progress metric, suite evaluation,
//!   ablation driver, and report generation.

pub mod agent;
pub mod engine;
pub mod harness;
pub mod kg;
pub mod lm;
pub mod textutils;
pub mod validity;

use std::path::PathBuf;

/// Root of the repository checkout, resolved from the crate's manifest.
///
/// Bundled data (`games/`, `data/`, `deps/`) lives at the repository root so
/// both the CLI and the test suites can find it.
pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .parent()
        .and_then(|p| p.parent())
        .expect("crate manifest has a workspace root")
        .to_path_buf()
}
