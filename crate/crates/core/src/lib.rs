//! Learning to navigate a literature corpus whose full texts are hidden
//! until read.
//!
//! A query names a drug and its associated genes. Every reference whose
//! title or abstract mentions the drug is a candidate; a candidate whose
//! full text mentions the drug and a gene in the same sentence is a target.
//! Agents start from one candidate and hop along a Jaccard k-nearest-neighbor
//! graph built from the free metadata, paying a penalty for every reference
//! opened, until a target is found.
//!
//! The crate is organized by pipeline stage:
//!
//! - [`corpus`]: reference records, keyword retrieval, target labeling,
//!   task difficulty and seeded synthetic corpora.
//! - [`recsys`]: the top-k neighbor graph over candidates.
//! - [`env`]: the episodic environment and its reward schedule.
//! - [`nn`]: a small reverse-mode gradient tape, parameter storage, Adam,
//!   and the encoder / recurrent cell / policy / value heads.
//! - [`agents`]: rollouts, REINFORCE with a running baseline, and A2C.
//! - [`baseline`]: the convolutional read/skip classifier that ranks
//!   candidates and picks the agents' first reference.
//! - [`eval`]: CTN, EI, the median-of-episodes protocol and reports.
//! - [`cli`]: the `refnav` command-line driver.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod agents;
pub mod baseline;
pub mod cli;
pub mod corpus;
pub mod env;
mod error;
pub mod eval;
pub mod nn;
pub mod recsys;
pub(crate) mod seeds;

pub use error::{Error, Result};
