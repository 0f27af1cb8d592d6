//! Query-guided temporal zoom-in for long videos.
//!
//! A video-language model is asked where a query is answered ([`link`] lays
//! out frames with their timestamps), then asked how sure it is of that
//! answer ([`backend::confidence`]). [`search`] uses those confidences to
//! explore ever finer sub-events best-first, and [`assembly`] turns the
//! winning windows into a compact global-plus-spotlight frame input.
//! [`eval`] scores the results on grounding and QA corpora.

pub mod assembly;
pub mod backend;
pub mod error;
pub mod eval;
pub mod link;
pub mod search;
pub mod seeds;
pub mod temporal;

pub use error::{Error, Result};
