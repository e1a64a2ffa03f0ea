//! Meeting minuting toolkit.
//!
//! Two pipelines share this crate:
//!
//! * **Minuting**: a speaker-tagged transcript is split into topic blocks
//!   ([`segment`]), each block is summarized ([`summarize`]), and the
//!   summary sentences are arranged into an itemized tree ([`argmine`]).
//! * **Pair classification**: two documents (transcript/minute or
//!   minute/minute) are reduced to an 8-dimensional relevance vector
//!   ([`features`], with structure recovered by [`minuteparse`]) and scored
//!   by a cross-validated linear ensemble ([`learn`]).
//!
//! [`eval`] holds the ROUGE and correlation metrics used to compare
//! generated minutes against references.

pub mod argmine;
pub mod eval;
pub mod features;
pub mod learn;
pub mod minuteparse;
pub mod segment;
pub mod summarize;
pub mod text;

pub use text::{Document, DocumentKind, Sentence, Transcript, Utterance};
