//! The mdbook guide in `book/`, compiled here so its examples run as doctests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/drs.md")]
pub mod drs {}

#[doc = include_str!("../../../book/src/frontend.md")]
pub mod frontend {}

#[doc = include_str!("../../../book/src/classifier.md")]
pub mod classifier {}

#[doc = include_str!("../../../book/src/rewrite.md")]
pub mod rewrite {}

#[doc = include_str!("../../../book/src/ace.md")]
pub mod ace {}

#[doc = include_str!("../../../book/src/logic.md")]
pub mod logic {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}
