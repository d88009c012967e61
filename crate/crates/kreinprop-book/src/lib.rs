//! The guide in `book/src`, one module per chapter, so `cargo test --doc` runs every listing.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/krein.md")]
pub mod krein {}

#[doc = include_str!("../../../book/src/evolution.md")]
pub mod evolution {}

#[doc = include_str!("../../../book/src/kleingordon.md")]
pub mod kleingordon {}

#[doc = include_str!("../../../book/src/resolvent.md")]
pub mod resolvent {}

#[doc = include_str!("../../../book/src/quant.md")]
pub mod quant {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
