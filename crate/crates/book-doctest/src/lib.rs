//! The book's chapters as doc-tests: `cargo test -p book-doctest` runs every
//! Rust snippet under `book/src`.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/paths.md")]
pub mod paths {}
#[doc = include_str!("../../../book/src/distribution.md")]
pub mod distribution {}
#[doc = include_str!("../../../book/src/moments.md")]
pub mod moments {}
#[doc = include_str!("../../../book/src/pricing.md")]
pub mod pricing {}
#[doc = include_str!("../../../book/src/oracles.md")]
pub mod oracles {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
#[doc = include_str!("../../../book/src/acceptance.md")]
pub mod acceptance {}
