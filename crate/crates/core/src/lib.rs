//! Exact counting of proper 9-colourings of triangular-lattice regions,
//! boundary-pair disagreement probabilities, and the finite certificate that
//! bounds how far a boundary disagreement propagates.
//!
//! The guide in `book/` walks through each module; its code blocks are run
//! as doc-tests of this crate.

pub mod error;
pub mod boundary;
pub mod colouring;
pub mod certify;
pub mod coupling;
pub mod glauber;
pub mod lattice;
pub mod mu;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/counting.md")]
    mod counting {}
    #[doc = include_str!("../../../book/src/mu.md")]
    mod mu {}
    #[doc = include_str!("../../../book/src/coupling.md")]
    mod coupling {}
    #[doc = include_str!("../../../book/src/certificate.md")]
    mod certificate {}
    #[doc = include_str!("../../../book/src/glauber.md")]
    mod glauber {}
}
