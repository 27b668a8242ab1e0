// `!(x > 0.0)` rejects NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod contraction;
pub mod error;
pub mod groundstate;
pub mod linalg;
pub mod linearization;
pub mod spectral;
pub mod studies;
pub mod nonlinearity;
pub mod symbols;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/symbols.md")]
    mod symbols {}
    #[doc = include_str!("../../../book/src/groundstates.md")]
    mod groundstates {}
    #[doc = include_str!("../../../book/src/linearization.md")]
    mod linearization {}
    #[doc = include_str!("../../../book/src/contraction.md")]
    mod contraction {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
}
