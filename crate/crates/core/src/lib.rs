//! Cage-based deformation of voxel radiance fields.
//!
//! A field is baked into a voxel grid ([`field`]), wrapped in a coarse cage
//! ([`geometry`]), and deformed by moving the cage vertices. Points of the
//! deformed space are carried back into the field with cage coordinates
//! ([`coords`]), either per sample or through a precomputed grid ([`warp`]),
//! and the result is volume rendered ([`render`]).

pub mod error;
pub mod coords;
pub mod field;
pub mod geometry;
pub mod render;
pub mod warp;
mod io_util;

pub use error::{Error, Result};
pub use io_util::write_atomic;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/cages.md")]
    mod cages {}
    #[doc = include_str!("../../../book/src/coordinates.md")]
    mod coordinates {}
    #[doc = include_str!("../../../book/src/fields.md")]
    mod fields {}
    #[doc = include_str!("../../../book/src/deformation.md")]
    mod deformation {}
    #[doc = include_str!("../../../book/src/grids.md")]
    mod grids {}
    #[doc = include_str!("../../../book/src/rendering.md")]
    mod rendering {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/formats.md")]
    mod formats {}
}
