//! Energy-flux diagnostics for incompressible velocity fields on the
//! periodic half-space T² × R₊, truncated to the slab T² × [−Lz, Lz].
//!
//! Modules follow the data flow: grids and fields ([`grid`], [`field`],
//! [`quad`], [`stencil`], [`snapshot`]), odd reflection ([`reflect`]),
//! mollification ([`mollifier`]), structure functions ([`structure`]),
//! the mollified energy budget ([`budget`]) and synthetic inputs ([`synth`]).

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod budget;
pub mod error;
mod fft3;
pub mod field;
pub mod fit;
pub mod grid;
pub mod mollifier;
pub mod quad;
pub mod reflect;
pub mod snapshot;
pub mod stencil;
pub mod structure;
pub mod synth;

pub use error::{Error, Result};
pub use field::{ScalarField, TensorField, TimeSeries, VectorField};
pub use grid::{Grid3, Region};
