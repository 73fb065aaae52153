//! Hausdorff dimension of continued-fraction limsup sets through pressure
//! functions of the Gauss map, plus a desk-scale materialisation of the
//! Cantor-set lower-bound construction.

pub mod cantor;
pub mod continuants;
pub mod dimension;
pub mod error;
pub mod formulas;
pub mod numeric;
pub mod pressure;

pub use error::{Error, Result};
