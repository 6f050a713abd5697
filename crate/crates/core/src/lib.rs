//! Mean force Gibbs states of finite quantum systems coupled to bosonic
//! reservoirs.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigenops;
pub mod error;
pub mod models;
pub mod operator;
pub mod oracle;
pub mod quadrature;
pub mod spectral;
pub mod system;
pub mod ultrastrong;
pub mod weak;

pub use error::{Error, Result};
