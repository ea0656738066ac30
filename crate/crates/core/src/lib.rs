//! Maximal operators composed with invertible matrices, the weight classes
//! they induce, and numerical checks of their basic properties.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod czlab;
pub mod error;
pub mod funcspace;
pub mod maximal;
pub mod numeric;
pub mod report;
pub mod verify;
pub mod weightclass;
pub mod young;

pub use error::{Error, Result};
