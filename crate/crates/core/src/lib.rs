#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]
extern crate alloc;

pub mod analysis;
pub mod dob;
pub mod error;
pub mod identification;
pub mod lti;
pub mod luenberger;
pub mod observe;
mod ode;
pub mod plant;
pub mod trajectory;

pub use error::{Error, Result};
