pub mod cmpoints;
pub mod curves;
pub mod dyadic;
pub mod eisenstein;
pub mod error;
pub mod hecke;
pub mod induction;
pub mod lfunc;
pub mod numerics;
pub mod quadfield;
pub mod recognition;

pub use error::{Error, Result};
