pub mod cli;
pub mod echelon;
pub mod error;
pub mod extension;
pub mod field;
pub mod fin;
pub mod games;
pub mod madlab;
pub mod posets;
pub mod stream;
pub mod vector;

pub use error::{Error, Result};
