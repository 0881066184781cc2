pub mod arith;
pub mod error;
pub mod geometry;
pub mod growth;
pub mod horoballs;
pub mod isometry;
pub mod pingpong;
pub mod preset;
pub mod report;
pub mod search;
pub mod verify;
pub mod word;

pub use error::{Error, Result};
