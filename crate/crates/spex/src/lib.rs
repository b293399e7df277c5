pub mod bch;
pub mod oracle;
pub mod wht;
pub mod error;
pub mod gf2;
pub mod sampling;
pub mod seeds;

pub use error::{Error, Result};
