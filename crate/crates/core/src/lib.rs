pub mod basis;
pub mod berezin;
pub mod error;
pub mod hankel;
pub mod quadrature;
pub mod spaces;
pub mod stablefun;
pub mod symbols;
pub mod verify;

pub use error::{FockError, Result};
