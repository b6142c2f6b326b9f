pub mod data;
pub mod densities;
pub mod diagnostics;
pub mod em;
pub mod error;
pub mod init;
pub mod mathcore;
pub(crate) mod optim;
pub mod overlap;
pub mod serde_mat;
pub mod transforms;

#[cfg(test)]
pub(crate) mod test_support;

pub use error::{Error, Result};
