pub mod basis;
pub mod error;
pub mod hscg;
pub mod la;
pub mod matio;
pub mod ritz;
pub mod trace;

pub use error::{Error, Result};
pub mod adaptive;
pub mod gallery;
pub mod harness;
pub mod sstep;
