//! Particle simulations whose symbols and governing equations are written
//! in a small symbolic language inside a YAML case file and interpreted at
//! run time.

pub mod case;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod interactions;
pub mod io;
pub mod kernels;
pub mod numfmt;
pub mod parallel;
pub mod particles;
pub mod scheduler;
pub mod sfl;
pub mod tensor;
pub mod workspace;

pub use case::{AssemblyOptions, Case, Equation};
pub use error::{Error, ErrorClass, Result};
pub use tensor::{Shape, Tensor};
