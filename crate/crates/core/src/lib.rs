//! Structure certificates for matrix-product vectors and density operators.

pub mod canonical;
pub mod error;
pub mod general;
pub mod io;
pub mod library;
pub mod linalg;
pub mod mixed;
pub mod pure;
pub mod tensor;

pub use error::{Error, Result};
pub use linalg::{Mat, C};
pub use tensor::{MpdoTensor, MpvTensor};
