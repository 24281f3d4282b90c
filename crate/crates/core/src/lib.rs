//! Numerical tools for the quaternionic contact Yamabe problem on the
//! seven-dimensional quaternionic Heisenberg group.

pub mod audit;
pub mod best_constant;
pub mod cayley;
pub mod conformal;
pub mod error;
pub mod exec;
pub mod extremal;
pub mod field;
pub mod frame;
pub mod jet;
pub mod optimize;
pub mod qmatrix;
pub mod quadrature;
pub mod quat;
pub mod quotient;
pub mod real;

pub use error::{QcError, Result};
pub use exec::Exec;
pub use field::{Field, ScalarField};
pub use jet::Jet2;
pub use quat::{GroupPoint, ImQuaternion, Quaternion};
