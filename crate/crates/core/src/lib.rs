//! Sum-decomposable set functions: exact power-sum encodings, Janossy
//! pooling, the smooth maximum, and collision certificates showing that any
//! continuous encoder into `R^(M-1)` has inputs it cannot tell apart.
//!
//! ```
//! use setlab::sets::SetInput;
//! use setlab::sumdec::{power_sum_decode, power_sum_encode};
//!
//! let x = SetInput::new(vec![0.2, 0.9, 0.4]).unwrap();
//! let latent = power_sum_encode(&x).unwrap();
//! let back = power_sum_decode(&latent, 3).unwrap();
//! assert!((back.coords()[0] - 0.9).abs() < 1e-9);
//! ```

pub mod approx;
pub mod cli;
pub mod error;
pub mod exact;
pub mod janossy;
pub mod nnet;
pub mod roots;
pub mod sets;
pub mod sumdec;

pub use error::{Error, Result};
