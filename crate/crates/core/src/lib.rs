//! Metric entropy of bounded-variation grid functions: exact discrete
//! models, a constructive encoder/decoder, and packing lower bounds.

pub mod codec;
pub mod cover;
pub mod error;
pub mod grid_fn;
pub mod jordan;
pub mod numeric;
pub mod packing;
pub mod rank;
pub mod snake;

pub use codec::{decode, encode, EncodedBv};
pub use error::{Error, Result};
pub use grid_fn::{random_bv, BvClass, GridFunction};
pub use jordan::{decode_bv_1d, encode_bv_1d, MonotoneNet, StepFunction};
pub use snake::SnakeOrder;
