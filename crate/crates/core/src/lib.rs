#![no_std]
// With std anywhere in the build graph its inherent float methods shadow
// the `Float` imports the bare no_std build needs.
#![cfg_attr(any(test, feature = "serde"), allow(unused_imports))]


extern crate alloc;

pub mod classical;
pub mod error;
pub mod floquet;
pub mod model;
pub mod phase_space;
pub mod rat;
pub mod special;

pub use error::{Error, Result};
pub use model::{IslandFrame, PhaseSpacePoint, SystemParams, TAU};
