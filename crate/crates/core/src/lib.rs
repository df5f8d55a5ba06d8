//! Core algorithms for grammar-driven multirotor design exploration.
//!
//! The crate is `no_std` (it only needs `alloc`) and carries no IO:
//!
//! * [`design`] and [`grammar`]: the design-tree abstract syntax, symmetry
//!   expansion and structural validation.
//! * [`catalog`]: the physical component library and its attribute schema.
//! * [`codec`]: preorder flattening to key-value token sequences, the
//!   grammar-directed parser, and token embedding.
//! * [`generator`]: the seeded procedural design sampler.
//! * [`physics`]: the closed-form static hover oracle that labels designs.
//! * [`surrogate`]: a transformer-encoder classifier with hand-written
//!   forward and backward passes and an SGD trainer.
//! * [`metrics`] and [`pipeline`]: evaluation, threshold calibration, and
//!   the build / train / filter workflow.
//!
//! File formats, checkpoints and the command line live in the `skyforge`
//! companion crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

#[cfg(feature = "std")]
extern crate std;

pub mod catalog;
pub mod codec;
pub mod design;
pub mod generator;
pub mod grammar;
pub mod metrics;
pub mod physics;
pub mod pipeline;
pub mod rng;
pub mod surrogate;

mod error;
pub use error::*;

pub use catalog::{Catalog, CatalogLayout, ComponentKind, ComponentRecord};
pub use codec::{EmbeddedSequence, FloatNormalizer, Token, TokenSequence};
pub use design::{DesignNode, NodeKind, ParamKey, ParamValue, ValidationReport};
pub use generator::GeneratorConfig;
pub use physics::{HoverResult, PhysicsConstants};
pub use surrogate::{ModelConfig, SurrogateModel, TrainConfig};
