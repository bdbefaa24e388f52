//! Structural feature extraction for sparse tensors in coordinate format, and
//! a generator that builds synthetic tensors matching target features.

pub mod error;
pub mod extraction;
pub mod features;
pub mod frostt;
pub mod generator;
pub mod oracle;
pub mod rng;
pub mod tensor;

pub use error::{Error, Result};
pub use extraction::{extract, CountArrays, Method, MethodChoice};
pub use features::{feature_count, FeatureSet, Scope};
pub use frostt::{load_frostt, write_frostt};
pub use generator::{generate, GeneratorSpec};
pub use tensor::{CooTensor, DuplicatePolicy, ModeOrder};
