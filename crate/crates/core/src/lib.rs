//! Kernels on fuzzy sets.
//!
//! Fuzzy sets are represented by their membership functions over a finite
//! ground space ([`fuzzy`]). On top of them the crate provides T-norm
//! intersections ([`tnorm`]), the cross product, intersection,
//! non-singleton and distance-substitution kernel families ([`kernels`]),
//! Gram matrices with PSD checks ([`gram`]), and two kernel consumers: a
//! kernel ridge classifier and an MMD permutation test ([`learn`]).
//!
//! ```
//! use std::sync::Arc;
//! use fuzzy_kernels::fuzzy::{DiscreteFuzzySet, GroundSpace};
//! use fuzzy_kernels::kernels::{cross_product_kernel, BaseKernel};
//!
//! let ground = Arc::new(GroundSpace::from_scalars(&[1.0, 2.0]).unwrap());
//! let x = DiscreteFuzzySet::new(ground.clone(), [(0, 1.0), (1, 0.5)]).unwrap();
//! let y = DiscreteFuzzySet::new(ground, [(0, 0.5)]).unwrap();
//! let k = cross_product_kernel(&x, &y, &BaseKernel::Linear, &BaseKernel::Linear).unwrap();
//! assert_eq!(k, 1.0);
//! ```

pub mod cli;
pub mod error;
pub mod fuzzy;
pub mod gram;
pub mod kernels;
pub mod learn;
pub mod tnorm;

pub use error::{Error, Result};
pub use fuzzy::{
    DiscreteFuzzySet, FuzzyAttribute, FuzzyRecord, GaussianFuzzySet, GroundSpace, Partition,
};
pub use gram::{GramMatrix, PsdReport};
pub use kernels::{BaseKernel, FuzzyKernelSpec, Metric};
pub use learn::{DualModel, MmdResult};
pub use tnorm::TNorm;
