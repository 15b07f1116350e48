//! Forward mode: symbolic differentiation over ANF, the pair-carrying source
//! transformation, and nested derivatives over tagged duals.

pub mod symbolic;
pub mod tagged;
pub mod transform;

pub use symbolic::{symbolic_diff, symbolic_gradient, DiffVar};
pub use tagged::{grad_forward_tagged, grad_forward_tagged_fn};
pub use transform::{forward_wrapper, fwd_transform, grad_forward};
