//! Reverse-mode differentiation over dense matrices, plus the layers and
//! optimizer shared by every trained model.

mod nn;
mod tape;

pub use nn::{
    bind, dbn_forward, gcn_forward, init_weights, ns_iteration_step, store_grads, AdamState,
    GcnEncoder, InitScheme, Parameter, DBN_MAX_DIM, NORMAL_INIT_STD,
};
pub use tape::{gradient_check, numeric_gradient, relative_error, sigmoid, Gradients, Pairs, Tape, Var};
