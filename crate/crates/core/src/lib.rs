//! Rectifier nets with plain, full-skip and residual connectivity, and exact
//! depth reduction to a single hidden layer read out through a max of heads.
//!
//! The core is generic over [`Scalar`] (`f32`, `f64`). The aliases at the
//! crate root fix the scalar to `f64`, with `*32` variants for `f32`.

pub mod complexity;
pub mod error;
pub mod format;
pub mod matrix;
pub mod net;
pub mod scalar;
pub mod transform;
pub mod verify;

pub use complexity::{comparison_table, counts_plain, counts_residual, counts_skip, Counts, Parity};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use net::{
    eval_max_rectifier, eval_rectifier, random_net, Evaluate, Evaluator, LayerStack, MaxRectifierNet, NetKind,
    OutputHead, RectifierNet, Violation,
};
pub use scalar::Scalar;
pub use transform::{
    collapse, collapse_plain, collapse_structure, collapse_residual, collapse_skip, reduce_depth_plain, reduce_depth_residual,
    reduce_depth_skip, reduce_step, ReduceOptions, TransformReport,
};
pub use verify::{check_pointwise, EquivReport, PointwiseConfig};

pub type Net = RectifierNet<f64>;
pub type MaxNet = MaxRectifierNet<f64>;
pub type Stack = LayerStack<f64>;
pub type Head = OutputHead<f64>;
pub type Net32 = RectifierNet<f32>;
pub type MaxNet32 = MaxRectifierNet<f32>;
pub type Stack32 = LayerStack<f32>;
pub type Head32 = OutputHead<f32>;
