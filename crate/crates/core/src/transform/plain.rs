use super::{collapse, remove_top_layer, Construction, ReduceOptions, StepInfo, TransformReport};
use crate::error::{Error, Result};
use crate::net::{MaxRectifierNet, NetKind};
use crate::scalar::Scalar;

fn require_plain<T: Scalar>(net: &MaxRectifierNet<T>) -> Result<()> {
    match net.stack.kind {
        NetKind::Plain => Ok(()),
        other => Err(Error::NotPlain(other.name())),
    }
}

pub(super) fn step<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, StepInfo)> {
    require_plain(net)?;
    remove_top_layer(net, false, Construction::PlainBypass, opts)
}

/// Removes the top layer of a plain net. Layer `m - 1` gains `l_m` bypass units
/// with weights `W_m W_{m-1}` and biases `b_m + W_m b_{m-1}`; every head
/// becomes `2^{l_m}` heads.
pub fn reduce_depth_plain<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<MaxRectifierNet<T>> {
    step(net, opts).map(|(n, _)| n)
}

/// Collapses a plain net to one hidden layer of width `Σ l_i` with
/// `2^{Σ (i-1) l_i}` heads.
pub fn collapse_plain<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, TransformReport)> {
    require_plain(net)?;
    collapse(net, opts)
}
