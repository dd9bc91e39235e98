use super::{collapse, remove_top_layer, Construction, ReduceOptions, ReductionPlan, StepInfo, TransformReport};
use crate::error::{Error, Result};
use crate::net::{MaxRectifierNet, NetKind};
use crate::scalar::Scalar;

/// The `z0` and bypass unit blocks appended when the top layer of a
/// full-skip net is removed.
pub type SkipReductionPlan<T> = ReductionPlan<T>;

fn require_skip<T: Scalar>(net: &MaxRectifierNet<T>) -> Result<()> {
    match net.stack.kind {
        NetKind::FullSkip => Ok(()),
        other => Err(Error::NotFullSkip(other.name())),
    }
}

pub(super) fn step<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, StepInfo)> {
    require_skip(net)?;
    remove_top_layer(net, true, Construction::SkipBypass, opts)
}

/// Removes the top layer of a full-skip net; layer `m - 1` gains `2 l_m` units.
pub fn reduce_depth_skip<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<MaxRectifierNet<T>> {
    step(net, opts).map(|(n, _)| n)
}

/// Collapses a full-skip net to width `Σ 2^{i-1} l_i` with `2^{Σ (2^{i-1}-1) l_i}` heads.
pub fn collapse_skip<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, TransformReport)> {
    require_skip(net)?;
    collapse(net, opts)
}
