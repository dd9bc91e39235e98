use super::{collapse, remove_top_layer, Construction, ReduceOptions, StepInfo, TransformReport};
use crate::complexity::Parity;
use crate::error::{Error, Result};
use crate::net::{MaxRectifierNet, NetKind};
use crate::scalar::Scalar;

fn require_residual<T: Scalar>(net: &MaxRectifierNet<T>) -> Result<()> {
    match net.stack.kind {
        NetKind::Residual => Ok(()),
        other => Err(Error::NotResidual(other.name())),
    }
}

// Even top layers have no skip block, so their z0 is the bias alone. Odd top
// layers move the skip block into z0 units; the result has no skip into the
// new (even) top layer and is again a valid residual stack.
pub(super) fn step<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, StepInfo)> {
    require_residual(net)?;
    let m = net.stack.depth();
    let parity = Parity::of(m);
    let (with_z0, construction) = match parity {
        Parity::Even => (false, Construction::ResidualEven),
        Parity::Odd => (true, Construction::ResidualOdd),
    };
    let (out, mut info) = remove_top_layer(net, with_z0, construction, opts)?;
    info.parity = Some(parity);
    Ok((out, info))
}

/// Removes the top layer of a residual net. Even depth appends `l_m` units,
/// odd depth `2 l_m` (`[A_m-block; bypass-block]` after the old units).
pub fn reduce_depth_residual<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<MaxRectifierNet<T>> {
    step(net, opts).map(|(n, _)| n)
}

/// Collapses a residual net to one hidden layer; sizes follow the residual
/// width recurrence.
pub fn collapse_residual<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, TransformReport)> {
    require_residual(net)?;
    collapse(net, opts)
}
