//! Exact depth reduction.
//!
//! Removing the top hidden layer `m` works the same way in every family. For
//! each top unit `i` let `z0_i` be its pre-activation without the contribution
//! of layer `m - 1`, and `bypass_i = z0_i + row_i(W_{m,m-1})·z_{m-1}`, the same
//! quantity with the rectifier on layer `m - 1` skipped. Both are affine in the
//! activations of layers `0..=m-2`, so they can be computed by new units
//! appended to layer `m - 1`. When `z0` is a constant (plain nets, residual
//! nets of even depth) its units are not appended.
//!
//! Each head reads `Σ_i a_i·max(0, z_i)` from the removed layer. A
//! nonpositive weight moves onto the mirror pre-activation
//! `ẑ_i = bypass_i - row_i(W_{m,m-1})·max(0, z_{m-1})` through
//!
//! ```text
//! max(0, z_i) + max(0, ẑ_i) = max(0, z0_i) + max(0, bypass_i)
//! ```
//!
//! leaving fixed terms on the appended units. A nonnegative combination of
//! rectified affine forms is a maximum over all subset sums
//! ([`subset_expand`]), giving `2^{l_m}` heads per input head.
//!
//! The identity needs `row_i(W_{m,m-1})·z_{m-1}` to see pre-activations of a
//! single sign. It holds at every input when that row has at most one nonzero
//! entry (always the case when layer `m - 1` has one unit), and
//! [`StepInfo::mirror_exact`] records whether this is so. Otherwise it can
//! fail: with `W = [1 1]`, `z0 = 0` and `z_{m-1} = (1, -1)` the left side is 1
//! and the right side 0, and the reduced net differs from the original.

mod plain;
mod residual;
mod skip;

pub use plain::{collapse_plain, reduce_depth_plain};
pub use residual::{collapse_residual, reduce_depth_residual};
pub use skip::{collapse_skip, reduce_depth_skip, SkipReductionPlan};

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::complexity::{self, Parity};
use crate::error::{Error, Result};
use crate::matrix::{axpy, Matrix};
use crate::net::{LayerStack, MaxRectifierNet, NetKind, OutputHead};
use crate::scalar::Scalar;

/// Affine form `constant + on_input·x + Σ_k on_layer_k·max(0, z_k)` over the
/// features of a stack. Same layout as a head.
pub type FeatureLinear<T> = OutputHead<T>;

/// Largest subset matrix [`SubsetEnumerator::materialize`] will build.
pub const MAX_MATERIALIZED_BITS: usize = 16;

/// Default cap on the base-2 logarithm of the head count.
pub const DEFAULT_HEAD_CAP: usize = 20;

/// Rows of the `2^n x n` subset matrix: row `j` (0-based) contains column `i`
/// iff bit `i` of `j` is set. Row 0 is empty, the last row is full.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubsetEnumerator {
    pub n: usize,
}

impl SubsetEnumerator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }

    pub fn row_count(&self) -> usize {
        1usize << self.n
    }

    pub fn contains(&self, row: usize, col: usize) -> bool {
        (row >> col) & 1 == 1
    }

    pub fn materialize(&self) -> Result<Vec<Vec<u8>>> {
        if self.n > MAX_MATERIALIZED_BITS {
            return Err(Error::CapExceeded { exponent: self.n, cap: MAX_MATERIALIZED_BITS });
        }
        Ok((0..self.row_count())
            .map(|j| (0..self.n).map(|i| u8::from(self.contains(j, i))).collect())
            .collect())
    }
}

/// Expands `Σ_i a_i·max(0, f_i)` (with `a ⪰ 0`) into the `2^n` forms
/// `g_j = Σ_{i ∈ row j} a_i·f_i`, whose pointwise maximum equals the sum.
pub fn subset_expand<T: Scalar>(a: &[T], forms: &[FeatureLinear<T>]) -> Result<Vec<FeatureLinear<T>>> {
    subset_expand_capped(a, forms, DEFAULT_HEAD_CAP)
}

pub fn subset_expand_capped<T: Scalar>(
    a: &[T],
    forms: &[FeatureLinear<T>],
    cap: usize,
) -> Result<Vec<FeatureLinear<T>>> {
    if a.len() != forms.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: forms.len() });
    }
    if let Some((index, &v)) = a.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
        return Err(Error::NegativeCoefficient { index, value: v.to_f64().unwrap_or(f64::NAN) });
    }
    let n = a.len();
    if n > cap {
        return Err(Error::CapExceeded { exponent: n, cap });
    }
    if n >= usize::BITS as usize - 1 {
        return Err(Error::CapExceeded { exponent: n, cap: usize::BITS as usize - 2 });
    }
    let zero = match forms.first() {
        Some(f) => FeatureLinear {
            c: T::zero(),
            a0: vec![T::zero(); f.a0.len()],
            a: f.a.iter().map(|l| vec![T::zero(); l.len()]).collect(),
        },
        None => FeatureLinear { c: T::zero(), a0: Vec::new(), a: Vec::new() },
    };
    let mut out = Vec::with_capacity(1 << n);
    out.push(zero);
    // Row j with top bit t is row (j - 2^t) plus a_t·f_t, i.e. the ascending-order sum.
    for (t, (&coef, form)) in a.iter().zip(forms).enumerate() {
        for j in 0..(1usize << t) {
            let mut g = out[j].clone();
            g.add_scaled(coef, form);
            out.push(g);
        }
    }
    Ok(out)
}

/// Read-out weights split by sign: strictly positive entries in one class,
/// zero and negative entries in the other.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitCoefficients<T> {
    pub pos_idx: Vec<usize>,
    pub neg_idx: Vec<usize>,
    pub a_plus: Vec<T>,
    pub a_minus_abs: Vec<T>,
}

impl<T: Scalar> SplitCoefficients<T> {
    pub fn len(&self) -> usize {
        self.pos_idx.len() + self.neg_idx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The signed vector this split was taken from.
    pub fn reassemble(&self) -> Vec<T> {
        let mut out = vec![T::zero(); self.len()];
        for (&i, &v) in self.pos_idx.iter().zip(&self.a_plus) {
            out[i] = v;
        }
        for (&i, &v) in self.neg_idx.iter().zip(&self.a_minus_abs) {
            out[i] = -v;
        }
        out
    }

    pub fn is_positive(&self, i: usize) -> bool {
        self.pos_idx.binary_search(&i).is_ok()
    }
}

pub fn sign_split<T: Scalar>(a: &[T]) -> SplitCoefficients<T> {
    let mut s = SplitCoefficients {
        pos_idx: Vec::new(),
        neg_idx: Vec::new(),
        a_plus: Vec::new(),
        a_minus_abs: Vec::new(),
    };
    for (i, &v) in a.iter().enumerate() {
        if v > T::zero() {
            s.pos_idx.push(i);
            s.a_plus.push(v);
        } else {
            s.neg_idx.push(i);
            s.a_minus_abs.push(-v);
        }
    }
    s
}

/// The three pre-activations of one layer `z = W·max(0, p) + b` used by the
/// sign-split identity: `z`, its mirror `ẑ = -W·max(0, p) + W·p + b`, and the
/// bypass `z̄ = W·p + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct MirrorTerms<T> {
    w: Matrix<T>,
    b: Vec<T>,
}

pub fn mirror_identity_terms<T: Scalar>(w: &Matrix<T>, b: &[T]) -> Result<MirrorTerms<T>> {
    if b.len() != w.rows() {
        return Err(Error::DimensionMismatch { expected: w.rows(), got: b.len() });
    }
    Ok(MirrorTerms { w: w.clone(), b: b.to_vec() })
}

impl<T: Scalar> MirrorTerms<T> {
    /// `(z, ẑ, z̄)` at the previous layer's pre-activation `p`.
    pub fn at(&self, p: &[T]) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
        if p.len() != self.w.cols() {
            return Err(Error::DimensionMismatch { expected: self.w.cols(), got: p.len() });
        }
        let rect: Vec<T> = p.iter().map(|v| v.relu()).collect();
        let w_rect = self.w.mul_vec(&rect);
        let w_p = self.w.mul_vec(p);
        let z = w_rect.iter().zip(&self.b).map(|(&u, &b)| u + b).collect();
        let z_hat = w_rect.iter().zip(&w_p).zip(&self.b).map(|((&u, &v), &b)| -u + v + b).collect();
        let z_bar = w_p.iter().zip(&self.b).map(|(&v, &b)| v + b).collect();
        Ok((z, z_hat, z_bar))
    }

    /// Both sides of `max(0,z) + max(0,ẑ) = max(0,b) + max(0,z̄)`, elementwise.
    pub fn identity_sides(&self, p: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let (z, z_hat, z_bar) = self.at(p)?;
        let lhs = z.iter().zip(&z_hat).map(|(&u, &v)| u.relu() + v.relu()).collect();
        let rhs = self.b.iter().zip(&z_bar).map(|(&u, &v)| u.relu() + v.relu()).collect();
        Ok((lhs, rhs))
    }
}

/// A block of `l_m` units fed from layers `0..=m-2`, keyed by source layer.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitBlock<T> {
    pub bias: Vec<T>,
    pub from: BTreeMap<usize, Matrix<T>>,
}

impl<T: Scalar> UnitBlock<T> {
    pub fn is_constant(&self) -> bool {
        self.from.values().all(Matrix::is_zero)
    }

    /// Pre-activations given the input and the activations of the lower layers.
    pub fn eval(&self, x: &[T], activations: &[Vec<T>]) -> Vec<T> {
        let mut out = self.bias.clone();
        for (&j, m) in &self.from {
            let src = if j == 0 { x } else { &activations[j - 1] };
            m.mul_vec_add(src, &mut out);
        }
        out
    }
}

/// Units that replace the top layer of a stack: `z0` (top pre-activation
/// minus the layer `m-1` term) and the bypass `z0 + W_{m,m-1}·z_{m-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReductionPlan<T> {
    pub z0_block: UnitBlock<T>,
    pub bypass_block: UnitBlock<T>,
}

impl<T: Scalar> ReductionPlan<T> {
    pub fn for_stack(stack: &LayerStack<T>) -> Result<Self> {
        let m = stack.depth();
        if m < 2 {
            return Err(Error::DepthTooSmall(m));
        }
        let top_from_below = &stack.adjacent[m - 1];
        let mut z0 = UnitBlock { bias: stack.biases[m - 1].clone(), from: BTreeMap::new() };
        let mut bypass_bias = stack.biases[m - 1].clone();
        top_from_below.mul_vec_add(&stack.biases[m - 2], &mut bypass_bias);
        let mut bypass = UnitBlock { bias: bypass_bias, from: BTreeMap::new() };
        for j in 0..m - 1 {
            let direct = stack.incoming(m, j);
            let through = stack.incoming(m - 1, j).map(|b| top_from_below.mul_mat(b));
            if let Some(d) = direct {
                z0.from.insert(j, d.clone());
            }
            let combined = match (direct, through) {
                (Some(d), Some(t)) => Some(d.add(&t)),
                (Some(d), None) => Some(d.clone()),
                (None, t) => t,
            };
            if let Some(c) = combined {
                bypass.from.insert(j, c);
            }
        }
        Ok(Self { z0_block: z0, bypass_block: bypass })
    }
}

/// Options shared by the reducers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReduceOptions {
    /// Skip zero read-out weights when enumerating subsets.
    pub prune_zeros: bool,
    /// Remove bit-identical heads from the result.
    pub dedup: bool,
    /// Largest allowed base-2 logarithm of the resulting head count.
    pub head_cap: usize,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self { prune_zeros: false, dedup: false, head_cap: DEFAULT_HEAD_CAP }
    }
}

impl ReduceOptions {
    pub fn uncapped() -> Self {
        Self { head_cap: usize::MAX, ..Self::default() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// One bypass unit per removed unit; the remainder is a constant.
    PlainBypass,
    /// A `z0` unit and a bypass unit per removed unit.
    SkipBypass,
    /// Even residual depth: no skip into the top layer, bypass units only.
    ResidualEven,
    /// Odd residual depth: the top skip block moves into `z0` units.
    ResidualOdd,
}

/// One removed layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StepInfo {
    pub depth_before: usize,
    pub construction: Construction,
    /// Every top unit read through a negative weight has at most one nonzero
    /// weight from layer `m - 1`, so the mirror identity holds at every input
    /// and the step is exact.
    pub mirror_exact: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<Parity>,
    pub removed_width: usize,
    pub appended_units: usize,
    /// Number of read-out weights the subset expansion ran over.
    pub enumerated_bits: usize,
    pub widths_after: Vec<usize>,
    pub heads_after: usize,
}

/// Summary of a sequence of reduction steps.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransformReport {
    pub family: NetKind,
    pub steps: usize,
    /// Widths before the first step and after each step.
    pub widths_per_step: Vec<Vec<usize>>,
    /// Base-2 logarithm of the head multiplication, summed over steps.
    pub head_exponent: usize,
    pub final_width: usize,
    pub head_count: usize,
    /// Every step was exact by construction.
    pub mirror_exact: bool,
    pub step_details: Vec<StepInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counts: Option<complexity::CountComparison>,
}

/// Removes the top layer of `net`. `with_z0` appends the `z0` units; without
/// it the top layer may only be fed by layer `m - 1`.
pub(crate) fn remove_top_layer<T: Scalar>(
    net: &MaxRectifierNet<T>,
    with_z0: bool,
    construction: Construction,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, StepInfo)> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNet(violations));
    }
    let stack = &net.stack;
    let m = stack.depth();
    if m < 2 {
        return Err(Error::DepthTooSmall(m));
    }
    let plan = ReductionPlan::for_stack(stack)?;
    assert!(
        with_z0 || plan.z0_block.from.is_empty(),
        "top layer receives skip blocks; its z0 units cannot be folded into a constant"
    );
    let l_top = stack.width(m);
    let l_below = stack.width(m - 1);
    let appended = if with_z0 { 2 * l_top } else { l_top };

    // New stack: layer m-1 gains [z0 units;] bypass units.
    let mut widths: Vec<usize> = stack.widths[..m - 1].to_vec();
    widths[m - 2] = l_below + appended;
    let width = |k: usize| if k == 0 { stack.input_dim } else { widths[k - 1] };
    let mut adjacent: Vec<Matrix<T>> = stack.adjacent[..m - 1].to_vec();
    let mut biases: Vec<Vec<T>> = stack.biases[..m - 1].to_vec();
    let mut skips: BTreeMap<(usize, usize), Matrix<T>> =
        stack.skips.iter().filter(|(&(to, _), _)| to < m - 1).map(|(&k, v)| (k, v.clone())).collect();

    let stacked_block = |j: usize| -> Option<Matrix<T>> {
        let old = stack.incoming(m - 1, j);
        let z0 = plan.z0_block.from.get(&j).filter(|_| with_z0);
        let by = plan.bypass_block.from.get(&j);
        if old.is_none() && z0.is_none() && by.is_none() {
            return None;
        }
        let rows_of = |b: Option<&Matrix<T>>, rows: usize| b.cloned().unwrap_or_else(|| Matrix::zeros(rows, width(j)));
        let mut parts = vec![rows_of(old, l_below)];
        if with_z0 {
            parts.push(rows_of(z0, l_top));
        }
        parts.push(rows_of(by, l_top));
        Some(Matrix::vstack(&parts.iter().collect::<Vec<_>>()))
    };
    for j in 0..m - 1 {
        if let Some(block) = stacked_block(j) {
            if j + 2 == m {
                adjacent[m - 2] = block;
            } else {
                skips.insert((m - 1, j), block);
            }
        }
    }
    let bias = &mut biases[m - 2];
    if with_z0 {
        bias.extend_from_slice(&plan.z0_block.bias);
    }
    bias.extend_from_slice(&plan.bypass_block.bias);
    let new_stack = LayerStack {
        kind: stack.kind,
        input_dim: stack.input_dim,
        widths: widths.clone(),
        adjacent,
        biases,
        skips,
    };

    // Per removed unit i, the forms z_i and ẑ_i over the new stack's features.
    let blank = OutputHead::zeros(new_stack.input_dim, &new_stack.widths);
    let top_from_below = &stack.adjacent[m - 1];
    let place = |form: &mut FeatureLinear<T>, j: usize, coef: &[T]| {
        if j == 0 {
            axpy(T::one(), coef, &mut form.a0);
        } else {
            axpy(T::one(), coef, &mut form.a[j - 1][..coef.len()]);
        }
    };
    let direct_form = |i: usize| {
        let mut f = blank.clone();
        f.c = plan.z0_block.bias[i];
        for (&j, blk) in &plan.z0_block.from {
            place(&mut f, j, blk.row(i));
        }
        place(&mut f, m - 1, top_from_below.row(i));
        f
    };
    let mirror_form = |i: usize| {
        let mut f = blank.clone();
        f.c = plan.bypass_block.bias[i];
        for (&j, blk) in &plan.bypass_block.from {
            place(&mut f, j, blk.row(i));
        }
        let neg: Vec<T> = top_from_below.row(i).iter().map(|&v| -v).collect();
        place(&mut f, m - 1, &neg);
        f
    };

    let z0_offset = l_below;
    let bypass_offset = l_below + if with_z0 { l_top } else { 0 };
    let expand_head = |head: &OutputHead<T>| -> Result<(Vec<OutputHead<T>>, usize)> {
        let top = &head.a[m - 1];
        let split = sign_split(top);
        let mut base = blank.clone();
        base.c = head.c;
        base.a0.copy_from_slice(&head.a0);
        for k in 0..m - 2 {
            base.a[k].copy_from_slice(&head.a[k]);
        }
        base.a[m - 2][..l_below].copy_from_slice(&head.a[m - 2]);
        for (&i, &w) in split.neg_idx.iter().zip(&split.a_minus_abs) {
            if with_z0 {
                base.a[m - 2][z0_offset + i] = -w;
            } else {
                base.c -= w * plan.z0_block.bias[i].relu();
            }
            base.a[m - 2][bypass_offset + i] = -w;
        }
        let mut coefs = Vec::with_capacity(l_top);
        let mut forms = Vec::with_capacity(l_top);
        for (i, &v) in top.iter().enumerate() {
            if opts.prune_zeros && v.is_zero() {
                continue;
            }
            if split.is_positive(i) {
                coefs.push(v);
                forms.push(direct_form(i));
            } else {
                coefs.push(-v);
                forms.push(mirror_form(i));
            }
        }
        let bits = coefs.len();
        let expanded = subset_expand_capped(&coefs, &forms, usize::MAX)?;
        let heads = expanded
            .into_iter()
            .map(|g| {
                let mut h = base.clone();
                h.add_scaled(T::one(), &g);
                h
            })
            .collect();
        Ok((heads, bits))
    };

    let bits_bound = if opts.prune_zeros {
        net.heads.iter().map(|h| h.a[m - 1].iter().filter(|v| !v.is_zero()).count()).max().unwrap_or(0)
    } else {
        l_top
    };
    let exponent = net.head_exponent() + bits_bound;
    if exponent > opts.head_cap {
        return Err(Error::CapExceeded { exponent, cap: opts.head_cap });
    }

    let single_source = |i: usize| top_from_below.row(i).iter().filter(|v| !v.is_zero()).count() <= 1;
    let mirror_exact = net
        .heads
        .iter()
        .all(|h| h.a[m - 1].iter().enumerate().all(|(i, &v)| v >= T::zero() || single_source(i)));

    let expanded: Vec<(Vec<OutputHead<T>>, usize)> =
        net.heads.par_iter().map(expand_head).collect::<Result<_>>()?;
    let enumerated_bits = expanded.iter().map(|(_, b)| *b).max().unwrap_or(0);
    let heads: Vec<OutputHead<T>> = expanded.into_iter().flat_map(|(h, _)| h).collect();
    let mut out = MaxRectifierNet { stack: new_stack, heads };
    if opts.dedup {
        out.dedup_heads();
    }
    let info = StepInfo {
        depth_before: m,
        construction,
        mirror_exact,
        parity: None,
        removed_width: l_top,
        appended_units: appended,
        enumerated_bits,
        widths_after: widths,
        heads_after: out.heads.len(),
    };
    Ok((out, info))
}

/// One reduction step using the reducer for the net's own family.
pub fn reduce_step<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, StepInfo)> {
    match net.stack.kind {
        NetKind::Plain => plain::step(net, opts),
        NetKind::FullSkip => skip::step(net, opts),
        NetKind::Residual => residual::step(net, opts),
    }
}

/// Predicted (width, head exponent) after a full collapse, for the net's family.
pub fn predicted_counts(kind: NetKind, widths: &[usize]) -> (usize, usize) {
    match kind {
        NetKind::Plain => complexity::counts_plain(widths),
        NetKind::FullSkip => complexity::counts_skip(widths),
        NetKind::Residual => {
            let r = complexity::counts_residual(widths);
            (r.recurrence.width, r.recurrence.exponent)
        }
    }
}

/// Reduces until one hidden layer remains.
///
/// Refuses with [`Error::CapExceeded`] before doing any work when the
/// predicted head exponent exceeds `opts.head_cap`.
pub fn collapse<T: Scalar>(
    net: &MaxRectifierNet<T>,
    opts: &ReduceOptions,
) -> Result<(MaxRectifierNet<T>, TransformReport)> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNet(violations));
    }
    let kind = net.stack.kind;
    let (pred_width, pred_exp) = predicted_counts(kind, &net.stack.widths);
    let exponent = pred_exp + net.head_exponent();
    if exponent > opts.head_cap {
        return Err(Error::CapExceeded { exponent, cap: opts.head_cap });
    }
    let step_opts = ReduceOptions { head_cap: usize::MAX, ..*opts };
    let mut current = net.clone();
    let mut widths_per_step = vec![current.stack.widths.clone()];
    let mut details = Vec::new();
    while current.stack.depth() > 1 {
        let (next, info) = reduce_step(&current, &step_opts)?;
        widths_per_step.push(next.stack.widths.clone());
        details.push(info);
        current = next;
    }
    let head_exponent = details.iter().map(|d| d.enumerated_bits).sum();
    let final_width = current.stack.widths[0];
    let counts = complexity::CountComparison::new(
        kind,
        &net.stack.widths,
        (pred_width, pred_exp),
        (final_width, head_exponent),
    );
    let report = TransformReport {
        family: kind,
        steps: details.len(),
        widths_per_step,
        head_exponent,
        final_width,
        head_count: current.heads.len(),
        mirror_exact: details.iter().all(|d| d.mirror_exact),
        step_details: details,
        counts: Some(counts),
    };
    Ok((current, report))
}

/// Collapses the hidden stack alone and returns the realized final width and
/// the sum of removed widths, which is the head exponent of an unpruned
/// collapse. Heads are not materialized, so this works far beyond any head cap.
pub fn collapse_structure<T: Scalar>(stack: &LayerStack<T>) -> Result<(usize, usize)> {
    let head = OutputHead::zeros(stack.input_dim, &stack.widths);
    let mut current = MaxRectifierNet { stack: stack.clone(), heads: vec![head] };
    let opts = ReduceOptions { prune_zeros: true, ..ReduceOptions::uncapped() };
    let mut exponent = 0;
    while current.stack.depth() > 1 {
        let (next, info) = reduce_step(&current, &opts)?;
        exponent += info.removed_width;
        current = next;
    }
    Ok((current.stack.widths[0], exponent))
}

/// Report for a single step, in the same shape as a collapse report.
pub fn step_report(kind: NetKind, before: &[usize], info: StepInfo) -> TransformReport {
    TransformReport {
        family: kind,
        steps: 1,
        widths_per_step: vec![before.to_vec(), info.widths_after.clone()],
        head_exponent: info.enumerated_bits,
        final_width: info.widths_after.iter().sum(),
        head_count: info.heads_after,
        mirror_exact: info.mirror_exact,
        step_details: vec![info],
        counts: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(c: f64, slope: f64) -> FeatureLinear<f64> {
        FeatureLinear { c, a0: vec![slope], a: vec![] }
    }

    #[test]
    fn subset_rows() {
        assert_eq!(SubsetEnumerator::new(1).materialize().unwrap(), vec![vec![0], vec![1]]);
        let m2 = SubsetEnumerator::new(2).materialize().unwrap();
        assert_eq!(m2, vec![vec![0, 0], vec![1, 0], vec![0, 1], vec![1, 1]]);
        assert!(matches!(
            SubsetEnumerator::new(17).materialize(),
            Err(Error::CapExceeded { exponent: 17, cap: 16 })
        ));
    }

    #[test]
    fn subset_recursion() {
        // M_k = [[M_{k-1}, 0], [M_{k-1}, 1]]
        for k in 2..=6 {
            let prev = SubsetEnumerator::new(k - 1).materialize().unwrap();
            let cur = SubsetEnumerator::new(k).materialize().unwrap();
            let expected: Vec<Vec<u8>> = [0u8, 1]
                .iter()
                .flat_map(|&bit| prev.iter().map(move |r| r.iter().copied().chain([bit]).collect()))
                .collect();
            assert_eq!(cur, expected);
            assert!(cur[0].iter().all(|&b| b == 0));
            assert!(cur.last().unwrap().iter().all(|&b| b == 1));
        }
    }

    #[test]
    fn expand_single() {
        let g = subset_expand(&[2.0], &[affine(0.0, 1.0)]).unwrap();
        assert_eq!(g, vec![affine(0.0, 0.0), affine(0.0, 2.0)]);
        let best = g.iter().map(|f| f.eval(&[3.0], &[])).fold(f64::MIN, f64::max);
        assert_eq!(best, 6.0);
    }

    #[test]
    fn expand_absolute_value() {
        let g = subset_expand(&[1.0, 1.0], &[affine(0.0, 1.0), affine(0.0, -1.0)]).unwrap();
        let slopes: Vec<f64> = g.iter().map(|f| f.a0[0]).collect();
        assert_eq!(slopes, vec![0.0, 1.0, -1.0, 0.0]);
        for x in [-2.5, 0.0, 4.0] {
            let best = g.iter().map(|f| f.eval(&[x], &[])).fold(f64::MIN, f64::max);
            assert_eq!(best, f64::abs(x));
        }
    }

    #[test]
    fn expand_rejects_negative() {
        assert!(matches!(
            subset_expand(&[1.0, -0.5], &[affine(0.0, 1.0), affine(0.0, 1.0)]),
            Err(Error::NegativeCoefficient { index: 1, .. })
        ));
    }

    #[test]
    fn split_cases() {
        let s = sign_split(&[1.0, -2.0, 0.0]);
        assert_eq!(s.pos_idx, vec![0]);
        assert_eq!(s.neg_idx, vec![1, 2]);
        assert_eq!(s.a_plus, vec![1.0]);
        assert_eq!(s.a_minus_abs, vec![2.0, 0.0]);
        assert_eq!(s.reassemble(), vec![1.0, -2.0, 0.0]);

        assert!(sign_split(&[0.5, 3.0]).neg_idx.is_empty());

        let z = sign_split(&[0.0, 0.0]);
        assert!(z.pos_idx.is_empty());
        assert_eq!(z.a_minus_abs, vec![0.0, 0.0]);
    }

    #[test]
    fn mirror_scalar() {
        let t = mirror_identity_terms(&Matrix::from_rows(&[vec![1.0]]).unwrap(), &[0.0]).unwrap();
        let (z, z_hat, z_bar) = t.at(&[-3.0]).unwrap();
        assert_eq!((z[0], z_hat[0], z_bar[0]), (0.0, -3.0, -3.0));
        assert_eq!(t.identity_sides(&[-3.0]).unwrap(), (vec![0.0], vec![0.0]));
        let (z, z_hat, z_bar) = t.at(&[5.0]).unwrap();
        assert_eq!((z[0], z_hat[0], z_bar[0]), (5.0, 0.0, 5.0));
        assert_eq!(t.identity_sides(&[5.0]).unwrap(), (vec![5.0], vec![5.0]));
    }

    #[test]
    fn mirror_shape_errors() {
        let w = Matrix::<f64>::zeros(2, 3);
        assert!(matches!(mirror_identity_terms(&w, &[0.0]), Err(Error::DimensionMismatch { .. })));
        let t = mirror_identity_terms(&w, &[0.0, 0.0]).unwrap();
        assert!(t.at(&[1.0]).is_err());
    }
}
