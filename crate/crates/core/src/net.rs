//! Rectifier networks in three connectivity families and their max-rectifier
//! counterparts, with exact forward evaluation.
//!
//! Layers are numbered from 1; layer 0 is the raw input. Every hidden layer
//! `k` receives the adjacent block `W_k` from layer `k - 1` and, depending on
//! the family, skip blocks from earlier layers:
//!
//! * [`NetKind::Plain`]: no skip blocks.
//! * [`NetKind::FullSkip`]: a block from any layer `j < k - 1`, including the input.
//! * [`NetKind::Residual`]: a block from layer `k - 2` into odd layers `k >= 3` only.
//!
//! A head reads out `c + a0·x + Σ_k a_k·max(0, z_k)`; a max-rectifier net shares
//! one stack among several heads and outputs their pointwise maximum.

use std::collections::BTreeMap;
use std::fmt;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{dot, Matrix};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NetKind {
    Plain,
    FullSkip,
    Residual,
}

impl NetKind {
    pub const ALL: [NetKind; 3] = [NetKind::Plain, NetKind::FullSkip, NetKind::Residual];

    pub fn name(self) -> &'static str {
        match self {
            NetKind::Plain => "plain",
            NetKind::FullSkip => "full_skip",
            NetKind::Residual => "residual",
        }
    }

    /// Whether this family allows a skip block from layer `from` into layer `to`.
    pub fn allows_skip(self, to: usize, from: usize) -> bool {
        match self {
            NetKind::Plain => false,
            NetKind::FullSkip => to >= 2 && from + 1 < to,
            NetKind::Residual => to >= 3 && to % 2 == 1 && from + 2 == to,
        }
    }
}

impl fmt::Display for NetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for NetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(NetKind::Plain),
            "full_skip" | "full-skip" | "skip" => Ok(NetKind::FullSkip),
            "residual" => Ok(NetKind::Residual),
            other => Err(Error::Format(format!("unknown net kind `{other}`"))),
        }
    }
}

/// One broken structural invariant, naming the offending block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoLayers,
    ZeroInputDim,
    ZeroWidth { layer: usize },
    BlockCount { what: &'static str, expected: usize, found: usize },
    BlockShape { block: String, expected: (usize, usize), found: (usize, usize) },
    BiasLength { layer: usize, expected: usize, found: usize },
    NonFinite { block: String },
    SkipOnPlain { to: usize, from: usize },
    ResidualEvenSkip { to: usize, from: usize },
    ResidualSpan { to: usize, from: usize },
    FullSkipSpan { to: usize, from: usize },
    NoHeads,
    HeadLength { head: usize, block: String, expected: usize, found: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoLayers => write!(f, "stack has no hidden layers"),
            Violation::ZeroInputDim => write!(f, "input dimension is zero"),
            Violation::ZeroWidth { layer } => write!(f, "layer {layer} has zero width"),
            Violation::BlockCount { what, expected, found } => {
                write!(f, "expected {expected} {what}, found {found}")
            }
            Violation::BlockShape { block, expected, found } => write!(
                f,
                "block {block} has shape {}x{}, expected {}x{}",
                found.0, found.1, expected.0, expected.1
            ),
            Violation::BiasLength { layer, expected, found } => {
                write!(f, "bias b{layer} has length {found}, expected {expected}")
            }
            Violation::NonFinite { block } => write!(f, "block {block} has a non-finite entry"),
            Violation::SkipOnPlain { to, from } => {
                write!(f, "skip block on Plain kind: ({to}, {from})")
            }
            Violation::ResidualEvenSkip { to, from } => write!(
                f,
                "residual skip block ({to}, {from}) targets even layer {to}: A_k must vanish for even k"
            ),
            Violation::ResidualSpan { to, from } => write!(
                f,
                "residual skip block ({to}, {from}) must connect layer k-2 to an odd layer k >= 3"
            ),
            Violation::FullSkipSpan { to, from } => write!(
                f,
                "skip block ({to}, {from}) must come from a non-adjacent earlier layer of the stack"
            ),
            Violation::NoHeads => write!(f, "max-rectifier net has no heads"),
            Violation::HeadLength { head, block, expected, found } => {
                write!(f, "head {head} block {block} has length {found}, expected {expected}")
            }
        }
    }
}

/// Hidden-layer parameters shared by every head of a net.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerStack<T> {
    pub kind: NetKind,
    pub input_dim: usize,
    pub widths: Vec<usize>,
    /// `adjacent[k - 1]` is `W_k`, shape `l_k x l_{k-1}`.
    pub adjacent: Vec<Matrix<T>>,
    /// `biases[k - 1]` is `b_k`.
    pub biases: Vec<Vec<T>>,
    /// Keyed by `(to, from)`; shape `l_to x l_from`.
    pub skips: BTreeMap<(usize, usize), Matrix<T>>,
}

impl<T: Scalar> LayerStack<T> {
    pub fn depth(&self) -> usize {
        self.widths.len()
    }

    /// Width of layer `k`, where layer 0 is the input.
    pub fn width(&self, k: usize) -> usize {
        if k == 0 {
            self.input_dim
        } else {
            self.widths[k - 1]
        }
    }

    pub fn total_width(&self) -> usize {
        self.widths.iter().sum()
    }

    /// The block feeding layer `to` from layer `from`, if any.
    pub fn incoming(&self, to: usize, from: usize) -> Option<&Matrix<T>> {
        if from + 1 == to {
            self.adjacent.get(to - 1)
        } else {
            self.skips.get(&(to, from))
        }
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.depth();
        if m == 0 {
            out.push(Violation::NoLayers);
        }
        if self.input_dim == 0 {
            out.push(Violation::ZeroInputDim);
        }
        for (i, &w) in self.widths.iter().enumerate() {
            if w == 0 {
                out.push(Violation::ZeroWidth { layer: i + 1 });
            }
        }
        if self.adjacent.len() != m {
            out.push(Violation::BlockCount {
                what: "adjacent blocks",
                expected: m,
                found: self.adjacent.len(),
            });
        }
        if self.biases.len() != m {
            out.push(Violation::BlockCount { what: "biases", expected: m, found: self.biases.len() });
        }
        for (i, w) in self.adjacent.iter().enumerate().take(m) {
            let k = i + 1;
            let expected = (self.width(k), self.width(k - 1));
            if w.shape() != expected {
                out.push(Violation::BlockShape { block: format!("W{k}"), expected, found: w.shape() });
            }
            if !all_finite(w.to_rows().iter().flatten()) {
                out.push(Violation::NonFinite { block: format!("W{k}") });
            }
        }
        for (i, b) in self.biases.iter().enumerate().take(m) {
            let k = i + 1;
            if b.len() != self.width(k) {
                out.push(Violation::BiasLength { layer: k, expected: self.width(k), found: b.len() });
            }
            if !all_finite(b) {
                out.push(Violation::NonFinite { block: format!("b{k}") });
            }
        }
        for (&(to, from), block) in &self.skips {
            let shape_ok = to >= 1 && to <= m && from < to;
            match self.kind {
                NetKind::Plain => out.push(Violation::SkipOnPlain { to, from }),
                NetKind::FullSkip if !shape_ok || !self.kind.allows_skip(to, from) => {
                    out.push(Violation::FullSkipSpan { to, from })
                }
                NetKind::Residual if to % 2 == 0 => out.push(Violation::ResidualEvenSkip { to, from }),
                NetKind::Residual if !shape_ok || !self.kind.allows_skip(to, from) => {
                    out.push(Violation::ResidualSpan { to, from })
                }
                _ => {
                    let expected = (self.width(to), self.width(from));
                    if block.shape() != expected {
                        out.push(Violation::BlockShape {
                            block: format!("skip({to},{from})"),
                            expected,
                            found: block.shape(),
                        });
                    }
                    if !all_finite(block.to_rows().iter().flatten()) {
                        out.push(Violation::NonFinite { block: format!("skip({to},{from})") });
                    }
                }
            }
        }
        out
    }

    /// Pre-activations and activations of every hidden layer. Assumes a valid stack.
    pub fn forward(&self, x: &[T]) -> (Vec<Vec<T>>, Vec<Vec<T>>) {
        let m = self.depth();
        let mut pre: Vec<Vec<T>> = Vec::with_capacity(m);
        let mut act: Vec<Vec<T>> = Vec::with_capacity(m);
        for k in 1..=m {
            let mut z = self.biases[k - 1].clone();
            let below = if k == 1 { x } else { &act[k - 2] };
            self.adjacent[k - 1].mul_vec_add(below, &mut z);
            for (&(_, from), block) in self.skips.range((k, 0)..(k, k)) {
                let src = if from == 0 { x } else { &act[from - 1] };
                block.mul_vec_add(src, &mut z);
            }
            act.push(z.iter().map(|v| v.relu()).collect());
            pre.push(z);
        }
        (pre, act)
    }
}

fn all_finite<'a, T: Scalar>(values: impl IntoIterator<Item = &'a T>) -> bool {
    values.into_iter().all(|v| v.is_finite())
}

/// Affine read-out over the input and all hidden activations.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputHead<T> {
    pub c: T,
    pub a0: Vec<T>,
    /// `a[k - 1]` weighs `max(0, z_k)`.
    pub a: Vec<Vec<T>>,
}

impl<T: Scalar> OutputHead<T> {
    pub fn zeros(input_dim: usize, widths: &[usize]) -> Self {
        Self {
            c: T::zero(),
            a0: vec![T::zero(); input_dim],
            a: widths.iter().map(|&w| vec![T::zero(); w]).collect(),
        }
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            c: self.c * s,
            a0: self.a0.iter().map(|&v| v * s).collect(),
            a: self.a.iter().map(|blk| blk.iter().map(|&v| v * s).collect()).collect(),
        }
    }

    /// `self += s * other`; shapes must agree.
    pub fn add_scaled(&mut self, s: T, other: &Self) {
        self.c += s * other.c;
        crate::matrix::axpy(s, &other.a0, &mut self.a0);
        for (mine, theirs) in self.a.iter_mut().zip(&other.a) {
            crate::matrix::axpy(s, theirs, mine);
        }
    }

    /// Value given the input and the activations `max(0, z_k)` of each layer.
    pub fn eval(&self, x: &[T], activations: &[Vec<T>]) -> T {
        let mut out = self.c + dot(&self.a0, x);
        for (a, h) in self.a.iter().zip(activations) {
            out += dot(a, h);
        }
        out
    }

    pub fn violations(&self, index: usize, input_dim: usize, widths: &[usize]) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.a0.len() != input_dim {
            out.push(Violation::HeadLength {
                head: index,
                block: "a0".into(),
                expected: input_dim,
                found: self.a0.len(),
            });
        }
        if self.a.len() != widths.len() {
            out.push(Violation::HeadLength {
                head: index,
                block: "a (layer count)".into(),
                expected: widths.len(),
                found: self.a.len(),
            });
        }
        for (k, (a, &w)) in self.a.iter().zip(widths).enumerate() {
            if a.len() != w {
                out.push(Violation::HeadLength {
                    head: index,
                    block: format!("a{}", k + 1),
                    expected: w,
                    found: a.len(),
                });
            }
        }
        let finite = self.c.is_finite() && all_finite(&self.a0) && self.a.iter().all(|a| all_finite(a));
        if !finite {
            out.push(Violation::NonFinite { block: format!("head {index}") });
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RectifierNet<T> {
    pub stack: LayerStack<T>,
    pub head: OutputHead<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxRectifierNet<T> {
    pub stack: LayerStack<T>,
    pub heads: Vec<OutputHead<T>>,
}

impl<T: Scalar> RectifierNet<T> {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.stack.violations();
        out.extend(self.head.violations(0, self.stack.input_dim, &self.stack.widths));
        out
    }

    pub fn evaluator(&self) -> Result<Evaluator<'_, T>> {
        Evaluator::new(&self.stack, std::slice::from_ref(&self.head))
    }
}

impl<T: Scalar> MaxRectifierNet<T> {
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = self.stack.violations();
        if self.heads.is_empty() {
            out.push(Violation::NoHeads);
        }
        for (i, h) in self.heads.iter().enumerate() {
            out.extend(h.violations(i, self.stack.input_dim, &self.stack.widths));
        }
        out
    }

    pub fn evaluator(&self) -> Result<Evaluator<'_, T>> {
        Evaluator::new(&self.stack, &self.heads)
    }

    /// Base-2 logarithm of the head count, rounded up.
    pub fn head_exponent(&self) -> usize {
        self.heads.len().next_power_of_two().trailing_zeros() as usize
    }

    /// Drops bit-identical heads, keeping the first occurrence of each.
    pub fn dedup_heads(&mut self) {
        let mut seen = std::collections::HashSet::new();
        self.heads.retain(|h| seen.insert(head_key(h)));
    }
}

fn head_key<T: Scalar>(h: &OutputHead<T>) -> Vec<u64> {
    std::iter::once(&h.c)
        .chain(&h.a0)
        .chain(h.a.iter().flatten())
        // -0.0 and 0.0 describe the same head
        .map(|v| {
            let v = v.to_f64().unwrap_or(f64::NAN);
            if v == 0.0 {
                0
            } else {
                v.to_bits()
            }
        })
        .collect()
}

impl<T> From<RectifierNet<T>> for MaxRectifierNet<T> {
    fn from(net: RectifierNet<T>) -> Self {
        Self { stack: net.stack, heads: vec![net.head] }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalTrace<T> {
    pub preactivations: Vec<Vec<T>>,
    pub activations: Vec<Vec<T>>,
    pub output: T,
}

pub fn eval_rectifier<T: Scalar>(net: &RectifierNet<T>, x: &[T]) -> Result<EvalTrace<T>> {
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNet(violations));
    }
    check_dim(net.stack.input_dim, x)?;
    let (preactivations, activations) = net.stack.forward(x);
    let output = net.head.eval(x, &activations);
    Ok(EvalTrace { preactivations, activations, output })
}

pub fn eval_max_rectifier<T: Scalar>(net: &MaxRectifierNet<T>, x: &[T]) -> Result<T> {
    if net.heads.is_empty() {
        return Err(Error::EmptyHeads);
    }
    let violations = net.validate();
    if !violations.is_empty() {
        return Err(Error::InvalidNet(violations));
    }
    check_dim(net.stack.input_dim, x)?;
    let (_, activations) = net.stack.forward(x);
    let mut best = T::neg_infinity();
    for head in &net.heads {
        let v = head.eval(x, &activations);
        if v > best {
            best = v;
        }
    }
    Ok(best)
}

fn check_dim<T>(expected: usize, x: &[T]) -> Result<()> {
    if x.len() == expected {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got: x.len() })
    }
}

/// Something with a scalar output that can be sampled pointwise.
pub trait Evaluate<T>: Sync {
    fn input_dim(&self) -> usize;

    /// Panics if `x.len() != self.input_dim()`.
    fn evaluate(&self, x: &[T]) -> T;
}

/// A validated net prepared for repeated evaluation: heads are packed into one
/// coefficient matrix over the feature vector `[x; max(0, z_1); ..; max(0, z_m)]`.
#[derive(Clone, Debug)]
pub struct Evaluator<'a, T> {
    stack: &'a LayerStack<T>,
    constants: Vec<T>,
    coefficients: Matrix<T>,
}

impl<'a, T: Scalar> Evaluator<'a, T> {
    pub fn new(stack: &'a LayerStack<T>, heads: &[OutputHead<T>]) -> Result<Self> {
        let mut violations = stack.violations();
        if heads.is_empty() {
            violations.push(Violation::NoHeads);
        }
        for (i, h) in heads.iter().enumerate() {
            violations.extend(h.violations(i, stack.input_dim, &stack.widths));
        }
        if !violations.is_empty() {
            return Err(Error::InvalidNet(violations));
        }
        let dim = stack.input_dim + stack.total_width();
        let coefficients = Matrix::from_fn(heads.len(), dim, |r, c| {
            let h = &heads[r];
            if c < stack.input_dim {
                return h.a0[c];
            }
            let mut c = c - stack.input_dim;
            for blk in &h.a {
                if c < blk.len() {
                    return blk[c];
                }
                c -= blk.len();
            }
            unreachable!("feature index within total width")
        });
        Ok(Self { stack, constants: heads.iter().map(|h| h.c).collect(), coefficients })
    }

    pub fn head_count(&self) -> usize {
        self.constants.len()
    }

    /// Every head's value at `x`.
    pub fn head_values(&self, x: &[T]) -> Vec<T> {
        let features = self.features(x);
        let mut out = self.constants.clone();
        self.coefficients.mul_vec_add(&features, &mut out);
        out
    }

    pub fn try_eval(&self, x: &[T]) -> Result<T> {
        check_dim(self.stack.input_dim, x)?;
        Ok(self.evaluate(x))
    }

    fn features(&self, x: &[T]) -> Vec<T> {
        let (_, act) = self.stack.forward(x);
        let mut f = Vec::with_capacity(self.coefficients.cols());
        f.extend_from_slice(x);
        for a in act {
            f.extend(a);
        }
        f
    }
}

impl<T: Scalar> Evaluate<T> for Evaluator<'_, T> {
    fn input_dim(&self) -> usize {
        self.stack.input_dim
    }

    fn evaluate(&self, x: &[T]) -> T {
        let features = self.features(x);
        let mut best = T::neg_infinity();
        for (r, &c) in self.constants.iter().enumerate() {
            let v = c + dot(self.coefficients.row(r), &features);
            if v > best {
                best = v;
            }
        }
        best
    }
}

/// Random net with every family-mandated block populated and entries drawn
/// i.i.d. uniform on `[-scale, scale]`. Deterministic for a fixed seed.
pub fn random_net<T: Scalar>(
    kind: NetKind,
    input_dim: usize,
    widths: &[usize],
    seed: u64,
    scale: f64,
) -> Result<RectifierNet<T>> {
    if widths.is_empty() {
        return Err(Error::InvalidWidths("at least one hidden layer is required".into()));
    }
    if input_dim == 0 || widths.contains(&0) {
        return Err(Error::InvalidWidths("input dimension and widths must be positive".into()));
    }
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidWidths(format!("scale must be positive, got {scale}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-scale, scale);
    let mut draw = move || T::from_f64_lossy(dist.sample(&mut rng));

    let m = widths.len();
    let width = |k: usize| if k == 0 { input_dim } else { widths[k - 1] };
    let mut adjacent = Vec::with_capacity(m);
    let mut biases = Vec::with_capacity(m);
    let mut skips = BTreeMap::new();
    for k in 1..=m {
        adjacent.push(Matrix::from_fn(width(k), width(k - 1), |_, _| draw()));
        biases.push((0..width(k)).map(|_| draw()).collect());
        for from in 0..k.saturating_sub(1) {
            if kind.allows_skip(k, from) {
                skips.insert((k, from), Matrix::from_fn(width(k), width(from), |_, _| draw()));
            }
        }
    }
    let head = OutputHead {
        c: draw(),
        a0: (0..input_dim).map(|_| draw()).collect(),
        a: widths.iter().map(|&w| (0..w).map(|_| draw()).collect()).collect(),
    };
    Ok(RectifierNet {
        stack: LayerStack { kind, input_dim, widths: widths.to_vec(), adjacent, biases, skips },
        head,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_net(kind: NetKind, ws: &[f64], bs: &[f64], head_last: f64) -> RectifierNet<f64> {
        let m = ws.len();
        let mut head = OutputHead::zeros(1, &vec![1; m]);
        head.a[m - 1][0] = head_last;
        RectifierNet {
            stack: LayerStack {
                kind,
                input_dim: 1,
                widths: vec![1; m],
                adjacent: ws.iter().map(|&w| Matrix::from_rows(&[vec![w]]).unwrap()).collect(),
                biases: bs.iter().map(|&b| vec![b]).collect(),
                skips: BTreeMap::new(),
            },
            head,
        }
    }

    #[test]
    fn single_unit_is_a_rectifier() {
        let net = scalar_net(NetKind::Plain, &[1.0], &[0.0], 1.0);
        assert_eq!(eval_rectifier(&net, &[-2.0]).unwrap().output, 0.0);
        assert_eq!(eval_rectifier(&net, &[3.0]).unwrap().output, 3.0);
    }

    #[test]
    fn two_layer_trace() {
        let net = scalar_net(NetKind::Plain, &[1.0, -1.0], &[0.0, 1.0], 1.0);
        let t = eval_rectifier(&net, &[0.5]).unwrap();
        assert_eq!(t.preactivations, vec![vec![0.5], vec![0.5]]);
        assert_eq!(t.activations, vec![vec![0.5], vec![0.5]]);
        assert_eq!(t.output, 0.5);
    }

    #[test]
    fn wrong_input_length() {
        let net = scalar_net(NetKind::Plain, &[1.0], &[0.0], 1.0);
        assert!(matches!(
            eval_rectifier(&net, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn max_of_two_heads() {
        let net = scalar_net(NetKind::Plain, &[1.0], &[0.0], 0.0);
        let mut doubled = net.head.clone();
        doubled.a0[0] = 2.0;
        let max = MaxRectifierNet { stack: net.stack.clone(), heads: vec![net.head.clone(), doubled] };
        assert_eq!(eval_max_rectifier(&max, &[-1.0]).unwrap(), 0.0);
        assert_eq!(eval_max_rectifier(&max, &[2.0]).unwrap(), 4.0);
    }

    #[test]
    fn empty_heads() {
        let net = scalar_net(NetKind::Plain, &[1.0], &[0.0], 1.0);
        let max = MaxRectifierNet { stack: net.stack, heads: vec![] };
        assert!(matches!(eval_max_rectifier(&max, &[1.0]), Err(Error::EmptyHeads)));
    }

    #[test]
    fn validation_messages() {
        let good = random_net::<f64>(NetKind::Plain, 2, &[2, 2], 1, 1.0).unwrap();
        assert!(good.validate().is_empty());

        let mut plain = good.clone();
        plain.stack.skips.insert((2, 0), Matrix::zeros(2, 2));
        let v = plain.validate();
        assert_eq!(v, vec![Violation::SkipOnPlain { to: 2, from: 0 }]);
        assert!(v[0].to_string().contains("skip block on Plain kind"));

        let mut res = random_net::<f64>(NetKind::Residual, 1, &[1, 1, 1], 2, 1.0).unwrap();
        res.stack.skips.insert((2, 0), Matrix::from_rows(&[vec![0.5]]).unwrap());
        assert_eq!(res.validate(), vec![Violation::ResidualEvenSkip { to: 2, from: 0 }]);

        let mut bad_shape = good.clone();
        bad_shape.stack.adjacent[1] = Matrix::zeros(3, 2);
        let v = bad_shape.validate();
        assert!(v.iter().any(|e| matches!(e, Violation::BlockShape { block, expected: (2, 2), found: (3, 2) } if block == "W2")));

        let mut bad_head = good;
        bad_head.head.a[0].pop();
        assert!(matches!(bad_head.validate()[0], Violation::HeadLength { ref block, .. } if block == "a1"));
        assert!(matches!(eval_rectifier(&bad_head, &[0.0, 0.0]), Err(Error::InvalidNet(_))));
    }

    #[test]
    fn random_net_population() {
        let a = random_net::<f64>(NetKind::Plain, 2, &[2, 2], 1, 1.0).unwrap();
        let b = random_net::<f64>(NetKind::Plain, 2, &[2, 2], 1, 1.0).unwrap();
        assert_eq!(a, b);

        let r = random_net::<f64>(NetKind::Residual, 3, &[2, 2, 2], 7, 1.0).unwrap();
        assert!(r.validate().is_empty());
        assert_eq!(r.stack.skips.keys().copied().collect::<Vec<_>>(), vec![(3, 1)]);

        let s = random_net::<f64>(NetKind::FullSkip, 1, &[1, 1, 1], 3, 1.0).unwrap();
        assert_eq!(s.stack.skips.keys().copied().collect::<Vec<_>>(), vec![(2, 0), (3, 0), (3, 1)]);
        assert!(s.head.a.iter().flatten().all(|&v| v != 0.0));

        assert!(matches!(random_net::<f64>(NetKind::Plain, 2, &[], 1, 1.0), Err(Error::InvalidWidths(_))));
        assert!(matches!(random_net::<f64>(NetKind::Plain, 2, &[1, 0], 1, 1.0), Err(Error::InvalidWidths(_))));
    }

    #[test]
    fn entries_within_scale() {
        let n = random_net::<f64>(NetKind::FullSkip, 3, &[3, 2, 2], 5, 0.25).unwrap();
        let mut all: Vec<f64> = n.stack.adjacent.iter().flat_map(|w| w.to_rows().concat()).collect();
        all.extend(n.stack.biases.concat());
        all.extend(n.head.a.concat());
        assert!(all.iter().all(|v| v.abs() <= 0.25));
    }

    #[test]
    fn f32_nets_evaluate() {
        let n = random_net::<f32>(NetKind::Residual, 2, &[2, 2, 2], 11, 1.0).unwrap();
        let n64 = random_net::<f64>(NetKind::Residual, 2, &[2, 2, 2], 11, 1.0).unwrap();
        let y32 = eval_rectifier(&n, &[0.3, -0.7]).unwrap().output;
        let y64 = eval_rectifier(&n64, &[0.3, -0.7]).unwrap().output;
        assert!((f64::from(y32) - y64).abs() < 1e-5);
    }

    #[test]
    fn dedup_keeps_first() {
        let n = random_net::<f64>(NetKind::Plain, 1, &[1], 4, 1.0).unwrap();
        let mut other = n.head.clone();
        other.c += 1.0;
        let mut max = MaxRectifierNet { stack: n.stack, heads: vec![n.head.clone(), other.clone(), n.head] };
        max.dedup_heads();
        assert_eq!(max.heads.len(), 2);
        assert_eq!(max.heads[1], other);
    }
}
