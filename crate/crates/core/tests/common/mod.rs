//! Straight-line interpreter for the three layer recurrences, written against
//! the raw fields only. It never calls the crate's evaluators.
#![allow(dead_code)]

use rectnet::{LayerStack, MaxRectifierNet, Matrix, NetKind, OutputHead, RectifierNet};

fn relu(v: f64) -> f64 {
    if v > 0.0 {
        v
    } else {
        0.0
    }
}

fn add_product(out: &mut [f64], m: &Matrix<f64>, v: &[f64]) {
    for r in 0..out.len() {
        let mut s = 0.0;
        for c in 0..v.len() {
            s += m[(r, c)] * v[c];
        }
        out[r] += s;
    }
}

/// Sources feeding layer `k` (1-based) besides the adjacent one.
fn skip_sources(kind: NetKind, k: usize) -> Vec<usize> {
    match kind {
        NetKind::Plain => vec![],
        NetKind::FullSkip => (0..k.saturating_sub(1)).collect(),
        NetKind::Residual if k >= 3 && k % 2 == 1 => vec![k - 2],
        NetKind::Residual => vec![],
    }
}

/// Post-activations of every hidden layer.
pub fn activations(stack: &LayerStack<f64>, x: &[f64]) -> Vec<Vec<f64>> {
    let mut acts: Vec<Vec<f64>> = Vec::new();
    for k in 1..=stack.widths.len() {
        let mut z = stack.biases[k - 1].clone();
        let below: &[f64] = if k == 1 { x } else { &acts[k - 2] };
        add_product(&mut z, &stack.adjacent[k - 1], below);
        for j in skip_sources(stack.kind, k) {
            if let Some(m) = stack.skips.get(&(k, j)) {
                let src: &[f64] = if j == 0 { x } else { &acts[j - 1] };
                add_product(&mut z, m, src);
            }
        }
        acts.push(z.into_iter().map(relu).collect());
    }
    acts
}

pub fn head_value(head: &OutputHead<f64>, x: &[f64], acts: &[Vec<f64>]) -> f64 {
    let mut y = head.c;
    for (a, v) in head.a0.iter().zip(x) {
        y += a * v;
    }
    for (ak, hk) in head.a.iter().zip(acts) {
        for (a, v) in ak.iter().zip(hk) {
            y += a * v;
        }
    }
    y
}

pub fn interpret(net: &RectifierNet<f64>, x: &[f64]) -> f64 {
    head_value(&net.head, x, &activations(&net.stack, x))
}

pub fn interpret_max(net: &MaxRectifierNet<f64>, x: &[f64]) -> f64 {
    let acts = activations(&net.stack, x);
    net.heads.iter().map(|h| head_value(h, x, &acts)).fold(f64::NEG_INFINITY, f64::max)
}

/// Deterministic points in `[lo, hi]^dim` from a small LCG, independent of the
/// crate's sampler.
pub fn grid_points(dim: usize, count: usize, lo: f64, hi: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    (0..count).map(|_| (0..dim).map(|_| lo + (hi - lo) * next()).collect()).collect()
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d == 0.0 {
        0.0
    } else {
        d / a.abs().min(b.abs()).max(1e-12)
    }
}

/// Worst relative error of `net` against the interpreted `original` over
/// `count` points in `[-5, 5]^dim`.
pub fn worst_against(original: &MaxRectifierNet<f64>, net: &MaxRectifierNet<f64>, count: usize, seed: u64) -> f64 {
    let ev = net.evaluator().unwrap();
    grid_points(original.stack.input_dim, count, -5.0, 5.0, seed)
        .iter()
        .map(|x| rel_err(interpret_max(original, x), rectnet::Evaluate::evaluate(&ev, x)))
        .fold(0.0, f64::max)
}

pub fn m(rows: &[&[f64]]) -> Matrix<f64> {
    Matrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
}
