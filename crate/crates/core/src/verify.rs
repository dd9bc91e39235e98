//! Equivalence checks between nets: sampled pointwise comparison, slope
//! sequences along lines, finite-difference gradients, and a property suite
//! that runs the transformation identities over a grid of random nets.
//!
//! Every sample is derived from `(seed, index)` alone, so reports do not depend
//! on how the work is scheduled across threads.

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::net::{random_net, Evaluate, MaxRectifierNet, NetKind};
use crate::scalar::Scalar;
use crate::transform::{self, mirror_identity_terms, subset_expand, FeatureLinear, ReduceOptions};

pub const DEFAULT_SAMPLES: usize = 10_000;
pub const DEFAULT_ABS_FLOOR: f64 = 1e-12;
pub const DEFAULT_BOX: (f64, f64) = (-5.0, 5.0);

fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// The `index`-th point of the sample sequence for `seed`, uniform in `[lo, hi]^dim`.
pub fn sample_point<T: Scalar>(dim: usize, lo: f64, hi: f64, seed: u64, index: u64) -> Vec<T> {
    let mut rng = sample_rng(seed, index);
    let dist = Uniform::new_inclusive(lo, hi);
    (0..dim).map(|_| T::from_f64_lossy(dist.sample(&mut rng))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointwiseConfig {
    pub lo: f64,
    pub hi: f64,
    pub samples: usize,
    pub seed: u64,
    pub tol: f64,
    pub abs_floor: f64,
}

impl Default for PointwiseConfig {
    fn default() -> Self {
        Self {
            lo: DEFAULT_BOX.0,
            hi: DEFAULT_BOX.1,
            samples: DEFAULT_SAMPLES,
            seed: 0,
            tol: 1e-9,
            abs_floor: DEFAULT_ABS_FLOOR,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivReport {
    pub samples: usize,
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    pub worst_x: Vec<f64>,
    pub tol: f64,
    pub abs_floor: f64,
    pub passed: bool,
}

impl EquivReport {
    pub fn judge(max_rel_err: f64, max_abs_err: f64, tol: f64, abs_floor: f64) -> bool {
        max_rel_err <= tol || max_abs_err <= abs_floor
    }
}

/// Symmetric relative error `|a - b| / min(|a|, |b|)`. Differences up to
/// `abs_floor` count as zero and `abs_floor` bounds the denominator from below.
pub fn relative_error(a: f64, b: f64, abs_floor: f64) -> f64 {
    let diff = (a - b).abs();
    if diff <= abs_floor {
        return 0.0;
    }
    diff / a.abs().min(b.abs()).max(abs_floor)
}

pub fn check_pointwise<T, A, B>(a: &A, b: &B, cfg: &PointwiseConfig) -> Result<EquivReport>
where
    T: Scalar,
    A: Evaluate<T> + ?Sized,
    B: Evaluate<T> + ?Sized,
{
    if a.input_dim() != b.input_dim() {
        return Err(Error::DimensionMismatch { expected: a.input_dim(), got: b.input_dim() });
    }
    let dim = a.input_dim();
    // (rel, abs, index); ties resolve to the lowest index
    let worst = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| {
            let x = sample_point::<T>(dim, cfg.lo, cfg.hi, cfg.seed, i);
            let ya = a.evaluate(&x).to_f64().unwrap_or(f64::NAN);
            let yb = b.evaluate(&x).to_f64().unwrap_or(f64::NAN);
            let abs = (ya - yb).abs();
            let rel = relative_error(ya, yb, cfg.abs_floor);
            // NaN never passes
            let rel = if rel.is_nan() { f64::INFINITY } else { rel };
            let abs = if abs.is_nan() { f64::INFINITY } else { abs };
            (rel, abs, i, abs, i)
        })
        .reduce(
            || (0.0, 0.0, u64::MAX, 0.0, u64::MAX),
            |l, r| {
                let rel = if r.0 > l.0 || (r.0 == l.0 && r.2 < l.2) { (r.0, r.2) } else { (l.0, l.2) };
                let abs = if r.3 > l.3 || (r.3 == l.3 && r.4 < l.4) { (r.3, r.4) } else { (l.3, l.4) };
                (rel.0, l.1.max(r.1), rel.1, abs.0, abs.1)
            },
        );
    let (max_rel_err, max_abs_err, worst_idx) = (worst.0, worst.1, worst.2);
    let worst_x = if worst_idx == u64::MAX {
        Vec::new()
    } else {
        sample_point::<f64>(dim, cfg.lo, cfg.hi, cfg.seed, worst_idx)
    };
    Ok(EquivReport {
        samples: cfg.samples,
        max_rel_err,
        max_abs_err,
        worst_x,
        tol: cfg.tol,
        abs_floor: cfg.abs_floor,
        passed: EquivReport::judge(max_rel_err, max_abs_err, cfg.tol, cfg.abs_floor),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LineProbeReport {
    pub anchor: Vec<f64>,
    pub direction: Vec<f64>,
    pub breakpoint_count_a: usize,
    pub breakpoint_count_b: usize,
    /// Estimated breakpoint positions as fractions `t` of the segment
    /// `anchor + t·direction`, `t ∈ [0, 1]`.
    pub breakpoints_a: Vec<f64>,
    pub breakpoints_b: Vec<f64>,
    pub slope_sequences_match: bool,
    pub value_match: bool,
    pub slopes_finite: bool,
}

impl LineProbeReport {
    pub fn passed(&self) -> bool {
        self.slope_sequences_match
            && self.value_match
            && self.slopes_finite
            && self.breakpoint_count_a == self.breakpoint_count_b
    }
}

fn scaled_close(u: f64, v: f64, tol: f64) -> bool {
    (u - v).abs() <= tol * 1f64.max(u.abs()).max(v.abs())
}

/// Slope-change positions of a sampled piecewise linear trace on `[0, 1]`.
fn breakpoints(values: &[f64], slopes: &[f64], tol: f64) -> Vec<f64> {
    let n = slopes.len() as f64;
    let t = |k: usize| k as f64 / n;
    let changed: Vec<bool> = slopes.windows(2).map(|w| !scaled_close(w[0], w[1], tol)).collect();
    let mut out = Vec::new();
    let mut k = 0;
    while k < changed.len() {
        if !changed[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k < changed.len() && changed[k] {
            k += 1;
        }
        let run = k - start;
        // change between slopes[start] and slopes[start + 1] sits at t(start + 1)
        let at = if run == 2 {
            // one kink inside interval start+1: intersect the neighbouring lines
            let (sl, sr) = (slopes[start], slopes[start + 2]);
            let (t1, t2) = (t(start + 1), t(start + 2));
            let est = (values[start + 2] - values[start + 1] - sr * t2 + sl * t1) / (sl - sr);
            if est.is_finite() {
                est.clamp(t1, t2)
            } else {
                0.5 * (t1 + t2)
            }
        } else {
            0.5 * (t(start + 1) + t(start + run))
        };
        out.push(at);
    }
    out
}

/// Samples both functions at `n_steps + 1` points of `anchor + t·direction`,
/// `t ∈ [0, 1]`, and compares values, slopes and slope changes.
pub fn line_probe<T, A, B>(a: &A, b: &B, anchor: &[T], direction: &[T], n_steps: usize, tol: f64) -> Result<LineProbeReport>
where
    T: Scalar,
    A: Evaluate<T> + ?Sized,
    B: Evaluate<T> + ?Sized,
{
    let dim = a.input_dim();
    for v in [b.input_dim(), anchor.len(), direction.len()] {
        if v != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v });
        }
    }
    if direction.iter().all(|d| d.is_zero()) {
        return Err(Error::ZeroDirection);
    }
    let n_steps = n_steps.max(2);
    let point = |k: usize| -> Vec<T> {
        let t = T::from_f64_lossy(k as f64 / n_steps as f64);
        anchor.iter().zip(direction).map(|(&p, &d)| p + t * d).collect()
    };
    let trace = |f: &(dyn Fn(&[T]) -> T + Sync)| -> Vec<f64> {
        (0..=n_steps).into_par_iter().map(|k| f(&point(k)).to_f64().unwrap_or(f64::NAN)).collect()
    };
    let va = trace(&|x| a.evaluate(x));
    let vb = trace(&|x| b.evaluate(x));
    let slopes = |v: &[f64]| -> Vec<f64> { v.windows(2).map(|w| (w[1] - w[0]) * n_steps as f64).collect() };
    let (sa, sb) = (slopes(&va), slopes(&vb));
    let bpa = breakpoints(&va, &sa, tol);
    let bpb = breakpoints(&vb, &sb, tol);
    let to64 = |v: &[T]| v.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect::<Vec<_>>();
    Ok(LineProbeReport {
        anchor: to64(anchor),
        direction: to64(direction),
        breakpoint_count_a: bpa.len(),
        breakpoint_count_b: bpb.len(),
        breakpoints_a: bpa,
        breakpoints_b: bpb,
        slope_sequences_match: sa.iter().zip(&sb).all(|(&u, &v)| scaled_close(u, v, tol)),
        value_match: va.iter().zip(&vb).all(|(&u, &v)| scaled_close(u, v, tol)),
        slopes_finite: sa.iter().chain(&sb).all(|s| s.is_finite()),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GradientReport {
    pub checked: usize,
    /// Points near a kink, where the gradient changed under step halving.
    pub skipped: usize,
    pub max_diff: f64,
    pub fd_step: f64,
    pub tol: f64,
    pub passed: bool,
}

/// Central finite-difference gradient.
pub fn fd_gradient<T: Scalar, A: Evaluate<T> + ?Sized>(f: &A, x: &[T], h: f64) -> Vec<f64> {
    let step = T::from_f64_lossy(h);
    (0..x.len())
        .map(|i| {
            let mut up = x.to_vec();
            let mut down = x.to_vec();
            up[i] += step;
            down[i] -= step;
            let d = f.evaluate(&up) - f.evaluate(&down);
            d.to_f64().unwrap_or(f64::NAN) / (2.0 * h)
        })
        .collect()
}

fn max_abs_diff(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

/// Whether the gradient of `f` at `x` is unchanged (within `10·tol`) when the
/// step is halved, i.e. `x` lies inside an affine piece.
pub fn is_kink_stable<T: Scalar, A: Evaluate<T> + ?Sized>(f: &A, x: &[T], fd_step: f64, tol: f64) -> bool {
    let g = fd_gradient(f, x, fd_step);
    let g2 = fd_gradient(f, x, fd_step / 2.0);
    max_abs_diff(&g, &g2) <= 10.0 * tol
}

pub fn check_gradient_consistency<T, A, B>(a: &A, b: &B, points: &[Vec<T>], fd_step: f64, tol: f64) -> GradientReport
where
    T: Scalar,
    A: Evaluate<T> + ?Sized,
    B: Evaluate<T> + ?Sized,
{
    let results: Vec<Option<f64>> = points
        .par_iter()
        .map(|x| {
            if !(is_kink_stable(a, x, fd_step, tol) && is_kink_stable(b, x, fd_step, tol)) {
                return None;
            }
            Some(max_abs_diff(&fd_gradient(a, x, fd_step), &fd_gradient(b, x, fd_step)))
        })
        .collect();
    let checked = results.iter().flatten().count();
    let max_diff = results.iter().flatten().copied().fold(0.0, f64::max);
    GradientReport {
        checked,
        skipped: points.len() - checked,
        max_diff,
        fd_step,
        tol,
        passed: checked > 0 && max_diff <= tol,
    }
}

/// Draws sample points until `wanted` of them are kink-stable for `f`.
pub fn stable_points<T: Scalar, A: Evaluate<T> + ?Sized>(
    f: &A,
    cfg: &PointwiseConfig,
    wanted: usize,
    fd_step: f64,
    tol: f64,
) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(wanted);
    let limit = (wanted as u64).saturating_mul(100).max(100);
    let mut i = 0;
    while out.len() < wanted && i < limit {
        let x = sample_point::<T>(f.input_dim(), cfg.lo, cfg.hi, cfg.seed, i);
        if is_kink_stable(f, &x, fd_step, tol) {
            out.push(x);
        }
        i += 1;
    }
    out
}

/// Grid of random nets the property suite runs over.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteGrid {
    pub input_dim: usize,
    pub min_depth: usize,
    pub max_depth: usize,
    /// Allowed width of every layer.
    pub layer_widths: Vec<usize>,
    pub samples: usize,
    pub head_cap: usize,
}

impl Default for SuiteGrid {
    fn default() -> Self {
        Self { input_dim: 2, min_depth: 2, max_depth: 3, layer_widths: vec![1, 2], samples: 2_000, head_cap: 12 }
    }
}

impl SuiteGrid {
    pub fn width_vectors(&self) -> Vec<Vec<usize>> {
        (self.min_depth.max(1)..=self.max_depth)
            .flat_map(|m| {
                let mut acc = vec![Vec::new()];
                for _ in 0..m {
                    acc = acc
                        .into_iter()
                        .flat_map(|w: Vec<usize>| self.layer_widths.iter().map(move |&l| [w.clone(), vec![l]].concat()))
                        .collect();
                }
                acc
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub cases: usize,
    pub passed: bool,
    /// One reproduction command per failing case.
    pub failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub family: NetKind,
    pub grid: SuiteGrid,
    pub seeds: Vec<u64>,
    pub tol: f64,
    pub properties: Vec<PropertyResult>,
    /// Cases outside the exactness precondition. They are reported, not
    /// judged: the construction does not promise equality there.
    pub nonexact: Vec<NonExactCase>,
    pub passed: bool,
}

struct Tally {
    name: &'static str,
    cases: usize,
    failures: Vec<String>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self { name, cases: 0, failures: Vec::new() }
    }

    fn record(&mut self, ok: bool, repro: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.failures.push(repro());
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult { name: self.name.into(), cases: self.cases, passed: self.failures.is_empty(), failures: self.failures }
    }
}

fn join_widths(w: &[usize]) -> String {
    w.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// `Σ a_i max(0, f_i(x))` against `max_j g_j(x)` for random nonnegative `a`
/// and affine `f`. Returns the worst relative error.
pub fn subset_identity_error(n: usize, input_dim: usize, seed: u64, points: usize) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let forms: Vec<FeatureLinear<f64>> = (0..n)
        .map(|_| FeatureLinear {
            c: rng.gen_range(-1.0..=1.0),
            a0: (0..input_dim).map(|_| rng.gen_range(-1.0..=1.0)).collect(),
            a: Vec::new(),
        })
        .collect();
    let g = subset_expand(&a, &forms)?;
    let mut worst: f64 = 0.0;
    for i in 0..points as u64 {
        let x = sample_point::<f64>(input_dim, DEFAULT_BOX.0, DEFAULT_BOX.1, seed, i);
        let direct: f64 = a.iter().zip(&forms).map(|(&w, f)| w * f.eval(&x, &[]).max(0.0)).sum();
        let best = g.iter().map(|f| f.eval(&x, &[])).fold(f64::NEG_INFINITY, f64::max);
        worst = worst.max(relative_error(direct, best, DEFAULT_ABS_FLOOR));
    }
    Ok(worst)
}

/// Outcome of the sign-split identity on one random layer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MirrorCheck {
    /// Worst relative error over points where the previous layer is one-signed
    /// (every point when the layer has a single column).
    pub worst_one_signed: f64,
    pub one_signed_points: usize,
    /// Mixed-sign points where the identity does not hold.
    pub mixed_failures: usize,
    pub mixed_points: usize,
}

/// Both sides of the sign-split identity for a random `rows x cols` layer.
/// Odd-indexed points are forced one-signed.
pub fn mirror_identity_check(rows: usize, cols: usize, seed: u64, points: usize) -> Result<MirrorCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..=1.0));
    let b: Vec<f64> = (0..rows).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let terms = mirror_identity_terms(&w, &b)?;
    let mut out = MirrorCheck { worst_one_signed: 0.0, one_signed_points: 0, mixed_failures: 0, mixed_points: 0 };
    for i in 0..points as u64 {
        let mut p = sample_point::<f64>(cols, DEFAULT_BOX.0, DEFAULT_BOX.1, seed, i);
        if i % 2 == 1 {
            let sign = if i % 4 == 1 { 1.0 } else { -1.0 };
            p.iter_mut().for_each(|v| *v = sign * v.abs());
        }
        let (lhs, rhs) = terms.identity_sides(&p)?;
        let err = lhs.iter().zip(&rhs).map(|(u, v)| relative_error(*u, *v, DEFAULT_ABS_FLOOR)).fold(0.0, f64::max);
        let one_signed = p.iter().all(|&v| v >= 0.0) || p.iter().all(|&v| v <= 0.0);
        if one_signed {
            out.one_signed_points += 1;
            out.worst_one_signed = out.worst_one_signed.max(err);
        } else {
            out.mixed_points += 1;
            if err > 1e-12 {
                out.mixed_failures += 1;
            }
        }
    }
    Ok(out)
}

/// A grid case whose reduction is not exact by construction, with the
/// sampled outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NonExactCase {
    pub property: String,
    pub widths: Vec<usize>,
    pub seed: u64,
    pub max_rel_err: f64,
    pub equal_on_samples: bool,
    pub repro: String,
}

/// Runs every transformation property over the grid for one family.
/// Function preservation is judged on the cases whose steps are exact by
/// construction ([`transform::StepInfo::mirror_exact`]); the rest are listed
/// in [`SuiteReport::nonexact`].
pub fn run_property_suite(family: NetKind, grid: &SuiteGrid, seeds: &[u64], tol: f64) -> Result<SuiteReport> {
    let max_width = grid.layer_widths.iter().copied().max().unwrap_or(1).max(1);
    let mut subset = Tally::new("subset_expansion_identity");
    let mut mirror = Tally::new("mirror_identity_one_signed");
    for &seed in seeds {
        for n in 1..=max_width.max(4).min(8) {
            let err = subset_identity_error(n, grid.input_dim, seed, grid.samples.min(1_000))?;
            subset.record(err <= 1e-12, || format!("subset expansion n={n} seed={seed} err={err:e}"));
        }
        for rows in 1..=3 {
            for cols in 1..=3 {
                let c = mirror_identity_check(rows, cols, seed, grid.samples.min(1_000))?;
                let err = c.worst_one_signed;
                mirror.record(err <= 1e-12, || format!("mirror identity {rows}x{cols} seed={seed} err={err:e}"));
            }
        }
    }

    let mut step = Tally::new("step_preserves_function");
    let mut full = Tally::new("collapse_preserves_function");
    let mut counts = Tally::new("collapse_count_law");
    let mut nonexact = Vec::new();
    let cfg = |seed| PointwiseConfig { samples: grid.samples, seed, tol, ..PointwiseConfig::default() };
    for widths in grid.width_vectors() {
        let (pred_l, pred_n) = transform::predicted_counts(family, &widths);
        for &seed in seeds {
            let repro_gen = format!(
                "rectnet gen {family} {} {} --seed {seed} -o net.json",
                grid.input_dim,
                join_widths(&widths)
            );
            let net: MaxRectifierNet<f64> = random_net(family, grid.input_dim, &widths, seed, 1.0)?.into();
            let original = net.evaluator()?;
            if widths.len() >= 2 {
                let (reduced, info) = transform::reduce_step(&net, &ReduceOptions::uncapped())?;
                let report = check_pointwise(&original, &reduced.evaluator()?, &cfg(seed))?;
                let repro = format!("{repro_gen} && rectnet reduce net.json out.json && rectnet verify net.json out.json");
                if info.mirror_exact {
                    step.record(report.passed, || repro);
                } else {
                    nonexact.push(NonExactCase {
                        property: step.name.into(),
                        widths: widths.clone(),
                        seed,
                        max_rel_err: report.max_rel_err,
                        equal_on_samples: report.passed,
                        repro,
                    });
                }
            }
            if pred_n <= grid.head_cap {
                let opts = ReduceOptions { head_cap: grid.head_cap, ..ReduceOptions::default() };
                let (collapsed, rep) = transform::collapse(&net, &opts)?;
                let report = check_pointwise(&original, &collapsed.evaluator()?, &cfg(seed))?;
                let repro = format!("{repro_gen} && rectnet collapse net.json out.json && rectnet verify net.json out.json");
                if rep.mirror_exact {
                    full.record(report.passed, || repro);
                } else {
                    nonexact.push(NonExactCase {
                        property: full.name.into(),
                        widths: widths.clone(),
                        seed,
                        max_rel_err: report.max_rel_err,
                        equal_on_samples: report.passed,
                        repro,
                    });
                }
                let realized = (collapsed.stack.widths[0], rep.head_exponent);
                counts.record(
                    realized == (pred_l, pred_n) && collapsed.heads.len() == 1 << pred_n,
                    || format!("{repro_gen} && rectnet collapse net.json out.json  # realized {realized:?}, predicted {:?}", (pred_l, pred_n)),
                );
            }
        }
    }
    let properties: Vec<PropertyResult> = [subset, mirror, step, full, counts].into_iter().map(Tally::finish).collect();
    let passed = properties.iter().all(|p| p.passed);
    Ok(SuiteReport { family, grid: grid.clone(), seeds: seeds.to_vec(), tol, properties, nonexact, passed })
}
