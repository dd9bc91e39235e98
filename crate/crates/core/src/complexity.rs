//! Size accounting for fully collapsed nets.
//!
//! Collapsing a net to one hidden layer yields a width `L` and `2^N` heads.
//! Each family has a width rule for one reduction step:
//!
//! | family    | widths after removing layer `m`            | exponent gain |
//! |-----------|--------------------------------------------|---------------|
//! | plain     | `[l_1 .. l_{m-2}, l_{m-1} + l_m]`          | `l_m`         |
//! | full skip | `[l_1 .. l_{m-2}, l_{m-1} + 2 l_m]`        | `l_m`         |
//! | residual  | plain rule for even `m`, skip rule for odd | `l_m`         |
//!
//! Iterating the rule is the normative count. Plain and full-skip nets also
//! have closed forms that agree with it exactly. The residual closed forms are
//! reported next to the recurrence; for odd depth the width formula disagrees
//! with the recurrence and is flagged rather than trusted.

use std::fmt::{self, Write as _};

use serde::Serialize;

use crate::net::NetKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(m: usize) -> Self {
        if m.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// Width `L` and head exponent `N` of a single-hidden-layer net.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Counts {
    #[serde(rename = "L")]
    pub width: usize,
    #[serde(rename = "N")]
    pub exponent: usize,
}

impl From<(usize, usize)> for Counts {
    fn from((width, exponent): (usize, usize)) -> Self {
        Self { width, exponent }
    }
}

/// `L = Σ l_i`, `N = Σ_{i≥2} (i-1) l_i`.
pub fn counts_plain(widths: &[usize]) -> (usize, usize) {
    let width = widths.iter().sum();
    let exponent = widths.iter().enumerate().map(|(i, &l)| i * l).sum();
    (width, exponent)
}

/// `L = Σ 2^{i-1} l_i`, `N = Σ_{i≥2} (2^{i-1} - 1) l_i`.
pub fn counts_skip(widths: &[usize]) -> (usize, usize) {
    let width = widths.iter().enumerate().map(|(i, &l)| (1usize << i) * l).sum();
    let exponent = widths.iter().enumerate().map(|(i, &l)| ((1usize << i) - 1) * l).sum();
    (width, exponent)
}

/// Iterates a one-step width rule down to a single layer. `extra(m)` is how
/// many copies of `l_m` join layer `m - 1` when layer `m` is removed.
pub fn width_recurrence(widths: &[usize], extra: impl Fn(usize) -> usize) -> (usize, usize) {
    let mut w = widths.to_vec();
    let mut exponent = 0;
    while w.len() >= 2 {
        let m = w.len();
        let top = w.pop().expect("len >= 2");
        exponent += top;
        *w.last_mut().expect("len >= 1") += extra(m) * top;
    }
    (w.first().copied().unwrap_or(0), exponent)
}

pub fn plain_recurrence(widths: &[usize]) -> (usize, usize) {
    width_recurrence(widths, |_| 1)
}

pub fn skip_recurrence(widths: &[usize]) -> (usize, usize) {
    width_recurrence(widths, |_| 2)
}

pub fn residual_recurrence(widths: &[usize]) -> (usize, usize) {
    width_recurrence(widths, |m| if m % 2 == 0 { 1 } else { 2 })
}

/// `μ(k) = 3 (2^{k-1} - 1)`, for `k >= 1`.
pub fn mu(k: usize) -> usize {
    3 * ((1usize << (k - 1)) - 1)
}

/// Residual counts from the closed forms, as stated, for depth `m >= 2`.
pub fn residual_closed_form(widths: &[usize]) -> Option<(usize, usize)> {
    let m = widths.len();
    if m < 2 {
        return None;
    }
    let l = |i: usize| widths[i - 1];
    let pair_sum = |upto: usize| -> usize { (1..=upto).map(|k| (1usize << (k - 1)) * (l(2 * k - 1) + l(2 * k))).sum() };
    let odd_terms = |upto: usize| -> usize { (2..=upto).map(|k| mu(k) * l(2 * k - 1)).sum() };
    let even_terms = |upto: usize| -> usize { (1..=upto).map(|k| (mu(k) + 1) * l(2 * k)).sum() };
    Some(if m.is_multiple_of(2) {
        (pair_sum(m / 2), odd_terms(m / 2) + even_terms(m / 2))
    } else {
        (
            (1usize << m.div_ceil(2)) * l(m) + pair_sum((m - 1) / 2),
            odd_terms(m.div_ceil(2)) + even_terms((m - 1) / 2),
        )
    })
}

/// Residual recurrence and closed-form counts side by side.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ResidualCounts {
    pub recurrence: Counts,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form: Option<Counts>,
    pub parity: Parity,
    /// `μ(1) ..= μ(⌈m/2⌉)`.
    pub mu_values: Vec<usize>,
    pub flags: Vec<String>,
}

impl ResidualCounts {
    pub fn width_mismatch(&self) -> bool {
        self.closed_form.is_some_and(|c| c.width != self.recurrence.width)
    }

    pub fn exponent_mismatch(&self) -> bool {
        self.closed_form.is_some_and(|c| c.exponent != self.recurrence.exponent)
    }
}

pub fn counts_residual(widths: &[usize]) -> ResidualCounts {
    let m = widths.len();
    let recurrence = Counts::from(residual_recurrence(widths));
    let closed_form = residual_closed_form(widths).map(Counts::from);
    let mut flags = Vec::new();
    if let Some(c) = closed_form {
        if c.width != recurrence.width {
            flags.push(format!("L_mismatch(closed={},recurrence={})", c.width, recurrence.width));
        }
        if c.exponent != recurrence.exponent {
            flags.push(format!("N_mismatch(closed={},recurrence={})", c.exponent, recurrence.exponent));
        }
    }
    ResidualCounts {
        recurrence,
        closed_form,
        parity: Parity::of(m),
        mu_values: (1..=m.div_ceil(2).max(1)).map(mu).collect(),
        flags,
    }
}

/// Predicted against realized sizes of a collapse.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CountComparison {
    pub predicted: Counts,
    pub realized: Counts,
    pub matches: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<ResidualCounts>,
}

impl CountComparison {
    pub fn new(kind: NetKind, widths: &[usize], predicted: (usize, usize), realized: (usize, usize)) -> Self {
        Self {
            predicted: predicted.into(),
            realized: realized.into(),
            matches: predicted == realized,
            residual: (kind == NetKind::Residual).then(|| counts_residual(widths)),
        }
    }
}

/// Plain against residual sizes for `T` hidden units spread uniformly over `m` layers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub m: usize,
    #[serde(rename = "T")]
    pub total: usize,
    #[serde(rename = "L_p")]
    pub l_p: f64,
    #[serde(rename = "N_p")]
    pub n_p: f64,
    /// Closed-form residual values with residual width `2T/(3m)`.
    #[serde(rename = "L_res_paper")]
    pub l_res_paper: f64,
    #[serde(rename = "N_res_paper")]
    pub n_res_paper: f64,
    /// Plain recurrence at width `T/m`, when integral.
    #[serde(rename = "plain_rec")]
    pub plain_rec: Option<Counts>,
    /// Residual recurrence at width `2T/(3m)`, when a positive integer.
    #[serde(rename = "L_res_rec")]
    pub l_res_rec: Option<usize>,
    #[serde(rename = "N_res_rec")]
    pub n_res_rec: Option<usize>,
    /// Residual recurrence at the plain width `T/m`, when integral.
    pub res_rec_same_width: Option<Counts>,
    pub flags: Vec<String>,
}

fn uniform(width: usize, m: usize) -> Vec<usize> {
    vec![width; m]
}

fn exact_div(num: usize, den: usize) -> Option<usize> {
    (den != 0 && num.is_multiple_of(den) && num / den > 0).then(|| num / den)
}

pub fn comparison_row(total: usize, m: usize) -> ComparisonRow {
    let t = total as f64;
    let mf = m as f64;
    let growth = 2f64.powf(0.5 * mf + 1.0);
    let l_res_paper = t * (growth - mf * (mf + 2.0) / 4.0);
    let n_res_paper = 2.0 * t / (3.0 * mf) * (growth - 2.0);

    let plain_width = exact_div(total, m);
    let res_width = exact_div(2 * total, 3 * m);
    let plain_rec = plain_width.map(|w| Counts::from(plain_recurrence(&uniform(w, m))));
    let res_rec = res_width.map(|w| Counts::from(residual_recurrence(&uniform(w, m))));
    let res_rec_same_width = plain_width.map(|w| Counts::from(residual_recurrence(&uniform(w, m))));

    let mut flags = Vec::new();
    if plain_width.is_none() || res_width.is_none() {
        flags.push("analytic_only".to_string());
    }
    if let Some(r) = res_rec {
        if r.width as f64 != l_res_paper {
            flags.push("L_res_mismatch".to_string());
        }
        if r.exponent as f64 != n_res_paper {
            flags.push("N_res_mismatch".to_string());
        }
    }
    ComparisonRow {
        m,
        total,
        l_p: t,
        n_p: (mf - 1.0) * t / 2.0,
        l_res_paper,
        n_res_paper,
        plain_rec,
        l_res_rec: res_rec.map(|r| r.width),
        n_res_rec: res_rec.map(|r| r.exponent),
        res_rec_same_width,
        flags,
    }
}

pub fn comparison_table(total: usize, depths: &[usize]) -> Vec<ComparisonRow> {
    depths.iter().map(|&m| comparison_row(total, m)).collect()
}

pub const CSV_HEADER: &str = "m,T,L_p,N_p,L_res_paper,N_res_paper,L_res_rec,N_res_rec,flags";

pub fn table_to_csv(rows: &[ComparisonRow]) -> String {
    let opt = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.m,
            r.total,
            r.l_p,
            r.n_p,
            r.l_res_paper,
            r.n_res_paper,
            opt(r.l_res_rec),
            opt(r.n_res_rec),
            r.flags.join(";")
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_widths(m: usize, max: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..m {
            out = out
                .into_iter()
                .flat_map(|w| (1..=max).map(move |l| [w.clone(), vec![l]].concat()))
                .collect();
        }
        out
    }

    #[test]
    fn plain_examples() {
        assert_eq!(counts_plain(&[2, 2, 2]), (6, 6));
        assert_eq!(counts_plain(&[3]), (3, 0));
        assert_eq!(counts_plain(&[1, 2, 3]), (6, 8));
        assert_eq!(counts_plain(&[3, 2]), (5, 2));
    }

    #[test]
    fn skip_examples() {
        assert_eq!(counts_skip(&[1, 1, 1]), (7, 4));
        assert_eq!(counts_skip(&[2, 1]), (4, 1));
        assert_eq!(counts_skip(&[1, 1, 1, 1]), (15, 11));
    }

    #[test]
    fn residual_examples() {
        let r = counts_residual(&[1, 1, 1, 1]);
        assert_eq!(r.recurrence, Counts { width: 6, exponent: 8 });
        assert_eq!(r.closed_form, Some(Counts { width: 6, exponent: 8 }));
        assert!(r.flags.is_empty());
        assert_eq!(r.parity, Parity::Even);

        let r = counts_residual(&[1, 1, 1]);
        assert_eq!(r.recurrence, Counts { width: 4, exponent: 4 });
        assert_eq!(r.closed_form, Some(Counts { width: 6, exponent: 4 }));
        assert!(r.width_mismatch());
        assert!(!r.exponent_mismatch());
        assert_eq!(r.flags.len(), 1);

        let r = counts_residual(&[1, 1]);
        assert_eq!((r.recurrence.width, r.recurrence.exponent), counts_plain(&[1, 1]));
    }

    #[test]
    fn mu_table() {
        assert_eq!(mu(1), 0);
        for k in 1..10 {
            assert_eq!(mu(k + 1), 2 * mu(k) + 3);
        }
    }

    #[test]
    fn closed_forms_match_recurrences() {
        for m in 1..=6 {
            for w in all_widths(m, 3) {
                assert_eq!(counts_plain(&w), plain_recurrence(&w), "{w:?}");
                assert_eq!(counts_skip(&w), skip_recurrence(&w), "{w:?}");
            }
        }
    }

    #[test]
    fn residual_closed_forms_against_recurrence() {
        for m in 2..=8 {
            for w in all_widths(m, 2) {
                let r = counts_residual(&w);
                let c = r.closed_form.unwrap();
                assert_eq!(c.exponent, r.recurrence.exponent, "{w:?}");
                if m % 2 == 0 {
                    assert_eq!(c.width, r.recurrence.width, "{w:?}");
                } else {
                    // odd depth: the width formula overcounts the top layer
                    assert!(r.width_mismatch(), "{w:?}");
                }
            }
        }
    }

    #[test]
    fn residual_outgrows_plain() {
        // uniform width, fixed T = m·l: N_res / N_p strictly increasing in m
        let ratios: Vec<(usize, usize)> = [2usize, 4, 6, 8]
            .iter()
            .map(|&m| {
                let w = uniform(1, m);
                (residual_recurrence(&w).1, plain_recurrence(&w).1)
            })
            .collect();
        for pair in ratios.windows(2) {
            let ((r0, p0), (r1, p1)) = (pair[0], pair[1]);
            assert!(r1 * p0 > r0 * p1, "{ratios:?}");
        }
    }

    #[test]
    fn comparison_examples() {
        let rows = comparison_table(12, &[2, 4]);
        assert_eq!((rows[0].l_p, rows[0].n_p), (12.0, 6.0));
        assert_eq!((rows[1].l_p, rows[1].n_p), (12.0, 18.0));
        assert_eq!(rows[1].l_res_rec, Some(12));
        assert_eq!(rows[1].n_res_rec, Some(16));
        assert_eq!(rows[1].n_res_paper, 12.0);
        assert!(rows[1].flags.contains(&"N_res_mismatch".to_string()));
        assert_eq!(rows[1].res_rec_same_width, Some(Counts { width: 18, exponent: 24 }));
        assert_eq!(rows[0].plain_rec, Some(Counts { width: 12, exponent: 6 }));

        let csv = table_to_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("2,12,12,6,"));
        assert!(lines[2].starts_with("4,12,12,18,"));
    }

    #[test]
    fn analytic_only_rows() {
        let r = comparison_row(10, 4);
        assert!(r.flags.contains(&"analytic_only".to_string()));
        assert_eq!(r.n_p, 15.0);
        assert_eq!(r.l_res_rec, None);
        assert_eq!(r.plain_rec, None);
    }
}
